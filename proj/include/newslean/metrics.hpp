#pragma once

#include <array>
#include <cstdlib>
#include <span>

#include "newslean/corpus.hpp"
#include "newslean/error.hpp"

namespace newslean {

// rows: true label, columns: predicted label.
using Confusion = std::array<std::array<long, kNumClasses>, kNumClasses>;

struct MetricsReport {
  double accuracy = 0;
  double precision = 0;  // macro
  double recall = 0;     // macro
  double macro_f1 = 0;
  double mae = 0;        // over ordinal codes, in [0, 2]
  Confusion confusion{};
  long n_test = 0;
};

// A class that is never predicted (or never present) contributes 0 to the
// macro averages, so reports never carry NaN.
inline MetricsReport metrics_from_confusion(const Confusion& c) {
  MetricsReport r;
  r.confusion = c;
  long correct = 0;
  long abs_err = 0;
  std::array<long, kNumClasses> row{};
  std::array<long, kNumClasses> col{};
  for (int t = 0; t < kNumClasses; ++t) {
    for (int p = 0; p < kNumClasses; ++p) {
      if (c[t][p] < 0) throw Error(ErrorCode::InvalidArgument, "negative confusion count");
      r.n_test += c[t][p];
      row[t] += c[t][p];
      col[p] += c[t][p];
      abs_err += c[t][p] * std::abs(t - p);
    }
    correct += c[t][t];
  }
  if (r.n_test == 0) throw Error(ErrorCode::EmptyTestSet, "confusion matrix is empty");
  const auto n = static_cast<double>(r.n_test);
  r.accuracy = static_cast<double>(correct) / n;
  r.mae = static_cast<double>(abs_err) / n;
  for (int k = 0; k < kNumClasses; ++k) {
    const double tp = static_cast<double>(c[k][k]);
    const double p = col[k] > 0 ? tp / static_cast<double>(col[k]) : 0.0;
    const double rc = row[k] > 0 ? tp / static_cast<double>(row[k]) : 0.0;
    const double f1 = p + rc > 0 ? 2.0 * p * rc / (p + rc) : 0.0;
    r.precision += p / kNumClasses;
    r.recall += rc / kNumClasses;
    r.macro_f1 += f1 / kNumClasses;
  }
  return r;
}

inline MetricsReport compute_metrics(std::span<const Leaning> truth, std::span<const Leaning> predicted) {
  require_dims(predicted.size(), truth.size(), "predictions");
  if (truth.empty()) throw Error(ErrorCode::EmptyTestSet, "no test examples");
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) ++c[code(truth[i])][code(predicted[i])];
  return metrics_from_confusion(c);
}

inline json to_json(const MetricsReport& r) {
  return json{{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall},
              {"macro_f1", r.macro_f1}, {"mae", r.mae},             {"confusion", r.confusion},
              {"n_test", r.n_test}};
}

}  // namespace newslean
