#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "newslean/error.hpp"
#include "newslean/linalg.hpp"
#include "newslean/random.hpp"
#include "newslean/text.hpp"

namespace newslean {

struct SkipGramParams {
  int embed_dim = 300;
  int window = 5;
  int negative = 5;
  int epochs = 5;
  int min_count = 2;
  std::uint64_t seed = 1;
  double learning_rate = 0.025;
  double subsample = 1e-3;  // 0 disables frequent-word downsampling
};

// Skip-gram vectors. Immutable once trained or loaded.
class WordEmbeddingModel {
 public:
  WordEmbeddingModel() = default;

  WordEmbeddingModel(std::vector<std::string> vocabulary, RowMat vectors, SkipGramParams params)
      : vocab_(std::move(vocabulary)), vectors_(std::move(vectors)), params_(params) {
    require_dims(static_cast<std::size_t>(vectors_.rows()), vocab_.size(), "embedding rows");
    params_.embed_dim = static_cast<int>(vectors_.cols());
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      if (!index_.emplace(vocab_[i], i).second) {
        throw Error(ErrorCode::DuplicateId, "vocabulary token '" + vocab_[i] + "'");
      }
    }
  }

  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const SkipGramParams& params() const { return params_; }
  const RowMat& matrix() const { return vectors_; }

  bool contains(std::string_view token) const {
    return index_.contains(std::string(token));
  }

  std::optional<std::size_t> index_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Vec vector(std::string_view token) const {
    auto idx = index_of(token);
    if (!idx) throw Error(ErrorCode::InvalidArgument, "token '" + std::string(token) + "' not in vocabulary");
    return vectors_.row(static_cast<Eigen::Index>(*idx)).transpose();
  }

 private:
  std::vector<std::string> vocab_;
  RowMat vectors_;
  SkipGramParams params_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline double sigmoid(double x) {
  if (x > 30) return 1.0;
  if (x < -30) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace detail

// Skip-gram with negative sampling over pre-tokenized documents.
// Single-threaded and fully determined by params.seed.
inline WordEmbeddingModel train_skipgram(const std::vector<std::vector<std::string>>& documents,
                                         const SkipGramParams& params) {
  if (params.embed_dim <= 0 || params.window <= 0 || params.negative < 0 || params.epochs <= 0 ||
      params.min_count < 1) {
    throw Error(ErrorCode::InvalidArgument, "invalid skip-gram parameters");
  }
  std::map<std::string, std::uint64_t> counts;
  for (const auto& doc : documents) {
    for (const auto& tok : doc) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= static_cast<std::uint64_t>(params.min_count)) kept.emplace_back(tok, n);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::EmptyCorpus, "no token reaches min_count=" + std::to_string(params.min_count));
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const auto vocab_size = kept.size();
  const auto dim = static_cast<Eigen::Index>(params.embed_dim);
  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::size_t> index;
  std::uint64_t total_count = 0;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    vocab.push_back(kept[i].first);
    index.emplace(kept[i].first, i);
    total_count += kept[i].second;
  }

  // Negative-sampling distribution: unigram^0.75, sampled by binary search.
  std::vector<double> cumulative(vocab_size);
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    acc += std::pow(static_cast<double>(kept[i].second), 0.75);
    cumulative[i] = acc;
  }

  Rng rng(params.seed);
  RowMat in(static_cast<Eigen::Index>(vocab_size), dim);
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      in(r, c) = (rng.uniform() - 0.5) / static_cast<double>(dim);
    }
  }
  RowMat out = RowMat::Zero(static_cast<Eigen::Index>(vocab_size), dim);

  std::vector<std::vector<std::size_t>> encoded;
  encoded.reserve(documents.size());
  for (const auto& doc : documents) {
    std::vector<std::size_t> ids;
    for (const auto& tok : doc) {
      if (auto it = index.find(tok); it != index.end()) ids.push_back(it->second);
    }
    encoded.push_back(std::move(ids));
  }

  const double words_total = static_cast<double>(total_count) * params.epochs;
  double words_seen = 0.0;
  const double threshold = params.subsample * static_cast<double>(total_count);
  Eigen::RowVectorXd grad_in(dim);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    for (const auto& doc : encoded) {
      std::vector<std::size_t> sentence;
      sentence.reserve(doc.size());
      for (std::size_t id : doc) {
        words_seen += 1.0;
        if (threshold > 0.0) {
          const double f = static_cast<double>(kept[id].second);
          const double keep = (std::sqrt(f / threshold) + 1.0) * threshold / f;
          if (keep < rng.uniform()) continue;
        }
        sentence.push_back(id);
      }
      const double alpha =
          std::max(params.learning_rate * 1e-4, params.learning_rate * (1.0 - words_seen / (words_total + 1.0)));

      for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
        const auto center = static_cast<Eigen::Index>(sentence[pos]);
        const auto reach = static_cast<std::size_t>(rng.index(static_cast<std::uint64_t>(params.window))) + 1;
        const std::size_t lo = pos >= reach ? pos - reach : 0;
        const std::size_t hi = std::min(sentence.size() - 1, pos + reach);
        for (std::size_t ctx = lo; ctx <= hi; ++ctx) {
          if (ctx == pos) continue;
          grad_in.setZero();
          const auto positive = static_cast<Eigen::Index>(sentence[ctx]);
          for (int d = 0; d <= params.negative; ++d) {
            Eigen::Index target;
            double label;
            if (d == 0) {
              target = positive;
              label = 1.0;
            } else {
              const double u = rng.uniform() * cumulative.back();
              target = static_cast<Eigen::Index>(
                  std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
              target = std::min<Eigen::Index>(target, static_cast<Eigen::Index>(vocab_size) - 1);
              if (target == positive) continue;
              label = 0.0;
            }
            const double score = detail::sigmoid(in.row(center).dot(out.row(target)));
            const double g = (label - score) * alpha;
            grad_in.noalias() += g * out.row(target);
            out.row(target).noalias() += g * in.row(center);
          }
          in.row(center) += grad_in;
        }
      }
    }
  }
  return WordEmbeddingModel(std::move(vocab), std::move(in), params);
}

// ---------------------------------------------------------------------------
// Text persistence: one header line, then "token v1 ... v_dim" per line.
// Values use shortest round-trip formatting, so save/load is lossless.

inline void save_embeddings(const WordEmbeddingModel& model, const std::filesystem::path& path,
                            const std::string& config_hash = "") {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const auto& p = model.params();
  out << "newslean-embeddings dim=" << model.dim() << " vocab=" << model.size()
      << " window=" << p.window << " negative=" << p.negative << " epochs=" << p.epochs
      << " min_count=" << p.min_count << " seed=" << p.seed;
  char buf[64];
  auto put = [&](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, end - buf);
  };
  out << " learning_rate=";
  put(p.learning_rate);
  out << " subsample=";
  put(p.subsample);
  if (!config_hash.empty()) out << " config_hash=" << config_hash;
  out << '\n';
  const auto& m = model.matrix();
  for (std::size_t i = 0; i < model.size(); ++i) {
    out << model.vocabulary()[i];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << ' ';
      put(m(static_cast<Eigen::Index>(i), c));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

inline WordEmbeddingModel load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "newslean-embeddings") {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": not an embeddings file");
  }
  std::map<std::string, std::string> kv;
  for (std::string field; hs >> field;) {
    const auto eq = field.find('=');
    if (eq != std::string::npos) kv[field.substr(0, eq)] = field.substr(eq + 1);
  }
  auto num = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::MalformedRecord, path.string() + ": header lacks " + key);
    return it->second;
  };
  SkipGramParams p;
  p.embed_dim = std::stoi(num("dim"));
  const auto vocab_size = std::stoul(num("vocab"));
  p.window = std::stoi(num("window"));
  p.negative = std::stoi(num("negative"));
  p.epochs = std::stoi(num("epochs"));
  p.min_count = std::stoi(num("min_count"));
  p.seed = std::stoull(num("seed"));
  p.learning_rate = std::stod(num("learning_rate"));
  p.subsample = std::stod(num("subsample"));

  std::vector<std::string> vocab;
  RowMat vectors(static_cast<Eigen::Index>(vocab_size), p.embed_dim);
  std::string line;
  for (std::size_t row = 0; row < vocab_size; ++row) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ": truncated at row " + std::to_string(row));
    }
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    const char* sp = std::find(cur, end, ' ');
    vocab.emplace_back(cur, sp);
    cur = sp;
    for (int c = 0; c < p.embed_dim; ++c) {
      while (cur < end && *cur == ' ') ++cur;
      double v = 0.0;
      auto [next, ec] = std::from_chars(cur, end, v);
      if (ec != std::errc()) {
        throw Error(ErrorCode::MalformedRecord,
                    path.string() + ": bad value in row " + std::to_string(row));
      }
      vectors(static_cast<Eigen::Index>(row), c) = v;
      cur = next;
    }
  }
  return WordEmbeddingModel(std::move(vocab), std::move(vectors), p);
}

}  // namespace newslean
