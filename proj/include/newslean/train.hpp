#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <optional>
#include <span>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "newslean/corpus.hpp"
#include "newslean/metrics.hpp"
#include "newslean/model.hpp"
#include "newslean/topics.hpp"
#include "newslean/wiki.hpp"

namespace newslean {

// External knowledge shared read-only by every training job.
struct Resources {
  const WikiCache* wiki = nullptr;
  const WordEmbeddingModel* embeddings = nullptr;
  const std::unordered_set<std::string>* stopwords = &english_stopwords();
};

inline std::string article_text(const Article& a) { return a.title + "\n" + a.body; }

inline void check_resources(const TrainConfig& config, const Corpus& corpus, const Resources& res) {
  if (config.use_wiki) {
    if (res.wiki == nullptr) {
      throw Error(ErrorCode::ResourceMissing, "use_wiki is set but no wiki cache was given; run ingest-wiki");
    }
    for (const auto& d : corpus.domains()) {
      if (!res.wiki->contains(d)) {
        throw Error(ErrorCode::ResourceMissing, "wiki cache " + res.wiki->directory().string() +
                                                    " has no entry for '" + d + "'; run ingest-wiki");
      }
    }
  }
  if (config.uses_topics() && res.embeddings == nullptr) {
    throw Error(ErrorCode::ResourceMissing, "topic encoder enabled but no embedding model; run train-embeddings");
  }
}

inline ArticleInputs prepare_inputs(const Article& a, const TrainConfig& config, const Resources& res) {
  ArticleInputs in;
  in.text = article_text(a);
  if (config.use_wiki) {
    std::string wiki;
    try {
      wiki = wiki_text_for_article(a, *res.wiki);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CacheMiss) throw Error(ErrorCode::ResourceMissing, e.what());
      throw;
    }
    if (!wiki.empty()) in.wiki_text = std::move(wiki);
  }
  if (config.uses_topics()) {
    in.topic_mean = topic_mean_vector(extract_topics(a, *res.embeddings, *res.stopwords), *res.embeddings);
  }
  return in;
}

struct LossRecord {
  int epoch = 0;
  long step = 0;
  double loss = 0;        // mean cross entropy over the batch
  double recon_loss = 0;  // mean reconstruction error over the batch
};

inline json to_json(const LossRecord& r) {
  return json{{"epoch", r.epoch}, {"step", r.step}, {"loss", r.loss}, {"recon_loss", r.recon_loss}};
}

struct TrainResult {
  FusionModel model;
  std::vector<LossRecord> history;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

inline TrainResult train(const TrainConfig& config, const Corpus& corpus, const SplitSpec& split,
                         const Resources& res) {
  config.validate();
  if (const auto report = validate_split(split, corpus); !report.ok) {
    throw Error(ErrorCode::InvalidArgument, "split failed validation: " + report.violations.front());
  }
  if (split.train_ids.empty()) throw Error(ErrorCode::InvalidArgument, "split has no training articles");
  check_resources(config, corpus, res);

  const int embed_dim = config.uses_topics() ? static_cast<int>(res.embeddings->dim()) : 0;
  TrainResult out{FusionModel(config, embed_dim), {}, {}};
  FusionModel& model = out.model;

  std::vector<const Article*> articles;
  std::vector<ArticleInputs> inputs;
  for (const auto& id : split.train_ids) {
    articles.push_back(&corpus.at(id));
    inputs.push_back(prepare_inputs(*articles.back(), config, res));
  }

  Adam opt(AdamOptions{config.learning_rate});
  std::vector<std::size_t> order(articles.size());
  long step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffler(mix64(config.seed ^ mix64(static_cast<std::uint64_t>(epoch))));
    shuffler.shuffle(std::span(order));

    double epoch_sum = 0.0;
    long batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      double batch_ce = 0.0;
      double batch_recon = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const ForwardTrace trace = model.forward(inputs[i]);
        const double ce = loss(trace.head.scores, articles[i]->label);
        if (!std::isfinite(ce) || !std::isfinite(trace.recon_loss)) {
          throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch) + " step " +
                                                    std::to_string(step) + " article " + articles[i]->id +
                                                    ": loss=" + std::to_string(ce) +
                                                    " recon=" + std::to_string(trace.recon_loss));
        }
        batch_ce += ce * scale;
        batch_recon += trace.recon_loss * scale;
        model.backward(trace, articles[i]->label, scale);
      }
      model.apply(opt);
      ++step;
      out.history.push_back(LossRecord{epoch, step, batch_ce, batch_recon});
      epoch_sum += batch_ce;
      ++batches;
    }
    out.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
  }
  return out;
}

struct Predictions {
  std::vector<Leaning> truth;
  std::vector<Leaning> predicted;
};

// Pure: no shuffling, no parameter updates. Wikipedia vectors are computed
// once per publisher.
inline Predictions predict_articles(const FusionModel& model, const Corpus& corpus,
                                    const std::vector<std::string>& ids, const Resources& res) {
  check_resources(model.config(), corpus, res);
  Predictions p;
  std::unordered_map<std::string, Vec> omega_by_domain;
  for (const auto& id : ids) {
    const Article& a = corpus.at(id);
    const ArticleInputs in = prepare_inputs(a, model.config(), res);
    const Vec* omega = nullptr;
    if (model.config().use_wiki) {
      auto it = omega_by_domain.find(a.domain);
      if (it == omega_by_domain.end()) it = omega_by_domain.emplace(a.domain, model.wiki_vector(in.wiki_text)).first;
      omega = &it->second;
    }
    p.truth.push_back(a.label);
    p.predicted.push_back(predict(model.scores(in, omega)));
  }
  return p;
}

inline MetricsReport evaluate(const FusionModel& model, const Corpus& corpus,
                              const std::vector<std::string>& test_ids, const Resources& res) {
  if (test_ids.empty()) throw Error(ErrorCode::EmptyTestSet, "no test ids");
  const auto p = predict_articles(model, corpus, test_ids, res);
  return compute_metrics(p.truth, p.predicted);
}

// ---------------------------------------------------------------------------
// Result tables

struct ResultRow {
  std::string experiment_id;
  std::string backbone;
  std::string topic_encoder;
  bool use_wiki = false;
  double beta = 0;
  std::string split_id;
  MetricsReport metrics;
  double wall_seconds = 0;
};

inline ResultRow make_row(const TrainConfig& c, const std::string& split_id, const MetricsReport& m,
                          double wall_seconds) {
  return ResultRow{c.experiment_id, c.backbone.name, std::string(to_string(c.topic_encoder)),
                   c.use_wiki,      c.beta,          split_id,
                   m,               wall_seconds};
}

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline constexpr std::string_view kResultsHeader =
    "experiment_id,backbone,topic_encoder,use_wiki,beta,split_id,accuracy,precision,recall,macro_f1,mae,"
    "n_test,wall_seconds";

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv_line(const ResultRow& r) {
  std::ostringstream os;
  char wall[32];
  std::snprintf(wall, sizeof(wall), "%.3f", r.wall_seconds);
  os << csv_field(r.experiment_id) << ',' << csv_field(r.backbone) << ',' << r.topic_encoder << ','
     << (r.use_wiki ? "true" : "false") << ',' << format_number(r.beta) << ',' << csv_field(r.split_id) << ','
     << format_number(r.metrics.accuracy) << ',' << format_number(r.metrics.precision) << ','
     << format_number(r.metrics.recall) << ',' << format_number(r.metrics.macro_f1) << ','
     << format_number(r.metrics.mae) << ',' << r.metrics.n_test << ',' << wall;
  return os.str();
}

// A leading "# config_hash=..." comment line records provenance when a hash
// is given.
inline void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path,
                              const std::string& config_hash = "") {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  out << kResultsHeader << '\n';
  for (const auto& r : rows) out << to_csv_line(r) << '\n';
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct NamedSplit {
  std::string id;
  SplitSpec split;
};

// Train then evaluate one configuration on one split.
inline ResultRow run_cell(const TrainConfig& config, const Corpus& corpus, const NamedSplit& split,
                          const Resources& res, TrainResult* keep = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult trained = train(config, corpus, split.split, res);
  const MetricsReport m = evaluate(trained.model, corpus, split.split.test_ids, res);
  ResultRow row = make_row(config, split.id, m, seconds_since(t0));
  if (keep != nullptr) *keep = std::move(trained);
  return row;
}

// Duplicates are dropped (first occurrence wins) and reported in warnings.
inline std::vector<double> dedupe_betas(const std::vector<double>& betas, std::vector<std::string>* warnings) {
  std::vector<double> out;
  for (double b : betas) {
    require_beta(b);
    if (std::find(out.begin(), out.end(), b) != out.end()) {
      if (warnings != nullptr) warnings->push_back("duplicate beta " + format_number(b) + " ignored");
      continue;
    }
    out.push_back(b);
  }
  return out;
}

// One independent train + evaluate per beta, all with the same seed.
inline std::vector<ResultRow> sweep_beta(const TrainConfig& config, const std::vector<double>& betas,
                                         const Corpus& corpus, const NamedSplit& split, const Resources& res,
                                         std::vector<std::string>* warnings = nullptr) {
  std::vector<ResultRow> rows;
  for (double beta : dedupe_betas(betas, warnings)) {
    TrainConfig c = config;
    c.beta = beta;
    rows.push_back(run_cell(c, corpus, split, res));
  }
  return rows;
}

struct CellError {
  std::string experiment_id;
  std::string split_id;
  std::string message;
};

struct RankingRow {
  std::string experiment_id;
  double mean_accuracy = 0;
  double mean_macro_f1 = 0;
  int n_splits = 0;
  int rank = 0;
};

struct MatrixResult {
  std::vector<ResultRow> rows;  // (config, split) order
  std::vector<CellError> errors;
  std::vector<RankingRow> ranking;
};

inline std::vector<RankingRow> rank_configs(const std::vector<ResultRow>& rows) {
  std::map<std::string, RankingRow> acc;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    auto [it, fresh] = acc.try_emplace(r.experiment_id);
    if (fresh) {
      order.push_back(r.experiment_id);
      it->second.experiment_id = r.experiment_id;
    }
    it->second.mean_accuracy += r.metrics.accuracy;
    it->second.mean_macro_f1 += r.metrics.macro_f1;
    ++it->second.n_splits;
  }
  std::vector<RankingRow> out;
  for (const auto& id : order) {
    RankingRow row = acc.at(id);
    row.mean_accuracy /= row.n_splits;
    row.mean_macro_f1 /= row.n_splits;
    out.push_back(row);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankingRow& a, const RankingRow& b) { return a.mean_accuracy > b.mean_accuracy; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

// Every (config, split) cell runs in isolation; a failing cell is recorded
// and the rest continue. Up to `workers` cells run at once.
inline MatrixResult run_matrix(const std::vector<TrainConfig>& configs, const std::vector<NamedSplit>& splits,
                               const Corpus& corpus, const Resources& res, std::size_t workers = 1) {
  const std::size_t n = configs.size() * splits.size();
  std::vector<std::optional<ResultRow>> rows(n);
  std::vector<std::optional<CellError>> errors(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t cell = next++; cell < n; cell = next++) {
      const TrainConfig& c = configs[cell / splits.size()];
      const NamedSplit& s = splits[cell % splits.size()];
      try {
        rows[cell] = run_cell(c, corpus, s, res);
      } catch (const std::exception& e) {
        errors[cell] = CellError{c.experiment_id, s.id, e.what()};
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t extra = std::min(workers, n) > 0 ? std::min(workers, n) - 1 : 0;
    for (std::size_t w = 0; w < extra; ++w) pool.emplace_back(worker);
    worker();
  }

  MatrixResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i]) out.rows.push_back(std::move(*rows[i]));
    if (errors[i]) out.errors.push_back(std::move(*errors[i]));
  }
  out.ranking = rank_configs(out.rows);
  return out;
}

inline void write_ranking_csv(const std::vector<RankingRow>& ranking, const std::filesystem::path& path,
                              const std::string& config_hash = "") {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  out << "rank,experiment_id,mean_accuracy,mean_macro_f1,n_splits\n";
  for (const auto& r : ranking) {
    out << r.rank << ',' << csv_field(r.experiment_id) << ',' << format_number(r.mean_accuracy) << ','
        << format_number(r.mean_macro_f1) << ',' << r.n_splits << '\n';
  }
}

inline void write_errors_csv(const std::vector<CellError>& errors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "experiment_id,split_id,error\n";
  for (const auto& e : errors) {
    out << csv_field(e.experiment_id) << ',' << csv_field(e.split_id) << ',' << csv_field(e.message) << '\n';
  }
}

inline void write_loss_history(const std::vector<LossRecord>& history, const std::filesystem::path& path,
                               const std::string& config_hash = "") {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& r : history) {
    json j = to_json(r);
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    out << j.dump() << '\n';
  }
}

}  // namespace newslean
