#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "newslean/corpus.hpp"
#include "newslean/error.hpp"
#include "newslean/model.hpp"
#include "newslean/skipgram.hpp"
#include "newslean/text.hpp"

namespace newslean {

struct ExperimentPaths {
  std::filesystem::path corpus;
  std::filesystem::path debates;
  std::filesystem::path wiki_cache;
  std::filesystem::path overrides;
  std::filesystem::path wiki_fixtures;
  std::filesystem::path embeddings;
  std::filesystem::path output_dir = "out";
};

struct SplitSection {
  SplitKind kind = SplitKind::Media;
  double fraction = 0.07;
  std::vector<std::uint64_t> seeds = {11, 23, 37, 41};
};

struct WikiSection {
  std::string api_url = "https://en.wikipedia.org";
  std::size_t parallelism = 4;
  int min_interval_ms = 100;
};

struct ExperimentConfig {
  json raw;  // as loaded, after overrides; echoed into outputs
  ExperimentPaths paths;
  SplitSection split;
  SkipGramParams embeddings;
  TrainConfig model;
  std::vector<double> betas = {0.0, 0.1, 0.5, 0.7, 1.0};
  std::vector<TrainConfig> matrix_configs;  // empty: just `model`
  std::size_t matrix_workers = 1;
  WikiSection wiki;

  // Fingerprint of the canonical (sorted-key) JSON form.
  std::string hash() const { return hex64(fnv1a64(raw.dump())); }
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const json& j, const char* key,
                                     const std::filesystem::path& fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  std::filesystem::path p = j.at(key).get<std::string>();
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

}  // namespace detail

// Relative paths are resolved against base_dir (normally the config file's
// directory).
inline ExperimentConfig experiment_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "experiment config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  try {
    const json paths = j.value("paths", json::object());
    c.paths.corpus = detail::resolve(base_dir, paths, "corpus", {});
    c.paths.debates = detail::resolve(base_dir, paths, "debates", {});
    c.paths.wiki_cache = detail::resolve(base_dir, paths, "wiki_cache", {});
    c.paths.overrides = detail::resolve(base_dir, paths, "overrides", {});
    c.paths.wiki_fixtures = detail::resolve(base_dir, paths, "wiki_fixtures", {});
    c.paths.embeddings = detail::resolve(base_dir, paths, "embeddings", {});
    c.paths.output_dir = detail::resolve(base_dir, paths, "output_dir", base_dir / "out");

    const json split = j.value("split", json::object());
    if (split.contains("kind")) c.split.kind = parse_split_kind(split.at("kind").get<std::string>());
    c.split.fraction = split.value("fraction", c.split.fraction);
    c.split.seeds = split.value("seeds", c.split.seeds);
    if (c.split.seeds.empty()) throw Error(ErrorCode::InvalidArgument, "split.seeds must not be empty");

    const json emb = j.value("embeddings", json::object());
    c.embeddings.embed_dim = emb.value("dim", c.embeddings.embed_dim);
    c.embeddings.window = emb.value("window", c.embeddings.window);
    c.embeddings.negative = emb.value("negative", c.embeddings.negative);
    c.embeddings.epochs = emb.value("epochs", c.embeddings.epochs);
    c.embeddings.min_count = emb.value("min_count", c.embeddings.min_count);
    c.embeddings.seed = emb.value("seed", c.embeddings.seed);
    c.embeddings.learning_rate = emb.value("learning_rate", c.embeddings.learning_rate);
    c.embeddings.subsample = emb.value("subsample", c.embeddings.subsample);

    c.model = train_config_from_json(j.value("model", json::object()));
    c.model.validate();

    const json sweep = j.value("sweep", json::object());
    c.betas = sweep.value("betas", c.betas);

    const json matrix = j.value("matrix", json::object());
    c.matrix_workers = matrix.value("workers", c.matrix_workers);
    for (const auto& cell : matrix.value("configs", json::array())) {
      TrainConfig t = train_config_from_json(cell, c.model);
      t.validate();
      c.matrix_configs.push_back(std::move(t));
    }

    const json wiki = j.value("wiki", json::object());
    c.wiki.api_url = wiki.value("api_url", c.wiki.api_url);
    c.wiki.parallelism = wiki.value("parallelism", c.wiki.parallelism);
    c.wiki.min_interval_ms = wiki.value("min_interval_ms", c.wiki.min_interval_ms);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("experiment config: ") + e.what());
  }
  return c;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, path.string() + " is not valid JSON");
  return j;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_file(path), path.parent_path());
}

}  // namespace newslean
