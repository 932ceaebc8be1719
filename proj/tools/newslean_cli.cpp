// newslean: command-line driver for the leaning-classification pipeline.
//
//   newslean ingest-wiki      --corpus <path> --cache-dir <dir> [--offline-fixtures <dir>] [--overrides <path>]
//   newslean train-embeddings --debates <path> --out <model-path> [--dim 300] [--seed n]
//   newslean --config exp.json split | train | evaluate | sweep | matrix
//
// Global flags: --config <path>, --out <dir>, --resume, --seed <n>.
// Exit codes: 0 ok, 1 input error, 2 validation failure, 3 missing resource.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "newslean/newslean.hpp"
#include "newslean/wiki_http.hpp"

namespace fs = std::filesystem;
using namespace newslean;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitValidation = 2;
constexpr int kExitMissing = 3;

struct ValidationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalFlags {
  std::string config_path;
  std::string out_dir;
  bool resume = false;
  std::optional<std::uint64_t> seed;
};

struct Context {
  GlobalFlags flags;
  std::optional<ExperimentConfig> config;
  fs::path out;
  std::string hash;

  const ExperimentConfig& cfg(const char* command) const {
    if (!config) throw Error(ErrorCode::InvalidArgument, std::string(command) + " needs --config <path>");
    return *config;
  }
};

void log(const std::string& msg) { std::cerr << "[newslean] " << msg << '\n'; }

Context make_context(const GlobalFlags& flags) {
  Context ctx;
  ctx.flags = flags;
  if (!flags.config_path.empty()) {
    const fs::path path = flags.config_path;
    json raw = read_json_file(path);
    if (!raw.is_object()) throw Error(ErrorCode::MalformedRecord, path.string() + ": expected a JSON object");
    if (flags.seed) {
      raw["model"]["seed"] = *flags.seed;
      raw["embeddings"]["seed"] = *flags.seed;
    }
    ctx.config = experiment_config_from_json(raw, path.parent_path());
    ctx.hash = ctx.config->hash();
    ctx.out = ctx.config->paths.output_dir;
  }
  if (!flags.out_dir.empty()) ctx.out = flags.out_dir;
  if (ctx.out.empty()) ctx.out = "out";
  return ctx;
}

fs::path require_path(const fs::path& p, const char* what, const char* flag) {
  if (p.empty()) throw Error(ErrorCode::InvalidArgument, std::string("no ") + what + " given (" + flag + ")");
  return p;
}

// ---------------------------------------------------------------------------
// --resume bookkeeping: a stage is complete when its marker holds the
// current config hash.

fs::path marker_path(const Context& ctx, const std::string& stage) { return ctx.out / ".stages" / (stage + ".done"); }

bool stage_done(const Context& ctx, const std::string& stage) {
  if (!ctx.flags.resume) return false;
  std::ifstream in(marker_path(ctx, stage));
  std::string h;
  return in && std::getline(in, h) && h == ctx.hash;
}

void mark_done(const Context& ctx, const std::string& stage) {
  fs::create_directories(marker_path(ctx, stage).parent_path());
  std::ofstream(marker_path(ctx, stage), std::ios::trunc) << ctx.hash << '\n';
}

bool skip_stage(const Context& ctx, const std::string& stage) {
  if (!stage_done(ctx, stage)) return false;
  log(stage + ": up to date for config " + ctx.hash + ", skipping");
  return true;
}

// ---------------------------------------------------------------------------
// Shared loaders

std::string split_id(const ExperimentConfig& c, std::uint64_t seed) {
  return std::string(to_string(c.split.kind)) + "-" + std::to_string(seed);
}

fs::path split_path(const Context& ctx, const std::string& id) { return ctx.out / "splits" / (id + ".json"); }

std::vector<NamedSplit> load_splits(const Context& ctx, const Corpus& corpus) {
  const auto& c = ctx.cfg("loading splits");
  std::vector<NamedSplit> out;
  for (auto seed : c.split.seeds) {
    const std::string id = split_id(c, seed);
    const fs::path p = split_path(ctx, id);
    if (!fs::exists(p)) throw Error(ErrorCode::ResourceMissing, "split " + p.string() + " not found; run split");
    SplitSpec s = load_split(p);
    const auto report = validate_split(s, corpus);
    if (!report.ok) throw ValidationFailed(p.string() + ": " + report.violations.front());
    out.push_back(NamedSplit{id, std::move(s)});
  }
  return out;
}

// Loads whatever the configs need and is present; absent pieces stay null
// so training reports them with a remediation hint.
struct LoadedResources {
  std::unique_ptr<WikiCache> wiki;
  std::optional<WordEmbeddingModel> embeddings;

  Resources view() const {
    Resources r;
    r.wiki = wiki.get();
    r.embeddings = embeddings ? &*embeddings : nullptr;
    return r;
  }
};

LoadedResources load_resources(const ExperimentConfig& c, const std::vector<TrainConfig>& configs) {
  bool need_wiki = false;
  bool need_topics = false;
  for (const auto& t : configs) {
    need_wiki |= t.use_wiki;
    need_topics |= t.uses_topics();
  }
  LoadedResources r;
  if (need_wiki && !c.paths.wiki_cache.empty() && fs::is_directory(c.paths.wiki_cache)) {
    r.wiki = std::make_unique<WikiCache>(c.paths.wiki_cache);
  }
  if (need_topics && !c.paths.embeddings.empty() && fs::exists(c.paths.embeddings)) {
    r.embeddings = load_embeddings(c.paths.embeddings);
  }
  return r;
}

std::string cell_name(const TrainConfig& t, const std::string& split) { return t.experiment_id + "__" + split; }

fs::path checkpoint_path(const Context& ctx, const TrainConfig& t, const std::string& split) {
  return ctx.out / "checkpoints" / (cell_name(t, split) + ".ckpt");
}

std::string format3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Commands

struct IngestFlags {
  std::string corpus, cache_dir, fixtures, overrides;
};

int cmd_ingest_wiki(const Context& ctx, const IngestFlags& f) {
  const ExperimentPaths paths = ctx.config ? ctx.config->paths : ExperimentPaths{};
  const WikiSection wiki = ctx.config ? ctx.config->wiki : WikiSection{};
  const fs::path corpus_path = require_path(f.corpus.empty() ? paths.corpus : fs::path(f.corpus), "corpus", "--corpus");
  const fs::path cache_dir =
      require_path(f.cache_dir.empty() ? paths.wiki_cache : fs::path(f.cache_dir), "cache directory", "--cache-dir");
  const fs::path fixtures = f.fixtures.empty() ? paths.wiki_fixtures : fs::path(f.fixtures);
  const fs::path overrides_path = f.overrides.empty() ? paths.overrides : fs::path(f.overrides);

  const Corpus corpus = load_corpus(corpus_path);
  const auto overrides = overrides_path.empty() ? std::map<std::string, std::string>{} : load_overrides(overrides_path);
  std::unique_ptr<WikiSource> source;
  if (!fixtures.empty()) {
    source = std::make_unique<OfflineFixtureSource>(fixtures);
    log("ingest-wiki: offline snapshot " + fixtures.string());
  } else {
    source = std::make_unique<MediaWikiSource>(wiki.api_url);
    log("ingest-wiki: live API at " + wiki.api_url);
  }
  WikiCache cache(cache_dir);
  IngestOptions opt;
  opt.parallelism = wiki.parallelism;
  opt.min_interval = std::chrono::milliseconds(wiki.min_interval_ms);
  const IngestReport r = ingest_wiki(corpus.domains(), overrides, source.get(), cache, opt);

  std::cout << "domains " << r.domains << "  resolved " << r.resolved << "  not_found " << r.not_found
            << "  source_calls " << r.source_calls << "  failed " << r.failed.size() << '\n';
  if (!r.failed.empty()) {
    for (const auto& d : r.failed) std::cerr << "  unreachable: " << d << '\n';
    std::cerr << "newslean: " << r.failed.size() << " domains could not be fetched; re-run ingest-wiki to retry\n";
    return kExitMissing;
  }
  return kExitOk;
}

struct EmbeddingFlags {
  std::string debates, model_out;
  std::optional<int> dim;
};

std::string embeddings_header_hash(const fs::path& p) {
  std::ifstream in(p);
  std::string header;
  if (!std::getline(in, header)) return "";
  const auto at = header.find(" config_hash=");
  return at == std::string::npos ? "" : header.substr(at + 13);
}

int cmd_train_embeddings(const Context& ctx, const EmbeddingFlags& f) {
  const ExperimentPaths paths = ctx.config ? ctx.config->paths : ExperimentPaths{};
  SkipGramParams params = ctx.config ? ctx.config->embeddings : SkipGramParams{};
  if (f.dim) params.embed_dim = *f.dim;
  if (ctx.flags.seed) params.seed = *ctx.flags.seed;
  const fs::path debates = require_path(f.debates.empty() ? paths.debates : fs::path(f.debates), "debates", "--debates");
  const fs::path model_out =
      require_path(f.model_out.empty() ? paths.embeddings : fs::path(f.model_out), "model path", "--out");

  const std::string hash =
      ctx.config ? ctx.hash
                 : hex64(fnv1a64(json{{"debates", debates.string()},
                                      {"dim", params.embed_dim},
                                      {"window", params.window},
                                      {"negative", params.negative},
                                      {"epochs", params.epochs},
                                      {"min_count", params.min_count},
                                      {"seed", params.seed}}
                                     .dump()));
  if (ctx.flags.resume && fs::exists(model_out) && embeddings_header_hash(model_out) == hash) {
    log("train-embeddings: " + model_out.string() + " up to date, skipping");
    return kExitOk;
  }
  const DebateCorpus d = load_debates(debates);
  log("train-embeddings: " + std::to_string(d.speeches.size()) + " speeches (" + std::to_string(d.democrat) +
      " democrat, " + std::to_string(d.republican) + " republican)");
  const auto model = train_topic_embeddings(d.speeches, params);
  if (model_out.has_parent_path()) fs::create_directories(model_out.parent_path());
  save_embeddings(model, model_out, hash);
  std::cout << "vocabulary " << model.size() << "  dim " << model.dim() << "  -> " << model_out.string() << '\n';
  return kExitOk;
}

int cmd_split(const Context& ctx) {
  const auto& c = ctx.cfg("split");
  if (skip_stage(ctx, "split")) return kExitOk;
  const Corpus corpus = load_corpus(require_path(c.paths.corpus, "corpus", "paths.corpus"));
  fs::create_directories(ctx.out / "splits");
  bool ok = true;
  for (auto seed : c.split.seeds) {
    const SplitSpec s = c.split.kind == SplitKind::Media ? make_media_split(corpus, c.split.fraction, seed)
                                                         : make_random_split(corpus, c.split.fraction, seed);
    const auto report = validate_split(s, corpus);
    const std::string id = split_id(c, seed);
    json j = to_json(s);
    j["config_hash"] = ctx.hash;
    std::ofstream(split_path(ctx, id), std::ios::trunc) << j.dump(2) << '\n';
    std::cout << id << ": train " << s.train_ids.size() << "  test " << s.test_ids.size() << "  test_domains "
              << s.test_domains.size() << "  " << (report.ok ? "ok" : "INVALID") << '\n';
    for (const auto& v : report.violations) std::cerr << "  " << v << '\n';
    ok &= report.ok;
  }
  if (!ok) return kExitValidation;
  mark_done(ctx, "split");
  return kExitOk;
}

int cmd_train(const Context& ctx) {
  const auto& c = ctx.cfg("train");
  const Corpus corpus = load_corpus(require_path(c.paths.corpus, "corpus", "paths.corpus"));
  const auto splits = load_splits(ctx, corpus);
  const LoadedResources res = load_resources(c, {c.model});
  fs::create_directories(ctx.out / "checkpoints");
  fs::create_directories(ctx.out / "loss_history");
  for (const auto& s : splits) {
    const fs::path ckpt = checkpoint_path(ctx, c.model, s.id);
    if (ctx.flags.resume && fs::exists(ckpt) &&
        read_checkpoint_header(ckpt).value("config_hash", "") == ctx.hash) {
      log("train " + s.id + ": checkpoint up to date, skipping");
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult r = train(c.model, corpus, s.split, res.view());
    save_checkpoint(r.model, ckpt, ctx.hash);
    write_loss_history(r.history, ctx.out / "loss_history" / (cell_name(c.model, s.id) + ".jsonl"), ctx.hash);
    std::cout << "train " << s.id << ": epoch loss";
    for (double l : r.epoch_loss) std::cout << ' ' << format3(l);
    std::cout << "  (" << format3(seconds_since(t0)) << " s)\n";
  }
  return kExitOk;
}

int cmd_evaluate(const Context& ctx) {
  const auto& c = ctx.cfg("evaluate");
  if (skip_stage(ctx, "evaluate")) return kExitOk;
  const Corpus corpus = load_corpus(require_path(c.paths.corpus, "corpus", "paths.corpus"));
  const auto splits = load_splits(ctx, corpus);
  const LoadedResources res = load_resources(c, {c.model});
  std::vector<ResultRow> rows;
  std::vector<Bar> bars;
  for (const auto& s : splits) {
    const fs::path ckpt = checkpoint_path(ctx, c.model, s.id);
    if (!fs::exists(ckpt)) {
      throw Error(ErrorCode::ResourceMissing, "checkpoint " + ckpt.string() + " not found; run train");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const FusionModel model = load_checkpoint(ckpt);
    const MetricsReport m = evaluate(model, corpus, s.split.test_ids, res.view());
    rows.push_back(make_row(model.config(), s.id, m, seconds_since(t0)));
    bars.push_back(Bar{s.id, m.accuracy});
    std::cout << s.id << ": accuracy " << format3(m.accuracy) << "  macro_f1 " << format3(m.macro_f1) << "  mae "
              << format3(m.mae) << "  n " << m.n_test << '\n';
  }
  write_results_csv(rows, ctx.out / "results.csv", ctx.hash);
  write_bar_chart_svg(bars, c.model.experiment_id + ": accuracy per split", ctx.out / "accuracy_by_split.svg",
                      ctx.hash);
  mark_done(ctx, "evaluate");
  return kExitOk;
}

int cmd_sweep(const Context& ctx) {
  const auto& c = ctx.cfg("sweep");
  if (skip_stage(ctx, "sweep")) return kExitOk;
  const Corpus corpus = load_corpus(require_path(c.paths.corpus, "corpus", "paths.corpus"));
  const auto splits = load_splits(ctx, corpus);
  const LoadedResources res = load_resources(c, {c.model});
  std::vector<std::string> warnings;
  const auto betas = dedupe_betas(c.betas, &warnings);
  for (const auto& w : warnings) log("sweep: " + w);

  std::vector<ResultRow> rows;
  for (const auto& s : splits) {
    for (auto& row : sweep_beta(c.model, betas, corpus, s, res.view())) {
      std::cout << s.id << " beta=" << format_number(row.beta) << ": accuracy " << format3(row.metrics.accuracy)
                << "  macro_f1 " << format3(row.metrics.macro_f1) << '\n';
      rows.push_back(std::move(row));
    }
  }
  std::vector<Bar> bars;
  for (double b : betas) {
    double acc = 0;
    int n = 0;
    for (const auto& r : rows) {
      if (r.beta == b) {
        acc += r.metrics.accuracy;
        ++n;
      }
    }
    bars.push_back(Bar{"beta=" + format_number(b), acc / n});
  }
  write_results_csv(rows, ctx.out / "sweep.csv", ctx.hash);
  write_bar_chart_svg(bars, c.model.experiment_id + ": mean accuracy per beta", ctx.out / "sweep.svg", ctx.hash);
  mark_done(ctx, "sweep");
  return kExitOk;
}

int cmd_matrix(const Context& ctx) {
  const auto& c = ctx.cfg("matrix");
  if (skip_stage(ctx, "matrix")) return kExitOk;
  const Corpus corpus = load_corpus(require_path(c.paths.corpus, "corpus", "paths.corpus"));
  const auto splits = load_splits(ctx, corpus);
  const std::vector<TrainConfig> configs = c.matrix_configs.empty() ? std::vector{c.model} : c.matrix_configs;
  const LoadedResources res = load_resources(c, configs);
  log("matrix: " + std::to_string(configs.size()) + " configs x " + std::to_string(splits.size()) + " splits, " +
      std::to_string(c.matrix_workers) + " workers");
  const MatrixResult m = run_matrix(configs, splits, corpus, res.view(), c.matrix_workers);

  write_results_csv(m.rows, ctx.out / "matrix.csv", ctx.hash);
  write_ranking_csv(m.ranking, ctx.out / "ranking.csv", ctx.hash);
  std::vector<Bar> bars;
  for (const auto& r : m.ranking) {
    bars.push_back(Bar{r.experiment_id, r.mean_accuracy});
    std::cout << r.rank << ". " << r.experiment_id << ": mean accuracy " << format3(r.mean_accuracy)
              << "  mean macro_f1 " << format3(r.mean_macro_f1) << "  (" << r.n_splits << " splits)\n";
  }
  write_bar_chart_svg(bars, "mean accuracy per configuration", ctx.out / "matrix.svg", ctx.hash);
  if (!m.errors.empty()) {
    write_errors_csv(m.errors, ctx.out / "matrix_errors.csv");
    for (const auto& e : m.errors) std::cerr << "  failed " << e.experiment_id << " / " << e.split_id << ": " << e.message << '\n';
    log("matrix: " + std::to_string(m.errors.size()) + " cells failed, see matrix_errors.csv");
  }
  mark_done(ctx, "matrix");
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ResourceMissing:
    case ErrorCode::CacheMiss:
    case ErrorCode::NetworkError:
      return kExitMissing;
    default:
      return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Political-leaning classification with knowledge infusion"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "Experiment config (JSON)");
  app.add_option("--out", flags.out_dir, "Output directory (overrides paths.output_dir)");
  app.add_flag("--resume", flags.resume, "Skip stages already completed for this config");
  app.add_option("--seed", flags.seed, "Override model and embedding seeds");

  IngestFlags ingest;
  auto* ingest_cmd = app.add_subcommand("ingest-wiki", "Resolve and cache publisher Wikipedia pages");
  ingest_cmd->add_option("--corpus", ingest.corpus, "News corpus (JSONL)");
  ingest_cmd->add_option("--cache-dir", ingest.cache_dir, "Wiki cache directory");
  ingest_cmd->add_option("--offline-fixtures", ingest.fixtures, "Read pages from a snapshot instead of the API");
  ingest_cmd->add_option("--overrides", ingest.overrides, "Domain -> title overrides (JSON)");

  EmbeddingFlags emb;
  auto* emb_cmd = app.add_subcommand("train-embeddings", "Train skip-gram vectors on debate transcripts");
  emb_cmd->add_option("--debates", emb.debates, "Debate speeches (JSONL)");
  emb_cmd->add_option("--out", emb.model_out, "Where to write the embedding model");
  emb_cmd->add_option("--dim", emb.dim, "Vector width");

  auto* split_cmd = app.add_subcommand("split", "Write one train/test split per configured seed");
  auto* train_cmd = app.add_subcommand("train", "Train the configured model on every split");
  auto* eval_cmd = app.add_subcommand("evaluate", "Score checkpoints on their test sets");
  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate once per knowledge weight");
  auto* matrix_cmd = app.add_subcommand("matrix", "Run every configured model on every split");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    const Context ctx = make_context(flags);
    if (*ingest_cmd) return cmd_ingest_wiki(ctx, ingest);
    if (*emb_cmd) return cmd_train_embeddings(ctx, emb);
    if (*split_cmd) return cmd_split(ctx);
    if (*train_cmd) return cmd_train(ctx);
    if (*eval_cmd) return cmd_evaluate(ctx);
    if (*sweep_cmd) return cmd_sweep(ctx);
    if (*matrix_cmd) return cmd_matrix(ctx);
  } catch (const ValidationFailed& e) {
    std::cerr << "newslean: invalid split: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "newslean: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "newslean: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
