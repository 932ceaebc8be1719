#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "newslean/newslean.hpp"
#include "support/synthetic.hpp"
#include "support/tmpdir.hpp"

namespace newslean {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const TempDir& tmp, const std::string& args) {
  const fs::path log = tmp / "cli.log";
  const std::string cmd = std::string(NEWSLEAN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// 60 articles over 6 publishers, debates, a wiki snapshot and a config.
struct Fixture {
  explicit Fixture(const TempDir& tmp, json overrides = json::object()) : dir(tmp.path()) {
    testing::SyntheticOptions o;
    o.domains = 6;
    o.articles_per_domain = 10;
    o.filler_words = 15;
    o.speeches_per_party = 20;
    o.wiki_missing = 0.2;
    const auto w = testing::make_world(o);
    save_corpus(w.corpus, dir / "news.jsonl");
    testing::write_debates(w, dir / "debates.jsonl");
    testing::write_wiki_fixtures(w, dir / "snapshot");

    config = json{
        {"paths",
         {{"corpus", "news.jsonl"},
          {"debates", "debates.jsonl"},
          {"wiki_cache", "cache"},
          {"wiki_fixtures", "snapshot"},
          {"embeddings", "emb.txt"},
          {"output_dir", "out"}}},
        {"split", {{"kind", "media"}, {"fraction", 0.2}, {"seeds", {1}}}},
        {"embeddings", {{"dim", 12}, {"epochs", 2}, {"min_count", 1}}},
        {"model",
         {{"experiment_id", "full"},
          {"backbone", "stub"},
          {"stub_hidden", 16},
          {"buckets", 256},
          {"topic_encoder", "encoder"},
          {"topic_dim", 6},
          {"encoder_hidden", 8},
          {"epochs", 1},
          {"learning_rate", 0.01}}},
        {"matrix",
         {{"workers", 2},
          {"configs",
           {{{"experiment_id", "news"}, {"use_wiki", false}, {"topic_encoder", "none"}},
            {{"experiment_id", "news+wiki"}, {"topic_encoder", "none"}}}}}},
    };
    config.merge_patch(overrides);
    write_config();
  }

  void write_config() const { std::ofstream(dir / "exp.json") << config.dump(2); }
  std::string cfg() const { return "--config " + (dir / "exp.json").string(); }
  std::string hash() const { return hex64(fnv1a64(config.dump())); }

  fs::path dir;
  json config;
};

TEST(Cli, SplitWritesOneDisjointFilePerSeed) {
  TempDir tmp;
  Fixture fx(tmp, json{{"split", {{"seeds", {11, 23, 37, 41}}}}});
  const auto r = run_cli(tmp, fx.cfg() + " split");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Corpus corpus = load_corpus(fx.dir / "news.jsonl");
  int files = 0;
  for (const auto& e : fs::directory_iterator(fx.dir / "out" / "splits")) {
    ++files;
    const SplitSpec s = load_split(e.path());
    EXPECT_TRUE(validate_split(s, corpus).ok) << e.path();
    std::set<std::string> train_domains;
    for (const auto& id : s.train_ids) train_domains.insert(corpus.at(id).domain);
    for (const auto& id : s.test_ids) EXPECT_FALSE(train_domains.contains(corpus.at(id).domain));
    EXPECT_EQ(read_json_file(e.path()).at("config_hash"), fx.hash());
  }
  EXPECT_EQ(files, 4);
  EXPECT_TRUE(fs::exists(fx.dir / "out" / "splits" / "media-37.json"));
}

TEST(Cli, RandomSplitKind) {
  TempDir tmp;
  Fixture fx(tmp, json{{"split", {{"kind", "random"}, {"fraction", 0.2}, {"seeds", {5}}}}});
  const auto r = run_cli(tmp, fx.cfg() + " split");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const SplitSpec s = load_split(fx.dir / "out" / "splits" / "random-5.json");
  EXPECT_EQ(s.kind, SplitKind::Random);
  EXPECT_EQ(s.test_ids.size(), 12u);
}

TEST(Cli, MissingCorpusIsInputError) {
  TempDir tmp;
  Fixture fx(tmp, json{{"paths", {{"corpus", "nope.jsonl"}}}});
  const auto r = run_cli(tmp, fx.cfg() + " split");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("nope.jsonl"), std::string::npos) << r.output;
}

TEST(Cli, BadInvocationIsInputError) {
  TempDir tmp;
  EXPECT_EQ(run_cli(tmp, "frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli(tmp, "split").exit_code, 1);  // no --config
  EXPECT_EQ(run_cli(tmp, "--config " + (tmp / "absent.json").string() + " split").exit_code, 1);
  EXPECT_EQ(run_cli(tmp, "--help").exit_code, 0);
}

TEST(Cli, MissingPrerequisitesExitThreeWithHint) {
  TempDir tmp;
  Fixture fx(tmp);
  auto r = run_cli(tmp, fx.cfg() + " train");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("run split"), std::string::npos) << r.output;

  ASSERT_EQ(run_cli(tmp, fx.cfg() + " split").exit_code, 0);
  r = run_cli(tmp, fx.cfg() + " evaluate");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("run train"), std::string::npos) << r.output;

  r = run_cli(tmp, fx.cfg() + " train");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("ingest-wiki"), std::string::npos) << r.output;

  ASSERT_EQ(run_cli(tmp, fx.cfg() + " ingest-wiki").exit_code, 0);
  r = run_cli(tmp, fx.cfg() + " train");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("train-embeddings"), std::string::npos) << r.output;
}

TEST(Cli, TamperedSplitIsValidationFailure) {
  TempDir tmp;
  Fixture fx(tmp, json{{"model", {{"topic_encoder", "none"}, {"use_wiki", false}}}});
  ASSERT_EQ(run_cli(tmp, fx.cfg() + " split").exit_code, 0);
  const fs::path p = fx.dir / "out" / "splits" / "media-1.json";
  json j = read_json_file(p);
  j["train_ids"].push_back(j["test_ids"][0]);
  std::ofstream(p) << j.dump();
  const auto r = run_cli(tmp, fx.cfg() + " train");
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(Cli, StandaloneIngestAndEmbeddingFlags) {
  TempDir tmp;
  Fixture fx(tmp);
  auto r = run_cli(tmp, "ingest-wiki --corpus " + (fx.dir / "news.jsonl").string() + " --cache-dir " +
                            (tmp / "c2").string() + " --offline-fixtures " + (fx.dir / "snapshot").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("domains 6"), std::string::npos) << r.output;
  EXPECT_EQ(std::distance(fs::directory_iterator(tmp / "c2"), fs::directory_iterator{}), 6);

  r = run_cli(tmp, "train-embeddings --debates " + (fx.dir / "debates.jsonl").string() + " --out " +
                       (tmp / "m.txt").string() + " --dim 7 --seed 3");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto model = load_embeddings(tmp / "m.txt");
  EXPECT_EQ(model.dim(), 7u);
  EXPECT_EQ(model.params().seed, 3u);
}

TEST(Cli, EndToEndPipelineAndResume) {
  TempDir tmp;
  Fixture fx(tmp);
  const fs::path out = fx.dir / "out";
  for (const char* stage : {"ingest-wiki", "train-embeddings", "split", "train", "evaluate", "sweep", "matrix"}) {
    const auto r = run_cli(tmp, fx.cfg() + " " + stage);
    ASSERT_EQ(r.exit_code, 0) << stage << "\n" << r.output;
  }

  const std::string tag = "config_hash=" + fx.hash();
  const auto sweep = lines_of(out / "sweep.csv");
  ASSERT_EQ(sweep.size(), 7u);  // hash comment, header, 5 betas
  EXPECT_EQ(sweep[0], "# " + tag);
  EXPECT_EQ(sweep[1], kResultsHeader);
  EXPECT_EQ(sweep[2].substr(0, 32), "full,stub,encoder,true,0,media-1");

  const auto results = lines_of(out / "results.csv");
  ASSERT_EQ(results.size(), 3u);
  const auto matrix = lines_of(out / "matrix.csv");
  EXPECT_EQ(matrix.size(), 4u);
  EXPECT_EQ(lines_of(out / "ranking.csv").size(), 4u);

  for (const char* f : {"sweep.svg", "accuracy_by_split.svg", "matrix.svg"}) {
    EXPECT_NE(slurp(out / f).find(tag), std::string::npos) << f;
  }
  EXPECT_NE(slurp(out / "loss_history" / "full__media-1.jsonl").find(tag.substr(12)), std::string::npos);
  EXPECT_EQ(read_checkpoint_header(out / "checkpoints" / "full__media-1.ckpt").at("config_hash"), fx.hash());
  EXPECT_NE(lines_of(fx.dir / "emb.txt").front().find(tag), std::string::npos);

  // Unchanged config + --resume: every stage is skipped and outputs stay put.
  const auto before = fs::last_write_time(out / "sweep.csv");
  const auto ckpt_before = fs::last_write_time(out / "checkpoints" / "full__media-1.ckpt");
  for (const char* stage : {"train-embeddings", "split", "train", "evaluate", "sweep", "matrix"}) {
    const auto r = run_cli(tmp, fx.cfg() + " --resume " + stage);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("skipping"), std::string::npos) << stage << "\n" << r.output;
  }
  EXPECT_EQ(fs::last_write_time(out / "sweep.csv"), before);
  EXPECT_EQ(fs::last_write_time(out / "checkpoints" / "full__media-1.ckpt"), ckpt_before);

  // A different seed changes the hash, so the stage runs again.
  const auto r = run_cli(tmp, fx.cfg() + " --resume --seed 9 sweep");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(r.output.find("skipping"), std::string::npos) << r.output;
}

}  // namespace
}  // namespace newslean
