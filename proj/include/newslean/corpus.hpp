#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "newslean/error.hpp"
#include "newslean/random.hpp"
#include "newslean/text.hpp"

namespace newslean {

using json = nlohmann::json;

// Ordinal codes are fixed; MAE is computed on them.
enum class Leaning : int { Left = 0, Center = 1, Right = 2 };

inline constexpr int kNumClasses = 3;
inline constexpr std::array<Leaning, kNumClasses> kAllLeanings = {
    Leaning::Left, Leaning::Center, Leaning::Right};

constexpr int code(Leaning l) { return static_cast<int>(l); }

inline Leaning leaning_from_code(int c) {
  if (c < 0 || c >= kNumClasses) {
    throw Error(ErrorCode::UnknownLabel, "code " + std::to_string(c));
  }
  return static_cast<Leaning>(c);
}

constexpr std::string_view to_string(Leaning l) {
  switch (l) {
    case Leaning::Left: return "left";
    case Leaning::Center: return "center";
    case Leaning::Right: return "right";
  }
  return "?";
}

inline std::optional<Leaning> parse_leaning(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "left") return Leaning::Left;
  if (v == "center") return Leaning::Center;
  if (v == "right") return Leaning::Right;
  return std::nullopt;
}

inline std::string normalize_domain(std::string_view d) {
  return to_lower(trim(d));
}

struct Article {
  std::string id;
  std::string domain;
  std::string title;
  std::string body;
  Leaning label = Leaning::Left;
};

inline json to_json(const Article& a) {
  return json{{"id", a.id},
              {"domain", a.domain},
              {"title", a.title},
              {"body", a.body},
              {"label", std::string(to_string(a.label))}};
}

// Immutable after construction.
class Corpus {
 public:
  Corpus() = default;

  explicit Corpus(std::vector<Article> articles)
      : articles_(std::move(articles)) {
    std::set<std::string> domains;
    for (std::size_t i = 0; i < articles_.size(); ++i) {
      Article& a = articles_[i];
      a.domain = normalize_domain(a.domain);
      if (a.id.empty()) {
        throw Error(ErrorCode::MalformedRecord, "article with empty id");
      }
      if (a.domain.empty()) {
        throw Error(ErrorCode::MalformedRecord, "article " + a.id + " has empty domain");
      }
      if (trim(a.body).empty()) {
        throw Error(ErrorCode::MalformedRecord, "article " + a.id + " has empty body");
      }
      if (!by_id_.emplace(a.id, i).second) {
        throw Error(ErrorCode::DuplicateId, a.id);
      }
      domains.insert(a.domain);
    }
    domains_.assign(domains.begin(), domains.end());
  }

  const std::vector<Article>& articles() const { return articles_; }
  // Sorted, distinct.
  const std::vector<std::string>& domains() const { return domains_; }
  std::size_t size() const { return articles_.size(); }
  std::size_t num_domains() const { return domains_.size(); }
  bool empty() const { return articles_.empty(); }

  const Article* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &articles_[it->second];
  }

  const Article& at(std::string_view id) const {
    const Article* a = find(id);
    if (a == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "unknown article id " + std::string(id));
    }
    return *a;
  }

 private:
  std::vector<Article> articles_;
  std::vector<std::string> domains_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

namespace detail {

inline const std::string& require_string(const json& rec, const char* key,
                                         std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line) + ": missing string field '" + key + "'");
  }
  return it->get_ref<const std::string&>();
}

// Calls fn(record, line_number) for every non-blank line of a JSON-lines file.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw Error(ErrorCode::MalformedRecord,
                  "line " + std::to_string(line_no) + ": not a JSON object");
    }
    fn(rec, line_no);
  }
}

}  // namespace detail

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::vector<Article> articles;
  std::unordered_set<std::string> seen;
  detail::for_each_jsonl(path, [&](const json& rec, std::size_t line) {
    Article a;
    a.id = detail::require_string(rec, "id", line);
    a.domain = normalize_domain(detail::require_string(rec, "domain", line));
    a.title = detail::require_string(rec, "title", line);
    a.body = detail::require_string(rec, "body", line);
    const std::string& label = detail::require_string(rec, "label", line);
    auto parsed = parse_leaning(label);
    if (!parsed) {
      throw Error(ErrorCode::UnknownLabel,
                  "line " + std::to_string(line) + ": '" + label + "'");
    }
    a.label = *parsed;
    if (a.id.empty() || a.domain.empty() || trim(a.body).empty()) {
      throw Error(ErrorCode::MalformedRecord,
                  "line " + std::to_string(line) + ": empty id, domain or body");
    }
    if (!seen.insert(a.id).second) {
      throw Error(ErrorCode::DuplicateId,
                  "line " + std::to_string(line) + ": " + a.id);
    }
    articles.push_back(std::move(a));
  });
  return Corpus(std::move(articles));
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const Article& a : corpus.articles()) out << to_json(a).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Splits

enum class SplitKind { Random, Media };

constexpr std::string_view to_string(SplitKind k) {
  return k == SplitKind::Random ? "random" : "media";
}

inline SplitKind parse_split_kind(std::string_view s) {
  const std::string v = to_lower(s);
  if (v == "random") return SplitKind::Random;
  if (v == "media") return SplitKind::Media;
  throw Error(ErrorCode::InvalidArgument, "unknown split kind '" + v + "'");
}

struct SplitSpec {
  SplitKind kind = SplitKind::Random;
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;  // corpus order
  std::vector<std::string> test_ids;   // corpus order
  std::vector<std::string> test_domains;  // sorted; Media only

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

inline json to_json(const SplitSpec& s) {
  return json{{"kind", std::string(to_string(s.kind))},
              {"seed", s.seed},
              {"train_ids", s.train_ids},
              {"test_ids", s.test_ids},
              {"test_domains", s.test_domains}};
}

inline SplitSpec split_from_json(const json& j) {
  try {
    SplitSpec s;
    s.kind = parse_split_kind(j.at("kind").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    s.test_domains = j.value("test_domains", std::vector<std::string>{});
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("split: ") + e.what());
  }
}

inline std::string serialize(const SplitSpec& s) { return to_json(s).dump(2); }

inline SplitSpec load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::MalformedRecord, "split file " + path.string() + " is not JSON");
  }
  return split_from_json(j);
}

// round-to-nearest with a floor of 1, and never the whole population.
inline std::size_t holdout_count(std::size_t population, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fraction must lie in (0, 1)");
  }
  auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(population)));
  n = std::max<std::size_t>(n, 1);
  if (population > 1) n = std::min(n, population - 1);
  return n;
}

// Holds out every article of a uniformly sampled subset of publishers.
inline SplitSpec make_media_split(const Corpus& corpus, double test_domain_fraction,
                                  std::uint64_t seed) {
  if (corpus.num_domains() < 2) {
    throw Error(ErrorCode::TooFewDomains,
                "media split needs >= 2 domains, corpus has " +
                    std::to_string(corpus.num_domains()));
  }
  const std::size_t n_test = holdout_count(corpus.num_domains(), test_domain_fraction);

  std::vector<std::string> domains = corpus.domains();
  Rng rng(seed);
  rng.shuffle(std::span(domains));
  domains.resize(n_test);
  std::sort(domains.begin(), domains.end());
  const std::set<std::string> held(domains.begin(), domains.end());

  SplitSpec split;
  split.kind = SplitKind::Media;
  split.seed = seed;
  split.test_domains = std::move(domains);
  for (const Article& a : corpus.articles()) {
    (held.contains(a.domain) ? split.test_ids : split.train_ids).push_back(a.id);
  }
  return split;
}

// Article-level shuffle split, stratified by label with largest-remainder
// allocation so each class is within one article of its proportional share.
inline SplitSpec make_random_split(const Corpus& corpus, double test_fraction,
                                   std::uint64_t seed) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "random split of empty corpus");
  const std::size_t total = corpus.size();
  const std::size_t n_test = holdout_count(total, test_fraction);

  std::array<std::vector<std::size_t>, kNumClasses> by_label;
  for (std::size_t i = 0; i < total; ++i) {
    by_label[code(corpus.articles()[i].label)].push_back(i);
  }

  std::array<std::size_t, kNumClasses> quota{};
  std::array<double, kNumClasses> remainder{};
  std::size_t assigned = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    const double exact = static_cast<double>(n_test) *
                         static_cast<double>(by_label[k].size()) /
                         static_cast<double>(total);
    quota[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - std::floor(exact);
    assigned += quota[k];
  }
  std::array<int, kNumClasses> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int k : order) {
    if (assigned >= n_test) break;
    if (quota[k] < by_label[k].size()) {
      ++quota[k];
      ++assigned;
    }
  }

  Rng rng(seed);
  std::vector<bool> is_test(total, false);
  for (int k = 0; k < kNumClasses; ++k) {
    rng.shuffle(std::span(by_label[k]));
    for (std::size_t i = 0; i < quota[k]; ++i) is_test[by_label[k][i]] = true;
  }

  SplitSpec split;
  split.kind = SplitKind::Random;
  split.seed = seed;
  for (std::size_t i = 0; i < total; ++i) {
    const std::string& id = corpus.articles()[i].id;
    (is_test[i] ? split.test_ids : split.train_ids).push_back(id);
  }
  return split;
}

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> missing_ids;      // in corpus, in neither partition
  std::vector<std::string> unknown_ids;      // in split, not in corpus
  std::vector<std::string> overlapping_ids;  // in both partitions
  std::vector<std::string> leaked_domains;   // Media: in both partitions
  std::vector<std::string> violations;       // human-readable, all fatal
};

inline json to_json(const ValidationReport& r) {
  return json{{"ok", r.ok},
              {"missing_ids", r.missing_ids},
              {"unknown_ids", r.unknown_ids},
              {"overlapping_ids", r.overlapping_ids},
              {"leaked_domains", r.leaked_domains},
              {"violations", r.violations}};
}

inline ValidationReport validate_split(const SplitSpec& split, const Corpus& corpus) {
  ValidationReport report;
  auto fail = [&](std::string msg) {
    report.ok = false;
    report.violations.push_back(std::move(msg));
  };

  std::unordered_set<std::string> train(split.train_ids.begin(), split.train_ids.end());
  std::unordered_set<std::string> test(split.test_ids.begin(), split.test_ids.end());
  if (train.size() != split.train_ids.size() || test.size() != split.test_ids.size()) {
    fail("duplicate ids inside a partition");
  }

  std::set<std::string> train_domains;
  std::set<std::string> test_domains;
  for (const auto& [ids, domains] :
       {std::pair{&split.train_ids, &train_domains}, std::pair{&split.test_ids, &test_domains}}) {
    for (const std::string& id : *ids) {
      if (const Article* a = corpus.find(id)) {
        domains->insert(a->domain);
      } else {
        report.unknown_ids.push_back(id);
      }
    }
  }
  for (const std::string& id : split.test_ids) {
    if (train.contains(id)) report.overlapping_ids.push_back(id);
  }
  for (const Article& a : corpus.articles()) {
    if (!train.contains(a.id) && !test.contains(a.id)) report.missing_ids.push_back(a.id);
  }

  if (!report.unknown_ids.empty()) {
    fail(std::to_string(report.unknown_ids.size()) + " ids not present in corpus");
  }
  if (!report.overlapping_ids.empty()) {
    fail(std::to_string(report.overlapping_ids.size()) + " ids in both train and test");
  }
  if (!report.missing_ids.empty()) {
    fail("coverage: " + std::to_string(report.missing_ids.size()) +
         " corpus ids in neither partition");
  }

  if (split.kind == SplitKind::Media) {
    std::set_intersection(train_domains.begin(), train_domains.end(),
                          test_domains.begin(), test_domains.end(),
                          std::back_inserter(report.leaked_domains));
    if (!report.leaked_domains.empty()) {
      fail(std::to_string(report.leaked_domains.size()) +
           " domains appear in both train and test");
    }
    const std::set<std::string> recorded(split.test_domains.begin(), split.test_domains.end());
    if (recorded != test_domains) fail("recorded test_domains differ from the test partition");
  }
  return report;
}

}  // namespace newslean
