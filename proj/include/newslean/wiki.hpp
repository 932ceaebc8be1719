#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newslean/corpus.hpp"
#include "newslean/error.hpp"
#include "newslean/text.hpp"

namespace newslean {

struct WikiDoc {
  std::string domain;
  std::string title;
  std::string body;  // empty iff !found
  std::int64_t fetched_at = 0;  // unix seconds
  bool found = false;
};

inline json to_json(const WikiDoc& d) {
  return json{{"domain", d.domain},
              {"title", d.title},
              {"body", d.body},
              {"fetched_at", d.fetched_at},
              {"found", d.found}};
}

inline WikiDoc wiki_doc_from_json(const json& j) {
  try {
    WikiDoc d;
    d.domain = j.at("domain").get<std::string>();
    d.title = j.at("title").get<std::string>();
    d.body = j.at("body").get<std::string>();
    d.fetched_at = j.at("fetched_at").get<std::int64_t>();
    d.found = j.at("found").get<bool>();
    if (d.found == d.body.empty()) {
      throw Error(ErrorCode::MalformedRecord, "wiki doc for " + d.domain +
                                                  ": found flag disagrees with body");
    }
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("wiki doc: ") + e.what());
  }
}

inline std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// RFC 3986 unreserved characters pass through; everything else is %XX.
inline std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (char raw : s) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

inline std::string percent_decode(std::string_view s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const int hi = nibble(s[i + 1]);
      const int lo = nibble(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

// Directory-backed domain -> WikiDoc map. One JSON file per domain, written
// once via temp-file + rename. Safe for concurrent use.
class WikiCache {
 public:
  explicit WikiCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& directory() const { return dir_; }

  std::filesystem::path path_for(std::string_view domain) const {
    return dir_ / (percent_encode(domain) + ".json");
  }

  std::optional<WikiDoc> get(std::string_view domain) const {
    std::lock_guard lock(mu_);
    if (auto it = memo_.find(std::string(domain)); it != memo_.end()) return it->second;
    const auto path = path_for(domain);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::MalformedRecord, "corrupt cache entry " + path.string());
    }
    WikiDoc doc = wiki_doc_from_json(j);
    memo_.emplace(doc.domain, doc);
    return doc;
  }

  bool contains(std::string_view domain) const { return get(domain).has_value(); }

  // Returns false (and leaves the entry untouched) if the domain is cached.
  bool put(const WikiDoc& doc) {
    std::lock_guard lock(mu_);
    const auto path = path_for(doc.domain);
    if (memo_.contains(doc.domain) || std::filesystem::exists(path)) return false;
    const auto tmp = path.string() + ".tmp." +
                     std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
      out << to_json(doc).dump(2) << '\n';
      if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
    memo_.emplace(doc.domain, doc);
    return true;
  }

  std::vector<std::string> domains() const {
    std::vector<std::string> out;
    if (!std::filesystem::exists(dir_)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      const auto name = entry.path().filename().string();
      if (entry.path().extension() == ".json") {
        out.push_back(percent_decode(name.substr(0, name.size() - 5)));
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, WikiDoc> memo_;
};

// Wikitext -> plain paragraph text. Templates (infoboxes), tables,
// references, comments, headings, files and categories are dropped; links
// keep their label.
inline std::string strip_wiki_markup(std::string_view wikitext) {
  std::string s(wikitext);

  auto drop_nested = [](const std::string& in, std::string_view open, std::string_view close) {
    std::string out;
    int depth = 0;
    for (std::size_t i = 0; i < in.size();) {
      if (in.compare(i, open.size(), open) == 0) {
        ++depth;
        i += open.size();
      } else if (depth > 0 && in.compare(i, close.size(), close) == 0) {
        --depth;
        i += close.size();
      } else {
        if (depth == 0) out.push_back(in[i]);
        ++i;
      }
    }
    return out;
  };

  // Comments and references are cut by scanning; long lazy regexes recurse
  // too deeply in libstdc++ on full-size pages.
  auto drop_spans = [](const std::string& in, std::string_view open, auto&& span_end) {
    std::string out;
    std::size_t pos = 0;
    for (std::size_t hit; (hit = in.find(open, pos)) != std::string::npos;) {
      out.append(in, pos, hit - pos);
      pos = span_end(in, hit);
    }
    out.append(in, std::min(pos, in.size()), std::string::npos);
    return out;
  };
  s = drop_spans(s, "<!--", [](const std::string& in, std::size_t at) {
    const auto e = in.find("-->", at + 4);
    return e == std::string::npos ? in.size() : e + 3;
  });
  s = drop_spans(s, "<ref", [](const std::string& in, std::size_t at) {
    const auto tag_end = in.find('>', at);
    if (tag_end == std::string::npos) return in.size();
    if (in[tag_end - 1] == '/') return tag_end + 1;
    const auto close = in.find("</ref>", tag_end);
    return close == std::string::npos ? in.size() : close + 6;
  });
  s = drop_nested(s, "{{", "}}");
  s = drop_nested(s, "{|", "|}");
  s = std::regex_replace(
      s, std::regex("\\[\\[(?:File|Image|Category):[^\\[\\]]*(?:\\[\\[[^\\]]*\\]\\][^\\[\\]]*)*\\]\\]",
                    std::regex::icase),
      "");
  s = std::regex_replace(s, std::regex("\\[\\[[^\\]|]*\\|([^\\]]*)\\]\\]"), "$1");
  s = std::regex_replace(s, std::regex("\\[\\[([^\\]]*)\\]\\]"), "$1");
  s = std::regex_replace(s, std::regex("\\[https?://[^\\s\\]]+\\s([^\\]]*)\\]"), "$1");
  s = std::regex_replace(s, std::regex("\\[https?://[^\\]]*\\]"), "");
  s = std::regex_replace(s, std::regex("<[^>]+>"), "");
  s = std::regex_replace(s, std::regex("'{2,}"), "");

  std::istringstream lines(s);
  std::string line;
  std::string out;
  bool blank_pending = false;
  while (std::getline(lines, line)) {
    std::string t = trim(line);
    const bool heading = t.size() >= 2 && t.front() == '=' && t.back() == '=';
    if (t.empty() || heading || t.front() == '|' || t.front() == '!') {
      if (!out.empty()) blank_pending = true;
      continue;
    }
    if (t.front() == '*' || t.front() == '#' || t.front() == ':' || t.front() == ';') {
      t = trim(t.substr(t.find_first_not_of("*#:;")));
      if (t.empty()) continue;
    }
    if (!out.empty()) out += blank_pending ? "\n\n" : "\n";
    blank_pending = false;
    out += t;
  }
  return out;
}

struct FetchedPage {
  bool found = false;
  std::string title;  // canonical title after redirects
  std::string body;   // plain text
};

// A place wiki pages come from: the live API or an offline snapshot.
class WikiSource {
 public:
  virtual ~WikiSource() = default;
  // Best-effort title lookup for a publisher domain.
  virtual std::optional<std::string> search(const std::string& domain) = 0;
  // Throws Error(NetworkError) for retryable failures.
  virtual FetchedPage fetch(const std::string& title) = 0;
};

// Snapshot directory:
//   index.json             {"domain": "Page title", ...}  (search results)
//   pages/<title>.txt      plain text
//   pages/<title>.wiki     wikitext, stripped on read
// <title> is percent-encoded. A title without a page file is treated as gone.
class OfflineFixtureSource : public WikiSource {
 public:
  explicit OfflineFixtureSource(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) {
      throw Error(ErrorCode::ResourceMissing, "fixture directory " + dir_.string());
    }
    const auto index_path = dir_ / "index.json";
    if (std::filesystem::exists(index_path)) {
      std::ifstream in(index_path);
      json j = json::parse(in, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::MalformedRecord, index_path.string());
      }
      index_ = j.get<std::map<std::string, std::string>>();
    }
  }

  std::optional<std::string> search(const std::string& domain) override {
    if (auto it = index_.find(domain); it != index_.end()) return it->second;
    return std::nullopt;
  }

  FetchedPage fetch(const std::string& title) override {
    const auto stem = dir_ / "pages" / percent_encode(title);
    for (const char* ext : {".txt", ".wiki"}) {
      std::ifstream in(stem.string() + ext);
      if (!in) continue;
      std::stringstream buf;
      buf << in.rdbuf();
      std::string body = std::string(ext) == ".wiki" ? strip_wiki_markup(buf.str())
                                                     : trim(buf.str());
      if (body.empty()) break;
      return FetchedPage{true, title, std::move(body)};
    }
    return FetchedPage{false, title, ""};
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> index_;
};

inline std::map<std::string, std::string> load_overrides(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open overrides " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::MalformedRecord, "overrides must be a JSON object: " + path.string());
  }
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) {
      throw Error(ErrorCode::MalformedRecord, "override for " + k + " is not a string");
    }
    out.emplace(normalize_domain(k), v.get<std::string>());
  }
  return out;
}

// Domain -> page title: manual override first, then the source's search.
inline std::optional<std::string> map_domain_to_wiki(
    const std::string& domain, const std::map<std::string, std::string>& overrides,
    WikiSource* source) {
  if (auto it = overrides.find(domain); it != overrides.end()) return it->second;
  if (source == nullptr) return std::nullopt;
  return source->search(domain);
}

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds base_delay{250};
  // Injected so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

// Runs fn, retrying NetworkError with exponential backoff.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) {
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NetworkError || attempt >= policy.max_attempts) throw;
      policy.sleep(policy.base_delay * (1 << (attempt - 1)));
    }
  }
}

// Minimum spacing between requests to one host, shared by all workers.
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds min_interval) : interval_(min_interval) {}

  void acquire() {
    if (interval_.count() <= 0) return;
    std::unique_lock lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto slot = std::max(now, next_);
    next_ = slot + interval_;
    lock.unlock();
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::milliseconds interval_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

// Cache-first page retrieval. source_calls() counts every request that
// reached the source, including retries.
class WikiFetcher {
 public:
  WikiFetcher(WikiSource* source, WikiCache& cache, RetryPolicy retry = {},
              std::chrono::milliseconds min_interval = std::chrono::milliseconds(0))
      : source_(source), cache_(cache), retry_(std::move(retry)), limiter_(min_interval) {}

  WikiDoc fetch_wiki_doc(const std::string& title, const std::string& domain) {
    if (auto cached = cache_.get(domain)) return *cached;

    std::optional<FetchedPage> page;
    {
      std::lock_guard lock(mu_);
      if (auto it = by_title_.find(title); it != by_title_.end()) page = it->second;
    }
    if (!page) {
      if (source_ == nullptr) {
        throw Error(ErrorCode::ResourceMissing, "no wiki source configured to fetch '" + title + "'");
      }
      page = with_retries(retry_, [&] {
        limiter_.acquire();
        ++source_calls_;
        return source_->fetch(title);
      });
      std::lock_guard lock(mu_);
      by_title_.emplace(title, *page);
    }

    WikiDoc doc;
    doc.domain = domain;
    doc.title = page->found ? page->title : title;
    doc.found = page->found && !page->body.empty();
    doc.body = doc.found ? page->body : "";
    doc.fetched_at = unix_now();
    if (!cache_.put(doc)) return *cache_.get(domain);
    return doc;
  }

  WikiDoc record_not_found(const std::string& domain) {
    if (auto cached = cache_.get(domain)) return *cached;
    WikiDoc doc{domain, "", "", unix_now(), false};
    if (!cache_.put(doc)) return *cache_.get(domain);
    return doc;
  }

  std::size_t source_calls() const { return source_calls_.load(); }

 private:
  WikiSource* source_;
  WikiCache& cache_;
  RetryPolicy retry_;
  RateLimiter limiter_;
  std::mutex mu_;
  std::unordered_map<std::string, FetchedPage> by_title_;
  std::atomic<std::size_t> source_calls_{0};
};

struct IngestOptions {
  std::size_t parallelism = 4;
  std::chrono::milliseconds min_interval{0};
  RetryPolicy retry;
};

struct IngestReport {
  std::size_t domains = 0;
  std::size_t resolved = 0;
  std::size_t not_found = 0;
  std::size_t source_calls = 0;
  std::vector<std::string> failed;  // domains whose fetch kept failing
};

// Resolves and caches every domain. Completed entries are never refetched,
// so a complete cache costs zero source calls.
inline IngestReport ingest_wiki(const std::vector<std::string>& domains,
                                const std::map<std::string, std::string>& overrides,
                                WikiSource* source, WikiCache& cache,
                                const IngestOptions& options = {}) {
  WikiFetcher fetcher(source, cache, options.retry, options.min_interval);
  IngestReport report;
  report.domains = domains.size();
  std::atomic<std::size_t> next{0};
  std::mutex report_mu;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (std::size_t i = next++; i < domains.size(); i = next++) {
      const std::string& domain = domains[i];
      try {
        std::optional<WikiDoc> doc = cache.get(domain);
        if (!doc) {
          std::optional<std::string> title;
          if (auto it = overrides.find(domain); it != overrides.end()) {
            title = it->second;
          } else if (source != nullptr) {
            title = with_retries(options.retry, [&] { return source->search(domain); });
          }
          doc = title ? fetcher.fetch_wiki_doc(*title, domain) : fetcher.record_not_found(domain);
        }
        std::lock_guard lock(report_mu);
        (doc->found ? report.resolved : report.not_found) += 1;
      } catch (const Error& e) {
        std::lock_guard lock(report_mu);
        if (e.code() == ErrorCode::NetworkError) {
          report.failed.push_back(domain);
        } else if (!first_error) {
          first_error = std::current_exception();
        }
      } catch (...) {
        std::lock_guard lock(report_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(options.parallelism, domains.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);
  std::sort(report.failed.begin(), report.failed.end());
  report.source_calls = fetcher.source_calls();
  return report;
}

// Title and body of the publisher's page, or "" when it has none.
inline std::string wiki_text_for_article(const Article& article, const WikiCache& cache) {
  auto doc = cache.get(article.domain);
  if (!doc) {
    throw Error(ErrorCode::CacheMiss, "domain '" + article.domain + "' was never resolved");
  }
  if (!doc->found) return "";
  return doc->title + "\n" + doc->body;
}

}  // namespace newslean
