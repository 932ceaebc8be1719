#include <atomic>
#include <chrono>

#include <gtest/gtest.h>

#include "newslean/wiki.hpp"
#include "support/tmpdir.hpp"

namespace newslean {
namespace {

using testing::TempDir;

// Wraps a source and counts the calls that reach it.
class CountingSource : public WikiSource {
 public:
  explicit CountingSource(WikiSource& inner) : inner_(inner) {}
  std::optional<std::string> search(const std::string& d) override {
    ++searches;
    return inner_.search(d);
  }
  FetchedPage fetch(const std::string& t) override {
    ++fetches;
    return inner_.fetch(t);
  }
  std::atomic<int> searches{0};
  std::atomic<int> fetches{0};

 private:
  WikiSource& inner_;
};

class FlakySource : public WikiSource {
 public:
  explicit FlakySource(int failures) : failures_left(failures) {}
  std::optional<std::string> search(const std::string& d) override { return d; }
  FetchedPage fetch(const std::string& t) override {
    ++calls;
    if (failures_left-- > 0) throw Error(ErrorCode::NetworkError, "connection reset");
    return FetchedPage{true, t, "Body of " + t};
  }
  int failures_left;
  int calls = 0;
};

std::filesystem::path make_fixtures(const TempDir& tmp) {
  tmp.write("fixtures/index.json", R"({"cnn.com": "CNN", "foxnews.com": "Fox News", "gone.com": "Deleted Page"})");
  tmp.write("fixtures/pages/CNN.txt", "Cable News Network is an American news channel.\n");
  tmp.write("fixtures/pages/Fox%20News.wiki",
            "{{Infobox television channel\n| name = Fox News\n| owner = {{nowrap|Fox Corp}}\n}}\n"
            "'''Fox News''' is an American [[cable television|cable]] news channel.<ref>cite</ref>\n"
            "== History ==\nIt launched in [[1996]].<ref name=\"a\"/>\n[[Category:Channels]]\n");
  return tmp / "fixtures";
}

RetryPolicy no_sleep(std::vector<std::chrono::milliseconds>* delays = nullptr) {
  RetryPolicy p;
  p.sleep = [delays](std::chrono::milliseconds d) {
    if (delays) delays->push_back(d);
  };
  return p;
}

TEST(MapDomain, OverrideWins) {
  EXPECT_EQ(map_domain_to_wiki("cnn.com", {{"cnn.com", "CNN"}}, nullptr), "CNN");
}

TEST(MapDomain, UnknownDomainIsNotFound) {
  TempDir tmp;
  OfflineFixtureSource src(make_fixtures(tmp));
  EXPECT_FALSE(map_domain_to_wiki("no-such-news.example", {}, &src).has_value());
  EXPECT_EQ(map_domain_to_wiki("foxnews.com", {}, &src), "Fox News");
}

TEST(MapDomain, FullScaleResolutionCounts) {
  // 389 publishers, 324 of them with a page: ingestion reports 324/65.
  TempDir tmp;
  json index = json::object();
  std::vector<std::string> domains;
  for (int i = 0; i < 389; ++i) {
    domains.push_back("pub" + std::to_string(i) + ".com");
    if (i < 324) {
      index[domains.back()] = "Pub " + std::to_string(i);
      tmp.write("fx/pages/Pub%20" + std::to_string(i) + ".txt", "Publisher page " + std::to_string(i));
    }
  }
  tmp.write("fx/index.json", index.dump());
  OfflineFixtureSource src(tmp / "fx");
  WikiCache cache(tmp / "cache");
  const auto report = ingest_wiki(domains, {}, &src, cache, {.parallelism = 4, .retry = no_sleep()});
  EXPECT_EQ(report.resolved, 324u);
  EXPECT_EQ(report.not_found, 65u);
}

TEST(FetchWikiDoc, FixturePageIsFound) {
  TempDir tmp;
  OfflineFixtureSource src(make_fixtures(tmp));
  WikiCache cache(tmp / "cache");
  WikiFetcher fetcher(&src, cache, no_sleep());
  const WikiDoc doc = fetcher.fetch_wiki_doc("CNN", "cnn.com");
  EXPECT_TRUE(doc.found);
  EXPECT_GT(doc.body.size(), 0u);
  EXPECT_TRUE(cache.contains("cnn.com"));
}

TEST(FetchWikiDoc, WikitextIsStripped) {
  TempDir tmp;
  OfflineFixtureSource src(make_fixtures(tmp));
  const auto page = src.fetch("Fox News");
  ASSERT_TRUE(page.found);
  EXPECT_EQ(page.body, "Fox News is an American cable news channel.\n\nIt launched in 1996.");
}

TEST(FetchWikiDoc, DeletedPageIsNotFound) {
  TempDir tmp;
  OfflineFixtureSource src(make_fixtures(tmp));
  WikiCache cache(tmp / "cache");
  WikiFetcher fetcher(&src, cache, no_sleep());
  const WikiDoc doc = fetcher.fetch_wiki_doc("Deleted Page", "gone.com");
  EXPECT_FALSE(doc.found);
  EXPECT_EQ(doc.body, "");
  EXPECT_FALSE(cache.get("gone.com")->found);
}

TEST(FetchWikiDoc, SecondFetchIsServedFromCache) {
  TempDir tmp;
  OfflineFixtureSource inner(make_fixtures(tmp));
  CountingSource src(inner);
  WikiCache cache(tmp / "cache");
  WikiFetcher fetcher(&src, cache, no_sleep());
  fetcher.fetch_wiki_doc("CNN", "cnn.com");
  const int after_first = src.fetches;
  const WikiDoc again = fetcher.fetch_wiki_doc("CNN", "cnn.com");
  EXPECT_EQ(after_first, 1);
  EXPECT_EQ(src.fetches, after_first);
  EXPECT_TRUE(again.found);

  // A fresh fetcher over the same directory also needs no source.
  WikiCache reopened(tmp / "cache");
  WikiFetcher offline(nullptr, reopened, no_sleep());
  EXPECT_EQ(offline.fetch_wiki_doc("CNN", "cnn.com").body, again.body);
  EXPECT_EQ(offline.source_calls(), 0u);
}

TEST(FetchWikiDoc, IdenticalBodiesAcrossFetches) {
  TempDir tmp;
  OfflineFixtureSource src(make_fixtures(tmp));
  WikiCache a(tmp / "a");
  WikiCache b(tmp / "b");
  EXPECT_EQ(WikiFetcher(&src, a, no_sleep()).fetch_wiki_doc("Fox News", "foxnews.com").body,
            WikiFetcher(&src, b, no_sleep()).fetch_wiki_doc("Fox News", "foxnews.com").body);
}

TEST(FetchWikiDoc, RetriesNetworkErrorsWithBackoff) {
  TempDir tmp;
  FlakySource src(2);
  WikiCache cache(tmp / "cache");
  std::vector<std::chrono::milliseconds> delays;
  WikiFetcher fetcher(&src, cache, no_sleep(&delays));
  const WikiDoc doc = fetcher.fetch_wiki_doc("Page", "page.com");
  EXPECT_TRUE(doc.found);
  EXPECT_EQ(src.calls, 3);
  ASSERT_EQ(delays.size(), 2u);
  EXPECT_EQ(delays[1], 2 * delays[0]);
}

TEST(FetchWikiDoc, GivesUpAfterBoundedRetries) {
  TempDir tmp;
  FlakySource src(100);
  WikiCache cache(tmp / "cache");
  WikiFetcher fetcher(&src, cache, no_sleep());
  EXPECT_ERROR_CODE(fetcher.fetch_wiki_doc("Page", "page.com"), ErrorCode::NetworkError);
  EXPECT_EQ(src.calls, RetryPolicy{}.max_attempts);
  EXPECT_FALSE(cache.contains("page.com"));
}

TEST(WikiText, FoundMissingAndUnresolved) {
  TempDir tmp;
  WikiCache cache(tmp / "cache");
  cache.put(WikiDoc{"cnn.com", "CNN", "Cable News Network.", 0, true});
  cache.put(WikiDoc{"tiny.com", "", "", 0, false});
  Article a{"1", "cnn.com", "t", "b", Leaning::Left};
  EXPECT_EQ(wiki_text_for_article(a, cache), "CNN\nCable News Network.");
  a.domain = "tiny.com";
  EXPECT_EQ(wiki_text_for_article(a, cache), "");
  a.domain = "never.com";
  EXPECT_ERROR_CODE(wiki_text_for_article(a, cache), ErrorCode::CacheMiss);
}

TEST(WikiCache, EntriesAreWrittenOnce) {
  TempDir tmp;
  WikiCache cache(tmp / "cache");
  EXPECT_TRUE(cache.put(WikiDoc{"a.com", "A", "first", 1, true}));
  EXPECT_FALSE(cache.put(WikiDoc{"a.com", "A", "second", 2, true}));
  WikiCache reopened(tmp / "cache");
  EXPECT_EQ(reopened.get("a.com")->body, "first");
  EXPECT_TRUE(std::filesystem::exists(tmp / "cache" / "a.com.json"));
}

TEST(WikiCache, FilenamesArePercentEncoded) {
  TempDir tmp;
  WikiCache cache(tmp / "cache");
  cache.put(WikiDoc{"news/site:8080", "X", "body", 0, true});
  EXPECT_TRUE(std::filesystem::exists(tmp / "cache" / "news%2Fsite%3A8080.json"));
  EXPECT_EQ(cache.domains(), std::vector<std::string>{"news/site:8080"});
  EXPECT_EQ(percent_decode(percent_encode("a b/ç")), "a b/ç");
}

TEST(WikiCache, RejectsInconsistentEntry) {
  TempDir tmp;
  tmp.write("cache/bad.com.json", R"({"domain":"bad.com","title":"","body":"","fetched_at":0,"found":true})");
  WikiCache cache(tmp / "cache");
  EXPECT_ERROR_CODE(cache.get("bad.com"), ErrorCode::MalformedRecord);
}

TEST(IngestWiki, CompleteCacheMakesNoSourceCalls) {
  TempDir tmp;
  OfflineFixtureSource inner(make_fixtures(tmp));
  CountingSource src(inner);
  WikiCache cache(tmp / "cache");
  const std::vector<std::string> domains = {"cnn.com", "foxnews.com", "gone.com", "unknown.org"};
  const auto first = ingest_wiki(domains, {{"unknown.org", "CNN"}}, &src, cache, {.retry = no_sleep()});
  EXPECT_EQ(first.resolved, 3u);
  EXPECT_EQ(first.not_found, 1u);
  for (const auto& d : domains) EXPECT_TRUE(cache.contains(d)) << d;

  const int searches = src.searches;
  const int fetches = src.fetches;
  const auto second = ingest_wiki(domains, {}, &src, cache, {.retry = no_sleep()});
  EXPECT_EQ(second.source_calls, 0u);
  EXPECT_EQ(src.searches, searches);
  EXPECT_EQ(src.fetches, fetches);
  EXPECT_EQ(second.resolved, 3u);
}

TEST(IngestWiki, ParallelIngestCoversEveryDomain) {
  TempDir tmp;
  FlakySource src(0);
  WikiCache cache(tmp / "cache");
  std::vector<std::string> domains;
  for (int i = 0; i < 64; ++i) domains.push_back("d" + std::to_string(i) + ".net");
  const auto report = ingest_wiki(domains, {}, &src, cache, {.parallelism = 8, .retry = no_sleep()});
  EXPECT_EQ(report.resolved, 64u);
  EXPECT_EQ(cache.domains().size(), 64u);
}

TEST(IngestWiki, PersistentFailuresAreListed) {
  TempDir tmp;
  FlakySource src(1000);
  WikiCache cache(tmp / "cache");
  const auto report = ingest_wiki({"a.com", "b.com"}, {}, &src, cache, {.parallelism = 1, .retry = no_sleep()});
  EXPECT_EQ(report.failed, (std::vector<std::string>{"a.com", "b.com"}));
  EXPECT_EQ(report.resolved + report.not_found, 0u);
}

TEST(RateLimiter, SpacesRequests) {
  RateLimiter limiter(std::chrono::milliseconds(20));
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(60));
}

TEST(StripMarkup, KeepsParagraphText) {
  EXPECT_EQ(strip_wiki_markup("Plain text."), "Plain text.");
  EXPECT_EQ(strip_wiki_markup("See [http://x.org the site] and [[A|B]] <!-- hidden -->."), "See the site and B .");
  EXPECT_EQ(strip_wiki_markup("{| class=wikitable\n| a || b\n|}\nAfter table."), "After table.");
  EXPECT_EQ(strip_wiki_markup("* item one\n* item two"), "item one\nitem two");
}

TEST(Overrides, LoadsAndNormalizes) {
  TempDir tmp;
  const auto p = tmp.write("o.json", R"({" CNN.com ": "CNN"})");
  EXPECT_EQ(load_overrides(p).at("cnn.com"), "CNN");
  EXPECT_ERROR_CODE(load_overrides(tmp.write("bad.json", "[1]")), ErrorCode::MalformedRecord);
}

}  // namespace
}  // namespace newslean
