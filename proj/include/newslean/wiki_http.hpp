#pragma once

// MediaWiki API client. Kept out of newslean.hpp so only the code that talks
// to the network pays for cpp-httplib.

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "newslean/error.hpp"
#include "newslean/wiki.hpp"

namespace newslean {

class MediaWikiSource : public WikiSource {
 public:
  // base_url like "https://en.wikipedia.org"; api_path is appended to it.
  explicit MediaWikiSource(std::string base_url, std::string api_path = "/w/api.php",
                           std::chrono::seconds timeout = std::chrono::seconds(20))
      : base_url_(std::move(base_url)), api_path_(std::move(api_path)), timeout_(timeout) {}

  std::optional<std::string> search(const std::string& domain) override {
    const json j = get({{"action", "query"},
                        {"list", "search"},
                        {"srsearch", domain},
                        {"srlimit", "1"},
                        {"format", "json"}});
    const auto& hits = j.value(json::json_pointer("/query/search"), json::array());
    if (!hits.is_array() || hits.empty()) return std::nullopt;
    return hits.front().value("title", std::string{});
  }

  FetchedPage fetch(const std::string& title) override {
    const json j = get({{"action", "query"},
                        {"prop", "extracts"},
                        {"explaintext", "1"},
                        {"redirects", "1"},
                        {"titles", title},
                        {"format", "json"}});
    const json pages = j.value(json::json_pointer("/query/pages"), json::object());
    for (const auto& [id, page] : pages.items()) {
      if (page.contains("missing") || page.contains("invalid")) break;
      std::string body = strip_wiki_markup(page.value("extract", std::string{}));
      if (body.empty()) break;
      return FetchedPage{true, page.value("title", title), std::move(body)};
    }
    return FetchedPage{false, title, ""};
  }

 private:
  json get(const httplib::Params& params) {
    std::lock_guard lock(mu_);
    if (!client_) {
      client_ = std::make_unique<httplib::Client>(base_url_);
      client_->set_connection_timeout(timeout_);
      client_->set_read_timeout(timeout_);
      client_->set_follow_location(true);
    }
    httplib::Headers headers = {{"User-Agent", "newslean/1.0 (research pipeline)"}};
    auto res = client_->Get(api_path_, params, headers);
    if (!res) {
      throw Error(ErrorCode::NetworkError, base_url_ + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
      throw Error(ErrorCode::NetworkError, base_url_ + ": HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::IoError, base_url_ + ": HTTP " + std::to_string(res->status));
    }
    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::NetworkError, "non-JSON API response");
    return j;
  }

  std::string base_url_;
  std::string api_path_;
  std::chrono::seconds timeout_;
  std::mutex mu_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace newslean
