#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "newslean/corpus.hpp"
#include "newslean/error.hpp"
#include "newslean/linalg.hpp"
#include "newslean/skipgram.hpp"
#include "newslean/text.hpp"

namespace newslean {

enum class Party { Democrat, Republican };

constexpr std::string_view to_string(Party p) {
  return p == Party::Democrat ? "democrat" : "republican";
}

inline std::optional<Party> parse_party(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "democrat" || v == "democratic") return Party::Democrat;
  if (v == "republican") return Party::Republican;
  return std::nullopt;
}

struct DebateSpeech {
  std::string id;
  std::string speaker;
  Party party = Party::Democrat;
  std::string text;
};

struct DebateCorpus {
  std::vector<DebateSpeech> speeches;
  std::size_t democrat = 0;
  std::size_t republican = 0;
};

inline DebateCorpus load_debates(const std::filesystem::path& path) {
  DebateCorpus corpus;
  detail::for_each_jsonl(path, [&](const json& rec, std::size_t line) {
    DebateSpeech s;
    s.id = detail::require_string(rec, "id", line);
    s.speaker = detail::require_string(rec, "speaker", line);
    const std::string& party = detail::require_string(rec, "party", line);
    s.text = detail::require_string(rec, "text", line);
    auto parsed = parse_party(party);
    if (!parsed) {
      throw Error(ErrorCode::UnknownParty, "line " + std::to_string(line) + ": '" + party + "'");
    }
    if (trim(s.text).empty()) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": empty text");
    }
    s.party = *parsed;
    (s.party == Party::Democrat ? corpus.democrat : corpus.republican) += 1;
    corpus.speeches.push_back(std::move(s));
  });
  return corpus;
}

// One model over all speeches; party is deliberately ignored.
inline WordEmbeddingModel train_topic_embeddings(const std::vector<DebateSpeech>& speeches,
                                                 const SkipGramParams& params) {
  if (speeches.empty()) throw Error(ErrorCode::EmptyCorpus, "no debate speeches");
  std::vector<std::vector<std::string>> docs;
  docs.reserve(speeches.size());
  for (const auto& s : speeches) docs.push_back(tokenize(s.text));
  return train_skipgram(docs, params);
}

struct TopicSet {
  std::string article_id;
  std::vector<std::string> topics;  // in article order, duplicates kept
};

// Topics are the article's content words that the debate vocabulary knows.
inline TopicSet extract_topics(const Article& article, const WordEmbeddingModel& model,
                               const std::unordered_set<std::string>& stopwords) {
  TopicSet out{article.id, {}};
  for (const std::string& text : {article.title, article.body}) {
    for (auto& tok : tokenize(text)) {
      if (!stopwords.contains(tok) && model.contains(tok)) out.topics.push_back(std::move(tok));
    }
  }
  return out;
}

// Mean word vector of the topics; the zero vector when there are none.
inline Vec topic_mean_vector(const TopicSet& topic_set, const WordEmbeddingModel& model) {
  Vec sum = Vec::Zero(static_cast<Eigen::Index>(model.dim()));
  if (topic_set.topics.empty()) return sum;
  for (const auto& t : topic_set.topics) {
    auto idx = model.index_of(t);
    if (!idx) throw Error(ErrorCode::InvalidArgument, "topic '" + t + "' not in vocabulary");
    sum += model.matrix().row(static_cast<Eigen::Index>(*idx)).transpose();
  }
  return sum / static_cast<double>(topic_set.topics.size());
}

}  // namespace newslean
