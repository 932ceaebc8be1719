#pragma once

// Synthetic news / Wikipedia / debate corpora for tests. Labels follow the
// publisher; each publisher has private "brand" tokens that make its articles
// easy to memorize, articles carry a few noisy leaning-specific topic words,
// and publisher wiki pages describe the outlet's leaning.

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "newslean/corpus.hpp"
#include "newslean/random.hpp"
#include "newslean/topics.hpp"
#include "newslean/wiki.hpp"

namespace newslean::testing {

struct SyntheticOptions {
  int domains = 30;
  int articles_per_domain = 20;
  int filler_words = 40;
  int brand_tokens = 6;        // per article, from the publisher's private set
  int topic_tokens = 3;        // per article
  double topic_noise = 0.5;    // chance a topic word comes from a random leaning
  double wiki_missing = 0.1;   // fraction of publishers without a page
  int speeches_per_party = 60;
  std::uint64_t seed = 7;
};

inline const std::array<std::vector<std::string>, 3>& topic_lexicon() {
  static const std::array<std::vector<std::string>, 3> lex = {{
      {"healthcare", "climate", "unions", "equality", "medicare", "renewable", "wages", "immigrants",
       "childcare", "voting"},
      {"budget", "bipartisan", "infrastructure", "compromise", "deficit", "trade", "bridges", "broadband",
       "pensions", "agriculture"},
      {"border", "taxes", "military", "firearms", "deregulation", "liberty", "police", "enterprise",
       "tariffs", "sovereignty"},
  }};
  return lex;
}

inline const std::array<std::vector<std::string>, 3>& wiki_descriptors() {
  static const std::array<std::vector<std::string>, 3> d = {{
      {"progressive", "liberal", "leftleaning", "socialdemocratic"},
      {"centrist", "nonpartisan", "neutral", "mainstream"},
      {"conservative", "rightwing", "traditionalist", "nationalist"},
  }};
  return d;
}

inline std::string nonce_word(Rng& rng, int syllables) {
  static const char* kSyl[] = {"ka", "zo", "ri", "mu", "te", "lo", "vi", "na", "qu", "ex",
                               "pa", "dro", "sil", "ven", "tar", "gol", "bri", "fen", "hu", "yo"};
  std::string w;
  for (int i = 0; i < syllables; ++i) w += kSyl[rng.index(20)];
  return w;
}

struct SyntheticWorld {
  Corpus corpus;
  std::vector<DebateSpeech> speeches;
  std::vector<std::string> domains;
  std::vector<Leaning> domain_leaning;
  std::vector<bool> has_wiki;
  std::vector<std::string> wiki_titles;
  std::vector<std::string> wiki_bodies;
};

inline SyntheticWorld make_world(const SyntheticOptions& o) {
  Rng rng(o.seed);
  SyntheticWorld w;
  std::vector<std::string> filler;
  for (int i = 0; i < 300; ++i) filler.push_back("w" + std::to_string(i) + nonce_word(rng, 1));

  std::vector<Article> articles;
  for (int d = 0; d < o.domains; ++d) {
    const auto lean = static_cast<Leaning>(d % 3);
    const std::string brand_root = nonce_word(rng, 3);
    const std::string domain = brand_root + std::to_string(d) + ".com";
    w.domains.push_back(domain);
    w.domain_leaning.push_back(lean);
    w.has_wiki.push_back(rng.uniform() >= o.wiki_missing);
    w.wiki_titles.push_back(brand_root + " News " + std::to_string(d));

    std::vector<std::string> brand;
    for (int b = 0; b < 8; ++b) brand.push_back(brand_root + nonce_word(rng, 2));

    std::string wiki = w.wiki_titles.back() + " is an American news outlet. ";
    for (int s = 0; s < 4; ++s) {
      const auto& desc = wiki_descriptors()[code(lean)];
      wiki += "It is described as " + desc[rng.index(desc.size())] + " and " + desc[rng.index(desc.size())] + ". ";
      for (int f = 0; f < 6; ++f) wiki += filler[rng.index(filler.size())] + " ";
      wiki += brand[0] + ".\n";
    }
    w.wiki_bodies.push_back(wiki);

    for (int a = 0; a < o.articles_per_domain; ++a) {
      std::vector<std::string> words;
      for (int f = 0; f < o.filler_words; ++f) words.push_back(filler[rng.index(filler.size())]);
      for (int b = 0; b < o.brand_tokens; ++b) words.push_back(brand[rng.index(brand.size())]);
      for (int t = 0; t < o.topic_tokens; ++t) {
        const int from = rng.uniform() < o.topic_noise ? static_cast<int>(rng.index(3)) : code(lean);
        const auto& lex = topic_lexicon()[from];
        words.push_back(lex[rng.index(lex.size())]);
      }
      rng.shuffle(std::span(words));
      std::string body;
      for (const auto& word : words) body += word + " ";
      Article art;
      art.id = "a" + std::to_string(d) + "_" + std::to_string(a);
      art.domain = domain;
      art.title = filler[rng.index(filler.size())] + " " + brand[0];
      art.body = body + ".";
      art.label = lean;
      articles.push_back(std::move(art));
    }
  }
  w.corpus = Corpus(std::move(articles));

  std::vector<std::string> political;
  for (int i = 0; i < 60; ++i) political.push_back("p" + std::to_string(i) + nonce_word(rng, 1));
  for (int party = 0; party < 2; ++party) {
    const int lean = party == 0 ? 0 : 2;
    for (int s = 0; s < o.speeches_per_party; ++s) {
      std::string text;
      for (int k = 0; k < 40; ++k) {
        const double u = rng.uniform();
        const std::vector<std::string>* src = &political;
        if (u < 0.35) src = &topic_lexicon()[lean];
        else if (u < 0.45) src = &topic_lexicon()[1];
        text += (*src)[rng.index(src->size())] + " ";
      }
      w.speeches.push_back(DebateSpeech{"s" + std::to_string(party) + "_" + std::to_string(s),
                                        party == 0 ? "Candidate D" : "Candidate R",
                                        party == 0 ? Party::Democrat : Party::Republican, text});
    }
  }
  return w;
}

// Writes a wiki snapshot directory (index.json + pages/) for OfflineFixtureSource.
inline void write_wiki_fixtures(const SyntheticWorld& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "pages");
  json index = json::object();
  for (std::size_t i = 0; i < w.domains.size(); ++i) {
    if (!w.has_wiki[i]) continue;
    index[w.domains[i]] = w.wiki_titles[i];
    std::ofstream(dir / "pages" / (percent_encode(w.wiki_titles[i]) + ".txt")) << w.wiki_bodies[i];
  }
  std::ofstream(dir / "index.json") << index.dump(2);
}

inline void write_debates(const SyntheticWorld& w, const std::filesystem::path& path) {
  std::ofstream out(path);
  for (const auto& s : w.speeches) {
    out << json{{"id", s.id}, {"speaker", s.speaker}, {"party", std::string(to_string(s.party))}, {"text", s.text}}
               .dump()
        << '\n';
  }
}

// Fills a cache straight from the generated pages.
inline void fill_wiki_cache(const SyntheticWorld& w, WikiCache& cache) {
  for (std::size_t i = 0; i < w.domains.size(); ++i) {
    WikiDoc doc{w.domains[i], w.has_wiki[i] ? w.wiki_titles[i] : "", w.has_wiki[i] ? trim(w.wiki_bodies[i]) : "",
                0, static_cast<bool>(w.has_wiki[i])};
    cache.put(doc);
  }
}

}  // namespace newslean::testing
