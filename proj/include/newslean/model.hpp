#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "newslean/backbone.hpp"
#include "newslean/encoders.hpp"
#include "newslean/error.hpp"
#include "newslean/fusion.hpp"
#include "newslean/linalg.hpp"
#include "newslean/random.hpp"

namespace newslean {

enum class MissingWiki { EmptyText, ZeroVector };

constexpr std::string_view to_string(MissingWiki m) {
  return m == MissingWiki::EmptyText ? "empty_text" : "zero_vector";
}

inline MissingWiki parse_missing_wiki(std::string_view s) {
  if (s == "empty_text") return MissingWiki::EmptyText;
  if (s == "zero_vector") return MissingWiki::ZeroVector;
  throw Error(ErrorCode::InvalidArgument, "unknown missing_wiki mode '" + std::string(s) + "'");
}

// Defaults are the published training setup: batch 2, Adam, lr 1e-6, 3 epochs.
struct TrainConfig {
  std::string experiment_id = "default";
  BackboneOptions backbone;
  TopicEncoderMode topic_encoder = TopicEncoderMode::Encoder;
  int topic_dim = 200;       // r
  int encoder_hidden = 256;
  bool use_news = true;
  bool use_wiki = true;
  double beta = 0.5;
  int batch_size = 2;
  double learning_rate = 1e-6;
  int epochs = 3;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  double recon_weight = 1.0;
  HeadMode head = HeadMode::ReluLinear;
  MissingWiki missing_wiki = MissingWiki::EmptyText;

  bool uses_topics() const { return topic_encoder != TopicEncoderMode::None; }

  void validate() const {
    require_beta(beta);
    if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
    if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
    if (!(learning_rate > 0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
    if (optimizer != "adam") throw Error(ErrorCode::InvalidArgument, "only the adam optimizer is supported");
    if (!use_news && !use_wiki && !uses_topics()) {
      throw Error(ErrorCode::InvalidArgument, "at least one representation must be enabled");
    }
    if (recon_weight < 0) throw Error(ErrorCode::InvalidArgument, "recon_weight must be >= 0");
  }
};

inline json to_json(const TrainConfig& c) {
  return json{{"experiment_id", c.experiment_id},
              {"backbone", c.backbone.name},
              {"stub_hidden", c.backbone.stub_hidden},
              {"buckets", c.backbone.buckets},
              {"max_tokens", c.backbone.max_tokens},
              {"topic_encoder", std::string(to_string(c.topic_encoder))},
              {"topic_dim", c.topic_dim},
              {"encoder_hidden", c.encoder_hidden},
              {"use_news", c.use_news},
              {"use_wiki", c.use_wiki},
              {"beta", c.beta},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"optimizer", c.optimizer},
              {"seed", c.seed},
              {"recon_weight", c.recon_weight},
              {"head", std::string(to_string(c.head))},
              {"missing_wiki", std::string(to_string(c.missing_wiki))}};
}

// Keys absent from j keep the values already in base.
inline TrainConfig train_config_from_json(const json& j, TrainConfig base = {}) {
  try {
    TrainConfig c = std::move(base);
    c.experiment_id = j.value("experiment_id", c.experiment_id);
    c.backbone.name = j.value("backbone", c.backbone.name);
    c.backbone.stub_hidden = j.value("stub_hidden", c.backbone.stub_hidden);
    c.backbone.buckets = j.value("buckets", c.backbone.buckets);
    c.backbone.max_tokens = j.value("max_tokens", c.backbone.max_tokens);
    if (j.contains("topic_encoder")) c.topic_encoder = parse_topic_encoder(j.at("topic_encoder").get<std::string>());
    c.topic_dim = j.value("topic_dim", c.topic_dim);
    c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
    c.use_news = j.value("use_news", c.use_news);
    c.use_wiki = j.value("use_wiki", c.use_wiki);
    c.beta = j.value("beta", c.beta);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.optimizer = j.value("optimizer", c.optimizer);
    c.seed = j.value("seed", c.seed);
    c.recon_weight = j.value("recon_weight", c.recon_weight);
    if (j.contains("head")) c.head = parse_head_mode(j.at("head").get<std::string>());
    if (j.contains("missing_wiki")) c.missing_wiki = parse_missing_wiki(j.at("missing_wiki").get<std::string>());
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("train config: ") + e.what());
  }
}

// Everything the model needs to score one article.
struct ArticleInputs {
  std::string text;                     // title + "\n" + body
  std::optional<std::string> wiki_text;  // nullopt: publisher has no page
  Vec topic_mean;                       // embed_dim; unused without topics
};

struct ForwardTrace {
  TokenRows article_rows;
  std::optional<TokenRows> wiki_rows;
  std::optional<EncoderTrace> topic;
  Vec delta, omega, tau;
  HeadTrace head;
  double recon_loss = 0.0;
};

// Backbone (shared by article and wiki text) + topic encoder + head.
//
// With every source enabled theta = [delta, beta*omega, (1-beta)*tau], p = 2q + r.
// Ablations drop the disabled blocks; beta only weighs the two knowledge
// blocks against each other, so a lone knowledge block keeps weight 1.
class FusionModel {
 public:
  FusionModel() = default;

  FusionModel(TrainConfig config, int embed_dim) : config_(std::move(config)), embed_dim_(embed_dim) {
    config_.validate();
    backbone_ = HashBackbone(config_.backbone);
    Rng rng(mix64(config_.seed));
    if (config_.uses_topics()) {
      EncoderConfig ec;
      ec.in_dim = embed_dim;
      ec.out_dim = config_.topic_dim;
      ec.hidden_dim = config_.encoder_hidden;
      ec.autoencoder = config_.topic_encoder == TopicEncoderMode::Autoencoder;
      ec.recon_weight = config_.recon_weight;
      encoder_ = TopicEncoder(ec, rng);
    }
    head_ = ClassifierHead::init_uniform(theta_dim(), config_.head, rng);
  }

  const TrainConfig& config() const { return config_; }
  int embed_dim() const { return embed_dim_; }
  int q() const { return backbone_.hidden(); }
  int r() const { return config_.uses_topics() ? config_.topic_dim : 0; }
  HashBackbone& backbone() { return backbone_; }
  const HashBackbone& backbone() const { return backbone_; }
  std::optional<TopicEncoder>& encoder() { return encoder_; }
  ClassifierHead& head() { return head_; }
  const ClassifierHead& head() const { return head_; }

  Eigen::Index theta_dim() const {
    const int q = backbone_.hidden() > 0 ? backbone_.hidden() : backbone_width(config_.backbone);
    return (config_.use_news ? q : 0) + (config_.use_wiki ? q : 0) + r();
  }

  double wiki_weight() const { return config_.uses_topics() ? config_.beta : 1.0; }
  double topic_weight() const { return config_.use_wiki ? 1.0 - config_.beta : 1.0; }

  // Wikipedia vector for a publisher (pure; used for per-domain reuse at eval).
  Vec wiki_vector(const std::optional<std::string>& wiki_text) const {
    if (!wiki_text && config_.missing_wiki == MissingWiki::ZeroVector) return Vec::Zero(q());
    return backbone_.encode(wiki_text.value_or(""));
  }

  ForwardTrace forward(const ArticleInputs& in, const Vec* cached_omega = nullptr) const {
    ForwardTrace t;
    const int q = this->q();
    if (config_.use_news) {
      t.article_rows = backbone_.tokenize_rows(in.text);
      t.delta = backbone_.pool(t.article_rows);
    }
    if (config_.use_wiki) {
      if (cached_omega != nullptr) {
        t.omega = *cached_omega;
      } else if (!in.wiki_text && config_.missing_wiki == MissingWiki::ZeroVector) {
        t.omega = Vec::Zero(q);
      } else {
        t.wiki_rows = backbone_.tokenize_rows(in.wiki_text.value_or(""));
        t.omega = backbone_.pool(*t.wiki_rows);
      }
    }
    if (encoder_) {
      t.topic = encoder_->forward(in.topic_mean);
      t.tau = t.topic->code;
      if (encoder_->config().autoencoder) t.recon_loss = reconstruction_loss(in.topic_mean, t.topic->recon);
    }

    Vec theta;
    if (config_.use_news && config_.use_wiki && encoder_) {
      theta = fuse(t.delta, t.omega, t.tau, config_.beta).theta;
    } else {
      theta.resize(theta_dim());
      Eigen::Index at = 0;
      if (config_.use_news) {
        theta.segment(at, q) = t.delta;
        at += q;
      }
      if (config_.use_wiki) {
        theta.segment(at, q) = wiki_weight() * t.omega;
        at += q;
      }
      if (encoder_) theta.segment(at, t.tau.size()) = topic_weight() * t.tau;
    }
    t.head = classify_trace(theta, head_);
    return t;
  }

  Vec scores(const ArticleInputs& in, const Vec* cached_omega = nullptr) const {
    return forward(in, cached_omega).head.scores;
  }

  // Accumulates gradients of scale * (CE(scores) + recon_weight * recon).
  void backward(const ForwardTrace& t, Leaning label, double scale) {
    const Vec g_scores = scale * loss_grad(t.head.scores, label);
    const Vec g_theta = classify_backward(head_, t.head, g_scores);
    const int q = this->q();
    Eigen::Index at = 0;
    if (config_.use_news) {
      backbone_.backward(t.article_rows, g_theta.segment(at, q));
      at += q;
    }
    if (config_.use_wiki) {
      if (t.wiki_rows) backbone_.backward(*t.wiki_rows, wiki_weight() * g_theta.segment(at, q));
      at += q;
    }
    if (encoder_) {
      const Vec g_tau = topic_weight() * g_theta.segment(at, r());
      if (encoder_->config().autoencoder) {
        const Vec g_recon = scale * encoder_->config().recon_weight *
                            reconstruction_loss_grad(t.topic->input, t.topic->recon);
        encoder_->backward(*t.topic, g_tau, &g_recon);
      } else {
        encoder_->backward(*t.topic, g_tau);
      }
    }
  }

  void zero_grad() {
    backbone_.zero_grad();
    if (encoder_) encoder_->for_each_layer([](Affine& a) { a.zero_grad(); });
    head_.linear.zero_grad();
  }

  void apply(Adam& opt) {
    opt.begin_step();
    backbone_.apply(opt);
    if (encoder_) encoder_->for_each_layer([&](Affine& a) { a.apply(opt); });
    head_.linear.apply(opt);
  }

  // Visits every parameter buffer in a fixed order (checkpoint layout).
  template <typename Fn>
  void for_each_buffer(Fn&& fn) {
    fn(backbone_.table().data(), static_cast<std::size_t>(backbone_.table().size()));
    auto visit = [&](Affine& a) {
      fn(a.weight.value.data(), static_cast<std::size_t>(a.weight.value.size()));
      fn(a.bias.value.data(), static_cast<std::size_t>(a.bias.value.size()));
    };
    if (encoder_) encoder_->for_each_layer(visit);
    visit(head_.linear);
  }

 private:
  TrainConfig config_;
  int embed_dim_ = 0;
  HashBackbone backbone_;
  std::optional<TopicEncoder> encoder_;
  ClassifierHead head_;
};

// ---------------------------------------------------------------------------
// Checkpoint: one JSON header line, then the parameter buffers as raw
// little-endian doubles in for_each_buffer order.

inline constexpr std::string_view kCheckpointFormat = "newslean-checkpoint/1";

inline void save_checkpoint(FusionModel& model, const std::filesystem::path& path,
                            const std::string& config_hash = "") {
  json header{{"format", std::string(kCheckpointFormat)},
              {"config", to_json(model.config())},
              {"beta", model.config().beta},
              {"embed_dim", model.embed_dim()},
              {"q", model.q()},
              {"r", model.r()},
              {"p", model.theta_dim()},
              {"config_hash", config_hash}};
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    out << header.dump() << '\n';
    model.for_each_buffer([&](const double* data, std::size_t n) {
      out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    });
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ResourceMissing, "checkpoint " + path.string() + " not found");
  std::string line;
  std::getline(in, line);
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != kCheckpointFormat) {
    throw Error(ErrorCode::MalformedRecord, path.string() + " is not a checkpoint");
  }
  return header;
}

inline FusionModel load_checkpoint(const std::filesystem::path& path) {
  const json header = read_checkpoint_header(path);
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::getline(in, line);
  FusionModel model(train_config_from_json(header.at("config")), header.at("embed_dim").get<int>());
  model.for_each_buffer([&](double* data, std::size_t n) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw Error(ErrorCode::MalformedRecord, path.string() + ": truncated parameters");
  });
  return model;
}

}  // namespace newslean
