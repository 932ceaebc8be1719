#pragma once

#include <string>
#include <string_view>

#include "newslean/error.hpp"
#include "newslean/linalg.hpp"
#include "newslean/nn.hpp"
#include "newslean/random.hpp"
#include "newslean/text.hpp"

namespace newslean {

enum class TopicEncoderMode { None, Encoder, Autoencoder };

constexpr std::string_view to_string(TopicEncoderMode m) {
  switch (m) {
    case TopicEncoderMode::None: return "none";
    case TopicEncoderMode::Encoder: return "encoder";
    case TopicEncoderMode::Autoencoder: return "autoencoder";
  }
  return "?";
}

inline TopicEncoderMode parse_topic_encoder(std::string_view s) {
  const std::string v = to_lower(s);
  if (v == "none") return TopicEncoderMode::None;
  if (v == "encoder" || v == "e") return TopicEncoderMode::Encoder;
  if (v == "autoencoder" || v == "ae") return TopicEncoderMode::Autoencoder;
  throw Error(ErrorCode::InvalidArgument, "unknown topic encoder '" + v + "'");
}

struct EncoderConfig {
  int in_dim = 300;
  int out_dim = 200;
  int hidden_dim = 256;
  bool autoencoder = false;
  double recon_weight = 1.0;

  void validate() const {
    if (in_dim <= 0 || out_dim <= 0 || hidden_dim <= 0) {
      throw Error(ErrorCode::InvalidArgument, "encoder dimensions must be positive");
    }
    if (out_dim >= in_dim) throw Error(ErrorCode::InvalidArgument, "encoder out_dim must be < in_dim");
    if (hidden_dim < out_dim) throw Error(ErrorCode::InvalidArgument, "encoder hidden_dim must be >= out_dim");
    if (recon_weight < 0) throw Error(ErrorCode::InvalidArgument, "recon_weight must be >= 0");
  }
};

// Intermediate values of one forward pass, needed by backward().
struct EncoderTrace {
  Vec input;
  Vec enc_pre;   // first affine, before rectifier
  Vec enc_hid;   // after rectifier
  Vec code;
  Vec dec_pre;   // autoencoder only
  Vec dec_hid;
  Vec recon;
};

// Two affine maps around a rectifier (encoder); the autoencoder mirrors the
// same shape back to the input width.
class TopicEncoder {
 public:
  TopicEncoder() = default;

  TopicEncoder(const EncoderConfig& config, Rng& rng) : config_(config) {
    config_.validate();
    enc1_ = Affine::init_uniform(config.in_dim, config.hidden_dim, rng);
    enc2_ = Affine::init_uniform(config.hidden_dim, config.out_dim, rng);
    if (config.autoencoder) {
      dec1_ = Affine::init_uniform(config.out_dim, config.hidden_dim, rng);
      dec2_ = Affine::init_uniform(config.hidden_dim, config.in_dim, rng);
    }
  }

  // All-zero parameters, for hand-set tests.
  static TopicEncoder zeros(const EncoderConfig& config) {
    config.validate();
    TopicEncoder e;
    e.config_ = config;
    e.enc1_ = Affine(config.in_dim, config.hidden_dim);
    e.enc2_ = Affine(config.hidden_dim, config.out_dim);
    if (config.autoencoder) {
      e.dec1_ = Affine(config.out_dim, config.hidden_dim);
      e.dec2_ = Affine(config.hidden_dim, config.in_dim);
    }
    return e;
  }

  const EncoderConfig& config() const { return config_; }
  Affine& enc1() { return enc1_; }
  Affine& enc2() { return enc2_; }
  Affine& dec1() { return dec1_; }
  Affine& dec2() { return dec2_; }
  const Affine& enc1() const { return enc1_; }
  const Affine& enc2() const { return enc2_; }
  const Affine& dec1() const { return dec1_; }
  const Affine& dec2() const { return dec2_; }

  EncoderTrace forward(const Vec& v) const {
    require_dims(static_cast<std::size_t>(v.size()), static_cast<std::size_t>(config_.in_dim),
                 "encoder input");
    EncoderTrace t;
    t.input = v;
    t.enc_pre = enc1_.forward(v);
    t.enc_hid = relu(t.enc_pre);
    t.code = enc2_.forward(t.enc_hid);
    if (config_.autoencoder) {
      t.dec_pre = dec1_.forward(t.code);
      t.dec_hid = relu(t.dec_pre);
      t.recon = dec2_.forward(t.dec_hid);
    }
    return t;
  }

  Vec encode(const Vec& v) const { return forward(v).code; }

  std::pair<Vec, Vec> autoencode(const Vec& v) const {
    if (!config_.autoencoder) {
      throw Error(ErrorCode::InvalidArgument, "autoencode on an encoder without decoder");
    }
    auto t = forward(v);
    return {std::move(t.code), std::move(t.recon)};
  }

  // grad_code: dL/dcode from downstream. grad_recon: dL/drecon (ignored
  // unless autoencoder). Accumulates parameter gradients.
  void backward(const EncoderTrace& t, const Vec& grad_code, const Vec* grad_recon = nullptr) {
    Vec g_code = grad_code;
    if (config_.autoencoder && grad_recon != nullptr) {
      Vec g = dec2_.backward(t.dec_hid, *grad_recon);
      g = relu_backward(t.dec_pre, g);
      g_code += dec1_.backward(t.code, g);
    }
    Vec g = enc2_.backward(t.enc_hid, g_code);
    g = relu_backward(t.enc_pre, g);
    enc1_.backward(t.input, g);
  }

  template <typename Fn>
  void for_each_layer(Fn&& fn) {
    fn(enc1_);
    fn(enc2_);
    if (config_.autoencoder) {
      fn(dec1_);
      fn(dec2_);
    }
  }

 private:
  EncoderConfig config_;
  Affine enc1_, enc2_, dec1_, dec2_;
};

// Mean squared error over components.
inline double reconstruction_loss(const Vec& v, const Vec& recon) {
  require_dims(static_cast<std::size_t>(recon.size()), static_cast<std::size_t>(v.size()),
               "reconstruction");
  if (v.size() == 0) return 0.0;
  return (v - recon).squaredNorm() / static_cast<double>(v.size());
}

inline Vec reconstruction_loss_grad(const Vec& v, const Vec& recon) {
  require_dims(static_cast<std::size_t>(recon.size()), static_cast<std::size_t>(v.size()),
               "reconstruction");
  return 2.0 * (recon - v) / static_cast<double>(v.size());
}

}  // namespace newslean
