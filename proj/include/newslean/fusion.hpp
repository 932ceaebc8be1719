#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "newslean/corpus.hpp"
#include "newslean/error.hpp"
#include "newslean/linalg.hpp"
#include "newslean/nn.hpp"
#include "newslean/random.hpp"

namespace newslean {

struct RepresentationBundle {
  Vec delta;   // base article representation, q
  Vec omega;   // publisher Wikipedia representation, q
  Vec tau;     // topic representation, r
  Vec lambda;  // [beta * omega, (1 - beta) * tau], q + r
  Vec theta;   // [delta, lambda], 2q + r
};

inline void require_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::BetaOutOfRange, "beta=" + std::to_string(beta) + " not in [0, 1]");
  }
}

// Weighted knowledge vector concatenated onto the base representation.
inline RepresentationBundle fuse(const Vec& delta, const Vec& omega, const Vec& tau, double beta) {
  require_beta(beta);
  require_dims(static_cast<std::size_t>(omega.size()), static_cast<std::size_t>(delta.size()),
               "omega vs delta width");
  RepresentationBundle b;
  b.delta = delta;
  b.omega = omega;
  b.tau = tau;
  const auto q = delta.size();
  const auto r = tau.size();
  b.lambda.resize(q + r);
  b.lambda.head(q) = beta * omega;
  b.lambda.tail(r) = (1.0 - beta) * tau;
  b.theta.resize(2 * q + r);
  b.theta.head(q) = delta;
  b.theta.tail(q + r) = b.lambda;
  return b;
}

enum class HeadMode { ReluLinear, PlainLinear };

constexpr std::string_view to_string(HeadMode m) {
  return m == HeadMode::ReluLinear ? "relu_linear" : "plain_linear";
}

inline HeadMode parse_head_mode(std::string_view s) {
  if (s == "relu_linear") return HeadMode::ReluLinear;
  if (s == "plain_linear") return HeadMode::PlainLinear;
  throw Error(ErrorCode::InvalidArgument, "unknown head mode '" + std::string(s) + "'");
}

// Rectified scores start at zero gradient wherever W theta + b < 0; a class
// whose score is dead for every input never recovers. Shifting the initial
// biases up keeps all three scores active when training starts.
inline constexpr double kReluBiasShift = 0.5;

// scores = rectify(W theta + b) (ReluLinear) or W theta + b (PlainLinear).
struct ClassifierHead {
  Affine linear;
  HeadMode mode = HeadMode::ReluLinear;

  ClassifierHead() = default;
  ClassifierHead(Eigen::Index p, HeadMode m) : linear(p, kNumClasses), mode(m) {}

  static ClassifierHead init_uniform(Eigen::Index p, HeadMode m, Rng& rng) {
    ClassifierHead h;
    h.linear = Affine::init_uniform(p, kNumClasses, rng);
    if (m == HeadMode::ReluLinear) h.linear.bias.value.array() += kReluBiasShift;
    h.mode = m;
    return h;
  }

  Eigen::Index input_dim() const { return linear.in_dim(); }
  Mat& weight() { return linear.weight.value; }
  Vec bias() const { return linear.bias.value.col(0); }
  void set_bias(const Vec& b) { linear.bias.value.col(0) = b; }
};

struct HeadTrace {
  Vec theta;
  Vec pre;
  Vec scores;
};

inline HeadTrace classify_trace(const Vec& theta, const ClassifierHead& head) {
  require_dims(static_cast<std::size_t>(theta.size()), static_cast<std::size_t>(head.input_dim()),
               "theta width");
  HeadTrace t;
  t.theta = theta;
  t.pre = head.linear.forward(theta);
  t.scores = head.mode == HeadMode::ReluLinear ? relu(t.pre) : t.pre;
  return t;
}

inline Vec classify(const Vec& theta, const ClassifierHead& head) {
  return classify_trace(theta, head).scores;
}

// argmax, ties resolved toward the lowest index.
inline Leaning predict(const Vec& scores) {
  require_dims(static_cast<std::size_t>(scores.size()), kNumClasses, "scores");
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k) {
    if (scores(k) > scores(best)) best = k;
  }
  return static_cast<Leaning>(best);
}

inline Vec softmax(const Vec& scores) {
  const double mx = scores.maxCoeff();
  Vec e = (scores.array() - mx).exp();
  return e / e.sum();
}

// Cross entropy of softmax(scores) against the one-hot label.
inline double loss(const Vec& scores, Leaning label) {
  require_dims(static_cast<std::size_t>(scores.size()), kNumClasses, "scores");
  const double mx = scores.maxCoeff();
  const double lse = mx + std::log((scores.array() - mx).exp().sum());
  return lse - scores(code(label));
}

inline Vec loss_grad(const Vec& scores, Leaning label) {
  Vec g = softmax(scores);
  g(code(label)) -= 1.0;
  return g;
}

inline double batch_loss(std::span<const Vec> scores, std::span<const Leaning> labels) {
  require_dims(labels.size(), scores.size(), "batch labels");
  if (scores.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += loss(scores[i], labels[i]);
  return sum / static_cast<double>(scores.size());
}

// Accumulates head gradients for dL/dscores; returns dL/dtheta.
inline Vec classify_backward(ClassifierHead& head, const HeadTrace& t, const Vec& grad_scores) {
  Vec g_pre = head.mode == HeadMode::ReluLinear ? relu_backward(t.pre, grad_scores) : grad_scores;
  return head.linear.backward(t.theta, g_pre);
}

}  // namespace newslean
