#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "newslean/error.hpp"
#include "newslean/linalg.hpp"
#include "newslean/random.hpp"

namespace newslean {

// A dense trainable tensor with its gradient and Adam moments.
struct Param {
  Mat value;
  Mat grad;
  Mat m;
  Mat v;

  Param() = default;
  explicit Param(Mat init)
      : value(std::move(init)),
        grad(Mat::Zero(value.rows(), value.cols())),
        m(Mat::Zero(value.rows(), value.cols())),
        v(Mat::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

struct AdamOptions {
  double learning_rate = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. The step counter is shared by every tensor the
// optimizer owns; sparse tables use the same counter (lazy updates).
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : opt_(options) {}

  void begin_step() { ++t_; }
  std::int64_t steps() const { return t_; }
  const AdamOptions& options() const { return opt_; }

  // grad is read as-is (callers average over the batch first).
  void update(Param& p) const {
    p.m = opt_.beta1 * p.m + (1.0 - opt_.beta1) * p.grad;
    p.v = opt_.beta2 * p.v + (1.0 - opt_.beta2) * p.grad.cwiseProduct(p.grad);
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    p.value.array() -= opt_.learning_rate * (p.m.array() / c1) /
                       ((p.v.array() / c2).sqrt() + opt_.eps);
  }

  // Row-wise update of a row-major table; only the listed rows move.
  void update_rows(RowMat& value, const RowMat& grad, RowMat& m, RowMat& v,
                   std::span<const Eigen::Index> rows) const {
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (Eigen::Index r : rows) {
      m.row(r) = opt_.beta1 * m.row(r) + (1.0 - opt_.beta1) * grad.row(r);
      v.row(r) = opt_.beta2 * v.row(r) + (1.0 - opt_.beta2) * grad.row(r).cwiseProduct(grad.row(r));
      value.row(r).array() -= opt_.learning_rate * (m.row(r).array() / c1) /
                              ((v.row(r).array() / c2).sqrt() + opt_.eps);
    }
  }

 private:
  AdamOptions opt_;
  std::int64_t t_ = 0;
};

// y = W x + b
struct Affine {
  Param weight;  // out x in
  Param bias;    // out x 1

  Affine() = default;
  Affine(Eigen::Index in, Eigen::Index out)
      : weight(Mat::Zero(out, in)), bias(Mat::Zero(out, 1)) {}

  // Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and biases.
  static Affine init_uniform(Eigen::Index in, Eigen::Index out, Rng& rng) {
    Affine a(in, out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) a.weight.value(r, c) = rng.uniform(-bound, bound);
    }
    for (Eigen::Index r = 0; r < out; ++r) a.bias.value(r, 0) = rng.uniform(-bound, bound);
    return a;
  }

  Eigen::Index in_dim() const { return weight.value.cols(); }
  Eigen::Index out_dim() const { return weight.value.rows(); }

  Vec forward(const Vec& x) const {
    require_dims(static_cast<std::size_t>(x.size()), static_cast<std::size_t>(in_dim()), "affine input");
    return weight.value * x + bias.value.col(0);
  }

  // Accumulates parameter gradients; returns dL/dx.
  Vec backward(const Vec& x, const Vec& grad_out) {
    weight.grad.noalias() += grad_out * x.transpose();
    bias.grad.col(0) += grad_out;
    return weight.value.transpose() * grad_out;
  }

  void zero_grad() {
    weight.zero_grad();
    bias.zero_grad();
  }

  void scale_grad(double s) {
    weight.grad *= s;
    bias.grad *= s;
  }

  void apply(const Adam& opt) {
    opt.update(weight);
    opt.update(bias);
  }
};

inline Vec relu_backward(const Vec& pre, const Vec& grad_out) {
  return (pre.array() > 0.0).select(grad_out, 0.0);
}

}  // namespace newslean
