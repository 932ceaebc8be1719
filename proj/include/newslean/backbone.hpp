#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "newslean/error.hpp"
#include "newslean/linalg.hpp"
#include "newslean/nn.hpp"
#include "newslean/random.hpp"
#include "newslean/text.hpp"

namespace newslean {

struct BackboneSpec {
  std::string_view name;
  int hidden;  // q
};

// Published hidden widths of the supported encoder families.
inline constexpr std::array<BackboneSpec, 3> kKnownBackbones = {{
    {"bert-base", 768},
    {"roberta-base", 768},
    {"distilbert-base", 768},
}};

struct BackboneOptions {
  std::string name = "bert-base";
  // Width for name == "stub"; ignored for named families.
  int stub_hidden = 768;
  int buckets = 4096;
  int max_tokens = 512;
  double init_scale = 1.0;
};

inline int backbone_width(const BackboneOptions& o) {
  if (o.name == "stub") return o.stub_hidden;
  for (const auto& spec : kKnownBackbones) {
    if (spec.name == o.name) return spec.hidden;
  }
  throw Error(ErrorCode::BackboneLoadError, "unknown backbone '" + o.name + "'");
}

// Token sequence as table rows, special tokens included.
struct TokenRows {
  std::vector<Eigen::Index> rows;
};

// Deterministic hash-based text encoder of width q. Each (truncated) token,
// framed by [CLS] ... [SEP], is hashed into a trainable row of the table;
// the representation is the mean of those rows. Rows are seeded from a hash
// of (backbone name, row, column), so no download or seed is needed, and
// gradients flow into exactly the rows a text touches.
class HashBackbone {
 public:
  HashBackbone() = default;

  explicit HashBackbone(BackboneOptions options) : opt_(std::move(options)) {
    hidden_ = backbone_width(opt_);
    if (hidden_ <= 0 || opt_.buckets <= 0 || opt_.max_tokens < 2) {
      throw Error(ErrorCode::BackboneLoadError, "invalid backbone options for '" + opt_.name + "'");
    }
    const auto rows = static_cast<Eigen::Index>(opt_.buckets);
    table_.resize(rows, hidden_);
    const std::uint64_t salt = fnv1a64(opt_.name);
    const double scale = opt_.init_scale / std::sqrt(static_cast<double>(hidden_));
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < hidden_; ++c) {
        const std::uint64_t h = mix64(salt ^ mix64(static_cast<std::uint64_t>(r) * 0x10001ULL +
                                                   static_cast<std::uint64_t>(c)));
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        table_(r, c) = (2.0 * u - 1.0) * std::sqrt(3.0) * scale;
      }
    }
    grad_ = RowMat::Zero(rows, hidden_);
    m_ = RowMat::Zero(rows, hidden_);
    v_ = RowMat::Zero(rows, hidden_);
    touched_flag_.assign(static_cast<std::size_t>(rows), false);
  }

  const BackboneOptions& options() const { return opt_; }
  const std::string& name() const { return opt_.name; }
  int hidden() const { return hidden_; }
  int max_tokens() const { return opt_.max_tokens; }
  RowMat& table() { return table_; }
  const RowMat& table() const { return table_; }

  Eigen::Index row_of(std::string_view token) const {
    return static_cast<Eigen::Index>(fnv1a64(token) % static_cast<std::uint64_t>(opt_.buckets));
  }

  TokenRows tokenize_rows(std::string_view text) const {
    auto tokens = tokenize(text);
    const auto keep = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(opt_.max_tokens - 2));
    TokenRows out;
    out.rows.reserve(keep + 2);
    out.rows.push_back(row_of("[CLS]"));
    for (std::size_t i = 0; i < keep; ++i) out.rows.push_back(row_of(tokens[i]));
    out.rows.push_back(row_of("[SEP]"));
    return out;
  }

  // Final-layer vectors of each position.
  std::vector<Vec> token_vectors(const TokenRows& t) const {
    std::vector<Vec> out;
    for (auto r : t.rows) out.emplace_back(table_.row(r).transpose());
    return out;
  }

  Vec pool(const TokenRows& t) const {
    Vec sum = Vec::Zero(hidden_);
    for (auto r : t.rows) sum += table_.row(r).transpose();
    return sum / static_cast<double>(t.rows.size());
  }

  Vec encode(std::string_view text) const { return pool(tokenize_rows(text)); }

  // Accumulates dL/d(pooled) into the rows of t.
  void backward(const TokenRows& t, const Vec& grad_pooled) {
    const double w = 1.0 / static_cast<double>(t.rows.size());
    for (auto r : t.rows) {
      grad_.row(r) += w * grad_pooled.transpose();
      if (!touched_flag_[static_cast<std::size_t>(r)]) {
        touched_flag_[static_cast<std::size_t>(r)] = true;
        touched_.push_back(r);
      }
    }
  }

  const std::vector<Eigen::Index>& touched_rows() const { return touched_; }
  const RowMat& grad() const { return grad_; }

  void scale_grad(double s) {
    for (auto r : touched_) grad_.row(r) *= s;
  }

  // Lazy Adam on touched rows, then clears their gradients.
  void apply(const Adam& opt) {
    std::sort(touched_.begin(), touched_.end());
    opt.update_rows(table_, grad_, m_, v_, touched_);
    zero_grad();
  }

  void zero_grad() {
    for (auto r : touched_) {
      grad_.row(r).setZero();
      touched_flag_[static_cast<std::size_t>(r)] = false;
    }
    touched_.clear();
  }

 private:
  BackboneOptions opt_;
  int hidden_ = 0;
  RowMat table_;
  RowMat grad_;
  RowMat m_;
  RowMat v_;
  std::vector<Eigen::Index> touched_;
  std::vector<bool> touched_flag_;
};

}  // namespace newslean
