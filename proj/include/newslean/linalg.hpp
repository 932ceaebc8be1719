#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

namespace newslean {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Vec relu(const Vec& v) { return v.cwiseMax(0.0); }

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline double cosine(const Vec& a, const Vec& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace newslean
