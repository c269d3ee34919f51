#ifndef SIGGAN_TENSOR_HPP
#define SIGGAN_TENSOR_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>

#include "siggan/error.hpp"

namespace siggan {

/// Dense row-major matrix. Every array in the network is 2-D: sequences are
/// (steps x features), vectors are single rows.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

inline std::string shape_string(const Tensor& t) {
  return "(" + std::to_string(t.rows()) + ", " + std::to_string(t.cols()) + ")";
}

inline void require_finite(const Tensor& t, const std::string& what) {
  if (!t.allFinite()) throw NumericError(what + " produced a non-finite value");
}

inline Tensor standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
  return t;
}

/// Learnable array with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(fan_in, fan_out);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
  return t;
}

/// Orthonormal columns from the QR factorization of a Gaussian draw; square
/// blocks of width `rows` are stacked side by side to fill `cols`.
inline Tensor orthogonal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Tensor out(rows, cols);
  for (Eigen::Index start = 0; start < cols; start += rows) {
    const Eigen::Index width = std::min(rows, cols - start);
    Eigen::MatrixXd g = standard_normal(rows, rows, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Fix the sign ambiguity so the draw is uniform over orthogonal matrices.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < rows; ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    out.block(0, start, rows, width) = q.leftCols(width);
  }
  return out;
}

}  // namespace siggan

#endif  // SIGGAN_TENSOR_HPP
