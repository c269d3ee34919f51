#ifndef SIGGAN_OPTIM_HPP
#define SIGGAN_OPTIM_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "siggan/error.hpp"
#include "siggan/tensor.hpp"

namespace siggan {

struct RmsPropState {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
  std::vector<Tensor> mean_square;  // one per parameter, lazily sized
};

/// v <- rho v + (1 - rho) g^2;  p <- p - lr g / (sqrt(v) + eps).
/// Gradients are left in place; callers zero them before the next pass.
inline void rmsprop_step(std::span<Parameter* const> params, RmsPropState& state) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) {
      throw NumericError("rmsprop_step: non-finite gradient in parameter '" + p->name + "'");
    }
  }
  if (state.mean_square.size() != params.size()) {
    state.mean_square.clear();
    for (const Parameter* p : params) {
      state.mean_square.push_back(Tensor::Zero(p->value.rows(), p->value.cols()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& v = state.mean_square[i];
    if (v.rows() != p.value.rows() || v.cols() != p.value.cols()) {
      throw ShapeError("rmsprop_step: optimizer state does not match parameter '" + p.name + "'");
    }
    v = state.decay * v + (1.0 - state.decay) * p.grad.cwiseAbs2();
    p.value.array() -= state.learning_rate * p.grad.array() / (v.array().sqrt() + state.epsilon);
  }
}

inline double grad_norm(std::span<Parameter* const> params) {
  double ss = 0.0;
  for (const Parameter* p : params) ss += p->grad.squaredNorm();
  return std::sqrt(ss);
}

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
inline double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter* p : params) p->grad *= s;
  }
  return norm;
}

inline void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace siggan

#endif  // SIGGAN_OPTIM_HPP
