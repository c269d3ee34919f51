#ifndef SIGGAN_AUTOGRAD_HPP
#define SIGGAN_AUTOGRAD_HPP

// Reverse-mode differentiation over whole tensors.
//
// A Tape records every op applied during a forward pass together with a
// closure that maps the op's output gradient onto its inputs. backward()
// walks the tape in reverse and finally adds the gradients of trainable
// parameter leaves into Parameter::grad. Nodes that do not depend on any
// trainable leaf are never visited.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "siggan/error.hpp"
#include "siggan/signature.hpp"
#include "siggan/tensor.hpp"

namespace siggan {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value) { return push(std::move(value), false, nullptr, {}); }

  /// Leaf bound to a parameter. Frozen leaves behave like constants.
  Var parameter(Parameter& p, bool trainable = true) {
    return push(p.value, trainable, trainable ? &p : nullptr, {});
  }

  /// Adds an op node. `backward` runs only if some input requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward,
             const char* op_name) {
    require_finite(value, op_name);
    bool needs = false;
    for (const Var& v : inputs) needs = needs || nodes_[v.id].requires_grad;
    return push(std::move(value), needs, nullptr, needs ? std::move(backward) : Backward{});
  }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds `g` into the gradient of node `id` if that node needs one.
  template <typename Expr>
  void accumulate(std::size_t id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Receives the gradient of each trainable leaf instead of Parameter::grad.
  using GradSink = std::function<void(Parameter&, const Tensor&)>;

  /// Runs reverse mode from a 1x1 root and adds leaf gradients into the bound
  /// parameters, or hands them to `sink` when one is given.
  void backward(Var root, double seed = 1.0, const GradSink& sink = nullptr) {
    const Node& r = nodes_[root.id];
    if (r.value.size() != 1) {
      throw ShapeError("backward: root must be a scalar, got " + shape_string(r.value));
    }
    if (!r.requires_grad) return;
    nodes_[root.id].grad = Tensor::Constant(1, 1, seed);
    for (std::size_t id = root.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      require_finite(n.grad, "backward pass");
      if (n.backward) n.backward(*this, id);
      if (n.param == nullptr) continue;
      if (sink) {
        sink(*n.param, n.grad);
      } else {
        n.param->grad += n.grad;
      }
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Parameter* param, Backward backward) {
    nodes_.push_back(Node{std::move(value), Tensor(), requires_grad, param, std::move(backward)});
    return Var{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace nn {

namespace detail {

inline void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape " + shape_string(a) + " vs " + shape_string(b));
  }
}

inline Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw ShapeError("operands belong to different tapes");
  return *a.tape;
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions of " + shape_string(av) + " and " +
                     shape_string(bv) + " differ");
  }
  return t.record(
      av * bv, {a, b},
      [a = a.id, b = b.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) tp.accumulate(a, (g * tp.value(b).transpose()).eval());
        if (tp.requires_grad(b)) tp.accumulate(b, (tp.value(a).transpose() * g).eval());
      },
      "matmul");
}

inline Var add(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  detail::same_shape(a.value(), b.value(), "add");
  return t.record(
      a.value() + b.value(), {a, b},
      [a = a.id, b = b.id](Tape& tp, std::size_t self) {
        tp.accumulate(a, tp.grad(self));
        tp.accumulate(b, tp.grad(self));
      },
      "add");
}

/// x (n x k) plus the row vector b (1 x k) on every row.
inline Var add_bias(Var x, Var b) {
  Tape& t = detail::tape_of(x, b);
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ShapeError("add_bias: bias " + shape_string(bv) + " does not match " + shape_string(xv));
  }
  Tensor y = xv.rowwise() + bv.row(0);
  return t.record(
      std::move(y), {x, b},
      [x = x.id, b = b.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        tp.accumulate(x, g);
        if (tp.requires_grad(b)) tp.accumulate(b, Tensor(g.colwise().sum()));
      },
      "add_bias");
}

inline Var hadamard(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  detail::same_shape(a.value(), b.value(), "hadamard");
  return t.record(
      a.value().cwiseProduct(b.value()), {a, b},
      [a = a.id, b = b.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)).eval());
        if (tp.requires_grad(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)).eval());
      },
      "hadamard");
}

inline Var scale(Var x, double c) {
  return x.tape->record(
      x.value() * c, {x},
      [x = x.id, c](Tape& tp, std::size_t self) { tp.accumulate(x, (tp.grad(self) * c).eval()); },
      "scale");
}

inline Var tanh(Var x) {
  Tensor y = x.value().array().tanh().matrix();
  return x.tape->record(
      std::move(y), {x},
      [x = x.id](Tape& tp, std::size_t self) {
        const Tensor& y = tp.value(self);
        tp.accumulate(x, tp.grad(self).cwiseProduct((1.0 - y.array().square()).matrix()).eval());
      },
      "tanh");
}

inline Var sigmoid(Var x) {
  Tensor y = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  return x.tape->record(
      std::move(y), {x},
      [x = x.id](Tape& tp, std::size_t self) {
        const Tensor& y = tp.value(self);
        tp.accumulate(x,
                      tp.grad(self).cwiseProduct((y.array() * (1.0 - y.array())).matrix()).eval());
      },
      "sigmoid");
}

inline constexpr double kPreluAlpha = 0.25;

/// max(0, x) + alpha min(0, x).
inline Tensor prelu(const Tensor& x, double alpha = kPreluAlpha) {
  return x.unaryExpr([alpha](double v) { return v >= 0.0 ? v : alpha * v; });
}

inline Var prelu(Var x, double alpha = kPreluAlpha) {
  return x.tape->record(
      prelu(x.value(), alpha), {x},
      [x = x.id, alpha](Tape& tp, std::size_t self) {
        const Tensor& xv = tp.value(x);
        Tensor slope = xv.unaryExpr([alpha](double v) { return v >= 0.0 ? 1.0 : alpha; });
        tp.accumulate(x, tp.grad(self).cwiseProduct(slope).eval());
      },
      "prelu");
}

/// Inverted-dropout mask: 0 with probability `rate`, else 1 / (1 - rate).
inline Tensor dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  Tensor m(rows, cols);
  std::bernoulli_distribution drop(rate);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = drop(rng) ? 0.0 : keep;
  return m;
}

inline Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  return x.cwiseProduct(dropout_mask(x.rows(), x.cols(), rate, rng));
}

inline Var dropout(Var x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  Var mask = x.tape->constant(dropout_mask(x.value().rows(), x.value().cols(), rate, rng));
  return hadamard(x, mask);
}

/// [a | b] along columns.
inline Var concat_cols(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols: row counts " + shape_string(av) + " vs " + shape_string(bv));
  }
  Tensor y(av.rows(), av.cols() + bv.cols());
  y << av, bv;
  const Eigen::Index ka = av.cols();
  const Eigen::Index kb = bv.cols();
  return t.record(
      std::move(y), {a, b},
      [a = a.id, b = b.id, ka, kb](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) tp.accumulate(a, Tensor(g.leftCols(ka)));
        if (tp.requires_grad(b)) tp.accumulate(b, Tensor(g.rightCols(kb)));
      },
      "concat_cols");
}

inline Var sum(Var x) {
  return x.tape->record(
      Tensor::Constant(1, 1, x.value().sum()), {x},
      [x = x.id](Tape& tp, std::size_t self) {
        const Tensor& xv = tp.value(x);
        tp.accumulate(x, Tensor::Constant(xv.rows(), xv.cols(), tp.grad(self)(0, 0)));
      },
      "sum");
}

inline Var mean(Var x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

/// Mean of squared differences.
inline double mse(const Tensor& a, const Tensor& b) {
  detail::same_shape(a, b, "mse");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

inline Var mse(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const double value = mse(a.value(), b.value());
  return t.record(
      Tensor::Constant(1, 1, value), {a, b},
      [a = a.id, b = b.id](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)(0, 0);
        const Tensor& av = tp.value(a);
        const Tensor diff = (av - tp.value(b)) * (2.0 * g / static_cast<double>(av.size()));
        tp.accumulate(a, diff);
        if (tp.requires_grad(b)) tp.accumulate(b, Tensor(-diff));
      },
      "mse");
}

/// Max-subtracted softmax over all entries.
inline Tensor softmax(const Tensor& v) {
  const double m = v.maxCoeff();
  Tensor e = (v.array() - m).exp().matrix();
  return e / e.sum();
}

inline Tensor log_softmax(const Tensor& v) {
  const double m = v.maxCoeff();
  const double lse = m + std::log((v.array() - m).exp().sum());
  return (v.array() - lse).matrix();
}

inline Var softmax(Var v) {
  return v.tape->record(
      softmax(v.value()), {v},
      [v = v.id](Tape& tp, std::size_t self) {
        const Tensor& p = tp.value(self);
        const Tensor& g = tp.grad(self);
        const double dot = g.cwiseProduct(p).sum();
        tp.accumulate(v, (p.array() * (g.array() - dot)).matrix().eval());
      },
      "softmax");
}

/// sum p_i ln(p_i / q_i).
inline double kl_divergence(const Tensor& p, const Tensor& q) {
  detail::same_shape(p, q, "kl_divergence");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i];
    if (pi > 0.0) acc += pi * std::log(pi / q.data()[i]);
  }
  return acc;
}

inline Var kl_divergence(Var p, Var q) {
  Tape& t = detail::tape_of(p, q);
  return t.record(
      Tensor::Constant(1, 1, kl_divergence(p.value(), q.value())), {p, q},
      [p = p.id, q = q.id](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)(0, 0);
        const Tensor& pv = tp.value(p);
        const Tensor& qv = tp.value(q);
        if (tp.requires_grad(p)) {
          tp.accumulate(p, ((pv.array() / qv.array()).log() + 1.0).matrix() * g);
        }
        if (tp.requires_grad(q)) tp.accumulate(q, (-(pv.array() / qv.array()) * g).matrix().eval());
      },
      "kl_divergence");
}

/// KL(softmax(a) || softmax(b)) computed from log-probabilities, so it stays
/// finite even when a softmax entry underflows.
inline Var kl_softmax(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  detail::same_shape(a.value(), b.value(), "kl_softmax");
  const Tensor la = log_softmax(a.value());
  const Tensor lb = log_softmax(b.value());
  const Tensor p = la.array().exp().matrix();
  const double value = (p.array() * (la - lb).array()).sum();
  return t.record(
      Tensor::Constant(1, 1, value), {a, b},
      [a = a.id, b = b.id, la, lb, p, value](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)(0, 0);
        if (tp.requires_grad(a)) {
          // d/da_k = p_k (la_k - lb_k - KL)
          tp.accumulate(a, (p.array() * ((la - lb).array() - value) * g).matrix().eval());
        }
        if (tp.requires_grad(b)) {
          const Tensor q = lb.array().exp().matrix();
          tp.accumulate(b, ((q - p) * g).eval());
        }
      },
      "kl_softmax");
}

/// Flattens a (T x 1) or (1 x T) node into a plain series.
inline std::vector<double> as_series(const Tensor& x) {
  if (x.rows() != 1 && x.cols() != 1) {
    throw ShapeError("expected a single-column series, got " + shape_string(x));
  }
  return std::vector<double>(x.data(), x.data() + x.size());
}

enum class SignatureKind { LeadLag, Cumulative };

/// Truncated signature of the lead-lag path of a (T x 1) series, as a 1 x N row.
inline Var series_signature(Var x, std::size_t degree, SignatureKind kind) {
  const std::vector<double> s = as_series(x.value());
  const SignatureVector sig =
      kind == SignatureKind::LeadLag ? lead_lag_signature(s, degree) : cumulative_signature(s, degree);
  Tensor row(1, static_cast<Eigen::Index>(sig.size()));
  for (std::size_t i = 0; i < sig.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = sig[i];
  const Eigen::Index rows = x.value().rows();
  const Eigen::Index cols = x.value().cols();
  return x.tape->record(
      std::move(row), {x},
      [x = x.id, degree, kind, rows, cols](Tape& tp, std::size_t self) {
        const std::vector<double> s = as_series(tp.value(x));
        const Tensor& g = tp.grad(self);
        std::span<const double> gs(g.data(), static_cast<std::size_t>(g.size()));
        const std::vector<double> gx = kind == SignatureKind::LeadLag
                                           ? lead_lag_signature_vjp(s, degree, gs)
                                           : cumulative_signature_vjp(s, degree, gs);
        tp.accumulate(x, Eigen::Map<const Tensor>(gx.data(), rows, cols));
      },
      kind == SignatureKind::LeadLag ? "lead-lag signature" : "cumulative signature");
}

// ---------------------------------------------------------------------------
// Layers

/// y = x W + b.
inline Var dense_forward(Var x, Var w, Var b) { return add_bias(matmul(x, w), b); }

/// Single-direction LSTM over the rows of x with h0 = c0 = 0.
///
/// Weights: wx (K x 4H), wh (H x 4H), b (1 x 4H), gate blocks ordered
/// input, forget, candidate, output. Returns the full hidden sequence (T x H).
inline Var lstm_forward(Var x, Var wx, Var wh, Var b) {
  Tape& t = *x.tape;
  const Tensor& xv = x.value();
  const Tensor& wxv = wx.value();
  const Tensor& whv = wh.value();
  const Tensor& bv = b.value();
  const Eigen::Index steps = xv.rows();
  const Eigen::Index hidden = whv.rows();
  if (steps < 1) throw ShapeError("lstm_forward: sequence must have at least one step");
  if (wxv.rows() != xv.cols() || wxv.cols() != 4 * hidden || whv.cols() != 4 * hidden ||
      bv.rows() != 1 || bv.cols() != 4 * hidden) {
    throw ShapeError("lstm_forward: input " + shape_string(xv) + " with wx " + shape_string(wxv) +
                     ", wh " + shape_string(whv) + ", b " + shape_string(bv));
  }

  // Gate activations per step, stored for the backward pass.
  Tensor gates(steps, 4 * hidden);
  Tensor cell(steps, hidden);
  Tensor h(steps, hidden);
  Tensor zx = (xv * wxv).rowwise() + bv.row(0);
  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(hidden);
  Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(hidden);
  for (Eigen::Index s = 0; s < steps; ++s) {
    Eigen::RowVectorXd z = zx.row(s) + h_prev * whv;
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (Eigen::Index k = 0; k < hidden; ++k) {
      z(k) = sig(z(k));
      z(hidden + k) = sig(z(hidden + k));
      z(2 * hidden + k) = std::tanh(z(2 * hidden + k));
      z(3 * hidden + k) = sig(z(3 * hidden + k));
    }
    gates.row(s) = z;
    for (Eigen::Index k = 0; k < hidden; ++k) {
      const double c = z(hidden + k) * c_prev(k) + z(k) * z(2 * hidden + k);
      cell(s, k) = c;
      h(s, k) = z(3 * hidden + k) * std::tanh(c);
    }
    h_prev = h.row(s);
    c_prev = cell.row(s);
  }

  return t.record(
      h, {x, wx, wh, b},
      [x = x.id, wx = wx.id, wh = wh.id, b = b.id, gates, cell](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& hs = tp.value(self);
        const Tensor& whv = tp.value(wh);
        const Eigen::Index steps = g.rows();
        const Eigen::Index hidden = g.cols();
        Tensor dz(steps, 4 * hidden);
        Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(hidden);
        Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(hidden);
        for (Eigen::Index s = steps; s-- > 0;) {
          for (Eigen::Index k = 0; k < hidden; ++k) {
            const double ig = gates(s, k);
            const double fg = gates(s, hidden + k);
            const double cg = gates(s, 2 * hidden + k);
            const double og = gates(s, 3 * hidden + k);
            const double tc = std::tanh(cell(s, k));
            const double c_prev = s > 0 ? cell(s - 1, k) : 0.0;
            const double dh = g(s, k) + dh_next(k);
            const double dc = dh * og * (1.0 - tc * tc) + dc_next(k);
            dz(s, k) = dc * cg * ig * (1.0 - ig);
            dz(s, hidden + k) = dc * c_prev * fg * (1.0 - fg);
            dz(s, 2 * hidden + k) = dc * ig * (1.0 - cg * cg);
            dz(s, 3 * hidden + k) = dh * tc * og * (1.0 - og);
            dc_next(k) = dc * fg;
          }
          dh_next = dz.row(s) * whv.transpose();
        }
        if (tp.requires_grad(x)) tp.accumulate(x, (dz * tp.value(wx).transpose()).eval());
        if (tp.requires_grad(wx)) tp.accumulate(wx, (tp.value(x).transpose() * dz).eval());
        if (tp.requires_grad(wh) && steps > 1) {
          tp.accumulate(wh, (hs.topRows(steps - 1).transpose() * dz.bottomRows(steps - 1)).eval());
        }
        if (tp.requires_grad(b)) tp.accumulate(b, Tensor(dz.colwise().sum()));
      },
      "lstm_forward");
}

/// D^{-1/2} (A + I) D^{-1/2}, with D the degree matrix of A + I.
inline Tensor normalized_adjacency(const Tensor& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw GraphError("adjacency must be square, got " + shape_string(adjacency));
  }
  const Eigen::Index n = adjacency.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) {
      throw GraphError("adjacency has a nonzero diagonal entry at node " + std::to_string(i));
    }
  }
  Tensor a = adjacency;
  a.diagonal().array() += 1.0;
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

/// tanh(Ahat H Theta) with Ahat the self-loop normalized adjacency.
inline Var gcn_forward(Var h, const Tensor& normalized, Var theta) {
  const Tensor& hv = h.value();
  if (normalized.rows() != hv.rows() || normalized.cols() != hv.rows()) {
    throw GraphError("gcn_forward: adjacency " + shape_string(normalized) + " for " +
                     std::to_string(hv.rows()) + " nodes");
  }
  Var ahat = h.tape->constant(normalized);
  return tanh(matmul(ahat, matmul(h, theta)));
}

}  // namespace nn
}  // namespace siggan

#endif  // SIGGAN_AUTOGRAD_HPP
