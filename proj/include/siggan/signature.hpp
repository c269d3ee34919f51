#ifndef SIGGAN_SIGNATURE_HPP
#define SIGGAN_SIGNATURE_HPP

// Truncated path signatures of piecewise-linear paths.
//
// Coefficients are stored flat, level by level, constant term first. Inside a
// level, words (i_1, ..., i_k) are in lexicographic order, so the word index
// is i_1 d^{k-1} + ... + i_k.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "siggan/error.hpp"

namespace siggan {

/// Number of words of length exactly k over d letters.
inline std::size_t level_size(std::size_t d, std::size_t k) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < k; ++i) n *= d;
  return n;
}

/// Flat index of the first word of length k.
inline std::size_t level_offset(std::size_t d, std::size_t k) {
  std::size_t off = 0;
  for (std::size_t i = 0; i < k; ++i) off += level_size(d, i);
  return off;
}

/// (d^{M+1} - 1) / (d - 1) coefficients, constant term included.
inline std::size_t signature_length(std::size_t d, std::size_t degree) {
  return level_offset(d, degree + 1);
}

class SignatureVector {
 public:
  SignatureVector() = default;

  /// The trivial signature (1, 0, ..., 0).
  SignatureVector(std::size_t dim, std::size_t degree)
      : dim_(dim), degree_(degree), coeffs_(signature_length(dim, degree), 0.0) {
    if (dim == 0) throw ShapeError("signature dimension must be positive");
    coeffs_[0] = 1.0;
  }

  std::size_t dim() const { return dim_; }
  std::size_t degree() const { return degree_; }
  std::size_t size() const { return coeffs_.size(); }

  double operator[](std::size_t i) const { return coeffs_[i]; }
  double& operator[](std::size_t i) { return coeffs_[i]; }

  /// Coefficient of a word given as 0-based letters.
  double word(std::span<const std::size_t> letters) const {
    std::size_t idx = 0;
    for (std::size_t l : letters) idx = idx * dim_ + l;
    return coeffs_[level_offset(dim_, letters.size()) + idx];
  }
  double word(std::initializer_list<std::size_t> letters) const {
    return word(std::span<const std::size_t>(letters.begin(), letters.size()));
  }

  std::span<const double> level(std::size_t k) const {
    return std::span<const double>(coeffs_).subspan(level_offset(dim_, k), level_size(dim_, k));
  }

  std::span<const double> coefficients() const { return coeffs_; }
  std::span<double> coefficients() { return coeffs_; }

 private:
  std::size_t dim_ = 0;
  std::size_t degree_ = 0;
  std::vector<double> coeffs_;
};

struct Path {
  std::size_t dim = 0;
  std::vector<double> points;  // row-major, dim coordinates per point

  std::size_t size() const { return dim == 0 ? 0 : points.size() / dim; }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points).subspan(i * dim, dim);
  }
};

/// Lead-lag embedding: (x1, x1), (x2, x1), (x2, x2), (x3, x2), ... with
/// coordinates ordered (lead, lag). 2n - 1 vertices.
inline Path lead_lag(std::span<const double> series) {
  if (series.size() < 2) throw SizeError("lead_lag needs a series of length at least 2");
  Path p;
  p.dim = 2;
  p.points.reserve(2 * (2 * series.size() - 1));
  p.points.push_back(series[0]);
  p.points.push_back(series[0]);
  for (std::size_t k = 0; k + 1 < series.size(); ++k) {
    p.points.push_back(series[k + 1]);
    p.points.push_back(series[k]);
    p.points.push_back(series[k + 1]);
    p.points.push_back(series[k + 1]);
  }
  return p;
}

/// Tensor exponential of a single increment: level k is increment^{(x)k} / k!.
inline SignatureVector segment_signature(std::span<const double> increment, std::size_t degree) {
  if (degree < 1) throw ConfigError("signature degree must be at least 1");
  const std::size_t d = increment.size();
  SignatureVector s(d, degree);
  auto c = s.coefficients();
  for (std::size_t k = 1; k <= degree; ++k) {
    const std::size_t prev = level_offset(d, k - 1);
    const std::size_t cur = level_offset(d, k);
    const std::size_t n_prev = level_size(d, k - 1);
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t u = 0; u < n_prev; ++u) {
      const double base = c[prev + u] * inv_k;
      for (std::size_t i = 0; i < d; ++i) c[cur + u * d + i] = base * increment[i];
    }
  }
  return s;
}

/// Truncated tensor product: coefficient of w is the sum over splits w = uv of a(u) b(v).
inline SignatureVector chen_concat(const SignatureVector& a, const SignatureVector& b) {
  if (a.dim() != b.dim() || a.degree() != b.degree()) {
    throw ShapeError("chen_concat: shape (" + std::to_string(a.dim()) + ", " +
                     std::to_string(a.degree()) + ") vs (" + std::to_string(b.dim()) + ", " +
                     std::to_string(b.degree()) + ")");
  }
  const std::size_t d = a.dim();
  const std::size_t m = a.degree();
  SignatureVector c(d, m);
  auto out = c.coefficients();
  out[0] = a[0] * b[0];
  for (std::size_t k = 1; k <= m; ++k) {
    const std::size_t off_k = level_offset(d, k);
    for (std::size_t j = 0; j <= k; ++j) {
      const std::size_t off_a = level_offset(d, j);
      const std::size_t off_b = level_offset(d, k - j);
      const std::size_t n_a = level_size(d, j);
      const std::size_t n_b = level_size(d, k - j);
      for (std::size_t u = 0; u < n_a; ++u) {
        const double au = a[off_a + u];
        if (au == 0.0) continue;
        double* dst = &out[off_k + u * n_b];
        for (std::size_t v = 0; v < n_b; ++v) dst[v] += au * b[off_b + v];
      }
    }
  }
  return c;
}

/// Left fold of chen_concat over the segment signatures. A single-point path
/// has the trivial signature.
inline SignatureVector path_signature(const Path& path, std::size_t degree) {
  if (path.dim == 0 || path.size() == 0) throw SizeError("path_signature: empty path");
  SignatureVector s(path.dim, degree);
  std::vector<double> inc(path.dim);
  for (std::size_t n = 1; n < path.size(); ++n) {
    const auto p0 = path.point(n - 1);
    const auto p1 = path.point(n);
    for (std::size_t i = 0; i < path.dim; ++i) inc[i] = p1[i] - p0[i];
    s = chen_concat(s, segment_signature(inc, degree));
  }
  return s;
}

inline std::vector<double> cumulative_sum(std::span<const double> series) {
  std::vector<double> out(series.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = acc += series[i];
  return out;
}

/// Signature of the lead-lag path of the series itself.
inline SignatureVector lead_lag_signature(std::span<const double> series, std::size_t degree) {
  return path_signature(lead_lag(series), degree);
}

/// Signature of the lead-lag path of the running sum of the series.
inline SignatureVector cumulative_signature(std::span<const double> series, std::size_t degree) {
  const auto cs = cumulative_sum(series);
  return path_signature(lead_lag(cs), degree);
}

/// Coefficient-wise mean.
inline SignatureVector expected_signature(std::span<const SignatureVector> sample) {
  if (sample.empty()) throw SizeError("expected_signature: empty sample");
  SignatureVector mean(sample[0].dim(), sample[0].degree());
  mean[0] = 0.0;
  for (const auto& s : sample) {
    if (s.dim() != mean.dim() || s.degree() != mean.degree()) {
      throw ShapeError("expected_signature: mixed signature shapes");
    }
    for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
  }
  const double inv = 1.0 / static_cast<double>(sample.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] *= inv;
  return mean;
}

// ---------------------------------------------------------------------------
// Reverse mode. Given dL/dS for S = path_signature(path), these return dL/d(input).

namespace detail {

// Accumulates into ga, gb the adjoints of c = a (x) b given gc.
inline void chen_concat_vjp(const SignatureVector& a, const SignatureVector& b,
                            std::span<const double> gc, std::span<double> ga,
                            std::span<double> gb) {
  const std::size_t d = a.dim();
  const std::size_t m = a.degree();
  for (std::size_t k = 0; k <= m; ++k) {
    const std::size_t off_k = level_offset(d, k);
    for (std::size_t j = 0; j <= k; ++j) {
      const std::size_t off_a = level_offset(d, j);
      const std::size_t off_b = level_offset(d, k - j);
      const std::size_t n_a = level_size(d, j);
      const std::size_t n_b = level_size(d, k - j);
      for (std::size_t u = 0; u < n_a; ++u) {
        const double* g = &gc[off_k + u * n_b];
        double acc = 0.0;
        const double au = a[off_a + u];
        for (std::size_t v = 0; v < n_b; ++v) {
          acc += g[v] * b[off_b + v];
          gb[off_b + v] += g[v] * au;
        }
        ga[off_a + u] += acc;
      }
    }
  }
}

// dL/d(increment) for s = segment_signature(increment), given gs (consumed).
inline void segment_signature_vjp(const SignatureVector& s, std::span<const double> increment,
                                  std::span<double> gs, std::span<double> ginc) {
  const std::size_t d = s.dim();
  for (std::size_t k = s.degree(); k >= 1; --k) {
    const std::size_t prev = level_offset(d, k - 1);
    const std::size_t cur = level_offset(d, k);
    const std::size_t n_prev = level_size(d, k - 1);
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t u = 0; u < n_prev; ++u) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double g = gs[cur + u * d + i];
        acc += g * increment[i];
        ginc[i] += g * s[prev + u] * inv_k;
      }
      gs[prev + u] += acc * inv_k;
    }
  }
}

}  // namespace detail

/// Gradient of <grad, path_signature(path)> with respect to the path points,
/// laid out like path.points.
inline std::vector<double> path_signature_vjp(const Path& path, std::size_t degree,
                                              std::span<const double> grad) {
  const std::size_t d = path.dim;
  const std::size_t n_pts = path.size();
  if (grad.size() != signature_length(d, degree)) {
    throw ShapeError("path_signature_vjp: gradient has " + std::to_string(grad.size()) +
                     " entries, expected " + std::to_string(signature_length(d, degree)));
  }
  std::vector<double> gpoints(path.points.size(), 0.0);
  if (n_pts < 2) return gpoints;

  const std::size_t n_seg = n_pts - 1;
  std::vector<std::vector<double>> incs(n_seg, std::vector<double>(d));
  std::vector<SignatureVector> segs;
  std::vector<SignatureVector> prefix;
  segs.reserve(n_seg);
  prefix.reserve(n_seg + 1);
  prefix.emplace_back(d, degree);
  for (std::size_t n = 0; n < n_seg; ++n) {
    for (std::size_t i = 0; i < d; ++i) {
      incs[n][i] = path.points[(n + 1) * d + i] - path.points[n * d + i];
    }
    segs.push_back(segment_signature(incs[n], degree));
    prefix.push_back(chen_concat(prefix.back(), segs.back()));
  }

  const std::size_t len = grad.size();
  std::vector<double> g(grad.begin(), grad.end());
  std::vector<double> g_prev(len);
  std::vector<double> g_seg(len);
  std::vector<double> ginc(d);
  for (std::size_t n = n_seg; n-- > 0;) {
    std::fill(g_prev.begin(), g_prev.end(), 0.0);
    std::fill(g_seg.begin(), g_seg.end(), 0.0);
    std::fill(ginc.begin(), ginc.end(), 0.0);
    detail::chen_concat_vjp(prefix[n], segs[n], g, g_prev, g_seg);
    detail::segment_signature_vjp(segs[n], incs[n], g_seg, ginc);
    for (std::size_t i = 0; i < d; ++i) {
      gpoints[(n + 1) * d + i] += ginc[i];
      gpoints[n * d + i] -= ginc[i];
    }
    g.swap(g_prev);
  }
  return gpoints;
}

/// Adjoint of lead_lag: folds point gradients back onto the series.
inline std::vector<double> lead_lag_vjp(std::size_t series_len, std::span<const double> gpoints) {
  std::vector<double> gx(series_len, 0.0);
  gx[0] += gpoints[0] + gpoints[1];
  for (std::size_t k = 0; k + 1 < series_len; ++k) {
    const std::size_t a = 2 * (2 * k + 1);  // (x_{k+1}, x_k)
    const std::size_t b = 2 * (2 * k + 2);  // (x_{k+1}, x_{k+1})
    gx[k + 1] += gpoints[a];
    gx[k] += gpoints[a + 1];
    gx[k + 1] += gpoints[b] + gpoints[b + 1];
  }
  return gx;
}

inline std::vector<double> lead_lag_signature_vjp(std::span<const double> series,
                                                  std::size_t degree,
                                                  std::span<const double> grad) {
  const auto gp = path_signature_vjp(lead_lag(series), degree, grad);
  return lead_lag_vjp(series.size(), gp);
}

inline std::vector<double> cumulative_signature_vjp(std::span<const double> series,
                                                    std::size_t degree,
                                                    std::span<const double> grad) {
  const auto cs = cumulative_sum(series);
  auto gcs = lead_lag_signature_vjp(cs, degree, grad);
  // Adjoint of the running sum is the reversed running sum.
  for (std::size_t i = gcs.size() - 1; i-- > 0;) gcs[i] += gcs[i + 1];
  return gcs;
}

}  // namespace siggan

#endif  // SIGGAN_SIGNATURE_HPP
