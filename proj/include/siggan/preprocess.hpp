#ifndef SIGGAN_PREPROCESS_HPP
#define SIGGAN_PREPROCESS_HPP

// Price series to gaussianized return windows, and back.
//
// Pipeline order: log_returns -> normalize -> fit_delta -> gaussianize.
// Generated data goes the other way: degaussianize -> denormalize.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "siggan/error.hpp"

namespace siggan {

struct PriceSeries {
  std::vector<std::chrono::sys_days> timestamps;
  std::vector<double> closes;

  std::size_t size() const { return closes.size(); }
};

struct ReturnSeries {
  std::vector<double> values;
  // Statistics recorded by normalize(); identity until then.
  double source_mean = 0.0;
  double source_std = 1.0;

  std::size_t size() const { return values.size(); }
};

struct LambertParams {
  double delta = 0.0;
  double mu = 0.0;
  double sigma = 1.0;
};

struct WindowSpec {
  std::size_t length = 100;
  std::size_t stride = 1;
};

using ReturnWindow = std::vector<double>;

inline constexpr double kDeltaMin = 1e-8;

/// Checks the PriceSeries invariants: equal lengths, at least two points,
/// strictly increasing dates and positive closes.
inline void validate(const PriceSeries& p) {
  if (p.timestamps.size() != p.closes.size()) {
    throw ShapeError("price series: " + std::to_string(p.timestamps.size()) + " timestamps but " +
                     std::to_string(p.closes.size()) + " closes");
  }
  if (p.size() < 2) throw SizeError("price series needs at least 2 observations");
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p.timestamps[i] <= p.timestamps[i - 1]) {
      throw OrderingError("price series: timestamp at index " + std::to_string(i) +
                          " is not after its predecessor");
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p.closes[i] > 0.0) || !std::isfinite(p.closes[i])) {
      throw DomainError("price series: close at index " + std::to_string(i) + " is not positive");
    }
  }
}

inline ReturnSeries log_returns(std::span<const double> closes) {
  if (closes.size() < 2) throw SizeError("log_returns needs at least 2 closes");
  for (std::size_t i = 0; i < closes.size(); ++i) {
    if (!(closes[i] > 0.0) || !std::isfinite(closes[i])) {
      throw DomainError("log_returns: close at index " + std::to_string(i) + " is not positive");
    }
  }
  ReturnSeries out;
  out.values.resize(closes.size() - 1);
  for (std::size_t i = 0; i + 1 < closes.size(); ++i) {
    out.values[i] = std::log(closes[i + 1]) - std::log(closes[i]);
  }
  return out;
}

inline ReturnSeries log_returns(const PriceSeries& p) { return log_returns(p.closes); }

inline double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Population (1/n) standard deviation.
inline double population_std(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

/// Standardizes to zero mean and unit population variance. The input's mean
/// and std are stored on the result so denormalize() can undo the map.
inline ReturnSeries normalize(const ReturnSeries& r) {
  if (r.size() < 2) throw SizeError("normalize needs at least 2 values");
  const double m = mean(r.values);
  const double s = population_std(r.values);
  const auto [lo, hi] = std::minmax_element(r.values.begin(), r.values.end());
  if (*lo == *hi || !(s > 0.0)) throw DomainError("normalize: series has zero variance");
  ReturnSeries out;
  out.values.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out.values[i] = (r.values[i] - m) / s;
  out.source_mean = m;
  out.source_std = s;
  return out;
}

inline double denormalize(double z, double source_mean, double source_std) {
  return z * source_std + source_mean;
}

/// Principal branch of the Lambert W function.
///
/// Halley's iteration from a branch-safe start; if it fails to settle, the
/// root is bracketed and bisected instead. The residual |w e^w - x| is within
/// 1e-12 relative to max(1, |x|).
inline double lambert_w0(double x) {
  constexpr double kInvE = 0.36787944117144233;
  if (std::isnan(x) || x < -kInvE) {
    throw DomainError("lambert_w0: argument " + std::to_string(x) + " is below -1/e");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  const double tol = 1e-15 * std::max(1.0, std::abs(x));
  auto residual = [x](double w) { return w * std::exp(w) - x; };

  // Near the branch point the series in p = sqrt(2(e x + 1)) is accurate.
  double w;
  const double q = x + kInvE;
  if (q < 1e-3) {
    const double p = std::sqrt(2.0 * std::exp(1.0) * q);
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x < 1.0) {
    w = std::log1p(x);
    w = w * (1.0 - std::log1p(w) / (2.0 + w));
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(std::max(l1, 1e-300));
    w = x < 3.0 ? std::log1p(x) * 0.8 : l1 - l2 + l2 / l1;
  }

  bool converged = false;
  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= tol) {
      converged = true;
      break;
    }
    const double wp1 = w + 1.0;
    if (wp1 <= 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double next = w - f / denom;
    if (!std::isfinite(next) || next < -1.0) break;
    if (next == w) {
      converged = true;
      break;
    }
    w = next;
  }
  if (converged && w >= -1.0) return w;

  // Bisection fallback; w e^w is increasing on [-1, inf).
  double lo = -1.0;
  double hi = std::max(1.0, std::log(std::max(x, 1.0)) + 1.0);
  while (residual(hi) < 0.0) hi *= 2.0;
  for (int iter = 0; iter < 2000 && hi - lo > 0.0; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (residual(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
}

/// Heavy-tail removal: maps a standardized observation onto its latent
/// Gaussian value u = sgn(z) sqrt(W0(delta z^2) / delta), with z taken
/// relative to params.mu and params.sigma.
inline double gaussianize(double z, const LambertParams& params) {
  const double x = (z - params.mu) / params.sigma;
  if (params.delta <= kDeltaMin || x == 0.0) return x;
  const double u = std::sqrt(lambert_w0(params.delta * x * x) / params.delta);
  return std::copysign(u, x);
}

/// Inverse of gaussianize: z = mu + sigma * u exp(delta u^2 / 2).
inline double degaussianize(double u, const LambertParams& params) {
  if (params.delta <= kDeltaMin) return params.mu + params.sigma * u;
  const double expo = 0.5 * params.delta * u * u;
  const double scale = std::exp(expo);
  const double z = u * scale;
  if (!std::isfinite(scale) || !std::isfinite(z)) {
    throw NumericError("degaussianize: exp overflow for u=" + std::to_string(u) +
                       ", delta=" + std::to_string(params.delta));
  }
  return params.mu + params.sigma * z;
}

inline double excess_kurtosis(std::span<const double> xs) {
  const double m = mean(xs);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : xs) {
    const double d = (x - m) * (x - m);
    m2 += d;
    m4 += d * d;
  }
  const double n = static_cast<double>(xs.size());
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

/// Estimates the tail parameter by iterated kurtosis matching.
///
/// Each round gaussianizes the samples with the current delta, re-estimates
/// the latent location and scale from the back-transformed values, and moves
/// delta by a bounded step in the direction that drives the excess kurtosis of
/// the latent values to zero. The step halves whenever the sign of the excess
/// kurtosis flips. delta stays within [0, 5].
inline LambertParams fit_delta(std::span<const double> samples) {
  if (samples.size() < 100) throw SizeError("fit_delta needs at least 100 samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw DomainError("fit_delta: sample at index " + std::to_string(i) + " is not finite");
    }
  }
  constexpr double kMaxDelta = 5.0;
  constexpr double kTolerance = 0.01;
  constexpr int kMaxIterations = 200;

  LambertParams params;
  params.mu = mean(samples);
  params.sigma = population_std(samples);
  if (!(params.sigma > 0.0)) throw DomainError("fit_delta: samples have zero variance");

  std::vector<double> latent(samples.size());
  double step = 0.05;
  double previous_sign = 0.0;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    for (std::size_t i = 0; i < samples.size(); ++i) latent[i] = gaussianize(samples[i], params);
    const double kurt = excess_kurtosis(latent);
    if (std::abs(kurt) <= kTolerance) break;

    // Back-transformed values y = mu + sigma * u carry the latent moments.
    const double latent_mean = mean(latent);
    const double latent_std = population_std(latent);
    params.mu += params.sigma * latent_mean;
    params.sigma *= latent_std;

    const double sign = kurt > 0.0 ? 1.0 : -1.0;
    if (previous_sign != 0.0 && sign != previous_sign) step *= 0.5;
    previous_sign = sign;
    const double move = std::clamp(0.02 * kurt, -step, step);
    const double next = std::clamp(params.delta + move, 0.0, kMaxDelta);
    if (next == params.delta) break;  // pinned at a bound
    params.delta = next;
  }
  if (params.delta <= kDeltaMin) {
    params.delta = 0.0;
    params.mu = mean(samples);
    params.sigma = population_std(samples);
  }
  return params;
}

/// Overlapping windows s_{t-m}..s_t of `spec.length` values, `spec.stride` apart.
inline std::vector<ReturnWindow> windows(std::span<const double> r, const WindowSpec& spec) {
  if (spec.length < 2) throw ConfigError("window length must be at least 2");
  if (spec.stride < 1) throw ConfigError("window stride must be at least 1");
  if (r.size() < spec.length) {
    throw SizeError("series of length " + std::to_string(r.size()) +
                    " is shorter than window length " + std::to_string(spec.length));
  }
  std::vector<ReturnWindow> out;
  for (std::size_t start = 0; start + spec.length <= r.size(); start += spec.stride) {
    out.emplace_back(r.begin() + static_cast<std::ptrdiff_t>(start),
                     r.begin() + static_cast<std::ptrdiff_t>(start + spec.length));
  }
  return out;
}

/// Recorded preprocessing state: enough to push returns into model space
/// and to pull generated values back out.
struct PreprocessStats {
  double mean = 0.0;
  double std = 1.0;
  LambertParams lambert;
};

struct Prepared {
  std::vector<double> gaussianized;
  PreprocessStats stats;
};

inline Prepared prepare_returns(const ReturnSeries& r) {
  const ReturnSeries z = normalize(r);
  Prepared out;
  out.stats.mean = z.source_mean;
  out.stats.std = z.source_std;
  out.stats.lambert = fit_delta(z.values);
  out.gaussianized.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out.gaussianized[i] = gaussianize(z.values[i], out.stats.lambert);
  }
  return out;
}

inline std::vector<double> apply_preprocess(std::span<const double> returns,
                                            const PreprocessStats& s) {
  std::vector<double> out(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) {
    out[i] = gaussianize((returns[i] - s.mean) / s.std, s.lambert);
  }
  return out;
}

inline std::vector<double> invert_preprocess(std::span<const double> latent,
                                             const PreprocessStats& s) {
  std::vector<double> out(latent.size());
  for (std::size_t i = 0; i < latent.size(); ++i) {
    out[i] = denormalize(degaussianize(latent[i], s.lambert), s.mean, s.std);
  }
  return out;
}

}  // namespace siggan

#endif  // SIGGAN_PREPROCESS_HPP
