#ifndef SIGGAN_BASELINES_HPP
#define SIGGAN_BASELINES_HPP

// GARCH(1,1) with Gaussian innovations and geometric Brownian motion, unit
// time step of one trading day.

#include <algorithm>
#include <array>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "siggan/error.hpp"
#include "siggan/preprocess.hpp"
#include "siggan/tensor.hpp"

namespace siggan {

struct GarchParams {
  double omega = 0.1;
  double alpha = 0.1;
  double beta = 0.8;

  double persistence() const { return alpha + beta; }
  double unconditional_variance() const { return omega / (1.0 - alpha - beta); }
};

struct GarchFitOptions {
  std::size_t max_evaluations = 10000;
  double tolerance = 1e-8;
};

inline constexpr std::size_t kGarchBurnIn = 500;

/// Gaussian log-likelihood with the variance recursion started at the sample
/// variance.
inline double garch_log_likelihood(std::span<const double> r, const GarchParams& p) {
  const double var0 = population_std(r) * population_std(r);
  constexpr double log2pi = 1.8378770664093454836;
  double s2 = var0;
  double ll = 0.0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (t > 0) s2 = p.omega + p.alpha * r[t - 1] * r[t - 1] + p.beta * s2;
    ll -= 0.5 * (log2pi + std::log(s2) + r[t] * r[t] / s2);
  }
  return ll;
}

namespace detail {

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Unconditional variance = exp(u0); alpha + beta = logistic(u1);
/// alpha share = logistic(u2).
inline GarchParams garch_from_free(const std::array<double, 3>& u) {
  const double persistence = logistic(u[1]);
  const double share = logistic(u[2]);
  return {std::exp(u[0]) * (1.0 - persistence), persistence * share, persistence * (1.0 - share)};
}

}  // namespace detail

/// Maximum likelihood by pattern search (coordinate exploration with
/// shrinking steps plus extrapolation along successful moves).
inline GarchParams garch_fit(std::span<const double> returns, const GarchFitOptions& opt = {}) {
  if (returns.size() < 200) {
    throw SizeError("garch_fit needs at least 200 returns, got " + std::to_string(returns.size()));
  }
  for (double v : returns) {
    if (!std::isfinite(v)) throw DomainError("garch_fit: non-finite return");
  }
  const double sd = population_std(returns);
  const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
  if (*lo == *hi || !(sd > 0.0)) throw DomainError("garch_fit: returns have zero variance");

  std::size_t evals = 0;
  auto objective = [&](const std::array<double, 3>& u) {
    ++evals;
    const double ll = garch_log_likelihood(returns, detail::garch_from_free(u));
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
  };

  std::array<double, 3> base{std::log(sd * sd), detail::logit(0.85), detail::logit(0.1 / 0.85)};
  double best = objective(base);
  std::array<double, 3> step{0.5, 0.5, 0.5};
  constexpr double kMinStep = 1e-7;

  auto explore = [&](std::array<double, 3> x, double& fx) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (double dir : {1.0, -1.0}) {
        auto y = x;
        y[i] += dir * step[i];
        const double fy = objective(y);
        if (fy > fx) {
          x = y;
          fx = fy;
          break;
        }
      }
    }
    return x;
  };

  while (true) {
    if (evals >= opt.max_evaluations) {
      throw ConvergenceError<GarchParams>(
          "garch_fit did not converge within " + std::to_string(opt.max_evaluations) + " evaluations",
          detail::garch_from_free(base));
    }
    double f = best;
    auto x = explore(base, f);
    const double gain = f - best;
    if (gain > 0.0) {
      // Pattern moves while they keep paying off.
      while (evals < opt.max_evaluations) {
        std::array<double, 3> probe;
        for (std::size_t i = 0; i < 3; ++i) probe[i] = 2.0 * x[i] - base[i];
        base = x;
        best = f;
        double fp = objective(probe);
        const auto next = explore(probe, fp);
        if (!(fp > best)) break;
        x = next;
        f = fp;
      }
      base = x;
      best = f;
      if (gain >= opt.tolerance) continue;
    }
    if (std::max({step[0], step[1], step[2]}) < kMinStep) break;
    for (double& s : step) s *= 0.5;
  }
  return detail::garch_from_free(base);
}

/// r_t = sigma_t z_t with z supplied; the first kGarchBurnIn values are
/// discarded, so `z` needs n + kGarchBurnIn entries.
inline std::vector<double> garch_simulate(const GarchParams& p, std::span<const double> z) {
  if (!(p.omega > 0.0) || p.alpha < 0.0 || p.beta < 0.0 || !(p.alpha + p.beta < 1.0)) {
    throw DomainError("garch_simulate: parameters must satisfy omega > 0, alpha, beta >= 0, "
                      "alpha + beta < 1");
  }
  if (z.size() < kGarchBurnIn) throw SizeError("garch_simulate: noise shorter than the burn-in");
  std::vector<double> out;
  out.reserve(z.size() - kGarchBurnIn);
  double s2 = p.unconditional_variance();
  double prev = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    if (t > 0) s2 = p.omega + p.alpha * prev * prev + p.beta * s2;
    prev = std::sqrt(s2) * z[t];
    if (t >= kGarchBurnIn) out.push_back(prev);
  }
  return out;
}

inline std::vector<double> garch_simulate(const GarchParams& p, std::size_t n, Rng& rng) {
  std::normal_distribution<double> dist;
  std::vector<double> z(n + kGarchBurnIn);
  for (double& v : z) v = dist(rng);
  return garch_simulate(p, z);
}

struct GbmParams {
  double mu = 0.0;
  double sigma = 0.0;
  double s0 = 1.0;
};

inline GbmParams gbm_fit(const PriceSeries& prices) {
  const ReturnSeries r = log_returns(prices);
  const double sd = population_std(r.values);
  return {mean(r.values) + 0.5 * sd * sd, sd, prices.closes.back()};
}

/// Paths of n_steps + 1 prices starting at s0. Path i draws from its own
/// stream seeded by the i-th draw of `rng`.
inline std::vector<std::vector<double>> gbm_simulate(const GbmParams& p, std::size_t n_steps,
                                                     std::size_t n_paths, Rng& rng) {
  if (!(p.sigma >= 0.0) || !(p.s0 > 0.0)) {
    throw DomainError("gbm_simulate: need sigma >= 0 and s0 > 0");
  }
  const double drift = p.mu - 0.5 * p.sigma * p.sigma;
  std::vector<std::vector<double>> paths(n_paths);
  for (auto& path : paths) {
    Rng sub(rng());
    std::normal_distribution<double> dist;
    path.resize(n_steps + 1);
    path[0] = p.s0;
    double log_growth = 0.0;
    for (std::size_t t = 1; t <= n_steps; ++t) {
      log_growth += drift + p.sigma * dist(sub);
      path[t] = p.s0 * std::exp(log_growth);
    }
  }
  return paths;
}

/// Seeded GBM price series on consecutive weekdays from 2010-01-04.
inline PriceSeries gbm_fixture(std::size_t n_prices, const GbmParams& p, std::uint64_t seed) {
  Rng rng(seed);
  const auto path = gbm_simulate(p, n_prices - 1, 1, rng).front();
  PriceSeries out;
  std::chrono::sys_days day{std::chrono::year{2010} / 1 / 4};
  for (double close : path) {
    while (std::chrono::weekday{day} == std::chrono::Saturday ||
           std::chrono::weekday{day} == std::chrono::Sunday) {
      day += std::chrono::days{1};
    }
    out.timestamps.push_back(day);
    out.closes.push_back(close);
    day += std::chrono::days{1};
  }
  return out;
}

}  // namespace siggan

#endif  // SIGGAN_BASELINES_HPP
