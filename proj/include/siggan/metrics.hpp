#ifndef SIGGAN_METRICS_HPP
#define SIGGAN_METRICS_HPP

// Distances between real and synthetic return series.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "siggan/config.hpp"
#include "siggan/error.hpp"
#include "siggan/preprocess.hpp"
#include "siggan/signature.hpp"

namespace siggan {

/// Overlapping k-step sums, stride 1.
inline std::vector<double> k_day_aggregate(std::span<const double> returns, std::size_t k) {
  if (k == 0 || k > returns.size()) {
    throw SizeError("k_day_aggregate: k = " + std::to_string(k) + " with " +
                    std::to_string(returns.size()) + " returns");
  }
  std::vector<double> out(returns.size() - k + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += returns[i + j];
    out[i] = s;
  }
  return out;
}

/// Wasserstein-1 distance between two empirical distributions.
inline double emd_1d(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw SizeError("emd_1d: both samples must be nonempty");
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
  }
  // Integral of |F_a - F_b| over consecutive points of the merged support.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double x = std::min(a.front(), b.front());
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    const double next = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - x);
    x = next;
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
  }
  return total;
}

/// RMSE between the expected lead-lag signatures of the k-step aggregates of
/// two sets of windows.
inline double sig_rmse(const std::vector<std::vector<double>>& real_windows,
                       const std::vector<std::vector<double>>& fake_windows, std::size_t k,
                       std::size_t degree = 5) {
  if (real_windows.empty() || fake_windows.empty()) {
    throw SizeError("sig_rmse: both window sets must be nonempty");
  }
  auto expected = [&](const std::vector<std::vector<double>>& ws) {
    std::vector<SignatureVector> sigs;
    sigs.reserve(ws.size());
    for (const auto& w : ws) sigs.push_back(lead_lag_signature(k_day_aggregate(w, k), degree));
    return expected_signature(sigs);
  };
  const SignatureVector er = expected(real_windows);
  const SignatureVector ef = expected(fake_windows);
  double ss = 0.0;
  for (std::size_t i = 0; i < er.size(); ++i) ss += (er[i] - ef[i]) * (er[i] - ef[i]);
  return std::sqrt(ss / static_cast<double>(er.size()));
}

/// Corr(r_t, r_{t+tau}^2) for tau = 1..tau_max.
inline std::vector<double> leverage_profile(std::span<const double> r, std::size_t tau_max) {
  if (r.size() < tau_max + 30) {
    throw SizeError("leverage effect needs at least tau_max + 30 = " + std::to_string(tau_max + 30) +
                    " returns, got " + std::to_string(r.size()));
  }
  std::vector<double> out;
  for (std::size_t tau = 1; tau <= tau_max; ++tau) {
    const std::size_t n = r.size() - tau;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      mx += r[t];
      my += r[t + tau] * r[t + tau];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double dx = r[t] - mx;
      const double dy = r[t + tau] * r[t + tau] - my;
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
      throw DomainError("leverage effect: series has zero variance at lag " + std::to_string(tau));
    }
    out.push_back(sxy / std::sqrt(sxx * syy));
  }
  return out;
}

inline double leverage_effect_score(std::span<const double> real, std::span<const double> fake,
                                    std::size_t tau_max = 10) {
  const auto a = leverage_profile(real, tau_max);
  const auto b = leverage_profile(fake, tau_max);
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss / static_cast<double>(a.size()));
}

inline constexpr std::size_t kHorizons[] = {1, 5, 20, 100};
/// Aggregated points per window for Sig-RMSE.
inline constexpr std::size_t kSigRmsePoints = 20;

struct MetricRow {
  std::string label;
  double value = 0.0;

  double display() const { return 100.0 * value; }
};

struct MetricsReport {
  std::vector<MetricRow> rows;

  const MetricRow& at(std::string_view label) const {
    for (const auto& r : rows) {
      if (r.label == label) return r;
    }
    throw DataError("no metric named '" + std::string(label) + "'");
  }
};

/// Overlapping windows of length k + kSigRmsePoints - 1 over a flat series.
inline std::vector<std::vector<double>> sig_rmse_windows(std::span<const double> r, std::size_t k) {
  return windows(r, {k + kSigRmsePoints - 1, 1});
}

/// Minimum series length accepted by build_report.
inline std::size_t report_min_length() { return 100 + kSigRmsePoints - 1; }

inline MetricsReport build_report(std::span<const double> real, std::span<const double> fake) {
  const std::size_t need = report_min_length();
  if (real.size() < need || fake.size() < need) {
    throw SizeError("build_report needs at least " + std::to_string(need) +
                    " returns per series, got " + std::to_string(real.size()) + " and " +
                    std::to_string(fake.size()));
  }
  MetricsReport rep;
  for (std::size_t k : kHorizons) {
    rep.rows.push_back({"EMD(" + std::to_string(k) + ")",
                        emd_1d(k_day_aggregate(real, k), k_day_aggregate(fake, k))});
  }
  for (std::size_t k : kHorizons) {
    rep.rows.push_back({"Sig-RMSE(" + std::to_string(k) + ")",
                        sig_rmse(sig_rmse_windows(real, k), sig_rmse_windows(fake, k), k)});
  }
  rep.rows.push_back({"Leverage Effect", leverage_effect_score(real, fake)});
  return rep;
}

inline std::string report_csv(const MetricsReport& rep) {
  std::ostringstream os;
  os << "metric,value,value_x100\n";
  for (const auto& r : rep.rows) {
    os << r.label << ',' << detail::format_double(r.value) << ',' << detail::format_double(r.display())
       << '\n';
  }
  return os.str();
}

/// One metric per line; values are multiplied by 100 in the last column.
inline std::string report_text(const MetricsReport& rep) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "metric" << std::right << std::setw(16) << "raw"
     << std::setw(16) << "x100" << '\n';
  for (const auto& r : rep.rows) {
    os << std::left << std::setw(16) << r.label << std::right << std::setw(16)
       << std::setprecision(6) << std::scientific << r.value << std::setw(16) << std::fixed
       << std::setprecision(4) << r.display() << '\n';
    os.unsetf(std::ios::floatfield);
  }
  return os.str();
}

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count_real = 0;
  std::size_t count_fake = 0;
};

/// Shared equal-width bins over the joint range; the last bin is closed.
inline std::vector<HistogramBin> joint_histogram(std::span<const double> real,
                                                 std::span<const double> fake, std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  if (real.empty() && fake.empty()) return {};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto s : {real, fake}) {
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].left = lo + width * static_cast<double>(b);
    out[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  auto index = [&](double v) {
    const auto b = static_cast<std::size_t>((v - lo) / width);
    return std::min(b, bins - 1);
  };
  for (double v : real) ++out[index(v)].count_real;
  for (double v : fake) ++out[index(v)].count_fake;
  return out;
}

inline std::string histogram_csv(const std::vector<HistogramBin>& h) {
  std::ostringstream os;
  os << "bin_left,bin_right,count_real,count_fake\n";
  for (const auto& b : h) {
    os << detail::format_double(b.left) << ',' << detail::format_double(b.right) << ','
       << b.count_real << ',' << b.count_fake << '\n';
  }
  return os.str();
}

}  // namespace siggan

#endif  // SIGGAN_METRICS_HPP
