#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "siggan/metrics.hpp"

using namespace siggan;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

std::vector<double> small_sample(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 10);
  std::uniform_int_distribution<int> coarse(-4, 4);
  std::normal_distribution<double> fine(0.0, 2.0);
  std::vector<double> v(static_cast<std::size_t>(size(rng)));
  // Half the instances use a coarse grid so ties and shared atoms occur.
  const bool tied = rng() % 2 == 0;
  for (double& x : v) x = tied ? coarse(rng) : fine(rng);
  return v;
}

}  // namespace

TEST(KDayAggregate, Values) {
  const std::vector<double> r{1, 2, 3};
  EXPECT_EQ(k_day_aggregate(r, 1), r);
  EXPECT_EQ(k_day_aggregate(r, 2), (std::vector<double>{3, 5}));
  EXPECT_EQ(k_day_aggregate(r, 3), (std::vector<double>{6}));
  EXPECT_THROW(k_day_aggregate(r, 4), SizeError);
  EXPECT_THROW(k_day_aggregate(r, 0), SizeError);

  const auto x = gaussian(100, 1);
  const auto agg = k_day_aggregate(x, 5);
  double strided = 0.0;
  for (std::size_t i = 0; i < agg.size(); i += 5) strided += agg[i];
  double total = 0.0;
  for (double v : x) total += v;
  EXPECT_NEAR(strided, total, 1e-12);
}

TEST(Emd, HandValues) {
  EXPECT_EQ(emd_1d(std::vector<double>{0}, std::vector<double>{1}), 1.0);
  EXPECT_EQ(emd_1d(std::vector<double>{0, 1}, std::vector<double>{0.5, 1.5}), 0.5);
  const auto x = gaussian(50, 2);
  EXPECT_EQ(emd_1d(x, x), 0.0);
  EXPECT_NEAR(emd_1d(std::vector<double>{0, 2}, std::vector<double>{1}), 1.0, 1e-15);
  EXPECT_NEAR(emd_1d(std::vector<double>{0, 0, 3}, std::vector<double>{0, 3}), 0.5, 1e-15);
  EXPECT_THROW(emd_1d(std::vector<double>{}, x), SizeError);
}

TEST(Emd, MatchesTransportationOracle) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const auto a = small_sample(rng);
    const auto b = small_sample(rng);
    EXPECT_NEAR(emd_1d(a, b), oracle::transport_cost(a, b), 1e-9) << "instance " << rep;
  }
}

TEST(Emd, MetricAxioms) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = small_sample(rng);
    const auto y = small_sample(rng);
    const auto z = small_sample(rng);
    const double xy = emd_1d(x, y);
    EXPECT_GE(xy, 0.0);
    EXPECT_EQ(xy, emd_1d(y, x));
    EXPECT_LE(xy, emd_1d(x, z) + emd_1d(z, y) + 1e-12);
    auto shuffled = x;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(emd_1d(x, shuffled), 0.0);
    if (std::multiset<double>(x.begin(), x.end()) != std::multiset<double>(y.begin(), y.end()) &&
        x.size() == y.size()) {
      EXPECT_GT(xy, 0.0);
    }
  }
}

TEST(Emd, ScalesLinearly) {
  const auto x = gaussian(40, 5);
  const auto y = gaussian(27, 6);
  const double base = emd_1d(x, y);
  for (double c : {-3.0, 0.5, 2.0, 100.0}) {
    std::vector<double> cx(x);
    std::vector<double> cy(y);
    for (double& v : cx) v *= c;
    for (double& v : cy) v *= c;
    EXPECT_NEAR(emd_1d(cx, cy), std::abs(c) * base, 1e-12 * std::abs(c) * (1.0 + base));
  }
}

TEST(SigRmse, ZeroAndPermutationInvariance) {
  std::vector<std::vector<double>> ws;
  for (std::uint64_t s = 0; s < 12; ++s) ws.push_back(gaussian(24, 100 + s, 0.01));
  EXPECT_EQ(sig_rmse(ws, ws, 5), 0.0);
  auto rev = ws;
  std::reverse(rev.begin(), rev.end());
  std::vector<std::vector<double>> other;
  for (std::uint64_t s = 0; s < 9; ++s) other.push_back(gaussian(24, 200 + s, 0.01));
  EXPECT_NEAR(sig_rmse(ws, other, 5), sig_rmse(rev, other, 5), 1e-15);
  EXPECT_GT(sig_rmse(ws, other, 1), 0.0);
  EXPECT_THROW(sig_rmse({}, other, 1), SizeError);
}

TEST(SigRmse, DisjointHalvesAgreeWithinBootstrapSpread) {
  std::vector<std::vector<double>> ws;
  for (std::uint64_t s = 0; s < 400; ++s) ws.push_back(gaussian(20, 1000 + s, 0.5));
  const std::vector<std::vector<double>> a(ws.begin(), ws.begin() + 200);
  const std::vector<std::vector<double>> b(ws.begin() + 200, ws.end());
  const double split = sig_rmse(a, b, 1);

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, ws.size() - 1);
  double spread = 0.0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> y;
    for (int i = 0; i < 200; ++i) {
      x.push_back(ws[pick(rng)]);
      y.push_back(ws[pick(rng)]);
    }
    spread += sig_rmse(x, y, 1) / reps;
  }
  EXPECT_LT(split, 3.0 * spread);

  std::vector<std::vector<double>> wide;
  for (std::uint64_t s = 0; s < 200; ++s) wide.push_back(gaussian(20, 5000 + s, 1.5));
  EXPECT_GT(sig_rmse(a, wide, 1), 3.0 * spread);
}

TEST(Leverage, HandCorrelationAndProperties) {
  const auto x = gaussian(300, 8);
  const auto prof = leverage_profile(x, 10);
  ASSERT_EQ(prof.size(), 10u);
  for (double v : prof) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  // Direct Pearson correlation at lag 3.
  const std::size_t n = x.size() - 3;
  std::vector<double> a(x.begin(), x.begin() + static_cast<long>(n));
  std::vector<double> b;
  for (std::size_t t = 3; t < x.size(); ++t) b.push_back(x[t] * x[t]);
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) sab += (a[i] - ma) * (b[i] - mb);
  const double corr = sab / (static_cast<double>(n) * population_std(a) * population_std(b));
  EXPECT_NEAR(prof[2], corr, 1e-12);

  const auto y = gaussian(300, 9);
  EXPECT_EQ(leverage_effect_score(x, x), 0.0);
  EXPECT_EQ(leverage_effect_score(x, y), leverage_effect_score(y, x));
  EXPECT_THROW(leverage_profile(std::vector<double>(39, 1.0), 10), SizeError);
  EXPECT_THROW(leverage_profile(std::vector<double>(40, 1.0), 10), DomainError);
}

TEST(Leverage, IndependentGaussianStreamsScoreLow) {
  EXPECT_LE(leverage_effect_score(gaussian(5000, 10), gaussian(5000, 11)), 0.1);
}

TEST(Leverage, DetectsNegativeReturnVolatilityLink) {
  // Volatility rises after negative returns.
  const auto z = gaussian(5000, 12);
  std::vector<double> r(z.size());
  double prev = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    const double vol = prev < 0.0 ? 2.0 : 0.5;
    r[t] = vol * z[t];
    prev = r[t];
  }
  EXPECT_LT(leverage_profile(r, 10)[0], -0.2);
  EXPECT_GT(leverage_effect_score(r, gaussian(5000, 13)), 0.05);
}

TEST(Report, LabelsOrderAndScaling) {
  const auto x = gaussian(600, 14, 0.01);
  const auto rep = build_report(x, x);
  const std::vector<std::string> labels{"EMD(1)",      "EMD(5)",      "EMD(20)",      "EMD(100)",
                                        "Sig-RMSE(1)", "Sig-RMSE(5)", "Sig-RMSE(20)", "Sig-RMSE(100)",
                                        "Leverage Effect"};
  ASSERT_EQ(rep.rows.size(), labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_EQ(rep.rows[i].label, labels[i]);
    EXPECT_EQ(rep.rows[i].value, 0.0);
  }
  MetricRow row{"EMD(1)", 0.0016110};
  EXPECT_NEAR(row.display(), 0.1611, 1e-12);

  const auto y = gaussian(600, 15, 0.01);
  const auto diff = build_report(x, y);
  for (const auto& r : diff.rows) {
    EXPECT_GT(r.value, 0.0) << r.label;
    EXPECT_TRUE(std::isfinite(r.value));
  }
  EXPECT_EQ(diff.at("Leverage Effect").value, diff.rows.back().value);
  EXPECT_THROW(diff.at("ACF"), DataError);
  EXPECT_THROW(build_report(gaussian(118, 1), gaussian(600, 2)), SizeError);
  EXPECT_NO_THROW(build_report(gaussian(119, 1), gaussian(600, 2)));
}

TEST(Report, CsvAndText) {
  const auto x = gaussian(200, 16, 0.01);
  const auto y = gaussian(200, 17, 0.02);
  const auto rep = build_report(x, y);
  const std::string csv = report_csv(rep);
  EXPECT_EQ(csv.rfind("metric,value,value_x100\nEMD(1),", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
  EXPECT_NE(csv.find("\nLeverage Effect,"), std::string::npos);
  const std::string text = report_text(rep);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
  EXPECT_NE(text.find("Sig-RMSE(100)"), std::string::npos);
}

TEST(Histogram, SharedBinsCountEverything) {
  const auto x = gaussian(500, 18);
  const auto y = gaussian(300, 19, 2.0);
  const auto h = joint_histogram(x, y, 25);
  ASSERT_EQ(h.size(), 25u);
  std::size_t nr = 0;
  std::size_t nf = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    nr += h[i].count_real;
    nf += h[i].count_fake;
    EXPECT_LT(h[i].left, h[i].right);
    if (i > 0) {
      EXPECT_EQ(h[i].left, h[i - 1].right);
    }
  }
  EXPECT_EQ(nr, 500u);
  EXPECT_EQ(nf, 300u);
  EXPECT_EQ(h.front().left, std::min(*std::min_element(x.begin(), x.end()), *std::min_element(y.begin(), y.end())));
  EXPECT_THROW(joint_histogram(x, y, 0), ConfigError);
  EXPECT_TRUE(joint_histogram({}, {}, 5).empty());

  const auto flat = joint_histogram(std::vector<double>{2, 2}, std::vector<double>{2}, 4);
  EXPECT_EQ(flat.front().count_real, 2u);
  const std::string csv = histogram_csv(h);
  EXPECT_EQ(csv.rfind("bin_left,bin_right,count_real,count_fake\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 26);
}
