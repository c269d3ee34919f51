// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance <fixture.csv>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "siggan/commands.hpp"

using namespace siggan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- signatures

Path random_path(std::size_t points, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Path p{2, {}};
  double x[2] = {};
  for (std::size_t i = 0; i < points; ++i) {
    for (double& c : x) {
      if (i > 0) c += dist(rng);
      p.points.push_back(c);
    }
  }
  return p;
}

Path sub_path(const Path& p, std::size_t from, std::size_t to) {
  Path out{p.dim, {}};
  for (std::size_t i = from; i <= to; ++i) {
    const auto pt = p.point(i);
    out.points.insert(out.points.end(), pt.begin(), pt.end());
  }
  return out;
}

double max_diff(const SignatureVector& a, const SignatureVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Outcome signature_correctness() {
  Outcome o;
  std::mt19937_64 rng(101);
  double chen = 0.0;
  double assoc = 0.0;
  double shuffle = 0.0;
  double quad = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Path p = random_path(9, rng);
    chen = std::max(chen, max_diff(path_signature(p, 5),
                                   chen_concat(path_signature(sub_path(p, 0, 4), 5),
                                               path_signature(sub_path(p, 4, 8), 5))));
    const auto a = path_signature(random_path(4, rng), 5);
    const auto b = path_signature(random_path(4, rng), 5);
    const auto c = path_signature(random_path(4, rng), 5);
    assoc = std::max(assoc, max_diff(chen_concat(chen_concat(a, b), c), chen_concat(a, chen_concat(b, c))));
    const auto s = path_signature(random_path(15, rng), 5);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        shuffle = std::max(shuffle, std::abs(s.word({i}) * s.word({j}) - s.word({i, j}) - s.word({j, i})));
      }
    }
  }
  for (int rep = 0; rep < 40; ++rep) {
    const Path p = random_path(2 + rep % 4, rng);
    const auto s = path_signature(p, 5);
    std::vector<std::vector<std::size_t>> words{{0}, {1}};
    for (std::size_t len = 2; len <= 3; ++len) {
      const std::size_t count = std::size_t{1} << len;
      for (std::size_t code = 0; code < count; ++code) {
        std::vector<std::size_t> w(len);
        for (std::size_t k = 0; k < len; ++k) w[k] = (code >> k) & 1U;
        words.push_back(w);
      }
    }
    for (const auto& w : words) {
      quad = std::max(quad, std::abs(s.word(std::span<const std::size_t>(w)) -
                                     oracle::IteratedIntegral(p, w).value()));
    }
  }
  o.require(chen <= 1e-12, "Chen identity error " + fmt("%.3g", chen));
  o.require(assoc <= 1e-12, "associativity error " + fmt("%.3g", assoc));
  o.require(shuffle <= 1e-10, "shuffle error " + fmt("%.3g", shuffle));
  o.require(quad <= 1e-6, "quadrature error " + fmt("%.3g", quad));
  o.require(signature_length(2, 5) == 63 && SignatureVector(2, 5).size() == 63, "coefficient count");
  if (o.pass) {
    o.detail = "chen " + fmt("%.1e", chen) + ", assoc " + fmt("%.1e", assoc) + ", shuffle " +
               fmt("%.1e", shuffle) + ", quadrature " + fmt("%.1e", quad) + ", 63 coefficients";
  }
  return o;
}

// ---------------------------------------------------------------- visibility

std::vector<double> random_series(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

Outcome visibility_correctness() {
  Outcome o;
  std::size_t mismatches = 0;
  std::size_t affine_breaks = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto v = random_series(128, 7000 + seed);
    for (auto dir : {GraphDirection::Undirected, GraphDirection::LeftToRight}) {
      const auto g = natural_visibility(v, dir);
      if (!(g == brute_force_visibility(v, default_timestamps(v.size()), dir))) ++mismatches;
      for (double a : {0.5, 2.0, 10.0}) {
        for (double b : {-5.0, 0.0, 7.0}) {
          std::vector<double> w(v.size());
          for (std::size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
          if (!(natural_visibility(w, dir) == g)) ++affine_breaks;
        }
      }
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " graphs differ from brute force");
  o.require(affine_breaks == 0, std::to_string(affine_breaks) + " affine maps change the graph");
  if (o.pass) o.detail = "400 graphs equal brute force, 3600 affine images unchanged";
  return o;
}

// ---------------------------------------------------------------- gradients

Tensor random_tensor(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  return scale * standard_normal(r, c, rng);
}

Var project(Tape& t, Var y, std::uint64_t seed) {
  return nn::sum(nn::hadamard(y, t.constant(random_tensor(y.value().rows(), y.value().cols(), seed))));
}

Outcome gradient_suite() {
  Outcome o;
  struct Case {
    std::string name;
    std::function<double(Eigen::Index, Eigen::Index, std::uint64_t)> error;
  };
  auto unary = [](std::function<Var(Var)> op) {
    return [op](Eigen::Index r, Eigen::Index c, std::uint64_t s) {
      return oracle::gradient_error({random_tensor(r, c, s)},
                                    [&](Tape& t, std::span<const Var> v) { return project(t, op(v[0]), s + 1); });
    };
  };
  std::vector<Case> cases{
      {"dense",
       [](Eigen::Index r, Eigen::Index c, std::uint64_t s) {
         return oracle::gradient_error(
             {random_tensor(r, c, s), random_tensor(c, 3, s + 1), random_tensor(1, 3, s + 2)},
             [&](Tape& t, std::span<const Var> v) { return project(t, nn::dense_forward(v[0], v[1], v[2]), s + 3); });
       }},
      {"lstm",
       [](Eigen::Index r, Eigen::Index c, std::uint64_t s) {
         const Eigen::Index h = 3;
         return oracle::gradient_error(
             {random_tensor(r, c, s), random_tensor(c, 4 * h, s + 1, 0.5), random_tensor(h, 4 * h, s + 2, 0.5),
              random_tensor(1, 4 * h, s + 3, 0.5)},
             [&](Tape& t, std::span<const Var> v) {
               return project(t, nn::lstm_forward(v[0], v[1], v[2], v[3]), s + 4);
             });
       }},
      {"gcn",
       [](Eigen::Index r, Eigen::Index c, std::uint64_t s) {
         const auto series = random_series(static_cast<std::size_t>(r), s);
         const Tensor norm = window_adjacency(series, GraphDirection::Undirected);
         return oracle::gradient_error({random_tensor(r, c, s + 1), random_tensor(c, 2, s + 2)},
                                       [&](Tape& t, std::span<const Var> v) {
                                         return project(t, nn::gcn_forward(v[0], norm, v[1]), s + 3);
                                       });
       }},
      {"tanh", unary([](Var x) { return nn::tanh(x); })},
      {"sigmoid", unary([](Var x) { return nn::sigmoid(x); })},
      {"prelu", unary([](Var x) { return nn::prelu(x); })},
      {"softmax", unary([](Var x) { return nn::softmax(x); })},
      {"dropout",
       [](Eigen::Index r, Eigen::Index c, std::uint64_t s) {
         return oracle::gradient_error({random_tensor(r, c, s)}, [&](Tape& t, std::span<const Var> v) {
           Rng mask(s + 1);
           return project(t, nn::dropout(v[0], 0.3, true, mask), s + 2);
         });
       }},
      {"lead-lag signature",
       [](Eigen::Index r, Eigen::Index, std::uint64_t s) {
         return oracle::gradient_error({random_tensor(r + 1, 1, s, 0.5)}, [&](Tape& t, std::span<const Var> v) {
           return project(t, nn::series_signature(v[0], 5, nn::SignatureKind::LeadLag), s + 1);
         });
       }},
      {"cumulative signature",
       [](Eigen::Index r, Eigen::Index, std::uint64_t s) {
         return oracle::gradient_error({random_tensor(r + 1, 1, s, 0.5)}, [&](Tape& t, std::span<const Var> v) {
           return project(t, nn::series_signature(v[0], 5, nn::SignatureKind::Cumulative), s + 1);
         });
       }},
      {"MSE signature loss",
       [](Eigen::Index r, Eigen::Index, std::uint64_t s) {
         return oracle::gradient_error({random_tensor(r + 2, 1, s, 0.5), random_tensor(r + 2, 1, s + 1, 0.5)},
                                       [](Tape&, std::span<const Var> v) { return sig_loss(LossKind::Mse, v[0], v[1], 5); });
       }},
      {"KLD signature loss",
       [](Eigen::Index r, Eigen::Index, std::uint64_t s) {
         return oracle::gradient_error({random_tensor(r + 2, 1, s, 0.5), random_tensor(r + 2, 1, s + 1, 0.5)},
                                       [](Tape&, std::span<const Var> v) { return sig_loss(LossKind::Kld, v[0], v[1], 5); });
       }},
  };
  const std::pair<Eigen::Index, Eigen::Index> shapes[] = {{2, 1}, {4, 3}, {7, 2}};
  double worst = 0.0;
  std::uint64_t seed = 300;
  for (const auto& c : cases) {
    for (const auto& [r, cols] : shapes) {
      const double e = c.error(r, cols, seed);
      seed += 10;
      worst = std::max(worst, e);
      o.require(e <= 1e-4, c.name + " relative error " + fmt("%.3g", e));
    }
  }
  if (o.pass) o.detail = std::to_string(cases.size()) + " cases x 3 shapes, worst " + fmt("%.2e", worst);
  return o;
}

// ---------------------------------------------------------------- EMD

std::vector<double> small_sample(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 10);
  std::uniform_int_distribution<int> coarse(-4, 4);
  std::normal_distribution<double> fine(0.0, 2.0);
  std::vector<double> v(static_cast<std::size_t>(size(rng)));
  const bool tied = rng() % 2 == 0;
  for (double& x : v) x = tied ? coarse(rng) : fine(rng);
  return v;
}

Outcome emd_correctness() {
  Outcome o;
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto a = small_sample(rng);
    const auto b = small_sample(rng);
    worst = std::max(worst, std::abs(emd_1d(a, b) - oracle::transport_cost(a, b)));
  }
  o.require(worst <= 1e-9, "LP oracle difference " + fmt("%.3g", worst));
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = small_sample(rng);
    const auto y = small_sample(rng);
    const auto z = small_sample(rng);
    const double xy = emd_1d(x, y);
    o.require(xy >= 0.0, "negative distance");
    o.require(xy == emd_1d(y, x), "asymmetric");
    o.require(emd_1d(x, x) == 0.0, "nonzero self distance");
    o.require(xy <= emd_1d(x, z) + emd_1d(z, y) + 1e-12, "triangle inequality");
  }
  if (o.pass) o.detail = "max LP difference " + fmt("%.1e", worst) + ", axioms hold on 100 triples";
  return o;
}

// ---------------------------------------------------------------- baselines

PriceSeries closes_only(std::vector<double> closes) {
  PriceSeries p;
  p.closes = std::move(closes);
  return p;
}

Outcome baseline_recovery() {
  Outcome o;
  GarchParams avg{0, 0, 0};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const GarchParams fit = garch_fit(garch_simulate({0.1, 0.1, 0.8}, 5000, rng));
    avg.omega += fit.omega / 5.0;
    avg.alpha += fit.alpha / 5.0;
    avg.beta += fit.beta / 5.0;
  }
  o.require(std::abs(avg.omega - 0.1) <= 0.07 && std::abs(avg.alpha - 0.1) <= 0.07 &&
                std::abs(avg.beta - 0.8) <= 0.07,
            "GARCH mean fit (" + fmt("%.3f", avg.omega) + ", " + fmt("%.3f", avg.alpha) + ", " +
                fmt("%.3f", avg.beta) + ")");

  const GbmParams truth{0.05, 0.2, 100.0};
  Rng rng(6);
  const GbmParams fit = gbm_fit(closes_only(gbm_simulate(truth, 5000, 1, rng).front()));
  const double sigma_err = std::abs(fit.sigma - truth.sigma) / truth.sigma;
  o.require(sigma_err <= 0.05, "GBM sigma error " + fmt("%.3f", sigma_err));

  const GbmParams mc{0.001, 0.02, 100.0};
  const std::size_t steps = 20;
  Rng mc_rng(8);
  double sum = 0.0;
  double sq = 0.0;
  for (const auto& path : gbm_simulate(mc, steps, 100000, mc_rng)) {
    sum += path.back();
    sq += path.back() * path.back();
  }
  const double mean_t = sum / 1e5;
  const double se = std::sqrt((sq / 1e5 - mean_t * mean_t) / 1e5);
  const double z = (mean_t - mc.s0 * std::exp(mc.mu * static_cast<double>(steps))) / se;
  o.require(std::abs(z) <= 3.0, "GBM terminal mean off by " + fmt("%.2f", z) + " SE");
  if (o.pass) {
    o.detail = "GARCH (" + fmt("%.3f", avg.omega) + ", " + fmt("%.3f", avg.alpha) + ", " +
               fmt("%.3f", avg.beta) + "), sigma error " + fmt("%.2f%%", 100 * sigma_err) +
               ", terminal mean " + fmt("%+.2f", z) + " SE";
  }
  return o;
}

// ---------------------------------------------------------------- preprocessing

Outcome preprocessing_round_trip() {
  Outcome o;
  std::mt19937_64 rng(606);
  std::normal_distribution<double> dist;
  std::vector<double> u(10000);
  for (double& v : u) v = dist(rng);

  std::vector<double> r;
  for (std::size_t i = 0; i < 3000; ++i) r.push_back(0.0004 + 0.011 * degaussianize(u[i], {0.25, 0, 1}));
  const Prepared prep = prepare_returns(ReturnSeries{r});
  const auto back = invert_preprocess(prep.gaussianized, prep.stats);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(back[i] - r[i]));
  o.require(worst <= 1e-9, "round-trip error " + fmt("%.3g", worst));

  std::vector<double> heavy(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) heavy[i] = degaussianize(u[i], {0.3, 0, 1});
  const double delta = fit_delta(heavy).delta;
  o.require(std::abs(delta - 0.3) <= 0.1, "delta estimate " + fmt("%.3f", delta));
  if (o.pass) o.detail = "round trip " + fmt("%.1e", worst) + ", delta " + fmt("%.3f", delta);
  return o;
}

// ---------------------------------------------------------------- smoke training

SigGanConfig smoke_config() {
  SigGanConfig c = SigGanConfig::defaults(LossKind::Mse);
  c.seq_len = 20;
  c.noise_features = 1;
  c.gnn_neurons = 16;
  c.geo_lstm_neurons = 16;
  c.rec_lstm_neurons = 16;
  c.gnn_layers = 1;
  c.rec_lstm_layers = 1;
  c.batch_size = 10;
  c.epochs = 10;
  c.seed = 0;
  return c;
}

struct SmokeRun {
  TrainResult result;
  double seconds = 0.0;
};

SmokeRun smoke_train(const ReturnSplit& split) {
  const auto t0 = std::chrono::steady_clock::now();
  SmokeRun run{train(split.train, smoke_config()), 0.0};
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

Outcome smoke_training(const ReturnSplit& split, SmokeRun& run) {
  Outcome o;
  run = smoke_train(split);
  const auto& trace = run.result.loss_trace;
  o.require(trace.size() == 10, "loss trace has " + std::to_string(trace.size()) + " epochs");
  o.require(trace.back() < trace.front(),
            "generator loss " + fmt("%.6g", trace.front()) + " -> " + fmt("%.6g", trace.back()));

  SigGanConfig untrained_cfg = smoke_config();
  untrained_cfg.epochs = 0;
  TrainResult untrained = train(split.train, untrained_cfg);
  const auto fake = flatten(generate(run.result.checkpoint, split.held_out, 200, 0));
  const auto base = flatten(generate(untrained.checkpoint, split.held_out, 200, 0));
  const double emd_trained = emd_1d(split.held_out.values, fake);
  const double emd_untrained = emd_1d(split.held_out.values, base);
  o.require(emd_trained < emd_untrained,
            "EMD(1) " + fmt("%.6g", emd_trained) + " vs untrained " + fmt("%.6g", emd_untrained));
  o.require(run.seconds < 300.0, "training took " + fmt("%.0f", run.seconds) + " s");
  if (o.pass) {
    o.detail = "loss " + fmt("%.6g", trace.front()) + " -> " + fmt("%.6g", trace.back()) + ", EMD(1) " +
               fmt("%.6f", emd_trained) + " vs untrained " + fmt("%.6f", emd_untrained) + ", training " +
               fmt("%.0f", run.seconds) + " s";
  }
  return o;
}

// ---------------------------------------------------------------- report

Outcome report_fidelity(const fs::path& fixture) {
  Outcome o;
  const auto dir = fs::temp_directory_path() / "siggan_acceptance_report";
  fs::remove_all(dir);
  const MetricsReport rep = cmd_evaluate(fixture, fixture, dir);
  const std::vector<std::string> labels{"EMD(1)",      "EMD(5)",      "EMD(20)",      "EMD(100)",
                                        "Sig-RMSE(1)", "Sig-RMSE(5)", "Sig-RMSE(20)", "Sig-RMSE(100)",
                                        "Leverage Effect"};
  o.require(rep.rows.size() == labels.size(), "row count " + std::to_string(rep.rows.size()));
  for (std::size_t i = 0; i < std::min(labels.size(), rep.rows.size()); ++i) {
    o.require(rep.rows[i].label == labels[i], "row " + std::to_string(i) + " label " + rep.rows[i].label);
    o.require(rep.rows[i].value == 0.0 && rep.rows[i].display() == 0.0, labels[i] + " is nonzero");
  }
  o.require(read_file(dir / "report.csv") == report_csv(rep), "report.csv differs from the report");

  // Scaling: a shifted copy gives nonzero values displayed at x100.
  auto shifted = log_returns(read_price_csv(fixture)).values;
  for (double& v : shifted) v += 0.001;
  const MetricsReport diff = build_report(log_returns(read_price_csv(fixture)).values, shifted);
  o.require(std::abs(diff.at("EMD(1)").value - 0.001) <= 1e-12, "shifted EMD(1) " + fmt("%.6g", diff.at("EMD(1)").value));
  for (const auto& row : diff.rows) o.require(row.display() == 100.0 * row.value, row.label + " display scale");
  std::istringstream csv(report_csv(diff));
  std::string line;
  std::getline(csv, line);
  o.require(line == "metric,value,value_x100", "CSV header '" + line + "'");
  std::getline(csv, line);
  const auto f = split_fields(line);
  o.require(f.size() == 3 && std::abs(std::stod(std::string(f[2])) - 0.1) <= 1e-9,
            "EMD(1) displayed as '" + line + "'");
  if (o.pass) o.detail = "9 labelled rows, all zero; shifted EMD(1) 0.001 displays as 0.1";
  return o;
}

// ---------------------------------------------------------------- determinism

Outcome determinism(const ReturnSplit& split, const SmokeRun& first) {
  Outcome o;
  if (first.result.loss_trace.empty()) return Outcome{false, "criterion 7 produced no run"};
  const SmokeRun second = smoke_train(split);
  o.require(serialize_checkpoint(first.result.checkpoint) == serialize_checkpoint(second.result.checkpoint),
            "checkpoints differ");
  o.require(loss_trace_csv(first.result.loss_trace) == loss_trace_csv(second.result.loss_trace),
            "loss traces differ");
  if (o.pass) {
    o.detail = std::to_string(serialize_checkpoint(first.result.checkpoint).size()) +
               "-byte checkpoints and loss traces identical";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <fixture.csv>\n");
    return 2;
  }
  const fs::path fixture = argv[1];
  bool all = true;

  auto report = [&](int n, double limit, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit > 0.0) o.require(secs < limit, "runtime " + fmt("%.1f", secs) + " s over " + fmt("%.0f", limit) + " s");
    all = all && o.pass;
    std::printf("criterion %d: %s (%s; %.1f s)\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, 10.0, signature_correctness);
  report(2, 10.0, visibility_correctness);
  report(3, 60.0, gradient_suite);
  report(4, 0.0, emd_correctness);
  report(5, 120.0, baseline_recovery);
  report(6, 0.0, preprocessing_round_trip);

  ReturnSplit split;
  SmokeRun first;
  bool have_split = false;
  try {
    split = split_returns(log_returns(read_price_csv(fixture)), 0.2);
    have_split = true;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load fixture: %s\n", e.what());
  }
  report(7, 0.0, [&] {
    if (!have_split) return Outcome{false, "fixture missing"};
    return smoke_training(split, first);
  });
  report(8, 0.0, [&] { return report_fidelity(fixture); });
  report(9, 0.0, [&] {
    if (!have_split) return Outcome{false, "fixture missing"};
    return determinism(split, first);
  });
  return all ? 0 : 1;
}
