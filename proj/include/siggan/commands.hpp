#ifndef SIGGAN_COMMANDS_HPP
#define SIGGAN_COMMANDS_HPP

// The command surface behind tools/siggan. Each cmd_* throws on failure;
// run_guarded maps the exception onto the process exit code.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "siggan/baselines.hpp"
#include "siggan/checkpoint.hpp"
#include "siggan/error.hpp"
#include "siggan/io.hpp"
#include "siggan/metrics.hpp"
#include "siggan/preprocess.hpp"
#include "siggan/run_config.hpp"
#include "siggan/train.hpp"

namespace siggan {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitVersion = 5,
};

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Data:
    case ErrorKind::Parse:
    case ErrorKind::Size:
    case ErrorKind::Domain:
    case ErrorKind::Ordering: return kExitData;
    case ErrorKind::Version: return kExitVersion;
    case ErrorKind::Numeric:
    case ErrorKind::Convergence:
    case ErrorKind::Shape:
    case ErrorKind::Graph: return kExitNumeric;
  }
  return kExitNumeric;
}

inline int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

/// Leading returns for training and the trailing `holdout` fraction.
struct ReturnSplit {
  ReturnSeries train;
  ReturnSeries held_out;
};

inline ReturnSplit split_returns(const ReturnSeries& r, double holdout) {
  const auto n_held = static_cast<std::size_t>(static_cast<double>(r.size()) * holdout);
  const std::size_t cut = r.size() - n_held;
  ReturnSplit s;
  s.train.values.assign(r.values.begin(), r.values.begin() + static_cast<std::ptrdiff_t>(cut));
  s.held_out.values.assign(r.values.begin() + static_cast<std::ptrdiff_t>(cut), r.values.end());
  return s;
}

inline std::vector<double> flatten(const std::vector<ReturnWindow>& ws) {
  std::vector<double> out;
  for (const auto& w : ws) out.insert(out.end(), w.begin(), w.end());
  return out;
}

inline std::string loss_trace_csv(const std::vector<double>& trace) {
  std::ostringstream os;
  os << "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << i << ',' << detail::format_double(trace[i]) << '\n';
  }
  return os.str();
}

inline ReturnSeries load_input_returns(const RunConfig& rc) {
  if (rc.input.empty()) throw ConfigError("config key 'input' (price CSV) is required");
  if (!std::filesystem::exists(rc.input)) {
    throw DataError("input file '" + rc.input.string() + "' does not exist");
  }
  try {
    return log_returns(read_price_csv(rc.input));
  } catch (const DataError& e) {
    throw DataError(rc.input.string() + ": " + e.what());
  }
}

/// Conditioning series for generation: the held-out tail when it holds a
/// full window, otherwise the whole series.
inline ReturnSeries conditioning_returns(const ReturnSeries& r, double holdout, std::size_t seq_len) {
  auto split = split_returns(r, holdout);
  return split.held_out.size() >= seq_len ? split.held_out : r;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "'");
}

// ---------------------------------------------------------------------------

/// Writes <output_dir>/checkpoint.bin and <output_dir>/loss_trace.csv.
inline TrainResult cmd_train(const RunConfig& rc, std::ostream& log = std::cerr) {
  const ReturnSeries returns = load_input_returns(rc);
  const auto split = split_returns(returns, rc.holdout);
  TrainOptions opt;
  opt.threads = rc.threads;
  opt.on_epoch = [&](std::size_t epoch, double loss) {
    log << "epoch " << epoch + 1 << '/' << rc.model.epochs << " generator loss "
        << detail::format_double(loss) << '\n';
  };
  TrainResult res = train(split.train, rc.model, opt);
  ensure_dir(rc.output_dir);
  save_checkpoint(rc.output_dir / "checkpoint.bin", res.checkpoint);
  write_file_atomic(rc.output_dir / "loss_trace.csv", loss_trace_csv(res.loss_trace));
  return res;
}

/// Writes `n` windows as `sample_id,step,log_return`. The noise seed is the
/// run config's seed; graphs come from the run config's input series.
inline void cmd_generate(const RunConfig& rc, const std::filesystem::path& checkpoint,
                         std::size_t n, const std::filesystem::path& out) {
  Checkpoint ck = load_checkpoint(checkpoint);
  std::vector<ReturnWindow> samples;
  if (n > 0) {
    const ReturnSeries returns = load_input_returns(rc);
    samples = generate(ck, conditioning_returns(returns, rc.holdout, ck.config().seq_len), n,
                       rc.model.seed);
  }
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_file_atomic(out, format_samples_csv(samples));
}

inline constexpr std::size_t kHistogramHorizons[] = {1, 5, 10};

/// Writes report.csv, report.txt and histogram_k{1,5,10}.csv into `out_dir`.
inline MetricsReport cmd_evaluate(const std::filesystem::path& real_path,
                                  const std::filesystem::path& fake_path,
                                  const std::filesystem::path& out_dir, std::size_t bins = 50) {
  const auto real = read_return_file(real_path);
  const auto fake = read_return_file(fake_path);
  const MetricsReport rep = build_report(real, fake);
  ensure_dir(out_dir);
  write_file_atomic(out_dir / "report.csv", report_csv(rep));
  write_file_atomic(out_dir / "report.txt", report_text(rep));
  for (std::size_t k : kHistogramHorizons) {
    const auto h = joint_histogram(k_day_aggregate(real, k), k_day_aggregate(fake, k), bins);
    write_file_atomic(out_dir / ("histogram_k" + std::to_string(k) + ".csv"), histogram_csv(h));
  }
  return rep;
}

inline Ablation ablation_for(const std::string& component) {
  Ablation a;
  if (component == "geometric") {
    a.geometric = true;
  } else if (component == "recurrent") {
    a.recurrent = true;
  } else if (component == "feedforward") {
    a.feedforward = true;
  } else if (component == "skip") {
    a.skip = true;
  } else if (component == "dropout") {
    a.dropout = true;
  } else {
    throw ConfigError("unknown ablation component '" + component +
                      "' (expected geometric, recurrent, feedforward, skip or dropout)");
  }
  return a;
}

struct AblationRow {
  std::string variant;
  MetricsReport report;
};

/// Trains the full model and one variant per removed component, evaluates
/// each against the held-out returns and writes <output_dir>/ablation.csv.
inline std::vector<AblationRow> cmd_ablate(const RunConfig& rc,
                                           const std::vector<std::string>& components,
                                           std::ostream& log = std::cerr) {
  std::vector<std::pair<std::string, Ablation>> variants{{"full", Ablation{}}};
  for (const auto& c : components) variants.emplace_back("w/o " + c, ablation_for(c));

  const ReturnSeries returns = load_input_returns(rc);
  const auto split = split_returns(returns, rc.holdout);
  std::vector<AblationRow> rows;
  for (const auto& [name, ablation] : variants) {
    SigGanConfig cfg = rc.model;
    cfg.ablation = ablation;
    cfg.validate();
    log << "training variant '" << name << "'\n";
    TrainResult res = train(split.train, cfg, {rc.threads, nullptr});
    const auto fake = flatten(generate(res.checkpoint, split.held_out, rc.n_samples, cfg.seed));
    rows.push_back({name, build_report(split.held_out.values, fake)});
  }

  std::ostringstream os;
  os << "variant";
  for (const auto& r : rows.front().report.rows) os << ',' << r.label;
  os << '\n';
  for (const auto& row : rows) {
    os << row.variant;
    for (const auto& r : row.report.rows) os << ',' << detail::format_double(r.value);
    os << '\n';
  }
  ensure_dir(rc.output_dir);
  write_file_atomic(rc.output_dir / "ablation.csv", os.str());
  return rows;
}

/// Synthetic windows from the configured baseline, fitted on the training
/// part of the input.
inline std::vector<ReturnWindow> baseline_samples(const RunConfig& rc, const ReturnSplit& split,
                                                  std::ostream& log) {
  const std::size_t T = rc.model.seq_len;
  std::vector<ReturnWindow> out;
  switch (rc.baseline) {
    case BaselineKind::Garch: {
      const ReturnSeries z = normalize(split.train);
      const GarchParams p = garch_fit(z.values);
      log << "garch omega " << p.omega << " alpha " << p.alpha << " beta " << p.beta << '\n';
      Rng rng(rc.model.seed);
      const auto sim = garch_simulate(p, rc.n_samples * T, rng);
      for (std::size_t s = 0; s < rc.n_samples; ++s) {
        ReturnWindow w(T);
        for (std::size_t t = 0; t < T; ++t) {
          w[t] = denormalize(sim[s * T + t], z.source_mean, z.source_std);
        }
        out.push_back(std::move(w));
      }
      break;
    }
    case BaselineKind::Gbm: {
      PriceSeries prices;
      prices.closes.push_back(1.0);
      for (double r : split.train.values) prices.closes.push_back(prices.closes.back() * std::exp(r));
      const GbmParams p = gbm_fit(prices);
      log << "gbm mu " << p.mu << " sigma " << p.sigma << '\n';
      Rng rng(rc.model.seed);
      for (const auto& path : gbm_simulate(p, T, rc.n_samples, rng)) {
        out.push_back(log_returns(path).values);
      }
      break;
    }
    case BaselineKind::SigGanMse:
    case BaselineKind::SigGanKld: {
      TrainResult res = train(split.train, rc.model, {rc.threads, nullptr});
      out = generate(res.checkpoint, split.held_out, rc.n_samples, rc.model.seed);
      break;
    }
  }
  return out;
}

/// Writes <output_dir>/<baseline>_samples.csv and the report against the
/// held-out returns into <output_dir>/<baseline>/.
inline MetricsReport cmd_baseline(const RunConfig& rc, std::ostream& log = std::cerr) {
  const ReturnSeries returns = load_input_returns(rc);
  const auto split = split_returns(returns, rc.holdout);
  const auto samples = baseline_samples(rc, split, log);
  const MetricsReport rep = build_report(split.held_out.values, flatten(samples));
  const auto dir = rc.output_dir / to_string(rc.baseline);
  ensure_dir(dir);
  write_file_atomic(rc.output_dir / (to_string(rc.baseline) + "_samples.csv"),
                    format_samples_csv(samples));
  write_file_atomic(dir / "report.csv", report_csv(rep));
  write_file_atomic(dir / "report.txt", report_text(rep));
  return rep;
}

/// The bundled synthetic price series.
inline PriceSeries default_fixture() {
  return gbm_fixture(2515, GbmParams{0.0003, 0.012, 100.0}, 20240101);
}

inline void cmd_fixture(const std::filesystem::path& out) {
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_file_atomic(out, format_price_csv(default_fixture()));
}

}  // namespace siggan

#endif  // SIGGAN_COMMANDS_HPP
