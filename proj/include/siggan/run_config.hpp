#ifndef SIGGAN_RUN_CONFIG_HPP
#define SIGGAN_RUN_CONFIG_HPP

// Command-line run configuration: model keys plus paths and run options.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "siggan/config.hpp"
#include "siggan/error.hpp"
#include "siggan/io.hpp"
#include "siggan/model.hpp"

namespace siggan {

enum class BaselineKind { SigGanMse, SigGanKld, Garch, Gbm };

inline BaselineKind parse_baseline(std::string_view s) {
  if (s == "siggan-mse") return BaselineKind::SigGanMse;
  if (s == "siggan-kld") return BaselineKind::SigGanKld;
  if (s == "garch") return BaselineKind::Garch;
  if (s == "gbm") return BaselineKind::Gbm;
  throw ConfigError("unknown baseline '" + std::string(s) +
                    "' (expected siggan-mse, siggan-kld, garch or gbm)");
}

inline std::string to_string(BaselineKind b) {
  switch (b) {
    case BaselineKind::SigGanMse: return "siggan-mse";
    case BaselineKind::SigGanKld: return "siggan-kld";
    case BaselineKind::Garch: return "garch";
    case BaselineKind::Gbm: return "gbm";
  }
  return "?";
}

struct RunConfig {
  SigGanConfig model;
  std::filesystem::path input;              // price CSV
  std::filesystem::path output_dir = "out";
  BaselineKind baseline = BaselineKind::SigGanMse;
  std::size_t n_samples = 200;
  std::size_t histogram_bins = 50;
  double holdout = 0.2;  // trailing fraction of returns kept out of training
  std::size_t threads = 1;
};

/// Same key = value format as the model config, with these extra keys:
/// input, output_dir, baseline, n_samples, histogram_bins, holdout, threads.
/// A siggan-kld baseline without an explicit `loss` selects the KLD defaults.
inline RunConfig parse_run_config(std::string_view text) {
  const auto entries = parse_entries(text);
  RunConfig rc;
  bool has_loss = false;
  for (const auto& e : entries) {
    if (e.key == "loss") has_loss = true;
    if (e.key == "baseline") rc.baseline = parse_baseline(e.value);
  }
  auto extra = [&](const ConfigEntry& e) {
    if (e.key == "input") {
      rc.input = e.value;
    } else if (e.key == "output_dir") {
      rc.output_dir = e.value;
    } else if (e.key == "baseline") {
      // read above
    } else if (e.key == "n_samples") {
      rc.n_samples = detail::parse_number<std::size_t>(e);
    } else if (e.key == "histogram_bins") {
      rc.histogram_bins = detail::parse_number<std::size_t>(e);
      if (rc.histogram_bins == 0) throw ConfigError(detail::where(e) + ": must be positive");
    } else if (e.key == "holdout") {
      rc.holdout = detail::parse_number<double>(e);
      if (!(rc.holdout >= 0.0 && rc.holdout < 1.0)) {
        throw ConfigError(detail::where(e) + ": must lie in [0, 1)");
      }
    } else if (e.key == "threads") {
      rc.threads = detail::parse_number<std::size_t>(e);
    } else {
      return false;
    }
    return true;
  };
  auto model_entries = entries;
  if (!has_loss && rc.baseline == BaselineKind::SigGanKld) {
    model_entries.insert(model_entries.begin(), ConfigEntry{"loss", "kld", 0});
  }
  rc.model = parse_sig_gan_config(model_entries, extra);
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file '" + path.string() + "'");
  }
  return parse_run_config(text);
}

}  // namespace siggan

#endif  // SIGGAN_RUN_CONFIG_HPP
