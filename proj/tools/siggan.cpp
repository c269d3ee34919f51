// siggan: train, generate, evaluate, ablate, baseline, fixture.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "siggan/commands.hpp"

namespace {

using namespace siggan;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

RunConfig resolve(const Globals& g, const std::string& extra = "") {
  RunConfig rc;
  if (g.config.empty()) {
    rc = parse_run_config(extra);
  } else {
    std::string text;
    try {
      text = read_file(g.config);
    } catch (const DataError&) {
      throw ConfigError("cannot read config file '" + g.config + "'");
    }
    rc = parse_run_config(text + "\n" + extra);
  }
  if (g.seed) rc.model.seed = *g.seed;
  if (g.threads) rc.threads = *g.threads;
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signature-loss graph GAN for synthetic return series"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key = value run configuration file");
  app.add_option("--seed", g.seed, "override the configured seed");
  app.add_option("--threads", g.threads, "worker threads for per-window passes");

  auto* train_cmd = app.add_subcommand("train", "train on the configured input, write checkpoint and loss trace");

  auto* gen_cmd = app.add_subcommand("generate", "sample synthetic log-return windows");
  std::string checkpoint;
  std::size_t n = 0;
  std::string out;
  gen_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  gen_cmd->add_option("-n,--samples", n, "number of windows")->required();
  gen_cmd->add_option("--out", out, "output CSV")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "score a synthetic CSV against a real one");
  std::string real;
  std::string fake;
  std::string out_dir;
  std::optional<std::size_t> bins;
  eval_cmd->add_option("--real", real, "real prices (date,close) or samples CSV")->required();
  eval_cmd->add_option("--fake", fake, "synthetic samples or prices CSV")->required();
  eval_cmd->add_option("--out", out_dir, "report directory")->required();
  eval_cmd->add_option("--bins", bins, "histogram bins");

  auto* ablate_cmd = app.add_subcommand("ablate", "retrain with one component removed at a time");
  std::vector<std::string> components;
  ablate_cmd->add_option("--components", components,
                         "geometric, recurrent, feedforward, skip, dropout")
      ->delimiter(',');

  auto* base_cmd = app.add_subcommand("baseline", "fit and score the configured baseline");
  std::optional<std::string> model;
  base_cmd->add_option("--model", model, "siggan-mse, siggan-kld, garch or gbm");

  auto* fix_cmd = app.add_subcommand("fixture", "write the bundled synthetic price series");
  std::string fixture_out = "data/gbm_2515.csv";
  fix_cmd->add_option("--out", fixture_out, "output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  return run_guarded(
      [&] {
        if (*train_cmd) {
          cmd_train(resolve(g));
        } else if (*gen_cmd) {
          cmd_generate(resolve(g), checkpoint, n, out);
        } else if (*eval_cmd) {
          const std::size_t b = bins ? *bins : (g.config.empty() ? 50 : resolve(g).histogram_bins);
          const auto rep = cmd_evaluate(real, fake, out_dir, b);
          std::cout << report_text(rep);
        } else if (*ablate_cmd) {
          for (const auto& c : components) ablation_for(c);
          const auto rows = cmd_ablate(resolve(g), components);
          for (const auto& r : rows) {
            std::cout << r.variant << ": EMD(1) x100 = " << r.report.at("EMD(1)").display() << '\n';
          }
        } else if (*base_cmd) {
          // A --model override behaves like a `baseline` line appended to the config.
          const RunConfig rc = resolve(g, model ? "baseline = " + *model + "\n" : "");
          std::cout << report_text(cmd_baseline(rc));
        } else if (*fix_cmd) {
          cmd_fixture(fixture_out);
        }
      },
      std::cerr);
}
