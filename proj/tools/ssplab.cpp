// Command-line driver: run, plot, verify, gen-instance.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssp/env.hpp"
#include "ssp/errors.hpp"
#include "ssp/harness.hpp"
#include "ssp/verify/suites.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;

std::pair<std::string, double> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ssp::ConfigError("override must look like key=value: '" + text + "'");
  const std::string key = text.substr(0, eq), value = text.substr(eq + 1);
  if (value == "true") return {key, 1.0};
  if (value == "false") return {key, 0.0};
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return {key, v};
  } catch (const std::exception&) {
    throw ssp::ConfigError("override value is not a number: '" + text + "'");
  }
}

struct RunArgs {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::string setting;
  std::size_t episodes = 0;
  std::vector<std::string> overrides;
};

int cmd_run(const RunArgs& args) {
  auto config = args.config.empty() ? ssp::ExperimentConfig{} : ssp::load_config(args.config);
  if (!args.seeds.empty()) config.seeds = args.seeds;
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (!args.setting.empty()) config.setting = ssp::parse_setting(args.setting);
  if (args.episodes > 0) config.episodes = args.episodes;
  for (const auto& o : args.overrides) config.overrides.insert_or_assign(parse_override(o).first, parse_override(o).second);
  config = ssp::config_from_json(ssp::config_to_json(config));

  const auto report = ssp::run_experiment(config, true);
  std::printf("config %s, setting %s, K = %zu\n", report.config_hash.c_str(), ssp::to_string(config.setting).c_str(),
              config.episodes);
  for (const auto& run : report.runs)
    std::printf("seed %llu: R_K = %.4f, stacked R_K = %.4f, R_K/K = %.4f\n",
                static_cast<unsigned long long>(run.seed), run.regret.back(), run.stacked_regret.back(),
                run.regret.back() / static_cast<double>(config.episodes));
  std::printf("wrote %s/{episodes.csv,summary.csv,regret.svg}\n", config.out_dir.c_str());
  return kOk;
}

int cmd_plot(const std::string& input, const std::string& output) {
  const auto curves = ssp::read_curves_csv(input);
  if (curves.seeds.empty()) throw ssp::ConfigError("no episode rows in '" + input + "'");
  ssp::write_text_file(output, ssp::render_regret_svg(curves));
  std::printf("wrote %s (%zu seeds)\n", output.c_str(), curves.seeds.size());
  return kOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& out_dir) {
  const auto report = ssp::verify::run_suite(suite, seed);
  for (const auto& c : report.checks)
    std::printf("%-4s %-12s %-40s value=%.6g threshold=%.6g\n", c.pass ? "PASS" : "FAIL", c.suite.c_str(),
                c.name.c_str(), c.value, c.threshold);
  std::printf("%zu checks, %zu failed\n", report.checks.size(), report.failures());
  if (!out_dir.empty()) ssp::write_text_file(out_dir + "/verify.csv", ssp::verify::report_csv(report));
  return report.passed() ? kOk : kFailure;
}

int cmd_gen_instance(const std::string& config_path, const std::vector<std::uint64_t>& seeds,
                     const std::string& output) {
  ssp::EnvSpec spec;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ssp::ConfigError("cannot open '" + config_path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ssp::ConfigError(std::string("not valid JSON: ") + e.what());
    }
    // Accepts an experiment config or a bare environment spec.
    spec = doc.contains("env") ? ssp::config_from_json(doc).env : ssp::env_spec_from_json(doc);
  }
  if (!seeds.empty()) spec.seed = seeds.front();
  const auto gen = ssp::generate_instance(spec);
  const auto text = ssp::instance_to_json(gen.instance, gen.mean_cost).dump(2) + "\n";
  if (output.empty() || output == "-") {
    std::fputs(text.c_str(), stdout);
  } else {
    ssp::write_text_file(output, text);
    std::printf("wrote %s\n", output.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic shortest path policy optimization lab"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run a seeded experiment and write episodes.csv, summary.csv, regret.svg");
  run->add_option("--config", run_args.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  run->add_option("--seed", run_args.seeds, "Seed(s); replaces the config's seed list");
  run->add_option("--out-dir", run_args.out_dir, "Output directory");
  run->add_option("--setting", run_args.setting, "stochastic-costs | stoch-adv-full | stoch-adv-bandit | adv-full | adv-bandit");
  run->add_option("--episodes", run_args.episodes, "Number of episodes K");
  run->add_option("--override", run_args.overrides, "Schedule override key=value (repeatable)");

  std::string plot_input, plot_output = "regret.svg", plot_dir;
  auto* plot = app.add_subcommand("plot", "Render regret curves from an episodes.csv");
  plot->add_option("--input", plot_input, "episodes.csv to read");
  plot->add_option("--out-dir", plot_dir, "Read <dir>/episodes.csv and write <dir>/regret.svg");
  plot->add_option("--output", plot_output, "SVG path");

  std::string suite = "all", verify_dir;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Run invariant suites; nonzero exit on failure");
  verify->add_option("suite", suite, "ssp-core | sda-lemmas | estimation | polytope | evi-oracle | planning | learner | all");
  verify->add_option("--seed", verify_seed, "Seed of the randomized checks");
  verify->add_option("--out-dir", verify_dir, "Write verify.csv here");

  std::string gen_config, gen_output, gen_dir;
  std::vector<std::uint64_t> gen_seeds;
  auto* gen = app.add_subcommand("gen-instance", "Generate an instance and print it as JSON");
  gen->add_option("--config", gen_config, "Experiment config or environment spec (JSON)");
  gen->add_option("--seed", gen_seeds, "Environment seed");
  gen->add_option("--out-dir", gen_dir, "Write <dir>/instance.json");
  gen->add_option("--output", gen_output, "Output file, - for stdout (default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*plot) {
      if (!plot_dir.empty()) {
        if (plot_input.empty()) plot_input = plot_dir + "/episodes.csv";
        if (plot->count("--output") == 0) plot_output = plot_dir + "/regret.svg";
      }
      if (plot_input.empty()) throw ssp::ConfigError("plot needs --input or --out-dir");
      return cmd_plot(plot_input, plot_output);
    }
    if (*verify) return cmd_verify(suite, verify_seed, verify_dir);
    if (*gen) {
      if (!gen_dir.empty() && gen_output.empty()) gen_output = gen_dir + "/instance.json";
      return cmd_gen_instance(gen_config, gen_seeds, gen_output);
    }
  } catch (const ssp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
