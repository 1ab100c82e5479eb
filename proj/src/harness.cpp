#include "ssp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ssp/errors.hpp"

namespace ssp {

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  static const char* known[] = {"env", "setting", "episodes", "delta", "seeds", "overrides", "out_dir", "parallel"};
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
      throw ConfigError("unknown config field '" + it.key() + "'");
  ExperimentConfig c;
  try {
    if (doc.contains("env")) c.env = env_spec_from_json(doc.at("env"));
    if (doc.contains("setting")) c.setting = parse_setting(doc.at("setting").get<std::string>());
    c.episodes = doc.value("episodes", c.episodes);
    c.delta = doc.value("delta", c.delta);
    if (doc.contains("seeds")) c.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("overrides"))
      for (auto it = doc.at("overrides").begin(); it != doc.at("overrides").end(); ++it)
        c.overrides[it.key()] = it.value().is_boolean() ? (it.value().get<bool>() ? 1.0 : 0.0) : it.value().get<double>();
    c.out_dir = doc.value("out_dir", c.out_dir);
    c.parallel = doc.value("parallel", c.parallel);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (c.episodes < 1) throw ConfigError("episodes must be at least 1");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.parallel < 1) c.parallel = 1;
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json overrides = nlohmann::json::object();
  for (const auto& [k, v] : c.overrides) overrides[k] = v;
  return nlohmann::json{{"env", env_spec_to_json(c.env)}, {"setting", to_string(c.setting)},
                        {"episodes", c.episodes},          {"delta", c.delta},
                        {"seeds", c.seeds},                {"overrides", overrides},
                        {"out_dir", c.out_dir},            {"parallel", c.parallel}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

std::string config_hash(const ExperimentConfig& config) {
  auto doc = config_to_json(config);
  doc.erase("out_dir");
  doc.erase("parallel");
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CostFunction reference_cost(const SimulatedEnvironment& env, Setting setting, std::size_t episodes) {
  if (!is_adversarial(setting)) return env.generated().mean_cost;
  const std::size_t S = env.num_states(), A = env.num_actions();
  std::vector<double> avg(S * A, 0.0);
  for (std::size_t k = 1; k <= episodes; ++k) {
    const auto c = env.adversary_costs(k);
    for (std::size_t i = 0; i < S * A; ++i) avg[i] += c[i];
  }
  double lo = 1.0;
  for (double& x : avg) lo = std::min(lo, x /= static_cast<double>(episodes));
  return CostFunction(S, A, std::move(avg), std::max(0.0, lo));
}

Comparators regret_comparators(const SimulatedEnvironment& env, const KeyParams& key, const SdaParams& sda,
                               Setting setting, std::size_t episodes) {
  const auto& inst = env.generated().instance;
  const std::size_t S = inst.num_states(), A = inst.num_actions(), H = sda.num_layers;
  const auto q = occupancy_measure(inst, key.optimal_policy);
  const StackedMdp stacked(inst, sda);
  const auto qs = stacked_occupancy(stacked, mirror_policy(key.optimal_policy, H), inst.init_state());

  auto evaluate = [&](const std::vector<double>& c, double& base, double& stk) {
    base = 0.0;
    stk = 0.0;
    for (std::size_t i = 0; i < S * A; ++i) base += q[i] * c[i];
    for (std::size_t l = 0; l <= H; ++l)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) stk += qs(s, a, l) * (l == H ? sda.terminal_cost : c[s * A + a]);
  };

  Comparators out;
  out.base.resize(episodes);
  out.stacked.resize(episodes);
  if (!is_adversarial(setting)) {
    double b, st;
    evaluate(env.generated().mean_cost.values(), b, st);
    std::fill(out.base.begin(), out.base.end(), b);
    std::fill(out.stacked.begin(), out.stacked.end(), st);
  } else {
    for (std::size_t k = 1; k <= episodes; ++k) evaluate(env.adversary_costs(k), out.base[k - 1], out.stacked[k - 1]);
  }
  return out;
}

namespace {

SeedRun run_seed(const ExperimentConfig& config, const GeneratedEnv& generated, std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  try {
    SimulatedEnvironment env(generated, config.setting, seed);
    const auto ref = reference_cost(env, config.setting, config.episodes);
    const auto key = key_params(generated.instance, ref);
    run.learner = make_learner_config(config.setting, env.num_states(), env.num_actions(), config.episodes,
                                      config.delta, key, config.overrides);
    const auto comps = regret_comparators(env, key, run.learner.sda, config.setting, config.episodes);
    for (std::size_t k = 0; k < config.episodes; ++k) {
      run.baseline += comps.base[k] / static_cast<double>(config.episodes);
      run.stacked_baseline += comps.stacked[k] / static_cast<double>(config.episodes);
    }
    Rng rng(derive_seed(seed, 7));
    double r = 0.0, rs = 0.0;
    run_learner(run.learner, env, generated.instance.init_state(), config.episodes, rng,
                [&](const EpisodeRecord& rec, const EpisodeLog&) {
                  r += rec.episode_cost - comps.base[rec.k - 1];
                  rs += rec.stacked_cost - comps.stacked[rec.k - 1];
                  run.records.push_back(rec);
                  run.regret.push_back(r);
                  run.stacked_regret.push_back(rs);
                });
  } catch (const Error& e) {
    run.error = e.what();
  }
  return run;
}

}  // namespace

std::string episodes_csv(const RegretReport& report) {
  std::ostringstream out;
  out << "config_hash,seed,k,episode_cost,terminal_cost,stacked_cost,J,switched,episode_length,regret,"
         "stacked_regret,max_qtilde,max_bonus,eta,lambda\n";
  for (const auto& run : report.runs)
    for (std::size_t i = 0; i < run.records.size(); ++i) {
      const auto& r = run.records[i];
      out << report.config_hash << ',' << run.seed << ',' << r.k << ',' << num(r.episode_cost) << ','
          << num(r.terminal_cost) << ',' << num(r.stacked_cost) << ',' << r.pre_switch_steps << ','
          << (r.switched ? 1 : 0) << ',' << r.length << ',' << num(run.regret[i]) << ','
          << num(run.stacked_regret[i]) << ',' << num(r.max_qtilde) << ',' << num(r.max_bonus) << ','
          << num(run.learner.schedule.eta) << ',' << num(run.learner.schedule.lambda) << '\n';
    }
  return out.str();
}

std::string summary_csv(const RegretReport& report) {
  std::ostringstream out;
  out << "config_hash,seed,setting,episodes_completed,final_regret,final_stacked_regret,regret_per_episode,"
         "baseline_value,stacked_baseline_value,b_star,t_star,t_max,diameter,gamma,num_layers,terminal_cost,eta,"
         "lambda,status\n";
  for (const auto& run : report.runs) {
    const std::size_t n = run.records.size();
    const double r = n ? run.regret.back() : 0.0;
    const double rs = n ? run.stacked_regret.back() : 0.0;
    const auto& lc = run.learner;
    out << report.config_hash << ',' << run.seed << ',' << to_string(report.config.setting) << ',' << n << ','
        << num(r) << ',' << num(rs) << ',' << num(n ? r / static_cast<double>(n) : 0.0) << ',' << num(run.baseline)
        << ',' << num(run.stacked_baseline) << ',' << num(lc.key.b_star) << ',' << num(lc.key.t_star) << ','
        << num(lc.key.t_max) << ',' << num(lc.key.diameter) << ',' << num(lc.sda.gamma) << ',' << lc.sda.num_layers
        << ',' << num(lc.sda.terminal_cost) << ',' << num(lc.schedule.eta) << ',' << num(lc.schedule.lambda) << ','
        << (run.error.empty() ? "ok" : "error") << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

RegretCurves curves_of(const RegretReport& report) {
  RegretCurves c;
  for (const auto& run : report.runs) {
    if (run.regret.empty()) continue;
    c.seeds.push_back(run.seed);
    c.cumulative.push_back(run.regret);
  }
  return c;
}

RegretReport run_experiment(const ExperimentConfig& config, bool write_outputs) {
  RegretReport report;
  report.config = config;
  report.config_hash = config_hash(config);
  const auto generated = generate_instance(config.env);
  // Surfaces bad override keys as ConfigError before any worker starts.
  make_learner_config(config.setting, generated.instance.num_states(), generated.instance.num_actions(),
                      config.episodes, config.delta, key_params(generated.instance, generated.mean_cost),
                      config.overrides);

  report.runs.resize(config.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < config.seeds.size();)
      report.runs[i] = run_seed(config, generated, config.seeds[i]);
  };
  const std::size_t workers = std::min(config.parallel, config.seeds.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (write_outputs) {
    const std::string dir = config.out_dir;
    write_text_file(dir + "/episodes.csv", episodes_csv(report));
    write_text_file(dir + "/summary.csv", summary_csv(report));
    const auto curves = curves_of(report);
    if (!curves.seeds.empty()) write_text_file(dir + "/regret.svg", render_regret_svg(curves));
  }
  for (const auto& run : report.runs)
    if (!run.error.empty())
      throw Error("seed " + std::to_string(run.seed) + " aborted after " + std::to_string(run.records.size()) +
                  " episodes: " + run.error);
  return report;
}

RegretCurves read_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV '" + path + "'");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) header.push_back(col);
  }
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("CSV lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t seed_col = column("seed"), regret_col = column("regret");
  RegretCurves curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) throw ConfigError("ragged CSV row in '" + path + "'");
    const auto seed = std::stoull(cells[seed_col]);
    if (curves.seeds.empty() || curves.seeds.back() != seed) {
      curves.seeds.push_back(seed);
      curves.cumulative.emplace_back();
    }
    curves.cumulative.back().push_back(std::stod(cells[regret_col]));
  }
  return curves;
}

double loglog_slope(const std::vector<double>& cumulative, std::size_t k_lo, std::size_t k_hi) {
  k_hi = std::min(k_hi, cumulative.size());
  if (k_lo < 1 || k_lo >= k_hi) throw InvalidArgument("slope range must satisfy 1 <= k_lo < k_hi <= K");
  // Log-spaced grid so that every scale carries equal weight.
  constexpr int kPoints = 50;
  std::vector<std::size_t> ks;
  for (int i = 0; i < kPoints; ++i) {
    const double t = static_cast<double>(i) / (kPoints - 1);
    const auto k = static_cast<std::size_t>(std::lround(static_cast<double>(k_lo) *
                                                        std::pow(static_cast<double>(k_hi) / k_lo, t)));
    if (ks.empty() || ks.back() != k) ks.push_back(k);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (auto k : ks) {
    const double r = cumulative[k - 1];
    if (!(r > 0.0)) continue;
    const double x = std::log(static_cast<double>(k)), y = std::log(r);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  if (n < 2) return std::nan("");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

struct Panel {
  double x0, y0, w, h;
  double lx_max;        // log10 K
  double ly_min, ly_max;
  double px(double k) const { return x0 + w * (lx_max > 0 ? std::log10(k) / lx_max : 0.0); }
  double py(double v) const {
    const double lv = std::clamp(std::log10(v), ly_min, ly_max);
    return y0 + h - h * (lv - ly_min) / (ly_max - ly_min);
  }
};

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

void draw_panel(std::ostringstream& svg, const Panel& p, const std::string& title,
                const std::vector<std::size_t>& ks, const std::vector<std::vector<double>>& series, bool band) {
  svg << "<rect x=\"" << fixed2(p.x0) << "\" y=\"" << fixed2(p.y0) << "\" width=\"" << fixed2(p.w) << "\" height=\""
      << fixed2(p.h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg << "<text x=\"" << fixed2(p.x0 + p.w / 2) << "\" y=\"" << fixed2(p.y0 - 8)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
  for (int d = 0; d <= static_cast<int>(std::floor(p.lx_max)); ++d) {
    const double x = p.px(std::pow(10.0, d));
    svg << "<line x1=\"" << fixed2(x) << "\" y1=\"" << fixed2(p.y0 + p.h) << "\" x2=\"" << fixed2(x) << "\" y2=\""
        << fixed2(p.y0 + p.h + 4) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << fixed2(x) << "\" y=\"" << fixed2(p.y0 + p.h + 16)
        << "\" text-anchor=\"middle\" font-size=\"10\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(p.ly_min)); d <= static_cast<int>(std::floor(p.ly_max)); ++d) {
    const double y = p.py(std::pow(10.0, d));
    svg << "<line x1=\"" << fixed2(p.x0 - 4) << "\" y1=\"" << fixed2(y) << "\" x2=\"" << fixed2(p.x0) << "\" y2=\""
        << fixed2(y) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << fixed2(p.x0 - 6) << "\" y=\"" << fixed2(y + 3)
        << "\" text-anchor=\"end\" font-size=\"10\">1e" << d << "</text>\n";
  }
  svg << "<text x=\"" << fixed2(p.x0 + p.w / 2) << "\" y=\"" << fixed2(p.y0 + p.h + 30)
      << "\" text-anchor=\"middle\" font-size=\"11\">episode k</text>\n";

  if (band && series.size() > 1) {
    std::ostringstream upper, lower;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      double lo = series[0][i], hi = series[0][i];
      for (const auto& s : series) lo = std::min(lo, s[i]), hi = std::max(hi, s[i]);
      upper << fixed2(p.px(static_cast<double>(ks[i]))) << ',' << fixed2(p.py(hi)) << ' ';
      const std::size_t j = ks.size() - 1 - i;
      double lo2 = series[0][j];
      for (const auto& s : series) lo2 = std::min(lo2, s[j]);
      lower << fixed2(p.px(static_cast<double>(ks[j]))) << ',' << fixed2(p.py(lo2)) << ' ';
    }
    svg << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";
  }
  std::ostringstream mean;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    double m = 0.0;
    for (const auto& s : series) m += s[i];
    m /= static_cast<double>(series.size());
    mean << fixed2(p.px(static_cast<double>(ks[i]))) << ',' << fixed2(p.py(m)) << ' ';
  }
  svg << "<polyline points=\"" << mean.str() << "\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"/>\n";
}

}  // namespace

std::string render_regret_svg(const RegretCurves& curves) {
  if (curves.cumulative.empty() || curves.cumulative.front().empty())
    throw InvalidArgument("cannot plot an empty report");
  std::size_t K = curves.cumulative.front().size();
  for (const auto& c : curves.cumulative) K = std::min(K, c.size());

  std::vector<std::size_t> ks;
  constexpr int kSamples = 150;
  for (int i = 0; i < kSamples; ++i) {
    const auto k = static_cast<std::size_t>(
        std::lround(std::pow(static_cast<double>(K), static_cast<double>(i) / (kSamples - 1))));
    if (k >= 1 && (ks.empty() || ks.back() != k)) ks.push_back(k);
  }

  std::vector<std::vector<double>> cum, avg;
  for (const auto& c : curves.cumulative) {
    std::vector<double> a, b;
    for (auto k : ks) {
      a.push_back(c[k - 1]);
      b.push_back(c[k - 1] / static_cast<double>(k));
    }
    cum.push_back(std::move(a));
    avg.push_back(std::move(b));
  }
  auto log_range = [](const std::vector<std::vector<double>>& series) {
    double hi = 0.0;
    for (const auto& s : series)
      for (double v : s) hi = std::max(hi, v);
    if (!(hi > 0.0)) hi = 1.0;
    double lo = hi;
    for (const auto& s : series)
      for (double v : s)
        if (v > 0.0) lo = std::min(lo, v);
    lo = std::max(lo, hi * 1e-4);
    double l0 = std::floor(std::log10(lo)), l1 = std::ceil(std::log10(hi));
    if (l1 <= l0) l1 = l0 + 1;
    return std::pair<double, double>(l0, l1);
  };

  const bool band = curves.cumulative.size() > 1;
  const double lx = std::log10(static_cast<double>(K));
  auto [c0, c1] = log_range(cum);
  auto [a0, a1] = log_range(avg);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"380\" viewBox=\"0 0 900 380\" "
         "font-family=\"sans-serif\">\n";
  svg << "<rect width=\"900\" height=\"380\" fill=\"white\"/>\n";
  draw_panel(svg, Panel{70, 40, 360, 280, lx, c0, c1}, "cumulative regret R_k", ks, cum, band);
  draw_panel(svg, Panel{520, 40, 360, 280, lx, a0, a1}, "average regret R_k / k", ks, avg, band);
  svg << "<text x=\"450\" y=\"372\" text-anchor=\"middle\" font-size=\"11\">" << curves.seeds.size()
      << (curves.seeds.size() == 1 ? " seed" : " seeds: min/max band and mean") << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ssp
