#include "bsdelab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bsdelab/backward_ode.hpp"
#include "bsdelab/envelope.hpp"
#include "bsdelab/girsanov.hpp"
#include "bsdelab/kernels.hpp"

namespace bsdelab {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

double SlackBudget::value(int steps, int paths) const {
  return c_step / steps + c_mc / std::sqrt(static_cast<double>(paths));
}

void ExperimentConfig::validate() const {
  if (steps < 1 || paths < 1)
    throw std::invalid_argument("config: steps and paths must be positive");
  if (ladder.empty())
    throw std::invalid_argument("config: ladder must not be empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1) throw std::invalid_argument("config: ladder levels must be >= 1");
    if (i > 0 && ladder[i] <= ladder[i - 1])
      throw std::invalid_argument("config: ladder must be strictly increasing");
  }
  for (std::size_t i = 0; i < epsilon_ladder.size(); ++i) {
    if (epsilon_ladder[i] <= 0.0)
      throw std::invalid_argument("config: epsilon ladder must be positive");
    if (i > 0 && epsilon_ladder[i] >= epsilon_ladder[i - 1])
      throw std::invalid_argument("config: epsilon ladder must be strictly decreasing");
  }
  if (!(eps0 > 0.0 && eps0 < 1.0))
    throw std::invalid_argument("config: eps0 must lie in (0,1)");
  if (mollifier_nodes < 2)
    throw std::invalid_argument("config: mollifier_nodes must be >= 2");
  if (moduli_probes < 1)
    throw std::invalid_argument("config: moduli_probes must be >= 1");
  if (slack.c_step < 0.0 || slack.c_mc < 0.0)
    throw std::invalid_argument("config: slack coefficients must be >= 0");
  if (regression.degree < 0 || regression.ridge < 0.0 || regression.picard < 1)
    throw std::invalid_argument("config: bad regression block");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["driver"] = c.driver;
  ordered_json params;
  for (const auto& [k, v] : c.driver_params) params[k] = v;
  j["driver_params"] = params;
  j["terminal"] = c.terminal;
  j["terminal_value"] = c.terminal_value;
  j["steps"] = c.steps;
  j["paths"] = c.paths;
  j["seed"] = c.seed;
  j["antithetic"] = c.antithetic;
  j["ladder"] = c.ladder;
  j["epsilon_ladder"] = c.epsilon_ladder;
  j["regression"] = {{"degree", c.regression.degree},
                     {"ridge", c.regression.ridge},
                     {"picard", c.regression.picard}};
  j["mollifier_nodes"] = c.mollifier_nodes;
  j["moduli_probes"] = c.moduli_probes;
  j["eps0"] = c.eps0;
  j["slack"] = {{"c_step", c.slack.c_step}, {"c_mc", c.slack.c_mc}};
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace

std::string config_to_json_text(const ExperimentConfig& cfg) {
  return config_json(cfg).dump(2) + "\n";
}

ExperimentConfig config_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  ExperimentConfig c;
  if (j.contains("driver")) c.driver = j["driver"].get<std::string>();
  if (j.contains("driver_params"))
    for (auto it = j["driver_params"].begin(); it != j["driver_params"].end(); ++it)
      c.driver_params[it.key()] = it.value().get<double>();
  if (j.contains("terminal")) c.terminal = j["terminal"].get<std::string>();
  if (j.contains("terminal_value")) c.terminal_value = j["terminal_value"].get<double>();
  if (j.contains("steps")) c.steps = j["steps"].get<int>();
  if (j.contains("paths")) c.paths = j["paths"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("antithetic")) c.antithetic = j["antithetic"].get<bool>();
  if (j.contains("ladder")) c.ladder = j["ladder"].get<std::vector<int>>();
  if (j.contains("epsilon_ladder"))
    c.epsilon_ladder = j["epsilon_ladder"].get<std::vector<double>>();
  if (j.contains("regression")) {
    const auto& r = j["regression"];
    if (r.contains("degree")) c.regression.degree = r["degree"].get<int>();
    if (r.contains("ridge")) c.regression.ridge = r["ridge"].get<double>();
    if (r.contains("picard")) c.regression.picard = r["picard"].get<int>();
  }
  if (j.contains("mollifier_nodes")) c.mollifier_nodes = j["mollifier_nodes"].get<int>();
  if (j.contains("moduli_probes")) c.moduli_probes = j["moduli_probes"].get<int>();
  if (j.contains("eps0")) c.eps0 = j["eps0"].get<double>();
  if (j.contains("slack")) {
    const auto& s = j["slack"];
    if (s.contains("c_step")) c.slack.c_step = s["c_step"].get<double>();
    if (s.contains("c_mc")) c.slack.c_mc = s["c_mc"].get<double>();
  }
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  c.validate();
  return c;
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// gap metrics
// ---------------------------------------------------------------------------

namespace {

double sup_y_gap(const SolutionPair& a, const SolutionPair& b) {
  const int d = a.Y.rows, M = a.Y.paths, N = a.Y.grid.steps();
  double worst = 0.0;
  for (int j = 0; j <= N; ++j)
    for (int p = 0; p < M; ++p) {
      double sq = 0.0;
      for (int i = 0; i < d; ++i) {
        const double diff = a.Y.at(j, p, i) - b.Y.at(j, p, i);
        sq = std::fma(diff, diff, sq);
      }
      worst = std::max(worst, sq);
    }
  return std::sqrt(worst);
}

double mean_z_gap(const SolutionPair& a, const SolutionPair& b) {
  const int N = a.Y.grid.steps();
  double acc = 0.0;
  for (int j = 0; j < N; ++j)
    acc += kernels::sum_sq_diff(a.Z.slice(j), b.Z.slice(j));
  return acc * a.Y.grid.step / a.Y.paths;
}

}  // namespace

// ---------------------------------------------------------------------------
// the ladder experiment
// ---------------------------------------------------------------------------

ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  ConvergenceReport rep;
  rep.config = cfg;

  const Driver f = builtin_driver(cfg.driver, cfg.driver_params);
  const int d = f.dim_y, m = f.dim_b;

  {
    const ModuliReport mr = verify_moduli(f, cfg.moduli_probes, cfg.seed + 17);
    if (!mr.passed())
      throw std::runtime_error("run_convergence[moduli]: declared moduli violated");
  }

  // stage 1: smoothing ladder and distance table
  const MollifierKernel kernel{1.0, cfg.mollifier_nodes};
  std::vector<Driver> rungs;
  rungs.reserve(cfg.ladder.size());
  for (int n : cfg.ladder) {
    Driver fn = mollify(f, kernel, n);
    rep.mollify_distance.push_back(
        driver_distance(fn, f, cfg.moduli_probes, cfg.seed + 101));
    rep.mollify_closeness.push_back(fn.closeness);
    rep.mollify_lipschitz.push_back(fn.lipschitz);
    rungs.push_back(std::move(fn));
  }
  for (double eps : cfg.epsilon_ladder) {
    LevelForEps row;
    row.eps = eps;
    for (std::size_t i = 0; i < rungs.size(); ++i)
      if (rep.mollify_distance[i] <= eps) {
        row.level = cfg.ladder[i];
        row.distance = rep.mollify_distance[i];
        break;
      }
    rep.level_table.push_back(row);
  }

  // stage 2: one shared ensemble, one solve per rung
  const TimeGrid grid = make_grid(cfg.steps);
  const PathEnsemble ens =
      sample_brownian(grid, m, cfg.paths, cfg.seed, cfg.antithetic);
  const TerminalCondition xi = builtin_terminal(cfg.terminal, d, cfg.terminal_value);
  std::vector<SolutionPair> sols;
  sols.reserve(rungs.size());
  for (const Driver& fn : rungs) sols.push_back(solve_bsde(fn, xi, ens, cfg.regression));

  const std::size_t L = rungs.size();
  const double slack = cfg.slack.value(cfg.steps, cfg.paths);

  // stage 3: pairwise gap tables
  rep.d_y.assign(L, std::vector<double>(L, 0.0));
  rep.d_z.assign(L, std::vector<double>(L, 0.0));
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = i + 1; j < L; ++j) {
      rep.d_y[i][j] = rep.d_y[j][i] = sup_y_gap(sols[i], sols[j]);
      rep.d_z[i][j] = rep.d_z[j][i] = mean_z_gap(sols[i], sols[j]);
    }

  int inversions = 0;
  for (std::size_t i = 0; i + 2 < L; ++i)
    if (rep.d_y[i + 1][L - 1] > rep.d_y[i][L - 1] + 1e-15) {
      ++inversions;
      rep.flags.push_back("gap-to-top inversion at ladder level " +
                          std::to_string(cfg.ladder[i + 1]));
    }
  rep.gaps_monotone = inversions <= 1;

  // stage 4: a-priori bounds per pair, including the global dominator
  const double K = std::max(f.mod_y.growth_K, f.mod_z.growth_K);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = i + 1; j < L; ++j) {
      PairBound pb;
      pb.level_a = cfg.ladder[i];
      pb.level_b = cfg.ladder[j];
      pb.eps_pair = rep.mollify_distance[i] + rep.mollify_distance[j];
      const Step1Report s1 = step1_uniform_bound(sols[i], sols[j], pb.eps_pair, K);
      pb.bound = s1.bound;
      pb.sup_y_sq = s1.sup_y_sq;
      pb.mean_z_integral = s1.mean_z_integral;
      pb.slack_factor = s1.slack_factor;
      pb.step1_holds = s1.holds;
      const double eps_dom =
          std::max(rep.mollify_distance[i], rep.mollify_distance[j]);
      pb.v_eps0 = global_dominator(f.mod_y, eps_dom, d, cfg.steps).u.front();
      pb.global_holds = rep.d_y[i][j] <= pb.v_eps0 + slack;
      rep.step1_all_hold = rep.step1_all_hold && pb.step1_holds;
      rep.global_all_hold = rep.global_all_hold && pb.global_holds;
      rep.pair_bounds.push_back(pb);
    }

  for (double eps : cfg.epsilon_ladder)
    rep.v_eps_curve.push_back(global_dominator(f.mod_y, eps, d, cfg.steps).u.front());

  // stage 5: measure change on the widest-gap pair
  if (L >= 2) {
    std::size_t ga = 0, gb = 1;
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = i + 1; j < L; ++j)
        if (rep.d_y[i][j] > rep.d_y[ga][gb]) {
          ga = i;
          gb = j;
        }
    rep.gap_a = cfg.ladder[ga];
    rep.gap_b = cfg.ladder[gb];
    rep.gap_value = rep.d_y[ga][gb];

    const SignedCombination comb = signed_z_combination(sols[ga], sols[gb]);
    const AdaptedProcess nd = z_norm_diff(sols[ga], sols[gb]);
    const StoppingTime t0 = constant_stopping_time(grid, 0, cfg.paths);
    const StoppingTime tN = constant_stopping_time(grid, cfg.steps, cfg.paths);
    const GirsanovWindow window =
        novikov_window(comb.magnitude, nd, t0, tN, cfg.eps0);
    rep.window_fraction = window.active_fraction;

    AdaptedProcess psi(grid, cfg.paths, 1, 1);
    for (int j = 0; j <= cfg.steps; ++j)
      for (int p = 0; p < cfg.paths; ++p) psi.at(j, p) = f.mod_z(nd.at(j, p));
    const AdaptedProcess eta =
        drift_eta(psi, comb, window, static_cast<double>(d));
    const DensityReport dens = density(eta, ens, window);
    rep.density_mean = dens.mean;
    rep.density_stderr = dens.stderr_of_mean;

    // dominate the weighted Y-gap inside the windows: seed the comparison
    // curve at the windows' right ends via the envelope, then compare
    AdaptedProcess X(grid, cfg.paths, 1, 1);
    double max_x = 0.0;
    for (int j = 0; j <= cfg.steps; ++j)
      for (int p = 0; p < cfg.paths; ++p) {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
          s += std::abs(sols[ga].Y.at(j, p, i) - sols[gb].Y.at(j, p, i));
        X.at(j, p) = s;
        max_x = std::max(max_x, s);
      }
    StoppingTime tau;
    tau.horizon = cfg.steps;
    tau.index = window.right;
    double eps_gap = rep.mollify_distance[ga] + rep.mollify_distance[gb];
    BackwardOdeProblem base{f.mod_y, eps_gap + cfg.eps0, 0.0,
                            static_cast<double>(d), 1.0};
    const Envelope env = envelope_at(X, tau, base, max_x + 1.0);
    const DominationReport dom =
        domination_check(sols[ga], sols[gb], env.dominator, window, slack);
    rep.domination_passed = dom.passed;
    rep.domination_worst = dom.worst_margin;
    if (!dom.passed)
      rep.flags.push_back("domination violated on " +
                          std::to_string(dom.violations.size()) + " points");
  }

  // stage 6/7: the top rung as limit candidate
  rep.y0 = sols.back().meta.y0;
  rep.y0_stderr = sols.back().meta.y0_stderr;
  rep.limit_residual_rms = residual_check(sols.back(), f, xi, ens).rms;
  rep.smooth_residual_rms = residual_check(sols.back(), rungs.back(), xi, ens).rms;
  rep.residual_ok = rep.limit_residual_rms <= 2.0 * rep.smooth_residual_rms ||
                    rep.limit_residual_rms <= slack;

  rep.all_passed = rep.gaps_monotone && rep.step1_all_hold &&
                   rep.global_all_hold && rep.domination_passed && rep.residual_ok;
  return rep;
}

// ---------------------------------------------------------------------------

UniquenessReport run_uniqueness_probe(const ExperimentConfig& cfg,
                                      double perturbation_scale) {
  cfg.validate();
  if (perturbation_scale < 0.0)
    throw std::invalid_argument("run_uniqueness_probe: scale must be >= 0");

  const Driver f = builtin_driver(cfg.driver, cfg.driver_params);
  const MollifierKernel kernel{1.0, cfg.mollifier_nodes};
  const Driver top = f.has_lipschitz() ? f : mollify(f, kernel, cfg.ladder.back());

  const TimeGrid grid = make_grid(cfg.steps);
  const PathEnsemble ens =
      sample_brownian(grid, f.dim_b, cfg.paths, cfg.seed, cfg.antithetic);
  const TerminalCondition xi =
      builtin_terminal(cfg.terminal, f.dim_y, cfg.terminal_value);

  RegressionConfig pert = cfg.regression;
  pert.ridge *= std::pow(10.0, perturbation_scale);
  pert.picard += static_cast<int>(std::ceil(3.0 * perturbation_scale));

  const SolutionPair a = solve_bsde(top, xi, ens, cfg.regression);
  const SolutionPair b = solve_bsde(top, xi, ens, pert);

  UniquenessReport rep;
  rep.perturbation_scale = perturbation_scale;
  rep.y0_base = a.meta.y0;
  rep.y0_perturbed = b.meta.y0;
  rep.d_y = sup_y_gap(a, b);
  rep.budget = cfg.slack.value(cfg.steps, cfg.paths);
  rep.bit_identical = rep.d_y == 0.0;
  rep.within_budget = rep.d_y <= rep.budget;
  return rep;
}

// ---------------------------------------------------------------------------
// exports
// ---------------------------------------------------------------------------

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("export: cannot write " + p.string());
  out << text;
}

std::string gap_table_csv(const std::vector<int>& ladder,
                          const std::vector<std::vector<double>>& table) {
  std::ostringstream ss;
  ss << "n";
  for (int n : ladder) ss << "," << n;
  ss << "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    ss << ladder[i];
    for (std::size_t j = 0; j < table[i].size(); ++j)
      ss << "," << format_double(table[i][j]);
    ss << "\n";
  }
  return ss.str();
}

}  // namespace

void export_report(const ConvergenceReport& rep, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root);

  write_file(root / "config.json", config_to_json_text(rep.config));
  write_file(root / "gap_y.csv", gap_table_csv(rep.config.ladder, rep.d_y));
  write_file(root / "gap_z.csv", gap_table_csv(rep.config.ladder, rep.d_z));

  {
    std::ostringstream ss;
    ss << "n,distance,closeness,lipschitz\n";
    for (std::size_t i = 0; i < rep.config.ladder.size(); ++i)
      ss << rep.config.ladder[i] << "," << format_double(rep.mollify_distance[i])
         << "," << format_double(rep.mollify_closeness[i]) << ","
         << format_double(rep.mollify_lipschitz[i]) << "\n";
    write_file(root / "smoothing.csv", ss.str());
  }
  {
    std::ostringstream ss;
    ss << "eps,level,distance\n";
    for (const LevelForEps& row : rep.level_table)
      ss << format_double(row.eps) << "," << row.level << ","
         << format_double(row.distance) << "\n";
    write_file(root / "levels.csv", ss.str());
  }
  {
    std::ostringstream ss;
    ss << "a,b,eps_pair,bound,sup_y_sq,mean_z_integral,slack_factor,v_eps0,"
          "step1,global\n";
    for (const PairBound& pb : rep.pair_bounds)
      ss << pb.level_a << "," << pb.level_b << "," << format_double(pb.eps_pair)
         << "," << format_double(pb.bound) << "," << format_double(pb.sup_y_sq)
         << "," << format_double(pb.mean_z_integral) << ","
         << format_double(pb.slack_factor) << "," << format_double(pb.v_eps0)
         << "," << (pb.step1_holds ? 1 : 0) << "," << (pb.global_holds ? 1 : 0)
         << "\n";
    write_file(root / "bounds.csv", ss.str());
  }
  {
    std::ostringstream ss;
    ss << "eps,v0\n";
    for (std::size_t i = 0; i < rep.v_eps_curve.size(); ++i)
      ss << format_double(rep.config.epsilon_ladder[i]) << ","
         << format_double(rep.v_eps_curve[i]) << "\n";
    write_file(root / "dominator.csv", ss.str());
  }

  ordered_json j;
  j["config"] = config_json(rep.config);
  j["slack"] = format_double(rep.config.slack.value(rep.config.steps, rep.config.paths));
  j["gap_pair"] = {rep.gap_a, rep.gap_b};
  j["gap_value"] = format_double(rep.gap_value);
  j["window_fraction"] = format_double(rep.window_fraction);
  j["density_mean"] = format_double(rep.density_mean);
  j["density_stderr"] = format_double(rep.density_stderr);
  ordered_json y0 = ordered_json::array();
  for (double v : rep.y0) y0.push_back(format_double(v));
  j["y0"] = y0;
  ordered_json se = ordered_json::array();
  for (double v : rep.y0_stderr) se.push_back(format_double(v));
  j["y0_stderr"] = se;
  j["limit_residual_rms"] = format_double(rep.limit_residual_rms);
  j["smooth_residual_rms"] = format_double(rep.smooth_residual_rms);
  j["stages"] = {{"gaps_monotone", rep.gaps_monotone},
                 {"step1_all_hold", rep.step1_all_hold},
                 {"global_all_hold", rep.global_all_hold},
                 {"domination_passed", rep.domination_passed},
                 {"residual_ok", rep.residual_ok}};
  j["flags"] = rep.flags;
  j["all_passed"] = rep.all_passed;
  write_file(root / "summary.json", j.dump(2) + "\n");
}

}  // namespace bsdelab
