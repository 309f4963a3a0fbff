// Command-line front end: every subcommand is a thin adapter over the
// library; no numerical logic lives here.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "svi/harness.hpp"

namespace {

std::string one_line(std::string text) {
  for (auto& c : text)
    if (c == '\n' || c == '\r') c = ';';
  return text;
}

// Flag values shared by the experiment-style subcommands. Presence is
// tracked so flags override config-file values which override defaults.
struct Overrides {
  std::string config;
  std::uint64_t seed = 0;
  int replications = 0;
  int iters = 0;
  std::string method;
  std::string out;
  int threads = 0;
  bool override_validation = false;
  bool has_seed = false, has_replications = false, has_iters = false, has_method = false,
       has_out = false, has_threads = false;
};

void add_override_flags(CLI::App* cmd, Overrides& o, bool wants_method_iters) {
  cmd->add_option("--config", o.config, "JSON config file (flags take precedence)");
  cmd->add_option("--seed", o.seed, "master RNG seed (required; no time-based default)")
      ->each([&o](const std::string&) { o.has_seed = true; });
  cmd->add_option("--replications", o.replications, "independent replications R")
      ->each([&o](const std::string&) { o.has_replications = true; });
  if (wants_method_iters) {
    cmd->add_option("--iters", o.iters, "iteration horizon K")
        ->each([&o](const std::string&) { o.has_iters = true; });
    cmd->add_option("--method", o.method,
                    "extra_point | extra_momentum | szo_extra_point | szo_extra_momentum | "
                    "extra_gradient | ogda")
        ->each([&o](const std::string&) { o.has_method = true; });
  }
  cmd->add_option("--out", o.out, "output directory")->each([&o](const std::string&) {
    o.has_out = true;
  });
  cmd->add_option("--threads", o.threads, "replication-level worker threads")
      ->each([&o](const std::string&) { o.has_threads = true; });
  cmd->add_flag("--override-validation", o.override_validation,
                "run parameter sets that fail the validity conditions");
}

nlohmann::json config_json(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("config: malformed JSON in " + path + ": " + e.what());
  }
}

int run_solve(const Overrides& o) {
  svi::ExperimentConfig cfg = svi::experiment_config_from_json(config_json(o.config));
  if (o.has_seed) {
    cfg.seed = o.seed;
    cfg.has_seed = true;
  }
  if (o.has_replications) cfg.replications = o.replications;
  if (o.has_iters) cfg.iters = o.iters;
  if (o.has_method) cfg.method = o.method;
  if (o.has_out) cfg.output.dir = o.out;
  if (o.has_threads) cfg.threads = o.threads;
  if (o.override_validation) cfg.override_validation = true;
  const svi::ExperimentResult result = svi::run_experiment(cfg);
  svi::write_experiment_outputs(result, cfg);
  std::cout << result.summary.dump(2) << '\n';
  return 0;
}

int run_game_experiment(const Overrides& o) {
  const nlohmann::json j = config_json(o.config);
  svi::GameExperimentConfig cfg = svi::game_experiment_config_from_json(j);
  if (o.has_seed) {
    cfg.seed = o.seed;
    cfg.has_seed = true;
  }
  if (o.has_replications) cfg.replications = o.replications;
  if (o.has_threads) cfg.threads = o.threads;
  svi::OutputConfig out;
  if (j.contains("output")) {
    const auto& jo = j.at("output");
    if (jo.contains("dir")) out.dir = jo.at("dir").get<std::string>();
    if (jo.contains("csv")) out.csv = jo.at("csv").get<std::string>();
    if (jo.contains("svg")) out.svg = jo.at("svg").get<std::string>();
    if (jo.contains("summary")) out.summary = jo.at("summary").get<std::string>();
  }
  if (o.has_out) out.dir = o.out;

  const svi::GameExperimentResult result = svi::run_game_experiment(cfg);
  svi::ensure_output_dir(out.dir);
  svi::export_csv(result.records, svi::path_join(out.dir, out.csv));
  svi::PlotOptions plot;
  plot.title = result.summary.at("problem").get<std::string>() + " comparison";
  svi::emit_plot(result.records, svi::path_join(out.dir, out.svg), plot);
  std::ofstream summary_out(svi::path_join(out.dir, out.summary));
  if (!summary_out)
    throw std::runtime_error("game-experiment: cannot open summary file in " + out.dir);
  summary_out << result.summary.dump(2) << '\n';
  std::cout << result.summary.dump(2) << '\n';
  return 0;
}

struct CheckFlags {
  std::string method = "extra_point";
  double mu = 1.0;
  double kappa = 0.0;
  double lipschitz = 0.0;
  double alpha = -1.0, beta = -1.0, gamma = -1.0, eta = -1.0, tau = -1.0, theta = -1.0;
};

int run_check_params(const CheckFlags& f) {
  if (f.kappa <= 0.0 && f.lipschitz <= 0.0)
    throw std::invalid_argument("check-params: provide --kappa or --lipschitz");
  if (f.mu <= 0.0) throw std::invalid_argument("check-params: --mu must be positive");
  const double L = f.lipschitz > 0.0 ? f.lipschitz : f.mu * f.kappa;
  if (L < f.mu) throw std::invalid_argument("check-params: Lipschitz constant below modulus");

  if (f.method == "extra_point") {
    svi::ExtraPointParams p = svi::default_extra_point_params(f.mu, L);
    if (f.alpha >= 0.0) p.alpha = f.alpha;
    if (f.beta >= 0.0) p.beta = f.beta;
    if (f.gamma >= 0.0) p.gamma = f.gamma;
    if (f.eta >= 0.0) p.eta = f.eta;
    if (f.tau >= 0.0) p.tau = f.tau;
    const auto check = svi::check_extra_point_conditions(p, f.mu, L);
    const svi::TParameters t = svi::t_parameters(p, f.mu, L);
    std::cout << "method: extra_point\n"
              << "verdict: " << (check.valid ? "valid" : "invalid") << '\n';
    for (const auto& v : check.violated) std::cout << "violated: " << v << '\n';
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "alpha: %.17g\nbeta: %.17g\ngamma: %.17g\neta: %.17g\ntau: %.17g\n"
                  "t1: %.17g\nt2: %.17g\nt3: %.17g\nq: %.17g\n",
                  p.alpha, p.beta, p.gamma, p.eta, p.tau, t.t1, t.t2, t.t3, t.q);
    std::cout << buf;
    return check.valid ? 0 : 3;
  }
  if (f.method == "extra_momentum") {
    // Build from a legal base theta so an out-of-range --theta reaches the
    // checker (which names the violation) instead of the factory's throw.
    svi::ExtraMomentumParams p = svi::default_extra_momentum_params(f.mu, L, 0.125);
    if (f.theta >= 0.0) p.theta = f.theta;
    if (f.alpha >= 0.0) p.alpha = f.alpha;
    if (f.gamma >= 0.0) p.gamma = f.gamma;
    if (f.tau >= 0.0)
      p.tau = f.tau;
    else
      p.tau = p.alpha / (1.0 + p.theta / (L / f.mu));  // ratio identity
    const auto check = svi::check_extra_momentum_conditions(p, f.mu, L);
    const double kappa = L / f.mu;
    const double rate = 1.0 + p.theta / kappa;
    std::cout << "method: extra_momentum\n"
              << "verdict: " << (check.valid ? "valid" : "invalid") << '\n';
    for (const auto& v : check.violated) std::cout << "violated: " << v << '\n';
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "alpha: %.17g\ngamma: %.17g\ntau: %.17g\ntheta: %.17g\n"
                  "rate: %.17g\nmonotonicity_ratio: %.17g\nstep_ratio: %.17g\n"
                  "damping_ratio: %.17g\n",
                  p.alpha, p.gamma, p.tau, p.theta, rate, (1.0 + p.alpha * f.mu - p.gamma) / rate,
                  p.alpha / p.tau / rate,
                  1.0 / ((8.0 * p.tau * p.tau * L * L + 2.0 * p.gamma) * rate));
    std::cout << buf;
    return check.valid ? 0 : 3;
  }
  throw std::invalid_argument("check-params: method must be extra_point or extra_momentum");
}

struct EstimateFlags {
  Overrides common;
  long long samples = 20000;
  int probes = 3;
  double rho = 1e-4;
};

int run_estimate_oracle(const EstimateFlags& f) {
  const nlohmann::json j = config_json(f.common.config);
  svi::ExperimentConfig cfg = svi::experiment_config_from_json(j);
  if (f.common.has_seed) {
    cfg.seed = f.common.seed;
    cfg.has_seed = true;
  }
  if (!cfg.has_seed) throw std::invalid_argument("estimate-oracle: seed is required");
  if (f.samples < 2) throw std::invalid_argument("estimate-oracle: --samples must be >= 2");
  if (f.probes < 1) throw std::invalid_argument("estimate-oracle: --probes must be >= 1");

  nlohmann::json report;
  report["samples_per_probe"] = f.samples;
  svi::Rng rng(svi::derive_seed(cfg.seed, 0x8000000000000003ull));

  const bool game = cfg.problem.kind != "synthetic";
  svi::VIProblem problem;
  if (game) {
    const svi::PayoffDistribution dist = cfg.problem.kind == "game-normal"
                                             ? svi::PayoffDistribution::normal
                                             : svi::PayoffDistribution::lognormal;
    svi::MatrixGameProblem g;
    if (!cfg.problem.load_path.empty()) {
      g = svi::load_game(cfg.problem.load_path);
    } else {
      svi::Rng gen(svi::derive_seed(cfg.seed, 0x8000000000000002ull));
      g = svi::generate_matrix_game(cfg.problem.n, cfg.problem.m, cfg.problem.lambda_x,
                                    cfg.problem.lambda_y, cfg.problem.noise_sq, dist, gen);
    }
    problem = svi::make_game_vi(g);
    report["problem"] = cfg.problem.kind;
    report["value_lipschitz"] = svi::game_value_lipschitz(g);
    report["gradient_noise_per_block"] = svi::game_gradient_noise(g);
    const double st = svi::sigma_tilde_sq(g.n, g.m, svi::game_value_lipschitz(g),
                                          svi::game_gradient_noise(g), f.rho, f.rho,
                                          svi::compute_condition_number(g).L);
    report["sigma_tilde_sq"] = st;
    report["rho"] = f.rho;
  } else {
    problem = svi::make_quadratic_vi(cfg.problem.dim, cfg.problem.mu, cfg.problem.kappa,
                                     cfg.problem.radius, cfg.problem.noise_sq)
                  .problem;
    report["problem"] = "synthetic";
  }

  std::vector<svi::Vector> probe_points;
  probe_points.reserve(f.probes);
  for (int p = 0; p < f.probes; ++p) probe_points.push_back(problem.set->sample(rng));
  const auto stats = svi::verify_oracle_contract(problem.oracle, probe_points,
                                                 static_cast<int>(f.samples), rng);
  report["first_order"] = {{"probe_points", f.probes},
                           {"max_bias_hat", stats.max_bias_hat},
                           {"max_var_hat", stats.max_var_hat},
                           {"declared_bias", problem.oracle.declared_bias},
                           {"declared_variance", problem.oracle.declared_variance},
                           {"within_declared", stats.pass}};
  std::cout << report.dump(2) << '\n';
  return 0;
}

int run_gen_problem(const Overrides& o) {
  const nlohmann::json j = config_json(o.config);
  svi::ExperimentConfig cfg = svi::experiment_config_from_json(j);
  if (o.has_seed) {
    cfg.seed = o.seed;
    cfg.has_seed = true;
  }
  if (!cfg.has_seed) throw std::invalid_argument("gen-problem: seed is required");
  // Only games are serializable; without an explicit kind, generate the
  // normal-noise game rather than rejecting the run.
  if (!j.contains("problem") || !j.at("problem").contains("kind"))
    cfg.problem.kind = "game-normal";
  if (cfg.problem.kind != "game-normal" && cfg.problem.kind != "game-lognormal")
    throw std::invalid_argument("gen-problem: problem kind must be game-normal or game-lognormal");
  const svi::PayoffDistribution dist = cfg.problem.kind == "game-normal"
                                           ? svi::PayoffDistribution::normal
                                           : svi::PayoffDistribution::lognormal;
  svi::Rng gen(svi::derive_seed(cfg.seed, 0x8000000000000002ull));
  const svi::MatrixGameProblem g =
      svi::generate_matrix_game(cfg.problem.n, cfg.problem.m, cfg.problem.lambda_x,
                                cfg.problem.lambda_y, cfg.problem.noise_sq, dist, gen);
  std::string name = "game.json";
  if (j.contains("output") && j.at("output").contains("game"))
    name = j.at("output").at("game").get<std::string>();
  const std::string dir = o.has_out ? o.out : (j.contains("output") && j.at("output").contains("dir")
                                                   ? j.at("output").at("dir").get<std::string>()
                                                   : ".");
  const std::string path = svi::path_join(dir, name);
  svi::ensure_output_dir(dir);
  svi::save_game(g, path);
  const svi::ConditionNumbers cond = svi::compute_condition_number(g);
  nlohmann::json summary = {{"path", path},   {"n", g.n},        {"m", g.m},
                            {"mu", cond.mu},  {"lipschitz", cond.L}, {"kappa", cond.kappa},
                            {"noise_sq", g.noise_sq}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic variational-inequality solver toolkit"};
  app.require_subcommand(1);

  Overrides solve_flags, game_flags, gen_flags;
  CheckFlags check_flags;
  EstimateFlags estimate_flags;

  CLI::App* solve = app.add_subcommand("solve", "run one method on a configured problem");
  add_override_flags(solve, solve_flags, true);

  CLI::App* game = app.add_subcommand(
      "game-experiment", "four-method zeroth-order comparison on a regularized matrix game");
  add_override_flags(game, game_flags, false);

  CLI::App* check = app.add_subcommand("check-params",
                                       "validate step-size conditions and print derived values");
  check->add_option("--method", check_flags.method, "extra_point | extra_momentum");
  check->add_option("--mu", check_flags.mu, "strong-monotonicity modulus");
  check->add_option("--kappa", check_flags.kappa, "condition number (sets L = mu * kappa)");
  check->add_option("--lipschitz", check_flags.lipschitz, "Lipschitz constant (overrides kappa)");
  check->add_option("--alpha", check_flags.alpha, "step size");
  check->add_option("--beta", check_flags.beta, "extrapolation weight (extra_point)");
  check->add_option("--gamma", check_flags.gamma, "momentum weight");
  check->add_option("--eta", check_flags.eta, "mid-point step (extra_point)");
  check->add_option("--tau", check_flags.tau, "gradient-correction weight");
  check->add_option("--theta", check_flags.theta, "rate parameter (extra_momentum)");

  CLI::App* estimate = app.add_subcommand(
      "estimate-oracle", "Monte-Carlo estimate of oracle bias/variance at random probe points");
  add_override_flags(estimate, estimate_flags.common, false);
  estimate->add_option("--samples", estimate_flags.samples, "draws per probe point");
  estimate->add_option("--probes", estimate_flags.probes, "number of probe points");
  estimate->add_option("--rho", estimate_flags.rho, "smoothing radius for sigma-tilde reporting");

  CLI::App* gen = app.add_subcommand("gen-problem", "generate and serialize a game instance");
  add_override_flags(gen, gen_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    // Expanded help so every subcommand flag is visible from the top level.
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (solve->parsed()) return run_solve(solve_flags);
    if (game->parsed()) return run_game_experiment(game_flags);
    if (check->parsed()) return run_check_params(check_flags);
    if (estimate->parsed()) return run_estimate_oracle(estimate_flags);
    if (gen->parsed()) return run_gen_problem(gen_flags);
    std::cerr << "error: config: no subcommand selected\n";
    return 2;
  } catch (const svi::ValidationError& e) {
    std::cerr << "error: validation: " << one_line(e.what()) << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: numeric: " << one_line(e.what()) << '\n';
    return 4;
  }
}
