#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "svi/harness.hpp"

using namespace svi;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_synthetic(const std::string& method, double noise_sq,
                                 std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.problem.kind = "synthetic";
  cfg.problem.dim = 8;
  cfg.problem.kappa = 10.0;
  cfg.problem.mu = 1.0;
  cfg.problem.radius = 1.0;
  cfg.problem.noise_sq = noise_sq;
  cfg.method = method;
  cfg.iters = 150;
  cfg.replications = 1;
  cfg.has_seed = true;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("experiment config parses defaults, overrides, and explicit params") {
  const ExperimentConfig defaults = experiment_config_from_json(json::object());
  REQUIRE(defaults.problem.kind == "synthetic");
  REQUIRE(defaults.method == "extra_point");
  REQUIRE(defaults.param_source == "defaults");
  REQUIRE(defaults.iters == 100);
  REQUIRE(defaults.replications == 1);
  REQUIRE_FALSE(defaults.has_seed);
  REQUIRE(defaults.output.csv == "trace.csv");

  const json j = {
      {"problem", {{"kind", "game-normal"}, {"n", 4}, {"m", 6}, {"noise_sq", 0.25}}},
      {"method", "szo_extra_momentum"},
      {"params", {{"theta", 0.25}}},
      {"iters", 42},
      {"replications", 7},
      {"seed", 99},
      {"threads", 3},
      {"schedule", {{"kind", "geometric"}, {"t0", 8.0}, {"growth", 1.5}}},
      {"start", {{"rule", "farthest_vertex"}}},
      {"output", {{"dir", "out"}, {"csv", "a.csv"}, {"replication_columns", true}}},
  };
  const ExperimentConfig cfg = experiment_config_from_json(j);
  REQUIRE(cfg.problem.kind == "game-normal");
  REQUIRE(cfg.problem.n == 4);
  REQUIRE(cfg.problem.noise_sq == 0.25);
  REQUIRE(cfg.method == "szo_extra_momentum");
  REQUIRE(cfg.theta == 0.25);
  REQUIRE(cfg.iters == 42);
  REQUIRE(cfg.replications == 7);
  REQUIRE(cfg.has_seed);
  REQUIRE(cfg.seed == 99);
  REQUIRE(cfg.threads == 3);
  REQUIRE(cfg.schedule.kind == "geometric");
  REQUIRE(cfg.schedule.t0 == 8.0);
  REQUIRE(cfg.start.rule == "farthest_vertex");
  REQUIRE(cfg.output.dir == "out");
  REQUIRE(cfg.output.replication_columns);

  // Explicit step sizes flip the source automatically.
  const ExperimentConfig expl = experiment_config_from_json(
      {{"params", {{"alpha", 0.1}, {"tau", 0.01}}}, {"seed", 1}});
  REQUIRE(expl.param_source == "explicit");
  REQUIRE(expl.explicit_extra_point.alpha == 0.1);
  REQUIRE(expl.explicit_extra_momentum.tau == 0.01);
}

TEST_CASE("experiment config validation rejects each malformed field") {
  ExperimentConfig ok = small_synthetic("extra_point", 0.0, 5);
  REQUIRE_NOTHROW(validate_experiment_config(ok));

  auto expect_reject = [](ExperimentConfig bad, const std::string& needle) {
    REQUIRE_THROWS_MATCHES(validate_experiment_config(bad), std::invalid_argument,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring(needle)));
  };

  ExperimentConfig bad = ok;
  bad.problem.kind = "mystery";
  expect_reject(bad, "unknown problem kind");

  bad = ok;
  bad.method = "newton";
  expect_reject(bad, "unknown method");

  bad = ok;
  bad.param_source = "magic";
  expect_reject(bad, "unknown parameter source");

  bad = ok;
  bad.iters = -1;
  expect_reject(bad, "iters");

  bad = ok;
  bad.replications = 0;
  expect_reject(bad, "replications");

  bad = ok;
  bad.has_seed = false;
  expect_reject(bad, "seed is required");

  bad = ok;
  bad.schedule.kind = "linear";
  expect_reject(bad, "unknown schedule kind");

  bad = ok;
  bad.start.rule = "origin";
  expect_reject(bad, "unknown start rule");

  bad = ok;
  bad.start.rule = "explicit";
  expect_reject(bad, "explicit start requires a point");

  bad = ok;
  bad.method = "extra_momentum";
  bad.param_source = "diminishing";
  expect_reject(bad, "diminishing");
}

TEST_CASE("config loader reports missing and malformed files") {
  REQUIRE_THROWS_AS(load_experiment_config("no_such_config.json"), std::invalid_argument);
  std::ofstream bad("broken_config.json");
  bad << "{ not json";
  bad.close();
  REQUIRE_THROWS_MATCHES(load_experiment_config("broken_config.json"), std::invalid_argument,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("malformed")));
}

TEST_CASE("run_experiment rejects start rules that need missing structure") {
  ExperimentConfig cfg = small_synthetic("extra_point", 0.0, 5);
  cfg.start.rule = "farthest_vertex";
  REQUIRE_THROWS_MATCHES(run_experiment(cfg), std::invalid_argument,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("game")));

  cfg = small_synthetic("extra_point", 0.0, 5);
  cfg.start.rule = "explicit";
  cfg.start.point = {0.1, 0.2};  // dim is 8
  REQUIRE_THROWS_MATCHES(run_experiment(cfg), std::invalid_argument,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("wrong dimension")));
}

TEST_CASE("same seed gives byte-identical CSV across runs and thread counts") {
  ExperimentConfig cfg = small_synthetic("extra_point", 0.01, 11);
  cfg.iters = 40;
  cfg.replications = 4;
  cfg.output.replication_columns = true;

  const ExperimentResult a = run_experiment(cfg);
  const ExperimentResult b = run_experiment(cfg);
  cfg.threads = 2;
  const ExperimentResult c = run_experiment(cfg);

  export_csv(a.records, "det_a.csv");
  export_csv(b.records, "det_b.csv");
  export_csv(c.records, "det_c.csv");
  const std::string bytes = slurp("det_a.csv");
  REQUIRE(bytes == slurp("det_b.csv"));
  REQUIRE(bytes == slurp("det_c.csv"));
}

TEST_CASE("default-parameter runs stay under their certified bound column") {
  // Noiseless, so the contraction must dominate pointwise with no slack.
  for (const std::string method : {"extra_point", "extra_momentum"}) {
    ExperimentConfig cfg = small_synthetic(method, 0.0, 17);
    const ExperimentResult res = run_experiment(cfg);
    const TraceRecord& rec = res.records.front();
    REQUIRE(rec.rows() == 151);
    for (std::size_t i = 0; i < rec.rows(); ++i) {
      REQUIRE(std::isfinite(rec.bound[i]));
      REQUIRE(rec.mean_dist_sq[i] <= rec.bound[i] * (1.0 + 1e-12));
    }
    REQUIRE(res.summary.at("kappa").get<double>() == Catch::Approx(10.0));
    REQUIRE(res.summary.at("final_mean_dist_sq").get<double>() ==
            Catch::Approx(rec.mean_dist_sq.back()));
  }
}

TEST_CASE("diminishing runs carry the sublinear bound column") {
  ExperimentConfig cfg = small_synthetic("extra_point", 0.05, 19);
  cfg.param_source = "diminishing";
  cfg.iters = 60;
  cfg.replications = 3;
  const ExperimentResult res = run_experiment(cfg);
  const TraceRecord& rec = res.records.front();
  for (std::size_t i = 0; i < rec.rows(); ++i) {
    REQUIRE(std::isfinite(rec.bound[i]));
    REQUIRE(rec.bound[i] > 0.0);
  }
  // The 1/k envelope decreases monotonically once the offset is fixed.
  REQUIRE(rec.bound.back() < rec.bound.front());
}

TEST_CASE("baseline and explicit runs expose an uncertified bound column") {
  ExperimentConfig cfg = small_synthetic("extra_gradient", 0.0, 23);
  cfg.iters = 10;
  const ExperimentResult res = run_experiment(cfg);
  for (double b : res.records.front().bound)
    REQUIRE(b == std::numeric_limits<double>::infinity());
}

TEST_CASE("zero-iteration run emits the single start row") {
  ExperimentConfig cfg = small_synthetic("extra_point", 0.0, 29);
  cfg.iters = 0;
  const ExperimentResult res = run_experiment(cfg);
  const TraceRecord& rec = res.records.front();
  REQUIRE(rec.rows() == 1);
  REQUIRE(rec.k.front() == 0);
  REQUIRE(rec.cum_samples.front() == 0);
  export_csv(res.records, "single_row.csv");
  const std::string bytes = slurp("single_row.csv");
  REQUIRE(std::count(bytes.begin(), bytes.end(), '\n') == 2);  // header + one row
}

TEST_CASE("exported CSV parses back to the same trace") {
  ExperimentConfig cfg = small_synthetic("extra_point", 0.02, 31);
  cfg.iters = 25;
  cfg.replications = 3;
  cfg.output.replication_columns = true;
  const ExperimentResult res = run_experiment(cfg);
  export_csv(res.records, "roundtrip.csv");
  const auto back = parse_csv("roundtrip.csv");
  REQUIRE(back.size() == 1);
  const TraceRecord& a = res.records.front();
  const TraceRecord& b = back.front();
  REQUIRE(b.label == a.label);
  REQUIRE(b.k == a.k);
  REQUIRE(b.cum_samples == a.cum_samples);
  REQUIRE(b.replication_dist_sq.size() == 3);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    REQUIRE(b.mean_dist_sq[i] == a.mean_dist_sq[i]);  // %.17g round-trips exactly
    REQUIRE(b.bound[i] == a.bound[i]);
    for (std::size_t r = 0; r < 3; ++r)
      REQUIRE(b.replication_dist_sq[r][i] == a.replication_dist_sq[r][i]);
  }
}

TEST_CASE("export_csv rejects empty input") {
  REQUIRE_THROWS_AS(export_csv({}, "never.csv"), std::invalid_argument);
  TraceRecord empty;
  empty.label = "empty";
  REQUIRE_THROWS_AS(export_csv({empty}, "never.csv"), std::invalid_argument);
}

TEST_CASE("worst-case zeroth-order run consumes exactly the scheduled draws") {
  ExperimentConfig cfg;
  cfg.problem.kind = "synthetic";
  cfg.problem.n = 3;
  cfg.problem.m = 2;
  cfg.problem.kappa = 2.0;
  cfg.problem.noise_sq = 0.0;
  cfg.method = "szo_extra_point";
  cfg.iters = 5;
  cfg.has_seed = true;
  cfg.seed = 37;
  const ExperimentResult res = run_experiment(cfg);
  const TraceRecord& rec = res.records.front();
  REQUIRE(rec.cum_samples.front() == 0);
  REQUIRE(rec.cum_samples.back() == total_samples(ScheduleVariant::extra_point, 5, 2.0));
  REQUIRE(res.summary.at("total_evals").get<long long>() == 3 * rec.cum_samples.back());
  REQUIRE(res.summary.at("method_info").contains("sigma_tilde_sq"));
  REQUIRE(res.summary.at("method_info").at("schedule") == "worst_case");
}

TEST_CASE("plot output is well-formed SVG with one polyline per record") {
  TraceRecord down;
  down.label = "down";
  down.k = {0, 1, 2, 3, 4};
  down.mean_dist_sq = {1.0, 0.1, 0.01, 1e-3, 1e-4};
  down.bound.assign(5, std::numeric_limits<double>::infinity());
  down.cum_samples = {0, 2, 4, 6, 8};
  TraceRecord flat = down;
  flat.label = "flat";
  flat.mean_dist_sq.assign(5, 0.5);

  emit_plot({down, flat}, "plot.svg");
  const std::string svg = slurp("plot.svg");
  REQUIRE(svg.rfind("<?xml", 0) == 0);
  REQUIRE(svg.find("</svg>") != std::string::npos);
  REQUIRE(svg.find(">down<") != std::string::npos);
  REQUIRE(svg.find(">flat<") != std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
       pos = svg.find("<polyline", pos + 1))
    ++polylines;
  REQUIRE(polylines == 2);

  // A decreasing trace must walk down the screen: strictly increasing y.
  const std::size_t start = svg.find("points=\"") + 8;
  const std::string points = svg.substr(start, svg.find('"', start) - start);
  std::stringstream ss(points);
  std::string pair;
  double prev_y = -1.0;
  int count = 0;
  while (ss >> pair) {
    const double y = std::stod(pair.substr(pair.find(',') + 1));
    REQUIRE(y > prev_y);
    prev_y = y;
    ++count;
  }
  REQUIRE(count == 5);

  // Log axis with nothing positive to draw is an error.
  TraceRecord zeros = down;
  zeros.mean_dist_sq.assign(5, 0.0);
  REQUIRE_THROWS_AS(emit_plot({zeros}, "never.svg"), std::invalid_argument);
}

TEST_CASE("write_experiment_outputs materializes all three artifacts") {
  ExperimentConfig cfg = small_synthetic("extra_momentum", 0.01, 41);
  cfg.iters = 20;
  cfg.output.dir = "harness_out";
  std::filesystem::create_directories(cfg.output.dir);
  const ExperimentResult res = run_experiment(cfg);
  write_experiment_outputs(res, cfg);
  REQUIRE(std::filesystem::exists("harness_out/trace.csv"));
  REQUIRE(std::filesystem::exists("harness_out/trace.svg"));
  REQUIRE(std::filesystem::exists("harness_out/summary.json"));
  const json summary = json::parse(slurp("harness_out/summary.json"));
  REQUIRE(summary.at("method") == "extra_momentum");
  REQUIRE(summary.at("seed").get<std::uint64_t>() == 41);
}

TEST_CASE("game experiment config parses and rejects non-game kinds") {
  const json j = {
      {"problem",
       {{"kind", "game-lognormal"}, {"n", 4}, {"m", 6}, {"noise_sq", 0.25}}},
      {"replications", 3},
      {"seed", 9},
      {"threads", 2},
      {"game",
       {{"horizon_per_kappa", 2.5}, {"batch_t0", 3.0}, {"batch_final", 10.0}, {"rho", 1e-6}}},
  };
  const GameExperimentConfig cfg = game_experiment_config_from_json(j);
  REQUIRE(cfg.dist == PayoffDistribution::lognormal);
  REQUIRE(cfg.n == 4);
  REQUIRE(cfg.m == 6);
  REQUIRE(cfg.noise_sq == 0.25);
  REQUIRE(cfg.replications == 3);
  REQUIRE(cfg.has_seed);
  REQUIRE(cfg.threads == 2);
  REQUIRE(cfg.horizon_per_kappa == 2.5);
  REQUIRE(cfg.batch_t0 == 3.0);
  REQUIRE(cfg.batch_final == 10.0);
  REQUIRE(cfg.rho == 1e-6);

  json bad = j;
  bad["problem"]["kind"] = "synthetic";
  REQUIRE_THROWS_AS(game_experiment_config_from_json(bad), std::invalid_argument);
}

TEST_CASE("game experiment runs all four methods deterministically") {
  // Tiny hand-built instance so the horizon stays in the tens.
  Matrix a0(2, 2);
  a0 << 2.0, 1.0, 1.0, 2.0;
  const MatrixGameProblem game =
      make_matrix_game(a0, 1.0, 1.0, 0.25, PayoffDistribution::normal);
  save_game(game, "tiny_game.json");

  GameExperimentConfig cfg;
  cfg.load_path = "tiny_game.json";
  cfg.replications = 2;
  cfg.has_seed = true;
  cfg.seed = 43;
  cfg.horizon_per_kappa = 3.0;
  cfg.batch_t0 = 2.0;
  cfg.batch_final = 16.0;
  cfg.rho = 1e-6;

  const GameExperimentResult res = run_game_experiment(cfg);
  REQUIRE(res.records.size() == 4);
  REQUIRE(res.records[0].label == "szo_extra_point");
  REQUIRE(res.records[1].label == "szo_extra_momentum");
  REQUIRE(res.records[2].label == "szo_extra_gradient");
  REQUIRE(res.records[3].label == "szo_ogda");
  const int K = game_horizon(res.cond.kappa, cfg.horizon_per_kappa);
  REQUIRE(res.summary.at("horizon").get<int>() == K);
  for (const auto& rec : res.records) {
    REQUIRE(rec.rows() == static_cast<std::size_t>(K) + 1);
    REQUIRE(rec.cum_samples.front() == 0);
    REQUIRE(rec.mean_dist_sq.front() > 0.0);
  }
  // All four share the same start ball, so row 0 agrees across methods.
  for (const auto& rec : res.records)
    REQUIRE(rec.mean_dist_sq.front() == res.records.front().mean_dist_sq.front());
  for (const std::string name :
       {"szo_extra_point", "szo_extra_momentum", "szo_extra_gradient", "szo_ogda"})
    REQUIRE(res.summary.at("methods").contains(name));

  const GameExperimentResult again = run_game_experiment(cfg);
  for (std::size_t s = 0; s < 4; ++s) {
    REQUIRE(again.records[s].mean_dist_sq == res.records[s].mean_dist_sq);
    REQUIRE(again.records[s].cum_samples == res.records[s].cum_samples);
  }
}
