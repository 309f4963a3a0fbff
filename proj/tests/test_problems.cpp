#include <catch2/catch_amalgamated.hpp>

#include <Eigen/SVD>

#include "svi/problems.hpp"

using namespace svi;

namespace {

// Independent projection oracle: enumerate every support set, solve the
// equality-constrained projection on it, keep KKT-feasible candidates, and
// return the closest. Exponential, usable up to dim ~ 12.
Vector brute_force_simplex_projection(const Vector& v) {
  const int d = static_cast<int>(v.size());
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < d; ++i)
      if (mask & (1u << i)) {
        sum += v[i];
        ++count;
      }
    const double theta = (1.0 - sum) / count;
    Vector x = Vector::Zero(d);
    bool feasible = true;
    for (int i = 0; i < d && feasible; ++i) {
      if (mask & (1u << i)) {
        x[i] = v[i] + theta;
        if (x[i] < -1e-12) feasible = false;  // primal
      } else if (v[i] + theta > 1e-12) {
        feasible = false;  // dual
      }
    }
    if (!feasible) continue;
    for (int i = 0; i < d; ++i) x[i] = std::max(x[i], 0.0);
    const double dist = (x - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

std::vector<double> eigen_singular_values(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  return {sv.data(), sv.data() + sv.size()};
}

}  // namespace

TEST_CASE("simplex projection matches the worked examples") {
  Vector v(2);
  v << 0.3, 0.3;
  Vector p = project_simplex(v);
  REQUIRE(p[0] == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(p[1] == Catch::Approx(0.5).margin(1e-15));

  v << 2.0, 0.0;
  p = project_simplex(v);
  REQUIRE(p[0] == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(p[1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("simplex projection agrees with brute-force support enumeration") {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 12);
    Vector v(d);
    fill_standard_normal(rng, v);
    v *= 2.0;
    const Vector fast = project_simplex(v);
    const Vector slow = brute_force_simplex_projection(v);
    REQUIRE(fast.sum() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(fast.minCoeff() >= 0.0);
    REQUIRE((fast - slow).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("simplex set samples feasible points and projects idempotently") {
  SimplexSet simplex(5);
  REQUIRE(simplex.diameter() == Catch::Approx(std::sqrt(2.0)));
  Rng rng(43);
  for (int i = 0; i < 100; ++i) {
    const Vector z = simplex.sample(rng);
    REQUIRE(z.sum() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(z.minCoeff() >= 0.0);
    REQUIRE((simplex.project(z) - z).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("synthetic quadratic VI has the advertised constants") {
  const double mu = 0.5, kappa = 12.0;
  const QuadraticVIProblem q = make_quadratic_vi(6, mu, kappa, 2.0, 0.0);
  REQUIRE(q.problem.mu == mu);
  REQUIRE(q.problem.lipschitz == Catch::Approx(mu * kappa));

  // F vanishes at the solution and the operator has uniform singular values L.
  const Vector at_star = q.problem.oracle.mean->evaluate(q.z_star);
  REQUIRE(at_star.norm() == 0.0);
  for (const double sv : singular_values(q.h))
    REQUIRE(sv == Catch::Approx(mu * kappa).epsilon(1e-10));

  Rng rng(47);
  const auto report = verify_monotonicity(*q.problem.oracle.mean, *q.problem.set, 300, rng);
  REQUIRE(report.pass);
  REQUIRE(report.min_observed_ratio == Catch::Approx(mu).epsilon(1e-9));
}

TEST_CASE("synthetic oracle noise honors its declared variance") {
  const QuadraticVIProblem q = make_quadratic_vi(5, 1.0, 4.0, 1.0, 0.3);
  Rng rng(53);
  std::vector<Vector> probes;
  for (int i = 0; i < 3; ++i) probes.push_back(q.problem.set->sample(rng));
  const auto report = verify_oracle_contract(q.problem.oracle, probes, 5000, rng);
  REQUIRE(report.pass);
  REQUIRE(report.max_var_hat == Catch::Approx(0.3).epsilon(0.2));
}

TEST_CASE("quadratic saddle oracle evaluates f with controlled noise") {
  const QuadraticSaddle qs = make_quadratic_saddle(3, 2, 2.0, 1.0, 1.0, 0.0);
  Vector x(3), y(2);
  x << 0.5, -0.5, 0.25;
  y << 0.4, -0.2;
  Rng rng(59);
  const auto* oracle = dynamic_cast<const QuadraticSaddleOracle*>(qs.saddle.oracle.get());
  REQUIRE(oracle != nullptr);
  const double expected =
      0.5 * x.squaredNorm() + x.dot(qs.a * y) - 0.5 * y.squaredNorm();
  REQUIRE(oracle->evaluate(x, y, rng) == Catch::Approx(expected).margin(1e-14));

  // The first-order view agrees with the analytic mapping and declares an
  // honest variance.
  const QuadraticSaddle noisy = make_quadratic_saddle(3, 2, 2.0, 1.0, 1.0, 0.2);
  REQUIRE(noisy.first_order.oracle.declared_variance ==
          Catch::Approx(0.2 * (3 * 1.0 + 2 * 1.0)));
  std::vector<Vector> probes;
  for (int i = 0; i < 2; ++i) probes.push_back(noisy.first_order.set->sample(rng));
  const auto report = verify_oracle_contract(noisy.first_order.oracle, probes, 5000, rng);
  REQUIRE(report.pass);
}

TEST_CASE("payoff matrix generator respects block structure bounds") {
  Rng rng(61);
  const Matrix a = generate_payoff_matrix(10, 20, rng);
  REQUIRE(a.rows() == 10);
  REQUIRE(a.cols() == 20);
  REQUIRE(a.maxCoeff() <= 60.0);
  REQUIRE(a.minCoeff() >= -60.0);

  Rng rng2(61);
  const Matrix b = generate_payoff_matrix(10, 20, rng2);
  REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0);  // deterministic in the seed

  REQUIRE_THROWS_AS(generate_payoff_matrix(3, 4, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(generate_payoff_matrix(4, 5, rng), std::invalid_argument);
}

TEST_CASE("payoff sampling matches the declared entry distribution") {
  Matrix a0(2, 2);
  a0 << 1.0, -2.0, 0.5, 3.0;

  SECTION("normal noise: mean a0, entry variance sigma^2") {
    const MatrixGameProblem g = make_matrix_game(a0, 1.0, 1.0, 0.5, PayoffDistribution::normal);
    REQUIRE((g.mean_payoff - a0).cwiseAbs().maxCoeff() == 0.0);
    Rng rng(67);
    Matrix mean = Matrix::Zero(2, 2), second = Matrix::Zero(2, 2);
    const int N = 40000;
    for (int i = 0; i < N; ++i) {
      const Matrix s = sample_payoff(g, rng);
      mean += s;
      second += s.cwiseProduct(s);
    }
    mean /= N;
    second /= N;
    const Matrix var = second - mean.cwiseProduct(mean);
    // 5-sigma Monte-Carlo bands.
    const double mean_tol = 5.0 * std::sqrt(0.5 / N);
    REQUIRE((mean - a0).cwiseAbs().maxCoeff() <= mean_tol);
    REQUIRE((var.array() - 0.5).abs().maxCoeff() <= 5.0 * 0.5 * std::sqrt(2.0 / N));
    REQUIRE((payoff_entry_variance(g).array() - 0.5).abs().maxCoeff() == 0.0);
  }

  SECTION("lognormal noise: mean exp(a0/10 + sigma^2/2)") {
    const MatrixGameProblem g =
        make_matrix_game(a0, 1.0, 1.0, 0.5, PayoffDistribution::lognormal);
    const Matrix expected_mean = (a0.array() / 10.0 + 0.25).exp().matrix();
    REQUIRE((g.mean_payoff - expected_mean).cwiseAbs().maxCoeff() <= 1e-15);
    Rng rng(71);
    Matrix mean = Matrix::Zero(2, 2);
    const int N = 60000;
    for (int i = 0; i < N; ++i) mean += sample_payoff(g, rng);
    mean /= N;
    const Matrix var = payoff_entry_variance(g);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double se = std::sqrt(var(i, j) / N);
        REQUIRE(std::abs(mean(i, j) - expected_mean(i, j)) <= 5.0 * se);
      }
  }
}

TEST_CASE("game value oracle has the bilinear noise variance") {
  Matrix a0(2, 2);
  a0 << 1.0, 0.0, 0.0, -1.0;
  const MatrixGameProblem g = make_matrix_game(a0, 1.0, 1.0, 0.5, PayoffDistribution::normal);
  Vector x(2), y(2);
  x << 0.7, 0.3;
  y << 0.2, 0.8;
  Rng rng(73);
  const double f_mean = game_mean_value(g, x, y);
  double sum = 0.0, sum_sq = 0.0;
  const int N = 60000;
  for (int i = 0; i < N; ++i) {
    const double f = game_value_oracle(g, x, y, rng);
    sum += f;
    sum_sq += f * f;
  }
  const double mean = sum / N;
  const double var = sum_sq / N - mean * mean;
  const double expected_var = 0.5 * x.squaredNorm() * y.squaredNorm();
  REQUIRE(mean == Catch::Approx(f_mean).margin(5.0 * std::sqrt(expected_var / N)));
  REQUIRE(var == Catch::Approx(expected_var).epsilon(0.05));
}

TEST_CASE("one-by-one game realizes the textbook Jacobian") {
  Matrix a0(1, 1);
  a0 << 1.0;
  const MatrixGameProblem g = make_matrix_game(a0, 1.0, 1.0, 0.0, PayoffDistribution::normal);
  const Matrix j = game_jacobian(g);
  REQUIRE(j.rows() == 2);
  REQUIRE(j(0, 0) == 1.0);
  REQUIRE(j(0, 1) == 1.0);
  REQUIRE(j(1, 0) == -1.0);
  REQUIRE(j(1, 1) == 1.0);
  const auto sv = singular_values(j);
  REQUIRE(sv[0] == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  REQUIRE(sv[1] == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  const ConditionNumbers c = compute_condition_number(g);
  REQUIRE(c.kappa == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("condition numbers agree with the dense SVD oracle") {
  Rng rng(79);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 * (1 + static_cast<int>(rng() % 7));
    const int m = 2 * (1 + static_cast<int>(rng() % 8));
    const MatrixGameProblem g =
        generate_matrix_game(n, m, 0.5 + uniform01(rng), 0.5 + uniform01(rng), 0.25,
                             PayoffDistribution::normal, rng);
    const Matrix j = game_jacobian(g);
    const auto mine = singular_values(j);
    const auto ref = eigen_singular_values(j);
    REQUIRE(mine.size() == ref.size());
    for (std::size_t i = 0; i < mine.size(); ++i)
      REQUIRE(mine[i] == Catch::Approx(ref[i]).epsilon(1e-8));

    const ConditionNumbers c = compute_condition_number(g);
    REQUIRE(c.L == Catch::Approx(ref.front()).epsilon(1e-8));
    REQUIRE(c.mu == Catch::Approx(ref.back()).epsilon(1e-8));
  }
}

TEST_CASE("hand-rolled SVD handles rectangular and rank-deficient input") {
  Rng rng(83);
  Matrix wide(3, 7);
  fill_standard_normal(rng, wide);
  auto mine = singular_values(wide);
  auto ref = eigen_singular_values(wide);
  for (std::size_t i = 0; i < mine.size(); ++i)
    REQUIRE(mine[i] == Catch::Approx(ref[i]).margin(1e-10));

  Matrix deficient(4, 4);
  fill_standard_normal(rng, deficient);
  deficient.col(3) = deficient.col(0) + deficient.col(1);  // rank 3
  mine = singular_values(deficient);
  ref = eigen_singular_values(deficient);
  for (std::size_t i = 0; i < mine.size(); ++i)
    REQUIRE(mine[i] == Catch::Approx(ref[i]).margin(1e-9));
  REQUIRE(mine.back() <= 1e-10);
}

TEST_CASE("reference solver meets its residual contract") {
  Rng rng(89);
  const MatrixGameProblem g =
      generate_matrix_game(6, 8, 1.0, 1.0, 0.5, PayoffDistribution::normal, rng);
  const double tol = 1e-10;
  const Vector z = solve_reference(g, tol);

  // Feasibility and the fixed-point residual.
  REQUIRE(z.head(6).sum() == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(z.tail(8).sum() == Catch::Approx(1.0).margin(1e-9));
  const auto set = game_feasible_set(g);
  const auto mapping = game_mean_mapping(g);
  const double residual = (z - set->project(z - mapping.evaluate(z))).norm();
  REQUIRE(residual <= tol);

  // Tightening the tolerance moves the answer by at most 10 tol / mu.
  const Vector z_tight = solve_reference(g, tol / 10.0);
  REQUIRE((z - z_tight).norm() <= 10.0 * tol / mapping.mu);
}

TEST_CASE("game first-order oracle declares an honest variance bound") {
  Rng rng(97);
  const MatrixGameProblem g =
      generate_matrix_game(4, 6, 1.0, 1.0, 0.5, PayoffDistribution::normal, rng);
  VIProblem vi = make_game_vi(g);
  std::vector<Vector> probes;
  for (int i = 0; i < 3; ++i) probes.push_back(vi.set->sample(rng));
  const auto report = verify_oracle_contract(vi.oracle, probes, 4000, rng);
  REQUIRE(report.pass);

  // Per-block noise at a vertex pair equals sigma^2 * n on the x block.
  Vector z = Vector::Zero(10);
  z[0] = 1.0;
  z[4] = 1.0;
  const Vector f_mean = vi.oracle.mean->evaluate(z);
  double acc = 0.0;
  const int N = 20000;
  for (int i = 0; i < N; ++i)
    acc += (vi.oracle.sample(z, rng).head(4) - f_mean.head(4)).squaredNorm();
  REQUIRE(acc / N == Catch::Approx(0.5 * 4).epsilon(0.1));
  REQUIRE(game_gradient_noise(g) >= 0.5 * 4);
}

TEST_CASE("value Lipschitz bound dominates gradient norms over the simplices") {
  Rng rng(101);
  const MatrixGameProblem g =
      generate_matrix_game(6, 4, 1.0, 1.0, 0.25, PayoffDistribution::normal, rng);
  const double M = game_value_lipschitz(g);
  SimplexSet sx(6), sy(4);
  for (int i = 0; i < 200; ++i) {
    const Vector x = sx.sample(rng), y = sy.sample(rng);
    const Vector gx = g.lambda_x * x + g.mean_payoff * y;
    const Vector gy = -(g.lambda_y * y) + g.mean_payoff.transpose() * x;
    REQUIRE(gx.norm() <= M + 1e-12);
    REQUIRE(gy.norm() <= M + 1e-12);
  }
}

TEST_CASE("exact-law and materialized game noise follow the same law") {
  Rng rng(103);
  const MatrixGameProblem g =
      generate_matrix_game(10, 20, 1.0, 1.0, 0.5, PayoffDistribution::normal, rng);
  const GameValueOracle exact(g, true);
  const GameValueOracle mat(g, false);
  REQUIRE(exact.exact_law());
  REQUIRE_FALSE(mat.exact_law());

  SimplexSet sx(10), sy(20);
  const Vector x = sx.sample(rng), y = sy.sample(rng);
  const Vector xp = project_simplex(x + 0.15 * sx.sample(rng));
  const Vector yp = project_simplex(y + 0.15 * sy.sample(rng));

  // Analytic law shared by both routes: mean = bilinear means, covariance
  // c_ab = sigma^2 (x_a . x_b)(y_a . y_b).
  const double mean_base = game_mean_value(g, x, y);
  const double mean_xp = game_mean_value(g, xp, y);
  const double mean_yp = game_mean_value(g, x, yp);
  const Vector xs[3] = {x, xp, x};
  const Vector ys[3] = {y, y, yp};
  Matrix cov_expected(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      cov_expected(a, b) = 0.5 * xs[a].dot(xs[b]) * ys[a].dot(ys[b]);

  const int N = 150000;
  for (const GameValueOracle* oracle : {&exact, &mat}) {
    Vector sum = Vector::Zero(3);
    Matrix outer = Matrix::Zero(3, 3);
    for (int i = 0; i < N; ++i) {
      const auto t = oracle->evaluate_triple(x, y, xp, yp, rng);
      Vector v(3);
      v << t.base - mean_base, t.x_pert - mean_xp, t.y_pert - mean_yp;
      sum += v;
      outer += v * v.transpose();
    }
    const Vector mean = sum / N;
    const Matrix cov = outer / N - mean * mean.transpose();
    for (int a = 0; a < 3; ++a) {
      const double se = std::sqrt(cov_expected(a, a) / N);
      INFO((oracle == &exact ? "exact" : "materialized") << " component " << a);
      REQUIRE(std::abs(mean[a]) <= 5.0 * se);
      for (int b = 0; b < 3; ++b)
        REQUIRE(cov(a, b) == Catch::Approx(cov_expected(a, b)).epsilon(0.05).margin(1e-6));
    }
  }
}

TEST_CASE("farthest vertex start maximizes the start distance over all vertices") {
  Rng rng(107);
  const MatrixGameProblem g =
      generate_matrix_game(4, 6, 1.0, 1.0, 0.5, PayoffDistribution::normal, rng);
  const Vector z_star = solve_reference(g, 1e-10);
  const Vector z0 = farthest_vertex_start(4, 6, z_star);
  const double chosen = distance_squared(z0, z_star);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) {
      Vector v = Vector::Zero(10);
      v[i] = 1.0;
      v[4 + j] = 1.0;
      REQUIRE(chosen >= distance_squared(v, z_star) - 1e-12);
    }
}

TEST_CASE("game serialization round-trips bit-exactly and validates on load") {
  Rng rng(109);
  const MatrixGameProblem g =
      generate_matrix_game(4, 6, 1.25, 0.75, 0.5, PayoffDistribution::lognormal, rng);
  const std::string path = "roundtrip_game.json";
  save_game(g, path);
  const MatrixGameProblem back = load_game(path);
  REQUIRE(back.n == g.n);
  REQUIRE(back.m == g.m);
  REQUIRE(back.lambda_x == g.lambda_x);
  REQUIRE(back.lambda_y == g.lambda_y);
  REQUIRE(back.noise_sq == g.noise_sq);
  REQUIRE(back.dist == g.dist);
  REQUIRE((back.a0 - g.a0).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((back.mean_payoff - g.mean_payoff).cwiseAbs().maxCoeff() == 0.0);

  std::ofstream bad("bad_game.json");
  bad << "{\"n\": 4}";
  bad.close();
  REQUIRE_THROWS(load_game("bad_game.json"));
  REQUIRE_THROWS(load_game("missing_game.json"));
}
