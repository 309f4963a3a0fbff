#pragma once

#include <array>
#include <fstream>

#include <json.hpp>

#include "svi/singular_values.hpp"
#include "svi/zeroth_order.hpp"

namespace svi {

// ---------------------------------------------------------------------------
// Probability simplex
// ---------------------------------------------------------------------------

// Euclidean projection onto {z >= 0, sum z = 1} by the sort-and-threshold
// rule: find the largest support whose common shift keeps entries positive.
inline Vector project_simplex(const Vector& v) {
  const Eigen::Index dim = v.size();
  if (dim == 0) throw std::invalid_argument("project_simplex: empty input");
  std::vector<double> u(v.data(), v.data() + dim);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double running = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    running += u[static_cast<std::size_t>(j)];
    const double candidate = (1.0 - running) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] + candidate > 0.0) theta = candidate;
  }
  Vector out(dim);
  for (Eigen::Index i = 0; i < dim; ++i) out[i] = std::max(v[i] + theta, 0.0);
  return out;
}

// The mixed-strategy set of one player.
class SimplexSet : public FeasibleSet {
 public:
  explicit SimplexSet(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("SimplexSet: dim must be >= 1");
  }

  int dim() const override { return dim_; }

  Vector project(const Vector& v) const override {
    if (v.size() != dim_)
      throw std::invalid_argument("SimplexSet::project: wrong dimension");
    return project_simplex(v);
  }

  // Largest distance between two simplex points: between two vertices.
  double diameter() const override { return dim_ > 1 ? std::sqrt(2.0) : 0.0; }

  // Uniform (flat Dirichlet) draw via normalized exponentials.
  Vector sample(Rng& rng) const override {
    Vector z(dim_);
    double total = 0.0;
    for (int i = 0; i < dim_; ++i) {
      z[i] = -std::log(1.0 - uniform01(rng));
      total += z[i];
    }
    return z / total;
  }

 private:
  int dim_;
};

// ---------------------------------------------------------------------------
// Synthetic quadratic VI with analytic solution
// ---------------------------------------------------------------------------

// F(z) = H (z - z*) with H = mu I + S, S skew-symmetric built from 2x2
// rotation blocks of weight omega = mu sqrt(kappa^2 - 1). The skew part
// drops out of (F(z) - F(z'))^T (z - z'), so the monotonicity modulus is mu
// exactly, while every paired singular value of H is sqrt(mu^2 + omega^2) =
// mu kappa = L. The feasible set is a ball centered at z* = 0.
struct QuadraticVIProblem {
  Matrix h;
  Vector z_star;
  double mu = 0.0;
  double lipschitz = 0.0;
  double noise_sq = 0.0;  // additive oracle noise E||noise||^2
  VIProblem problem;
};

inline QuadraticVIProblem make_quadratic_vi(int dim, double mu, double kappa,
                                            double radius, double noise_sq) {
  if (dim < 1) throw std::invalid_argument("make_quadratic_vi: dim must be >= 1");
  if (!(mu > 0.0) || !(kappa >= 1.0) || !(radius > 0.0) || noise_sq < 0.0)
    throw std::invalid_argument("make_quadratic_vi: need mu > 0, kappa >= 1, radius > 0");
  if (dim < 2 && kappa > 1.0)
    throw std::invalid_argument("make_quadratic_vi: kappa > 1 needs dim >= 2");

  QuadraticVIProblem q;
  q.mu = mu;
  q.lipschitz = mu * kappa;
  q.noise_sq = noise_sq;
  q.z_star = Vector::Zero(dim);
  q.h = mu * Matrix::Identity(dim, dim);
  const double omega = mu * std::sqrt(kappa * kappa - 1.0);
  for (int i = 0; i + 1 < dim; i += 2) {
    q.h(i, i + 1) = omega;
    q.h(i + 1, i) = -omega;
  }

  const Matrix h = q.h;
  const Vector z_star = q.z_star;
  DeterministicMapping mean;
  mean.evaluate = [h, z_star](const Vector& z) { return Vector(h * (z - z_star)); };
  mean.mu = mu;
  mean.lipschitz = q.lipschitz;

  q.problem.set = std::make_shared<BallSet>(dim, radius);
  q.problem.oracle.declared_bias = 0.0;
  q.problem.oracle.declared_variance = noise_sq;
  q.problem.oracle.mean = mean;
  const double noise_scale = std::sqrt(noise_sq / dim);
  q.problem.oracle.sample = [h, z_star, noise_scale, dim](const Vector& z, Rng& rng) {
    Vector out = h * (z - z_star);
    if (noise_scale > 0.0) {
      Vector g(dim);
      fill_standard_normal(rng, g);
      out += noise_scale * g;
    }
    return out;
  };
  q.problem.mu = mu;
  q.problem.lipschitz = q.lipschitz;
  q.problem.reference_solution = q.z_star;
  return q;
}

// ---------------------------------------------------------------------------
// Shared-noise value triples for bilinear Gaussian payoffs
// ---------------------------------------------------------------------------

namespace detail {

// For f^ = f + x^T Xi y with Xi i.i.d. N(0, var) entrywise, the three noise
// values at (x,y), (xp,y), (x,yp) under ONE Xi are jointly Gaussian with
//   cov(a, b) = var * (x_a . x_b)(y_a . y_b).
// Sampling that 3x3 law directly is exact in distribution and avoids
// materializing Xi. Zero pivots (repeated or zero points) are handled by
// truncating the Cholesky factor.
inline std::array<double, 3> bilinear_noise_triple(const Vector& x, const Vector& y,
                                                   const Vector& xp, const Vector& yp,
                                                   double var, Rng& rng) {
  if (var <= 0.0) return {0.0, 0.0, 0.0};
  const double xx = x.squaredNorm(), yy = y.squaredNorm();
  const double xxp = x.dot(xp), yyp = y.dot(yp);
  const double c00 = var * xx * yy;
  const double c01 = var * xxp * yy;
  const double c02 = var * xx * yyp;
  const double c11 = var * xp.squaredNorm() * yy;
  const double c12 = var * xxp * yyp;
  const double c22 = var * xx * yp.squaredNorm();

  const double l00 = std::sqrt(std::max(c00, 0.0));
  const double l10 = l00 > 0.0 ? c01 / l00 : 0.0;
  const double l20 = l00 > 0.0 ? c02 / l00 : 0.0;
  const double l11 = std::sqrt(std::max(c11 - l10 * l10, 0.0));
  const double l21 = l11 > 0.0 ? (c12 - l20 * l10) / l11 : 0.0;
  const double l22 = std::sqrt(std::max(c22 - l20 * l20 - l21 * l21, 0.0));

  double g0, g1, g2;
  standard_normal_pair(rng, g0, g1);
  g2 = standard_normal(rng);
  return {l00 * g0, l10 * g0 + l11 * g1, l20 * g0 + l21 * g1 + l22 * g2};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Quadratic saddle testbed (black-box view)
// ---------------------------------------------------------------------------

// f(x, y) = 1/2 ||x||^2 + x^T A y - 1/2 ||y||^2 on a product of balls, with
// A = s I so that the joint mapping has mu = 1 and L = sqrt(1 + s^2) = kappa
// exactly. Noisy evaluations add x^T Xi y with Xi i.i.d. N(0, payoff noise)
// shared across the three points of a smoothing draw.
class QuadraticSaddleOracle : public NoisyFunctionOracle {
 public:
  QuadraticSaddleOracle(Matrix a, double radius_x, double radius_y,
                        double payoff_noise_sq)
      : a_(std::move(a)),
        payoff_noise_sq_(payoff_noise_sq),
        n_(static_cast<int>(a_.rows())),
        m_(static_cast<int>(a_.cols())) {
    const double s = singular_values(a_).front();
    value_lipschitz_ = std::max(radius_x + s * radius_y, radius_y + s * radius_x);
    gradient_noise_ = payoff_noise_sq *
                      std::max(n_ * radius_y * radius_y, m_ * radius_x * radius_x);
  }

  int dim_x() const override { return n_; }
  int dim_y() const override { return m_; }
  double lipschitz_value() const override { return value_lipschitz_; }
  double gradient_noise() const override { return gradient_noise_; }

  double value(const Vector& x, const Vector& y) const {
    return 0.5 * x.squaredNorm() + x.dot(a_ * y) - 0.5 * y.squaredNorm();
  }

  double evaluate(const Vector& x, const Vector& y, Rng& rng) const override {
    double noise = 0.0;
    if (payoff_noise_sq_ > 0.0)
      noise = std::sqrt(payoff_noise_sq_) * x.norm() * y.norm() * standard_normal(rng);
    return value(x, y) + noise;
  }

  Triple evaluate_triple(const Vector& x, const Vector& y, const Vector& xp,
                         const Vector& yp, Rng& rng) const override {
    const Vector ay = a_ * y;
    const Vector atx = a_.transpose() * x;
    const double base = 0.5 * x.squaredNorm() + x.dot(ay) - 0.5 * y.squaredNorm();
    const double x_pert = 0.5 * xp.squaredNorm() + xp.dot(ay) - 0.5 * y.squaredNorm();
    const double y_pert = 0.5 * x.squaredNorm() + atx.dot(yp) - 0.5 * yp.squaredNorm();
    const auto w = detail::bilinear_noise_triple(x, y, xp, yp, payoff_noise_sq_, rng);
    return {base + w[0], x_pert + w[1], y_pert + w[2]};
  }

  const Matrix& payoff() const { return a_; }

 private:
  Matrix a_;
  double payoff_noise_sq_;
  int n_, m_;
  double value_lipschitz_ = 0.0;
  double gradient_noise_ = 0.0;
};

struct QuadraticSaddle {
  int n = 0, m = 0;
  Matrix a;
  double mu = 0.0;
  double lipschitz = 0.0;
  double payoff_noise_sq = 0.0;
  SaddleProblem saddle;    // black-box view
  VIProblem first_order;   // same problem through the mapping oracle
};

inline QuadraticSaddle make_quadratic_saddle(int n, int m, double kappa,
                                             double radius_x, double radius_y,
                                             double payoff_noise_sq) {
  if (n < 1 || m < 1) throw std::invalid_argument("make_quadratic_saddle: dims must be >= 1");
  if (!(kappa >= 1.0) || !(radius_x > 0.0) || !(radius_y > 0.0) || payoff_noise_sq < 0.0)
    throw std::invalid_argument("make_quadratic_saddle: need kappa >= 1, radii > 0");

  QuadraticSaddle p;
  p.n = n;
  p.m = m;
  const double s = std::sqrt(kappa * kappa - 1.0);
  p.a = Matrix::Zero(n, m);
  for (int i = 0; i < std::min(n, m); ++i) p.a(i, i) = s;
  p.mu = 1.0;
  p.lipschitz = kappa;
  p.payoff_noise_sq = payoff_noise_sq;

  auto set = std::make_shared<ProductSet>(std::make_shared<BallSet>(n, radius_x),
                                          std::make_shared<BallSet>(m, radius_y));
  auto oracle =
      std::make_shared<QuadraticSaddleOracle>(p.a, radius_x, radius_y, payoff_noise_sq);

  p.saddle.set = set;
  p.saddle.oracle = oracle;
  p.saddle.mu = p.mu;
  p.saddle.lipschitz = p.lipschitz;
  p.saddle.solution = Vector::Zero(n + m);

  const Matrix a = p.a;
  DeterministicMapping mean;
  mean.evaluate = [a, n, m](const Vector& z) {
    Vector out(n + m);
    out.head(n) = z.head(n) + a * z.tail(m);
    out.tail(m) = z.tail(m) - a.transpose() * z.head(n);
    return out;
  };
  mean.mu = p.mu;
  mean.lipschitz = p.lipschitz;

  p.first_order.set = set;
  p.first_order.oracle.declared_bias = 0.0;
  p.first_order.oracle.declared_variance =
      payoff_noise_sq * (n * radius_y * radius_y + m * radius_x * radius_x);
  p.first_order.oracle.mean = mean;
  const double noise_sd = std::sqrt(payoff_noise_sq);
  p.first_order.oracle.sample = [a, n, m, noise_sd](const Vector& z, Rng& rng) {
    Vector out(n + m);
    out.head(n) = z.head(n) + a * z.tail(m);
    out.tail(m) = z.tail(m) - a.transpose() * z.head(n);
    if (noise_sd > 0.0) {
      Matrix xi(n, m);
      fill_standard_normal(rng, xi);
      out.head(n) += noise_sd * (xi * z.tail(m));
      out.tail(m) -= noise_sd * (xi.transpose() * z.head(n));
    }
    return out;
  };
  p.first_order.mu = p.mu;
  p.first_order.lipschitz = p.lipschitz;
  p.first_order.reference_solution = Vector::Zero(n + m);
  return p;
}

// ---------------------------------------------------------------------------
// Regularized stochastic matrix game
// ---------------------------------------------------------------------------

enum class PayoffDistribution { normal, lognormal };

// min_x max_y  lambda_x/2 ||x||^2 + x^T A_xi y - lambda_y/2 ||y||^2 over the
// product of probability simplices. `a0` is the raw generated matrix; the
// payoff mean is a0 itself for normal noise and exp(a0/10 + sigma^2/2)
// entrywise for log-normal noise.
struct MatrixGameProblem {
  int n = 0, m = 0;
  double lambda_x = 1.0, lambda_y = 1.0;
  double noise_sq = 0.0;  // sigma^2 of the entrywise payoff noise
  PayoffDistribution dist = PayoffDistribution::normal;
  Matrix a0;
  Matrix mean_payoff;
};

// Two-stage block recipe: the matrix splits into 2x2 blocks of shape
// (n/2) x (m/2); each block gets a center a ~ Unif(-30, 30) and half-width
// b ~ Unif(0, 30), then entries i.i.d. Unif(a - b, a + b).
inline Matrix generate_payoff_matrix(int n, int m, Rng& rng) {
  if (n < 2 || m < 2 || n % 2 != 0 || m % 2 != 0)
    throw std::invalid_argument("generate_payoff_matrix: n and m must be positive and even");
  Matrix a0(n, m);
  const int half_n = n / 2, half_m = m / 2;
  for (int bi = 0; bi < 2; ++bi) {
    for (int bj = 0; bj < 2; ++bj) {
      const double center = uniform(rng, -30.0, 30.0);
      const double halfwidth = uniform(rng, 0.0, 30.0);
      for (int i = 0; i < half_n; ++i)
        for (int j = 0; j < half_m; ++j)
          a0(bi * half_n + i, bj * half_m + j) =
              uniform(rng, center - halfwidth, center + halfwidth);
    }
  }
  return a0;
}

inline Matrix compute_mean_payoff(const Matrix& a0, double noise_sq,
                                  PayoffDistribution dist) {
  if (dist == PayoffDistribution::normal) return a0;
  return (a0.array() / 10.0 + noise_sq / 2.0).exp().matrix();
}

inline MatrixGameProblem make_matrix_game(const Matrix& a0, double lambda_x,
                                          double lambda_y, double noise_sq,
                                          PayoffDistribution dist) {
  if (!(lambda_x > 0.0) || !(lambda_y > 0.0) || noise_sq < 0.0)
    throw std::invalid_argument("make_matrix_game: need lambda > 0 and noise_sq >= 0");
  MatrixGameProblem g;
  g.n = static_cast<int>(a0.rows());
  g.m = static_cast<int>(a0.cols());
  g.lambda_x = lambda_x;
  g.lambda_y = lambda_y;
  g.noise_sq = noise_sq;
  g.dist = dist;
  g.a0 = a0;
  g.mean_payoff = compute_mean_payoff(a0, noise_sq, dist);
  return g;
}

inline MatrixGameProblem generate_matrix_game(int n, int m, double lambda_x,
                                              double lambda_y, double noise_sq,
                                              PayoffDistribution dist, Rng& rng) {
  return make_matrix_game(generate_payoff_matrix(n, m, rng), lambda_x, lambda_y,
                          noise_sq, dist);
}

// One payoff draw. Normal: A0 + sigma Z. Log-normal: exp(A0/10 + sigma Z),
// whose entrywise mean is exp(A0/10 + sigma^2/2).
inline Matrix sample_payoff(const MatrixGameProblem& problem, Rng& rng) {
  Matrix z(problem.n, problem.m);
  fill_standard_normal(rng, z);
  const double sigma = std::sqrt(problem.noise_sq);
  if (problem.dist == PayoffDistribution::normal)
    return problem.a0 + sigma * z;
  return (problem.a0.array() / 10.0 + sigma * z.array()).exp().matrix();
}

// Entrywise variance of one payoff draw (used for declared noise bounds).
inline Matrix payoff_entry_variance(const MatrixGameProblem& problem) {
  if (problem.dist == PayoffDistribution::normal)
    return Matrix::Constant(problem.n, problem.m, problem.noise_sq);
  // Var(e^{m + sigma Z}) = e^{2m + sigma^2} (e^{sigma^2} - 1).
  const double s2 = problem.noise_sq;
  return ((problem.a0.array() / 5.0 + s2).exp() * std::expm1(s2)).matrix();
}

inline double game_mean_value(const MatrixGameProblem& problem, const Vector& x,
                              const Vector& y) {
  return 0.5 * problem.lambda_x * x.squaredNorm() + x.dot(problem.mean_payoff * y) -
         0.5 * problem.lambda_y * y.squaredNorm();
}

// One noisy value: draws A_xi once and evaluates the regularized payoff.
inline double game_value_oracle(const MatrixGameProblem& problem, const Vector& x,
                                const Vector& y, Rng& rng) {
  const Matrix a_xi = sample_payoff(problem, rng);
  return 0.5 * problem.lambda_x * x.squaredNorm() + x.dot(a_xi * y) -
         0.5 * problem.lambda_y * y.squaredNorm();
}

// One noisy mapping evaluation: draws A_xi once and returns
// (lambda_x x + A_xi y; lambda_y y - A_xi^T x).
inline Vector game_mapping_oracle(const MatrixGameProblem& problem, const Vector& z,
                                  Rng& rng) {
  if (z.size() != problem.n + problem.m)
    throw std::invalid_argument("game_mapping_oracle: wrong dimension");
  const Matrix a_xi = sample_payoff(problem, rng);
  Vector out(problem.n + problem.m);
  out.head(problem.n) =
      problem.lambda_x * z.head(problem.n) + a_xi * z.tail(problem.m);
  out.tail(problem.m) =
      problem.lambda_y * z.tail(problem.m) - a_xi.transpose() * z.head(problem.n);
  return out;
}

inline Matrix game_jacobian(const MatrixGameProblem& problem) {
  const int n = problem.n, m = problem.m;
  Matrix j = Matrix::Zero(n + m, n + m);
  j.topLeftCorner(n, n) = problem.lambda_x * Matrix::Identity(n, n);
  j.topRightCorner(n, m) = problem.mean_payoff;
  j.bottomLeftCorner(m, n) = -problem.mean_payoff.transpose();
  j.bottomRightCorner(m, m) = problem.lambda_y * Matrix::Identity(m, m);
  return j;
}

struct ConditionNumbers {
  double mu = 0.0;
  double L = 0.0;
  double kappa = 0.0;
};

// mu and L as the smallest/largest singular values of the mean-payoff
// Jacobian [[lambda_x I, A], [-A^T, lambda_y I]].
inline ConditionNumbers compute_condition_number(const MatrixGameProblem& problem) {
  const std::vector<double> sv = singular_values(game_jacobian(problem));
  ConditionNumbers c;
  c.L = sv.front();
  c.mu = sv.back();
  c.kappa = c.L / c.mu;
  return c;
}

inline DeterministicMapping game_mean_mapping(const MatrixGameProblem& problem) {
  const Matrix a = problem.mean_payoff;
  const double lx = problem.lambda_x, ly = problem.lambda_y;
  const int n = problem.n, m = problem.m;
  DeterministicMapping mapping;
  mapping.evaluate = [a, lx, ly, n, m](const Vector& z) {
    Vector out(n + m);
    out.head(n) = lx * z.head(n) + a * z.tail(m);
    out.tail(m) = ly * z.tail(m) - a.transpose() * z.head(n);
    return out;
  };
  // The bilinear part is skew and cancels in (F(z) - F(z'))^T (z - z').
  mapping.mu = std::min(lx, ly);
  mapping.lipschitz = compute_condition_number(problem).L;
  return mapping;
}

inline std::shared_ptr<const FeasibleSet> game_feasible_set(const MatrixGameProblem& problem) {
  return std::make_shared<ProductSet>(std::make_shared<SimplexSet>(problem.n),
                                      std::make_shared<SimplexSet>(problem.m));
}

// Deterministic extra-gradient on the mean-payoff mapping down to a
// projected-residual tolerance ||z - P(z - F(z))|| <= tol.
inline Vector solve_reference(const MatrixGameProblem& problem, double tolerance,
                              int max_iterations = 500000) {
  if (!(tolerance > 0.0))
    throw std::invalid_argument("solve_reference: tolerance must be > 0");
  const DeterministicMapping mapping = game_mean_mapping(problem);
  const auto set = game_feasible_set(problem);
  const double step = 0.5 / mapping.lipschitz;

  Vector z = Vector::Zero(problem.n + problem.m);
  z.head(problem.n).setConstant(1.0 / problem.n);
  z.tail(problem.m).setConstant(1.0 / problem.m);

  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iterations; ++it) {
    const Vector f_z = mapping.evaluate(z);
    residual = (z - set->project(z - f_z)).norm();
    if (residual <= tolerance) return z;
    const Vector z_half = set->project(z - step * f_z);
    z = set->project(z - step * mapping.evaluate(z_half));
  }
  throw std::runtime_error("solve_reference: no convergence after " +
                           std::to_string(max_iterations) +
                           " iterations; last residual " + std::to_string(residual));
}

// First-order view of the game: mapping oracle with one payoff draw per
// call. The declared variance bounds E||F^ - F||^2 over the simplices:
// normal noise gives sigma^2 (n ||y||^2 + m ||x||^2) <= sigma^2 (n + m);
// log-normal uses the worst column/row sums of the entrywise variance.
inline VIProblem make_game_vi(const MatrixGameProblem& problem) {
  VIProblem vi;
  vi.set = game_feasible_set(problem);
  const ConditionNumbers cond = compute_condition_number(problem);
  vi.mu = cond.mu;
  vi.lipschitz = cond.L;
  vi.oracle.mean = game_mean_mapping(problem);
  vi.oracle.declared_bias = 0.0;
  if (problem.dist == PayoffDistribution::normal) {
    vi.oracle.declared_variance = problem.noise_sq * (problem.n + problem.m);
  } else {
    const Matrix var = payoff_entry_variance(problem);
    vi.oracle.declared_variance =
        var.colwise().sum().maxCoeff() + var.rowwise().sum().maxCoeff();
  }
  const MatrixGameProblem data = problem;
  vi.oracle.sample = [data](const Vector& z, Rng& rng) {
    return game_mapping_oracle(data, z, rng);
  };
  return vi;
}

// Per-block gradient-noise bound induced by the payoff noise:
// E||(A_xi - A) y||^2 <= sigma^2 n ||y||^2 <= sigma^2 n on the simplex, so
// the joint per-block bound is sigma^2 max(n, m) for normal noise and the
// worst column/row variance sum for log-normal noise.
inline double game_gradient_noise(const MatrixGameProblem& problem) {
  if (problem.dist == PayoffDistribution::normal)
    return problem.noise_sq * std::max(problem.n, problem.m);
  const Matrix var = payoff_entry_variance(problem);
  return std::max(var.colwise().sum().maxCoeff(), var.rowwise().sum().maxCoeff());
}

// Value-gradient bound M over the product of simplices. Both block
// gradients are affine in (x, y), so their norms are convex and attain the
// maximum at a vertex pair (e_i, e_j); scan all n*m pairs exactly.
inline double game_value_lipschitz(const MatrixGameProblem& problem) {
  const Matrix& a = problem.mean_payoff;
  double worst = 0.0;
  for (int j = 0; j < problem.m; ++j) {
    const double col_sq = a.col(j).squaredNorm();
    for (int i = 0; i < problem.n; ++i) {
      const double gx = problem.lambda_x * problem.lambda_x +
                        2.0 * problem.lambda_x * a(i, j) + col_sq;
      worst = std::max(worst, gx);
    }
  }
  for (int i = 0; i < problem.n; ++i) {
    const double row_sq = a.row(i).squaredNorm();
    for (int j = 0; j < problem.m; ++j) {
      const double gy = problem.lambda_y * problem.lambda_y -
                        2.0 * problem.lambda_y * a(i, j) + row_sq;
      worst = std::max(worst, gy);
    }
  }
  return std::sqrt(worst);
}

// Black-box value oracle for the game. For normal noise the three values of
// a smoothing draw can be sampled through their exact joint law (the noise
// is bilinear Gaussian), which costs 3 normals instead of an n*m matrix;
// log-normal noise always materializes the payoff draw.
class GameValueOracle : public NoisyFunctionOracle {
 public:
  GameValueOracle(MatrixGameProblem problem, bool exact_law)
      : problem_(std::move(problem)),
        exact_law_(exact_law && problem_.dist == PayoffDistribution::normal),
        value_lipschitz_(game_value_lipschitz(problem_)),
        gradient_noise_(game_gradient_noise(problem_)) {}

  int dim_x() const override { return problem_.n; }
  int dim_y() const override { return problem_.m; }
  double lipschitz_value() const override { return value_lipschitz_; }
  double gradient_noise() const override { return gradient_noise_; }

  double evaluate(const Vector& x, const Vector& y, Rng& rng) const override {
    if (exact_law_) {
      const double sd = std::sqrt(problem_.noise_sq) * x.norm() * y.norm();
      return game_mean_value(problem_, x, y) + sd * standard_normal(rng);
    }
    return game_value_oracle(problem_, x, y, rng);
  }

  Triple evaluate_triple(const Vector& x, const Vector& y, const Vector& xp,
                         const Vector& yp, Rng& rng) const override {
    if (exact_law_) {
      const Matrix& a = problem_.mean_payoff;
      // Hot path of the batched estimator: reuse per-thread buffers for the
      // two matrix-vector products instead of allocating every draw.
      static thread_local Vector ay, atx;
      ay.noalias() = a * y;
      atx.noalias() = a.transpose() * x;
      const double lx = problem_.lambda_x, ly = problem_.lambda_y;
      const double base_x = 0.5 * lx * x.squaredNorm();
      const double base_y = 0.5 * ly * y.squaredNorm();
      const double base = base_x + x.dot(ay) - base_y;
      const double x_pert = 0.5 * lx * xp.squaredNorm() + xp.dot(ay) - base_y;
      const double y_pert = base_x + atx.dot(yp) - 0.5 * ly * yp.squaredNorm();
      const auto w = detail::bilinear_noise_triple(x, y, xp, yp, problem_.noise_sq, rng);
      return {base + w[0], x_pert + w[1], y_pert + w[2]};
    }
    const Matrix a_xi = sample_payoff(problem_, rng);
    const Vector ay = a_xi * y;
    const Vector atx = a_xi.transpose() * x;
    const double lx = problem_.lambda_x, ly = problem_.lambda_y;
    const double base_x = 0.5 * lx * x.squaredNorm();
    const double base_y = 0.5 * ly * y.squaredNorm();
    return {base_x + x.dot(ay) - base_y,
            0.5 * lx * xp.squaredNorm() + xp.dot(ay) - base_y,
            base_x + atx.dot(yp) - 0.5 * ly * yp.squaredNorm()};
  }

  const MatrixGameProblem& problem() const { return problem_; }
  bool exact_law() const { return exact_law_; }

 private:
  MatrixGameProblem problem_;
  bool exact_law_;
  double value_lipschitz_;
  double gradient_noise_;
};

// Black-box view of the game for the zeroth-order schemes.
inline SaddleProblem make_game_saddle(const MatrixGameProblem& problem, bool exact_law) {
  SaddleProblem s;
  s.set = game_feasible_set(problem);
  s.oracle = std::make_shared<GameValueOracle>(problem, exact_law);
  const ConditionNumbers cond = compute_condition_number(problem);
  s.mu = cond.mu;
  s.lipschitz = cond.L;
  return s;
}

// Vertex-pair start maximizing the distance to a known reference solution:
// ||e_i - x*||^2 is largest at the smallest component of x*.
inline Vector farthest_vertex_start(int n, int m, const Vector& z_star) {
  if (z_star.size() != n + m)
    throw std::invalid_argument("farthest_vertex_start: wrong dimension");
  Eigen::Index ix = 0, iy = 0;
  z_star.head(n).minCoeff(&ix);
  z_star.tail(m).minCoeff(&iy);
  Vector z0 = Vector::Zero(n + m);
  z0[ix] = 1.0;
  z0[n + iy] = 1.0;
  return z0;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

// JSON with full-precision (shortest round-trip) decimal entries, so a
// saved instance reloads bit-exactly.
inline void save_game(const MatrixGameProblem& problem, const std::string& path) {
  nlohmann::json j;
  j["n"] = problem.n;
  j["m"] = problem.m;
  j["lambda_x"] = problem.lambda_x;
  j["lambda_y"] = problem.lambda_y;
  j["noise_sq"] = problem.noise_sq;
  j["distribution"] = problem.dist == PayoffDistribution::normal ? "normal" : "lognormal";
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(problem.n));
  for (int i = 0; i < problem.n; ++i) {
    rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(problem.m));
    for (int jcol = 0; jcol < problem.m; ++jcol)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(jcol)] = problem.a0(i, jcol);
  }
  j["a0"] = rows;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_game: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_game: write failed for " + path);
}

inline MatrixGameProblem load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_game: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_game: malformed file " + path + ": " + e.what());
  }
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  const std::string dist_name = j.at("distribution").get<std::string>();
  if (dist_name != "normal" && dist_name != "lognormal")
    throw std::runtime_error("load_game: unknown distribution '" + dist_name + "'");
  const auto rows = j.at("a0").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(rows.size()) != n)
    throw std::runtime_error("load_game: a0 row count mismatch");
  Matrix a0(n, m);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != m)
      throw std::runtime_error("load_game: a0 column count mismatch");
    for (int jcol = 0; jcol < m; ++jcol)
      a0(i, jcol) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(jcol)];
  }
  return make_matrix_game(a0, j.at("lambda_x").get<double>(), j.at("lambda_y").get<double>(),
                          j.at("noise_sq").get<double>(),
                          dist_name == "normal" ? PayoffDistribution::normal
                                                : PayoffDistribution::lognormal);
}

}  // namespace svi
