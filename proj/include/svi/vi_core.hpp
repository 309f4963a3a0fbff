#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svi/rng.hpp"

namespace svi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline void fill_standard_normal(Rng& rng, Vector& v) {
  Eigen::Index i = 0;
  for (; i + 1 < v.size(); i += 2) standard_normal_pair(rng, v[i], v[i + 1]);
  if (i < v.size()) v[i] = standard_normal(rng);
}

inline void fill_standard_normal(Rng& rng, Matrix& m) {
  double a, b;
  double* p = m.data();
  Eigen::Index n = m.size(), i = 0;
  for (; i + 1 < n; i += 2) {
    standard_normal_pair(rng, a, b);
    p[i] = a;
    p[i + 1] = b;
  }
  if (i < n) p[i] = standard_normal(rng);
}

// Squared Euclidean distance ||z - z*||^2, the convergence metric used
// throughout the solver traces.
inline double distance_squared(const Vector& z, const Vector& z_star) {
  if (z.size() != z_star.size())
    throw std::invalid_argument("distance_squared: dimension mismatch (" +
                                std::to_string(z.size()) + " vs " +
                                std::to_string(z_star.size()) + ")");
  return (z - z_star).squaredNorm();
}

// Closed convex feasible set with Euclidean projection and a finite
// diameter bound D. `sample` returns a random feasible point; it is used by
// the empirical contract checks, never by the solvers themselves.
class FeasibleSet {
 public:
  virtual ~FeasibleSet() = default;
  virtual int dim() const = 0;
  virtual Vector project(const Vector& v) const = 0;
  virtual double diameter() const = 0;
  virtual Vector sample(Rng& rng) const = 0;
};

// Euclidean ball { z : ||z - center|| <= radius }.
class BallSet : public FeasibleSet {
 public:
  BallSet(Vector center, double radius)
      : center_(std::move(center)), radius_(radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("BallSet: radius must be positive");
  }
  BallSet(int dim, double radius) : BallSet(Vector::Zero(dim), radius) {}

  int dim() const override { return static_cast<int>(center_.size()); }

  Vector project(const Vector& v) const override {
    Vector d = v - center_;
    const double norm = d.norm();
    if (norm <= radius_) return v;
    return center_ + d * (radius_ / norm);
  }

  double diameter() const override { return 2.0 * radius_; }

  // Uniform over the ball: uniform direction, radius ~ r * U^(1/dim).
  Vector sample(Rng& rng) const override {
    Vector d(center_.size());
    fill_standard_normal(rng, d);
    double norm = d.norm();
    while (norm == 0.0) {  // astronomically unlikely; regenerate
      fill_standard_normal(rng, d);
      norm = d.norm();
    }
    const double r = radius_ * std::pow(uniform01(rng), 1.0 / static_cast<double>(dim()));
    return center_ + d * (r / norm);
  }

  const Vector& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Vector center_;
  double radius_;
};

// Cartesian product of two feasible sets over stacked coordinates (a; b).
class ProductSet : public FeasibleSet {
 public:
  ProductSet(std::shared_ptr<const FeasibleSet> a, std::shared_ptr<const FeasibleSet> b)
      : a_(std::move(a)), b_(std::move(b)) {}

  int dim() const override { return a_->dim() + b_->dim(); }

  Vector project(const Vector& v) const override {
    check_dim(v);
    Vector out(dim());
    out.head(a_->dim()) = a_->project(v.head(a_->dim()));
    out.tail(b_->dim()) = b_->project(v.tail(b_->dim()));
    return out;
  }

  double diameter() const override {
    return std::hypot(a_->diameter(), b_->diameter());
  }

  Vector sample(Rng& rng) const override {
    Vector out(dim());
    out.head(a_->dim()) = a_->sample(rng);
    out.tail(b_->dim()) = b_->sample(rng);
    return out;
  }

  const FeasibleSet& first() const { return *a_; }
  const FeasibleSet& second() const { return *b_; }

 private:
  void check_dim(const Vector& v) const {
    if (v.size() != dim())
      throw std::invalid_argument("ProductSet: dimension mismatch");
  }
  std::shared_ptr<const FeasibleSet> a_, b_;
};

// Deterministic mapping F with its strong-monotonicity modulus mu and
// Lipschitz constant L (L >= mu, so kappa = L/mu >= 1).
struct DeterministicMapping {
  std::function<Vector(const Vector&)> evaluate;
  double mu = 0.0;
  double lipschitz = 0.0;
};

// Stochastic first-order oracle: sample(z, rng) returns one noisy
// evaluation. declared_bias / declared_variance are the contract bounds
//   E||F^(z) - F(z)||  <= declared_bias
//   E||F^(z) - F(z)||^2 <= declared_variance
// `mean` carries the underlying deterministic mapping when known (test and
// verification use only).
struct StochasticMappingOracle {
  std::function<Vector(const Vector&, Rng&)> sample;
  double declared_bias = 0.0;
  double declared_variance = 0.0;
  std::optional<DeterministicMapping> mean;
};

struct VIProblem {
  std::shared_ptr<const FeasibleSet> set;
  StochasticMappingOracle oracle;
  double mu = 0.0;
  double lipschitz = 0.0;
  std::optional<Vector> reference_solution;

  double kappa() const { return lipschitz / mu; }
};

// Per-run record produced by the solver drivers. distances[r][k] is d_k of
// replication r (present only when the reference solution is known);
// mean_distances is the across-replication average E[d_k]. Iterates are
// kept for replication 0 only. cumulative_samples[k] counts oracle draws
// consumed to produce z^k (so entry 0 is 0 and the final entry is the whole
// run's scheduled draw count); the one-off initialization draw is reported
// separately in init_samples. cumulative_evals counts raw function
// evaluations for zeroth-order runs (3 per draw).
struct SolverTrace {
  std::vector<Vector> iterates;
  std::vector<std::vector<double>> distances;
  std::vector<double> mean_distances;
  std::vector<double> mean_potentials;  // nonempty only for extra-momentum runs
  std::vector<long long> cumulative_samples;
  std::vector<long long> cumulative_evals;
  std::vector<double> wall_time;  // seconds per iteration, replication 0
  long long init_samples = 0;

  int iterations() const { return static_cast<int>(cumulative_samples.size()) - 1; }
};

struct MonotonicityReport {
  double min_observed_ratio = 0.0;
  bool pass = false;
};

// Samples random pairs in the set and reports the worst observed
// monotonicity ratio <F(z)-F(z'), z-z'> / ||z-z'||^2; passes when the
// minimum clears the declared modulus up to roundoff.
inline MonotonicityReport verify_monotonicity(const DeterministicMapping& mapping,
                                              const FeasibleSet& set, int num_probes,
                                              Rng& rng) {
  if (num_probes < 1) throw std::invalid_argument("verify_monotonicity: num_probes must be >= 1");
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int p = 0; p < num_probes; ++p) {
    Vector z = set.sample(rng);
    Vector zp = set.sample(rng);
    double dist_sq = (z - zp).squaredNorm();
    // A degenerate pair carries no ratio information; resample it.
    while (dist_sq < 1e-24) {
      zp = set.sample(rng);
      dist_sq = (z - zp).squaredNorm();
    }
    const double ratio = (mapping.evaluate(z) - mapping.evaluate(zp)).dot(z - zp) / dist_sq;
    min_ratio = std::min(min_ratio, ratio);
  }
  return {min_ratio, min_ratio >= mapping.mu * (1.0 - 1e-9)};
}

struct OracleContractReport {
  double max_bias_hat = 0.0;
  double max_var_hat = 0.0;
  bool pass = false;
};

// Monte-Carlo check of the oracle's declared bias/variance contract at the
// given probe points. Passes when, at every point, the empirical
// ||mean(F^ - F)|| and E||F^ - F||^2 stay below the declared bounds inflated
// by three standard errors (population bounds need a confidence band in a
// finite-sample test). The bias is the norm of the mean deviation -- the
// mean deviation norm would never vanish for a noisy oracle.
inline OracleContractReport verify_oracle_contract(const StochasticMappingOracle& oracle,
                                                   const std::vector<Vector>& probe_points,
                                                   int samples_per_point, Rng& rng) {
  if (samples_per_point < 100)
    throw std::invalid_argument("verify_oracle_contract: samples_per_point must be >= 100");
  if (!oracle.mean)
    throw std::invalid_argument(
        "verify_oracle_contract: oracle has no underlying deterministic mapping to compare against");

  OracleContractReport report;
  report.pass = true;
  const double n = static_cast<double>(samples_per_point);
  for (const Vector& z : probe_points) {
    const Vector f = oracle.mean->evaluate(z);
    Vector sum_dev = Vector::Zero(f.size());
    double sum_sq = 0.0, sum_quad = 0.0;
    for (int s = 0; s < samples_per_point; ++s) {
      const Vector dev = oracle.sample(z, rng) - f;
      const double dev_sq = dev.squaredNorm();
      sum_dev += dev;
      sum_sq += dev_sq;
      sum_quad += dev_sq * dev_sq;
    }
    const double var_hat = sum_sq / n;
    const double bias_hat = (sum_dev / n).norm();
    const double se_bias = std::sqrt(var_hat / n);
    const double se_var = std::sqrt(std::max(0.0, sum_quad / n - var_hat * var_hat) / n);
    report.max_bias_hat = std::max(report.max_bias_hat, bias_hat);
    report.max_var_hat = std::max(report.max_var_hat, var_hat);
    if (bias_hat > oracle.declared_bias + 3.0 * se_bias) report.pass = false;
    if (var_hat > oracle.declared_variance + 3.0 * se_var) report.pass = false;
  }
  return report;
}

}  // namespace svi
