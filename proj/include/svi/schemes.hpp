#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "svi/vi_core.hpp"

namespace svi {

// Thrown when a parameter set fails its validity conditions and no override
// was requested. The CLI maps this to its own exit code.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Parameter sets and validity conditions
// ---------------------------------------------------------------------------

// Extra-point scheme coefficients: step sizes (alpha, eta), heavy-ball
// weights (beta for the half step, gamma for the full step) and the optimism
// weight tau on consecutive oracle evaluations.
struct ExtraPointParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  double tau = 0.0;
};

// Derived contraction coefficients of the extra-point analysis and the
// complexity factor q = 2(1-t3)/(t1-t2-t3) (> 1 on valid sets).
struct TParameters {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double q = 0.0;
};

inline TParameters t_parameters(const ExtraPointParams& p, double mu, double L) {
  const double gb = std::abs(p.gamma - p.beta);
  TParameters t;
  t.t1 = p.alpha * mu - 4.0 * p.gamma - 6.0 * gb - 4.0 * p.tau * L;
  t.t2 = 2.0 * gb + 2.0 * p.gamma + 4.0 * p.tau * L;
  t.t3 = 4.0 * gb + p.tau * L;
  const double denom = t.t1 - t.t2 - t.t3;
  t.q = denom > 0.0 ? 2.0 * (1.0 - t.t3) / denom : std::numeric_limits<double>::infinity();
  return t;
}

struct ExtraPointCheck {
  TParameters t;
  bool valid = false;
  std::vector<std::string> violated;
};

// Validity gate for the extra-point scheme: the step-budget identity
// (eta = alpha together with 2a^2L^2 + 2|g-b| + 2g + 2a*mu - 1 <= 0) plus
// the contraction-coefficient ordering 0 <= t3 < t1 < 1, t2 < t1 - t3.
// The budget inequality is tested non-strictly with 1e-12 slack.
inline ExtraPointCheck check_extra_point_conditions(const ExtraPointParams& p, double mu,
                                                    double L) {
  if (!(mu > 0.0) || !(L >= mu))
    throw std::invalid_argument("check_extra_point_conditions: need mu > 0 and L >= mu");
  constexpr double kSlack = 1e-12;
  ExtraPointCheck res;
  res.t = t_parameters(p, mu, L);
  if (p.alpha < 0 || p.beta < 0 || p.gamma < 0 || p.eta < 0 || p.tau < 0)
    res.violated.push_back("parameters nonnegative");
  if (std::abs(p.eta - p.alpha) > kSlack * std::max(1.0, std::abs(p.alpha)))
    res.violated.push_back("eta equals alpha");
  const double budget = 2.0 * p.alpha * p.alpha * L * L +
                        2.0 * std::abs(p.gamma - p.beta) + 2.0 * p.gamma +
                        2.0 * p.alpha * mu - 1.0;
  if (budget > kSlack) res.violated.push_back("quadratic step budget");
  if (!(res.t.t3 >= 0.0)) res.violated.push_back("t3 nonnegative");
  if (!(res.t.t3 < res.t.t1)) res.violated.push_back("t3 below t1");
  if (!(res.t.t1 < 1.0)) res.violated.push_back("t1 below one");
  if (!(res.t.t2 < res.t.t1 - res.t.t3)) res.violated.push_back("t2 below t1 minus t3");
  res.valid = res.violated.empty();
  return res;
}

// Extra-momentum scheme coefficients; theta in (0, 1] is the rate knob
// (contraction factor 1/(1 + theta/kappa) per iteration).
struct ExtraMomentumParams {
  double alpha = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
  double theta = 0.125;
};

struct ExtraMomentumCheck {
  bool valid = false;
  std::vector<std::string> violated;
};

// Validity gate for the extra-momentum scheme: with r = 1 + theta/kappa,
//   (i)  1 + alpha*mu - gamma >= r        ("monotonicity margin")
//   (ii) alpha/tau = r, exact to 1e-12    ("alpha/tau ratio")
//   (iii) 1/(8 tau^2 L^2 + 2 gamma) >= r  ("displacement damping")
inline ExtraMomentumCheck check_extra_momentum_conditions(const ExtraMomentumParams& p,
                                                          double mu, double L) {
  if (!(mu > 0.0) || !(L >= mu))
    throw std::invalid_argument("check_extra_momentum_conditions: need mu > 0 and L >= mu");
  constexpr double kSlack = 1e-12;
  const double kappa = L / mu;
  const double r = 1.0 + p.theta / kappa;
  ExtraMomentumCheck res;
  if (p.alpha < 0 || p.gamma < 0 || p.tau < 0)
    res.violated.push_back("parameters nonnegative");
  if (!(p.theta > 0.0) || p.theta > 1.0) res.violated.push_back("theta in (0,1]");
  if (p.alpha * mu - p.gamma < p.theta / kappa - kSlack)
    res.violated.push_back("monotonicity margin");
  if (p.tau <= 0.0 || std::abs(p.alpha / p.tau - r) > kSlack * r)
    res.violated.push_back("alpha/tau ratio");
  if (r * (8.0 * p.tau * p.tau * L * L + 2.0 * p.gamma) > 1.0 + kSlack)
    res.violated.push_back("displacement damping");
  res.valid = res.violated.empty();
  return res;
}

// Default extra-point parameters (1/(4L), 1/(64k), 1/(64k), 1/(4L), 1/(64Lk));
// they satisfy the validity conditions for every kappa >= 1 and give the
// (1 - 1/(256 kappa))-rate bound implemented in theoretical_bound_extra_point.
inline ExtraPointParams default_extra_point_params(double mu, double L) {
  if (!(mu > 0.0) || !(L >= mu))
    throw std::invalid_argument("default_extra_point_params: need mu > 0 and L >= mu");
  const double kappa = L / mu;
  ExtraPointParams p;
  p.alpha = 1.0 / (4.0 * L);
  p.beta = 1.0 / (64.0 * kappa);
  p.gamma = 1.0 / (64.0 * kappa);
  p.eta = 1.0 / (4.0 * L);
  p.tau = 1.0 / (64.0 * L * kappa);
  return p;
}

// Default extra-momentum parameters (1/(4L), gamma = 1/(8(kappa+theta)),
// tau = alpha/(1+theta/kappa)); the alpha/tau ratio holds exactly by
// construction.
inline ExtraMomentumParams default_extra_momentum_params(double mu, double L,
                                                         double theta = 0.125) {
  if (!(mu > 0.0) || !(L >= mu))
    throw std::invalid_argument("default_extra_momentum_params: need mu > 0 and L >= mu");
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("default_extra_momentum_params: theta must be in (0,1]");
  const double kappa = L / mu;
  ExtraMomentumParams p;
  p.alpha = 1.0 / (4.0 * L);
  p.tau = p.alpha / (1.0 + theta / kappa);
  p.gamma = 1.0 / (8.0 * (kappa + theta));
  p.theta = theta;
  return p;
}

// Diminishing schedule for the sublinear O(1/k) regime: alpha_k = 2/((k+2)mu)
// with momentum weights shrinking as alpha^2. Intentionally outside the
// fixed-parameter validity gate (its small-k steps violate the step budget).
inline ExtraPointParams diminishing_extra_point_params(long k, double mu, double L) {
  if (k < 0) throw std::invalid_argument("diminishing_extra_point_params: k must be >= 0");
  const double kappa = L / mu;
  ExtraPointParams p;
  p.alpha = 2.0 / ((static_cast<double>(k) + 2.0) * mu);
  p.beta = p.alpha * p.alpha * mu * mu / 128.0;
  p.gamma = p.beta;
  p.eta = p.alpha;
  p.tau = p.alpha * p.alpha * mu / (128.0 * kappa);
  return p;
}

// ---------------------------------------------------------------------------
// Update rules
// ---------------------------------------------------------------------------

// Rolling two-iterate window. f_prev always holds the oracle evaluation
// sampled at z_prev (the reuse contract: it is never resampled).
struct SolverState {
  Vector z_prev;
  Vector z_curr;
  Vector f_prev;
  long iteration = 0;
};

// Starts a run at z0 with the convention z^{-1} = z^0 and the cached
// evaluation initialized by one fresh oracle draw at z^0.
inline SolverState init_solver_state(const VIProblem& problem, const Vector& z0, Rng& rng) {
  SolverState s;
  s.z_curr = problem.set->project(z0);
  s.z_prev = s.z_curr;
  s.f_prev = problem.oracle.sample(s.z_curr, rng);
  s.iteration = 0;
  return s;
}

inline void check_finite(const Vector& z, const char* what, long k) {
  if (!z.allFinite())
    throw std::runtime_error(std::string(what) + ": non-finite iterate at iteration " +
                             std::to_string(k));
}

struct ExtraPointStepResult {
  Vector z_half;
  int samples_used = 0;
};

// One extra-point iteration:
//   z^{k+1/2} = P( z^k + beta (z^k - z^{k-1}) - eta F^(z^k) )
//   z^{k+1}   = P( z^k - alpha F^(z^{k+1/2}) + gamma (z^k - z^{k-1})
//                  - tau (F^(z^k) - F^(z^{k-1})) )
// F^(z^k) is sampled once and reused in both lines; F^(z^{k-1}) is the
// cached draw from the previous step. Two fresh oracle draws per call.
inline ExtraPointStepResult extra_point_step(SolverState& state, const ExtraPointParams& p,
                                             const VIProblem& problem, Rng& rng) {
  const Vector f_curr = problem.oracle.sample(state.z_curr, rng);
  const Vector momentum = state.z_curr - state.z_prev;
  Vector z_half =
      problem.set->project(state.z_curr + p.beta * momentum - p.eta * f_curr);
  check_finite(z_half, "extra_point_step", state.iteration);
  const Vector f_half = problem.oracle.sample(z_half, rng);
  Vector z_next = problem.set->project(state.z_curr - p.alpha * f_half +
                                       p.gamma * momentum -
                                       p.tau * (f_curr - state.f_prev));
  check_finite(z_next, "extra_point_step", state.iteration);
  state.z_prev = std::move(state.z_curr);
  state.z_curr = std::move(z_next);
  state.f_prev = f_curr;
  ++state.iteration;
  return {std::move(z_half), 2};
}

struct ExtraMomentumStepResult {
  int samples_used = 0;
  Vector f_curr;  // the fresh draw at z^k, exposed for potential tracking
};

// One extra-momentum iteration:
//   z^{k+1} = P( z^k - alpha F^(z^k) + gamma (z^k - z^{k-1})
//                - tau (F^(z^k) - F^(z^{k-1})) )
// One projection, one fresh oracle draw.
inline ExtraMomentumStepResult extra_momentum_step(SolverState& state,
                                                   const ExtraMomentumParams& p,
                                                   const VIProblem& problem, Rng& rng) {
  Vector f_curr = problem.oracle.sample(state.z_curr, rng);
  Vector z_next = problem.set->project(state.z_curr - p.alpha * f_curr +
                                       p.gamma * (state.z_curr - state.z_prev) -
                                       p.tau * (f_curr - state.f_prev));
  check_finite(z_next, "extra_momentum_step", state.iteration);
  state.z_prev = std::move(state.z_curr);
  state.z_curr = std::move(z_next);
  state.f_prev = f_curr;
  ++state.iteration;
  return {1, std::move(f_curr)};
}

// Extra-gradient baseline: the extra-point rule with all momentum and
// optimism weights zero. Identical code path, so iterates match the
// restricted extra_point_step bitwise on the same rng stream.
inline ExtraPointStepResult extra_gradient_step(SolverState& state, double step_size,
                                                const VIProblem& problem, Rng& rng) {
  return extra_point_step(state, {step_size, 0.0, 0.0, step_size, 0.0}, problem, rng);
}

// Optimistic gradient baseline: the extra-momentum rule with gamma = 0 and
// tau = alpha. Violates the alpha/tau ratio condition by design; drivers
// run it through the validation override path.
inline ExtraMomentumStepResult ogda_step(SolverState& state, double step_size,
                                         const VIProblem& problem, Rng& rng) {
  return extra_momentum_step(state, {step_size, 0.0, step_size, 1.0}, problem, rng);
}

// ---------------------------------------------------------------------------
// Theoretical bounds
// ---------------------------------------------------------------------------

// Linear-rate bound for the extra-point scheme with default parameters:
//   (1 - 1/(256k))^k (283/256) d0 + (40 s^2/(63 L^2) + 32 d D/(63 L)) 256k.
inline double theoretical_bound_extra_point(long k, double d0, double kappa, double sigma_sq,
                                            double delta, double D, double L) {
  if (k < 0) throw std::invalid_argument("theoretical_bound_extra_point: k must be >= 0");
  const double rate = 1.0 - 1.0 / (256.0 * kappa);
  const double floor_term = (40.0 * sigma_sq / (63.0 * L * L) +
                             32.0 * delta * D / (63.0 * L)) *
                            256.0 * kappa;
  return std::pow(rate, static_cast<double>(k)) * (283.0 / 256.0) * d0 + floor_term;
}

// Linear-rate bound for the extra-momentum scheme:
//   2 (1 + theta/kappa)^{-k} d0 + (kappa/theta + 1) 32 tau^2 s^2
//   + 2 kappa alpha delta^2 / (theta mu).
inline double theoretical_bound_extra_momentum(long k, double d0, double kappa, double theta,
                                               double tau, double alpha, double sigma_sq,
                                               double delta, double mu) {
  if (k < 0) throw std::invalid_argument("theoretical_bound_extra_momentum: k must be >= 0");
  const double rate = 1.0 / (1.0 + theta / kappa);
  const double floor_term = (kappa / theta + 1.0) * 32.0 * tau * tau * sigma_sq +
                            2.0 * kappa * alpha * delta * delta / (theta * mu);
  return 2.0 * std::pow(rate, static_cast<double>(k)) * d0 + floor_term;
}

// Sublinear O(1/k) bound for the diminishing schedule:
//   Q/(k+2) + 256 d D/(93 mu),  Q = max{133 G/9, 2 d0},
//   G = 2 k^2 D^2 + D^2/64 + D^2 + 8 s^2/mu^2 + s^2/(128 L^2).
inline double sublinear_bound(long k, double d0, double kappa, double sigma_sq, double D,
                              double delta, double mu) {
  if (k < 0) throw std::invalid_argument("sublinear_bound: k must be >= 0");
  const double L = kappa * mu;
  const double G = 2.0 * kappa * kappa * D * D + D * D / 64.0 + D * D +
                   8.0 * sigma_sq / (mu * mu) + sigma_sq / (128.0 * L * L);
  const double Q = std::max(133.0 * G / 9.0, 2.0 * d0);
  return Q / (static_cast<double>(k) + 2.0) + 256.0 * delta * D / (93.0 * mu);
}

// ---------------------------------------------------------------------------
// Replication driver
// ---------------------------------------------------------------------------

struct ExtraPointMethod {
  ExtraPointParams params;
};
struct ExtraMomentumMethod {
  ExtraMomentumParams params;
};
struct DiminishingExtraPointMethod {};
struct ExtraGradientMethod {
  double step_size;
};
struct OgdaMethod {
  double step_size;
};

using Method = std::variant<ExtraPointMethod, ExtraMomentumMethod,
                            DiminishingExtraPointMethod, ExtraGradientMethod, OgdaMethod>;

struct RunOptions {
  Vector start;                      // empty: sampled from the set (seed-derived)
  bool override_validation = false;  // run invalid parameter sets anyway
  int threads = 1;                   // replication-level parallelism
  bool record_iterates = true;       // keep replication-0 iterates
  bool record_potentials = true;     // potential V_k for extra-momentum runs
};

namespace detail {

// Potential of the extra-momentum analysis, evaluated pathwise:
//   V_k = 1/2 ||z^k - z*||^2 + tau <z^k - z*, F^(z^{k-1}) - F^(z^k)>
//         + (2 tau^2 L^2 + gamma/2) ||z^k - z^{k-1}||^2.
inline double momentum_potential(const Vector& zk, const Vector& zkm1, const Vector& fkm1,
                                 const Vector& fk, const Vector& z_star,
                                 const ExtraMomentumParams& p, double L) {
  const double coef = 2.0 * p.tau * p.tau * L * L + 0.5 * p.gamma;
  return 0.5 * (zk - z_star).squaredNorm() + p.tau * (zk - z_star).dot(fkm1 - fk) +
         coef * (zk - zkm1).squaredNorm();
}

inline const ExtraMomentumParams* momentum_params(const Method& m) {
  if (const auto* em = std::get_if<ExtraMomentumMethod>(&m)) return &em->params;
  return nullptr;
}

}  // namespace detail

// Runs R independent replications of the selected scheme for K iterations.
// Replication r draws from the stream derive_seed(seed, r), so traces are
// reproducible and independent of the thread count. Parameter sets that
// fail their validity gate are refused unless override_validation is set
// (baselines and the diminishing schedule are exempt: the former are
// deliberately unvalidated, the latter has its own sublinear regime).
inline SolverTrace run_solver(const VIProblem& problem, const Method& method, int max_iters,
                              int replications, std::uint64_t seed,
                              const RunOptions& opts = {}) {
  if (max_iters < 0) throw std::invalid_argument("run_solver: max_iters must be >= 0");
  if (replications < 1) throw std::invalid_argument("run_solver: replications must be >= 1");
  if (!problem.set) throw std::invalid_argument("run_solver: problem has no feasible set");

  if (const auto* ep = std::get_if<ExtraPointMethod>(&method)) {
    const auto check = check_extra_point_conditions(ep->params, problem.mu, problem.lipschitz);
    if (!check.valid && !opts.override_validation) {
      std::string what = "run_solver: extra-point parameters failed validation:";
      for (const auto& v : check.violated) what += " [" + v + "]";
      throw ValidationError(what);
    }
  } else if (const auto* em = std::get_if<ExtraMomentumMethod>(&method)) {
    const auto check =
        check_extra_momentum_conditions(em->params, problem.mu, problem.lipschitz);
    if (!check.valid && !opts.override_validation) {
      std::string what = "run_solver: extra-momentum parameters failed validation:";
      for (const auto& v : check.violated) what += " [" + v + "]";
      throw ValidationError(what);
    }
  }

  const int K = max_iters;
  const int R = replications;
  Vector z0 = opts.start;
  if (z0.size() == 0) {
    Rng start_rng(derive_seed(seed, 0x8000000000000000ull));
    z0 = problem.set->sample(start_rng);
  }
  if (z0.size() != problem.set->dim())
    throw std::invalid_argument("run_solver: start point has wrong dimension");

  const bool has_ref = problem.reference_solution.has_value();
  const Vector z_star = has_ref ? *problem.reference_solution : Vector();
  const ExtraMomentumParams* em_params = detail::momentum_params(method);
  const bool track_potential = opts.record_potentials && em_params != nullptr && has_ref;

  SolverTrace trace;
  trace.distances.assign(has_ref ? R : 0, {});
  std::vector<std::vector<double>> potentials(track_potential ? R : 0);
  trace.cumulative_samples.assign(K + 1, 0);
  trace.init_samples = 1;

  auto run_replication = [&](int r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    SolverState state = init_solver_state(problem, z0, rng);
    const bool lead = (r == 0);
    if (has_ref) {
      trace.distances[r].reserve(K + 1);
      trace.distances[r].push_back(distance_squared(state.z_curr, z_star));
    }
    if (lead && opts.record_iterates) trace.iterates.push_back(state.z_curr);
    if (lead) trace.wall_time.reserve(K);

    for (int k = 0; k < K; ++k) {
      const auto tic = std::chrono::steady_clock::now();
      int samples = 0;
      Vector zk, zkm1, fkm1;  // pre-step window, kept only for the potential
      if (track_potential) {
        zk = state.z_curr;
        zkm1 = state.z_prev;
        fkm1 = state.f_prev;
      }
      try {
        if (const auto* ep = std::get_if<ExtraPointMethod>(&method)) {
          samples = extra_point_step(state, ep->params, problem, rng).samples_used;
        } else if (const auto* em = std::get_if<ExtraMomentumMethod>(&method)) {
          auto res = extra_momentum_step(state, em->params, problem, rng);
          samples = res.samples_used;
          if (track_potential)
            potentials[r].push_back(detail::momentum_potential(
                zk, zkm1, fkm1, res.f_curr, z_star, *em_params, problem.lipschitz));
        } else if (std::get_if<DiminishingExtraPointMethod>(&method)) {
          samples = extra_point_step(state, diminishing_extra_point_params(k, problem.mu,
                                                                           problem.lipschitz),
                                     problem, rng)
                        .samples_used;
        } else if (const auto* eg = std::get_if<ExtraGradientMethod>(&method)) {
          samples = extra_gradient_step(state, eg->step_size, problem, rng).samples_used;
        } else {
          const auto* og = std::get_if<OgdaMethod>(&method);
          samples = ogda_step(state, og->step_size, problem, rng).samples_used;
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("run_solver: replication " + std::to_string(r) + ": " +
                                 e.what());
      }
      if (has_ref) trace.distances[r].push_back(distance_squared(state.z_curr, z_star));
      if (lead) {
        if (opts.record_iterates) trace.iterates.push_back(state.z_curr);
        trace.cumulative_samples[k + 1] = trace.cumulative_samples[k] + samples;
        trace.wall_time.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count());
      }
    }
    if (track_potential) {
      // Final potential V_K needs one diagnostic evaluation at z^K; it is
      // outside the scheme's sample accounting.
      const Vector fk = problem.oracle.sample(state.z_curr, rng);
      potentials[r].push_back(detail::momentum_potential(state.z_curr, state.z_prev,
                                                         state.f_prev, fk, z_star, *em_params,
                                                         problem.lipschitz));
    }
  };

  const int workers = std::max(1, std::min(opts.threads, R));
  if (workers == 1) {
    for (int r = 0; r < R; ++r) run_replication(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(R);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) {
          try {
            run_replication(r);
          } catch (...) {
            errors[r] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  if (has_ref) {
    trace.mean_distances.assign(K + 1, 0.0);
    for (int k = 0; k <= K; ++k) {
      double sum = 0.0;
      for (int r = 0; r < R; ++r) sum += trace.distances[r][k];
      trace.mean_distances[k] = sum / R;
    }
  }
  if (track_potential) {
    trace.mean_potentials.assign(K + 1, 0.0);
    for (int k = 0; k <= K; ++k) {
      double sum = 0.0;
      for (int r = 0; r < R; ++r) sum += potentials[r][k];
      trace.mean_potentials[k] = sum / R;
    }
  }
  trace.cumulative_evals = trace.cumulative_samples;  // one evaluation per draw
  return trace;
}

}  // namespace svi
