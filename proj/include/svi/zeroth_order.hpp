#pragma once

#include "svi/schemes.hpp"

namespace svi {

// Black-box access to a noisy saddle function f^(x, y, xi). M bounds the
// per-block gradient norms of the underlying f over the feasible set;
// gradient_noise is the per-block bound sigma^2 on E||grad f^ - grad f||^2.
class NoisyFunctionOracle {
 public:
  virtual ~NoisyFunctionOracle() = default;

  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;
  virtual double lipschitz_value() const = 0;  // M
  virtual double gradient_noise() const = 0;   // sigma^2

  // Single noisy evaluation under a fresh xi.
  virtual double evaluate(const Vector& x, const Vector& y, Rng& rng) const = 0;

  // The three evaluations of one smoothing draw -- base point (x, y),
  // x-perturbed (xp, y), y-perturbed (x, yp) -- sharing a single xi.
  struct Triple {
    double base;
    double x_pert;
    double y_pert;
  };
  virtual Triple evaluate_triple(const Vector& x, const Vector& y, const Vector& xp,
                                 const Vector& yp, Rng& rng) const = 0;
};

struct SmoothingParams {
  double rho_x = 0.0;
  double rho_y = 0.0;
};

enum class ScheduleVariant { extra_point, extra_momentum };

// Pre-declared mini-batch schedule and smoothing radii for a horizon of K
// iterations. The batch sizes grow geometrically at the matching scheme's
// contraction rate so the per-iteration estimator variance decays in step
// with the distance recursion.
struct BatchSchedule {
  ScheduleVariant variant = ScheduleVariant::extra_point;
  int horizon = 0;  // K, decided in advance
  double kappa = 1.0;
  int n = 0, m = 0;
  double c1 = 0.0;  // contraction base of the matching scheme
  SmoothingParams rho;
  // Optional explicit geometric override t_k = ceil(t0 * growth^k); when
  // geometric is false the variant's worst-case schedule applies.
  bool geometric = false;
  double t0 = 0.0;
  double growth = 1.0;

  // t_k; the extra-point variant also uses t_{k+0.5} = t_k.
  long long batch(int k) const {
    if (geometric)
      return static_cast<long long>(std::ceil(t0 * std::pow(growth, k)));
    const double expo = variant == ScheduleVariant::extra_point
                            ? -static_cast<double>(k + 1)
                            : -static_cast<double>(k);
    return static_cast<long long>(std::ceil(horizon * std::pow(c1, expo)));
  }
};

inline BatchSchedule make_schedule(ScheduleVariant variant, int K, double kappa, int n,
                                   int m) {
  if (K < 1) throw std::invalid_argument("make_schedule: K must be >= 1");
  if (!(kappa >= 1.0)) throw std::invalid_argument("make_schedule: kappa must be >= 1");
  BatchSchedule s;
  s.variant = variant;
  s.horizon = K;
  s.kappa = kappa;
  s.n = n;
  s.m = m;
  if (variant == ScheduleVariant::extra_point) {
    s.c1 = 1.0 - 1.0 / (256.0 * kappa);
    const double shrink = std::pow(s.c1, K);
    s.rho.rho_x = shrink / (std::sqrt(2.0) * n * kappa);
    s.rho.rho_y = shrink / (std::sqrt(2.0) * m * kappa);
  } else {
    s.c1 = 1.0 - 1.0 / (8.0 * kappa + 1.0);
    const double shrink = std::pow(s.c1, K / 2.0);
    s.rho.rho_x = shrink / (std::sqrt(2.0) * n * kappa);
    s.rho.rho_y = shrink / (std::sqrt(2.0) * m * kappa);
  }
  return s;
}

// Freely tuned geometric batch schedule with explicit smoothing radii, for
// experiments where the worst-case schedule over-samples early iterations.
inline BatchSchedule make_geometric_schedule(ScheduleVariant variant, int K, double t0,
                                             double growth, int n, int m, double rho_x,
                                             double rho_y) {
  if (K < 1) throw std::invalid_argument("make_geometric_schedule: K must be >= 1");
  if (!(t0 >= 1.0) || !(growth >= 1.0))
    throw std::invalid_argument("make_geometric_schedule: need t0 >= 1 and growth >= 1");
  BatchSchedule s;
  s.variant = variant;
  s.horizon = K;
  s.n = n;
  s.m = m;
  s.geometric = true;
  s.t0 = t0;
  s.growth = growth;
  s.rho.rho_x = rho_x;
  s.rho.rho_y = rho_y;
  return s;
}

// Exact draw count of the integer (ceiled) schedule over the whole horizon;
// the extra-point variant consumes t_k + t_{k+0.5} = 2 t_k per iteration.
inline long long total_samples(ScheduleVariant variant, int K, double kappa) {
  const BatchSchedule s = make_schedule(variant, K, kappa, 1, 1);
  long long total = 0;
  const long long per_iter = variant == ScheduleVariant::extra_point ? 2 : 1;
  for (int k = 0; k < K; ++k) total += per_iter * s.batch(k);
  return total;
}

// Continuous closed form of the same sum (no ceiling): 2K(C1^-K - 1)/(1-C1)
// for the extra-point variant. The extra-momentum schedule starts one power
// lower (t_0 = K exactly), so its continuous sum carries one extra factor of
// C1: K C1 (C1^-K - 1)/(1-C1), which is exactly K at K = 1. The exact ceiled
// sum exceeds the closed form by less than one per term.
inline double closed_form_samples(ScheduleVariant variant, int K, double kappa) {
  const BatchSchedule s = make_schedule(variant, K, kappa, 1, 1);
  const double growth = std::pow(s.c1, -K) - 1.0;
  const double base = K * growth / (1.0 - s.c1);
  return variant == ScheduleVariant::extra_point ? 2.0 * base : s.c1 * base;
}

// Lemma-style variance bound for the joint sphere-smoothing estimator:
//   sigma~^2 = 2 max{ n M^2 + n s^2 + n^2 rho_x^2 L^2,
//                     m M^2 + m s^2 + m^2 rho_y^2 L^2 }.
inline double sigma_tilde_sq(int n, int m, double M, double sigma_sq, double rho_x,
                             double rho_y, double L) {
  const double bx = n * M * M + n * sigma_sq + static_cast<double>(n) * n * rho_x * rho_x * L * L;
  const double by = m * M * M + m * sigma_sq + static_cast<double>(m) * m * rho_y * rho_y * L * L;
  return 2.0 * std::max(bx, by);
}

// Uniform draw on the unit sphere (Gaussian direction, normalized).
inline Vector sample_unit_sphere(int dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("sample_unit_sphere: dim must be >= 1");
  Vector u(dim);
  fill_standard_normal(rng, u);
  double norm = u.norm();
  while (norm < 1e-300) {
    fill_standard_normal(rng, u);
    norm = u.norm();
  }
  return u / norm;
}

// One smoothing draw of the joint zeroth-order gradient
//   ( (n/rho_x)(f^(x + rho_x u, y, xi) - f^(x, y, xi)) u ;
//    -(m/rho_y)(f^(x, y + rho_y v, xi) - f^(x, y, xi)) v )
// with the y-block sign flipped to make the joint mapping monotone. One xi
// is shared by all three evaluations; u, v are drawn first, then xi.
inline Vector zeroth_order_gradient(const NoisyFunctionOracle& oracle, const Vector& x,
                                    const Vector& y, const SmoothingParams& params,
                                    Rng& rng) {
  if (!(params.rho_x > 0.0) || !(params.rho_y > 0.0))
    throw std::invalid_argument("zeroth_order_gradient: smoothing radii must be positive");
  const int n = oracle.dim_x(), m = oracle.dim_y();
  const Vector u = sample_unit_sphere(n, rng);
  const Vector v = sample_unit_sphere(m, rng);
  const auto t = oracle.evaluate_triple(x, y, x + params.rho_x * u, y + params.rho_y * v, rng);
  Vector g(n + m);
  g.head(n) = (n / params.rho_x) * (t.x_pert - t.base) * u;
  g.tail(m) = -(m / params.rho_y) * (t.y_pert - t.base) * v;
  return g;
}

// Arithmetic mean of t independent smoothing draws. Each draw i gets its own
// derived rng substream, so the batch could be evaluated in any order (or
// concurrently) with an identical result; summation is in index order.
inline Vector batched_zeroth_order_gradient(const NoisyFunctionOracle& oracle,
                                            const Vector& x, const Vector& y,
                                            const SmoothingParams& params, long long t,
                                            Rng& rng) {
  if (t < 1) throw std::invalid_argument("batched_zeroth_order_gradient: batch size must be >= 1");
  if (!(params.rho_x > 0.0) || !(params.rho_y > 0.0))
    throw std::invalid_argument("batched_zeroth_order_gradient: smoothing radii must be positive");
  const int n = oracle.dim_x(), m = oracle.dim_y();
  const std::uint64_t batch_seed = rng();
  Vector sum = Vector::Zero(n + m);
  Vector u(n), v(m), xp(n), yp(m);
  const double sx = n / params.rho_x, sy = m / params.rho_y;
  for (long long i = 0; i < t; ++i) {
    Rng draw_rng(derive_seed(batch_seed, static_cast<std::uint64_t>(i)));
    fill_standard_normal(draw_rng, u);
    u /= u.norm();
    fill_standard_normal(draw_rng, v);
    v /= v.norm();
    xp = x + params.rho_x * u;
    yp = y + params.rho_y * v;
    const auto f = oracle.evaluate_triple(x, y, xp, yp, draw_rng);
    sum.head(n) += (sx * (f.x_pert - f.base)) * u;
    sum.tail(m) -= (sy * (f.y_pert - f.base)) * v;
  }
  return sum / static_cast<double>(t);
}

// Smoothed-gradient oracle bundle: the black-box function, its schedule and
// radii, and the derived variance bound.
struct ZerothOrderGradientOracle {
  std::shared_ptr<const NoisyFunctionOracle> fn;
  BatchSchedule schedule;
  double sigma_tilde = 0.0;  // the sigma~^2 bound
};

inline ZerothOrderGradientOracle make_zo_oracle(std::shared_ptr<const NoisyFunctionOracle> fn,
                                                const BatchSchedule& schedule, double L) {
  ZerothOrderGradientOracle zo;
  zo.sigma_tilde =
      sigma_tilde_sq(fn->dim_x(), fn->dim_y(), fn->lipschitz_value(), fn->gradient_noise(),
                     schedule.rho.rho_x, schedule.rho.rho_y, L);
  zo.fn = std::move(fn);
  zo.schedule = schedule;
  return zo;
}

// Black-box saddle VI: feasible set over the stacked variables (x; y), the
// noisy value oracle, and the monotonicity/Lipschitz constants of the
// underlying mapping.
struct SaddleProblem {
  std::shared_ptr<const FeasibleSet> set;
  std::shared_ptr<const NoisyFunctionOracle> oracle;
  double mu = 0.0;
  double lipschitz = 0.0;
  std::optional<Vector> solution;

  double kappa() const { return lipschitz / mu; }
  int dim_x() const { return oracle->dim_x(); }
  int dim_y() const { return oracle->dim_y(); }
};

// Starts a zeroth-order run: z^{-1} = z^0 with the cached batch gradient
// initialized by a fresh t_0-sized batch at z^0.
inline SolverState init_szo_state(const SaddleProblem& problem,
                                  const ZerothOrderGradientOracle& zo, const Vector& z0,
                                  Rng& rng) {
  SolverState s;
  s.z_curr = problem.set->project(z0);
  s.z_prev = s.z_curr;
  const int n = problem.dim_x();
  s.f_prev = batched_zeroth_order_gradient(*zo.fn, s.z_curr.head(n), s.z_curr.tail(problem.dim_y()),
                                           zo.schedule.rho, zo.schedule.batch(0), rng);
  s.iteration = 0;
  return s;
}

struct SzoStepResult {
  Vector z_half;        // extra-point variant only
  Vector g_curr;        // batch gradient at z^k (potential tracking)
  long long samples_used = 0;
  long long evals_used = 0;  // raw function evaluations (3 per draw)
};

// Extra-point update with the batched smoothing gradient in place of the
// first-order oracle; batch sizes t_k = t_{k+0.5} come from the schedule and
// the cached batch at z^{k-1} is reused, never recomputed.
inline SzoStepResult szo_extra_point_step(SolverState& state, const ExtraPointParams& p,
                                          const SaddleProblem& problem,
                                          const ZerothOrderGradientOracle& zo, int k,
                                          Rng& rng) {
  const int n = problem.dim_x(), m = problem.dim_y();
  const long long t = zo.schedule.batch(k);
  Vector g_curr = batched_zeroth_order_gradient(*zo.fn, state.z_curr.head(n),
                                                state.z_curr.tail(m), zo.schedule.rho, t, rng);
  const Vector momentum = state.z_curr - state.z_prev;
  Vector z_half = problem.set->project(state.z_curr + p.beta * momentum - p.eta * g_curr);
  check_finite(z_half, "szo_extra_point_step", state.iteration);
  const Vector g_half = batched_zeroth_order_gradient(*zo.fn, z_half.head(n), z_half.tail(m),
                                                      zo.schedule.rho, t, rng);
  Vector z_next = problem.set->project(state.z_curr - p.alpha * g_half + p.gamma * momentum -
                                       p.tau * (g_curr - state.f_prev));
  check_finite(z_next, "szo_extra_point_step", state.iteration);
  state.z_prev = std::move(state.z_curr);
  state.z_curr = std::move(z_next);
  state.f_prev = g_curr;
  ++state.iteration;
  return {std::move(z_half), std::move(g_curr), 2 * t, 6 * t};
}

// Extra-momentum update with the batched smoothing gradient; one batch of
// size t_k per iteration.
inline SzoStepResult szo_extra_momentum_step(SolverState& state, const ExtraMomentumParams& p,
                                             const SaddleProblem& problem,
                                             const ZerothOrderGradientOracle& zo, int k,
                                             Rng& rng) {
  const int n = problem.dim_x(), m = problem.dim_y();
  const long long t = zo.schedule.batch(k);
  Vector g_curr = batched_zeroth_order_gradient(*zo.fn, state.z_curr.head(n),
                                                state.z_curr.tail(m), zo.schedule.rho, t, rng);
  Vector z_next = problem.set->project(state.z_curr - p.alpha * g_curr +
                                       p.gamma * (state.z_curr - state.z_prev) -
                                       p.tau * (g_curr - state.f_prev));
  check_finite(z_next, "szo_extra_momentum_step", state.iteration);
  state.z_prev = std::move(state.z_curr);
  state.z_curr = std::move(z_next);
  state.f_prev = g_curr;
  ++state.iteration;
  return {Vector(), std::move(g_curr), t, 3 * t};
}

// ---------------------------------------------------------------------------
// Zeroth-order replication driver
// ---------------------------------------------------------------------------

struct SzoExtraPointMethod {
  ExtraPointParams params;
};
struct SzoExtraMomentumMethod {
  ExtraMomentumParams params;
};
// Baselines driven through the same updates with restricted parameters.
struct SzoExtraGradientMethod {
  double step_size;
};
struct SzoOgdaMethod {
  double step_size;
};

using SzoMethod = std::variant<SzoExtraPointMethod, SzoExtraMomentumMethod,
                               SzoExtraGradientMethod, SzoOgdaMethod>;

// Zeroth-order counterpart of run_solver: R replications of K iterations
// with the schedule's batch sizes, per-replication derived seeds, and the
// same validation gate as the first-order schemes.
inline SolverTrace run_szo_solver(const SaddleProblem& problem, const SzoMethod& method,
                                  const BatchSchedule& schedule, int max_iters,
                                  int replications, std::uint64_t seed,
                                  const RunOptions& opts = {}) {
  if (max_iters < 0) throw std::invalid_argument("run_szo_solver: max_iters must be >= 0");
  if (max_iters > schedule.horizon)
    throw std::invalid_argument("run_szo_solver: max_iters exceeds the schedule horizon");
  if (replications < 1) throw std::invalid_argument("run_szo_solver: replications must be >= 1");

  if (const auto* ep = std::get_if<SzoExtraPointMethod>(&method)) {
    const auto check = check_extra_point_conditions(ep->params, problem.mu, problem.lipschitz);
    if (!check.valid && !opts.override_validation) {
      std::string what = "run_szo_solver: extra-point parameters failed validation:";
      for (const auto& v : check.violated) what += " [" + v + "]";
      throw ValidationError(what);
    }
  } else if (const auto* em = std::get_if<SzoExtraMomentumMethod>(&method)) {
    const auto check =
        check_extra_momentum_conditions(em->params, problem.mu, problem.lipschitz);
    if (!check.valid && !opts.override_validation) {
      std::string what = "run_szo_solver: extra-momentum parameters failed validation:";
      for (const auto& v : check.violated) what += " [" + v + "]";
      throw ValidationError(what);
    }
  }

  const int K = max_iters;
  const int R = replications;
  const ZerothOrderGradientOracle zo = make_zo_oracle(problem.oracle, schedule, problem.lipschitz);

  Vector z0 = opts.start;
  if (z0.size() == 0) {
    Rng start_rng(derive_seed(seed, 0x8000000000000000ull));
    z0 = problem.set->sample(start_rng);
  }
  if (z0.size() != problem.set->dim())
    throw std::invalid_argument("run_szo_solver: start point has wrong dimension");

  const bool has_ref = problem.solution.has_value();
  const Vector z_star = has_ref ? *problem.solution : Vector();
  const ExtraMomentumParams* em_params = nullptr;
  if (const auto* em = std::get_if<SzoExtraMomentumMethod>(&method)) em_params = &em->params;
  const bool track_potential = opts.record_potentials && em_params != nullptr && has_ref;

  SolverTrace trace;
  trace.distances.assign(has_ref ? R : 0, {});
  std::vector<std::vector<double>> potentials(track_potential ? R : 0);
  trace.cumulative_samples.assign(K + 1, 0);
  trace.cumulative_evals.assign(K + 1, 0);
  trace.init_samples = schedule.batch(0);

  auto run_replication = [&](int r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    SolverState state = init_szo_state(problem, zo, z0, rng);
    const bool lead = (r == 0);
    if (has_ref) {
      trace.distances[r].reserve(K + 1);
      trace.distances[r].push_back(distance_squared(state.z_curr, z_star));
    }
    if (lead && opts.record_iterates) trace.iterates.push_back(state.z_curr);

    for (int k = 0; k < K; ++k) {
      const auto tic = std::chrono::steady_clock::now();
      Vector zk, zkm1, gkm1;
      if (track_potential) {
        zk = state.z_curr;
        zkm1 = state.z_prev;
        gkm1 = state.f_prev;
      }
      SzoStepResult res;
      try {
        if (const auto* ep = std::get_if<SzoExtraPointMethod>(&method)) {
          res = szo_extra_point_step(state, ep->params, problem, zo, k, rng);
        } else if (const auto* em = std::get_if<SzoExtraMomentumMethod>(&method)) {
          res = szo_extra_momentum_step(state, em->params, problem, zo, k, rng);
          if (track_potential)
            potentials[r].push_back(detail::momentum_potential(zk, zkm1, gkm1, res.g_curr,
                                                               z_star, *em_params,
                                                               problem.lipschitz));
        } else if (const auto* eg = std::get_if<SzoExtraGradientMethod>(&method)) {
          res = szo_extra_point_step(
              state, {eg->step_size, 0.0, 0.0, eg->step_size, 0.0}, problem, zo, k, rng);
        } else {
          const auto* og = std::get_if<SzoOgdaMethod>(&method);
          res = szo_extra_momentum_step(state, {og->step_size, 0.0, og->step_size, 1.0},
                                        problem, zo, k, rng);
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("run_szo_solver: replication " + std::to_string(r) + ": " +
                                 e.what());
      }
      if (has_ref) trace.distances[r].push_back(distance_squared(state.z_curr, z_star));
      if (lead) {
        if (opts.record_iterates) trace.iterates.push_back(state.z_curr);
        trace.cumulative_samples[k + 1] = trace.cumulative_samples[k] + res.samples_used;
        trace.cumulative_evals[k + 1] = trace.cumulative_evals[k] + res.evals_used;
        trace.wall_time.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count());
      }
    }
    if (track_potential) {
      const int n = problem.dim_x(), m = problem.dim_y();
      const Vector gk = batched_zeroth_order_gradient(*zo.fn, state.z_curr.head(n),
                                                      state.z_curr.tail(m), zo.schedule.rho,
                                                      zo.schedule.batch(K), rng);
      potentials[r].push_back(detail::momentum_potential(state.z_curr, state.z_prev,
                                                         state.f_prev, gk, z_star, *em_params,
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
  return trace;
}

// Distance envelope for the zeroth-order extra-point method under its
// worst-case schedule:
//   d_k <= C1^k (283/256 d0 + 80 sigma~^2/(21 L^2) + 256 (20 + 16 D)/63),
// C1 = 1 - 1/(256 kappa). Valid at every k <= K because the partial
// variance and smoothing sums telescope to at most the full-horizon
// constants.
inline double szo_bound_extra_point(long long k, double d0, double kappa,
                                    double sigma_tilde, double D, double L) {
  const double c1 = 1.0 - 1.0 / (256.0 * kappa);
  const double constant = 283.0 / 256.0 * d0 + 80.0 * sigma_tilde / (21.0 * L * L) +
                          256.0 * (20.0 + 16.0 * D) / 63.0;
  return std::pow(c1, static_cast<double>(k)) * constant;
}

// Distance envelope for the zeroth-order extra-momentum method under its
// worst-case schedule (theta = 1/8):
//   d_k <= C1^k (2 d0 + 384 tau^2 sigma~^2
//                + L^2 (32 tau^2/kappa + 4 tau^2/kappa^2) + alpha L^2/(mu kappa)),
// C1 = 1 - 1/(8 kappa + 1). The leading 2 d0 is 4 V_0 with the start
// convention z^{-1} = z^0 (cross and displacement terms vanish).
inline double szo_bound_extra_momentum(long long k, double d0, double kappa,
                                       double sigma_tilde, double alpha, double tau,
                                       double mu) {
  const double c1 = 1.0 - 1.0 / (8.0 * kappa + 1.0);
  const double L = kappa * mu;
  const double constant = 2.0 * d0 + 384.0 * tau * tau * sigma_tilde +
                          L * L * (32.0 * tau * tau / kappa +
                                   4.0 * tau * tau / (kappa * kappa)) +
                          alpha * L * L / (mu * kappa);
  return std::pow(c1, static_cast<double>(k)) * constant;
}

}  // namespace svi
