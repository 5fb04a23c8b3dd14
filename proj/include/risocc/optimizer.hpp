#pragma once

// Riemannian conjugate-gradient ascent on the product of N complex unit
// circles: retraction by element-wise normalisation, tangent projection,
// Armijo backtracking and clamped Polak-Ribiere momentum with restarts.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "risocc/objective.hpp"

namespace risocc {

/// The retracted point has an exactly-zero entry.
class PathologicalStep : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  int max_iters = 500;
  double grad_tol = 1e-6;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  double armijo_init_step = 1.0;
  int armijo_max_backtracks = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
    if (!(grad_tol >= 0.0)) throw std::invalid_argument("grad_tol must be non-negative");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("armijo_c must lie in (0, 1)");
    if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0)) {
      throw std::invalid_argument("armijo_shrink must lie in (0, 1)");
    }
    if (!(armijo_init_step > 0.0)) throw std::invalid_argument("armijo_init_step must be positive");
    if (armijo_max_backtracks < 0) throw std::invalid_argument("armijo_max_backtracks must be non-negative");
  }
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double beta = 0.0;
  bool restart = false;
};

struct OptimizerTrace {
  std::vector<IterationRecord> records;  // records[0] is the initial point
  bool converged = false;
  bool stalled = false;
  double max_modulus_error = 0.0;    // over every iterate
  double max_tangency_error = 0.0;   // over every executed direction
  double max_relative_tangency_error = 0.0;
  bool restart_rule_held = true;     // restart iterations stepped along the gradient
  bool monotone = true;              // accepted objective values never decreased

  int iterations() const { return records.empty() ? 0 : static_cast<int>(records.size()) - 1; }
  double final_objective() const { return records.empty() ? 0.0 : records.back().objective; }
  double initial_objective() const { return records.empty() ? 0.0 : records.front().objective; }
};

struct OptimizeResult {
  PhaseVector phase;
  OptimizerTrace trace;
};

/// Real inner product Re(a^H b).
inline double real_inner(const CVec& a, const CVec& b) { return a.dot(b).real(); }

inline PhaseVector retract(const PhaseVector& x, const CVec& xi, double alpha) {
  require_dims(xi.size() == x.size(), "tangent length vs point");
  CVec moved = x.values() + alpha * xi;
  for (Eigen::Index n = 0; n < moved.size(); ++n) {
    const double m = std::abs(moved(n));
    if (m == 0.0) throw PathologicalStep("retraction hit the origin at element " + std::to_string(n));
    moved(n) /= m;
  }
  return PhaseVector(std::move(moved));
}

/// grad_n - Re(grad_n conj(x_n)) x_n, evaluated as j Im(grad_n conj(x_n)) x_n
/// to avoid cancellation when |grad_n| is large.
inline CVec project_tangent(const CVec& grad, const CVec& x) {
  require_dims(grad.size() == x.size(), "gradient length vs point");
  CVec out(grad.size());
  for (Eigen::Index n = 0; n < grad.size(); ++n) {
    out(n) = cd(0.0, (grad(n) * std::conj(x(n))).imag()) * x(n);
  }
  return out;
}

inline CVec project_tangent(const CVec& grad, const PhaseVector& x) {
  return project_tangent(grad, x.values());
}

inline double tangency_error(const CVec& xi, const CVec& x) {
  double e = 0.0;
  for (Eigen::Index n = 0; n < xi.size(); ++n) e = std::max(e, std::abs((xi(n) * std::conj(x(n))).real()));
  return e;
}

/// Tangency error divided by the largest entry of xi.
inline double relative_tangency_error(const CVec& xi, const CVec& x) {
  const double scale = xi.cwiseAbs().maxCoeff();
  return scale > 0.0 ? tangency_error(xi, x) / scale : 0.0;
}

struct ArmijoResult {
  double step = 0.0;
  int backtracks = 0;
  bool stalled = false;
  double value = 0.0;  // objective at the accepted point
};

/// Backtracking from cfg.armijo_init_step until
/// f(R(x, alpha xi)) >= f(x) + c alpha <r, xi>. Returns step 0 and the
/// stall flag when the direction is null, not an ascent direction, or the
/// backtracking cap runs out.
template <typename Objective>
  requires std::invocable<Objective&, const PhaseVector&>
ArmijoResult armijo_search(const PhaseVector& x, const CVec& direction, double current_value,
                           double directional_derivative, const OptimizerConfig& cfg, Objective&& f) {
  ArmijoResult out;
  out.value = current_value;
  if (direction.squaredNorm() == 0.0 || !(directional_derivative > 0.0)) {
    out.stalled = true;
    return out;
  }
  double alpha = cfg.armijo_init_step;
  for (int m = 0; m <= cfg.armijo_max_backtracks; ++m, alpha *= cfg.armijo_shrink) {
    double trial;
    try {
      trial = f(retract(x, direction, alpha));
    } catch (const PathologicalStep&) {
      continue;
    }
    if (std::isfinite(trial) && trial >= current_value + cfg.armijo_c * alpha * directional_derivative) {
      out.step = alpha;
      out.backtracks = m;
      out.value = trial;
      return out;
    }
  }
  out.stalled = true;
  out.backtracks = cfg.armijo_max_backtracks;
  return out;
}

/// max(0, <r_next - r_prev_transported, r_next> / <r_prev, xi_prev>);
/// a vanishing denominator forces a restart (beta = 0).
inline double polak_ribiere_beta(const CVec& r_prev_transported, const CVec& r_next, const CVec& r_prev,
                                 const CVec& xi_prev) {
  const double denom = real_inner(r_prev, xi_prev);
  if (denom == 0.0 || !std::isfinite(denom)) return 0.0;
  const double beta = real_inner(r_next - r_prev_transported, r_next) / denom;
  return std::isfinite(beta) ? std::max(0.0, beta) : 0.0;
}

/// Generic manifold CG driver. `value(x)` returns the objective and
/// `egrad(x)` its ambient gradient.
template <typename Value, typename Gradient>
OptimizeResult conjugate_gradient_ascent(PhaseVector x, Value&& value, Gradient&& egrad,
                                         const OptimizerConfig& cfg) {
  cfg.validate();
  OptimizeResult out;
  OptimizerTrace& trace = out.trace;

  double f = value(x);
  CVec r = project_tangent(egrad(x), x);
  CVec xi = r;
  trace.records.push_back({0, f, r.norm(), 0.0, 0.0, false});
  trace.max_modulus_error = x.max_modulus_error();

  for (int i = 0; i < cfg.max_iters; ++i) {
    if (r.norm() < cfg.grad_tol) {
      trace.converged = true;
      break;
    }
    bool restart = false;
    if (real_inner(r, xi) <= 0.0) {
      xi = r;
      restart = true;
    }
    ArmijoResult ls = armijo_search(x, xi, f, real_inner(r, xi), cfg, value);
    if (ls.stalled && !restart) {
      // The momentum direction failed; fall back once to steepest ascent.
      xi = r;
      restart = true;
      ls = armijo_search(x, xi, f, real_inner(r, xi), cfg, value);
    }
    if (ls.stalled) {
      trace.stalled = true;
      break;
    }

    trace.max_tangency_error = std::max(trace.max_tangency_error, tangency_error(xi, x.values()));
    trace.max_relative_tangency_error =
        std::max(trace.max_relative_tangency_error, relative_tangency_error(xi, x.values()));
    if (restart && (xi - r).norm() != 0.0) trace.restart_rule_held = false;

    PhaseVector x_next = retract(x, xi, ls.step);
    const CVec r_next = project_tangent(egrad(x_next), x_next);
    const CVec r_transported = project_tangent(r, x_next);
    const double beta = polak_ribiere_beta(r_transported, r_next, r, xi);
    const CVec xi_transported = project_tangent(xi, x_next);

    if (ls.value < f) trace.monotone = false;
    xi = r_next + beta * xi_transported;
    x = std::move(x_next);
    r = r_next;
    f = ls.value;
    trace.max_modulus_error = std::max(trace.max_modulus_error, x.max_modulus_error());
    trace.records.push_back({i + 1, f, r.norm(), ls.step, beta, restart});
  }
  if (!trace.converged && !trace.stalled && r.norm() < cfg.grad_tol) trace.converged = true;
  out.phase = std::move(x);
  return out;
}

inline OptimizeResult optimize_from(const ChannelSet& ch, const ObjectiveConfig& objective,
                                    const OptimizerConfig& cfg, PhaseVector init) {
  objective.validate();
  ch.validate();
  return conjugate_gradient_ascent(
      std::move(init), [&](const PhaseVector& p) { return joint_objective(ch, p.values(), objective); },
      [&](const PhaseVector& p) { return gradient(ch, p.values(), objective); }, cfg);
}

/// Optimises the RIS configuration from a seeded random start.
inline OptimizeResult optimize(const ChannelSet& ch, const ObjectiveConfig& objective,
                               const OptimizerConfig& cfg) {
  Rng rng{cfg.seed};
  return optimize_from(ch, objective, cfg, PhaseVector::random(ch.elements(), rng));
}

}  // namespace risocc
