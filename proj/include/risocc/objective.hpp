#pragma once

// Secure-ISAC objective: MRC SINR, sum rate, the occultation penalty and the
// closed-form gradient of rho * R - (1 - rho) * Gamma w.r.t. the RIS phases.
//
// Gradient convention: for a real f of a complex vector phi = x + j y the
// returned vector is df/dx + j df/dy, i.e. twice the derivative w.r.t. the
// conjugate coordinate. It is the steepest-ascent direction in the real-pair
// embedding.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "risocc/channel.hpp"

namespace risocc {

/// MRC is undefined when a user's effective channel vanishes.
class DegenerateChannel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNoiseFloor = 1e-30;

struct ObjectiveConfig {
  double rho = 0.5;
  double epsilon = 0.0;
  CVec wiretapper_phase;  // empty means the identity configuration

  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  }

  CVec wiretapper_or_identity(Eigen::Index n) const {
    if (wiretapper_phase.size() == 0) return CVec::Ones(n);
    require_dims(wiretapper_phase.size() == n, "wiretapper phase length");
    return wiretapper_phase;
  }
};

struct ObjectiveEval {
  double sum_rate = 0.0;
  std::vector<double> per_user_sinr;
  double projection = 0.0;  // ||G_B^H G_W||_F^2
  double gamma = 0.0;
  double joint_value = 0.0;
  CVec gradient;
};

inline CVec combiner(const CVec& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DegenerateChannel("zero effective channel, MRC combiner undefined");
  return v / norm;
}

namespace detail {

/// Per-user effective channels v_k = H diag(phase) g_k as columns.
inline CMat user_channels(const ChannelSet& ch, const CVec& phase) {
  require_dims(phase.size() == ch.elements(), "phase length vs RIS size");
  return ch.H * (phase.asDiagonal() * ch.g);
}

inline double noise_term(const ChannelSet& ch) { return std::max(ch.noise_power, kNoiseFloor); }

struct SinrTerms {
  CMat V;         // M x K effective channels
  CMat W;         // M x K MRC combiners
  CMat cross;     // K x K, cross(k, j) = w_k^H v_j
  Eigen::VectorXd nu;
  Eigen::VectorXd delta;
};

inline SinrTerms sinr_terms(const ChannelSet& ch, const CVec& phase) {
  SinrTerms t;
  t.V = user_channels(ch, phase);
  const Eigen::Index K = t.V.cols();
  t.W.resize(t.V.rows(), K);
  for (Eigen::Index k = 0; k < K; ++k) t.W.col(k) = combiner(t.V.col(k));
  t.cross = t.W.adjoint() * t.V;
  t.nu.resize(K);
  t.delta.resize(K);
  const double noise = noise_term(ch);
  for (Eigen::Index k = 0; k < K; ++k) {
    t.nu(k) = ch.powers(k) * std::norm(t.cross(k, k));
    double interference = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (j != k) interference += ch.powers(j) * std::norm(t.cross(k, j));
    }
    t.delta(k) = interference + noise * t.W.col(k).squaredNorm();
  }
  return t;
}

}  // namespace detail

inline std::vector<double> sinr_all(const ChannelSet& ch, const CVec& phase) {
  const auto t = detail::sinr_terms(ch, phase);
  std::vector<double> out(static_cast<std::size_t>(t.nu.size()));
  for (Eigen::Index k = 0; k < t.nu.size(); ++k) out[static_cast<std::size_t>(k)] = t.nu(k) / t.delta(k);
  return out;
}

inline double sinr(Eigen::Index k, const ChannelSet& ch, const PhaseVector& phase) {
  if (k < 0 || k >= ch.users()) throw std::out_of_range("user index out of range");
  return sinr_all(ch, phase.values())[static_cast<std::size_t>(k)];
}

inline std::vector<double> user_rates(const ChannelSet& ch, const CVec& phase) {
  auto s = sinr_all(ch, phase);
  for (double& x : s) x = std::log2(1.0 + x);
  return s;
}

inline double sum_rate(const ChannelSet& ch, const CVec& phase) {
  double total = 0.0;
  for (double r : user_rates(ch, phase)) total += r;
  return total;
}

inline double sum_rate(const ChannelSet& ch, const PhaseVector& phase) {
  return sum_rate(ch, phase.values());
}

/// ||G_B^H G_W||_F^2 with G_B = H diag(phase) A and G_W built from the
/// wiretapper's guess.
inline double projection_norm(const ChannelSet& ch, const CVec& phase, const ObjectiveConfig& cfg) {
  const CMat gb = effective_channel(ch.H, phase, ch.A);
  const CMat gw = effective_channel(ch.H, cfg.wiretapper_or_identity(ch.elements()), ch.A);
  return (gb.adjoint() * gw).squaredNorm();
}

inline double occultation_penalty(const ChannelSet& ch, const CVec& phase, const ObjectiveConfig& cfg) {
  return std::max(projection_norm(ch, phase, cfg) - cfg.epsilon, 0.0);
}

inline double occultation_penalty(const ChannelSet& ch, const PhaseVector& phase,
                                  const ObjectiveConfig& cfg) {
  return occultation_penalty(ch, phase.values(), cfg);
}

/// rho * R - (1 - rho) * Gamma. The rate term is skipped entirely when rho = 0.
inline double joint_objective(const ChannelSet& ch, const CVec& phase, const ObjectiveConfig& cfg) {
  cfg.validate();
  double value = 0.0;
  if (cfg.rho > 0.0) value += cfg.rho * sum_rate(ch, phase);
  if (cfg.rho < 1.0) value -= (1.0 - cfg.rho) * occultation_penalty(ch, phase, cfg);
  return value;
}

inline double joint_objective(const ChannelSet& ch, const PhaseVector& phase, const ObjectiveConfig& cfg) {
  return joint_objective(ch, phase.values(), cfg);
}

/// Ambient gradient of the joint objective. The MRC combiners are evaluated at
/// `phase` and held fixed; nu_k is differentiated as p_k ||v_k||^2 (its value
/// under MRC), delta_k with w_k constant.
inline ObjectiveEval evaluate(const ChannelSet& ch, const CVec& phase, const ObjectiveConfig& cfg) {
  cfg.validate();
  ch.validate();
  const Eigen::Index N = ch.elements();
  const Eigen::Index K = ch.users();
  require_dims(phase.size() == N, "phase length vs RIS size");

  ObjectiveEval out;
  out.gradient = CVec::Zero(N);

  if (cfg.rho > 0.0) {
    const auto t = detail::sinr_terms(ch, phase);
    const CMat hv = ch.H.adjoint() * t.V;  // N x K
    const CMat hw = ch.H.adjoint() * t.W;  // N x K
    const double inv_ln2 = 1.0 / std::numbers::ln2;
    out.per_user_sinr.resize(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
      const double nu = t.nu(k);
      const double delta = t.delta(k);
      const double s = nu / delta;
      out.per_user_sinr[static_cast<std::size_t>(k)] = s;
      out.sum_rate += std::log2(1.0 + s);

      const CVec grad_nu = 2.0 * ch.powers(k) * ch.g.col(k).conjugate().cwiseProduct(hv.col(k));
      CVec grad_delta = CVec::Zero(N);
      for (Eigen::Index j = 0; j < K; ++j) {
        if (j == k) continue;
        grad_delta += (2.0 * ch.powers(j) * t.cross(k, j)) *
                      ch.g.col(j).conjugate().cwiseProduct(hw.col(k));
      }
      const CVec grad_sinr = (delta * grad_nu - nu * grad_delta) / (delta * delta);
      out.gradient += (cfg.rho * inv_ln2 / (1.0 + s)) * grad_sinr;
    }
  } else {
    out.per_user_sinr = sinr_all(ch, phase);
    for (double s : out.per_user_sinr) out.sum_rate += std::log2(1.0 + s);
  }

  const CMat gb = effective_channel(ch.H, phase, ch.A);
  const CMat gw = effective_channel(ch.H, cfg.wiretapper_or_identity(N), ch.A);
  const CMat gw_gb = gw.adjoint() * gb;  // K x K
  out.projection = gw_gb.squaredNorm();
  out.gamma = std::max(out.projection - cfg.epsilon, 0.0);

  if (cfg.rho < 1.0 && out.projection > cfg.epsilon) {
    // 2 diag(H^H G_W G_W^H G_B A^H)
    const CMat left = (ch.H.adjoint() * gw) * gw_gb;  // N x K
    const CVec grad_gamma = 2.0 * left.cwiseProduct(ch.A.conjugate()).rowwise().sum();
    out.gradient -= (1.0 - cfg.rho) * grad_gamma;
  }

  out.joint_value = cfg.rho * out.sum_rate - (1.0 - cfg.rho) * out.gamma;
  return out;
}

inline CVec gradient(const ChannelSet& ch, const CVec& phase, const ObjectiveConfig& cfg) {
  return evaluate(ch, phase, cfg).gradient;
}

inline CVec gradient(const ChannelSet& ch, const PhaseVector& phase, const ObjectiveConfig& cfg) {
  return gradient(ch, phase.values(), cfg);
}

/// Value of the objective with combiners frozen at `anchor`: the function the
/// closed-form gradient differentiates exactly. Coincides with
/// joint_objective when phase == anchor.
inline double fixed_combiner_objective(const ChannelSet& ch, const CVec& phase, const CVec& anchor,
                                       const ObjectiveConfig& cfg) {
  cfg.validate();
  double value = 0.0;
  if (cfg.rho > 0.0) {
    const CMat W = [&] {
      const CMat va = detail::user_channels(ch, anchor);
      CMat w(va.rows(), va.cols());
      for (Eigen::Index k = 0; k < va.cols(); ++k) w.col(k) = combiner(va.col(k));
      return w;
    }();
    const CMat V = detail::user_channels(ch, phase);
    const CMat cross = W.adjoint() * V;
    const double noise = detail::noise_term(ch);
    double rate = 0.0;
    for (Eigen::Index k = 0; k < V.cols(); ++k) {
      const double nu = ch.powers(k) * V.col(k).squaredNorm();
      double delta = noise * W.col(k).squaredNorm();
      for (Eigen::Index j = 0; j < V.cols(); ++j) {
        if (j != k) delta += ch.powers(j) * std::norm(cross(k, j));
      }
      rate += std::log2(1.0 + nu / delta);
    }
    value += cfg.rho * rate;
  }
  if (cfg.rho < 1.0) value -= (1.0 - cfg.rho) * occultation_penalty(ch, phase, cfg);
  return value;
}

}  // namespace risocc
