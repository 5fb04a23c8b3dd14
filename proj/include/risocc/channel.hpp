#pragma once

// Channel synthesis: far-field Rician RIS->BS matrix, near-field UE->RIS
// vectors, the RIS configuration and effective channels.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "risocc/geometry.hpp"
#include "risocc/rng.hpp"

namespace risocc {

/// Thrown whenever matrix/vector shapes do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError("dimension mismatch: " + what);
}

/// RIS configuration: one unit-modulus coefficient per element.
class PhaseVector {
 public:
  static constexpr double kModulusTolerance = 1e-9;

  PhaseVector() = default;

  explicit PhaseVector(CVec values) : values_(std::move(values)) {
    for (Eigen::Index n = 0; n < values_.size(); ++n) {
      if (std::abs(std::abs(values_(n)) - 1.0) > kModulusTolerance) {
        throw std::invalid_argument("phase entry " + std::to_string(n) + " is not unit-modulus");
      }
    }
  }

  static PhaseVector ones(Eigen::Index n) { return PhaseVector(CVec::Ones(n)); }

  static PhaseVector from_angles(const Eigen::VectorXd& angles) {
    CVec v(angles.size());
    for (Eigen::Index n = 0; n < angles.size(); ++n) v(n) = std::polar(1.0, angles(n));
    return PhaseVector(std::move(v));
  }

  /// I.i.d. uniform phases in [0, 2 pi).
  static PhaseVector random(Eigen::Index n, Rng& rng) {
    Eigen::VectorXd angles(n);
    for (Eigen::Index i = 0; i < n; ++i) angles(i) = uniform(rng, 0.0, 2.0 * kPi);
    return from_angles(angles);
  }

  /// Element-wise projection onto the unit circle; zero entries are rejected.
  static PhaseVector normalized(const CVec& v) {
    CVec out(v.size());
    for (Eigen::Index n = 0; n < v.size(); ++n) {
      const double m = std::abs(v(n));
      if (m == 0.0) throw std::invalid_argument("cannot normalize a zero phase entry");
      out(n) = v(n) / m;
    }
    return PhaseVector(std::move(out));
  }

  Eigen::Index size() const { return values_.size(); }
  const CVec& values() const { return values_; }
  cd operator()(Eigen::Index n) const { return values_(n); }

  double max_modulus_error() const {
    double e = 0.0;
    for (Eigen::Index n = 0; n < values_.size(); ++n) {
      e = std::max(e, std::abs(std::abs(values_(n)) - 1.0));
    }
    return e;
  }

 private:
  CVec values_;
};

/// Everything the objective and the receiver need about one scene.
struct ChannelSet {
  CMat H;      // M x N, RIS -> BS
  CMat g;      // N x K, column k is the UE k -> RIS near-field vector
  CMat A;      // N x K, Fresnel phase-only responses
  double noise_power = 1.0;
  Eigen::VectorXd powers;  // K transmit powers (W)

  Eigen::Index bs_antennas() const { return H.rows(); }
  Eigen::Index elements() const { return H.cols(); }
  Eigen::Index users() const { return g.cols(); }

  void validate() const {
    require_dims(H.cols() == g.rows(), "H columns vs g rows");
    require_dims(A.rows() == H.cols(), "A rows vs H columns");
    require_dims(A.cols() == g.cols(), "A columns vs user count");
    require_dims(powers.size() == g.cols(), "powers vs user count");
    if (!(noise_power >= 0.0)) throw std::invalid_argument("noise power must be non-negative");
  }
};

struct RicianParams {
  double kappa = 2.0;
  double los_azimuth = kPi / 6.0;
  double los_elevation = kPi / 18.0;
  int bs_antennas = 32;

  void validate() const {
    if (!(kappa >= 0.0)) throw std::invalid_argument("Rician factor must be non-negative");
    if (bs_antennas < 1) throw std::invalid_argument("BS needs at least one antenna");
  }
};

/// Half-wavelength uniform linear array response, centred on the array.
inline CVec bs_array_response(int m, double azimuth) {
  CVec a(m);
  const double centre = (m - 1) / 2.0;
  for (int i = 0; i < m; ++i) a(i) = std::polar(1.0, kPi * (i - centre) * std::sin(azimuth));
  return a;
}

inline CMat sample_far_field_channel(const RicianParams& params, const RisGeometry& geom, Rng& rng) {
  params.validate();
  const int m = params.bs_antennas;
  const int n = geom.size();
  const CVec bs = bs_array_response(m, params.los_azimuth);
  const CVec ris = farfield_response(params.los_azimuth, params.los_elevation, geom);
  const CMat los = bs * ris.transpose();

  CMat nlos(m, n);
  // Column-major fill keeps the draw order fixed for a given seed.
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) nlos(i, j) = complex_normal(rng);
  }
  const double w_los = std::sqrt(params.kappa / (1.0 + params.kappa));
  const double w_nlos = std::sqrt(1.0 / (1.0 + params.kappa));
  return w_los * los + w_nlos * nlos;
}

/// g_k = lambda / (4 pi r) * a_R, with the exact-distance array response.
inline CVec near_field_channel(const UeState& ue, const RisGeometry& geom) {
  return (geom.lambda / (4.0 * kPi * ue.r)) * array_response(ue, geom);
}

inline ChannelSet make_channel_set(CMat H, std::span<const UeState> ues, const RisGeometry& geom,
                                   double noise_power) {
  ChannelSet ch;
  ch.H = std::move(H);
  ch.g.resize(geom.size(), static_cast<Eigen::Index>(ues.size()));
  ch.powers.resize(static_cast<Eigen::Index>(ues.size()));
  for (std::size_t k = 0; k < ues.size(); ++k) {
    ch.g.col(static_cast<Eigen::Index>(k)) = near_field_channel(ues[k], geom);
    ch.powers(static_cast<Eigen::Index>(k)) = ues[k].power;
  }
  ch.A = fresnel_response_matrix(ues, geom);
  ch.noise_power = noise_power;
  ch.validate();
  return ch;
}

/// H diag(phase) A. Accepts any complex vector so linearity can be checked
/// off the unit-modulus manifold.
inline CMat effective_channel(const CMat& H, const CVec& phase, const CMat& A) {
  require_dims(H.cols() == phase.size(), "H columns vs phase length");
  require_dims(A.rows() == phase.size(), "A rows vs phase length");
  return H * phase.asDiagonal() * A;
}

inline CMat effective_channel(const CMat& H, const PhaseVector& phase, const CMat& A) {
  return effective_channel(H, phase.values(), A);
}

}  // namespace risocc
