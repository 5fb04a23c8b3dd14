#pragma once

// Planar RIS geometry: element indexing, UE placement, element distances and
// array response vectors. The RIS lies in the YZ-plane with its central
// element at the origin.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace risocc {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;

/// Which angles a UE may occupy. `Front` keeps users in front of the RIS
/// plane; `Full` accepts the whole [-pi, pi) range on both axes.
enum class AngularDomain { Front, Full };

/// Signed element coordinates; (0, 0) is the central element.
struct ElementIndex {
  int h = 0;
  int v = 0;
  friend bool operator==(const ElementIndex&, const ElementIndex&) = default;
};

struct RisGeometry {
  int n_h = 1;
  int n_v = 1;
  double d_h = 0.15;
  double d_v = 0.15;
  double lambda = 0.3;

  static RisGeometry make(int n_h, int n_v, double d_h, double d_v, double lambda) {
    RisGeometry g{n_h, n_v, d_h, d_v, lambda};
    g.validate();
    return g;
  }

  void validate() const {
    if (n_h < 1 || n_v < 1 || n_h % 2 == 0 || n_v % 2 == 0) {
      throw std::invalid_argument("RIS element counts must be odd and positive, got " +
                                  std::to_string(n_h) + "x" + std::to_string(n_v));
    }
    if (!(d_h > 0.0) || !(d_v > 0.0) || !(lambda > 0.0)) {
      throw std::invalid_argument("RIS spacings and wavelength must be positive");
    }
  }

  int size() const { return n_h * n_v; }
  int half_h() const { return (n_h - 1) / 2; }
  int half_v() const { return (n_v - 1) / 2; }
  double wavenumber() const { return 2.0 * kPi / lambda; }

  bool contains(ElementIndex idx) const {
    return std::abs(idx.h) <= half_h() && std::abs(idx.v) <= half_v();
  }

  /// Flattening rule: left-to-right, then bottom-to-top.
  int linear_index(ElementIndex idx) const {
    if (!contains(idx)) {
      throw std::out_of_range("RIS element index (" + std::to_string(idx.h) + "," +
                              std::to_string(idx.v) + ") outside the array");
    }
    return (idx.v + half_v()) * n_h + (idx.h + half_h());
  }

  ElementIndex element_index(int n) const {
    if (n < 0 || n >= size()) {
      throw std::out_of_range("RIS linear index " + std::to_string(n) + " outside the array");
    }
    return {n % n_h - half_h(), n / n_h - half_v()};
  }

  /// Largest distance from the centre to any element.
  double aperture_radius() const {
    return std::hypot(half_h() * d_h, half_v() * d_v);
  }
};

struct Cartesian3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct UeState {
  double r = 1.0;
  double phi = 0.0;
  double theta = 0.0;
  double power = 1.0;

  void validate(AngularDomain domain = AngularDomain::Front) const {
    if (!(r > 0.0)) throw std::invalid_argument("UE range must be positive");
    if (!(power > 0.0)) throw std::invalid_argument("UE transmit power must be positive");
    const double hi = domain == AngularDomain::Front ? kPi / 2.0 : kPi;
    if (!(phi >= -hi && phi < hi) || !(theta >= -hi && theta < hi)) {
      throw std::invalid_argument("UE angles outside the configured angular domain");
    }
  }
};

inline Cartesian3 ue_position(const UeState& ue) {
  return {ue.r * std::cos(ue.phi) * std::cos(ue.theta),
          ue.r * std::sin(ue.phi) * std::cos(ue.theta),
          ue.r * std::sin(ue.theta)};
}

inline Cartesian3 element_position(ElementIndex idx, const RisGeometry& geom) {
  return {0.0, idx.h * geom.d_h, idx.v * geom.d_v};
}

inline double element_distance_exact(const UeState& ue, ElementIndex idx, const RisGeometry& geom) {
  if (!geom.contains(idx)) {
    throw std::out_of_range("RIS element index (" + std::to_string(idx.h) + "," +
                            std::to_string(idx.v) + ") outside the array");
  }
  const Cartesian3 p = ue_position(ue);
  const Cartesian3 e = element_position(idx, geom);
  const double dx = p.x - e.x;
  const double dy = p.y - e.y;
  const double dz = p.z - e.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Second-order (Fresnel) expansion of the element distance around the centre.
inline double element_distance_fresnel(const UeState& ue, ElementIndex idx, const RisGeometry& geom) {
  const double h = idx.h * geom.d_h;
  const double v = idx.v * geom.d_v;
  return ue.r - h * std::sin(ue.phi) * std::cos(ue.theta) - v * std::sin(ue.theta) +
         (h * h + v * v) / (2.0 * ue.r);
}

/// Spherical-wavefront response using exact element distances; entry n is
/// exp(j k (r - r_n)).
inline CVec array_response(const UeState& ue, const RisGeometry& geom) {
  CVec a(geom.size());
  const double k = geom.wavenumber();
  for (int n = 0; n < geom.size(); ++n) {
    const double rn = element_distance_exact(ue, geom.element_index(n), geom);
    a(n) = std::polar(1.0, k * (ue.r - rn));
  }
  return a;
}

/// Phase coefficients of the Fresnel-approximated response.
struct FresnelCoefficients {
  double alpha = 0.0;  // horizontal linear phase per element
  double beta = 0.0;   // vertical linear phase per element
  double gamma = 0.0;  // curvature, multiplies squared element offsets (m^2)

  static FresnelCoefficients of(double r, double phi, double theta, const RisGeometry& geom) {
    const double k = geom.wavenumber();
    return {k * geom.d_h * std::sin(phi) * std::cos(theta), k * geom.d_v * std::sin(theta),
            kPi / (geom.lambda * r)};
  }
};

/// Fresnel response exp(j(n_h alpha + n_v beta - (n_h^2 d_h^2 + n_v^2 d_v^2) gamma)).
/// A zero gamma yields the planar-wavefront (far-field) response.
inline CVec fresnel_response(const FresnelCoefficients& c, const RisGeometry& geom) {
  CVec a(geom.size());
  for (int n = 0; n < geom.size(); ++n) {
    const ElementIndex idx = geom.element_index(n);
    const double h = idx.h * geom.d_h;
    const double v = idx.v * geom.d_v;
    a(n) = std::polar(1.0, idx.h * c.alpha + idx.v * c.beta - (h * h + v * v) * c.gamma);
  }
  return a;
}

inline CVec fresnel_response(const UeState& ue, const RisGeometry& geom) {
  return fresnel_response(FresnelCoefficients::of(ue.r, ue.phi, ue.theta, geom), geom);
}

inline CVec farfield_response(double phi, double theta, const RisGeometry& geom) {
  auto c = FresnelCoefficients::of(1.0, phi, theta, geom);
  c.gamma = 0.0;
  return fresnel_response(c, geom);
}

/// N x K matrix whose column k is the Fresnel response toward ues[k].
inline CMat fresnel_response_matrix(std::span<const UeState> ues, const RisGeometry& geom) {
  if (ues.empty()) throw std::invalid_argument("response matrix needs at least one UE");
  CMat a(geom.size(), static_cast<Eigen::Index>(ues.size()));
  for (std::size_t k = 0; k < ues.size(); ++k) {
    a.col(static_cast<Eigen::Index>(k)) = fresnel_response(ues[k], geom);
  }
  return a;
}

}  // namespace risocc
