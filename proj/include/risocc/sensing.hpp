#pragma once

// MUSIC localisation through the RIS as seen from the BS side. The same code
// serves the legitimate BS (true configuration) and the wiretapper (guessed
// configuration): only the assumed phase vector differs.
//
// Stages: a 2-D far-field scan over (azimuth, elevation), a 1-D near-field
// scan over distance at each angle estimate, then a joint local refinement
// of all three parameters with the near-field steering.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Eigenvalues>

#include "risocc/channel.hpp"
#include "risocc/signal.hpp"

namespace risocc {

/// NearField uses the Fresnel expansion, FarField drops its curvature term,
/// Exact uses the spherical wavefront with exact element distances.
enum class SteeringMode { NearField, FarField, Exact };

struct ScanGrid {
  std::vector<double> azimuth;    // rad
  std::vector<double> elevation;  // rad
  std::vector<double> distance;   // m

  static std::vector<double> linspace_step(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi > lo)) throw std::invalid_argument("scan axis needs lo < hi and step > 0");
    std::vector<double> axis;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    axis.reserve(count);
    for (std::size_t i = 0; i < count; ++i) axis.push_back(lo + static_cast<double>(i) * step);
    return axis;
  }

  /// Angles on [lo, hi) in steps of `angle_step`; distances on [lo, hi].
  static ScanGrid uniform(double az_lo, double az_hi, double el_lo, double el_hi, double angle_step,
                          double r_lo, double r_hi, double r_step) {
    ScanGrid g;
    g.azimuth = linspace_step(az_lo, az_hi - angle_step, angle_step);
    g.elevation = linspace_step(el_lo, el_hi - angle_step, angle_step);
    g.distance = linspace_step(r_lo, r_hi, r_step);
    g.validate();
    return g;
  }

  /// 1 degree over the front half-space, 0.1 m over [0.5, 25] m.
  static ScanGrid defaults() {
    const double deg = kPi / 180.0;
    return uniform(-90.0 * deg, 90.0 * deg, -90.0 * deg, 90.0 * deg, deg, 0.5, 25.0, 0.1);
  }

  void validate() const {
    auto check = [](const std::vector<double>& axis, const char* name) {
      if (axis.size() < 2) throw std::invalid_argument(std::string(name) + " axis needs at least 2 samples");
      for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i] > axis[i - 1])) throw std::invalid_argument(std::string(name) + " axis not increasing");
      }
    };
    check(azimuth, "azimuth");
    check(elevation, "elevation");
    check(distance, "distance");
  }
};

struct SpectrumPeak {
  std::vector<double> coords;
  double value = 0.0;
  std::size_t flat_index = 0;
};

/// Spectrum over one (distance) or two (azimuth x elevation) axes. Two-axis
/// values are stored azimuth-major: values[ia * n_el + ie].
struct MusicSpectrum {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  std::vector<SpectrumPeak> peaks;
};

struct Estimate {
  double phi = 0.0;
  double theta = 0.0;
  double r = 0.0;
};

inline CMat sample_covariance(const CMat& Y) {
  if (Y.cols() < 1) throw std::invalid_argument("covariance needs at least one snapshot");
  CMat R = (Y * Y.adjoint()) / static_cast<double>(Y.cols());
  // Symmetrise away rounding so the eigensolver sees an exactly Hermitian matrix.
  return (R + R.adjoint()) * 0.5;
}

inline CMat sample_covariance(const ReceivedBlock& block) { return sample_covariance(block.Y); }

/// Eigenvectors of the M - K smallest eigenvalues, as columns.
inline CMat noise_subspace(const CMat& R, Eigen::Index sources) {
  const Eigen::Index M = R.rows();
  require_dims(R.cols() == M, "covariance must be square");
  if (sources < 0 || M <= sources) throw std::invalid_argument("noise subspace needs M > K");
  Eigen::SelfAdjointEigenSolver<CMat> eig(R);
  if (eig.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
  return eig.eigenvectors().leftCols(M - sources);  // eigenvalues come out ascending
}

/// Unit-norm effective steering H diag(phase) a(r, phi, theta).
inline CVec steering(double r, double phi, double theta, const CMat& H, const CVec& phase_assumed,
                     const RisGeometry& geom, SteeringMode mode) {
  require_dims(H.cols() == geom.size() && phase_assumed.size() == geom.size(), "steering dimensions");
  CVec a;
  if (mode == SteeringMode::Exact) {
    a = array_response(UeState{r, phi, theta, 1.0}, geom);
  } else {
    auto c = FresnelCoefficients::of(r, phi, theta, geom);
    if (mode == SteeringMode::FarField) c.gamma = 0.0;
    a = fresnel_response(c, geom);
  }
  CVec b = H * phase_assumed.cwiseProduct(a);
  const double norm = b.norm();
  if (norm > 0.0) b /= norm;
  return b;
}

namespace detail {

inline double music_value(const CMat& En, const CVec& b) {
  const double bb = b.squaredNorm();
  const double proj = (En.adjoint() * b).squaredNorm();
  if (bb == 0.0) return 0.0;
  return bb / std::max(proj, std::numeric_limits<double>::min() * bb);
}

}  // namespace detail

/// Local maxima of a two-axis spectrum, strongest first, each at least
/// `separation` + 1 cells (Chebyshev) away from any stronger selected peak.
inline std::vector<SpectrumPeak> find_peaks_2d(const MusicSpectrum& s, std::size_t max_peaks,
                                               int separation = 3) {
  const auto n0 = static_cast<long>(s.axes.at(0).size());
  const auto n1 = static_cast<long>(s.axes.at(1).size());
  auto at = [&](long i, long j) { return s.values[static_cast<std::size_t>(i * n1 + j)]; };

  std::vector<std::size_t> candidates;
  for (long i = 0; i < n0; ++i) {
    for (long j = 0; j < n1; ++j) {
      const double v = at(i, j);
      bool is_max = true;
      for (long di = -1; di <= 1 && is_max; ++di) {
        for (long dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const long a = i + di;
          const long b = j + dj;
          if (a < 0 || a >= n0 || b < 0 || b >= n1) continue;
          const double w = at(a, b);
          // Plateaus resolve to their first cell in flat order.
          if (w > v || (w == v && a * n1 + b < i * n1 + j)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back(static_cast<std::size_t>(i * n1 + j));
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return s.values[a] > s.values[b]; });

  std::vector<SpectrumPeak> peaks;
  for (std::size_t idx : candidates) {
    if (peaks.size() >= max_peaks) break;
    const long i = static_cast<long>(idx) / n1;
    const long j = static_cast<long>(idx) % n1;
    bool suppressed = false;
    for (const auto& p : peaks) {
      const long pi = static_cast<long>(p.flat_index) / n1;
      const long pj = static_cast<long>(p.flat_index) % n1;
      if (std::max(std::abs(pi - i), std::abs(pj - j)) <= separation) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;
    peaks.push_back({{s.axes[0][static_cast<std::size_t>(i)], s.axes[1][static_cast<std::size_t>(j)]},
                     s.values[idx], idx});
  }
  return peaks;
}

/// Global maximum of a one-axis spectrum.
inline SpectrumPeak find_peak_1d(const MusicSpectrum& s) {
  const auto it = std::max_element(s.values.begin(), s.values.end());
  const auto idx = static_cast<std::size_t>(std::distance(s.values.begin(), it));
  return {{s.axes.at(0)[idx]}, *it, idx};
}

/// 2-D far-field MUSIC over azimuth x elevation against a precomputed noise
/// subspace.
inline MusicSpectrum music_aoa_spectrum(const CMat& En, std::size_t sources, const CMat& H,
                                        const CVec& phase_assumed, const RisGeometry& geom,
                                        const ScanGrid& grid, int peak_separation = 3) {
  require_dims(H.cols() == geom.size() && phase_assumed.size() == geom.size(), "AoA scan dimensions");
  require_dims(En.rows() == H.rows(), "noise subspace vs BS antennas");
  grid.validate();
  const Eigen::Index M = H.rows();
  const int nh = geom.n_h;
  const int nv = geom.n_v;
  const double k = geom.wavenumber();

  // The far-field response factorises as u_h(alpha) (x) u_v(beta); fold the
  // vertical factor into the effective array once per elevation.
  const CMat B = H * phase_assumed.asDiagonal();
  MusicSpectrum s;
  s.axes = {grid.azimuth, grid.elevation};
  const std::size_t n_az = grid.azimuth.size();
  const std::size_t n_el = grid.elevation.size();
  s.values.assign(n_az * n_el, 0.0);

  CMat folded(M, nh);
  CVec uh(nh);
  for (std::size_t ie = 0; ie < n_el; ++ie) {
    const double theta = grid.elevation[ie];
    const double beta = k * geom.d_v * std::sin(theta);
    folded.setZero();
    for (int iv = 0; iv < nv; ++iv) {
      const cd w = std::polar(1.0, (iv - geom.half_v()) * beta);
      folded += w * B.middleCols(static_cast<Eigen::Index>(iv) * nh, nh);
    }
    const CMat folded_noise = En.adjoint() * folded;
    for (std::size_t ia = 0; ia < n_az; ++ia) {
      const double alpha = k * geom.d_h * std::sin(grid.azimuth[ia]) * std::cos(theta);
      for (int ih = 0; ih < nh; ++ih) uh(ih) = std::polar(1.0, (ih - geom.half_h()) * alpha);
      const double bb = (folded * uh).squaredNorm();
      const double proj = (folded_noise * uh).squaredNorm();
      s.values[ia * n_el + ie] = bb == 0.0 ? 0.0 : bb / std::max(proj, std::numeric_limits<double>::min() * bb);
    }
  }
  s.peaks = find_peaks_2d(s, sources, peak_separation);
  return s;
}

inline MusicSpectrum music_aoa_spectrum(const CMat& Y, std::size_t sources, const CMat& H,
                                        const PhaseVector& phase_assumed, const RisGeometry& geom,
                                        const ScanGrid& grid, int peak_separation = 3) {
  const CMat En = noise_subspace(sample_covariance(Y), static_cast<Eigen::Index>(sources));
  return music_aoa_spectrum(En, sources, H, phase_assumed.values(), geom, grid, peak_separation);
}

/// 1-D near-field MUSIC over distance at a fixed angle estimate.
inline MusicSpectrum music_distance_spectrum(const CMat& En, const CMat& H, const CVec& phase_assumed,
                                             double phi, double theta, const RisGeometry& geom,
                                             const ScanGrid& grid, SteeringMode mode = SteeringMode::NearField) {
  require_dims(En.rows() == H.rows(), "noise subspace vs BS antennas");
  MusicSpectrum s;
  s.axes = {grid.distance};
  s.values.reserve(grid.distance.size());
  for (double r : grid.distance) {
    s.values.push_back(detail::music_value(En, steering(r, phi, theta, H, phase_assumed, geom, mode)));
  }
  s.peaks = {find_peak_1d(s)};
  return s;
}

inline MusicSpectrum music_distance_spectrum(const CMat& Y, std::size_t sources, const CMat& H,
                                             const PhaseVector& phase_assumed, double phi, double theta,
                                             const RisGeometry& geom, const ScanGrid& grid,
                                             SteeringMode mode = SteeringMode::NearField) {
  const CMat En = noise_subspace(sample_covariance(Y), static_cast<Eigen::Index>(sources));
  return music_distance_spectrum(En, H, phase_assumed.values(), phi, theta, geom, grid, mode);
}

/// Peak value over the median value; how much a spectrum stands out.
inline double peak_to_median(const MusicSpectrum& s) {
  std::vector<double> v = s.values;
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double median = *mid;
  if (v.size() % 2 == 0) median = 0.5 * (median + *std::max_element(v.begin(), mid));
  const double peak = *std::max_element(s.values.begin(), s.values.end());
  return median > 0.0 ? peak / median : std::numeric_limits<double>::infinity();
}

struct LocalizeOptions {
  int peak_separation = 3;
  /// Wavefront model for the distance scan and the refinement.
  SteeringMode near_field_mode = SteeringMode::Exact;
  /// Joint (azimuth, elevation, range) pattern-search refinement after the
  /// grid scans; off leaves the grid estimates untouched.
  bool refine = true;
  /// Refinement stops once the angle step falls below this (rad).
  double refine_tolerance = 1e-6;
  /// Cap on accepted refinement moves.
  int refine_max_moves = 400;
  /// Refinement box half-width around the grid estimate, in angle cells.
  double refine_box_cells = 5.0;
};

struct Localization {
  MusicSpectrum aoa;
  std::vector<MusicSpectrum> distance;  // one per estimate, from the last pass
  std::vector<Estimate> estimates;
  bool padded = false;  // fewer than K angle peaks were found
};

namespace detail {

inline std::size_t nearest_cell(const std::vector<double>& axis, double x) {
  const auto it = std::lower_bound(axis.begin(), axis.end(), x);
  if (it == axis.begin()) return 0;
  if (it == axis.end()) return axis.size() - 1;
  const auto hi = static_cast<std::size_t>(std::distance(axis.begin(), it));
  return (x - axis[hi - 1] <= axis[hi] - x) ? hi - 1 : hi;
}

/// Maximises the near-field MUSIC spectrum over (azimuth, elevation, range)
/// by compass search over all 26 lattice neighbours, halving the steps
/// whenever no neighbour improves. The search stays within `box` (rad) of
/// the start angles and inside [r_min, r_max].
inline Estimate pattern_search(const CMat& En, const CMat& H, const CVec& phase, const RisGeometry& geom,
                               Estimate start, double angle_step, double range_step, double box, double r_min,
                               double r_max, double tolerance, int max_moves, SteeringMode mode) {
  auto value = [&](const Estimate& e) {
    if (std::abs(e.phi - start.phi) > box || std::abs(e.theta - start.theta) > box ||
        e.r < r_min || e.r > r_max) {
      return -1.0;
    }
    return music_value(En, steering(e.r, e.phi, e.theta, H, phase, geom, mode));
  };
  Estimate best = start;
  double best_value = value(best);
  double da = angle_step;
  double dr = range_step;
  int moves = 0;
  while (da > tolerance && moves < max_moves) {
    bool moved = false;
    Estimate candidate = best;
    double candidate_value = best_value;
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) {
        for (int l = -1; l <= 1; ++l) {
          if (i == 0 && j == 0 && l == 0) continue;
          const Estimate e{best.phi + i * da, best.theta + j * da, best.r + l * dr};
          const double v = value(e);
          if (v > candidate_value) {
            candidate = e;
            candidate_value = v;
            moved = true;
          }
        }
      }
    }
    if (moved) {
      best = candidate;
      best_value = candidate_value;
      ++moves;
    } else {
      da *= 0.5;
      dr *= 0.5;
    }
  }
  return best;
}

}  // namespace detail

/// Localises `sources` users: far-field angle scan, distance scan, then a
/// joint pattern-search refinement around each grid estimate.
inline Localization localize(const CMat& Y, std::size_t sources, const CMat& H, const CVec& phase_assumed,
                             const RisGeometry& geom, const ScanGrid& grid, const LocalizeOptions& opt = {}) {
  const CMat En = noise_subspace(sample_covariance(Y), static_cast<Eigen::Index>(sources));
  Localization out;
  out.aoa = music_aoa_spectrum(En, sources, H, phase_assumed, geom, grid, opt.peak_separation);

  std::vector<std::pair<double, double>> angles;
  for (const auto& p : out.aoa.peaks) angles.emplace_back(p.coords[0], p.coords[1]);
  while (angles.size() < sources) {
    out.padded = true;
    angles.emplace_back(grid.azimuth[grid.azimuth.size() / 2], grid.elevation[grid.elevation.size() / 2]);
  }
  const double angle_step = grid.azimuth[1] - grid.azimuth[0];
  const double range_step = grid.distance[1] - grid.distance[0];
  for (const auto& [phi, theta] : angles) {
    MusicSpectrum dist = music_distance_spectrum(En, H, phase_assumed, phi, theta, geom, grid, opt.near_field_mode);
    Estimate est{phi, theta, dist.peaks.front().coords[0]};
    if (opt.refine) {
      est = detail::pattern_search(En, H, phase_assumed, geom, est, angle_step, range_step,
                                   opt.refine_box_cells * angle_step, grid.distance.front(), grid.distance.back(), opt.refine_tolerance,
                                   opt.refine_max_moves, opt.near_field_mode);
    }
    out.distance.push_back(std::move(dist));
    out.estimates.push_back(est);
  }
  return out;
}

inline Localization localize(const ReceivedBlock& block, std::size_t sources, const CMat& H,
                             const PhaseVector& phase_assumed, const RisGeometry& geom, const ScanGrid& grid,
                             const LocalizeOptions& opt = {}) {
  return localize(block.Y, sources, H, phase_assumed.values(), geom, grid, opt);
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

struct SquaredErrors {
  double azimuth = 0.0;
  double elevation = 0.0;
  double distance = 0.0;

  double total() const { return azimuth + elevation + distance; }
};

inline SquaredErrors squared_errors(const Estimate& est, const Estimate& truth) {
  const double da = wrap_angle(est.phi - truth.phi);
  const double de = wrap_angle(est.theta - truth.theta);
  const double dr = est.r - truth.r;
  return {da * da, de * de, dr * dr};
}

struct SensingReport {
  std::vector<Estimate> truth;
  std::vector<Estimate> matched;       // matched[k] is the estimate paired with truth[k]
  std::vector<std::size_t> assignment; // truth k -> index into the (padded) estimate list
  std::vector<SquaredErrors> errors;
};

inline Estimate to_estimate(const UeState& ue) { return {ue.phi, ue.theta, ue.r}; }

/// Pairing cost: squared wrapped angle errors (rad) plus squared relative
/// distance error, so no unit dominates.
inline double association_cost(const Estimate& est, const Estimate& truth) {
  const SquaredErrors e = squared_errors(est, truth);
  const double rel = truth.r != 0.0 ? e.distance / (truth.r * truth.r) : e.distance;
  return e.azimuth + e.elevation + rel;
}

/// Minimum-cost bijection by exhaustive search over permutations. Missing
/// estimates are padded with `fallback`.
inline SensingReport associate_and_score(std::vector<Estimate> estimates, const std::vector<Estimate>& truth,
                                         Estimate fallback = {}) {
  if (truth.size() > 8) throw std::invalid_argument("exhaustive association supports at most 8 users");
  while (estimates.size() < truth.size()) estimates.push_back(fallback);
  estimates.resize(truth.size());

  std::vector<std::size_t> perm(truth.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) cost += association_cost(estimates[perm[k]], truth[k]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  SensingReport report;
  report.truth = truth;
  report.assignment = best;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    report.matched.push_back(estimates[best[k]]);
    report.errors.push_back(squared_errors(estimates[best[k]], truth[k]));
  }
  return report;
}

struct NmseValues {
  double azimuth = 0.0;
  double elevation = 0.0;
  double distance = 0.0;
};

/// Sum of squared errors over the sum of squared true values, per parameter.
inline NmseValues nmse(std::span<const SensingReport> reports) {
  if (reports.empty()) throw std::invalid_argument("NMSE needs at least one report");
  SquaredErrors num;
  SquaredErrors den;
  for (const auto& rep : reports) {
    for (std::size_t k = 0; k < rep.truth.size(); ++k) {
      num.azimuth += rep.errors[k].azimuth;
      num.elevation += rep.errors[k].elevation;
      num.distance += rep.errors[k].distance;
      den.azimuth += rep.truth[k].phi * rep.truth[k].phi;
      den.elevation += rep.truth[k].theta * rep.truth[k].theta;
      den.distance += rep.truth[k].r * rep.truth[k].r;
    }
  }
  auto ratio = [](double n, double d) {
    if (d > 0.0) return n / d;
    return n == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  return {ratio(num.azimuth, den.azimuth), ratio(num.elevation, den.elevation),
          ratio(num.distance, den.distance)};
}

}  // namespace risocc
