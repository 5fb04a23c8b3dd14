#pragma once

// Monte-Carlo drivers: scene generation, the spectra / NMSE / rate-CDF
// experiments, single-scene optimisation and the gradient diagnostic. Every
// result is a pure function of (config, seed); wall-clock time is reported
// separately and never enters the CSV files.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "risocc/config.hpp"
#include "risocc/io.hpp"
#include "risocc/optimizer.hpp"
#include "risocc/sensing.hpp"
#include "risocc/signal.hpp"

namespace risocc {

inline constexpr double kDeg = kPi / 180.0;

/// Runs fn(0..n-1) over `threads` workers. Each index writes only its own
/// slot, so the outcome does not depend on the schedule.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Scenes

struct Scene {
  std::uint64_t trial = 0;
  RisGeometry geom;
  std::vector<UeState> users;
  ChannelSet channels;
};

/// Uniform draws inside the configured box; a candidate is rejected when it
/// sits within min_separation of an accepted user in both angles.
inline std::vector<UeState> sample_users(const ScenarioConfig& c, double power_w, Rng& rng) {
  std::vector<UeState> users;
  const double sep = c.min_separation_deg * kDeg;
  for (int attempt = 0; static_cast<int>(users.size()) < c.users; ++attempt) {
    if (attempt > 100000) throw std::runtime_error("cannot place users with the requested separation");
    UeState u{uniform(rng, c.distance_range_m[0], c.distance_range_m[1]),
              uniform(rng, c.azimuth_range_deg[0] * kDeg, c.azimuth_range_deg[1] * kDeg),
              uniform(rng, c.elevation_range_deg[0] * kDeg, c.elevation_range_deg[1] * kDeg), power_w};
    const bool clash = std::any_of(users.begin(), users.end(), [&](const UeState& v) {
      return std::abs(v.phi - u.phi) < sep && std::abs(v.theta - u.theta) < sep;
    });
    if (!clash) users.push_back(u);
  }
  return users;
}

/// Positions and fading depend on the trial only, so a power sweep reuses the
/// same geometry and channels at every power.
inline Scene make_scene(const ScenarioConfig& c, std::uint64_t trial, double power_dbm) {
  Scene s;
  s.trial = trial;
  s.geom = c.geometry();
  Rng users_rng = make_rng(c.seed, trial, Stream::Users);
  s.users = sample_users(c, dbm_to_watts(power_dbm), users_rng);
  for (const auto& u : s.users) u.validate(c.domain());

  RicianParams rp;
  rp.kappa = c.rician_kappa;
  rp.los_azimuth = c.los_azimuth_deg * kDeg;
  rp.los_elevation = c.los_elevation_deg * kDeg;
  rp.bs_antennas = c.bs_antennas;
  Rng fading = make_rng(c.seed, trial, Stream::FarField);
  CMat H = sample_far_field_channel(rp, s.geom, fading);
  s.channels = make_channel_set(std::move(H), s.users, s.geom, c.noise_watts());
  return s;
}

inline Scene make_scene(const ScenarioConfig& c, std::uint64_t trial) { return make_scene(c, trial, c.power_dbm); }

inline ObjectiveConfig objective_config(const ScenarioConfig& c) {
  ObjectiveConfig o;
  o.rho = c.rho;
  o.epsilon = c.epsilon;
  return o;
}

inline OptimizerConfig optimizer_config(const ScenarioConfig& c, std::uint64_t trial) {
  OptimizerConfig o;
  o.max_iters = c.max_iters;
  o.grad_tol = c.grad_tol;
  o.armijo_c = c.armijo_c;
  o.armijo_shrink = c.armijo_shrink;
  o.armijo_init_step = c.armijo_init_step;
  o.armijo_max_backtracks = c.armijo_max_backtracks;
  o.seed = derive_seed(c.seed, trial, Stream::OptimizerInit);
  return o;
}

inline ScanGrid scan_grid(const ScenarioConfig& c) {
  const double limit = (c.full_angular_domain ? 180.0 : 90.0) * kDeg;
  return ScanGrid::uniform(-limit, limit, -limit, limit, c.grid_angle_step_deg * kDeg, c.grid_distance_range_m[0],
                           c.grid_distance_range_m[1], c.grid_distance_step_m);
}

inline LocalizeOptions localize_options(const ScenarioConfig& c) {
  LocalizeOptions o;
  o.peak_separation = c.peak_separation_cells;
  o.refine = c.refine_estimates;
  return o;
}

/// One block of T snapshots through the configured RIS phases.
inline ReceivedBlock observe(const ScenarioConfig& c, const Scene& s, const PhaseVector& phase) {
  Rng sym = make_rng(c.seed, s.trial, Stream::Symbols);
  Rng noise = make_rng(c.seed, s.trial, Stream::Noise);
  const auto block = generate_symbols(static_cast<Eigen::Index>(s.users.size()), c.block_length,
                                      s.channels.powers,
                                      c.modulation == "qpsk" ? Modulation::Qpsk : Modulation::Gaussian, sym);
  return receive(s.channels, phase, block, noise,
                 c.receive_model == "phase_only" ? ReceiveModel::PhaseOnly : ReceiveModel::NearField);
}

struct SensingOutcome {
  Localization bs;
  Localization wiretapper;
  SensingReport bs_report;
  SensingReport wiretapper_report;
};

inline std::vector<Estimate> truth_of(const Scene& s) {
  std::vector<Estimate> t;
  for (const auto& u : s.users) t.push_back(to_estimate(u));
  return t;
}

/// The BS scans with the true phases, the wiretapper with the identity guess;
/// both see the same received block.
inline SensingOutcome sense(const ScenarioConfig& c, const Scene& s, const PhaseVector& phase) {
  const ReceivedBlock y = observe(c, s, phase);
  const ScanGrid grid = scan_grid(c);
  const LocalizeOptions opt = localize_options(c);
  const auto k = s.users.size();
  SensingOutcome out;
  out.bs = localize(y, k, s.channels.H, phase, s.geom, grid, opt);
  out.wiretapper = localize(y, k, s.channels.H, PhaseVector::ones(s.geom.size()), s.geom, grid, opt);
  const auto truth = truth_of(s);
  out.bs_report = associate_and_score(out.bs.estimates, truth);
  out.wiretapper_report = associate_and_score(out.wiretapper.estimates, truth);
  return out;
}

/// Great-circle angle between the directions of two estimates (rad).
inline double angular_error(const Estimate& a, const Estimate& b) {
  const Cartesian3 u = ue_position({1.0, a.phi, a.theta, 1.0});
  const Cartesian3 v = ue_position({1.0, b.phi, b.theta, 1.0});
  const double dot = std::clamp(u.x * v.x + u.y * v.y + u.z * v.z, -1.0, 1.0);
  return std::acos(dot);
}

inline nlohmann::ordered_json estimate_json(const Estimate& e) {
  return {{"azimuth_deg", e.phi / kDeg}, {"elevation_deg", e.theta / kDeg}, {"distance_m", e.r}};
}

inline void write_run_metadata(const std::filesystem::path& dir, const ScenarioConfig& c, const std::string& id,
                               double seconds, nlohmann::ordered_json stats) {
  write_json(dir / "config.json", to_json(c));
  nlohmann::ordered_json summary;
  summary["experiment"] = id;
  summary["seed"] = c.seed;
  summary["trials"] = c.trials;
  summary["wall_clock_s"] = seconds;
  summary["statistics"] = std::move(stats);
  write_json(dir / "summary.json", summary);
}

// ---------------------------------------------------------------------------
// Single-scene optimisation

struct OptimizeRun {
  Scene scene;
  PhaseVector initial;
  OptimizeResult result;
  ObjectiveEval at_initial;
  ObjectiveEval at_final;
  double seconds = 0.0;
};

inline OptimizeRun run_optimize(const ScenarioConfig& c, std::uint64_t trial = 0) {
  Stopwatch clock;
  OptimizeRun run;
  run.scene = make_scene(c, trial);
  const OptimizerConfig oc = optimizer_config(c, trial);
  Rng init_rng{oc.seed};
  run.initial = PhaseVector::random(run.scene.geom.size(), init_rng);
  const ObjectiveConfig obj = objective_config(c);
  run.result = optimize_from(run.scene.channels, obj, oc, run.initial);
  run.at_initial = evaluate(run.scene.channels, run.initial.values(), obj);
  run.at_final = evaluate(run.scene.channels, run.result.phase.values(), obj);
  run.seconds = clock.seconds();
  return run;
}

inline void write_trace_csv(const std::filesystem::path& path, const OptimizerTrace& trace) {
  CsvWriter csv(path, {"iter", "objective", "grad_norm", "step", "beta", "restart"});
  for (const auto& r : trace.records) {
    csv.cell(r.iter).cell(r.objective).cell(r.grad_norm).cell(r.step).cell(r.beta).cell(r.restart ? 1 : 0);
    csv.end_row();
  }
}

inline void write_optimize(const OptimizeRun& run, const ScenarioConfig& c, const std::filesystem::path& dir) {
  ensure_directory(dir);
  {
    CsvWriter csv(dir / "phases.csv", {"element", "h", "v", "real", "imag", "angle_rad"});
    const CVec& x = run.result.phase.values();
    for (int n = 0; n < run.scene.geom.size(); ++n) {
      const ElementIndex e = run.scene.geom.element_index(n);
      csv.cell(n).cell(e.h).cell(e.v).cell(x(n).real()).cell(x(n).imag()).cell(std::arg(x(n)));
      csv.end_row();
    }
  }
  write_trace_csv(dir / "trace.csv", run.result.trace);
  const auto& t = run.result.trace;
  nlohmann::ordered_json stats{{"iterations", t.iterations()},
                               {"converged", t.converged},
                               {"stalled", t.stalled},
                               {"initial_objective", t.initial_objective()},
                               {"final_objective", t.final_objective()},
                               {"initial_sum_rate", run.at_initial.sum_rate},
                               {"final_sum_rate", run.at_final.sum_rate},
                               {"initial_projection", run.at_initial.projection},
                               {"final_projection", run.at_final.projection},
                               {"max_modulus_error", t.max_modulus_error},
                               {"max_tangency_error", t.max_tangency_error}};
  write_run_metadata(dir, c, "optimize", run.seconds, std::move(stats));
}

// ---------------------------------------------------------------------------
// Spectra

struct SpectraRun {
  OptimizeRun optimized;
  SensingOutcome sensing;
  double seconds = 0.0;
};

inline SpectraRun run_spectra(const ScenarioConfig& c, std::uint64_t trial = 0) {
  Stopwatch clock;
  SpectraRun run;
  run.optimized = run_optimize(c, trial);
  run.sensing = sense(c, run.optimized.scene, run.optimized.result.phase);
  run.seconds = clock.seconds();
  return run;
}

inline void write_aoa_csv(const std::filesystem::path& path, const MusicSpectrum& s) {
  CsvWriter csv(path, {"azimuth_deg", "elevation_deg", "spectrum"});
  const auto& az = s.axes[0];
  const auto& el = s.axes[1];
  for (std::size_t ia = 0; ia < az.size(); ++ia) {
    for (std::size_t ie = 0; ie < el.size(); ++ie) {
      csv.cell(az[ia] / kDeg).cell(el[ie] / kDeg).cell(s.values[ia * el.size() + ie]);
      csv.end_row();
    }
  }
}

inline void write_distance_csv(const std::filesystem::path& path, const Localization& loc) {
  CsvWriter csv(path, {"estimate", "distance_m", "spectrum"});
  for (std::size_t k = 0; k < loc.distance.size(); ++k) {
    const auto& s = loc.distance[k];
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      csv.cell(k).cell(s.axes[0][i]).cell(s.values[i]);
      csv.end_row();
    }
  }
}

inline nlohmann::ordered_json party_json(const Localization& loc, const SensingReport& rep) {
  nlohmann::ordered_json j;
  j["aoa_peaks"] = nlohmann::ordered_json::array();
  for (const auto& p : loc.aoa.peaks) {
    j["aoa_peaks"].push_back({{"azimuth_deg", p.coords[0] / kDeg}, {"elevation_deg", p.coords[1] / kDeg},
                              {"spectrum", p.value}});
  }
  j["distance_peak_to_median"] = nlohmann::ordered_json::array();
  for (const auto& d : loc.distance) j["distance_peak_to_median"].push_back(peak_to_median(d));
  j["estimates"] = nlohmann::ordered_json::array();
  for (const auto& e : loc.estimates) j["estimates"].push_back(estimate_json(e));
  j["assignment"] = rep.assignment;
  j["padded"] = loc.padded;
  return j;
}

inline void write_spectra(const SpectraRun& run, const ScenarioConfig& c, const std::filesystem::path& dir) {
  ensure_directory(dir);
  write_aoa_csv(dir / "aoa_bs.csv", run.sensing.bs.aoa);
  write_aoa_csv(dir / "aoa_wiretapper.csv", run.sensing.wiretapper.aoa);
  write_distance_csv(dir / "distance_bs.csv", run.sensing.bs);
  write_distance_csv(dir / "distance_wiretapper.csv", run.sensing.wiretapper);

  nlohmann::ordered_json peaks;
  peaks["truth"] = nlohmann::ordered_json::array();
  for (const auto& u : run.optimized.scene.users) peaks["truth"].push_back(estimate_json(to_estimate(u)));
  peaks["bs"] = party_json(run.sensing.bs, run.sensing.bs_report);
  peaks["wiretapper"] = party_json(run.sensing.wiretapper, run.sensing.wiretapper_report);
  write_json(dir / "peaks.json", peaks);
  write_run_metadata(dir, c, "spectra", run.seconds,
                     {{"optimizer_iterations", run.optimized.result.trace.iterations()},
                      {"final_projection", run.optimized.at_final.projection}});
}

// ---------------------------------------------------------------------------
// NMSE against transmit power

struct NmseTrialRecord {
  double power_dbm = 0.0;
  std::uint64_t trial = 0;
  SensingReport bs;
  SensingReport wiretapper;
  std::vector<double> wiretapper_distance_ptm;  // per estimate
};

struct NmseRow {
  double power_dbm = 0.0;
  std::string party;
  std::string parameter;
  double nmse = 0.0;
};

struct NmseSweep {
  std::vector<NmseTrialRecord> records;  // power-major, then trial
  std::vector<NmseRow> table;
  double seconds = 0.0;

  /// Table lookup; throws when the row is absent.
  double value(double power_dbm, const std::string& party, const std::string& parameter) const {
    for (const auto& r : table) {
      if (r.power_dbm == power_dbm && r.party == party && r.parameter == parameter) return r.nmse;
    }
    throw std::out_of_range("no NMSE row for " + party + "/" + parameter);
  }
};

inline NmseSweep run_nmse_sweep(const ScenarioConfig& c, int threads = 1) {
  Stopwatch clock;
  NmseSweep out;
  const std::size_t trials = static_cast<std::size_t>(c.trials);
  const std::size_t powers = c.power_sweep_dbm.size();
  out.records.resize(powers * trials);
  parallel_for(powers * trials, threads, [&](std::size_t idx) {
    const double p = c.power_sweep_dbm[idx / trials];
    const std::uint64_t t = idx % trials;
    const Scene s = make_scene(c, t, p);
    const OptimizeResult opt = optimize(s.channels, objective_config(c), optimizer_config(c, t));
    SensingOutcome so = sense(c, s, opt.phase);
    NmseTrialRecord& rec = out.records[idx];
    rec.power_dbm = p;
    rec.trial = t;
    rec.bs = std::move(so.bs_report);
    rec.wiretapper = std::move(so.wiretapper_report);
    for (const auto& d : so.wiretapper.distance) rec.wiretapper_distance_ptm.push_back(peak_to_median(d));
  });

  for (std::size_t ip = 0; ip < powers; ++ip) {
    std::vector<SensingReport> bs, wt;
    for (std::size_t t = 0; t < trials; ++t) {
      bs.push_back(out.records[ip * trials + t].bs);
      wt.push_back(out.records[ip * trials + t].wiretapper);
    }
    const double p = c.power_sweep_dbm[ip];
    for (const auto& [party, reports] : {std::pair{"bs", &bs}, std::pair{"wiretapper", &wt}}) {
      const NmseValues v = nmse(*reports);
      out.table.push_back({p, party, "azimuth", v.azimuth});
      out.table.push_back({p, party, "elevation", v.elevation});
      out.table.push_back({p, party, "distance", v.distance});
    }
  }
  out.seconds = clock.seconds();
  return out;
}

inline void write_nmse(const NmseSweep& sweep, const ScenarioConfig& c, const std::filesystem::path& dir) {
  ensure_directory(dir);
  {
    CsvWriter csv(dir / "nmse.csv", {"power_dbm", "party", "parameter", "nmse"});
    for (const auto& r : sweep.table) {
      csv.cell(r.power_dbm).cell(r.party).cell(r.parameter).cell(r.nmse);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "nmse_trials.csv",
                  {"power_dbm", "trial", "party", "user", "true_azimuth_rad", "true_elevation_rad",
                   "true_distance_m", "est_azimuth_rad", "est_elevation_rad", "est_distance_m"});
    for (const auto& rec : sweep.records) {
      for (const auto& [party, rep] : {std::pair{"bs", &rec.bs}, std::pair{"wiretapper", &rec.wiretapper}}) {
        for (std::size_t k = 0; k < rep->truth.size(); ++k) {
          const Estimate& t = rep->truth[k];
          const Estimate& e = rep->matched[k];
          csv.cell(rec.power_dbm).cell(static_cast<long long>(rec.trial)).cell(party).cell(k);
          csv.cell(t.phi).cell(t.theta).cell(t.r).cell(e.phi).cell(e.theta).cell(e.r);
          csv.end_row();
        }
      }
    }
  }
  nlohmann::ordered_json stats = nlohmann::ordered_json::array();
  for (const auto& r : sweep.table) {
    stats.push_back({{"power_dbm", r.power_dbm}, {"party", r.party}, {"parameter", r.parameter},
                     {"nmse_db", 10.0 * std::log10(std::max(r.nmse, 1e-300))}});
  }
  write_run_metadata(dir, c, "nmse", sweep.seconds, std::move(stats));
}

// ---------------------------------------------------------------------------
// Rate CDFs

struct RateStats {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double sum = 0.0;
};

inline RateStats rate_stats(const ChannelSet& ch, const PhaseVector& phase) {
  const auto rates = user_rates(ch, phase.values());
  RateStats s;
  s.max = *std::max_element(rates.begin(), rates.end());
  s.min = *std::min_element(rates.begin(), rates.end());
  for (double r : rates) s.sum += r;
  s.mean = s.sum / static_cast<double>(rates.size());
  return s;
}

struct RateTrialRecord {
  std::uint64_t trial = 0;
  RateStats optimized;
  RateStats random;
  RateStats identity;
};

struct RateCdf {
  std::vector<RateTrialRecord> records;
  double seconds = 0.0;
};

inline RateCdf run_rate_cdf(const ScenarioConfig& c, int threads = 1) {
  Stopwatch clock;
  RateCdf out;
  out.records.resize(static_cast<std::size_t>(c.trials));
  parallel_for(out.records.size(), threads, [&](std::size_t t) {
    const Scene s = make_scene(c, t);
    const OptimizeResult opt = optimize(s.channels, objective_config(c), optimizer_config(c, t));
    Rng baseline = make_rng(c.seed, t, Stream::RandomBaseline);
    const PhaseVector rnd = PhaseVector::random(s.geom.size(), baseline);
    out.records[t] = {t, rate_stats(s.channels, opt.phase), rate_stats(s.channels, rnd),
                      rate_stats(s.channels, PhaseVector::ones(s.geom.size()))};
  });
  out.seconds = clock.seconds();
  return out;
}

/// Sorted samples against i / n, i = 1..n.
inline std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) cdf.emplace_back(samples[i], static_cast<double>(i + 1) / n);
  return cdf;
}

inline const std::array<const char*, 3>& rate_configs() {
  static const std::array<const char*, 3> names{"optimized", "random", "identity"};
  return names;
}

inline const std::array<const char*, 3>& rate_statistics() {
  static const std::array<const char*, 3> names{"max", "min", "mean"};
  return names;
}

inline const RateStats& rate_of(const RateTrialRecord& r, std::size_t config) {
  return config == 0 ? r.optimized : config == 1 ? r.random : r.identity;
}

inline double stat_of(const RateStats& s, std::size_t stat) { return stat == 0 ? s.max : stat == 1 ? s.min : s.mean; }

inline void write_rate_cdf(const RateCdf& run, const ScenarioConfig& c, const std::filesystem::path& dir) {
  ensure_directory(dir);
  {
    CsvWriter csv(dir / "rate_trials.csv", {"trial", "config", "max_rate", "min_rate", "mean_rate", "sum_rate"});
    for (const auto& r : run.records) {
      for (std::size_t ic = 0; ic < 3; ++ic) {
        const RateStats& s = rate_of(r, ic);
        csv.cell(static_cast<long long>(r.trial)).cell(rate_configs()[ic]).cell(s.max).cell(s.min).cell(s.mean).cell(s.sum);
        csv.end_row();
      }
    }
  }
  nlohmann::ordered_json stats;
  for (std::size_t ic = 0; ic < 3; ++ic) {
    for (std::size_t is = 0; is < 3; ++is) {
      std::vector<double> samples;
      for (const auto& r : run.records) samples.push_back(stat_of(rate_of(r, ic), is));
      CsvWriter csv(dir / (std::string("cdf_") + rate_configs()[ic] + "_" + rate_statistics()[is] + ".csv"),
                    {"rate", "cdf"});
      for (const auto& [x, f] : empirical_cdf(samples)) {
        csv.cell(x).cell(f);
        csv.end_row();
      }
    }
    double mean_sum = 0.0;
    for (const auto& r : run.records) mean_sum += rate_of(r, ic).sum;
    stats[rate_configs()[ic]] = {{"mean_sum_rate", mean_sum / static_cast<double>(run.records.size())}};
  }
  write_run_metadata(dir, c, "rate-cdf", run.seconds, std::move(stats));
}

// ---------------------------------------------------------------------------
// Gradient diagnostic

/// Central differences of f in the real-pair embedding, returned in the
/// df/dx + j df/dy convention.
inline CVec finite_difference_gradient(const std::function<double(const CVec&)>& f, const CVec& x, double h) {
  CVec g(x.size());
  CVec probe = x;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const cd keep = probe(n);
    probe(n) = keep + h;
    const double fr_p = f(probe);
    probe(n) = keep - h;
    const double fr_m = f(probe);
    probe(n) = keep + cd(0.0, h);
    const double fi_p = f(probe);
    probe(n) = keep - cd(0.0, h);
    const double fi_m = f(probe);
    probe(n) = keep;
    g(n) = cd((fr_p - fr_m) / (2.0 * h), (fi_p - fi_m) / (2.0 * h));
  }
  return g;
}

inline double relative_error(const CVec& a, const CVec& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

struct GradCheckRecord {
  std::uint64_t instance = 0;
  double rho = 0.0;
  double rel_error_fixed = 0.0;  // against the frozen-combiner surrogate
  double rel_error_full = 0.0;   // against the true objective, diagnostic only
  double grad_norm = 0.0;
};

struct GradCheck {
  std::vector<GradCheckRecord> records;
  double seconds = 0.0;

  double worst_fixed() const {
    double w = 0.0;
    for (const auto& r : records) w = std::max(w, r.rel_error_fixed);
    return w;
  }
};

inline GradCheckRecord check_gradient(const ChannelSet& ch, const CVec& phase, const ObjectiveConfig& obj,
                                      double step = 1e-6) {
  const CVec analytic = gradient(ch, phase, obj);
  const CVec fixed = finite_difference_gradient(
      [&](const CVec& p) { return fixed_combiner_objective(ch, p, phase, obj); }, phase, step);
  const CVec full =
      finite_difference_gradient([&](const CVec& p) { return joint_objective(ch, p, obj); }, phase, step);
  GradCheckRecord r;
  r.rho = obj.rho;
  r.rel_error_fixed = relative_error(analytic, fixed);
  r.rel_error_full = relative_error(analytic, full);
  r.grad_norm = analytic.norm();
  return r;
}

/// Checks the configured scenario at a random phase per instance, for
/// rho in {0, 0.5, 1}.
inline GradCheck run_gradcheck(const ScenarioConfig& c) {
  Stopwatch clock;
  GradCheck out;
  for (int t = 0; t < c.trials; ++t) {
    const Scene s = make_scene(c, static_cast<std::uint64_t>(t));
    Rng rng = make_rng(c.seed, static_cast<std::uint64_t>(t), Stream::Instance);
    const PhaseVector phase = PhaseVector::random(s.geom.size(), rng);
    for (double rho : {0.0, 0.5, 1.0}) {
      ObjectiveConfig obj = objective_config(c);
      obj.rho = rho;
      GradCheckRecord r = check_gradient(s.channels, phase.values(), obj);
      r.instance = static_cast<std::uint64_t>(t);
      out.records.push_back(r);
    }
  }
  out.seconds = clock.seconds();
  return out;
}

inline void write_gradcheck(const GradCheck& run, const ScenarioConfig& c, const std::filesystem::path& dir) {
  ensure_directory(dir);
  CsvWriter csv(dir / "gradcheck.csv", {"instance", "rho", "rel_error_fixed", "rel_error_full", "grad_norm"});
  for (const auto& r : run.records) {
    csv.cell(static_cast<long long>(r.instance)).cell(r.rho).cell(r.rel_error_fixed).cell(r.rel_error_full).cell(r.grad_norm);
    csv.end_row();
  }
  write_run_metadata(dir, c, "gradcheck", run.seconds, {{"worst_rel_error_fixed", run.worst_fixed()}});
}

}  // namespace risocc
