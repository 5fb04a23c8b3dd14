// Command-line front end for the experiments.
//
//   risocc <spectra|nmse|rate-cdf|optimize|gradcheck> [--config f] [--seed s]
//          [--out dir] [--trials n] [--preset paper|desk] [--threads n]
//
// Errors go to stderr as one JSON object per line and the exit code is
// nonzero: 2 for usage/configuration problems, 1 for runtime failures.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "risocc/risocc.hpp"

namespace {

int report_error(const std::string& kind, const std::string& key, const std::string& message, int code) {
  nlohmann::ordered_json j{{"error", kind}, {"key", key}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return code;
}

struct Options {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> preset;
  std::string out;
  int threads = 1;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--trials", o.trials, "Monte-Carlo trials");
  cmd->add_option("--preset", o.preset, "paper or desk defaults");
  cmd->add_option("--threads", o.threads, "worker threads for trial loops")->check(CLI::PositiveNumber);
}

int run(const std::string& name, Options& o) {
  using namespace risocc;
  const ScenarioConfig c = parse_config(o.config_path, {o.preset, o.seed, o.trials});
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path("results") / name : std::filesystem::path(o.out);
  ensure_directory(dir);

  if (name == "spectra") {
    const auto r = run_spectra(c);
    write_spectra(r, c, dir);
    std::printf("spectra: %zu users, bs estimates %zu, wiretapper estimates %zu -> %s\n", r.optimized.scene.users.size(),
                r.sensing.bs.estimates.size(), r.sensing.wiretapper.estimates.size(), dir.c_str());
  } else if (name == "nmse") {
    const auto r = run_nmse_sweep(c, o.threads);
    write_nmse(r, c, dir);
    for (const auto& row : r.table) {
      std::printf("%8.2f dBm  %-10s %-9s %9.3f dB\n", row.power_dbm, row.party.c_str(), row.parameter.c_str(),
                  10.0 * std::log10(std::max(row.nmse, 1e-300)));
    }
  } else if (name == "rate-cdf") {
    const auto r = run_rate_cdf(c, o.threads);
    write_rate_cdf(r, c, dir);
    for (std::size_t ic = 0; ic < 3; ++ic) {
      double s = 0.0;
      for (const auto& rec : r.records) s += rate_of(rec, ic).sum;
      std::printf("%-10s mean sum rate %.4f bit/s/Hz\n", rate_configs()[ic], s / static_cast<double>(r.records.size()));
    }
  } else if (name == "optimize") {
    const auto r = run_optimize(c);
    write_optimize(r, c, dir);
    const auto& t = r.result.trace;
    std::printf("optimize: %d iterations, objective %.6g -> %.6g, converged=%d stalled=%d\n", t.iterations(),
                t.initial_objective(), t.final_objective(), t.converged ? 1 : 0, t.stalled ? 1 : 0);
  } else if (name == "gradcheck") {
    const auto r = run_gradcheck(c);
    write_gradcheck(r, c, dir);
    std::printf("gradcheck: %zu checks, worst relative error %.3e\n", r.records.size(), r.worst_fixed());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-assisted secure sensing and communication experiments"};
  app.require_subcommand(1);
  Options opts;
  const std::pair<const char*, const char*> commands[] = {
      {"spectra", "MUSIC angle and distance spectra for one scene, BS and wiretapper"},
      {"nmse", "localization NMSE versus transmit power"},
      {"rate-cdf", "per-user rate CDFs: optimized, random and identity RIS phases"},
      {"optimize", "run the manifold optimizer on one scene and write its trace"},
      {"gradcheck", "compare the analytic gradient with finite differences"},
  };
  for (const auto& [name, about] : commands) add_common(app.add_subcommand(name, about), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", "", e.what(), 2);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run(name, opts);
  } catch (const risocc::ConfigError& e) {
    return report_error(std::string("config.") + risocc::to_string(e.kind()), e.key(), e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("runtime", "", e.what(), 1);
  }
}
