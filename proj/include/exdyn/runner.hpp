#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "exdyn/exemplar_engine.hpp"
#include "exdyn/field_engine.hpp"
#include "exdyn/io.hpp"
#include "exdyn/rng.hpp"
#include "exdyn/scenario.hpp"

namespace exdyn {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "EXDYN_OUT_DIR";

struct RunOptions {
  std::size_t replicates = 1;
  std::optional<std::uint64_t> seed;        // overrides the scenario's master seed
  std::optional<std::filesystem::path> out; // overrides every other output setting
  std::size_t jobs = 1;
};

struct ReplicateResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::string trajectory_file;
  std::vector<std::string> snapshot_files;
  Trajectory trajectory;
};

struct RunReport {
  std::filesystem::path directory;
  std::filesystem::path manifest;
  std::uint64_t master_seed = 0;
  std::vector<ReplicateResult> replicates;

  bool ok() const {
    for (const auto& r : replicates)
      if (!r.ok) return false;
    return true;
  }
};

/// --out, then $EXDYN_OUT_DIR, then the scenario's `output`, then ./out.
inline std::filesystem::path resolve_output_dir(const Scenario& s, const RunOptions& opts) {
  if (opts.out) return *opts.out;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  if (!s.output.empty()) return s.output;
  return "out";
}

namespace detail {

template <int D>
PhonPoint<D> to_point(const std::vector<double>& v) {
  PhonPoint<D> p{};
  for (int k = 0; k < D; ++k) p[k] = v.at(k);
  return p;
}

inline RunConfig run_config(const Scenario& s) { return {s.horizon, s.sample_interval, s.snapshot_times}; }

template <int D>
Trajectory run_exemplar(const Scenario& s, std::uint64_t seed, Trajectory* partial) {
  ExemplarEngine<D> eng(s.params, s.labels(), seed);
  eng.prune_every = s.prune_every;
  for (std::size_t c = 0; c < s.categories.size(); ++c) {
    const auto& cat = s.categories[c];
    eng.seed_category(c, to_point<D>(cat.position), cat.count, cat.weight);
  }
  try {
    return eng.run(run_config(s));
  } catch (...) {
    if (partial) *partial = eng.trajectory();
    throw;
  }
}

template <int D>
Trajectory run_field(const Scenario& s, std::uint64_t seed, Trajectory* partial) {
  Grid<D> g;
  for (int k = 0; k < D; ++k) {
    g.lo[k] = s.grid.lo.at(k);
    g.hi[k] = s.grid.hi.at(k);
    g.n[k] = s.grid.n.at(k);
  }
  FieldEngine<D> eng(s.params, s.labels(), g, {s.grid.dt, s.grid.method});
  for (std::size_t c = 0; c < s.categories.size(); ++c) {
    const auto& cat = s.categories[c];
    const double mass = static_cast<double>(cat.count) * s.initial_weight(cat);
    if (mass <= 0) continue;
    if (cat.width > 0)
      eng.seed_gaussian(c, to_point<D>(cat.position), mass, cat.width);
    else
      eng.seed_point(c, to_point<D>(cat.position), mass);
  }
  if (s.grid.perturbation > 0) {
    Rng rng(seed);
    for (std::size_t c = 0; c < s.categories.size(); ++c) {
      auto v = eng.values(c);
      for (double& x : v) x *= 1.0 + s.grid.perturbation * (2.0 * uniform01(rng) - 1.0);
      eng.set_values(c, v);
    }
  }
  try {
    return eng.integrate(run_config(s));
  } catch (...) {
    if (partial) *partial = eng.trajectory();
    throw;
  }
}

inline std::string snapshot_file_name(const std::string& base, const Snapshot& snap) {
  const std::string ext = snap.kind == Snapshot::Kind::Field ? ".field.txt" : ".snap.csv";
  return base + "." + snap.label + ".t" + format_double(snap.time) + ext;
}

inline nlohmann::json diagnostics_json(const Trajectory& t) {
  auto out = nlohmann::json::array();
  for (const auto& d : t.diagnostics)
    out.push_back({{"category", d.label},
                   {"produced", d.produced},
                   {"accepted", d.accepted},
                   {"discarded", d.discarded},
                   {"skipped", d.skipped},
                   {"all_zero", d.all_zero},
                   {"pruned", d.pruned},
                   {"pruned_weight", d.pruned_weight},
                   {"prune_error_bound", d.prune_error_bound},
                   {"leaked_mass", d.leaked_mass},
                   {"clipped_mass", d.clipped_mass}});
  return out;
}

}  // namespace detail

/// One engine run of the scenario. Exemplar runs draw every event from
/// `seed`; field runs use it only for the optional initial perturbation. On failure, `partial` (if given)
/// receives whatever was recorded before the error.
inline Trajectory run_replicate(const Scenario& s, std::uint64_t seed, Trajectory* partial = nullptr) {
  if (s.engine == EngineKind::Exemplar)
    return s.dimension == 1 ? detail::run_exemplar<1>(s, seed, partial)
                            : detail::run_exemplar<2>(s, seed, partial);
  return s.dimension == 1 ? detail::run_field<1>(s, seed, partial) : detail::run_field<2>(s, seed, partial);
}

/// Runs every replicate, writes trajectories, snapshots and a manifest.
/// Replicate k uses replicate_seed(master, k), so its output does not depend
/// on how replicates are scheduled across jobs. Engine failures are recorded
/// in the manifest with partial output kept; configuration problems throw
/// ScenarioError before anything runs.
inline RunReport run_scenario(const Scenario& s, const RunOptions& opts = {}) {
  s.validate();
  if (opts.replicates == 0) throw ScenarioError("replicates must be >= 1");
  if (opts.jobs == 0) throw ScenarioError("jobs must be >= 1");
  if (s.engine == EngineKind::Field && opts.replicates > 1)
    throw ScenarioError("the field engine is deterministic; run it with one replicate");

  RunReport report;
  report.directory = resolve_output_dir(s, opts);
  report.master_seed = opts.seed.value_or(s.seed);
  std::error_code ec;
  std::filesystem::create_directories(report.directory, ec);
  if (ec) throw Error("cannot create output directory '" + report.directory.string() + "': " + ec.message());

  report.replicates.resize(opts.replicates);
  for (std::size_t k = 0; k < opts.replicates; ++k) {
    report.replicates[k].index = k;
    report.replicates[k].seed = replicate_seed(report.master_seed, k);
  }

  auto execute = [&](ReplicateResult& r) {
    const std::string base =
        s.engine == EngineKind::Exemplar ? s.name + ".r" + std::to_string(r.index) : s.name;
    try {
      r.trajectory = run_replicate(s, r.seed, &r.trajectory);
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
      if (const auto* f = dynamic_cast<const IntegrationFailure*>(&e)) r.error += " (" + f->diagnostic + ")";
    }
    try {
      if (!r.trajectory.series.empty()) {
        r.trajectory_file = base + ".traj.csv";
        write_file_atomic(report.directory / r.trajectory_file, trajectory_csv(r.trajectory));
      }
      for (const auto& snap : r.trajectory.snapshots) {
        r.snapshot_files.push_back(detail::snapshot_file_name(base, snap));
        write_file_atomic(report.directory / r.snapshot_files.back(), snapshot_text(snap));
      }
    } catch (const std::exception& e) {
      r.ok = false;
      r.error += (r.error.empty() ? "" : "; ") + std::string(e.what());
    }
  };

  const std::size_t workers = std::min(opts.jobs, opts.replicates);
  if (workers <= 1) {
    for (auto& r : report.replicates) execute(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < report.replicates.size(); k = next++) execute(report.replicates[k]);
      });
  }

  nlohmann::json m;
  m["tool"] = "exdyn";
  m["version"] = kVersion;
  m["name"] = s.name;
  m["engine"] = std::string(to_string(s.engine));
  m["dimension"] = s.dimension;
  m["scenario"] = write_scenario(s);
  m["master_seed"] = report.master_seed;
  m["seed_rule"] = "mix64(master ^ mix64(k)), SplitMix64 finalizer; std::mt19937_64 stream";
  m["status"] = report.ok() ? "ok" : "failed";
  auto reps = nlohmann::json::array();
  for (const auto& r : report.replicates) {
    nlohmann::json j;
    j["index"] = r.index;
    j["seed"] = r.seed;
    j["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) j["error"] = r.error;
    j["trajectory"] = r.trajectory_file;
    j["snapshots"] = r.snapshot_files;
    j["terminated_early"] = r.trajectory.terminated_early;
    auto ext = nlohmann::json::array();
    for (const auto& e : r.trajectory.extinctions) ext.push_back({{"category", e.label}, {"time", e.time}});
    j["extinctions"] = ext;
    j["diagnostics"] = detail::diagnostics_json(r.trajectory);
    reps.push_back(j);
  }
  m["replicates"] = reps;
  report.manifest = report.directory / (s.name + ".manifest.json");
  write_file_atomic(report.manifest, m.dump(2) + "\n");
  return report;
}

/// Re-executes replicate k of a finished run from its manifest alone.
inline Trajectory rerun_from_manifest(const std::filesystem::path& manifest, std::size_t k) {
  const auto m = nlohmann::json::parse(read_file(manifest));
  const Scenario s = parse_scenario(m.at("scenario").get<std::string>());
  const auto& rep = m.at("replicates").at(k);
  return run_replicate(s, rep.at("seed").get<std::uint64_t>());
}

}  // namespace exdyn
