// Command-line front end: run scenarios and analyse their output.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "exdyn/exdyn.hpp"

#ifndef EXDYN_PRESET_DIR
#define EXDYN_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace exdyn;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path resolve_scenario(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  const fs::path dir = EXDYN_PRESET_DIR;
  for (const fs::path& candidate : {dir / arg, dir / (arg + ".scn")})
    if (fs::exists(candidate)) return candidate;
  throw UsageError("no scenario file or preset named '" + arg + "' (see 'exdyn presets')");
}

std::pair<double, double> parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--window expects T1:T2");
  const auto a = parse_double(text.substr(0, colon));
  const auto b = parse_double(text.substr(colon + 1));
  if (!a || !b || !(*a <= *b)) throw UsageError("--window expects T1:T2 with T1 <= T2");
  return {*a, *b};
}

int cmd_run(const std::string& scenario_arg, const RunOptions& opts) {
  const Scenario s = load_scenario(resolve_scenario(scenario_arg).string());
  const RunReport report = run_scenario(s, opts);
  for (const auto& r : report.replicates) {
    std::cout << "replicate " << r.index << " seed " << r.seed << ": " << (r.ok ? "ok" : "FAILED");
    if (!r.trajectory_file.empty()) std::cout << "  " << (report.directory / r.trajectory_file).string();
    std::cout << '\n';
    if (!r.ok) std::cerr << "exdyn: replicate " << r.index << ": " << r.error << '\n';
  }
  std::cout << "manifest " << report.manifest.string() << '\n';
  return report.ok() ? 0 : 2;
}

int cmd_verdict(const std::vector<std::string>& files, VerdictThresholds th,
                const std::optional<std::string>& window, const std::optional<std::string>& out) {
  auto results = nlohmann::json::array();
  std::vector<std::string> labels;
  for (const auto& file : files) {
    const Trajectory traj = load_trajectory(file);
    if (traj.series.size() != 2) throw UsageError(file + ": verdict needs exactly two categories");
    std::vector<std::string> these{traj.series[0].label, traj.series[1].label};
    if (labels.empty()) labels = these;
    if (these != labels) throw UsageError(file + ": categories differ from " + files.front());
    const double end = traj.times.back();
    auto [t1, t2] = window ? parse_window(*window) : std::pair{0.5 * end, end};
    if (t1 < traj.times.front() - 1e-9 || t2 > end + 1e-9)
      throw UsageError(file + ": window lies outside the trajectory");
    const MergerVerdict v = merger_verdict(traj, t1, t2, th);
    std::printf("%s: %s  gap=%.6g  symmetry_defect=%.6g  drift=", file.c_str(), v.name().c_str(), v.gap,
                v.symmetry_defect);
    for (std::size_t k = 0; k < v.drift.size(); ++k) std::printf("%s%.6g", k ? "," : "", v.drift[k]);
    std::printf("  window=[%g,%g]\n", t1, t2);
    results.push_back({{"trajectory", file},
                       {"verdict", v.name()},
                       {"gap", v.gap},
                       {"symmetry_defect", v.symmetry_defect},
                       {"drift", v.drift},
                       {"window", {t1, t2}},
                       {"gap_threshold", th.gap},
                       {"drift_threshold", th.drift}});
  }
  fs::path target = out ? fs::path(*out) : fs::path(files.front()).replace_extension(".verdict.json");
  write_file_atomic(target, nlohmann::json{{"categories", labels}, {"results", results}}.dump(2) + "\n");
  std::cout << "verdict file " << target.string() << '\n';
  return 0;
}

int cmd_peaks(const std::vector<std::string>& files, double floor) {
  std::vector<std::vector<double>> fields;
  std::vector<std::size_t> shape;
  for (const auto& file : files) {
    Snapshot s = load_snapshot(file);
    if (s.kind != Snapshot::Kind::Field) throw UsageError(file + ": peaks needs field snapshots");
    if (shape.empty()) shape = s.n;
    if (s.n != shape) throw UsageError(file + ": grid differs from " + files.front());
    fields.push_back(std::move(s.values));
  }
  std::cout << count_peaks(fields, shape, floor) << '\n';
  return 0;
}

int cmd_compare(const std::string& a_file, const std::string& b_file, std::optional<double> at) {
  const Trajectory a = load_trajectory(a_file);
  const Trajectory b = load_trajectory(b_file);
  if (a.series.size() != b.series.size() || a.dim != b.dim)
    throw UsageError("trajectories have different categories or dimensions");
  for (std::size_t c = 0; c < a.series.size(); ++c)
    if (a.series[c].label != b.series[c].label) throw UsageError("category labels differ");
  const double t = at.value_or(std::min(a.times.back(), b.times.back()));
  std::printf("%-10s %10s %10s %12s %12s %12s\n", "category", "t_a", "t_b", "|d mean|", "|d disp|", "|d act|");
  for (const auto& d : compare_models(a, b, t))
    std::printf("%-10s %10g %10g %12.6g %12.6g %12.6g\n", d.label.c_str(), d.time_a, d.time_b, d.mean,
                d.dispersion, d.activation);
  return 0;
}

int cmd_presets() {
  const fs::path dir = EXDYN_PRESET_DIR;
  if (!fs::is_directory(dir)) throw Error("preset directory '" + dir.string() + "' is missing");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".scn") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const Scenario s = load_scenario(f.string());
    std::printf("%-16s %-8s %dD  %s\n", f.stem().c_str(), std::string(to_string(s.engine)).c_str(), s.dimension,
                s.description.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exdyn: exemplar and field simulations of category dynamics"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario file or shipped preset");
  std::string scenario;
  RunOptions opts;
  std::uint64_t seed = 0;
  std::string out_dir;
  run->add_option("scenario", scenario, "scenario file or preset name")->required();
  run->add_option("--replicates", opts.replicates, "independent exemplar runs")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "master seed (default: the scenario's)");
  auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides $EXDYN_OUT_DIR)");
  run->add_option("--jobs", opts.jobs, "replicates run in parallel")->check(CLI::PositiveNumber);

  auto* verdict = app.add_subcommand("verdict", "classify two categories as merged, distinct or drifting");
  std::vector<std::string> traj_files;
  VerdictThresholds th;
  std::string window;
  std::string verdict_out;
  verdict->add_option("trajectories", traj_files, "trajectory CSV files")->required()->check(CLI::ExistingFile);
  verdict->add_option("--gap", th.gap, "merger threshold on the time-averaged gap");
  verdict->add_option("--drift", th.drift, "threshold on the joint-mean displacement");
  auto* window_opt = verdict->add_option("--window", window, "T1:T2 (default: second half of the run)");
  auto* vout_opt = verdict->add_option("--out", verdict_out, "verdict JSON path");

  auto* peaks = app.add_subcommand("peaks", "count density peaks in field snapshots (summed)");
  std::vector<std::string> snap_files;
  double floor = 0.1;
  peaks->add_option("snapshots", snap_files, "field snapshot files")->required()->check(CLI::ExistingFile);
  peaks->add_option("--floor", floor, "ignore maxima below this fraction of the global maximum");

  auto* compare = app.add_subcommand("compare", "per-category differences between two trajectories");
  std::string traj_a, traj_b;
  double at = 0.0;
  compare->add_option("exemplar", traj_a, "exemplar trajectory")->required()->check(CLI::ExistingFile);
  compare->add_option("field", traj_b, "field trajectory")->required()->check(CLI::ExistingFile);
  auto* at_opt = compare->add_option("--at", at, "comparison time (default: last common time)");

  auto* presets = app.add_subcommand("presets", "list shipped scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      if (*seed_opt) opts.seed = seed;
      if (*out_opt) opts.out = out_dir;
      return cmd_run(scenario, opts);
    }
    if (*verdict)
      return cmd_verdict(traj_files, th, *window_opt ? std::optional(window) : std::nullopt,
                         *vout_opt ? std::optional(verdict_out) : std::nullopt);
    if (*peaks) return cmd_peaks(snap_files, floor);
    if (*compare) return cmd_compare(traj_a, traj_b, *at_opt ? std::optional(at) : std::nullopt);
    if (*presets) return cmd_presets();
  } catch (const UsageError& e) {
    std::cerr << "exdyn: " << e.what() << '\n';
    return 1;
  } catch (const ScenarioError& e) {
    std::cerr << "exdyn: " << e.what() << '\n';
    return 1;
  } catch (const InvalidParams& e) {
    std::cerr << "exdyn: " << e.what() << '\n';
    return 1;
  } catch (const ContractViolation& e) {
    std::cerr << "exdyn: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "exdyn: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
