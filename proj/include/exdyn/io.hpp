#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "exdyn/errors.hpp"
#include "exdyn/scenario.hpp"
#include "exdyn/trajectory.hpp"

namespace exdyn {

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<unsigned long long> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) +
         "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Trajectory CSV
//
// Columns: time, then for each category in order
//   <label>.mean (1D) or <label>.mean.x, <label>.mean.y (2D),
//   <label>.dispersion, <label>.activation, <label>.count
// Extinct categories carry "nan" means and dispersions.

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "time";
  for (const auto& s : traj.series) {
    if (traj.dim == 1)
      out += "," + s.label + ".mean";
    else
      out += "," + s.label + ".mean.x," + s.label + ".mean.y";
    out += "," + s.label + ".dispersion," + s.label + ".activation," + s.label + ".count";
  }
  out += '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out += format_double(traj.times[i]);
    for (const auto& s : traj.series) {
      for (int k = 0; k < traj.dim; ++k) out += "," + format_double(s.mean[i * traj.dim + k]);
      out += "," + format_double(s.dispersion[i]);
      out += "," + format_double(s.activation[i]);
      out += "," + std::to_string(s.live_count[i]);
    }
    out += '\n';
  }
  return out;
}

inline Trajectory parse_trajectory_csv(const std::string& text, const std::string& source = "trajectory") {
  std::istringstream in(text);
  std::string line;
  auto bad = [&](const std::string& why, std::size_t line_no) {
    throw Error(source + ": line " + std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(in, line)) bad("empty file", 1);
  const auto header = detail::split_list(line);
  if (header.empty() || header[0] != "time") bad("header must start with 'time'", 1);

  Trajectory traj;
  traj.dim = 0;
  std::size_t col = 1;
  while (col < header.size()) {
    const auto& h = header[col];
    const auto dot = h.find('.');
    if (dot == std::string::npos) bad("unexpected column '" + h + "'", 1);
    const std::string label = h.substr(0, dot);
    int dim = 0;
    while (col + dim < header.size() && header[col + dim].rfind(label + ".mean", 0) == 0) ++dim;
    if (dim != 1 && dim != 2) bad("category '" + label + "' needs 1 or 2 mean columns", 1);
    if (traj.dim != 0 && traj.dim != dim) bad("categories disagree on dimension", 1);
    traj.dim = dim;
    const std::vector<std::string> rest{label + ".dispersion", label + ".activation", label + ".count"};
    for (std::size_t k = 0; k < rest.size(); ++k)
      if (col + dim + k >= header.size() || header[col + dim + k] != rest[k])
        bad("expected column '" + rest[k] + "'", 1);
    traj.series.push_back({label, {}, {}, {}, {}});
    col += dim + 3;
  }
  if (traj.series.empty()) bad("no categories in header", 1);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = detail::split_list(line);
    if (cells.size() != header.size()) bad("expected " + std::to_string(header.size()) + " columns", line_no);
    auto num = [&](std::size_t j) {
      auto v = parse_double(cells[j]);
      if (!v) bad("not a number: '" + cells[j] + "'", line_no);
      return *v;
    };
    const double t = num(0);
    if (!traj.times.empty() && !(t > traj.times.back())) bad("times must increase", line_no);
    traj.times.push_back(t);
    std::size_t j = 1;
    for (auto& s : traj.series) {
      for (int k = 0; k < traj.dim; ++k) s.mean.push_back(num(j++));
      s.dispersion.push_back(num(j++));
      s.activation.push_back(num(j++));
      s.live_count.push_back(static_cast<long long>(num(j++)));
    }
  }
  if (traj.times.empty()) bad("no samples", line_no);
  return traj;
}

inline Trajectory load_trajectory(const std::filesystem::path& path) {
  return parse_trajectory_csv(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Snapshots
//
// Exemplar snapshot: CSV with header "category,x,weight" (1D) or
// "category,x,y,weight" (2D); one row per live exemplar, weight at the
// snapshot time. A leading "# time <t>" comment records the time.
//
// Field snapshot:
//   # exdyn field snapshot
//   dimension <d>
//   extent <lo_1> <hi_1> [<lo_2> <hi_2>]
//   points <n_1> [<n_2>]
//   time <t>
//   category <label>
//   values
//   <one node value per line, row-major, last axis fastest>

inline std::string snapshot_text(const Snapshot& s) {
  std::string out;
  if (s.kind == Snapshot::Kind::Exemplars) {
    out += "# time " + format_double(s.time) + "\n";
    out += s.dim == 1 ? "category,x,weight\n" : "category,x,y,weight\n";
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
      out += s.label;
      for (int k = 0; k < s.dim; ++k) out += "," + format_double(s.positions[i * s.dim + k]);
      out += "," + format_double(s.weights[i]) + "\n";
    }
    return out;
  }
  out += "# exdyn field snapshot\n";
  out += "dimension " + std::to_string(s.dim) + "\n";
  out += "extent";
  for (int k = 0; k < s.dim; ++k) out += " " + format_double(s.lo[k]) + " " + format_double(s.hi[k]);
  out += "\npoints";
  for (int k = 0; k < s.dim; ++k) out += " " + std::to_string(s.n[k]);
  out += "\ntime " + format_double(s.time) + "\n";
  out += "category " + s.label + "\n";
  out += "values\n";
  for (double v : s.values) out += format_double(v) + "\n";
  return out;
}

inline Snapshot parse_snapshot(const std::string& text, const std::string& source = "snapshot") {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    throw Error(source + ": line " + std::to_string(line_no) + ": " + why);
  };
  auto next = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };
  auto num = [&](const std::string& cell) {
    auto v = parse_double(cell);
    if (!v) bad("not a number: '" + cell + "'");
    return *v;
  };
  if (!next()) bad("empty file");

  Snapshot s;
  if (trim(line) == "# exdyn field snapshot") {
    s.kind = Snapshot::Kind::Field;
    auto keyed = [&](const std::string& key) {
      if (!next()) bad("missing '" + key + "'");
      auto parts = detail::split_list(line);
      if (parts.empty() || parts[0] != key) bad("expected '" + key + "'");
      parts.erase(parts.begin());
      return parts;
    };
    auto d = keyed("dimension");
    if (d.size() != 1 || (d[0] != "1" && d[0] != "2")) bad("dimension must be 1 or 2");
    s.dim = d[0] == "1" ? 1 : 2;
    auto ext = keyed("extent");
    if (ext.size() != static_cast<std::size_t>(2 * s.dim)) bad("extent needs lo and hi per axis");
    for (int k = 0; k < s.dim; ++k) {
      s.lo.push_back(num(ext[2 * k]));
      s.hi.push_back(num(ext[2 * k + 1]));
    }
    auto pts = keyed("points");
    if (pts.size() != static_cast<std::size_t>(s.dim)) bad("points needs one count per axis");
    std::size_t total = 1;
    for (const auto& p : pts) {
      s.n.push_back(static_cast<std::size_t>(num(p)));
      total *= s.n.back();
    }
    auto t = keyed("time");
    if (t.size() != 1) bad("time needs one value");
    s.time = num(t[0]);
    auto c = keyed("category");
    if (c.size() != 1) bad("category needs one label");
    s.label = c[0];
    keyed("values");
    s.values.reserve(total);
    while (next()) s.values.push_back(num(trim(line)));
    if (s.values.size() != total) bad("expected " + std::to_string(total) + " values");
    return s;
  }

  s.kind = Snapshot::Kind::Exemplars;
  if (line.rfind("# time", 0) == 0) {
    s.time = num(trim(std::string_view(line).substr(6)));
    if (!next()) bad("missing header");
  }
  const auto header = detail::split_list(line);
  if (header == std::vector<std::string>{"category", "x", "weight"})
    s.dim = 1;
  else if (header == std::vector<std::string>{"category", "x", "y", "weight"})
    s.dim = 2;
  else
    bad("unrecognized snapshot header");
  while (next()) {
    const auto cells = detail::split_list(line);
    if (cells.size() != header.size()) bad("wrong number of columns");
    if (s.label.empty()) s.label = cells[0];
    if (cells[0] != s.label) bad("snapshot mixes categories");
    for (int k = 0; k < s.dim; ++k) s.positions.push_back(num(cells[1 + k]));
    s.weights.push_back(num(cells.back()));
  }
  return s;
}

inline Snapshot load_snapshot(const std::filesystem::path& path) {
  return parse_snapshot(read_file(path), path.string());
}

}  // namespace exdyn
