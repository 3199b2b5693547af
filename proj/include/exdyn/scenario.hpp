#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "exdyn/convolution.hpp"
#include "exdyn/errors.hpp"
#include "exdyn/model.hpp"

namespace exdyn {

enum class EngineKind { Exemplar, Field };

inline std::string_view to_string(EngineKind e) { return e == EngineKind::Exemplar ? "exemplar" : "field"; }

inline std::string_view to_string(ConvolutionMethod m) {
  switch (m) {
    case ConvolutionMethod::Auto: return "auto";
    case ConvolutionMethod::Direct: return "direct";
    case ConvolutionMethod::Fft: return "fft";
  }
  return "?";
}

struct CategorySpec {
  std::string label;
  std::vector<double> position;
  std::size_t count = 50;         // initial exemplars (field: initial mass = count * weight)
  std::optional<double> weight;   // base weight of initial exemplars; w0 when absent
  double width = 0.0;             // field only: Gaussian width of the initial bump, 0 = point mass

  bool operator==(const CategorySpec&) const = default;
};

struct GridSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<std::size_t> n;
  double dt = 0.01;
  ConvolutionMethod method = ConvolutionMethod::Auto;
  // Relative amplitude of seeded multiplicative noise on the initial field.
  // Symmetric initial conditions stay exactly symmetric without it.
  double perturbation = 0.0;

  bool operator==(const GridSpec&) const = default;
};

/// One experiment: engine, parameters, initial categories and schedule.
/// Category production rates live in params.rates, in category order.
struct Scenario {
  std::string name = "scenario";
  std::string description;
  EngineKind engine = EngineKind::Exemplar;
  int dimension = 1;
  ModelParams params;
  std::vector<CategorySpec> categories;
  double horizon = 100.0;
  double sample_interval = 1.0;
  std::vector<double> snapshot_times;
  GridSpec grid;
  std::uint64_t seed = 1;
  std::size_t prune_every = 256;
  std::string output;

  bool operator==(const Scenario&) const = default;

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& c : categories) out.push_back(c.label);
    return out;
  }

  double initial_weight(const CategorySpec& c) const { return c.weight.value_or(params.w0); }

  void validate() const;
};

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_double(std::string_view s) {
  const std::string t = trim(s);
  if (t == "nan") return std::nan("");
  if (t == "inf") return HUGE_VAL;
  if (t == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  auto res = std::from_chars(first, t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

inline bool valid_label(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

namespace detail {

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

class ScenarioParser {
 public:
  explicit ScenarioParser(std::size_t line) : line_(line) {}

  double number(const std::string& v, const std::string& key) const {
    auto d = parse_double(v);
    if (!d) throw ScenarioError("'" + key + "' expects a number, got '" + v + "'", line_);
    return *d;
  }
  std::vector<double> numbers(const std::string& v, const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(number(item, key));
    return out;
  }
  std::uint64_t unsigned_int(const std::string& v, const std::string& key) const {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
      throw ScenarioError("'" + key + "' expects a non-negative integer, got '" + v + "'", line_);
    return out;
  }
  std::vector<std::size_t> unsigned_ints(const std::string& v, const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(v)) out.push_back(unsigned_int(item, key));
    return out;
  }
  [[noreturn]] void unknown(const std::string& key, const std::string& section) const {
    throw ScenarioError("unknown key '" + key + "' in " + section, line_);
  }

 private:
  std::size_t line_;
};

}  // namespace detail

/// Parses the line-oriented scenario format:
///
///   # comment
///   name = fig1
///   engine = exemplar | field
///   dimension = 1
///   horizon = 20
///   sample_interval = 0.1
///   snapshot_times = 0 10 20
///   seed = 1
///
///   [params]
///   lambda = 1          w0 = 0.01       alpha = 0      beta = 0.1
///   sigma = 1           kappa = 10      p = 1          prune_ratio = 0.001
///   regime = no_competition | pure_competition | discards
///   all_zero = accept_source | discard
///
///   [grid]              (field engine)
///   lo = -25            hi = 35         n = 1024       dt = 0.01
///   convolution = auto | direct | fft
///   perturbation = 0    (seeded relative noise on the initial field)
///
///   [category A]        (one section per category, in order)
///   rate = 100          position = 10   count = 100
///   weight = 0.01       width = 0
///
/// Each key sits on its own line. Missing keys take the defaults of
/// Scenario; the result is validated before it is returned.
inline Scenario parse_scenario(std::istream& in) {
  Scenario s;
  s.params.rates.clear();
  enum class Section { Top, Params, Grid, Category } section = Section::Top;
  std::string raw;
  std::size_t line_no = 0;
  bool saw_grid = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    detail::ScenarioParser p(line_no);

    if (line.front() == '[') {
      if (line.back() != ']') throw ScenarioError("unterminated section header", line_no);
      const std::string head = trim(std::string_view(line).substr(1, line.size() - 2));
      if (head == "params") {
        section = Section::Params;
      } else if (head == "grid") {
        section = Section::Grid;
        saw_grid = true;
      } else if (head.rfind("category", 0) == 0) {
        const std::string label = trim(std::string_view(head).substr(8));
        if (!valid_label(label))
          throw ScenarioError("category label must be letters, digits, '_' or '-'", line_no);
        for (const auto& c : s.categories)
          if (c.label == label) throw ScenarioError("duplicate category '" + label + "'", line_no);
        section = Section::Category;
        s.categories.push_back({});
        s.categories.back().label = label;
        s.params.rates.push_back(0.0);
      } else {
        throw ScenarioError("unknown section [" + head + "]", line_no);
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ScenarioError("expected 'key = value'", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.empty()) throw ScenarioError("missing value for '" + key + "'", line_no);

    switch (section) {
      case Section::Top:
        if (key == "name") {
          s.name = value;
        } else if (key == "description") {
          s.description = value;
        } else if (key == "engine") {
          if (value == "exemplar") s.engine = EngineKind::Exemplar;
          else if (value == "field") s.engine = EngineKind::Field;
          else throw ScenarioError("engine must be 'exemplar' or 'field'", line_no);
        } else if (key == "dimension") {
          s.dimension = static_cast<int>(p.unsigned_int(value, key));
        } else if (key == "horizon") {
          s.horizon = p.number(value, key);
        } else if (key == "sample_interval") {
          s.sample_interval = p.number(value, key);
        } else if (key == "snapshot_times") {
          s.snapshot_times = p.numbers(value, key);
        } else if (key == "seed") {
          s.seed = p.unsigned_int(value, key);
        } else if (key == "prune_every") {
          s.prune_every = p.unsigned_int(value, key);
        } else if (key == "output") {
          s.output = value;
        } else {
          p.unknown(key, "the top level");
        }
        break;
      case Section::Params: {
        auto& m = s.params;
        if (key == "lambda") m.lambda = p.number(value, key);
        else if (key == "w0") m.w0 = p.number(value, key);
        else if (key == "alpha") m.alpha = p.number(value, key);
        else if (key == "beta") m.beta = p.number(value, key);
        else if (key == "sigma") m.sigma = p.number(value, key);
        else if (key == "kappa") m.kappa = p.number(value, key);
        else if (key == "p") m.p = p.number(value, key);
        else if (key == "prune_ratio") m.prune_ratio = p.number(value, key);
        else if (key == "regime") {
          if (value == "no_competition") m.regime = Regime::NoCompetition;
          else if (value == "pure_competition") m.regime = Regime::PureCompetition;
          else if (value == "discards") m.regime = Regime::CompetitionWithDiscards;
          else throw ScenarioError("regime must be no_competition, pure_competition or discards", line_no);
        } else if (key == "all_zero") {
          if (value == "accept_source") m.all_zero = AllZeroPolicy::AcceptSource;
          else if (value == "discard") m.all_zero = AllZeroPolicy::Discard;
          else throw ScenarioError("all_zero must be accept_source or discard", line_no);
        } else {
          p.unknown(key, "[params]");
        }
        break;
      }
      case Section::Grid: {
        auto& g = s.grid;
        if (key == "lo") g.lo = p.numbers(value, key);
        else if (key == "hi") g.hi = p.numbers(value, key);
        else if (key == "n") g.n = p.unsigned_ints(value, key);
        else if (key == "dt") g.dt = p.number(value, key);
        else if (key == "perturbation") g.perturbation = p.number(value, key);
        else if (key == "convolution") {
          if (value == "auto") g.method = ConvolutionMethod::Auto;
          else if (value == "direct") g.method = ConvolutionMethod::Direct;
          else if (value == "fft") g.method = ConvolutionMethod::Fft;
          else throw ScenarioError("convolution must be auto, direct or fft", line_no);
        } else {
          p.unknown(key, "[grid]");
        }
        break;
      }
      case Section::Category: {
        auto& c = s.categories.back();
        if (key == "rate") s.params.rates.back() = p.number(value, key);
        else if (key == "position") c.position = p.numbers(value, key);
        else if (key == "count") c.count = p.unsigned_int(value, key);
        else if (key == "weight") c.weight = p.number(value, key);
        else if (key == "width") c.width = p.number(value, key);
        else p.unknown(key, "[category " + c.label + "]");
        break;
      }
    }
  }
  if (s.engine == EngineKind::Field && !saw_grid)
    throw ScenarioError("field scenarios need a [grid] section");
  s.validate();
  return s;
}

inline Scenario parse_scenario(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  try {
    return parse_scenario(in);
  } catch (const ScenarioError& e) {
    throw ScenarioError(path + ": " + e.what());
  } catch (const InvalidParams& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

/// Canonical text form; parse_scenario(write_scenario(s)) == s.
inline std::string write_scenario(const Scenario& s) {
  std::ostringstream os;
  auto list = [](const auto& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ' ';
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v[i])>>)
        out += format_double(v[i]);
      else
        out += std::to_string(v[i]);
    }
    return out;
  };
  os << "name = " << s.name << '\n';
  if (!s.description.empty()) os << "description = " << s.description << '\n';
  os << "engine = " << to_string(s.engine) << '\n';
  os << "dimension = " << s.dimension << '\n';
  os << "horizon = " << format_double(s.horizon) << '\n';
  os << "sample_interval = " << format_double(s.sample_interval) << '\n';
  if (!s.snapshot_times.empty()) os << "snapshot_times = " << list(s.snapshot_times) << '\n';
  os << "seed = " << s.seed << '\n';
  os << "prune_every = " << s.prune_every << '\n';
  if (!s.output.empty()) os << "output = " << s.output << '\n';

  const auto& m = s.params;
  os << "\n[params]\n";
  os << "lambda = " << format_double(m.lambda) << '\n';
  os << "w0 = " << format_double(m.w0) << '\n';
  os << "alpha = " << format_double(m.alpha) << '\n';
  os << "beta = " << format_double(m.beta) << '\n';
  os << "sigma = " << format_double(m.sigma) << '\n';
  os << "kappa = " << format_double(m.kappa) << '\n';
  os << "p = " << format_double(m.p) << '\n';
  os << "prune_ratio = " << format_double(m.prune_ratio) << '\n';
  os << "regime = " << to_string(m.regime) << '\n';
  os << "all_zero = " << to_string(m.all_zero) << '\n';

  if (s.engine == EngineKind::Field) {
    const auto& g = s.grid;
    os << "\n[grid]\n";
    os << "lo = " << list(g.lo) << '\n';
    os << "hi = " << list(g.hi) << '\n';
    os << "n = " << list(g.n) << '\n';
    os << "dt = " << format_double(g.dt) << '\n';
    os << "convolution = " << to_string(g.method) << '\n';
    if (g.perturbation != 0.0) os << "perturbation = " << format_double(g.perturbation) << '\n';
  }

  for (std::size_t c = 0; c < s.categories.size(); ++c) {
    const auto& cat = s.categories[c];
    os << "\n[category " << cat.label << "]\n";
    os << "rate = " << format_double(m.rates.at(c)) << '\n';
    os << "position = " << list(cat.position) << '\n';
    os << "count = " << cat.count << '\n';
    if (cat.weight) os << "weight = " << format_double(*cat.weight) << '\n';
    if (cat.width != 0.0 || s.engine == EngineKind::Field) os << "width = " << format_double(cat.width) << '\n';
  }
  return os.str();
}

inline void Scenario::validate() const {
  auto fail = [](const std::string& m) { throw ScenarioError(m); };
  if (!valid_label(name)) fail("name must be letters, digits, '_' or '-'");
  if (description.find('\n') != std::string::npos) fail("description must be a single line");
  if (dimension != 1 && dimension != 2) fail("dimension must be 1 or 2");
  if (categories.empty()) fail("at least one [category] section is required");
  if (params.rates.size() != categories.size()) fail("every category needs a rate");
  try {
    params.validate();
  } catch (const InvalidParams& e) {
    fail(e.what());
  }
  if (!(horizon >= 0) || !std::isfinite(horizon)) fail("horizon must be >= 0");
  if (!(sample_interval > 0)) fail("sample_interval must be > 0");
  for (double t : snapshot_times)
    if (!(t >= 0 && t <= horizon)) fail("snapshot_times must lie in [0, horizon]");
  if (prune_every == 0) fail("prune_every must be >= 1");

  std::size_t total = 0;
  for (const auto& c : categories) {
    if (c.position.size() != static_cast<std::size_t>(dimension))
      fail("category '" + c.label + "': position needs " + std::to_string(dimension) + " coordinate(s)");
    for (double x : c.position)
      if (!std::isfinite(x)) fail("category '" + c.label + "': position must be finite");
    if (c.weight && !(*c.weight > 0)) fail("category '" + c.label + "': weight must be > 0");
    if (!(c.width >= 0)) fail("category '" + c.label + "': width must be >= 0");
    total += c.count;
  }
  if (total == 0) fail("at least one category needs initial exemplars");

  if (engine == EngineKind::Field) {
    const auto d = static_cast<std::size_t>(dimension);
    if (grid.lo.size() != d || grid.hi.size() != d || grid.n.size() != d)
      fail("[grid] lo, hi and n need one entry per dimension");
    for (std::size_t k = 0; k < d; ++k) {
      if (grid.n[k] < 16) fail("[grid] needs at least 16 points per axis");
      if (!(grid.hi[k] > grid.lo[k])) fail("[grid] needs lo < hi");
    }
    if (!(grid.dt > 0) || grid.dt > 0.1 / params.lambda + 1e-15) fail("[grid] dt must satisfy 0 < dt <= 0.1 / lambda");
    if (std::abs(1.0 - params.alpha - params.beta) < 1e-12) fail("field engine requires alpha + beta != 1");
    if (!(grid.perturbation >= 0 && grid.perturbation < 1)) fail("[grid] perturbation must lie in [0, 1)");
    const double g = params.alpha + params.beta;
    const double spread = (g > 0 && g < 2) ? equilibrium_dispersion(params.alpha, params.beta, params.sigma)
                                           : params.sigma;
    const double margin = 6.0 * spread;
    for (const auto& c : categories)
      for (std::size_t k = 0; k < d; ++k)
        if (c.position[k] - margin < grid.lo[k] || c.position[k] + margin > grid.hi[k])
          fail("category '" + c.label + "': grid must extend " + format_double(margin) +
               " beyond every initial position");
  }
}

}  // namespace exdyn
