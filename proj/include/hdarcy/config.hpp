#pragma once

// Run configuration: a flat `key = value` text format (with `#` comments)
// whose keys mirror the CLI flags. Flags override file values.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hdarcy/error.hpp"
#include "hdarcy/mesh.hpp"
#include "hdarcy/solver.hpp"
#include "hdarcy/verification.hpp"

namespace hdarcy {

struct RunConfig {
  double alpha = 0.1;
  MeshKind mesh = MeshKind::orthogonal;
  double amplitude = 0.15;
  int kx = 3;
  int ky = 3;
  int degree = 6;
  /// 0 selects degree + 4.
  int quad = 0;
  SolverPath path = SolverPath::both;
  SchurMethod schur_method = SchurMethod::direct;
  SourceKind source = SourceKind::herbin;
  std::string out = "out";
  int threads = 1;
  /// Field samples per element direction written by `solve`; 0 disables.
  int samples = 0;
  bool condition = true;
  bool timings = true;
  std::string sweep = "p";
  std::vector<int> sweep_k{3};
  std::vector<int> sweep_degrees{2, 3, 4, 5, 6, 7, 8};
  std::vector<MeshKind> sweep_meshes{MeshKind::orthogonal, MeshKind::curved};

  RunSpec run_spec() const {
    RunSpec spec;
    spec.mesh.kx = kx;
    spec.mesh.ky = ky;
    spec.mesh.kind = mesh;
    spec.mesh.amplitude = amplitude;
    spec.degree = degree;
    spec.quad = quad;
    spec.alpha = alpha;
    spec.source = source;
    spec.path = path;
    spec.schur_method = schur_method;
    spec.threads = threads;
    spec.condition = condition;
    return spec;
  }

  SweepSpec sweep_spec() const {
    SweepSpec s;
    s.base = run_spec();
    for (int k : sweep_k) s.grids.emplace_back(k, k);
    s.degrees = sweep_degrees;
    s.meshes.clear();
    for (MeshKind kind : sweep_meshes) s.meshes.emplace_back(kind, amplitude);
    return s;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

inline MeshKind parse_mesh(const std::string& key, const std::string& v) {
  if (v == "orthogonal") return MeshKind::orthogonal;
  if (v == "curved") return MeshKind::curved;
  throw ConfigError("key '" + key + "': expected orthogonal|curved, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "," : "") << items[i];
  return os.str();
}

/// Shortest text that parses back to the same double.
inline std::string format_shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "alpha") cfg.alpha = parse_real(key, value);
  else if (key == "mesh") cfg.mesh = parse_mesh(key, value);
  else if (key == "amplitude") cfg.amplitude = parse_real(key, value);
  else if (key == "kx") cfg.kx = parse_int(key, value);
  else if (key == "ky") cfg.ky = parse_int(key, value);
  else if (key == "degree") cfg.degree = parse_int(key, value);
  else if (key == "quad") cfg.quad = parse_int(key, value);
  else if (key == "path") {
    if (value == "monolithic") cfg.path = SolverPath::monolithic;
    else if (value == "schur") cfg.path = SolverPath::schur;
    else if (value == "both") cfg.path = SolverPath::both;
    else throw ConfigError("key 'path': expected monolithic|schur|both, got '" + value + "'");
  } else if (key == "schur_method") {
    if (value == "direct") cfg.schur_method = SchurMethod::direct;
    else if (value == "cg") cfg.schur_method = SchurMethod::conjugate_gradient;
    else throw ConfigError("key 'schur_method': expected direct|cg, got '" + value + "'");
  } else if (key == "source") {
    if (value == "herbin") cfg.source = SourceKind::herbin;
    else if (value == "zero") cfg.source = SourceKind::zero;
    else throw ConfigError("key 'source': expected herbin|zero, got '" + value + "'");
  } else if (key == "out") cfg.out = value;
  else if (key == "threads") cfg.threads = parse_int(key, value);
  else if (key == "samples") cfg.samples = parse_int(key, value);
  else if (key == "condition") cfg.condition = parse_bool(key, value);
  else if (key == "timings") cfg.timings = parse_bool(key, value);
  else if (key == "sweep") {
    if (value != "h" && value != "p") throw ConfigError("key 'sweep': expected h|p, got '" + value + "'");
    cfg.sweep = value;
  } else if (key == "sweep_k") {
    cfg.sweep_k.clear();
    for (const auto& item : split_list(value)) cfg.sweep_k.push_back(parse_int(key, item));
  } else if (key == "sweep_degrees") {
    cfg.sweep_degrees.clear();
    for (const auto& item : split_list(value)) cfg.sweep_degrees.push_back(parse_int(key, item));
  } else if (key == "sweep_meshes") {
    cfg.sweep_meshes.clear();
    for (const auto& item : split_list(value)) cfg.sweep_meshes.push_back(parse_mesh(key, item));
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

inline void apply_text(RunConfig& cfg, const std::string& text) {
  for (const auto& [k, v] : parse_key_values(text)) apply_setting(cfg, k, v);
}

inline void apply_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_text(cfg, buf.str());
}

inline void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(cfg.alpha > 0.0)) fail("alpha must be > 0");
  if (!(cfg.amplitude >= 0.0)) fail("amplitude must be >= 0");
  if (cfg.kx < 1 || cfg.ky < 1) fail("kx and ky must be >= 1");
  if (cfg.degree < 1 || cfg.degree > 30) fail("degree must be in [1, 30]");
  if (cfg.quad != 0 && cfg.quad < cfg.degree + 1) fail("quad must be 0 or >= degree + 1");
  if (cfg.threads < 1) fail("threads must be >= 1");
  if (cfg.samples < 0) fail("samples must be >= 0");
  if (cfg.out.empty()) fail("out must not be empty");
  if (cfg.sweep_k.empty() || cfg.sweep_degrees.empty() || cfg.sweep_meshes.empty()) {
    fail("sweep lists must not be empty");
  }
  for (int k : cfg.sweep_k) if (k < 1) fail("sweep_k entries must be >= 1");
  for (int n : cfg.sweep_degrees) if (n < 1 || n > 30) fail("sweep_degrees entries must be in [1, 30]");
}

inline std::string to_key_values(const RunConfig& cfg) {
  std::ostringstream os;
  os << "alpha = " << detail::format_shortest(cfg.alpha) << '\n'
     << "mesh = " << to_string(cfg.mesh) << '\n'
     << "amplitude = " << detail::format_shortest(cfg.amplitude) << '\n'
     << "kx = " << cfg.kx << '\n'
     << "ky = " << cfg.ky << '\n'
     << "degree = " << cfg.degree << '\n'
     << "quad = " << cfg.quad << "  # 0: degree + 4\n"
     << "path = " << to_string(cfg.path) << '\n'
     << "schur_method = " << (cfg.schur_method == SchurMethod::direct ? "direct" : "cg") << '\n'
     << "source = " << to_string(cfg.source) << '\n'
     << "out = " << cfg.out << '\n'
     << "threads = " << cfg.threads << '\n'
     << "samples = " << cfg.samples << '\n'
     << "condition = " << (cfg.condition ? "true" : "false") << '\n'
     << "timings = " << (cfg.timings ? "true" : "false") << '\n'
     << "sweep = " << cfg.sweep << '\n'
     << "sweep_k = " << detail::join(cfg.sweep_k) << '\n'
     << "sweep_degrees = " << detail::join(cfg.sweep_degrees) << '\n';
  std::vector<std::string> meshes;
  for (MeshKind m : cfg.sweep_meshes) meshes.emplace_back(to_string(m));
  os << "sweep_meshes = " << detail::join(meshes) << '\n';
  return os.str();
}

/// CLI exit status for a library error.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::config: return 2;
    case ErrorCode::mesh_degeneracy: return 3;
    case ErrorCode::assembly:
    case ErrorCode::solver: return 4;
  }
  return 4;
}

}  // namespace hdarcy
