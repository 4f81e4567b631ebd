#pragma once

// Run configuration for the command-line front end. One JSON file per run,
// every value in GHz / ns. Parsing is strict: unknown keys, wrong types and
// empty grids are rejected before any computation starts.

#include <json.hpp>

#include <mathieu/mathieu.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mathieu::cli {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigVersion = 1;

struct Grid {
  double min = 0.0, max = 0.0, step = 0.0;

  std::vector<double> values() const {
    std::vector<double> v;
    const auto n = static_cast<long>(std::floor((max - min) / step + 1e-9));
    for (long i = 0; i <= n; ++i) v.push_back(min + i * step);
    return v;
  }
};

struct ZZSweepSection {
  Grid eps{0.0, 0.2, 0.005};
  CouplingKind kind = CouplingKind::TwoQubit;
};

struct QcqMapSection {
  Grid eps{0.0, 0.09, 0.005};
  Grid omega_d{4.90, 5.15, 0.01};
};

struct GatesSection {
  double sample_rate = 4.0;
  double xy_sigma = 20.0;
  double xy_duration = 160.0;
  bool trim_xy = true;
  double ramp_k = 0.5;
  Window ramp_window = Window::SineSquared;
  double cz_hold = 40.0;
  double cz_eps_guess = 0.03;
  Grid eps_search{0.0, 0.2, 0.005};
  Grid eps_profile{0.0, 0.06, 0.001};
};

struct ChainSection {
  ChainLayout layout{5, {"Q", 3, 4.2, 0.2}, {"C", 5, 4.67, 0.8}, 0.08, 0.01};
  int unit_dim = 6;  // truncation of the QCQ unit used to program Delta
  std::vector<double> deltas{3.55, 0.0, -1.86};
  double horizon = 120.0;
  double sample_step = 0.25;
  std::optional<double> smoothing;  // ns; unset = exchange period
  ProgramGrid program;
};

struct QcqRegimeSection {
  double omega1 = 4.2, omega2 = 4.2, omega_c = 4.67, alpha_c = 0.8, omega_d = 5.0;
};

struct RunConfig {
  int version = kConfigVersion;
  unsigned seed = 0;
  unsigned threads = 1;
  std::optional<SystemSpec> device;
  std::optional<DriveSpec> drive;
  ZZSweepSection zz_sweep;
  QcqMapSection qcq_map;
  GatesSection gates;
  ChainSection chain;
  std::optional<QcqRegimeSection> qcq_regime;
};

namespace detail {

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": not finite");
  return v;
}

inline int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<int>();
}

template <class T, class F>
void opt(const json& j, const char* key, const std::string& where, T& out, F read) {
  if (j.contains(key)) out = read(j.at(key), where + "." + key);
}

inline double positive(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (!(v > 0.0)) throw ConfigError(where + ": must be positive");
  return v;
}

inline double non_negative(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (v < 0.0) throw ConfigError(where + ": must be non-negative");
  return v;
}

inline Grid grid(const json& j, const std::string& where, Grid g) {
  only_keys(j, where, {"min", "max", "step"});
  opt(j, "min", where, g.min, number);
  opt(j, "max", where, g.max, number);
  opt(j, "step", where, g.step, number);
  if (!(g.step > 0.0)) throw ConfigError(where + ": step must be positive");
  if (g.max < g.min) throw ConfigError(where + ": empty grid (max < min)");
  return g;
}

inline ModeSpec mode(const json& j, const std::string& where, ModeSpec m) {
  only_keys(j, where, {"label", "dim", "omega", "alpha"});
  if (j.contains("label")) {
    if (!j.at("label").is_string()) throw ConfigError(where + ".label: expected a string");
    m.label = j.at("label").get<std::string>();
  }
  opt(j, "dim", where, m.dim, integer);
  opt(j, "omega", where, m.omega, positive);
  opt(j, "alpha", where, m.alpha, non_negative);
  if (m.dim < 2) throw ConfigError(where + ".dim: must be >= 2");
  return m;
}

inline SystemSpec device(const json& j) {
  only_keys(j, "device", {"modes", "couplings"});
  SystemSpec s;
  if (!j.contains("modes") || !j.at("modes").is_array() || j.at("modes").empty())
    throw ConfigError("device.modes: expected a non-empty array");
  for (std::size_t k = 0; k < j.at("modes").size(); ++k) {
    const std::string w = "device.modes[" + std::to_string(k) + "]";
    const auto& jm = j.at("modes")[k];
    for (const char* req : {"dim", "omega", "alpha"})
      if (!jm.contains(req)) throw ConfigError(w + ": missing '" + req + "'");
    s.modes.push_back(mode(jm, w, {"M" + std::to_string(k), 2, 0.0, 0.0}));
  }
  if (j.contains("couplings")) {
    if (!j.at("couplings").is_array()) throw ConfigError("device.couplings: expected an array");
    for (std::size_t k = 0; k < j.at("couplings").size(); ++k) {
      const std::string w = "device.couplings[" + std::to_string(k) + "]";
      const auto& jc = j.at("couplings")[k];
      only_keys(jc, w, {"i", "j", "g"});
      for (const char* req : {"i", "j", "g"})
        if (!jc.contains(req)) throw ConfigError(w + ": missing '" + req + "'");
      const int a = integer(jc.at("i"), w + ".i"), b = integer(jc.at("j"), w + ".j");
      if (a < 0 || b < 0) throw ConfigError(w + ": negative mode index");
      s.couplings.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b), number(jc.at("g"), w + ".g")});
    }
  }
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("device: ") + e.what());
  }
  return s;
}

inline DriveSpec drive(const json& j) {
  only_keys(j, "drive", {"mode", "epsilon", "omega_d", "phi"});
  DriveSpec d{1, 0.0, 10.60, 0.0};
  if (j.contains("mode")) {
    const int m = integer(j.at("mode"), "drive.mode");
    if (m < 0) throw ConfigError("drive.mode: negative index");
    d.target_mode = static_cast<std::size_t>(m);
  }
  opt(j, "epsilon", "drive", d.epsilon, non_negative);
  opt(j, "omega_d", "drive", d.omega_d, positive);
  opt(j, "phi", "drive", d.phi, number);
  return d;
}

inline Window window(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  const auto s = j.get<std::string>();
  if (s == "sine2") return Window::SineSquared;
  if (s == "flat") return Window::Flat;
  throw ConfigError(where + ": expected 'sine2' or 'flat'");
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  only_keys(j, "config",
            {"version", "seed", "threads", "device", "drive", "zz_sweep", "qcq_map", "gates", "chain", "qcq_regime"});
  if (!j.contains("version")) throw ConfigError("config: missing 'version'");
  RunConfig c;
  c.version = integer(j.at("version"), "version");
  if (c.version != kConfigVersion)
    throw ConfigError("config: unsupported version " + std::to_string(c.version) + " (expected " +
                      std::to_string(kConfigVersion) + ")");
  if (j.contains("seed")) {
    const int s = integer(j.at("seed"), "seed");
    if (s < 0) throw ConfigError("seed: must be non-negative");
    c.seed = static_cast<unsigned>(s);
  }
  if (j.contains("threads")) {
    const int t = integer(j.at("threads"), "threads");
    if (t < 1) throw ConfigError("threads: must be >= 1");
    c.threads = static_cast<unsigned>(t);
  }
  if (j.contains("device")) c.device = device(j.at("device"));
  if (j.contains("drive")) c.drive = drive(j.at("drive"));
  if (c.device && c.drive && c.drive->target_mode >= c.device->modes.size())
    throw ConfigError("drive.mode: no such mode in device");

  if (j.contains("zz_sweep")) {
    const auto& s = j.at("zz_sweep");
    only_keys(s, "zz_sweep", {"eps", "kind"});
    if (s.contains("eps")) c.zz_sweep.eps = grid(s.at("eps"), "zz_sweep.eps", c.zz_sweep.eps);
    if (s.contains("kind")) {
      const auto& k = s.at("kind");
      if (k == "two_qubit") c.zz_sweep.kind = CouplingKind::TwoQubit;
      else if (k == "qcq") c.zz_sweep.kind = CouplingKind::Qcq;
      else throw ConfigError("zz_sweep.kind: expected 'two_qubit' or 'qcq'");
    }
  }
  if (j.contains("qcq_map")) {
    const auto& s = j.at("qcq_map");
    only_keys(s, "qcq_map", {"eps", "omega_d"});
    if (s.contains("eps")) c.qcq_map.eps = grid(s.at("eps"), "qcq_map.eps", c.qcq_map.eps);
    if (s.contains("omega_d")) c.qcq_map.omega_d = grid(s.at("omega_d"), "qcq_map.omega_d", c.qcq_map.omega_d);
  }
  if (j.contains("gates")) {
    const auto& s = j.at("gates");
    auto& g = c.gates;
    only_keys(s, "gates",
              {"sample_rate", "xy_sigma", "xy_duration", "trim_xy", "ramp_k", "ramp_window", "cz_hold", "cz_eps_guess",
               "eps_search", "eps_profile"});
    opt(s, "sample_rate", "gates", g.sample_rate, positive);
    opt(s, "xy_sigma", "gates", g.xy_sigma, positive);
    opt(s, "xy_duration", "gates", g.xy_duration, positive);
    opt(s, "ramp_k", "gates", g.ramp_k, positive);
    opt(s, "cz_hold", "gates", g.cz_hold, non_negative);
    opt(s, "cz_eps_guess", "gates", g.cz_eps_guess, positive);
    if (s.contains("trim_xy")) {
      if (!s.at("trim_xy").is_boolean()) throw ConfigError("gates.trim_xy: expected a boolean");
      g.trim_xy = s.at("trim_xy").get<bool>();
    }
    if (s.contains("ramp_window")) g.ramp_window = window(s.at("ramp_window"), "gates.ramp_window");
    if (s.contains("eps_search")) g.eps_search = grid(s.at("eps_search"), "gates.eps_search", g.eps_search);
    if (s.contains("eps_profile")) g.eps_profile = grid(s.at("eps_profile"), "gates.eps_profile", g.eps_profile);
  }
  if (j.contains("chain")) {
    const auto& s = j.at("chain");
    auto& ch = c.chain;
    only_keys(s, "chain",
              {"n_qubits", "qubit", "coupler", "g_qc", "g_qq", "unit_dim", "deltas", "horizon", "sample_step",
               "smoothing", "program_grid"});
    opt(s, "n_qubits", "chain", ch.layout.n_qubits, integer);
    if (ch.layout.n_qubits != 5) throw ConfigError("chain.n_qubits: only 5 is supported");
    if (s.contains("qubit")) ch.layout.qubit = mode(s.at("qubit"), "chain.qubit", ch.layout.qubit);
    if (s.contains("coupler")) ch.layout.coupler = mode(s.at("coupler"), "chain.coupler", ch.layout.coupler);
    opt(s, "g_qc", "chain", ch.layout.g_qc, number);
    opt(s, "g_qq", "chain", ch.layout.g_qq, number);
    opt(s, "unit_dim", "chain", ch.unit_dim, integer);
    if (ch.unit_dim < 5) throw ConfigError("chain.unit_dim: the driven coupler needs >= 5 levels");
    if (ch.layout.coupler.dim < 5) throw ConfigError("chain.coupler.dim: the driven coupler needs >= 5 levels");
    if (s.contains("deltas")) {
      if (!s.at("deltas").is_array() || s.at("deltas").empty())
        throw ConfigError("chain.deltas: expected a non-empty array");
      ch.deltas.clear();
      for (const auto& d : s.at("deltas")) ch.deltas.push_back(number(d, "chain.deltas[]"));
    }
    opt(s, "horizon", "chain", ch.horizon, positive);
    opt(s, "sample_step", "chain", ch.sample_step, positive);
    if (s.contains("smoothing")) ch.smoothing = non_negative(s.at("smoothing"), "chain.smoothing");
    if (s.contains("program_grid")) {
      const auto& p = s.at("program_grid");
      only_keys(p, "chain.program_grid", {"eps", "omega_d"});
      if (p.contains("eps")) {
        Grid g = grid(p.at("eps"), "chain.program_grid.eps", {ch.program.eps_min, ch.program.eps_max, ch.program.eps_step});
        ch.program.eps_min = g.min;
        ch.program.eps_max = g.max;
        ch.program.eps_step = g.step;
      }
      if (p.contains("omega_d")) {
        Grid g = grid(p.at("omega_d"), "chain.program_grid.omega_d",
                      {ch.program.omega_d_min, ch.program.omega_d_max, ch.program.omega_d_step});
        ch.program.omega_d_min = g.min;
        ch.program.omega_d_max = g.max;
        ch.program.omega_d_step = g.step;
      }
    }
  }
  if (j.contains("qcq_regime")) {
    const auto& s = j.at("qcq_regime");
    only_keys(s, "qcq_regime", {"omega1", "omega2", "omega_c", "alpha_c", "omega_d"});
    QcqRegimeSection r;
    opt(s, "omega1", "qcq_regime", r.omega1, positive);
    opt(s, "omega2", "qcq_regime", r.omega2, positive);
    opt(s, "omega_c", "qcq_regime", r.omega_c, positive);
    opt(s, "alpha_c", "qcq_regime", r.alpha_c, non_negative);
    opt(s, "omega_d", "qcq_regime", r.omega_d, positive);
    c.qcq_regime = r;
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Default devices when the config has no "device" section.

inline SystemSpec ref_pair_device() { return two_qubit_system(5.20, 5.75, 0.25, 0.25, 0.03); }
inline DriveSpec ref_pair_drive() { return {1, 0.0, 10.60, 0.0}; }

/// QCQ unit at working point A (omega_c = 4.55 GHz).
inline SystemSpec qcq_device(double omega_c = 4.55, int dim = 6) {
  return qcq_system({"Q1", dim, 4.2, 0.2}, {"C", dim, omega_c, 0.8}, {"Q2", dim, 4.2, 0.2}, 0.08, 0.08, 0.01);
}

}  // namespace mathieu::cli
