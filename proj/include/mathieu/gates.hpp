#pragma once

// Two-qubit gate suite on a Mathieu-controlled pair: decoupling-point
// calibration, Gaussian single-qubit pulses, an adiabatic CZ, and process
// tomography of each gate.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "evolve.hpp"
#include "pulse.hpp"
#include "spectral.hpp"

namespace mathieu {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two transmons, qubit 2 (mode 1) carries the two-photon drive.
inline SystemSpec two_qubit_system(double omega1, double omega2, double alpha1, double alpha2, double g, int dim = 6) {
  SystemSpec s;
  s.modes = {{"Q1", dim, omega1, alpha1}, {"Q2", dim, omega2, alpha2}};
  s.couplings = {{0, 1, g}};
  return s;
}

struct GateSuiteConfig {
  SystemSpec system = two_qubit_system(5.20, 5.75, 0.25, 0.25, 0.03);
  DriveSpec drive{1, 0.0, 10.60, 0.0};
  double sample_rate = 4.0;          // samples / ns
  double eps_sweep_max = 0.2;        // GHz, decoupling-point search range
  double eps_sweep_step = 0.005;
  double eps_profile_max = 0.06;     // GHz, leakage profile range for the CZ ramp
  double eps_profile_step = 0.001;
  double xy_sigma = 20.0;            // ns
  double xy_duration = 160.0;        // ns
  bool trim_xy = true;               // amplitude trim by simulation
  double ramp_k = 0.5;
  Window ramp_window = Window::SineSquared;
  double cz_hold = 40.0;             // ns
  double cz_eps_guess = 0.03;        // GHz, first plateau guess
  double phase_tolerance = 1e-4;     // rad
  int max_secant = 30;
  PropagateOptions propagate;
  unsigned threads = 1;
};

struct GateResult {
  std::string name;
  GateMap map;
  VirtualZ z;
  Matrix4c corrected = Matrix4c::Identity();
  ProcessMatrix chi;
  ProcessMatrix ideal;
  GateMetrics metrics;
  double mean_leakage = 0.0;
  std::optional<double> conditional_phase;
};

struct Calibration {
  double eps0 = 0.0;
  double eps0_analytic = 0.0;
  double freq1 = 0.0, freq2 = 0.0;  // dressed lab frequencies, GHz
  double elem1 = 1.0, elem2 = 1.0;  // |<dressed 1|a^dag|dressed 0>|
  double amp1 = 1.0, amp2 = 1.0;    // simulated amplitude trims
  LeakageProfile profile;
  double cz_plateau = 0.0;
  double cz_ramp = 0.0;            // ns per ramp
  int secant_iterations = 0;
};

inline Matrix4c ideal_gate(const std::string& name) {
  const auto& p = pauli_basis();
  if (name == "II") return Matrix4c::Identity();
  if (name == "XI") return p[4];
  if (name == "IX") return p[1];
  if (name == "XX") return p[5];
  if (name == "CZ") {
    Matrix4c cz = Matrix4c::Identity();
    cz(3, 3) = -1.0;
    return cz;
  }
  throw std::invalid_argument("unknown gate " + name);
}

namespace detail {

inline GateDevice gate_device(const GateSuiteConfig& cfg) { return {cfg.system, cfg.drive, cfg.propagate, cfg.threads}; }

inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(lo + (hi - lo) * i / n);
  return g;
}

inline std::vector<ChannelInfo> channels(const GateSuiteConfig& cfg, const Calibration& cal) {
  return {{"mathieu", ChannelKind::Mathieu, cfg.drive.target_mode, 0.0, cal.eps0},
          {"xy1", ChannelKind::XY, 0, cal.freq1, 0.0},
          {"xy2", ChannelKind::XY, 1, cal.freq2, 0.0}};
}

}  // namespace detail

/// Finalizes a simulated map: virtual-Z correction, global phase, chi and metrics.
inline GateResult analyse_gate(const std::string& name, const GateMap& map, bool calibrate_z = true) {
  GateResult r;
  r.name = name;
  r.map = map;
  const Matrix4c ideal = ideal_gate(name);
  r.z = calibrate_z ? calibrate_virtual_z(map.map, ideal) : VirtualZ{};
  r.corrected = fix_global_phase(apply_virtual_z(map.map, r.z));
  r.chi = chi_from_map(r.corrected);
  r.ideal = chi_from_map(ideal);
  r.metrics = gate_metrics(r.chi, r.ideal);
  double l = 0.0;
  for (double x : map.leakage) l += x;
  r.mean_leakage = l / 4.0;
  if (name == "CZ") r.conditional_phase = conditional_phase(map.map);
  return r;
}

/// Decoupling point, dressed qubit frequencies and XY matrix elements.
inline Calibration calibrate_idle(const GateSuiteConfig& cfg) {
  Calibration cal;
  auto eps = detail::grid(0.0, cfg.eps_sweep_max, cfg.eps_sweep_step);
  SweepOptions so;
  so.threads = cfg.threads;
  auto curve = zz_sweep(cfg.system, cfg.drive, eps, so);
  if (!curve.root()) throw CalibrationError("no zero-coupling point in the epsilon sweep");
  cal.eps0 = *curve.root();
  const auto& m = cfg.system.modes;
  SWParams p = SWParams::from_device(m[0].omega, m[1].omega, m[0].alpha, m[1].alpha, cfg.system.couplings.at(0).g,
                                     cfg.drive.omega_d);
  try {
    cal.eps0_analytic = epsilon_zero(p);
  } catch (const AnalyticError&) {
    cal.eps0_analytic = std::nan("");
  }
  const DressedBasis b = dressed_basis(cfg.system, cfg.drive, cal.eps0);
  const double frame = cfg.drive.omega_d / 2.0;
  cal.freq1 = to_ghz(b.energies[2] - b.energies[0]) + frame;
  cal.freq2 = to_ghz(b.energies[1] - b.energies[0]) + frame;
  const Operator a1 = destroy(cfg.system, 0), a2 = destroy(cfg.system, 1);
  // mean over the spectator state: the two conditional transitions differ
  // by the dressing of the spectator
  const StateVector u1_0 = a1.adjoint().apply(b.states[0]), u1_1 = a1.adjoint().apply(b.states[1]);
  const StateVector u2_0 = a2.adjoint().apply(b.states[0]), u2_1 = a2.adjoint().apply(b.states[2]);
  cal.elem1 = 0.5 * (std::abs(b.states[2].dot(u1_0)) + std::abs(b.states[3].dot(u1_1)));
  cal.elem2 = 0.5 * (std::abs(b.states[1].dot(u2_0)) + std::abs(b.states[3].dot(u2_1)));
  return cal;
}

inline PulseSchedule xy_schedule(const GateSuiteConfig& cfg, const Calibration& cal, bool q1, bool q2) {
  std::vector<Segment> segs;
  auto env = gaussian_envelope(cfg.xy_sigma, cfg.xy_duration, M_PI, 0.0, cfg.sample_rate);
  if (q1) {
    Waveform w = env.waveform;
    for (auto& v : w.samples) v *= cal.amp1 / cal.elem1;
    segs.push_back({"xy1", w, 0.0});
  }
  if (q2) {
    Waveform w = env.waveform;
    for (auto& v : w.samples) v *= cal.amp2 / cal.elem2;
    segs.push_back({"xy2", w, 0.0});
  }
  return compose_schedule(detail::channels(cfg, cal), segs, cfg.sample_rate);
}

/// Golden-section search of the XY amplitude trim maximizing F_chi of the
/// single-qubit X gate on one qubit.
inline void calibrate_xy(const GateSuiteConfig& cfg, Calibration& cal) {
  const GateDevice dev = detail::gate_device(cfg);
  auto trim = [&](bool first) {
    double& amp = first ? cal.amp1 : cal.amp2;
    const std::string name = first ? "XI" : "IX";
    auto infidelity = [&](double a) {
      amp = a;
      return 1.0 - analyse_gate(name, simulate_gate(dev, xy_schedule(cfg, cal, first, !first))).metrics.fidelity;
    };
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.95, hi = 1.05;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = infidelity(x1), f2 = infidelity(x2);
    while (hi - lo > 1e-4) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = infidelity(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = infidelity(x2);
      }
    }
    amp = 0.5 * (lo + hi);
  };
  trim(true);
  trim(false);
}

/// Ramp eps0 -> plateau, hold, and the time-reversed ramp back.
inline PulseSchedule cz_schedule(const GateSuiteConfig& cfg, const Calibration& cal, double plateau,
                                 double* ramp_duration = nullptr) {
  auto up = make_adiabatic_waveform(cal.profile, cfg.ramp_k, cfg.ramp_window, cal.eps0, plateau, cfg.sample_rate);
  if (ramp_duration) *ramp_duration = up.duration;
  Waveform hold;
  hold.sample_rate = cfg.sample_rate;
  const auto nh = static_cast<std::size_t>(std::llround(cfg.cz_hold * cfg.sample_rate));
  hold.samples.assign(nh + 1, plateau);
  Waveform down = up.waveform;
  std::reverse(down.samples.begin(), down.samples.end());
  const double t1 = up.waveform.duration();
  const double t2 = t1 + hold.duration();
  return compose_schedule(detail::channels(cfg, cal),
                          {{"mathieu", up.waveform, 0.0}, {"mathieu", hold, t1}, {"mathieu", down, t2}},
                          cfg.sample_rate);
}

/// Plateau amplitude giving a conditional phase of pi, by secant iteration on
/// the simulated phase.
inline void calibrate_cz(const GateSuiteConfig& cfg, Calibration& cal) {
  auto eps = detail::grid(0.0, cfg.eps_profile_max, cfg.eps_profile_step);
  cal.profile = profile_leakage(cfg.system, cfg.drive, eps, "11", two_qubit_labels(), cfg.threads);
  const GateDevice dev = detail::gate_device(cfg);
  auto residual = [&](double plateau) {
    auto g = simulate_gate(dev, cz_schedule(cfg, cal, plateau));
    return std::remainder(conditional_phase(g.map) - M_PI, kTwoPi);
  };
  double x0 = cfg.cz_eps_guess, x1 = cfg.cz_eps_guess * 1.05;
  double f0 = residual(x0), f1 = residual(x1);
  int it = 0;
  while (std::abs(f1) > cfg.phase_tolerance) {
    if (++it > cfg.max_secant) throw CalibrationError("CZ plateau calibration did not converge");
    if (f1 == f0) throw CalibrationError("CZ plateau calibration stalled");
    double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x2 = std::clamp(x2, cal.eps0 + 1e-4, cfg.eps_profile_max);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = residual(x1);
  }
  cal.cz_plateau = x1;
  cal.secant_iterations = it;
  cz_schedule(cfg, cal, x1, &cal.cz_ramp);
}

struct GateSuite {
  Calibration calibration;
  std::vector<GateResult> gates;
};

/// Calibrates and simulates XI, IX, XX and CZ.
inline GateSuite run_gate_suite(const GateSuiteConfig& cfg) {
  GateSuite s;
  s.calibration = calibrate_idle(cfg);
  if (cfg.trim_xy) calibrate_xy(cfg, s.calibration);
  calibrate_cz(cfg, s.calibration);
  const GateDevice dev = detail::gate_device(cfg);
  const auto& cal = s.calibration;
  s.gates.push_back(analyse_gate("XI", simulate_gate(dev, xy_schedule(cfg, cal, true, false))));
  s.gates.push_back(analyse_gate("IX", simulate_gate(dev, xy_schedule(cfg, cal, false, true))));
  s.gates.push_back(analyse_gate("XX", simulate_gate(dev, xy_schedule(cfg, cal, true, true))));
  s.gates.push_back(analyse_gate("CZ", simulate_gate(dev, cz_schedule(cfg, cal, cal.cz_plateau))));
  return s;
}

}  // namespace mathieu
