#pragma once

// Always-on property suite: builder Hermiticity, propagation norm budget,
// embedded-operator commutation, RWA vs lab-frame populations, chi
// positivity, output determinism and the analytic driven ladder.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "chain.hpp"
#include "evolve.hpp"
#include "gates.hpp"
#include "models.hpp"
#include "pulse.hpp"
#include "spectral.hpp"

namespace mathieu {

struct PropertyCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline PropertyCheck at_most(std::string name, double value, double limit, std::string what = {}) {
  return {std::move(name), value, limit, std::isfinite(value) && value <= limit, std::move(what)};
}

inline SystemSpec ref_pair(int dim) { return two_qubit_system(5.20, 5.75, 0.25, 0.25, 0.03, dim); }

}  // namespace detail

inline PropertyCheck check_hermiticity() {
  double worst = 0.0;
  SystemSpec s = detail::ref_pair(6);
  DriveSpec d{1, 0.08, 10.60, 0.3};
  worst = std::max(worst, build_lab_static(s).hermiticity_defect());
  worst = std::max(worst, build_rwa(s, std::span<const DriveSpec>(&d, 1)).hermiticity_defect());
  worst = std::max(worst, two_photon_operator(s, 1, 0.7).hermiticity_defect());
  worst = std::max(worst, build_qcq({"Q1", 4, 4.2, 0.2}, {"C", 6, 4.67, 0.8}, {"Q2", 4, 4.2, 0.2}, 0.08, 0.08, 0.01,
                                    std::optional<DriveSpec>(DriveSpec{kQcqCouplerMode, 0.1, 5.0, 0.0}))
                              .hermiticity_defect());
  ChainLayout small{3, {"Q", 2, 4.2, 0.2}, {"C", 5, 4.67, 0.8}, 0.08, 0.01};
  worst = std::max(worst, build_chain(small, DriveSpec{0, 0.1, 5.6, 0.0}).hermiticity_defect());
  return detail::at_most("hermiticity", worst, kHermitianTolerance, "max |H - H^dagger| over builders");
}

inline PropertyCheck check_norm_drift() {
  SystemSpec s = detail::ref_pair(5);
  DriveSpec d{1, 0.02, 10.60, 0.0};
  Operator h = build_rwa(s, std::span<const DriveSpec>(&d, 1));
  auto env = gaussian_envelope(8.0, 40.0, M_PI, 0.0, 4.0);
  PulseSchedule sched = compose_schedule({{"xy", ChannelKind::XY, 0, 5.2, 0.0}}, {{"xy", env.waveform, 0.0}}, 4.0);
  auto terms = xy_drive_term(s, 0, [&sched](double t) { return sched.value(sched.channels[0], t); }, 5.2, 5.3);
  StateVector psi = StateVector::Zero(h.dim());
  psi(basis_index(s.dims(), std::vector<int>{0, 1})) = 1.0;
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(i);
  auto tr = propagate(h, terms, psi, grid);
  return detail::at_most("norm-drift", tr.norm_drift, kNormDriftBudget, "driven RK78 propagation over 40 ns");
}

inline PropertyCheck check_commutation() {
  SystemSpec s;
  s.modes = {{"A", 3, 1.0, 0.0}, {"B", 4, 1.0, 0.0}, {"C", 2, 1.0, 0.0}};
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      DenseMatrix a = destroy(s, i).to_dense(), b = destroy(s, j).to_dense();
      DenseMatrix bd = b.adjoint();
      worst = std::max(worst, (a * b - b * a).cwiseAbs().maxCoeff());
      worst = std::max(worst, (a * bd - bd * a).cwiseAbs().maxCoeff());
    }
  return detail::at_most("commutation", worst, 1e-14, "[a_i, a_j], [a_i, a_j^dagger] for i != j");
}

/// Bare-state populations from |01> over 10 ns, lab frame vs rotating frame.
/// The counter-rotating 2 omega_d terms shift levels by ~eps^2 / omega_d, so the
/// gap grows as eps^2 (about 6e-4 at 0.02 GHz, 3e-3 at 0.05 GHz).
inline PropertyCheck check_rwa_vs_lab(double eps = 0.02) {
  SystemSpec s = detail::ref_pair(5);
  DriveSpec d{1, eps, 10.60, 0.0};
  std::span<const DriveSpec> ds(&d, 1);
  StateVector psi = StateVector::Zero(s.dimension());
  psi(basis_index(s.dims(), std::vector<int>{0, 1})) = 1.0;
  std::vector<double> grid{0.0, 5.0, 10.0};
  auto rwa = propagate(build_rwa(s, ds), {}, psi, grid);
  PropagateOptions opt;
  opt.max_step = 0.01;
  auto lab = propagate(build_lab_static(s), lab_drive_terms(s, ds), psi, grid, opt);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    worst = std::max(worst, (rwa.states[k].cwiseAbs2() - lab.states[k].cwiseAbs2()).cwiseAbs().maxCoeff());
  return detail::at_most("rwa-vs-lab", worst, 1e-3, "max population difference, eps = " + detail::fmt17(eps) + " GHz");
}

inline PropertyCheck check_chi_psd() {
  SystemSpec s = detail::ref_pair(5);
  GateDevice dev{s, DriveSpec{1, 0.02, 10.60, 0.0}, {}, 1};
  auto env = gaussian_envelope(6.0, 36.0, M_PI / 2.0, 0.0, 4.0);
  PulseSchedule sched = compose_schedule({{"mathieu", ChannelKind::Mathieu, 1, 0.0, 0.02},
                                          {"xy", ChannelKind::XY, 0, 5.19, 0.0}},
                                         {{"xy", env.waveform, 0.0}}, 4.0);
  GateMap m = simulate_gate(dev, sched);
  const double lam = chi_min_eigenvalue(chi_from_map(fix_global_phase(m.map)));
  return detail::at_most("chi-psd", -lam, 1e-12, "-(min eigenvalue of chi)");
}

inline PropertyCheck check_determinism() {
  auto render = [] {
    SystemSpec s = detail::ref_pair(5);
    std::vector<double> eps{0.0, 0.01, 0.02, 0.03};
    auto c = zz_sweep(s, DriveSpec{1, 0.0, 10.60, 0.0}, eps);
    auto xx = xxz_reference(0.005, 0.002, std::vector<double>{0.0, 10.0, 20.0});
    std::ostringstream os;
    for (const auto& p : c.samples) os << detail::fmt17(p.epsilon) << "," << detail::fmt17(p.jzz) << '\n';
    for (double v : xx.series.norm) os << detail::fmt17(v) << '\n';
    auto env = gaussian_envelope(4.0, 16.0, M_PI, 0.0, 4.0);
    write_schedule(os, compose_schedule({{"xy", ChannelKind::XY, 0, 5.2, 0.0}}, {{"xy", env.waveform, 0.0}}, 4.0));
    return os.str();
  };
  const bool same = render() == render();
  return {"determinism", same ? 0.0 : 1.0, 0.0, same, "repeated CSV renderings are byte-identical"};
}

/// Max |E_analytic - E_numeric| / (3 eps^2 / alpha2) over eps <= 0.1 GHz.
inline PropertyCheck check_driven_levels() {
  const double alpha = 0.25, omega = 5.75, wd = 10.60;
  const double delta_d = wd - 2.0 * omega + 5.0 * alpha;
  SystemSpec s;
  s.modes = {{"Q", 8, omega, alpha}};
  double worst = 0.0;
  for (double eps = 0.01; eps <= 0.1 + 1e-12; eps += 0.01) {
    DriveSpec d{0, eps, wd, 0.0};
    auto spec = assign_dressed(eigensystem(build_rwa(s, std::span<const DriveSpec>(&d, 1))), s.dims(),
                               std::vector<std::string>{"0", "1", "2", "4"});
    auto l = driven_levels(alpha, delta_d, eps);
    std::vector<double> num{to_ghz(spec.energy("0")), to_ghz(spec.energy("1"))};
    double a = to_ghz(spec.energy("2")), b = to_ghz(spec.energy("4"));
    num.push_back(std::min(a, b));
    num.push_back(std::max(a, b));
    const double ana[4] = {l.e0, l.e1, l.e2, l.e3};
    const double limit = 3.0 * eps * eps / alpha;
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(num[k] - ana[k]) / limit);
  }
  return detail::at_most("driven-levels", worst, 1.0, "max level error in units of 3 eps^2 / alpha2");
}

inline std::vector<PropertyCheck> run_property_suite() {
  std::vector<PropertyCheck> out;
  auto guard = [&](const char* name, auto fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, NAN, 0.0, false, e.what()});
    }
  };
  guard("hermiticity", check_hermiticity);
  guard("norm-drift", check_norm_drift);
  guard("commutation", check_commutation);
  guard("rwa-vs-lab", [] { return check_rwa_vs_lab(); });
  guard("chi-psd", check_chi_psd);
  guard("determinism", check_determinism);
  guard("driven-levels", check_driven_levels);
  return out;
}

}  // namespace mathieu
