#pragma once

// Schrodinger propagation, gate simulation on the dressed computational
// subspace, and Pauli-basis process matrices.

#include <boost/numeric/odeint.hpp>

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "composite.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "pulse.hpp"
#include "spectral.hpp"

namespace mathieu {

class PropagationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PropagateOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double initial_step = 1e-3;       // ns
  double max_step = 0.0;            // ns, 0 = unlimited
  std::size_t max_steps = 50'000'000;
  double drift_abort = 1e-6;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;
  double norm_drift = 0.0;  // max | ||psi(t)|| - 1 | over the grid
};

inline constexpr double kNormDriftBudget = 1e-8;

namespace detail {

using OdeState = std::vector<cplx>;

inline StateVector to_eigen(const OdeState& x) { return Eigen::Map<const StateVector>(x.data(), x.size()); }

struct Rhs {
  const Operator* h0;
  const std::vector<DriveTerm>* terms;

  void operator()(const OdeState& x, OdeState& dxdt, double t) const {
    Eigen::Map<const StateVector> xv(x.data(), x.size());
    Eigen::Map<StateVector> dv(dxdt.data(), dxdt.size());
    const cplx mi(0.0, -1.0);
    if (h0->is_sparse())
      dv.noalias() = mi * (h0->sparse() * xv);
    else
      dv.noalias() = mi * (h0->dense() * xv);
    for (const auto& term : *terms) {
      const cplx c = term.coeff(t);
      if (c == cplx(0.0, 0.0)) continue;
      if (term.op.is_sparse())
        dv.noalias() += (mi * c) * (term.op.sparse() * xv);
      else
        dv.noalias() += (mi * c) * (term.op.dense() * xv);
    }
  }
};

}  // namespace detail

/// Adaptive Runge-Kutta-Fehlberg 7(8) integration of
/// i d psi/dt = (H_static + sum_k c_k(t) O_k) psi, returning states on t_grid.
/// The state is never renormalized; the norm drift is reported and a drift
/// above opt.drift_abort raises.
inline Trajectory propagate(const Operator& h_static, const std::vector<DriveTerm>& terms, const StateVector& psi0,
                            std::span<const double> t_grid, const PropagateOptions& opt = {}) {
  if (t_grid.empty()) throw std::invalid_argument("time grid is empty");
  if (psi0.size() != h_static.dim()) throw std::invalid_argument("state dimension mismatch");
  for (const auto& term : terms)
    if (term.op.dim() != h_static.dim()) throw std::invalid_argument("drive term dimension mismatch");
  if (std::abs(psi0.norm() - 1.0) > 1e-10) throw std::invalid_argument("initial state must be normalized");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] >= t_grid[i - 1])) throw std::invalid_argument("time grid must be non-decreasing");

  namespace ode = boost::numeric::odeint;
  using Stepper = ode::runge_kutta_fehlberg78<detail::OdeState>;
  auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, Stepper());

  Trajectory tr;
  tr.times.assign(t_grid.begin(), t_grid.end());
  tr.states.reserve(t_grid.size());
  detail::OdeState x(psi0.data(), psi0.data() + psi0.size());
  detail::Rhs rhs{&h_static, &terms};

  auto record = [&](const detail::OdeState& s) {
    StateVector v = detail::to_eigen(s);
    const double drift = std::abs(v.norm() - 1.0);
    tr.norm_drift = std::max(tr.norm_drift, drift);
    if (drift > opt.drift_abort)
      throw PropagationError("norm drift " + std::to_string(drift) + " exceeds the abort threshold");
    tr.states.push_back(std::move(v));
  };
  record(x);
  double t = t_grid[0];
  double dt = opt.initial_step;
  std::size_t steps = 0;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double target = t_grid[i];
    while (t < target) {
      double h = std::min(dt, target - t);
      if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
      const double h_try = h;
      ode::controlled_step_result res;
      int fails = 0;
      do {
        res = stepper.try_step(rhs, x, t, h);
        if (res == ode::fail && ++fails > 500) throw PropagationError("step size underflow at t = " + std::to_string(t));
      } while (res == ode::fail);
      if (h < 1e-14 * std::max(1.0, std::abs(t)) && t < target)
        throw PropagationError("step size underflow at t = " + std::to_string(t));
      if (++steps > opt.max_steps) throw PropagationError("maximum step count exceeded");
      // try_step advanced t and proposed a new h; keep the proposal unless the
      // previous step was clipped by the grid
      dt = (h_try < dt) ? std::max(dt, h) : h;
      if (std::abs(target - t) < 1e-13 * std::max(1.0, std::abs(target))) t = target;
    }
    record(x);
  }
  return tr;
}

/// Spectral bounds from Gershgorin discs of a Hermitian operator.
inline std::pair<double, double> gershgorin_bounds(const Operator& h) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto row = [&](double d, double off) {
    lo = std::min(lo, d - off);
    hi = std::max(hi, d + off);
  };
  if (h.is_sparse()) {
    const auto& s = h.sparse();
    for (Index r = 0; r < s.outerSize(); ++r) {
      double d = 0.0, off = 0.0;
      for (SparseMatrix::InnerIterator it(s, r); it; ++it) {
        if (it.col() == r) d = it.value().real();
        else off += std::abs(it.value());
      }
      row(d, off);
    }
  } else {
    const auto& m = h.dense();
    for (Index r = 0; r < m.rows(); ++r) row(m(r, r).real(), m.row(r).cwiseAbs().sum() - std::abs(m(r, r)));
  }
  return {lo, hi};
}

/// exp(-i H dt) psi for a time-independent Hermitian H by Chebyshev expansion.
class ChebyshevPropagator {
 public:
  explicit ChebyshevPropagator(Operator h, double tolerance = 1e-14) : h_(std::move(h)), tol_(tolerance) {
    auto [lo, hi] = gershgorin_bounds(h_);
    centre_ = 0.5 * (hi + lo);
    half_ = std::max(0.5 * (hi - lo), 1e-12) * 1.01;
  }

  const Operator& hamiltonian() const { return h_; }
  double half_width() const { return half_; }

  StateVector step(const StateVector& psi, double dt) const {
    if (dt == 0.0) return psi;
    const double x = half_ * dt;
    const int kmax = static_cast<int>(std::ceil(std::abs(x) + 10.0 * std::cbrt(std::abs(x)) + 40.0));
    std::vector<double> coef(kmax + 1);
    int nterms = kmax;
    for (int k = 0; k <= kmax; ++k) {
      coef[k] = std::cyl_bessel_j(static_cast<double>(k), std::abs(x));
      if (k > std::abs(x) && std::abs(coef[k]) < tol_) {
        nterms = k;
        break;
      }
    }
    const double sgn = dt < 0.0 ? -1.0 : 1.0;
    auto apply_scaled = [&](const StateVector& v) {
      StateVector w = h_.apply(v);
      w -= centre_ * v;
      return StateVector(w / half_);
    };
    // (-i)^k with sign flip for negative dt
    StateVector t0 = psi;
    StateVector t1 = apply_scaled(psi);
    StateVector acc = coef[0] * t0;
    cplx phase(0.0, -sgn);
    acc += 2.0 * coef[1] * phase * t1;
    for (int k = 2; k < nterms; ++k) {
      StateVector t2 = 2.0 * apply_scaled(t1) - t0;
      phase *= cplx(0.0, -sgn);
      acc += 2.0 * coef[k] * phase * t2;
      t0 = std::move(t1);
      t1 = std::move(t2);
    }
    return std::polar(1.0, -centre_ * dt) * acc;
  }

 private:
  Operator h_;
  double tol_;
  double centre_ = 0.0;
  double half_ = 1.0;
};

using Matrix4c = Eigen::Matrix<cplx, 4, 4>;

struct GateMap {
  Matrix4c map = Matrix4c::Identity();  // rows: dressed outputs, cols: dressed inputs
  std::array<double, 4> leakage{};      // per input
  double duration = 0.0;
  double norm_drift = 0.0;
};

struct GateDevice {
  SystemSpec system;          // two modes, qubit 1 first
  DriveSpec drive;            // Mathieu drive (epsilon ignored, taken from the schedule)
  PropagateOptions propagate;
  unsigned threads = 1;
};

/// Dressed computational basis (00, 01, 10, 11) of the idle Hamiltonian.
struct DressedBasis {
  std::array<StateVector, 4> states;
  std::array<double, 4> energies{};  // rad/ns, rotating frame
  std::array<double, 4> overlaps{};
};

inline DressedBasis dressed_basis(const SystemSpec& system, const DriveSpec& drive, double eps) {
  DriveSpec d = drive;
  d.epsilon = eps;
  auto spec = assign_dressed(eigensystem(build_rwa(system, std::span<const DriveSpec>(&d, 1))), system.dims(),
                             two_qubit_labels());
  DressedBasis b;
  for (int i = 0; i < 4; ++i) {
    const auto& l = two_qubit_labels()[i];
    StateVector v = spec.state(l);
    // fix the sign: bare component real positive
    const cplx c = v(basis_index(system.dims(), parse_fock_label(l)));
    if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
    b.states[i] = v;
    b.energies[i] = spec.energy(l);
    b.overlaps[i] = spec.overlaps.at(l);
  }
  return b;
}

/// Propagates the four dressed computational states through the schedule and
/// projects onto the dressed basis in the idle interaction frame. The idle
/// point is the Mathieu channel idle value.
inline GateMap simulate_gate(const GateDevice& dev, const PulseSchedule& schedule) {
  const Channel* mathieu = nullptr;
  for (const auto& c : schedule.channels)
    if (c.info.kind == ChannelKind::Mathieu) mathieu = &c;
  const double idle = mathieu ? mathieu->info.idle : 0.0;
  const DressedBasis basis = dressed_basis(dev.system, dev.drive, idle);
  const double frame = dev.drive.omega_d / 2.0;

  DriveSpec zero = dev.drive;
  zero.epsilon = 0.0;
  const Operator h0 = build_rwa(dev.system, std::span<const DriveSpec>(&zero, 1));
  std::vector<DriveTerm> terms;
  auto sched = std::make_shared<PulseSchedule>(schedule);
  if (mathieu) {
    const Operator d = two_photon_operator(dev.system, dev.drive.target_mode, dev.drive.phi);
    const std::size_t ci = mathieu - &schedule.channels.front();
    terms.push_back({d, [sched, ci](double t) {
                       return cplx(sched->value(sched->channels[ci], t), 0.0);
                     }});
  }
  for (std::size_t ci = 0; ci < schedule.channels.size(); ++ci) {
    const auto& c = schedule.channels[ci];
    if (c.info.kind != ChannelKind::XY) continue;
    detail::check_mode(dev.system, c.info.mode);
    auto env = [sched, ci](double t) { return sched->value(sched->channels[ci], t); };
    for (auto& term : xy_drive_term(dev.system, c.info.mode, env, c.info.carrier, frame)) terms.push_back(term);
  }

  GateMap g;
  const double T = schedule.duration();
  g.duration = T;
  if (T == 0.0) return g;
  const std::array<double, 2> grid{0.0, T};
  auto finals = parallel_map(4, dev.threads, [&](std::size_t j) {
    auto tr = propagate(h0, terms, basis.states[j], grid, dev.propagate);
    return std::make_pair(tr.states.back(), tr.norm_drift);
  });
  for (int j = 0; j < 4; ++j) {
    double kept = 0.0;
    for (int i = 0; i < 4; ++i) {
      const cplx amp = basis.states[i].dot(finals[j].first);
      g.map(i, j) = amp * std::polar(1.0, basis.energies[i] * T);
      kept += std::norm(amp);
    }
    g.leakage[j] = std::max(0.0, 1.0 - kept);
    g.norm_drift = std::max(g.norm_drift, finals[j].second);
  }
  return g;
}

/// diag(1, e^{i b}, e^{i a}, e^{i(a+b)}): Z phase a on qubit 1, b on qubit 2.
inline Matrix4c virtual_z(double a, double b) {
  Matrix4c d = Matrix4c::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = std::polar(1.0, b);
  d(2, 2) = std::polar(1.0, a);
  d(3, 3) = std::polar(1.0, a + b);
  return d;
}

struct VirtualZ {
  double qubit1 = 0.0, qubit2 = 0.0;
};

/// Z post-rotations maximizing |Tr(U_ideal^dag D M)| = |sum_k D_kk w_k|,
/// w = diag(M U_ideal^dag).
inline VirtualZ calibrate_virtual_z(const Matrix4c& m, const Matrix4c& ideal) {
  const Matrix4c p = m * ideal.adjoint();
  const std::array<cplx, 4> w{p(0, 0), p(1, 1), p(2, 2), p(3, 3)};
  auto value = [&](double a, double b) {
    return std::abs(w[0] + std::polar(1.0, b) * w[1] + std::polar(1.0, a) * w[2] + std::polar(1.0, a + b) * w[3]);
  };
  VirtualZ best;
  double best_val = -1.0;
  for (int sa = 0; sa < 8; ++sa)
    for (int sb = 0; sb < 8; ++sb) {
      double a = sa * kTwoPi / 8.0, b = sb * kTwoPi / 8.0;
      for (int it = 0; it < 200; ++it) {
        // exact maximization over one angle with the other fixed
        const cplx a0 = w[0] + std::polar(1.0, b) * w[1], a1 = w[2] + std::polar(1.0, b) * w[3];
        if (std::abs(a1) > 0.0) a = std::arg(a0) - std::arg(a1);
        const cplx b0 = w[0] + std::polar(1.0, a) * w[2], b1 = w[1] + std::polar(1.0, a) * w[3];
        const double nb = std::abs(b1) > 0.0 ? std::arg(b0) - std::arg(b1) : b;
        const bool done = std::abs(std::remainder(nb - b, kTwoPi)) < 1e-15;
        b = nb;
        if (done) break;
      }
      const double v = value(a, b);
      if (v > best_val + 1e-15) {
        best_val = v;
        best = {std::remainder(a, kTwoPi), std::remainder(b, kTwoPi)};
      }
    }
  return best;
}

inline Matrix4c apply_virtual_z(const Matrix4c& m, const VirtualZ& z) { return virtual_z(z.qubit1, z.qubit2) * m; }

/// Largest-magnitude diagonal element made real and positive.
inline Matrix4c fix_global_phase(const Matrix4c& m) {
  int k = 0;
  for (int i = 1; i < 4; ++i)
    if (std::abs(m(i, i)) > std::abs(m(k, k))) k = i;
  if (std::abs(m(k, k)) == 0.0) return m;
  return m * (std::conj(m(k, k)) / std::abs(m(k, k)));
}

/// arg(M00 M11 / (M01 M10)) using the diagonal elements.
inline double conditional_phase(const Matrix4c& m) {
  return std::arg(m(0, 0) * m(3, 3) / (m(1, 1) * m(2, 2)));
}

inline const std::array<std::string, 16>& pauli_labels() {
  static const std::array<std::string, 16> l{"II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ",
                                             "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY", "ZZ"};
  return l;
}

inline const std::array<Matrix4c, 16>& pauli_basis() {
  static const std::array<Matrix4c, 16> basis = [] {
    using M2 = Eigen::Matrix2cd;
    const cplx i(0.0, 1.0);
    std::array<M2, 4> s;
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, -i, i, 0;
    s[3] << 1, 0, 0, -1;
    std::array<Matrix4c, 16> out;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c) out[4 * a + b](r, c) = s[a](r / 2, c / 2) * s[b](r % 2, c % 2);
    return out;
  }();
  return basis;
}

using Matrix16c = Eigen::Matrix<cplx, 16, 16>;

struct ProcessMatrix {
  Matrix16c chi = Matrix16c::Zero();
  std::array<std::string, 16> basis_order = pauli_labels();
};

/// chi = c c^dag with c_m = Tr(P_m^dag M)/4 for the single-Kraus process
/// rho -> M rho M^dag.
inline ProcessMatrix chi_from_map(const Matrix4c& m) {
  Eigen::Matrix<cplx, 16, 1> c;
  for (int k = 0; k < 16; ++k) c(k) = (pauli_basis()[k].adjoint() * m).trace() / 4.0;
  ProcessMatrix p;
  p.chi = c * c.adjoint();
  return p;
}

struct GateMetrics {
  double fidelity = 0.0;
  double purity = 0.0;
  double leakage = 0.0;  // 1 - Tr(chi)
};

inline GateMetrics gate_metrics(const ProcessMatrix& sim, const ProcessMatrix& ideal) {
  if (sim.basis_order != ideal.basis_order) throw std::invalid_argument("process matrices use different basis orders");
  GateMetrics g;
  const double tr_s = sim.chi.trace().real();
  const double tr_i = ideal.chi.trace().real();
  const double overlap = (ideal.chi * sim.chi).trace().real();
  g.fidelity = (tr_s > 0.0 && tr_i > 0.0) ? std::clamp(overlap / (tr_i * tr_s), 0.0, 1.0) : 0.0;
  g.purity = (sim.chi * sim.chi).trace().real();
  g.leakage = 1.0 - tr_s;
  return g;
}

/// Minimum eigenvalue of the (Hermitian part of the) process matrix.
inline double chi_min_eigenvalue(const ProcessMatrix& p) {
  Matrix16c h = (p.chi + p.chi.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix16c> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// CSV rows "row,col,re,im".
inline void write_chi_csv(std::ostream& os, const ProcessMatrix& p) {
  os << "row,col,re,im\n";
  char buf[128];
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g\n", p.basis_order[r].c_str(), p.basis_order[c].c_str(),
                    p.chi(r, c).real(), p.chi(r, c).imag());
      os << buf;
    }
}

/// Magnitude grid for plotting; the header notes the log colour scale.
inline void write_chi_magnitude(std::ostream& os, const ProcessMatrix& p) {
  os << "# |chi| magnitude grid, log10 colour scale suggested\n";
  os << "basis";
  for (const auto& l : p.basis_order) os << ',' << l;
  os << '\n';
  char buf[40];
  for (int r = 0; r < 16; ++r) {
    os << p.basis_order[r];
    for (int c = 0; c < 16; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", std::abs(p.chi(r, c)));
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace mathieu
