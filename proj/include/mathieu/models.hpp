#pragma once

// Static and driven Hamiltonians for the two-qubit, qubit-coupler-qubit and
// alternating qubit/coupler chain devices.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "composite.hpp"

namespace mathieu {

/// Two-photon drive: lab term epsilon * cos(omega_d t + phi) (a^2 + a^dag^2).
struct DriveSpec {
  std::size_t target_mode = 0;
  double epsilon = 0.0;  // GHz
  double omega_d = 0.0;  // GHz
  double phi = 0.0;      // rad

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("drive epsilon must be >= 0");
    if (!(omega_d > 0.0) || !std::isfinite(omega_d)) throw std::invalid_argument("drive omega_d must be > 0");
  }
};

/// Uniform rotation rate applied to every mode; nullopt is the lab frame.
struct FrameSpec {
  std::optional<double> frame_freq;  // GHz

  static FrameSpec lab() { return {}; }
  static FrameSpec rotating(double ghz) { return FrameSpec{ghz}; }
  double rate() const { return frame_freq.value_or(0.0); }
};

/// Time-dependent contribution coeff(t) * op to a Hamiltonian. The operator
/// is dimensionless; coeff returns rad/ns.
struct DriveTerm {
  Operator op;
  std::function<cplx(double)> coeff;
};

/// Minimum truncation for a mode carrying a two-photon drive (|4> must exist).
inline constexpr int kMinDrivenDim = 5;

namespace detail {

inline SparseMatrix local_kerr(int d) {
  // a^dag^2 a^2 = n(n-1)
  SparseMatrix m(d, d);
  for (int n = 0; n < d; ++n)
    if (n >= 2) m.insert(n, n) = static_cast<double>(n) * (n - 1);
  m.makeCompressed();
  return m;
}

inline SparseMatrix local_number(int d) {
  SparseMatrix m(d, d);
  for (int n = 1; n < d; ++n) m.insert(n, n) = static_cast<double>(n);
  m.makeCompressed();
  return m;
}

/// e^{i phi} a^2 + e^{-i phi} a^dag^2
inline SparseMatrix local_two_photon(int d, double phi) {
  SparseMatrix a = local_ladder(d);
  SparseMatrix a2 = (a * a).pruned();
  SparseMatrix ad2 = SparseMatrix(a2.adjoint());
  SparseMatrix m = std::polar(1.0, phi) * a2 + std::polar(1.0, -phi) * ad2;
  m.makeCompressed();
  return m;
}

inline void check_drive_target(const SystemSpec& system, const DriveSpec& drive) {
  check_mode(system, drive.target_mode);
  if (system.modes[drive.target_mode].dim < kMinDrivenDim)
    throw std::invalid_argument("driven mode '" + system.modes[drive.target_mode].label +
                                "' needs truncation >= 5 to represent |4>");
}

/// Exchange term sum g (a_i^dag a_j + h.c.) in angular units.
inline SparseMatrix exchange_terms(const SystemSpec& system) {
  const Index n = system.dimension();
  SparseMatrix h(n, n);
  std::vector<SparseMatrix> ladders;
  ladders.reserve(system.modes.size());
  for (std::size_t k = 0; k < system.modes.size(); ++k)
    ladders.push_back(embed_sparse(system, k, local_ladder(system.modes[k].dim)));
  for (const auto& c : system.couplings) {
    if (c.g == 0.0) continue;
    SparseMatrix hop = SparseMatrix(ladders[c.i].adjoint()) * ladders[c.j];
    SparseMatrix term = hop + SparseMatrix(hop.adjoint());
    h += to_angular(c.g) * term;
  }
  return h;
}

inline SparseMatrix frame_hamiltonian(const SystemSpec& system, std::span<const DriveSpec> drives,
                                      double frame_ghz) {
  system.validate();
  const Index n = system.dimension();
  SparseMatrix h(n, n);
  for (std::size_t k = 0; k < system.modes.size(); ++k) {
    const auto& m = system.modes[k];
    SparseMatrix local = to_angular(m.omega - frame_ghz) * local_number(m.dim) -
                         (to_angular(m.alpha) / 2.0) * local_kerr(m.dim);
    h += embed_sparse(system, k, local);
  }
  h += exchange_terms(system);
  for (const auto& d : drives) {
    d.validate();
    check_drive_target(system, d);
    if (d.epsilon == 0.0) continue;
    const int dim = system.modes[d.target_mode].dim;
    h += embed_sparse(system, d.target_mode, (to_angular(d.epsilon) / 2.0) * local_two_photon(dim, d.phi));
  }
  h.prune(cplx(0.0, 0.0));
  h.makeCompressed();
  return h;
}

inline double common_drive_frequency(std::span<const DriveSpec> drives) {
  if (drives.empty()) throw std::invalid_argument("rotating-frame build needs at least one drive to fix the frame");
  const double wd = drives.front().omega_d;
  for (const auto& d : drives)
    if (std::abs(d.omega_d - wd) > 1e-12)
      throw std::invalid_argument("drives with different omega_d need multiple frames, which are unsupported");
  return wd;
}

}  // namespace detail

/// sum_k [omega_k n_k - (alpha_k/2) a_k^dag^2 a_k^2] + sum g_ij (a_i^dag a_j + h.c.)
inline Operator build_lab_static(const SystemSpec& system) {
  return Operator::from_sparse(detail::frame_hamiltonian(system, {}, 0.0)).with_hermitian(true);
}

/// Static Hamiltonian in a uniformly rotating frame with RWA two-photon drive
/// terms. Rotating every mode at the same rate leaves exchange terms unchanged.
inline Operator build_in_frame(const SystemSpec& system, std::span<const DriveSpec> drives, const FrameSpec& frame) {
  return Operator::from_sparse(detail::frame_hamiltonian(system, drives, frame.rate())).with_hermitian(true);
}

/// Time-independent RWA Hamiltonian in the frame rotating at omega_d/2.
inline Operator build_rwa(const SystemSpec& system, std::span<const DriveSpec> drives) {
  const double wd = detail::common_drive_frequency(drives);
  return build_in_frame(system, drives, FrameSpec::rotating(wd / 2.0));
}

/// The two-photon drive operator (a_k^2 + a_k^dag^2) / 2 in the composite
/// space, scaled to angular units per GHz of epsilon.
inline Operator two_photon_operator(const SystemSpec& system, std::size_t k, double phi = 0.0) {
  detail::check_mode(system, k);
  return Operator::from_sparse(
      detail::embed_sparse(system, k, (kTwoPi / 2.0) * detail::local_two_photon(system.modes[k].dim, phi)), true);
}

/// Three-mode system (q1, coupler, q2); mode 1 is the coupler.
inline SystemSpec qcq_system(const ModeSpec& q1, const ModeSpec& coupler, const ModeSpec& q2, double g1c,
                             double g2c, double g12) {
  SystemSpec s;
  s.modes = {q1, coupler, q2};
  s.couplings = {{0, 1, g1c}, {2, 1, g2c}, {0, 2, g12}};
  return s;
}

inline constexpr std::size_t kQcqCouplerMode = 1;

/// QCQ Hamiltonian: lab frame without a drive, RWA frame at omega_d/2 with one.
inline Operator build_qcq(const ModeSpec& q1, const ModeSpec& coupler, const ModeSpec& q2, double g1c, double g2c,
                          double g12, const std::optional<DriveSpec>& drive) {
  SystemSpec s = qcq_system(q1, coupler, q2, g1c, g2c, g12);
  if (!drive) return build_lab_static(s);
  if (drive->target_mode != kQcqCouplerMode)
    throw std::invalid_argument("QCQ drive must target the coupler (mode 1)");
  DriveSpec d = *drive;
  return build_rwa(s, std::span<const DriveSpec>(&d, 1));
}

struct ChainLayout {
  int n_qubits = 5;
  ModeSpec qubit;
  ModeSpec coupler;
  double g_qc = 0.0;  // nearest neighbour qubit-coupler
  double g_qq = 0.0;  // direct qubit-qubit across each coupler
};

inline constexpr Index kDefaultChainDimCap = 2'000'000;

/// Alternating Q-C-Q-...-Q chain (open boundaries). Even modes are qubits.
inline SystemSpec chain_system(const ChainLayout& layout) {
  if (layout.n_qubits < 2) throw std::invalid_argument("chain needs at least two qubits");
  SystemSpec s;
  const std::size_t n_modes = 2 * static_cast<std::size_t>(layout.n_qubits) - 1;
  for (std::size_t k = 0; k < n_modes; ++k) {
    ModeSpec m = (k % 2 == 0) ? layout.qubit : layout.coupler;
    m.label = ((k % 2 == 0) ? "Q" : "C") + std::to_string(k / 2);
    s.modes.push_back(m);
  }
  for (std::size_t k = 0; k + 1 < n_modes; ++k) s.couplings.push_back({k, k + 1, layout.g_qc});
  for (std::size_t k = 0; k + 2 < n_modes; k += 2) s.couplings.push_back({k, k + 2, layout.g_qq});
  return s;
}

inline std::vector<DriveSpec> chain_drives(const SystemSpec& chain, const DriveSpec& drive_template) {
  std::vector<DriveSpec> drives;
  for (std::size_t k = 1; k < chain.modes.size(); k += 2) {
    DriveSpec d = drive_template;
    d.target_mode = k;
    drives.push_back(d);
  }
  return drives;
}

/// Rotating-frame chain Hamiltonian with identical two-photon terms on every coupler.
inline Operator build_chain(const ChainLayout& layout, const DriveSpec& drive_template,
                            Index dim_cap = kDefaultChainDimCap) {
  SystemSpec s = chain_system(layout);
  const Index dim = s.dimension();
  if (dim > dim_cap)
    throw std::length_error("chain dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(dim_cap) +
                            "; lower the qubit or coupler truncation");
  auto drives = chain_drives(s, drive_template);
  return build_rwa(s, drives);
}

/// RWA XY drive on mode k: (f(t)/2)(a^dag e^{-i delta t} + a e^{i delta t}),
/// delta = omega_xy - frame_freq. The envelope is in GHz.
inline std::vector<DriveTerm> xy_drive_term(const SystemSpec& system, std::size_t k,
                                            std::function<double(double)> envelope, double omega_xy,
                                            double frame_freq) {
  Operator a = destroy(system, k);
  Operator ad = a.adjoint();
  const double delta = to_angular(omega_xy - frame_freq);
  auto up = [envelope, delta](double t) { return std::polar(to_angular(envelope(t)) / 2.0, -delta * t); };
  auto down = [envelope, delta](double t) { return std::polar(to_angular(envelope(t)) / 2.0, delta * t); };
  return {DriveTerm{ad, up}, DriveTerm{a, down}};
}

/// Full lab-frame two-photon drive epsilon cos(omega_d t + phi)(a^2 + a^dag^2).
inline std::vector<DriveTerm> lab_drive_terms(const SystemSpec& system, std::span<const DriveSpec> drives) {
  std::vector<DriveTerm> terms;
  for (const auto& d : drives) {
    d.validate();
    detail::check_drive_target(system, d);
    const int dim = system.modes[d.target_mode].dim;
    Operator op =
        Operator::from_sparse(detail::embed_sparse(system, d.target_mode, detail::local_two_photon(dim, 0.0)), true);
    const double eps = to_angular(d.epsilon);
    const double wd = to_angular(d.omega_d);
    const double phi = d.phi;
    terms.push_back({op, [eps, wd, phi](double t) { return cplx(eps * std::cos(wd * t + phi), 0.0); }});
  }
  return terms;
}

}  // namespace mathieu
