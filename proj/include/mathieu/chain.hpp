#pragma once

// Five-qubit Mathieu chain: dressed Neel preparation, staggered correlator
// dynamics, the exact XXZ reference and stretched-exponential fits.

#include <unsupported/Eigen/NonLinearOptimization>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "composite.hpp"
#include "evolve.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

namespace mathieu {

struct ChainConfig {
  ChainLayout layout;
  DriveSpec drive;             // template; target_mode is ignored
  double horizon = 400.0;      // ns
  double sample_step = 0.25;   // ns
  Index dim_cap = kDefaultChainDimCap;
  unsigned threads = 1;

  std::vector<double> times() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("chain horizon must be positive");
    if (!(sample_step > 0.0)) throw std::invalid_argument("chain sample step must be positive");
    const auto n = static_cast<std::size_t>(std::floor(horizon / sample_step + 1e-9));
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = i * sample_step;
    return t;
  }
};

/// Modes of the chain carrying qubits (even positions).
inline std::vector<std::size_t> chain_qubit_modes(const SystemSpec& chain) {
  std::vector<std::size_t> q;
  for (std::size_t k = 0; k < chain.modes.size(); k += 2) q.push_back(k);
  return q;
}

/// Restriction of a system to a contiguous block of modes; only couplings
/// internal to the block are kept.
inline SystemSpec subsystem(const SystemSpec& system, std::size_t first, std::size_t count) {
  SystemSpec s;
  for (std::size_t k = first; k < first + count; ++k) s.modes.push_back(system.modes.at(k));
  for (const auto& c : system.couplings)
    if (c.i >= first && c.i < first + count && c.j >= first && c.j < first + count)
      s.couplings.push_back({c.i - first, c.j - first, c.g});
  return s;
}

class ChainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DressedNeel {
  StateVector state;
  std::vector<double> segment_overlaps;  // left pair, right pair
};

namespace detail {

inline std::vector<DriveSpec> segment_drives(const SystemSpec& seg, const DriveSpec& tpl, std::size_t first) {
  std::vector<DriveSpec> d;
  for (std::size_t k = 0; k < seg.modes.size(); ++k)
    if ((first + k) % 2 == 1) {
      DriveSpec x = tpl;
      x.target_mode = k;
      d.push_back(x);
    }
  return d;
}

/// P b for P the projector onto the dressed versions of two bare labels.
inline StateVector project_segment(const SystemSpec& seg, const DriveSpec& tpl, std::size_t first,
                                   const std::vector<std::string>& labels, const std::string& target,
                                   std::vector<double>& overlaps) {
  auto drives = segment_drives(seg, tpl, first);
  Operator h = drives.empty() ? build_lab_static(seg) : build_rwa(seg, drives);
  auto spec = assign_dressed(eigensystem(h), seg.dims(), labels);
  StateVector bare = StateVector::Zero(h.dim());
  bare(basis_index(seg.dims(), parse_fock_label(target))) = 1.0;
  StateVector out = StateVector::Zero(h.dim());
  for (const auto& l : labels) {
    const double ov = spec.overlaps.at(l);
    if (ov < 0.5) throw ChainError("segment dressed state '" + l + "' overlap " + std::to_string(ov) + " < 0.5");
    overlaps.push_back(ov);
    StateVector v = spec.state(l);
    out += v * v.dot(bare);
  }
  return out;
}

inline StateVector kron(const StateVector& a, const StateVector& b) {
  StateVector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

}  // namespace detail

/// Dressed Neel |10101> for the 5-qubit chain: each 4-mode end segment is
/// diagonalized, the bare target is projected onto the span of its dressed
/// single-excitation qubit states, and the result is joined with the bare
/// centre qubit in |1>.
inline DressedNeel dressed_neel(const ChainConfig& cfg) {
  if (cfg.layout.n_qubits != 5) throw std::invalid_argument("dressed Neel preparation expects five qubits");
  SystemSpec chain = chain_system(cfg.layout);
  DressedNeel out;
  SystemSpec left = subsystem(chain, 0, 4);
  SystemSpec right = subsystem(chain, 5, 4);
  StateVector vl = detail::project_segment(left, cfg.drive, 0, {"1000", "0010"}, "1000", out.segment_overlaps);
  StateVector vr = detail::project_segment(right, cfg.drive, 5, {"0100", "0001"}, "0001", out.segment_overlaps);
  StateVector centre = StateVector::Zero(chain.modes[4].dim);
  centre(1) = 1.0;
  out.state = detail::kron(detail::kron(vl, centre), vr);
  const double n = out.state.norm();
  if (n == 0.0) throw ChainError("dressed Neel projection vanished");
  out.state /= n;
  return out;
}

/// Per-basis-state weight of the staggered correlator: the mean over qubit
/// pairs i < j of (-1)^{|i-j|} s_i s_j with s = +1 for Fock 0 and -1 for any
/// excited level.
inline Eigen::VectorXd staggered_weights(std::span<const int> dims, std::span<const std::size_t> qubit_modes) {
  Index n = 1;
  for (int d : dims) n *= d;
  const std::size_t q = qubit_modes.size();
  if (q < 2) throw std::invalid_argument("correlator needs at least two qubits");
  Eigen::VectorXd w(n);
  std::vector<int> s(q);
  const double pairs = q * (q - 1) / 2.0;
  for (Index b = 0; b < n; ++b) {
    auto occ = basis_occupations(dims, b);
    for (std::size_t i = 0; i < q; ++i) s[i] = occ[qubit_modes[i]] == 0 ? 1 : -1;
    int acc = 0;
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = i + 1; j < q; ++j) acc += (((j - i) % 2) ? -1 : 1) * s[i] * s[j];
    w(b) = acc / pairs;
  }
  return w;
}

inline double staggered_correlator(const StateVector& state, const Eigen::VectorXd& weights) {
  if (state.size() != weights.size()) throw std::invalid_argument("state and correlator weights differ in size");
  return state.cwiseAbs2().dot(weights);
}

inline double staggered_correlator(const StateVector& state, const SystemSpec& system,
                                   std::span<const std::size_t> qubit_modes) {
  const auto dims = system.dims();
  return staggered_correlator(state, staggered_weights(dims, qubit_modes));
}

struct CorrelatorSeries {
  std::vector<double> t;
  std::vector<double> raw;
  std::vector<double> norm;  // raw / raw[0]; empty when raw[0] == 0
  bool normalized = true;
  double norm_drift = 0.0;

  void finish() {
    normalized = !raw.empty() && raw.front() != 0.0;
    norm.clear();
    if (normalized)
      for (double v : raw) norm.push_back(v / raw.front());
  }
};

/// Indices of the basis states with the given total-excitation parity.
inline std::vector<Index> parity_sector(std::span<const int> dims, int parity) {
  Index n = 1;
  for (int d : dims) n *= d;
  std::vector<Index> out;
  for (Index b = 0; b < n; ++b) {
    auto occ = basis_occupations(dims, b);
    int tot = 0;
    for (int o : occ) tot += o;
    if (tot % 2 == parity) out.push_back(b);
  }
  return out;
}

/// Sub-block H[idx, idx]; throws if H couples the block to its complement.
inline Operator restrict_operator(const Operator& h, const std::vector<Index>& idx) {
  std::vector<Index> pos(h.dim(), -1);
  for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = static_cast<Index>(i);
  SparseMatrix full = h.to_sparse();
  std::vector<Eigen::Triplet<cplx>> trip;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (SparseMatrix::InnerIterator it(full, idx[i]); it; ++it) {
      if (pos[it.col()] < 0) {
        if (std::abs(it.value()) > 0.0) throw ChainError("operator does not conserve the requested sector");
        continue;
      }
      trip.emplace_back(static_cast<Index>(i), pos[it.col()], it.value());
    }
  SparseMatrix sub(idx.size(), idx.size());
  sub.setFromTriplets(trip.begin(), trip.end());
  return Operator::from_sparse(std::move(sub), h.hermitian());
}

/// Propagates a chain state under the static rotating-frame Hamiltonian and
/// samples the staggered correlator. The two-photon drive and the exchange
/// terms conserve excitation parity, so propagation runs in the parity
/// sector of the initial state.
inline CorrelatorSeries evolve_chain(const ChainConfig& cfg, const StateVector& psi0, double direction = 1.0) {
  SystemSpec chain = chain_system(cfg.layout);
  if (psi0.size() != chain.dimension()) throw std::invalid_argument("initial state does not match the chain");
  Operator h = build_chain(cfg.layout, cfg.drive, cfg.dim_cap);
  const auto dims = chain.dims();
  const auto times = cfg.times();

  std::vector<Index> sector;
  for (int parity = 0; parity < 2 && sector.empty(); ++parity) {
    auto idx = parity_sector(dims, parity);
    double w = 0.0;
    for (Index b : idx) w += std::norm(psi0(b));
    if (std::abs(w - 1.0) < 1e-12) sector = std::move(idx);
  }
  if (sector.empty()) {
    sector.resize(psi0.size());
    std::iota(sector.begin(), sector.end(), Index{0});
  }
  Operator hs = restrict_operator(h, sector);
  Eigen::VectorXd weights_full = staggered_weights(dims, chain_qubit_modes(chain));
  Eigen::VectorXd weights(sector.size());
  StateVector psi(sector.size());
  for (std::size_t i = 0; i < sector.size(); ++i) {
    weights(i) = weights_full(sector[i]);
    psi(i) = psi0(sector[i]);
  }

  ChebyshevPropagator prop(hs);
  CorrelatorSeries out;
  out.t = times;
  out.raw.push_back(staggered_correlator(psi, weights));
  for (std::size_t i = 1; i < times.size(); ++i) {
    psi = prop.step(psi, direction * (times[i] - times[i - 1]));
    const double drift = std::abs(psi.norm() - 1.0);
    out.norm_drift = std::max(out.norm_drift, drift);
    if (drift > 1e-6) throw PropagationError("chain norm drift exceeds the abort threshold");
    out.raw.push_back(staggered_correlator(psi, weights));
  }
  out.finish();
  return out;
}

/// Forward evolution over the horizon followed by evolution under -H for the
/// same time; returns the final normalized correlator (ideally 1).
inline double chain_time_reversal(const ChainConfig& cfg, const StateVector& psi0) {
  SystemSpec chain = chain_system(cfg.layout);
  Operator h = build_chain(cfg.layout, cfg.drive, cfg.dim_cap);
  ChebyshevPropagator prop(h);
  StateVector psi = psi0;
  const auto times = cfg.times();
  for (std::size_t i = 1; i < times.size(); ++i) psi = prop.step(psi, times[i] - times[i - 1]);
  for (std::size_t i = times.size(); i-- > 1;) psi = prop.step(psi, -(times[i] - times[i - 1]));
  const auto w = staggered_weights(chain.dims(), chain_qubit_modes(chain));
  return staggered_correlator(psi, w) / staggered_correlator(psi0, w);
}

/// Exact N-spin XXZ chain H = sum (J_xx/2)(XX + YY) + (J_zz/4) ZZ started in
/// the bare Neel state; returns the normalized staggered correlator.
struct XxzResult {
  CorrelatorSeries series;
  std::vector<double> total_sz;  // sum_i <sigma_z^i>
  std::vector<double> energy;    // <H>, rad/ns
};

inline XxzResult xxz_reference(double jxx, double jzz, std::span<const double> times, int n_spins = 5) {
  if (n_spins < 2 || n_spins > 12) throw std::invalid_argument("XXZ reference supports 2..12 spins");
  const Index dim = Index{1} << n_spins;
  // bit (n-1-i) of the index is spin i; 1 = excited = sigma_z -1
  auto sz = [&](Index b, int i) { return ((b >> (n_spins - 1 - i)) & 1) ? -1.0 : 1.0; };
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  const double xx = to_angular(jxx), zz = to_angular(jzz);
  for (Index b = 0; b < dim; ++b)
    for (int i = 0; i + 1 < n_spins; ++i) {
      h(b, b) += zz / 4.0 * sz(b, i) * sz(b, i + 1);
      if (sz(b, i) != sz(b, i + 1)) {
        // (XX + YY)/2 flips an anti-aligned pair with amplitude 1
        const Index flipped = b ^ (Index{1} << (n_spins - 1 - i)) ^ (Index{1} << (n_spins - 2 - i));
        h(flipped, b) += xx;
      }
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  Index neel = 0;
  for (int i = 0; i < n_spins; ++i)
    if (i % 2 == 0) neel |= Index{1} << (n_spins - 1 - i);
  Eigen::VectorXd w(dim), mz(dim);
  std::vector<std::size_t> q(n_spins);
  std::iota(q.begin(), q.end(), std::size_t{0});
  std::vector<int> dims(n_spins, 2);
  // staggered_weights uses mode-0-slowest ordering, which matches the bit layout
  w = staggered_weights(dims, q);
  for (Index b = 0; b < dim; ++b) {
    mz(b) = 0.0;
    for (int i = 0; i < n_spins; ++i) mz(b) += sz(b, i);
  }
  const Eigen::VectorXcd c0 = es.eigenvectors().row(neel).transpose().cast<cplx>();
  XxzResult out;
  for (double t : times) {
    Eigen::VectorXcd ph(dim);
    for (Index k = 0; k < dim; ++k) ph(k) = c0(k) * std::polar(1.0, -es.eigenvalues()(k) * t);
    StateVector psi = es.eigenvectors().cast<cplx>() * ph;
    out.series.t.push_back(t);
    out.series.raw.push_back(staggered_correlator(psi, w));
    out.total_sz.push_back(psi.cwiseAbs2().dot(mz));
    out.energy.push_back(psi.dot(h.cast<cplx>() * psi).real());
  }
  out.series.finish();
  return out;
}

struct FitOptions {
  double rise = 0.05;         // ends the window at the first minimum once C climbs this far above it
  double smoothing = 0.0;     // ns, centred moving average applied before fitting (0 = off)
  std::vector<double> n_starts{0.5, 1.0, 2.0};
};

struct FitResult {
  double t0 = 0.0;
  double n = 0.0;
  double t_min = 0.0, t_max = 0.0;
  double rms = 0.0;
  bool converged = false;
  std::size_t points = 0;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Centred moving average of width ~window (odd number of samples, shrinking
/// at the ends), renormalized to start at 1.
inline std::vector<double> smooth_series(std::span<const double> t, std::span<const double> c, double window) {
  std::vector<double> out(c.begin(), c.end());
  if (window <= 0.0 || c.size() < 3) return out;
  const double dt = (t.back() - t.front()) / (t.size() - 1);
  long m = std::lround(window / dt);
  if (m % 2 == 0) ++m;
  const long h = m / 2;
  const long n = static_cast<long>(c.size());
  for (long i = 0; i < n; ++i) {
    const long a = std::max(0L, i - h), b = std::min(n - 1, i + h);
    double s = 0.0;
    for (long j = a; j <= b; ++j) s += c[j];
    out[i] = s / (b - a + 1);
  }
  const double c0 = out.front();
  if (c0 != 0.0)
    for (auto& v : out) v /= c0;
  return out;
}

/// Early-time window: from t = 0 until C first drops below 1/e, or until the
/// first minimum once C has risen opt.rise above its running minimum; the
/// full series when neither happens. Returns the last included index.
inline std::size_t fit_window_end(std::span<const double> c, double rise) {
  double m = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] < std::exp(-1.0)) return i;
    if (c[i] < m) {
      m = c[i];
      arg = i;
    }
    if (rise > 0.0 && c[i] > m + rise) return arg;
  }
  return c.size() - 1;
}

namespace detail {

struct StretchedFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::vector<double> t, c;
  int inputs() const { return 2; }
  int values() const { return static_cast<int>(t.size()); }

  // p = (log t0, log n)
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    const double t0 = std::exp(p(0)), n = std::exp(p(1));
    for (std::size_t i = 0; i < t.size(); ++i) f(i) = std::exp(-std::pow(t[i] / t0, n)) - c[i];
    return 0;
  }
  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    const double t0 = std::exp(p(0)), n = std::exp(p(1));
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] <= 0.0) {
        j(i, 0) = j(i, 1) = 0.0;
        continue;
      }
      const double s = std::pow(t[i] / t0, n);
      const double f = std::exp(-s);
      j(i, 0) = f * s * n;
      j(i, 1) = -f * s * n * std::log(t[i] / t0);
    }
    return 0;
  }
};

}  // namespace detail

/// Least-squares fit of exp[-(t/t0)^n] over the early-time window,
/// Levenberg-Marquardt from several starting exponents; the smallest
/// residual wins.
inline FitResult fit_stretched(std::span<const double> t, std::span<const double> c, const FitOptions& opt = {}) {
  if (t.size() != c.size()) throw std::invalid_argument("time and value series differ in length");
  if (t.size() < 5) throw FitError("fewer than 5 points in the fit window");
  std::vector<double> series = smooth_series(t, c, opt.smoothing);
  const std::size_t end = fit_window_end(series, opt.rise);
  if (end + 1 < 5) throw FitError("fewer than 5 points in the fit window");

  detail::StretchedFunctor fn;
  fn.t.assign(t.begin(), t.begin() + end + 1);
  fn.c.assign(series.begin(), series.begin() + end + 1);
  const double t_guess = std::max(fn.t.back(), 1e-6);

  FitResult best;
  best.rms = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double n0 : opt.n_starts) {
    Eigen::VectorXd p(2);
    p << std::log(t_guess), std::log(n0);
    Eigen::LevenbergMarquardt<detail::StretchedFunctor> lm(fn);
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    lm.parameters.maxfev = 4000;
    auto status = lm.minimize(p);
    Eigen::VectorXd f(fn.values());
    fn(p, f);
    const double rms = std::sqrt(f.squaredNorm() / f.size());
    if (!std::isfinite(rms)) continue;
    any = true;
    if (rms < best.rms) {
      best.rms = rms;
      best.t0 = std::exp(p(0));
      best.n = std::exp(p(1));
      best.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                       status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                       status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                       status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                       status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                       status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                       status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
    }
  }
  if (!any) throw FitError("all fit starts diverged");
  best.t_min = t.front();
  best.t_max = t[end];
  best.points = end + 1;
  return best;
}

/// Working point for anisotropy programming: one QCQ unit.
struct QcqUnit {
  ModeSpec qubit;
  ModeSpec coupler;
  double g_qc = 0.0;
  double g_qq = 0.0;

  SystemSpec system() const {
    ModeSpec q1 = qubit, q2 = qubit;
    q1.label = "Q1";
    q2.label = "Q2";
    return qcq_system(q1, coupler, q2, g_qc, g_qc, g_qq);
  }
};

struct ProgramGrid {
  double omega_d_min = 4.6, omega_d_max = 6.2, omega_d_step = 0.05;
  double eps_min = 0.0, eps_max = 0.2, eps_step = 0.005;
  double eps_tolerance = 1e-7;  // GHz, bisection stop
  std::size_t refine = 4;       // brackets bisected per target
  double min_jxx_fraction = 0.5;  // of the static |J_xx|; keeps the exchange clock comparable
  unsigned threads = 1;
};

struct ProgramResult {
  double epsilon = 0.0;
  double omega_d = 0.0;
  double jxx = 0.0;  // GHz, signed as extracted
  double jzz = 0.0;  // GHz
  double delta = 0.0;
  double residual = 0.0;
  double overlap_101 = 0.0;
  bool reachable = true;
};

struct QcqPoint {
  double jxx = 0.0, jzz = 0.0, delta = 0.0, overlap_101 = 0.0, overlap_000 = 0.0;
};

/// Couplings and anisotropy J_zz / (2 |J_xx|) of one QCQ unit at (eps, omega_d).
inline QcqPoint qcq_point(const QcqUnit& unit, double eps, double omega_d) {
  SystemSpec s = unit.system();
  DriveSpec d{kQcqCouplerMode, eps, omega_d, 0.0};
  auto spec = assign_dressed(eigensystem(build_rwa(s, std::span<const DriveSpec>(&d, 1))), s.dims(), qcq_labels());
  auto c = qcq_couplings(spec);
  QcqPoint p;
  p.jxx = c.jxx;
  p.jzz = c.jzz;
  p.delta = c.jzz / (2.0 * std::abs(c.jxx));
  p.overlap_101 = spec.overlaps.at("101");
  p.overlap_000 = spec.overlaps.at("000");
  return p;
}

/// (omega_d, eps) grid of QCQ couplings; computed once and inverted for any
/// number of target anisotropies.
struct ProgramMap {
  QcqUnit unit;
  ProgramGrid grid;
  std::vector<double> omega_d, epsilon;
  std::vector<std::vector<QcqPoint>> rows;  // rows[omega_d index][eps index]
};

inline ProgramMap program_map(const QcqUnit& unit, const ProgramGrid& grid = {}) {
  if (!(grid.omega_d_step > 0.0) || !(grid.eps_step > 0.0)) throw std::invalid_argument("program grid steps must be positive");
  ProgramMap m{unit, grid, {}, {}, {}};
  for (double w = grid.omega_d_min; w <= grid.omega_d_max + 1e-9; w += grid.omega_d_step) m.omega_d.push_back(w);
  for (double e = grid.eps_min; e <= grid.eps_max + 1e-9; e += grid.eps_step) m.epsilon.push_back(e);
  m.rows = parallel_map(m.omega_d.size(), grid.threads, [&](std::size_t r) {
    std::vector<QcqPoint> row;
    for (double e : m.epsilon) row.push_back(qcq_point(unit, e, m.omega_d[r]));
    return row;
  });
  return m;
}

/// Brackets of Delta - target along eps on the map, ranked by the smaller
/// dressed |101> overlap of their end points. |J_xx| must stay above
/// grid.min_jxx_fraction of its static value at both ends and at the solution.
/// The best grid.refine brackets are bisected and the solution keeping the
/// largest |101> overlap wins (ties: smaller eps). An unreachable target
/// returns the nearest grid point with reachable = false.
inline ProgramResult program_delta(const ProgramMap& map, double target) {
  struct Bracket {
    std::size_t r, i;
    double score;
  };
  std::vector<Bracket> brackets;
  const double jxx_floor = map.grid.min_jxx_fraction * std::abs(qcq_point(map.unit, 0.0, map.omega_d.front()).jxx);
  for (std::size_t r = 0; r < map.omega_d.size(); ++r)
    for (std::size_t i = 0; i + 1 < map.epsilon.size(); ++i) {
      const auto& a = map.rows[r][i];
      const auto& b = map.rows[r][i + 1];
      if (std::min(a.overlap_101, b.overlap_101) < 0.5 || std::min(a.overlap_000, b.overlap_000) < 0.5) continue;
      if (std::min(std::abs(a.jxx), std::abs(b.jxx)) < jxx_floor) continue;
      const double fa = a.delta - target, fb = b.delta - target;
      if (fa != 0.0 && (fa < 0.0) == (fb < 0.0)) continue;
      // a pole in Delta also flips the sign; require a modest jump
      if (std::abs(b.delta - a.delta) > 2.0) continue;
      brackets.push_back({r, i, std::min(a.overlap_101, b.overlap_101)});
    }
  std::stable_sort(brackets.begin(), brackets.end(), [](const Bracket& x, const Bracket& y) { return x.score > y.score; });
  if (brackets.size() > map.grid.refine) brackets.resize(map.grid.refine);

  std::optional<ProgramResult> best;
  for (const auto& br : brackets) {
    const double wd = map.omega_d[br.r];
    double lo = map.epsilon[br.i], hi = map.epsilon[br.i + 1];
    double flo = map.rows[br.r][br.i].delta - target;
    QcqPoint pm = map.rows[br.r][br.i];
    if (flo != 0.0) {
      while (hi - lo > map.grid.eps_tolerance) {
        const double mid = 0.5 * (lo + hi);
        const double fm = qcq_point(map.unit, mid, wd).delta - target;
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      lo = 0.5 * (lo + hi);
      pm = qcq_point(map.unit, lo, wd);
    }
    if (pm.overlap_101 < 0.5 || std::abs(pm.jxx) < jxx_floor) continue;
    ProgramResult res{lo, wd, pm.jxx, pm.jzz, pm.delta, std::abs(pm.delta - target), pm.overlap_101, true};
    if (!best || res.overlap_101 > best->overlap_101 + 1e-9 ||
        (std::abs(res.overlap_101 - best->overlap_101) <= 1e-9 && res.epsilon < best->epsilon))
      best = res;
  }
  if (best) return *best;

  ProgramResult nearest;
  nearest.residual = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < map.omega_d.size(); ++r)
    for (std::size_t i = 0; i < map.epsilon.size(); ++i) {
      const auto& p = map.rows[r][i];
      if (p.overlap_101 < 0.5 || std::abs(p.jxx) < jxx_floor) continue;
      const double res = std::abs(p.delta - target);
      if (res < nearest.residual)
        nearest = {map.epsilon[i], map.omega_d[r], p.jxx, p.jzz, p.delta, res, p.overlap_101, false};
    }
  nearest.reachable = false;
  return nearest;
}

inline ProgramResult program_delta(const QcqUnit& unit, double target, const ProgramGrid& grid = {}) {
  return program_delta(program_map(unit, grid), target);
}

/// Qubit-coupler exchange period 1/|omega_c - omega_q| (ns), the width of the
/// fast dressing oscillation in the chain correlator.
inline double exchange_period(const ChainLayout& layout) {
  const double d = std::abs(layout.coupler.omega - layout.qubit.omega);
  return d > 0.0 ? 1.0 / d : 0.0;
}

}  // namespace mathieu
