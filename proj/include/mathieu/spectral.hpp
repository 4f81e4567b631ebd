#pragma once

// Diagonalization, dressed-state labelling and coupling extraction.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "composite.hpp"
#include "models.hpp"
#include "parallel.hpp"

namespace mathieu {

/// Eigenpairs with ascending energies (rad/ns); states are columns.
struct Eigensystem {
  Eigen::VectorXd energies;
  DenseMatrix states;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int iterations) : std::runtime_error(what), iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

struct LanczosOptions {
  double tolerance = 1e-9;  // residual relative to ||H||
  int max_restarts = 400;
  int basis_size = 0;  // 0 = automatic
  unsigned seed = 12345;
};

namespace detail {

inline void require_hermitian(const Operator& h) {
  const double scale = std::max(1.0, h.norm_inf());
  if (h.hermiticity_defect() > 1e-10 * scale) throw std::domain_error("eigensystem requires a Hermitian operator");
}

/// Lowest-k eigenpairs of a sparse Hermitian matrix: Lanczos with full
/// reorthogonalization and Krylov-Schur style thick restarts.
inline Eigensystem lanczos_lowest(const Operator& h, Index k, const LanczosOptions& opt) {
  const Index n = h.dim();
  if (k <= 0) throw std::invalid_argument("requested eigenpair count must be positive");
  k = std::min(k, n);
  const Index m = std::min<Index>(n, opt.basis_size > 0 ? opt.basis_size : std::max<Index>(2 * k + 20, 40));
  const Index keep = std::min<Index>(m - 2, std::max<Index>(k + (m - k) / 2, k));
  const double hnorm = std::max(h.norm_inf(), 1e-300);

  DenseMatrix v(n, m);
  DenseMatrix w(n, m);
  std::mt19937 rng(opt.seed);
  std::normal_distribution<double> gauss;
  StateVector start(n);
  for (Index i = 0; i < n; ++i) start(i) = cplx(gauss(rng), gauss(rng));
  v.col(0) = start.normalized();
  w.col(0) = h.apply(v.col(0));
  Index j = 0;  // index of the last basis vector

  auto orthogonalize = [&](StateVector r, Index upto) {
    for (int pass = 0; pass < 2; ++pass) {
      StateVector c = v.leftCols(upto + 1).adjoint() * r;
      r.noalias() -= v.leftCols(upto + 1) * c;
    }
    return r;
  };

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    while (j + 1 < m) {
      StateVector r = orthogonalize(w.col(j), j);
      double beta = r.norm();
      if (beta < 1e-14 * hnorm) {
        // invariant subspace; continue from a fresh random direction
        for (Index i = 0; i < n; ++i) r(i) = cplx(gauss(rng), gauss(rng));
        r = orthogonalize(r, j);
        beta = r.norm();
      }
      v.col(j + 1) = r / beta;
      w.col(j + 1) = h.apply(v.col(j + 1));
      ++j;
    }
    DenseMatrix t = v.adjoint() * w;
    t = (t + t.adjoint()).eval() / 2.0;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(t);
    const DenseMatrix& y = es.eigenvectors();
    const Eigen::VectorXd& theta = es.eigenvalues();

    bool converged = true;
    for (Index i = 0; i < k && converged; ++i) {
      StateVector res = w * y.col(i) - theta(i) * (v * y.col(i));
      if (res.norm() > opt.tolerance * hnorm) converged = false;
    }
    if (converged || m == n) {
      Eigensystem out;
      out.energies = theta.head(k);
      out.states = v * y.leftCols(k);
      return out;
    }
    // continuation direction, then compress onto the lowest Ritz vectors
    StateVector u = orthogonalize(w.col(m - 1), m - 1);
    const double unorm = u.norm();
    DenseMatrix vk = v * y.leftCols(keep);
    DenseMatrix wk = w * y.leftCols(keep);
    v.leftCols(keep) = vk;
    w.leftCols(keep) = wk;
    if (unorm < 1e-14 * hnorm) {
      for (Index i = 0; i < n; ++i) u(i) = cplx(gauss(rng), gauss(rng));
      u = orthogonalize(u, keep - 1);
    }
    v.col(keep) = u.normalized();
    w.col(keep) = h.apply(v.col(keep));
    j = keep;
  }
  throw SolverError("sparse eigensolver did not converge after " + std::to_string(opt.max_restarts) + " restarts",
                    opt.max_restarts);
}

}  // namespace detail

/// All eigenpairs (dense storage) or the k lowest (sparse storage).
inline Eigensystem eigensystem(const Operator& h, std::optional<Index> k = std::nullopt,
                               const LanczosOptions& opt = {}) {
  detail::require_hermitian(h);
  if (h.is_sparse()) return detail::lanczos_lowest(h, k.value_or(30), opt);
  DenseMatrix m = h.dense();
  m = (m + m.adjoint()).eval() / 2.0;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m);
  if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed", 0);
  Eigensystem out{es.eigenvalues(), es.eigenvectors()};
  if (k && *k < out.energies.size()) {
    out.energies = out.energies.head(*k).eval();
    out.states = out.states.leftCols(*k).eval();
  }
  return out;
}

/// Eigensystem with bare Fock labels attached to dressed eigenvectors.
struct SpectrumResult {
  Eigensystem raw;
  std::vector<int> dims;
  std::map<std::string, Index> labels;
  std::map<std::string, double> overlaps;  // |<bare|dressed>|^2
  std::set<std::string> degenerate;

  Index index(const std::string& label) const {
    auto it = labels.find(label);
    if (it == labels.end()) throw std::out_of_range("label '" + label + "' not assigned");
    return it->second;
  }
  double energy(const std::string& label) const { return raw.energies(index(label)); }
  StateVector state(const std::string& label) const { return raw.states.col(index(label)); }
};

inline constexpr double kTieTolerance = 1e-9;

namespace detail {

struct Assignment {
  std::vector<Index> column;   // per label
  std::vector<bool> flagged;   // tie or overlap < 0.5
  std::vector<double> weight;  // chosen overlap
};

/// Greedy maximum-overlap matching of labels (rows) onto eigenvectors
/// (columns). Labels are processed in descending best-overlap order (input
/// order on ties); each column is used at most once; a near-tie between
/// columns goes to the lower index and flags the label.
inline Assignment greedy_assign(const Eigen::MatrixXd& ov) {
  const Index nl = ov.rows();
  const Index nc = ov.cols();
  if (nl > nc) throw std::invalid_argument("more labels than eigenvectors");
  std::vector<double> best(nl);
  std::vector<bool> tie(nl, false);
  for (Index l = 0; l < nl; ++l) {
    std::vector<double> sorted(nc);
    for (Index c = 0; c < nc; ++c) sorted[c] = ov(l, c);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    best[l] = sorted[0];
    if (nc > 1 && sorted[0] - sorted[1] < kTieTolerance) tie[l] = true;
  }
  std::vector<Index> order(nl);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return best[a] > best[b] + kTieTolerance; });

  Assignment out{std::vector<Index>(nl, -1), std::vector<bool>(nl, false), std::vector<double>(nl, 0.0)};
  std::vector<bool> used(nc, false);
  for (Index l : order) {
    Index pick = -1;
    for (Index c = 0; c < nc; ++c) {
      if (used[c]) continue;
      if (pick < 0 || ov(l, c) > ov(l, pick) + kTieTolerance) pick = c;
    }
    used[pick] = true;
    out.column[l] = pick;
    out.weight[l] = ov(l, pick);
    out.flagged[l] = tie[l] || ov(l, pick) < 0.5;
  }
  return out;
}

inline Eigen::MatrixXd bare_overlaps(const Eigensystem& raw, std::span<const int> dims,
                                     std::span<const std::string> labels) {
  Eigen::MatrixXd ov(labels.size(), raw.states.cols());
  for (std::size_t l = 0; l < labels.size(); ++l) {
    auto occ = parse_fock_label(labels[l]);
    Index row = basis_index(dims, occ);
    if (row >= raw.states.rows()) throw std::out_of_range("label outside the represented space");
    ov.row(l) = raw.states.row(row).cwiseAbs2();
  }
  return ov;
}

inline SpectrumResult make_result(Eigensystem raw, std::span<const int> dims, std::span<const std::string> labels,
                                  const Assignment& a) {
  SpectrumResult out;
  Eigen::MatrixXd bare = bare_overlaps(raw, dims, labels);
  out.dims.assign(dims.begin(), dims.end());
  for (std::size_t l = 0; l < labels.size(); ++l) {
    out.labels[labels[l]] = a.column[l];
    out.overlaps[labels[l]] = bare(l, a.column[l]);
    if (a.flagged[l]) out.degenerate.insert(labels[l]);
  }
  out.raw = std::move(raw);
  return out;
}

inline void check_labels(std::span<const int> dims, std::span<const std::string> labels) {
  for (const auto& l : labels) {
    auto occ = parse_fock_label(l);
    if (occ.size() != dims.size()) throw std::out_of_range("label '" + l + "' has the wrong number of modes");
    for (std::size_t k = 0; k < occ.size(); ++k)
      if (occ[k] >= dims[k]) throw std::out_of_range("label '" + l + "' is outside the truncation");
  }
}

}  // namespace detail

/// Labels dressed eigenvectors by maximum overlap with bare Fock states.
inline SpectrumResult assign_dressed(Eigensystem raw, std::span<const int> dims,
                                     std::span<const std::string> bare_labels) {
  detail::check_labels(dims, bare_labels);
  auto a = detail::greedy_assign(detail::bare_overlaps(raw, dims, bare_labels));
  return detail::make_result(std::move(raw), dims, bare_labels, a);
}

/// Labels eigenvectors by overlap continuity with reference dressed states
/// (one per label, same order). Returns the smallest tracking overlap.
inline SpectrumResult assign_tracked(Eigensystem raw, std::span<const int> dims, std::span<const std::string> labels,
                                     const std::vector<StateVector>& reference, double* min_tracking = nullptr) {
  if (reference.size() != labels.size()) throw std::invalid_argument("one reference state per label required");
  Eigen::MatrixXd ov(labels.size(), raw.states.cols());
  for (std::size_t l = 0; l < labels.size(); ++l) ov.row(l) = (reference[l].adjoint() * raw.states).cwiseAbs2();
  auto a = detail::greedy_assign(ov);
  if (min_tracking) *min_tracking = *std::min_element(a.weight.begin(), a.weight.end());
  return detail::make_result(std::move(raw), dims, labels, a);
}

inline const std::vector<std::string>& two_qubit_labels() {
  static const std::vector<std::string> l{"00", "01", "10", "11"};
  return l;
}
inline const std::vector<std::string>& qcq_labels() {
  static const std::vector<std::string> l{"000", "100", "001", "101"};
  return l;
}

/// E11 - E01 - E10 + E00 in GHz.
inline double jzz_two_qubit(const SpectrumResult& s) {
  return to_ghz(s.energy("11") - s.energy("01") - s.energy("10") + s.energy("00"));
}

struct QcqCouplings {
  double jxx = 0.0;  // GHz, (E100 - E001)/2
  double jzz = 0.0;  // GHz
};

inline QcqCouplings qcq_couplings(const SpectrumResult& s) {
  return {to_ghz(s.energy("100") - s.energy("001")) / 2.0,
          to_ghz(s.energy("101") - s.energy("100") - s.energy("001") + s.energy("000"))};
}

enum class CouplingKind { TwoQubit, Qcq };

struct ZZSample {
  double epsilon = 0.0;  // GHz
  double jzz = 0.0;      // GHz
  std::optional<double> jxx;
  bool flagged = false;
  std::string flags;
  double min_overlap = 1.0;
};

struct ZZCurve {
  std::vector<ZZSample> samples;
  enum class RootKind { Zero, LevelCrossing };
  std::vector<double> roots;  // bisection-refined sign changes, in grid order
  std::vector<RootKind> root_kinds;
  int sign_changes = 0;

  std::optional<double> root() const {
    if (roots.empty()) return std::nullopt;
    return roots.front();
  }
};

struct SweepOptions {
  CouplingKind kind = CouplingKind::TwoQubit;
  unsigned threads = 1;
  double root_tolerance = 1e-6;  // GHz
  bool refine_roots = true;
};

namespace detail {

inline const std::vector<std::string>& labels_for(CouplingKind kind) {
  return kind == CouplingKind::TwoQubit ? two_qubit_labels() : qcq_labels();
}

inline Eigensystem driven_eigensystem(const SystemSpec& system, const DriveSpec& drive, double eps) {
  DriveSpec d = drive;
  d.epsilon = eps;
  return eigensystem(build_rwa(system, std::span<const DriveSpec>(&d, 1)));
}

inline void fill_couplings(ZZSample& s, const SpectrumResult& spec, CouplingKind kind) {
  if (kind == CouplingKind::TwoQubit) {
    s.jzz = jzz_two_qubit(spec);
  } else {
    auto c = qcq_couplings(spec);
    s.jzz = c.jzz;
    s.jxx = c.jxx;
  }
}

}  // namespace detail

/// Coupling curve over a monotone epsilon grid. Every sample is labelled by
/// bare-state overlap; a sample is flagged when some bare label keeps less
/// than half its weight inside the span of the labelled dressed states.
/// Comparing the labelled states with their predecessors separates smooth
/// zeros of J_zz from sign reversals caused by a level crossing through the
/// labelled manifold. Sign changes between unflagged neighbours are refined
/// by bisection.
inline ZZCurve zz_sweep(const SystemSpec& system, const DriveSpec& drive_template, std::span<const double> eps_grid,
                        const SweepOptions& opt = {}) {
  if (eps_grid.empty()) throw std::invalid_argument("epsilon grid is empty");
  const bool up = eps_grid.size() < 2 || eps_grid[1] > eps_grid[0];
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if ((eps_grid[i] > eps_grid[i - 1]) != up || eps_grid[i] == eps_grid[i - 1])
      throw std::invalid_argument("epsilon grid must be strictly monotone");
  const auto& labels = detail::labels_for(opt.kind);
  const auto dims = system.dims();

  auto spectra = parallel_map(eps_grid.size(), opt.threads,
                              [&](std::size_t i) { return detail::driven_eigensystem(system, drive_template, eps_grid[i]); });

  auto label_point = [&](Eigensystem raw) { return assign_dressed(std::move(raw), dims, labels); };
  // bare weight of the least-represented label inside the labelled span
  auto span_weight = [&](const SpectrumResult& spec) {
    double worst = 1.0;
    for (const auto& l : labels) {
      const Index row = basis_index(dims, parse_fock_label(l));
      double w = 0.0;
      for (const auto& m : labels) w += std::norm(spec.raw.states(row, spec.index(m)));
      worst = std::min(worst, w);
    }
    return worst;
  };
  // smallest |<previous|current>|^2 over labels; ~0 across a level crossing
  auto continuity = [&](const SpectrumResult& a, const SpectrumResult& b) {
    double worst = 1.0;
    for (const auto& l : labels) {
      double w = 0.0;
      for (const auto& m : labels) w += std::norm(a.state(l).dot(b.state(m)));
      worst = std::min(worst, w);
    }
    return worst;
  };

  ZZCurve curve;
  std::vector<SpectrumResult> specs;
  specs.reserve(eps_grid.size());
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    ZZSample s;
    s.epsilon = eps_grid[i];
    specs.push_back(label_point(std::move(spectra[i])));
    const auto& spec = specs.back();
    s.min_overlap = span_weight(spec);
    if (s.min_overlap < 0.5) {
      s.flagged = true;
      s.flags = "label-lost";
    } else if (i > 0 && continuity(specs[i - 1], spec) < 0.5) {
      s.flags = "level-crossing";
    }
    detail::fill_couplings(s, spec, opt.kind);
    curve.samples.push_back(std::move(s));
  }

  // neighbouring unflagged samples; a flagged run in between marks a crossing
  std::size_t i = 0;
  while (i < curve.samples.size() && curve.samples[i].flagged) ++i;
  while (i < curve.samples.size()) {
    std::size_t j = i + 1;
    bool crossing = false;
    while (j < curve.samples.size() && curve.samples[j].flagged) {
      crossing = true;
      ++j;
    }
    if (j >= curve.samples.size()) break;
    const auto& a = curve.samples[i];
    const auto& b = curve.samples[j];
    crossing = crossing || b.flags == "level-crossing";
    const std::size_t next = j;
    if (a.jzz == 0.0) {
      curve.roots.push_back(a.epsilon);
      curve.root_kinds.push_back(ZZCurve::RootKind::Zero);
      ++curve.sign_changes;
      i = next;
      continue;
    }
    if ((a.jzz < 0.0) == (b.jzz < 0.0) || b.jzz == 0.0) {
      i = next;
      continue;
    }
    ++curve.sign_changes;
    curve.root_kinds.push_back(crossing ? ZZCurve::RootKind::LevelCrossing : ZZCurve::RootKind::Zero);
    if (!opt.refine_roots) {
      curve.roots.push_back(a.epsilon - a.jzz * (b.epsilon - a.epsilon) / (b.jzz - a.jzz));
      i = next;
      continue;
    }
    double lo = a.epsilon, hi = b.epsilon, flo = a.jzz;
    while (std::abs(hi - lo) > opt.root_tolerance) {
      const double mid = 0.5 * (lo + hi);
      ZZSample probe;
      detail::fill_couplings(probe, label_point(detail::driven_eigensystem(system, drive_template, mid)), opt.kind);
      if ((probe.jzz < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = probe.jzz;
      } else {
        hi = mid;
      }
    }
    curve.roots.push_back(0.5 * (lo + hi));
    i = next;
  }
  if (!curve.samples.empty() && curve.samples.back().jzz == 0.0 && !curve.samples.back().flagged) {
    curve.roots.push_back(curve.samples.back().epsilon);
    curve.root_kinds.push_back(ZZCurve::RootKind::Zero);
    ++curve.sign_changes;
  }
  return curve;
}

/// Static (undriven) spectrum of a system with bare-overlap labels.
inline SpectrumResult static_spectrum(const SystemSpec& system, std::span<const std::string> labels) {
  return assign_dressed(eigensystem(build_lab_static(system)), system.dims(), labels);
}

/// Driven RWA spectrum with bare-overlap labels.
inline SpectrumResult driven_spectrum(const SystemSpec& system, const DriveSpec& drive,
                                      std::span<const std::string> labels) {
  return assign_dressed(detail::driven_eigensystem(system, drive, drive.epsilon), system.dims(), labels);
}

}  // namespace mathieu
