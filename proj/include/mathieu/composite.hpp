#pragma once

// Truncated bosonic Hilbert spaces for multi-mode devices and the Operator
// type shared by every other module.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "units.hpp"

namespace mathieu {

using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using StateVector = Eigen::VectorXcd;

/// Composite dimension above which operators are stored sparse.
inline constexpr Index kSparseThreshold = 4096;

/// Tolerance attached to the Hermiticity flag (absolute, rad/ns).
inline constexpr double kHermitianTolerance = 1e-12;

/// One truncated bosonic mode. Frequencies are ordinary GHz as tabulated.
struct ModeSpec {
  std::string label;
  int dim = 2;
  double omega = 0.0;
  double alpha = 0.0;
};

struct Coupling {
  std::size_t i = 0;
  std::size_t j = 0;
  double g = 0.0;  // GHz
};

/// Ordered modes plus an exchange-coupling graph. Mode 0 is the slowest
/// varying tensor index.
struct SystemSpec {
  std::vector<ModeSpec> modes;
  std::vector<Coupling> couplings;

  void validate() const {
    if (modes.empty()) throw std::invalid_argument("system has no modes");
    for (const auto& m : modes) {
      if (m.dim < 2) throw std::invalid_argument("mode '" + m.label + "': truncation must be >= 2");
      if (!(m.omega > 0.0) || !std::isfinite(m.omega))
        throw std::invalid_argument("mode '" + m.label + "': omega must be positive");
      if (!(m.alpha >= 0.0) || !std::isfinite(m.alpha))
        throw std::invalid_argument("mode '" + m.label + "': alpha must be non-negative");
    }
    for (const auto& c : couplings) {
      if (c.i >= modes.size() || c.j >= modes.size())
        throw std::out_of_range("coupling references a mode index out of range");
      if (c.i == c.j) throw std::invalid_argument("coupling must join two distinct modes");
      if (!std::isfinite(c.g)) throw std::invalid_argument("coupling strength must be finite");
    }
    (void)dimension();
  }

  /// Product of mode truncations; throws on index-type overflow.
  Index dimension() const {
    Index total = 1;
    for (const auto& m : modes) {
      if (total > std::numeric_limits<Index>::max() / m.dim)
        throw std::overflow_error("composite dimension overflows the index type");
      total *= m.dim;
    }
    return total;
  }

  std::vector<int> dims() const {
    std::vector<int> d;
    d.reserve(modes.size());
    for (const auto& m : modes) d.push_back(m.dim);
    return d;
  }
};

/// Row-major (mode 0 slowest) flattening of Fock occupations.
inline Index basis_index(std::span<const int> dims, std::span<const int> occupations) {
  if (dims.size() != occupations.size())
    throw std::invalid_argument("occupation list length does not match the number of modes");
  Index idx = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (occupations[k] < 0 || occupations[k] >= dims[k])
      throw std::out_of_range("occupation outside truncation");
    idx = idx * dims[k] + occupations[k];
  }
  return idx;
}

inline std::vector<int> basis_occupations(std::span<const int> dims, Index idx) {
  std::vector<int> occ(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    occ[k] = static_cast<int>(idx % dims[k]);
    idx /= dims[k];
  }
  return occ;
}

/// Parses a Fock label such as "101" (one digit per mode).
inline std::vector<int> parse_fock_label(const std::string& label) {
  std::vector<int> occ;
  occ.reserve(label.size());
  for (char ch : label) {
    if (ch < '0' || ch > '9') throw std::invalid_argument("bad Fock label '" + label + "'");
    occ.push_back(ch - '0');
  }
  return occ;
}

inline std::string fock_label(std::span<const int> occupations) {
  std::string s;
  for (int n : occupations) {
    if (n > 9) throw std::invalid_argument("Fock labels support occupations up to 9");
    s.push_back(static_cast<char>('0' + n));
  }
  return s;
}

/// Complex square matrix on a composite space, dense or sparse, with a
/// Hermiticity hint. Immutable after construction.
class Operator {
 public:
  Operator() = default;

  explicit Operator(DenseMatrix m, bool hermitian = false) : data_(std::move(m)), hermitian_(hermitian) {
    check_square();
  }

  explicit Operator(SparseMatrix m, bool hermitian = false) : data_(std::move(m)), hermitian_(hermitian) {
    data_sparse().makeCompressed();
    check_square();
  }

  /// Chooses storage from the dimension threshold.
  static Operator from_sparse(SparseMatrix m, bool hermitian = false) {
    if (m.rows() > kSparseThreshold) return Operator(std::move(m), hermitian);
    return Operator(DenseMatrix(m), hermitian);
  }

  static Operator identity(Index dim) {
    SparseMatrix id(dim, dim);
    id.setIdentity();
    return from_sparse(std::move(id), true);
  }

  static Operator zero(Index dim) { return from_sparse(SparseMatrix(dim, dim), true); }

  Index dim() const {
    return std::visit([](const auto& m) { return static_cast<Index>(m.rows()); }, data_);
  }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(data_); }
  bool hermitian() const { return hermitian_; }

  const DenseMatrix& dense() const {
    if (is_sparse()) throw std::logic_error("operator is stored sparse");
    return std::get<DenseMatrix>(data_);
  }
  const SparseMatrix& sparse() const {
    if (!is_sparse()) throw std::logic_error("operator is stored dense");
    return std::get<SparseMatrix>(data_);
  }

  DenseMatrix to_dense() const { return is_sparse() ? DenseMatrix(sparse()) : dense(); }
  SparseMatrix to_sparse() const { return is_sparse() ? sparse() : SparseMatrix(dense().sparseView(0.0, 0.0)); }

  cplx coeff(Index r, Index c) const { return is_sparse() ? sparse().coeff(r, c) : dense()(r, c); }

  StateVector apply(const StateVector& x) const {
    StateVector y(x.size());
    if (is_sparse())
      y.noalias() = sparse() * x;
    else
      y.noalias() = dense() * x;
    return y;
  }

  /// y += alpha * A x
  void apply_add(cplx alpha, const StateVector& x, StateVector& y) const {
    if (is_sparse())
      y.noalias() += alpha * (sparse() * x);
    else
      y.noalias() += alpha * (dense() * x);
  }

  double norm_inf() const {
    if (!is_sparse()) return dense().cwiseAbs().rowwise().sum().maxCoeff();
    double best = 0.0;
    const auto& s = sparse();
    for (Index r = 0; r < s.outerSize(); ++r) {
      double row = 0.0;
      for (SparseMatrix::InnerIterator it(s, r); it; ++it) row += std::abs(it.value());
      best = std::max(best, row);
    }
    return best;
  }

  /// max |A - A^dagger|
  double hermiticity_defect() const {
    if (!is_sparse()) return (dense() - dense().adjoint()).cwiseAbs().maxCoeff();
    SparseMatrix diff = sparse() - SparseMatrix(sparse().adjoint());
    double best = 0.0;
    for (Index r = 0; r < diff.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(diff, r); it; ++it) best = std::max(best, std::abs(it.value()));
    return best;
  }

  /// Re-tags the operator; a true flag is verified against kHermitianTolerance.
  Operator with_hermitian(bool flag) const {
    if (flag && hermiticity_defect() >= kHermitianTolerance)
      throw std::domain_error("operator is not Hermitian within tolerance");
    Operator out = *this;
    out.hermitian_ = flag;
    return out;
  }

  Operator adjoint() const {
    if (is_sparse()) return Operator(SparseMatrix(sparse().adjoint()), hermitian_);
    return Operator(DenseMatrix(dense().adjoint()), hermitian_);
  }

  friend Operator operator+(const Operator& a, const Operator& b) { return combine(a, b, 1.0); }
  friend Operator operator-(const Operator& a, const Operator& b) { return combine(a, b, -1.0); }

  friend Operator operator*(cplx s, const Operator& a) {
    bool herm = a.hermitian_ && s.imag() == 0.0;
    if (a.is_sparse()) return Operator(SparseMatrix(s * a.sparse()), herm);
    return Operator(DenseMatrix(s * a.dense()), herm);
  }
  friend Operator operator*(double s, const Operator& a) { return cplx(s, 0.0) * a; }

  friend Operator operator*(const Operator& a, const Operator& b) {
    a.check_same_dim(b);
    if (!a.is_sparse() && !b.is_sparse()) return Operator(DenseMatrix(a.dense() * b.dense()));
    if (a.is_sparse() && b.is_sparse()) return Operator(SparseMatrix(a.sparse() * b.sparse()));
    return Operator(SparseMatrix(a.to_sparse() * b.to_sparse()));
  }

 private:
  static Operator combine(const Operator& a, const Operator& b, double sign) {
    a.check_same_dim(b);
    bool herm = a.hermitian_ && b.hermitian_;
    if (!a.is_sparse() && !b.is_sparse()) return Operator(DenseMatrix(a.dense() + sign * b.dense()), herm);
    if (a.is_sparse() && b.is_sparse()) return Operator(SparseMatrix(a.sparse() + sign * b.sparse()), herm);
    if (a.dim() > kSparseThreshold) return Operator(SparseMatrix(a.to_sparse() + sign * b.to_sparse()), herm);
    return Operator(DenseMatrix(a.to_dense() + sign * b.to_dense()), herm);
  }

  SparseMatrix& data_sparse() { return std::get<SparseMatrix>(data_); }

  void check_square() const {
    std::visit(
        [](const auto& m) {
          if (m.rows() != m.cols()) throw std::invalid_argument("operator must be square");
        },
        data_);
  }
  void check_same_dim(const Operator& other) const {
    if (dim() != other.dim()) throw std::invalid_argument("operator dimension mismatch");
  }

  std::variant<DenseMatrix, SparseMatrix> data_{DenseMatrix()};
  bool hermitian_ = false;
};

namespace detail {

inline SparseMatrix local_ladder(int dim) {
  SparseMatrix a(dim, dim);
  a.reserve(Eigen::VectorXi::Constant(dim, 1));
  for (int n = 1; n < dim; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  a.makeCompressed();
  return a;
}

inline SparseMatrix sparse_identity(Index dim) {
  SparseMatrix id(dim, dim);
  id.setIdentity();
  return id;
}

/// I_left (x) local (x) I_right for mode k.
inline SparseMatrix embed_sparse(const SystemSpec& system, std::size_t k, const SparseMatrix& local) {
  Index left = 1;
  Index right = 1;
  for (std::size_t j = 0; j < system.modes.size(); ++j) {
    if (j < k) left *= system.modes[j].dim;
    if (j > k) right *= system.modes[j].dim;
  }
  SparseMatrix inner = Eigen::kroneckerProduct(local, sparse_identity(right)).eval();
  SparseMatrix full = Eigen::kroneckerProduct(sparse_identity(left), inner).eval();
  full.makeCompressed();
  return full;
}

inline void check_mode(const SystemSpec& system, std::size_t k) {
  if (k >= system.modes.size()) throw std::out_of_range("mode index " + std::to_string(k) + " out of range");
}

}  // namespace detail

/// Annihilation operator of mode k embedded in the composite space.
inline Operator destroy(const SystemSpec& system, std::size_t k) {
  detail::check_mode(system, k);
  return Operator::from_sparse(detail::embed_sparse(system, k, detail::local_ladder(system.modes[k].dim)));
}

inline Operator number(const SystemSpec& system, std::size_t k) {
  detail::check_mode(system, k);
  const int d = system.modes[k].dim;
  SparseMatrix n(d, d);
  for (int i = 0; i < d; ++i) n.insert(i, i) = static_cast<double>(i);
  return Operator::from_sparse(detail::embed_sparse(system, k, n), true);
}

inline Operator embed(const SystemSpec& system, std::size_t k, const Operator& local) {
  detail::check_mode(system, k);
  if (local.dim() != system.modes[k].dim)
    throw std::invalid_argument("local operator dimension does not match mode " + std::to_string(k));
  return Operator::from_sparse(detail::embed_sparse(system, k, local.to_sparse()), local.hermitian());
}

}  // namespace mathieu
