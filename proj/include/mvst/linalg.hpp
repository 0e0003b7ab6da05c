#ifndef MVST_LINALG_HPP
#define MVST_LINALG_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "mvst/errors.hpp"

namespace mvst {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Lower Cholesky factor of an SPD matrix.
///
/// If the plain factorization fails, the diagonal is loaded once with
/// 1e-10 * tr / dim and the factorization retried; `jittered()` reports it.
template <typename Scalar>
class SpdFactor {
 public:
  SpdFactor() = default;

  template <typename Derived>
  SpdFactor(const Eigen::MatrixBase<Derived>& m, const std::string& name) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw ValidationError(name + " must be a non-empty square matrix");
    if (!m.allFinite()) throw NonFiniteError(name + " has non-finite entries");
    Matrix<Scalar> a = m;
    llt_.compute(a);
    if (llt_.info() != Eigen::Success || !positive_diagonal()) {
      const Scalar dim = static_cast<Scalar>(a.rows());
      const Scalar jitter = Scalar(1e-10) * std::abs(a.trace()) / dim;
      a.diagonal().array() += jitter;
      llt_.compute(a);
      jittered_ = true;
      if (llt_.info() != Eigen::Success || !positive_diagonal())
        throw FactorizationError(name, "matrix is not positive definite");
    }
  }

  Eigen::Index dim() const { return llt_.matrixLLT().rows(); }
  bool jittered() const { return jittered_; }

  auto lower() const { return llt_.matrixL(); }

  Scalar log_det() const {
    return 2 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  /// L^{-1} B
  template <typename Derived>
  Matrix<Scalar> whiten_left(const Eigen::MatrixBase<Derived>& b) const {
    return llt_.matrixL().solve(b);
  }

  /// B L^{-T}
  template <typename Derived>
  Matrix<Scalar> whiten_right(const Eigen::MatrixBase<Derived>& b) const {
    return llt_.matrixL().solve(b.transpose()).transpose();
  }

  /// S^{-1} B
  template <typename Derived>
  Matrix<Scalar> solve(const Eigen::MatrixBase<Derived>& b) const {
    return llt_.solve(b);
  }

  Matrix<Scalar> inverse() const {
    return llt_.solve(Matrix<Scalar>::Identity(dim(), dim()));
  }

 private:
  bool positive_diagonal() const {
    const auto d = llt_.matrixLLT().diagonal();
    return d.allFinite() && (d.array() > Scalar(0)).all();
  }

  Eigen::LLT<Matrix<Scalar>> llt_;
  bool jittered_ = false;
};

/// L_row^{-1} B L_col^{-T}: the whitened version of a residual or skewness
/// matrix. Frobenius inner products of whitened matrices are the trace forms
/// tr(Sigma^{-1} B Psi^{-1} C').
template <typename Scalar, typename Derived>
Matrix<Scalar> whiten(const Eigen::MatrixBase<Derived>& b,
                      const SpdFactor<Scalar>& row,
                      const SpdFactor<Scalar>& col) {
  return col.whiten_right(row.whiten_left(b));
}

/// vec(B): columns stacked into one vector.
template <typename Derived>
auto vec(const Eigen::MatrixBase<Derived>& b) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> out(b.size());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < b.cols(); ++j)
    for (Eigen::Index i = 0; i < b.rows(); ++i) out(k++) = b(i, j);
  return out;
}

/// Kronecker product A (x) B.
template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a,
          const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Matrix<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename Derived>
Matrix<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / 2;
}

/// True when m is square and symmetric to `tol` relative to its largest entry.
template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m,
                  typename Derived::Scalar tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const auto scale = std::max(typename Derived::Scalar(1), m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

}  // namespace mvst

#endif  // MVST_LINALG_HPP
