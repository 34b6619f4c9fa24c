#pragma once

// Cyclic Jacobi eigensolver for dense symmetric matrices.  Small/medium
// problem sizes only; rotations sweep the strict upper triangle until the
// off-diagonal Frobenius norm falls below 1e-12 * ||Q||_F.

#include <cmath>

#include "rsopt/types.hpp"

namespace rsopt {

template <typename Scalar = double>
struct SpectralDecomposition {
  Vector<Scalar> eigenvalues;  // non-decreasing
  Matrix<Scalar> basis;        // orthogonal, Q = U Diag(eigenvalues) U^T
};

namespace detail {

template <typename Scalar>
Scalar offdiag_norm(const Matrix<Scalar>& A) {
  Scalar s = 0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = i + 1; j < A.cols(); ++j) s += sq(A(i, j));
  return std::sqrt(Scalar(2) * s);
}

}  // namespace detail

template <typename Scalar = double>
SpectralDecomposition<Scalar> eig_sym(const Matrix<Scalar>& Q,
                                      Scalar off_tol = Scalar(1e-12),
                                      int max_sweeps = 64) {
  const Eigen::Index n = Q.rows();
  if (Q.cols() != n) throw ValidationError("eig_sym: matrix not square");
  const Scalar qnorm = Q.norm();
  if ((Q - Q.transpose()).norm() > Scalar(1e-12) * std::max(Scalar(1), qnorm))
    throw ValidationError("eig_sym: matrix not symmetric");

  Matrix<Scalar> A = (Q + Q.transpose()) / Scalar(2);
  Matrix<Scalar> U = Matrix<Scalar>::Identity(n, n);
  const Scalar stop = off_tol * std::max(qnorm, Scalar(1e-300));

  int sweep = 0;
  while (detail::offdiag_norm(A) > stop) {
    if (++sweep > max_sweeps)
      throw NumericalError("eig_sym: Jacobi sweeps did not converge");
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = A(p, q);
        if (std::abs(apq) == Scalar(0)) continue;
        const Scalar tau = (A(q, q) - A(p, p)) / (Scalar(2) * apq);
        // Stable rotation: t = sign(tau) / (|tau| + sqrt(1 + tau^2)).
        const Scalar t = (tau >= Scalar(0))
                             ? Scalar(1) / (tau + std::sqrt(Scalar(1) + tau * tau))
                             : Scalar(-1) / (-tau + std::sqrt(Scalar(1) + tau * tau));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar ukp = U(k, p), ukq = U(k, q);
          U(k, p) = c * ukp - s * ukq;
          U(k, q) = s * ukp + c * ukq;
        }
      }
    }
  }

  SpectralDecomposition<Scalar> out;
  out.eigenvalues.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues(i) = A(i, i);
  // Selection sort into non-decreasing order, permuting basis columns.
  out.basis = U;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index m = i;
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (out.eigenvalues(j) < out.eigenvalues(m)) m = j;
    if (m != i) {
      std::swap(out.eigenvalues(i), out.eigenvalues(m));
      out.basis.col(i).swap(out.basis.col(m));
    }
  }
  return out;
}

}  // namespace rsopt
