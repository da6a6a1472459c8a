#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace elab {

template <typename Scalar>
struct NnlsResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar residual_norm = Scalar(0);
  bool converged = false;
};

/// Non-negative least squares, Lawson-Hanson active set.
///
/// Solves min ||A x - b||_2 subject to x >= 0. The passive-set subproblems
/// use a complete orthogonal decomposition, so rank-deficient passive sets
/// yield the minimum-norm solution and the result is deterministic.
template <typename DerivedA, typename DerivedB>
NnlsResult<typename DerivedA::Scalar> nnls(
    const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedB>& b,
    int max_iter = 0) {
  using Scalar = typename DerivedA::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);

  NnlsResult<Scalar> out;
  out.x = Vector::Zero(n);

  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Vector x = Vector::Zero(n);
  Vector w(n);

  const Scalar tol =
      Scalar(10) * std::numeric_limits<Scalar>::epsilon() *
      A.derived().template lpNorm<1>() * static_cast<Scalar>(std::max<Eigen::Index>(m, n));

  auto solve_passive = [&](Vector& z) {
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) ++k;
    z = Vector::Zero(n);
    if (k == 0) return;
    Matrix Ap(m, k);
    Eigen::Index c = 0;
    std::vector<Eigen::Index> cols;
    cols.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) {
        Ap.col(c++) = A.derived().col(j);
        cols.push_back(j);
      }
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Ap);
    Vector zp = cod.solve(b.derived());
    for (Eigen::Index j = 0; j < k; ++j) z(cols[static_cast<std::size_t>(j)]) = zp(j);
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    w = A.derived().transpose() * (b.derived() - A.derived() * x);

    // Pick the most violated dual among active (zero) variables.
    Eigen::Index best = -1;
    Scalar best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) {
      out.converged = true;
      break;
    }
    passive[static_cast<std::size_t>(best)] = true;

    Vector z;
    solve_passive(z);

    // Inner loop: back off along (x -> z) until the passive set is feasible.
    int guard = static_cast<int>(2 * n + 10);
    while (guard-- > 0) {
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= Scalar(0)) {
          feasible = false;
          break;
        }
      }
      if (feasible) break;

      Scalar alpha = std::numeric_limits<Scalar>::max();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= Scalar(0)) {
          Scalar a = x(j) / (x(j) - z(j));
          if (a < alpha) alpha = a;
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = Scalar(0);
        }
      }
      solve_passive(z);
    }
    x = z;
    for (Eigen::Index j = 0; j < n; ++j)
      if (x(j) < Scalar(0)) x(j) = Scalar(0);
  }

  out.x = x;
  out.residual_norm = (A.derived() * x - b.derived()).norm();
  return out;
}

}  // namespace elab
