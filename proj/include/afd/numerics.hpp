#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "afd/errors.hpp"

namespace afd {

using Complex = std::complex<double>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Quadrature nodes and positive weights discretizing an interval [a, b].
struct Grid {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return nodes.size(); }
  double span() const { return weights.sum(); }
  double spacing() const { return nodes.size() > 1 ? nodes[1] - nodes[0] : 0.0; }
};

/// Which measure an inner product uses: plain dt or arc-normalized dt/(2*pi).
enum class InnerProductMode { Lebesgue, NormalizedArc };

/// Uniform nodes on [a, b] with trapezoid weights (half weight at endpoints).
Grid trapezoid_grid(Eigen::Index m, double a, double b);

namespace detail {
inline void require_same_grid(Eigen::Index n, const Grid& grid, const char* who) {
  if (n != grid.size()) throw std::invalid_argument(std::string(who) + ": size does not match grid");
}
}  // namespace detail

/// Weighted inner product sum_i w_i f_i conj(g_i), divided by 2*pi in NormalizedArc mode.
template <typename DF, typename DG>
Complex inner_product(const Eigen::MatrixBase<DF>& f, const Eigen::MatrixBase<DG>& g,
                      const Grid& grid, InnerProductMode mode) {
  detail::require_same_grid(f.size(), grid, "inner_product");
  detail::require_same_grid(g.size(), grid, "inner_product");
  Complex s = (f.derived().template cast<Complex>().array() *
               g.derived().template cast<Complex>().array().conjugate() *
               grid.weights.array().template cast<Complex>())
                  .sum();
  return mode == InnerProductMode::NormalizedArc ? s / two_pi : s;
}

// Concrete overload so unqualified calls with two like-typed vectors do not
// fall through to std::inner_product via argument-dependent lookup.
inline Complex inner_product(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g,
                             const Grid& grid, InnerProductMode mode) {
  return inner_product<Eigen::VectorXcd, Eigen::VectorXcd>(f, g, grid, mode);
}

template <typename DF>
double norm_sq(const Eigen::MatrixBase<DF>& f, const Grid& grid, InnerProductMode mode) {
  detail::require_same_grid(f.size(), grid, "norm_sq");
  double s = (f.derived().array().abs2() * grid.weights.array()).sum();
  return mode == InnerProductMode::NormalizedArc ? s / two_pi : s;
}

template <typename DF>
double norm_w(const Eigen::MatrixBase<DF>& f, const Grid& grid, InnerProductMode mode) {
  return std::sqrt(norm_sq(f, grid, mode));
}

/// ||f - approx|| / ||f|| in the Lebesgue norm; +inf when ||f|| = 0 and approx differs.
template <typename DF, typename DG>
double rel_error(const Eigen::MatrixBase<DF>& f, const Eigen::MatrixBase<DG>& approx,
                 const Grid& grid) {
  detail::require_same_grid(f.size(), grid, "rel_error");
  detail::require_same_grid(approx.size(), grid, "rel_error");
  const double den = norm_w(f, grid, InnerProductMode::Lebesgue);
  const double num =
      norm_w((f.derived().template cast<Complex>() - approx.derived().template cast<Complex>()).eval(),
             grid, InnerProductMode::Lebesgue);
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

template <typename Scalar>
struct EigenSystem {
  Eigen::VectorXd values;    // descending
  MatrixX<Scalar> vectors;   // orthonormal columns, matching order
};

/// Hermitian eigendecomposition with eigenvalues sorted descending.
///
/// The input must be Hermitian within tol relative to its max entry.
template <typename Scalar>
EigenSystem<Scalar> sym_eig(const MatrixX<Scalar>& A, double tol = 1e-12) {
  if (A.rows() != A.cols()) throw std::invalid_argument("sym_eig: matrix not square");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double defect = (A - A.adjoint()).cwiseAbs().maxCoeff();
  if (defect > tol * scale)
    throw std::invalid_argument("sym_eig: input not Hermitian within tolerance");

  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(
      ((A + A.adjoint()) * Scalar(0.5)).eval());
  if (solver.info() != Eigen::Success)
    throw numerical_error("sym_eig: eigensolver failed to converge");

  const Eigen::Index n = A.rows();
  EigenSystem<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = solver.eigenvalues()[n - 1 - k];
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

}  // namespace afd
