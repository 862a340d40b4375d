#include "afd/kl.hpp"

#include <cmath>

namespace afd {

namespace {

Eigen::VectorXcd weighted_projection(const Eigen::MatrixXcd& phi, const Eigen::VectorXcd& f,
                                     const Grid& grid) {
  return phi.adjoint() * f.cwiseProduct(grid.weights.cast<Complex>());
}

}  // namespace

Eigen::VectorXcd apply_T(const CovarianceKernel& C, const Eigen::VectorXcd& F, const Grid& grid) {
  if (C.grid.size() != grid.size())
    throw std::invalid_argument("apply_T: covariance grid does not match");
  detail::require_same_grid(F.size(), grid, "apply_T");
  return C.matrix * F.cwiseProduct(grid.weights.cast<Complex>());
}

KLBasis kl_basis(const CovarianceKernel& C, Eigen::Index count) {
  const Grid& grid = C.grid;
  const Eigen::Index m = grid.size();
  const Eigen::VectorXd sqw = grid.weights.cwiseSqrt();

  KLBasis basis;
  basis.grid = grid;

  const double imag_max = C.matrix.imag().cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, C.matrix.cwiseAbs().maxCoeff());
  if (imag_max <= 1e-13 * scale) {
    // Real symmetric path, roughly four times faster than the complex solver.
    Eigen::MatrixXd B = sqw.asDiagonal() * C.matrix.real() * sqw.asDiagonal();
    const EigenSystem<double> es = sym_eig<double>(B, 1e-10);
    basis.eigenvalues = es.values;
    basis.eigenfunctions = (sqw.cwiseInverse().asDiagonal() * es.vectors).cast<Complex>();
  } else {
    Eigen::MatrixXcd B = sqw.cast<Complex>().asDiagonal() * C.matrix * sqw.cast<Complex>().asDiagonal();
    const EigenSystem<Complex> es = sym_eig<Complex>(B, 1e-10);
    basis.eigenvalues = es.values;
    basis.eigenfunctions = sqw.cwiseInverse().cast<Complex>().asDiagonal() * es.vectors;
  }

  const double trace = basis.eigenvalues.sum();
  if (basis.eigenvalues.size() > 0 &&
      basis.eigenvalues[basis.eigenvalues.size() - 1] < -1e-8 * std::max(trace, 1e-300))
    throw std::invalid_argument("kl_basis: covariance is not PSD within tolerance");

  if (count >= 0 && count < m) {
    basis.eigenvalues.conservativeResize(count);
    basis.eigenfunctions.conservativeResize(Eigen::NoChange, count);
  }
  basis.lambda_cut = basis.eigenvalues.size() > 0 ? 1e-12 * std::max(basis.eigenvalues[0], 0.0) : 0.0;
  basis.rank = (basis.eigenvalues.array() > basis.lambda_cut).count();
  return basis;
}

Eigen::MatrixXcd mercer_reconstruct(const KLBasis& basis, Eigen::Index n) {
  if (n < 0 || n > basis.eigenvalues.size())
    throw std::invalid_argument("mercer_reconstruct: n out of range");
  const Eigen::MatrixXcd phi = basis.eigenfunctions.leftCols(n);
  return phi * basis.eigenvalues.head(n).cast<Complex>().asDiagonal() * phi.adjoint();
}

Eigen::VectorXcd kl_partial_sum(const Eigen::VectorXcd& path, const KLBasis& basis,
                                Eigen::Index n, const Eigen::VectorXcd& mean) {
  detail::require_same_grid(path.size(), basis.grid, "kl_partial_sum");
  n = std::min<Eigen::Index>(n, basis.eigenvalues.size());
  Eigen::VectorXcd centered = path;
  if (mean.size() > 0) centered -= mean;
  const Eigen::VectorXcd c = weighted_projection(basis.eigenfunctions.leftCols(n), centered, basis.grid);
  Eigen::VectorXcd out = basis.eigenfunctions.leftCols(n) * c;
  if (mean.size() > 0) out += mean;
  return out;
}

double kl_optimality_check(const CovarianceKernel& C, const Eigen::MatrixXcd& psi,
                           const KLBasis& basis, Eigen::Index n) {
  if (psi.cols() != n) throw std::invalid_argument("kl_optimality_check: psi must have n columns");
  if (n > basis.eigenvalues.size())
    throw std::invalid_argument("kl_optimality_check: n exceeds basis size");
  if (gram_defect_of(psi, basis.grid, InnerProductMode::Lebesgue) > 1e-7)
    throw std::invalid_argument("kl_optimality_check: psi is not orthonormal on the grid");

  double captured = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::VectorXcd Tpsi = apply_T(C, psi.col(k), basis.grid);
    captured += std::real(inner_product(Tpsi, psi.col(k), basis.grid, InnerProductMode::Lebesgue));
  }
  return basis.eigenvalues.head(n).sum() - captured;
}

HcjNorm hcj_norm(const Eigen::VectorXcd& F, const KLBasis& basis, int j,
                 double growth_threshold) {
  if (j < 0) throw std::invalid_argument("hcj_norm: j must be >= 0");
  detail::require_same_grid(F.size(), basis.grid, "hcj_norm");

  const Eigen::Index K = basis.rank;
  HcjNorm out;
  if (K == 0) return out;

  const Eigen::VectorXcd c =
      weighted_projection(basis.eigenfunctions.leftCols(K), F, basis.grid);
  Eigen::VectorXd partial(K);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    acc += std::norm(c[k]) / std::pow(basis.eigenvalues[k], j + 1);
    partial[k] = acc;
  }
  out.value = acc;

  // Tail-growth heuristic: compare the full partial sum against the partial
  // sum with ten times fewer terms.
  const Eigen::Index early = std::max<Eigen::Index>(1, K / 10);
  const double early_sum = partial[early - 1];
  if (early_sum > 0.0 && partial[K - 1] / early_sum > growth_threshold) out.divergent = true;
  return out;
}

VarianceReport variance_identities(const CovarianceKernel& C, const KLBasis& basis,
                                   Eigen::Index n) {
  if (n < 0 || n > basis.eigenvalues.size())
    throw std::invalid_argument("variance_identities: n out of range");
  VarianceReport rep;
  rep.residual_variance = C.matrix.diagonal().real();
  for (Eigen::Index k = 0; k < n; ++k)
    rep.residual_variance -=
        basis.eigenvalues[k] * basis.eigenfunctions.col(k).cwiseAbs2();
  rep.residual_quadrature = (basis.grid.weights.array() * rep.residual_variance.array()).sum();
  rep.tail_sum = basis.eigenvalues.tail(basis.eigenvalues.size() - n).sum();
  return rep;
}

int degree(const Eigen::VectorXcd& F, const KLBasis& basis, double growth_threshold, int j_cap) {
  int deg = -1;
  for (int j = 0; j <= j_cap; ++j) {
    if (hcj_norm(F, basis, j, growth_threshold).divergent) break;
    deg = j;
  }
  return deg;
}

}  // namespace afd
