#pragma once

#include "afd/stochastic.hpp"

namespace afd {

/// Descending eigenpairs of the covariance integral operator, discretized by
/// quadrature (Nystrom): eigenvectors of D^{1/2} C D^{1/2} rescaled by the
/// square-root weights so that <phi_i, phi_j> = delta_ij in the weighted
/// Lebesgue inner product.
struct KLBasis {
  Eigen::VectorXd eigenvalues;     // descending
  Eigen::MatrixXcd eigenfunctions; // m x count, weighted-orthonormal columns
  Eigen::Index rank = 0;           // eigenvalues above lambda_cut
  Grid grid;
  double lambda_cut = 0.0;
};

/// Kernel-integral operator: (T F)_i = sum_j w_j C(t_i, t_j) F_j.
Eigen::VectorXcd apply_T(const CovarianceKernel& C, const Eigen::VectorXcd& F, const Grid& grid);

/// Nystrom eigenpairs of the covariance operator, all of them by default.
KLBasis kl_basis(const CovarianceKernel& C, Eigen::Index count = -1);

/// Truncated Mercer sum  sum_{k<=n} lambda_k phi_k(s) conj(phi_k(t)).
Eigen::MatrixXcd mercer_reconstruct(const KLBasis& basis, Eigen::Index n);

/// mean + sum_{k<=n} <path - mean, phi_k> phi_k.
Eigen::VectorXcd kl_partial_sum(const Eigen::VectorXcd& path, const KLBasis& basis,
                                Eigen::Index n, const Eigen::VectorXcd& mean);

/// Optimality gap  sum_{k<=n} lambda_k - sum_k <T psi_k, psi_k>  for a
/// weighted-orthonormal n-column system psi; non-negative by Ky Fan.
double kl_optimality_check(const CovarianceKernel& C, const Eigen::MatrixXcd& psi,
                           const KLBasis& basis, Eigen::Index n);

struct HcjNorm {
  double value = 0.0;
  bool divergent = false;
};

/// Spectrally weighted norm  sum_k alpha_k |<F, phi_k>|^2 / lambda_k^{j+1}
/// over the retained eigenpairs, with a partial-sum growth heuristic marking
/// divergence (growth factor over the last index decade above the threshold).
HcjNorm hcj_norm(const Eigen::VectorXcd& F, const KLBasis& basis, int j,
                 double growth_threshold = 10.0);

struct VarianceReport {
  Eigen::VectorXd residual_variance;  // C(t,t) - sum_{k<=n} lambda_k |phi_k(t)|^2
  double residual_quadrature = 0.0;   // its weighted integral
  double tail_sum = 0.0;              // sum_{k>n} lambda_k
};

VarianceReport variance_identities(const CovarianceKernel& C, const KLBasis& basis,
                                   Eigen::Index n);

/// Largest j <= j_cap with finite H_{C_j} norm per the growth heuristic;
/// -1 if even j = 0 is flagged divergent. A diagnostic, not a certificate.
int degree(const Eigen::VectorXcd& F, const KLBasis& basis, double growth_threshold = 10.0,
           int j_cap = 6);

}  // namespace afd
