#pragma once

#include <functional>

#include "afd/afd_core.hpp"

namespace afd {

/// Conjugate-symmetric PSD covariance kernel discretized on a grid.
struct CovarianceKernel {
  enum class Source { ClosedForm, Empirical };
  Eigen::MatrixXcd matrix;  // C(t_i, t_j)
  Grid grid;
  Source source = Source::ClosedForm;

  double trace_quadrature() const {
    return (grid.weights.array() * matrix.diagonal().real().array()).sum();
  }
};

/// Paths sampled on a shared grid, one row per realization.
struct SamplePathEnsemble {
  Eigen::MatrixXcd paths;  // n_paths x m
  Grid grid;
  Eigen::VectorXcd mean;

  Eigen::Index count() const { return paths.rows(); }
};

/// Random field of the form F(t, X) with X distributed by a density on U.
struct ParametricRandomField {
  std::function<Complex(double t, double u)> family;
  std::function<double(double u)> density;
  Grid u_rule;  // quadrature over U
};

/// Discretize a closed-form covariance function on the grid.
CovarianceKernel covariance_from_function(const std::function<double(double, double)>& cov,
                                          const Grid& grid);

/// Pointwise average of the paths.
Eigen::VectorXcd empirical_mean(const SamplePathEnsemble& ensemble);

/// Unbiased sample covariance (1/(n-1) normalization) of the centered paths.
CovarianceKernel covariance_from_ensemble(const SamplePathEnsemble& ensemble);

/// Covariance of F(t, X) by quadrature over the parameter density.
CovarianceKernel covariance_from_parametric(const ParametricRandomField& field, const Grid& grid);

/// Expected squared coefficient E_w |<f_w - mu, E>|^2 computed from the
/// covariance alone: the double quadrature of C(s,t) E(t) conj(E(s)).
double stochastic_objective(const CovarianceKernel& C, const Eigen::VectorXcd& E,
                            const Grid& grid, InnerProductMode mode);

/// Projection of real boundary data onto non-negative circle frequencies
/// (half weight at frequency zero), so that f = 2 Re(P f) for real f.
///
/// Requires a uniform grid whose first and last node are the same circle
/// point; the matrix acts on samples that carry that duplicated endpoint.
class AnalyticProjector {
 public:
  explicit AnalyticProjector(const Grid& grid);

  Eigen::VectorXcd project(const Eigen::VectorXcd& f) const;
  CovarianceKernel project(const CovarianceKernel& C) const;
  SamplePathEnsemble project(const SamplePathEnsemble& ensemble) const;
  const Eigen::MatrixXcd& matrix() const { return P_; }

 private:
  Eigen::MatrixXcd P_;
  Grid grid_;
};

/// Per-path coefficients <f_w - mu, E_k> for a shared orthonormal system.
Eigen::MatrixXcd project_paths(const SamplePathEnsemble& ensemble, const OrthonormalSystem& system);

/// SPOAFD: greedy pre-orthogonal selection driven by the covariance
/// objective; one shared system, per-path coefficients.
Decomposition spoafd_decompose(const CovarianceKernel& C, const SamplePathEnsemble& ensemble,
                               KernelFamily family, Eigen::Index n, const SearchConfig& cfg,
                               InnerProductMode mode = InnerProductMode::Lebesgue);

/// SAFD: the Hardy-space instance of the covariance-driven selection with the
/// Szego dictionary (TM extensions and Gram-Schmidt extensions coincide).
/// Inputs must already be analytic-signal versions.
Decomposition safd_decompose(const CovarianceKernel& C_plus, const SamplePathEnsemble& ensemble_plus,
                             Eigen::Index n, const SearchConfig& cfg);

/// Stochastic n-best: cyclic sweeps maximizing the summed covariance
/// objective of the n-tuple's orthonormal system.
Decomposition snb_optimize(const CovarianceKernel& C, Eigen::Index n, const ParameterTuple& init,
                           const SearchConfig& cfg, const SweepConfig& sweep, KernelFamily family,
                           InnerProductMode mode = InnerProductMode::Lebesgue,
                           const SamplePathEnsemble* ensemble = nullptr);

}  // namespace afd
