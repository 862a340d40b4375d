#include "afd/stochastic.hpp"

#include <cmath>
#include <limits>

namespace afd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double mode_scale(InnerProductMode mode) {
  return mode == InnerProductMode::NormalizedArc ? 1.0 / two_pi : 1.0;
}

void require_hermitian(const Eigen::MatrixXcd& A, const char* who, double tol = 1e-10) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
    throw std::invalid_argument(std::string(who) + ": matrix is not conjugate-symmetric");
}

void require_matching_grids(const Grid& a, const Grid& b, const char* who) {
  if (a.size() != b.size() || (a.nodes - b.nodes).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument(std::string(who) + ": grids do not match");
}

// Batched covariance objective of Gram-Schmidt-extended candidates:
// obj(q) = E~_q^* M E~_q with M = s^2 W C W and E~_q the unit-norm residual
// of the raw kernel K_q against the current system.
struct CovObjective {
  const Grid& grid;
  InnerProductMode mode;
  KernelFamily family;
  const Eigen::MatrixXcd& M;
  const OrthonormalSystem* system;

  Eigen::VectorXd from_kernels(const Eigen::MatrixXcd& K) const {
    const double s = mode_scale(mode);
    const Eigen::Index nc = K.cols();
    const Eigen::MatrixXcd WK = grid.weights.cast<Complex>().asDiagonal() * K;
    const Eigen::VectorXd knorm2 = s * (K.conjugate().cwiseProduct(WK)).colwise().sum().real();
    const Eigen::MatrixXcd Y = M * K;
    const Eigen::VectorXd diag = (K.conjugate().cwiseProduct(Y)).colwise().sum().real();

    Eigen::VectorXd out(nc);
    if (system->size() == 0) {
      for (Eigen::Index q = 0; q < nc; ++q)
        out[q] = knorm2[q] > 1e-300 ? std::max(diag[q], 0.0) / knorm2[q] : kNegInf;
      return out;
    }

    const Eigen::MatrixXcd& E = system->functions;
    const Eigen::MatrixXcd G = s * (E.adjoint() * WK);  // <K_q, E_k>
    const Eigen::MatrixXcd Z = E.adjoint() * Y;         // E^* M K_q
    const Eigen::MatrixXcd P = E.adjoint() * (M * E);
    for (Eigen::Index q = 0; q < nc; ++q) {
      const double den = knorm2[q] - G.col(q).squaredNorm();
      if (!(knorm2[q] > 1e-300) || den < kGsDependenceTol * knorm2[q]) {
        out[q] = kNegInf;
        continue;
      }
      const double num = diag[q] - 2.0 * std::real(Z.col(q).dot(G.col(q))) +
                         std::real(G.col(q).dot(P * G.col(q)));
      out[q] = std::max(num, 0.0) / den;
    }
    return out;
  }

  Eigen::VectorXd operator()(const std::vector<Complex>& points) const {
    return from_kernels(kernel_matrix(points, family, grid));
  }
};

Eigen::MatrixXcd objective_matrix(const CovarianceKernel& C, InnerProductMode mode) {
  const double s = mode_scale(mode);
  const Eigen::VectorXcd w = C.grid.weights.cast<Complex>();
  return (s * s) * (w.asDiagonal() * C.matrix * w.asDiagonal());
}

}  // namespace

CovarianceKernel covariance_from_function(const std::function<double(double, double)>& cov,
                                          const Grid& grid) {
  CovarianceKernel C;
  C.grid = grid;
  C.source = CovarianceKernel::Source::ClosedForm;
  C.matrix.resize(grid.size(), grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = cov(grid.nodes[i], grid.nodes[j]);
      C.matrix(i, j) = v;
      C.matrix(j, i) = v;
    }
  require_hermitian(C.matrix, "covariance_from_function");
  return C;
}

Eigen::VectorXcd empirical_mean(const SamplePathEnsemble& ensemble) {
  if (ensemble.count() < 1) throw std::invalid_argument("empirical_mean: empty ensemble");
  return ensemble.paths.colwise().mean().transpose();
}

CovarianceKernel covariance_from_ensemble(const SamplePathEnsemble& ensemble) {
  const Eigen::Index n = ensemble.count();
  if (n < 2) throw std::invalid_argument("covariance_from_ensemble: need at least two paths");
  const Eigen::VectorXcd mu = empirical_mean(ensemble);
  Eigen::MatrixXcd centered = ensemble.paths;
  centered.rowwise() -= mu.transpose();

  CovarianceKernel C;
  C.grid = ensemble.grid;
  C.source = CovarianceKernel::Source::Empirical;
  C.matrix = (centered.transpose() * centered.conjugate()) / double(n - 1);
  C.matrix = ((C.matrix + C.matrix.adjoint()) * 0.5).eval();
  return C;
}

CovarianceKernel covariance_from_parametric(const ParametricRandomField& field, const Grid& grid) {
  const Eigen::Index nu = field.u_rule.size();
  Eigen::VectorXd pw(nu);
  for (Eigen::Index k = 0; k < nu; ++k) {
    const double p = field.density(field.u_rule.nodes[k]);
    if (p < -1e-12) throw std::invalid_argument("covariance_from_parametric: negative density");
    pw[k] = p * field.u_rule.weights[k];
  }
  if (std::abs(pw.sum() - 1.0) > 1e-8)
    throw std::invalid_argument("covariance_from_parametric: density does not integrate to one");

  Eigen::MatrixXcd F(grid.size(), nu);
  for (Eigen::Index k = 0; k < nu; ++k)
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      F(i, k) = field.family(grid.nodes[i], field.u_rule.nodes[k]);

  const Eigen::VectorXcd mu = F * pw.cast<Complex>();
  F.colwise() -= mu;
  Eigen::MatrixXcd V = F * pw.cwiseMax(0.0).cwiseSqrt().cast<Complex>().asDiagonal();

  CovarianceKernel C;
  C.grid = grid;
  C.source = CovarianceKernel::Source::ClosedForm;
  C.matrix = V * V.adjoint();
  C.matrix = ((C.matrix + C.matrix.adjoint()) * 0.5).eval();
  return C;
}

double stochastic_objective(const CovarianceKernel& C, const Eigen::VectorXcd& E,
                            const Grid& grid, InnerProductMode mode) {
  require_matching_grids(C.grid, grid, "stochastic_objective");
  detail::require_same_grid(E.size(), grid, "stochastic_objective");
  const double s = mode_scale(mode);
  const Eigen::VectorXcd v = E.cwiseProduct(grid.weights.cast<Complex>());
  const Complex raw = v.dot(C.matrix * v);  // v^* C v
  return s * s * std::real(raw);
}

AnalyticProjector::AnalyticProjector(const Grid& grid) : grid_(grid) {
  const Eigen::Index m = grid.size();
  if (m < 3) throw std::invalid_argument("AnalyticProjector: grid too small");
  const double h = grid.nodes[1] - grid.nodes[0];
  for (Eigen::Index i = 1; i < m; ++i)
    if (std::abs(grid.nodes[i] - grid.nodes[i - 1] - h) > 1e-9)
      throw std::invalid_argument("AnalyticProjector: grid must be uniform");
  if (std::abs((grid.nodes[m - 1] - grid.nodes[0]) - two_pi) > 1e-9)
    throw std::invalid_argument("AnalyticProjector: grid must span one full period");

  const Eigen::Index N = m - 1;  // distinct circle points
  Eigen::VectorXd mask(N);
  for (Eigen::Index k = 0; k < N; ++k) {
    if (k == 0) mask[k] = 0.5;
    else if (2 * k < N) mask[k] = 1.0;
    else if (2 * k == N) mask[k] = 0.5;
    else mask[k] = 0.0;
  }
  // The circle projector is circulant; build its symbol row once.
  Eigen::VectorXcd symbol(N);
  for (Eigen::Index d = 0; d < N; ++d) {
    Complex acc{0.0, 0.0};
    for (Eigen::Index k = 0; k < N; ++k)
      acc += mask[k] * std::polar(1.0, two_pi * double(k) * double(d) / double(N));
    symbol[d] = acc / double(N);
  }

  P_.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index I = i % N;
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::Index J = j % N;
      Eigen::Index d = I - J;
      if (d < 0) d += N;
      const double colw = (j == 0 || j == m - 1) ? 0.5 : 1.0;
      P_(i, j) = symbol[d] * colw;
    }
  }
}

Eigen::VectorXcd AnalyticProjector::project(const Eigen::VectorXcd& f) const {
  detail::require_same_grid(f.size(), grid_, "AnalyticProjector::project");
  return P_ * f;
}

CovarianceKernel AnalyticProjector::project(const CovarianceKernel& C) const {
  require_matching_grids(C.grid, grid_, "AnalyticProjector::project");
  CovarianceKernel out;
  out.grid = C.grid;
  out.source = C.source;
  out.matrix = P_ * C.matrix * P_.adjoint();
  out.matrix = ((out.matrix + out.matrix.adjoint()) * 0.5).eval();
  return out;
}

SamplePathEnsemble AnalyticProjector::project(const SamplePathEnsemble& ensemble) const {
  require_matching_grids(ensemble.grid, grid_, "AnalyticProjector::project");
  SamplePathEnsemble out;
  out.grid = ensemble.grid;
  out.paths = ensemble.paths * P_.transpose();
  out.mean = ensemble.mean.size() > 0 ? (P_ * ensemble.mean).eval()
                                      : Eigen::VectorXcd::Zero(grid_.size()).eval();
  return out;
}

Eigen::MatrixXcd project_paths(const SamplePathEnsemble& ensemble, const OrthonormalSystem& system) {
  const double s = mode_scale(system.mode);
  Eigen::MatrixXcd centered = ensemble.paths;
  if (ensemble.mean.size() > 0) centered.rowwise() -= ensemble.mean.transpose();
  const Eigen::MatrixXcd WE =
      (ensemble.grid.weights.cast<Complex>().asDiagonal() * system.functions).conjugate();
  return s * (centered * WE);
}

namespace {

// Shared driver for SPOAFD-style greedy selection on a covariance objective.
Decomposition covariance_greedy(const CovarianceKernel& C, const SamplePathEnsemble& ensemble,
                                KernelFamily family, Eigen::Index n, const SearchConfig& cfg,
                                InnerProductMode mode, Method method) {
  if (n < 1) throw std::invalid_argument("spoafd_decompose: need n >= 1");
  require_matching_grids(C.grid, ensemble.grid, "spoafd_decompose");
  require_hermitian(C.matrix, "spoafd_decompose");
  const Grid& grid = C.grid;
  const double s = mode_scale(mode);

  const Eigen::MatrixXcd M = objective_matrix(C, mode);
  const std::vector<Complex> points = polar_candidates(cfg);
  const Eigen::MatrixXcd K = kernel_matrix(points, family, grid);
  const Eigen::MatrixXcd WK = grid.weights.cast<Complex>().asDiagonal() * K;
  const Eigen::VectorXd knorm2 = s * (K.conjugate().cwiseProduct(WK)).colwise().sum().real();
  const Eigen::MatrixXcd Y = M * K;
  const Eigen::VectorXd diag0 = (K.conjugate().cwiseProduct(Y)).colwise().sum().real();

  Decomposition dec;
  dec.method = method;
  dec.mode = mode;
  dec.grid = grid;
  dec.system.functions.resize(grid.size(), 0);
  dec.system.family = family;
  dec.system.mode = mode;
  dec.mean = ensemble.mean.size() > 0 ? ensemble.mean : Eigen::VectorXcd::Zero(grid.size()).eval();

  Eigen::MatrixXcd G(0, K.cols());  // <K_q, E_k>, one row per accepted term
  Eigen::MatrixXcd Z(0, K.cols());  // E^* M K_q
  Eigen::MatrixXcd P(0, 0);         // E^* M E
  std::vector<double> captured;

  CovObjective patch_objective{grid, mode, family, M, &dec.system};

  for (Eigen::Index step = 0; step < n; ++step) {
    Eigen::VectorXd coarse(K.cols());
    for (Eigen::Index q = 0; q < K.cols(); ++q) {
      const double den = knorm2[q] - G.col(q).squaredNorm();
      if (!(knorm2[q] > 1e-300) || den < kGsDependenceTol * knorm2[q]) {
        coarse[q] = kNegInf;
        continue;
      }
      double num = diag0[q];
      if (G.rows() > 0)
        num += -2.0 * std::real(Z.col(q).dot(G.col(q))) + std::real(G.col(q).dot(P * G.col(q)));
      coarse[q] = std::max(num, 0.0) / den;
    }

    const SelectionOutcome out = maximize_over_disc(coarse, points, patch_objective, cfg);
    if (out.objective < kExhaustionTol) break;

    const KernelDescriptor desc = resolve_multiplicity(out.point, dec.system.params, family, cfg);
    const GsExtension ext = gs_extend(dec.system, desc, grid);
    if (!ext.accepted())
      throw numerical_error("spoafd_decompose: selected candidate is linearly dependent");

    const Eigen::Index k = dec.system.size();
    dec.system.functions.conservativeResize(Eigen::NoChange, k + 1);
    dec.system.functions.col(k) = ext.function;
    dec.system.params.push(desc.parameter);
    dec.system.gs_upper.conservativeResize(k + 1, k + 1);
    if (k > 0) dec.system.gs_upper.row(k).head(k).setZero();
    dec.system.gs_upper.col(k).head(k) = ext.projections;
    dec.system.gs_upper(k, k) = ext.r_diag;

    captured.push_back(stochastic_objective(C, ext.function, grid, mode));

    G.conservativeResize(k + 1, Eigen::NoChange);
    G.row(k) = s * (ext.function.adjoint() * WK);
    Z.conservativeResize(k + 1, Eigen::NoChange);
    Z.row(k) = ext.function.adjoint() * Y;
    const Eigen::VectorXcd Me = M * ext.function;
    P.conservativeResize(k + 1, k + 1);
    for (Eigen::Index j = 0; j < k; ++j) {
      const Complex v = dec.system.functions.col(j).dot(Me);  // E_j^* M e_new
      P(j, k) = v;
      P(k, j) = std::conj(v);
    }
    P(k, k) = ext.function.dot(Me);
  }

  dec.captured = Eigen::Map<Eigen::VectorXd>(captured.data(), static_cast<Eigen::Index>(captured.size()));
  dec.system.gram_defect = gram_defect_of(dec.system.functions, grid, mode);

  // Per-path coefficients and measured mean residual energies.
  dec.coefficients = project_paths(ensemble, dec.system);
  Eigen::MatrixXcd resid = ensemble.paths;
  if (dec.mean.size() > 0) resid.rowwise() -= dec.mean.transpose();
  dec.residual_energy.resize(dec.terms() + 1);
  const auto mean_energy = [&](const Eigen::MatrixXcd& R) {
    double acc = 0.0;
    for (Eigen::Index p = 0; p < R.rows(); ++p)
      acc += norm_sq(R.row(p).transpose().eval(), grid, mode);
    return acc / std::max<Eigen::Index>(1, R.rows());
  };
  dec.residual_energy[0] = mean_energy(resid);
  for (Eigen::Index k = 0; k < dec.terms(); ++k) {
    resid -= dec.coefficients.col(k) * dec.system.functions.col(k).transpose();
    dec.residual_energy[k + 1] = mean_energy(resid);
  }
  return dec;
}

}  // namespace

Decomposition spoafd_decompose(const CovarianceKernel& C, const SamplePathEnsemble& ensemble,
                               KernelFamily family, Eigen::Index n, const SearchConfig& cfg,
                               InnerProductMode mode) {
  return covariance_greedy(C, ensemble, family, n, cfg, mode, Method::SPOAFD);
}

Decomposition safd_decompose(const CovarianceKernel& C_plus, const SamplePathEnsemble& ensemble_plus,
                             Eigen::Index n, const SearchConfig& cfg) {
  return covariance_greedy(C_plus, ensemble_plus, KernelFamily::Szego, n, cfg,
                           InnerProductMode::NormalizedArc, Method::SAFD);
}

Decomposition snb_optimize(const CovarianceKernel& C, Eigen::Index n, const ParameterTuple& init,
                           const SearchConfig& cfg, const SweepConfig& sweep, KernelFamily family,
                           InnerProductMode mode, const SamplePathEnsemble* ensemble) {
  if (n < 1) throw std::invalid_argument("snb_optimize: need n >= 1");
  if (init.size() == 0) throw std::invalid_argument("snb_optimize: empty initial tuple");
  require_hermitian(C.matrix, "snb_optimize");
  const Grid& grid = C.grid;
  const double s = mode_scale(mode);
  const Eigen::Index nt = std::min<Eigen::Index>(n, init.size());

  const Eigen::MatrixXcd M = objective_matrix(C, mode);
  const std::vector<Complex> points = polar_candidates(cfg);
  const Eigen::MatrixXcd K = kernel_matrix(points, family, grid);
  const Eigen::MatrixXcd WK = grid.weights.cast<Complex>().asDiagonal() * K;
  const Eigen::VectorXd knorm2 = s * (K.conjugate().cwiseProduct(WK)).colwise().sum().real();
  const Eigen::MatrixXcd Y = M * K;
  const Eigen::VectorXd diag0 = (K.conjugate().cwiseProduct(Y)).colwise().sum().real();

  const auto build_system = [&](const ParameterTuple& tuple) {
    OrthonormalSystem sys;
    sys.functions.resize(grid.size(), 0);
    sys.family = family;
    sys.mode = mode;
    sys.gs_upper.resize(0, 0);
    for (Eigen::Index j = 0; j < tuple.size(); ++j) {
      const GsExtension ext = gs_extend(sys, tuple.descriptor(j, family), grid);
      if (!ext.accepted()) throw numerical_error("snb_optimize: dependent kernel in tuple");
      const Eigen::Index k = sys.size();
      sys.functions.conservativeResize(Eigen::NoChange, k + 1);
      sys.functions.col(k) = ext.function;
      sys.params.push(tuple.values[static_cast<std::size_t>(j)]);
      sys.gs_upper.conservativeResize(k + 1, k + 1);
      if (k > 0) sys.gs_upper.row(k).head(k).setZero();
      sys.gs_upper.col(k).head(k) = ext.projections;
      sys.gs_upper(k, k) = ext.r_diag;
    }
    return sys;
  };
  const auto system_energy = [&](const OrthonormalSystem& sys) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < sys.size(); ++k)
      acc += std::max(0.0, std::real(sys.functions.col(k).dot(M * sys.functions.col(k))));
    return acc;
  };

  ParameterTuple tuple;
  for (Eigen::Index j = 0; j < nt; ++j) tuple.push(init.values[static_cast<std::size_t>(j)]);
  double energy = system_energy(build_system(tuple));

  for (int pass = 0; pass < sweep.max_sweeps; ++pass) {
    const double start_energy = energy;
    for (Eigen::Index k = 0; k < tuple.size(); ++k) {
      ParameterTuple others;
      for (Eigen::Index j = 0; j < tuple.size(); ++j)
        if (j != k) others.push(tuple.values[static_cast<std::size_t>(j)]);
      OrthonormalSystem fixed = build_system(others);
      const double base = system_energy(fixed);

      Eigen::VectorXd coarse(K.cols());
      const Eigen::MatrixXcd G = s * (fixed.functions.adjoint() * WK);
      const Eigen::MatrixXcd Z = fixed.functions.adjoint() * Y;
      const Eigen::MatrixXcd P = fixed.functions.adjoint() * (M * fixed.functions);
      for (Eigen::Index q = 0; q < K.cols(); ++q) {
        const double den = knorm2[q] - G.col(q).squaredNorm();
        if (!(knorm2[q] > 1e-300) || den < kGsDependenceTol * knorm2[q]) {
          coarse[q] = kNegInf;
          continue;
        }
        const double num = diag0[q] - 2.0 * std::real(Z.col(q).dot(G.col(q))) +
                           std::real(G.col(q).dot(P * G.col(q)));
        coarse[q] = std::max(num, 0.0) / den;
      }

      CovObjective patch_objective{grid, mode, family, M, &fixed};
      SelectionOutcome out;
      try {
        out = maximize_over_disc(coarse, points, patch_objective, cfg);
      } catch (const numerical_error&) {
        continue;
      }
      const KernelDescriptor desc = resolve_multiplicity(out.point, others, family, cfg);
      const GsExtension ext = gs_extend(fixed, desc, grid);
      if (!ext.accepted()) continue;
      const double total =
          base + std::max(0.0, std::real(ext.function.dot(M * ext.function)));
      if (total > energy) {
        ParameterTuple updated;
        for (Eigen::Index j = 0; j < tuple.size(); ++j)
          updated.push(j == k ? desc.parameter : tuple.values[static_cast<std::size_t>(j)]);
        tuple = updated;
        energy = total;
      }
    }
    const double gain = (energy - start_energy) / std::max(start_energy, 1e-300);
    if (gain < sweep.tol) break;
  }

  Decomposition dec;
  dec.method = Method::SnB;
  dec.mode = mode;
  dec.grid = grid;
  dec.system = build_system(tuple);
  dec.system.gram_defect = gram_defect_of(dec.system.functions, grid, mode);
  dec.captured.resize(dec.terms());
  for (Eigen::Index k = 0; k < dec.terms(); ++k)
    dec.captured[k] = stochastic_objective(C, dec.system.functions.col(k), grid, mode);

  if (ensemble != nullptr) {
    require_matching_grids(ensemble->grid, grid, "snb_optimize");
    dec.mean = ensemble->mean.size() > 0 ? ensemble->mean : Eigen::VectorXcd::Zero(grid.size()).eval();
    dec.coefficients = project_paths(*ensemble, dec.system);
    Eigen::MatrixXcd resid = ensemble->paths;
    resid.rowwise() -= dec.mean.transpose();
    dec.residual_energy.resize(dec.terms() + 1);
    const auto mean_energy = [&](const Eigen::MatrixXcd& R) {
      double acc = 0.0;
      for (Eigen::Index p = 0; p < R.rows(); ++p)
        acc += norm_sq(R.row(p).transpose().eval(), grid, mode);
      return acc / std::max<Eigen::Index>(1, R.rows());
    };
    dec.residual_energy[0] = mean_energy(resid);
    for (Eigen::Index k = 0; k < dec.terms(); ++k) {
      resid -= dec.coefficients.col(k) * dec.system.functions.col(k).transpose();
      dec.residual_energy[k + 1] = mean_energy(resid);
    }
  } else {
    dec.mean = Eigen::VectorXcd::Zero(grid.size());
    dec.coefficients.resize(0, dec.terms());
    dec.residual_energy = Eigen::VectorXd::Zero(dec.terms() + 1);
  }
  return dec;
}

}  // namespace afd
