#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "afd/kl.hpp"
#include "afd/processes.hpp"

using namespace afd;

namespace {

CovarianceKernel bridge_cov(const Grid& g) {
  return covariance_from_function([](double s, double t) { return brownian_bridge_cov(s, t); }, g);
}

// Weighted-orthonormal random columns via Gram-Schmidt in the Lebesgue
// inner product.
Eigen::MatrixXcd random_orthonormal(const Grid& g, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd psi(g.size(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXcd v(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) v[i] = Complex(normal(rng), normal(rng));
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < k; ++j)
        v -= inner_product(v, psi.col(j), g, InnerProductMode::Lebesgue) * psi.col(j);
    psi.col(k) = v / norm_w(v, g, InnerProductMode::Lebesgue);
  }
  return psi;
}

}  // namespace

TEST_CASE("apply_T on the bridge kernel has a closed form") {
  const Grid g = trapezoid_grid(512, 0.0, two_pi);
  const CovarianceKernel C = bridge_cov(g);

  CHECK(apply_T(C, Eigen::VectorXcd::Zero(g.size()), g).cwiseAbs().maxCoeff() == 0.0);

  // integral of min(s,t) - st/(2pi) dt = s(2pi - s)/2; the integrand is
  // piecewise linear with its kink on a node, so the trapezoid rule is exact.
  const Eigen::VectorXcd Tone = apply_T(C, Eigen::VectorXcd::Ones(g.size()), g);
  for (Eigen::Index i = 0; i < g.size(); i += 37) {
    const double s = g.nodes[i];
    CHECK(std::real(Tone[i]) == doctest::Approx(s * (two_pi - s) / 2).epsilon(1e-10));
  }
}

TEST_CASE("kl_basis on a rank-one kernel") {
  const Grid g = trapezoid_grid(128, 0.0, two_pi);
  Eigen::VectorXcd shape(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) shape[i] = std::sin(g.nodes[i]) + 0.3;
  CovarianceKernel C;
  C.grid = g;
  C.matrix = shape * shape.adjoint();
  C.source = CovarianceKernel::Source::ClosedForm;

  const KLBasis basis = kl_basis(C);
  CHECK(basis.rank == 1);
  CHECK(basis.eigenvalues[0] ==
        doctest::Approx(norm_sq(shape, g, InnerProductMode::Lebesgue)).epsilon(1e-12));
  const Eigen::VectorXcd unit = shape / norm_w(shape, g, InnerProductMode::Lebesgue);
  const Complex phase = inner_product(unit, basis.eigenfunctions.col(0), g, InnerProductMode::Lebesgue);
  CHECK(std::abs(phase) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("kl_basis matches the bridge spectrum") {
  const Grid g = trapezoid_grid(512, 0.0, two_pi);
  const KLBasis basis = kl_basis(bridge_cov(g));

  for (int j = 1; j <= 10; ++j)
    CHECK(basis.eigenvalues[j - 1] == doctest::Approx(bridge_eigenvalue(j)).epsilon(0.02));

  // Trace identity is exact for the discretized operator.
  const double trace = (g.weights.array() * bridge_cov(g).matrix.diagonal().real().array()).sum();
  CHECK(basis.eigenvalues.sum() == doctest::Approx(trace).epsilon(1e-10));

  // Nystrom self-consistency T phi_k = lambda_k phi_k.
  const CovarianceKernel C = bridge_cov(g);
  for (Eigen::Index k = 0; k < 20; ++k) {
    const Eigen::VectorXcd lhs = apply_T(C, basis.eigenfunctions.col(k), g);
    const double err =
        (lhs - basis.eigenvalues[k] * basis.eigenfunctions.col(k)).cwiseAbs().maxCoeff();
    CHECK(err < 1e-6 * basis.eigenvalues[0]);
  }

  // Weighted orthonormality of the eigenfunctions.
  CHECK(gram_defect_of(basis.eigenfunctions.leftCols(30), g, InnerProductMode::Lebesgue) < 1e-8);
}

TEST_CASE("mercer reconstruction") {
  const Grid g = trapezoid_grid(256, 0.0, two_pi);
  const CovarianceKernel C = bridge_cov(g);
  const KLBasis basis = kl_basis(C);

  CHECK(mercer_reconstruct(basis, 0).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXcd full = mercer_reconstruct(basis, basis.eigenvalues.size());
  CHECK((full - C.matrix).norm() / C.matrix.norm() < 1e-8);

  const Eigen::MatrixXcd m50 = mercer_reconstruct(basis, 50);
  const double rel = (m50 - C.matrix).norm() / C.matrix.norm();
  CHECK(rel < 0.05);
  const Eigen::MatrixXcd m25 = mercer_reconstruct(basis, 25);
  CHECK((m50 - C.matrix).norm() <= (m25 - C.matrix).norm());
}

TEST_CASE("kl partial sums recover paths and decrease in error") {
  const Grid g = trapezoid_grid(126, 0.0, two_pi);
  const CovarianceKernel C = bridge_cov(g);
  const KLBasis basis = kl_basis(C);
  const Eigen::VectorXcd path = simulate_bridge({126, 31, two_pi}).cast<Complex>();
  const Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(g.size());

  CHECK((kl_partial_sum(path, basis, 0, mean) - mean).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXcd full = kl_partial_sum(path, basis, basis.eigenvalues.size(), mean);
  CHECK(rel_error(path, full, g) < 1e-10);

  double prev = 2.0;
  for (Eigen::Index n : {25, 50, 100}) {
    const double err = rel_error(path, kl_partial_sum(path, basis, n, mean), g);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("kl optimality gap is zero on the eigenspace and non-negative elsewhere") {
  const Grid g = trapezoid_grid(128, 0.0, two_pi);
  const CovarianceKernel C = bridge_cov(g);
  const KLBasis basis = kl_basis(C);
  const Eigen::Index n = 6;
  const double trace = C.trace_quadrature();

  CHECK(std::abs(kl_optimality_check(C, basis.eigenfunctions.leftCols(n), basis, n)) <
        1e-10 * trace);

  // A random unitary rotation of the top-n eigenspace still closes the gap.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) R(i, j) = Complex(normal(rng), normal(rng));
  const Eigen::MatrixXcd Q = Eigen::HouseholderQR<Eigen::MatrixXcd>(R).householderQ();
  const Eigen::MatrixXcd rotated = basis.eigenfunctions.leftCols(n) * Q;
  CHECK(std::abs(kl_optimality_check(C, rotated, basis, n)) < 1e-8 * trace);

  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXcd psi = random_orthonormal(g, n, 100 + trial);
    CHECK(kl_optimality_check(C, psi, basis, n) >= -1e-8 * trace);
  }

  Eigen::MatrixXcd bad = basis.eigenfunctions.leftCols(n);
  bad.col(0) *= 2.0;
  CHECK_THROWS_AS(kl_optimality_check(C, bad, basis, n), std::invalid_argument);
}

TEST_CASE("spectral norms and the operator shift identity") {
  const Grid g = trapezoid_grid(128, 0.0, two_pi);
  const CovarianceKernel C = bridge_cov(g);
  const KLBasis basis = kl_basis(C);

  const Eigen::VectorXcd phi1 = basis.eigenfunctions.col(0);
  const HcjNorm h0 = hcj_norm(phi1, basis, 0);
  CHECK_FALSE(h0.divergent);
  CHECK(h0.value == doctest::Approx(1.0 / basis.eigenvalues[0]).epsilon(1e-10));

  // A function with no projection on the retained span has zero norm.
  const Eigen::VectorXcd nullvec = basis.eigenfunctions.col(basis.eigenfunctions.cols() - 1);
  CHECK(hcj_norm(nullvec, basis, 0).value < 1e-18);

  // ||T F||_{H_{C_{j+2}}} = ||F||_{H_{C_j}} on the retained span.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int j : {0, 1}) {
    Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(basis.rank);
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(40, basis.rank); ++k)
      coeff[k] = Complex(normal(rng), normal(rng)) * basis.eigenvalues[k];
    const Eigen::VectorXcd F = basis.eigenfunctions.leftCols(basis.rank) * coeff;
    const Eigen::VectorXcd TF = apply_T(C, F, g);
    const double lhs = hcj_norm(TF, basis, j + 2).value;
    const double rhs = hcj_norm(F, basis, j).value;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
  }

  // Imbedding bound ||F||_{H_C} <= lambda_max ||F||_{H_{C_1}} (lambda_1 = 4 > 1).
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(basis.rank);
    for (Eigen::Index k = 0; k < 30; ++k) coeff[k] = Complex(normal(rng), normal(rng));
    const Eigen::VectorXcd F = basis.eigenfunctions.leftCols(basis.rank) * coeff;
    const double h_c = std::sqrt(hcj_norm(F, basis, 0).value);
    const double h_c1 = std::sqrt(hcj_norm(F, basis, 1).value);
    CHECK(h_c <= std::sqrt(basis.eigenvalues[0]) * h_c1 * (1.0 + 1e-12));
    CHECK(h_c <= basis.eigenvalues[0] * h_c1 * (1.0 + 1e-12));
  }
}

TEST_CASE("variance identities") {
  const Grid g = trapezoid_grid(512, 0.0, two_pi);
  const CovarianceKernel C = bridge_cov(g);
  const KLBasis basis = kl_basis(C);

  const VarianceReport full = variance_identities(C, basis, basis.eigenvalues.size());
  CHECK(full.residual_variance.minCoeff() > -1e-8);
  CHECK(full.residual_variance.cwiseAbs().maxCoeff() < 1e-8);

  const VarianceReport none = variance_identities(C, basis, 0);
  CHECK((none.residual_variance - C.matrix.diagonal().real()).cwiseAbs().maxCoeff() < 1e-12);

  const VarianceReport mid = variance_identities(C, basis, 100);
  CHECK(mid.residual_variance.minCoeff() > -1e-8);
  CHECK(mid.residual_quadrature == doctest::Approx(mid.tail_sum).epsilon(1e-10));

  // Tail behaves like the truncated analytic sum of 4/k^2.
  double analytic_tail = 0.0;
  for (Eigen::Index k = 101; k <= basis.eigenvalues.size(); ++k)
    analytic_tail += 4.0 / (double(k) * double(k));
  CHECK(mid.tail_sum == doctest::Approx(analytic_tail).epsilon(0.10));
}

TEST_CASE("degree diagnostic follows the spectral embedding ladder") {
  const Grid g = trapezoid_grid(256, 0.0, two_pi);
  const KLBasis basis = kl_basis(bridge_cov(g));
  const Eigen::Index K = basis.rank;

  // A single retained mode has every tested norm finite.
  CHECK(degree(basis.eigenfunctions.col(0), basis) == 6);

  // sum sqrt(lambda_k) phi_k lies outside H_C (linear partial-sum growth
  // already at j = 0), matching the L^2 \ H_C example of the theory.
  Eigen::VectorXcd coeff_half(K);
  for (Eigen::Index k = 0; k < K; ++k) coeff_half[k] = std::sqrt(basis.eigenvalues[k]);
  const Eigen::VectorXcd f_half = basis.eigenfunctions.leftCols(K) * coeff_half;
  CHECK(hcj_norm(f_half, basis, 0).divergent);
  CHECK(degree(f_half, basis) == -1);

  // sum lambda_k phi_k lies in H_C but outside R(T) = H_{C_1}: degree 0.
  Eigen::VectorXcd coeff_one(K);
  for (Eigen::Index k = 0; k < K; ++k) coeff_one[k] = basis.eigenvalues[k];
  const Eigen::VectorXcd f_one = basis.eigenfunctions.leftCols(K) * coeff_one;
  CHECK_FALSE(hcj_norm(f_one, basis, 0).divergent);
  CHECK(hcj_norm(f_one, basis, 1).divergent);
  CHECK(degree(f_one, basis) == 0);

  // Applying T lifts the degree by two rungs on the ladder.
  const Eigen::VectorXcd lifted = apply_T(bridge_cov(g), f_one, g);
  CHECK(degree(lifted, basis) == 2);
}
