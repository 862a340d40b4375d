// Acceptance suite: end-to-end checks of the decomposition pipeline against
// closed-form spectra, published error envelopes, and structural bounds.
// Each case prints one PASS/FAIL line.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <iostream>
#include <optional>
#include <random>

#include "afd/experiment.hpp"

using namespace afd;

namespace {

constexpr auto kLeb = InnerProductMode::Lebesgue;
constexpr std::uint64_t kBaseSeed = 1;
constexpr Eigen::Index kSeeds = 20;

class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {
    timer_ = std::chrono::steady_clock::now();
  }
  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - timer_).count();
    std::cout << "criterion " << id_ << " [" << title_ << "]: " << (ok_ ? "PASS" : "FAIL")
              << " (" << secs << " s)" << std::endl;
  }
  void expect(bool cond, const std::string& what) {
    CHECK_MESSAGE(cond, "criterion ", id_, ": ", what);
    ok_ = ok_ && cond;
  }
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - timer_).count();
  }

 private:
  int id_;
  std::string title_;
  bool ok_ = true;
  std::chrono::steady_clock::time_point timer_;
};

CovarianceKernel bridge_cov(const Grid& g) {
  return covariance_from_function([](double s, double t) { return brownian_bridge_cov(s, t); }, g);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Squared-norm error ratio: the scale the reference tables report (their
// full-rank KL entry is machine-epsilon squared, which identifies the scale).
double sq_error(const Eigen::VectorXd& truth, const Eigen::VectorXd& approx, const Grid& g) {
  const double e = rel_error(truth, approx, g);
  return e * e;
}

// Shared expensive artifacts, built once and reused across criteria.
struct Artifacts {
  // 126-node bridge world (criteria 1, 2, 8)
  Grid g126 = trapezoid_grid(126, 0.0, two_pi);
  CovarianceKernel C126 = bridge_cov(g126);
  KLBasis basis126 = kl_basis(C126);
  SamplePathEnsemble ens126 = simulate_bridge_ensemble(126, kSeeds, kBaseSeed);
  std::optional<Decomposition> spoafd126;

  // 1024-node analytic-signal world (criteria 3, 8)
  std::optional<Grid> g1024;
  std::optional<CovarianceKernel> C1024p;
  std::optional<SamplePathEnsemble> ens1024, ens1024p;
  std::optional<Decomposition> safd1024;

  // 512-node analytic-signal world (criteria 4, 8)
  std::optional<Grid> g512;
  std::optional<CovarianceKernel> C512p;
  std::optional<SamplePathEnsemble> ens512p;
  std::optional<Decomposition> spoafd512, snb512_15, snb512_30;

  const Decomposition& spoafd_126(SearchConfig cfg) {
    if (!spoafd126) spoafd126 = spoafd_decompose(C126, ens126, KernelFamily::PoissonCircle, 100, cfg, kLeb);
    return *spoafd126;
  }

  void build_1024(const SearchConfig& cfg) {
    if (safd1024) return;
    g1024 = trapezoid_grid(1024, 0.0, two_pi);
    ens1024 = simulate_bridge_ensemble(1024, kSeeds, kBaseSeed);
    const AnalyticProjector proj(*g1024);
    C1024p = proj.project(bridge_cov(*g1024));
    ens1024p = proj.project(*ens1024);
    safd1024 = safd_decompose(*C1024p, *ens1024p, 40, cfg);
  }

  void build_512(const SearchConfig& cfg, const SweepConfig& sweep) {
    if (snb512_30) return;
    g512 = trapezoid_grid(512, 0.0, two_pi);
    const AnalyticProjector proj(*g512);
    C512p = proj.project(bridge_cov(*g512));
    SamplePathEnsemble ens = simulate_bridge_ensemble(512, 4, kBaseSeed);
    ens512p = proj.project(ens);
    spoafd512 = spoafd_decompose(*C512p, *ens512p, KernelFamily::Szego, 30, cfg, kLeb);
    ParameterTuple init15, init30 = spoafd512->system.params;
    for (Eigen::Index k = 0; k < 15; ++k) init15.push(init30.values[static_cast<std::size_t>(k)]);
    snb512_15 = snb_optimize(*C512p, 15, init15, cfg, sweep, KernelFamily::Szego, kLeb,
                             &*ens512p);
    snb512_30 = snb_optimize(*C512p, 30, init30, cfg, sweep, KernelFamily::Szego, kLeb,
                             &*ens512p);
  }

  static Artifacts& get() {
    static Artifacts a;
    return a;
  }
};

}  // namespace

TEST_CASE("criterion 1: full-rank KL reconstruction at the grid rank") {
  Criterion crit(1, "KL full-rank reconstruction");
  Artifacts& art = Artifacts::get();

  double worst = 0.0;
  for (Eigen::Index p = 0; p < kSeeds; ++p) {
    const Eigen::VectorXcd path = art.ens126.paths.row(p).transpose();
    const Eigen::VectorXcd recon = kl_partial_sum(path, art.basis126, 125, art.ens126.mean);
    worst = std::max(worst, rel_error(path, recon, art.g126));
  }
  crit.expect(worst < 1e-8, "full-rank relative error below 1e-8 for every seed");
  crit.expect(crit.elapsed() < 5.0, "runtime under 5 s");
}

TEST_CASE("criterion 2: SPOAFD on the Poisson dictionary tracks the published envelope") {
  Criterion crit(2, "SPOAFD vs KL at 126 nodes");
  Artifacts& art = Artifacts::get();
  SearchConfig cfg;  // defaults: 40 x 128, two refinement levels

  const Decomposition& dec = art.spoafd_126(cfg);
  REQUIRE(dec.terms() == 100);

  const std::vector<Eigen::Index> ns{25, 50, 100};
  const std::vector<double> paper{0.0298, 0.0113, 0.0026};  // squared-scale table row
  for (std::size_t idx = 0; idx < ns.size(); ++idx) {
    const Eigen::Index n = ns[idx];
    std::vector<double> sp_err, ratio;
    for (Eigen::Index p = 0; p < kSeeds; ++p) {
      const Eigen::VectorXd truth = art.ens126.paths.row(p).real().transpose();
      const Eigen::VectorXd sp = dec.reconstruct(p, n).real();
      const Eigen::VectorXcd klr =
          kl_partial_sum(art.ens126.paths.row(p).transpose(), art.basis126, n, art.ens126.mean);
      const double se = sq_error(truth, sp, art.g126);
      const double ke = sq_error(truth, klr.real(), art.g126);
      sp_err.push_back(se);
      ratio.push_back(se / ke);
    }
    const double med = median(sp_err);
    const double med_ratio = median(ratio);
    crit.expect(med >= paper[idx] / 3.0 && med <= paper[idx] * 3.0,
                "median error at n=" + std::to_string(n) + " within 3x of the table value (got " +
                    format_double(med) + ")");
    crit.expect(med_ratio >= 1.0 / 3.0 && med_ratio <= 3.0,
                "median same-seed ratio to KL within 3x at n=" + std::to_string(n) + " (got " +
                    format_double(med_ratio) + ")");
  }
  crit.expect(crit.elapsed() < 120.0, "runtime under 2 min");
}

TEST_CASE("criterion 3: SAFD error trend at 1024 nodes") {
  Criterion crit(3, "SAFD trend and final error");
  Artifacts& art = Artifacts::get();
  SearchConfig cfg;
  art.build_1024(cfg);
  const Decomposition& dec = *art.safd1024;
  REQUIRE(dec.terms() == 40);

  int good = 0;
  for (Eigen::Index p = 0; p < kSeeds; ++p) {
    const Eigen::VectorXd truth = art.ens1024->paths.row(p).real().transpose();
    std::vector<double> errs;
    for (Eigen::Index n : {10, 20, 30, 40})
      errs.push_back(sq_error(truth, (2.0 * dec.reconstruct(p, n).real()).eval(), *art.g1024));
    const bool decreasing = errs[0] > errs[1] && errs[1] > errs[2] && errs[2] > errs[3];
    if (decreasing && errs[3] < 0.02) ++good;
  }
  crit.expect(good >= 18, "strict decrease and final error below 0.02 for at least 18/20 seeds (got " +
                              std::to_string(good) + ")");
  crit.expect(crit.elapsed() < 300.0, "runtime under 5 min");
}

TEST_CASE("criterion 4: stochastic n-best dominates SPOAFD under the KL ceiling") {
  Criterion crit(4, "SnB energy dominance");
  Artifacts& art = Artifacts::get();
  SearchConfig cfg;
  const SweepConfig sweep{50, 1e-10};
  art.build_512(cfg, sweep);

  const KLBasis basis = kl_basis(*art.C512p);
  const double trace = art.C512p->trace_quadrature();

  for (Eigen::Index n : {15, 30}) {
    const Decomposition& snb = n == 15 ? *art.snb512_15 : *art.snb512_30;
    const double a_snb = snb.captured.sum();
    const double a_greedy = art.spoafd512->captured.head(n).sum();
    crit.expect(a_snb >= a_greedy - 1e-12,
                "A(SnB) >= A(SPOAFD) at n=" + std::to_string(n));
    crit.expect(a_snb <= basis.eigenvalues.head(n).sum() + 1e-8 * trace,
                "A(SnB) bounded by the top-n eigenvalue sum at n=" + std::to_string(n));
  }
  crit.expect(crit.elapsed() < 600.0, "runtime under 10 min");
}

TEST_CASE("criterion 5: Nystrom eigenvalues against the closed-form spectrum") {
  Criterion crit(5, "eigenvalue oracle at 2048 nodes");
  const Grid g = trapezoid_grid(2048, 0.0, two_pi);
  const KLBasis basis = kl_basis(bridge_cov(g));

  double worst = 0.0;
  for (int j = 1; j <= 10; ++j)
    worst = std::max(worst,
                     std::abs(basis.eigenvalues[j - 1] - bridge_eigenvalue(j)) / bridge_eigenvalue(j));
  crit.expect(worst < 0.005, "first ten eigenvalues within 0.5% of 4/j^2 (worst " +
                                 format_double(worst) + ")");

  const double trace_exact = 2.0 * std::numbers::pi * std::numbers::pi / 3.0;
  const double trace = basis.eigenvalues.sum();
  crit.expect(std::abs(trace - trace_exact) / trace_exact < 1e-6,
              "eigenvalue sum within 1e-6 of 2 pi^2 / 3");
}

TEST_CASE("criterion 6: greedy convergence-rate bound on dictionary combinations") {
  Criterion crit(6, "rate bound sqrt(n) ||g_n|| <= M");
  const Grid g = trapezoid_grid(512, 0.0, two_pi);
  SearchConfig cfg;
  cfg.rho = 1.0;
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> ur(0.05, 0.8), uth(0.0, two_pi), uc(0.2, 1.0);

  bool all_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(g.size());
    double budget = 0.0;
    for (int l = 0; l < 10; ++l) {
      const Complex b = std::polar(ur(rng), uth(rng));
      const Complex c = std::polar(uc(rng), uth(rng));
      f += c * normalized_element({KernelFamily::Szego, b, 1}, g, InnerProductMode::NormalizedArc);
      budget += std::abs(c);
    }
    const Decomposition dec =
        poafd_decompose(f, 10, cfg, g, KernelFamily::Szego, InnerProductMode::NormalizedArc);
    for (Eigen::Index n = 1; n <= dec.terms(); ++n) {
      const double lhs = std::sqrt(double(n)) * std::sqrt(dec.residual_energy[n]);
      if (lhs > budget * (1.0 + 1e-6)) all_ok = false;
    }
  }
  crit.expect(all_ok, "sqrt(n) ||g_n|| <= sum|c| (1 + 1e-6) for 50 random targets, n <= 10");
  crit.expect(crit.elapsed() < 60.0, "runtime under 1 min");
}

TEST_CASE("criterion 7: TM orthonormality and the AFD/POAFD objective identity") {
  Criterion crit(7, "TM system at 4096 nodes");
  const Grid g = trapezoid_grid(4096, 0.0, two_pi);
  const auto kArc = InnerProductMode::NormalizedArc;

  std::mt19937_64 rng(31415);
  std::uniform_real_distribution<double> ur(0.05, 0.9), uth(0.0, two_pi);
  std::vector<Complex> params;
  for (int k = 0; k < 10; ++k) params.push_back(std::polar(ur(rng), uth(rng)));

  const OrthonormalSystem tm = tm_system(ParameterTuple::from_values(params), g);
  crit.expect(tm.gram_defect < 1e-6,
              "Gram defect below 1e-6 (got " + format_double(tm.gram_defect) + ")");

  // Same instance: target in the TM span, shared 3-term prior sequence.
  std::normal_distribution<double> normal;
  Eigen::VectorXcd coeff(tm.size());
  for (Eigen::Index k = 0; k < tm.size(); ++k) coeff[k] = Complex(normal(rng), normal(rng));
  const Eigen::VectorXcd f = tm.functions * coeff;
  const std::vector<Complex> prior(params.begin(), params.begin() + 3);

  Eigen::VectorXcd f_k = f;
  for (const Complex a : prior) f_k = reduced_remainder(f_k, a, g);
  OrthonormalSystem sys;
  sys.functions.resize(g.size(), 0);
  sys.mode = kArc;
  sys.family = KernelFamily::Szego;
  for (const Complex a : prior) {
    const GsExtension ext = gs_extend(sys, {KernelFamily::Szego, a, 1}, g);
    const Eigen::Index k = sys.size();
    sys.functions.conservativeResize(Eigen::NoChange, k + 1);
    sys.functions.col(k) = ext.function;
    sys.params.push(a);
  }
  Eigen::VectorXcd g_n = f;
  for (Eigen::Index k = 0; k < sys.size(); ++k)
    g_n -= inner_product(f, sys.functions.col(k), g, kArc) * sys.functions.col(k);

  SearchConfig probe;
  probe.radial_points = 8;
  probe.angular_points = 16;
  probe.r_max = 0.9;
  double worst = 0.0;
  for (const Complex q : polar_candidates(probe)) {
    const double afd_obj = std::abs(inner_product(
        f_k, normalized_element({KernelFamily::Szego, q, 1}, g, kArc), g, kArc));
    const GsExtension ext = gs_extend(sys, {KernelFamily::Szego, q, 1}, g);
    const double poafd_obj = std::abs(inner_product(g_n, ext.function, g, kArc));
    worst = std::max(worst, std::abs(afd_obj - poafd_obj) / (1.0 + std::max(afd_obj, poafd_obj)));
  }
  crit.expect(worst < 1e-8, "objective agreement within 1e-8 (worst " + format_double(worst) + ")");
}

TEST_CASE("criterion 8: KL optimality gap over random and produced systems") {
  Criterion crit(8, "optimality gap non-negative");
  Artifacts& art = Artifacts::get();
  const double trace126 = art.C126.trace_quadrature();

  // 100 random weighted-orthonormal systems.
  std::mt19937_64 rng(55);
  std::normal_distribution<double> normal;
  const Eigen::Index n = 6;
  bool all_nonneg = true;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXcd psi(art.g126.size(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::VectorXcd v(art.g126.size());
      for (Eigen::Index i = 0; i < art.g126.size(); ++i) v[i] = Complex(normal(rng), normal(rng));
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index j = 0; j < k; ++j)
          v -= inner_product(v, psi.col(j), art.g126, kLeb) * psi.col(j);
      psi.col(k) = v / norm_w(v, art.g126, kLeb);
    }
    if (kl_optimality_check(art.C126, psi, art.basis126, n) < -1e-8 * trace126) all_nonneg = false;
  }
  crit.expect(all_nonneg, "gap non-negative for 100 random orthonormal systems");

  // A rotated top-n eigenspace closes the gap.
  Eigen::MatrixXcd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) R(i, j) = Complex(normal(rng), normal(rng));
  const Eigen::MatrixXcd Q = Eigen::HouseholderQR<Eigen::MatrixXcd>(R).householderQ();
  const double rotated_gap = std::abs(
      kl_optimality_check(art.C126, art.basis126.eigenfunctions.leftCols(n) * Q, art.basis126, n));
  crit.expect(rotated_gap <= 1e-8, "rotated eigenspace gap at most 1e-8 (got " +
                                        format_double(rotated_gap) + ")");

  // Every AFD-family system produced by criteria 2-4, against its covariance.
  const auto system_gap = [](const CovarianceKernel& C, const KLBasis& basis,
                             const Decomposition& dec) {
    Eigen::MatrixXcd psi = dec.system.functions;
    if (dec.mode == InnerProductMode::NormalizedArc) psi /= std::sqrt(two_pi);
    return kl_optimality_check(C, psi, basis, psi.cols());
  };
  REQUIRE(art.spoafd126.has_value());
  REQUIRE(art.safd1024.has_value());
  REQUIRE(art.snb512_15.has_value());

  crit.expect(system_gap(art.C126, art.basis126, *art.spoafd126) >= -1e-8 * trace126,
              "SPOAFD system gap non-negative");

  const KLBasis basis1024 = kl_basis(*art.C1024p);
  crit.expect(system_gap(*art.C1024p, basis1024, *art.safd1024) >=
                  -1e-8 * art.C1024p->trace_quadrature(),
              "SAFD system gap non-negative");

  const KLBasis basis512 = kl_basis(*art.C512p);
  const double trace512 = art.C512p->trace_quadrature();
  crit.expect(system_gap(*art.C512p, basis512, *art.snb512_15) >= -1e-8 * trace512,
              "SnB(15) system gap non-negative");
  crit.expect(system_gap(*art.C512p, basis512, *art.snb512_30) >= -1e-8 * trace512,
              "SnB(30) system gap non-negative");
}

TEST_CASE("criterion 9: Mercer truncation and the spectral shift identity") {
  Criterion crit(9, "Mercer and H_{C_j} identities");
  const Grid g = trapezoid_grid(256, 0.0, two_pi);
  const CovarianceKernel C = bridge_cov(g);
  const KLBasis basis = kl_basis(C);

  const double mercer_rel =
      (mercer_reconstruct(basis, 50) - C.matrix).norm() / C.matrix.norm();
  crit.expect(mercer_rel < 0.05, "Mercer relative Frobenius error below 5% at n=50 (got " +
                                     format_double(mercer_rel) + ")");

  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  bool identities = true;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(basis.rank);
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(60, basis.rank); ++k)
      coeff[k] = Complex(normal(rng), normal(rng)) * basis.eigenvalues[k];
    const Eigen::VectorXcd F = basis.eigenfunctions.leftCols(basis.rank) * coeff;
    const Eigen::VectorXcd TF = apply_T(C, F, g);
    for (int j : {0, 1}) {
      const double lhs = hcj_norm(TF, basis, j + 2).value;
      const double rhs = hcj_norm(F, basis, j).value;
      if (std::abs(lhs - rhs) > 1e-8 * std::max(1.0, rhs)) identities = false;
    }
  }
  crit.expect(identities, "||T F||_{H_{C_{j+2}}} = ||F||_{H_{C_j}} within 1e-8 for j in {0,1}");
}

TEST_CASE("criterion 10: Dirichlet lift is harmonic and honors the mean value property") {
  Criterion crit(10, "Poisson lift into the disc");
  const Grid g = trapezoid_grid(512, 0.0, two_pi);
  const CovarianceKernel C = bridge_cov(g);
  SamplePathEnsemble ens = simulate_bridge_ensemble(512, 2, kBaseSeed);
  SearchConfig cfg;
  cfg.r_max = 0.85;
  const Decomposition dec = spoafd_decompose(C, ens, KernelFamily::PoissonCircle, 8, cfg, kLeb);

  const auto lift_at = [&](double x, double y) {
    const double r = std::hypot(x, y);
    const double th = std::atan2(y, x);
    return std::real(dirichlet_lift(dec, {{r, th}})[0]);
  };

  // Observed order of the five-point Laplacian residual under h-refinement.
  const auto laplacian = [&](double x0, double y0, double h) {
    return std::abs((lift_at(x0 + h, y0) + lift_at(x0 - h, y0) + lift_at(x0, y0 + h) +
                     lift_at(x0, y0 - h) - 4.0 * lift_at(x0, y0)) /
                    (h * h));
  };
  double min_order = 10.0;
  for (const auto& [x0, y0] : std::vector<std::pair<double, double>>{
           {0.3, -0.2}, {-0.45, 0.1}, {0.05, 0.5}}) {
    const double r1 = laplacian(x0, y0, 0.04);
    const double r2 = laplacian(x0, y0, 0.02);
    min_order = std::min(min_order, std::log2(r1 / r2));
  }
  crit.expect(min_order >= 1.8, "observed Laplacian order at least 1.8 (got " +
                                    format_double(min_order) + ")");

  // Center value equals the quadrature boundary mean of the expansion.
  const double center = lift_at(0.0, 0.0);
  const Eigen::VectorXcd recon = dec.reconstruct(0, dec.terms());
  const double qmean =
      std::real((g.weights.cast<Complex>().asDiagonal() * recon).sum()) / two_pi;
  crit.expect(std::abs(center - qmean) <= 1e-8 * std::max(1.0, std::abs(qmean)),
              "center value equals the boundary mean within 1e-8");
}
