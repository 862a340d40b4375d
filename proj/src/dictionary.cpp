#include "afd/dictionary.hpp"

#include <cmath>

namespace afd {

namespace {

constexpr double kPoissonFdStep = 1e-5;

void require_in_disc(Complex q, const char* who) {
  if (std::abs(q) >= 1.0)
    throw std::invalid_argument(std::string(who) + ": parameter must lie strictly inside the unit disc");
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

double poisson_value(double r, double dt) {
  const double d = 1.0 - 2.0 * r * std::cos(dt) + r * r;
  return (1.0 - r * r) / (two_pi * d);
}

// (order-1)-fold central difference in the parameter radius, step kPoissonFdStep.
// The angle dt is measured from the kernel's own direction; `scale` multiplies
// the evaluation radius (1 on the boundary, rho < 1 for harmonic lifting).
double poisson_multiple(double r, int order, double dt, double scale) {
  const int k = order - 1;
  if (k == 0) return poisson_value(r * scale, dt);
  const double h = kPoissonFdStep;
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    const double rj = r + (k - 2 * j) * h;
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sign * binomial(k, j) * poisson_value(rj * scale, dt);
  }
  return acc / std::pow(2.0 * h, k);
}

}  // namespace

Eigen::VectorXcd szego_eval(const KernelDescriptor& desc, const Grid& grid) {
  if (desc.family != KernelFamily::Szego)
    throw std::invalid_argument("szego_eval: descriptor family is not Szego");
  if (desc.order < 1) throw std::invalid_argument("szego_eval: order must be >= 1");
  require_in_disc(desc.parameter, "szego_eval");

  const int l = desc.order;
  const Complex abar = std::conj(desc.parameter);
  const double lead = factorial(l - 1);
  Eigen::VectorXcd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Complex z = std::polar(1.0, grid.nodes[i]);
    out[i] = lead * std::pow(z, l - 1) / std::pow(1.0 - abar * z, l);
  }
  return out;
}

Eigen::VectorXcd poisson_eval(const KernelDescriptor& desc, const Grid& grid) {
  if (desc.family != KernelFamily::PoissonCircle)
    throw std::invalid_argument("poisson_eval: descriptor family is not PoissonCircle");
  if (desc.order < 1) throw std::invalid_argument("poisson_eval: order must be >= 1");
  require_in_disc(desc.parameter, "poisson_eval");

  const double r = std::abs(desc.parameter);
  const double theta = std::arg(desc.parameter);
  Eigen::VectorXcd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    out[i] = poisson_multiple(r, desc.order, grid.nodes[i] - theta, 1.0);
  return out;
}

Eigen::VectorXcd kernel_eval(const KernelDescriptor& desc, const Grid& grid) {
  return desc.family == KernelFamily::Szego ? szego_eval(desc, grid) : poisson_eval(desc, grid);
}

Eigen::MatrixXcd kernel_matrix(const std::vector<Complex>& points, KernelFamily family,
                               const Grid& grid) {
  Eigen::MatrixXcd K(grid.size(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t q = 0; q < points.size(); ++q)
    K.col(static_cast<Eigen::Index>(q)) = kernel_eval({family, points[q], 1}, grid);
  return K;
}

Eigen::VectorXcd normalized_element(const KernelDescriptor& desc, const Grid& grid,
                                    InnerProductMode mode) {
  Eigen::VectorXcd k = kernel_eval(desc, grid);
  const double n = norm_w(k, grid, mode);
  if (!(n > 1e-300)) throw numerical_error("normalized_element: kernel has zero norm");
  return k / n;
}

double lifted_poisson_value(const KernelDescriptor& desc, double rho, double theta) {
  if (desc.family != KernelFamily::PoissonCircle)
    throw std::invalid_argument("lifted_poisson_value: descriptor family is not PoissonCircle");
  if (rho >= 1.0 || rho < 0.0)
    throw std::invalid_argument("lifted_poisson_value: evaluation radius must lie in [0, 1)");
  const double r = std::abs(desc.parameter);
  const double theta_x = std::arg(desc.parameter);
  return poisson_multiple(r, desc.order, theta - theta_x, rho);
}

OrthonormalSystem tm_system(const ParameterTuple& params, const Grid& grid) {
  const Eigen::Index n = params.size();
  const Eigen::Index m = grid.size();
  OrthonormalSystem sys;
  sys.functions.resize(m, n);
  sys.params = params;
  sys.family = KernelFamily::Szego;
  sys.mode = InnerProductMode::NormalizedArc;

  Eigen::VectorXcd blaschke = Eigen::VectorXcd::Ones(m);
  Eigen::VectorXcd z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = std::polar(1.0, grid.nodes[i]);

  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex a = params.values[static_cast<std::size_t>(k)];
    require_in_disc(a, "tm_system");
    const double scale = std::sqrt(1.0 - std::norm(a));
    for (Eigen::Index i = 0; i < m; ++i)
      sys.functions(i, k) = blaschke[i] * scale / (1.0 - std::conj(a) * z[i]);
    for (Eigen::Index i = 0; i < m; ++i)
      blaschke[i] *= (z[i] - a) / (1.0 - std::conj(a) * z[i]);
  }
  sys.gram_defect = n > 0 ? gram_defect_of(sys.functions, grid, sys.mode) : 0.0;
  return sys;
}

Eigen::VectorXcd tm_candidate(const std::vector<Complex>& prior, Complex a, const Grid& grid) {
  require_in_disc(a, "tm_candidate");
  const Eigen::Index m = grid.size();
  Eigen::VectorXcd out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Complex z = std::polar(1.0, grid.nodes[i]);
    Complex b{1.0, 0.0};
    for (Complex p : prior) b *= (z - p) / (1.0 - std::conj(p) * z);
    out[i] = b / (1.0 - std::conj(a) * z);
  }
  const double n = norm_w(out, grid, InnerProductMode::NormalizedArc);
  if (!(n > 1e-300)) throw numerical_error("tm_candidate: zero norm");
  return out / n;
}

double gram_defect_of(const Eigen::MatrixXcd& functions, const Grid& grid, InnerProductMode mode) {
  const Eigen::Index n = functions.cols();
  const double scale = mode == InnerProductMode::NormalizedArc ? 1.0 / two_pi : 1.0;
  Eigen::MatrixXcd weighted = grid.weights.asDiagonal() * functions;
  Eigen::MatrixXcd gram = scale * (weighted.adjoint() * functions);
  gram -= Eigen::MatrixXcd::Identity(n, n);
  return gram.cwiseAbs().maxCoeff();
}

std::vector<double> bvc_probe(const Eigen::VectorXcd& f, KernelFamily family,
                              const std::vector<double>& radii, const Grid& grid,
                              InnerProductMode mode, int angular_points) {
  std::vector<double> out;
  out.reserve(radii.size());
  for (double r : radii) {
    double best = 0.0;
    const int count = r == 0.0 ? 1 : angular_points;
    for (int j = 0; j < count; ++j) {
      const double phi = two_pi * j / angular_points;
      KernelDescriptor desc{family, std::polar(r, phi), 1};
      const Complex c = inner_product(f, normalized_element(desc, grid, mode), grid, mode);
      best = std::max(best, std::abs(c));
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace afd
