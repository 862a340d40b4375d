#include "afd/numerics.hpp"

namespace afd {

Grid trapezoid_grid(Eigen::Index m, double a, double b) {
  if (m < 2) throw std::invalid_argument("trapezoid_grid: need at least two nodes");
  if (!(a < b)) throw std::invalid_argument("trapezoid_grid: interval must satisfy a < b");
  Grid g;
  g.nodes = Eigen::VectorXd::LinSpaced(m, a, b);
  const double h = (b - a) / static_cast<double>(m - 1);
  g.weights = Eigen::VectorXd::Constant(m, h);
  g.weights[0] = 0.5 * h;
  g.weights[m - 1] = 0.5 * h;
  return g;
}

}  // namespace afd
