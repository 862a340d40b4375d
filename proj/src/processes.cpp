#include "afd/processes.hpp"

#include <cmath>

namespace afd {

double NormalSampler::uniform01() {
  // 53 random bits mapped to (0, 1]; never zero, so log() below is safe.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1p-53;
}

double NormalSampler::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = two_pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

double brownian_bridge_cov(double s, double t, double horizon) {
  if (s < 0.0 || s > horizon || t < 0.0 || t > horizon)
    throw std::invalid_argument("brownian_bridge_cov: arguments outside [0, horizon]");
  return std::min(s, t) - s * t / horizon;
}

Eigen::VectorXd simulate_bridge(const BridgeSpec& spec) {
  if (spec.m < 2) throw std::invalid_argument("simulate_bridge: need at least two nodes");
  const Grid grid = trapezoid_grid(spec.m, 0.0, spec.horizon);
  NormalSampler normal(spec.seed);

  Eigen::VectorXd walk(spec.m);
  walk[0] = 0.0;
  for (Eigen::Index i = 1; i < spec.m; ++i) {
    const double dt = grid.nodes[i] - grid.nodes[i - 1];
    walk[i] = walk[i - 1] + std::sqrt(dt) * normal.next();
  }
  const double terminal = walk[spec.m - 1];
  Eigen::VectorXd bridge(spec.m);
  for (Eigen::Index i = 0; i < spec.m; ++i)
    bridge[i] = walk[i] - (grid.nodes[i] / spec.horizon) * terminal;
  bridge[0] = 0.0;
  bridge[spec.m - 1] = 0.0;
  return bridge;
}

SamplePathEnsemble simulate_bridge_ensemble(Eigen::Index m, Eigen::Index n_paths,
                                            std::uint64_t seed) {
  if (n_paths < 1) throw std::invalid_argument("simulate_bridge_ensemble: need paths");
  SamplePathEnsemble ens;
  ens.grid = trapezoid_grid(m, 0.0, two_pi);
  ens.paths.resize(n_paths, m);
  for (Eigen::Index p = 0; p < n_paths; ++p)
    ens.paths.row(p) = simulate_bridge({m, seed + static_cast<std::uint64_t>(p), two_pi})
                           .cast<Complex>()
                           .transpose();
  ens.mean = Eigen::VectorXcd::Zero(m);  // the bridge is centered by construction
  return ens;
}

double bridge_eigenvalue(int j) {
  if (j < 1) throw std::invalid_argument("bridge_eigenvalue: j must be >= 1");
  return 4.0 / (static_cast<double>(j) * static_cast<double>(j));
}

Eigen::VectorXd bridge_eigenfunction(int j, const Grid& grid) {
  if (j < 1) throw std::invalid_argument("bridge_eigenfunction: j must be >= 1");
  const double scale = 1.0 / std::sqrt(std::numbers::pi);
  Eigen::VectorXd phi(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    phi[i] = scale * std::sin(0.5 * j * grid.nodes[i]);
  return phi;
}

}  // namespace afd
