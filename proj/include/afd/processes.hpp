#pragma once

#include <cstdint>
#include <random>

#include "afd/stochastic.hpp"

namespace afd {

/// Standard normal draws from a seeded mt19937_64 via the Box-Muller
/// transform on raw 53-bit uniforms, so streams replay bit-exactly.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double next();

 private:
  double uniform01();  // in (0, 1]

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct BridgeSpec {
  Eigen::Index m = 126;
  std::uint64_t seed = 0;
  double horizon = two_pi;
};

/// Brownian bridge covariance min(s,t) - s t / horizon on [0, horizon].
double brownian_bridge_cov(double s, double t, double horizon = two_pi);

/// One bridge path: a cumulative Gaussian random walk pinned at both ends.
Eigen::VectorXd simulate_bridge(const BridgeSpec& spec);

/// Ensemble of bridges with per-path seeds seed, seed+1, ...
SamplePathEnsemble simulate_bridge_ensemble(Eigen::Index m, Eigen::Index n_paths,
                                            std::uint64_t seed);

/// Closed-form eigenvalue 4/j^2 of the bridge covariance operator on [0, 2pi].
double bridge_eigenvalue(int j);

/// Closed-form eigenfunction sin(j t / 2) / sqrt(pi) sampled on the grid.
Eigen::VectorXd bridge_eigenfunction(int j, const Grid& grid);

}  // namespace afd
