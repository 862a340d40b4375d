#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "afd/dictionary.hpp"

namespace afd {

/// Parameter-search controls: coarse polar grid, local refinement levels,
/// weak-selection factor rho, radius cap, and multiple-kernel escalation.
struct SearchConfig {
  int radial_points = 40;
  int angular_points = 128;
  int refine_levels = 2;
  double rho = 1.0;
  double r_max = 0.98;
  bool mult_escalation = true;
};

/// Cyclic-sweep controls for the n-best optimizers.
struct SweepConfig {
  int max_sweeps = 50;
  double tol = 1e-10;  // relative energy gain that stops the sweeps
};

enum class Method { AFD, POAFD, KL, SAFD, SPOAFD, SnB, NBest };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// One decomposition run: the orthonormal system, per-path coefficients,
/// and per-step energy bookkeeping.
///
/// `coefficients` holds one row per path. `residual_energy[k]` is the
/// (ensemble-mean) squared residual norm after k terms, so entry 0 is the
/// total energy of the centered input. `captured[k]` is the energy the
/// (k+1)-th term extracts: |c_k|^2 for deterministic methods, the covariance
/// objective for the stochastic ones.
struct Decomposition {
  Method method = Method::POAFD;
  InnerProductMode mode = InnerProductMode::NormalizedArc;
  Grid grid;
  OrthonormalSystem system;
  Eigen::MatrixXcd coefficients;
  Eigen::VectorXd residual_energy;
  Eigen::VectorXd captured;
  Eigen::VectorXcd mean;
  std::uint64_t seed = 0;

  Eigen::Index terms() const { return system.size(); }
  Eigen::Index paths() const { return coefficients.rows(); }

  /// mean + sum of the first n terms for the given path.
  Eigen::VectorXcd reconstruct(Eigen::Index path, Eigen::Index n) const;
};

inline constexpr double kGsDependenceTol = 1e-12;  // defect below this rejects a candidate
inline constexpr double kExhaustionTol = 1e-14;    // objective below this stops a greedy run

/// Generalized backward shift: remove the e_a component of f and divide by
/// the Blaschke factor (z - a)/(1 - conj(a) z) on the boundary. Hardy mode.
Eigen::VectorXcd reduced_remainder(const Eigen::VectorXcd& f_prev, Complex a, const Grid& grid);

struct SelectionOutcome {
  Complex point{0.0, 0.0};
  double objective = 0.0;
};

/// Coarse polar candidate points implied by the config: radii 0..r_max
/// inclusive, uniform angles, ordered by (radius, angle).
std::vector<Complex> polar_candidates(const SearchConfig& cfg);

/// Maximize a disc objective: argmax over the coarse grid (first point within
/// rho of the grid max when rho < 1), then `refine_levels` local 5x5 polar
/// patches with halved spacing around the incumbent. `evaluate` maps points
/// to objective values; -inf marks rejected candidates.
SelectionOutcome maximize_over_disc(
    const Eigen::VectorXd& coarse_values, const std::vector<Complex>& coarse_points,
    const std::function<Eigen::VectorXd(const std::vector<Complex>&)>& evaluate,
    const SearchConfig& cfg);

/// Snap a selected point onto a coinciding prior parameter (within one
/// refined grid cell) and escalate the kernel order accordingly.
KernelDescriptor resolve_multiplicity(Complex point, const ParameterTuple& prior,
                                      KernelFamily family, const SearchConfig& cfg);

/// Radius of one refined search cell around p: the coincidence tolerance for
/// multiplicity snapping and for banning rejected candidates.
double search_cell_tolerance(Complex p, const SearchConfig& cfg);

/// Maximal selection for Core AFD: argmax over the search grid of
/// |<f_k, e_a>| with unit-norm Szego elements. Hardy (NormalizedArc) mode.
SelectionOutcome afd_select(const Eigen::VectorXcd& f_k, const SearchConfig& cfg, const Grid& grid);

struct GsExtension {
  Eigen::VectorXcd function;     // unit norm in the system mode when accepted
  double defect = 0.0;           // residual energy over kernel energy
  Eigen::VectorXcd projections;  // <K, E_k> of the raw kernel on the system
  double r_diag = 0.0;           // residual norm, the diagonal GS factor
  bool accepted(double delta = kGsDependenceTol) const { return defect >= delta; }
};

/// Orthogonalize a candidate kernel against the system (modified Gram-Schmidt
/// with one reorthogonalization pass).
GsExtension gs_extend(const OrthonormalSystem& system, const KernelDescriptor& candidate,
                      const Grid& grid, double delta_gs = kGsDependenceTol);

struct PoafdSelection {
  KernelDescriptor descriptor;
  double objective = 0.0;
};

/// Pre-orthogonal maximal selection: maximize |<g_n, E_n^q>| where E_n^q is
/// the Gram-Schmidt extension of the candidate kernel at q.
PoafdSelection poafd_select(const Eigen::VectorXcd& g_n, const OrthonormalSystem& system,
                            const SearchConfig& cfg, const Grid& grid, KernelFamily family);

/// n-term POAFD of a single function over the chosen dictionary.
Decomposition poafd_decompose(const Eigen::VectorXcd& f, Eigen::Index n, const SearchConfig& cfg,
                              const Grid& grid, KernelFamily family,
                              InnerProductMode mode = InnerProductMode::NormalizedArc);

/// Core AFD via reduced remainders and the closed-form TM system.
Decomposition afd_decompose(const Eigen::VectorXcd& f, Eigen::Index n, const SearchConfig& cfg,
                            const Grid& grid);

/// Deterministic n-best approximation: POAFD initialization followed by
/// cyclic coordinate sweeps over the parameter tuple.
Decomposition nbest_cyclic(const Eigen::VectorXcd& f, Eigen::Index n, const SearchConfig& cfg,
                           const SweepConfig& sweep, const Grid& grid, KernelFamily family,
                           InnerProductMode mode = InnerProductMode::NormalizedArc);

/// Sum of absolute coefficients: the M upper bound of the rate estimate.
double convergence_budget(const std::vector<Complex>& coefficients);

}  // namespace afd
