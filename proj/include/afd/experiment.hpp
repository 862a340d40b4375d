#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "afd/archive.hpp"
#include "afd/kl.hpp"
#include "afd/processes.hpp"

namespace afd {

/// Flat key=value experiment configuration with dotted section keys
/// (see README for the full schema).
struct ExperimentConfig {
  std::vector<Method> methods{Method::KL};
  KernelFamily family = KernelFamily::PoissonCircle;
  Eigen::Index m = 126;
  std::vector<Eigen::Index> n_values{25};
  Eigen::Index num_paths = 1;
  std::uint64_t seed = 1;
  std::string covariance = "bridge";  // bridge | empirical
  std::string paths_csv;              // optional: ingest the ensemble instead of simulating
  std::filesystem::path output_dir = "out";
  SearchConfig search;
  SweepConfig snb;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  void apply_override(const std::string& key_equals_value);

  /// Canonical key=value rendering, stored in archives.
  std::string snapshot() const;
};

struct ErrorRow {
  std::string method;
  Eigen::Index n = 0;
  double relative_error = 0.0;
  double energy_captured = 0.0;
  std::uint64_t seed = 0;
};

/// Shortest decimal that round-trips the double exactly.
std::string format_double(double v);

/// Deterministic CSV: header method,n,relative_error,energy_captured,seed,
/// rows sorted by (method, n, seed).
std::string emit_table(std::vector<ErrorRow> rows);

struct ExperimentResult {
  std::vector<ErrorRow> rows;
  std::vector<std::filesystem::path> files;
};

/// Simulate (or ingest) the ensemble, run every requested method at every n,
/// and write the error table, per-method reconstruction CSV, and archives.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Real-valued ensemble as CSV, one row per path, no header.
void write_ensemble_csv(const SamplePathEnsemble& ensemble, const std::filesystem::path& path);
SamplePathEnsemble read_ensemble_csv(const std::filesystem::path& path);

struct LiftPoint {
  double r = 0.0;
  double theta = 0.0;
};

/// Evaluate the harmonic extension of a Poisson-dictionary decomposition at
/// interior points via the kernel semigroup; coefficients are converted back
/// to raw kernels through the stored Gram-Schmidt triangle.
Eigen::VectorXcd dirichlet_lift(const Decomposition& dec, const std::vector<LiftPoint>& points,
                                Eigen::Index path_index = 0);

}  // namespace afd
