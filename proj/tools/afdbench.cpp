#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afd/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

afd::ExperimentConfig load_config(const std::string& config_path,
                                  const std::vector<std::string>& overrides) {
  afd::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = afd::ExperimentConfig::from_file(config_path);
  for (const std::string& kv : overrides) cfg.apply_override(kv);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AFD-family and Karhunen-Loeve decomposition benchmarks"};
  app.require_subcommand(1);

  // simulate ---------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "generate Brownian-bridge sample paths");
  Eigen::Index sim_m = 126;
  Eigen::Index sim_paths = 1;
  std::uint64_t sim_seed = 1;
  std::string sim_out = "out";
  simulate->add_option("--m", sim_m, "grid size on [0, 2pi]");
  simulate->add_option("--paths", sim_paths, "number of paths");
  simulate->add_option("--seed", sim_seed, "base seed; path p uses seed+p");
  simulate->add_option("--out", sim_out, "output directory");

  // decompose / compare ------------------------------------------------------
  std::string cfg_path;
  std::vector<std::string> overrides;
  auto* decompose = app.add_subcommand("decompose", "run one decomposition method");
  decompose->add_option("--config", cfg_path, "key=value config file");
  decompose->add_option("--set", overrides, "config override key=value (repeatable)");

  std::string cmp_cfg_path;
  std::vector<std::string> cmp_overrides;
  auto* compare = app.add_subcommand("compare", "run several methods and emit the error table");
  compare->add_option("--config", cmp_cfg_path, "key=value config file");
  compare->add_option("--set", cmp_overrides, "config override key=value (repeatable)");

  // dirichlet ----------------------------------------------------------------
  auto* dirichlet = app.add_subcommand("dirichlet", "lift a Poisson decomposition to the disc");
  std::string lift_archive;
  int lift_nr = 8;
  int lift_ntheta = 16;
  double lift_rmax = 0.9;
  Eigen::Index lift_path = 0;
  std::string lift_out = "out";
  dirichlet->add_option("--archive", lift_archive, "decomposition archive (JSON)")->required();
  dirichlet->add_option("--nr", lift_nr, "radial samples of the polar patch");
  dirichlet->add_option("--ntheta", lift_ntheta, "angular samples of the polar patch");
  dirichlet->add_option("--rmax", lift_rmax, "outer radius of the patch (< 1)");
  dirichlet->add_option("--path", lift_path, "which path's coefficients to lift");
  dirichlet->add_option("--out", lift_out, "output directory");

  // show -----------------------------------------------------------------
  auto* show = app.add_subcommand("show", "print an archive summary");
  std::string show_archive;
  show->add_option("--archive", show_archive, "decomposition archive (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (const char* env = std::getenv("AFD_OUTPUT_DIR")) sim_out = env;
      std::filesystem::create_directories(sim_out);
      const afd::SamplePathEnsemble ens = afd::simulate_bridge_ensemble(sim_m, sim_paths, sim_seed);
      const std::filesystem::path file = std::filesystem::path(sim_out) / "paths.csv";
      afd::write_ensemble_csv(ens, file);
      std::cout << "wrote " << file.string() << " (" << sim_paths << " paths, m=" << sim_m << ")\n";
      return kExitOk;
    }
    if (decompose->parsed() || compare->parsed()) {
      const afd::ExperimentConfig cfg = decompose->parsed()
                                            ? load_config(cfg_path, overrides)
                                            : load_config(cmp_cfg_path, cmp_overrides);
      if (decompose->parsed() && cfg.methods.size() != 1)
        throw afd::config_error("decompose expects exactly one method; use compare for several");
      const afd::ExperimentResult result = afd::run_experiment(cfg);
      for (const auto& f : result.files) std::cout << "wrote " << f.string() << "\n";
      return kExitOk;
    }
    if (dirichlet->parsed()) {
      if (lift_rmax <= 0.0 || lift_rmax >= 1.0)
        throw afd::config_error("--rmax must lie in (0, 1)");
      if (const char* env = std::getenv("AFD_OUTPUT_DIR")) lift_out = env;
      std::filesystem::create_directories(lift_out);
      const afd::DecompositionArchive archive = afd::load_archive(lift_archive);
      std::vector<afd::LiftPoint> points;
      for (int i = 0; i < lift_nr; ++i)
        for (int j = 0; j < lift_ntheta; ++j)
          points.push_back({lift_rmax * (i + 1) / lift_nr, afd::two_pi * j / lift_ntheta});
      const Eigen::VectorXcd u = afd::dirichlet_lift(archive.decomposition, points, lift_path);
      const std::filesystem::path file = std::filesystem::path(lift_out) / "lift.csv";
      std::ofstream out(file);
      if (!out) throw afd::io_error("cannot open " + file.string());
      out << "r,theta,u_re,u_im\n";
      for (std::size_t p = 0; p < points.size(); ++p)
        out << afd::format_double(points[p].r) << "," << afd::format_double(points[p].theta) << ","
            << afd::format_double(u[static_cast<Eigen::Index>(p)].real()) << ","
            << afd::format_double(u[static_cast<Eigen::Index>(p)].imag()) << "\n";
      std::cout << "wrote " << file.string() << "\n";
      return kExitOk;
    }
    if (show->parsed()) {
      const afd::DecompositionArchive archive = afd::load_archive(show_archive);
      const afd::Decomposition& dec = archive.decomposition;
      std::cout << "method: " << afd::method_name(dec.method) << "\n"
                << "terms:  " << dec.terms() << "\n"
                << "paths:  " << dec.paths() << "\n"
                << "grid:   m=" << dec.grid.size() << " on [" << dec.grid.nodes[0] << ", "
                << dec.grid.nodes[dec.grid.size() - 1] << "]\n"
                << "seed:   " << dec.seed << "\n";
      if (dec.residual_energy.size() > 0)
        std::cout << "residual energy: " << dec.residual_energy[0] << " -> "
                  << dec.residual_energy[dec.residual_energy.size() - 1] << "\n";
      std::cout << "config snapshot:\n" << archive.config_snapshot;
      return kExitOk;
    }
  } catch (const afd::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const afd::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const afd::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
