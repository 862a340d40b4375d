#include "afd/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace afd {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw config_error("bad numeric value for " + key + ": " + v);
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw config_error("bad integer value for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error("bad boolean value for " + key + ": " + v);
}

std::string family_key(KernelFamily f) {
  return f == KernelFamily::PoissonCircle ? "poisson" : "szego";
}

}  // namespace

void ExperimentConfig::apply_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw config_error("expected key=value, got: " + kv);
  const std::string key = trim(kv.substr(0, eq));
  const std::string value = trim(kv.substr(eq + 1));

  if (key == "methods" || key == "method") {
    methods.clear();
    for (const std::string& name : split(value, ',')) methods.push_back(method_from_name(name));
    if (methods.empty()) throw config_error("methods list is empty");
  } else if (key == "family") {
    if (value == "poisson") family = KernelFamily::PoissonCircle;
    else if (value == "szego") family = KernelFamily::Szego;
    else throw config_error("unknown family key: " + value);
  } else if (key == "m") {
    m = parse_int(key, value);
  } else if (key == "n_values" || key == "n") {
    n_values.clear();
    for (const std::string& item : split(value, ','))
      n_values.push_back(parse_int(key, item));
  } else if (key == "num_paths") {
    num_paths = parse_int(key, value);
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "covariance") {
    if (value != "bridge" && value != "empirical")
      throw config_error("unknown covariance key: " + value);
    covariance = value;
  } else if (key == "paths_csv") {
    paths_csv = value;
  } else if (key == "output_dir") {
    output_dir = value;
  } else if (key == "search.radial_points") {
    search.radial_points = static_cast<int>(parse_int(key, value));
  } else if (key == "search.angular_points") {
    search.angular_points = static_cast<int>(parse_int(key, value));
  } else if (key == "search.refine_levels") {
    search.refine_levels = static_cast<int>(parse_int(key, value));
  } else if (key == "search.rho") {
    search.rho = parse_double(key, value);
    if (search.rho <= 0.0 || search.rho > 1.0) throw config_error("search.rho must be in (0, 1]");
  } else if (key == "search.r_max") {
    search.r_max = parse_double(key, value);
    if (search.r_max <= 0.0 || search.r_max >= 1.0) throw config_error("search.r_max must be in (0, 1)");
  } else if (key == "search.mult_escalation") {
    search.mult_escalation = parse_bool(key, value);
  } else if (key == "snb.max_sweeps") {
    snb.max_sweeps = static_cast<int>(parse_int(key, value));
  } else if (key == "snb.tol") {
    snb.tol = parse_double(key, value);
  } else {
    throw config_error("unknown config key: " + key);
  }
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    cfg.apply_override(t);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::snapshot() const {
  std::string out;
  out += "methods=";
  for (std::size_t i = 0; i < methods.size(); ++i)
    out += (i ? "," : "") + method_name(methods[i]);
  out += "\nfamily=" + family_key(family);
  out += "\nm=" + std::to_string(m);
  out += "\nn_values=";
  for (std::size_t i = 0; i < n_values.size(); ++i)
    out += (i ? "," : "") + std::to_string(n_values[i]);
  out += "\nnum_paths=" + std::to_string(num_paths);
  out += "\nseed=" + std::to_string(seed);
  out += "\ncovariance=" + covariance;
  if (!paths_csv.empty()) out += "\npaths_csv=" + paths_csv;
  out += "\noutput_dir=" + output_dir.string();
  out += "\nsearch.radial_points=" + std::to_string(search.radial_points);
  out += "\nsearch.angular_points=" + std::to_string(search.angular_points);
  out += "\nsearch.refine_levels=" + std::to_string(search.refine_levels);
  out += "\nsearch.rho=" + format_double(search.rho);
  out += "\nsearch.r_max=" + format_double(search.r_max);
  out += std::string("\nsearch.mult_escalation=") + (search.mult_escalation ? "true" : "false");
  out += "\nsnb.max_sweeps=" + std::to_string(snb.max_sweeps);
  out += "\nsnb.tol=" + format_double(snb.tol);
  out += "\n";
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string emit_table(std::vector<ErrorRow> rows) {
  if (rows.empty()) throw std::invalid_argument("emit_table: no rows");
  std::sort(rows.begin(), rows.end(), [](const ErrorRow& a, const ErrorRow& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.n != b.n) return a.n < b.n;
    return a.seed < b.seed;
  });
  std::string out = "method,n,relative_error,energy_captured,seed\n";
  for (const ErrorRow& r : rows) {
    out += r.method + "," + std::to_string(r.n) + "," + format_double(r.relative_error) + "," +
           format_double(r.energy_captured) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

void write_ensemble_csv(const SamplePathEnsemble& ensemble, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("write_ensemble_csv: cannot open " + path.string());
  for (Eigen::Index p = 0; p < ensemble.count(); ++p) {
    for (Eigen::Index i = 0; i < ensemble.paths.cols(); ++i)
      out << (i ? "," : "") << format_double(ensemble.paths(p, i).real());
    out << "\n";
  }
  if (!out) throw io_error("write_ensemble_csv: write failed for " + path.string());
}

SamplePathEnsemble read_ensemble_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("read_ensemble_csv: cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const std::string& item : split(line, ','))
      row.push_back(parse_double("ensemble csv", item));
    if (!rows.empty() && row.size() != rows.front().size())
      throw io_error("read_ensemble_csv: ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error("read_ensemble_csv: no paths in " + path.string());

  SamplePathEnsemble ens;
  ens.grid = trapezoid_grid(static_cast<Eigen::Index>(rows.front().size()), 0.0, two_pi);
  ens.paths.resize(static_cast<Eigen::Index>(rows.size()), ens.grid.size());
  for (std::size_t p = 0; p < rows.size(); ++p)
    for (std::size_t i = 0; i < rows[p].size(); ++i)
      ens.paths(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = rows[p][i];
  ens.mean = empirical_mean(ens);
  return ens;
}

Eigen::VectorXcd dirichlet_lift(const Decomposition& dec, const std::vector<LiftPoint>& points,
                                Eigen::Index path_index) {
  if (dec.system.family != KernelFamily::PoissonCircle)
    throw std::invalid_argument("dirichlet_lift: decomposition must use the Poisson dictionary");
  if (dec.system.gs_upper.rows() != dec.terms())
    throw std::invalid_argument("dirichlet_lift: decomposition lacks Gram-Schmidt factors");
  if (path_index < 0 || path_index >= dec.paths())
    throw std::invalid_argument("dirichlet_lift: path index out of range");
  for (const LiftPoint& pt : points)
    if (pt.r < 0.0 || pt.r >= 1.0)
      throw std::invalid_argument("dirichlet_lift: interior points require r in [0, 1)");

  const Eigen::Index n = dec.terms();
  const Eigen::VectorXcd c = dec.coefficients.row(path_index).head(n).transpose();
  const Eigen::VectorXcd raw =
      dec.system.gs_upper.topLeftCorner(n, n).triangularView<Eigen::Upper>().solve(c);

  Eigen::VectorXcd out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t p = 0; p < points.size(); ++p) {
    const LiftPoint& pt = points[p];
    Complex u{0.0, 0.0};
    // Poisson integral of the mean against the interior kernel.
    if (dec.mean.size() > 0 && dec.mean.cwiseAbs().maxCoeff() > 0.0) {
      const KernelDescriptor probe{KernelFamily::PoissonCircle, std::polar(pt.r, pt.theta), 1};
      const Eigen::VectorXcd pk = poisson_eval(probe, dec.grid);
      for (Eigen::Index i = 0; i < dec.grid.size(); ++i)
        u += dec.grid.weights[i] * dec.mean[i] * pk[i];
    }
    for (Eigen::Index k = 0; k < n; ++k)
      u += raw[k] * lifted_poisson_value(dec.system.params.descriptor(k, KernelFamily::PoissonCircle),
                                         pt.r, pt.theta);
    out[static_cast<Eigen::Index>(p)] = u;
  }
  return out;
}

namespace {

double lebesgue_energy_factor(InnerProductMode mode) {
  return mode == InnerProductMode::NormalizedArc ? two_pi : 1.0;
}

Eigen::VectorXd real_reconstruction(const Decomposition& dec, Eigen::Index path, Eigen::Index n,
                                    bool analytic) {
  const Eigen::VectorXcd s = dec.reconstruct(path, n);
  return analytic ? (2.0 * s.real()).eval() : s.real().eval();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (const char* env = std::getenv("AFD_OUTPUT_DIR")) cfg.output_dir = env;

  if (cfg.methods.empty()) throw config_error("methods list is empty");
  if (cfg.n_values.empty()) throw config_error("n_values list is empty");
  if (cfg.m < 2) throw config_error("m must be at least 2");
  for (Eigen::Index n : cfg.n_values)
    if (n < 1 || n > cfg.m) throw config_error("n_values entries must lie in [1, m]");

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw io_error("cannot create output directory " + cfg.output_dir.string());

  // Ensemble: simulated bridge paths (seeds seed, seed+1, ...) or an ingested CSV.
  SamplePathEnsemble ens;
  if (!cfg.paths_csv.empty()) {
    ens = read_ensemble_csv(cfg.paths_csv);
    if (ens.grid.size() != cfg.m)
      throw config_error("paths_csv column count does not match m");
    if (cfg.covariance == "bridge") ens.mean = Eigen::VectorXcd::Zero(cfg.m);
  } else {
    ens = simulate_bridge_ensemble(cfg.m, cfg.num_paths, cfg.seed);
  }
  const Grid grid = ens.grid;

  CovarianceKernel C = cfg.covariance == "bridge"
                           ? covariance_from_function(
                                 [](double s, double t) { return brownian_bridge_cov(s, t); }, grid)
                           : covariance_from_ensemble(ens);

  const Eigen::Index n_max = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
  const bool analytic_family = cfg.family == KernelFamily::Szego;

  // Analytic-signal embedding for the Hardy-space dictionary on real data.
  std::optional<AnalyticProjector> projector;
  std::optional<CovarianceKernel> C_plus;
  std::optional<SamplePathEnsemble> ens_plus;
  const auto need_analytic = [&]() {
    if (!projector) {
      projector.emplace(grid);
      C_plus = projector->project(C);
      ens_plus = projector->project(ens);
    }
  };

  const auto path_seed = [&](Eigen::Index p) {
    return cfg.paths_csv.empty() ? cfg.seed + static_cast<std::uint64_t>(p) : cfg.seed;
  };

  ExperimentResult result;
  const std::string snapshot = cfg.snapshot();

  const auto write_text = [&](const std::filesystem::path& name, const std::string& text) {
    const std::filesystem::path full = cfg.output_dir / name;
    std::ofstream out(full);
    if (!out) throw io_error("cannot open output file " + full.string());
    out << text;
    if (!out) throw io_error("write failed for " + full.string());
    result.files.push_back(full);
  };

  const auto write_recon = [&](const std::string& method, const Eigen::VectorXd& truth,
                               const Eigen::VectorXd& approx) {
    std::string text = "t,truth,approx\n";
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      text += format_double(grid.nodes[i]) + "," + format_double(truth[i]) + "," +
              format_double(approx[i]) + "\n";
    write_text("recon_" + method + ".csv", text);
  };

  const auto save_dec = [&](const Decomposition& dec, const std::string& stem) {
    const std::filesystem::path full = cfg.output_dir / (stem + ".json");
    save_archive(dec, snapshot, full);
    result.files.push_back(full);
  };

  const Eigen::VectorXd truth0 = ens.paths.row(0).real().transpose();

  for (Method method : cfg.methods) {
    const std::string name = method_name(method);
    switch (method) {
      case Method::KL: {
        const KLBasis basis = kl_basis(C);
        for (Eigen::Index n : cfg.n_values) {
          const double energy = basis.eigenvalues.head(std::min(n, basis.eigenvalues.size())).sum();
          for (Eigen::Index p = 0; p < ens.count(); ++p) {
            const Eigen::VectorXcd truth = ens.paths.row(p).transpose();
            const Eigen::VectorXcd approx = kl_partial_sum(truth, basis, n, ens.mean);
            result.rows.push_back({name, n, rel_error(truth, approx, grid), energy, path_seed(p)});
          }
        }
        Decomposition dec;
        dec.method = Method::KL;
        dec.mode = InnerProductMode::Lebesgue;
        dec.grid = grid;
        dec.mean = ens.mean;
        dec.seed = cfg.seed;
        const Eigen::Index keep = std::min<Eigen::Index>(n_max, basis.eigenvalues.size());
        dec.system.functions = basis.eigenfunctions.leftCols(keep);
        dec.system.family = cfg.family;
        dec.system.mode = InnerProductMode::Lebesgue;
        SamplePathEnsemble centered = ens;
        dec.coefficients = project_paths(centered, dec.system);
        dec.captured = basis.eigenvalues.head(keep);
        dec.residual_energy = Eigen::VectorXd::Zero(keep + 1);
        save_dec(dec, "archive_" + name);
        write_recon(name, truth0,
                    kl_partial_sum(ens.paths.row(0).transpose(), basis, n_max, ens.mean).real());
        break;
      }
      case Method::SPOAFD:
      case Method::SAFD: {
        Decomposition dec;
        bool analytic = false;
        if (method == Method::SAFD || (method == Method::SPOAFD && analytic_family)) {
          need_analytic();
          analytic = true;
          dec = method == Method::SAFD
                    ? safd_decompose(*C_plus, *ens_plus, n_max, cfg.search)
                    : spoafd_decompose(*C_plus, *ens_plus, KernelFamily::Szego, n_max, cfg.search,
                                       InnerProductMode::Lebesgue);
        } else {
          dec = spoafd_decompose(C, ens, cfg.family, n_max, cfg.search, InnerProductMode::Lebesgue);
        }
        dec.seed = cfg.seed;
        const double factor = lebesgue_energy_factor(dec.mode);
        for (Eigen::Index n : cfg.n_values) {
          const Eigen::Index nn = std::min(n, dec.terms());
          const double energy = factor * dec.captured.head(nn).sum();
          for (Eigen::Index p = 0; p < ens.count(); ++p) {
            const Eigen::VectorXd truth = ens.paths.row(p).real().transpose();
            const Eigen::VectorXd approx = real_reconstruction(dec, p, nn, analytic);
            result.rows.push_back({name, n, rel_error(truth, approx, grid), energy, path_seed(p)});
          }
        }
        save_dec(dec, "archive_" + name);
        write_recon(name, truth0, real_reconstruction(dec, 0, std::min(n_max, dec.terms()), analytic));
        break;
      }
      case Method::SnB: {
        const bool analytic = analytic_family;
        const CovarianceKernel* Cn = &C;
        const SamplePathEnsemble* en = &ens;
        if (analytic) {
          need_analytic();
          Cn = &*C_plus;
          en = &*ens_plus;
        }
        for (Eigen::Index n : cfg.n_values) {
          const Decomposition init = spoafd_decompose(*Cn, *en, cfg.family, n, cfg.search,
                                                      InnerProductMode::Lebesgue);
          Decomposition dec = snb_optimize(*Cn, n, init.system.params, cfg.search, cfg.snb,
                                           cfg.family, InnerProductMode::Lebesgue, en);
          dec.seed = cfg.seed;
          const double energy = dec.captured.sum();
          for (Eigen::Index p = 0; p < ens.count(); ++p) {
            const Eigen::VectorXd truth = ens.paths.row(p).real().transpose();
            const Eigen::VectorXd approx = real_reconstruction(dec, p, dec.terms(), analytic);
            result.rows.push_back({name, n, rel_error(truth, approx, grid), energy, path_seed(p)});
          }
          save_dec(dec, "archive_" + name + "_n" + std::to_string(n));
          if (n == n_max)
            write_recon(name, truth0, real_reconstruction(dec, 0, dec.terms(), analytic));
        }
        break;
      }
      case Method::POAFD:
      case Method::AFD:
      case Method::NBest: {
        const bool analytic = analytic_family || method == Method::AFD;
        if (analytic) need_analytic();
        const InnerProductMode mode =
            analytic ? InnerProductMode::NormalizedArc : InnerProductMode::Lebesgue;
        const double factor = lebesgue_energy_factor(mode);
        for (Eigen::Index p = 0; p < ens.count(); ++p) {
          const Eigen::VectorXd truth = ens.paths.row(p).real().transpose();
          const Eigen::VectorXcd f = analytic ? ens_plus->paths.row(p).transpose()
                                              : ens.paths.row(p).transpose();
          if (method == Method::NBest) {
            for (Eigen::Index n : cfg.n_values) {
              Decomposition dec = nbest_cyclic(f, n, cfg.search, cfg.snb, grid,
                                               analytic ? KernelFamily::Szego : cfg.family, mode);
              dec.seed = path_seed(p);
              const Eigen::VectorXd approx = real_reconstruction(dec, 0, dec.terms(), analytic);
              result.rows.push_back({name, n, rel_error(truth, approx, grid),
                                     factor * dec.captured.sum(), path_seed(p)});
              if (p == 0) {
                save_dec(dec, "archive_" + name + "_n" + std::to_string(n));
                if (n == n_max) write_recon(name, truth0, approx);
              }
            }
          } else {
            Decomposition dec =
                method == Method::AFD
                    ? afd_decompose(f, n_max, cfg.search, grid)
                    : poafd_decompose(f, n_max, cfg.search, grid,
                                      analytic ? KernelFamily::Szego : cfg.family, mode);
            dec.seed = path_seed(p);
            for (Eigen::Index n : cfg.n_values) {
              const Eigen::Index nn = std::min(n, dec.terms());
              const Eigen::VectorXd approx = real_reconstruction(dec, 0, nn, analytic);
              result.rows.push_back({name, n, rel_error(truth, approx, grid),
                                     factor * dec.captured.head(nn).sum(), path_seed(p)});
            }
            if (p == 0) {
              save_dec(dec, "archive_" + name);
              write_recon(name, truth0,
                          real_reconstruction(dec, 0, std::min(n_max, dec.terms()), analytic));
            }
          }
        }
        break;
      }
    }
  }

  write_text("error_table.csv", emit_table(result.rows));
  return result;
}

}  // namespace afd
