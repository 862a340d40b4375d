#include "afd/afd_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace afd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double mode_scale(InnerProductMode mode) {
  return mode == InnerProductMode::NormalizedArc ? 1.0 / two_pi : 1.0;
}

Eigen::VectorXcd weighted(const Eigen::VectorXcd& v, const Grid& grid) {
  return v.cwiseProduct(grid.weights.cast<Complex>());
}

double final_radial_spacing(const SearchConfig& cfg) {
  const double dr = cfg.r_max / std::max(1, cfg.radial_points - 1);
  return dr / std::pow(2.0, cfg.refine_levels);
}

double final_angular_spacing(const SearchConfig& cfg) {
  const double dth = two_pi / std::max(1, cfg.angular_points);
  return dth / std::pow(2.0, cfg.refine_levels);
}

// Shared batched evaluation of the pre-orthogonal objective
// |<g, K_q - proj>| / sqrt(||K_q||^2 - ||proj||^2) for raw kernel columns.
struct DetObjective {
  const Grid& grid;
  InnerProductMode mode;
  KernelFamily family;
  const OrthonormalSystem* system;  // may have zero columns
  const Eigen::VectorXcd* residual;

  Eigen::VectorXd from_kernels(const Eigen::MatrixXcd& K) const {
    const double s = mode_scale(mode);
    const Eigen::VectorXcd wg = weighted(*residual, grid);
    const Eigen::VectorXcd b = s * (K.adjoint() * wg);  // <g, K_q>
    Eigen::MatrixXcd WK = grid.weights.cast<Complex>().asDiagonal() * K;
    Eigen::VectorXd knorm2 = s * (K.conjugate().cwiseProduct(WK)).colwise().sum().real();
    Eigen::VectorXd proj2 = Eigen::VectorXd::Zero(K.cols());
    if (system->size() > 0) {
      Eigen::MatrixXcd G = s * (system->functions.adjoint() * WK);  // <K_q, E_k>
      proj2 = G.cwiseAbs2().colwise().sum();
    }
    Eigen::VectorXd out(K.cols());
    for (Eigen::Index q = 0; q < K.cols(); ++q) {
      const double den = knorm2[q] - proj2[q];
      if (!(knorm2[q] > 1e-300) || den < kGsDependenceTol * knorm2[q])
        out[q] = kNegInf;
      else
        out[q] = std::abs(b[q]) / std::sqrt(den);
    }
    return out;
  }

  Eigen::VectorXd operator()(const std::vector<Complex>& points) const {
    return from_kernels(kernel_matrix(points, family, grid));
  }
};

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::AFD: return "afd";
    case Method::POAFD: return "poafd";
    case Method::KL: return "kl";
    case Method::SAFD: return "safd";
    case Method::SPOAFD: return "spoafd";
    case Method::SnB: return "snb";
    case Method::NBest: return "nbest";
  }
  throw std::invalid_argument("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "afd") return Method::AFD;
  if (name == "poafd") return Method::POAFD;
  if (name == "kl") return Method::KL;
  if (name == "safd") return Method::SAFD;
  if (name == "spoafd") return Method::SPOAFD;
  if (name == "snb") return Method::SnB;
  if (name == "nbest") return Method::NBest;
  throw config_error("unknown method key: " + name);
}

Eigen::VectorXcd Decomposition::reconstruct(Eigen::Index path, Eigen::Index n) const {
  if (path < 0 || path >= paths()) throw std::invalid_argument("reconstruct: path out of range");
  n = std::min<Eigen::Index>(n, terms());
  Eigen::VectorXcd out = mean.size() > 0 ? mean : Eigen::VectorXcd::Zero(grid.size()).eval();
  if (n > 0)
    out += system.functions.leftCols(n) * coefficients.row(path).head(n).transpose();
  return out;
}

Eigen::VectorXcd reduced_remainder(const Eigen::VectorXcd& f_prev, Complex a, const Grid& grid) {
  if (std::abs(a) >= 1.0)
    throw std::invalid_argument("reduced_remainder: parameter must lie inside the unit disc");
  const Eigen::VectorXcd e =
      normalized_element({KernelFamily::Szego, a, 1}, grid, InnerProductMode::NormalizedArc);
  const Complex c = inner_product(f_prev, e, grid, InnerProductMode::NormalizedArc);
  Eigen::VectorXcd out = f_prev - c * e;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Complex z = std::polar(1.0, grid.nodes[i]);
    out[i] *= (1.0 - std::conj(a) * z) / (z - a);
  }
  return out;
}

std::vector<Complex> polar_candidates(const SearchConfig& cfg) {
  if (cfg.radial_points < 1 || cfg.angular_points < 1)
    throw std::invalid_argument("polar_candidates: grid counts must be positive");
  std::vector<Complex> pts;
  pts.reserve(static_cast<std::size_t>(cfg.radial_points) * cfg.angular_points);
  for (int i = 0; i < cfg.radial_points; ++i) {
    const double r = cfg.r_max * i / std::max(1, cfg.radial_points - 1);
    if (r == 0.0) {
      pts.emplace_back(0.0, 0.0);
      continue;
    }
    for (int j = 0; j < cfg.angular_points; ++j)
      pts.push_back(std::polar(r, two_pi * j / cfg.angular_points));
  }
  return pts;
}

SelectionOutcome maximize_over_disc(
    const Eigen::VectorXd& coarse_values, const std::vector<Complex>& coarse_points,
    const std::function<Eigen::VectorXd(const std::vector<Complex>&)>& evaluate,
    const SearchConfig& cfg) {
  if (coarse_values.size() != static_cast<Eigen::Index>(coarse_points.size()))
    throw std::invalid_argument("maximize_over_disc: values do not match points");

  const double grid_max = coarse_values.maxCoeff();
  if (grid_max == kNegInf)
    throw numerical_error("maximize_over_disc: every candidate was rejected as dependent");

  Eigen::Index pick = 0;
  if (cfg.rho < 1.0) {
    const double threshold = cfg.rho * grid_max;
    while (pick + 1 < coarse_values.size() && coarse_values[pick] < threshold) ++pick;
  } else {
    for (Eigen::Index q = 0; q < coarse_values.size(); ++q)
      if (coarse_values[q] > coarse_values[pick]) pick = q;
  }

  SelectionOutcome best{coarse_points[static_cast<std::size_t>(pick)], coarse_values[pick]};

  double dr = cfg.r_max / std::max(1, cfg.radial_points - 1);
  double dth = two_pi / std::max(1, cfg.angular_points);
  for (int level = 0; level < cfg.refine_levels; ++level) {
    dr *= 0.5;
    dth *= 0.5;
    const double r0 = std::abs(best.point);
    const double th0 = std::arg(best.point);
    std::vector<Complex> patch;
    for (int i = -2; i <= 2; ++i) {
      const double r = std::clamp(r0 + i * dr, 0.0, cfg.r_max);
      for (int j = -2; j <= 2; ++j) patch.push_back(std::polar(r, th0 + j * dth));
    }
    const Eigen::VectorXd vals = evaluate(patch);
    for (Eigen::Index q = 0; q < vals.size(); ++q)
      if (vals[q] > best.objective) best = {patch[static_cast<std::size_t>(q)], vals[q]};
  }
  return best;
}

double search_cell_tolerance(Complex p, const SearchConfig& cfg) {
  return std::max(final_radial_spacing(cfg), std::abs(p) * final_angular_spacing(cfg)) * 1.000001;
}

KernelDescriptor resolve_multiplicity(Complex point, const ParameterTuple& prior,
                                      KernelFamily family, const SearchConfig& cfg) {
  if (!cfg.mult_escalation) return {family, point, 1};
  Complex snapped = point;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const Complex& p : prior.values) {
    const double dist = std::abs(point - p);
    if (dist <= search_cell_tolerance(p, cfg) && dist < best_dist) {
      best_dist = dist;
      snapped = p;
    }
  }
  int order = 1;
  for (const Complex& p : prior.values)
    if (p == snapped && best_dist < std::numeric_limits<double>::infinity()) ++order;
  return {family, snapped, order};
}

SelectionOutcome afd_select(const Eigen::VectorXcd& f_k, const SearchConfig& cfg,
                            const Grid& grid) {
  OrthonormalSystem empty;
  empty.mode = InnerProductMode::NormalizedArc;
  empty.functions.resize(grid.size(), 0);
  DetObjective objective{grid, InnerProductMode::NormalizedArc, KernelFamily::Szego, &empty, &f_k};
  const std::vector<Complex> points = polar_candidates(cfg);
  return maximize_over_disc(objective(points), points, objective, cfg);
}

GsExtension gs_extend(const OrthonormalSystem& system, const KernelDescriptor& candidate,
                      const Grid& grid, double delta_gs) {
  const Eigen::VectorXcd k = kernel_eval(candidate, grid);
  const double knorm2 = norm_sq(k, grid, system.mode);
  if (!(knorm2 > 1e-300)) throw numerical_error("gs_extend: candidate kernel has zero norm");

  GsExtension ext;
  ext.projections = Eigen::VectorXcd::Zero(system.size());
  Eigen::VectorXcd r = k;
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < system.size(); ++j) {
      const Complex c = inner_product(r, system.functions.col(j), grid, system.mode);
      ext.projections[j] += c;
      r -= c * system.functions.col(j);
    }
  }
  ext.r_diag = norm_w(r, grid, system.mode);
  ext.defect = ext.r_diag * ext.r_diag / knorm2;
  if (ext.accepted(delta_gs)) ext.function = r / ext.r_diag;
  return ext;
}

PoafdSelection poafd_select(const Eigen::VectorXcd& g_n, const OrthonormalSystem& system,
                            const SearchConfig& cfg, const Grid& grid, KernelFamily family) {
  DetObjective objective{grid, system.mode, family, &system, &g_n};
  const std::vector<Complex> points = polar_candidates(cfg);
  const SelectionOutcome out = maximize_over_disc(objective(points), points, objective, cfg);
  return {resolve_multiplicity(out.point, system.params, family, cfg), out.objective};
}

namespace {

void append_gs_column(OrthonormalSystem& system, const GsExtension& ext, Complex parameter) {
  const Eigen::Index n = system.size();
  system.functions.conservativeResize(Eigen::NoChange, n + 1);
  system.functions.col(n) = ext.function;
  system.params.push(parameter);
  system.gs_upper.conservativeResize(n + 1, n + 1);
  if (n > 0) system.gs_upper.row(n).head(n).setZero();
  system.gs_upper.col(n).head(n) = ext.projections;
  system.gs_upper(n, n) = ext.r_diag;
}

}  // namespace

Decomposition poafd_decompose(const Eigen::VectorXcd& f, Eigen::Index n, const SearchConfig& cfg,
                              const Grid& grid, KernelFamily family, InnerProductMode mode) {
  if (n < 1) throw std::invalid_argument("poafd_decompose: need n >= 1");
  detail::require_same_grid(f.size(), grid, "poafd_decompose");

  const double s = mode_scale(mode);
  const std::vector<Complex> points = polar_candidates(cfg);
  const Eigen::MatrixXcd K = kernel_matrix(points, family, grid);
  const Eigen::MatrixXcd WK = grid.weights.cast<Complex>().asDiagonal() * K;
  const Eigen::VectorXd knorm2 = s * (K.conjugate().cwiseProduct(WK)).colwise().sum().real();

  Decomposition dec;
  dec.method = Method::POAFD;
  dec.mode = mode;
  dec.grid = grid;
  dec.system.functions.resize(grid.size(), 0);
  dec.system.family = family;
  dec.system.mode = mode;
  dec.mean = Eigen::VectorXcd::Zero(grid.size());

  Eigen::VectorXcd g = f;
  std::vector<Complex> coeffs;
  std::vector<double> residuals{norm_sq(f, grid, mode)};
  std::vector<double> captured;
  Eigen::VectorXd proj2 = Eigen::VectorXd::Zero(K.cols());

  DetObjective patch_objective{grid, mode, family, &dec.system, &g};

  for (Eigen::Index step = 0; step < n; ++step) {
    // Coarse objective from cached kernels and incrementally grown projections.
    const Eigen::VectorXcd b = s * (K.adjoint() * weighted(g, grid));
    Eigen::VectorXd coarse(K.cols());
    for (Eigen::Index q = 0; q < K.cols(); ++q) {
      const double den = knorm2[q] - proj2[q];
      coarse[q] = (!(knorm2[q] > 1e-300) || den < kGsDependenceTol * knorm2[q])
                      ? kNegInf
                      : std::abs(b[q]) / std::sqrt(den);
    }

    // Rejected (numerically dependent) candidates are skipped and the
    // next-best grid region is taken.
    std::vector<Complex> banned;
    const auto ban = [&](const std::vector<Complex>& pts, Eigen::VectorXd vals) {
      for (Eigen::Index q = 0; q < vals.size(); ++q)
        for (const Complex& bp : banned)
          if (std::abs(pts[static_cast<std::size_t>(q)] - bp) <= search_cell_tolerance(bp, cfg))
            vals[q] = kNegInf;
      return vals;
    };
    bool placed = false;
    bool exhausted = false;
    for (int attempt = 0; attempt < 8 && !placed && !exhausted; ++attempt) {
      const auto patched = [&](const std::vector<Complex>& pts) {
        return ban(pts, patch_objective(pts));
      };
      const SelectionOutcome out = maximize_over_disc(ban(points, coarse), points, patched, cfg);
      if (out.objective < kExhaustionTol) {
        exhausted = true;
        break;
      }
      const KernelDescriptor desc = resolve_multiplicity(out.point, dec.system.params, family, cfg);
      const GsExtension ext = gs_extend(dec.system, desc, grid);
      if (!ext.accepted()) {
        banned.push_back(out.point);
        continue;
      }
      const Complex c = inner_product(g, ext.function, grid, mode);
      g -= c * ext.function;
      append_gs_column(dec.system, ext, desc.parameter);
      coeffs.push_back(c);
      captured.push_back(std::norm(c));
      residuals.push_back(norm_sq(g, grid, mode));
      proj2 += (s * (ext.function.adjoint() * WK)).cwiseAbs2().transpose();
      placed = true;
    }
    if (exhausted) break;
    if (!placed)
      throw numerical_error("poafd_decompose: every near-optimal candidate is linearly dependent");
  }

  const Eigen::Index terms = static_cast<Eigen::Index>(coeffs.size());
  dec.coefficients.resize(1, terms);
  for (Eigen::Index k = 0; k < terms; ++k) dec.coefficients(0, k) = coeffs[static_cast<std::size_t>(k)];
  dec.residual_energy = Eigen::Map<Eigen::VectorXd>(residuals.data(), terms + 1);
  dec.captured = Eigen::Map<Eigen::VectorXd>(captured.data(), terms);
  dec.system.gram_defect = gram_defect_of(dec.system.functions, grid, mode);
  return dec;
}

Decomposition afd_decompose(const Eigen::VectorXcd& f, Eigen::Index n, const SearchConfig& cfg,
                            const Grid& grid) {
  if (n < 1) throw std::invalid_argument("afd_decompose: need n >= 1");
  detail::require_same_grid(f.size(), grid, "afd_decompose");
  const InnerProductMode mode = InnerProductMode::NormalizedArc;

  Eigen::VectorXcd f_k = f;
  ParameterTuple params;
  std::vector<Complex> coeffs;
  std::vector<double> residuals{norm_sq(f, grid, mode)};

  for (Eigen::Index step = 0; step < n; ++step) {
    const SelectionOutcome sel = afd_select(f_k, cfg, grid);
    if (sel.objective < kExhaustionTol) break;
    const Eigen::VectorXcd e =
        normalized_element({KernelFamily::Szego, sel.point, 1}, grid, mode);
    coeffs.push_back(inner_product(f_k, e, grid, mode));
    f_k = reduced_remainder(f_k, sel.point, grid);
    params.push(sel.point);
    residuals.push_back(norm_sq(f_k, grid, mode));
  }

  Decomposition dec;
  dec.method = Method::AFD;
  dec.mode = mode;
  dec.grid = grid;
  dec.system = tm_system(params, grid);
  dec.mean = Eigen::VectorXcd::Zero(grid.size());
  const Eigen::Index terms = static_cast<Eigen::Index>(coeffs.size());
  dec.coefficients.resize(1, terms);
  for (Eigen::Index k = 0; k < terms; ++k) dec.coefficients(0, k) = coeffs[static_cast<std::size_t>(k)];
  dec.residual_energy = Eigen::Map<Eigen::VectorXd>(residuals.data(), terms + 1);
  dec.captured = dec.coefficients.row(0).cwiseAbs2().transpose();
  return dec;
}

namespace {

struct TupleSystem {
  OrthonormalSystem system;
  Eigen::VectorXcd coefficients;  // <f, E_k>
  double energy = 0.0;
};

TupleSystem build_tuple_system(const ParameterTuple& tuple, const Eigen::VectorXcd& f,
                               const Grid& grid, KernelFamily family, InnerProductMode mode) {
  TupleSystem ts;
  ts.system.functions.resize(grid.size(), 0);
  ts.system.family = family;
  ts.system.mode = mode;
  for (Eigen::Index j = 0; j < tuple.size(); ++j) {
    const GsExtension ext = gs_extend(ts.system, tuple.descriptor(j, family), grid);
    if (!ext.accepted()) throw numerical_error("n-best: tuple produced a dependent kernel");
    append_gs_column(ts.system, ext, tuple.values[static_cast<std::size_t>(j)]);
  }
  ts.coefficients.resize(tuple.size());
  for (Eigen::Index j = 0; j < tuple.size(); ++j)
    ts.coefficients[j] = inner_product(f, ts.system.functions.col(j), grid, mode);
  ts.energy = ts.coefficients.cwiseAbs2().sum();
  return ts;
}

ParameterTuple without_index(const ParameterTuple& tuple, Eigen::Index k) {
  ParameterTuple out;
  for (Eigen::Index j = 0; j < tuple.size(); ++j)
    if (j != k) out.push(tuple.values[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace

Decomposition nbest_cyclic(const Eigen::VectorXcd& f, Eigen::Index n, const SearchConfig& cfg,
                           const SweepConfig& sweep, const Grid& grid, KernelFamily family,
                           InnerProductMode mode) {
  Decomposition init = poafd_decompose(f, n, cfg, grid, family, mode);
  if (init.terms() < n) {
    init.method = Method::NBest;
    return init;  // greedy already exhausted the signal inside the span
  }

  ParameterTuple tuple = init.system.params;
  double energy = build_tuple_system(tuple, f, grid, family, mode).energy;

  for (int pass = 0; pass < sweep.max_sweeps; ++pass) {
    const double start_energy = energy;
    for (Eigen::Index k = 0; k < n; ++k) {
      const ParameterTuple others = without_index(tuple, k);
      TupleSystem fixed;
      try {
        fixed = build_tuple_system(others, f, grid, family, mode);
      } catch (const numerical_error&) {
        continue;  // sweep-induced near-degeneracy; leave this coordinate alone
      }
      const double base = fixed.energy;
      Eigen::VectorXcd g = f - fixed.system.functions * fixed.coefficients;

      DetObjective objective{grid, mode, family, &fixed.system, &g};
      const std::vector<Complex> points = polar_candidates(cfg);
      SelectionOutcome out;
      try {
        out = maximize_over_disc(objective(points), points, objective, cfg);
      } catch (const numerical_error&) {
        continue;  // every candidate dependent on the fixed span; keep current
      }
      const KernelDescriptor desc = resolve_multiplicity(out.point, others, family, cfg);
      const GsExtension ext = gs_extend(fixed.system, desc, grid);
      if (!ext.accepted()) continue;
      const double total =
          base + std::norm(inner_product(g, ext.function, grid, mode));
      if (total > energy) {
        // Accept only if the updated tuple rebuilds cleanly in position order.
        ParameterTuple updated;
        for (Eigen::Index j = 0; j < tuple.size(); ++j)
          updated.push(j == k ? desc.parameter : tuple.values[static_cast<std::size_t>(j)]);
        try {
          const TupleSystem verify = build_tuple_system(updated, f, grid, family, mode);
          if (verify.energy > energy) {
            tuple = updated;
            energy = verify.energy;
          }
        } catch (const numerical_error&) {
        }
      }
    }
    const double gain = (energy - start_energy) / std::max(start_energy, 1e-300);
    if (gain < sweep.tol) break;
  }

  TupleSystem final_sys = build_tuple_system(tuple, f, grid, family, mode);
  Decomposition dec;
  dec.method = Method::NBest;
  dec.mode = mode;
  dec.grid = grid;
  dec.system = final_sys.system;
  dec.system.gram_defect = gram_defect_of(dec.system.functions, grid, mode);
  dec.mean = Eigen::VectorXcd::Zero(grid.size());
  dec.coefficients = final_sys.coefficients.transpose();
  dec.captured = final_sys.coefficients.cwiseAbs2();
  dec.residual_energy.resize(final_sys.coefficients.size() + 1);
  Eigen::VectorXcd g = f;
  dec.residual_energy[0] = norm_sq(g, grid, mode);
  for (Eigen::Index k = 0; k < final_sys.coefficients.size(); ++k) {
    g -= final_sys.coefficients[k] * dec.system.functions.col(k);
    dec.residual_energy[k + 1] = norm_sq(g, grid, mode);
  }
  return dec;
}

double convergence_budget(const std::vector<Complex>& coefficients) {
  double m = 0.0;
  for (const Complex& c : coefficients) m += std::abs(c);
  return m;
}

}  // namespace afd
