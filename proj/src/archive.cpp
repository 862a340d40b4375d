#include "afd/archive.hpp"

#include <fstream>

#include <json.hpp>

namespace afd {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json complex_to_json(const Complex& c) { return ordered_json::array({c.real(), c.imag()}); }

Complex complex_from_json(const ordered_json& j) {
  return Complex(j.at(0).get<double>(), j.at(1).get<double>());
}

std::string mode_name(InnerProductMode mode) {
  return mode == InnerProductMode::Lebesgue ? "lebesgue" : "normalized_arc";
}

InnerProductMode mode_from_name(const std::string& s) {
  if (s == "lebesgue") return InnerProductMode::Lebesgue;
  if (s == "normalized_arc") return InnerProductMode::NormalizedArc;
  throw io_error("archive: unknown inner-product mode " + s);
}

std::string family_name(KernelFamily family) {
  return family == KernelFamily::Szego ? "szego" : "poisson";
}

KernelFamily family_from_name(const std::string& s) {
  if (s == "szego") return KernelFamily::Szego;
  if (s == "poisson") return KernelFamily::PoissonCircle;
  throw io_error("archive: unknown kernel family " + s);
}

OrthonormalSystem rebuild_system(Method method, const ParameterTuple& params, KernelFamily family,
                                 InnerProductMode mode, const Grid& grid) {
  if (method == Method::AFD) return tm_system(params, grid);
  OrthonormalSystem sys;
  sys.functions.resize(grid.size(), 0);
  sys.family = family;
  sys.mode = mode;
  for (Eigen::Index j = 0; j < params.size(); ++j) {
    const GsExtension ext = gs_extend(sys, params.descriptor(j, family), grid);
    if (!ext.accepted()) throw io_error("archive: stored parameters produce a dependent kernel");
    const Eigen::Index k = sys.size();
    sys.functions.conservativeResize(Eigen::NoChange, k + 1);
    sys.functions.col(k) = ext.function;
    sys.params.push(params.values[static_cast<std::size_t>(j)]);
    sys.gs_upper.conservativeResize(k + 1, k + 1);
    if (k > 0) sys.gs_upper.row(k).head(k).setZero();
    sys.gs_upper.col(k).head(k) = ext.projections;
    sys.gs_upper(k, k) = ext.r_diag;
  }
  sys.gram_defect = gram_defect_of(sys.functions, grid, mode);
  return sys;
}

}  // namespace

void save_archive(const Decomposition& dec, const std::string& config_snapshot,
                  const std::filesystem::path& path) {
  ordered_json j;
  j["schema_version"] = kArchiveSchemaVersion;
  j["method"] = method_name(dec.method);
  j["family"] = family_name(dec.system.family);
  j["mode"] = mode_name(dec.mode);
  j["seed"] = dec.seed;
  j["grid"] = {{"a", dec.grid.nodes[0]},
               {"b", dec.grid.nodes[dec.grid.size() - 1]},
               {"m", dec.grid.size()}};

  ordered_json params = ordered_json::array();
  for (std::size_t k = 0; k < dec.system.params.values.size(); ++k)
    params.push_back({{"re", dec.system.params.values[k].real()},
                      {"im", dec.system.params.values[k].imag()},
                      {"order", dec.system.params.orders[k]}});
  j["params"] = params;

  ordered_json mean = ordered_json::array();
  for (Eigen::Index i = 0; i < dec.mean.size(); ++i) mean.push_back(complex_to_json(dec.mean[i]));
  j["mean"] = mean;

  ordered_json coeffs = ordered_json::array();
  for (Eigen::Index p = 0; p < dec.coefficients.rows(); ++p) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index k = 0; k < dec.coefficients.cols(); ++k)
      row.push_back(complex_to_json(dec.coefficients(p, k)));
    coeffs.push_back(row);
  }
  j["coefficients"] = coeffs;

  j["residual_energy"] = std::vector<double>(
      dec.residual_energy.data(), dec.residual_energy.data() + dec.residual_energy.size());
  j["captured"] =
      std::vector<double>(dec.captured.data(), dec.captured.data() + dec.captured.size());

  if (dec.method == Method::KL) {
    ordered_json cols = ordered_json::array();
    for (Eigen::Index k = 0; k < dec.system.functions.cols(); ++k) {
      ordered_json col = ordered_json::array();
      for (Eigen::Index i = 0; i < dec.system.functions.rows(); ++i)
        col.push_back(complex_to_json(dec.system.functions(i, k)));
      cols.push_back(col);
    }
    j["functions"] = cols;
  }

  j["config"] = config_snapshot;

  std::ofstream out(path);
  if (!out) throw io_error("save_archive: cannot open " + path.string());
  out << j.dump(1) << "\n";
  if (!out) throw io_error("save_archive: write failed for " + path.string());
}

DecompositionArchive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_archive: cannot open " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("load_archive: parse error in " + path.string() + ": " + e.what());
  }

  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kArchiveSchemaVersion)
      throw io_error("load_archive: incompatible schema version " + std::to_string(version) +
                     " (expected " + std::to_string(kArchiveSchemaVersion) + ")");

    DecompositionArchive archive;
    archive.schema_version = version;
    Decomposition& dec = archive.decomposition;
    dec.method = method_from_name(j.at("method").get<std::string>());
    const KernelFamily family = family_from_name(j.at("family").get<std::string>());
    dec.mode = mode_from_name(j.at("mode").get<std::string>());
    dec.seed = j.at("seed").get<std::uint64_t>();
    dec.grid = trapezoid_grid(j.at("grid").at("m").get<Eigen::Index>(),
                              j.at("grid").at("a").get<double>(),
                              j.at("grid").at("b").get<double>());

    ParameterTuple params;
    for (const auto& p : j.at("params")) {
      params.push(Complex(p.at("re").get<double>(), p.at("im").get<double>()));
      if (params.orders.back() != p.at("order").get<int>())
        throw io_error("load_archive: stored orders are inconsistent with repeats");
    }

    const auto& mean = j.at("mean");
    dec.mean.resize(static_cast<Eigen::Index>(mean.size()));
    for (Eigen::Index i = 0; i < dec.mean.size(); ++i)
      dec.mean[i] = complex_from_json(mean.at(static_cast<std::size_t>(i)));

    const auto& coeffs = j.at("coefficients");
    const Eigen::Index n_paths = static_cast<Eigen::Index>(coeffs.size());
    const Eigen::Index n_terms =
        n_paths > 0 ? static_cast<Eigen::Index>(coeffs.at(0).size()) : params.size();
    dec.coefficients.resize(n_paths, n_terms);
    for (Eigen::Index p = 0; p < n_paths; ++p)
      for (Eigen::Index k = 0; k < n_terms; ++k)
        dec.coefficients(p, k) =
            complex_from_json(coeffs.at(static_cast<std::size_t>(p)).at(static_cast<std::size_t>(k)));

    const auto residual = j.at("residual_energy").get<std::vector<double>>();
    dec.residual_energy = Eigen::Map<const Eigen::VectorXd>(residual.data(),
                                                            static_cast<Eigen::Index>(residual.size()));
    const auto captured = j.at("captured").get<std::vector<double>>();
    dec.captured =
        Eigen::Map<const Eigen::VectorXd>(captured.data(), static_cast<Eigen::Index>(captured.size()));

    if (dec.method == Method::KL) {
      const auto& cols = j.at("functions");
      dec.system.family = family;
      dec.system.mode = dec.mode;
      dec.system.functions.resize(dec.grid.size(), static_cast<Eigen::Index>(cols.size()));
      for (Eigen::Index k = 0; k < dec.system.functions.cols(); ++k)
        for (Eigen::Index i = 0; i < dec.grid.size(); ++i)
          dec.system.functions(i, k) = complex_from_json(
              cols.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(i)));
    } else {
      dec.system = rebuild_system(dec.method, params, family, dec.mode, dec.grid);
    }
    archive.config_snapshot = j.at("config").get<std::string>();
    return archive;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("load_archive: malformed archive " + path.string() + ": " + e.what());
  }
}

}  // namespace afd
