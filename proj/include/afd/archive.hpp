#pragma once

#include <filesystem>
#include <string>

#include "afd/afd_core.hpp"

namespace afd {

inline constexpr int kArchiveSchemaVersion = 1;

struct DecompositionArchive {
  int schema_version = kArchiveSchemaVersion;
  Decomposition decomposition;
  std::string config_snapshot;
};

/// Serialize a decomposition as a versioned JSON document. Gram-Schmidt and
/// TM systems are rebuilt from their parameters on load; eigenfunction-based
/// systems (KL) store their columns verbatim.
void save_archive(const Decomposition& dec, const std::string& config_snapshot,
                  const std::filesystem::path& path);

DecompositionArchive load_archive(const std::filesystem::path& path);

}  // namespace afd
