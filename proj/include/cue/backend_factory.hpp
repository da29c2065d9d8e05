#pragma once

#include <memory>

#include "cue/backend.hpp"
#include "cue/oracle_backend.hpp"
#include "cue/process_backend.hpp"

namespace cue {

/// Builds the realization named by the sidecar's runtime block:
///   {"kind": "process", "command": [...]}
///   {"kind": "oracle", "mode": "marker", "threshold": 0.8}
///   {"kind": "oracle", "mode": "fixed", "columns": [..]}
inline std::unique_ptr<DetectorBackend> make_backend(const BackendSpec& spec) {
  const std::string kind = spec.runtime.value("kind", std::string{"process"});
  if (kind == "process") return std::make_unique<ProcessBackend>(spec);
  if (kind == "oracle") {
    const std::string mode = spec.runtime.value("mode", std::string{"marker"});
    if (mode == "marker") return std::make_unique<MarkerOracle>(spec, spec.runtime.value("threshold", 0.8));
    if (mode == "fixed")
      return std::make_unique<FixedPositionOracle>(spec, spec.runtime.value("columns", std::vector<int>{}));
    throw BackendError("unknown oracle mode '" + mode + "'");
  }
  throw BackendError("unknown backend kind '" + kind + "'");
}

inline std::unique_ptr<DetectorBackend> load_backend(const std::filesystem::path& sidecar) {
  return make_backend(BackendSpec::load(sidecar));
}

}  // namespace cue
