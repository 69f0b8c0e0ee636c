#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "fan/evaluation.hpp"
#include "fan/simulator.hpp"

namespace fan {

/// Every tunable of a run. Config files are JSON objects mirroring
/// run_config_to_json; unknown keys are rejected and absent keys keep their
/// current value.
struct RunConfig {
  /// Overrides the scene seed when set.
  std::optional<std::uint64_t> seed;
  /// OpenMP threads for the parallel kernels; 0 keeps the runtime default.
  int threads = 0;
  FollowConfig follow;
  double iou_min = kDefaultIouMin;

  void validate() const;
};

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);
std::string_view to_string(Execution exec);
Execution execution_from_string(std::string_view name);

/// Applies the keys present in `j` on top of `base`.
RunConfig merge_run_config(RunConfig base, const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Sets the global log level from FAN_LOG_LEVEL (trace..off); default warn.
void init_logging();

}  // namespace fan
