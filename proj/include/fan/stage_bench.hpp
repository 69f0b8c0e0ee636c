#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fan/evaluation.hpp"
#include "fan/kernels.hpp"

namespace fan {

struct StageBenchConfig {
  int width = 320;
  int height = 240;
  int dim = 32;
  int frames = 20;
  Execution exec = Execution::serial;
  std::uint64_t seed = 0;
};

/// Stage names in row order.
const std::vector<std::string>& bench_stages();

/// Mean per-stage latency over `frames` distinct synthetic frames of the
/// requested size; one row per stage.
std::vector<FpsRow> run_stage_bench(const StageBenchConfig& cfg);

}  // namespace fan
