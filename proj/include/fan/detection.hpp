#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fan/components.hpp"
#include "fan/core.hpp"
#include "fan/kernels.hpp"

namespace fan {

enum class Strategy { mean, majority_vote, kmeans };

/// Default thresholds tuned per matching path.
inline constexpr double kMaskPathAlpha = 0.35;
inline constexpr double kCoarseMultiQueryAlpha = 0.4;
inline constexpr double kCoarseSingleQueryAlpha = 0.6;

struct DetectionConfig {
  SimilarityConfig similarity{kMaskPathAlpha, 1e-8};
  int connectivity = 8;
  std::size_t min_component_area = 9;
  Strategy strategy = Strategy::mean;
  int kmeans_k = 2;
  int kmeans_iterations = 25;
  std::uint64_t kmeans_seed = 0;
  Execution exec = Execution::parallel;

  double alpha() const noexcept { return similarity.alpha; }
  void validate() const;
};

/// Unit-less per-pixel assignment: query index or -1, plus the max cosine.
struct PixelLabels {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> label;
  std::vector<double> score;
};

/// Thresholded argmax vote of a region under one of the alternate strategies.
struct RegionVote {
  int query_index = -1;
  double score = 0.0;
};

std::vector<float> region_descriptor(const DescriptorField& field, const Mask& mask,
                                     Execution exec = Execution::parallel);

std::vector<LabeledRegion> classify_regions(const DescriptorField& field,
                                            std::span<const Mask> masks,
                                            std::span<const QueryDescriptor> queries,
                                            const DetectionConfig& cfg);

std::vector<LabeledRegion> classify_single(const DescriptorField& field,
                                           std::span<const Mask> masks,
                                           const QueryDescriptor& query,
                                           const DetectionConfig& cfg);

PixelLabels pixel_label_map(const DescriptorField& field,
                            std::span<const QueryDescriptor> queries, double alpha,
                            double epsilon = 1e-8, Execution exec = Execution::parallel);

/// Segmenter-free detection: per-pixel query labeling, a binary map of the
/// pixels carrying `target_label`, then one region per connected component.
std::vector<LabeledRegion> coarse_detect(const DescriptorField& field,
                                         std::span<const QueryDescriptor> queries,
                                         const std::string& target_label,
                                         const DetectionConfig& cfg);

RegionVote classify_region_majority(const DescriptorField& field, const Mask& mask,
                                    std::span<const QueryDescriptor> queries, double alpha,
                                    double epsilon = 1e-8);

RegionVote classify_region_kmeans(const DescriptorField& field, const Mask& mask,
                                  std::span<const QueryDescriptor> queries,
                                  const DetectionConfig& cfg);

/// Highest-scoring labeled region carrying `label`; earliest wins ties.
std::optional<LabeledRegion> best_region(std::span<const LabeledRegion> regions,
                                         const std::string& label);

}  // namespace fan
