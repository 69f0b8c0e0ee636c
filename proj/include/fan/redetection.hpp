#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fan/core.hpp"
#include "fan/detection.hpp"
#include "fan/tracking.hpp"

namespace fan {

enum class RecoveryMode { tracker_only, human, automatic };

std::string_view to_string(RecoveryMode mode);
RecoveryMode recovery_mode_from_string(std::string_view name);

/// Ring of object descriptors sampled every `tau` frames while tracking.
class FeatureMemory {
public:
  explicit FeatureMemory(int tau = 10, std::size_t capacity = 64);

  /// Appends the region descriptor of `object_mask` when frame_index % tau == 0.
  /// Returns true when an entry was added. A second call for the same frame
  /// index is a no-op.
  bool maybe_store(std::int64_t frame_index, const DescriptorField& field,
                   const Mask& object_mask);

  int tau() const noexcept { return tau_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return stored_.size(); }
  bool empty() const noexcept { return stored_.empty(); }
  const std::deque<std::vector<float>>& stored() const noexcept { return stored_; }
  /// Frame indices of the stored entries, oldest first.
  const std::deque<std::int64_t>& frames() const noexcept { return frames_; }

private:
  int tau_;
  std::size_t capacity_;
  std::deque<std::vector<float>> stored_;
  std::deque<std::int64_t> frames_;
  std::optional<std::int64_t> last_frame_;
};

/// Mean of the stored descriptors. Throws NoMemoryError when the memory is
/// empty or the mean has zero norm.
QueryDescriptor recovery_query(const FeatureMemory& memory, const std::string& label);

struct CoarseCandidates {};

/// Candidate regions for re-detection: explicit masks or the coarse path.
using Candidates = std::variant<std::span<const Mask>, CoarseCandidates>;

std::optional<LabeledRegion> redetect(const QueryDescriptor& query, const DescriptorField& field,
                                      const Candidates& candidates, const DetectionConfig& cfg);

struct ClickInput {
  int x = 0;
  int y = 0;
};

struct BoxInput {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

using HumanInput = std::variant<ClickInput, BoxInput>;

/// Operator-assisted recovery. A box is refined to the pixels inside it that
/// resemble the descriptor of its central half; a click grows the similar
/// connected region containing the clicked pixel.
LabeledRegion human_redetect(const HumanInput& input, const DescriptorField& field,
                             const std::string& label, const TrackerConfig& cfg);

}  // namespace fan
