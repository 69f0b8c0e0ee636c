#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fan/detection.hpp"
#include "fan/providers.hpp"
#include "fan/redetection.hpp"
#include "fan/tracking.hpp"

namespace fan {

/// One frame as delivered to the processor. Payloads are shared so that the
/// latest-frame buffer can hand out copies cheaply.
struct Frame {
  std::uint64_t seq = 0;
  double t = 0.0;
  std::shared_ptr<const DescriptorField> field;
  /// Class-agnostic candidate masks for the mask path; may be empty.
  std::shared_ptr<const std::vector<Mask>> candidates;
};

/// Single-slot mailbox: publish overwrites, take_latest copies the slot
/// without clearing it. Safe for one producer and one consumer.
class LatestFrameBuffer {
public:
  struct Taken {
    Frame frame;
    std::uint64_t sequence = 0;
  };

  /// Stores `frame` and returns the new sequence number.
  std::uint64_t publish(Frame frame);
  std::optional<Taken> take_latest() const;
  std::uint64_t sequence() const;

private:
  mutable std::mutex mutex_;
  std::optional<Frame> slot_;
  std::uint64_t sequence_ = 0;
};

struct StageTimings {
  double ingest_ms = 0.0;
  double detection_ms = 0.0;
  double tracking_ms = 0.0;
  double redetection_ms = 0.0;
  double control_ms = 0.0;

  double total_ms() const noexcept {
    return ingest_ms + detection_ms + tracking_ms + redetection_ms + control_ms;
  }
};

/// Rolling means over the last `window` frames and the derived rates.
class RollingTimings {
public:
  explicit RollingTimings(std::size_t window = 100) : window_(window) {}

  void add(const StageTimings& t);
  StageTimings mean() const;
  /// Frames per second implied by a mean stage latency; 0 when unmeasured.
  static double fps(double ms) noexcept { return ms > 0.0 ? 1000.0 / ms : 0.0; }
  std::size_t size() const noexcept { return history_.size(); }

private:
  std::size_t window_;
  std::deque<StageTimings> history_;
};

class StageClock {
public:
  StageClock() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

struct ClickCommand {
  int x = 0;
  int y = 0;
  std::string label;
};

struct BoxCommand {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  std::string label;
};

struct SetModeCommand {
  RecoveryMode mode = RecoveryMode::automatic;
};

struct RedetectCommand {};

struct SetAlphaCommand {
  double alpha = 0.0;
};

using Command =
    std::variant<ClickCommand, BoxCommand, SetModeCommand, RedetectCommand, SetAlphaCommand>;

/// Serialized hand-off from the gateway to the processor; drained once per
/// frame so every frame sees a fully applied configuration.
class CommandQueue {
public:
  void push(Command c);
  std::vector<Command> drain();

private:
  std::mutex mutex_;
  std::vector<Command> pending_;
};

enum class DetectorKind { mask, coarse };
enum class Schedule { detect_every_frame, detect_then_track };
enum class PipelineStatus { searching, active, lost };

std::string_view to_string(DetectorKind kind);
std::string_view to_string(Schedule schedule);
std::string_view to_string(PipelineStatus status);
DetectorKind detector_from_string(std::string_view name);
Schedule schedule_from_string(std::string_view name);

struct PipelineConfig {
  DetectorKind detector = DetectorKind::coarse;
  Schedule schedule = Schedule::detect_then_track;
  RecoveryMode recovery = RecoveryMode::automatic;
  DetectionConfig detection;
  /// When unset the threshold follows the detector: 0.35 on masks, 0.4 for
  /// coarse multi-query and 0.6 for coarse single-query matching.
  std::optional<double> alpha;
  TrackerConfig tracker;
  int memory_tau = 10;
  std::size_t memory_capacity = 64;
  /// Re-run detection every N tracked frames; 0 disables.
  int refresh_interval = 0;

  void validate() const;
  double effective_alpha(std::size_t query_count) const;
};

enum class FrameEvent { none, detected, lost, recovered };
std::string_view to_string(FrameEvent event);

struct FrameResult {
  std::uint64_t seq = 0;
  double t = 0.0;
  PipelineStatus status = PipelineStatus::searching;
  /// Target output for this frame (detection or tracked mask).
  std::optional<LabeledRegion> target;
  /// Every labeled region produced this frame, target included.
  std::vector<LabeledRegion> annotations;
  FrameEvent event = FrameEvent::none;
  StageTimings timings;
};

struct ProcessorStats {
  std::uint64_t frames = 0;
  std::uint64_t detections = 0;
  std::uint64_t losses = 0;
  std::uint64_t recoveries = 0;
};

/// The processing role: detection, tracking, feature memory and recovery for
/// one followed target. Single-threaded; other threads talk to it only
/// through `commands()`.
class Processor {
public:
  Processor(PipelineConfig cfg, QuerySet queries);

  FrameResult process(const Frame& frame);

  CommandQueue& commands() noexcept { return commands_; }
  PipelineStatus status() const noexcept { return status_; }
  const FeatureMemory& memory() const noexcept { return memory_; }
  const QuerySet& queries() const noexcept { return queries_; }
  const PipelineConfig& config() const noexcept { return cfg_; }
  const ProcessorStats& stats() const noexcept { return stats_; }
  const std::optional<TrackState>& track() const noexcept { return track_; }

private:
  void apply(const Command& command, const DescriptorField& field, FrameResult& out);
  void start_track(const LabeledRegion& region, const DescriptorField& field);
  std::optional<LabeledRegion> detect(const Frame& frame, std::vector<LabeledRegion>& annotations);
  std::optional<LabeledRegion> recover_automatic(const Frame& frame);
  const QueryDescriptor& target_query() const;
  DetectionConfig detection_config(std::size_t query_count) const;

  PipelineConfig cfg_;
  QuerySet queries_;
  FeatureMemory memory_;
  CommandQueue commands_;
  PipelineStatus status_ = PipelineStatus::searching;
  std::optional<TrackState> track_;
  std::int64_t frame_index_ = 0;
  std::int64_t frames_lost_ = 0;
  bool force_redetect_ = false;
  ProcessorStats stats_;
};

/// Pulls frames from `source` until it returns nullopt and hands each result
/// to `sink`. A throwing source stops the pipeline and rethrows.
void run_pipeline(const std::function<std::optional<Frame>()>& source, Processor& processor,
                  const std::function<void(const Frame&, const FrameResult&)>& sink);

}  // namespace fan
