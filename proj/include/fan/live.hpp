#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "fan/control.hpp"
#include "fan/pipeline.hpp"
#include "fan/providers.hpp"

namespace fan {

/// Produces the frame with the given index, or nullopt when the source is
/// exhausted.
using FrameProducer = std::function<std::optional<Frame>(std::uint64_t index)>;
using ResultSink = std::function<void(const Frame&, const FrameResult&)>;

/// Renders a scene through a camera whose pose can be moved by another
/// thread, so that a live pipeline can steer it.
class SceneFrameSource {
public:
  SceneFrameSource(SceneScript scene, CameraModel camera, bool mask_candidates);

  std::optional<Frame> operator()(std::uint64_t index);

  void set_pose(Point2 pose);
  CameraModel camera() const;
  const SceneRenderer& renderer() const noexcept { return renderer_; }

private:
  SceneRenderer renderer_;
  bool mask_candidates_;
  mutable std::mutex mutex_;
  CameraModel camera_;
};

/// Replays FAND files from a directory in file-name order.
class FieldDirectorySource {
public:
  explicit FieldDirectorySource(const std::filesystem::path& dir, double frame_rate = 20.0);

  std::optional<Frame> operator()(std::uint64_t index) const;
  std::size_t size() const noexcept { return files_.size(); }

private:
  std::vector<std::filesystem::path> files_;
  double frame_rate_;
};

struct LiveConfig {
  double produce_hz = 20.0;
  /// 0 runs until the source is exhausted or stop() is called.
  std::uint64_t max_frames = 0;
};

/// Producer and processor threads joined by a LatestFrameBuffer. The
/// processor always works on the newest frame and skips the rest.
class LiveRunner {
public:
  LiveRunner(Processor& processor, FrameProducer producer, LiveConfig cfg, ResultSink sink);
  ~LiveRunner();

  LiveRunner(const LiveRunner&) = delete;
  LiveRunner& operator=(const LiveRunner&) = delete;

  void start();
  void stop();
  /// Blocks until the producer is exhausted and the last frame is processed.
  void wait();

  std::uint64_t produced() const noexcept { return produced_.load(); }
  std::uint64_t processed() const noexcept { return processed_.load(); }
  /// Set when either thread terminated on an exception.
  std::optional<std::string> failure() const;

private:
  void produce();
  void consume();
  void fail(const std::string& what);

  Processor& processor_;
  FrameProducer producer_;
  LiveConfig cfg_;
  ResultSink sink_;
  LatestFrameBuffer buffer_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> exhausted_{false};
  std::atomic<std::uint64_t> produced_{0};
  std::atomic<std::uint64_t> processed_{0};
  mutable std::mutex failure_mutex_;
  std::optional<std::string> failure_;
  std::thread producer_thread_;
  std::thread consumer_thread_;
};

/// Closed-loop steering for a SceneFrameSource: converts each result into a
/// command and moves the camera accordingly.
class LiveFollower {
public:
  LiveFollower(SceneFrameSource& source, ControllerConfig cfg);

  void update(const FrameResult& result);
  ControlCommand last_command() const noexcept { return command_; }

private:
  SceneFrameSource& source_;
  ControllerConfig cfg_;
  ControllerState state_;
  ControlCommand command_;
};

}  // namespace fan
