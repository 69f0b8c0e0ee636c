#include "fan/live.hpp"

#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "fan/io.hpp"

namespace fan {

SceneFrameSource::SceneFrameSource(SceneScript scene, CameraModel camera, bool mask_candidates)
    : renderer_(std::move(scene)), mask_candidates_(mask_candidates), camera_(camera) {}

std::optional<Frame> SceneFrameSource::operator()(std::uint64_t index) {
  const double t = static_cast<double>(index) / renderer_.scene().frame_rate;
  if (t > renderer_.scene().duration) return std::nullopt;
  RenderedFrame rendered = renderer_.render(t, camera());
  auto candidates = std::make_shared<std::vector<Mask>>();
  if (mask_candidates_) {
    for (auto& o : rendered.truth.objects) {
      if (!o.mask.empty()) candidates->push_back(std::move(o.mask));
    }
  }
  return Frame{index, t, std::make_shared<const DescriptorField>(std::move(rendered.field)),
               std::move(candidates)};
}

void SceneFrameSource::set_pose(Point2 pose) {
  std::lock_guard lock(mutex_);
  camera_.pose = pose;
}

CameraModel SceneFrameSource::camera() const {
  std::lock_guard lock(mutex_);
  return camera_;
}

FieldDirectorySource::FieldDirectorySource(const std::filesystem::path& dir, double frame_rate)
    : frame_rate_(frame_rate) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError(dir.string() + " is not a directory");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".fand") files_.push_back(e.path());
  }
  std::sort(files_.begin(), files_.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  if (files_.empty()) throw ConfigError("no .fand files in " + dir.string());
}

std::optional<Frame> FieldDirectorySource::operator()(std::uint64_t index) const {
  if (index >= files_.size()) return std::nullopt;
  auto field = std::make_shared<const DescriptorField>(io::load_descriptor_field(files_[index]));
  return Frame{index, static_cast<double>(index) / frame_rate_, std::move(field),
               std::make_shared<const std::vector<Mask>>()};
}

LiveRunner::LiveRunner(Processor& processor, FrameProducer producer, LiveConfig cfg, ResultSink sink)
    : processor_(processor), producer_(std::move(producer)), cfg_(cfg), sink_(std::move(sink)) {
  if (!(cfg_.produce_hz > 0.0)) throw ConfigError("produce_hz must be positive");
}

LiveRunner::~LiveRunner() {
  stop();
  wait();
}

void LiveRunner::start() {
  if (producer_thread_.joinable()) return;
  producer_thread_ = std::thread([this] { produce(); });
  consumer_thread_ = std::thread([this] { consume(); });
}

void LiveRunner::stop() { stop_ = true; }

void LiveRunner::wait() {
  if (producer_thread_.joinable()) producer_thread_.join();
  if (consumer_thread_.joinable()) consumer_thread_.join();
}

std::optional<std::string> LiveRunner::failure() const {
  std::lock_guard lock(failure_mutex_);
  return failure_;
}

void LiveRunner::fail(const std::string& what) {
  spdlog::error("live pipeline stopped: {}", what);
  {
    std::lock_guard lock(failure_mutex_);
    if (!failure_) failure_ = what;
  }
  stop_ = true;
}

void LiveRunner::produce() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / cfg_.produce_hz));
  auto next = clock::now();
  try {
    for (std::uint64_t i = 0; !stop_; ++i) {
      if (cfg_.max_frames && i >= cfg_.max_frames) break;
      auto frame = producer_(i);
      if (!frame) break;
      buffer_.publish(std::move(*frame));
      ++produced_;
      next += period;
      std::this_thread::sleep_until(next);
    }
  } catch (const std::exception& e) {
    fail(e.what());
  }
  exhausted_ = true;
}

void LiveRunner::consume() {
  std::uint64_t last = 0;
  try {
    while (!stop_) {
      const bool done = exhausted_.load();
      auto taken = buffer_.take_latest();
      if (!taken || taken->sequence == last) {
        if (done) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
        continue;
      }
      last = taken->sequence;
      const FrameResult result = processor_.process(taken->frame);
      ++processed_;
      if (sink_) sink_(taken->frame, result);
    }
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

LiveFollower::LiveFollower(SceneFrameSource& source, ControllerConfig cfg)
    : source_(source), cfg_(cfg) {
  cfg_.validate();
}

void LiveFollower::update(const FrameResult& result) {
  const CameraModel cam = source_.camera();
  if (result.target && !result.target->mask.empty()) {
    const PixelPoint c = centroid(result.target->mask);
    auto out = compute_command(state_, pixel_error(c.x, c.y, cam.view_width, cam.view_height), cfg_);
    state_ = out.state;
    command_ = out.command;
  } else {
    state_ = reset(state_);
    command_ = {};
  }
  source_.set_pose({cam.pose.x + command_.vx * cfg_.dt, cam.pose.y + command_.vy * cfg_.dt});
}

}  // namespace fan
