#include "fan/pipeline.hpp"

#include <spdlog/spdlog.h>

namespace fan {

std::uint64_t LatestFrameBuffer::publish(Frame frame) {
  std::lock_guard lock(mutex_);
  slot_ = std::move(frame);
  return ++sequence_;
}

std::optional<LatestFrameBuffer::Taken> LatestFrameBuffer::take_latest() const {
  std::lock_guard lock(mutex_);
  if (!slot_) return std::nullopt;
  return Taken{*slot_, sequence_};
}

std::uint64_t LatestFrameBuffer::sequence() const {
  std::lock_guard lock(mutex_);
  return sequence_;
}

void RollingTimings::add(const StageTimings& t) {
  history_.push_back(t);
  while (history_.size() > window_) history_.pop_front();
}

StageTimings RollingTimings::mean() const {
  StageTimings m;
  if (history_.empty()) return m;
  for (const auto& t : history_) {
    m.ingest_ms += t.ingest_ms;
    m.detection_ms += t.detection_ms;
    m.tracking_ms += t.tracking_ms;
    m.redetection_ms += t.redetection_ms;
    m.control_ms += t.control_ms;
  }
  const double n = static_cast<double>(history_.size());
  m.ingest_ms /= n;
  m.detection_ms /= n;
  m.tracking_ms /= n;
  m.redetection_ms /= n;
  m.control_ms /= n;
  return m;
}

void CommandQueue::push(Command c) {
  std::lock_guard lock(mutex_);
  pending_.push_back(std::move(c));
}

std::vector<Command> CommandQueue::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Command> out;
  out.swap(pending_);
  return out;
}

std::string_view to_string(DetectorKind kind) {
  return kind == DetectorKind::mask ? "mask" : "coarse";
}

std::string_view to_string(Schedule schedule) {
  return schedule == Schedule::detect_every_frame ? "DETECT_EVERY_FRAME" : "DETECT_THEN_TRACK";
}

std::string_view to_string(PipelineStatus status) {
  switch (status) {
    case PipelineStatus::searching: return "SEARCHING";
    case PipelineStatus::active: return "ACTIVE";
    case PipelineStatus::lost: return "LOST";
  }
  return "UNKNOWN";
}

std::string_view to_string(FrameEvent event) {
  switch (event) {
    case FrameEvent::none: return "";
    case FrameEvent::detected: return "detected";
    case FrameEvent::lost: return "lost";
    case FrameEvent::recovered: return "recovered";
  }
  return "";
}

DetectorKind detector_from_string(std::string_view name) {
  if (name == "mask") return DetectorKind::mask;
  if (name == "coarse") return DetectorKind::coarse;
  throw ConfigError("unknown detector '" + std::string(name) + "'");
}

Schedule schedule_from_string(std::string_view name) {
  if (name == "DETECT_EVERY_FRAME" || name == "every") return Schedule::detect_every_frame;
  if (name == "DETECT_THEN_TRACK" || name == "track") return Schedule::detect_then_track;
  throw ConfigError("unknown schedule '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  detection.validate();
  tracker.validate();
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (memory_tau < 1) throw ConfigError("memory tau must be at least 1");
  if (memory_capacity < 1) throw ConfigError("memory capacity must be at least 1");
  if (refresh_interval < 0) throw ConfigError("refresh_interval must be >= 0");
}

double PipelineConfig::effective_alpha(std::size_t query_count) const {
  if (alpha) return *alpha;
  if (detector == DetectorKind::mask) return kMaskPathAlpha;
  return query_count > 1 ? kCoarseMultiQueryAlpha : kCoarseSingleQueryAlpha;
}

Processor::Processor(PipelineConfig cfg, QuerySet queries)
    : cfg_(std::move(cfg)), queries_(std::move(queries)),
      memory_(cfg_.memory_tau, cfg_.memory_capacity) {
  cfg_.validate();
  if (queries_.queries.empty()) throw ConfigError("the pipeline needs at least one query");
  (void)target_query();
}

const QueryDescriptor& Processor::target_query() const {
  for (const auto& q : queries_.queries) {
    if (q.label() == queries_.target) return q;
  }
  throw ConfigError("no query for target label '" + queries_.target + "'");
}

DetectionConfig Processor::detection_config(std::size_t query_count) const {
  DetectionConfig d = cfg_.detection;
  d.similarity.alpha = cfg_.effective_alpha(query_count);
  return d;
}

void Processor::start_track(const LabeledRegion& region, const DescriptorField& field) {
  track_ = init_track(region, field, cfg_.tracker);
  status_ = PipelineStatus::active;
  frames_lost_ = 0;
}

std::optional<LabeledRegion> Processor::detect(const Frame& frame,
                                               std::vector<LabeledRegion>& annotations) {
  const auto& field = *frame.field;
  const auto dcfg = detection_config(queries_.queries.size());
  std::vector<LabeledRegion> regions;
  if (cfg_.detector == DetectorKind::coarse) {
    regions = coarse_detect(field, queries_.queries, queries_.target, dcfg);
  } else if (frame.candidates && !frame.candidates->empty()) {
    regions = classify_regions(field, *frame.candidates, queries_.queries, dcfg);
  }
  for (const auto& r : regions) {
    if (r.labeled()) annotations.push_back(r);
  }
  return best_region(regions, queries_.target);
}

std::optional<LabeledRegion> Processor::recover_automatic(const Frame& frame) {
  const auto& field = *frame.field;
  std::optional<QueryDescriptor> query;
  try {
    query = recovery_query(memory_, queries_.target);
  } catch (const NoMemoryError& e) {
    spdlog::debug("recovery falls back to the original query: {}", e.what());
    query = target_query();
  }
  const auto dcfg = detection_config(1);
  if (cfg_.detector == DetectorKind::mask) {
    if (!frame.candidates || frame.candidates->empty()) return std::nullopt;
    return redetect(*query, field, std::span<const Mask>(*frame.candidates), dcfg);
  }
  return redetect(*query, field, CoarseCandidates{}, dcfg);
}

void Processor::apply(const Command& command, const DescriptorField& field, FrameResult& out) {
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ClickCommand> || std::is_same_v<T, BoxCommand>) {
          LabeledRegion region;
          if constexpr (std::is_same_v<T, ClickCommand>) {
            region = human_redetect(ClickInput{c.x, c.y}, field, c.label, cfg_.tracker);
            queries_.queries.push_back(query_from_click(field, c.x, c.y, c.label));
          } else {
            region = human_redetect(BoxInput{c.x, c.y, c.w, c.h}, field, c.label, cfg_.tracker);
            if (region.mask.empty()) return;
            queries_.queries.push_back(query_from_region(field, region.mask, c.label));
          }
          queries_.target = c.label;
          const bool was_lost = status_ == PipelineStatus::lost;
          start_track(region, field);
          out.event = was_lost ? FrameEvent::recovered : FrameEvent::detected;
          if (was_lost) ++stats_.recoveries;
          out.target = region;
          out.annotations.push_back(region);
        } else if constexpr (std::is_same_v<T, SetModeCommand>) {
          cfg_.recovery = c.mode;
        } else if constexpr (std::is_same_v<T, RedetectCommand>) {
          force_redetect_ = true;
        } else if constexpr (std::is_same_v<T, SetAlphaCommand>) {
          if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw RangeError("alpha must lie in [0, 1]");
          cfg_.alpha = c.alpha;
        }
      },
      command);
}

FrameResult Processor::process(const Frame& frame) {
  if (!frame.field) throw Error("frame without a descriptor field");
  const auto& field = *frame.field;
  FrameResult out;
  out.seq = frame.seq;
  out.t = frame.t;

  bool commanded = false;
  for (const auto& c : commands_.drain()) {
    try {
      const bool target_command =
          std::holds_alternative<ClickCommand>(c) || std::holds_alternative<BoxCommand>(c);
      apply(c, field, out);
      commanded = commanded || (target_command && out.target.has_value());
    } catch (const Error& e) {
      spdlog::warn("command rejected: {}", e.what());
    }
  }

  const std::int64_t i = frame_index_++;
  ++stats_.frames;

  if (commanded) {
    // An operator selection replaces this frame's automatic processing.
    memory_.maybe_store(i, field, out.target->mask);
    out.status = status_;
    return out;
  }

  if (cfg_.schedule == Schedule::detect_every_frame) {
    StageClock clock;
    out.target = detect(frame, out.annotations);
    out.timings.detection_ms = clock.elapsed_ms();
    status_ = out.target ? PipelineStatus::active : PipelineStatus::searching;
    if (out.target) ++stats_.detections;
    out.status = status_;
    return out;
  }

  if (status_ == PipelineStatus::searching) {
    StageClock clock;
    auto found = detect(frame, out.annotations);
    out.timings.detection_ms = clock.elapsed_ms();
    if (found) {
      start_track(*found, field);
      memory_.maybe_store(i, field, found->mask);
      out.target = std::move(found);
      out.event = FrameEvent::detected;
      ++stats_.detections;
    }
  } else if (status_ == PipelineStatus::active) {
    if (cfg_.refresh_interval > 0 && i % cfg_.refresh_interval == 0) {
      StageClock clock;
      std::vector<LabeledRegion> ignored;
      if (auto found = detect(frame, ignored)) start_track(*found, field);
      out.timings.detection_ms = clock.elapsed_ms();
    }
    StageClock clock;
    TrackStep step = step_track(*track_, field, cfg_.tracker);
    out.timings.tracking_ms = clock.elapsed_ms();
    track_ = std::move(step.state);
    if (step.matched()) {
      memory_.maybe_store(i, field, step.mask);
      const double score = cosine_similarity(region_descriptor(field, step.mask, cfg_.tracker.exec),
                                             target_query().vector());
      LabeledRegion tracked{std::move(step.mask), queries_.target, score, -1};
      out.annotations.push_back(tracked);
      out.target = std::move(tracked);
    } else if (is_lost(*track_)) {
      status_ = PipelineStatus::lost;
      frames_lost_ = 0;
      out.event = FrameEvent::lost;
      ++stats_.losses;
    }
  }

  const bool forced = std::exchange(force_redetect_, false);
  if (status_ == PipelineStatus::lost || forced) {
    StageClock clock;
    std::optional<LabeledRegion> found;
    if (forced || cfg_.recovery == RecoveryMode::automatic) {
      found = recover_automatic(frame);
    } else if (cfg_.recovery == RecoveryMode::tracker_only && track_) {
      ++frames_lost_;
      const double widen = cfg_.tracker.search_inflation *
                           (1.0 + static_cast<double>(frames_lost_) / cfg_.tracker.loss_patience);
      TrackStep step = step_track(*track_, field, cfg_.tracker, widen);
      if (step.matched()) {
        found = LabeledRegion{std::move(step.mask), queries_.target, 0.0, -1};
        found->score = cosine_similarity(region_descriptor(field, found->mask, cfg_.tracker.exec),
                                         target_query().vector());
      }
    }
    out.timings.redetection_ms = clock.elapsed_ms();
    if (found) {
      const bool was_lost = status_ == PipelineStatus::lost;
      start_track(*found, field);
      memory_.maybe_store(i, field, found->mask);
      if (was_lost) {
        out.event = FrameEvent::recovered;
        ++stats_.recoveries;
      }
      if (out.target) out.annotations.clear();
      out.annotations.push_back(*found);
      out.target = std::move(found);
    }
  }

  out.status = status_;
  return out;
}

void run_pipeline(const std::function<std::optional<Frame>()>& source, Processor& processor,
                  const std::function<void(const Frame&, const FrameResult&)>& sink) {
  for (;;) {
    StageClock ingest;
    std::optional<Frame> frame;
    try {
      frame = source();
    } catch (const std::exception& e) {
      spdlog::error("frame source failed: {}", e.what());
      throw;
    }
    if (!frame) return;
    const double ingest_ms = ingest.elapsed_ms();
    FrameResult result = processor.process(*frame);
    result.timings.ingest_ms = ingest_ms;
    sink(*frame, result);
  }
}

}  // namespace fan
