#include "fan/config.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fan/json_util.hpp"

namespace fan {

using nlohmann::json;

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::mean: return "mean";
    case Strategy::majority_vote: return "majority";
    case Strategy::kmeans: return "kmeans";
  }
  return "mean";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "mean") return Strategy::mean;
  if (name == "majority") return Strategy::majority_vote;
  if (name == "kmeans") return Strategy::kmeans;
  throw ConfigError("unknown strategy '" + std::string(name) + "' (mean, majority, kmeans)");
}

std::string_view to_string(Execution exec) {
  return exec == Execution::serial ? "serial" : "parallel";
}

Execution execution_from_string(std::string_view name) {
  if (name == "serial") return Execution::serial;
  if (name == "parallel") return Execution::parallel;
  throw ConfigError("unknown execution '" + std::string(name) + "' (serial, parallel)");
}

void RunConfig::validate() const {
  follow.pipeline.validate();
  follow.controller.validate();
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (!(iou_min > 0.0 && iou_min <= 1.0)) throw ConfigError("iou_min must lie in (0, 1]");
  if (follow.view_width <= 0 || follow.view_height <= 0) throw ConfigError("view size must be positive");
  if (!(follow.scale > 0.0)) throw ConfigError("scale must be positive");
  if (follow.duration < 0.0) throw ConfigError("duration must be non-negative");
  if (follow.operator_delay_frames < 0) throw ConfigError("operator_delay_frames must be non-negative");
}

namespace {

template <class T>
void take(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

static RunConfig merge_keys(RunConfig cfg, const json& j) {
  json_util::check_keys(j, {"seed", "threads", "detection", "tracker", "pipeline", "controller",
                            "follow", "eval"},
                        "config");
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").is_null() ? std::nullopt
                                      : std::optional<std::uint64_t>(j.at("seed").get<std::uint64_t>());
  }
  take(j, "threads", cfg.threads);

  auto& p = cfg.follow.pipeline;
  if (j.contains("detection")) {
    const json& d = j.at("detection");
    json_util::check_keys(d, {"alpha", "epsilon", "connectivity", "min_component_area", "strategy",
                              "kmeans_k", "kmeans_iterations", "kmeans_seed", "execution"},
                          "config.detection");
    if (d.contains("alpha")) {
      p.alpha = d.at("alpha").is_null() ? std::nullopt
                                        : std::optional<double>(d.at("alpha").get<double>());
    }
    take(d, "epsilon", p.detection.similarity.epsilon);
    take(d, "connectivity", p.detection.connectivity);
    take(d, "min_component_area", p.detection.min_component_area);
    if (d.contains("strategy")) p.detection.strategy = strategy_from_string(d.at("strategy").get<std::string>());
    take(d, "kmeans_k", p.detection.kmeans_k);
    take(d, "kmeans_iterations", p.detection.kmeans_iterations);
    take(d, "kmeans_seed", p.detection.kmeans_seed);
    if (d.contains("execution")) {
      p.detection.exec = execution_from_string(d.at("execution").get<std::string>());
      p.tracker.exec = p.detection.exec;
    }
  }
  if (j.contains("tracker")) {
    const json& t = j.at("tracker");
    json_util::check_keys(t, {"search_inflation", "alpha_track", "template_blend", "loss_patience",
                              "min_area", "connectivity"},
                          "config.tracker");
    take(t, "search_inflation", p.tracker.search_inflation);
    take(t, "alpha_track", p.tracker.alpha_track);
    take(t, "template_blend", p.tracker.template_blend);
    take(t, "loss_patience", p.tracker.loss_patience);
    take(t, "min_area", p.tracker.min_area);
    take(t, "connectivity", p.tracker.connectivity);
  }
  if (j.contains("pipeline")) {
    const json& q = j.at("pipeline");
    json_util::check_keys(q, {"detector", "schedule", "recovery", "memory_tau", "memory_capacity",
                              "refresh_interval"},
                          "config.pipeline");
    if (q.contains("detector")) p.detector = detector_from_string(q.at("detector").get<std::string>());
    if (q.contains("schedule")) p.schedule = schedule_from_string(q.at("schedule").get<std::string>());
    if (q.contains("recovery")) p.recovery = recovery_mode_from_string(q.at("recovery").get<std::string>());
    take(q, "memory_tau", p.memory_tau);
    take(q, "memory_capacity", p.memory_capacity);
    take(q, "refresh_interval", p.refresh_interval);
  }
  if (j.contains("controller")) {
    const json& c = j.at("controller");
    json_util::check_keys(c, {"mode", "kp", "ki", "kd", "beta", "v_max", "integral_clamp", "dt"},
                          "config.controller");
    auto& k = cfg.follow.controller;
    if (c.contains("mode")) k.mode = control_mode_from_string(c.at("mode").get<std::string>());
    take(c, "kp", k.kp);
    take(c, "ki", k.ki);
    take(c, "kd", k.kd);
    take(c, "beta", k.beta);
    take(c, "v_max", k.v_max);
    take(c, "integral_clamp", k.integral_clamp);
    take(c, "dt", k.dt);
  }
  if (j.contains("follow")) {
    const json& f = j.at("follow");
    json_util::check_keys(f, {"view_width", "view_height", "scale", "environment_queries",
                              "duration", "operator_delay_frames"},
                          "config.follow");
    take(f, "view_width", cfg.follow.view_width);
    take(f, "view_height", cfg.follow.view_height);
    take(f, "scale", cfg.follow.scale);
    take(f, "environment_queries", cfg.follow.environment_queries);
    take(f, "duration", cfg.follow.duration);
    take(f, "operator_delay_frames", cfg.follow.operator_delay_frames);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    json_util::check_keys(e, {"iou_min"}, "config.eval");
    take(e, "iou_min", cfg.iou_min);
  }
  cfg.validate();
  return cfg;
}

RunConfig merge_run_config(RunConfig base, const json& j) {
  try {
    return merge_keys(std::move(base), j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

json run_config_to_json(const RunConfig& cfg) {
  const auto& p = cfg.follow.pipeline;
  const auto& k = cfg.follow.controller;
  json j;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json();
  j["threads"] = cfg.threads;
  j["detection"] = {{"alpha", p.alpha ? json(*p.alpha) : json()},
                    {"epsilon", p.detection.similarity.epsilon},
                    {"connectivity", p.detection.connectivity},
                    {"min_component_area", p.detection.min_component_area},
                    {"strategy", to_string(p.detection.strategy)},
                    {"kmeans_k", p.detection.kmeans_k},
                    {"kmeans_iterations", p.detection.kmeans_iterations},
                    {"kmeans_seed", p.detection.kmeans_seed},
                    {"execution", to_string(p.detection.exec)}};
  j["tracker"] = {{"search_inflation", p.tracker.search_inflation},
                  {"alpha_track", p.tracker.alpha_track},
                  {"template_blend", p.tracker.template_blend},
                  {"loss_patience", p.tracker.loss_patience},
                  {"min_area", p.tracker.min_area},
                  {"connectivity", p.tracker.connectivity}};
  j["pipeline"] = {{"detector", to_string(p.detector)},
                   {"schedule", to_string(p.schedule)},
                   {"recovery", to_string(p.recovery)},
                   {"memory_tau", p.memory_tau},
                   {"memory_capacity", p.memory_capacity},
                   {"refresh_interval", p.refresh_interval}};
  j["controller"] = {{"mode", to_string(k.mode)}, {"kp", k.kp},       {"ki", k.ki},
                     {"kd", k.kd},                {"beta", k.beta},   {"v_max", k.v_max},
                     {"integral_clamp", k.integral_clamp},            {"dt", k.dt}};
  j["follow"] = {{"view_width", cfg.follow.view_width},
                 {"view_height", cfg.follow.view_height},
                 {"scale", cfg.follow.scale},
                 {"environment_queries", cfg.follow.environment_queries},
                 {"duration", cfg.follow.duration},
                 {"operator_delay_frames", cfg.follow.operator_delay_frames}};
  j["eval"] = {{"iou_min", cfg.iou_min}};
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  return merge_run_config(std::move(base), json_util::load_file(path));
}

void init_logging() {
  const char* env = std::getenv("FAN_LOG_LEVEL");
  auto level = spdlog::level::warn;
  if (env && *env) {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::warn;
  }
  auto logger = spdlog::get("fan");
  if (!logger) logger = spdlog::stderr_color_mt("fan");
  spdlog::set_default_logger(logger);
  spdlog::set_level(level);
}

}  // namespace fan
