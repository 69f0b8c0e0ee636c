#include "fan/control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fan/error.hpp"

namespace fan {

std::string_view to_string(ControlMode mode) { return mode == ControlMode::p ? "P" : "PID"; }

ControlMode control_mode_from_string(std::string_view name) {
  if (name == "P" || name == "p") return ControlMode::p;
  if (name == "PID" || name == "pid") return ControlMode::pid;
  throw ConfigError("unknown controller mode '" + std::string(name) + "'");
}

void ControllerConfig::validate() const {
  if (!(kp >= 0.0 && ki >= 0.0 && kd >= 0.0)) throw ConfigError("controller gains must be >= 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("controller beta must lie in (0, 1]");
  if (!(v_max > 0.0)) throw ConfigError("controller v_max must be positive");
  if (!(integral_clamp >= 0.0)) throw ConfigError("controller integral_clamp must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("controller dt must be positive");
}

PixelError pixel_error(double x, double y, int view_width, int view_height) noexcept {
  return {x - view_width / 2.0, y - view_height / 2.0};
}

ControlOutput compute_command(const ControllerState& state, PixelError error,
                              const ControllerConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("controller dt must be positive");
  if (!std::isfinite(error.ex) || !std::isfinite(error.ey)) {
    ControllerState s = reset(state);
    s.faulted = true;
    return {{}, s};
  }

  ControllerState s = state;
  s.faulted = false;
  double raw_x = cfg.kp * error.ex;
  double raw_y = cfg.kp * error.ey;
  if (cfg.mode == ControlMode::pid) {
    s.integral_x = std::clamp(s.integral_x + error.ex * cfg.dt, -cfg.integral_clamp, cfg.integral_clamp);
    s.integral_y = std::clamp(s.integral_y + error.ey * cfg.dt, -cfg.integral_clamp, cfg.integral_clamp);
    const double dx = s.has_prev ? (error.ex - s.prev_ex) / cfg.dt : 0.0;
    const double dy = s.has_prev ? (error.ey - s.prev_ey) / cfg.dt : 0.0;
    raw_x += cfg.ki * s.integral_x + cfg.kd * dx;
    raw_y += cfg.ki * s.integral_y + cfg.kd * dy;
  }
  s.prev_ex = error.ex;
  s.prev_ey = error.ey;
  s.has_prev = true;

  const double u_x = cfg.beta * raw_x + (1.0 - cfg.beta) * state.prev_command.vx;
  const double u_y = cfg.beta * raw_y + (1.0 - cfg.beta) * state.prev_command.vy;
  const ControlCommand cmd{std::clamp(u_x, -cfg.v_max, cfg.v_max),
                           std::clamp(u_y, -cfg.v_max, cfg.v_max)};
  s.prev_command = cmd;
  return {cmd, s};
}

ControllerState reset(const ControllerState&) noexcept { return ControllerState{}; }

}  // namespace fan
