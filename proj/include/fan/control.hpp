#pragma once

#include <string_view>

namespace fan {

enum class ControlMode { p, pid };

std::string_view to_string(ControlMode mode);
ControlMode control_mode_from_string(std::string_view name);

/// Gains act on pixel error and produce m/s. Defaults are calibration
/// constants for the 0.02 m/px, 20 Hz follower, not measured values.
struct ControllerConfig {
  double kp = 0.01;
  double ki = 0.001;
  double kd = 0.005;
  ControlMode mode = ControlMode::p;
  double beta = 0.3;
  double v_max = 2.0;
  double integral_clamp = 200.0;
  double dt = 0.05;

  void validate() const;
};

struct ControlCommand {
  double vx = 0.0;
  double vy = 0.0;

  friend bool operator==(const ControlCommand&, const ControlCommand&) = default;
};

struct PixelError {
  double ex = 0.0;
  double ey = 0.0;
};

struct ControllerState {
  double integral_x = 0.0;
  double integral_y = 0.0;
  double prev_ex = 0.0;
  double prev_ey = 0.0;
  bool has_prev = false;
  ControlCommand prev_command;
  bool faulted = false;
};

PixelError pixel_error(double x, double y, int view_width, int view_height) noexcept;

struct ControlOutput {
  ControlCommand command;
  ControllerState state;
};

/// P or PID on pixel error, exponential low-pass on the command, then the
/// per-axis speed clamp. A non-finite error faults: zero command, reset state.
ControlOutput compute_command(const ControllerState& state, PixelError error,
                              const ControllerConfig& cfg);

ControllerState reset(const ControllerState& state) noexcept;

}  // namespace fan
