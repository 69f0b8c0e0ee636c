#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "fan/core.hpp"
#include "fan/pipeline.hpp"

namespace fan {

class GatewaySession;

/// Websocket server for operator consoles. Incoming messages are parsed and
/// validated here; accepted commands go to `sink` in arrival order and bad
/// ones get an error reply on the same connection.
class Gateway {
public:
  using CommandSink = std::function<void(Command)>;

  /// Binds immediately; port 0 picks a free port. Throws Error on bind failure.
  Gateway(std::uint16_t port, CommandSink sink, const std::string& address = "127.0.0.1");
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  std::uint16_t port() const noexcept;

  /// Starts the network thread.
  void start();
  void stop();

  /// Queues `text` for every connected client.
  void broadcast(std::string text);
  /// Dimensions used for OUT_OF_BOUNDS checks on later messages.
  void set_frame_shape(Shape shape);
  std::size_t session_count() const;

private:
  friend class GatewaySession;
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace fan
