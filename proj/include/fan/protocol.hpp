#pragma once

// Websocket message protocol between the gateway and operator consoles.
// Text frames carrying one JSON object each; see docs/protocol.schema.json.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fan/pipeline.hpp"

namespace fan::protocol {

enum class ErrorCode { bad_message, out_of_bounds };

std::string_view to_string(ErrorCode code);

struct ErrorReply {
  ErrorCode code = ErrorCode::bad_message;
  std::string detail;
};

using ParseResult = std::variant<Command, ErrorReply>;

/// Parses one client message. Coordinates are checked against `frame` when
/// known; without a frame they are only checked for type.
ParseResult parse_client_message(std::string_view text, std::optional<Shape> frame = std::nullopt);

std::string serialize_command(const Command& command);
std::string serialize_error(const ErrorReply& error);

struct Annotation {
  std::string label;
  float score = 0.0f;
  BoundingBox bbox;
};

struct FrameMessage {
  std::uint64_t seq = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::string png;  // base64
  std::vector<Annotation> annotations;
  PipelineStatus status = PipelineStatus::searching;
  StageTimings timings;
};

/// Labeled annotations of a processed frame.
std::vector<Annotation> annotations_of(const FrameResult& result);

std::string serialize_frame(const FrameMessage& message);
/// Inverse of serialize_frame; throws FormatError on malformed input.
FrameMessage parse_frame_message(std::string_view text);

PipelineStatus status_from_name(std::string_view name);

std::string base64_encode(std::span<const std::byte> bytes);
std::vector<std::byte> base64_decode(std::string_view text);

}  // namespace fan::protocol
