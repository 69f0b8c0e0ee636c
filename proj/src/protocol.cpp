#include "fan/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <nlohmann/json.hpp>

namespace fan::protocol {

using nlohmann::json;

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_message: return "BAD_MESSAGE";
    case ErrorCode::out_of_bounds: return "OUT_OF_BOUNDS";
  }
  return "BAD_MESSAGE";
}

namespace {

struct Rejected {
  ErrorReply reply;
};

[[noreturn]] void bad(std::string detail) {
  throw Rejected{{ErrorCode::bad_message, std::move(detail)}};
}

[[noreturn]] void out_of_bounds(std::string detail) {
  throw Rejected{{ErrorCode::out_of_bounds, std::move(detail)}};
}

void only_keys(const json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      bad("unexpected field '" + key + "'");
    }
  }
  for (auto key : allowed) {
    if (!j.contains(std::string(key))) bad("missing field '" + std::string(key) + "'");
  }
}

int coordinate(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned() &&
      !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad(std::string("field '") + key + "' must be a non-negative integer");
  }
  const auto u = v.get<std::uint64_t>();
  if (u > std::numeric_limits<std::uint32_t>::max()) bad(std::string("field '") + key + "' exceeds u32");
  if (u > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
    out_of_bounds(std::string("field '") + key + "' is outside the frame");
  }
  return static_cast<int>(u);
}

std::string label_of(const json& j) {
  const json& v = j.at("label");
  if (!v.is_string()) bad("field 'label' must be a string");
  auto s = v.get<std::string>();
  if (s.empty()) bad("field 'label' must not be empty");
  return s;
}

Command parse_object(const json& j, const std::optional<Shape>& frame) {
  if (!j.is_object()) bad("message must be a JSON object");
  if (!j.contains("type") || !j.at("type").is_string()) bad("missing string field 'type'");
  const auto type = j.at("type").get<std::string>();

  if (type == "click") {
    only_keys(j, {"type", "x", "y", "label"});
    ClickCommand c{coordinate(j, "x"), coordinate(j, "y"), label_of(j)};
    if (frame && (c.x >= frame->width || c.y >= frame->height)) {
      out_of_bounds("click (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                    ") outside frame " + fan::to_string(*frame));
    }
    return c;
  }
  if (type == "box") {
    only_keys(j, {"type", "x", "y", "w", "h", "label"});
    BoxCommand c{coordinate(j, "x"), coordinate(j, "y"), coordinate(j, "w"), coordinate(j, "h"),
                 label_of(j)};
    if (c.w == 0 || c.h == 0) bad("box must have positive width and height");
    if (frame && (static_cast<std::int64_t>(c.x) + c.w > frame->width ||
                  static_cast<std::int64_t>(c.y) + c.h > frame->height)) {
      out_of_bounds("box exceeds frame " + fan::to_string(*frame));
    }
    return c;
  }
  if (type == "set_mode") {
    only_keys(j, {"type", "mode"});
    const json& m = j.at("mode");
    if (!m.is_string()) bad("field 'mode' must be a string");
    const auto name = m.get<std::string>();
    for (auto mode : {RecoveryMode::tracker_only, RecoveryMode::human, RecoveryMode::automatic}) {
      if (name == fan::to_string(mode)) return SetModeCommand{mode};
    }
    bad("unknown mode '" + name + "'");
  }
  if (type == "redetect") {
    only_keys(j, {"type"});
    return RedetectCommand{};
  }
  if (type == "set_alpha") {
    only_keys(j, {"type", "alpha"});
    const json& a = j.at("alpha");
    if (!a.is_number()) bad("field 'alpha' must be a number");
    const double alpha = a.get<double>();
    if (!(alpha >= 0.0 && alpha <= 1.0)) bad("alpha must lie in [0, 1]");
    return SetAlphaCommand{alpha};
  }
  bad("unknown message type '" + type + "'");
}

}  // namespace

ParseResult parse_client_message(std::string_view text, std::optional<Shape> frame) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    return ErrorReply{ErrorCode::bad_message, std::string("invalid JSON: ") + e.what()};
  }
  try {
    return parse_object(j, frame);
  } catch (const Rejected& r) {
    return r.reply;
  }
}

std::string serialize_command(const Command& command) {
  json j = std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ClickCommand>) {
          return {{"type", "click"}, {"x", c.x}, {"y", c.y}, {"label", c.label}};
        } else if constexpr (std::is_same_v<T, BoxCommand>) {
          return {{"type", "box"}, {"x", c.x}, {"y", c.y}, {"w", c.w}, {"h", c.h}, {"label", c.label}};
        } else if constexpr (std::is_same_v<T, SetModeCommand>) {
          return {{"type", "set_mode"}, {"mode", fan::to_string(c.mode)}};
        } else if constexpr (std::is_same_v<T, RedetectCommand>) {
          return {{"type", "redetect"}};
        } else {
          return {{"type", "set_alpha"}, {"alpha", c.alpha}};
        }
      },
      command);
  return j.dump();
}

std::string serialize_error(const ErrorReply& error) {
  return json{{"type", "error"}, {"code", to_string(error.code)}, {"detail", error.detail}}.dump();
}

std::vector<Annotation> annotations_of(const FrameResult& result) {
  std::vector<Annotation> out;
  for (const auto& r : result.annotations) {
    if (!r.label || r.mask.empty()) continue;
    out.push_back({*r.label, static_cast<float>(r.score), bounding_box(r.mask)});
  }
  return out;
}

PipelineStatus status_from_name(std::string_view name) {
  for (auto s : {PipelineStatus::searching, PipelineStatus::active, PipelineStatus::lost}) {
    if (name == fan::to_string(s)) return s;
  }
  throw FormatError("unknown status '" + std::string(name) + "'", 0);
}

std::string serialize_frame(const FrameMessage& m) {
  json annotations = json::array();
  for (const auto& a : m.annotations) {
    annotations.push_back(
        {{"label", a.label}, {"score", a.score}, {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}}});
  }
  const auto& t = m.timings;
  json j{{"type", "frame"},
         {"seq", m.seq},
         {"width", m.width},
         {"height", m.height},
         {"png", m.png},
         {"annotations", std::move(annotations)},
         {"status", fan::to_string(m.status)},
         {"timings",
          {{"ingest_ms", t.ingest_ms},
           {"detection_ms", t.detection_ms},
           {"tracking_ms", t.tracking_ms},
           {"redetection_ms", t.redetection_ms},
           {"control_ms", t.control_ms},
           {"total_ms", t.total_ms()}}}};
  return j.dump();
}

FrameMessage parse_frame_message(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("type") != "frame") throw FormatError("not a frame message", 0);
    FrameMessage m;
    m.seq = j.at("seq").get<std::uint64_t>();
    m.width = j.at("width").get<std::uint32_t>();
    m.height = j.at("height").get<std::uint32_t>();
    m.png = j.at("png").get<std::string>();
    for (const auto& a : j.at("annotations")) {
      const auto b = a.at("bbox").get<std::vector<int>>();
      if (b.size() != 4) throw FormatError("bbox must have four entries", 0);
      m.annotations.push_back({a.at("label").get<std::string>(), a.at("score").get<float>(),
                               {b[0], b[1], b[2], b[3]}});
    }
    m.status = status_from_name(j.at("status").get<std::string>());
    const json& t = j.at("timings");
    m.timings = {t.at("ingest_ms").get<double>(), t.at("detection_ms").get<double>(),
                 t.at("tracking_ms").get<double>(), t.at("redetection_ms").get<double>(),
                 t.at("control_ms").get<double>()};
    return m;
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("frame message: ") + e.what(), e.byte);
  } catch (const json::exception& e) {
    throw FormatError(std::string("frame message: ") + e.what(), 0);
  }
}

std::string base64_encode(std::span<const std::byte> bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<const char*, 6, 8>>;
  const char* begin = reinterpret_cast<const char*>(bytes.data());
  std::string out(It(begin), It(begin + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<std::byte> base64_decode(std::string_view text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<const char*>, 8, 6>;
  if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4", text.size());
  std::size_t pad = 0;
  while (pad < 2 && pad < text.size() && text[text.size() - 1 - pad] == '=') ++pad;
  const std::string_view body = text.substr(0, text.size() - pad);
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/')) {
      throw FormatError("invalid base64 character", i);
    }
  }
  std::vector<std::byte> out;
  out.reserve(body.size() * 3 / 4);
  for (It it(body.data()), end(body.data() + body.size()); it != end; ++it) {
    out.push_back(static_cast<std::byte>(*it));
  }
  // transform_width may emit one partial trailing byte.
  out.resize(body.size() * 6 / 8);
  return out;
}

}  // namespace fan::protocol
