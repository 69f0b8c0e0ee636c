#include <atomic>
#include <chrono>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "../support/scenes.hpp"
#include "fan/gateway.hpp"
#include "fan/protocol.hpp"

using namespace fan;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Client {
public:
  explicit Client(std::uint16_t port) : ws_(io_) {
    tcp::resolver resolver(io_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
    ws_.text(true);
  }
  ~Client() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

  void send(const std::string& text) { ws_.write(asio::buffer(text)); }
  std::string read() {
    beast::flat_buffer b;
    ws_.read(b);
    return beast::buffers_to_string(b.data());
  }
  nlohmann::json read_json() { return nlohmann::json::parse(read()); }

private:
  asio::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

bool wait_for(const std::function<bool()>& pred) {
  for (int i = 0; i < 2000; ++i) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return false;
}

protocol::FrameMessage message_of(const FrameResult& r, Shape shape) {
  protocol::FrameMessage m;
  m.seq = r.seq;
  m.width = shape.width;
  m.height = shape.height;
  m.annotations = protocol::annotations_of(r);
  m.status = r.status;
  return m;
}

}  // namespace

TEST(Gateway, ClickReachesNextFrameAndBroadcastIsShared) {
  const SceneRenderer renderer(fixtures::disc_scene(0.0));
  const auto b = renderer.class_base(2);
  Processor processor({}, {{QueryDescriptor("absent", {b.begin(), b.end()}, QueryKind::precomputed)}, "absent"});
  std::atomic<int> received{0};
  Gateway gw(0, [&](Command c) {
    processor.commands().push(std::move(c));
    ++received;
  });
  gw.start();
  const Shape shape{48, 64};
  gw.set_frame_shape(shape);

  Client a(gw.port()), c(gw.port());
  ASSERT_TRUE(wait_for([&] { return gw.session_count() == 2; }));

  a.send(R"({"type":"click","x":32,"y":24,"label":"disc"})");
  ASSERT_TRUE(wait_for([&] { return received == 1; }));

  const auto frame = renderer.render(0.0, fixtures::small_camera());
  bool seen = false;
  for (std::uint64_t seq = 0; seq < 2 && !seen; ++seq) {
    const auto res = processor.process({seq, 0.0, std::make_shared<const DescriptorField>(frame.field), nullptr});
    gw.broadcast(protocol::serialize_frame(message_of(res, shape)));
    const auto ta = a.read();
    const auto tc = c.read();
    EXPECT_EQ(ta, tc);
    const auto m = protocol::parse_frame_message(ta);
    EXPECT_EQ(m.seq, seq);
    for (const auto& ann : m.annotations) seen = seen || ann.label == "disc";
  }
  EXPECT_TRUE(seen);
  gw.stop();
}

TEST(Gateway, MalformedMessagesGetErrorReplies) {
  std::atomic<int> received{0};
  Gateway gw(0, [&](Command) { ++received; });
  gw.start();
  gw.set_frame_shape({240, 320});
  Client a(gw.port());
  ASSERT_TRUE(wait_for([&] { return gw.session_count() == 1; }));

  a.send("{not json");
  auto j = a.read_json();
  EXPECT_EQ(j.at("type"), "error");
  EXPECT_EQ(j.at("code"), "BAD_MESSAGE");

  a.send(R"({"type":"click","x":400,"y":10,"label":"a"})");
  j = a.read_json();
  EXPECT_EQ(j.at("code"), "OUT_OF_BOUNDS");

  // The connection survives and valid messages still go through.
  a.send(R"({"type":"redetect"})");
  EXPECT_TRUE(wait_for([&] { return received == 1; }));
  gw.stop();
}

TEST(Gateway, DisconnectAndStop) {
  Gateway gw(0, [](Command) {});
  gw.start();
  {
    Client a(gw.port());
    ASSERT_TRUE(wait_for([&] { return gw.session_count() == 1; }));
  }
  EXPECT_TRUE(wait_for([&] { return gw.session_count() == 0; }));
  gw.broadcast("{}");
  gw.stop();
  gw.stop();
  EXPECT_THROW(Gateway(0, [](Command) {}, "256.0.0.1"), Error);
}
