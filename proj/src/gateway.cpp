#include "fan/gateway.hpp"

#include <deque>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "fan/protocol.hpp"

namespace fan {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

class GatewaySession;

struct Gateway::Impl : std::enable_shared_from_this<Gateway::Impl> {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  CommandSink sink;
  std::thread thread;
  std::uint16_t port = 0;

  mutable std::mutex mutex;
  std::set<std::shared_ptr<GatewaySession>> sessions;
  std::optional<Shape> frame_shape;

  void accept();
  void join(const std::shared_ptr<GatewaySession>& s) {
    std::lock_guard lock(mutex);
    sessions.insert(s);
  }
  void leave(const std::shared_ptr<GatewaySession>& s) {
    std::lock_guard lock(mutex);
    sessions.erase(s);
  }
  std::optional<Shape> shape() const {
    std::lock_guard lock(mutex);
    return frame_shape;
  }
};

class GatewaySession : public std::enable_shared_from_this<GatewaySession> {
public:
  GatewaySession(tcp::socket socket, std::weak_ptr<Gateway::Impl> owner)
      : ws_(std::move(socket)), owner_(std::move(owner)) {}

  void run() {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      if (auto o = self->owner_.lock()) o->join(self);
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> text) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)] {
      self->queue_.push_back(text);
      if (self->queue_.size() == 1) self->write();
    });
  }

  // Network thread only.
  void close() {
    beast::error_code ec;
    ws_.next_layer().close(ec);
  }

private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        if (auto o = self->owner_.lock()) o->leave(self);
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(text);
      self->read();
    });
  }

  void handle(const std::string& text) {
    auto owner = owner_.lock();
    if (!owner) return;
    auto parsed = protocol::parse_client_message(text, owner->shape());
    if (auto* err = std::get_if<protocol::ErrorReply>(&parsed)) {
      spdlog::debug("rejected message: {}", err->detail);
      queue_.push_back(std::make_shared<const std::string>(protocol::serialize_error(*err)));
      if (queue_.size() == 1) write();
      return;
    }
    owner->sink(std::get<Command>(std::move(parsed)));
  }

  void write() {
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        if (auto o = self->owner_.lock()) o->leave(self);
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  websocket::stream<tcp::socket> ws_;
  std::weak_ptr<Gateway::Impl> owner_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
};

void Gateway::Impl::accept() {
  acceptor.async_accept([weak = weak_from_this()](beast::error_code ec, tcp::socket socket) {
    auto self = weak.lock();
    if (ec || !self) return;
    std::make_shared<GatewaySession>(std::move(socket), self)->run();
    self->accept();
  });
}

Gateway::Gateway(std::uint16_t port, CommandSink sink, const std::string& address)
    : impl_(std::make_shared<Impl>()) {
  impl_->sink = std::move(sink);
  try {
    const tcp::endpoint endpoint(asio::ip::make_address(address), port);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
    impl_->port = impl_->acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw Error("gateway: cannot listen on " + address + ":" + std::to_string(port) + ": " +
                e.what());
  }
}

Gateway::~Gateway() { stop(); }

std::uint16_t Gateway::port() const noexcept { return impl_->port; }

void Gateway::start() {
  if (impl_->thread.joinable()) return;
  impl_->accept();
  impl_->thread = std::thread([impl = impl_] { impl->io.run(); });
}

void Gateway::stop() {
  if (!impl_->thread.joinable()) return;
  std::promise<void> closed;
  asio::post(impl_->io, [impl = impl_, &closed] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    {
      std::lock_guard lock(impl->mutex);
      for (const auto& s : impl->sessions) s->close();
      impl->sessions.clear();
    }
    closed.set_value();
  });
  closed.get_future().wait();
  impl_->io.stop();
  impl_->thread.join();
}

void Gateway::broadcast(std::string text) {
  auto shared = std::make_shared<const std::string>(std::move(text));
  std::lock_guard lock(impl_->mutex);
  for (const auto& s : impl_->sessions) s->send(shared);
}

void Gateway::set_frame_shape(Shape shape) {
  std::lock_guard lock(impl_->mutex);
  impl_->frame_shape = shape;
}

std::size_t Gateway::session_count() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->sessions.size();
}

}  // namespace fan
