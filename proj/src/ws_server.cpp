#include <deque>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "brainstorm/server.hpp"

namespace brainstorm {

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

constexpr std::string_view kPrefix = "/ws/sessions/";
constexpr auto kPumpInterval = std::chrono::milliseconds{10};

// One client: reads the upgrade request, subscribes, then forwards events
// as text frames. Client frames are read and discarded.
class EventSocket : public std::enable_shared_from_this<EventSocket> {
 public:
  EventSocket(tcp::socket socket, EventHub& hub)
      : ws_(std::move(socket)), hub_(hub), timer_(ws_.get_executor()) {}

  ~EventSocket() {
    if (sub_) sub_->close();
  }

  void run() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) self->on_request();
                     });
  }

 private:
  void on_request() {
    const std::string target(request_.target());
    const bool ok = websocket::is_upgrade(request_) && target.rfind(kPrefix, 0) == 0 &&
                    target.size() > kPrefix.size() &&
                    target.find('/', kPrefix.size()) == std::string::npos;
    if (!ok) {
      reject();
      return;
    }
    // Subscribe before the handshake so nothing after it is missed.
    sub_ = hub_.subscribe(target.substr(kPrefix.size()));
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->read_loop();
      self->pump();
    });
  }

  void reject() {
    auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found,
                                                                   request_.version());
    res->set(http::field::content_type, "application/json");
    res->body() = R"({"error":"NotFound","message":"expected /ws/sessions/{session_id}","detail":null})";
    res->keep_alive(false);
    res->prepare_payload();
    http::async_write(ws_.next_layer(), *res,
                      [self = shared_from_this(), res](beast::error_code, std::size_t) {
                        beast::error_code ignored;
                        self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_send, ignored);
                      });
  }

  void read_loop() {
    ws_.async_read(inbound_, [self = shared_from_this()](beast::error_code ec, std::size_t n) {
      if (ec) {
        self->sub_->close();
        self->timer_.cancel();
        return;
      }
      self->inbound_.consume(n);
      self->read_loop();
    });
  }

  void pump() {
    if (sub_->overflowed()) {
      drop_slow_consumer();
      return;
    }
    if (sub_->closed() && outbox_.empty() && !writing_) return;
    if (!writing_ && outbox_.empty()) {
      for (auto& e : sub_->drain()) outbox_.push_back(json(e).dump());
    }
    flush();
    timer_.expires_after(kPumpInterval);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->pump();
    });
  }

  void flush() {
    if (writing_ || outbox_.empty()) return;
    writing_ = true;
    ws_.async_write(asio::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->writing_ = false;
                      if (ec) {
                        self->sub_->close();
                        return;
                      }
                      self->outbox_.pop_front();
                      self->flush();
                    });
  }

  void drop_slow_consumer() {
    if (writing_) {
      beast::get_lowest_layer(ws_).close();
      return;
    }
    ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, "slow consumer"),
                    [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  EventHub& hub_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  beast::flat_buffer inbound_;
  http::request<http::string_body> request_;
  std::shared_ptr<Subscription> sub_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
};

}  // namespace

struct EventSocketServer::Impl {
  explicit Impl(EventHub& h) : hub(h) {}

  void accept() {
    acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<EventSocket>(std::move(socket), hub)->run();
      accept();
    });
  }

  EventHub& hub;
  asio::io_context ioc{1};
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread thread;
};

EventSocketServer::EventSocketServer(EventHub& hub) : impl_(std::make_unique<Impl>(hub)) {}

EventSocketServer::~EventSocketServer() { stop(); }

int EventSocketServer::listen(const std::string& host, int port) {
  const tcp::endpoint endpoint(asio::ip::make_address(host), static_cast<unsigned short>(port));
  impl_->acceptor = std::make_unique<tcp::acceptor>(impl_->ioc);
  impl_->acceptor->open(endpoint.protocol());
  impl_->acceptor->set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor->bind(endpoint);
  impl_->acceptor->listen();
  const int bound = impl_->acceptor->local_endpoint().port();
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
  return bound;
}

void EventSocketServer::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->ioc.stop();
  impl_->thread.join();
}

}  // namespace brainstorm
