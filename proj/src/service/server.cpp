// Copyright 2026 The silg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "silg/service.hpp"

namespace silg::service {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket&& socket, int idle_timeout_s) : ws_(std::move(socket)), idle_(idle_timeout_s) {}

  void run() {
    net::dispatch(ws_.get_executor(), beast::bind_front_handler(&Connection::on_run, shared_from_this()));
  }

 private:
  void on_run() {
    websocket::stream_base::timeout opt{};
    opt.handshake_timeout = std::chrono::seconds(30);
    opt.idle_timeout = std::chrono::seconds(idle_);
    opt.keep_alive_pings = false;
    ws_.set_option(opt);
    ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
  }

  void on_accept(beast::error_code ec) {
    if (!ec) do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;  // closed, timed out or failed; the session ends with the connection
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    for (const auto& reply : session_.handle(text)) pending_.push_back(reply.serialize());
    write_next();
  }

  void write_next() {
    if (pending_.empty()) {
      do_read();
      return;
    }
    ws_.text(true);
    ws_.async_write(net::buffer(pending_.front()), beast::bind_front_handler(&Connection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    pending_.pop_front();
    write_next();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  Session session_;
  std::deque<std::string> pending_;
  int idle_;
};

}  // namespace

struct SessionServer::Impl {
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> threads;
  std::mutex mu;
  std::condition_variable cv;
  bool stopped = false;

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<Connection>(std::move(socket), options.idle_timeout_s)->run();
      }
      do_accept();
    });
  }
};

SessionServer::SessionServer(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  if (options.idle_timeout_s < 1) fail(ErrorCode::kInvalidArgument, "idle timeout must be >= 1 second");
  if (options.threads < 1) fail(ErrorCode::kInvalidArgument, "server needs at least one thread");
  impl_->options = std::move(options);
}

SessionServer::~SessionServer() { stop(); }

int SessionServer::start() {
  Impl& s = *impl_;
  beast::error_code ec;
  const auto address = net::ip::make_address(s.options.host, ec);
  if (ec) fail(ErrorCode::kInvalidArgument, "bad host address '" + s.options.host + "'");
  const tcp::endpoint endpoint{address, static_cast<unsigned short>(s.options.port)};
  s.acceptor.open(endpoint.protocol(), ec);
  if (!ec) s.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor.bind(endpoint, ec);
  if (!ec) s.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) fail(ErrorCode::kIo, "cannot listen on " + s.options.host + ":" + std::to_string(s.options.port) + ": " + ec.message());
  s.do_accept();
  for (int i = 0; i < s.options.threads; ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
  return port();
}

int SessionServer::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

void SessionServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopped; });
}

void SessionServer::stop() {
  Impl& s = *impl_;
  {
    std::lock_guard lock(s.mu);
    if (s.stopped) return;
    s.stopped = true;
  }
  s.ioc.stop();
  for (auto& t : s.threads) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  }
  s.threads.clear();
  s.cv.notify_all();
}

}  // namespace silg::service
