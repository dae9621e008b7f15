#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include <boost/asio.hpp>

#include "offload/runtime/fabric.hpp"

namespace offload {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// Splits "host:port" at the last colon.  Throws std::invalid_argument.
HostPort parse_endpoint(const std::string& endpoint);

/**
 * TCP fabric for one container on a single-threaded io_context.
 *
 * Frames go over persistent connections.  A message to container X uses,
 * in order: the connection X last sent us something on, a connection we
 * dialled to X before, a new connection to X's known endpoint, or else the
 * gateway (a node's server), which routes by recipient.  So a client that
 * never listens can still be answered on its own connection.
 */
class LiveFabric : public Fabric {
 public:
  explicit LiveFabric(boost::asio::io_context& io);
  ~LiveFabric() override;

  LiveFabric(const LiveFabric&) = delete;
  LiveFabric& operator=(const LiveFabric&) = delete;

  void attach(Host& host) { host_ = &host; }
  void set_gateway(std::string id) { gateway_ = std::move(id); }
  /// Accepts connections on `endpoint`; port 0 picks a free one.  Returns
  /// the bound port.
  std::uint16_t listen(const std::string& endpoint);

  Micros now() const override;
  TimerId schedule_after(const std::string& owner, Micros delay, std::function<void()> fn) override;
  void cancel(TimerId id) override;
  void send(const std::string& from, const std::string& to, Envelope env) override;
  void learn_endpoint(const std::string& id, const std::string& endpoint) override;
  void record(TraceEvent event) override;

  void set_trace_sink(std::function<void(const TraceEvent&)> sink) { sink_ = std::move(sink); }
  boost::asio::io_context& io() { return io_; }

 private:
  struct Conn;
  struct Outgoing {
    Bytes frame;
    std::string to;
    Envelope env;
  };

  std::shared_ptr<Conn> route_to(const std::string& to);
  std::shared_ptr<Conn> dial(const std::string& to, const std::string& endpoint);
  void start_read(const std::shared_ptr<Conn>& c);
  void flush(const std::shared_ptr<Conn>& c);
  void close(const std::shared_ptr<Conn>& c);
  void fail_later(std::string to, Envelope env, SendFailure why);
  void accept_next();

  boost::asio::io_context& io_;
  Host* host_ = nullptr;
  std::string gateway_;
  std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
  std::unique_ptr<boost::asio::ip::tcp::acceptor> acceptor_;
  std::map<std::string, std::string> directory_;
  std::map<std::string, std::weak_ptr<Conn>> hints_;
  std::map<std::string, std::shared_ptr<Conn>> dialled_;
  std::vector<std::weak_ptr<Conn>> all_;
  std::map<TimerId, std::shared_ptr<boost::asio::steady_timer>> timers_;
  TimerId next_timer_ = 0;
  std::function<void(const TraceEvent&)> sink_;
};

}  // namespace offload
