#include "offload/live/live_fabric.hpp"

#include <array>

namespace offload {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

HostPort parse_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
    throw std::invalid_argument("endpoint must be HOST:PORT, got '" + endpoint + "'");
  }
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(endpoint.substr(colon + 1), &used);
    if (used != endpoint.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in '" + endpoint + "'");
  }
  if (port > 65535) throw std::invalid_argument("bad port in '" + endpoint + "'");
  return {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
}

struct LiveFabric::Conn {
  explicit Conn(asio::io_context& io) : sock(io) {}
  tcp::socket sock;
  FrameReader reader;
  std::array<std::uint8_t, 65536> buf{};
  std::deque<Outgoing> out;
  bool connected = false;
  bool writing = false;
  bool closed = false;
  std::string dialled_id;
};

LiveFabric::LiveFabric(asio::io_context& io) : io_(io) {}

LiveFabric::~LiveFabric() {
  *alive_ = false;
  for (auto& [id, t] : timers_) t->cancel();
  if (acceptor_) {
    boost::system::error_code ec;
    acceptor_->close(ec);
  }
  for (auto& w : all_) {
    if (auto c = w.lock()) {
      boost::system::error_code ec;
      c->closed = true;
      c->sock.close(ec);
    }
  }
}

Micros LiveFabric::now() const {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - epoch_).count();
}

void LiveFabric::record(TraceEvent event) {
  if (sink_) sink_(event);
}

TimerId LiveFabric::schedule_after(const std::string&, Micros delay, std::function<void()> fn) {
  const TimerId id = ++next_timer_;
  auto timer = std::make_shared<asio::steady_timer>(io_);
  timer->expires_after(std::chrono::microseconds(std::max<Micros>(delay, 0)));
  timers_[id] = timer;
  std::weak_ptr<bool> alive = alive_;
  timer->async_wait([this, alive, id, fn = std::move(fn)](const boost::system::error_code& ec) {
    if (ec || alive.expired() || !*alive.lock()) return;
    if (timers_.erase(id) == 0) return;
    fn();
  });
  return id;
}

void LiveFabric::cancel(TimerId id) {
  if (auto it = timers_.find(id); it != timers_.end()) {
    it->second->cancel();
    timers_.erase(it);
  }
}

void LiveFabric::learn_endpoint(const std::string& id, const std::string& endpoint) {
  if (!endpoint.empty()) directory_[id] = endpoint;
}

std::uint16_t LiveFabric::listen(const std::string& endpoint) {
  const HostPort hp = parse_endpoint(endpoint);
  tcp::resolver resolver(io_);
  const auto results = resolver.resolve(hp.host, std::to_string(hp.port));
  const tcp::endpoint ep = results.begin()->endpoint();
  acceptor_ = std::make_unique<tcp::acceptor>(io_);
  acceptor_->open(ep.protocol());
  acceptor_->set_option(tcp::acceptor::reuse_address(true));
  acceptor_->bind(ep);
  acceptor_->listen();
  accept_next();
  return acceptor_->local_endpoint().port();
}

void LiveFabric::accept_next() {
  auto c = std::make_shared<Conn>(io_);
  std::weak_ptr<bool> alive = alive_;
  acceptor_->async_accept(c->sock, [this, alive, c](const boost::system::error_code& ec) {
    if (alive.expired() || !*alive.lock()) return;
    if (ec) {
      if (ec != asio::error::operation_aborted) accept_next();
      return;
    }
    c->connected = true;
    c->sock.set_option(tcp::no_delay(true));
    all_.push_back(c);
    start_read(c);
    accept_next();
  });
}

std::shared_ptr<LiveFabric::Conn> LiveFabric::route_to(const std::string& to) {
  if (auto it = hints_.find(to); it != hints_.end()) {
    if (auto c = it->second.lock(); c && !c->closed) return c;
    hints_.erase(it);
  }
  if (auto it = dialled_.find(to); it != dialled_.end()) {
    if (!it->second->closed) return it->second;
    dialled_.erase(it);
  }
  if (auto it = directory_.find(to); it != directory_.end()) return dial(to, it->second);
  if (!gateway_.empty() && to != gateway_) return route_to(gateway_);
  return nullptr;
}

std::shared_ptr<LiveFabric::Conn> LiveFabric::dial(const std::string& to, const std::string& endpoint) {
  auto c = std::make_shared<Conn>(io_);
  c->dialled_id = to;
  dialled_[to] = c;
  all_.push_back(c);
  HostPort hp;
  try {
    hp = parse_endpoint(endpoint);
  } catch (const std::invalid_argument&) {
    asio::post(io_, [this, alive = std::weak_ptr<bool>(alive_), c] {
      if (!alive.expired() && *alive.lock()) close(c);
    });
    return c;
  }
  auto resolver = std::make_shared<tcp::resolver>(io_);
  std::weak_ptr<bool> alive = alive_;
  resolver->async_resolve(
      hp.host, std::to_string(hp.port),
      [this, alive, c, resolver](const boost::system::error_code& ec, tcp::resolver::results_type results) {
        if (alive.expired() || !*alive.lock()) return;
        if (ec || c->closed) return close(c);
        asio::async_connect(c->sock, results, [this, alive, c](const boost::system::error_code& ec2, const tcp::endpoint&) {
          if (alive.expired() || !*alive.lock()) return;
          if (ec2 || c->closed) return close(c);
          c->connected = true;
          c->sock.set_option(tcp::no_delay(true));
          start_read(c);
          flush(c);
        });
      });
  return c;
}

void LiveFabric::send(const std::string& from, const std::string& to, Envelope env) {
  Bytes frame = encode_frame(env);
  const auto job = job_of(env.body);
  record({now(), TraceEvent::Type::Send, from, to, std::string(env.kind()), job ? job->str() : std::string(), {},
          frame.size(), 0});
  auto c = route_to(to);
  if (!c) return fail_later(to, std::move(env), SendFailure::UnknownRecipient);
  c->out.push_back({std::move(frame), to, std::move(env)});
  flush(c);
}

void LiveFabric::flush(const std::shared_ptr<Conn>& c) {
  if (!c->connected || c->writing || c->closed || c->out.empty()) return;
  c->writing = true;
  std::weak_ptr<bool> alive = alive_;
  asio::async_write(c->sock, asio::buffer(c->out.front().frame),
                    [this, alive, c](const boost::system::error_code& ec, std::size_t) {
                      if (alive.expired() || !*alive.lock()) return;
                      c->writing = false;
                      if (c->closed) return;
                      if (ec) return close(c);
                      c->out.pop_front();
                      flush(c);
                    });
}

void LiveFabric::start_read(const std::shared_ptr<Conn>& c) {
  std::weak_ptr<bool> alive = alive_;
  c->sock.async_read_some(asio::buffer(c->buf), [this, alive, c](const boost::system::error_code& ec, std::size_t n) {
    if (alive.expired() || !*alive.lock()) return;
    if (ec) return close(c);
    c->reader.feed(std::span<const std::uint8_t>(c->buf.data(), n));
    try {
      while (auto env = c->reader.next()) {
        if (c->closed) return;
        hints_[env->sender] = c;
        const auto job = job_of(env->body);
        record({now(), TraceEvent::Type::Deliver, env->sender, host_ ? host_->id() : std::string(),
                std::string(env->kind()), job ? job->str() : std::string(), {}, 0, 0});
        if (host_) host_->on_message(*env);
      }
    } catch (const WireError& e) {
      record({now(), TraceEvent::Type::Fault, host_ ? host_->id() : std::string(), {}, "bad_frame", {}, e.what(), 0, 0});
      return close(c);
    }
    if (!c->closed) start_read(c);
  });
}

void LiveFabric::close(const std::shared_ptr<Conn>& c) {
  if (c->closed) return;
  c->closed = true;
  boost::system::error_code ec;
  c->sock.close(ec);
  if (!c->dialled_id.empty()) {
    if (auto it = dialled_.find(c->dialled_id); it != dialled_.end() && it->second == c) dialled_.erase(it);
  }
  std::erase_if(all_, [&](const std::weak_ptr<Conn>& w) { return w.expired() || w.lock() == c; });
  // A frame being written stays put until its handler runs.
  std::deque<Outgoing> pending;
  if (c->writing && !c->out.empty()) {
    pending.push_back({{}, c->out.front().to, c->out.front().env});
    for (auto it = c->out.begin() + 1; it != c->out.end(); ++it) pending.push_back(std::move(*it));
    c->out.erase(c->out.begin() + 1, c->out.end());
  } else {
    pending = std::move(c->out);
    c->out.clear();
  }
  for (auto& o : pending) fail_later(std::move(o.to), std::move(o.env), SendFailure::Unreachable);
}

void LiveFabric::fail_later(std::string to, Envelope env, SendFailure why) {
  std::weak_ptr<bool> alive = alive_;
  asio::post(io_, [this, alive, to = std::move(to), env = std::move(env), why] {
    if (alive.expired() || !*alive.lock()) return;
    const auto job = job_of(env.body);
    record({now(), TraceEvent::Type::Fail, env.sender, to, std::string(env.kind()), job ? job->str() : std::string(),
            std::string(to_string(why)), 0, 0});
    if (host_) host_->on_send_failed(to, env, why);
  });
}

}  // namespace offload
