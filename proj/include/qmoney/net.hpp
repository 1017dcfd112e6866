#pragma once

// Line-delimited TCP transport for the verification dialogue. One
// connection carries one session; each message is one LF-terminated line.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

#include "qmoney/protocol.hpp"

namespace qmoney::net {

/// Longest line either side will buffer before dropping the connection.
inline constexpr std::size_t kMaxLineBytes = 1 << 16;

/// Owns a socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)), buffer_(std::move(o.buffer_)) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }

  /// Sets a receive deadline in milliseconds (0 disables it).
  void set_read_timeout(int millis);
  /// Throws protocol::TransportError.
  void write_line(const std::string& line);
  /// Returns false on orderly EOF before a full line; throws TransportError
  /// on errors, timeouts and oversized lines.
  bool read_line(std::string& line);
  void shutdown_both() noexcept;

 private:
  int fd_ = -1;
  std::string buffer_;
};

/// Connects to host:port; throws protocol::TransportError.
Socket connect_to(const std::string& host, std::uint16_t port, int read_timeout_ms = 30000);

class TcpSessionLink final : public protocol::SessionLink {
 public:
  explicit TcpSessionLink(Socket socket) : socket_(std::move(socket)) {}
  std::string exchange(const std::string& line) override;

 private:
  Socket socket_;
};

class TcpEndpoint final : public protocol::BankEndpoint {
 public:
  TcpEndpoint(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {}
  std::unique_ptr<protocol::SessionLink> open_session() override;

 private:
  std::string host_;
  std::uint16_t port_;
};

/// Bank server: accepts connections and runs one BankSession per connection
/// on its own thread.
class TcpServer {
 public:
  using VerdictLog = std::function<void(money::CoinId, bool)>;

  /// Binds 127.0.0.1:port (port 0 picks an ephemeral port). Throws
  /// protocol::TransportError if binding fails.
  TcpServer(protocol::BankService& service, std::uint16_t port, VerdictLog log = {}, bool any_interface = false);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  /// Accept loop; returns after stop().
  void serve();
  /// Runs serve() on a background thread.
  void start();
  /// Stops accepting and waits for in-flight sessions to finish.
  void stop();

  std::uint64_t sessions_served() const noexcept { return served_.load(); }

  int read_timeout_ms = 30000;

 private:
  void handle(Socket client);

  protocol::BankService* service_;
  VerdictLog log_;
  Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> served_{0};
  std::thread accept_thread_;
  std::mutex mu_;
  std::condition_variable idle_;
  std::size_t active_ = 0;
};

}  // namespace qmoney::net
