#include "qmoney/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace qmoney::net {

using protocol::TransportError;

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(o.fd_, -1);
    buffer_ = std::move(o.buffer_);
  }
  return *this;
}

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

void Socket::set_read_timeout(int millis) {
  timeval tv{};
  tv.tv_sec = millis / 1000;
  tv.tv_usec = (millis % 1000) * 1000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

void Socket::write_line(const std::string& line) {
  std::string data = line;
  data += '\n';
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

bool Socket::read_line(std::string& line) {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    if (buffer_.size() > kMaxLineBytes) throw TransportError("line too long");
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n == 0) return false;
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw TransportError("read deadline exceeded");
      throw TransportError(std::string("recv: ") + std::strerror(errno));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void Socket::shutdown_both() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket connect_to(const std::string& host, std::uint16_t port, int read_timeout_ms) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError(std::string("resolve ") + host + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      s.set_read_timeout(read_timeout_ms);
      return s;
    }
  }
  throw TransportError("connect " + host + ":" + service + " failed");
}

std::string TcpSessionLink::exchange(const std::string& line) {
  socket_.write_line(line);
  std::string reply;
  if (!socket_.read_line(reply)) throw protocol::ProtocolAbort("bank closed the connection");
  return reply;
}

std::unique_ptr<protocol::SessionLink> TcpEndpoint::open_session() {
  return std::make_unique<TcpSessionLink>(connect_to(host_, port_));
}

TcpServer::TcpServer(protocol::BankService& service, std::uint16_t port, VerdictLog log, bool any_interface)
    : service_(&service), log_(std::move(log)) {
  listener_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!listener_.valid()) throw TransportError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(any_interface ? INADDR_ANY : INADDR_LOOPBACK);
  if (::bind(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw TransportError(std::string("bind: ") + std::strerror(errno));
  }
  if (::listen(listener_.fd(), 64) != 0) throw TransportError(std::string("listen: ") + std::strerror(errno));
  socklen_t len = sizeof addr;
  ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::serve() {
  while (!stopping_.load()) {
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      if (stopping_.load()) break;
      continue;
    }
    Socket client(fd);
    client.set_read_timeout(read_timeout_ms);
    {
      std::lock_guard lock(mu_);
      ++active_;
    }
    std::thread([this, c = std::move(client)]() mutable {
      handle(std::move(c));
      std::lock_guard lock(mu_);
      --active_;
      idle_.notify_all();
    }).detach();
  }
}

void TcpServer::start() {
  accept_thread_ = std::thread([this] { serve(); });
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown_both();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::unique_lock lock(mu_);
  idle_.wait(lock, [this] { return active_ == 0; });
}

void TcpServer::handle(Socket client) {
  protocol::BankSession session = service_->open(service_->next_index());
  try {
    std::string line;
    while (!session.done() && client.read_line(line)) {
      auto reply = service_->respond(session, line);
      if (!reply) break;
      client.write_line(*reply);
    }
  } catch (const TransportError&) {
  }
  ++served_;
  if (session.verdict() && session.coin_id() && log_) log_(*session.coin_id(), *session.verdict());
}

}  // namespace qmoney::net
