#include "hybridfuse/live_server.hpp"

#include "hybridfuse/errors.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

namespace hybridfuse {

namespace {

std::int64_t steady_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

// Items produced by the socket reader; an empty optional means the peer left.
struct InputQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::optional<std::string>> items;

  void push(std::optional<std::string> item) {
    {
      std::lock_guard lock(mu);
      items.push_back(std::move(item));
    }
    cv.notify_one();
  }
};

}  // namespace

LiveServer::LiveServer(LiveSession session, ServerOptions options)
    : session_(std::move(session)), options_(options), epoch_ns_(steady_ns()) {}

LiveServer::~LiveServer() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

TimestampUs LiveServer::now_us() const { return (steady_ns() - epoch_ns_) / 1000; }

int LiveServer::listen() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError("socket() failed");
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw IoError("cannot bind 127.0.0.1:" + std::to_string(options_.port) + ": " + std::strerror(errno));
  }
  if (::listen(listen_fd_, 1) != 0) throw IoError("listen() failed");
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

void LiveServer::stop() {
  stopping_ = true;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  const int c = client_fd_.load();
  if (c >= 0) ::shutdown(c, SHUT_RDWR);
}

void LiveServer::run() {
  if (listen_fd_ < 0) listen();
  int served = 0;
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      continue;
    }
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    client_fd_ = fd;
    serve_client(fd);
    client_fd_ = -1;
    ::close(fd);
    if (options_.max_clients > 0 && ++served >= options_.max_clients) break;
  }
}

void LiveServer::serve_client(int fd) {
  InputQueue queue;
  const std::size_t max_line = options_.max_line;
  std::thread reader([&queue, fd, max_line] {
    std::string buffer;
    char chunk[4096];
    while (true) {
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buffer.erase(0, nl + 1);
        if (!line.empty()) queue.push(std::move(line));
      }
      if (buffer.size() > max_line) {
        queue.push(std::string("\x01oversize"));
        break;
      }
    }
    queue.push(std::nullopt);
  });

  bool open = true;
  auto deliver = [&](const LiveSession::Reply& reply) {
    std::string out;
    for (const auto& m : reply.messages) out += m + '\n';
    if (!out.empty() && !send_all(fd, out)) open = false;
    if (reply.close) {
      open = false;
      ::shutdown(fd, SHUT_RDWR);
    }
  };

  while (open && !stopping_) {
    std::optional<std::optional<std::string>> item;
    {
      std::unique_lock lock(queue.mu);
      const auto deadline = session_.next_deadline();
      auto ready = [&] { return !queue.items.empty() || stopping_.load(); };
      if (deadline) {
        const auto wait = std::chrono::microseconds(std::max<TimestampUs>(0, *deadline - now_us()));
        queue.cv.wait_for(lock, wait, ready);
      } else {
        queue.cv.wait_for(lock, std::chrono::milliseconds(200), ready);
      }
      if (!queue.items.empty()) {
        item = std::move(queue.items.front());
        queue.items.pop_front();
      }
    }
    if (!item) {
      deliver(session_.tick(now_us()));
      continue;
    }
    if (!*item) {
      session_.disconnect();
      open = false;
      break;
    }
    if (**item == "\x01oversize") {
      LiveSession::Reply r;
      r.messages.push_back(R"({"type":"error","t_us":0,"code":"bad-message","detail":"line too long"})");
      r.close = true;
      session_.disconnect();
      deliver(r);
      break;
    }
    deliver(session_.handle_line(**item, now_us()));
  }
  if (session_.phase() != LivePhase::Idle) session_.disconnect();
  ::shutdown(fd, SHUT_RDWR);
  reader.join();
}

}  // namespace hybridfuse
