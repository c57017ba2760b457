#pragma once

#include "hybridfuse/live_session.hpp"

#include <atomic>
#include <functional>
#include <string>

namespace hybridfuse {

struct ServerOptions {
  int port{7300};               // 0 picks a free port
  int max_clients{0};           // stop after this many clients; 0 = forever
  std::size_t max_line{1 << 16};
};

// Loopback TCP front end for LiveSession. One client at a time; incoming
// lines and the flash schedule are serialized through a single queue so the
// state machine only ever sees one input at a time.
class LiveServer {
public:
  LiveServer(LiveSession session, ServerOptions options);
  ~LiveServer();

  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  // Binds 127.0.0.1 and returns the bound port. Throws IoError.
  int listen();

  // Accept loop; returns after stop() or max_clients clients.
  void run();

  // Safe to call from another thread.
  void stop();

  const LiveSession& session() const { return session_; }

private:
  void serve_client(int fd);
  TimestampUs now_us() const;

  LiveSession session_;
  ServerOptions options_;
  int listen_fd_{-1};
  std::atomic<bool> stopping_{false};
  std::atomic<int> client_fd_{-1};
  std::int64_t epoch_ns_{0};
};

}  // namespace hybridfuse
