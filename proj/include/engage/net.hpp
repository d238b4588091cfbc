// Thin RAII wrappers over POSIX stream sockets. Line-oriented only: every
// protocol in this project is newline-delimited JSON.

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace engage::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Accepts "host:port", ":port" or "port". Port 0 asks for an ephemeral port.
Endpoint parse_endpoint(std::string_view text);
std::string to_string(const Endpoint& ep);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  /// Writes everything or returns false (peer gone).
  bool send_all(std::string_view data) const;
  /// Unblocks any thread sitting in a read on this socket.
  void shutdown() const;
  void close();

 private:
  int fd_ = -1;
};

Socket connect_to(const Endpoint& ep);

class Listener {
 public:
  explicit Listener(const Endpoint& ep);

  std::uint16_t port() const { return port_; }
  /// Waits up to timeout for a connection.
  std::optional<Socket> accept(std::chrono::milliseconds timeout);
  void close() { socket_.close(); }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// Buffered newline splitter over a socket.
class LineReader {
 public:
  explicit LineReader(const Socket& socket) : fd_(socket.fd()) {}

  /// Next line without its terminator; nullopt on EOF or error. A final
  /// unterminated fragment is returned as a line.
  std::optional<std::string> next_line();

 private:
  int fd_;
  std::string buffer_;
  std::size_t scan_from_ = 0;
  bool eof_ = false;
};

}  // namespace engage::net
