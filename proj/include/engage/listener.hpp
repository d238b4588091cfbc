// Live event acquisition over a stream socket. Each client connection is
// one camera source; records are newline-delimited canonical events.

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "engage/core.hpp"
#include "engage/net.hpp"
#include "engage/queue.hpp"

namespace engage::ingest {

struct SourceMessage {
  enum class Kind { Opened, Event, Closed };
  Kind kind = Kind::Event;
  std::uint64_t connection = 0;
  DetectionEvent event;
};

/// Accepts producer connections and funnels their records into one ordered
/// queue. A malformed record gets an {"error": ...} reply line on its
/// connection and is dropped; a lost connection becomes a Closed message.
class EventListener {
 public:
  explicit EventListener(const net::Endpoint& endpoint, std::size_t queue_capacity = 65536);
  ~EventListener();
  EventListener(const EventListener&) = delete;
  EventListener& operator=(const EventListener&) = delete;

  std::uint16_t port() const { return listener_.port(); }

  /// Messages in arrival order; blocks when empty, nullopt once stopped and
  /// drained.
  BlockingQueue<SourceMessage>& messages() { return queue_; }

  /// Stops accepting, disconnects clients, and closes the queue once every
  /// reader has posted its Closed message.
  void stop();

  std::uint64_t rejected_records() const { return rejected_.load(); }
  std::uint64_t connections_accepted() const { return next_connection_.load(); }

 private:
  struct Client {
    net::Socket socket;
    std::thread reader;
  };

  void accept_loop();
  void read_loop(std::uint64_t id, Client* client);

  net::Listener listener_;
  BlockingQueue<SourceMessage> queue_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> next_connection_{0};
  std::atomic<std::uint64_t> rejected_{0};
  std::mutex clients_mu_;
  std::vector<std::unique_ptr<Client>> clients_;
  std::thread acceptor_;
  std::once_flag stop_once_;
};

}  // namespace engage::ingest
