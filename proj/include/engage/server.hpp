// Live serving: producer connections -> merger -> smoothing -> scoring, with
// a read-only window feed and an on-disk session log.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "engage/ingest.hpp"
#include "engage/listener.hpp"
#include "engage/net.hpp"
#include "engage/pipeline.hpp"
#include "engage/queue.hpp"

namespace engage::server {

struct ServerOptions {
  net::Endpoint listen;
  net::Endpoint feed;
  pipeline::PipelineOptions pipeline;
  /// Writes events.jsonl, windows.jsonl, report.json and ingest.json here.
  std::optional<std::string> persist_dir;
  /// Shut down this long after the last producer disconnects (0 = never).
  std::chrono::milliseconds idle_exit{0};
};

struct ServerStats {
  ingest::DropStats drops;
  std::uint64_t rejected_records = 0;
  std::uint64_t connections = 0;
  std::uint64_t windows = 0;
  /// Wall time from receiving the record that closed a window to its
  /// aggregate being handed to the feed.
  std::chrono::nanoseconds max_window_latency{0};
};

Json to_json(const ServerStats& s);

class Server {
 public:
  /// Binds both endpoints. Throws net::NetError on bind failure and
  /// std::runtime_error when the persistence files cannot be created.
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t event_port() const { return listener_.port(); }
  std::uint16_t feed_port() const { return feed_listener_.port(); }
  std::size_t subscriber_count() const { return subscribers_.load(); }
  /// Window lines already handed to every connected subscriber.
  std::uint64_t published_windows() const { return published_.load(); }

  /// Processes until stop() or the idle timeout, then flushes pending
  /// windows, writes the report and returns it. Throws on "no windows" or
  /// on a persistence write failure.
  SessionReport run();

  /// Thread-safe; makes run() return.
  void stop();

  ServerStats stats() const;

 private:
  void publish_loop();
  void emit(const WindowAggregate& w);
  void check_stream(std::ofstream& out, const char* what);

  ServerOptions options_;
  ingest::EventListener listener_;
  net::Listener feed_listener_;
  BlockingQueue<std::string> feed_queue_{1024};
  std::atomic<std::size_t> subscribers_{0};
  std::atomic<std::uint64_t> published_{0};

  std::ofstream events_out_;
  std::ofstream windows_out_;

  mutable std::mutex stats_mu_;
  ServerStats stats_;
  std::chrono::steady_clock::time_point trigger_time_;
};

}  // namespace engage::server
