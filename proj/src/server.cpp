#include "engage/server.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <vector>

namespace engage::server {

namespace {

using Clock = std::chrono::steady_clock;

std::ofstream open_log(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot create " + path.string());
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_log(path);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

Json to_json(const ServerStats& s) {
  return Json{{"accepted", s.drops.accepted},
              {"below_theta", s.drops.below_theta},
              {"out_of_order", s.drops.out_of_order},
              {"late", s.drops.late},
              {"rejected_records", s.rejected_records},
              {"connections", s.connections},
              {"windows", s.windows},
              {"max_window_latency_ms",
               std::chrono::duration<double, std::milli>(s.max_window_latency).count()}};
}

Server::Server(ServerOptions options)
    : options_(std::move(options)),
      listener_((validate_params(options_.pipeline.params), options_.listen)),
      feed_listener_(options_.feed) {
  if (options_.persist_dir) {
    const std::filesystem::path dir(*options_.persist_dir);
    std::filesystem::create_directories(dir);
    events_out_ = open_log(dir / "events.jsonl");
    windows_out_ = open_log(dir / "windows.jsonl");
  }
}

Server::~Server() {
  listener_.stop();
  feed_queue_.close();
}

void Server::stop() { listener_.stop(); }

ServerStats Server::stats() const {
  std::lock_guard lock(stats_mu_);
  ServerStats s = stats_;
  s.rejected_records = listener_.rejected_records();
  s.connections = listener_.connections_accepted();
  return s;
}

void Server::check_stream(std::ofstream& out, const char* what) {
  if (!out) throw std::runtime_error(std::string("write failed: ") + what);
}

void Server::emit(const WindowAggregate& w) {
  const std::string line = format_window_line(w);
  if (windows_out_.is_open()) {
    windows_out_ << line << '\n';
    check_stream(windows_out_, "windows.jsonl");
  }
  feed_queue_.push(line);
  const auto latency = Clock::now() - trigger_time_;
  std::lock_guard lock(stats_mu_);
  ++stats_.windows;
  if (latency > stats_.max_window_latency) stats_.max_window_latency = latency;
}

void Server::publish_loop() {
  std::vector<net::Socket> subs;
  for (;;) {
    if (auto s = feed_listener_.accept(std::chrono::milliseconds(0))) {
      subs.push_back(std::move(*s));
      subscribers_ = subs.size();
    }
    auto line = feed_queue_.pop_for(std::chrono::milliseconds(10));
    if (!line) {
      if (feed_queue_.closed()) break;
      continue;
    }
    line->push_back('\n');
    std::erase_if(subs, [&](const net::Socket& s) { return !s.send_all(*line); });
    subscribers_ = subs.size();
    ++published_;
  }
  for (auto& s : subs) s.shutdown();
  subscribers_ = 0;
}

SessionReport Server::run() {
  std::thread publisher([this] { publish_loop(); });
  std::jthread stopper;
  struct Cleanup {
    Server* self;
    std::thread& publisher;
    ~Cleanup() {
      self->feed_queue_.close();
      publisher.join();
    }
  } cleanup{this, publisher};

  ingest::StreamMerger merger(options_.pipeline.params.window_ms,
                              options_.pipeline.params.theta);
  if (events_out_.is_open()) {
    merger.set_accepted_sink([this](const DetectionEvent& e) {
      events_out_ << format_event_line(e) << '\n';
      check_stream(events_out_, "events.jsonl");
    });
  }
  pipeline::Pipeline pipe(options_.pipeline);
  pipe.set_window_sink([this](const WindowAggregate& w) { emit(w); });

  std::map<std::uint64_t, ingest::SourceId> sources;
  std::size_t open = 0;
  bool any = false;
  auto idle_since = Clock::now();
  auto& queue = listener_.messages();

  for (;;) {
    auto msg = queue.pop_for(std::chrono::milliseconds(50));
    if (!msg) {
      if (queue.closed()) break;
      if (options_.idle_exit.count() > 0 && any && open == 0 && !stopper.joinable() &&
          Clock::now() - idle_since >= options_.idle_exit) {
        // stop() joins reader threads, which may be blocked on this queue.
        stopper = std::jthread([this] { listener_.stop(); });
      }
      continue;
    }
    trigger_time_ = Clock::now();
    switch (msg->kind) {
      case ingest::SourceMessage::Kind::Opened:
        sources[msg->connection] = merger.add_source();
        ++open;
        any = true;
        break;
      case ingest::SourceMessage::Kind::Event:
        pipe.process_all(merger.push(sources.at(msg->connection), msg->event));
        break;
      case ingest::SourceMessage::Kind::Closed:
        pipe.process_all(merger.close_source(sources.at(msg->connection)));
        --open;
        if (open == 0) idle_since = Clock::now();
        break;
    }
  }
  trigger_time_ = Clock::now();
  pipe.process_all(merger.finish());

  {
    std::lock_guard lock(stats_mu_);
    stats_.drops = merger.stats();
  }
  if (events_out_.is_open()) {
    events_out_.flush();
    check_stream(events_out_, "events.jsonl");
    windows_out_.flush();
    check_stream(windows_out_, "windows.jsonl");
  }
  if (options_.persist_dir) {
    write_file(std::filesystem::path(*options_.persist_dir) / "ingest.json",
               to_json(stats()).dump(2) + "\n");
  }
  if (pipe.session().windows().empty()) throw std::invalid_argument("no windows");
  SessionReport report = pipe.report();
  if (options_.persist_dir) {
    write_file(std::filesystem::path(*options_.persist_dir) / "report.json",
               format_report(report));
  }
  return report;
}

}  // namespace engage::server
