#include "engage/listener.hpp"

#include "engage/serialization.hpp"

namespace engage::ingest {

EventListener::EventListener(const net::Endpoint& endpoint, std::size_t queue_capacity)
    : listener_(endpoint), queue_(queue_capacity) {
  acceptor_ = std::thread([this] { accept_loop(); });
}

EventListener::~EventListener() { stop(); }

void EventListener::accept_loop() {
  while (!stopping_.load()) {
    auto socket = listener_.accept(std::chrono::milliseconds(50));
    if (!socket) continue;
    std::lock_guard lock(clients_mu_);
    if (stopping_.load()) break;
    const auto id = next_connection_.fetch_add(1);
    auto client = std::make_unique<Client>();
    client->socket = std::move(*socket);
    // Opened is posted before the reader starts so it precedes every event.
    queue_.push({SourceMessage::Kind::Opened, id, {}});
    Client* raw = client.get();
    client->reader = std::thread([this, id, raw] { read_loop(id, raw); });
    clients_.push_back(std::move(client));
  }
}

void EventListener::read_loop(std::uint64_t id, Client* client) {
  net::LineReader reader(client->socket);
  std::uint64_t line_no = 0;
  while (auto line = reader.next_line()) {
    ++line_no;
    if (line->find_first_not_of(" \t") == std::string::npos) continue;
    try {
      DetectionEvent e = parse_event_line(*line);
      if (!queue_.push({SourceMessage::Kind::Event, id, e})) break;
    } catch (const std::exception& err) {
      rejected_.fetch_add(1);
      Json reply;
      reply["error"] = err.what();
      reply["line"] = line_no;
      client->socket.send_all(reply.dump() + "\n");
    }
  }
  queue_.push({SourceMessage::Kind::Closed, id, {}});
}

void EventListener::stop() {
  std::call_once(stop_once_, [this] {
    stopping_.store(true);
    if (acceptor_.joinable()) acceptor_.join();
    listener_.close();
    std::vector<std::unique_ptr<Client>> clients;
    {
      std::lock_guard lock(clients_mu_);
      clients.swap(clients_);
    }
    for (auto& c : clients) c->socket.shutdown();
    for (auto& c : clients) {
      if (c->reader.joinable()) c->reader.join();
    }
    queue_.close();
  });
}

}  // namespace engage::ingest
