#include "wakearb/socket_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <thread>

#include "wakearb/errors.hpp"

namespace wakearb {

namespace {

long long now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

struct SocketNetwork::Node {
  uint32_t id = 0;
  Actor* actor = nullptr;
  int fd = -1;
  uint16_t port = 0;
  std::vector<std::pair<double, int>> timers;  // (deadline ms, tag)
  std::thread thread;
};

class SocketNetwork::NodeRuntime final : public Runtime {
 public:
  NodeRuntime(SocketNetwork& net, Node& node) : net_(net), node_(node) {}

  void send(uint32_t to, const std::vector<uint8_t>& frame) override {
    net_.do_send(node_.id, to, frame);
  }
  void set_timer(double delay_ms, int tag) override {
    node_.timers.emplace_back(net_.elapsed_ms() + std::max(delay_ms, 0.0), tag);
  }
  double now_ms() const override { return net_.elapsed_ms(); }
  uint32_t self() const override { return node_.id; }

 private:
  SocketNetwork& net_;
  Node& node_;
};

SocketNetwork::SocketNetwork(NetworkProfile profile, uint64_t seed)
    : profile_(std::move(profile)), seed_(seed) {}

SocketNetwork::~SocketNetwork() {
  for (auto& [id, node] : nodes_) {
    if (node->thread.joinable()) node->thread.join();
    if (node->fd >= 0) ::close(node->fd);
    delete node;
  }
}

void SocketNetwork::add_actor(uint32_t id, Actor* actor) {
  if (started_) throw ProtocolError("cannot add actors after the network started");
  if (nodes_.count(id)) throw ProtocolError("duplicate actor id " + std::to_string(id));

  auto* node = new Node;
  node->id = id;
  node->actor = actor;
  node->fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (node->fd < 0) {
    delete node;
    throw ProtocolError("socket() failed");
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;  // ephemeral
  if (::bind(node->fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(node->fd);
    delete node;
    throw ProtocolError("bind() failed");
  }
  socklen_t len = sizeof addr;
  if (::getsockname(node->fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(node->fd);
    delete node;
    throw ProtocolError("getsockname() failed");
  }
  node->port = ntohs(addr.sin_port);
  nodes_[id] = node;
}

double SocketNetwork::elapsed_ms() const {
  return static_cast<double>(now_ns() - start_ns_) / 1e6;
}

void SocketNetwork::do_send(uint32_t from, uint32_t to, const std::vector<uint8_t>& frame) {
  auto it = nodes_.find(to);
  if (it == nodes_.end()) throw ProtocolError("send to unknown actor " + std::to_string(to));

  bool dropped;
  double stamp;
  {
    std::lock_guard<std::mutex> lock(mu_);
    uint64_t n = link_seq_[{from, to}]++;
    LinkFate fate = link_fate(profile_, seed_, from, to, n);
    dropped = fate.dropped;
    if (drop_filter_ && drop_filter_(from, to, frame)) dropped = true;
    stamp = elapsed_ms();
    events_.push_back(NetEvent{stamp, from, to, dropped, 0.0, frame});
  }
  if (dropped) return;

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(it->second->port);
  // sender id travels in the frame itself (the envelope), no extra header
  ::sendto(nodes_.at(from)->fd, frame.data(), frame.size(), 0,
           reinterpret_cast<sockaddr*>(&addr), sizeof addr);
}

std::vector<NetEvent> SocketNetwork::events() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_;
}

void SocketNetwork::run(double t_max_ms) {
  started_ = true;
  start_ns_ = now_ns();

  // A node that reports finished() must keep draining its socket anyway:
  // peers may still depend on its replies (probe echoes, energy reports).
  // So threads only exit once every Finishing actor is done.
  int finishing_total = 0;
  for (auto& [id, node] : nodes_)
    if (dynamic_cast<Finishing*>(node->actor)) ++finishing_total;
  std::atomic<int> finished_count{0};

  for (auto& [id, nptr] : nodes_) {
    Node* node = nptr;
    node->thread = std::thread([this, node, t_max_ms, finishing_total, &finished_count] {
      NodeRuntime rt(*this, *node);
      node->actor->on_start(rt);
      auto* fin = dynamic_cast<Finishing*>(node->actor);
      bool counted = false;

      std::vector<uint8_t> buf(2048);
      while (elapsed_ms() < t_max_ms) {
        if (fin && !counted && fin->finished()) {
          counted = true;
          finished_count.fetch_add(1);
        }
        if (finishing_total > 0 && finished_count.load() >= finishing_total) break;

        // nearest timer deadline bounds the poll
        double next = t_max_ms;
        for (auto& [deadline, tag] : node->timers) next = std::min(next, deadline);
        double wait = std::min(next - elapsed_ms(), 20.0);

        if (wait > 0.0) {
          pollfd pfd{node->fd, POLLIN, 0};
          ::poll(&pfd, 1, static_cast<int>(std::max(1.0, wait)));
        }

        // deliver due timers
        double now = elapsed_ms();
        for (size_t i = 0; i < node->timers.size();) {
          if (node->timers[i].first <= now) {
            int tag = node->timers[i].second;
            node->timers.erase(node->timers.begin() + static_cast<long>(i));
            node->actor->on_timer(rt, tag);
          } else {
            ++i;
          }
        }

        // drain the socket
        for (;;) {
          ssize_t n = ::recv(node->fd, buf.data(), buf.size(), MSG_DONTWAIT);
          if (n <= 0) break;
          std::vector<uint8_t> frame(buf.begin(), buf.begin() + n);
          // sender comes from the envelope; peek at bytes 5..8 (big-endian)
          uint32_t from = 0;
          if (n >= 9)
            from = (static_cast<uint32_t>(frame[5]) << 24) |
                   (static_cast<uint32_t>(frame[6]) << 16) |
                   (static_cast<uint32_t>(frame[7]) << 8) | static_cast<uint32_t>(frame[8]);
          node->actor->on_message(rt, from, frame);
        }
      }
    });
  }

  for (auto& [id, node] : nodes_)
    if (node->thread.joinable()) node->thread.join();
}

}  // namespace wakearb
