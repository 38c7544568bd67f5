#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "wakearb/channel.hpp"

namespace wakearb {

// UDP loopback backend: one socket + one thread per actor, same Actor state
// machines as SimNetwork. The seeded per-(link, message-index) drop schedule
// is applied at the sender, so the delivered message sets — and therefore the
// decisions — match the simulated channel run for run. Latency and reordering
// are left to the real loopback path (timer durations are real milliseconds).
class SocketNetwork {
 public:
  SocketNetwork(NetworkProfile profile, uint64_t seed);
  ~SocketNetwork();

  SocketNetwork(const SocketNetwork&) = delete;
  SocketNetwork& operator=(const SocketNetwork&) = delete;

  void add_actor(uint32_t id, Actor* actor);

  // Actors run until every one of them reports finished() or t_max_ms of
  // real time elapses.
  void run(double t_max_ms = 10000.0);

  std::vector<NetEvent> events() const;

  using DropFilter = SimNetwork::DropFilter;
  void set_drop_filter(DropFilter f) { drop_filter_ = std::move(f); }

 private:
  struct Node;
  class NodeRuntime;

  void do_send(uint32_t from, uint32_t to, const std::vector<uint8_t>& frame);
  double elapsed_ms() const;

  NetworkProfile profile_;
  uint64_t seed_;
  std::map<uint32_t, Node*> nodes_;
  mutable std::mutex mu_;  // guards link_seq_ and events_
  std::map<std::pair<uint32_t, uint32_t>, uint64_t> link_seq_;
  std::vector<NetEvent> events_;
  DropFilter drop_filter_;
  long long start_ns_ = 0;
  bool started_ = false;
};

// An actor may additionally implement Finishing to tell the socket pump it
// no longer needs its thread. SimNetwork ignores this (its queue drains).
class Finishing {
 public:
  virtual ~Finishing() = default;
  virtual bool finished() const = 0;
};

}  // namespace wakearb
