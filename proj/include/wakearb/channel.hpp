#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

namespace wakearb {

struct NetworkProfile {
  std::string name = "wlan1";
  double latency_mean_ms = 5.0;
  double latency_jitter_ms = 1.0;
  double drop_prob = 0.0;
  double reorder_prob = 0.0;

  static NetworkProfile wlan1();  //  5 ms /  1 ms / 0.00
  static NetworkProfile wlan2();  // 20 ms / 10 ms / 0.02
  static NetworkProfile wlan3();  // 80 ms / 40 ms / 0.10
  static NetworkProfile by_name(const std::string& name);
};

// The fate of one message on one link. Fates are a pure function of
// (seed, from, to, per-link message index) — never of time or call order —
// so the simulated channel and the loopback-socket backend draw identical
// drop schedules and reach identical decisions.
struct LinkFate {
  bool dropped = false;
  double delay_ms = 0.0;
};

LinkFate link_fate(const NetworkProfile& profile, uint64_t seed, uint32_t from, uint32_t to,
                   uint64_t link_seq);

// One observed channel event, kept for wire logs and trial records.
struct NetEvent {
  double time_ms = 0.0;  // send time
  uint32_t from = 0;
  uint32_t to = 0;
  bool dropped = false;
  double delay_ms = 0.0;
  std::vector<uint8_t> frame;
};

// ---- actor interfaces ------------------------------------------------------

class Runtime;

// Protocol logic lives in actors so the virtual-clock network and the
// loopback-socket network can drive the exact same state machines.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual void on_start(Runtime&) {}
  virtual void on_message(Runtime&, uint32_t from, const std::vector<uint8_t>& frame) {}
  virtual void on_timer(Runtime&, int tag) {}
};

class Runtime {
 public:
  virtual ~Runtime() = default;
  virtual void send(uint32_t to, const std::vector<uint8_t>& frame) = 0;
  virtual void set_timer(double delay_ms, int tag) = 0;  // single shot
  virtual double now_ms() const = 0;
  virtual uint32_t self() const = 0;
};

// ---- virtual-clock network -------------------------------------------------

// Deterministic single-threaded scheduler. Events are ordered by (time,
// insertion index), so identical inputs replay identical schedules.
class SimNetwork {
 public:
  SimNetwork(NetworkProfile profile, uint64_t seed);

  void add_actor(uint32_t id, Actor* actor);

  // run until the event queue drains or the clock passes t_max_ms
  void run(double t_max_ms = 60000.0);

  double now_ms() const { return now_ms_; }
  const std::vector<NetEvent>& events() const { return events_; }

  // drops every frame sent while active (adversarial schedules in tests);
  // predicate receives (from, to, frame)
  using DropFilter = std::function<bool(uint32_t, uint32_t, const std::vector<uint8_t>&)>;
  void set_drop_filter(DropFilter f) { drop_filter_ = std::move(f); }

 private:
  struct Pending {
    double time_ms;
    uint64_t order;
    enum class Kind { Deliver, Timer } kind;
    uint32_t actor_id;
    uint32_t from;
    std::vector<uint8_t> frame;
    int timer_tag;
  };
  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.time_ms != b.time_ms) return a.time_ms > b.time_ms;
      return a.order > b.order;
    }
  };

  class ActorRuntime;

  void push_send(uint32_t from, uint32_t to, const std::vector<uint8_t>& frame);
  void push_timer(uint32_t actor_id, double delay_ms, int tag);

  NetworkProfile profile_;
  uint64_t seed_;
  double now_ms_ = 0.0;
  uint64_t order_ = 0;
  std::map<uint32_t, Actor*> actors_;
  std::map<std::pair<uint32_t, uint32_t>, uint64_t> link_seq_;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  std::vector<NetEvent> events_;
  DropFilter drop_filter_;
  bool started_ = false;
};

}  // namespace wakearb
