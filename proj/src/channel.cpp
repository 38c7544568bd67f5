#include "wakearb/channel.hpp"

#include <algorithm>
#include <cctype>

#include "wakearb/errors.hpp"
#include "wakearb/rng.hpp"

namespace wakearb {

NetworkProfile NetworkProfile::wlan1() { return {"wlan1", 5.0, 1.0, 0.0, 0.0}; }
NetworkProfile NetworkProfile::wlan2() { return {"wlan2", 20.0, 10.0, 0.02, 0.0}; }
NetworkProfile NetworkProfile::wlan3() { return {"wlan3", 80.0, 40.0, 0.10, 0.0}; }

NetworkProfile NetworkProfile::by_name(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "wlan1") return wlan1();
  if (lower == "wlan2") return wlan2();
  if (lower == "wlan3") return wlan3();
  throw ArgumentError("unknown network profile '" + name + "'");
}

LinkFate link_fate(const NetworkProfile& profile, uint64_t seed, uint32_t from, uint32_t to,
                   uint64_t link_seq) {
  Rng rng(derive_seed(seed, 0x6c696e6bull /* link */, from, to, link_seq));
  LinkFate fate;
  fate.dropped = rng.uniform() < profile.drop_prob;
  double delay = profile.latency_mean_ms + profile.latency_jitter_ms * rng.gaussian();
  if (rng.uniform() < profile.reorder_prob)
    delay += 2.0 * profile.latency_jitter_ms + 0.5 * profile.latency_mean_ms;
  fate.delay_ms = std::max(delay, 0.01);
  return fate;
}

// ---- SimNetwork ------------------------------------------------------------

class SimNetwork::ActorRuntime final : public Runtime {
 public:
  ActorRuntime(SimNetwork& net, uint32_t id) : net_(net), id_(id) {}

  void send(uint32_t to, const std::vector<uint8_t>& frame) override {
    net_.push_send(id_, to, frame);
  }
  void set_timer(double delay_ms, int tag) override { net_.push_timer(id_, delay_ms, tag); }
  double now_ms() const override { return net_.now_ms_; }
  uint32_t self() const override { return id_; }

 private:
  SimNetwork& net_;
  uint32_t id_;
};

SimNetwork::SimNetwork(NetworkProfile profile, uint64_t seed)
    : profile_(std::move(profile)), seed_(seed) {}

void SimNetwork::add_actor(uint32_t id, Actor* actor) {
  if (started_) throw ProtocolError("cannot add actors after the network started");
  if (!actors_.emplace(id, actor).second)
    throw ProtocolError("duplicate actor id " + std::to_string(id));
}

void SimNetwork::push_send(uint32_t from, uint32_t to, const std::vector<uint8_t>& frame) {
  if (!actors_.count(to)) throw ProtocolError("send to unknown actor " + std::to_string(to));
  uint64_t n = link_seq_[{from, to}]++;
  LinkFate fate = link_fate(profile_, seed_, from, to, n);
  if (drop_filter_ && drop_filter_(from, to, frame)) fate.dropped = true;

  events_.push_back(NetEvent{now_ms_, from, to, fate.dropped, fate.delay_ms, frame});
  if (fate.dropped) return;

  Pending p;
  p.time_ms = now_ms_ + fate.delay_ms;
  p.order = order_++;
  p.kind = Pending::Kind::Deliver;
  p.actor_id = to;
  p.from = from;
  p.frame = frame;
  p.timer_tag = 0;
  queue_.push(std::move(p));
}

void SimNetwork::push_timer(uint32_t actor_id, double delay_ms, int tag) {
  Pending p;
  p.time_ms = now_ms_ + std::max(delay_ms, 0.0);
  p.order = order_++;
  p.kind = Pending::Kind::Timer;
  p.actor_id = actor_id;
  p.from = 0;
  p.timer_tag = tag;
  queue_.push(std::move(p));
}

void SimNetwork::run(double t_max_ms) {
  started_ = true;
  // actors start in ascending id order — part of the deterministic schedule
  for (auto& [id, actor] : actors_) {
    ActorRuntime rt(*this, id);
    actor->on_start(rt);
  }
  while (!queue_.empty()) {
    Pending p = queue_.top();
    queue_.pop();
    if (p.time_ms > t_max_ms) break;
    now_ms_ = std::max(now_ms_, p.time_ms);
    auto it = actors_.find(p.actor_id);
    if (it == actors_.end()) continue;
    ActorRuntime rt(*this, p.actor_id);
    if (p.kind == Pending::Kind::Deliver)
      it->second->on_message(rt, p.from, p.frame);
    else
      it->second->on_timer(rt, p.timer_tag);
  }
}

}  // namespace wakearb
