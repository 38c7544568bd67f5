#include "wakearb/arbitration.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "wakearb/errors.hpp"
#include "wakearb/message.hpp"
#include "wakearb/rng.hpp"
#include "wakearb/socket_transport.hpp"

namespace wakearb {

namespace {

constexpr int kTimerDecide = 1;
constexpr int kTimerGiveUp = 2;
constexpr int kTimerProbeEnd = 3;

// ---- probe actors ----------------------------------------------------------

struct ProbeScratch {
  std::mutex mu;
  std::map<uint32_t, std::vector<double>> rtts;
};

class ProbeActor final : public Actor, public Finishing {
 public:
  ProbeActor(uint32_t id, std::vector<uint32_t> peers, int rounds, double window_ms,
             ProbeScratch& scratch)
      : id_(id), peers_(std::move(peers)), rounds_(rounds), window_ms_(window_ms),
        scratch_(scratch) {}

  void on_start(Runtime& rt) override {
    next_seq_ = first_seq(id_);
    for (int r = 0; r < rounds_; ++r) {
      for (uint32_t peer : peers_) {
        if (peer == id_) continue;
        Message m;
        m.sender_id = id_;
        m.seq = next_seq_++;
        m.body = MasterProbe{m.seq, rt.now_ms()};
        outstanding_.insert(m.seq);
        rt.send(peer, encode(m));
      }
    }
    expected_ = outstanding_.size();
    rt.set_timer(window_ms_, kTimerProbeEnd);
  }

  void on_message(Runtime& rt, uint32_t from, const std::vector<uint8_t>& frame) override {
    Message m;
    try {
      m = decode(frame);
    } catch (const CodecError&) {
      return;  // garbage on the wire is ignored, not fatal
    }
    const auto* probe = std::get_if<MasterProbe>(&m.body);
    if (!probe) return;

    if (outstanding_.count(probe->probe_seq)) {
      // echo of one of ours
      outstanding_.erase(probe->probe_seq);
      ++answered_;
      std::lock_guard<std::mutex> lock(scratch_.mu);
      scratch_.rtts[id_].push_back(rt.now_ms() - probe->timestamp_ms);
      return;
    }
    // a peer's probe: echo it back, body unchanged
    Message pong;
    pong.sender_id = id_;
    pong.seq = next_seq_++;
    pong.body = *probe;
    rt.send(from, encode(pong));
  }

  void on_timer(Runtime&, int tag) override {
    if (tag == kTimerProbeEnd) window_over_ = true;
  }

  bool finished() const override { return window_over_ && answered_ == expected_; }

 private:
  uint32_t id_;
  std::vector<uint32_t> peers_;
  int rounds_;
  double window_ms_;
  ProbeScratch& scratch_;
  uint32_t next_seq_ = 0;
  std::set<uint32_t> outstanding_;
  size_t expected_ = 0;
  size_t answered_ = 0;
  bool window_over_ = false;
};

// ---- arbitration actors ----------------------------------------------------

struct RoundScratch {
  std::mutex mu;
  std::optional<uint32_t> responder;
  std::optional<Decision> decision;
  std::map<uint32_t, double> calibrated;
  std::map<uint32_t, double> scores;
  std::map<uint32_t, bool> report_seen;
  std::vector<std::string> log;
};

class MasterActor final : public Actor, public Finishing {
 public:
  MasterActor(uint32_t id, std::vector<uint32_t> roster,
              std::optional<DeviceMeasurement> own, const CalibrationMatrix& matrix,
              const ArbitrationConfig& cfg, RoundScratch& scratch)
      : id_(id), roster_(std::move(roster)), own_(std::move(own)), matrix_(matrix),
        cfg_(cfg), scratch_(scratch) {}

  void on_start(Runtime& rt) override {
    next_seq_ = first_seq(id_);
    if (own_) {
      reports_[id_] = own_->report;
      variances_[id_] = own_->g_deg2;
    }
    if (all_reported()) {
      decide_and_broadcast(rt);
      return;
    }
    rt.set_timer(cfg_.timeout_ms, kTimerDecide);
  }

  void on_message(Runtime& rt, uint32_t from, const std::vector<uint8_t>& frame) override {
    Message m;
    try {
      m = decode(frame);
    } catch (const CodecError& e) {
      note(std::string("undecodable frame: ") + e.what());
      return;
    }
    const auto* wr = std::get_if<WakeReportMsg>(&m.body);
    if (!wr) return;
    if (decided_) {
      note("late report from device " + std::to_string(wr->report.device_id) +
           " discarded");
      return;
    }
    reports_[wr->report.device_id] = wr->report;
    variances_[wr->report.device_id] = wr->g_deg2;
    if (all_reported()) decide_and_broadcast(rt);
  }

  void on_timer(Runtime& rt, int tag) override {
    if (tag == kTimerDecide && !decided_) decide_and_broadcast(rt);
  }

  bool finished() const override { return decided_; }

 private:
  bool all_reported() const {
    for (uint32_t id : roster_)
      if (!reports_.count(id)) return false;
    return true;
  }

  void note(std::string s) {
    std::lock_guard<std::mutex> lock(scratch_.mu);
    scratch_.log.push_back(std::move(s));
  }

  void decide_and_broadcast(Runtime& rt) {
    decided_ = true;

    std::lock_guard<std::mutex> lock(scratch_.mu);
    for (uint32_t id : roster_) scratch_.report_seen[id] = reports_.count(id) != 0;

    if (reports_.empty()) return;  // no-reports failure, nothing to broadcast

    std::map<uint32_t, double> calibrated;
    for (const auto& [id, rep] : reports_)
      calibrated[id] = calibrated_energy(reports_, matrix_, id, &scratch_.log);

    Decision d;
    try {
      scratch_.scores = joint_scores(calibrated, variances_, cfg_.score);
      d = decide(scratch_.scores, roster_);
    } catch (const ArgumentError& e) {
      // all-zero energies with no usable variance: nobody responds
      scratch_.log.push_back(std::string("no decision: ") + e.what());
      return;
    }
    scratch_.calibrated = std::move(calibrated);
    scratch_.decision = d;

    for (uint32_t id : roster_) {
      bool flag = d.flags.count(id) && d.flags.at(id);
      if (id == id_) {
        if (flag) scratch_.responder = id_;  // master answers locally
        continue;
      }
      Message m;
      m.sender_id = id_;
      m.seq = next_seq_++;
      m.body = DecisionFlag{id, flag};
      rt.send(id, encode(m));
    }
  }

  uint32_t id_;
  std::vector<uint32_t> roster_;
  std::optional<DeviceMeasurement> own_;
  const CalibrationMatrix& matrix_;
  ArbitrationConfig cfg_;
  RoundScratch& scratch_;
  uint32_t next_seq_ = 0;
  std::map<uint32_t, WakeReport> reports_;
  std::map<uint32_t, double> variances_;
  bool decided_ = false;
};

class ReporterActor final : public Actor, public Finishing {
 public:
  ReporterActor(uint32_t id, uint32_t master, std::optional<DeviceMeasurement> own,
                double give_up_ms, RoundScratch& scratch)
      : id_(id), master_(master), own_(std::move(own)), give_up_ms_(give_up_ms),
        scratch_(scratch) {}

  void on_start(Runtime& rt) override {
    next_seq_ = first_seq(id_);
    if (own_) {
      Message m;
      m.sender_id = id_;
      m.seq = next_seq_++;
      m.body = WakeReportMsg{own_->report, own_->g_deg2};
      rt.send(master_, encode(m));
    }
    // fail-silent: no flag within 2x timeout means stay quiet
    rt.set_timer(give_up_ms_, kTimerGiveUp);
  }

  void on_message(Runtime&, uint32_t, const std::vector<uint8_t>& frame) override {
    if (done_) return;
    Message m;
    try {
      m = decode(frame);
    } catch (const CodecError&) {
      return;
    }
    const auto* flag = std::get_if<DecisionFlag>(&m.body);
    if (!flag || flag->device_id != id_) return;
    done_ = true;
    if (flag->respond) {
      std::lock_guard<std::mutex> lock(scratch_.mu);
      scratch_.responder = id_;
    }
  }

  void on_timer(Runtime&, int tag) override {
    if (tag == kTimerGiveUp) done_ = true;
  }

  bool finished() const override { return done_; }

 private:
  uint32_t id_;
  uint32_t master_;
  std::optional<DeviceMeasurement> own_;
  double give_up_ms_;
  RoundScratch& scratch_;
  uint32_t next_seq_ = 0;
  bool done_ = false;
};

}  // namespace

const char* to_string(RoundFailure f) {
  switch (f) {
    case RoundFailure::None: return "none";
    case RoundFailure::NoReports: return "no-reports";
    case RoundFailure::PartialDecision: return "partial-decision";
  }
  return "?";
}

std::map<uint32_t, std::vector<double>> measure_probe_rtts(
    const std::vector<uint32_t>& ids, const NetworkProfile& profile, uint64_t seed,
    int rounds, TransportKind kind) {
  if (ids.empty()) throw ArgumentError("measure_probe_rtts: no devices");
  if (rounds < 1) throw ArgumentError("measure_probe_rtts: rounds must be >= 1");
  if (ids.size() == 1) return {{ids[0], std::vector<double>(rounds, 0.0)}};

  const double window_ms =
      4.0 * (profile.latency_mean_ms + 4.0 * profile.latency_jitter_ms) + 50.0;

  std::map<uint32_t, std::vector<double>> stats;
  for (int attempt = 0; attempt < 4; ++attempt) {
    ProbeScratch scratch;
    std::vector<std::unique_ptr<ProbeActor>> actors;
    uint64_t attempt_seed = derive_seed(seed, 0x70726f62ull /* prob */, attempt);

    auto build = [&](auto& net) {
      for (uint32_t id : ids) {
        actors.push_back(
            std::make_unique<ProbeActor>(id, ids, rounds, window_ms, scratch));
        net.add_actor(id, actors.back().get());
      }
      net.run(window_ms * 4.0 + 1000.0);
    };
    if (kind == TransportKind::Sim) {
      SimNetwork net(profile, attempt_seed);
      build(net);
    } else {
      SocketNetwork net(profile, attempt_seed);
      build(net);
    }

    for (uint32_t id : ids) {
      auto& dst = stats[id];
      for (double r : scratch.rtts[id]) dst.push_back(r);
    }
    bool enough = true;
    for (uint32_t id : ids)
      if (stats[id].size() < 3) enough = false;
    if (enough) return stats;
  }

  for (uint32_t id : ids)
    if (stats[id].size() < 3)
      throw ProtocolError("master election failed: device " + std::to_string(id) +
                          " is unreachable (no probe answers)");
  return stats;
}

uint32_t select_master(const std::vector<uint32_t>& ids,
                       const std::map<uint32_t, std::vector<double>>& rtt_stats,
                       const MasterPolicy& policy) {
  if (ids.empty()) throw ArgumentError("select_master: no devices");
  std::vector<uint32_t> sorted = ids;
  std::sort(sorted.begin(), sorted.end());

  switch (policy.kind) {
    case MasterPolicy::Kind::Fixed: {
      if (std::find(sorted.begin(), sorted.end(), policy.fixed_id) == sorted.end())
        throw ArgumentError("select_master: fixed id " + std::to_string(policy.fixed_id) +
                            " is not a device");
      return policy.fixed_id;
    }
    case MasterPolicy::Kind::Random: {
      Rng rng(derive_seed(policy.seed, 0x6d617374ull /* mast */));
      return sorted[rng.integer(sorted.size())];
    }
    case MasterPolicy::Kind::NetworkQuality: {
      uint32_t best = 0;
      double best_mean = 0.0;
      bool first = true;
      for (uint32_t id : sorted) {
        auto it = rtt_stats.find(id);
        if (it == rtt_stats.end() || it->second.size() < 3)
          throw ArgumentError("select_master: need >= 3 RTT samples for device " +
                              std::to_string(id));
        double mean = 0.0;
        for (double r : it->second) mean += r;
        mean /= static_cast<double>(it->second.size());
        if (first || mean < best_mean) {  // strict <: ties stay with lowest id
          best = id;
          best_mean = mean;
          first = false;
        }
      }
      return best;
    }
  }
  throw ArgumentError("select_master: bad policy");
}

RoundOutcome arbitration_round(const std::map<uint32_t, DeviceMeasurement>& measurements,
                               const std::vector<uint32_t>& roster, uint32_t master_id,
                               const CalibrationMatrix& matrix,
                               const NetworkProfile& profile, const ArbitrationConfig& cfg,
                               uint64_t seed, TransportKind kind,
                               const SimNetwork::DropFilter& drop_filter) {
  if (roster.empty()) throw ArgumentError("arbitration_round: empty roster");
  if (std::find(roster.begin(), roster.end(), master_id) == roster.end())
    throw ArgumentError("arbitration_round: master is not in the roster");
  for (const auto& [id, m] : measurements) {
    if (std::find(roster.begin(), roster.end(), id) == roster.end())
      throw ArgumentError("arbitration_round: measurement from unknown device " +
                          std::to_string(id));
    if (m.report.device_id != id)
      throw ArgumentError("arbitration_round: measurement id mismatch");
  }
  if (!(cfg.timeout_ms > 0.0)) throw ArgumentError("arbitration_round: bad timeout");

  RoundScratch scratch;
  auto own_of = [&](uint32_t id) -> std::optional<DeviceMeasurement> {
    auto it = measurements.find(id);
    if (it == measurements.end()) return std::nullopt;
    return it->second;
  };

  MasterActor master(master_id, roster, own_of(master_id), matrix, cfg, scratch);
  std::vector<std::unique_ptr<ReporterActor>> reporters;

  RoundOutcome out;
  auto build_and_run = [&](auto& net) {
    if (drop_filter) net.set_drop_filter(drop_filter);
    net.add_actor(master_id, &master);
    for (uint32_t id : roster) {
      if (id == master_id) continue;
      reporters.push_back(std::make_unique<ReporterActor>(id, master_id, own_of(id),
                                                          2.0 * cfg.timeout_ms, scratch));
      net.add_actor(id, reporters.back().get());
    }
    net.run(2.0 * cfg.timeout_ms + 4.0 * profile.latency_mean_ms +
            8.0 * profile.latency_jitter_ms + 250.0);
    out.events = net.events();
  };

  if (kind == TransportKind::Sim) {
    SimNetwork net(profile, seed);
    build_and_run(net);
  } else {
    SocketNetwork net(profile, seed);
    build_and_run(net);
  }

  out.decision = scratch.decision;
  out.responder = scratch.responder;
  out.calibrated = scratch.calibrated;
  out.scores = scratch.scores;
  out.report_seen = scratch.report_seen;
  out.log = scratch.log;
  if (!scratch.decision.has_value())
    out.failure = RoundFailure::NoReports;
  else if (!scratch.responder.has_value())
    out.failure = RoundFailure::PartialDecision;
  else
    out.failure = RoundFailure::None;
  return out;
}

}  // namespace wakearb
