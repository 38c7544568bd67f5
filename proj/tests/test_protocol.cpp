#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "wakearb/arbitration.hpp"
#include "wakearb/channel.hpp"
#include "wakearb/errors.hpp"
#include "wakearb/message.hpp"
#include "wakearb/rng.hpp"
#include "wakearb/scoring.hpp"

using namespace wakearb;

namespace {

Message make(uint32_t sender, uint32_t seq, MessageBody body) {
  Message m;
  m.sender_id = sender;
  m.seq = seq;
  m.body = std::move(body);
  return m;
}

const double kNan = std::nan("");
const double kInf = 1.0 / 0.0;
const double kDenormal = 5e-324;

}  // namespace

TEST_CASE("every message variant survives the wire byte-for-byte") {
  std::vector<Message> probes = {
      make(1, first_seq(1), WakeReportMsg{WakeReport{1, 0.0, -0.0}, kNan}),
      make(2, 7, WakeReportMsg{WakeReport{2, kInf, -kInf}, kDenormal}),
      make(3, 0, CalibCmd{CalibAction::Play, 9}),
      make(3, 1, CalibCmd{CalibAction::ReportEnergy, 4000}),
      make(4, 0xffffffffu, EnergyReply{4, 6.02214076e23}),
      make(5, 42, HandshakeAck{0xdeadbeefu}),
      make(6, 43, DecisionFlag{6, true}),
      make(7, 44, DecisionFlag{7, false}),
      make(8, 45, MasterProbe{123, 0.1 + 0.2}),
  };
  for (const auto& m : probes) {
    auto frame = encode(m);
    Message back = decode(frame);
    CHECK(same_message(m, back));
    CHECK(encode(back) == frame);
  }
}

TEST_CASE("random round trips") {
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    Message m;
    m.sender_id = static_cast<uint32_t>(rng.integer(4000)) + 1;
    m.seq = first_seq(m.sender_id) + static_cast<uint32_t>(rng.integer(1000));
    switch (rng.integer(6)) {
      case 0:
        m.body = WakeReportMsg{
            WakeReport{m.sender_id, rng.uniform() * 1e6, rng.uniform()}, rng.gaussian()};
        break;
      case 1:
        m.body = CalibCmd{static_cast<CalibAction>(rng.integer(3)),
                          static_cast<uint32_t>(rng.integer(4000))};
        break;
      case 2: m.body = EnergyReply{m.sender_id, rng.gaussian() * 1e-9}; break;
      case 3: m.body = HandshakeAck{static_cast<uint32_t>(rng.integer(1 << 30))}; break;
      case 4: m.body = DecisionFlag{m.sender_id, rng.uniform() < 0.5}; break;
      default: m.body = MasterProbe{static_cast<uint32_t>(rng.integer(1 << 20)),
                                    rng.uniform() * 1e5};
    }
    CHECK(same_message(m, decode(encode(m))));
  }
}

TEST_CASE("the exact bytes of a handshake ack are pinned") {
  Message m = make(2, (2u << 20) | 1u, HandshakeAck{7});
  std::vector<uint8_t> want = {
      0x00, 0x00, 0x00, 0x0D,  // payload length 13
      0x04,                    // tag: handshake ack
      0x00, 0x00, 0x00, 0x02,  // sender
      0x00, 0x20, 0x00, 0x01,  // seq = first_seq(2) + 1
      0x00, 0x00, 0x00, 0x07,  // acked seq
  };
  CHECK(encode(m) == want);

  // and an energy value rides as big-endian IEEE-754
  auto frame = encode(make(1, 0, EnergyReply{1, 1.0}));
  std::vector<uint8_t> tail(frame.end() - 8, frame.end());
  CHECK(tail == std::vector<uint8_t>{0x3F, 0xF0, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("malformed frames are rejected") {
  auto ack = encode(make(2, 5, HandshakeAck{7}));

  CHECK_THROWS_AS(decode(std::vector<uint8_t>{0x00, 0x00, 0x00}), CodecError);

  auto truncated = ack;
  truncated.pop_back();
  CHECK_THROWS_AS(decode(truncated), CodecError);

  auto trailing = ack;
  trailing.push_back(0x00);
  CHECK_THROWS_AS(decode(trailing), CodecError);

  for (uint8_t tag : {uint8_t{0}, uint8_t{7}, uint8_t{250}}) {
    auto bad = ack;
    bad[4] = tag;
    CHECK_THROWS_AS(decode(bad), CodecError);
  }

  // tag claims a longer body than the frame carries
  auto short_body = ack;
  short_body[4] = 3;  // an energy reply needs 4 + 8 body bytes, we have 4
  CHECK_THROWS_AS(decode(short_body), CodecError);

  // tag claims a shorter body than the frame carries
  auto flag = encode(make(6, 1, DecisionFlag{6, true}));
  auto long_body = flag;
  long_body[4] = 4;  // a handshake ack leaves one byte unconsumed
  CHECK_THROWS_AS(decode(long_body), CodecError);

  auto cmd = encode(make(3, 0, CalibCmd{CalibAction::Stop, 1}));
  auto bad_action = cmd;
  bad_action[13] = 3;
  CHECK_THROWS_AS(decode(bad_action), CodecError);

  auto bad_respond = flag;
  bad_respond[17] = 2;
  CHECK_THROWS_AS(decode(bad_respond), CodecError);

  // payload shorter than the envelope
  std::vector<uint8_t> stub = {0x00, 0x00, 0x00, 0x05, 1, 2, 3, 4, 5};
  CHECK_THROWS_AS(decode(stub), CodecError);
}

TEST_CASE("describe and variant names") {
  Message m = make(2, 9, HandshakeAck{7});
  CHECK(describe(m) == "from=2 seq=9 HandshakeAck{ack=7}");
  CHECK(std::string(variant_name(m)) == "HandshakeAck");
  Message d = make(4, 1, DecisionFlag{4, true});
  CHECK(describe(d) == "from=4 seq=1 DecisionFlag{device=4 respond=true}");
}

TEST_CASE("sequence numbers are namespaced per sender") {
  CHECK(first_seq(1) == (1u << 20));
  CHECK(first_seq(4000) == (4000u << 20));
  // a device can send a million messages before touching the next namespace
  CHECK(first_seq(2) - first_seq(1) == (1u << 20));
}

TEST_CASE("link fates are a pure function of their inputs") {
  NetworkProfile p = NetworkProfile::by_name("wlan3");
  for (int i = 0; i < 50; ++i) {
    LinkFate a = link_fate(p, 11, 1, 2, static_cast<uint64_t>(i));
    LinkFate b = link_fate(p, 11, 1, 2, static_cast<uint64_t>(i));
    CHECK(a.dropped == b.dropped);
    CHECK(a.delay_ms == b.delay_ms);
  }
  // direction and sequence matter
  CHECK(link_fate(p, 11, 1, 2, 0).delay_ms != link_fate(p, 11, 2, 1, 0).delay_ms);
}

TEST_CASE("profiles behave like their numbers") {
  NetworkProfile p1 = NetworkProfile::wlan1();
  NetworkProfile p3 = NetworkProfile::wlan3();

  int dropped1 = 0, dropped3 = 0, monotone_violations = 0;
  double delay_sum = 0.0;
  NetworkProfile p2 = NetworkProfile::wlan2();
  for (uint64_t i = 0; i < 10000; ++i) {
    LinkFate f1 = link_fate(p1, 5, 1, 2, i);
    LinkFate f2 = link_fate(p2, 5, 1, 2, i);
    LinkFate f3 = link_fate(p3, 5, 1, 2, i);
    dropped1 += f1.dropped ? 1 : 0;
    dropped3 += f3.dropped ? 1 : 0;
    // the same uniform draw decides every profile's drop, so losing a frame
    // on a better network implies losing it on a worse one
    if (f2.dropped && !f3.dropped) ++monotone_violations;
    CHECK(f1.delay_ms >= 0.01);
    CHECK(f3.delay_ms >= 0.01);
    delay_sum += f1.delay_ms;
  }
  CHECK(dropped1 == 0);
  CHECK(dropped3 > 900);
  CHECK(dropped3 < 1100);
  CHECK(monotone_violations == 0);
  CHECK(delay_sum / 10000.0 == doctest::Approx(5.0).epsilon(0.02));

  CHECK(NetworkProfile::by_name("WLAN2").latency_mean_ms == 20.0);
  CHECK_THROWS_AS(NetworkProfile::by_name("lte"), ArgumentError);
}

namespace {

// minimal ping-pong pair for exercising the scheduler directly
class Pinger final : public Actor {
 public:
  explicit Pinger(uint32_t peer) : peer_(peer) {}
  void on_start(Runtime& rt) override {
    rt.send(peer_, encode(make(rt.self(), first_seq(rt.self()), HandshakeAck{1})));
  }
  void on_message(Runtime&, uint32_t, const std::vector<uint8_t>&) override { ++got_; }
  int got() const { return got_; }

 private:
  uint32_t peer_;
  int got_ = 0;
};

class Echoer final : public Actor {
 public:
  void on_message(Runtime& rt, uint32_t from, const std::vector<uint8_t>& frame) override {
    rt.send(from, frame);
  }
};

}  // namespace

TEST_CASE("the virtual-clock network replays identically") {
  auto run_once = [] {
    SimNetwork net(NetworkProfile::by_name("wlan2"), 31);
    Pinger a(2);
    Echoer b;
    net.add_actor(1, &a);
    net.add_actor(2, &b);
    net.run();
    return net.events();
  };
  auto e1 = run_once();
  auto e2 = run_once();
  REQUIRE_FALSE(e1.empty());
  REQUIRE(e1.size() == e2.size());
  for (size_t i = 0; i < e1.size(); ++i) {
    CHECK(e1[i].time_ms == e2[i].time_ms);
    CHECK(e1[i].from == e2[i].from);
    CHECK(e1[i].dropped == e2[i].dropped);
    CHECK(e1[i].delay_ms == e2[i].delay_ms);
    CHECK(e1[i].frame == e2[i].frame);
  }
}

TEST_CASE("the drop filter silences chosen frames") {
  SimNetwork net(NetworkProfile::by_name("wlan1"), 1);
  Pinger a(2);
  Echoer b;
  net.add_actor(1, &a);
  net.add_actor(2, &b);
  net.set_drop_filter([](uint32_t, uint32_t to, const std::vector<uint8_t>&) {
    return to == 1;  // the echo never makes it back
  });
  net.run();
  CHECK(a.got() == 0);
  REQUIRE(net.events().size() == 2);
  CHECK_FALSE(net.events()[0].dropped);
  CHECK(net.events()[1].dropped);
}

TEST_CASE("probe round trips populate every device") {
  auto stats = measure_probe_rtts({1, 2, 3}, NetworkProfile::by_name("wlan1"), 8);
  REQUIRE(stats.size() == 3);
  for (const auto& [id, samples] : stats) {
    CHECK(samples.size() >= 3);
    for (double rtt : samples) {
      CHECK(rtt > 0.0);
      CHECK(rtt < 60.0);  // two legs of a 5 +- 1 ms link
    }
  }
  // a lone device needs no network at all
  auto solo = measure_probe_rtts({9}, NetworkProfile::by_name("wlan3"), 8);
  REQUIRE(solo.at(9).size() == 3);

  NetworkProfile dead = NetworkProfile::by_name("wlan1");
  dead.drop_prob = 1.0;
  CHECK_THROWS_AS(measure_probe_rtts({1, 2}, dead, 8), ProtocolError);
}

TEST_CASE("master selection policies") {
  std::map<uint32_t, std::vector<double>> rtts = {
      {1, {5.0, 5.5, 4.5}},
      {2, {20.0, 21.0, 19.0}},
      {3, {5.0, 5.5, 4.5}},
  };
  MasterPolicy quality;
  CHECK(select_master({1, 2, 3}, rtts, quality) == 1);  // fastest, tie to lowest id

  rtts[1] = {30.0, 30.0, 30.0};
  CHECK(select_master({1, 2, 3}, rtts, quality) == 3);

  rtts[2] = {20.0, 21.0};  // two samples are not enough
  CHECK_THROWS_AS(select_master({1, 2, 3}, rtts, quality), ArgumentError);

  MasterPolicy fixed;
  fixed.kind = MasterPolicy::Kind::Fixed;
  fixed.fixed_id = 3;
  CHECK(select_master({1, 2, 3}, {}, fixed) == 3);
  fixed.fixed_id = 9;
  CHECK_THROWS_AS(select_master({1, 2, 3}, {}, fixed), ArgumentError);

  MasterPolicy random;
  random.kind = MasterPolicy::Kind::Random;
  random.seed = 77;
  uint32_t pick = select_master({4, 9, 2}, {}, random);
  CHECK((pick == 2 || pick == 4 || pick == 9));
  CHECK(select_master({4, 9, 2}, {}, random) == pick);  // same seed, same master

  CHECK_THROWS_AS(select_master({}, {}, quality), ArgumentError);
}

namespace {

std::map<uint32_t, DeviceMeasurement> three_measurements() {
  std::map<uint32_t, DeviceMeasurement> m;
  m[1] = DeviceMeasurement{WakeReport{1, 5.0, 0.0}, 1.0};
  m[2] = DeviceMeasurement{WakeReport{2, 2.0, 0.0}, 1.0};
  m[3] = DeviceMeasurement{WakeReport{3, 1.0, 0.0}, 1.0};
  return m;
}

bool is_decision_flag(const std::vector<uint8_t>& frame) {
  return frame.size() > 4 && frame[4] == 5;
}

}  // namespace

TEST_CASE("a lossless round reaches everyone and elects the loudest device") {
  auto matrix = CalibrationMatrix::identity({1, 2, 3});
  RoundOutcome out = arbitration_round(three_measurements(), {1, 2, 3}, 1, matrix,
                                       NetworkProfile::by_name("wlan1"),
                                       ArbitrationConfig{}, 51);
  CHECK(out.failure == RoundFailure::None);
  REQUIRE(out.decision.has_value());
  CHECK(out.decision->winner == 1);
  REQUIRE(out.responder.has_value());
  CHECK(*out.responder == 1);
  for (uint32_t id : {1u, 2u, 3u}) CHECK(out.report_seen.at(id));
  CHECK(out.calibrated.at(1) == 5.0);
  CHECK(out.scores.size() == 3);

  // the master answers locally: decision flags go to the other two only
  std::set<uint32_t> flagged_to;
  for (const auto& ev : out.events)
    if (is_decision_flag(ev.frame)) flagged_to.insert(ev.to);
  CHECK(flagged_to == std::set<uint32_t>{2, 3});
}

TEST_CASE("a fully partitioned network yields a no-reports failure") {
  auto matrix = CalibrationMatrix::identity({1, 2, 3});
  std::map<uint32_t, DeviceMeasurement> m = three_measurements();
  m.erase(3);  // the master heard nothing itself
  auto drop_all = [](uint32_t, uint32_t, const std::vector<uint8_t>&) { return true; };
  RoundOutcome out = arbitration_round(m, {1, 2, 3}, 3, matrix,
                                       NetworkProfile::by_name("wlan1"),
                                       ArbitrationConfig{}, 52, TransportKind::Sim, drop_all);
  CHECK(out.failure == RoundFailure::NoReports);
  CHECK_FALSE(out.decision.has_value());
  CHECK_FALSE(out.responder.has_value());
  for (uint32_t id : {1u, 2u, 3u}) CHECK_FALSE(out.report_seen.at(id));
  CHECK(out.calibrated.empty());
}

TEST_CASE("losing every decision flag leaves a decision nobody acts on") {
  auto matrix = CalibrationMatrix::identity({1, 2, 3});
  std::map<uint32_t, DeviceMeasurement> m = three_measurements();
  m.erase(3);
  auto drop_flags = [](uint32_t, uint32_t, const std::vector<uint8_t>& frame) {
    return is_decision_flag(frame);
  };
  RoundOutcome out = arbitration_round(m, {1, 2, 3}, 3, matrix,
                                       NetworkProfile::by_name("wlan1"),
                                       ArbitrationConfig{}, 53, TransportKind::Sim, drop_flags);
  CHECK(out.failure == RoundFailure::PartialDecision);
  REQUIRE(out.decision.has_value());
  CHECK(out.decision->winner == 1);
  CHECK_FALSE(out.responder.has_value());  // fail-silent: nobody answered
  CHECK(out.report_seen.at(1));
  CHECK(out.report_seen.at(2));
  CHECK_FALSE(out.report_seen.at(3));
}

TEST_CASE("a device whose report is lost is scored out of the round") {
  auto matrix = CalibrationMatrix::identity({1, 2, 3});
  std::map<uint32_t, DeviceMeasurement> m = three_measurements();
  m[2].report.e_mic = 100.0;  // would win, but its report never arrives
  auto drop_from_2 = [](uint32_t from, uint32_t, const std::vector<uint8_t>&) {
    return from == 2;
  };
  RoundOutcome out = arbitration_round(m, {1, 2, 3}, 1, matrix,
                                       NetworkProfile::by_name("wlan1"),
                                       ArbitrationConfig{}, 54, TransportKind::Sim, drop_from_2);
  CHECK(out.failure == RoundFailure::None);
  REQUIRE(out.decision.has_value());
  CHECK(out.decision->winner == 1);
  CHECK_FALSE(out.report_seen.at(2));
  CHECK(out.calibrated.count(2) == 0);
  CHECK(out.scores.count(2) == 0);
  CHECK_FALSE(out.decision->flags.at(2));
}

TEST_CASE("the loopback-socket transport reaches the same decision") {
  auto matrix = CalibrationMatrix::identity({1, 2, 3});
  ArbitrationConfig cfg;
  cfg.timeout_ms = 80.0;  // keep the real-time run short
  RoundOutcome sim = arbitration_round(three_measurements(), {1, 2, 3}, 2, matrix,
                                       NetworkProfile::by_name("wlan1"), cfg, 55,
                                       TransportKind::Sim);
  RoundOutcome sock = arbitration_round(three_measurements(), {1, 2, 3}, 2, matrix,
                                        NetworkProfile::by_name("wlan1"), cfg, 55,
                                        TransportKind::Socket);
  CHECK(sim.failure == RoundFailure::None);
  CHECK(sock.failure == RoundFailure::None);
  REQUIRE(sim.decision.has_value());
  REQUIRE(sock.decision.has_value());
  CHECK(sim.decision->winner == sock.decision->winner);
  CHECK(sim.decision->flags == sock.decision->flags);
  CHECK(sim.report_seen == sock.report_seen);
  CHECK(sim.scores == sock.scores);  // same doubles crossed the wire
  CHECK(*sim.responder == *sock.responder);
}

TEST_CASE("round argument validation") {
  auto matrix = CalibrationMatrix::identity({1, 2, 3});
  auto m = three_measurements();
  NetworkProfile p = NetworkProfile::by_name("wlan1");

  CHECK_THROWS_AS(arbitration_round(m, {}, 1, matrix, p, ArbitrationConfig{}, 1),
                  ArgumentError);
  CHECK_THROWS_AS(arbitration_round(m, {1, 2, 3}, 9, matrix, p, ArbitrationConfig{}, 1),
                  ArgumentError);

  auto extra = m;
  extra[9] = DeviceMeasurement{WakeReport{9, 1.0, 0.0}, 1.0};
  CHECK_THROWS_AS(arbitration_round(extra, {1, 2, 3}, 1, matrix, p, ArbitrationConfig{}, 1),
                  ArgumentError);

  auto mismatched = m;
  mismatched[1].report.device_id = 2;
  CHECK_THROWS_AS(
      arbitration_round(mismatched, {1, 2, 3}, 1, matrix, p, ArbitrationConfig{}, 1),
      ArgumentError);

  ArbitrationConfig bad;
  bad.timeout_ms = 0.0;
  CHECK_THROWS_AS(arbitration_round(m, {1, 2, 3}, 1, matrix, p, bad, 1), ArgumentError);
}
