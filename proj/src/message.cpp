#include "wakearb/message.hpp"

#include <bit>
#include <cstdio>
#include <cstring>

#include "wakearb/errors.hpp"

namespace wakearb {

namespace {

constexpr uint8_t kTagWakeReport = 1;
constexpr uint8_t kTagCalibCmd = 2;
constexpr uint8_t kTagEnergyReply = 3;
constexpr uint8_t kTagHandshakeAck = 4;
constexpr uint8_t kTagDecisionFlag = 5;
constexpr uint8_t kTagMasterProbe = 6;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_f64(std::vector<uint8_t>& out, double v) {
  uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<uint8_t>(bits >> shift));
}

struct Reader {
  const uint8_t* p;
  size_t left;

  uint8_t u8() {
    if (left < 1) throw CodecError("frame truncated");
    --left;
    return *p++;
  }
  uint32_t u32() {
    if (left < 4) throw CodecError("frame truncated");
    uint32_t v = (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
                 (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
    p += 4;
    left -= 4;
    return v;
  }
  double f64() {
    if (left < 8) throw CodecError("frame truncated");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits = (bits << 8) | p[i];
    p += 8;
    left -= 8;
    return std::bit_cast<double>(bits);
  }
};

size_t body_size(const MessageBody& body) {
  struct Sizer {
    size_t operator()(const WakeReportMsg&) const { return 4 + 8 + 8 + 8; }
    size_t operator()(const CalibCmd&) const { return 1 + 4; }
    size_t operator()(const EnergyReply&) const { return 4 + 8; }
    size_t operator()(const HandshakeAck&) const { return 4; }
    size_t operator()(const DecisionFlag&) const { return 4 + 1; }
    size_t operator()(const MasterProbe&) const { return 4 + 8; }
  };
  return std::visit(Sizer{}, body);
}

uint8_t tag_of(const MessageBody& body) {
  struct Tagger {
    uint8_t operator()(const WakeReportMsg&) const { return kTagWakeReport; }
    uint8_t operator()(const CalibCmd&) const { return kTagCalibCmd; }
    uint8_t operator()(const EnergyReply&) const { return kTagEnergyReply; }
    uint8_t operator()(const HandshakeAck&) const { return kTagHandshakeAck; }
    uint8_t operator()(const DecisionFlag&) const { return kTagDecisionFlag; }
    uint8_t operator()(const MasterProbe&) const { return kTagMasterProbe; }
  };
  return std::visit(Tagger{}, body);
}

}  // namespace

std::vector<uint8_t> encode(const Message& m) {
  std::vector<uint8_t> out;
  const size_t payload = 1 + 4 + 4 + body_size(m.body);
  out.reserve(4 + payload);
  put_u32(out, static_cast<uint32_t>(payload));
  out.push_back(tag_of(m.body));
  put_u32(out, m.sender_id);
  put_u32(out, m.seq);

  struct Writer {
    std::vector<uint8_t>& out;
    void operator()(const WakeReportMsg& b) const {
      put_u32(out, b.report.device_id);
      put_f64(out, b.report.e_mic);
      put_f64(out, b.report.e_spk);
      put_f64(out, b.g_deg2);
    }
    void operator()(const CalibCmd& b) const {
      out.push_back(static_cast<uint8_t>(b.action));
      put_u32(out, b.target_id);
    }
    void operator()(const EnergyReply& b) const {
      put_u32(out, b.device_id);
      put_f64(out, b.energy);
    }
    void operator()(const HandshakeAck& b) const { put_u32(out, b.ack_seq); }
    void operator()(const DecisionFlag& b) const {
      put_u32(out, b.device_id);
      out.push_back(b.respond ? 1 : 0);
    }
    void operator()(const MasterProbe& b) const {
      put_u32(out, b.probe_seq);
      put_f64(out, b.timestamp_ms);
    }
  };
  std::visit(Writer{out}, m.body);
  return out;
}

Message decode(const uint8_t* data, size_t len) {
  if (len < 4) throw CodecError("frame shorter than the length prefix");
  Reader r{data, len};
  uint32_t payload = r.u32();
  if (payload != r.left)
    throw CodecError(payload > r.left ? "frame truncated" : "trailing bytes after frame");
  if (payload < 9) throw CodecError("payload too short for the envelope");

  uint8_t tag = r.u8();
  Message m;
  m.sender_id = r.u32();
  m.seq = r.u32();

  switch (tag) {
    case kTagWakeReport: {
      WakeReportMsg b;
      b.report.device_id = r.u32();
      b.report.e_mic = r.f64();
      b.report.e_spk = r.f64();
      b.g_deg2 = r.f64();
      m.body = b;
      break;
    }
    case kTagCalibCmd: {
      CalibCmd b;
      uint8_t a = r.u8();
      if (a > 2) throw CodecError("bad calibration action");
      b.action = static_cast<CalibAction>(a);
      b.target_id = r.u32();
      m.body = b;
      break;
    }
    case kTagEnergyReply: {
      EnergyReply b;
      b.device_id = r.u32();
      b.energy = r.f64();
      m.body = b;
      break;
    }
    case kTagHandshakeAck: {
      HandshakeAck b;
      b.ack_seq = r.u32();
      m.body = b;
      break;
    }
    case kTagDecisionFlag: {
      DecisionFlag b;
      b.device_id = r.u32();
      uint8_t f = r.u8();
      if (f > 1) throw CodecError("bad respond flag");
      b.respond = f == 1;
      m.body = b;
      break;
    }
    case kTagMasterProbe: {
      MasterProbe b;
      b.probe_seq = r.u32();
      b.timestamp_ms = r.f64();
      m.body = b;
      break;
    }
    default:
      throw CodecError("unknown variant tag " + std::to_string(tag));
  }
  if (r.left != 0) throw CodecError("length does not match variant tag");
  return m;
}

Message decode(const std::vector<uint8_t>& frame) { return decode(frame.data(), frame.size()); }

bool same_message(const Message& a, const Message& b) {
  if (a.sender_id != b.sender_id || a.seq != b.seq) return false;
  if (a.body.index() != b.body.index()) return false;
  // compare in wire form: canonical and bit-exact, so NaN payloads compare equal
  return encode(a) == encode(b);
}

const char* variant_name(const Message& m) {
  struct Namer {
    const char* operator()(const WakeReportMsg&) const { return "WakeReport"; }
    const char* operator()(const CalibCmd&) const { return "CalibCmd"; }
    const char* operator()(const EnergyReply&) const { return "EnergyReply"; }
    const char* operator()(const HandshakeAck&) const { return "HandshakeAck"; }
    const char* operator()(const DecisionFlag&) const { return "DecisionFlag"; }
    const char* operator()(const MasterProbe&) const { return "MasterProbe"; }
  };
  return std::visit(Namer{}, m.body);
}

std::string describe(const Message& m) {
  char buf[192];
  struct Desc {
    char* buf;
    size_t cap;
    void operator()(const WakeReportMsg& b) const {
      std::snprintf(buf, cap, "WakeReport{device=%u e_mic=%.6g e_spk=%.6g g=%.6g}",
                    b.report.device_id, b.report.e_mic, b.report.e_spk, b.g_deg2);
    }
    void operator()(const CalibCmd& b) const {
      const char* names[] = {"play", "stop", "report-energy"};
      std::snprintf(buf, cap, "CalibCmd{%s target=%u}",
                    names[static_cast<int>(b.action)], b.target_id);
    }
    void operator()(const EnergyReply& b) const {
      std::snprintf(buf, cap, "EnergyReply{device=%u energy=%.6g}", b.device_id, b.energy);
    }
    void operator()(const HandshakeAck& b) const {
      std::snprintf(buf, cap, "HandshakeAck{ack=%u}", b.ack_seq);
    }
    void operator()(const DecisionFlag& b) const {
      std::snprintf(buf, cap, "DecisionFlag{device=%u respond=%s}", b.device_id,
                    b.respond ? "true" : "false");
    }
    void operator()(const MasterProbe& b) const {
      std::snprintf(buf, cap, "MasterProbe{seq=%u t=%.3fms}", b.probe_seq, b.timestamp_ms);
    }
  };
  std::visit(Desc{buf, sizeof buf}, m.body);
  char out[256];
  std::snprintf(out, sizeof out, "from=%u seq=%u %s", m.sender_id, m.seq, buf);
  return out;
}

}  // namespace wakearb
