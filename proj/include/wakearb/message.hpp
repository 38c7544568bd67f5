#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "wakearb/scoring.hpp"

namespace wakearb {

// Message bodies. One struct per variant; the envelope carries sender and a
// per-sender strictly increasing sequence number.

struct WakeReportMsg {
  WakeReport report;
  double g_deg2 = 0.0;
  bool operator==(const WakeReportMsg&) const = default;
};

enum class CalibAction : uint8_t { Play = 0, Stop = 1, ReportEnergy = 2 };

struct CalibCmd {
  CalibAction action = CalibAction::Play;
  uint32_t target_id = 0;
  bool operator==(const CalibCmd&) const = default;
};

struct EnergyReply {
  uint32_t device_id = 0;
  double energy = 0.0;
  bool operator==(const EnergyReply&) const = default;
};

struct HandshakeAck {
  uint32_t ack_seq = 0;
  bool operator==(const HandshakeAck&) const = default;
};

struct DecisionFlag {
  uint32_t device_id = 0;
  bool respond = false;
  bool operator==(const DecisionFlag&) const = default;
};

struct MasterProbe {
  uint32_t probe_seq = 0;
  double timestamp_ms = 0.0;
  bool operator==(const MasterProbe&) const = default;
};

using MessageBody =
    std::variant<WakeReportMsg, CalibCmd, EnergyReply, HandshakeAck, DecisionFlag, MasterProbe>;

// First envelope sequence number a sender uses. Namespacing the counters per
// sender keeps echoed sequence values (probe pongs, command acks)
// unambiguous about whose counter they came from.
inline uint32_t first_seq(uint32_t sender_id) { return sender_id << 20; }

struct Message {
  uint32_t sender_id = 0;
  uint32_t seq = 0;
  MessageBody body;
};

// Wire format (all integers big-endian, energies IEEE-754 binary64 big-endian):
//
//   u32  payload length L (bytes after this field)
//   u8   variant tag (1..6)
//   u32  sender_id
//   u32  seq
//   ...  variant fields, fixed width:
//     1 WakeReport   : u32 device_id, f64 e_mic, f64 e_spk, f64 g_deg2
//     2 CalibCmd     : u8 action (0 play / 1 stop / 2 report-energy), u32 target_id
//     3 EnergyReply  : u32 device_id, f64 energy
//     4 HandshakeAck : u32 ack_seq
//     5 DecisionFlag : u32 device_id, u8 respond (0/1)
//     6 MasterProbe  : u32 probe_seq, f64 timestamp_ms
//
// decode() rejects unknown tags, truncated frames, length/tag mismatches,
// trailing bytes and out-of-range enum values.

std::vector<uint8_t> encode(const Message& m);
Message decode(const uint8_t* data, size_t len);
Message decode(const std::vector<uint8_t>& frame);

// exact comparison for tests; doubles are compared bit-wise so NaN == NaN
bool same_message(const Message& a, const Message& b);

// one-line rendering used by the log decoder
std::string describe(const Message& m);

const char* variant_name(const Message& m);

}  // namespace wakearb
