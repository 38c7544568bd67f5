#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wakearb/channel.hpp"
#include "wakearb/scoring.hpp"

namespace wakearb {

enum class TransportKind { Sim, Socket };

struct MasterPolicy {
  enum class Kind { NetworkQuality, Random, Fixed };
  Kind kind = Kind::NetworkQuality;
  uint64_t seed = 0;      // Random
  uint32_t fixed_id = 0;  // Fixed
};

// Round-trip times gathered with MasterProbe ping/pongs: every device probes
// every peer `rounds` times; unanswered probes simply yield no sample. Probing
// is repeated (fresh fates) until each device holds >= 3 samples; devices that
// stay unreachable raise ProtocolError.
std::map<uint32_t, std::vector<double>> measure_probe_rtts(
    const std::vector<uint32_t>& ids, const NetworkProfile& profile, uint64_t seed,
    int rounds = 3, TransportKind kind = TransportKind::Sim);

// NetworkQuality: lowest mean RTT, >= 3 samples per device required, ties to
// the lowest id. Random: uniform via the policy seed. Fixed: the named id.
uint32_t select_master(const std::vector<uint32_t>& ids,
                       const std::map<uint32_t, std::vector<double>>& rtt_stats,
                       const MasterPolicy& policy);

// What one device measured locally for a wake event.
struct DeviceMeasurement {
  WakeReport report;
  double g_deg2 = 0.0;
};

struct ArbitrationConfig {
  double timeout_ms = 500.0;  // master waits this long for reports
  ScoreConfig score;
};

enum class RoundFailure {
  None,
  NoReports,        // master saw no report at all
  PartialDecision,  // a decision was made but the responder flag never landed
};

const char* to_string(RoundFailure f);

struct RoundOutcome {
  std::optional<Decision> decision;
  RoundFailure failure = RoundFailure::None;
  std::optional<uint32_t> responder;       // device that actually answered
  std::map<uint32_t, double> calibrated;   // per reporting device
  std::map<uint32_t, double> scores;
  std::map<uint32_t, bool> report_seen;    // per roster device, as the master saw it
  std::vector<std::string> log;            // master-side notes (late/missing reports)
  std::vector<NetEvent> events;
};

// One wake event: every device in `measurements` (the ones that heard the
// word) sends its report to the master; at timeout (or once the whole roster
// reported) the master scores, decides, and broadcasts one DecisionFlag per
// device. Devices that never receive their flag stay silent (fail-silent, at
// 2x timeout). Deterministic for a given (profile, seed) on the simulated
// transport, and decision-identical on the loopback-socket transport.
RoundOutcome arbitration_round(const std::map<uint32_t, DeviceMeasurement>& measurements,
                               const std::vector<uint32_t>& roster, uint32_t master_id,
                               const CalibrationMatrix& matrix,
                               const NetworkProfile& profile, const ArbitrationConfig& cfg,
                               uint64_t seed, TransportKind kind = TransportKind::Sim,
                               const SimNetwork::DropFilter& drop_filter = nullptr);

}  // namespace wakearb
