#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wakearb/arbitration.hpp"
#include "wakearb/scenario.hpp"
#include "wakearb/scoring.hpp"

namespace wakearb {

// Ground-truth numbers for one device in one trial. e_cal/score are the
// master's view and stay zero when the master never saw the device's report.
struct DeviceTrialRow {
  uint32_t id = 0;
  bool heard = false;     // cleared the detection gate, sent a report
  bool reported = false;  // the master actually received that report
  double e_mic = 0.0;
  double e_spk = 0.0;
  double e_cal = 0.0;
  double g_deg2 = 0.0;
  double score = 0.0;
};

struct TrialRecord {
  int trial = 0;
  std::string corpus_id;
  uint32_t true_nearest = 0;
  uint32_t master_id = 0;
  std::optional<uint32_t> winner;
  RoundFailure failure = RoundFailure::None;
  std::optional<uint32_t> responder;
  std::vector<DeviceTrialRow> rows;  // ascending id, one per roster device
  std::vector<NetEvent> events;
  std::vector<std::string> log;
};

struct AccuracyReport {
  int trials = 0;
  int failures = 0;
  int correct = 0;  // winner == geometric nearest
  std::map<uint32_t, int> wins;
  double accuracy = 0.0;  // correct / trials
};

// more than half the trials ended in a failure -> nonzero process exit
bool failure_dominated(const AccuracyReport& r);

struct ExperimentResult {
  std::string name;
  uint64_t seed = 0;
  TransportKind transport = TransportKind::Sim;
  uint32_t master_id = 0;
  CalibrationMatrix matrix;
  std::vector<TrialRecord> trials;
  AccuracyReport report;
  std::vector<std::string> log;  // calibration + election notes
};

// What the acoustic layer hands to a single arbitration round.
struct TrialInputs {
  std::string corpus_id;
  std::map<uint32_t, DeviceMeasurement> measurements;  // only devices that heard
  std::vector<DeviceTrialRow> rows;                    // every device
};

// Renders every device's capture for trial `trial`, measures energies and
// bearing spread, and applies the detection gate. Deterministic in
// (scenario.seed, trial).
TrialInputs prepare_trial(const Scenario& s, int trial);

// Calibration matrix per the scenario's calibration block: load the artifact
// when a file is named, otherwise auto-calibrate (ConfigError when disabled).
CalibrationMatrix obtain_calibration(const Scenario& s, TransportKind kind,
                                     std::vector<std::string>* log = nullptr);

ExperimentResult run_experiment(const Scenario& s, TransportKind kind = TransportKind::Sim);

// ---- reports ----------------------------------------------------------------

// One row per (trial, device); stable float formatting, so identical inputs
// produce byte-identical files.
std::string trials_csv(const ExperimentResult& r);
std::string summary_text(const ExperimentResult& r);

// ---- wire log ---------------------------------------------------------------

// Binary capture of every frame the channel carried, replayable offline:
//   "WAKEWIR1" then per frame
//   [f64 send-time ms][u32 trial][u32 from][u32 to][u8 dropped][f64 delay ms]
//   [u32 len][len frame bytes], all big-endian.
std::vector<uint8_t> encode_wire_log(const ExperimentResult& r);
std::string decode_wire_log(const std::vector<uint8_t>& bytes);

void write_binary_file(const std::string& path, const std::vector<uint8_t>& bytes);
void write_text_file(const std::string& path, const std::string& text);
std::vector<uint8_t> read_binary_file(const std::string& path);

// ---- built-in suites ---------------------------------------------------------

struct Suite {
  std::string name;
  std::vector<Scenario> scenarios;
};

// network: one line scene per WLAN profile; orientation: two-device scenes at
// 30 and 60 degree separation; noise: quiet-vs-noisy pair of the line scene.
Suite make_suite(const std::string& kind, uint64_t seed);

std::string suite_summary(const Suite& suite, const std::vector<ExperimentResult>& runs);

}  // namespace wakearb
