#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wakearb/arbitration.hpp"
#include "wakearb/calibration.hpp"
#include "wakearb/channel.hpp"
#include "wakearb/energy.hpp"
#include "wakearb/scene.hpp"
#include "wakearb/simulate.hpp"

namespace wakearb {

// Whether a device notices the wake word at all, as a function of its SNR:
// a logistic with 50% odds at snr50_db and the given steepness. Infinite SNR
// (noise-free scenes) always detects; a disabled model always detects.
struct DetectionModel {
  bool enabled = true;
  double snr50_db = 9.0;
  double slope_per_db = 0.6;
};

double detection_probability(const DetectionModel& m, double snr_db);

struct CalibrationSetup {
  CalibrationPlan plan;
  bool auto_calibrate = true;  // calibrate on the fly when no artifact is given
  std::string artifact_file;   // optional persisted matrix (TOML)
};

// A complete experiment definition: the room, the contenders, the channel,
// and how many trials to run. Loaded from a TOML file with units spelled out
// in the key names (x_m, level_db, timeout_ms, ...).
struct Scenario {
  std::string name = "scenario";
  uint64_t seed = 0;
  std::vector<std::string> corpus;  // wake-word ids, drawn per trial with replacement
  AcousticScene scene;              // source.corpus_id is filled in per trial
  MeasurePipeline measure;
  DoaConfig doa;
  DetectionModel detection;
  NetworkProfile network;
  MasterPolicy master;
  ArbitrationConfig arbitration;
  int trials = 200;
  CalibrationSetup calibration;
};

// Parse + map + validate. `origin` names the source in error messages.
Scenario parse_scenario(const std::string& text, const std::string& origin = "scenario");
Scenario load_scenario_file(const std::string& path);

std::string serialize_scenario(const Scenario& s);
void write_scenario_file(const std::string& path, const Scenario& s);

// Structural checks beyond the scene itself: probability ranges, positive
// timeouts, referenced waveforms, master id present, sane band edges.
void validate_scenario(const Scenario& s);

}  // namespace wakearb
