#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wakearb/arbitration.hpp"
#include "wakearb/channel.hpp"
#include "wakearb/energy.hpp"
#include "wakearb/scene.hpp"
#include "wakearb/scoring.hpp"

namespace wakearb {

// Band energies of the reference microphone (gain exactly 1.0), one per
// calibration distance, rendered free-field from the calibration corpus.
// Every device's gain coefficient is a ratio against this table.
struct StandardEnergyTable {
  std::string corpus_id;
  double level_db = 70.0;
  std::map<double, double> entries;  // distance m -> band energy

  double at(double distance_m) const;  // exact-key lookup, throws if absent
};

// ---- coefficient math (pure) ------------------------------------------------

// b = device energy / standard energy at the same distance (both > 0).
double mic_gain_coefficient(double device_energy, double standard_energy);

// Normalized weighted mean of per-distance gain coefficients. Weights must be
// non-negative with a positive sum; with an empty `weights` every distance
// counts equally.
double finalize_gain(const std::vector<std::pair<double, double>>& per_distance,
                     const std::vector<double>& weights = {});

// a = energy heard by the listener / self energy of the playing device.
// The listener's energy is expected gain-corrected (multiplied by its b)
// so the ratio cancels exactly in the calibrated-energy subtraction.
double interference_coefficient(double heard_energy, double self_energy);

// Source placement for the gain pass: `distance_m` meters from the device,
// walking toward the room centre ("in front of" is not defined for a round
// speaker, so toward the open side of the room). Returns nothing when the
// spot leaves the room or lands on a device.
std::optional<Position> calibration_placement(const AcousticScene& scene,
                                              uint32_t device_id, double distance_m);

StandardEnergyTable build_standard_energy_table(const std::string& corpus_id,
                                                double level_db,
                                                const std::vector<double>& distances,
                                                const MeasurePipeline& measure,
                                                int sample_rate = 16000);

// ---- session ----------------------------------------------------------------

struct GainCalibration {
  uint32_t device_id = 0;
  std::vector<std::pair<double, double>> per_distance;  // (distance m, b)
  std::vector<double> weights;                          // normalized, used
  std::vector<double> skipped;                          // infeasible distances
  double final_b = 0.0;
};

struct CalibrationPlan {
  std::string corpus_id = "male-1";
  double level_db = 70.0;
  std::vector<double> distances = {0.5, 1.0, 2.0};
  std::vector<double> weights;  // empty -> uniform over feasible distances
  int handshakes = 3;           // energy reports averaged per measurement
  double handshake_timeout_ms = 2000.0;  // one retry, then error
  MeasurePipeline measure;
};

struct InterferenceRow {
  uint32_t playing_id = 0;
  double self_energy = 0.0;                  // mean of the reference handshakes
  std::map<uint32_t, double> coefficients;   // listener id -> a
};

struct CalibrationResult {
  std::string corpus_id;
  CalibrationMatrix matrix;
  std::vector<GainCalibration> gains;    // ascending device id
  std::vector<InterferenceRow> rows;     // ascending playing id
  StandardEnergyTable standard_table;
  double started_ms = 0.0;               // pump clock (virtual under Sim)
  double finished_ms = 0.0;
  std::vector<std::string> log;
};

// Orchestrated calibration session. The orchestrator (id = max device id + 1)
// drives one device at a time over the network: first the gain pass per
// device, then the interference pass; the interference pass refuses to start
// until every device holds a final gain. The session owns a private copy of
// the scene — quiet room, no reflections, source silent — which it mutates as
// the protocol walks the simulated person and playback around.
class CalibrationSession {
 public:
  enum class Phase { Idle, Gain, Interference, Done };

  CalibrationSession(const AcousticScene& scene, CalibrationPlan plan,
                     NetworkProfile profile, uint64_t seed,
                     TransportKind kind = TransportKind::Sim);
  ~CalibrationSession();

  CalibrationSession(const CalibrationSession&) = delete;
  CalibrationSession& operator=(const CalibrationSession&) = delete;

  Phase phase() const { return phase_; }
  const StandardEnergyTable& standard_table() const { return table_; }

  // One network pump per call; throws CalibrationError when a device stays
  // silent past the retry, or when no distance is feasible for the device.
  GainCalibration run_gain_calibration(uint32_t device_id);

  // All devices, ascending id. Requires every gain to be finalized.
  CalibrationMatrix run_interference_calibration();

  // Convenience: full procedure for every device in id order.
  CalibrationResult run_all();

  const CalibrationResult& result() const { return result_; }

 private:
  struct World;

  CalibrationPlan plan_;
  NetworkProfile profile_;
  uint64_t seed_;
  TransportKind kind_;
  Phase phase_ = Phase::Idle;
  uint32_t orchestrator_id_ = 0;
  StandardEnergyTable table_;
  std::unique_ptr<World> world_;
  std::map<uint32_t, double> final_b_;
  CalibrationResult result_;
  double clock_ms_ = 0.0;
  uint64_t pump_count_ = 0;
};

// scene + plan + profile -> matrix and artifacts, in one call
CalibrationResult run_calibration(const AcousticScene& scene, const CalibrationPlan& plan,
                                  const NetworkProfile& profile, uint64_t seed,
                                  TransportKind kind = TransportKind::Sim);

// ---- artifact io --------------------------------------------------------------

// Structured-text artifact: matrix, per-distance coefficients, weights,
// corpus, standard table and timestamps. Byte-for-byte reproducible for a
// fixed seed on the simulated transport.
void write_calibration_file(const std::string& path, const CalibrationResult& result);
CalibrationResult load_calibration_file(const std::string& path);

}  // namespace wakearb
