#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wakearb {

// What a device contributes to an arbitration round: raw microphone band
// energy, its own playback reference energy (0 when idle), and the variance
// of its per-frame bearing estimates.
struct WakeReport {
  uint32_t device_id = 0;
  double e_mic = 0.0;
  double e_spk = 0.0;
};

// Calibration matrix in device-id order: diagonal holds each device's final
// microphone gain coefficient b_i, off-diagonal [i][j] the interference
// coefficient of playing device i on listener j.
struct CalibrationMatrix {
  std::vector<uint32_t> ids;               // ascending
  std::vector<std::vector<double>> coeff;  // coeff[row][col]

  size_t index_of(uint32_t id) const;
  double gain(uint32_t id) const;                      // diagonal
  double interference(uint32_t playing, uint32_t listener) const;
  static CalibrationMatrix identity(const std::vector<uint32_t>& ids);
};

struct ScoreConfig {
  double alpha = 1000.0;             // overall scale, cancels in the argmax
  double orientation_weight = 0.5;   // beta: weight of the bearing-variance term
};

// Cross-device calibrated energy, linear form:
//   E_i = b_i * E_mic,i - sum_{j != i} a_j,i * E_spk,j
// Devices absent from `reports` contribute E_spk = 0; when such a device has
// a nonzero interference coefficient a warning is recorded (its playback, if
// any, could not be subtracted).
double calibrated_energy_linear(const std::map<uint32_t, WakeReport>& reports,
                                const CalibrationMatrix& matrix, uint32_t device_id,
                                std::vector<std::string>* warnings = nullptr);

// Same, clamped at zero from below (energy cannot be negative).
double calibrated_energy(const std::map<uint32_t, WakeReport>& reports,
                         const CalibrationMatrix& matrix, uint32_t device_id,
                         std::vector<std::string>* warnings = nullptr);

// Joint score S_i = alpha * (E_i / sum_k E_k + beta * (1/G_i) / sum_k (1/G_k)).
//
// Edge cases: devices with G == 0 (perfectly stable bearing) split the whole
// orientation mass equally while everyone else gets none; infinite G
// contributes zero weight; an all-zero energy sum zeroes the energy term.
// All energies zero *and* no finite variance anywhere means there is no
// signal at all -> ArgumentError.
std::map<uint32_t, double> joint_scores(const std::map<uint32_t, double>& calibrated,
                                        const std::map<uint32_t, double>& variances,
                                        const ScoreConfig& cfg = {});

struct Decision {
  uint32_t winner = 0;
  std::map<uint32_t, bool> flags;  // exactly one true
};

// Highest score wins; exact ties go to the lowest device id. `roster` lists
// every device that must receive a flag (it may be a superset of the scored
// set); the winner always comes from the scored set.
Decision decide(const std::map<uint32_t, double>& scores,
                const std::vector<uint32_t>& roster);

}  // namespace wakearb
