#include "wakearb/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "wakearb/errors.hpp"

namespace wakearb {

size_t CalibrationMatrix::index_of(uint32_t id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end())
    throw ArgumentError("calibration matrix has no device " + std::to_string(id));
  return static_cast<size_t>(it - ids.begin());
}

double CalibrationMatrix::gain(uint32_t id) const {
  size_t i = index_of(id);
  return coeff[i][i];
}

double CalibrationMatrix::interference(uint32_t playing, uint32_t listener) const {
  return coeff[index_of(playing)][index_of(listener)];
}

CalibrationMatrix CalibrationMatrix::identity(const std::vector<uint32_t>& ids) {
  CalibrationMatrix m;
  m.ids = ids;
  std::sort(m.ids.begin(), m.ids.end());
  m.coeff.assign(m.ids.size(), std::vector<double>(m.ids.size(), 0.0));
  for (size_t i = 0; i < m.ids.size(); ++i) m.coeff[i][i] = 1.0;
  return m;
}

double calibrated_energy_linear(const std::map<uint32_t, WakeReport>& reports,
                                const CalibrationMatrix& matrix, uint32_t device_id,
                                std::vector<std::string>* warnings) {
  auto self = reports.find(device_id);
  if (self == reports.end())
    throw ArgumentError("no report from device " + std::to_string(device_id));

  double e = matrix.gain(device_id) * self->second.e_mic;
  for (uint32_t other : matrix.ids) {
    if (other == device_id) continue;
    double a = matrix.interference(other, device_id);
    auto it = reports.find(other);
    if (it == reports.end()) {
      // missing report: its playback energy is unknown, treat as silent
      if (a != 0.0 && warnings)
        warnings->push_back("no report from device " + std::to_string(other) +
                            "; assuming its speaker was silent");
      continue;
    }
    e -= a * it->second.e_spk;
  }
  return e;
}

double calibrated_energy(const std::map<uint32_t, WakeReport>& reports,
                         const CalibrationMatrix& matrix, uint32_t device_id,
                         std::vector<std::string>* warnings) {
  return std::max(0.0, calibrated_energy_linear(reports, matrix, device_id, warnings));
}

std::map<uint32_t, double> joint_scores(const std::map<uint32_t, double>& calibrated,
                                        const std::map<uint32_t, double>& variances,
                                        const ScoreConfig& cfg) {
  if (calibrated.empty()) throw ArgumentError("joint_scores: no devices");
  if (calibrated.size() != variances.size())
    throw ArgumentError("joint_scores: energy/variance key sets differ");
  for (const auto& [id, g] : variances) {
    if (!calibrated.count(id))
      throw ArgumentError("joint_scores: energy/variance key sets differ");
    if (g < 0.0 || std::isnan(g)) throw ArgumentError("joint_scores: variance must be >= 0");
  }
  for (const auto& [id, e] : calibrated)
    if (e < 0.0 || !std::isfinite(e))
      throw ArgumentError("joint_scores: calibrated energy must be finite and >= 0");
  if (!(cfg.alpha > 0.0)) throw ArgumentError("joint_scores: alpha must be > 0");
  if (!(cfg.orientation_weight >= 0.0))
    throw ArgumentError("joint_scores: orientation weight must be >= 0");

  double energy_sum = 0.0;
  for (const auto& [id, e] : calibrated) energy_sum += e;

  // zero-variance devices are perfectly oriented and share the whole
  // orientation mass between themselves
  std::vector<uint32_t> zero_var;
  double inv_sum = 0.0;
  for (const auto& [id, g] : variances) {
    if (g == 0.0)
      zero_var.push_back(id);
    else if (std::isfinite(g))
      inv_sum += 1.0 / g;
  }

  bool any_orientation = !zero_var.empty() || inv_sum > 0.0;
  if (energy_sum == 0.0 && !any_orientation)
    throw ArgumentError("joint_scores: no signal (all energies zero, no finite variance)");

  std::map<uint32_t, double> scores;
  for (const auto& [id, e] : calibrated) {
    double energy_term = energy_sum > 0.0 ? e / energy_sum : 0.0;
    double g = variances.at(id);
    double orient_term = 0.0;
    if (!zero_var.empty()) {
      orient_term = (g == 0.0) ? 1.0 / static_cast<double>(zero_var.size()) : 0.0;
    } else if (inv_sum > 0.0 && std::isfinite(g)) {
      orient_term = (1.0 / g) / inv_sum;
    }
    scores[id] = cfg.alpha * (energy_term + cfg.orientation_weight * orient_term);
  }
  return scores;
}

Decision decide(const std::map<uint32_t, double>& scores,
                const std::vector<uint32_t>& roster) {
  if (scores.empty()) throw ArgumentError("decide: no scores");

  // std::map iterates ids ascending, so keeping a strict > implements the
  // lowest-id tie break
  uint32_t winner = 0;
  double best = -1.0;
  bool first = true;
  for (const auto& [id, s] : scores) {
    if (first || s > best) {
      winner = id;
      best = s;
      first = false;
    }
  }

  Decision d;
  d.winner = winner;
  for (uint32_t id : roster) d.flags[id] = (id == winner);
  d.flags[winner] = true;  // winner always flagged even if roster omitted it
  return d;
}

}  // namespace wakearb
