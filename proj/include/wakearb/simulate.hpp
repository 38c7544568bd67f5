#pragma once

#include <vector>

#include "wakearb/scene.hpp"

namespace wakearb {

// What one device hears. ref_signal is the device's own playback reference
// (a pre-gain digital copy), empty unless the device is playing.
struct Capture {
  int sample_rate = 16000;
  std::vector<double> mic_signal;
  std::vector<double> ref_signal;
};

// Direct path + reflections as observed by a device, with the direct arrival
// attenuated by the source's directivity: -6 dB * (1 - cos(delta)), where
// delta is the angle between the source facing and the bearing of the device
// as seen from the source. Reflections pass through untouched, so off-axis
// devices see a smaller direct-to-reflected ratio. The direct arrival is
// reported at the reciprocal bearing (looking back from the device).
std::vector<PathComponent> orientation_paths(double facing_deg, double device_bearing_deg,
                                             const std::vector<PathComponent>& base_reflections);

// paths for a device in a scene (geometry + directivity + templates)
std::vector<PathComponent> device_paths(const AcousticScene& scene, uint32_t device_id);

// Render the microphone signal of one device:
//   sum over source paths  (waveform * path gain * 1/distance * mic_gain)
// + sum over other playing devices' leakage (playback * spk_gain * 1/distance * mic_gain)
// + white Gaussian ambient noise at noise_level_db (skipped when -inf).
// Pure function of (scene, device_id) — rendering twice gives identical samples.
Capture render_capture(const AcousticScene& scene, uint32_t device_id);

struct DoaConfig {
  int frames = 64;         // number of per-frame bearing estimates
  double jitter_deg = 0.5; // estimator jitter (std dev) added per frame
};

// Per-frame bearing estimates: each frame picks one arrival with probability
// proportional to its linear energy, then adds Gaussian jitter. Deterministic
// under (scene.rng_seed, device_id).
std::vector<double> doa_observations(const AcousticScene& scene, uint32_t device_id,
                                     const DoaConfig& cfg = {});

// Analytic level of the source signal at the device's mic (dB, post mic_gain,
// all arrivals summed) and the resulting SNR against the ambient noise level.
double received_level_db(const AcousticScene& scene, uint32_t device_id);
double snr_db(const AcousticScene& scene, uint32_t device_id);

}  // namespace wakearb
