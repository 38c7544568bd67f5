#include "wakearb/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "wakearb/errors.hpp"
#include "wakearb/rng.hpp"

namespace wakearb {

namespace {

constexpr uint64_t kNoiseTag = 0x6e6f6973ull;  // noise stream
constexpr uint64_t kDoaTag = 0x646f6121ull;    // doa stream

double linear_amp(double level_db) { return std::pow(10.0, level_db / 20.0); }
double linear_energy(double level_db) { return std::pow(10.0, level_db / 10.0); }

// scale factor applied to a stored waveform to place it at level_db
double source_scale(const Waveform& w, double level_db) {
  double r = rms(w.samples);
  if (r <= 0.0) return 0.0;
  return amplitude_from_db(level_db) / r;
}

const Waveform& waveform_for(const AcousticScene& scene, const std::string& key) {
  auto it = scene.waveforms.find(key);
  if (it == scene.waveforms.end())
    throw SceneError("scene is missing waveform '" + key + "'");
  if (it->second.sample_rate != scene.sample_rate)
    throw SceneError("waveform '" + key + "' sample rate differs from the scene");
  return it->second;
}

}  // namespace

std::vector<PathComponent> orientation_paths(double facing_deg, double device_bearing_deg,
                                             const std::vector<PathComponent>& base_reflections) {
  double delta = wrap_angle_deg(facing_deg - device_bearing_deg);
  double direct_db = -6.0 * (1.0 - std::cos(delta * M_PI / 180.0));

  double back = device_bearing_deg + 180.0;
  back = std::fmod(back, 360.0);
  if (back < 0.0) back += 360.0;

  std::vector<PathComponent> paths;
  paths.reserve(base_reflections.size() + 1);
  paths.push_back(PathComponent{back, direct_db});
  for (const auto& r : base_reflections) {
    if (!(r.relative_level_db <= 0.0))
      throw ArgumentError("reflection level must be <= 0 dB");
    paths.push_back(r);
  }
  return paths;
}

std::vector<PathComponent> device_paths(const AcousticScene& scene, uint32_t device_id) {
  const DeviceSpec& dev = find_device(scene, device_id);
  double dev_bearing = bearing_deg(scene.source.position, dev.position);
  auto it = scene.reflections.find(device_id);
  static const std::vector<PathComponent> kNone;
  return orientation_paths(scene.source.facing_deg, dev_bearing,
                           it == scene.reflections.end() ? kNone : it->second);
}

Capture render_capture(const AcousticScene& scene, uint32_t device_id) {
  validate_scene(scene);
  const DeviceSpec& dev = find_device(scene, device_id);

  Capture cap;
  cap.sample_rate = scene.sample_rate;

  // figure out how long the capture must be
  size_t len = 0;
  const Waveform* src_wave = nullptr;
  if (!scene.source.corpus_id.empty()) {
    src_wave = &waveform_for(scene, scene.source.corpus_id);
    len = std::max(len, src_wave->samples.size());
  }
  for (const auto& d : scene.devices)
    if (d.is_playing) len = std::max(len, waveform_for(scene, spk_key(d.id)).samples.size());
  if (len == 0) throw SceneError("nothing to render: no source and no playing device");

  cap.mic_signal.assign(len, 0.0);

  // source arrivals: all paths are coherent (delays folded into levels), so
  // the path gains collapse into one multiplier
  if (src_wave) {
    double gain_sum = 0.0;
    for (const auto& p : device_paths(scene, device_id))
      gain_sum += linear_amp(p.relative_level_db);
    double d = device_distance_m(scene, device_id);
    double g = source_scale(*src_wave, scene.source.level_db) * gain_sum / d * dev.mic_gain;
    for (size_t i = 0; i < src_wave->samples.size(); ++i)
      cap.mic_signal[i] += g * src_wave->samples[i];
  }

  // cross-device speaker leakage; a device's own playback is assumed removed
  // by its local echo canceller and is not rendered into its own mic
  for (const auto& other : scene.devices) {
    if (!other.is_playing) continue;
    const Waveform& w = waveform_for(scene, spk_key(other.id));
    double scaled = source_scale(w, scene.playback_level_db);
    if (other.id == device_id) {
      cap.ref_signal.resize(w.samples.size());
      for (size_t i = 0; i < w.samples.size(); ++i)
        cap.ref_signal[i] = scaled * w.samples[i];
      continue;
    }
    double d = std::max(distance_m(other.position, dev.position), 1e-3);
    double g = scaled * other.spk_gain / d * dev.mic_gain;
    for (size_t i = 0; i < w.samples.size(); ++i) cap.mic_signal[i] += g * w.samples[i];
  }

  if (std::isfinite(scene.noise_level_db)) {
    double std_dev = amplitude_from_db(scene.noise_level_db);
    Rng rng(derive_seed(scene.rng_seed, kNoiseTag, device_id));
    for (auto& s : cap.mic_signal) s += std_dev * rng.gaussian();
  }

  return cap;
}

std::vector<double> doa_observations(const AcousticScene& scene, uint32_t device_id,
                                     const DoaConfig& cfg) {
  if (cfg.frames < 1) throw ArgumentError("doa_observations: frames must be >= 1");
  if (!(cfg.jitter_deg >= 0.0)) throw ArgumentError("doa_observations: jitter must be >= 0");
  validate_scene(scene);

  auto paths = device_paths(scene, device_id);
  double total = 0.0;
  std::vector<double> cumulative;
  cumulative.reserve(paths.size());
  for (const auto& p : paths) {
    total += linear_energy(p.relative_level_db);
    cumulative.push_back(total);
  }

  Rng rng(derive_seed(scene.rng_seed, kDoaTag, device_id));
  std::vector<double> bearings;
  bearings.reserve(cfg.frames);
  for (int k = 0; k < cfg.frames; ++k) {
    double u = rng.uniform() * total;
    size_t pick = 0;
    while (pick + 1 < cumulative.size() && u >= cumulative[pick]) ++pick;
    // no wrapping: estimates stay continuous around the path bearing, which
    // keeps the plain variance meaningful (scenes avoid the 0/360 seam)
    bearings.push_back(paths[pick].bearing_deg + cfg.jitter_deg * rng.gaussian());
  }
  return bearings;
}

double received_level_db(const AcousticScene& scene, uint32_t device_id) {
  const DeviceSpec& dev = find_device(scene, device_id);
  double gain_sum = 0.0;
  for (const auto& p : device_paths(scene, device_id))
    gain_sum += linear_amp(p.relative_level_db);
  double d = device_distance_m(scene, device_id);
  return scene.source.level_db + 20.0 * std::log10(gain_sum * dev.mic_gain / d);
}

double snr_db(const AcousticScene& scene, uint32_t device_id) {
  if (!std::isfinite(scene.noise_level_db)) return 1.0 / 0.0;
  return received_level_db(scene, device_id) - scene.noise_level_db;
}

}  // namespace wakearb
