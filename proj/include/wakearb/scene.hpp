#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "wakearb/waveform.hpp"

namespace wakearb {

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
};

// One arrival of the source signal at a device. The direct path carries
// relative_level_db = 0 before directivity; reflections sit below it. The
// extra path length of a reflection is folded into its level (no delays are
// modelled), so all arrivals are summed coherently.
struct PathComponent {
  double bearing_deg = 0.0;        // [0, 360), as observed at the device
  double relative_level_db = 0.0;  // <= 0
};

struct SourceSpec {
  Position position;
  double facing_deg = 0.0;
  double level_db = 70.0;  // at 1 m, re the shared dB anchor
  std::string corpus_id;   // empty = silent source
};

struct DeviceSpec {
  uint32_t id = 0;
  Position position;
  double mic_gain = 1.0;  // linear, > 0; 1.0 = the standard microphone
  double spk_gain = 1.0;  // linear, >= 0
  bool is_playing = false;
};

// Ambient noise level that disables noise entirely.
inline constexpr double kNoNoiseDb = -std::numeric_limits<double>::infinity();

// Amplitude anchor: a 94 dB level maps to RMS 1.0. Arbitrary; every decision
// quantity is a ratio or a dB difference, so the anchor cancels.
inline constexpr double kDbAnchor = 94.0;

inline double amplitude_from_db(double level_db) {
  return std::isinf(level_db) && level_db < 0 ? 0.0
                                              : std::pow(10.0, (level_db - kDbAnchor) / 20.0);
}

struct AcousticScene {
  SourceSpec source;
  std::vector<DeviceSpec> devices;
  // per-device reflection templates (absolute bearings); devices may be absent
  std::map<uint32_t, std::vector<PathComponent>> reflections;
  double noise_level_db = kNoNoiseDb;
  // level of a playing device's program before its spk_gain is applied
  double playback_level_db = 70.0;
  int sample_rate = 16000;
  uint64_t rng_seed = 0;
  // room bounding box; every position must lie inside
  Position room_min{0.0, 0.0};
  Position room_max{10.0, 10.0};
  // resolved audio: source.corpus_id and "spk:<id>" for playing devices
  std::map<std::string, Waveform> waveforms;
};

// playback waveform key for a device
std::string spk_key(uint32_t device_id);

// Throws SceneError on inconsistent scenes (duplicate ids, bad gains,
// positions outside the room, degenerate geometry, room > 100 m ...).
void validate_scene(const AcousticScene& scene);

const DeviceSpec& find_device(const AcousticScene& scene, uint32_t id);

// bearing of `to` as seen from `from`, degrees in [0, 360)
double bearing_deg(const Position& from, const Position& to);

double distance_m(const Position& a, const Position& b);

// wrap to [-180, 180)
double wrap_angle_deg(double deg);

// source -> device distance, floored at 1 mm
double device_distance_m(const AcousticScene& scene, uint32_t id);

// id of the device geometrically nearest to the source (ties: lowest id)
uint32_t nearest_device_id(const AcousticScene& scene);

}  // namespace wakearb
