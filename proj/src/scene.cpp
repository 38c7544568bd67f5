#include "wakearb/scene.hpp"

#include <cmath>
#include <set>

#include "wakearb/errors.hpp"

namespace wakearb {

std::string spk_key(uint32_t device_id) { return "spk:" + std::to_string(device_id); }

double bearing_deg(const Position& from, const Position& to) {
  double deg = std::atan2(to.y_m - from.y_m, to.x_m - from.x_m) * 180.0 / M_PI;
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

double distance_m(const Position& a, const Position& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

double wrap_angle_deg(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;
}

double device_distance_m(const AcousticScene& scene, uint32_t id) {
  double d = distance_m(scene.source.position, find_device(scene, id).position);
  return std::max(d, 1e-3);
}

const DeviceSpec& find_device(const AcousticScene& scene, uint32_t id) {
  for (const auto& d : scene.devices)
    if (d.id == id) return d;
  throw SceneError("no device with id " + std::to_string(id));
}

namespace {

bool inside_room(const AcousticScene& s, const Position& p) {
  return p.x_m >= s.room_min.x_m && p.x_m <= s.room_max.x_m && p.y_m >= s.room_min.y_m &&
         p.y_m <= s.room_max.y_m;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw SceneError(std::string(what) + " must be finite");
}

}  // namespace

void validate_scene(const AcousticScene& scene) {
  if (scene.devices.empty()) throw SceneError("scene needs at least one device");
  if (scene.sample_rate <= 0) throw SceneError("sample_rate must be positive");

  check_finite(scene.room_min.x_m, "room bounds");
  check_finite(scene.room_min.y_m, "room bounds");
  check_finite(scene.room_max.x_m, "room bounds");
  check_finite(scene.room_max.y_m, "room bounds");
  if (!(scene.room_max.x_m > scene.room_min.x_m) ||
      !(scene.room_max.y_m > scene.room_min.y_m))
    throw SceneError("room bounds are empty");
  if (scene.room_max.x_m - scene.room_min.x_m > 100.0 ||
      scene.room_max.y_m - scene.room_min.y_m > 100.0)
    throw SceneError("room exceeds 100 m per axis");

  check_finite(scene.source.position.x_m, "source position");
  check_finite(scene.source.position.y_m, "source position");
  check_finite(scene.source.facing_deg, "source facing");
  check_finite(scene.source.level_db, "source level");
  if (!inside_room(scene, scene.source.position))
    throw SceneError("source lies outside the room");

  std::set<uint32_t> ids;
  for (const auto& d : scene.devices) {
    if (!ids.insert(d.id).second)
      throw SceneError("duplicate device id " + std::to_string(d.id));
    check_finite(d.position.x_m, "device position");
    check_finite(d.position.y_m, "device position");
    if (!inside_room(scene, d.position))
      throw SceneError("device " + std::to_string(d.id) + " lies outside the room");
    if (!(d.mic_gain > 0.0) || !std::isfinite(d.mic_gain))
      throw SceneError("device " + std::to_string(d.id) + ": mic_gain must be > 0");
    if (!(d.spk_gain >= 0.0) || !std::isfinite(d.spk_gain))
      throw SceneError("device " + std::to_string(d.id) + ": spk_gain must be >= 0");
  }

  for (const auto& [id, paths] : scene.reflections) {
    if (!ids.count(id))
      throw SceneError("reflections reference unknown device " + std::to_string(id));
    for (const auto& p : paths) {
      if (!(p.bearing_deg >= 0.0) || !(p.bearing_deg < 360.0))
        throw SceneError("reflection bearing must lie in [0, 360)");
      if (!(p.relative_level_db <= 0.0))
        throw SceneError("reflection level must be <= 0 dB");
    }
  }

  // degenerate geometry: coincident positions make the 1/distance channel
  // meaningless
  for (const auto& d : scene.devices) {
    if (distance_m(scene.source.position, d.position) < 1e-3 &&
        !scene.source.corpus_id.empty())
      throw SceneError("source coincides with device " + std::to_string(d.id));
    for (const auto& e : scene.devices)
      if (d.id != e.id && distance_m(d.position, e.position) < 1e-3)
        throw SceneError("devices " + std::to_string(d.id) + " and " +
                         std::to_string(e.id) + " coincide");
  }
}

uint32_t nearest_device_id(const AcousticScene& scene) {
  if (scene.devices.empty()) throw SceneError("scene has no devices");
  uint32_t best = scene.devices.front().id;
  double best_d = distance_m(scene.source.position, scene.devices.front().position);
  for (const auto& d : scene.devices) {
    double dd = distance_m(scene.source.position, d.position);
    if (dd < best_d || (dd == best_d && d.id < best)) {
      best = d.id;
      best_d = dd;
    }
  }
  return best;
}

}  // namespace wakearb
