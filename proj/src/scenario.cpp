#include "wakearb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "wakearb/errors.hpp"
#include "wakearb/rng.hpp"
#include "wakearb/toml.hpp"
#include "wakearb/waveform.hpp"

namespace wakearb {

double detection_probability(const DetectionModel& m, double snr_db) {
  if (!m.enabled) return 1.0;
  if (std::isinf(snr_db)) return snr_db > 0.0 ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(-m.slope_per_db * (snr_db - m.snr50_db)));
}

namespace {

constexpr double kPlaybackBedSeconds = 1.6;

void check_keys(const toml::Table& t, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : t.entries) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

std::vector<double> float_list(const toml::Table& t, const std::string& key,
                               const std::string& where) {
  if (!t.at(key).is_array())
    throw ConfigError(where + ": '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : t.at(key).as_array()) {
    if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must hold numbers");
    out.push_back(v.as_float());
  }
  return out;
}

Scenario map_document(const toml::Document& doc, const std::string& origin) {
  Scenario s;

  check_keys(doc.root, origin, {"schema", "name", "seed", "corpus", "sample_rate"});
  std::string schema = doc.root.get_string("schema", "wakearb-scenario-v1");
  if (schema != "wakearb-scenario-v1")
    throw ConfigError(origin + ": unsupported schema '" + schema + "'");
  s.name = doc.root.get_string("name", "scenario");
  int64_t seed = doc.root.get_int("seed", 0);
  if (seed < 0) throw ConfigError(origin + ": seed must be non-negative");
  s.seed = static_cast<uint64_t>(seed);
  s.scene.rng_seed = s.seed;  // per-trial scenes re-derive their own
  int64_t fs = doc.root.get_int("sample_rate", 16000);
  if (fs < 8000 || fs > 192000)
    throw ConfigError(origin + ": sample_rate must lie in [8000, 192000]");
  s.scene.sample_rate = static_cast<int>(fs);
  if (doc.root.has("corpus")) {
    if (!doc.root.at("corpus").is_array())
      throw ConfigError(origin + ": corpus must be an array of waveform ids");
    for (const auto& v : doc.root.at("corpus").as_array()) s.corpus.push_back(v.as_string());
  } else {
    s.corpus = corpus_ids();
  }

  static const std::set<std::string> known_tables = {
      "room",  "source", "noise",     "playback",    "network", "master",     "score",
      "energy", "doa",   "detection", "arbitration", "trials",  "calibration"};
  for (const auto& [tname, t] : doc.tables)
    if (!known_tables.count(tname))
      throw ConfigError(origin + ": unknown table [" + tname + "]");
  for (const auto& [tname, arr] : doc.table_arrays)
    if (tname != "device")
      throw ConfigError(origin + ": unknown table array [[" + tname + "]]");

  const toml::Table& room = doc.table_or_empty("room");
  check_keys(room, origin + " [room]", {"width_m", "height_m"});
  s.scene.room_min = {0.0, 0.0};
  s.scene.room_max = {room.get_float("width_m", 10.0), room.get_float("height_m", 10.0)};

  const toml::Table& src = doc.table_or_empty("source");
  check_keys(src, origin + " [source]", {"x_m", "y_m", "facing_deg", "level_db"});
  s.scene.source.position = {src.get_float("x_m", 0.0), src.get_float("y_m", 0.0)};
  s.scene.source.facing_deg = src.get_float("facing_deg", 0.0);
  s.scene.source.level_db = src.get_float("level_db", 70.0);

  auto dev_arr = doc.table_arrays.find("device");
  if (dev_arr != doc.table_arrays.end()) {
    size_t n = 0;
    for (const toml::Table& t : dev_arr->second) {
      ++n;
      std::string where = origin + " [[device]] #" + std::to_string(n);
      check_keys(t, where,
                 {"id", "x_m", "y_m", "mic_gain", "spk_gain", "playing", "reflections"});
      DeviceSpec d;
      int64_t id = t.require_int("id");
      // sequence numbering reserves the top bits of the 32-bit counter space
      // per device, which caps usable ids well below 4096
      if (id < 1 || id > 4000) throw ConfigError(where + ": id must lie in [1, 4000]");
      d.id = static_cast<uint32_t>(id);
      d.position = {t.require_float("x_m"), t.require_float("y_m")};
      d.mic_gain = t.get_float("mic_gain", 1.0);
      d.spk_gain = t.get_float("spk_gain", 1.0);
      d.is_playing = t.get_bool("playing", false);
      if (t.has("reflections")) {
        if (!t.at("reflections").is_array())
          throw ConfigError(where + ": reflections must be an array");
        std::vector<PathComponent> paths;
        for (const auto& v : t.at("reflections").as_array()) {
          if (!v.is_array() || v.as_array().size() != 2 || !v.as_array()[0].is_number() ||
              !v.as_array()[1].is_number())
            throw ConfigError(where + ": reflections must be [bearing_deg, level_db] pairs");
          PathComponent p;
          p.bearing_deg = v.as_array()[0].as_float();
          p.relative_level_db = v.as_array()[1].as_float();
          paths.push_back(p);
        }
        if (!paths.empty()) s.scene.reflections[d.id] = std::move(paths);
      }
      s.scene.devices.push_back(d);
    }
  }

  const toml::Table& noise = doc.table_or_empty("noise");
  check_keys(noise, origin + " [noise]", {"level_db"});
  s.scene.noise_level_db = noise.get_float("level_db", kNoNoiseDb);

  const toml::Table& playback = doc.table_or_empty("playback");
  check_keys(playback, origin + " [playback]", {"level_db"});
  s.scene.playback_level_db = playback.get_float("level_db", 70.0);

  const toml::Table& net = doc.table_or_empty("network");
  check_keys(net, origin + " [network]",
             {"profile", "latency_mean_ms", "latency_jitter_ms", "drop_prob", "reorder_prob"});
  s.network = NetworkProfile::by_name(net.get_string("profile", "wlan1"));
  s.network.latency_mean_ms = net.get_float("latency_mean_ms", s.network.latency_mean_ms);
  s.network.latency_jitter_ms = net.get_float("latency_jitter_ms", s.network.latency_jitter_ms);
  s.network.drop_prob = net.get_float("drop_prob", s.network.drop_prob);
  s.network.reorder_prob = net.get_float("reorder_prob", s.network.reorder_prob);

  const toml::Table& master = doc.table_or_empty("master");
  check_keys(master, origin + " [master]", {"policy", "fixed_id"});
  std::string policy = master.get_string("policy", "network");
  if (policy == "network") {
    s.master.kind = MasterPolicy::Kind::NetworkQuality;
  } else if (policy == "random") {
    s.master.kind = MasterPolicy::Kind::Random;
  } else if (policy == "fixed") {
    s.master.kind = MasterPolicy::Kind::Fixed;
    s.master.fixed_id = static_cast<uint32_t>(master.require_int("fixed_id"));
  } else {
    throw ConfigError(origin + " [master]: unknown policy '" + policy +
                      "' (use network, random or fixed)");
  }
  s.master.seed = derive_seed(s.seed, 0x6d737472ull /* master draw */);

  const toml::Table& score = doc.table_or_empty("score");
  check_keys(score, origin + " [score]", {"alpha", "orientation_weight"});
  s.arbitration.score.alpha = score.get_float("alpha", 1000.0);
  s.arbitration.score.orientation_weight = score.get_float("orientation_weight", 0.5);

  const toml::Table& arb = doc.table_or_empty("arbitration");
  check_keys(arb, origin + " [arbitration]", {"timeout_ms"});
  s.arbitration.timeout_ms = arb.get_float("timeout_ms", 500.0);

  const toml::Table& energy = doc.table_or_empty("energy");
  check_keys(energy, origin + " [energy]",
             {"frame_len", "hop", "window", "f_lo_hz", "f_hi_hz", "threshold_coeff"});
  s.measure.frame.sample_rate = static_cast<int>(fs);
  s.measure.frame.frame_len = static_cast<int>(energy.get_int("frame_len", 512));
  s.measure.frame.hop = static_cast<int>(energy.get_int("hop", 256));
  std::string window = energy.get_string("window", "hann");
  if (window == "hann")
    s.measure.frame.window = Window::Hann;
  else if (window == "rect")
    s.measure.frame.window = Window::Rect;
  else
    throw ConfigError(origin + " [energy]: unknown window '" + window + "'");
  s.measure.band.f_lo_hz = energy.get_float("f_lo_hz", 3000.0);
  s.measure.band.f_hi_hz = energy.get_float("f_hi_hz", 6000.0);
  s.measure.energy.threshold_coeff = energy.get_float("threshold_coeff", 0.8);

  const toml::Table& doa = doc.table_or_empty("doa");
  check_keys(doa, origin + " [doa]", {"frames", "jitter_deg"});
  s.doa.frames = static_cast<int>(doa.get_int("frames", 64));
  s.doa.jitter_deg = doa.get_float("jitter_deg", 0.5);

  const toml::Table& detection = doc.table_or_empty("detection");
  check_keys(detection, origin + " [detection]", {"enabled", "snr50_db", "slope_per_db"});
  s.detection.enabled = detection.get_bool("enabled", true);
  s.detection.snr50_db = detection.get_float("snr50_db", 9.0);
  s.detection.slope_per_db = detection.get_float("slope_per_db", 0.6);

  const toml::Table& trials = doc.table_or_empty("trials");
  check_keys(trials, origin + " [trials]", {"count"});
  s.trials = static_cast<int>(trials.get_int("count", 200));

  const toml::Table& calib = doc.table_or_empty("calibration");
  check_keys(calib, origin + " [calibration]",
             {"auto", "file", "corpus", "level_db", "distances_m", "weights", "handshakes",
              "timeout_ms"});
  s.calibration.auto_calibrate = calib.get_bool("auto", true);
  s.calibration.artifact_file = calib.get_string("file", "");
  s.calibration.plan.corpus_id =
      calib.get_string("corpus", s.corpus.empty() ? "male-1" : s.corpus.front());
  s.calibration.plan.level_db = calib.get_float("level_db", 70.0);
  if (calib.has("distances_m"))
    s.calibration.plan.distances = float_list(calib, "distances_m", origin + " [calibration]");
  if (calib.has("weights"))
    s.calibration.plan.weights = float_list(calib, "weights", origin + " [calibration]");
  s.calibration.plan.handshakes = static_cast<int>(calib.get_int("handshakes", 3));
  s.calibration.plan.handshake_timeout_ms = calib.get_float("timeout_ms", 2000.0);
  s.calibration.plan.measure = s.measure;

  // resolve audio
  for (const std::string& id : s.corpus) {
    if (!is_corpus_id(id)) throw ConfigError(origin + ": unknown corpus id '" + id + "'");
    s.scene.waveforms[id] = synth_wake_word(id, s.scene.sample_rate);
  }
  for (const auto& d : s.scene.devices)
    if (d.is_playing)
      s.scene.waveforms[spk_key(d.id)] = synth_playback_bed(
          derive_seed(s.seed, 0x62656421ull /* playback bed */, d.id), kPlaybackBedSeconds,
          s.scene.sample_rate);

  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Scenario s = map_document(toml::parse(text), origin);
  validate_scenario(s);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  Scenario s = map_document(toml::parse_file(path), path);
  validate_scenario(s);
  return s;
}

void validate_scenario(const Scenario& s) {
  validate_scene(s.scene);
  const std::string& n = s.name;
  for (const std::string& id : s.corpus)
    if (!is_corpus_id(id)) throw ConfigError(n + ": unknown corpus id '" + id + "'");
  if (s.trials < 1) throw ConfigError(n + ": trials must be >= 1");

  if (s.network.drop_prob < 0.0 || s.network.drop_prob > 1.0 ||
      s.network.reorder_prob < 0.0 || s.network.reorder_prob > 1.0)
    throw ConfigError(n + ": drop/reorder probabilities must lie in [0, 1]");
  if (s.network.latency_mean_ms < 0.0 || s.network.latency_jitter_ms < 0.0)
    throw ConfigError(n + ": network latencies must be non-negative");

  if (s.master.kind == MasterPolicy::Kind::Fixed) {
    bool found = false;
    for (const auto& d : s.scene.devices)
      if (d.id == s.master.fixed_id) found = true;
    if (!found)
      throw ConfigError(n + ": fixed master id " + std::to_string(s.master.fixed_id) +
                        " is not a device");
  }

  if (!(s.arbitration.timeout_ms > 0.0)) throw ConfigError(n + ": timeout_ms must be positive");
  if (!(s.arbitration.score.alpha > 0.0)) throw ConfigError(n + ": alpha must be positive");
  if (s.arbitration.score.orientation_weight < 0.0)
    throw ConfigError(n + ": orientation_weight must be non-negative");

  const FrameConfig& f = s.measure.frame;
  if (f.frame_len <= 0 || (f.frame_len & (f.frame_len - 1)) != 0)
    throw ConfigError(n + ": frame_len must be a power of two");
  if (f.hop <= 0) throw ConfigError(n + ": hop must be positive");
  const BandSelection& b = s.measure.band;
  if (!(b.f_lo_hz >= 0.0) || !(b.f_lo_hz < b.f_hi_hz) ||
      b.f_hi_hz > static_cast<double>(f.sample_rate) / 2.0)
    throw ConfigError(n + ": band edges must satisfy 0 <= f_lo < f_hi <= sample_rate/2");
  if (s.measure.energy.threshold_coeff < 0.0)
    throw ConfigError(n + ": threshold_coeff must be non-negative");

  if (s.doa.frames < 2) throw ConfigError(n + ": doa frames must be >= 2");
  if (s.doa.jitter_deg < 0.0) throw ConfigError(n + ": doa jitter must be non-negative");
  if (s.detection.slope_per_db < 0.0)
    throw ConfigError(n + ": detection slope must be non-negative");

  const CalibrationPlan& cp = s.calibration.plan;
  if (cp.distances.empty()) throw ConfigError(n + ": calibration needs at least one distance");
  for (double d : cp.distances)
    if (!(d >= 0.01)) throw ConfigError(n + ": calibration distances must be >= 0.01 m");
  if (!cp.weights.empty() && cp.weights.size() != cp.distances.size())
    throw ConfigError(n + ": calibration weights must match the distance list");
  if (cp.handshakes < 1) throw ConfigError(n + ": calibration handshakes must be >= 1");
  if (!(cp.handshake_timeout_ms > 0.0))
    throw ConfigError(n + ": calibration timeout must be positive");
  if (!is_corpus_id(cp.corpus_id))
    throw ConfigError(n + ": unknown calibration corpus '" + cp.corpus_id + "'");
}

std::string serialize_scenario(const Scenario& s) {
  if (s.scene.room_min.x_m != 0.0 || s.scene.room_min.y_m != 0.0)
    throw ArgumentError("scenario files anchor the room at the origin");

  toml::Document doc;
  doc.root.set("schema", toml::Value("wakearb-scenario-v1"));
  doc.root.set("name", toml::Value(s.name));
  doc.root.set("seed", toml::Value(static_cast<int64_t>(s.seed)));
  doc.root.set("sample_rate", toml::Value(static_cast<int64_t>(s.scene.sample_rate)));
  toml::Array corpus;
  for (const std::string& id : s.corpus) corpus.push_back(toml::Value(id));
  doc.root.set("corpus", toml::Value(std::move(corpus)));

  toml::Table room;
  room.set("width_m", toml::Value(s.scene.room_max.x_m));
  room.set("height_m", toml::Value(s.scene.room_max.y_m));
  doc.tables["room"] = room;

  toml::Table src;
  src.set("x_m", toml::Value(s.scene.source.position.x_m));
  src.set("y_m", toml::Value(s.scene.source.position.y_m));
  src.set("facing_deg", toml::Value(s.scene.source.facing_deg));
  src.set("level_db", toml::Value(s.scene.source.level_db));
  doc.tables["source"] = src;

  for (const auto& d : s.scene.devices) {
    toml::Table t;
    t.set("id", toml::Value(static_cast<int64_t>(d.id)));
    t.set("x_m", toml::Value(d.position.x_m));
    t.set("y_m", toml::Value(d.position.y_m));
    t.set("mic_gain", toml::Value(d.mic_gain));
    t.set("spk_gain", toml::Value(d.spk_gain));
    t.set("playing", toml::Value(d.is_playing));
    auto refl = s.scene.reflections.find(d.id);
    if (refl != s.scene.reflections.end() && !refl->second.empty()) {
      toml::Array arr;
      for (const PathComponent& p : refl->second) {
        toml::Array pair;
        pair.push_back(toml::Value(p.bearing_deg));
        pair.push_back(toml::Value(p.relative_level_db));
        arr.push_back(toml::Value(std::move(pair)));
      }
      t.set("reflections", toml::Value(std::move(arr)));
    }
    doc.table_arrays["device"].push_back(std::move(t));
  }

  if (!(std::isinf(s.scene.noise_level_db) && s.scene.noise_level_db < 0.0)) {
    toml::Table noise;
    noise.set("level_db", toml::Value(s.scene.noise_level_db));
    doc.tables["noise"] = noise;
  }

  toml::Table playback;
  playback.set("level_db", toml::Value(s.scene.playback_level_db));
  doc.tables["playback"] = playback;

  toml::Table net;
  net.set("profile", toml::Value(s.network.name));
  net.set("latency_mean_ms", toml::Value(s.network.latency_mean_ms));
  net.set("latency_jitter_ms", toml::Value(s.network.latency_jitter_ms));
  net.set("drop_prob", toml::Value(s.network.drop_prob));
  net.set("reorder_prob", toml::Value(s.network.reorder_prob));
  doc.tables["network"] = net;

  toml::Table master;
  switch (s.master.kind) {
    case MasterPolicy::Kind::NetworkQuality:
      master.set("policy", toml::Value("network"));
      break;
    case MasterPolicy::Kind::Random:
      master.set("policy", toml::Value("random"));
      break;
    case MasterPolicy::Kind::Fixed:
      master.set("policy", toml::Value("fixed"));
      master.set("fixed_id", toml::Value(static_cast<int64_t>(s.master.fixed_id)));
      break;
  }
  doc.tables["master"] = master;

  toml::Table score;
  score.set("alpha", toml::Value(s.arbitration.score.alpha));
  score.set("orientation_weight", toml::Value(s.arbitration.score.orientation_weight));
  doc.tables["score"] = score;

  toml::Table arb;
  arb.set("timeout_ms", toml::Value(s.arbitration.timeout_ms));
  doc.tables["arbitration"] = arb;

  toml::Table energy;
  energy.set("frame_len", toml::Value(static_cast<int64_t>(s.measure.frame.frame_len)));
  energy.set("hop", toml::Value(static_cast<int64_t>(s.measure.frame.hop)));
  energy.set("window",
             toml::Value(s.measure.frame.window == Window::Hann ? "hann" : "rect"));
  energy.set("f_lo_hz", toml::Value(s.measure.band.f_lo_hz));
  energy.set("f_hi_hz", toml::Value(s.measure.band.f_hi_hz));
  energy.set("threshold_coeff", toml::Value(s.measure.energy.threshold_coeff));
  doc.tables["energy"] = energy;

  toml::Table doa;
  doa.set("frames", toml::Value(static_cast<int64_t>(s.doa.frames)));
  doa.set("jitter_deg", toml::Value(s.doa.jitter_deg));
  doc.tables["doa"] = doa;

  toml::Table detection;
  detection.set("enabled", toml::Value(s.detection.enabled));
  detection.set("snr50_db", toml::Value(s.detection.snr50_db));
  detection.set("slope_per_db", toml::Value(s.detection.slope_per_db));
  doc.tables["detection"] = detection;

  toml::Table trials;
  trials.set("count", toml::Value(static_cast<int64_t>(s.trials)));
  doc.tables["trials"] = trials;

  toml::Table calib;
  calib.set("auto", toml::Value(s.calibration.auto_calibrate));
  if (!s.calibration.artifact_file.empty())
    calib.set("file", toml::Value(s.calibration.artifact_file));
  calib.set("corpus", toml::Value(s.calibration.plan.corpus_id));
  calib.set("level_db", toml::Value(s.calibration.plan.level_db));
  toml::Array dists;
  for (double d : s.calibration.plan.distances) dists.push_back(toml::Value(d));
  calib.set("distances_m", toml::Value(std::move(dists)));
  if (!s.calibration.plan.weights.empty()) {
    toml::Array ws;
    for (double w : s.calibration.plan.weights) ws.push_back(toml::Value(w));
    calib.set("weights", toml::Value(std::move(ws)));
  }
  calib.set("handshakes", toml::Value(static_cast<int64_t>(s.calibration.plan.handshakes)));
  calib.set("timeout_ms", toml::Value(s.calibration.plan.handshake_timeout_ms));
  doc.tables["calibration"] = calib;

  return toml::serialize(doc);
}

void write_scenario_file(const std::string& path, const Scenario& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write scenario file: " + path);
  out << serialize_scenario(s);
}

}  // namespace wakearb
