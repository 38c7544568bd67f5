#include "wakearb/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "wakearb/calibration.hpp"
#include "wakearb/errors.hpp"
#include "wakearb/message.hpp"
#include "wakearb/rng.hpp"
#include "wakearb/simulate.hpp"
#include "wakearb/toml.hpp"

namespace wakearb {

bool failure_dominated(const AccuracyReport& r) { return 2 * r.failures > r.trials; }

namespace {

std::vector<uint32_t> roster_ids(const AcousticScene& scene) {
  std::vector<uint32_t> ids;
  ids.reserve(scene.devices.size());
  for (const auto& d : scene.devices) ids.push_back(d.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

uint64_t trial_seed_of(const Scenario& s, int trial) {
  return derive_seed(s.seed, 0x7472696cull /* per-trial stream */,
                     static_cast<uint64_t>(trial));
}

}  // namespace

TrialInputs prepare_trial(const Scenario& s, int trial) {
  if (s.corpus.empty()) throw ConfigError(s.name + ": corpus is empty");
  uint64_t trial_seed = trial_seed_of(s, trial);

  AcousticScene scene = s.scene;
  scene.rng_seed = trial_seed;
  Rng word_rng(derive_seed(trial_seed, 0x776f7264ull /* word pick */));
  scene.source.corpus_id =
      s.corpus[word_rng.integer(static_cast<uint64_t>(s.corpus.size()))];

  TrialInputs out;
  out.corpus_id = scene.source.corpus_id;
  for (uint32_t id : roster_ids(scene)) {
    Capture cap = render_capture(scene, id);
    DeviceTrialRow row;
    row.id = id;
    row.e_mic = measure_energy(cap.mic_signal, s.measure);
    row.e_spk = cap.ref_signal.empty() ? 0.0 : measure_energy(cap.ref_signal, s.measure);
    row.g_deg2 = doa_variance(doa_observations(scene, id, s.doa));
    double p = detection_probability(s.detection, snr_db(scene, id));
    Rng gate(derive_seed(trial_seed, 0x64657463ull /* detection gate */, id));
    row.heard = gate.uniform() < p;
    if (row.heard) {
      DeviceMeasurement m;
      m.report.device_id = id;
      m.report.e_mic = row.e_mic;
      m.report.e_spk = row.e_spk;
      m.g_deg2 = row.g_deg2;
      out.measurements[id] = m;
    }
    out.rows.push_back(row);
  }
  return out;
}

CalibrationMatrix obtain_calibration(const Scenario& s, TransportKind kind,
                                     std::vector<std::string>* log) {
  if (!s.calibration.artifact_file.empty()) {
    CalibrationResult r = load_calibration_file(s.calibration.artifact_file);
    if (r.matrix.ids != roster_ids(s.scene))
      throw ConfigError(s.name + ": calibration artifact " + s.calibration.artifact_file +
                        " covers a different device set");
    if (log) log->push_back("calibration loaded from " + s.calibration.artifact_file);
    return r.matrix;
  }
  if (!s.calibration.auto_calibrate)
    throw ConfigError(s.name +
                      ": no calibration artifact named and auto calibration is disabled");
  // Calibration is an attended setup pass: an operator walks the room and
  // retries any handshake that goes unanswered. A deterministic run models
  // that as a loss-free control link; live rounds still see the real profile.
  NetworkProfile setup = s.network;
  setup.drop_prob = 0.0;
  setup.reorder_prob = 0.0;
  CalibrationResult r =
      run_calibration(s.scene, s.calibration.plan, setup,
                      derive_seed(s.seed, 0x63616c62ull /* calibration */), kind);
  if (log) {
    log->push_back("auto-calibrated " + std::to_string(r.matrix.ids.size()) + " devices");
    for (const auto& line : r.log) log->push_back(line);
  }
  return r.matrix;
}

ExperimentResult run_experiment(const Scenario& s, TransportKind kind) {
  validate_scenario(s);

  ExperimentResult r;
  r.name = s.name;
  r.seed = s.seed;
  r.transport = kind;
  r.matrix = obtain_calibration(s, kind, &r.log);

  std::vector<uint32_t> ids = roster_ids(s.scene);
  std::map<uint32_t, std::vector<double>> rtts;
  if (s.master.kind == MasterPolicy::Kind::NetworkQuality)
    rtts = measure_probe_rtts(ids, s.network,
                              derive_seed(s.seed, 0x70727474ull /* probe rtts */), 3, kind);
  r.master_id = select_master(ids, rtts, s.master);
  r.log.push_back("master: device " + std::to_string(r.master_id));

  uint32_t nearest = nearest_device_id(s.scene);
  r.report.trials = s.trials;
  for (int t = 0; t < s.trials; ++t) {
    TrialInputs in = prepare_trial(s, t);
    RoundOutcome out = arbitration_round(
        in.measurements, ids, r.master_id, r.matrix, s.network, s.arbitration,
        derive_seed(trial_seed_of(s, t), 0x61726274ull /* round */), kind);

    TrialRecord rec;
    rec.trial = t;
    rec.corpus_id = in.corpus_id;
    rec.true_nearest = nearest;
    rec.master_id = r.master_id;
    rec.failure = out.failure;
    rec.responder = out.responder;
    if (out.decision) rec.winner = out.decision->winner;
    rec.rows = std::move(in.rows);
    for (auto& row : rec.rows) {
      auto c = out.calibrated.find(row.id);
      if (c != out.calibrated.end()) row.e_cal = c->second;
      auto sc = out.scores.find(row.id);
      if (sc != out.scores.end()) row.score = sc->second;
      auto seen = out.report_seen.find(row.id);
      row.reported = seen != out.report_seen.end() && seen->second;
    }
    rec.events = std::move(out.events);
    rec.log = std::move(out.log);

    if (rec.failure == RoundFailure::None && rec.winner) {
      r.report.wins[*rec.winner] += 1;
      if (*rec.winner == nearest) r.report.correct += 1;
    } else {
      r.report.failures += 1;
    }
    r.trials.push_back(std::move(rec));
  }
  r.report.accuracy =
      s.trials > 0 ? static_cast<double>(r.report.correct) / s.trials : 0.0;
  return r;
}

// ---- reports ----------------------------------------------------------------

std::string trials_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "trial,corpus,nearest,master,winner,failure,responder,device,heard,reported,"
        "e_mic,e_spk,e_cal,g_deg2,score\n";
  for (const auto& t : r.trials) {
    for (const auto& row : t.rows) {
      os << t.trial << ',' << t.corpus_id << ',' << t.true_nearest << ',' << t.master_id
         << ',';
      if (t.winner) os << *t.winner;
      os << ',' << to_string(t.failure) << ',';
      if (t.responder) os << *t.responder;
      os << ',' << row.id << ',' << (row.heard ? 1 : 0) << ',' << (row.reported ? 1 : 0)
         << ',' << toml::format_float(row.e_mic) << ',' << toml::format_float(row.e_spk)
         << ',' << toml::format_float(row.e_cal) << ',' << toml::format_float(row.g_deg2)
         << ',' << toml::format_float(row.score) << '\n';
    }
  }
  return os.str();
}

std::string summary_text(const ExperimentResult& r) {
  std::ostringstream os;
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.4f", r.report.accuracy);
  os << "experiment " << r.name << "\n";
  os << "seed " << r.seed << "  transport "
     << (r.transport == TransportKind::Sim ? "sim" : "socket") << "  trials "
     << r.report.trials << "  master " << r.master_id << "\n";
  os << "accuracy " << acc << " (" << r.report.correct << "/" << r.report.trials
     << " nearest-device wins)\n";
  os << "failures " << r.report.failures << "\n";
  os << "wins by device:";
  for (const auto& [id, n] : r.report.wins) os << "  " << id << ": " << n;
  os << "\n";
  for (const auto& line : r.log) os << "note: " << line << "\n";
  return os.str();
}

// ---- wire log ---------------------------------------------------------------

namespace {

constexpr char kWireMagic[8] = {'W', 'A', 'K', 'E', 'W', 'I', 'R', '1'};

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v >> 24));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v));
}

void put_f64(std::vector<uint8_t>& b, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  for (int shift = 56; shift >= 0; shift -= 8)
    b.push_back(static_cast<uint8_t>(bits >> shift));
}

uint32_t get_u32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
         uint32_t(p[3]);
}

double get_f64(const uint8_t* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits = (bits << 8) | p[i];
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

std::vector<uint8_t> encode_wire_log(const ExperimentResult& r) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kWireMagic, kWireMagic + 8);
  for (const auto& t : r.trials) {
    for (const auto& e : t.events) {
      put_f64(out, e.time_ms);
      put_u32(out, static_cast<uint32_t>(t.trial));
      put_u32(out, e.from);
      put_u32(out, e.to);
      out.push_back(e.dropped ? 1 : 0);
      put_f64(out, e.delay_ms);
      put_u32(out, static_cast<uint32_t>(e.frame.size()));
      out.insert(out.end(), e.frame.begin(), e.frame.end());
    }
  }
  return out;
}

std::string decode_wire_log(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kWireMagic, 8) != 0)
    throw CodecError("not a wire log (bad magic)");
  std::ostringstream os;
  size_t pos = 8;
  size_t count = 0;
  constexpr size_t kHeader = 8 + 4 + 4 + 4 + 1 + 8 + 4;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < kHeader) throw CodecError("truncated wire log record");
    double time_ms = get_f64(&bytes[pos]);
    pos += 8;
    uint32_t trial = get_u32(&bytes[pos]);
    pos += 4;
    uint32_t from = get_u32(&bytes[pos]);
    pos += 4;
    uint32_t to = get_u32(&bytes[pos]);
    pos += 4;
    bool dropped = bytes[pos++] != 0;
    double delay_ms = get_f64(&bytes[pos]);
    pos += 8;
    uint32_t len = get_u32(&bytes[pos]);
    pos += 4;
    if (bytes.size() - pos < len) throw CodecError("truncated frame in wire log");
    std::string what;
    try {
      what = describe(decode(&bytes[pos], len));
    } catch (const CodecError& e) {
      what = std::string("undecodable frame: ") + e.what();
    }
    pos += len;
    char head[96];
    std::snprintf(head, sizeof head, "%10.3f ms  trial %-4u  %u -> %u  %-7s", time_ms,
                  trial, from, to, dropped ? "dropped" : "ok");
    os << head << " " << what;
    if (!dropped) {
      char tail[32];
      std::snprintf(tail, sizeof tail, "  (+%.3f ms)", delay_ms);
      os << tail;
    }
    os << "\n";
    ++count;
  }
  os << count << " frames\n";
  return os.str();
}

void write_binary_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("short write: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-stable across platforms
  if (!out) throw ConfigError("cannot write file: " + path);
  out << text;
  if (!out) throw ConfigError("short write: " + path);
}

std::vector<uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

// ---- built-in suites ----------------------------------------------------------

namespace {

std::string F(double v) { return toml::format_float(v); }

// Three devices in a row, 1/2/3 m from the source, all on the source axis.
std::string line_scene(const std::string& name, uint64_t seed, const char* profile,
                       bool noisy, bool pin_master) {
  std::ostringstream os;
  os << "schema = \"wakearb-scenario-v1\"\n";
  os << "name = \"" << name << "\"\n";
  os << "seed = " << seed << "\n\n";
  os << "[room]\nwidth_m = 10.0\nheight_m = 4.0\n\n";
  os << "[source]\nx_m = 1.0\ny_m = 2.0\nfacing_deg = 0.0\nlevel_db = 75.0\n\n";
  for (int i = 1; i <= 3; ++i)
    os << "[[device]]\nid = " << i << "\nx_m = " << F(1.0 + i) << "\ny_m = 2.0\n\n";
  if (noisy) os << "[noise]\nlevel_db = 61.0\n\n";
  os << "[network]\nprofile = \"" << profile << "\"\n\n";
  // under lossy profiles the master must sit away from the source so that the
  // nearest device's report and its decision flag both cross the network
  if (pin_master) os << "[master]\npolicy = \"fixed\"\nfixed_id = 3\n\n";
  os << "[trials]\ncount = 200\n";
  return os.str();
}

// Two devices at nearly equal range; the competitor sits `sep_deg` off the
// source's facing. Wider separation costs the competitor direct-path level,
// which raises its bearing spread and makes the two easier to tell apart.
std::string orientation_scene(const std::string& name, uint64_t seed, double sep_deg) {
  const double rad = sep_deg * M_PI / 180.0;
  const double r2 = 2.0;
  const double d2x = 5.0 + r2 * std::cos(rad);
  const double d2y = 5.0 + r2 * std::sin(rad);
  const double recip1 = 180.0;            // device 1 due east of the source
  const double recip2 = sep_deg + 180.0;  // looking back toward the source

  std::ostringstream os;
  os << "schema = \"wakearb-scenario-v1\"\n";
  os << "name = \"" << name << "\"\n";
  os << "seed = " << seed << "\n\n";
  os << "[room]\nwidth_m = 10.0\nheight_m = 10.0\n\n";
  os << "[source]\nx_m = 5.0\ny_m = 5.0\nfacing_deg = 0.0\nlevel_db = 70.0\n\n";
  os << "[[device]]\nid = 1\nx_m = 6.95\ny_m = 5.0\n";
  os << "reflections = [[" << F(recip1 + 35.0) << ", -8.0], [" << F(recip1 - 50.0)
     << ", -12.0]]\n\n";
  os << "[[device]]\nid = 2\nx_m = " << F(d2x) << "\ny_m = " << F(d2y) << "\n";
  os << "reflections = [[" << F(recip2 + 35.0) << ", -8.0], [" << F(recip2 - 50.0)
     << ", -12.0]]\n\n";
  os << "[noise]\nlevel_db = 39.0\n\n";
  os << "[network]\nprofile = \"wlan1\"\n\n";
  os << "[doa]\nframes = 16\n\n";
  os << "[trials]\ncount = 200\n";
  return os.str();
}

}  // namespace

Suite make_suite(const std::string& kind, uint64_t seed) {
  Suite suite;
  suite.name = kind;
  if (kind == "network") {
    for (const char* p : {"wlan1", "wlan2", "wlan3"}) {
      std::string name = std::string("network-") + p;
      suite.scenarios.push_back(parse_scenario(line_scene(name, seed, p, false, true), name));
    }
  } else if (kind == "orientation") {
    suite.scenarios.push_back(
        parse_scenario(orientation_scene("orientation-30", seed, 30.0), "orientation-30"));
    suite.scenarios.push_back(
        parse_scenario(orientation_scene("orientation-60", seed, 60.0), "orientation-60"));
  } else if (kind == "noise") {
    suite.scenarios.push_back(
        parse_scenario(line_scene("noise-quiet", seed, "wlan1", false, false), "noise-quiet"));
    suite.scenarios.push_back(
        parse_scenario(line_scene("noise-noisy", seed, "wlan1", true, false), "noise-noisy"));
  } else {
    throw ArgumentError("unknown suite '" + kind + "' (network, orientation, noise)");
  }
  return suite;
}

std::string suite_summary(const Suite& suite, const std::vector<ExperimentResult>& runs) {
  std::set<uint32_t> ids;
  for (const auto& r : runs)
    if (!r.trials.empty())
      for (const auto& row : r.trials.front().rows) ids.insert(row.id);

  std::ostringstream os;
  os << "suite " << suite.name << "\n\n";
  os << std::left << std::setw(20) << "experiment" << std::right << std::setw(8) << "trials"
     << std::setw(10) << "failures" << std::setw(10) << "accuracy";
  for (uint32_t id : ids) os << std::setw(10) << ("wins@" + std::to_string(id));
  os << "\n";
  for (const auto& r : runs) {
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.4f", r.report.accuracy);
    os << std::left << std::setw(20) << r.name << std::right << std::setw(8)
       << r.report.trials << std::setw(10) << r.report.failures << std::setw(10) << acc;
    for (uint32_t id : ids) {
      auto it = r.report.wins.find(id);
      os << std::setw(10) << (it == r.report.wins.end() ? 0 : it->second);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace wakearb
