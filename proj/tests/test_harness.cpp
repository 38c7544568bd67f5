// Scenario parsing, trial preparation, and the experiment loop end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "wakearb/calibration.hpp"
#include "wakearb/errors.hpp"
#include "wakearb/experiment.hpp"
#include "wakearb/rng.hpp"
#include "wakearb/scenario.hpp"
#include "wakearb/waveform.hpp"

using namespace wakearb;

namespace {

// Smallest document that survives validation: a source and one device.
const char* kMinimal = R"([source]
x_m = 1.0
y_m = 2.0

[[device]]
id = 1
x_m = 3.0
y_m = 2.0
)";

// Two devices on the source axis, 1 m and 2 m out. Quiet room, lossless
// network, one calibration distance so the setup phase stays cheap.
const char* kPair = R"(name = "pair"
seed = 9
corpus = ["male-2"]

[room]
width_m = 8.0
height_m = 4.0

[source]
x_m = 1.0
y_m = 2.0

[[device]]
id = 1
x_m = 2.0
y_m = 2.0

[[device]]
id = 2
x_m = 3.0
y_m = 2.0

[calibration]
distances_m = [0.5]

[trials]
count = 10
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

bool rows_identical(const std::vector<DeviceTrialRow>& a,
                    const std::vector<DeviceTrialRow>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const DeviceTrialRow& x = a[i];
    const DeviceTrialRow& y = b[i];
    if (x.id != y.id || x.heard != y.heard || x.reported != y.reported) return false;
    if (x.e_mic != y.e_mic || x.e_spk != y.e_spk || x.e_cal != y.e_cal) return false;
    if (x.g_deg2 != y.g_deg2 || x.score != y.score) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("scenario defaults cover every knob") {
  Scenario s = parse_scenario(kMinimal);

  CHECK(s.name == "scenario");
  CHECK(s.seed == 0);
  CHECK(s.corpus == corpus_ids());
  CHECK(s.corpus.size() == 10);
  CHECK(s.trials == 200);

  CHECK(s.scene.room_min.x_m == 0.0);
  CHECK(s.scene.room_min.y_m == 0.0);
  CHECK(s.scene.room_max.x_m == 10.0);
  CHECK(s.scene.room_max.y_m == 10.0);
  CHECK(s.scene.source.position.x_m == 1.0);
  CHECK(s.scene.source.facing_deg == 0.0);
  CHECK(s.scene.source.level_db == 70.0);
  CHECK(s.scene.noise_level_db == kNoNoiseDb);
  CHECK(s.scene.playback_level_db == 70.0);
  CHECK(s.scene.sample_rate == 16000);
  CHECK(s.scene.rng_seed == 0);

  REQUIRE(s.scene.devices.size() == 1);
  CHECK(s.scene.devices[0].id == 1);
  CHECK(s.scene.devices[0].mic_gain == 1.0);
  CHECK(s.scene.devices[0].spk_gain == 1.0);
  CHECK(!s.scene.devices[0].is_playing);
  CHECK(s.scene.reflections.empty());

  // every corpus word is synthesized up front; nothing plays, so no beds
  CHECK(s.scene.waveforms.size() == 10);
  CHECK(s.scene.waveforms.count("male-1") == 1);

  CHECK(s.network.name == "wlan1");
  CHECK(s.network.latency_mean_ms == 5.0);
  CHECK(s.network.latency_jitter_ms == 1.0);
  CHECK(s.network.drop_prob == 0.0);

  CHECK(s.master.kind == MasterPolicy::Kind::NetworkQuality);
  CHECK(s.master.seed == derive_seed(0, 0x6d737472ull));

  CHECK(s.arbitration.timeout_ms == 500.0);
  CHECK(s.arbitration.score.alpha == 1000.0);
  CHECK(s.arbitration.score.orientation_weight == 0.5);

  CHECK(s.measure.frame.frame_len == 512);
  CHECK(s.measure.frame.hop == 256);
  CHECK(s.measure.frame.sample_rate == 16000);
  CHECK(s.measure.frame.window == Window::Hann);
  CHECK(s.measure.band.f_lo_hz == 3000.0);
  CHECK(s.measure.band.f_hi_hz == 6000.0);
  CHECK(s.measure.energy.threshold_coeff == 0.8);

  CHECK(s.doa.frames == 64);
  CHECK(s.doa.jitter_deg == 0.5);

  CHECK(s.detection.enabled);
  CHECK(s.detection.snr50_db == 9.0);
  CHECK(s.detection.slope_per_db == 0.6);

  CHECK(s.calibration.auto_calibrate);
  CHECK(s.calibration.artifact_file.empty());
  CHECK(s.calibration.plan.corpus_id == "male-1");  // first corpus entry
  CHECK(s.calibration.plan.level_db == 70.0);
  CHECK(s.calibration.plan.distances == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(s.calibration.plan.weights.empty());
  CHECK(s.calibration.plan.handshakes == 3);
  CHECK(s.calibration.plan.handshake_timeout_ms == 2000.0);
  CHECK(s.calibration.plan.measure.frame.frame_len == 512);
}

TEST_CASE("scenario parse rejects malformed documents") {
  auto with_root = [](const std::string& head) { return head + "\n" + kMinimal; };
  auto with_tail = [](const std::string& tail) { return std::string(kMinimal) + "\n" + tail; };

  CHECK_THROWS_WITH_AS(parse_scenario(with_root("bogus = 1")),
                       "scenario: unknown key 'bogus'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(with_root("schema = \"wakearb-scenario-v2\"")),
                       "scenario: unsupported schema 'wakearb-scenario-v2'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(with_root("seed = -1")),
                       "scenario: seed must be non-negative", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(with_root("sample_rate = 7999")),
                       "scenario: sample_rate must lie in [8000, 192000]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(with_root("corpus = [\"klingon-1\"]")),
                       "scenario: unknown corpus id 'klingon-1'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(with_root("corpus = \"male-1\"")),
                       "scenario: corpus must be an array of waveform ids", ConfigError);

  CHECK_THROWS_WITH_AS(parse_scenario(with_tail("[voodoo]\nx = 1")),
                       "scenario: unknown table [voodoo]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(with_tail("[[thing]]\nx = 1")),
                       "scenario: unknown table array [[thing]]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(with_tail("[noise]\ncolour = \"pink\"")),
                       "scenario [noise]: unknown key 'colour'", ConfigError);

  // device-level mistakes name the offending entry
  CHECK_THROWS_WITH_AS(
      parse_scenario("[[device]]\nid = 1\nx_m = 1.0\ny_m = 1.0\ncolour = 3\n"),
      "scenario [[device]] #1: unknown key 'colour'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario("[[device]]\nid = 0\nx_m = 1.0\ny_m = 1.0\n"),
                       "scenario [[device]] #1: id must lie in [1, 4000]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario("[[device]]\nid = 4001\nx_m = 1.0\ny_m = 1.0\n"),
                       "scenario [[device]] #1: id must lie in [1, 4000]", ConfigError);
  CHECK_THROWS_AS(parse_scenario("[[device]]\nid = 1\ny_m = 1.0\n"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario("[[device]]\nid = 1\nx_m = 1.0\ny_m = 1.0\nreflections = [[100.0]]\n"),
      "scenario [[device]] #1: reflections must be [bearing_deg, level_db] pairs",
      ConfigError);
}

TEST_CASE("scenario validation rejects out-of-range settings") {
  auto bad = [](const std::string& tail) {
    return std::string(kMinimal) + "\n" + tail + "\n";
  };

  CHECK_THROWS_WITH_AS(parse_scenario(bad("[trials]\ncount = 0")),
                       "scenario: trials must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[master]\npolicy = \"dictator\"")),
                       "scenario [master]: unknown policy 'dictator' (use network, random "
                       "or fixed)",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[master]\npolicy = \"fixed\"\nfixed_id = 9")),
                       "scenario: fixed master id 9 is not a device", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[network]\ndrop_prob = 1.5")),
                       "scenario: drop/reorder probabilities must lie in [0, 1]",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[network]\nlatency_mean_ms = -2.0")),
                       "scenario: network latencies must be non-negative", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[arbitration]\ntimeout_ms = 0.0")),
                       "scenario: timeout_ms must be positive", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[score]\nalpha = 0.0")),
                       "scenario: alpha must be positive", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[score]\norientation_weight = -0.5")),
                       "scenario: orientation_weight must be non-negative", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[energy]\nwindow = \"hamming\"")),
                       "scenario [energy]: unknown window 'hamming'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[energy]\nframe_len = 300")),
                       "scenario: frame_len must be a power of two", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[energy]\nhop = 0")),
                       "scenario: hop must be positive", ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario(bad("[energy]\nf_hi_hz = 9000.0")),
      "scenario: band edges must satisfy 0 <= f_lo < f_hi <= sample_rate/2", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[energy]\nthreshold_coeff = -0.1")),
                       "scenario: threshold_coeff must be non-negative", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[doa]\nframes = 1")),
                       "scenario: doa frames must be >= 2", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[doa]\njitter_deg = -1.0")),
                       "scenario: doa jitter must be non-negative", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[detection]\nslope_per_db = -0.2")),
                       "scenario: detection slope must be non-negative", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[calibration]\ndistances_m = []")),
                       "scenario: calibration needs at least one distance", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[calibration]\ndistances_m = [0.005]")),
                       "scenario: calibration distances must be >= 0.01 m", ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario(bad("[calibration]\ndistances_m = [1.0]\nweights = [0.5, 0.5]")),
      "scenario: calibration weights must match the distance list", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[calibration]\nhandshakes = 0")),
                       "scenario: calibration handshakes must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[calibration]\ntimeout_ms = 0.0")),
                       "scenario: calibration timeout must be positive", ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(bad("[calibration]\ncorpus = \"dog-1\"")),
                       "scenario: unknown calibration corpus 'dog-1'", ConfigError);

  // geometry problems surface as scene errors
  CHECK_THROWS_AS(parse_scenario("[[device]]\nid = 1\nx_m = 50.0\ny_m = 2.0\n"),
                  SceneError);
}

TEST_CASE("scenario serialization reaches a byte fixpoint") {
  const char* text = R"(schema = "wakearb-scenario-v1"
name = "full"
seed = 42
corpus = ["male-1", "female-3"]

[room]
width_m = 9.0
height_m = 6.0

[source]
x_m = 2.0
y_m = 3.0
facing_deg = 45.0
level_db = 72.0

[[device]]
id = 2
x_m = 4.0
y_m = 3.0
mic_gain = 1.5
spk_gain = 0.8
playing = true
reflections = [[100.0, -6.0], [200.0, -9.0]]

[[device]]
id = 7
x_m = 6.0
y_m = 4.0

[noise]
level_db = 45.0

[playback]
level_db = 68.0

[network]
profile = "wlan2"
drop_prob = 0.01

[master]
policy = "fixed"
fixed_id = 7

[score]
alpha = 800.0
orientation_weight = 0.25

[energy]
frame_len = 256
hop = 128
window = "rect"
f_lo_hz = 2500.0
f_hi_hz = 5500.0
threshold_coeff = 0.6

[doa]
frames = 32
jitter_deg = 0.75

[detection]
enabled = true
snr50_db = 8.0
slope_per_db = 0.5

[arbitration]
timeout_ms = 350.0

[trials]
count = 50

[calibration]
auto = true
corpus = "female-3"
level_db = 71.0
distances_m = [0.5, 1.5]
weights = [0.3, 0.7]
handshakes = 2
timeout_ms = 1500.0
)";

  Scenario s = parse_scenario(text, "full");
  CHECK(s.seed == 42);
  CHECK(s.network.name == "wlan2");
  CHECK(s.network.drop_prob == 0.01);           // override sticks
  CHECK(s.network.latency_mean_ms == 20.0);     // the rest stays wlan2
  CHECK(s.master.kind == MasterPolicy::Kind::Fixed);
  CHECK(s.master.fixed_id == 7);
  // two corpus words plus the playback bed for device 2
  CHECK(s.scene.waveforms.size() == 3);
  CHECK(s.scene.waveforms.count(spk_key(2)) == 1);
  CHECK(s.scene.reflections.at(2).size() == 2);

  std::string once = serialize_scenario(s);
  Scenario back = parse_scenario(once, "full");
  std::string twice = serialize_scenario(back);
  CHECK(once == twice);
  CHECK(back.seed == s.seed);
  CHECK(back.scene.devices.size() == 2);
  CHECK(back.calibration.plan.weights == s.calibration.plan.weights);
}

TEST_CASE("scenario files round trip through disk") {
  Scenario s = parse_scenario(kPair, "pair");
  auto path = std::filesystem::temp_directory_path() / "wakearb-harness-scn.toml";
  write_scenario_file(path.string(), s);
  Scenario back = load_scenario_file(path.string());
  CHECK(serialize_scenario(back) == serialize_scenario(s));
  CHECK(back.name == "pair");
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_scenario_file((path.parent_path() / "no-such-file.toml").string()),
                  ConfigError);
}

TEST_CASE("detection probability follows the logistic") {
  DetectionModel off{false, 9.0, 0.6};
  CHECK(detection_probability(off, -1e9) == 1.0);
  CHECK(detection_probability(off, -INFINITY) == 1.0);

  DetectionModel m;  // defaults: snr50 9 dB, slope 0.6
  CHECK(detection_probability(m, INFINITY) == 1.0);
  CHECK(detection_probability(m, -INFINITY) == 0.0);
  CHECK(detection_probability(m, 9.0) == doctest::Approx(0.5).epsilon(1e-12));
  // 1 dB above the midpoint: 1 / (1 + e^-0.6)
  CHECK(detection_probability(m, 10.0) ==
        doctest::Approx(0.6456563062257954).epsilon(1e-12));
  CHECK(detection_probability(m, 0.0) < detection_probability(m, 5.0));
  CHECK(detection_probability(m, 5.0) < detection_probability(m, 12.0));
  // symmetric about the midpoint
  CHECK(detection_probability(m, 19.0) + detection_probability(m, -1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  DetectionModel flat{true, 9.0, 0.0};
  CHECK(detection_probability(flat, -40.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("trial preparation is deterministic and gates on detection") {
  Scenario s = parse_scenario(kPair, "pair");

  TrialInputs a = prepare_trial(s, 3);
  TrialInputs b = prepare_trial(s, 3);
  CHECK(a.corpus_id == b.corpus_id);
  CHECK(a.corpus_id == "male-2");
  CHECK(rows_identical(a.rows, b.rows));
  CHECK(a.measurements.size() == b.measurements.size());

  // quiet room: infinite SNR, so every device hears and reports
  REQUIRE(a.rows.size() == 2);
  CHECK(a.rows[0].id == 1);
  CHECK(a.rows[1].id == 2);
  CHECK(a.measurements.size() == 2);
  for (const auto& row : a.rows) {
    CHECK(row.heard);
    CHECK(row.e_mic > 0.0);
    CHECK(row.e_spk == 0.0);  // nothing plays
    CHECK(row.g_deg2 >= 0.0);
    CHECK(!row.reported);  // prepare_trial stops short of the network
    CHECK(row.e_cal == 0.0);
    CHECK(row.score == 0.0);
  }
  // closer device, stronger pickup
  CHECK(a.rows[0].e_mic > a.rows[1].e_mic);
  CHECK(a.measurements.at(1).report.e_mic == a.rows[0].e_mic);
  CHECK(a.measurements.at(1).g_deg2 == a.rows[0].g_deg2);

  // a different trial reseeds the acoustics
  TrialInputs c = prepare_trial(s, 4);
  CHECK(!rows_identical(a.rows, c.rows));
}

TEST_CASE("trial preparation varies the wake word across trials") {
  Scenario s = parse_scenario(kMinimal);  // full ten-word corpus
  std::set<std::string> words;
  for (int t = 0; t < 30; ++t) words.insert(prepare_trial(s, t).corpus_id);
  CHECK(words.size() >= 3);
  for (const auto& w : words) CHECK(is_corpus_id(w));
}

TEST_CASE("calibration is obtained per the scenario policy") {
  Scenario s = parse_scenario(kPair, "pair");

  std::vector<std::string> log;
  CalibrationMatrix auto_m = obtain_calibration(s, TransportKind::Sim, &log);
  CHECK(auto_m.ids == std::vector<uint32_t>{1, 2});
  CHECK(auto_m.gain(1) > 0.0);
  bool noted = false;
  for (const auto& line : log)
    if (line.find("auto-calibrated 2 devices") != std::string::npos) noted = true;
  CHECK(noted);

  // the auto path is run_calibration under a scenario-derived seed, over a
  // loss-free copy of the profile (setup handshakes are operator-attended)
  NetworkProfile setup = s.network;
  setup.drop_prob = 0.0;
  setup.reorder_prob = 0.0;
  CalibrationResult direct = run_calibration(s.scene, s.calibration.plan, setup,
                                             derive_seed(s.seed, 0x63616c62ull),
                                             TransportKind::Sim);
  CHECK(direct.matrix.coeff == auto_m.coeff);

  // a named artifact short-circuits calibration entirely
  auto path = std::filesystem::temp_directory_path() / "wakearb-harness-cal.toml";
  write_calibration_file(path.string(), direct);
  Scenario from_file = s;
  from_file.calibration.artifact_file = path.string();
  std::vector<std::string> log2;
  CalibrationMatrix loaded = obtain_calibration(from_file, TransportKind::Sim, &log2);
  CHECK(loaded.coeff == auto_m.coeff);
  REQUIRE(!log2.empty());
  CHECK(log2.front().find("calibration loaded from") != std::string::npos);

  // the artifact must describe the same device set
  Scenario trio = parse_scenario(kPair, "pair");
  DeviceSpec extra;
  extra.id = 3;
  extra.position = {4.0, 2.0};
  trio.scene.devices.push_back(extra);
  trio.calibration.artifact_file = path.string();
  CHECK_THROWS_WITH_AS(obtain_calibration(trio, TransportKind::Sim),
                       ("pair: calibration artifact " + path.string() +
                        " covers a different device set")
                           .c_str(),
                       ConfigError);
  std::filesystem::remove(path);

  Scenario manual = s;
  manual.calibration.auto_calibrate = false;
  CHECK_THROWS_WITH_AS(
      obtain_calibration(manual, TransportKind::Sim),
      "pair: no calibration artifact named and auto calibration is disabled", ConfigError);
}

TEST_CASE("a quiet two-device experiment is perfect and reproducible") {
  Scenario s = parse_scenario(kPair, "pair");
  ExperimentResult r = run_experiment(s);

  CHECK(r.name == "pair");
  CHECK(r.seed == 9);
  CHECK(r.transport == TransportKind::Sim);
  CHECK((r.master_id == 1 || r.master_id == 2));
  CHECK(r.matrix.ids == std::vector<uint32_t>{1, 2});

  CHECK(r.report.trials == 10);
  CHECK(r.report.failures == 0);
  CHECK(r.report.correct == 10);
  CHECK(r.report.accuracy == 1.0);
  CHECK(r.report.wins.at(1) == 10);
  int total = r.report.failures;
  for (const auto& [id, n] : r.report.wins) total += n;
  CHECK(total == r.report.trials);
  CHECK(!failure_dominated(r.report));

  REQUIRE(r.trials.size() == 10);
  for (const auto& t : r.trials) {
    CHECK(t.corpus_id == "male-2");
    CHECK(t.true_nearest == 1);
    CHECK(t.master_id == r.master_id);
    REQUIRE(t.winner.has_value());
    CHECK(*t.winner == 1);
    CHECK(t.failure == RoundFailure::None);
    REQUIRE(t.responder.has_value());
    CHECK(*t.responder == 1);
    REQUIRE(t.rows.size() == 2);
    for (const auto& row : t.rows) {
      CHECK(row.heard);
      CHECK(row.reported);
      CHECK(row.e_cal > 0.0);
      CHECK(row.score > 0.0);
    }
    CHECK(t.rows[0].score > t.rows[1].score);
    CHECK(!t.events.empty());
  }

  // the CSV is long-form: one row per (trial, device), stable formatting
  std::string csv = trials_csv(r);
  CHECK(csv.rfind("trial,corpus,nearest,master,winner,failure,responder,device,heard,"
                  "reported,e_mic,e_spk,e_cal,g_deg2,score\n",
                  0) == 0);
  size_t lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 1 + 10 * 2);
  CHECK(csv.find(",none,") != std::string::npos);

  std::string summary = summary_text(r);
  CHECK(summary.find("experiment pair") != std::string::npos);
  CHECK(summary.find("transport sim") != std::string::npos);
  CHECK(summary.find("accuracy 1.0000 (10/10") != std::string::npos);
  CHECK(summary.find("failures 0") != std::string::npos);
  CHECK(summary.find("1: 10") != std::string::npos);
  CHECK(summary.find("note: master: device ") != std::string::npos);

  // bitwise reproducible end to end
  ExperimentResult again = run_experiment(s);
  CHECK(trials_csv(again) == csv);
  CHECK(summary_text(again) == summary);
  CHECK(encode_wire_log(again) == encode_wire_log(r));
}

TEST_CASE("wire logs decode to a readable transcript") {
  Scenario s = parse_scenario(kPair, "pair");
  ExperimentResult r = run_experiment(s);

  std::vector<uint8_t> bytes = encode_wire_log(r);
  REQUIRE(bytes.size() > 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "WAKEWIR1");

  std::string text = decode_wire_log(bytes);
  CHECK(text.find("WakeReport{") != std::string::npos);
  CHECK(text.find("DecisionFlag{") != std::string::npos);
  CHECK(text.find("trial 3") != std::string::npos);
  // one report and one flag per trial on a lossless link
  CHECK(text.find("20 frames\n") != std::string::npos);
  CHECK(text.find("dropped") == std::string::npos);

  std::vector<uint8_t> wrong = bytes;
  wrong[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_wire_log(wrong), "not a wire log (bad magic)", CodecError);
  std::vector<uint8_t> stub(bytes.begin(), bytes.begin() + 13);
  CHECK_THROWS_WITH_AS(decode_wire_log(stub), "truncated wire log record", CodecError);

  // binary + text files round trip byte for byte
  auto dir = std::filesystem::temp_directory_path();
  auto bin = dir / "wakearb-harness-log.bin";
  write_binary_file(bin.string(), bytes);
  CHECK(read_binary_file(bin.string()) == bytes);
  std::filesystem::remove(bin);

  auto txt = dir / "wakearb-harness-rows.csv";
  write_text_file(txt.string(), trials_csv(r));
  CHECK(slurp(txt) == trials_csv(r));
  std::filesystem::remove(txt);

  CHECK_THROWS_AS(read_binary_file((dir / "wakearb-harness-absent.bin").string()),
                  ConfigError);
}

TEST_CASE("a single device wins every quiet round") {
  std::string text = R"(name = "solo"
seed = 4
corpus = ["female-1"]

[source]
x_m = 1.0
y_m = 2.0

[[device]]
id = 1
x_m = 3.0
y_m = 2.0

[calibration]
distances_m = [1.0]

[trials]
count = 5
)";
  Scenario s = parse_scenario(text, "solo");
  ExperimentResult r = run_experiment(s);
  CHECK(r.master_id == 1);
  CHECK(r.report.accuracy == 1.0);
  CHECK(r.report.failures == 0);
  CHECK(r.report.wins.at(1) == 5);
  for (const auto& t : r.trials) {
    CHECK(*t.winner == 1);
    CHECK(*t.responder == 1);
    CHECK(t.events.empty());  // master measures and answers locally
  }
  CHECK(decode_wire_log(encode_wire_log(r)).find("0 frames") != std::string::npos);
}

TEST_CASE("failure domination needs a strict majority") {
  AccuracyReport r;
  r.trials = 10;
  r.failures = 5;
  CHECK(!failure_dominated(r));
  r.failures = 6;
  CHECK(failure_dominated(r));
  AccuracyReport empty;
  CHECK(!failure_dominated(empty));
}

TEST_CASE("built-in suites enumerate their scenarios") {
  Suite net = make_suite("network", 7);
  CHECK(net.name == "network");
  REQUIRE(net.scenarios.size() == 3);
  CHECK(net.scenarios[0].name == "network-wlan1");
  CHECK(net.scenarios[1].name == "network-wlan2");
  CHECK(net.scenarios[2].name == "network-wlan3");
  for (const auto& sc : net.scenarios) {
    CHECK(sc.seed == 7);
    CHECK(sc.trials == 200);
    CHECK(sc.scene.devices.size() == 3);
    CHECK(sc.scene.source.level_db == 75.0);
    CHECK(sc.scene.noise_level_db == kNoNoiseDb);
    // lossy links must not be able to strand the nearest device's report
    CHECK(sc.master.kind == MasterPolicy::Kind::Fixed);
    CHECK(sc.master.fixed_id == 3);
  }
  CHECK(net.scenarios[2].network.name == "wlan3");
  CHECK(net.scenarios[2].network.drop_prob == doctest::Approx(0.10));

  Suite orient = make_suite("orientation", 7);
  REQUIRE(orient.scenarios.size() == 2);
  CHECK(orient.scenarios[0].name == "orientation-30");
  CHECK(orient.scenarios[1].name == "orientation-60");
  for (const auto& sc : orient.scenarios) {
    CHECK(sc.scene.devices.size() == 2);
    CHECK(sc.doa.frames == 16);
    CHECK(sc.scene.noise_level_db == 39.0);
    CHECK(sc.scene.reflections.size() == 2);  // both devices get off-axis paths
  }
  // device 2 sits on the separation angle, 2 m out
  const Position& p30 = orient.scenarios[0].scene.devices[1].position;
  CHECK(p30.x_m == doctest::Approx(5.0 + 2.0 * std::cos(30.0 * M_PI / 180.0)));
  CHECK(p30.y_m == doctest::Approx(6.0));

  Suite noise = make_suite("noise", 7);
  REQUIRE(noise.scenarios.size() == 2);
  CHECK(noise.scenarios[0].name == "noise-quiet");
  CHECK(noise.scenarios[0].scene.noise_level_db == kNoNoiseDb);
  CHECK(noise.scenarios[1].name == "noise-noisy");
  CHECK(noise.scenarios[1].scene.noise_level_db == 61.0);
  CHECK(noise.scenarios[0].master.kind == MasterPolicy::Kind::NetworkQuality);

  CHECK_THROWS_WITH_AS(make_suite("zebra", 1),
                       "unknown suite 'zebra' (network, orientation, noise)",
                       ArgumentError);
}

TEST_CASE("suite summaries tabulate wins per device") {
  Suite suite;
  suite.name = "demo";

  auto fake = [](const std::string& name, int correct, int fails) {
    ExperimentResult r;
    r.name = name;
    r.report.trials = 4;
    r.report.failures = fails;
    r.report.correct = correct;
    r.report.accuracy = correct / 4.0;
    r.report.wins[1] = correct;
    if (4 - correct - fails > 0) r.report.wins[2] = 4 - correct - fails;
    TrialRecord t;
    DeviceTrialRow a;
    a.id = 1;
    DeviceTrialRow b;
    b.id = 2;
    t.rows = {a, b};
    r.trials.push_back(t);
    return r;
  };

  std::vector<ExperimentResult> runs = {fake("demo-a", 3, 0), fake("demo-b", 2, 1)};
  std::string text = suite_summary(suite, runs);
  CHECK(text.find("suite demo") != std::string::npos);
  CHECK(text.find("wins@1") != std::string::npos);
  CHECK(text.find("wins@2") != std::string::npos);
  CHECK(text.find("demo-a") != std::string::npos);
  CHECK(text.find("0.7500") != std::string::npos);
  CHECK(text.find("0.5000") != std::string::npos);
}
