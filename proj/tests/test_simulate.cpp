#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "wakearb/energy.hpp"
#include "wakearb/errors.hpp"
#include "wakearb/scene.hpp"
#include "wakearb/simulate.hpp"
#include "wakearb/waveform.hpp"

using namespace wakearb;

namespace {

AcousticScene one_device_scene(double distance, double mic_gain = 1.0,
                               double level_db = 70.0) {
  AcousticScene scene;
  scene.room_max = {10.0, 10.0};
  scene.source.position = {1.0, 2.0};
  scene.source.facing_deg = 0.0;  // toward +x, straight at the device
  scene.source.level_db = level_db;
  scene.source.corpus_id = "male-1";
  DeviceSpec d;
  d.id = 1;
  d.position = {1.0 + distance, 2.0};
  d.mic_gain = mic_gain;
  scene.devices.push_back(d);
  scene.waveforms["male-1"] = synth_wake_word("male-1", scene.sample_rate);
  scene.rng_seed = 77;
  return scene;
}

bool same_samples(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double direct_level_db(double delta_deg) {
  return -6.0 * (1.0 - std::cos(delta_deg * M_PI / 180.0));
}

}  // namespace

TEST_CASE("a device one metre away hears the source exactly as emitted") {
  AcousticScene scene = one_device_scene(1.0);
  Capture cap = render_capture(scene, 1);

  const Waveform& w = scene.waveforms.at("male-1");
  double scale = amplitude_from_db(scene.source.level_db) / rms(w.samples);
  REQUIRE(cap.mic_signal.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(cap.mic_signal[i] == scale * w.samples[i]);
  CHECK(cap.ref_signal.empty());
  CHECK(cap.sample_rate == scene.sample_rate);
}

TEST_CASE("amplitude falls off as one over distance") {
  Capture near = render_capture(one_device_scene(1.0), 1);
  Capture far = render_capture(one_device_scene(3.0), 1);
  REQUIRE(near.mic_signal.size() == far.mic_signal.size());
  for (size_t i = 0; i < near.mic_signal.size(); i += 37)
    CHECK(far.mic_signal[i] * 3.0 ==
          doctest::Approx(near.mic_signal[i]).epsilon(1e-12));
}

TEST_CASE("microphone gain scales the capture linearly") {
  Capture base = render_capture(one_device_scene(2.0, 1.0), 1);
  Capture doubled = render_capture(one_device_scene(2.0, 2.0), 1);
  REQUIRE(base.mic_signal.size() == doubled.mic_signal.size());
  // a gain of two is a pure exponent shift, so the match is bit-exact
  for (size_t i = 0; i < base.mic_signal.size(); ++i)
    CHECK(doubled.mic_signal[i] == 2.0 * base.mic_signal[i]);

  Capture sesqui = render_capture(one_device_scene(2.0, 1.5), 1);
  for (size_t i = 0; i < base.mic_signal.size(); i += 53)
    CHECK(sesqui.mic_signal[i] == doctest::Approx(1.5 * base.mic_signal[i]).epsilon(1e-12));
}

TEST_CASE("rendering is a pure function of the scene") {
  AcousticScene scene = one_device_scene(2.0);
  scene.noise_level_db = 50.0;
  Capture a = render_capture(scene, 1);
  Capture b = render_capture(scene, 1);
  CHECK(same_samples(a.mic_signal, b.mic_signal));
}

TEST_CASE("directivity attenuates the direct path by -6 dB times (1 - cos)") {
  std::vector<PathComponent> none;
  for (double delta : {0.0, 30.0, 60.0, 90.0, 180.0}) {
    // source faces `delta` away from the device bearing (device at bearing 0)
    auto paths = orientation_paths(delta, 0.0, none);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].relative_level_db ==
          doctest::Approx(direct_level_db(delta)).epsilon(1e-12));
    CHECK(paths[0].bearing_deg == 180.0);  // reported looking back at the source
  }
  CHECK(direct_level_db(60.0) == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(direct_level_db(90.0) == doctest::Approx(-6.0).epsilon(1e-12));
}

TEST_CASE("wider facing offsets strictly lower the direct-to-reflected ratio") {
  std::vector<PathComponent> base = {{215.0, -8.0}};
  auto at30 = orientation_paths(30.0, 0.0, base);
  auto at60 = orientation_paths(60.0, 0.0, base);
  double ratio30 = at30[0].relative_level_db - at30[1].relative_level_db;
  double ratio60 = at60[0].relative_level_db - at60[1].relative_level_db;
  CHECK(ratio60 < ratio30);
  // reflections pass through untouched
  CHECK(at30[1].bearing_deg == 215.0);
  CHECK(at30[1].relative_level_db == -8.0);
  std::vector<PathComponent> bad = {{10.0, 1.0}};
  CHECK_THROWS_AS(orientation_paths(0.0, 0.0, bad), ArgumentError);
}

TEST_CASE("device paths use the scene geometry and per-device templates") {
  AcousticScene scene = one_device_scene(1.0);
  scene.reflections[1] = {{215.0, -8.0}, {130.0, -12.0}};
  auto paths = device_paths(scene, 1);
  REQUIRE(paths.size() == 3);
  CHECK(paths[0].bearing_deg == 180.0);  // reciprocal of the 0-degree bearing
  CHECK(paths[0].relative_level_db == doctest::Approx(0.0));
  CHECK(paths[1].bearing_deg == 215.0);
  CHECK(paths[2].relative_level_db == -12.0);
}

TEST_CASE("paths sum coherently") {
  AcousticScene plain = one_device_scene(2.0);
  AcousticScene echoed = plain;
  double level = 20.0 * std::log10(0.5);  // an extra arrival at half amplitude
  echoed.reflections[1] = {{90.0, level}};

  Capture a = render_capture(plain, 1);
  Capture b = render_capture(echoed, 1);
  REQUIRE(a.mic_signal.size() == b.mic_signal.size());
  for (size_t i = 0; i < a.mic_signal.size(); i += 71)
    CHECK(b.mic_signal[i] == doctest::Approx(1.5 * a.mic_signal[i]).epsilon(1e-12));
}

TEST_CASE("ambient noise has the configured level and is independent per device") {
  AcousticScene scene = one_device_scene(1.0);
  scene.source.corpus_id.clear();  // noise only
  DeviceSpec d2;
  d2.id = 2;
  d2.position = {4.0, 6.0};
  scene.devices.push_back(d2);
  scene.devices[0].is_playing = true;  // keeps the render length defined
  scene.waveforms[spk_key(1)] = synth_playback_bed(5, 2.0, scene.sample_rate);
  scene.playback_level_db = -1.0 / 0.0;  // silent program: pure noise remains
  scene.noise_level_db = 61.0;

  Capture c2 = render_capture(scene, 2);
  double want = amplitude_from_db(61.0);
  CHECK(rms(c2.mic_signal) == doctest::Approx(want).epsilon(0.05));

  // different seed, different noise
  AcousticScene reseeded = scene;
  reseeded.rng_seed = 78;
  CHECK_FALSE(same_samples(render_capture(reseeded, 2).mic_signal, c2.mic_signal));

  // devices draw uncorrelated streams
  Capture c1 = render_capture(scene, 1);
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (size_t i = 0; i < c1.mic_signal.size(); ++i) {
    dot += c1.mic_signal[i] * c2.mic_signal[i];
    n1 += c1.mic_signal[i] * c1.mic_signal[i];
    n2 += c2.mic_signal[i] * c2.mic_signal[i];
  }
  CHECK(std::fabs(dot) / std::sqrt(n1 * n2) < 0.05);
}

TEST_CASE("speaker leakage reaches the neighbour but never the own mic") {
  AcousticScene scene;
  scene.room_max = {10.0, 10.0};
  scene.source.position = {5.0, 9.0};  // silent
  DeviceSpec player;
  player.id = 1;
  player.position = {2.0, 2.0};
  player.is_playing = true;
  player.spk_gain = 1.3;
  DeviceSpec listener;
  listener.id = 2;
  listener.position = {4.0, 2.0};
  listener.mic_gain = 1.1;
  scene.devices = {player, listener};
  scene.playback_level_db = 66.0;
  scene.waveforms[spk_key(1)] = synth_playback_bed(21, 1.0, scene.sample_rate);

  const auto& bed = scene.waveforms.at(spk_key(1)).samples;
  double scaled = amplitude_from_db(66.0) / rms(bed);

  Capture at_listener = render_capture(scene, 2);
  double g = scaled * 1.3 / 2.0 * 1.1;
  REQUIRE(at_listener.mic_signal.size() == bed.size());
  for (size_t i = 0; i < bed.size(); i += 41)
    CHECK(at_listener.mic_signal[i] == doctest::Approx(g * bed[i]).epsilon(1e-12));
  CHECK(at_listener.ref_signal.empty());

  Capture at_player = render_capture(scene, 1);
  for (double s : at_player.mic_signal) CHECK(s == 0.0);  // echo-cancelled
  // the reference channel is the pre-gain program copy
  REQUIRE(at_player.ref_signal.size() == bed.size());
  for (size_t i = 0; i < bed.size(); i += 41)
    CHECK(at_player.ref_signal[i] == doctest::Approx(scaled * bed[i]).epsilon(1e-12));
}

TEST_CASE("a playing device still hears the source and the other players") {
  AcousticScene scene = one_device_scene(1.0);
  scene.devices[0].is_playing = true;
  scene.waveforms[spk_key(1)] = synth_playback_bed(3, 1.4, scene.sample_rate);

  AcousticScene idle = scene;
  idle.devices[0].is_playing = false;
  idle.waveforms.erase(spk_key(1));

  Capture playing = render_capture(scene, 1);
  Capture quiet = render_capture(idle, 1);
  // own playback affects only the reference channel, not the mic
  REQUIRE(playing.mic_signal.size() >= quiet.mic_signal.size());
  for (size_t i = 0; i < quiet.mic_signal.size(); ++i)
    CHECK(playing.mic_signal[i] == quiet.mic_signal[i]);
  CHECK_FALSE(playing.ref_signal.empty());
}

TEST_CASE("rendering an empty scene is an error") {
  AcousticScene scene = one_device_scene(1.0);
  scene.source.corpus_id.clear();
  CHECK_THROWS_AS(render_capture(scene, 1), SceneError);
}

TEST_CASE("doa observations: deterministic, jitter-sized spread") {
  AcousticScene scene = one_device_scene(2.0);
  DoaConfig cfg;
  cfg.frames = 20000;
  cfg.jitter_deg = 0.5;

  auto a = doa_observations(scene, 1, cfg);
  auto b = doa_observations(scene, 1, cfg);
  REQUIRE(a.size() == 20000);
  CHECK(same_samples(a, b));

  // single path: spread comes from the jitter alone
  double var = doa_variance(a);
  CHECK(var == doctest::Approx(0.25).epsilon(0.05));

  DoaConfig noj;
  noj.frames = 64;
  noj.jitter_deg = 0.0;
  for (double deg : doa_observations(scene, 1, noj)) CHECK(deg == 180.0);

  CHECK_THROWS_AS(doa_observations(scene, 1, DoaConfig{0, 0.5}), ArgumentError);
  CHECK_THROWS_AS(doa_observations(scene, 1, DoaConfig{8, -1.0}), ArgumentError);
}

TEST_CASE("reflection mixtures raise the bearing variance by a known amount") {
  // the same three layouts the acceptance run sweeps, checked against the
  // closed-form mixture variance
  DoaConfig cfg;
  cfg.frames = 10000;
  cfg.jitter_deg = 0.5;

  auto variance_of = [&](const std::vector<PathComponent>& reflections) {
    AcousticScene scene = one_device_scene(2.0);
    if (!reflections.empty()) scene.reflections[1] = reflections;
    return doa_variance(doa_observations(scene, 1, cfg));
  };

  auto closed_form = [&](const std::vector<PathComponent>& reflections) {
    std::vector<double> w = {1.0}, o = {0.0};
    for (const auto& r : reflections) {
      w.push_back(std::pow(10.0, r.relative_level_db / 10.0));
      o.push_back(r.bearing_deg - 180.0);
    }
    double total = 0.0, mean = 0.0;
    for (size_t i = 0; i < w.size(); ++i) total += w[i];
    for (size_t i = 0; i < w.size(); ++i) mean += w[i] / total * o[i];
    double var = 0.0;
    for (size_t i = 0; i < w.size(); ++i)
      var += w[i] / total * (o[i] - mean) * (o[i] - mean);
    return var + cfg.jitter_deg * cfg.jitter_deg;
  };

  std::vector<PathComponent> none;
  std::vector<PathComponent> single = {{215.0, -8.0}};
  std::vector<PathComponent> twin = {{215.0, -8.0}, {130.0, -12.0}};

  double ga = variance_of(none);
  double gb = variance_of(single);
  double gc = variance_of(twin);

  CHECK(ga < gb);
  CHECK(gb < gc);
  CHECK(ga == doctest::Approx(closed_form(none)).epsilon(0.05));
  CHECK(gb == doctest::Approx(closed_form(single)).epsilon(0.10));
  CHECK(gc == doctest::Approx(closed_form(twin)).epsilon(0.10));
}

TEST_CASE("analytic received level and snr") {
  AcousticScene scene = one_device_scene(1.0, 1.0, 70.0);
  CHECK(received_level_db(scene, 1) == doctest::Approx(70.0).epsilon(1e-12));
  CHECK(std::isinf(snr_db(scene, 1)));

  AcousticScene far = one_device_scene(2.0, 1.0, 70.0);
  CHECK(received_level_db(far, 1) ==
        doctest::Approx(70.0 - 20.0 * std::log10(2.0)).epsilon(1e-12));

  AcousticScene hot = one_device_scene(1.0, 2.0, 70.0);
  CHECK(received_level_db(hot, 1) ==
        doctest::Approx(70.0 + 20.0 * std::log10(2.0)).epsilon(1e-12));

  far.noise_level_db = 61.0;
  CHECK(snr_db(far, 1) ==
        doctest::Approx(70.0 - 20.0 * std::log10(2.0) - 61.0).epsilon(1e-12));
}
