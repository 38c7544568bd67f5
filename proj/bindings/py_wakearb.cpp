// Python module: scenario loading, calibration, experiments and the handful
// of pure functions (scores, energies, detection) that notebooks want direct
// access to.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wakearb/calibration.hpp"
#include "wakearb/energy.hpp"
#include "wakearb/errors.hpp"
#include "wakearb/experiment.hpp"
#include "wakearb/rng.hpp"
#include "wakearb/scenario.hpp"
#include "wakearb/scoring.hpp"
#include "wakearb/waveform.hpp"

namespace py = pybind11;
using namespace wakearb;

namespace {

TransportKind transport_of(const std::string& s) {
  if (s == "sim") return TransportKind::Sim;
  if (s == "socket") return TransportKind::Socket;
  throw ArgumentError("unknown transport '" + s + "' (use sim or socket)");
}

MeasurePipeline pipeline_of(int sample_rate, int frame_len, int hop,
                            const std::string& window, double f_lo_hz, double f_hi_hz,
                            double threshold_coeff) {
  MeasurePipeline p;
  p.frame.sample_rate = sample_rate;
  p.frame.frame_len = frame_len;
  p.frame.hop = hop;
  if (window == "hann")
    p.frame.window = Window::Hann;
  else if (window == "rect")
    p.frame.window = Window::Rect;
  else
    throw ArgumentError("unknown window '" + window + "' (use hann or rect)");
  p.band.f_lo_hz = f_lo_hz;
  p.band.f_hi_hz = f_hi_hz;
  p.energy.threshold_coeff = threshold_coeff;
  return p;
}

}  // namespace

PYBIND11_MODULE(_wakearb, m) {
  m.doc() = "competitive wake-word arbitration: simulator, calibration and scoring";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<SceneError>(m, "SceneError");
  py::register_exception<CalibrationError>(m, "CalibrationError");
  py::register_exception<CodecError>(m, "CodecError");
  py::register_exception<ProtocolError>(m, "ProtocolError");
  // ArgumentError derives from std::invalid_argument and maps to ValueError

  py::class_<Waveform>(m, "Waveform")
      .def_readonly("sample_rate", &Waveform::sample_rate)
      .def_readonly("samples", &Waveform::samples)
      .def("duration_s", &Waveform::duration_s)
      .def("__len__", [](const Waveform& w) { return w.samples.size(); });

  m.def("corpus_ids", &corpus_ids);
  m.def("is_corpus_id", &is_corpus_id, py::arg("id"));
  m.def("synth_wake_word", &synth_wake_word, py::arg("id"), py::arg("sample_rate") = 16000);
  m.def("synth_playback_bed", &synth_playback_bed, py::arg("seed"), py::arg("seconds"),
        py::arg("sample_rate") = 16000);
  m.def("write_wav", &write_wav, py::arg("path"), py::arg("waveform"));
  m.def("read_wav", &read_wav, py::arg("path"));

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("name", [](const Scenario& s) { return s.name; })
      .def_readwrite("seed", &Scenario::seed)
      .def_readwrite("trials", &Scenario::trials)
      .def_property_readonly("corpus", [](const Scenario& s) { return s.corpus; })
      .def_property_readonly("device_ids",
                             [](const Scenario& s) {
                               std::vector<uint32_t> ids;
                               for (const auto& d : s.scene.devices) ids.push_back(d.id);
                               std::sort(ids.begin(), ids.end());
                               return ids;
                             })
      .def("serialize", [](const Scenario& s) { return serialize_scenario(s); })
      .def("__repr__", [](const Scenario& s) {
        return "<Scenario '" + s.name + "', " + std::to_string(s.scene.devices.size()) +
               " devices, " + std::to_string(s.trials) + " trials>";
      });

  m.def("parse_scenario", &parse_scenario, py::arg("text"),
        py::arg("origin") = "scenario");
  m.def("load_scenario_file", &load_scenario_file, py::arg("path"));
  m.def("serialize_scenario", &serialize_scenario, py::arg("scenario"));
  m.def("write_scenario_file", &write_scenario_file, py::arg("path"), py::arg("scenario"));

  py::class_<CalibrationMatrix>(m, "CalibrationMatrix")
      .def_readonly("ids", &CalibrationMatrix::ids)
      .def_readonly("rows", &CalibrationMatrix::coeff)
      .def("gain", &CalibrationMatrix::gain, py::arg("device_id"))
      .def("interference", &CalibrationMatrix::interference, py::arg("playing"),
           py::arg("listener"));

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("corpus_id", &CalibrationResult::corpus_id)
      .def_readonly("matrix", &CalibrationResult::matrix)
      .def_readonly("log", &CalibrationResult::log)
      .def("write",
           [](const CalibrationResult& r, const std::string& path) {
             write_calibration_file(path, r);
           },
           py::arg("path"));

  // same procedure the experiment loop uses: scenario-derived seed, loss-free
  // control link (setup handshakes are operator-attended)
  m.def(
      "calibrate",
      [](const Scenario& s, const std::string& transport) {
        NetworkProfile setup = s.network;
        setup.drop_prob = 0.0;
        setup.reorder_prob = 0.0;
        return run_calibration(s.scene, s.calibration.plan, setup,
                               derive_seed(s.seed, 0x63616c62ull), transport_of(transport));
      },
      py::arg("scenario"), py::arg("transport") = "sim",
      py::call_guard<py::gil_scoped_release>());
  m.def("load_calibration_file", &load_calibration_file, py::arg("path"));

  py::class_<ExperimentResult>(m, "ExperimentResult")
      .def_readonly("name", &ExperimentResult::name)
      .def_readonly("seed", &ExperimentResult::seed)
      .def_readonly("master_id", &ExperimentResult::master_id)
      .def_readonly("matrix", &ExperimentResult::matrix)
      .def_property_readonly("trials",
                             [](const ExperimentResult& r) { return r.report.trials; })
      .def_property_readonly("failures",
                             [](const ExperimentResult& r) { return r.report.failures; })
      .def_property_readonly("correct",
                             [](const ExperimentResult& r) { return r.report.correct; })
      .def_property_readonly("accuracy",
                             [](const ExperimentResult& r) { return r.report.accuracy; })
      .def_property_readonly("wins",
                             [](const ExperimentResult& r) { return r.report.wins; })
      .def_property_readonly(
          "failure_dominated",
          [](const ExperimentResult& r) { return failure_dominated(r.report); })
      .def("csv", [](const ExperimentResult& r) { return trials_csv(r); })
      .def("summary", [](const ExperimentResult& r) { return summary_text(r); })
      .def("wire_log",
           [](const ExperimentResult& r) {
             std::vector<uint8_t> b = encode_wire_log(r);
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def("__repr__", [](const ExperimentResult& r) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "<ExperimentResult '%s', accuracy %.4f>",
                      r.name.c_str(), r.report.accuracy);
        return std::string(buf);
      });

  m.def(
      "run_experiment",
      [](const Scenario& s, const std::string& transport) {
        return run_experiment(s, transport_of(transport));
      },
      py::arg("scenario"), py::arg("transport") = "sim",
      py::call_guard<py::gil_scoped_release>());

  m.def("decode_wire_log", [](py::bytes blob) {
    std::string s = blob;
    return decode_wire_log(std::vector<uint8_t>(s.begin(), s.end()));
  });

  m.def(
      "detection_probability",
      [](double snr_db, double snr50_db, double slope_per_db, bool enabled) {
        DetectionModel dm;
        dm.enabled = enabled;
        dm.snr50_db = snr50_db;
        dm.slope_per_db = slope_per_db;
        return detection_probability(dm, snr_db);
      },
      py::arg("snr_db"), py::arg("snr50_db") = 9.0, py::arg("slope_per_db") = 0.6,
      py::arg("enabled") = true);

  m.def("doa_variance", &doa_variance, py::arg("bearings_deg"));

  m.def(
      "joint_scores",
      [](const std::map<uint32_t, double>& calibrated,
         const std::map<uint32_t, double>& variances, double alpha,
         double orientation_weight) {
        ScoreConfig cfg;
        cfg.alpha = alpha;
        cfg.orientation_weight = orientation_weight;
        return joint_scores(calibrated, variances, cfg);
      },
      py::arg("calibrated"), py::arg("variances"), py::arg("alpha") = 1000.0,
      py::arg("orientation_weight") = 0.5);

  m.def(
      "decide",
      [](const std::map<uint32_t, double>& scores, const std::vector<uint32_t>& roster) {
        Decision d = decide(scores, roster);
        return py::make_tuple(d.winner, d.flags);
      },
      py::arg("scores"), py::arg("roster"));

  m.def(
      "measure_energy",
      [](const std::vector<double>& samples, int sample_rate, int frame_len, int hop,
         const std::string& window, double f_lo_hz, double f_hi_hz,
         double threshold_coeff) {
        return measure_energy(samples, pipeline_of(sample_rate, frame_len, hop, window,
                                                   f_lo_hz, f_hi_hz, threshold_coeff));
      },
      py::arg("samples"), py::arg("sample_rate") = 16000, py::arg("frame_len") = 512,
      py::arg("hop") = 256, py::arg("window") = "hann", py::arg("f_lo_hz") = 3000.0,
      py::arg("f_hi_hz") = 6000.0, py::arg("threshold_coeff") = 0.8);
}
