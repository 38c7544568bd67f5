#include "wakearb/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include "wakearb/errors.hpp"
#include "wakearb/message.hpp"
#include "wakearb/rng.hpp"
#include "wakearb/simulate.hpp"
#include "wakearb/socket_transport.hpp"
#include "wakearb/toml.hpp"
#include "wakearb/waveform.hpp"

namespace wakearb {

// ---- pure coefficient math ---------------------------------------------------

double StandardEnergyTable::at(double d_m) const {
  auto it = entries.find(d_m);
  if (it == entries.end())
    throw CalibrationError("standard energy table has no entry at " + std::to_string(d_m) +
                           " m");
  return it->second;
}

double mic_gain_coefficient(double device_energy, double standard_energy) {
  if (!(device_energy > 0.0))
    throw ArgumentError("mic_gain_coefficient: device energy must be > 0");
  if (!(standard_energy > 0.0))
    throw ArgumentError("mic_gain_coefficient: standard energy must be > 0");
  return device_energy / standard_energy;
}

double finalize_gain(const std::vector<std::pair<double, double>>& per_distance,
                     const std::vector<double>& weights) {
  if (per_distance.empty()) throw ArgumentError("finalize_gain: no coefficients");
  std::vector<double> w = weights;
  if (w.empty()) w.assign(per_distance.size(), 1.0);
  if (w.size() != per_distance.size())
    throw ArgumentError("finalize_gain: weight count does not match coefficient count");
  double wsum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ArgumentError("finalize_gain: weights must be finite and non-negative");
    wsum += x;
  }
  if (!(wsum > 0.0)) throw ArgumentError("finalize_gain: weights sum to zero");
  double acc = 0.0;
  for (size_t i = 0; i < w.size(); ++i) acc += w[i] * per_distance[i].second;
  return acc / wsum;
}

double interference_coefficient(double heard_energy, double self_energy) {
  if (!(self_energy > 0.0))
    throw ArgumentError("interference_coefficient: self energy must be > 0");
  if (heard_energy < 0.0)
    throw ArgumentError("interference_coefficient: heard energy must be >= 0");
  return heard_energy / self_energy;
}

std::optional<Position> calibration_placement(const AcousticScene& scene,
                                              uint32_t device_id, double want_m) {
  if (!(want_m > 0.0)) throw ArgumentError("calibration distance must be > 0");
  const DeviceSpec* dev = nullptr;
  for (const auto& d : scene.devices)
    if (d.id == device_id) dev = &d;
  if (!dev) throw SceneError("unknown device " + std::to_string(device_id));

  double cx = 0.5 * (scene.room_min.x_m + scene.room_max.x_m);
  double cy = 0.5 * (scene.room_min.y_m + scene.room_max.y_m);
  double dx = cx - dev->position.x_m;
  double dy = cy - dev->position.y_m;
  double n = std::hypot(dx, dy);
  double ux = 1.0, uy = 0.0;  // device sits dead centre: walk along +x
  if (n > 1e-9) {
    ux = dx / n;
    uy = dy / n;
  }
  Position p{dev->position.x_m + want_m * ux, dev->position.y_m + want_m * uy};
  if (p.x_m < scene.room_min.x_m || p.x_m > scene.room_max.x_m || p.y_m < scene.room_min.y_m ||
      p.y_m > scene.room_max.y_m)
    return std::nullopt;
  for (const auto& other : scene.devices)  // nobody stands inside a device
    if (distance_m(p, other.position) < 1e-3) return std::nullopt;
  return p;
}

StandardEnergyTable build_standard_energy_table(const std::string& corpus_id,
                                                double level_db,
                                                const std::vector<double>& distances,
                                                const MeasurePipeline& measure,
                                                int sample_rate) {
  if (!is_corpus_id(corpus_id)) throw ArgumentError("unknown corpus id '" + corpus_id + "'");
  if (distances.empty()) throw ArgumentError("standard table needs at least one distance");
  double dmax = 0.0;
  for (double d : distances) {
    if (!(d >= 0.01)) throw ArgumentError("calibration distances must be at least 0.01 m");
    dmax = std::max(dmax, d);
  }
  if (dmax > 90.0) throw ArgumentError("calibration distances beyond 90 m are unsupported");

  // free field: one reference microphone (gain exactly 1), no reflections,
  // no noise, speaker facing the microphone head-on
  AcousticScene s;
  s.sample_rate = sample_rate;
  s.rng_seed = 0;
  s.noise_level_db = kNoNoiseDb;
  s.room_min = {0.0, 0.0};
  s.room_max = {dmax + 2.0, 4.0};
  DeviceSpec ref;
  ref.id = 1;
  ref.position = {1.0, 2.0};
  ref.mic_gain = 1.0;
  ref.spk_gain = 0.0;
  s.devices = {ref};
  s.waveforms[corpus_id] = synth_wake_word(corpus_id, sample_rate);
  s.source.corpus_id = corpus_id;
  s.source.level_db = level_db;

  StandardEnergyTable table;
  table.corpus_id = corpus_id;
  table.level_db = level_db;
  for (double d : distances) {
    s.source.position = {1.0 + d, 2.0};
    s.source.facing_deg = bearing_deg(s.source.position, ref.position);
    validate_scene(s);
    Capture cap = render_capture(s, ref.id);
    double e = measure_energy(cap.mic_signal, measure);
    if (!(e > 0.0))
      throw CalibrationError("standard energy at " + std::to_string(d) + " m is not positive");
    table.entries[d] = e;
  }
  return table;
}

// ---- protocol actors ----------------------------------------------------------

// The calibration "room": one scene shared by the orchestrator (which moves
// the person and the playback around) and the devices (which render their own
// captures from it on demand).
struct CalibrationSession::World {
  std::mutex mu;
  AcousticScene scene;
  MeasurePipeline measure;
};

namespace {

struct WorldRef {
  std::mutex* mu = nullptr;
  AcousticScene* scene = nullptr;
  const MeasurePipeline* measure = nullptr;
};

struct CalibStep {
  enum class Kind { MoveSource, SilenceSource, Exchange };
  Kind kind = Kind::Exchange;
  // MoveSource
  Position position{};
  double facing_deg = 0.0;
  std::string corpus;
  double level_db = 70.0;
  // Exchange
  uint32_t target = 0;
  CalibAction action = CalibAction::ReportEnergy;
  int group = -1;  // EnergyReply sink (ReportEnergy only)
};

const char* action_name(CalibAction a) {
  switch (a) {
    case CalibAction::Play: return "play";
    case CalibAction::Stop: return "stop";
    case CalibAction::ReportEnergy: return "report-energy";
  }
  return "?";
}

// Walks a fixed program of world mutations and command/reply exchanges.
// Every exchange gets one retry after handshake_timeout_ms, then the whole
// run is abandoned with an error naming the silent device.
class Orchestrator final : public Actor, public Finishing {
 public:
  Orchestrator(uint32_t id, WorldRef world, std::vector<CalibStep> program, size_t n_groups,
               double timeout_ms)
      : id_(id), world_(world), program_(std::move(program)), groups_(n_groups),
        timeout_ms_(timeout_ms) {}

  void on_start(Runtime& rt) override {
    next_seq_ = first_seq(id_);
    advance(rt);
  }

  void on_message(Runtime& rt, uint32_t from, const std::vector<uint8_t>& frame) override {
    if (done_ || !awaiting_) return;  // nothing outstanding: stray reply
    Message m;
    try {
      m = decode(frame);
    } catch (const CodecError&) {
      return;
    }
    if (from != cur().target || m.sender_id != cur().target) return;

    if (cur().action == CalibAction::ReportEnergy) {
      const auto* er = std::get_if<EnergyReply>(&m.body);
      if (!er || er->device_id != cur().target) return;
      groups_[static_cast<size_t>(cur().group)].push_back(er->energy);
    } else {
      const auto* ack = std::get_if<HandshakeAck>(&m.body);
      if (!ack || !outstanding_.count(ack->ack_seq)) return;
    }
    awaiting_ = false;
    outstanding_.clear();
    ++index_;
    advance(rt);
  }

  void on_timer(Runtime& rt, int tag) override {
    if (done_ || !awaiting_ || tag != epoch_) return;  // completed or superseded
    if (attempt_ == 0) {
      send_current(rt);  // the single retry
      return;
    }
    error_ = "device " + std::to_string(cur().target) + " did not answer a " +
             action_name(cur().action) + " command after a retry";
    done_ = true;
  }

  bool finished() const override { return done_; }
  const std::string& error() const { return error_; }
  const std::vector<std::vector<double>>& groups() const { return groups_; }
  double end_ms() const { return end_ms_; }

 private:
  const CalibStep& cur() const { return program_[index_]; }

  void advance(Runtime& rt) {
    while (index_ < program_.size()) {
      const CalibStep& step = program_[index_];
      if (step.kind == CalibStep::Kind::MoveSource) {
        std::lock_guard<std::mutex> lock(*world_.mu);
        world_.scene->source.position = step.position;
        world_.scene->source.facing_deg = step.facing_deg;
        world_.scene->source.corpus_id = step.corpus;
        world_.scene->source.level_db = step.level_db;
        ++index_;
        continue;
      }
      if (step.kind == CalibStep::Kind::SilenceSource) {
        std::lock_guard<std::mutex> lock(*world_.mu);
        world_.scene->source.corpus_id.clear();
        ++index_;
        continue;
      }
      awaiting_ = true;
      attempt_ = -1;
      outstanding_.clear();
      send_current(rt);
      return;
    }
    end_ms_ = rt.now_ms();
    done_ = true;
  }

  void send_current(Runtime& rt) {
    ++attempt_;
    Message m;
    m.sender_id = id_;
    m.seq = next_seq_++;
    m.body = CalibCmd{cur().action, cur().target};
    outstanding_.insert(m.seq);
    rt.send(cur().target, encode(m));
    ++epoch_;
    rt.set_timer(timeout_ms_, epoch_);
  }

  uint32_t id_;
  WorldRef world_;
  std::vector<CalibStep> program_;
  std::vector<std::vector<double>> groups_;
  double timeout_ms_;
  uint32_t next_seq_ = 0;
  size_t index_ = 0;
  bool awaiting_ = false;
  int attempt_ = 0;
  int epoch_ = 0;
  std::set<uint32_t> outstanding_;
  bool done_ = false;
  std::string error_;
  double end_ms_ = 0.0;
};

// A device during calibration: obeys play/stop, and on request renders its
// current capture and reports one band energy — the reference channel while
// it is the one playing, the microphone otherwise.
class CalibDevice final : public Actor {
 public:
  CalibDevice(uint32_t id, WorldRef world) : id_(id), world_(world) {}

  void on_start(Runtime&) override { next_seq_ = first_seq(id_); }

  void on_message(Runtime& rt, uint32_t from, const std::vector<uint8_t>& frame) override {
    Message m;
    try {
      m = decode(frame);
    } catch (const CodecError&) {
      return;
    }
    const auto* cmd = std::get_if<CalibCmd>(&m.body);
    if (!cmd || cmd->target_id != id_) return;

    Message reply;
    reply.sender_id = id_;
    reply.seq = next_seq_++;
    switch (cmd->action) {
      case CalibAction::Play:
      case CalibAction::Stop: {
        std::lock_guard<std::mutex> lock(*world_.mu);
        for (auto& d : world_.scene->devices)
          if (d.id == id_) d.is_playing = (cmd->action == CalibAction::Play);
        reply.body = HandshakeAck{m.seq};
        break;
      }
      case CalibAction::ReportEnergy: {
        double e = 0.0;
        {
          std::lock_guard<std::mutex> lock(*world_.mu);
          Capture cap = render_capture(*world_.scene, id_);
          bool playing = false;
          for (const auto& d : world_.scene->devices)
            if (d.id == id_) playing = d.is_playing;
          e = measure_energy(playing ? cap.ref_signal : cap.mic_signal, *world_.measure);
        }
        reply.body = EnergyReply{id_, e};
        break;
      }
    }
    rt.send(from, encode(reply));
  }

 private:
  uint32_t id_;
  WorldRef world_;
  uint32_t next_seq_ = 0;
};

struct PumpResult {
  std::vector<std::vector<double>> groups;
  double end_ms = 0.0;
};

size_t count_exchanges(const std::vector<CalibStep>& program) {
  size_t n = 0;
  for (const auto& s : program)
    if (s.kind == CalibStep::Kind::Exchange) ++n;
  return n;
}

PumpResult run_calib_pump(WorldRef world, uint32_t orch_id,
                          const std::vector<uint32_t>& device_ids,
                          std::vector<CalibStep> program, size_t n_groups,
                          const NetworkProfile& profile, uint64_t seed, TransportKind kind,
                          double timeout_ms) {
  double budget = 1000.0 + static_cast<double>(count_exchanges(program)) *
                               (2.0 * timeout_ms +
                                8.0 * (profile.latency_mean_ms + 4.0 * profile.latency_jitter_ms));

  Orchestrator orch(orch_id, world, std::move(program), n_groups, timeout_ms);
  std::vector<std::unique_ptr<CalibDevice>> devices;
  auto build_and_run = [&](auto& net) {
    net.add_actor(orch_id, &orch);
    for (uint32_t id : device_ids) {
      devices.push_back(std::make_unique<CalibDevice>(id, world));
      net.add_actor(id, devices.back().get());
    }
    net.run(budget);
  };
  if (kind == TransportKind::Sim) {
    SimNetwork net(profile, seed);
    build_and_run(net);
  } else {
    SocketNetwork net(profile, seed);
    build_and_run(net);
  }

  if (!orch.error().empty()) throw CalibrationError(orch.error());
  if (!orch.finished()) throw CalibrationError("calibration run exceeded its time budget");
  return PumpResult{orch.groups(), orch.end_ms()};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

// ---- session -------------------------------------------------------------------

CalibrationSession::CalibrationSession(const AcousticScene& scene, CalibrationPlan plan,
                                       NetworkProfile profile, uint64_t seed,
                                       TransportKind kind)
    : plan_(std::move(plan)), profile_(std::move(profile)), seed_(seed), kind_(kind) {
  validate_scene(scene);
  if (!is_corpus_id(plan_.corpus_id))
    throw ArgumentError("unknown corpus id '" + plan_.corpus_id + "'");
  if (plan_.distances.empty()) throw ArgumentError("calibration plan has no distances");
  if (!plan_.weights.empty() && plan_.weights.size() != plan_.distances.size())
    throw ArgumentError("calibration weights must match the distance list");
  if (plan_.handshakes < 1) throw ArgumentError("calibration needs at least one handshake");
  if (!(plan_.handshake_timeout_ms > 0.0))
    throw ArgumentError("handshake timeout must be positive");

  world_ = std::make_unique<World>();
  world_->scene = scene;
  world_->measure = plan_.measure;
  // calibration happens in a controlled quiet room: no noise, no reflective
  // clutter, nothing playing, nobody speaking yet
  world_->scene.noise_level_db = kNoNoiseDb;
  world_->scene.reflections.clear();
  world_->scene.source.corpus_id.clear();
  for (auto& d : world_->scene.devices) d.is_playing = false;
  world_->scene.waveforms[plan_.corpus_id] =
      synth_wake_word(plan_.corpus_id, scene.sample_rate);

  uint32_t max_id = 0;
  for (const auto& d : world_->scene.devices) max_id = std::max(max_id, d.id);
  orchestrator_id_ = max_id + 1;

  table_ = build_standard_energy_table(plan_.corpus_id, plan_.level_db, plan_.distances,
                                       plan_.measure, scene.sample_rate);
  result_.corpus_id = plan_.corpus_id;
  result_.standard_table = table_;
  result_.started_ms = 0.0;
}

CalibrationSession::~CalibrationSession() = default;

GainCalibration CalibrationSession::run_gain_calibration(uint32_t device_id) {
  if (phase_ == Phase::Interference || phase_ == Phase::Done)
    throw CalibrationError("gain calibration cannot run after the interference pass");
  phase_ = Phase::Gain;

  const DeviceSpec* dev = nullptr;
  std::vector<uint32_t> ids;
  for (const auto& d : world_->scene.devices) {
    ids.push_back(d.id);
    if (d.id == device_id) dev = &d;
  }
  std::sort(ids.begin(), ids.end());
  if (!dev)
    throw CalibrationError("cannot calibrate unknown device " + std::to_string(device_id));

  GainCalibration gc;
  gc.device_id = device_id;

  std::vector<CalibStep> program;
  std::vector<std::pair<double, int>> feasible;  // (distance, group)
  std::vector<double> feasible_weights;
  int n_groups = 0;
  for (size_t i = 0; i < plan_.distances.size(); ++i) {
    double d = plan_.distances[i];
    auto pos = calibration_placement(world_->scene, device_id, d);
    if (!pos) {
      gc.skipped.push_back(d);
      result_.log.push_back("device " + std::to_string(device_id) + ": no room to stand " +
                            std::to_string(d) + " m away, distance skipped");
      continue;
    }
    CalibStep move;
    move.kind = CalibStep::Kind::MoveSource;
    move.position = *pos;
    move.facing_deg = bearing_deg(*pos, dev->position);
    move.corpus = plan_.corpus_id;
    move.level_db = plan_.level_db;
    program.push_back(move);
    for (int h = 0; h < plan_.handshakes; ++h) {
      CalibStep q;
      q.kind = CalibStep::Kind::Exchange;
      q.target = device_id;
      q.action = CalibAction::ReportEnergy;
      q.group = n_groups;
      program.push_back(q);
    }
    feasible.emplace_back(d, n_groups);
    if (!plan_.weights.empty()) feasible_weights.push_back(plan_.weights[i]);
    ++n_groups;
  }
  if (feasible.empty())
    throw CalibrationError("no feasible calibration distance for device " +
                           std::to_string(device_id));
  CalibStep quiet;
  quiet.kind = CalibStep::Kind::SilenceSource;
  program.push_back(quiet);

  WorldRef ref{&world_->mu, &world_->scene, &world_->measure};
  PumpResult pr = run_calib_pump(
      ref, orchestrator_id_, ids, std::move(program), static_cast<size_t>(n_groups),
      profile_, derive_seed(seed_, 0x63616c67ull /* gain pass */, device_id, pump_count_++),
      kind_, plan_.handshake_timeout_ms);
  clock_ms_ += pr.end_ms;

  for (const auto& [d, g] : feasible) {
    double e = mean_of(pr.groups[static_cast<size_t>(g)]);
    gc.per_distance.emplace_back(d, mic_gain_coefficient(e, table_.at(d)));
  }
  gc.final_b = finalize_gain(gc.per_distance, feasible_weights);
  if (feasible_weights.empty()) {
    gc.weights.assign(gc.per_distance.size(), 1.0 / static_cast<double>(gc.per_distance.size()));
  } else {
    double wsum = 0.0;
    for (double w : feasible_weights) wsum += w;
    for (double w : feasible_weights) gc.weights.push_back(w / wsum);
  }
  final_b_[device_id] = gc.final_b;

  auto it = std::find_if(result_.gains.begin(), result_.gains.end(),
                         [&](const GainCalibration& g) { return g.device_id == device_id; });
  if (it != result_.gains.end())
    *it = gc;
  else
    result_.gains.push_back(gc);
  std::sort(result_.gains.begin(), result_.gains.end(),
            [](const GainCalibration& a, const GainCalibration& b) {
              return a.device_id < b.device_id;
            });
  return gc;
}

CalibrationMatrix CalibrationSession::run_interference_calibration() {
  std::vector<uint32_t> ids;
  for (const auto& d : world_->scene.devices) ids.push_back(d.id);
  std::sort(ids.begin(), ids.end());
  for (uint32_t id : ids)
    if (!final_b_.count(id))
      throw CalibrationError("interference pass needs a finished gain for device " +
                             std::to_string(id));
  phase_ = Phase::Interference;

  {
    std::lock_guard<std::mutex> lock(world_->mu);
    const Waveform& w = world_->scene.waveforms.at(plan_.corpus_id);
    for (uint32_t id : ids) world_->scene.waveforms[spk_key(id)] = w;
  }

  struct RowPlan {
    uint32_t playing = 0;
    int self_group = -1;
    std::vector<std::pair<uint32_t, int>> listeners;  // (listener, group)
  };
  std::vector<CalibStep> program;
  std::vector<RowPlan> row_plans;
  int n_groups = 0;
  auto exchange = [](uint32_t target, CalibAction action, int group) {
    CalibStep s;
    s.kind = CalibStep::Kind::Exchange;
    s.target = target;
    s.action = action;
    s.group = group;
    return s;
  };
  for (uint32_t i : ids) {
    RowPlan rp;
    rp.playing = i;
    program.push_back(exchange(i, CalibAction::Play, -1));
    rp.self_group = n_groups;
    for (int h = 0; h < plan_.handshakes; ++h)
      program.push_back(exchange(i, CalibAction::ReportEnergy, n_groups));
    ++n_groups;
    for (uint32_t j : ids) {
      if (j == i) continue;
      rp.listeners.emplace_back(j, n_groups);
      for (int h = 0; h < plan_.handshakes; ++h)
        program.push_back(exchange(j, CalibAction::ReportEnergy, n_groups));
      ++n_groups;
    }
    program.push_back(exchange(i, CalibAction::Stop, -1));
    row_plans.push_back(std::move(rp));
  }

  WorldRef ref{&world_->mu, &world_->scene, &world_->measure};
  PumpResult pr = run_calib_pump(ref, orchestrator_id_, ids, std::move(program),
                                 static_cast<size_t>(n_groups), profile_,
                                 derive_seed(seed_, 0x63616c69ull /* interference pass */,
                                             pump_count_++),
                                 kind_, plan_.handshake_timeout_ms);
  clock_ms_ += pr.end_ms;

  CalibrationMatrix m;
  m.ids = ids;
  m.coeff.assign(ids.size(), std::vector<double>(ids.size(), 0.0));
  for (size_t k = 0; k < ids.size(); ++k) m.coeff[k][k] = final_b_.at(ids[k]);

  result_.rows.clear();
  for (const auto& rp : row_plans) {
    double self = mean_of(pr.groups[static_cast<size_t>(rp.self_group)]);
    if (!(self > 0.0))
      throw CalibrationError("device " + std::to_string(rp.playing) +
                             " reported no reference energy while playing");
    InterferenceRow row;
    row.playing_id = rp.playing;
    row.self_energy = self;
    for (const auto& [j, g] : rp.listeners) {
      double heard = final_b_.at(j) * mean_of(pr.groups[static_cast<size_t>(g)]);
      double a = interference_coefficient(heard, self);
      row.coefficients[j] = a;
      m.coeff[m.index_of(rp.playing)][m.index_of(j)] = a;
      if (a >= final_b_.at(j))
        result_.log.push_back("playback of device " + std::to_string(rp.playing) +
                              " reaches device " + std::to_string(j) +
                              " above direct pickup strength; check the layout");
    }
    result_.rows.push_back(std::move(row));
  }

  phase_ = Phase::Done;
  result_.matrix = m;
  result_.finished_ms = clock_ms_;
  return m;
}

CalibrationResult CalibrationSession::run_all() {
  std::vector<uint32_t> ids;
  for (const auto& d : world_->scene.devices) ids.push_back(d.id);
  std::sort(ids.begin(), ids.end());
  for (uint32_t id : ids) run_gain_calibration(id);
  run_interference_calibration();
  return result_;
}

CalibrationResult run_calibration(const AcousticScene& scene, const CalibrationPlan& plan,
                                  const NetworkProfile& profile, uint64_t seed,
                                  TransportKind kind) {
  CalibrationSession session(scene, plan, profile, seed, kind);
  return session.run_all();
}

// ---- artifact io ----------------------------------------------------------------

namespace {

toml::Value float_array(const std::vector<double>& v) {
  toml::Array a;
  for (double x : v) a.push_back(toml::Value(x));
  return toml::Value(std::move(a));
}

const toml::Array& need_array(const toml::Table& t, const std::string& key,
                              const std::string& where) {
  if (!t.has(key)) throw ConfigError(where + ": missing '" + key + "'");
  if (!t.at(key).is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
  return t.at(key).as_array();
}

std::vector<double> float_vector(const toml::Array& a, const std::string& where) {
  std::vector<double> out;
  for (const auto& v : a) {
    if (!v.is_number()) throw ConfigError(where + ": expected numbers");
    out.push_back(v.as_float());
  }
  return out;
}

}  // namespace

void write_calibration_file(const std::string& path, const CalibrationResult& r) {
  toml::Document doc;
  doc.root.set("schema", toml::Value("wakearb-calibration-v1"));
  doc.root.set("corpus", toml::Value(r.corpus_id));
  doc.root.set("started_ms", toml::Value(r.started_ms));
  doc.root.set("finished_ms", toml::Value(r.finished_ms));
  if (!r.log.empty()) {
    toml::Array notes;
    for (const auto& s : r.log) notes.push_back(toml::Value(s));
    doc.root.set("notes", toml::Value(std::move(notes)));
  }

  toml::Table std_t;
  std_t.set("corpus", toml::Value(r.standard_table.corpus_id));
  std_t.set("level_db", toml::Value(r.standard_table.level_db));
  std::vector<double> dists, energies;
  for (const auto& [d, e] : r.standard_table.entries) {
    dists.push_back(d);
    energies.push_back(e);
  }
  std_t.set("distances_m", float_array(dists));
  std_t.set("energies", float_array(energies));
  doc.tables["standard"] = std_t;

  toml::Table mat;
  toml::Array ids;
  for (uint32_t id : r.matrix.ids) ids.push_back(toml::Value(static_cast<int64_t>(id)));
  mat.set("ids", toml::Value(std::move(ids)));
  toml::Array rows;
  for (const auto& row : r.matrix.coeff) rows.push_back(float_array(row));
  mat.set("rows", toml::Value(std::move(rows)));
  doc.tables["matrix"] = mat;

  for (const auto& g : r.gains) {
    toml::Table t;
    t.set("device", toml::Value(static_cast<int64_t>(g.device_id)));
    t.set("final_b", toml::Value(g.final_b));
    std::vector<double> ds, bs;
    for (const auto& [d, b] : g.per_distance) {
      ds.push_back(d);
      bs.push_back(b);
    }
    t.set("distances_m", float_array(ds));
    t.set("coefficients", float_array(bs));
    t.set("weights", float_array(g.weights));
    t.set("skipped_m", float_array(g.skipped));
    doc.table_arrays["gain"].push_back(std::move(t));
  }

  for (const auto& row : r.rows) {
    toml::Table t;
    t.set("device", toml::Value(static_cast<int64_t>(row.playing_id)));
    t.set("self_energy", toml::Value(row.self_energy));
    toml::Array listeners;
    std::vector<double> coeffs;
    for (const auto& [j, a] : row.coefficients) {
      listeners.push_back(toml::Value(static_cast<int64_t>(j)));
      coeffs.push_back(a);
    }
    t.set("listeners", toml::Value(std::move(listeners)));
    t.set("coefficients", float_array(coeffs));
    doc.table_arrays["interference"].push_back(std::move(t));
  }

  toml::write_file(path, doc);
}

CalibrationResult load_calibration_file(const std::string& path) {
  toml::Document doc = toml::parse_file(path);
  if (doc.root.get_string("schema", "") != "wakearb-calibration-v1")
    throw ConfigError(path + ": not a calibration artifact");

  CalibrationResult r;
  r.corpus_id = doc.root.require_string("corpus");
  r.started_ms = doc.root.get_float("started_ms", 0.0);
  r.finished_ms = doc.root.get_float("finished_ms", 0.0);
  if (doc.root.has("notes"))
    for (const auto& v : doc.root.at("notes").as_array()) r.log.push_back(v.as_string());

  const toml::Table& std_t = doc.table_or_empty("standard");
  r.standard_table.corpus_id = std_t.get_string("corpus", r.corpus_id);
  r.standard_table.level_db = std_t.get_float("level_db", 70.0);
  if (std_t.has("distances_m")) {
    auto ds = float_vector(need_array(std_t, "distances_m", path), path);
    auto es = float_vector(need_array(std_t, "energies", path), path);
    if (ds.size() != es.size())
      throw ConfigError(path + ": standard table distance/energy lengths differ");
    for (size_t i = 0; i < ds.size(); ++i) r.standard_table.entries[ds[i]] = es[i];
  }

  if (!doc.has_table("matrix")) throw ConfigError(path + ": missing [matrix]");
  const toml::Table& mat = doc.table("matrix");
  for (const auto& v : need_array(mat, "ids", path)) {
    int64_t id = v.as_int();
    if (id < 0) throw ConfigError(path + ": negative device id");
    r.matrix.ids.push_back(static_cast<uint32_t>(id));
  }
  if (!std::is_sorted(r.matrix.ids.begin(), r.matrix.ids.end()))
    throw ConfigError(path + ": matrix ids must ascend");
  const toml::Array& rows = need_array(mat, "rows", path);
  if (rows.size() != r.matrix.ids.size())
    throw ConfigError(path + ": matrix row count does not match ids");
  for (const auto& v : rows) {
    if (!v.is_array()) throw ConfigError(path + ": matrix rows must be arrays");
    auto row = float_vector(v.as_array(), path);
    if (row.size() != r.matrix.ids.size())
      throw ConfigError(path + ": matrix is not square");
    r.matrix.coeff.push_back(std::move(row));
  }
  for (size_t i = 0; i < r.matrix.ids.size(); ++i) {
    if (!(r.matrix.coeff[i][i] > 0.0))
      throw ConfigError(path + ": matrix diagonal must be positive");
    for (size_t j = 0; j < r.matrix.ids.size(); ++j)
      if (r.matrix.coeff[i][j] < 0.0)
        throw ConfigError(path + ": matrix entries must be non-negative");
  }

  auto gain_tables = doc.table_arrays.find("gain");
  if (gain_tables != doc.table_arrays.end()) {
    for (const auto& t : gain_tables->second) {
      GainCalibration g;
      g.device_id = static_cast<uint32_t>(t.require_int("device"));
      g.final_b = t.require_float("final_b");
      auto ds = float_vector(need_array(t, "distances_m", path), path);
      auto bs = float_vector(need_array(t, "coefficients", path), path);
      if (ds.size() != bs.size())
        throw ConfigError(path + ": gain distance/coefficient lengths differ");
      for (size_t i = 0; i < ds.size(); ++i) g.per_distance.emplace_back(ds[i], bs[i]);
      if (t.has("weights")) g.weights = float_vector(t.at("weights").as_array(), path);
      if (t.has("skipped_m")) g.skipped = float_vector(t.at("skipped_m").as_array(), path);
      r.gains.push_back(std::move(g));
    }
  }

  auto inter_tables = doc.table_arrays.find("interference");
  if (inter_tables != doc.table_arrays.end()) {
    for (const auto& t : inter_tables->second) {
      InterferenceRow row;
      row.playing_id = static_cast<uint32_t>(t.require_int("device"));
      row.self_energy = t.require_float("self_energy");
      const toml::Array& listeners = need_array(t, "listeners", path);
      auto coeffs = float_vector(need_array(t, "coefficients", path), path);
      if (listeners.size() != coeffs.size())
        throw ConfigError(path + ": interference listener/coefficient lengths differ");
      for (size_t i = 0; i < listeners.size(); ++i)
        row.coefficients[static_cast<uint32_t>(listeners[i].as_int())] = coeffs[i];
      r.rows.push_back(std::move(row));
    }
  }

  return r;
}

}  // namespace wakearb
