#include "wakearb/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "wakearb/errors.hpp"
#include "wakearb/fft.hpp"
#include "wakearb/rng.hpp"

namespace wakearb {

double rms(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

std::vector<std::string> corpus_ids() {
  std::vector<std::string> ids;
  for (int i = 1; i <= 5; ++i) ids.push_back("male-" + std::to_string(i));
  for (int i = 1; i <= 5; ++i) ids.push_back("female-" + std::to_string(i));
  return ids;
}

bool is_corpus_id(const std::string& id) {
  auto ids = corpus_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

namespace {

uint64_t id_seed(const std::string& id) {
  // FNV-1a, folded through splitmix for avalanche
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return derive_seed(h, 0x77616b65ull /* "wake" */);
}

// raised-cosine fade applied in place at both ends of [begin, end)
void fade_edges(std::vector<double>& x, size_t begin, size_t end, size_t ramp) {
  ramp = std::min(ramp, (end - begin) / 2);
  for (size_t i = 0; i < ramp; ++i) {
    double g = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(i) / ramp);
    x[begin + i] *= g;
    x[end - 1 - i] *= g;
  }
}

// linear chirp between f0 and f1 with a touch of amplitude wobble
void add_chirp(std::vector<double>& x, int fs, size_t begin, size_t len, double f0,
               double f1, double amp, Rng& rng) {
  double phase = rng.uniform() * 2.0 * M_PI;
  double wobble_rate = 2.0 + 4.0 * rng.uniform();  // Hz
  for (size_t i = 0; i < len; ++i) {
    double t = static_cast<double>(i) / fs;
    double f = f0 + (f1 - f0) * static_cast<double>(i) / len;
    phase += 2.0 * M_PI * f / fs;
    double wob = 1.0 + 0.25 * std::sin(2.0 * M_PI * wobble_rate * t);
    x[begin + i] += amp * wob * std::sin(phase);
  }
  fade_edges(x, begin, begin + len, static_cast<size_t>(0.02 * fs));
}

// burst of noise whose spectrum lives in [f_lo, f_hi]: drawn in the frequency
// domain and inverse transformed
void add_band_burst(std::vector<double>& x, int fs, size_t begin, size_t len,
                    double f_lo, double f_hi, double amp, Rng& rng) {
  size_t n = 1;
  while (n < len) n <<= 1;
  std::vector<std::complex<double>> spec(n, {0.0, 0.0});
  for (size_t b = 1; b < n / 2; ++b) {
    double f = static_cast<double>(b) * fs / static_cast<double>(n);
    if (f < f_lo || f >= f_hi) continue;
    double re = rng.gaussian(), im = rng.gaussian();
    spec[b] = {re, im};
    spec[n - b] = std::conj(spec[b]);
  }
  fft(spec, true);
  // normalize burst to unit RMS before the amp is applied
  double acc = 0.0;
  for (size_t i = 0; i < len; ++i) acc += spec[i].real() * spec[i].real();
  double scale = acc > 0.0 ? amp / std::sqrt(acc / len) : 0.0;
  for (size_t i = 0; i < len; ++i) x[begin + i] += scale * spec[i].real();
  fade_edges(x, begin, begin + len, static_cast<size_t>(0.015 * fs));
}

}  // namespace

Waveform synth_wake_word(const std::string& id, int sample_rate) {
  if (!is_corpus_id(id)) throw ArgumentError("unknown corpus id: " + id);
  if (sample_rate < 8000) throw ArgumentError("sample_rate too low for the 3-6 kHz band");

  bool low_register = id.rfind("male-", 0) == 0;
  Rng rng(id_seed(id));

  // register ranges stay inside the 3-6 kHz decision band
  double f_lo = low_register ? 3000.0 : 4400.0;
  double f_hi = low_register ? 4600.0 : 6000.0;
  if (f_hi > sample_rate / 2.0) f_hi = sample_rate / 2.0 * 0.98;

  const int fs = sample_rate;
  const size_t head = static_cast<size_t>(0.15 * fs);
  std::vector<double> x(head, 0.0);

  // two syllables: chirp, short gap, chirp+burst overlay. Durations jittered
  // per id so the ten items are genuinely distinct.
  auto seconds = [&](double lo, double hi) {
    return static_cast<size_t>((lo + (hi - lo) * rng.uniform()) * fs);
  };

  size_t syl1 = seconds(0.28, 0.38);
  size_t gap = seconds(0.05, 0.09);
  size_t syl2 = seconds(0.30, 0.42);

  size_t begin1 = x.size();
  x.resize(x.size() + syl1 + gap + syl2, 0.0);
  double span = f_hi - f_lo;
  add_chirp(x, fs, begin1, syl1, f_lo + 0.1 * span, f_lo + 0.8 * span, 0.9, rng);
  add_band_burst(x, fs, begin1, syl1 / 2, f_lo, f_hi, 0.35, rng);

  size_t begin2 = begin1 + syl1 + gap;
  add_chirp(x, fs, begin2, syl2, f_lo + 0.7 * span, f_lo + 0.2 * span, 0.8, rng);
  add_band_burst(x, fs, begin2 + syl2 / 3, syl2 / 2, f_lo, f_hi, 0.45, rng);

  x.resize(x.size() + head, 0.0);  // tail silence

  // peak-normalize with headroom so a WAV round trip cannot clip
  double peak = 0.0;
  for (double s : x) peak = std::max(peak, std::fabs(s));
  if (peak > 0.0) {
    double g = 0.89 / peak;
    for (double& s : x) s *= g;
  }
  return Waveform{fs, std::move(x)};
}

Waveform synth_playback_bed(uint64_t seed, double seconds, int sample_rate) {
  if (seconds <= 0.0 || sample_rate <= 0) throw ArgumentError("bad playback bed request");
  Rng rng(derive_seed(seed, 0x626564ull /* "bed" */));
  size_t len = static_cast<size_t>(seconds * sample_rate);
  std::vector<double> x(len, 0.0);
  add_band_burst(x, sample_rate, 0, len, 300.0, std::min(7000.0, sample_rate / 2.0 * 0.95),
                 1.0, rng);
  // slow loudness swell so frame energies are not flat
  for (size_t i = 0; i < len; ++i) {
    double t = static_cast<double>(i) / sample_rate;
    x[i] *= 0.7 + 0.3 * std::sin(2.0 * M_PI * 0.8 * t);
  }
  double peak = 0.0;
  for (double s : x) peak = std::max(peak, std::fabs(s));
  if (peak > 0.0)
    for (double& s : x) s *= 0.89 / peak;
  return Waveform{sample_rate, std::move(x)};
}

// ---- WAV -------------------------------------------------------------------

namespace {

void put_u32le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16le(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

uint32_t get_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16le(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw ArgumentError("write_wav: bad sample rate");
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32le(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32le(out, 16);
  put_u16le(out, 1);  // PCM
  put_u16le(out, 1);  // mono
  put_u32le(out, static_cast<uint32_t>(w.sample_rate));
  put_u32le(out, static_cast<uint32_t>(w.sample_rate * 2));
  put_u16le(out, 2);   // block align
  put_u16le(out, 16);  // bits
  out += "data";
  put_u32le(out, data_bytes);
  for (double s : w.samples) {
    double c = std::clamp(s, -1.0, 32767.0 / 32768.0);
    auto v = static_cast<int16_t>(std::lrint(c * 32768.0));
    put_u16le(out, static_cast<uint16_t>(v));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ArgumentError("write_wav: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw ArgumentError("write_wav: short write to " + path);
}

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArgumentError("read_wav: cannot open " + path);
  std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
  const size_t n = blob.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw ArgumentError("read_wav: not a RIFF/WAVE file: " + path);

  int sample_rate = 0;
  bool fmt_ok = false;
  std::vector<double> samples;
  size_t off = 12;
  while (off + 8 <= n) {
    uint32_t chunk_len = get_u32le(p + off + 4);
    const unsigned char* body = p + off + 8;
    if (off + 8 + chunk_len > n) throw ArgumentError("read_wav: truncated chunk");
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw ArgumentError("read_wav: short fmt chunk");
      uint16_t format = get_u16le(body);
      uint16_t channels = get_u16le(body + 2);
      sample_rate = static_cast<int>(get_u32le(body + 4));
      uint16_t bits = get_u16le(body + 14);
      if (format != 1 || channels != 1 || bits != 16)
        throw ArgumentError("read_wav: need mono 16-bit PCM");
      fmt_ok = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      samples.reserve(chunk_len / 2);
      for (size_t i = 0; i + 1 < chunk_len; i += 2) {
        auto v = static_cast<int16_t>(get_u16le(body + i));
        samples.push_back(static_cast<double>(v) / 32768.0);
      }
    }
    off += 8 + chunk_len + (chunk_len & 1);  // chunks are word aligned
  }
  if (!fmt_ok) throw ArgumentError("read_wav: missing fmt chunk");
  return Waveform{sample_rate, std::move(samples)};
}

}  // namespace wakearb
