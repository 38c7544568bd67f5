#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wakearb {

// Mono audio buffer. Samples are nominally in [-1, 1]; the simulator rescales
// by RMS when a source level is applied, so absolute amplitude is not load
// bearing.
struct Waveform {
  int sample_rate = 16000;
  std::vector<double> samples;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

double rms(const std::vector<double>& samples);

// ---- synthetic wake-word corpus -------------------------------------------
//
// Ten fixed utterance stand-ins: chirp + band-limited burst mixtures inside
// the 3-6 kHz decision band. Five sit in the lower half of the band
// ("male-1".."male-5"), five in the upper half ("female-1".."female-5").
// Fully deterministic per id.

std::vector<std::string> corpus_ids();
bool is_corpus_id(const std::string& id);
Waveform synth_wake_word(const std::string& id, int sample_rate = 16000);

// Broadband noise bed used as the playback program of a busy speaker.
Waveform synth_playback_bed(uint64_t seed, double seconds, int sample_rate = 16000);

// ---- WAV container I/O -----------------------------------------------------
//
// 16-bit little-endian PCM, mono. Read is chunk-tolerant but rejects
// anything that is not mono PCM16.

void write_wav(const std::string& path, const Waveform& w);
Waveform read_wav(const std::string& path);

}  // namespace wakearb
