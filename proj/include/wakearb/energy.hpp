#pragma once

#include <vector>

namespace wakearb {

enum class Window { Rect, Hann };

struct FrameConfig {
  int sample_rate = 16000;
  int frame_len = 512;  // power of two
  int hop = 256;
  Window window = Window::Hann;
};

// Half-open frequency band [f_lo, f_hi); a bin belongs to the band when its
// center frequency b * sample_rate / frame_len falls inside.
struct BandSelection {
  double f_lo_hz = 3000.0;
  double f_hi_hz = 6000.0;
};

struct EnergyCalcConfig {
  double threshold_coeff = 0.8;  // threshold = coeff * mean(U)
};

// Per-frame band energies U_t. Frames start at multiples of hop and must fit
// entirely inside the signal; a too-short signal yields an empty vector.
//
// U_t is the one-sided power-spectrum sum over the band, scaled by 1/N with
// interior bins doubled, so that summing over the full [0, Nyquist] band
// reproduces the windowed time-domain frame energy exactly (Parseval). Any
// fixed normalization would do for the downstream ratios; this one makes the
// bookkeeping checkable.
std::vector<double> frame_band_energies(const std::vector<double>& signal,
                                        const FrameConfig& fc, const BandSelection& band);

// Energy of the wake word inside a capture: frames whose band energy strictly
// exceeds threshold_coeff * mean are kept and averaged, which discards the
// silence before/after the word. If no frame strictly exceeds the threshold
// (all equal, or all zero), the plain mean is returned.
double wakeword_energy(const std::vector<double>& frame_energies,
                       const EnergyCalcConfig& cfg = {});

// signal -> frame energies -> wakeword energy in one go
double signal_wakeword_energy(const std::vector<double>& signal, const FrameConfig& fc,
                              const BandSelection& band, const EnergyCalcConfig& cfg = {});

// The full chain from raw samples to one energy number, bundled so that every
// component of a deployment measures the same way.
struct MeasurePipeline {
  FrameConfig frame;
  BandSelection band;
  EnergyCalcConfig energy;
};

inline double measure_energy(const std::vector<double>& signal, const MeasurePipeline& p) {
  return signal_wakeword_energy(signal, p.frame, p.band, p.energy);
}

// Population variance (divide by K) of per-frame bearing estimates, deg^2.
// Requires K >= 2. Bearings are expected unwrapped (no 0/360 seam handling).
double doa_variance(const std::vector<double>& bearings_deg);

}  // namespace wakearb
