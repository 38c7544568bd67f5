#include "wakearb/energy.hpp"

#include <cmath>
#include <complex>

#include "wakearb/errors.hpp"
#include "wakearb/fft.hpp"

namespace wakearb {

namespace {

void validate(const FrameConfig& fc, const BandSelection& band) {
  if (fc.sample_rate <= 0) throw ArgumentError("frame config: sample_rate must be positive");
  if (fc.frame_len <= 0 || (fc.frame_len & (fc.frame_len - 1)) != 0)
    throw ArgumentError("frame config: frame_len must be a power of two");
  if (fc.hop <= 0) throw ArgumentError("frame config: hop must be positive");
  if (!(band.f_lo_hz >= 0.0) || !(band.f_hi_hz > band.f_lo_hz))
    throw ArgumentError("band: need 0 <= f_lo < f_hi");
  if (band.f_hi_hz > fc.sample_rate / 2.0 + 1e-9)
    throw ArgumentError("band: f_hi beyond Nyquist");
}

}  // namespace

std::vector<double> frame_band_energies(const std::vector<double>& signal,
                                        const FrameConfig& fc, const BandSelection& band) {
  validate(fc, band);
  const size_t n = static_cast<size_t>(fc.frame_len);

  // periodic window (cleaner DFT leakage than the symmetric form)
  std::vector<double> win(n, 1.0);
  if (fc.window == Window::Hann) {
    for (size_t i = 0; i < n; ++i)
      win[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / n);
  }

  const double bin_hz = static_cast<double>(fc.sample_rate) / fc.frame_len;
  const size_t half = n / 2;

  std::vector<double> out;
  if (signal.size() < n) return out;
  out.reserve((signal.size() - n) / fc.hop + 1);

  std::vector<std::complex<double>> spec(n);
  for (size_t start = 0; start + n <= signal.size(); start += fc.hop) {
    for (size_t i = 0; i < n; ++i) spec[i] = {signal[start + i] * win[i], 0.0};
    fft(spec);
    double u = 0.0;
    for (size_t b = 0; b <= half; ++b) {
      double f = static_cast<double>(b) * bin_hz;
      if (f < band.f_lo_hz || f >= band.f_hi_hz) continue;
      double mag2 = std::norm(spec[b]);
      double weight = (b == 0 || b == half) ? 1.0 : 2.0;  // one-sided doubling
      u += weight * mag2;
    }
    out.push_back(u / static_cast<double>(n));
  }
  return out;
}

double wakeword_energy(const std::vector<double>& frame_energies,
                       const EnergyCalcConfig& cfg) {
  if (frame_energies.empty()) throw ArgumentError("wakeword_energy: no frames");
  if (!(cfg.threshold_coeff >= 0.0))
    throw ArgumentError("wakeword_energy: threshold_coeff must be >= 0");

  double mean = 0.0;
  for (double u : frame_energies) {
    if (u < 0.0) throw ArgumentError("wakeword_energy: negative frame energy");
    mean += u;
  }
  mean /= static_cast<double>(frame_energies.size());

  const double threshold = cfg.threshold_coeff * mean;
  double kept = 0.0;
  size_t count = 0;
  for (double u : frame_energies) {
    if (u > threshold) {
      kept += u;
      ++count;
    }
  }
  if (count == 0) return mean;  // all frames equal (or all zero)
  return kept / static_cast<double>(count);
}

double signal_wakeword_energy(const std::vector<double>& signal, const FrameConfig& fc,
                              const BandSelection& band, const EnergyCalcConfig& cfg) {
  auto u = frame_band_energies(signal, fc, band);
  if (u.empty()) throw ArgumentError("signal_wakeword_energy: signal shorter than one frame");
  return wakeword_energy(u, cfg);
}

double doa_variance(const std::vector<double>& bearings_deg) {
  const size_t k = bearings_deg.size();
  if (k < 2) throw ArgumentError("doa_variance: need at least 2 bearing estimates");
  double mean = 0.0;
  for (double b : bearings_deg) mean += b;
  mean /= static_cast<double>(k);
  double acc = 0.0;
  for (double b : bearings_deg) {
    double d = b - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(k);
}

}  // namespace wakearb
