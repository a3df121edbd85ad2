#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rrforge::spectral {

/// Real-to-complex FFT of `x` zero-padded (or truncated) to `n_fft`; returns n_fft/2 + 1 bins.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n_fft);

std::size_t next_pow2(std::size_t n);

std::vector<double> hann(std::size_t n);

struct Psd {
  std::vector<double> freqs;
  std::vector<double> power;  // one-sided density
};

/// Welch estimate with a Hann window and 50 % overlap. `segment_len` is capped
/// at the signal length.
Psd welch(std::span<const double> x, double rate, std::size_t segment_len);

/// Sum of `psd.power` over bins with lo <= f <= hi.
double band_power(const Psd& psd, double lo, double hi);

/// Fraction of a Hann-tapered periodogram's power that falls inside [lo, hi].
/// Zero for an all-zero input.
double band_power_fraction(std::span<const double> x, double rate, double lo, double hi);

/// Dominant spectral peak inside a band.
struct SpectralPeak {
  double frequency = 0.0;   // Hz, parabolic-refined
  double confidence = 0.0;  // [0, 1]
  bool found = false;       // false when the band carries no power
};

/// Locates the strongest in-band component of a Hann-tapered periodogram
/// zero-padded to the next power of two >= pad_factor * len. The bin estimate
/// is refined with a parabola through the neighbouring magnitudes.
///
/// Confidence measures how much of the in-band power sits in the peak's main
/// lobe (+-1.5 native bins, i.e. +-1.5 / T Hz), corrected for the share a flat
/// spectrum would put there and squared:
///   kappa = (lobe_fraction - lobe_width_fraction) / (1 - lobe_width_fraction)
///   confidence = clamp(kappa, 0, 1)^2
/// A clean tone scores ~1, white noise ~0.05.
SpectralPeak dominant_peak(std::span<const double> x, double rate, double lo, double hi,
                           std::size_t pad_factor = 8);

/// Second-order section, direct form II transposed, a0 == 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth band-pass of order 2 * prototype_order via the bilinear
/// transform with pre-warped edges. Unit gain at the (warped) geometric centre.
std::vector<Biquad> butter_bandpass(std::size_t prototype_order, double lo, double hi, double rate);

/// Complex frequency response of a cascade at `freq` Hz.
std::complex<double> response(const std::vector<Biquad>& sos, double freq, double rate);

/// Single forward pass from a zero state.
std::vector<double> sosfilt(const std::vector<Biquad>& sos, std::span<const double> x);

/// Zero-phase forward-backward filtering with odd-reflection padding and
/// steady-state initial conditions.
std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, std::span<const double> x,
                                std::size_t padlen);

/// Removes the least-squares line.
std::vector<double> detrend_linear(std::span<const double> x);

/// Removes the mean.
std::vector<double> detrend_constant(std::span<const double> x);

}  // namespace rrforge::spectral
