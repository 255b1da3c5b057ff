#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "svad/common.hpp"
#include "svad/wav.hpp"

namespace svad {

// 64 ms windows with 75% overlap at 16 kHz: 1024-sample window, 256-sample hop,
// one 128-coefficient log-Mel vector every 16 ms.
inline constexpr std::size_t kWindowSize = 1024;
inline constexpr std::size_t kHopSize = 256;
inline constexpr std::size_t kNumMelFilters = 128;
inline constexpr double kMelHighHz = 8000.0;
inline constexpr double kLogFloor = 1e-10;

struct FeatureFrame {
  std::vector<double> coeffs;  // kNumMelFilters log-Mel energies
  std::size_t frame_index = 0;
};

inline std::size_t frame_count(std::size_t n_samples) {
  if (n_samples < kWindowSize) {
    throw DataError("signal shorter than one window (" +
                    std::to_string(n_samples) + " < " +
                    std::to_string(kWindowSize) + " samples)");
  }
  return (n_samples - kWindowSize) / kHopSize + 1;
}

inline std::vector<std::vector<double>> frame_signal(const AudioSignal& sig) {
  if (sig.sample_rate != kSampleRate) {
    throw DataError("expected 16000 Hz signal, got " + std::to_string(sig.sample_rate));
  }
  const std::size_t n = frame_count(sig.samples.size());
  std::vector<std::vector<double>> windows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* start = sig.samples.data() + i * kHopSize;
    windows[i].assign(start, start + kWindowSize);
  }
  return windows;
}

// Periodic Hann window of length kWindowSize.
inline const std::vector<double>& hann_window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kWindowSize);
    for (std::size_t n = 0; n < kWindowSize; ++n) {
      v[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) /
                                  static_cast<double>(kWindowSize));
    }
    return v;
  }();
  return w;
}

// In-place iterative radix-2 FFT; a.size() must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wn(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wn;
      }
    }
  }
}

// Squared-magnitude spectrum of the Hann-windowed frame, bins 0..N/2.
inline std::vector<double> power_spectrum(std::span<const double> window) {
  if (window.size() != kWindowSize) {
    throw ValidationError("window must have " + std::to_string(kWindowSize) + " samples");
  }
  const std::vector<double>& hann = hann_window();
  std::vector<std::complex<double>> a(kWindowSize);
  for (std::size_t i = 0; i < kWindowSize; ++i) a[i] = window[i] * hann[i];
  fft_inplace(a);
  std::vector<double> power(kWindowSize / 2 + 1);
  for (std::size_t k = 0; k <= kWindowSize / 2; ++k) power[k] = std::norm(a[k]);
  return power;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// 128 triangular filters with centers equally spaced on the mel axis between
// 0 Hz and 8 kHz, peak weight 1 (no area normalization), evaluated on the
// 1024-point FFT bin grid.
class MelFilterbank {
 public:
  MelFilterbank() {
    const std::size_t n_bins = kWindowSize / 2 + 1;
    const double bin_hz = static_cast<double>(kSampleRate) / static_cast<double>(kWindowSize);
    const double mel_max = hz_to_mel(kMelHighHz);
    std::vector<double> edges(kNumMelFilters + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      edges[i] = mel_to_hz(mel_max * static_cast<double>(i) /
                           static_cast<double>(kNumMelFilters + 1));
    }
    first_bin_.resize(kNumMelFilters);
    weights_.resize(kNumMelFilters);
    for (std::size_t m = 0; m < kNumMelFilters; ++m) {
      const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
      std::size_t first = n_bins;
      std::vector<double> w;
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        double v = 0.0;
        if (f > lo && f < center) {
          v = (f - lo) / (center - lo);
        } else if (f >= center && f < hi) {
          v = (hi - f) / (hi - center);
        }
        if (v > 0.0) {
          if (first == n_bins) first = k;
          w.push_back(v);
        } else if (first != n_bins && f >= hi) {
          break;
        }
      }
      first_bin_[m] = first == n_bins ? 0 : first;
      weights_[m] = std::move(w);
    }
  }

  static const MelFilterbank& standard() {
    static const MelFilterbank fb;
    return fb;
  }

  std::vector<double> apply(std::span<const double> power) const {
    std::vector<double> energies(kNumMelFilters, 0.0);
    for (std::size_t m = 0; m < kNumMelFilters; ++m) {
      double acc = 0.0;
      const std::size_t first = first_bin_[m];
      for (std::size_t i = 0; i < weights_[m].size(); ++i) {
        acc += weights_[m][i] * power[first + i];
      }
      energies[m] = acc;
    }
    return energies;
  }

 private:
  std::vector<std::size_t> first_bin_;
  std::vector<std::vector<double>> weights_;
};

// One 1024-sample window -> 128 log-Mel coefficients. Silence lands on the
// log floor rather than -inf.
inline std::vector<double> log_mel_spectrum(std::span<const double> window) {
  const std::vector<double> power = power_spectrum(window);
  std::vector<double> coeffs = MelFilterbank::standard().apply(power);
  for (double& e : coeffs) e = std::log(std::max(e, kLogFloor));
  return coeffs;
}

inline std::vector<FeatureFrame> compute_features(const AudioSignal& sig) {
  const std::vector<std::vector<double>> windows = frame_signal(sig);
  std::vector<FeatureFrame> frames(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    frames[i].coeffs = log_mel_spectrum(windows[i]);
    frames[i].frame_index = i;
  }
  return frames;
}

// --- normalization ----------------------------------------------------------

// Global scalar (min, max) over every coefficient of the training set.
struct Normalizer {
  double min_value = 0.0;
  double max_value = 1.0;
};

inline Normalizer fit_normalizer(const std::vector<FeatureFrame>& frames) {
  if (frames.empty()) throw ValidationError("fit_normalizer: no frames");
  double lo = frames[0].coeffs.at(0);
  double hi = lo;
  for (const FeatureFrame& f : frames) {
    for (double x : f.coeffs) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!(hi > lo)) {
    throw DataError("degenerate feature statistics: min == max == " + std::to_string(lo));
  }
  return Normalizer{lo, hi};
}

inline FeatureFrame normalize(const FeatureFrame& frame, const Normalizer& norm,
                              bool clip) {
  if (!(norm.max_value > norm.min_value)) {
    throw ValidationError("invalid normalizer: max <= min");
  }
  FeatureFrame out;
  out.frame_index = frame.frame_index;
  out.coeffs.resize(frame.coeffs.size());
  const double span = norm.max_value - norm.min_value;
  for (std::size_t i = 0; i < frame.coeffs.size(); ++i) {
    double v = (frame.coeffs[i] - norm.min_value) / span;
    if (clip) {
      v = std::clamp(v, 0.0, 1.0);
    } else if (v < 0.0 || v > 1.0) {
      throw DataError("normalized value " + std::to_string(v) +
                      " outside [0,1]; normalizer does not match the data");
    }
    out.coeffs[i] = v;
  }
  return out;
}

// --- feature files ----------------------------------------------------------
// Layout: "SVFE", version u32, n_frames u32, n_coeffs u32, then row-major f32.

inline void write_feature_file(const std::filesystem::path& path,
                               const std::vector<FeatureFrame>& frames) {
  std::vector<std::uint8_t> out;
  put_magic(out, "SVFE");
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(frames.size()));
  const std::uint32_t n_coeffs =
      frames.empty() ? kNumMelFilters : static_cast<std::uint32_t>(frames[0].coeffs.size());
  put_u32(out, n_coeffs);
  for (const FeatureFrame& f : frames) {
    if (f.coeffs.size() != n_coeffs) throw ValidationError("ragged feature frames");
    for (double x : f.coeffs) put_f32(out, static_cast<float>(x));
  }
  write_file_bytes(path, out);
}

inline std::vector<FeatureFrame> read_feature_file(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  ByteCursor cur(bytes.data(), bytes.size());
  cur.expect_magic("SVFE");
  const std::uint32_t version = cur.u32();
  if (version != 1) throw DataError("unsupported feature file version " + std::to_string(version));
  const std::uint32_t n_frames = cur.u32();
  const std::uint32_t n_coeffs = cur.u32();
  std::vector<FeatureFrame> frames(n_frames);
  for (std::uint32_t i = 0; i < n_frames; ++i) {
    frames[i].frame_index = i;
    frames[i].coeffs.resize(n_coeffs);
    for (std::uint32_t c = 0; c < n_coeffs; ++c) frames[i].coeffs[c] = cur.f32();
  }
  return frames;
}

}  // namespace svad
