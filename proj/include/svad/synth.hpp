#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

#include "svad/common.hpp"
#include "svad/features.hpp"
#include "svad/labels.hpp"
#include "svad/wav.hpp"

namespace svad {

// Synthetic WAV+label corpus: harmonic "speech" bursts mixed into shaped
// noise at an exact per-burst SNR, with frame labels derived from the sample
// mask by the same majority-overlap rule the evaluator uses. Everything is
// planned on the 16 ms hop grid so the positive-frame count can be steered
// to the requested speech fraction.
struct SynthSpec {
  double duration_sec = 10.0;
  std::vector<double> snr_db = {0.0};
  double speech_fraction = 0.5;
  std::uint64_t seed = 1;

  void validate() const {
    if (snr_db.empty()) throw ValidationError("synth: at least one SNR level required");
    for (double s : snr_db) {
      if (!(s >= -40.0 && s <= 60.0)) {
        throw ValidationError("synth: SNR " + std::to_string(s) + " dB outside [-40, 60]");
      }
    }
    if (!(duration_sec >= 2.0 && duration_sec <= 3600.0)) {
      throw ValidationError("synth: duration must lie in [2, 3600] s");
    }
    if (!(speech_fraction >= 0.05 && speech_fraction <= 0.85)) {
      throw ValidationError("synth: speech fraction must lie in [0.05, 0.85]");
    }
  }
};

struct SynthTrack {
  std::string name;
  double snr_db = 0.0;
  AudioSignal audio;
  std::vector<std::uint8_t> frame_labels;
  std::vector<std::uint8_t> speech_mask;     // per sample
  std::vector<double> speech_component;      // as mixed (scaled)
  std::vector<double> noise_component;       // as mixed (scaled)
};

namespace detail {

struct HopInterval {
  std::size_t begin_hop;
  std::size_t end_hop;  // exclusive
};

// An interior speech run of L hops (L >= 3, >= 2 hops of silence around it)
// turns exactly L-1 frames into speech under the majority-overlap rule.
inline std::vector<HopInterval> plan_bursts(std::size_t n_hops, std::size_t target_frames,
                                            double speech_fraction, Rng& rng) {
  const std::size_t tail_margin = 2;
  const bool dense = speech_fraction > 0.6;
  const std::size_t gap_lo = dense ? 2 : 4;
  const std::size_t gap_hi = dense ? 6 : 24;

  std::vector<HopInterval> bursts;
  std::size_t cursor = 2 + rng.below(8);  // lead-in silence
  std::size_t placed = 0;
  while (placed < target_frames) {
    const std::size_t remaining = target_frames - placed;
    std::size_t len = 24 + rng.below(49);  // 24..72 hops, 0.38..1.15 s
    if (len > remaining + 1) len = remaining + 1;
    if (len < 3) {
      // too small for a fresh burst; stretch the previous one instead
      if (bursts.empty()) throw ValidationError("synth: speech fraction too small to realize");
      if (bursts.back().end_hop + remaining + tail_margin <= n_hops) {
        bursts.back().end_hop += remaining;
        placed += remaining;
      }
      break;
    }
    if (cursor + len + tail_margin > n_hops) break;  // out of room; fixed up below
    bursts.push_back({cursor, cursor + len});
    placed += len - 1;
    cursor = bursts.back().end_hop + gap_lo + rng.below(gap_hi - gap_lo + 1);
  }
  return bursts;
}

inline std::vector<std::uint8_t> bursts_to_mask(const std::vector<HopInterval>& bursts,
                                                std::size_t n_samples) {
  std::vector<std::uint8_t> mask(n_samples, 0);
  for (const HopInterval& b : bursts) {
    std::fill(mask.begin() + static_cast<long>(b.begin_hop * kHopSize),
              mask.begin() + static_cast<long>(std::min(b.end_hop * kHopSize, n_samples)),
              std::uint8_t{1});
  }
  return mask;
}

inline std::size_t count_positives(const std::vector<std::uint8_t>& labels) {
  std::size_t n = 0;
  for (std::uint8_t v : labels) n += v;
  return n;
}

}  // namespace detail

inline std::vector<SynthTrack> synthesize_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  std::vector<SynthTrack> tracks;
  for (std::size_t level = 0; level < spec.snr_db.size(); ++level) {
    const double snr = spec.snr_db[level];
    const std::size_t n_hops = static_cast<std::size_t>(
        std::llround(spec.duration_sec * kSampleRate / kHopSize));
    const std::size_t n_samples = n_hops * kHopSize;
    const std::size_t n_frames = frame_count(n_samples);
    const std::size_t target =
        static_cast<std::size_t>(std::llround(spec.speech_fraction *
                                              static_cast<double>(n_frames)));
    if (target < 4) throw ValidationError("synth: too few speech frames requested");

    std::vector<detail::HopInterval> bursts =
        detail::plan_bursts(n_hops, target, spec.speech_fraction, rng);
    std::vector<std::uint8_t> mask = detail::bursts_to_mask(bursts, n_samples);
    std::vector<std::uint8_t> labels = mask_to_frame_labels(mask, n_frames);

    // one hop added or removed at the end of the last burst moves the
    // positive count by exactly one
    {
      long diff = static_cast<long>(target) - static_cast<long>(detail::count_positives(labels));
      int budget = 128;
      while (diff != 0 && !bursts.empty() && budget-- > 0) {
        detail::HopInterval& last = bursts.back();
        if (diff > 0 && last.end_hop + 3 <= n_hops) {
          last.end_hop += 1;
        } else if (diff < 0 && last.end_hop - last.begin_hop > 3) {
          last.end_hop -= 1;
        } else {
          break;
        }
        mask = detail::bursts_to_mask(bursts, n_samples);
        labels = mask_to_frame_labels(mask, n_frames);
        diff = static_cast<long>(target) - static_cast<long>(detail::count_positives(labels));
      }
      if (std::llabs(static_cast<long long>(detail::count_positives(labels)) -
                     static_cast<long long>(target)) > 1) {
        throw ValidationError("synth: cannot realize the requested speech fraction; "
                              "lower it or lengthen the track");
      }
    }

    // shaped background noise: white gaussian through a mild lowpass
    std::vector<double> noise(n_samples);
    double prev = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double w = rng.gaussian();
      noise[i] = w + 0.7 * prev;
      prev = w;
    }
    double noise_rms = 0.0;
    for (double v : noise) noise_rms += v * v;
    noise_rms = std::sqrt(noise_rms / static_cast<double>(n_samples));
    for (double& v : noise) v *= 0.05 / noise_rms;

    // harmonic bursts, each scaled so its local SNR matches the request
    std::vector<double> speech(n_samples, 0.0);
    const double ratio = std::pow(10.0, snr / 10.0);
    for (const detail::HopInterval& b : bursts) {
      const std::size_t s0 = b.begin_hop * kHopSize;
      const std::size_t s1 = std::min(b.end_hop * kHopSize, n_samples);
      const std::size_t span = s1 - s0;
      const double f0 = rng.uniform(100.0, 280.0);
      double phase[5];
      for (double& p : phase) p = rng.uniform(0.0, 2.0 * M_PI);
      const std::size_t ramp = std::min<std::size_t>(512, span / 4);
      double p_speech = 0.0, p_noise = 0.0;
      for (std::size_t i = 0; i < span; ++i) {
        double s = 0.0;
        for (int h = 1; h <= 5; ++h) {
          s += std::sin(2.0 * M_PI * f0 * h * static_cast<double>(i) / kSampleRate +
                        phase[h - 1]) / h;
        }
        double env = 1.0;
        if (i < ramp) env = static_cast<double>(i + 1) / static_cast<double>(ramp);
        if (span - 1 - i < ramp) {
          env = std::min(env, static_cast<double>(span - i) / static_cast<double>(ramp));
        }
        s *= env;
        speech[s0 + i] = s;
        p_speech += s * s;
        p_noise += noise[s0 + i] * noise[s0 + i];
      }
      if (p_speech > 0.0) {
        const double gain = std::sqrt(ratio * p_noise / p_speech);
        for (std::size_t i = s0; i < s1; ++i) speech[i] *= gain;
      }
    }

    std::vector<double> audio(n_samples);
    double peak = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      audio[i] = noise[i] + speech[i];
      peak = std::max(peak, std::abs(audio[i]));
    }
    // headroom rescale keeps the speech/noise ratio untouched
    if (peak > 0.97) {
      const double k = 0.97 / peak;
      for (std::size_t i = 0; i < n_samples; ++i) {
        audio[i] *= k;
        noise[i] *= k;
        speech[i] *= k;
      }
    }

    SynthTrack track;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "synth_%02zu_snr%+05.1fdB", level, snr);
    track.name = buf;
    track.snr_db = snr;
    track.audio = AudioSignal{std::move(audio), kSampleRate};
    track.frame_labels = std::move(labels);
    track.speech_mask = std::move(mask);
    track.speech_component = std::move(speech);
    track.noise_component = std::move(noise);
    tracks.push_back(std::move(track));
  }
  return tracks;
}

}  // namespace svad
