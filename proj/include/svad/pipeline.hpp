#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svad/common.hpp"
#include "svad/encoding.hpp"
#include "svad/features.hpp"
#include "svad/metrics.hpp"
#include "svad/snn.hpp"
#include "svad/training.hpp"

namespace svad {

// One audio track's worth of features and ground truth.
struct Track {
  std::string name;
  std::vector<FeatureFrame> frames;       // raw log-Mel, pre-normalization
  std::vector<std::uint8_t> labels;       // per frame
};

// Number of consecutive frames consumed per decision: t_total split into
// readout windows. 1 for the single-frame architecture, 5 for the sequence
// one.
inline std::size_t frames_per_sample(const NetworkModel& model) {
  const std::size_t window = model.eval_window();
  if (window == 0 || model.t_total % window != 0) {
    throw ValidationError("t_total must be a whole number of readout windows");
  }
  const std::size_t fps = model.t_total / window;
  if (fps != 1 && fps != kSequenceFrames) {
    throw ValidationError("decisions must consume 1 or " +
                          std::to_string(kSequenceFrames) + " frames, got " +
                          std::to_string(fps));
  }
  return fps;
}

inline SpikeRaster encode_sample(std::span<const FeatureFrame> frames,
                                 std::size_t t_frame) {
  if (frames.size() == 1) return encode_frame(frames[0], t_frame);
  return encode_sequence(frames, t_frame);
}

// Builds (raster, label) samples from whole tracks. Sequence models only
// emit samples once a full history window is available, so the first
// fps-1 frames of each track carry no sample.
inline Dataset build_dataset(const std::vector<Track>& tracks, const Normalizer& norm,
                             const NetworkModel& model, bool clip) {
  const std::size_t fps = frames_per_sample(model);
  const std::size_t t_frame = model.t_total / fps;
  Dataset data;
  for (const Track& track : tracks) {
    if (track.frames.size() != track.labels.size()) {
      throw DataError(track.name + ": frame/label count mismatch");
    }
    if (track.frames.size() < fps) continue;
    std::vector<FeatureFrame> normalized(track.frames.size());
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
      normalized[i] = normalize(track.frames[i], norm, clip);
    }
    for (std::size_t i = fps - 1; i < normalized.size(); ++i) {
      Sample s;
      s.raster = encode_sample({normalized.data() + i + 1 - fps, fps}, t_frame);
      s.label = track.labels[i];
      data.push_back(std::move(s));
    }
  }
  return data;
}

// Per-decision scores max(V_speech) - max(V_nospeech) for one track; entry j
// corresponds to frame index fps-1+j.
inline std::vector<double> score_track(const NetworkModel& model,
                                       std::span<const FeatureFrame> raw_frames,
                                       const Normalizer& norm, bool clip) {
  const std::size_t fps = frames_per_sample(model);
  const std::size_t t_frame = model.t_total / fps;
  if (raw_frames.size() < fps) return {};
  std::vector<FeatureFrame> normalized(raw_frames.size());
  for (std::size_t i = 0; i < raw_frames.size(); ++i) {
    normalized[i] = normalize(raw_frames[i], norm, clip);
  }
  std::vector<double> scores;
  scores.reserve(raw_frames.size() - fps + 1);
  for (std::size_t i = fps - 1; i < normalized.size(); ++i) {
    const SpikeRaster raster =
        encode_sample({normalized.data() + i + 1 - fps, fps}, t_frame);
    const ForwardTrace trace = forward(model, raster);
    const ReadoutMax rm = readout_max(trace, model);
    scores.push_back(rm.maxima[1] - rm.maxima[0]);
  }
  return scores;
}

// Scores plus aligned truth for evaluation (truth trimmed to the scored range).
struct ScoredTrack {
  std::string name;
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;
};

inline ScoredTrack score_labeled_track(const NetworkModel& model, const Track& track,
                                       const Normalizer& norm, bool clip) {
  const std::size_t fps = frames_per_sample(model);
  ScoredTrack st;
  st.name = track.name;
  st.scores = score_track(model, track.frames, norm, clip);
  if (!st.scores.empty()) {
    st.truth.assign(track.labels.begin() + static_cast<long>(fps - 1), track.labels.end());
  }
  return st;
}

}  // namespace svad
