#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "svad/common.hpp"
#include "svad/features.hpp"

namespace svad {

// Per-frame labels travel as CSV "frame_index,label". Segment files
// ("start_sec,end_sec,label") are converted on load: a frame is speech when
// the speech overlap covers a strict majority of its 64 ms window.

struct Segment {
  double start_sec = 0.0;
  double end_sec = 0.0;
  int label = 0;
};

inline void write_label_csv(const std::filesystem::path& path,
                            std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write labels: " + path.string());
  out << "frame_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',' << static_cast<int>(labels[i]) << '\n';
  }
}

// Majority-overlap conversion from a per-sample speech mask: frame i covers
// samples [i*hop, i*hop + window) and is speech when more than half of them
// are speech samples.
inline std::vector<std::uint8_t> mask_to_frame_labels(
    std::span<const std::uint8_t> speech_mask, std::size_t n_frames) {
  std::vector<std::uint8_t> labels(n_frames, 0);
  // prefix sums for O(1) window counts
  std::vector<std::uint32_t> prefix(speech_mask.size() + 1, 0);
  for (std::size_t i = 0; i < speech_mask.size(); ++i) {
    prefix[i + 1] = prefix[i] + (speech_mask[i] ? 1u : 0u);
  }
  for (std::size_t i = 0; i < n_frames; ++i) {
    const std::size_t lo = i * kHopSize;
    const std::size_t hi = std::min(lo + kWindowSize, speech_mask.size());
    if (lo >= speech_mask.size()) break;
    const std::uint32_t ones = prefix[hi] - prefix[lo];
    labels[i] = 2ull * ones > kWindowSize ? 1 : 0;
  }
  return labels;
}

inline std::vector<std::uint8_t> segments_to_frames(std::span<const Segment> segments,
                                                    std::size_t n_frames) {
  const double frame_sec = static_cast<double>(kWindowSize) / kSampleRate;
  const double hop_sec = static_cast<double>(kHopSize) / kSampleRate;
  std::vector<std::uint8_t> labels(n_frames, 0);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const double lo = static_cast<double>(i) * hop_sec;
    const double hi = lo + frame_sec;
    double speech = 0.0;
    for (const Segment& s : segments) {
      if (s.label != 1) continue;
      speech += std::max(0.0, std::min(hi, s.end_sec) - std::max(lo, s.start_sec));
    }
    labels[i] = speech > 0.5 * frame_sec ? 1 : 0;
  }
  return labels;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim spaces and CR
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return fields;
}

}  // namespace detail

// Reads either label format. `n_frames` fixes the output length; frame files
// must match it exactly, segment files are sampled onto the frame grid.
inline std::vector<std::uint8_t> read_labels(const std::filesystem::path& path,
                                             std::size_t n_frames) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels: " + path.string());
  std::string line;
  bool segment_format = false;
  std::vector<Segment> segments;
  std::vector<std::pair<std::size_t, int>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (first) {
      first = false;
      segment_format = f.size() == 3 || (!f.empty() && f[0] == "start_sec");
      if (!f.empty() && (f[0] == "frame_index" || f[0] == "start_sec")) continue;
    }
    try {
      if (segment_format) {
        if (f.size() != 3) throw DataError("bad segment row");
        segments.push_back({std::stod(f[0]), std::stod(f[1]), std::stoi(f[2])});
      } else {
        if (f.size() != 2) throw DataError("bad label row");
        rows.emplace_back(std::stoul(f[0]), std::stoi(f[1]));
      }
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed row \"" + line + "\"");
    }
  }
  if (segment_format) return segments_to_frames(segments, n_frames);

  // hop-aligned files may carry a few trailing rows past the last full
  // window; those are ignored
  if (rows.size() < n_frames) {
    throw DataError(path.string() + ": " + std::to_string(rows.size()) +
                    " label rows for " + std::to_string(n_frames) + " frames");
  }
  std::vector<std::uint8_t> labels(n_frames, 0);
  for (const auto& [idx, lab] : rows) {
    if (lab != 0 && lab != 1) {
      throw DataError(path.string() + ": label values must be 0 or 1");
    }
    if (idx < n_frames) labels[idx] = static_cast<std::uint8_t>(lab);
  }
  return labels;
}

}  // namespace svad
