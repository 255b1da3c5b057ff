#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "svad/common.hpp"
#include "svad/features.hpp"

namespace svad {

// Binary event grid, time-steps x neurons. Encoder output carries exactly one
// spike per input neuron; elsewhere in the library the grid is generic.
struct SpikeRaster {
  std::size_t n_steps = 0;
  std::size_t n_neurons = 0;
  std::vector<std::uint8_t> events;  // row-major, events[t * n_neurons + k]

  SpikeRaster() = default;
  SpikeRaster(std::size_t steps, std::size_t neurons)
      : n_steps(steps), n_neurons(neurons), events(steps * neurons, 0) {}

  std::uint8_t at(std::size_t t, std::size_t k) const { return events[t * n_neurons + k]; }
  void set(std::size_t t, std::size_t k, std::uint8_t v = 1) { events[t * n_neurons + k] = v; }
  const std::uint8_t* row(std::size_t t) const { return events.data() + t * n_neurons; }

  std::size_t count() const {
    std::size_t n = 0;
    for (std::uint8_t e : events) n += e;
    return n;
  }
};

// Time-to-first-spike latency for one normalized coefficient: the higher the
// value, the earlier the spike. x = 0 rounds to t = T, one past the window,
// and is clamped onto the last step so the raster keeps exactly T rows.
inline std::size_t ttfs_time(double x, std::size_t n_steps) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("coefficient " + std::to_string(x) + " outside [0,1]");
  }
  const double raw = static_cast<double>(n_steps) * (1.0 - x);
  const long long t = std::llround(raw);  // nearest, ties away from zero
  const long long last = static_cast<long long>(n_steps) - 1;
  return static_cast<std::size_t>(t > last ? last : t);
}

inline SpikeRaster encode_frame(std::span<const double> coeffs, std::size_t n_steps) {
  if (n_steps == 0) throw ValidationError("encode_frame: T must be positive");
  SpikeRaster raster(n_steps, coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    raster.set(ttfs_time(coeffs[k], n_steps), k);
  }
  return raster;
}

inline SpikeRaster encode_frame(const FeatureFrame& frame, std::size_t n_steps) {
  return encode_frame(std::span<const double>(frame.coeffs), n_steps);
}

// Five successive frames, each encoded independently, concatenated in time.
// Frame i occupies steps [i*T, i*T + T).
inline constexpr std::size_t kSequenceFrames = 5;

inline SpikeRaster encode_sequence(std::span<const FeatureFrame> frames,
                                   std::size_t n_steps_per_frame = 100) {
  if (frames.size() != kSequenceFrames) {
    throw ValidationError("encode_sequence expects exactly " +
                          std::to_string(kSequenceFrames) + " frames, got " +
                          std::to_string(frames.size()));
  }
  const std::size_t width = frames[0].coeffs.size();
  SpikeRaster raster(kSequenceFrames * n_steps_per_frame, width);
  for (std::size_t i = 0; i < kSequenceFrames; ++i) {
    if (frames[i].coeffs.size() != width) throw ValidationError("ragged frames");
    const SpikeRaster block = encode_frame(frames[i], n_steps_per_frame);
    for (std::size_t t = 0; t < n_steps_per_frame; ++t) {
      for (std::size_t k = 0; k < width; ++k) {
        raster.events[(i * n_steps_per_frame + t) * width + k] = block.at(t, k);
      }
    }
  }
  return raster;
}

// --- raster dump ------------------------------------------------------------
// Debug format: "SVSR", T u32, K u32, then row-major packed bits (LSB first),
// each row padded to a byte boundary.

inline void write_raster(const std::filesystem::path& path, const SpikeRaster& raster) {
  std::vector<std::uint8_t> out;
  put_magic(out, "SVSR");
  put_u32(out, static_cast<std::uint32_t>(raster.n_steps));
  put_u32(out, static_cast<std::uint32_t>(raster.n_neurons));
  const std::size_t stride = (raster.n_neurons + 7) / 8;
  for (std::size_t t = 0; t < raster.n_steps; ++t) {
    std::vector<std::uint8_t> row(stride, 0);
    for (std::size_t k = 0; k < raster.n_neurons; ++k) {
      if (raster.at(t, k)) row[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
    }
    out.insert(out.end(), row.begin(), row.end());
  }
  write_file_bytes(path, out);
}

inline SpikeRaster read_raster(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  ByteCursor cur(bytes.data(), bytes.size());
  cur.expect_magic("SVSR");
  const std::uint32_t n_steps = cur.u32();
  const std::uint32_t n_neurons = cur.u32();
  SpikeRaster raster(n_steps, n_neurons);
  const std::size_t stride = (n_neurons + 7) / 8;
  std::vector<std::uint8_t> row(stride);
  for (std::uint32_t t = 0; t < n_steps; ++t) {
    cur.bytes(row.data(), stride);
    for (std::uint32_t k = 0; k < n_neurons; ++k) {
      raster.events[t * n_neurons + k] = (row[k / 8] >> (k % 8)) & 1u;
    }
  }
  return raster;
}

}  // namespace svad
