#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svad/common.hpp"

namespace svad {

inline constexpr int kSampleRate = 16000;

struct AudioSignal {
  std::vector<double> samples;  // amplitudes in [-1, 1)
  int sample_rate = kSampleRate;
};

// Reads RIFF/WAVE, PCM 16-bit little-endian, mono, 16 kHz. Anything else is
// rejected; resampling is out of scope.
inline AudioSignal read_wav(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  ByteCursor cur(bytes.data(), bytes.size());
  cur.expect_magic("RIFF");
  cur.u32();  // riff size, unchecked; data chunk carries its own length
  cur.expect_magic("WAVE");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<std::uint8_t> data;
  bool have_data = false;

  while (cur.remaining() >= 8) {
    char id[4];
    cur.bytes(reinterpret_cast<std::uint8_t*>(id), 4);
    const std::uint32_t size = cur.u32();
    if (size > cur.remaining()) throw DataError("truncated chunk in " + path.string());
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw DataError("short fmt chunk in " + path.string());
      std::vector<std::uint8_t> fmt(size);
      cur.bytes(fmt.data(), size);
      // wFormatTag u16, nChannels u16, nSamplesPerSec u32, nAvgBytesPerSec u32,
      // nBlockAlign u16, wBitsPerSample u16
      ByteCursor f(fmt.data(), fmt.size());
      const std::uint32_t w0 = f.u32();
      format = static_cast<std::uint16_t>(w0 & 0xffff);
      channels = static_cast<std::uint16_t>(w0 >> 16);
      rate = f.u32();
      f.u32();  // byte rate
      bits = static_cast<std::uint16_t>(f.u32() >> 16);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data.resize(size);
      cur.bytes(data.data(), size);
      have_data = true;
    } else {
      std::vector<std::uint8_t> skip(size);
      cur.bytes(skip.data(), size);
    }
    if (size % 2 == 1 && cur.remaining() > 0) cur.u8();  // chunk padding
  }

  if (!have_fmt || !have_data) throw DataError("missing fmt/data chunk in " + path.string());
  if (format != 1) throw DataError(path.string() + ": not PCM (format tag " + std::to_string(format) + ")");
  if (channels != 1) throw DataError(path.string() + ": expected mono, got " + std::to_string(channels) + " channels");
  if (bits != 16) throw DataError(path.string() + ": expected 16-bit samples, got " + std::to_string(bits));
  if (rate != kSampleRate) {
    throw DataError(path.string() + ": expected 16000 Hz, got " + std::to_string(rate) + " Hz");
  }

  AudioSignal sig;
  sig.sample_rate = static_cast<int>(rate);
  const std::size_t n = data.size() / 2;
  sig.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s = static_cast<std::int16_t>(
        static_cast<std::uint16_t>(data[2 * i]) |
        (static_cast<std::uint16_t>(data[2 * i + 1]) << 8));
    sig.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return sig;
}

inline void write_wav(const std::filesystem::path& path, const AudioSignal& sig) {
  std::vector<std::uint8_t> out;
  const std::uint32_t n = static_cast<std::uint32_t>(sig.samples.size());
  const std::uint32_t data_size = n * 2;
  put_magic(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_magic(out, "WAVE");
  put_magic(out, "fmt ");
  put_u32(out, 16);
  put_u32(out, 1u | (1u << 16));  // PCM, mono
  put_u32(out, static_cast<std::uint32_t>(sig.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sig.sample_rate) * 2);
  put_u32(out, 2u | (16u << 16));  // block align, bits per sample
  put_magic(out, "data");
  put_u32(out, data_size);
  for (double x : sig.samples) {
    const double clamped = std::clamp(x, -1.0, 1.0);
    const long q = std::lround(clamped * 32767.0);
    const std::int16_t s = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint16_t>(s) & 0xff));
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint16_t>(s) >> 8));
  }
  write_file_bytes(path, out);
}

}  // namespace svad
