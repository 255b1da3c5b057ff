#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "svad/common.hpp"
#include "svad/features.hpp"
#include "svad/pruning.hpp"
#include "svad/snn.hpp"

namespace svad {

// Single binary container ("SVCK1", little-endian) holding the architecture
// descriptor, current weights, per-layer prune masks, the initialization
// weight vector (needed to rewind lottery-ticket iterations), and the
// feature normalizer. Serialization is canonical: save(load(x)) == x.
struct Checkpoint {
  NetworkModel model;
  std::vector<Matrix> init_weights;       // same shapes as model weights
  std::vector<PruneMask> masks;           // per layer; empty mask = dense
  std::optional<Normalizer> normalizer;

  void validate() const {
    model.validate();
    if (init_weights.size() != model.layers.size()) {
      throw DataError("checkpoint: init vector layer count mismatch");
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      if (!init_weights[l].same_shape(model.layers[l].weights)) {
        throw DataError("checkpoint: init vector shape mismatch at layer " +
                        std::to_string(l));
      }
    }
    if (masks.size() != model.layers.size()) {
      throw DataError("checkpoint: mask count mismatch");
    }
    for (std::size_t l = 0; l < masks.size(); ++l) {
      if (!masks[l].empty() && (masks[l].rows != model.layers[l].weights.rows() ||
                                masks[l].cols != model.layers[l].weights.cols())) {
        throw DataError("checkpoint: mask shape mismatch at layer " + std::to_string(l));
      }
    }
  }

  static Checkpoint fresh(const NetworkModel& model) {
    Checkpoint cp;
    cp.model = model;
    for (const LifLayerParams& l : model.layers) cp.init_weights.push_back(l.weights);
    cp.masks.resize(model.layers.size());
    return cp;
  }
};

namespace detail {

inline void put_packed_bits(std::vector<std::uint8_t>& out,
                            const std::vector<std::uint8_t>& bits) {
  const std::size_t n_bytes = (bits.size() + 7) / 8;
  std::vector<std::uint8_t> packed(n_bytes, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  out.insert(out.end(), packed.begin(), packed.end());
}

inline std::vector<std::uint8_t> read_packed_bits(ByteCursor& cur, std::size_t count) {
  const std::size_t n_bytes = (count + 7) / 8;
  std::vector<std::uint8_t> packed(n_bytes);
  cur.bytes(packed.data(), n_bytes);
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return bits;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const Checkpoint& cp) {
  cp.validate();
  std::vector<std::uint8_t> out;
  put_magic(out, "SVCK1");
  put_u32(out, 1);  // format version
  put_u64(out, cp.model.seed);
  put_u32(out, static_cast<std::uint32_t>(cp.model.t_total));
  put_u32(out, static_cast<std::uint32_t>(cp.model.readout_window));
  put_f64(out, cp.model.delta_t);
  put_f64(out, cp.model.surrogate_lambda);
  put_u32(out, static_cast<std::uint32_t>(cp.model.layers.size()));
  for (const LifLayerParams& l : cp.model.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.n_pre()));
    put_u32(out, static_cast<std::uint32_t>(l.n_post()));
    put_f64(out, l.tau_mem);
    put_f64(out, l.tau_syn);
    put_u8(out, l.is_readout ? 1 : 0);
  }
  for (const LifLayerParams& l : cp.model.layers) {
    for (std::size_t i = 0; i < l.weights.size(); ++i) put_f64(out, l.weights[i]);
  }
  for (const PruneMask& m : cp.masks) {
    put_u8(out, m.empty() ? 0 : 1);
    if (!m.empty()) detail::put_packed_bits(out, m.bits);
  }
  for (const Matrix& w : cp.init_weights) {
    for (std::size_t i = 0; i < w.size(); ++i) put_f64(out, w[i]);
  }
  put_u8(out, cp.normalizer.has_value() ? 1 : 0);
  if (cp.normalizer.has_value()) {
    put_f64(out, cp.normalizer->min_value);
    put_f64(out, cp.normalizer->max_value);
  }
  return out;
}

inline Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
  ByteCursor cur(bytes.data(), bytes.size());
  cur.expect_magic("SVCK1");
  const std::uint32_t version = cur.u32();
  if (version != 1) throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint cp;
  cp.model.seed = cur.u64();
  cp.model.t_total = cur.u32();
  cp.model.readout_window = cur.u32();
  cp.model.delta_t = cur.f64();
  cp.model.surrogate_lambda = cur.f64();
  const std::uint32_t n_layers = cur.u32();
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint32_t n_pre = cur.u32();
    const std::uint32_t n_post = cur.u32();
    const double tau_mem = cur.f64();
    const double tau_syn = cur.f64();
    const bool readout = cur.u8() != 0;
    cp.model.layers.push_back(make_layer(n_pre, n_post, tau_mem, tau_syn, readout));
  }
  for (LifLayerParams& l : cp.model.layers) {
    for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] = cur.f64();
  }
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    PruneMask m;
    if (cur.u8() != 0) {
      m.rows = cp.model.layers[l].weights.rows();
      m.cols = cp.model.layers[l].weights.cols();
      m.bits = detail::read_packed_bits(cur, m.rows * m.cols);
    }
    cp.masks.push_back(std::move(m));
  }
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    Matrix w(cp.model.layers[l].weights.rows(), cp.model.layers[l].weights.cols());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = cur.f64();
    cp.init_weights.push_back(std::move(w));
  }
  if (cur.u8() != 0) {
    Normalizer n;
    n.min_value = cur.f64();
    n.max_value = cur.f64();
    cp.normalizer = n;
  }
  if (!cur.at_end()) throw DataError("trailing bytes in checkpoint");
  cp.validate();
  return cp;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  write_file_bytes(path, serialize(cp));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize(read_file_bytes(path));
}

}  // namespace svad
