#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "svad/checkpoint.hpp"
#include "svad/config.hpp"
#include "svad/energy.hpp"
#include "svad/labels.hpp"
#include "svad/lottery.hpp"
#include "svad/metrics.hpp"
#include "svad/pipeline.hpp"
#include "svad/synth.hpp"
#include "svad/training.hpp"
#include "svad/wav.hpp"

namespace svad {

namespace fs = std::filesystem;

namespace detail {

inline std::vector<fs::path> list_files(const fs::path& path, const std::string& ext) {
  std::vector<fs::path> files;
  if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else if (fs::is_directory(path)) {
    for (const fs::directory_entry& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ext) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    throw DataError("no such file or directory: " + path.string());
  }
  return files;
}

inline fs::path find_labels_for(const fs::path& feature_file, const fs::path& labels_path) {
  if (fs::is_regular_file(labels_path)) return labels_path;
  const std::string stem = feature_file.stem().string();
  for (const std::string& suffix : {".labels.csv", ".csv"}) {
    const fs::path candidate = labels_path / (stem + suffix);
    if (fs::exists(candidate)) return candidate;
  }
  throw DataError("no labels found for " + feature_file.string() + " under " +
                  labels_path.string());
}

}  // namespace detail

// Loads feature files and, when labels_path is non-empty, their paired label
// files (same stem, ".labels.csv" or ".csv").
inline std::vector<Track> load_tracks(const fs::path& features_path,
                                      const fs::path& labels_path) {
  const std::vector<fs::path> files = detail::list_files(features_path, ".svfe");
  if (files.empty()) throw DataError("no feature files under " + features_path.string());
  std::vector<Track> tracks;
  for (const fs::path& f : files) {
    Track t;
    t.name = f.stem().string();
    t.frames = read_feature_file(f);
    if (!t.frames.empty() && t.frames[0].coeffs.size() != kNumMelFilters) {
      throw DataError(f.string() + ": expected " + std::to_string(kNumMelFilters) +
                      " coefficients per frame");
    }
    if (!labels_path.empty()) {
      t.labels = read_labels(detail::find_labels_for(f, labels_path), t.frames.size());
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

inline NetworkModel make_preset(const RunConfig& cfg) {
  if (cfg.arch == "h1") return make_h1(cfg.seed, 200, cfg.t_frame);
  return make_h2(cfg.seed, cfg.t_frame);
}

// --- features ----------------------------------------------------------------

struct FeaturesResult {
  std::size_t written = 0;
  std::size_t failed = 0;
};

inline FeaturesResult cmd_features(const fs::path& wav_path, const fs::path& out_dir) {
  const std::vector<fs::path> wavs = detail::list_files(wav_path, ".wav");
  FeaturesResult result;
  if (wavs.empty()) {
    std::cerr << "warning: no .wav files under " << wav_path << ", nothing to do\n";
    return result;
  }
  fs::create_directories(out_dir);
  for (const fs::path& wav : wavs) {
    try {
      const AudioSignal sig = read_wav(wav);
      const std::vector<FeatureFrame> frames = compute_features(sig);
      write_feature_file(out_dir / (wav.stem().string() + ".svfe"), frames);
      result.written += 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << wav << ": " << e.what() << "\n";
      result.failed += 1;
    }
  }
  return result;
}

// --- synth ---------------------------------------------------------------------

inline void cmd_synth(const SynthSpec& spec, const fs::path& out_dir) {
  const std::vector<SynthTrack> tracks = synthesize_corpus(spec);
  fs::create_directories(out_dir);
  for (const SynthTrack& t : tracks) {
    write_wav(out_dir / (t.name + ".wav"), t.audio);
    write_label_csv(out_dir / (t.name + ".labels.csv"), t.frame_labels);
    std::size_t positives = 0;
    for (std::uint8_t v : t.frame_labels) positives += v;
    std::cout << t.name << ": " << t.audio.samples.size() << " samples, "
              << t.frame_labels.size() << " frames, " << positives << " speech\n";
  }
}

// --- train ---------------------------------------------------------------------

inline Checkpoint cmd_train(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.out_path.empty()) throw ValidationError("train: out path required");
  const std::vector<Track> tracks = load_tracks(cfg.features_path, cfg.labels_path);

  std::vector<FeatureFrame> all_frames;
  for (const Track& t : tracks) {
    all_frames.insert(all_frames.end(), t.frames.begin(), t.frames.end());
  }
  const Normalizer norm = fit_normalizer(all_frames);

  NetworkModel model = make_preset(cfg);
  Checkpoint cp = Checkpoint::fresh(model);  // init vector persisted pre-training
  cp.normalizer = norm;

  const Dataset data = build_dataset(tracks, norm, model, /*clip=*/false);
  if (data.empty()) throw DataError("train: no usable samples (tracks too short?)");

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.adam.learning_rate = cfg.learning_rate;
  tc.loss = cfg.loss == "dcf" ? LossConfig::dcf_weighted() : LossConfig::balanced();
  tc.seed = cfg.seed;
  tc.threads = cfg.threads;
  const TrainHistory history = train(model, data, tc);

  cp.model = model;
  save_checkpoint(cfg.out_path, cp);
  if (!cfg.history_path.empty()) write_history_csv(cfg.history_path, history);
  if (!history.epochs.empty()) {
    const EpochStats& last = history.epochs.back();
    std::cout << "trained " << cfg.arch << ": " << history.steps << " steps, loss "
              << last.mean_loss << ", accuracy " << last.accuracy << "\n";
  }
  std::cout << "checkpoint written to " << cfg.out_path << "\n";
  return cp;
}

// --- prune ---------------------------------------------------------------------

inline std::vector<TicketIteration> cmd_prune(const fs::path& checkpoint_path,
                                              const RunConfig& cfg) {
  cfg.validate();
  if (cfg.out_path.empty()) throw ValidationError("prune: out path required");
  if (cfg.schedule.empty()) {
    std::cout << "empty schedule: nothing to prune\n";
    return {};
  }
  Checkpoint cp = load_checkpoint(checkpoint_path);
  if (!cp.normalizer.has_value()) {
    throw DataError("prune: checkpoint has no normalizer; retrain first");
  }
  const std::vector<Track> tracks = load_tracks(cfg.features_path, cfg.labels_path);

  // rewind: iterate from the stored initialization vector
  NetworkModel init_model = cp.model;
  for (std::size_t l = 0; l < init_model.layers.size(); ++l) {
    init_model.layers[l].weights = cp.init_weights[l];
  }
  const Dataset data = build_dataset(tracks, *cp.normalizer, init_model, /*clip=*/false);
  if (data.empty()) throw DataError("prune: no usable samples");

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.adam.learning_rate = cfg.learning_rate;
  tc.loss = cfg.loss == "dcf" ? LossConfig::dcf_weighted() : LossConfig::balanced();
  tc.seed = cfg.seed;
  tc.threads = cfg.threads;

  const TicketTrainFn train_fn = [&](NetworkModel& m, const PruneMask* mask) {
    return train(m, data, tc, mask);
  };
  const std::vector<TicketIteration> iterations =
      lottery_loop(init_model, TicketSchedule{cfg.schedule}, train_fn);

  fs::create_directories(cfg.out_path);
  for (const TicketIteration& it : iterations) {
    Checkpoint out = cp;
    out.model = it.model;
    out.masks.assign(out.model.layers.size(), PruneMask{});
    if (it.keep_fraction < 1.0) out.masks[0] = it.mask;
    char name[64];
    if (it.keep_fraction >= 1.0) {
      std::snprintf(name, sizeof(name), "dense.svck");
    } else {
      std::snprintf(name, sizeof(name), "ticket_%.2f.svck", it.keep_fraction);
    }
    save_checkpoint(fs::path(cfg.out_path) / name, out);
    std::cout << name << ": input->hidden density " << it.mask.density();
    if (!it.history.epochs.empty()) {
      std::cout << ", final accuracy " << it.history.epochs.back().accuracy;
    }
    std::cout << "\n";
  }
  return iterations;
}

// --- eval / roc -----------------------------------------------------------------

inline Counts aggregate_counts(const std::vector<ScoredTrack>& scored, double rho,
                               std::size_t smooth_size) {
  Counts total;
  for (const ScoredTrack& st : scored) {
    if (st.scores.empty()) continue;
    total += count_errors(predict_labels(st.scores, rho, smooth_size), st.truth);
  }
  return total;
}

inline std::vector<ScoredTrack> score_tracks(const Checkpoint& cp,
                                             const std::vector<Track>& tracks) {
  if (!cp.normalizer.has_value()) throw DataError("checkpoint has no normalizer");
  NetworkModel model = cp.model;  // masks are baked into the weights
  std::vector<ScoredTrack> scored;
  for (const Track& t : tracks) {
    scored.push_back(score_labeled_track(model, t, *cp.normalizer, /*clip=*/true));
  }
  return scored;
}

inline MetricsReport cmd_eval(const fs::path& checkpoint_path, const RunConfig& cfg) {
  cfg.validate();
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  const std::vector<Track> tracks = load_tracks(cfg.features_path, cfg.labels_path);
  const std::vector<ScoredTrack> scored = score_tracks(cp, tracks);
  const MetricsReport report =
      metrics_from_counts(aggregate_counts(scored, cfg.rho, cfg.smooth));
  if (!cfg.out_path.empty()) {
    fs::create_directories(fs::path(cfg.out_path).parent_path().empty()
                               ? "."
                               : fs::path(cfg.out_path).parent_path());
    write_metrics_csv(cfg.out_path, report);
  }
  std::cout << "far " << report.far << "  mr " << report.mr << "  dcf " << report.dcf
            << "  hter " << report.hter << "\n";
  return report;
}

inline std::vector<RocPoint> cmd_roc(const fs::path& checkpoint_path, const RunConfig& cfg,
                                     double rho_min, double rho_max, std::size_t n_points) {
  cfg.validate();
  if (n_points < 2) throw ValidationError("roc: need at least 2 grid points");
  if (!(rho_max > rho_min)) throw ValidationError("roc: rho_max must exceed rho_min");
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  const std::vector<Track> tracks = load_tracks(cfg.features_path, cfg.labels_path);
  const std::vector<ScoredTrack> scored = score_tracks(cp, tracks);
  std::vector<RocPoint> points;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double rho = rho_min + (rho_max - rho_min) * static_cast<double>(i) /
                                     static_cast<double>(n_points - 1);
    const MetricsReport r =
        metrics_from_counts(aggregate_counts(scored, rho, cfg.smooth));
    points.push_back({rho, r.far, 1.0 - r.mr});
  }
  if (!cfg.out_path.empty()) write_roc_csv(cfg.out_path, points);
  return points;
}

// --- energy ---------------------------------------------------------------------

inline SpikeStats cmd_energy(const fs::path& checkpoint_path, const RunConfig& cfg,
                             const std::string& preset_name) {
  const PowerReference ref = power_preset(preset_name);
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  if (!cp.normalizer.has_value()) throw DataError("checkpoint has no normalizer");
  const std::vector<Track> tracks = load_tracks(cfg.features_path, /*labels=*/"");

  NetworkModel model = cp.model;
  std::vector<const PruneMask*> masks;
  for (const PruneMask& m : cp.masks) masks.push_back(m.empty() ? nullptr : &m);

  const std::size_t fps = frames_per_sample(model);
  const std::size_t t_frame = model.t_total / fps;
  SpikeStats mean;
  std::size_t n_samples = 0;
  for (const Track& t : tracks) {
    if (t.frames.size() < fps) continue;
    std::vector<FeatureFrame> normalized(t.frames.size());
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
      normalized[i] = normalize(t.frames[i], *cp.normalizer, /*clip=*/true);
    }
    for (std::size_t i = fps - 1; i < normalized.size(); ++i) {
      const SpikeRaster raster =
          encode_sample({normalized.data() + i + 1 - fps, fps}, t_frame);
      const ForwardTrace trace = forward(model, raster);
      const SpikeStats s = spike_stats(model, raster, trace, masks);
      if (n_samples == 0) {
        mean = s;
      } else {
        for (std::size_t l = 0; l < mean.layers.size(); ++l) {
          mean.layers[l].rate += s.layers[l].rate;
          mean.layers[l].sops += s.layers[l].sops;
        }
        mean.total_sops += s.total_sops;
        mean.input_rate += s.input_rate;
        mean.mean_rate += s.mean_rate;
      }
      n_samples += 1;
    }
  }
  if (n_samples == 0) throw DataError("energy: no usable samples");
  const double inv = 1.0 / static_cast<double>(n_samples);
  for (LayerSpikeStats& l : mean.layers) {
    l.rate *= inv;
    l.sops *= inv;
  }
  mean.total_sops *= inv;
  mean.input_rate *= inv;
  mean.mean_rate *= inv;

  const double power = estimate_power(ref, static_cast<double>(mean.total_neurons));
  if (!cfg.out_path.empty()) write_energy_csv(cfg.out_path, mean, ref, power);
  std::cout << "neurons " << mean.total_neurons << "  mean SOPs/inference "
            << mean.total_sops << "  estimated power " << power * 1e6 << " uW ("
            << ref.name << ")\n";
  return mean;
}

// --- inspect --------------------------------------------------------------------

inline void cmd_inspect(const fs::path& checkpoint_path, std::ostream& out = std::cout) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  out << "checkpoint: " << checkpoint_path.string() << "\n";
  out << "  seed " << cp.model.seed << ", T " << cp.model.t_total << ", readout window "
      << cp.model.eval_window() << ", lambda " << cp.model.surrogate_lambda << "\n";
  out << "  parameters: " << cp.model.param_count() << "\n";
  for (std::size_t l = 0; l < cp.model.layers.size(); ++l) {
    const LifLayerParams& p = cp.model.layers[l];
    out << "  layer " << l << ": " << p.n_pre() << " -> " << p.n_post()
        << (p.is_readout ? " (readout)" : "") << ", tau_mem " << p.tau_mem
        << ", tau_syn " << p.tau_syn;
    if (!cp.masks[l].empty()) {
      out << ", mask density " << cp.masks[l].density() << " ("
          << cp.masks[l].ones() << " of " << cp.masks[l].size() << ")";
    }
    out << "\n";
  }
  if (cp.normalizer.has_value()) {
    out << "  normalizer: min " << cp.normalizer->min_value << ", max "
        << cp.normalizer->max_value << "\n";
  } else {
    out << "  normalizer: none\n";
  }
}

}  // namespace svad
