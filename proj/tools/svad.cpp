// svad — spiking-network voice activity detection toolkit.
//
// Subcommands: features, synth, train, prune, eval, roc, energy, inspect.
// Exit codes: 0 ok, 1 validation error, 2 data error, 3 numeric failure.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svad/commands.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  svad::RunConfig cfg;
};

// Config file first, then explicitly passed flags on top: flags win.
void add_run_options(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "key = value config file");
  sub->add_option("--arch", args.cfg.arch, "architecture preset: h1 | h2");
  sub->add_option("--features", args.cfg.features_path, "feature file or directory");
  sub->add_option("--labels", args.cfg.labels_path, "label file or directory");
  sub->add_option("--out", args.cfg.out_path, "output path");
  sub->add_option("--history", args.cfg.history_path, "training history CSV path");
  sub->add_option("--epochs", args.cfg.epochs, "training epochs");
  sub->add_option("--batch-size", args.cfg.batch_size, "optimizer batch size");
  sub->add_option("--learning-rate", args.cfg.learning_rate, "Adam learning rate");
  sub->add_option("--seed", args.cfg.seed, "RNG seed");
  sub->add_option("--rho", args.cfg.rho, "decision bias threshold");
  sub->add_option("--loss", args.cfg.loss, "loss weighting: balanced | dcf");
  sub->add_option("--schedule", args.cfg.schedule, "pruning keep fractions")
      ->delimiter(',');
  sub->add_option("--t-frame", args.cfg.t_frame, "time-steps per encoded frame");
  sub->add_option("--threads", args.cfg.threads, "worker threads (0 = auto)");
  sub->add_option("--smooth", args.cfg.smooth, "median filter size (odd)");
}

// Re-applies explicitly passed flags over the config-file values.
svad::RunConfig resolve_config(CLI::App* sub, const CommonArgs& args) {
  svad::RunConfig cfg;
  if (!args.config_path.empty()) svad::load_config_file(cfg, args.config_path);
  auto override_if = [&](const std::string& flag, auto member) {
    if (sub->count(flag) > 0) cfg.*member = args.cfg.*member;
  };
  override_if("--arch", &svad::RunConfig::arch);
  override_if("--features", &svad::RunConfig::features_path);
  override_if("--labels", &svad::RunConfig::labels_path);
  override_if("--out", &svad::RunConfig::out_path);
  override_if("--history", &svad::RunConfig::history_path);
  override_if("--epochs", &svad::RunConfig::epochs);
  override_if("--batch-size", &svad::RunConfig::batch_size);
  override_if("--learning-rate", &svad::RunConfig::learning_rate);
  override_if("--seed", &svad::RunConfig::seed);
  override_if("--rho", &svad::RunConfig::rho);
  override_if("--loss", &svad::RunConfig::loss);
  override_if("--schedule", &svad::RunConfig::schedule);
  override_if("--t-frame", &svad::RunConfig::t_frame);
  override_if("--threads", &svad::RunConfig::threads);
  override_if("--smooth", &svad::RunConfig::smooth);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking-network voice activity detection toolkit"};
  app.require_subcommand(1);

  // features
  std::string wav_path, features_out;
  CLI::App* features = app.add_subcommand("features", "extract log-Mel features from WAVs");
  features->add_option("--wav", wav_path, "WAV file or directory")->required();
  features->add_option("--out", features_out, "output directory")->required();

  // synth
  svad::SynthSpec synth_spec;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic WAV+label corpus");
  synth->add_option("--duration", synth_spec.duration_sec, "seconds per track");
  synth->add_option("--snr", synth_spec.snr_db, "SNR levels in dB (one track each)")
      ->delimiter(',');
  synth->add_option("--speech-fraction", synth_spec.speech_fraction,
                    "target fraction of speech frames");
  synth->add_option("--seed", synth_spec.seed, "RNG seed");
  synth->add_option("--out", synth_out, "output directory")->required();

  // train / prune / eval / roc / energy share the run config
  CommonArgs train_args, prune_args, eval_args, roc_args, energy_args;
  CLI::App* train = app.add_subcommand("train", "train a network on features+labels");
  add_run_options(train, train_args);

  std::string prune_checkpoint;
  CLI::App* prune = app.add_subcommand("prune", "lottery-ticket pruning iterations");
  prune->add_option("--checkpoint", prune_checkpoint, "trained checkpoint with init vector")
      ->required();
  add_run_options(prune, prune_args);

  std::string eval_checkpoint;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint (DCF/HTER)");
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint to evaluate")->required();
  add_run_options(eval, eval_args);

  std::string roc_checkpoint;
  double rho_min = -2.0, rho_max = 2.0;
  std::size_t roc_points = 41;
  CLI::App* roc = app.add_subcommand("roc", "sweep rho and export the ROC curve");
  roc->add_option("--checkpoint", roc_checkpoint, "checkpoint to evaluate")->required();
  roc->add_option("--rho-min", rho_min, "sweep start");
  roc->add_option("--rho-max", rho_max, "sweep end");
  roc->add_option("--points", roc_points, "number of grid points");
  add_run_options(roc, roc_args);

  std::string energy_checkpoint, energy_preset = "truenorth-dense";
  CLI::App* energy = app.add_subcommand("energy", "spike statistics and power estimate");
  energy->add_option("--checkpoint", energy_checkpoint, "checkpoint to analyze")->required();
  energy->add_option("--preset", energy_preset,
                     "power reference: truenorth-dense | truenorth-sparse");
  add_run_options(energy, energy_args);

  std::string inspect_checkpoint;
  CLI::App* inspect = app.add_subcommand("inspect", "print a checkpoint summary");
  inspect->add_option("--checkpoint", inspect_checkpoint, "checkpoint to describe")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (features->parsed()) {
      const svad::FeaturesResult r = svad::cmd_features(wav_path, features_out);
      if (r.failed > 0) {
        std::cerr << r.failed << " file(s) failed\n";
        return 2;
      }
      std::cout << r.written << " feature file(s) written\n";
      return 0;
    }
    if (synth->parsed()) {
      svad::cmd_synth(synth_spec, synth_out);
      return 0;
    }
    if (train->parsed()) {
      svad::cmd_train(resolve_config(train, train_args));
      return 0;
    }
    if (prune->parsed()) {
      svad::cmd_prune(prune_checkpoint, resolve_config(prune, prune_args));
      return 0;
    }
    if (eval->parsed()) {
      svad::cmd_eval(eval_checkpoint, resolve_config(eval, eval_args));
      return 0;
    }
    if (roc->parsed()) {
      svad::cmd_roc(roc_checkpoint, resolve_config(roc, roc_args), rho_min, rho_max,
                    roc_points);
      return 0;
    }
    if (energy->parsed()) {
      svad::cmd_energy(energy_checkpoint, resolve_config(energy, energy_args),
                       energy_preset);
      return 0;
    }
    if (inspect->parsed()) {
      svad::cmd_inspect(inspect_checkpoint);
      return 0;
    }
  } catch (const svad::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const svad::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const svad::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
