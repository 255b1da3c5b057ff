#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "svad/common.hpp"
#include "svad/pruning.hpp"

namespace svad {

// Run settings shared by the training-side commands. Populated from a flat
// key = value config file (# comments, comma-separated lists), then
// overridden by command-line flags; flags win.
struct RunConfig {
  std::string arch = "h1";            // h1 | h2
  std::string features_path;          // directory of .svfe files (or one file)
  std::string labels_path;            // directory of label CSVs (or one file)
  std::string out_path;               // checkpoint (train) or output dir
  std::string history_path;           // training history CSV
  std::size_t epochs = 10;
  std::size_t batch_size = 256;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
  double rho = 0.0;
  std::string loss = "balanced";      // balanced | dcf
  std::vector<double> schedule = {0.70, 0.40, 0.20, 0.15};
  std::size_t t_frame = 100;
  std::size_t threads = 0;
  std::size_t smooth = 11;

  void validate() const {
    if (arch != "h1" && arch != "h2") {
      throw ValidationError("arch must be h1 or h2, got \"" + arch + "\"");
    }
    if (loss != "balanced" && loss != "dcf") {
      throw ValidationError("loss must be balanced or dcf, got \"" + loss + "\"");
    }
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
    if (t_frame < 2) throw ValidationError("t_frame must be at least 2");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (smooth % 2 == 0) throw ValidationError("smooth (median size) must be odd");
    if (!std::isfinite(rho)) throw ValidationError("rho must be finite");
    TicketSchedule{schedule}.validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_double_list(const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  // stoul would wrap negatives silently
  for (const char* unsigned_key :
       {"epochs", "batch_size", "seed", "t_frame", "threads", "smooth"}) {
    if (key == unsigned_key && !value.empty() && value[0] == '-') {
      throw ValidationError("config key \"" + key + "\" must be non-negative");
    }
  }
  try {
    if (key == "arch") cfg.arch = value;
    else if (key == "features") cfg.features_path = value;
    else if (key == "labels") cfg.labels_path = value;
    else if (key == "out") cfg.out_path = value;
    else if (key == "history") cfg.history_path = value;
    else if (key == "epochs") cfg.epochs = std::stoul(value);
    else if (key == "batch_size") cfg.batch_size = std::stoul(value);
    else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "rho") cfg.rho = std::stod(value);
    else if (key == "loss") cfg.loss = value;
    else if (key == "schedule") cfg.schedule = detail::parse_double_list(value);
    else if (key == "t_frame") cfg.t_frame = std::stoul(value);
    else if (key == "threads") cfg.threads = std::stoul(value);
    else if (key == "smooth") cfg.smooth = std::stoul(value);
    else throw ValidationError("unknown config key \"" + key + "\"");
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("bad value for config key \"" + key + "\": " + value);
  }
}

inline void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected key = value");
    }
    apply_config_entry(cfg, detail::trim(stripped.substr(0, eq)),
                       detail::trim(stripped.substr(eq + 1)));
  }
}

}  // namespace svad
