#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "svad/common.hpp"

namespace svad {

inline constexpr std::size_t kMedianFilterSize = 11;

// Frame decision: speech iff the voltage-difference score strictly exceeds rho.
inline int classify(double score, double rho) { return score > rho ? 1 : 0; }

// Majority vote over an odd-sized window centered on each frame; boundaries
// replicate the edge value. The identity filter (size 1) is allowed.
inline std::vector<std::uint8_t> median_smooth(std::span<const std::uint8_t> labels,
                                               std::size_t size = kMedianFilterSize) {
  if (size % 2 == 0) throw ValidationError("median filter size must be odd");
  const std::size_t n = labels.size();
  std::vector<std::uint8_t> out(n);
  const long half = static_cast<long>(size / 2);
  for (long i = 0; i < static_cast<long>(n); ++i) {
    std::size_t ones = 0;
    for (long j = i - half; j <= i + half; ++j) {
      const long k = j < 0 ? 0 : (j >= static_cast<long>(n) ? static_cast<long>(n) - 1 : j);
      ones += labels[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(i)] = ones * 2 > size ? 1 : 0;
  }
  return out;
}

struct Counts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

struct RocPoint {
  double rho = 0.0;
  double far = 0.0;
  double hit_rate = 0.0;
};

struct MetricsReport {
  double far = 0.0;   // FP / (FP + TN)
  double mr = 0.0;    // FN / (FN + TP)
  double dcf = 0.0;   // 0.25*FAR + 0.75*MR
  double hter = 0.0;  // 0.5*(FAR + MR)
  Counts counts;
  std::vector<RocPoint> roc_points;
};

inline Counts count_errors(std::span<const std::uint8_t> predicted,
                           std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("prediction/truth length mismatch");
  }
  Counts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      predicted[i] ? ++c.tp : ++c.fn;
    } else {
      predicted[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

inline MetricsReport metrics_from_counts(const Counts& c) {
  if (c.fp + c.tn == 0 || c.fn + c.tp == 0) {
    throw DataError("single-class ground truth; FAR/MR undefined");
  }
  MetricsReport r;
  r.counts = c;
  r.far = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  r.mr = static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
  r.dcf = 0.25 * r.far + 0.75 * r.mr;
  r.hter = 0.5 * (r.far + r.mr);
  return r;
}

inline std::vector<std::uint8_t> predict_labels(std::span<const double> scores,
                                                double rho, std::size_t smooth_size) {
  std::vector<std::uint8_t> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    labels[i] = static_cast<std::uint8_t>(classify(scores[i], rho));
  }
  return median_smooth(labels, smooth_size);
}

// Threshold, smooth, then count. Ground truth must contain both classes.
inline MetricsReport evaluate(std::span<const double> scores,
                              std::span<const std::uint8_t> truth, double rho,
                              std::size_t smooth_size = kMedianFilterSize) {
  if (scores.size() != truth.size() || scores.empty()) {
    throw ValidationError("evaluate: scores and truth must be non-empty and aligned");
  }
  return metrics_from_counts(count_errors(predict_labels(scores, rho, smooth_size), truth));
}

inline std::vector<RocPoint> roc_sweep(std::span<const double> scores,
                                       std::span<const std::uint8_t> truth,
                                       std::span<const double> rho_grid,
                                       std::size_t smooth_size = kMedianFilterSize) {
  if (rho_grid.size() < 2) throw ValidationError("roc_sweep: need at least 2 grid points");
  std::vector<RocPoint> points;
  points.reserve(rho_grid.size());
  for (double rho : rho_grid) {
    const MetricsReport r = evaluate(scores, truth, rho, smooth_size);
    points.push_back({rho, r.far, 1.0 - r.mr});
  }
  return points;
}

// --- report files -----------------------------------------------------------

inline void write_metrics_csv(const std::filesystem::path& path,
                              const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write report: " + path.string());
  out.precision(17);
  out << "metric,name,value\n";
  out << "metric,far," << report.far << '\n';
  out << "metric,mr," << report.mr << '\n';
  out << "metric,dcf," << report.dcf << '\n';
  out << "metric,hter," << report.hter << '\n';
  out << "count,tp," << report.counts.tp << '\n';
  out << "count,fp," << report.counts.fp << '\n';
  out << "count,tn," << report.counts.tn << '\n';
  out << "count,fn," << report.counts.fn << '\n';
}

inline void write_roc_csv(const std::filesystem::path& path,
                          std::span<const RocPoint> points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write ROC: " + path.string());
  out.precision(17);
  out << "rho,far,hit_rate\n";
  for (const RocPoint& p : points) {
    out << p.rho << ',' << p.far << ',' << p.hit_rate << '\n';
  }
}

}  // namespace svad
