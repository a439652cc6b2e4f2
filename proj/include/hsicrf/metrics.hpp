#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hsicrf/errors.hpp"
#include "hsicrf/io_detail.hpp"
#include "hsicrf/labels.hpp"
#include "hsicrf/types.hpp"

namespace hsicrf {

// Rows = groundtruth class, columns = predicted class. Unlabeled groundtruth
// pixels are excluded from the counts.
struct ConfusionMatrix {
  MatX<std::int64_t> counts;

  Index class_count() const { return counts.rows(); }
  std::int64_t total() const { return counts.sum(); }
};

struct MetricsReport {
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
  VecX<double> per_class;
  std::int64_t total_samples = 0;
};

inline ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw ShapeError("prediction and groundtruth dimensions differ");
  const int classes = std::max(pred.max_label(), gt.max_label());
  ConfusionMatrix cm;
  cm.counts.setZero(classes, classes);
  for (Index p = 0; p < gt.pixel_count(); ++p) {
    const int g = gt.at(p);
    if (g == 0) continue;
    const int q = pred.at(p);
    if (q == 0)
      throw DataError("prediction is unlabeled at labeled pixel " +
                      std::to_string(p));
    cm.counts(g - 1, q - 1)++;
  }
  return cm;
}

// Evaluate pred vs gt on an explicit pixel subset (e.g. the test split).
inline ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt,
                                 std::span<const Index> pixels) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw ShapeError("prediction and groundtruth dimensions differ");
  const int classes = std::max(pred.max_label(), gt.max_label());
  ConfusionMatrix cm;
  cm.counts.setZero(classes, classes);
  for (Index p : pixels) {
    const int g = gt.at(p);
    if (g == 0) continue;
    const int q = pred.at(p);
    if (q == 0)
      throw DataError("prediction is unlabeled at labeled pixel " +
                      std::to_string(p));
    cm.counts(g - 1, q - 1)++;
  }
  return cm;
}

// Overall accuracy, average accuracy (mean per-class recall over classes
// present in groundtruth), and Cohen's kappa with
//   kappa = (p_o - p_e) / (1 - p_e),   p_e = sum_i p_pred(i) * p_gt(i).
// The removable singularity at p_e = 1 resolves to kappa = 1 iff oa = 1.
inline MetricsReport report(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total <= 0) throw DataError("empty confusion matrix, nothing to report");
  const Index C = cm.class_count();

  MetricsReport rep;
  rep.total_samples = total;
  rep.per_class.setZero(C);

  const auto totald = static_cast<double>(total);
  double trace = 0.0;
  double pe = 0.0;
  double aa_sum = 0.0;
  int present = 0;
  for (Index i = 0; i < C; ++i) {
    const auto row = static_cast<double>(cm.counts.row(i).sum());
    const auto col = static_cast<double>(cm.counts.col(i).sum());
    const auto diag = static_cast<double>(cm.counts(i, i));
    trace += diag;
    pe += (row / totald) * (col / totald);
    if (row > 0) {
      rep.per_class[i] = diag / row;
      aa_sum += rep.per_class[i];
      ++present;
    }
  }
  rep.oa = trace / totald;
  rep.aa = aa_sum / static_cast<double>(present);
  if (pe >= 1.0 - 1e-15) {
    rep.kappa = (rep.oa >= 1.0 - 1e-15) ? 1.0 : 0.0;
  } else {
    rep.kappa = (rep.oa - pe) / (1.0 - pe);
  }
  return rep;
}

inline std::string metrics_csv(const MetricsReport& rep) {
  std::ostringstream os;
  os << "metric,value\n";
  os << "oa," << detail::format_double(rep.oa) << "\n";
  os << "aa," << detail::format_double(rep.aa) << "\n";
  os << "kappa," << detail::format_double(rep.kappa) << "\n";
  for (Index i = 0; i < rep.per_class.size(); ++i)
    os << "class_" << (i + 1) << ","
       << detail::format_double(rep.per_class[i]) << "\n";
  os << "total_samples," << rep.total_samples << "\n";
  return os.str();
}

inline std::string metrics_table(const MetricsReport& rep) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(12) << "OA(%)" << std::right << std::setw(8)
     << rep.oa * 100.0 << "\n";
  os << std::left << std::setw(12) << "AA(%)" << std::right << std::setw(8)
     << rep.aa * 100.0 << "\n";
  os << std::left << std::setw(12) << "kappa" << std::right << std::setw(8)
     << std::setprecision(4) << rep.kappa << "\n";
  os << std::setprecision(2);
  for (Index i = 0; i < rep.per_class.size(); ++i) {
    os << std::left << std::setw(12) << ("class " + std::to_string(i + 1))
       << std::right << std::setw(8) << rep.per_class[i] * 100.0 << "\n";
  }
  os << std::left << std::setw(12) << "samples" << std::right << std::setw(8)
     << rep.total_samples << "\n";
  return os.str();
}

// Mean and sample standard deviation (n-1 denominator) across repeated runs.
struct MetricsStats {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline MetricsStats aggregate_metrics(const std::vector<MetricsReport>& runs) {
  if (runs.empty()) throw DataError("no runs to aggregate");
  const Index C = runs.front().per_class.size();

  MetricsStats stats;
  stats.names = {"oa", "aa", "kappa"};
  for (Index i = 0; i < C; ++i)
    stats.names.push_back("class_" + std::to_string(i + 1));

  auto value = [&](const MetricsReport& r, std::size_t m) -> double {
    if (m == 0) return r.oa;
    if (m == 1) return r.aa;
    if (m == 2) return r.kappa;
    return r.per_class[static_cast<Index>(m - 3)];
  };

  const auto n = static_cast<double>(runs.size());
  for (std::size_t m = 0; m < stats.names.size(); ++m) {
    double mean = 0.0;
    for (const auto& r : runs) mean += value(r, m);
    mean /= n;
    double ss = 0.0;
    for (const auto& r : runs) {
      const double d = value(r, m) - mean;
      ss += d * d;
    }
    stats.mean.push_back(mean);
    stats.stddev.push_back(runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
  }
  return stats;
}

inline std::string metrics_stats_csv(const MetricsStats& stats) {
  std::ostringstream os;
  os << "metric,mean,std\n";
  for (std::size_t m = 0; m < stats.names.size(); ++m)
    os << stats.names[m] << "," << detail::format_double(stats.mean[m]) << ","
       << detail::format_double(stats.stddev[m]) << "\n";
  return os.str();
}

}  // namespace hsicrf
