#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "feedaudit/catalog.hpp"
#include "feedaudit/metrics.hpp"
#include "feedaudit/recsys.hpp"

namespace feedaudit::cli {

using metrics::EntityKind;
using KindValues = std::map<EntityKind, double>;

/// Control-pair difference of feeds (percent) per batch count.
struct CalibrationTargets {
  std::map<std::size_t, KindValues> values;

  /// Measured noise of the original audit: 3 and 5 batches per run.
  static CalibrationTargets observed();
};

struct CalibrationOptions {
  double tolerance = 5.0;  // percentage points, every kind and batch count
  int max_iterations = 8;
  double noise_floor = 0.005;      // w_noise never goes below this
  std::vector<int> presets;        // control presets to run; empty means all usable ones
};

struct CalibrationResult {
  recsys::PlatformParams params;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  std::map<std::size_t, KindValues> achieved;
  std::map<std::size_t, KindValues> deltas;  // achieved - target
  double max_abs_delta = 0;
};

/// Mean control divergence of `presets` under `params`, per batch count.
std::map<std::size_t, KindValues> control_divergence(const catalog::Catalog& catalog,
                                                     const recsys::PlatformParams& params,
                                                     const std::vector<int>& presets);

/// Coordinate search over w_noise, explore_fraction and locale_mix. Each
/// iteration evaluates the current point and stops when every kind is within
/// tolerance; otherwise it tries +/- one step on each coordinate, moves to
/// the best improvement, and halves the steps when nothing improves.
CalibrationResult calibrate(const catalog::Catalog& catalog, const recsys::PlatformParams& start,
                            const CalibrationTargets& targets, const CalibrationOptions& options,
                            const std::function<void(const std::string&)>& progress = {});

/// Params YAML followed by a "calibration" section with the convergence flag
/// and per-kind achieved values. Readable by platform::parse_params.
std::string dump_calibration(const CalibrationResult& result, const CalibrationTargets& targets,
                             double tolerance);

}  // namespace feedaudit::cli
