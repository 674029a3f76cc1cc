#include "feedaudit/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "feedaudit/analysis.hpp"
#include "feedaudit/error.hpp"
#include "feedaudit/platform.hpp"
#include "feedaudit/presets.hpp"
#include "feedaudit/puppet.hpp"
#include "feedaudit/store.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::cli {

namespace {

struct Score {
  double max_abs = 0;
  double sum_sq = 0;
  bool better_than(const Score& o) const {
    if (max_abs != o.max_abs) return max_abs < o.max_abs;
    return sum_sq < o.sum_sq;
  }
};

struct Evaluation {
  std::map<std::size_t, KindValues> achieved;
  std::map<std::size_t, KindValues> deltas;
  Score score;
};

Evaluation evaluate(const catalog::Catalog& catalog, const recsys::PlatformParams& params,
                    const CalibrationTargets& targets, const std::vector<int>& presets) {
  Evaluation e;
  e.achieved = control_divergence(catalog, params, presets);
  for (const auto& [batches, target] : targets.values) {
    auto it = e.achieved.find(batches);
    if (it == e.achieved.end())
      throw DataError("calibration presets include no control with " + std::to_string(batches) + " batches");
    for (const auto& [kind, value] : target) {
      const double d = it->second.at(kind) - value;
      e.deltas[batches][kind] = d;
      e.score.max_abs = std::max(e.score.max_abs, std::fabs(d));
      e.score.sum_sq += d * d;
    }
  }
  return e;
}

std::string describe(const recsys::PlatformParams& p) {
  std::ostringstream out;
  out << "w_noise=" << textio::format_exact(p.weights.noise)
      << " explore=" << textio::format_exact(p.explore_fraction)
      << " locale_mix=" << textio::format_exact(p.locale_mix);
  return out.str();
}

}  // namespace

CalibrationTargets CalibrationTargets::observed() {
  CalibrationTargets t;
  t.values[3] = {{EntityKind::post, 69.74}, {EntityKind::creator, 68.15}, {EntityKind::hashtag, 59.63},
                 {EntityKind::sound, 68.05}};
  t.values[5] = {{EntityKind::post, 66.17}, {EntityKind::creator, 66.05}, {EntityKind::hashtag, 58.62},
                 {EntityKind::sound, 64.47}};
  return t;
}

std::map<std::size_t, KindValues> control_divergence(const catalog::Catalog& catalog,
                                                     const recsys::PlatformParams& params,
                                                     const std::vector<int>& presets) {
  std::deque<std::vector<store::ObservationRow>> rows;
  std::vector<metrics::ControlPairData> data;
  std::set<std::size_t> batch_counts;
  for (int id : presets) {
    const auto scenario = puppet::preset(id);
    if (puppet::family(scenario) != "control")
      throw ConfigError("preset " + std::to_string(id) + " is not a control scenario");
    auto sim = puppet::simulate(scenario, catalog, params);
    rows.push_back(store::to_rows(sim.result.observations, catalog));
    std::vector<int> failed;
    for (const auto& r : sim.result.runs)
      if (r.failed) failed.push_back(r.run_index);
    for (const auto& p : scenario.pairs)
      data.push_back({&rows.back(), p.active_user, p.control_user, failed, scenario.batches_per_run});
    batch_counts.insert(scenario.batches_per_run);
  }
  std::map<std::size_t, KindValues> out;
  for (auto b : batch_counts) {
    const auto nb = metrics::noise_baseline(data, b);
    for (auto kind : metrics::kAllKinds) out[b][kind] = nb.of(kind);
  }
  return out;
}

CalibrationResult calibrate(const catalog::Catalog& catalog, const recsys::PlatformParams& start,
                            const CalibrationTargets& targets, const CalibrationOptions& options,
                            const std::function<void(const std::string&)>& progress) {
  if (!(options.tolerance >= 0)) throw ConfigError("calibration tolerance must be non-negative");
  if (options.max_iterations < 1) throw ConfigError("calibration needs at least one iteration");
  if (!(options.noise_floor >= 0)) throw ConfigError("noise floor must be non-negative");
  if (targets.values.empty()) throw ConfigError("no calibration targets");

  std::vector<int> presets = options.presets;
  if (presets.empty())
    for (const auto& [batches, values] : targets.values) {
      auto ids = control_presets(batches);
      presets.insert(presets.end(), ids.begin(), ids.end());
    }
  std::sort(presets.begin(), presets.end());
  presets.erase(std::unique(presets.begin(), presets.end()), presets.end());

  auto say = [&](const std::string& line) {
    if (progress) progress(line);
  };

  CalibrationResult result;
  recsys::PlatformParams current = start;
  current.weights.noise = std::max(current.weights.noise, options.noise_floor);
  current.validate();

  auto best = evaluate(catalog, current, targets, presets);
  result.evaluations = 1;

  // Coordinates: w_noise, explore_fraction, locale_mix.
  std::array<double, 3> step = {0.01, 0.05, 0.05};
  auto coordinate = [](recsys::PlatformParams& p, std::size_t i) -> double& {
    if (i == 0) return p.weights.noise;
    if (i == 1) return p.explore_fraction;
    return p.locale_mix;
  };
  auto clamp = [&](recsys::PlatformParams& p, std::size_t i) {
    double& v = coordinate(p, i);
    if (i == 0) v = std::max(v, options.noise_floor);
    if (i == 1) v = std::clamp(v, 0.0, 1.0 - p.interest_fraction);
    if (i == 2) v = std::clamp(v, 0.0, 1.0);
  };

  for (int iteration = 1;; ++iteration) {
    result.iterations = iteration;
    say("iteration " + std::to_string(iteration) + ": " + describe(current) +
        " max |delta| " + textio::format_fixed4(best.score.max_abs));
    if (best.score.max_abs <= options.tolerance) {
      result.converged = true;
      break;
    }
    if (iteration == options.max_iterations) break;

    std::optional<std::pair<recsys::PlatformParams, Evaluation>> move;
    for (std::size_t i = 0; i < step.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        auto candidate = current;
        coordinate(candidate, i) += sign * step[i];
        clamp(candidate, i);
        if (coordinate(candidate, i) == coordinate(current, i)) continue;
        auto e = evaluate(catalog, candidate, targets, presets);
        ++result.evaluations;
        const Score& ref = move ? move->second.score : best.score;
        if (e.score.better_than(ref)) move.emplace(candidate, std::move(e));
      }
    }
    if (move) {
      current = move->first;
      best = std::move(move->second);
    } else {
      for (auto& s : step) s /= 2;
    }
  }

  result.params = current;
  result.achieved = best.achieved;
  result.deltas = best.deltas;
  result.max_abs_delta = best.score.max_abs;
  return result;
}

std::string dump_calibration(const CalibrationResult& result, const CalibrationTargets& targets,
                             double tolerance) {
  using textio::format_exact;
  YAML::Emitter out;
  out << YAML::BeginMap << YAML::Key << "calibration" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "converged" << YAML::Value << result.converged;
  out << YAML::Key << "iterations" << YAML::Value << result.iterations;
  out << YAML::Key << "evaluations" << YAML::Value << result.evaluations;
  out << YAML::Key << "tolerance" << YAML::Value << format_exact(tolerance);
  out << YAML::Key << "max_abs_delta" << YAML::Value << textio::format_fixed4(result.max_abs_delta);
  out << YAML::Key << "batches" << YAML::Value << YAML::BeginMap;
  for (const auto& [batches, target] : targets.values) {
    out << YAML::Key << batches << YAML::Value << YAML::BeginMap;
    for (const auto& [kind, value] : target) {
      out << YAML::Key << metrics::to_string(kind) << YAML::Value << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "target" << YAML::Value << format_exact(value);
      auto a = result.achieved.find(batches);
      if (a != result.achieved.end()) {
        out << YAML::Key << "achieved" << YAML::Value << textio::format_fixed4(a->second.at(kind));
        out << YAML::Key << "delta" << YAML::Value << textio::format_fixed4(result.deltas.at(batches).at(kind));
      }
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap << YAML::EndMap << YAML::EndMap;
  return platform::dump_params(result.params) + out.c_str() + "\n";
}

}  // namespace feedaudit::cli
