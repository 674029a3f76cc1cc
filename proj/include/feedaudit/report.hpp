#pragma once

#include <filesystem>
#include <string>

namespace feedaudit::cli {

/// Markdown summary built from the CSVs under `reports_dir`: noise
/// baselines, averaged slopes, the influence ordering verdict, per-scenario
/// slopes and links to the SVG figures.
std::string render_summary(const std::filesystem::path& reports_dir);

/// Writes reports_dir/summary.md and returns its path. Throws DataError when
/// analysis outputs are missing.
std::filesystem::path write_summary(const std::filesystem::path& reports_dir);

}  // namespace feedaudit::cli
