#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "akd/metrics.hpp"

namespace akd {

struct PlotSeries {
  std::string label;
  std::vector<MetricsRow> rows;
};

// "metrics_<method>_<seed>.csv" -> "<method>"; other names -> file stem.
std::string series_label(const std::filesystem::path& metrics_file);

// Standalone SVG documents with a fixed 800x500 viewBox. Each plotted curve is
// a <polyline class="series"> with a matching legend entry.
std::string render_loss_svg(const std::vector<PlotSeries>& series);      // train + val total loss
std::string render_accuracy_svg(const std::vector<PlotSeries>& series);  // val accuracy
std::string render_alpha_svg(const std::vector<PlotSeries>& series);     // train alpha mean +/- std

struct PlotFiles {
  std::filesystem::path loss;
  std::filesystem::path accuracy;
  std::filesystem::path alpha;
};

// Reads each metrics CSV (ParseError with file and line on bad input) and
// writes loss.svg, accuracy.svg and alpha.svg into out_dir. Duplicate method
// labels get a " seed <n>" suffix.
PlotFiles emit_plots(const std::vector<std::filesystem::path>& metrics_files,
                     const std::filesystem::path& out_dir);

}  // namespace akd
