#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace akd {

enum class Split { kTrain, kVal };

// One (epoch, split) record. kd_loss is the raw KL mean (without T^2).
struct MetricsRow {
  std::size_t epoch = 0;
  Split split = Split::kTrain;
  double ce_loss = 0.0;
  double kd_loss = 0.0;
  double total_loss = 0.0;
  double accuracy = 0.0;
  double alpha_mean = 0.0;
  double alpha_std = 0.0;
  double dist_mean = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

inline constexpr const char* kMetricsHeader =
    "epoch,split,ce_loss,kd_loss,total_loss,accuracy,alpha_mean,alpha_std,dist_mean";

// Shortest decimal text that parses back to the same double.
std::string format_real(double v);
std::string to_csv_line(const MetricsRow& row);

// Writes the header on open and flushes after every row, so an interrupted run
// leaves a readable prefix.
class MetricsCsvWriter {
 public:
  explicit MetricsCsvWriter(const std::filesystem::path& path);
  void write(const MetricsRow& row);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// ParseError naming file and line for a missing/incorrect header, a malformed
// row, or a file with no data rows; IoError when unreadable.
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace akd
