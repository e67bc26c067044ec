#include "akd/metrics.hpp"

#include <array>
#include <charconv>
#include <string_view>

#include "akd/error.hpp"

namespace akd {

std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string to_csv_line(const MetricsRow& r) {
  std::string s = std::to_string(r.epoch);
  s += r.split == Split::kTrain ? ",train," : ",val,";
  s += format_real(r.ce_loss) + "," + format_real(r.kd_loss) + "," + format_real(r.total_loss) +
       "," + format_real(r.accuracy) + "," + format_real(r.alpha_mean) + "," +
       format_real(r.alpha_std) + "," + format_real(r.dist_mean);
  return s;
}

MetricsCsvWriter::MetricsCsvWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot write metrics " + path.string());
  out_ << kMetricsHeader << '\n';
  out_.flush();
}

void MetricsCsvWriter::write(const MetricsRow& row) {
  out_ << to_csv_line(row) << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing metrics " + path_.string());
}

namespace {

double parse_real(std::string_view field, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(where + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read metrics " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return path.string() + ":" + std::to_string(line_no); };

  ++line_no;
  if (!std::getline(in, line)) throw ParseError(where() + ": empty file, expected header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw ParseError(where() + ": unexpected header '" + line + "'");

  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto pos = rest.find(',');
      f.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (f.size() != 9) {
      throw ParseError(where() + ": expected 9 fields, found " + std::to_string(f.size()));
    }
    MetricsRow r;
    std::size_t epoch = 0;
    auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), epoch);
    if (f[0].empty() || ec != std::errc() || ptr != f[0].data() + f[0].size()) {
      throw ParseError(where() + ": bad epoch '" + std::string(f[0]) + "'");
    }
    r.epoch = epoch;
    if (f[1] == "train") r.split = Split::kTrain;
    else if (f[1] == "val") r.split = Split::kVal;
    else throw ParseError(where() + ": bad split '" + std::string(f[1]) + "'");
    r.ce_loss = parse_real(f[2], where());
    r.kd_loss = parse_real(f[3], where());
    r.total_loss = parse_real(f[4], where());
    r.accuracy = parse_real(f[5], where());
    r.alpha_mean = parse_real(f[6], where());
    r.alpha_std = parse_real(f[7], where());
    r.dist_mean = parse_real(f[8], where());
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows");
  return rows;
}

}  // namespace akd
