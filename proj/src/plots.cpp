#include "akd/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "akd/error.hpp"

namespace akd {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 600.0;  // legend lives to the right of the plot area
constexpr double kTop = 50.0;
constexpr double kBottom = 430.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Point {
  double x;
  double y;
};

struct Line {
  std::vector<Point> points;
  std::string color;
  bool dashed = false;
  std::string label;
};

struct Band {
  std::vector<Point> upper;
  std::vector<Point> lower;
  std::string color;
};

class Chart {
 public:
  Chart(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add_line(Line line) { lines_.push_back(std::move(line)); }
  void add_band(Band band) { bands_.push_back(std::move(band)); }

  std::string render() const {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
    double y0 = x0, y1 = -x0;
    auto extend = [&](const std::vector<Point>& pts) {
      for (const Point& p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
      }
    };
    for (const Line& l : lines_) extend(l.points);
    for (const Band& b : bands_) {
      extend(b.upper);
      extend(b.lower);
    }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) {
      const double pad = std::max(0.05, std::fabs(y0) * 0.1);
      y0 -= pad;
      y1 += pad;
    } else {
      const double pad = 0.05 * (y1 - y0);
      y0 -= pad;
      y1 += pad;
    }
    auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kRight - kLeft); };
    auto sy = [&](double y) { return kBottom - (y - y0) / (y1 - y0) * (kBottom - kTop); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" "
         "height=\"500\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" +
         escape(title_) + "</text>\n";

    // Axes, ticks, grid.
    s += "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
         "\" y2=\"" + num(kBottom) + "\"/>\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kBottom) + "\"/>\n";
    s += "</g>\n";
    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
      const double fx = x0 + (x1 - x0) * i / kTicks;
      const double fy = y0 + (y1 - y0) * i / kTicks;
      s += "<line x1=\"" + num(sx(fx)) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(sx(fx)) +
           "\" y2=\"" + num(kBottom + 5) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + num(sx(fx)) + "\" y=\"" + num(kBottom + 20) +
           "\" text-anchor=\"middle\">" + tick_label(fx) + "</text>\n";
      s += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(sy(fy)) + "\" x2=\"" + num(kRight) +
           "\" y2=\"" + num(sy(fy)) + "\" stroke=\"#dddddd\"/>\n";
      s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(sy(fy) + 4) +
           "\" text-anchor=\"end\">" + tick_label(fy) + "</text>\n";
    }
    s += "<text class=\"x-label\" x=\"" + num((kLeft + kRight) / 2) + "\" y=\"" +
         num(kBottom + 45) + "\" text-anchor=\"middle\">" + escape(x_label_) + "</text>\n";
    s += "<text class=\"y-label\" x=\"20\" y=\"" + num((kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " + num((kTop + kBottom) / 2) +
         ")\">" + escape(y_label_) + "</text>\n";

    for (const Band& b : bands_) {
      s += "<polygon class=\"band\" fill=\"" + b.color + "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (const Point& p : b.upper) s += num(sx(p.x)) + "," + num(sy(p.y)) + " ";
      for (auto it = b.lower.rbegin(); it != b.lower.rend(); ++it) {
        s += num(sx(it->x)) + "," + num(sy(it->y)) + " ";
      }
      s += "\"/>\n";
    }
    for (const Line& l : lines_) {
      s += "<polyline class=\"series\" data-label=\"" + escape(l.label) +
           "\" fill=\"none\" stroke=\"" + l.color + "\" stroke-width=\"2\"";
      if (l.dashed) s += " stroke-dasharray=\"6 4\"";
      s += " points=\"";
      for (std::size_t i = 0; i < l.points.size(); ++i) {
        s += (i ? " " : "") + num(sx(l.points[i].x)) + "," + num(sy(l.points[i].y));
      }
      s += "\"/>\n";
    }

    s += "<g class=\"legend\">\n";
    double ly = kTop + 10;
    for (const Line& l : lines_) {
      s += "<line x1=\"615\" y1=\"" + num(ly) + "\" x2=\"645\" y2=\"" + num(ly) + "\" stroke=\"" +
           l.color + "\" stroke-width=\"2\"" + (l.dashed ? " stroke-dasharray=\"6 4\"" : "") +
           "/>\n";
      s += "<text class=\"legend-entry\" x=\"652\" y=\"" + num(ly + 4) + "\">" + escape(l.label) +
           "</text>\n";
      ly += 20;
    }
    s += "</g>\n</svg>\n";
    return s;
  }

 private:
  std::string title_, x_label_, y_label_;
  std::vector<Line> lines_;
  std::vector<Band> bands_;
};

std::vector<Point> points(const std::vector<MetricsRow>& rows, Split split,
                          double MetricsRow::*field) {
  std::vector<Point> out;
  for (const MetricsRow& r : rows) {
    if (r.split == split) out.push_back({static_cast<double>(r.epoch), r.*field});
  }
  return out;
}

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string series_label(const std::filesystem::path& metrics_file) {
  const std::string stem = metrics_file.stem().string();
  const std::string prefix = "metrics_";
  const auto last = stem.rfind('_');
  if (stem.rfind(prefix, 0) == 0 && last != std::string::npos && last > prefix.size()) {
    return stem.substr(prefix.size(), last - prefix.size());
  }
  return stem;
}

std::string render_loss_svg(const std::vector<PlotSeries>& series) {
  Chart chart("Total loss", "epoch", "total loss");
  for (std::size_t i = 0; i < series.size(); ++i) {
    chart.add_line({points(series[i].rows, Split::kTrain, &MetricsRow::total_loss), color(i), false,
                    series[i].label + " train"});
    chart.add_line({points(series[i].rows, Split::kVal, &MetricsRow::total_loss), color(i), true,
                    series[i].label + " val"});
  }
  return chart.render();
}

std::string render_accuracy_svg(const std::vector<PlotSeries>& series) {
  Chart chart("Validation accuracy", "epoch", "accuracy");
  for (std::size_t i = 0; i < series.size(); ++i) {
    chart.add_line({points(series[i].rows, Split::kVal, &MetricsRow::accuracy), color(i), false,
                    series[i].label});
  }
  return chart.render();
}

std::string render_alpha_svg(const std::vector<PlotSeries>& series) {
  Chart chart("Average alpha (train, mean +/- std)", "epoch", "alpha");
  for (std::size_t i = 0; i < series.size(); ++i) {
    Band band{{}, {}, color(i)};
    for (const MetricsRow& r : series[i].rows) {
      if (r.split != Split::kTrain) continue;
      const double x = static_cast<double>(r.epoch);
      band.upper.push_back({x, r.alpha_mean + r.alpha_std});
      band.lower.push_back({x, r.alpha_mean - r.alpha_std});
    }
    chart.add_band(std::move(band));
    chart.add_line({points(series[i].rows, Split::kTrain, &MetricsRow::alpha_mean), color(i), false,
                    series[i].label});
  }
  return chart.render();
}

PlotFiles emit_plots(const std::vector<std::filesystem::path>& metrics_files,
                     const std::filesystem::path& out_dir) {
  if (metrics_files.empty()) throw ParameterError("plot needs at least one metrics file");
  std::vector<PlotSeries> series;
  std::map<std::string, int> label_uses;
  for (const auto& path : metrics_files) {
    series.push_back({series_label(path), read_metrics_csv(path)});
    ++label_uses[series.back().label];
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (label_uses[series[i].label] > 1) {
      const std::string stem = metrics_files[i].stem().string();
      series[i].label += " seed " + stem.substr(stem.rfind('_') + 1);
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  PlotFiles files{out_dir / "loss.svg", out_dir / "accuracy.svg", out_dir / "alpha.svg"};
  write_file(files.loss, render_loss_svg(series));
  write_file(files.accuracy, render_accuracy_svg(series));
  write_file(files.alpha, render_alpha_svg(series));
  return files;
}

}  // namespace akd
