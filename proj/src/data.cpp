#include "akd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string_view>

#include "akd/error.hpp"

namespace akd {

namespace {

void assign_split(Dataset& data, std::mt19937_64& rng) {
  const std::size_t n = data.size();
  if (n < 2) throw ParameterError("a dataset needs at least 2 rows to split");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = std::max<std::size_t>(1, n / 5);
  data.val_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  data.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(data.train_indices.begin(), data.train_indices.end());
  std::sort(data.val_indices.begin(), data.val_indices.end());
}

Matrix cluster_centers(std::size_t c, std::size_t d) {
  Matrix centers(c, d, 0.0);
  if (d + 1 >= c) {
    // Coordinates of e_k - 1/c in the Helmert basis of the sum-zero subspace.
    for (std::size_t m = 1; m < c; ++m) {
      const double norm = std::sqrt(static_cast<double>(m * (m + 1)));
      for (std::size_t k = 0; k < c; ++k) {
        double h = 0.0;
        if (k < m) h = 1.0 / norm;
        if (k == m) h = -static_cast<double>(m) / norm;
        centers(k, m - 1) = h;
      }
    }
    for (std::size_t k = 0; k < c; ++k) {
      double s = 0.0;
      for (double v : centers.row(k)) s += v * v;
      const double inv = 1.0 / std::sqrt(s);
      for (double& v : centers.row(k)) v *= inv;
    }
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(c);
      centers(k, 0) = std::cos(angle);
      centers(k, 1) = std::sin(angle);
    }
  }
  return centers;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Matrix Dataset::gather_features(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = features.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
  return out;
}

Dataset make_blobs(std::size_t n, std::size_t c, std::size_t d, double spread,
                   std::uint64_t seed) {
  if (c < 2) throw ParameterError("make_blobs: need at least 2 classes");
  if (d < 2) throw ParameterError("make_blobs: need at least 2 dimensions");
  if (n < 10 * c) throw ParameterError("make_blobs: n must be at least 10 * classes");
  if (!(spread > 0.0)) throw ParameterError("make_blobs: spread must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  const Matrix centers = cluster_centers(c, d);
  Dataset data;
  data.features = Matrix(n, d);
  data.labels.resize(n);
  data.classes = c;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % c;
    data.labels[i] = static_cast<int>(k);
    for (std::size_t j = 0; j < d; ++j) data.features(i, j) = centers(k, j) + noise(rng);
  }
  assign_split(data, rng);
  data.provenance = "blobs(n=" + std::to_string(n) + ",c=" + std::to_string(c) +
                    ",d=" + std::to_string(d) + ",seed=" + std::to_string(seed) + ")";
  return data;
}

Dataset make_rings(std::size_t n, std::size_t c, double noise, std::uint64_t seed) {
  if (c < 2) throw ParameterError("make_rings: need at least 2 classes");
  if (n < 2 * c) throw ParameterError("make_rings: n must be at least 2 * classes");
  if (!(noise >= 0.0)) throw ParameterError("make_rings: noise must be non-negative");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> radial(0.0, 1.0);
  Dataset data;
  data.features = Matrix(n, 2);
  data.labels.resize(n);
  data.classes = c;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % c;
    const double theta = angle(rng);
    const double r = static_cast<double>(k + 1) + noise * radial(rng);
    data.labels[i] = static_cast<int>(k);
    data.features(i, 0) = r * std::cos(theta);
    data.features(i, 1) = r * std::sin(theta);
  }
  assign_split(data, rng);
  data.provenance = "rings(n=" + std::to_string(n) + ",c=" + std::to_string(c) +
                    ",seed=" + std::to_string(seed) + ")";
  return data;
}

Dataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::string line;
  const std::string where = path.string() + ":";
  while (std::getline(in, line)) {
    ++line_no;
    if (options.has_header && line_no == 1) continue;
    if (trim(line).empty()) continue;
    const auto fields = split(line, options.delimiter);
    if (width == 0) {
      width = fields.size();
      if (options.label_column >= width) {
        throw ParameterError("label column " + std::to_string(options.label_column) +
                             " out of range for " + std::to_string(width) + " columns");
      }
      if (width < 2) throw ParseError(where + std::to_string(line_no) + ": no feature columns");
    } else if (fields.size() != width) {
      throw ParseError(where + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < width; ++j) {
      const std::string_view f = fields[j];
      if (j == options.label_column) {
        int label = 0;
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
        if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || label < 0) {
          throw ParseError(where + std::to_string(line_no) + ": label '" + std::string(f) +
                           "' is not a non-negative integer");
        }
        labels.push_back(label);
      } else {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || !std::isfinite(v)) {
          throw ParseError(where + std::to_string(line_no) + ": bad number '" + std::string(f) +
                           "'");
        }
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw ParseError(where + " no data rows");

  Dataset data;
  data.features = Matrix(labels.size(), width - 1, std::move(values));
  data.classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  data.labels = std::move(labels);
  std::mt19937_64 rng(options.seed);
  assign_split(data, rng);
  data.provenance = "delimited(" + path.string() + ")";
  return data;
}

void standardize(Dataset& data) {
  const std::size_t d = data.dim();
  const double n = static_cast<double>(data.train_indices.size());
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (std::size_t i : data.train_indices) mu += data.features(i, j);
    mu /= n;
    double var = 0.0;
    for (std::size_t i : data.train_indices) {
      const double dv = data.features(i, j) - mu;
      var += dv * dv;
    }
    var /= n;
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (std::size_t i = 0; i < data.size(); ++i) data.features(i, j) = (data.features(i, j) - mu) * inv;
  }
}

}  // namespace akd
