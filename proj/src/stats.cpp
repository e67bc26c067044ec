#include "akd/stats.hpp"

#include <cmath>

namespace akd {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

namespace {
double squared_deviation(std::span<const double> xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s;
}
}  // namespace

double population_std(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::sqrt(squared_deviation(xs) / static_cast<double>(xs.size()));
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  return std::sqrt(squared_deviation(xs) / static_cast<double>(xs.size() - 1));
}

}  // namespace akd
