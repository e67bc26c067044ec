#pragma once

#include <span>

namespace akd {

double mean(std::span<const double> xs);
// Divides by n.
double population_std(std::span<const double> xs);
// Divides by n - 1; zero for fewer than two samples.
double sample_std(std::span<const double> xs);

}  // namespace akd
