#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "akd/config.hpp"

namespace akd {

struct MethodSummary {
  Method method = Method::kFixed;
  std::vector<double> final_val_accuracy;  // one per seed, in seed order
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across seeds
};

struct ComparisonReport {
  std::vector<MethodSummary> methods;  // canonical order: fixed, learnable, dynamic, dynamic+cam
  std::vector<std::uint64_t> seeds;
  std::string digest;
  Method cam_alpha_policy = Method::kDynamic;

  // Set only when all four methods ran.
  bool has_reference_ordering = false;
  bool matches_reference_ordering = false;

  const MethodSummary* find(Method m) const;
};

// Runs every (method, seed) pair of cfg.compare_methods x cfg.compare_seeds,
// up to `jobs` at a time, and writes report.txt and report.csv into
// cfg.out_dir. Teachers are prepared per seed before the student runs.
// ParameterError for fewer than 2 methods or 3 seeds; a failing pair aborts
// with an Error naming it.
ComparisonReport compare_methods(const ExperimentConfig& cfg, std::size_t jobs = 1);

std::string render_report_text(const ComparisonReport& report);
std::string render_report_csv(const ComparisonReport& report);

}  // namespace akd
