#include "akd/compare.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include "akd/error.hpp"
#include "akd/metrics.hpp"
#include "akd/stats.hpp"
#include "akd/trainer.hpp"

namespace akd {

namespace {

// Runs tasks[0..n) on up to `jobs` threads. Each task's exception is captured
// into its own slot.
void run_parallel(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task,
                  std::vector<std::exception_ptr>& errors) {
  errors.assign(n, nullptr);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

std::string describe(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

const MethodSummary* ComparisonReport::find(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return &s;
  }
  return nullptr;
}

ComparisonReport compare_methods(const ExperimentConfig& cfg, std::size_t jobs) {
  validate(cfg);
  std::vector<Method> methods;
  for (Method m : kAllMethods) {
    if (std::find(cfg.compare_methods.begin(), cfg.compare_methods.end(), m) !=
        cfg.compare_methods.end()) {
      methods.push_back(m);
    }
  }
  if (methods.size() < 2) throw ParameterError("compare needs at least 2 distinct methods");
  std::vector<std::uint64_t> seeds = cfg.compare_seeds;
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  if (seeds.size() < 3) throw ParameterError("compare needs at least 3 distinct seeds");

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir + ": " + ec.message());

  auto config_for = [&](Method m, std::uint64_t seed) {
    ExperimentConfig c = cfg;
    c.method = m;
    c.seed = seed;
    return c;
  };

  // One teacher per distinct checkpoint path; an explicit teacher.checkpoint
  // is shared by every seed.
  std::vector<std::uint64_t> teacher_seeds;
  std::vector<std::filesystem::path> teacher_paths;
  for (std::uint64_t seed : seeds) {
    const auto path = teacher_checkpoint_path(config_for(methods.front(), seed));
    if (std::find(teacher_paths.begin(), teacher_paths.end(), path) == teacher_paths.end()) {
      teacher_paths.push_back(path);
      teacher_seeds.push_back(seed);
    }
  }
  std::vector<std::exception_ptr> errors;
  run_parallel(
      teacher_seeds.size(), jobs,
      [&](std::size_t i) {
        const ExperimentConfig c = config_for(methods.front(), teacher_seeds[i]);
        ensure_teacher(c, build_dataset(c));
      },
      errors);
  for (std::size_t i = 0; i < teacher_seeds.size(); ++i) {
    if (errors[i]) {
      throw Error("compare: teacher for seed " + std::to_string(teacher_seeds[i]) +
                  " failed: " + describe(errors[i]));
    }
  }

  const std::size_t pairs = methods.size() * seeds.size();
  std::vector<double> accuracies(pairs, 0.0);
  run_parallel(
      pairs, jobs,
      [&](std::size_t i) {
        const Method m = methods[i / seeds.size()];
        const std::uint64_t seed = seeds[i % seeds.size()];
        accuracies[i] = run_experiment(config_for(m, seed)).final_val_accuracy;
      },
      errors);
  for (std::size_t i = 0; i < pairs; ++i) {
    if (errors[i]) {
      throw Error("compare: run (" + std::string(method_name(methods[i / seeds.size()])) +
                  ", seed " + std::to_string(seeds[i % seeds.size()]) +
                  ") failed: " + describe(errors[i]));
    }
  }

  ComparisonReport report;
  report.seeds = seeds;
  report.digest = config_digest(cfg);
  report.cam_alpha_policy = cfg.cam.alpha_policy;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodSummary s;
    s.method = methods[mi];
    s.final_val_accuracy.assign(accuracies.begin() + static_cast<std::ptrdiff_t>(mi * seeds.size()),
                                accuracies.begin() +
                                    static_cast<std::ptrdiff_t>((mi + 1) * seeds.size()));
    s.mean = mean(s.final_val_accuracy);
    s.std = sample_std(s.final_val_accuracy);
    report.methods.push_back(std::move(s));
  }
  if (report.methods.size() == 4) {
    report.has_reference_ordering = true;
    report.matches_reference_ordering = true;
    for (std::size_t i = 0; i + 1 < 4; ++i) {
      if (!(report.methods[i].mean < report.methods[i + 1].mean)) {
        report.matches_reference_ordering = false;
      }
    }
  }

  const std::filesystem::path out(cfg.out_dir);
  write_text(out / "report.txt", render_report_text(report));
  write_text(out / "report.csv", render_report_csv(report));
  return report;
}

std::string render_report_text(const ComparisonReport& report) {
  std::string s;
  s += "Student final validation accuracy (mean +/- std over " +
       std::to_string(report.seeds.size()) + " seeds)\n";
  s += "config digest: " + report.digest + "\n";
  s += "seeds:";
  for (std::uint64_t seed : report.seeds) s += " " + std::to_string(seed);
  s += "\n";
  s += "alpha policy paired with dynamic+cam: " + std::string(method_name(report.cam_alpha_policy)) +
       "\n\n";

  char line[128];
  std::snprintf(line, sizeof line, "%-14s %-10s %-10s\n", "method", "mean", "std");
  s += line;
  for (const auto& m : report.methods) {
    std::snprintf(line, sizeof line, "%-14s %-10s %-10s\n", std::string(method_name(m.method)).c_str(),
                  fixed4(m.mean).c_str(), fixed4(m.std).c_str());
    s += line;
  }
  s += "\n";

  // Observed ordering, best last.
  std::vector<const MethodSummary*> sorted;
  for (const auto& m : report.methods) sorted.push_back(&m);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MethodSummary* a, const MethodSummary* b) { return a->mean < b->mean; });
  s += "observed ordering (ascending mean):";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    s += (i == 0 ? " " : " < ") + std::string(method_name(sorted[i]->method));
  }
  s += "\n";
  if (report.has_reference_ordering) {
    s += "reference ordering fixed < learnable < dynamic < dynamic+cam: ";
    s += report.matches_reference_ordering ? "MATCHED\n" : "NOT MATCHED\n";
  } else {
    s += "reference ordering fixed < learnable < dynamic < dynamic+cam: not evaluated "
         "(needs all four methods)\n";
  }
  s += "note: desk-scale observation only; absolute accuracies are not reproduction targets.\n";
  return s;
}

std::string render_report_csv(const ComparisonReport& report) {
  std::string s = "method,mean_val_accuracy,std_val_accuracy,seeds,val_accuracies,digest\n";
  for (const auto& m : report.methods) {
    s += std::string(method_name(m.method)) + "," + format_real(m.mean) + "," + format_real(m.std) +
         ",";
    for (std::size_t i = 0; i < report.seeds.size(); ++i) {
      s += (i ? ";" : "") + std::to_string(report.seeds[i]);
    }
    s += ",";
    for (std::size_t i = 0; i < m.final_val_accuracy.size(); ++i) {
      s += (i ? ";" : "") + format_real(m.final_val_accuracy[i]);
    }
    s += "," + report.digest + "\n";
  }
  return s;
}

}  // namespace akd
