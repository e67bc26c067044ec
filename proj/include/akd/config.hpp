#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "akd/alpha.hpp"
#include "akd/optim.hpp"

namespace akd {

enum class Method { kFixed, kLearnable, kDynamic, kDynamicCam };

// Canonical display order for comparisons.
inline constexpr Method kAllMethods[] = {Method::kFixed, Method::kLearnable, Method::kDynamic,
                                         Method::kDynamicCam};

std::string_view method_name(Method m);
// ConfigError for unknown names.
Method parse_method(std::string_view name);

enum class DatasetKind { kRings, kBlobs, kDelimited };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kRings;
  std::size_t n = 2000;
  std::size_t classes = 4;
  std::size_t dim = 2;  // blobs only
  double spread = 0.5;
  double noise = 0.15;
  std::string path;  // delimited only
  std::size_t label_column = 0;
  char delimiter = ',';
  bool header = false;
  bool standardize = true;
};

struct CamSettings {
  std::size_t hidden_multiplier = 4;
  bool zero_init_output = true;
  // Global alpha policy used alongside the CAM.
  Method alpha_policy = Method::kDynamic;
};

struct GradCheckSettings {
  std::size_t batch = 3;
  std::size_t classes = 3;
  std::size_t features = 2;
  std::size_t hidden = 4;
  std::size_t cam_hidden_multiplier = 2;
  double temperature = 2.0;
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<std::size_t> teacher_widths{2, 256, 256, 4};
  std::vector<std::size_t> student_widths{2, 16, 4};
  std::size_t teacher_epochs = 20;
  std::string teacher_checkpoint;  // empty: <out_dir>/teacher_<seed>.akd
  bool teacher_train_if_missing = true;
  bool student_init_from_teacher = false;
  OptimizerOptions optimizer{OptimizerKind::kAdam, 1e-2};
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double temperature = 4.0;
  Method method = Method::kDynamicCam;
  double alpha0 = 0.5;
  double k = 3.0;
  bool sign_flip = false;
  double theta0 = 0.0;
  CamSettings cam;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<Method> compare_methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::vector<std::uint64_t> compare_seeds{1, 2, 3, 4, 5};
  GradCheckSettings gradcheck;

  // Alpha policy driving `method` (the CAM pairing for dynamic+cam).
  AlphaPolicy alpha_policy() const;
  AlphaPolicy alpha_policy_for(Method m) const;
};

// Parses a flat JSON object of dotted keys over the defaults above. Unknown
// keys, wrong value types and out-of-range values raise ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// ConfigError unless the configuration is internally consistent.
void validate(const ExperimentConfig& cfg);

// Canonical JSON of every experiment-defining field (output paths excluded).
std::string canonical_json(const ExperimentConfig& cfg);
// 16 hex digits of FNV-1a over canonical_json.
std::string config_digest(const ExperimentConfig& cfg);

// Independent RNG streams derived from one run seed.
enum class SeedStream : std::uint64_t {
  kDataset = 1,
  kTeacherInit = 2,
  kTeacherShuffle = 3,
  kStudentInit = 4,
  kStudentShuffle = 5,
  kCamInit = 6,
};
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

}  // namespace akd
