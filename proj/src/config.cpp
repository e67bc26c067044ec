#include "akd/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "akd/error.hpp"

namespace akd {

using nlohmann::json;

namespace {

std::string_view dataset_kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::kRings: return "rings";
    case DatasetKind::kBlobs: return "blobs";
    case DatasetKind::kDelimited: return "delimited";
  }
  return "rings";
}

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

double as_real(const std::string& key, const json& v) {
  if (!v.is_number()) bad_value(key, "expected a number");
  return v.get<double>();
}

std::uint64_t as_u64(const std::string& key, const json& v) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    bad_value(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::size_t as_count(const std::string& key, const json& v) {
  return static_cast<std::size_t>(as_u64(key, v));
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) bad_value(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad_value(key, "expected a string");
  return v.get<std::string>();
}

std::vector<std::size_t> as_widths(const std::string& key, const json& v) {
  if (!v.is_array()) bad_value(key, "expected an array of layer widths");
  std::vector<std::size_t> out;
  for (const json& e : v) out.push_back(as_count(key, e));
  return out;
}

Method as_method(const std::string& key, const json& v) {
  try {
    return parse_method(as_string(key, v));
  } catch (const ConfigError& e) {
    bad_value(key, e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset.kind",
       [](auto& c, auto& k, auto& v) {
         const std::string s = as_string(k, v);
         if (s == "rings") c.dataset.kind = DatasetKind::kRings;
         else if (s == "blobs") c.dataset.kind = DatasetKind::kBlobs;
         else if (s == "delimited") c.dataset.kind = DatasetKind::kDelimited;
         else bad_value(k, "unknown dataset kind '" + s + "'");
       }},
      {"dataset.n", [](auto& c, auto& k, auto& v) { c.dataset.n = as_count(k, v); }},
      {"dataset.classes", [](auto& c, auto& k, auto& v) { c.dataset.classes = as_count(k, v); }},
      {"dataset.dim", [](auto& c, auto& k, auto& v) { c.dataset.dim = as_count(k, v); }},
      {"dataset.spread", [](auto& c, auto& k, auto& v) { c.dataset.spread = as_real(k, v); }},
      {"dataset.noise", [](auto& c, auto& k, auto& v) { c.dataset.noise = as_real(k, v); }},
      {"dataset.path", [](auto& c, auto& k, auto& v) { c.dataset.path = as_string(k, v); }},
      {"dataset.label_column",
       [](auto& c, auto& k, auto& v) { c.dataset.label_column = as_count(k, v); }},
      {"dataset.delimiter",
       [](auto& c, auto& k, auto& v) {
         const std::string s = as_string(k, v);
         if (s.size() != 1) bad_value(k, "delimiter must be a single character");
         c.dataset.delimiter = s[0];
       }},
      {"dataset.header", [](auto& c, auto& k, auto& v) { c.dataset.header = as_bool(k, v); }},
      {"dataset.standardize",
       [](auto& c, auto& k, auto& v) { c.dataset.standardize = as_bool(k, v); }},
      {"teacher.widths", [](auto& c, auto& k, auto& v) { c.teacher_widths = as_widths(k, v); }},
      {"teacher.epochs", [](auto& c, auto& k, auto& v) { c.teacher_epochs = as_count(k, v); }},
      {"teacher.checkpoint",
       [](auto& c, auto& k, auto& v) { c.teacher_checkpoint = as_string(k, v); }},
      {"teacher.train_if_missing",
       [](auto& c, auto& k, auto& v) { c.teacher_train_if_missing = as_bool(k, v); }},
      {"student.widths", [](auto& c, auto& k, auto& v) { c.student_widths = as_widths(k, v); }},
      {"student.init_from_teacher",
       [](auto& c, auto& k, auto& v) { c.student_init_from_teacher = as_bool(k, v); }},
      {"optimizer.kind",
       [](auto& c, auto& k, auto& v) {
         const std::string s = as_string(k, v);
         if (s == "adam") c.optimizer.kind = OptimizerKind::kAdam;
         else if (s == "sgd") c.optimizer.kind = OptimizerKind::kSgd;
         else bad_value(k, "unknown optimizer '" + s + "'");
       }},
      {"optimizer.lr", [](auto& c, auto& k, auto& v) { c.optimizer.lr = as_real(k, v); }},
      {"optimizer.momentum",
       [](auto& c, auto& k, auto& v) { c.optimizer.momentum = as_real(k, v); }},
      {"optimizer.beta1", [](auto& c, auto& k, auto& v) { c.optimizer.beta1 = as_real(k, v); }},
      {"optimizer.beta2", [](auto& c, auto& k, auto& v) { c.optimizer.beta2 = as_real(k, v); }},
      {"optimizer.eps", [](auto& c, auto& k, auto& v) { c.optimizer.eps = as_real(k, v); }},
      {"epochs", [](auto& c, auto& k, auto& v) { c.epochs = as_count(k, v); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = as_count(k, v); }},
      {"temperature", [](auto& c, auto& k, auto& v) { c.temperature = as_real(k, v); }},
      {"method", [](auto& c, auto& k, auto& v) { c.method = as_method(k, v); }},
      {"alpha0", [](auto& c, auto& k, auto& v) { c.alpha0 = as_real(k, v); }},
      {"k", [](auto& c, auto& k, auto& v) { c.k = as_real(k, v); }},
      {"sign_flip", [](auto& c, auto& k, auto& v) { c.sign_flip = as_bool(k, v); }},
      {"theta0", [](auto& c, auto& k, auto& v) { c.theta0 = as_real(k, v); }},
      {"cam.hidden_multiplier",
       [](auto& c, auto& k, auto& v) { c.cam.hidden_multiplier = as_count(k, v); }},
      {"cam.zero_init_output",
       [](auto& c, auto& k, auto& v) { c.cam.zero_init_output = as_bool(k, v); }},
      {"cam.alpha_policy",
       [](auto& c, auto& k, auto& v) {
         const Method m = as_method(k, v);
         if (m == Method::kDynamicCam) bad_value(k, "must be fixed, learnable or dynamic");
         c.cam.alpha_policy = m;
       }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = as_u64(k, v); }},
      {"out_dir", [](auto& c, auto& k, auto& v) { c.out_dir = as_string(k, v); }},
      {"compare.methods",
       [](auto& c, auto& k, auto& v) {
         if (!v.is_array()) bad_value(k, "expected an array of method names");
         c.compare_methods.clear();
         for (const json& e : v) c.compare_methods.push_back(as_method(k, e));
       }},
      {"compare.seeds",
       [](auto& c, auto& k, auto& v) {
         if (!v.is_array()) bad_value(k, "expected an array of seeds");
         c.compare_seeds.clear();
         for (const json& e : v) c.compare_seeds.push_back(as_u64(k, e));
       }},
      {"gradcheck.batch", [](auto& c, auto& k, auto& v) { c.gradcheck.batch = as_count(k, v); }},
      {"gradcheck.classes",
       [](auto& c, auto& k, auto& v) { c.gradcheck.classes = as_count(k, v); }},
      {"gradcheck.features",
       [](auto& c, auto& k, auto& v) { c.gradcheck.features = as_count(k, v); }},
      {"gradcheck.hidden", [](auto& c, auto& k, auto& v) { c.gradcheck.hidden = as_count(k, v); }},
      {"gradcheck.cam_hidden_multiplier",
       [](auto& c, auto& k, auto& v) { c.gradcheck.cam_hidden_multiplier = as_count(k, v); }},
      {"gradcheck.temperature",
       [](auto& c, auto& k, auto& v) { c.gradcheck.temperature = as_real(k, v); }},
      {"gradcheck.eps", [](auto& c, auto& k, auto& v) { c.gradcheck.eps = as_real(k, v); }},
      {"gradcheck.tolerance",
       [](auto& c, auto& k, auto& v) { c.gradcheck.tolerance = as_real(k, v); }},
      {"gradcheck.seed", [](auto& c, auto& k, auto& v) { c.gradcheck.seed = as_u64(k, v); }},
  };
  return table;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate_widths(const char* name, const std::vector<std::size_t>& widths,
                     const DatasetSpec& d) {
  require(widths.size() >= 2, std::string(name) + " needs at least input and output widths");
  for (std::size_t w : widths) require(w > 0, std::string(name) + " widths must be positive");
  if (d.kind == DatasetKind::kDelimited) return;  // checked once the file is loaded
  const std::size_t in = d.kind == DatasetKind::kRings ? 2 : d.dim;
  require(widths.front() == in, std::string(name) + " input width " +
                                    std::to_string(widths.front()) + " does not match dataset dimension " +
                                    std::to_string(in));
  require(widths.back() == d.classes, std::string(name) + " output width " +
                                          std::to_string(widths.back()) +
                                          " does not match class count " + std::to_string(d.classes));
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kFixed: return "fixed";
    case Method::kLearnable: return "learnable";
    case Method::kDynamic: return "dynamic";
    case Method::kDynamicCam: return "dynamic+cam";
  }
  return "fixed";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected fixed, learnable, dynamic or dynamic+cam)");
}

AlphaPolicy ExperimentConfig::alpha_policy_for(Method m) const {
  switch (m) {
    case Method::kFixed: return FixedAlpha{alpha0};
    case Method::kLearnable: return LearnableAlpha{theta0};
    case Method::kDynamic: return DynamicAlpha{k, sign_flip};
    case Method::kDynamicCam: return alpha_policy_for(cam.alpha_policy);
  }
  return FixedAlpha{alpha0};
}

AlphaPolicy ExperimentConfig::alpha_policy() const { return alpha_policy_for(method); }

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  const auto& table = setters();
  for (const auto& [key, value] : doc.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void validate(const ExperimentConfig& c) {
  require(c.temperature > 0.0 && std::isfinite(c.temperature), "temperature must be positive");
  require(c.epochs >= 1, "epochs must be at least 1");
  require(c.batch_size >= 1, "batch_size must be at least 1");
  require(c.alpha0 >= 0.0 && c.alpha0 <= 1.0, "alpha0 must lie in [0, 1]");
  require(c.k > 0.0 && std::isfinite(c.k), "k must be positive");
  require(std::isfinite(c.theta0), "theta0 must be finite");
  require(c.optimizer.lr > 0.0, "optimizer.lr must be positive");
  require(c.optimizer.momentum >= 0.0 && c.optimizer.momentum < 1.0,
          "optimizer.momentum must lie in [0, 1)");
  require(c.optimizer.beta1 >= 0.0 && c.optimizer.beta1 < 1.0, "optimizer.beta1 must lie in [0, 1)");
  require(c.optimizer.beta2 >= 0.0 && c.optimizer.beta2 < 1.0, "optimizer.beta2 must lie in [0, 1)");
  require(c.optimizer.eps > 0.0, "optimizer.eps must be positive");
  require(c.cam.hidden_multiplier >= 1, "cam.hidden_multiplier must be at least 1");
  require(c.dataset.classes >= 2, "dataset.classes must be at least 2");
  if (c.dataset.kind == DatasetKind::kDelimited) {
    require(!c.dataset.path.empty(), "dataset.path is required for delimited data");
  }
  validate_widths("teacher", c.teacher_widths, c.dataset);
  validate_widths("student", c.student_widths, c.dataset);
  if (c.student_init_from_teacher) {
    require(c.student_widths == c.teacher_widths,
            "student.init_from_teacher needs identical teacher and student widths");
  }
  require(c.gradcheck.eps >= 1e-7 && c.gradcheck.eps <= 1e-3, "gradcheck.eps must lie in [1e-7, 1e-3]");
  require(c.gradcheck.tolerance > 0.0, "gradcheck.tolerance must be positive");
  require(c.gradcheck.temperature > 0.0, "gradcheck.temperature must be positive");
  require(c.gradcheck.batch >= 1 && c.gradcheck.classes >= 2 && c.gradcheck.features >= 1 &&
              c.gradcheck.hidden >= 1 && c.gradcheck.cam_hidden_multiplier >= 1,
          "gradcheck shapes must be positive (classes >= 2)");
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  j["dataset.kind"] = dataset_kind_name(c.dataset.kind);
  j["dataset.n"] = c.dataset.n;
  j["dataset.classes"] = c.dataset.classes;
  j["dataset.dim"] = c.dataset.dim;
  j["dataset.spread"] = c.dataset.spread;
  j["dataset.noise"] = c.dataset.noise;
  j["dataset.path"] = c.dataset.path;
  j["dataset.label_column"] = c.dataset.label_column;
  j["dataset.delimiter"] = std::string(1, c.dataset.delimiter);
  j["dataset.header"] = c.dataset.header;
  j["dataset.standardize"] = c.dataset.standardize;
  j["teacher.widths"] = c.teacher_widths;
  j["teacher.epochs"] = c.teacher_epochs;
  j["student.widths"] = c.student_widths;
  j["student.init_from_teacher"] = c.student_init_from_teacher;
  j["optimizer.kind"] = optimizer_name(c.optimizer.kind);
  j["optimizer.lr"] = c.optimizer.lr;
  j["optimizer.momentum"] = c.optimizer.momentum;
  j["optimizer.beta1"] = c.optimizer.beta1;
  j["optimizer.beta2"] = c.optimizer.beta2;
  j["optimizer.eps"] = c.optimizer.eps;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["temperature"] = c.temperature;
  j["method"] = method_name(c.method);
  j["alpha0"] = c.alpha0;
  j["k"] = c.k;
  j["sign_flip"] = c.sign_flip;
  j["theta0"] = c.theta0;
  j["cam.hidden_multiplier"] = c.cam.hidden_multiplier;
  j["cam.zero_init_output"] = c.cam.zero_init_output;
  j["cam.alpha_policy"] = method_name(c.cam.alpha_policy);
  j["seed"] = c.seed;
  std::vector<std::string> methods;
  for (Method m : c.compare_methods) methods.emplace_back(method_name(m));
  j["compare.methods"] = methods;
  j["compare.seeds"] = c.compare_seeds;
  return j.dump();
}

std::string config_digest(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  // splitmix64 finalizer over the seed mixed with the stream tag.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace akd
