#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "glds/errors.hpp"
#include "glds/glmtron.hpp"
#include "glds/link.hpp"
#include "glds/noise.hpp"
#include "glds/trajectory.hpp"

namespace glds::bench {

// Raised for malformed or inconsistent experiment configs; the CLI maps it to
// exit code 1, distinct from runtime/assertion failures.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  simulate,
  certify,
  single_fit,
  rate_sweep,
  isometry_trials,
  lemma_suite,
};

inline std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate:
      return "simulate";
    case ExperimentKind::certify:
      return "certify";
    case ExperimentKind::single_fit:
      return "single_fit";
    case ExperimentKind::rate_sweep:
      return "rate_sweep";
    case ExperimentKind::isometry_trials:
      return "isometry_trials";
    case ExperimentKind::lemma_suite:
      return "lemma_suite";
  }
  return "unknown";
}

struct LinkSpec {
  std::string kind = "identity";
  double beta = 0.5;

  LinkFunction make() const {
    if (kind == "identity") return LinkFunction::identity();
    if (kind == "relu") return LinkFunction::relu();
    if (kind == "leaky_relu") return LinkFunction::leaky_relu(beta);
    throw ConfigError("link.kind must be identity, relu, or leaky_relu (got '" + kind +
                      "')");
  }
};

struct NoiseSpec {
  std::string kind = "gaussian";
  double tau = 1.0;

  NoiseModel make(int d) const {
    if (kind == "gaussian") return NoiseModel::gaussian(d, tau);
    if (kind == "scaled-rademacher") return NoiseModel::scaled_rademacher(d, tau);
    if (kind == "uniform-box") return NoiseModel::uniform_box(d, tau);
    throw ConfigError(
        "noise.kind must be gaussian, scaled-rademacher, or uniform-box (got '" + kind +
        "')");
  }
};

struct ThetaGenSpec {
  std::string kind;  // spectral | nonneg | explicit
  double scale = 0.5;
  std::vector<std::vector<double>> matrix;  // explicit only
};

struct LemmaSpec {
  std::int64_t arccos_pairs = 100;
  std::int64_t arccos_samples = 1000000;
  std::int64_t gap_cases = 500;
  std::int64_t gap_samples = 20000;
  std::int64_t shifted_cases = 200;
  std::int64_t shifted_samples = 100000;
  std::int64_t trig_pairs = 10000;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::single_fit;
  std::vector<int> dims;
  std::vector<int> n_grid;
  int trials = 1;
  LinkSpec link;
  std::optional<ThetaGenSpec> theta_gen;
  NoiseSpec noise;
  std::string regime = "practical";  // practical | slow | fast | relu
  bool theory_step = false;          // use the theorem step size instead of practical
  std::optional<int> m;              // explicit update-count override
  std::string option = "last";       // last | uniform
  bool record_history = false;
  double w_bound = 1.0;
  double delta = 0.05;
  std::uint64_t seed = 0;
  std::string output_path;
  LemmaSpec lemma;

  IterateOption iterate_option() const {
    if (option == "last") return IterateOption::last_iterate;
    if (option == "uniform") return IterateOption::uniform_random;
    throw ConfigError("option must be last or uniform (got '" + option + "')");
  }

  ScheduleRegime schedule_regime() const {
    if (regime == "slow") return ScheduleRegime::slow;
    if (regime == "fast") return ScheduleRegime::fast;
    if (regime == "relu") return ScheduleRegime::relu;
    throw ConfigError("regime '" + regime + "' has no theorem schedule");
  }
};

namespace detail {

using Json = nlohmann::json;

inline void require_keys(const Json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
T get_as(const Json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
  }
}

template <typename T>
T get_required(const Json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) {
    throw ConfigError("missing required key '" + where + "." + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
  }
}

inline LinkSpec parse_link(const Json& obj) {
  require_keys(obj, "link", {"kind", "beta"});
  LinkSpec spec;
  spec.kind = get_required<std::string>(obj, "link", "kind");
  spec.beta = get_as<double>(obj, "link", "beta", spec.beta);
  try {
    spec.make();
  } catch (const InvalidInputError& e) {
    throw ConfigError(std::string("link: ") + e.what());
  }
  return spec;
}

inline NoiseSpec parse_noise(const Json& obj) {
  require_keys(obj, "noise", {"kind", "tau"});
  NoiseSpec spec;
  spec.kind = get_as<std::string>(obj, "noise", "kind", spec.kind);
  spec.tau = get_as<double>(obj, "noise", "tau", spec.tau);
  try {
    spec.make(1);
  } catch (const InvalidInputError& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
  return spec;
}

inline ThetaGenSpec parse_theta_gen(const Json& obj) {
  require_keys(obj, "theta_gen", {"kind", "scale", "matrix"});
  ThetaGenSpec spec;
  spec.kind = get_required<std::string>(obj, "theta_gen", "kind");
  if (spec.kind == "spectral" || spec.kind == "nonneg") {
    spec.scale = get_as<double>(obj, "theta_gen", "scale", spec.scale);
    if (!(spec.scale > 0.0)) throw ConfigError("theta_gen.scale must be > 0");
    if (obj.contains("matrix")) {
      throw ConfigError("theta_gen.matrix is only valid for kind explicit");
    }
  } else if (spec.kind == "explicit") {
    spec.matrix =
        get_required<std::vector<std::vector<double>>>(obj, "theta_gen", "matrix");
    if (spec.matrix.empty()) throw ConfigError("theta_gen.matrix must be nonempty");
    for (const auto& row : spec.matrix) {
      if (row.size() != spec.matrix.size()) {
        throw ConfigError("theta_gen.matrix must be square");
      }
    }
  } else {
    throw ConfigError("theta_gen.kind must be spectral, nonneg, or explicit (got '" +
                      spec.kind + "')");
  }
  return spec;
}

inline LemmaSpec parse_lemma(const Json& obj) {
  require_keys(obj, "lemma",
               {"arccos_pairs", "arccos_samples", "gap_cases", "gap_samples",
                "shifted_cases", "shifted_samples", "trig_pairs"});
  LemmaSpec spec;
  spec.arccos_pairs = get_as<std::int64_t>(obj, "lemma", "arccos_pairs", spec.arccos_pairs);
  spec.arccos_samples =
      get_as<std::int64_t>(obj, "lemma", "arccos_samples", spec.arccos_samples);
  spec.gap_cases = get_as<std::int64_t>(obj, "lemma", "gap_cases", spec.gap_cases);
  spec.gap_samples = get_as<std::int64_t>(obj, "lemma", "gap_samples", spec.gap_samples);
  spec.shifted_cases =
      get_as<std::int64_t>(obj, "lemma", "shifted_cases", spec.shifted_cases);
  spec.shifted_samples =
      get_as<std::int64_t>(obj, "lemma", "shifted_samples", spec.shifted_samples);
  spec.trig_pairs = get_as<std::int64_t>(obj, "lemma", "trig_pairs", spec.trig_pairs);
  for (std::int64_t v : {spec.arccos_pairs, spec.arccos_samples, spec.gap_cases,
                         spec.gap_samples, spec.shifted_cases, spec.shifted_samples,
                         spec.trig_pairs}) {
    if (v < 1) throw ConfigError("lemma counts must all be >= 1");
  }
  if (spec.arccos_samples < 2 || spec.gap_samples < 2) {
    throw ConfigError("lemma sample counts must be >= 2");
  }
  if (spec.shifted_samples < 10000) {
    throw ConfigError("shifted_samples must be >= 10000");
  }
  return spec;
}

}  // namespace detail

inline ExperimentKind parse_kind(const std::string& name) {
  if (name == "simulate") return ExperimentKind::simulate;
  if (name == "certify") return ExperimentKind::certify;
  if (name == "single_fit") return ExperimentKind::single_fit;
  if (name == "rate_sweep") return ExperimentKind::rate_sweep;
  if (name == "isometry_trials") return ExperimentKind::isometry_trials;
  if (name == "lemma_suite") return ExperimentKind::lemma_suite;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

inline ExperimentSpec parse_experiment_spec(const std::string& text) {
  detail::Json root;
  try {
    root = detail::Json::parse(text);
  } catch (const detail::Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  detail::require_keys(root, "config",
                       {"kind", "dims", "n_grid", "trials", "link", "theta_gen", "noise",
                        "regime", "theory_step", "m", "option", "record_history",
                        "w_bound", "delta", "seed", "output_path", "lemma"});

  ExperimentSpec spec;
  spec.kind = parse_kind(detail::get_required<std::string>(root, "config", "kind"));
  spec.dims = detail::get_as<std::vector<int>>(root, "config", "dims", {});
  spec.n_grid = detail::get_as<std::vector<int>>(root, "config", "n_grid", {});
  spec.trials = detail::get_as<int>(root, "config", "trials", 1);
  if (root.contains("link")) spec.link = detail::parse_link(root.at("link"));
  if (root.contains("theta_gen")) {
    spec.theta_gen = detail::parse_theta_gen(root.at("theta_gen"));
  }
  if (root.contains("noise")) spec.noise = detail::parse_noise(root.at("noise"));
  spec.regime = detail::get_as<std::string>(root, "config", "regime", spec.regime);
  spec.theory_step = detail::get_as<bool>(root, "config", "theory_step", false);
  if (root.contains("m")) spec.m = detail::get_required<int>(root, "config", "m");
  spec.option = detail::get_as<std::string>(root, "config", "option", spec.option);
  spec.record_history = detail::get_as<bool>(root, "config", "record_history", false);
  spec.w_bound = detail::get_as<double>(root, "config", "w_bound", spec.w_bound);
  spec.delta = detail::get_as<double>(root, "config", "delta", spec.delta);
  spec.seed = detail::get_as<std::uint64_t>(root, "config", "seed", 0);
  spec.output_path = detail::get_as<std::string>(root, "config", "output_path", "");
  if (root.contains("lemma")) spec.lemma = detail::parse_lemma(root.at("lemma"));

  // Structural validation shared by all kinds.
  for (std::size_t i = 0; i < spec.dims.size(); ++i) {
    if (spec.dims[i] < 1) throw ConfigError("dims entries must be >= 1");
    if (i > 0 && spec.dims[i] <= spec.dims[i - 1]) {
      throw ConfigError("dims must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < spec.n_grid.size(); ++i) {
    if (spec.n_grid[i] < 1) throw ConfigError("n_grid entries must be >= 1");
    if (i > 0 && spec.n_grid[i] <= spec.n_grid[i - 1]) {
      throw ConfigError("n_grid must be strictly increasing");
    }
  }
  if (spec.trials < 1) throw ConfigError("trials must be >= 1");
  if (!(spec.w_bound > 0.0)) throw ConfigError("w_bound must be > 0");
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) throw ConfigError("delta must be in (0,1)");
  if (spec.regime != "practical" && spec.regime != "slow" && spec.regime != "fast" &&
      spec.regime != "relu") {
    throw ConfigError("regime must be practical, slow, fast, or relu (got '" +
                      spec.regime + "')");
  }
  if (spec.m && *spec.m < 1) throw ConfigError("m must be >= 1");
  spec.iterate_option();  // validate eagerly

  // Kind-specific shape requirements.
  const bool needs_generator = spec.kind != ExperimentKind::lemma_suite;
  if (needs_generator && !spec.theta_gen) {
    throw ConfigError("kind " + kind_name(spec.kind) + " requires theta_gen");
  }
  switch (spec.kind) {
    case ExperimentKind::simulate:
    case ExperimentKind::single_fit:
      if (spec.dims.size() != 1 || spec.n_grid.size() != 1) {
        throw ConfigError("kind " + kind_name(spec.kind) +
                          " requires exactly one entry in dims and n_grid");
      }
      break;
    case ExperimentKind::certify:
      if (spec.dims.size() != 1) {
        throw ConfigError("kind certify requires exactly one entry in dims");
      }
      break;
    case ExperimentKind::rate_sweep:
    case ExperimentKind::isometry_trials:
      if (spec.dims.empty() || spec.n_grid.empty()) {
        throw ConfigError("kind " + kind_name(spec.kind) +
                          " requires nonempty dims and n_grid");
      }
      break;
    case ExperimentKind::lemma_suite:
      if (spec.dims.empty()) {
        throw ConfigError("kind lemma_suite requires nonempty dims");
      }
      break;
  }
  if (spec.theta_gen && spec.theta_gen->kind == "explicit") {
    const int d = static_cast<int>(spec.theta_gen->matrix.size());
    for (int dim : spec.dims) {
      if (dim != d) {
        throw ConfigError("theta_gen.matrix dimension does not match dims");
      }
    }
  }
  const bool fits = spec.kind == ExperimentKind::single_fit ||
                    spec.kind == ExperimentKind::rate_sweep;
  if (fits && spec.regime == "practical" && !spec.m) {
    throw ConfigError("regime practical requires an explicit m");
  }
  return spec;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace glds::bench
