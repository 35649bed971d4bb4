#include "modalcur_cli/config.hpp"

#include <modalcur/checkpoint.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace modalcur::cli {

using Json = nlohmann::ordered_json;

std::string to_string(ModelSource source) {
  switch (source) {
    case ModelSource::assemble: return "assemble";
    case ModelSource::analytical: return "analytical";
    case ModelSource::load: return "load";
  }
  return "unknown";
}

namespace {

ModelSource source_from_string(const std::string& s) {
  if (s == "assemble") return ModelSource::assemble;
  if (s == "analytical") return ModelSource::analytical;
  if (s == "load") return ModelSource::load;
  throw std::invalid_argument("model.source must be one of assemble, analytical, load");
}

// Reads fields of one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument(path_ + " must be an object");
  }
  ~Section() = default;

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (it->is_number_integer() && !it->is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw std::invalid_argument("expected a number");
      } else {
        if (!it->is_string()) throw std::invalid_argument("expected a string");
      }
      out = it->get<T>();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path_ + "." + key + ": " + e.what());
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    static const Json empty = Json::object();
    return Section(it == j_.end() ? empty : *it, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw std::invalid_argument("unknown config key " + path_ + "." + k);
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json to_json(const RunConfig& c) {
  Json j;
  j["model"] = {{"source", to_string(c.source)},
                {"path", c.model_path},
                {"n_modes", c.n_modes},
                {"plate",
                 {{"length", c.plate.length},
                  {"width", c.plate.width},
                  {"thickness", c.plate.thickness},
                  {"clamp_depth", c.plate.clamp_depth},
                  {"element_size", c.element_size}}},
                {"beam", {{"length", c.beam.length}, {"n_points", c.beam.n_points}, {"thickness", c.beam.thickness}}},
                {"material",
                 {{"youngs_modulus", c.material.youngs_modulus},
                  {"poisson_ratio", c.material.poisson_ratio},
                  {"density", c.material.density}}}};
  j["n_sensors"] = c.n_sensors;
  j["split"] = {{"fraction", c.split_fraction}, {"seed", c.split_seed}};
  j["curriculum"] = {{"replay_rate", c.curriculum.replay_rate},
                     {"edit_rate", c.curriculum.edit_rate},
                     {"buffer_size", c.curriculum.buffer_size},
                     {"temperature", c.curriculum.temperature},
                     {"staleness", c.curriculum.staleness},
                     {"n_edits", c.curriculum.n_edits},
                     {"scoring", to_string(c.curriculum.scoring)}};
  const auto& a = c.agent;
  j["agent"] = {{"gamma", a.gamma},
                {"gae_lambda", a.gae_lambda},
                {"rollout_length", a.rollout_length},
                {"n_workers", a.n_workers},
                {"epochs", a.epochs},
                {"minibatches", a.minibatches},
                {"clip_range", a.clip_range},
                {"learning_rate", a.learning_rate},
                {"adam_eps", a.adam_eps},
                {"max_grad_norm", a.max_grad_norm},
                {"value_clipping", a.value_clipping},
                {"return_normalisation", a.return_normalisation},
                {"value_coef", a.value_coef},
                {"entropy_coef", a.entropy_coef},
                {"hidden", a.hidden}};
  j["budget_steps"] = c.budget_steps;
  j["episode_length"] = c.episode_length;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["eval"] = {{"episodes", c.eval.episodes},
               {"greedy", c.eval.greedy},
               {"randomize_init", c.eval.randomize_init},
               {"exhaustive_budget", c.eval.exhaustive_budget}};
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (source == ModelSource::load) {
    if (model_path.empty()) throw std::invalid_argument("model.path is required when model.source is load");
    if (!std::filesystem::is_regular_file(model_path)) throw std::invalid_argument("model file not found: " + model_path);
  }
  material.validate();
  if (source == ModelSource::assemble) {
    plate.validate();
    if (!(element_size > 0.0)) throw std::invalid_argument("model.plate.element_size must be > 0");
  }
  if (source == ModelSource::analytical) {
    if (!(beam.length > 0.0) || !(beam.thickness > 0.0)) throw std::invalid_argument("beam dimensions must be > 0");
    if (beam.n_points < 3) throw std::invalid_argument("model.beam.n_points must be >= 3");
  }
  if (n_modes < 1) throw std::invalid_argument("model.n_modes must be >= 1");
  if (source == ModelSource::analytical && n_modes > kMaxBeamModes)
    throw std::invalid_argument("model.n_modes exceeds the tabulated beam roots");
  if (n_sensors < 1) throw std::invalid_argument("n_sensors must be >= 1");
  if (!(split_fraction > 0.0 && split_fraction <= 1.0)) throw std::invalid_argument("split.fraction must lie in (0,1]");
  curriculum.validate();
  if (curriculum.n_edits > n_sensors) throw std::invalid_argument("curriculum.n_edits exceeds n_sensors");
  agent.validate();
  if (budget_steps < static_cast<std::int64_t>(agent.rollout_length) * agent.n_workers)
    throw std::invalid_argument("budget_steps must cover at least one rollout");
  if (episode_length < 1) throw std::invalid_argument("episode_length must be >= 1");
  if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  if (eval.episodes < 1) throw std::invalid_argument("eval.episodes must be >= 1");
  if (eval.exhaustive_budget < 0) throw std::invalid_argument("eval.exhaustive_budget must be >= 0");
  if (out_dir.empty()) throw std::invalid_argument("out_dir must not be empty");
}

RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "config");
  {
    auto m = root.child("model");
    std::string source = to_string(c.source);
    m.read("source", source);
    c.source = source_from_string(source);
    m.read("path", c.model_path);
    m.read("n_modes", c.n_modes);
    auto p = m.child("plate");
    p.read("length", c.plate.length);
    p.read("width", c.plate.width);
    p.read("thickness", c.plate.thickness);
    p.read("clamp_depth", c.plate.clamp_depth);
    p.read("element_size", c.element_size);
    p.finish();
    auto b = m.child("beam");
    b.read("length", c.beam.length);
    b.read("n_points", c.beam.n_points);
    b.read("thickness", c.beam.thickness);
    b.finish();
    auto mat = m.child("material");
    mat.read("youngs_modulus", c.material.youngs_modulus);
    mat.read("poisson_ratio", c.material.poisson_ratio);
    mat.read("density", c.material.density);
    mat.finish();
    m.finish();
  }
  root.read("n_sensors", c.n_sensors);
  {
    auto s = root.child("split");
    s.read("fraction", c.split_fraction);
    s.read("seed", c.split_seed);
    s.finish();
  }
  {
    auto s = root.child("curriculum");
    s.read("replay_rate", c.curriculum.replay_rate);
    s.read("edit_rate", c.curriculum.edit_rate);
    s.read("buffer_size", c.curriculum.buffer_size);
    s.read("temperature", c.curriculum.temperature);
    s.read("staleness", c.curriculum.staleness);
    s.read("n_edits", c.curriculum.n_edits);
    std::string scoring = to_string(c.curriculum.scoring);
    s.read("scoring", scoring);
    c.curriculum.scoring = scoring_mode_from_string(scoring);
    s.finish();
  }
  {
    auto s = root.child("agent");
    auto& a = c.agent;
    s.read("gamma", a.gamma);
    s.read("gae_lambda", a.gae_lambda);
    s.read("rollout_length", a.rollout_length);
    s.read("n_workers", a.n_workers);
    s.read("epochs", a.epochs);
    s.read("minibatches", a.minibatches);
    s.read("clip_range", a.clip_range);
    s.read("learning_rate", a.learning_rate);
    s.read("adam_eps", a.adam_eps);
    s.read("max_grad_norm", a.max_grad_norm);
    s.read("value_clipping", a.value_clipping);
    s.read("return_normalisation", a.return_normalisation);
    s.read("value_coef", a.value_coef);
    s.read("entropy_coef", a.entropy_coef);
    s.read("hidden", a.hidden);
    s.finish();
  }
  root.read("budget_steps", c.budget_steps);
  root.read("episode_length", c.episode_length);
  root.read("checkpoint_interval", c.checkpoint_interval);
  {
    auto s = root.child("eval");
    s.read("episodes", c.eval.episodes);
    s.read("greedy", c.eval.greedy);
    s.read("randomize_init", c.eval.randomize_init);
    s.read("exhaustive_budget", c.eval.exhaustive_budget);
    s.finish();
  }
  root.read("seed", c.seed);
  root.read("out_dir", c.out_dir);
  root.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_json(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config) {
  // The output location does not affect results.
  RunConfig c = config;
  c.out_dir.clear();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(canonical_json(c))));
  return buf;
}

}  // namespace modalcur::cli
