#include "formfind/harness/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "formfind/errors.hpp"

namespace formfind::harness {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config key '" + key + "' has the wrong type");
  }
}

int positive_int(const json& value, const std::string& key) {
  if (!value.is_number_integer()) throw InvalidArgument("config key '" + key + "' must be an integer");
  const int v = value.get<int>();
  if (v < 1) throw InvalidArgument("config key '" + key + "' must be positive");
  return v;
}

double number(const json& value, const std::string& key) {
  if (!value.is_number()) throw InvalidArgument("config key '" + key + "' must be a number");
  return value.get<double>();
}

std::uint64_t seed_value(const json& value, const std::string& key) {
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0)) {
    throw InvalidArgument("config key '" + key + "' must be a non-negative integer");
  }
  return value.get<std::uint64_t>();
}

void parse_opt(const json& doc, ExperimentConfig& c) {
  if (!doc.is_object()) throw InvalidArgument("config key 'opt' must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string name = "opt." + key;
    if (key == "max_iters") {
      c.opt.max_iters = positive_int(value, name);
    } else if (key == "tolerance") {
      c.opt.tolerance = number(value, name);
    } else if (key == "memory") {
      c.opt.memory = get_as<int>(value, name);
    } else if (key == "q_max") {
      c.opt.q_max = number(value, name);
    } else if (key == "stall_iters") {
      c.opt.stall_iters = get_as<int>(value, name);
    } else if (key == "init") {
      c.opt_init = init_strategy_from_string(get_as<std::string>(value, name));
    } else if (key == "seed") {
      c.opt_seed = seed_value(value, name);
    } else {
      throw InvalidArgument("unknown config key '" + name + "'");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw InvalidArgument("config must be a JSON object");
  ExperimentConfig c;
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"task", [&](const json& v, const std::string& k) { c.task = get_as<std::string>(v, k); }},
      {"grid_side", [&](const json& v, const std::string& k) { c.grid_side = positive_int(v, k); }},
      {"plan_width", [&](const json& v, const std::string& k) { c.plan_width = number(v, k); }},
      {"area_load", [&](const json& v, const std::string& k) { c.area_load = number(v, k); }},
      {"rings", [&](const json& v, const std::string& k) { c.rings = positive_int(v, k); }},
      {"points_per_ring",
       [&](const json& v, const std::string& k) { c.points_per_ring = positive_int(v, k); }},
      {"height", [&](const json& v, const std::string& k) { c.height = number(v, k); }},
      {"preset", [&](const json& v, const std::string& k) { c.preset = get_as<std::string>(v, k); }},
      {"seed", [&](const json& v, const std::string& k) { c.seed = seed_value(v, k); }},
      {"test_seed", [&](const json& v, const std::string& k) { c.test_seed = seed_value(v, k); }},
      {"test_size", [&](const json& v, const std::string& k) { c.test_size = positive_int(v, k); }},
      {"hidden_size",
       [&](const json& v, const std::string& k) { c.hidden_size = positive_int(v, k); }},
      {"hidden_layers",
       [&](const json& v, const std::string& k) { c.hidden_layers = positive_int(v, k); }},
      {"batch_size", [&](const json& v, const std::string& k) { c.batch_size = positive_int(v, k); }},
      {"clip_norm", [&](const json& v, const std::string& k) { c.clip_norm = number(v, k); }},
      {"schedule",
       [&](const json& v, const std::string& k) {
         if (!v.is_array()) throw InvalidArgument("config key '" + k + "' must be an array");
         std::vector<LrStage> stages;
         for (const auto& stage : v) {
           if (!stage.is_object() || stage.size() != 2 || !stage.contains("steps") ||
               !stage.contains("lr")) {
             throw InvalidArgument("schedule stages must be {\"steps\": n, \"lr\": x}");
           }
           stages.push_back({positive_int(stage["steps"], k + ".steps"), number(stage["lr"], k + ".lr")});
         }
         c.schedule = std::move(stages);
       }},
      {"kappa", [&](const json& v, const std::string& k) { c.kappa = number(v, k); }},
      {"kappas",
       [&](const json& v, const std::string& k) { c.kappas = get_as<std::vector<double>>(v, k); }},
      {"deltas",
       [&](const json& v, const std::string& k) { c.deltas = get_as<std::vector<double>>(v, k); }},
      {"grids", [&](const json& v, const std::string& k) { c.grids = get_as<std::vector<int>>(v, k); }},
      {"methods",
       [&](const json& v, const std::string& k) {
         c.methods = get_as<std::vector<std::string>>(v, k);
       }},
      {"opt", [&](const json& v, const std::string&) { parse_opt(v, c); }},
      {"timing_repeats",
       [&](const json& v, const std::string& k) { c.timing_repeats = positive_int(v, k); }},
      {"output_dir",
       [&](const json& v, const std::string& k) { c.output_dir = get_as<std::string>(v, k); }},
  };
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InvalidArgument("unknown config key '" + key + "'");
    it->second(value, key);
  }
  if (c.task != "shells" && c.task != "towers") {
    throw InvalidArgument("task must be 'shells' or 'towers'");
  }
  if (c.preset != "desk" && c.preset != "full") {
    throw InvalidArgument("preset must be 'desk' or 'full'");
  }
  for (const auto& m : c.methods) {
    if (m != "ours" && m != "nn" && m != "pinn" && m != "opt") {
      throw InvalidArgument("unknown method '" + m + "'");
    }
  }
  for (double d : c.deltas) {
    if (!(d >= 0.0 && d <= 1.0)) throw InvalidArgument("deltas must lie in [0, 1]");
  }
  for (int g : c.grids) {
    if (g < 2) throw InvalidArgument("grids must be >= 2");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config file '" + path + "' not found");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidArgument("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json doc = {{"task", c.task},
              {"grid_side", c.grid_side},
              {"plan_width", c.plan_width},
              {"area_load", c.area_load},
              {"rings", c.rings},
              {"points_per_ring", c.points_per_ring},
              {"height", c.height},
              {"preset", c.preset},
              {"seed", c.seed},
              {"test_seed", c.test_seed},
              {"test_size", c.test_size},
              {"kappa", c.kappa},
              {"kappas", c.kappas},
              {"deltas", c.deltas},
              {"grids", c.grids},
              {"methods", c.methods},
              {"opt",
               {{"max_iters", c.opt.max_iters},
                {"tolerance", c.opt.tolerance},
                {"memory", c.opt.memory},
                {"q_max", c.opt.q_max},
                {"stall_iters", c.opt.stall_iters},
                {"init", to_string(c.opt_init)},
                {"seed", c.opt_seed}}},
              {"timing_repeats", c.timing_repeats},
              {"output_dir", c.output_dir}};
  if (c.hidden_size) doc["hidden_size"] = *c.hidden_size;
  if (c.hidden_layers) doc["hidden_layers"] = *c.hidden_layers;
  if (c.batch_size) doc["batch_size"] = *c.batch_size;
  if (c.clip_norm) doc["clip_norm"] = *c.clip_norm;
  if (c.schedule) {
    json stages = json::array();
    for (const auto& s : *c.schedule) stages.push_back({{"steps", s.steps}, {"lr", s.learning_rate}});
    doc["schedule"] = stages;
  }
  return doc;
}

std::unique_ptr<Task> make_task(const ExperimentConfig& config) {
  return make_task(config, config.grid_side);
}

std::unique_ptr<Task> make_task(const ExperimentConfig& config, int grid_side) {
  if (config.task == "shells") {
    return std::make_unique<ShellTask>(grid_side, config.plan_width, config.area_load);
  }
  return std::make_unique<TowerTask>(config.rings, config.points_per_ring, config.height);
}

TrainConfig train_config(const ExperimentConfig& config, const Task& task, ModelKind kind) {
  TrainConfig t = TrainConfig::preset(config.preset, task, kind);
  t.seed = config.seed;
  if (config.hidden_size) t.architecture.hidden_size = *config.hidden_size;
  if (config.hidden_layers) t.architecture.hidden_layers = *config.hidden_layers;
  if (config.batch_size) t.batch_size = *config.batch_size;
  if (config.schedule) t.schedule = *config.schedule;
  if (config.clip_norm) t.clip_norm = *config.clip_norm;
  t.validate();
  return t;
}

}  // namespace formfind::harness
