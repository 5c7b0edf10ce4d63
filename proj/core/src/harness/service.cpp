#include "formfind/harness/service.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <httplib.h>

#include "formfind/errors.hpp"
#include "formfind/losses.hpp"

namespace formfind::harness {

using nlohmann::json;

namespace {

// Shapes from the solver must satisfy equilibrium; anything above this is a
// solver fault rather than a model error.
constexpr double kResidualFault = 1e-6;

HttpResponse error(int status, const std::string& kind, const std::string& detail,
                   json extra = json::object()) {
  extra["error"] = kind;
  extra["detail"] = detail;
  return {status, extra};
}

// Schema problems map to 400, range problems to 422.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json parse_body(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw SchemaError("request body is not valid JSON");
  if (!doc.is_object()) throw SchemaError("request body must be a JSON object");
  return doc;
}

void expect_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw SchemaError("unknown field '" + k + "' in " + where);
  }
  for (const char* key : keys) {
    if (!obj.contains(key)) throw SchemaError("missing field '" + std::string(key) + "' in " + where);
  }
}

json points_json(const Points& p) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) rows.push_back({p(i, 0), p(i, 1), p(i, 2)});
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

RingEllipse parse_ring(const json& rings, const char* name) {
  if (!rings.at(name).is_object()) throw SchemaError(std::string("ring '") + name + "' must be an object");
  const json& r = rings.at(name);
  expect_keys(r, {"alpha1", "alpha2", "beta"}, std::string("ring '") + name + "'");
  for (const char* k : {"alpha1", "alpha2", "beta"}) {
    if (!r.at(k).is_number()) throw SchemaError(std::string(name) + "." + k + " must be a number");
  }
  RingEllipse e{r["alpha1"].get<double>(), r["alpha2"].get<double>(), r["beta"].get<double>()};
  auto in = [](double v, double lo, double hi) { return v >= lo && v < hi; };
  if (!in(e.alpha1, kAlphaMin, kAlphaMax) || !in(e.alpha2, kAlphaMin, kAlphaMax)) {
    throw RangeError(std::string(name) + ": alpha1 and alpha2 must lie in [0.5, 1.5)");
  }
  if (!in(e.beta, -kBetaMax, kBetaMax)) {
    throw RangeError(std::string(name) + ": beta must lie in [-pi/12, pi/12)");
  }
  return e;
}

}  // namespace

PredictionService::PredictionService(std::optional<AmortizerModel> shell_model,
                                     std::optional<AmortizerModel> tower_model) {
  if (shell_model) {
    auto task = make_task(shell_model->task);
    if (task->name() != "shells") throw InvalidArgument("shell model was trained on another task");
    shell_ = Slot{std::move(*shell_model), std::move(task)};
  }
  if (tower_model) {
    auto task = make_task(tower_model->task);
    if (task->name() != "towers") throw InvalidArgument("tower model was trained on another task");
    tower_ = Slot{std::move(*tower_model), std::move(task)};
  }
}

HttpResponse PredictionService::handle(const std::string& method, const std::string& path,
                                       const std::string& body) const {
  if (method == "GET" && path == "/tasks") return tasks();
  if (method == "GET" && path == "/model-info") return model_info();
  if (method == "POST" && path == "/predict/shell") return predict_shell(body);
  if (method == "POST" && path == "/predict/tower") return predict_tower(body);
  return error(404, "not_found", method + " " + path);
}

HttpResponse PredictionService::tasks() const {
  json out = json::array();
  for (const auto* slot : {shell_ ? &*shell_ : nullptr, tower_ ? &*tower_ : nullptr}) {
    if (slot == nullptr) continue;
    const Topology& topo = slot->task->topology();
    json bars = json::array();
    for (const auto& b : topo.bars()) bars.push_back({b.a, b.b});
    out.push_back({{"name", slot->task->name()},
                   {"params", slot->task->params()},
                   {"num_nodes", topo.num_nodes()},
                   {"num_bars", topo.num_bars()},
                   {"bars", bars},
                   {"fixed", std::vector<int>(topo.fixed().begin(), topo.fixed().end())},
                   {"signs", vector_json(slot->task->signs())},
                   {"shift", slot->task->shift()}});
  }
  return {200, {{"tasks", out}}};
}

HttpResponse PredictionService::model_info() const {
  json out = json::object();
  for (const auto* slot : {shell_ ? &*shell_ : nullptr, tower_ ? &*tower_ : nullptr}) {
    if (slot == nullptr) continue;
    json info = {{"kind", to_string(slot->model.kind)},
                 {"task", slot->model.task},
                 {"encoder_layers", slot->model.encoder.spec().layer_sizes},
                 {"parameters", slot->model.encoder.num_parameters()},
                 {"meta", slot->model.meta}};
    if (slot->model.decoder) {
      info["decoder_layers"] = slot->model.decoder->spec().layer_sizes;
      info["parameters"] =
          slot->model.encoder.num_parameters() + slot->model.decoder->num_parameters();
    }
    out[slot->task->name()] = info;
  }
  return {200, out};
}

HttpResponse PredictionService::respond(const Slot& slot, const TaskSample& sample) const {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Prediction p = predict(slot.model, *slot.task, sample);
    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const double residual = physics_loss(p.state.residuals);
    if (slot.model.kind == ModelKind::ours && !(residual <= kResidualFault)) {
      return error(500, "solver_fault", "equilibrium residual above tolerance",
                   {{"residual_fro", residual}});
    }
    return {200,
            {{"target", points_json(sample.target.positions)},
             {"positions", points_json(p.state.positions)},
             {"q", vector_json(p.q.values)},
             {"forces", vector_json(p.state.forces)},
             {"lengths", vector_json(p.state.lengths)},
             {"residual_fro", residual},
             {"shape_loss", shape_loss(p.state.positions, sample.target, slot.task->p())},
             {"elapsed_ms", elapsed}}};
  } catch (const SingularSystemError& e) {
    return error(500, "singular_system", e.what(),
                 {{"condition_estimate", std::isfinite(e.condition_estimate())
                                             ? json(e.condition_estimate())
                                             : json("inf")}});
  } catch (const DegenerateGeometryError& e) {
    return error(500, "degenerate_geometry", e.what(), {{"bar", e.bar()}});
  }
}

HttpResponse PredictionService::predict_shell(const std::string& body) const {
  if (!shell_) return error(404, "no_model", "the server has no shell model loaded");
  try {
    const json doc = parse_body(body);
    expect_keys(doc, {"control_points", "grid"}, "request");
    if (!doc["grid"].is_number_integer()) throw SchemaError("grid must be an integer");
    const auto& task = static_cast<const ShellTask&>(*shell_->task);
    if (doc["grid"].get<long long>() != task.grid_side()) {
      throw RangeError("grid must equal the model's grid side " + std::to_string(task.grid_side()));
    }
    BezierControlGrid grid;
    try {
      grid = bezier_from_json(doc["control_points"], task.plan_width());
    } catch (const InvalidArgument& e) {
      throw SchemaError(e.what());
    }
    return respond(*shell_, task.sample_from_controls(grid));
  } catch (const SchemaError& e) {
    return error(400, "schema", e.what());
  } catch (const RangeError& e) {
    return error(422, "out_of_range", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

HttpResponse PredictionService::predict_tower(const std::string& body) const {
  if (!tower_) return error(404, "no_model", "the server has no tower model loaded");
  try {
    const json doc = parse_body(body);
    expect_keys(doc, {"rings"}, "request");
    const json& rings = doc["rings"];
    if (!rings.is_object()) throw SchemaError("rings must be an object");
    expect_keys(rings, {"bottom", "middle", "top"}, "rings");
    const auto& task = static_cast<const TowerTask&>(*tower_->task);
    TowerParams params = task.shape();
    params.bottom = parse_ring(rings, "bottom");
    params.middle = parse_ring(rings, "middle");
    params.top = parse_ring(rings, "top");
    return respond(*tower_, task.sample_from_params(params));
  } catch (const SchemaError& e) {
    return error(400, "schema", e.what());
  } catch (const RangeError& e) {
    return error(422, "out_of_range", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

struct HttpServer::Impl {
  const PredictionService* service;
  httplib::Server server;
};

HttpServer::HttpServer(const PredictionService& service, std::size_t workers)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  impl_->server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = impl_->service->handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  impl_->server.Get("/tasks", forward);
  impl_->server.Get("/model-info", forward);
  impl_->server.Post("/predict/shell", forward);
  impl_->server.Post("/predict/tower", forward);
  impl_->server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace formfind::harness
