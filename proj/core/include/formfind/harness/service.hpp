#pragma once

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "formfind/amortizer.hpp"
#include "formfind/task.hpp"

namespace formfind::harness {

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

/// Request handling for the prediction API, independent of the transport.
/// Models are immutable after construction, so one instance can serve
/// concurrent requests.
///
///   GET  /tasks          tasks with their topology (bars, fixed nodes, signs)
///   GET  /model-info     model kind, architecture and training metadata
///   POST /predict/shell  {"control_points": 16 x [x,y,z], "grid": G}
///   POST /predict/tower  {"rings": {"bottom"|"middle"|"top": {"alpha1","alpha2","beta"}}}
///
/// Predictions return {target, positions, q, forces, lengths, residual_fro,
/// shape_loss, elapsed_ms}. Errors return {"error", "detail"} with 400 for a
/// malformed body, 422 for out-of-range values and 500 for solver failures.
class PredictionService {
 public:
  PredictionService(std::optional<AmortizerModel> shell_model,
                    std::optional<AmortizerModel> tower_model);

  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::string& body) const;

  HttpResponse tasks() const;
  HttpResponse model_info() const;
  HttpResponse predict_shell(const std::string& body) const;
  HttpResponse predict_tower(const std::string& body) const;

 private:
  struct Slot {
    AmortizerModel model;
    std::unique_ptr<Task> task;
  };
  HttpResponse respond(const Slot& slot, const TaskSample& sample) const;

  std::optional<Slot> shell_;
  std::optional<Slot> tower_;
};

/// HTTP transport for a PredictionService with a bounded worker pool.
class HttpServer {
 public:
  explicit HttpServer(const PredictionService& service, std::size_t workers = 4);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace formfind::harness
