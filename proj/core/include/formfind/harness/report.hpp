#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace formfind::harness {

/// Mean and population standard deviation.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& values);

/// Per-target metrics of one method.
struct SampleRecord {
  std::uint64_t seed = 0;
  double shape = 0.0;
  double physics = 0.0;
  double time_ms = 0.0;    // encode + decode (models) or full optimization (opt)
  double encode_ms = 0.0;  // models only
  double decode_ms = 0.0;  // solve (ours) or learned decoder (nn / pinn)
};

struct MethodReport {
  std::string method;
  std::vector<SampleRecord> records;

  MeanStd shape() const;
  MeanStd physics() const;
  MeanStd time_ms() const;
  MeanStd encode_ms() const;
  MeanStd decode_ms() const;
};

struct ExperimentReport {
  std::string task;
  nlohmann::json task_params;
  std::vector<std::uint64_t> test_seeds;
  std::vector<MethodReport> methods;
  nlohmann::json meta = nlohmann::json::object();  // seeds, config hash, host

  const MethodReport& method(const std::string& name) const;
};

/// Summary statistics are derived from the records on write and ignored on
/// read, so parse -> serialize reproduces the document exactly.
nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& doc);

/// FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);
/// Hostname, core count and compiler.
nlohmann::json host_info();

}  // namespace formfind::harness
