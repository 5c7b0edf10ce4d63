#include "formfind/harness/report.hpp"

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <thread>

#include "formfind/errors.hpp"

namespace formfind::harness {

using nlohmann::json;

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

namespace {

template <typename F>
MeanStd column(const std::vector<SampleRecord>& records, F field) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(field(r));
  return mean_std(v);
}

json stat(const MeanStd& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

MeanStd MethodReport::shape() const {
  return column(records, [](const SampleRecord& r) { return r.shape; });
}
MeanStd MethodReport::physics() const {
  return column(records, [](const SampleRecord& r) { return r.physics; });
}
MeanStd MethodReport::time_ms() const {
  return column(records, [](const SampleRecord& r) { return r.time_ms; });
}
MeanStd MethodReport::encode_ms() const {
  return column(records, [](const SampleRecord& r) { return r.encode_ms; });
}
MeanStd MethodReport::decode_ms() const {
  return column(records, [](const SampleRecord& r) { return r.decode_ms; });
}

const MethodReport& ExperimentReport::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw InvalidArgument("report has no method '" + name + "'");
}

json to_json(const ExperimentReport& report) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    json records = json::array();
    for (const auto& r : m.records) {
      records.push_back({{"seed", r.seed},
                         {"shape", r.shape},
                         {"physics", r.physics},
                         {"time_ms", r.time_ms},
                         {"encode_ms", r.encode_ms},
                         {"decode_ms", r.decode_ms}});
    }
    methods.push_back({{"method", m.method},
                       {"shape", stat(m.shape())},
                       {"physics", stat(m.physics())},
                       {"time_ms", stat(m.time_ms())},
                       {"encode_ms", stat(m.encode_ms())},
                       {"decode_ms", stat(m.decode_ms())},
                       {"records", records}});
  }
  return {{"task", report.task},
          {"task_params", report.task_params},
          {"test_size", report.test_seeds.size()},
          {"test_seeds", report.test_seeds},
          {"methods", methods},
          {"meta", report.meta}};
}

ExperimentReport report_from_json(const json& doc) {
  try {
    ExperimentReport report;
    report.task = doc.at("task").get<std::string>();
    report.task_params = doc.at("task_params");
    report.test_seeds = doc.at("test_seeds").get<std::vector<std::uint64_t>>();
    report.meta = doc.at("meta");
    for (const auto& m : doc.at("methods")) {
      MethodReport mr;
      mr.method = m.at("method").get<std::string>();
      for (const auto& r : m.at("records")) {
        mr.records.push_back({r.at("seed").get<std::uint64_t>(), r.at("shape").get<double>(),
                              r.at("physics").get<double>(), r.at("time_ms").get<double>(),
                              r.at("encode_ms").get<double>(), r.at("decode_ms").get<double>()});
      }
      report.methods.push_back(std::move(mr));
    }
    return report;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed report: ") + e.what());
  }
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

json host_info() {
  std::array<char, 256> name{};
  if (gethostname(name.data(), name.size() - 1) != 0) name[0] = '\0';
  return {{"hostname", name.data()},
          {"hardware_threads", std::thread::hardware_concurrency()},
#if defined(__clang__)
          {"compiler", "clang " __clang_version__}
#elif defined(__GNUC__)
          {"compiler", "gcc " __VERSION__}
#else
          {"compiler", "unknown"}
#endif
  };
}

}  // namespace formfind::harness
