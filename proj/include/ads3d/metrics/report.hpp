#pragma once

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/metrics/pro.hpp"

namespace ads3d {

// A metric that could not be computed (e.g. a single-class test split)
// stays empty and carries the reason.
struct MetricValue {
  std::optional<double> value;
  std::string reason;
};

struct ClassReport {
  MetricValue i_roc;
  MetricValue p_roc;
  MetricValue pro;
  std::vector<CurvePoint> pro_curve;
  std::size_t test_samples = 0;
};

struct EvalReport {
  std::string method;
  double fpr_limit = 0.3;
  std::map<std::string, ClassReport> per_class;

  // Unweighted class average over classes where the metric is defined.
  MetricValue mean(MetricValue ClassReport::*field) const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& [_, c] : per_class) {
      const MetricValue& m = c.*field;
      if (m.value) {
        s += *m.value;
        ++n;
      }
    }
    if (n == 0) return {std::nullopt, "undefined for every class"};
    return {s / static_cast<double>(n), {}};
  }

  bool any_undefined() const {
    for (const auto& [_, c] : per_class)
      if (!c.i_roc.value || !c.p_roc.value || !c.pro.value) return true;
    return false;
  }
};

template <class F>
MetricValue guarded_metric(F&& f) {
  try {
    return {f(), {}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefinedMetric) throw;
    return {std::nullopt, e.what()};
  }
}

inline nlohmann::ordered_json metric_json(const MetricValue& m) {
  if (m.value) return *m.value;
  return nullptr;
}

inline nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["fpr_limit"] = r.fpr_limit;
  auto& classes = j["classes"];
  classes = nlohmann::ordered_json::object();
  for (const auto& [name, c] : r.per_class) {
    nlohmann::ordered_json cj;
    cj["test_samples"] = c.test_samples;
    cj["i_roc"] = metric_json(c.i_roc);
    cj["p_roc"] = metric_json(c.p_roc);
    cj["pro"] = metric_json(c.pro);
    nlohmann::ordered_json notes = nlohmann::ordered_json::object();
    if (!c.i_roc.value) notes["i_roc"] = c.i_roc.reason;
    if (!c.p_roc.value) notes["p_roc"] = c.p_roc.reason;
    if (!c.pro.value) notes["pro"] = c.pro.reason;
    if (!notes.empty()) cj["undefined"] = notes;
    classes[name] = cj;
  }
  j["mean"] = {{"i_roc", metric_json(r.mean(&ClassReport::i_roc))},
               {"p_roc", metric_json(r.mean(&ClassReport::p_roc))},
               {"pro", metric_json(r.mean(&ClassReport::pro))}};
  return j;
}

inline std::string curves_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "class,fpr,pro\n";
  for (const auto& [name, c] : r.per_class)
    for (const CurvePoint& p : c.pro_curve) os << name << "," << p.fpr << "," << p.pro << "\n";
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

inline void write_report(const EvalReport& r, const std::filesystem::path& dir) {
  write_text(dir / "report.json", report_json(r).dump(2) + "\n");
  write_text(dir / "curves.csv", curves_csv(r));
}

}  // namespace ads3d
