#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "overlap_sketch/simharness.hpp"

namespace overlap_sketch {

namespace detail {

// Integer-valued JSON number. Floats such as 1e6 are accepted when they are
// exact integers.
inline count_t json_count(const nlohmann::json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (v.is_number_integer()) return v.get<count_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e18) return static_cast<count_t>(d);
  }
  throw format_error("config field '" + key + "' must be an integer", 0);
}

inline std::uint64_t json_seed(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
      try {
        return std::stoull(s);
      } catch (const std::exception&) {
      }
    }
  }
  throw format_error("config field 'master_seed' must be an unsigned 64-bit integer", 0);
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

// Config documents mirror ExperimentConfig:
//   {"mode": "batch-phi", "n1": 1e6, "n2": 1e6, "intersection": 5e5,
//    "m1": 1e5, "m2": 1e5, "trials": 30, "master_seed": 7, "a": 100, "b": 10, "k": 200}
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw format_error("config must be a JSON object", 0);
  static const std::vector<std::string> known{"mode", "n1", "n2", "intersection", "m1", "m2", "trials",
                                              "master_seed", "a", "b", "k", "threads", "model_comparison"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw format_error("unknown config field '" + key + "'", 0);
    }
  }
  try {
    ExperimentConfig cfg;
    cfg.mode = parse_mode(j.at("mode").get<std::string>());
    cfg.pop = PopulationPair(detail::json_count(j, "n1"), detail::json_count(j, "n2"),
                             detail::json_count(j, "intersection"));
    cfg.design = SampleDesign(detail::json_count(j, "m1"), detail::json_count(j, "m2"));
    cfg.trials = detail::json_count(j, "trials");
    if (j.contains("master_seed")) cfg.master_seed = detail::json_seed(j.at("master_seed"));
    auto optional_size = [&](const char* key) -> std::optional<std::size_t> {
      if (!j.contains(key)) return std::nullopt;
      const count_t v = detail::json_count(j, key);
      if (v < 0) throw domain_error(std::string("config field '") + key + "' must be non-negative");
      return static_cast<std::size_t>(v);
    };
    cfg.a = optional_size("a");
    cfg.b = optional_size("b");
    cfg.k = optional_size("k");
    if (j.contains("threads")) cfg.threads = static_cast<unsigned>(detail::json_count(j, "threads"));
    if (j.contains("model_comparison")) cfg.model_comparison = j.at("model_comparison").get<bool>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed config: ") + e.what(), 0);
  }
}

// threads is left out: it never changes results.
inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(cfg.mode));
  j["n1"] = cfg.pop.n1();
  j["n2"] = cfg.pop.n2();
  j["intersection"] = cfg.pop.intersection();
  j["m1"] = cfg.design.m1();
  j["m2"] = cfg.design.m2();
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  if (cfg.a) j["a"] = *cfg.a;
  if (cfg.b) j["b"] = *cfg.b;
  if (cfg.k) j["k"] = *cfg.k;
  if (cfg.mode == ExperimentMode::overlap_dist) j["model_comparison"] = cfg.model_comparison;
  return j;
}

inline nlohmann::ordered_json summary_to_json(const Summary& s) {
  return {{"n", s.n},       {"truth", s.truth}, {"mean", s.mean}, {"median", s.median},
          {"std", s.std},   {"rmse", s.rmse},   {"bias", s.bias}};
}

inline nlohmann::ordered_json report_to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["config"] = config_to_json(r.config);
  j["summary"] = summary_to_json(r.summary);
  j["bound_values"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.bound_values) j["bound_values"][k] = v;
  j["counts"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.counts) j["counts"][k] = v;
  auto records = nlohmann::ordered_json::array();
  for (const auto& t : r.records) {
    nlohmann::ordered_json rec;
    rec["trial_index"] = t.trial_index;
    if (t.x) rec["x"] = *t.x;
    if (t.estimate) rec["estimate"] = *t.estimate;
    if (t.comparator) rec["comparator"] = *t.comparator;
    if (t.delta) rec["delta"] = *t.delta;
    if (t.z) rec["z"] = *t.z;
    rec["valid"] = t.valid;
    for (const auto& [k, v] : t.extra) rec[k] = v;
    records.push_back(std::move(rec));
  }
  j["records"] = std::move(records);
  return j;
}

// One row per trial. Fixed columns first, then the union of extra keys in
// sorted order; absent values are empty cells.
inline void write_report_csv(const ExperimentReport& r, std::ostream& out) {
  std::vector<std::string> extra_keys;
  for (const auto& t : r.records) {
    for (const auto& [k, _] : t.extra) {
      if (std::find(extra_keys.begin(), extra_keys.end(), k) == extra_keys.end()) extra_keys.push_back(k);
    }
  }
  std::sort(extra_keys.begin(), extra_keys.end());
  out << "trial_index,x,estimate,comparator,delta,z,valid";
  for (const auto& k : extra_keys) out << ',' << k;
  out << '\n';
  auto cell = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << detail::format_double(*v);
  };
  for (const auto& t : r.records) {
    out << t.trial_index << ',';
    if (t.x) out << *t.x;
    cell(t.estimate);
    cell(t.comparator);
    cell(t.delta);
    cell(t.z);
    out << ',' << (t.valid ? 1 : 0);
    for (const auto& k : extra_keys) {
      auto it = t.extra.find(k);
      cell(it == t.extra.end() ? std::nullopt : std::optional<double>(it->second));
    }
    out << '\n';
  }
}

}  // namespace overlap_sketch
