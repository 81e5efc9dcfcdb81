#include "gradflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "gradflow/cumulant.hpp"
#include "gradflow/grid.hpp"

namespace gradflow {
namespace {

const std::set<std::string> kKnownKeys = {
    "name",        "target",     "inits",         "flows",          "n",
    "eps",         "horizon",    "record_dt",     "q_list",         "slope_windows",
    "cumulant_order", "output_dir", "w_renormalize", "force_cfl",   "alpha"};

std::string join(const std::vector<std::string>& items) {
  std::string out = "invalid config:";
  for (const auto& s : items) out += "\n  - " + s;
  return out;
}

// Reads either a single number (applied to every flow) or an object keyed by
// flow name.
std::map<FlowKind, double> per_flow_numbers(const nlohmann::json& node, const std::string& key,
                                            std::vector<std::string>& problems) {
  std::map<FlowKind, double> out;
  if (node.is_number()) {
    for (auto k : {FlowKind::kFR, FlowKind::kW, FlowKind::kWFR, FlowKind::kFRExact}) {
      out[k] = node.get<double>();
    }
    return out;
  }
  if (!node.is_object()) {
    problems.push_back(key + " must be a number or an object keyed by flow");
    return out;
  }
  for (const auto& [flow, value] : node.items()) {
    try {
      const auto kind = parse_flow_kind(flow);
      if (!value.is_number()) {
        problems.push_back(key + "." + flow + " must be a number");
        continue;
      }
      out[kind] = value.get<double>();
    } catch (const std::invalid_argument& e) {
      problems.push_back(key + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json canonical_potential(const Potential& p) {
  if (p.is_numeric()) {
    return {{"tabulated", std::vector<double>(p.table().begin(), p.table().end())}};
  }
  auto terms = p.terms();
  std::sort(terms.begin(), terms.end(), [](const TrigTerm& a, const TrigTerm& b) {
    return std::tie(a.kind, a.frequency, a.amplitude) < std::tie(b.kind, b.frequency, b.amplitude);
  });
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : terms) {
    arr.push_back({{"a", t.amplitude}, {"kind", t.kind == TrigKind::kCos ? "cos" : "sin"},
                   {"k", t.frequency}});
  }
  return {{"terms", arr}};
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

double ExperimentConfig::max_horizon() const {
  double t = 0.0;
  for (auto k : flows) {
    auto it = horizon.find(k);
    if (it != horizon.end()) t = std::max(t, it->second);
  }
  return t;
}

nlohmann::json ExperimentConfig::canonical() const {
  nlohmann::json doc;
  doc["target"] = canonical_potential(target);
  doc["inits"] = nlohmann::json::array();
  for (const auto& p : inits) doc["inits"].push_back(canonical_potential(p));
  doc["flows"] = nlohmann::json::array();
  auto sorted_flows = flows;
  std::sort(sorted_flows.begin(), sorted_flows.end());
  for (auto k : sorted_flows) {
    const std::string key(to_string(k));
    doc["flows"].push_back(key);
    if (k != FlowKind::kFRExact) doc["eps"][key] = step_size.at(k);
    doc["horizon"][key] = horizon.at(k);
    if (auto it = slope_windows.find(k); it != slope_windows.end()) {
      doc["slope_windows"][key] = {it->second.t1, it->second.t2};
    }
  }
  doc["n"] = n;
  doc["record_dt"] = record_dt;
  doc["q_list"] = q_list;
  doc["cumulant_order"] = cumulant_order;
  doc["w_renormalize"] = w_renormalize;
  doc["alpha"] = alpha;
  return doc;
}

std::string ExperimentConfig::hash() const {
  const std::string text = canonical().dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return hex64(h);
}

FlowRunConfig ExperimentConfig::run_config(FlowKind kind, const Potential& init) const {
  FlowRunConfig c;
  c.kind = kind;
  c.target = target;
  c.init = init;
  c.n = n;
  c.step_size = kind == FlowKind::kFRExact ? 1.0 : step_size.at(kind);
  c.horizon = horizon.at(kind);
  c.record_dt = record_dt;
  c.q_list = q_list;
  c.renormalize_w = w_renormalize;
  c.force_cfl = force_cfl;
  if (auto it = slope_windows.find(kind); it != slope_windows.end()) {
    c.extra_record_times = {it->second.t1, it->second.t2};
  }
  return c;
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
  std::vector<std::string> problems;
  ExperimentConfig c;
  if (!doc.is_object()) throw ConfigError({"config must be a JSON object"});

  for (const auto& [key, value] : doc.items()) {
    if (!kKnownKeys.count(key)) problems.push_back("unknown key '" + key + "'");
  }

  c.name = doc.value("name", std::string("experiment"));

  auto potential_at = [&](const nlohmann::json& spec, const std::string& where,
                          const std::string& fallback_label) -> Potential {
    try {
      Potential p = parse_potential(spec);
      if (p.name().empty()) p = p.with_name(fallback_label);
      return p;
    } catch (const std::exception& e) {
      problems.push_back(where + ": " + e.what());
      return {};
    }
  };

  if (!doc.contains("target")) {
    problems.push_back("target is required");
  } else {
    c.target = potential_at(doc["target"], "target", "target");
  }

  if (!doc.contains("inits") || !doc["inits"].is_array() || doc["inits"].empty()) {
    problems.push_back("inits must be a non-empty array of potential specs");
  } else {
    std::set<std::string> labels;
    for (std::size_t i = 0; i < doc["inits"].size(); ++i) {
      const std::string where = "inits[" + std::to_string(i) + "]";
      Potential p = potential_at(doc["inits"][i], where, "init" + std::to_string(i));
      if (!labels.insert(p.name()).second) {
        problems.push_back(where + ": duplicate label '" + p.name() + "'");
      }
      c.inits.push_back(std::move(p));
    }
  }

  if (!doc.contains("flows") || !doc["flows"].is_array() || doc["flows"].empty()) {
    problems.push_back("flows must be non-empty");
  } else {
    for (const auto& f : doc["flows"]) {
      if (!f.is_string()) {
        problems.push_back("flows entries must be strings");
        continue;
      }
      try {
        const auto kind = parse_flow_kind(f.get<std::string>());
        if (std::find(c.flows.begin(), c.flows.end(), kind) != c.flows.end()) {
          problems.push_back("flows lists '" + f.get<std::string>() + "' twice");
        } else {
          c.flows.push_back(kind);
        }
      } catch (const std::invalid_argument& e) {
        problems.push_back(std::string("flows: ") + e.what());
      }
    }
  }

  if (doc.contains("n")) {
    if (!doc["n"].is_number_integer() || doc["n"].get<long long>() < 8) {
      problems.push_back("n must be an integer >= 8");
    } else {
      c.n = doc["n"].get<std::size_t>();
    }
  }

  if (doc.contains("eps")) {
    c.step_size = per_flow_numbers(doc["eps"], "eps", problems);
  } else {
    for (auto k : {FlowKind::kFR, FlowKind::kW, FlowKind::kWFR}) c.step_size[k] = 1e-6;
  }
  if (!doc.contains("horizon")) {
    problems.push_back("horizon is required");
  } else {
    c.horizon = per_flow_numbers(doc["horizon"], "horizon", problems);
  }

  if (doc.contains("record_dt")) {
    if (!doc["record_dt"].is_number()) {
      problems.push_back("record_dt must be a number");
    } else {
      c.record_dt = doc["record_dt"].get<double>();
    }
  }
  if (!(c.record_dt > 0.0) || !std::isfinite(c.record_dt)) {
    problems.push_back("record_dt must be > 0");
  }

  if (doc.contains("q_list")) {
    c.q_list.clear();
    if (!doc["q_list"].is_array()) {
      problems.push_back("q_list must be an array of numbers > 1");
    } else {
      for (const auto& q : doc["q_list"]) {
        if (!q.is_number() || !(q.get<double>() > 1.0)) {
          problems.push_back("q_list entries must be numbers > 1");
        } else {
          c.q_list.push_back(q.get<double>());
        }
      }
    }
  }

  if (doc.contains("slope_windows")) {
    const auto& sw = doc["slope_windows"];
    if (!sw.is_object()) {
      problems.push_back("slope_windows must be an object keyed by flow");
    } else {
      for (const auto& [flow, win] : sw.items()) {
        try {
          const auto kind = parse_flow_kind(flow);
          if (!win.is_array() || win.size() != 2 || !win[0].is_number() || !win[1].is_number()) {
            problems.push_back("slope_windows." + flow + " must be [t1, t2]");
            continue;
          }
          SlopeWindow w{win[0].get<double>(), win[1].get<double>()};
          if (!(0.0 < w.t1 && w.t1 < w.t2)) {
            problems.push_back("slope_windows." + flow + " needs 0 < t1 < t2");
          }
          c.slope_windows[kind] = w;
        } catch (const std::invalid_argument& e) {
          problems.push_back(std::string("slope_windows: ") + e.what());
        }
      }
    }
  }

  if (doc.contains("cumulant_order")) {
    if (!doc["cumulant_order"].is_number_integer()) {
      problems.push_back("cumulant_order must be an integer");
    } else {
      c.cumulant_order = doc["cumulant_order"].get<int>();
    }
  }
  if (c.cumulant_order < 2 || c.cumulant_order > CumulantTable::kMaxOrder) {
    problems.push_back("cumulant_order must lie in [2, 16]");
  }

  c.output_dir = doc.value("output_dir", std::string("out/") + c.name);
  auto read_bool = [&](const char* key, bool& dst) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_boolean()) {
      problems.push_back(std::string(key) + " must be a boolean");
    } else {
      dst = doc[key].get<bool>();
    }
  };
  read_bool("w_renormalize", c.w_renormalize);
  read_bool("force_cfl", c.force_cfl);
  if (doc.contains("alpha")) {
    if (!doc["alpha"].is_number() || !(doc["alpha"].get<double>() >= 0.0)) {
      problems.push_back("alpha must be a number >= 0");
    } else {
      c.alpha = doc["alpha"].get<double>();
    }
  }

  // Cross-field checks, per listed flow.
  const bool grid_ok = c.n >= Grid::kMinPoints;
  for (auto kind : c.flows) {
    const std::string key(to_string(kind));
    auto h = c.horizon.find(kind);
    if (doc.contains("horizon") && (h == c.horizon.end() || !(h->second > 0.0))) {
      problems.push_back("horizon." + key + " must be > 0");
    }
    if (kind != FlowKind::kFRExact) {
      auto e = c.step_size.find(kind);
      if (e == c.step_size.end() || !(e->second > 0.0)) {
        problems.push_back("eps." + key + " must be > 0");
      } else if (grid_ok) {
        try {
          check_cfl(kind, e->second, Grid(c.n), c.force_cfl);
        } catch (const std::invalid_argument& ex) {
          problems.push_back(ex.what());
        }
      }
    }
    if (auto w = c.slope_windows.find(kind);
        w != c.slope_windows.end() && h != c.horizon.end() && w->second.t2 > h->second) {
      problems.push_back("slope_windows." + key + " ends after the horizon");
    }
  }
  for (const auto& [kind, w] : c.slope_windows) {
    (void)w;
    if (std::find(c.flows.begin(), c.flows.end(), kind) == c.flows.end()) {
      problems.push_back("slope_windows." + std::string(to_string(kind)) +
                         " refers to a flow that is not listed");
    }
  }
  auto check_table = [&](const Potential& p, const std::string& where) {
    if (p.is_numeric() && p.table().size() != c.n) {
      problems.push_back(where + ": tabulated potential has " + std::to_string(p.table().size()) +
                         " values but n = " + std::to_string(c.n));
    }
  };
  check_table(c.target, "target");
  for (std::size_t i = 0; i < c.inits.size(); ++i) {
    check_table(c.inits[i], "inits[" + std::to_string(i) + "]");
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const nlohmann::json& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path.string() + "'"});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  if (doc.is_object() && overrides.is_object() && !overrides.empty()) doc.merge_patch(overrides);
  return parse_config(doc);
}

}  // namespace gradflow
