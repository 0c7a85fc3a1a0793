#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quarc/error.hpp"
#include "quarc/schedule.hpp"
#include "quarc/topology.hpp"

namespace quarc {

using Json = nlohmann::json;

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

namespace detail {

/// Throws naming the first key of `obj` outside `allowed`.
inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_required(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return get_required<T>(obj, key, where);
}

}  // namespace detail

/// {"nodes": [{"id", "x", "y", "qubits" (null = unlimited), "q"}],
///  "edges": [{"id", "u", "v", "length", "p": [per channel]}]}
inline Json topology_to_json(const NetworkGraph& g) {
  Json j;
  j["nodes"] = Json::array();
  for (const auto& n : g.nodes()) {
    Json jn{{"id", n.id}, {"x", n.position.x}, {"y", n.position.y}, {"q", n.fusion_prob}};
    if (n.qubit_capacity == kUnlimitedQubits)
      jn["qubits"] = nullptr;
    else
      jn["qubits"] = n.qubit_capacity;
    j["nodes"].push_back(std::move(jn));
  }
  j["edges"] = Json::array();
  for (const auto& e : g.edges())
    j["edges"].push_back(
        Json{{"id", e.id}, {"u", e.u}, {"v", e.v}, {"length", e.length}, {"p", e.channel_probs}});
  return j;
}

inline NetworkGraph topology_from_json(const Json& j) {
  detail::check_keys(j, {"nodes", "edges"}, "topology");
  if (!j.contains("nodes") || !j["nodes"].is_array())
    throw ConfigError("topology needs a 'nodes' array");
  if (!j.contains("edges") || !j["edges"].is_array())
    throw ConfigError("topology needs an 'edges' array");
  NetworkGraph g;
  for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
    const auto& jn = j["nodes"][i];
    const std::string where = "topology node " + std::to_string(i);
    detail::check_keys(jn, {"id", "x", "y", "qubits", "q"}, where);
    if (jn.contains("id") && detail::get_required<std::uint64_t>(jn, "id", where) != i)
      throw ConfigError(where + ": node ids must be 0..n-1 in order");
    std::uint32_t qubits = kUnlimitedQubits;
    if (jn.contains("qubits") && !jn["qubits"].is_null())
      qubits = detail::get_required<std::uint32_t>(jn, "qubits", where);
    g.add_node(Position{detail::get_required<double>(jn, "x", where),
                        detail::get_required<double>(jn, "y", where)},
               qubits, detail::get_or<double>(jn, "q", 1.0, where));
  }
  for (std::size_t i = 0; i < j["edges"].size(); ++i) {
    const auto& je = j["edges"][i];
    const std::string where = "topology edge " + std::to_string(i);
    detail::check_keys(je, {"id", "u", "v", "length", "p"}, where);
    if (je.contains("id") && detail::get_required<std::uint64_t>(je, "id", where) != i)
      throw ConfigError(where + ": edge ids must be 0..m-1 in order");
    g.add_edge(detail::get_required<NodeId>(je, "u", where),
               detail::get_required<NodeId>(je, "v", where),
               detail::get_or<double>(je, "length", 1.0, where),
               detail::get_required<std::vector<double>>(je, "p", where));
  }
  return g;
}

/// {"p", "q", "mean_p", "regions": [{"x_min", "x_max", "y_min", "y_max", "p"}]};
/// absent keys keep the base value.
inline Json overrides_to_json(const Overrides& o) {
  Json j = Json::object();
  if (o.p) j["p"] = *o.p;
  if (o.q) j["q"] = *o.q;
  if (o.mean_p) j["mean_p"] = *o.mean_p;
  if (!o.regions.empty()) {
    j["regions"] = Json::array();
    for (const auto& r : o.regions)
      j["regions"].push_back(Json{{"x_min", r.region.x_min},
                                  {"x_max", r.region.x_max},
                                  {"y_min", r.region.y_min},
                                  {"y_max", r.region.y_max},
                                  {"p", r.p}});
  }
  return j;
}

inline Overrides overrides_from_json(const Json& j, const std::string& where,
                                     std::initializer_list<const char*> extra_keys = {}) {
  std::vector<const char*> allowed{"p", "q", "mean_p", "regions"};
  allowed.insert(allowed.end(), extra_keys.begin(), extra_keys.end());
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
  Overrides o;
  if (j.contains("p")) o.p = detail::get_required<double>(j, "p", where);
  if (j.contains("q")) o.q = detail::get_required<double>(j, "q", where);
  if (j.contains("mean_p")) o.mean_p = detail::get_required<double>(j, "mean_p", where);
  if (j.contains("regions")) {
    if (!j["regions"].is_array()) throw ConfigError(where + ": 'regions' must be an array");
    for (std::size_t i = 0; i < j["regions"].size(); ++i) {
      const auto& jr = j["regions"][i];
      const std::string rw = where + " region " + std::to_string(i);
      detail::check_keys(jr, {"x_min", "x_max", "y_min", "y_max", "p"}, rw);
      RegionOverride r;
      r.region.x_min = detail::get_required<double>(jr, "x_min", rw);
      r.region.x_max = detail::get_required<double>(jr, "x_max", rw);
      r.region.y_min = detail::get_required<double>(jr, "y_min", rw);
      r.region.y_max = detail::get_required<double>(jr, "y_max", rw);
      r.p = detail::get_required<double>(jr, "p", rw);
      o.regions.push_back(r);
    }
  }
  return o;
}

/// [{"start_slot", <overrides>}...]
inline Json schedule_to_json(const ParameterSchedule& s) {
  Json j = Json::array();
  for (const auto& e : s.entries()) {
    Json je = overrides_to_json(e.overrides);
    je["start_slot"] = e.start_slot;
    j.push_back(std::move(je));
  }
  return j;
}

inline ParameterSchedule schedule_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("'schedule' must be an array");
  ParameterSchedule s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "schedule entry " + std::to_string(i);
    const auto o = overrides_from_json(j[i], where, {"start_slot"});
    s.add(ScheduleEntry{detail::get_required<std::uint64_t>(j[i], "start_slot", where), o});
  }
  return s;
}

}  // namespace quarc
