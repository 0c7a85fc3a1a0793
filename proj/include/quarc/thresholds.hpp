#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "quarc/error.hpp"

namespace quarc {

struct ThresholdPoint {
  double size = 0.0;
  double threshold = 0.0;
  bool operator==(const ThresholdPoint&) const = default;
};

/// Split and merge knots measured on one network size.
struct SizeThresholds {
  std::uint32_t network_size = 0;
  std::vector<ThresholdPoint> split;
  std::vector<ThresholdPoint> merge;
  bool operator==(const SizeThresholds&) const = default;
};

struct ThresholdPair {
  double merge = 0.0;
  double split = 0.0;
};

/// Piecewise-linear interpolation over knots sorted by size, flat beyond the
/// first and last knot.
inline double interpolate_knots(const std::vector<ThresholdPoint>& knots, double size) {
  if (knots.empty()) throw DomainError("empty threshold knot list");
  if (size <= knots.front().size) return knots.front().threshold;
  if (size >= knots.back().size) return knots.back().threshold;
  auto hi = std::lower_bound(knots.begin(), knots.end(), size,
                             [](const ThresholdPoint& k, double s) { return k.size < s; });
  if (hi->size == size) return hi->threshold;
  auto lo = hi - 1;
  const double t = (size - lo->size) / (hi->size - lo->size);
  return lo->threshold + t * (hi->threshold - lo->threshold);
}

/// Merge/split passing-rate thresholds as a function of cluster size, with
/// an optional network-size axis (node count of the calibration grid).
class ThresholdTable {
 public:
  ThresholdTable() = default;
  explicit ThresholdTable(std::vector<SizeThresholds> tables) : tables_(std::move(tables)) {
    std::sort(tables_.begin(), tables_.end(),
              [](const auto& a, const auto& b) { return a.network_size < b.network_size; });
    validate();
  }

  const std::vector<SizeThresholds>& tables() const { return tables_; }
  bool empty() const { return tables_.empty(); }

  ThresholdPair lookup(double cluster_size, std::uint32_t network_size) const {
    if (tables_.empty()) throw DomainError("empty threshold table");
    auto at = [cluster_size](const SizeThresholds& t) {
      return ThresholdPair{interpolate_knots(t.merge, cluster_size),
                           interpolate_knots(t.split, cluster_size)};
    };
    if (network_size <= tables_.front().network_size) return at(tables_.front());
    if (network_size >= tables_.back().network_size) return at(tables_.back());
    std::size_t i = 1;
    while (tables_[i].network_size < network_size) ++i;
    const auto& lo = tables_[i - 1];
    const auto& hi = tables_[i];
    if (hi.network_size == network_size) return at(hi);
    const double t = static_cast<double>(network_size - lo.network_size) /
                     static_cast<double>(hi.network_size - lo.network_size);
    const auto a = at(lo), b = at(hi);
    return ThresholdPair{a.merge + t * (b.merge - a.merge), a.split + t * (b.split - a.split)};
  }

  bool operator==(const ThresholdTable&) const = default;

 private:
  void validate() const {
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      const auto& t = tables_[i];
      if (i > 0 && tables_[i - 1].network_size == t.network_size)
        throw ConfigError("duplicate network size in threshold table");
      for (const auto* knots : {&t.split, &t.merge}) {
        if (knots->empty()) throw ConfigError("threshold table has an empty knot list");
        for (std::size_t j = 0; j < knots->size(); ++j) {
          const auto& k = (*knots)[j];
          if (!(k.size > 0.0)) throw ConfigError("threshold cluster size must be positive");
          if (!(k.threshold >= 0.0 && k.threshold <= 1.0))
            throw ConfigError("threshold outside [0,1]");
          if (j > 0 && !((*knots)[j - 1].size < k.size))
            throw ConfigError("threshold sizes must be strictly increasing");
        }
      }
      // Both curves are piecewise linear; comparing at every knot of either
      // covers every size.
      std::vector<double> sizes;
      for (const auto& k : t.split) sizes.push_back(k.size);
      for (const auto& k : t.merge) sizes.push_back(k.size);
      for (double s : sizes)
        if (interpolate_knots(t.merge, s) > interpolate_knots(t.split, s) + 1e-12)
          throw ConfigError("merge threshold exceeds split threshold at cluster size " +
                            std::to_string(s));
    }
  }

  std::vector<SizeThresholds> tables_;
};

/// JSON form: {"network_sizes": [N...], "split": [[[size, thr], ...] per N],
/// "merge": [...]}.
inline nlohmann::json thresholds_to_json(const ThresholdTable& table) {
  nlohmann::json j;
  j["network_sizes"] = nlohmann::json::array();
  j["split"] = nlohmann::json::array();
  j["merge"] = nlohmann::json::array();
  auto knots = [](const std::vector<ThresholdPoint>& ks) {
    auto arr = nlohmann::json::array();
    for (const auto& k : ks) arr.push_back({k.size, k.threshold});
    return arr;
  };
  for (const auto& t : table.tables()) {
    j["network_sizes"].push_back(t.network_size);
    j["split"].push_back(knots(t.split));
    j["merge"].push_back(knots(t.merge));
  }
  return j;
}

inline ThresholdTable thresholds_from_json(const nlohmann::json& j) {
  try {
    for (const auto& [key, value] : j.items())
      if (key != "network_sizes" && key != "split" && key != "merge")
        throw ConfigError("unknown threshold table key '" + key + "'");
    const auto& sizes = j.at("network_sizes");
    const auto& split = j.at("split");
    const auto& merge = j.at("merge");
    if (sizes.size() != split.size() || sizes.size() != merge.size())
      throw ConfigError("threshold table needs one split and one merge list per network size");
    auto knots = [](const nlohmann::json& arr) {
      std::vector<ThresholdPoint> ks;
      for (const auto& k : arr) {
        if (!k.is_array() || k.size() != 2)
          throw ConfigError("threshold knot must be [size, threshold]");
        ks.push_back(ThresholdPoint{k[0].get<double>(), k[1].get<double>()});
      }
      return ks;
    };
    std::vector<SizeThresholds> tables;
    for (std::size_t i = 0; i < sizes.size(); ++i)
      tables.push_back(SizeThresholds{sizes[i].get<std::uint32_t>(), knots(split[i]),
                                      knots(merge[i])});
    return ThresholdTable(std::move(tables));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed threshold table: ") + e.what());
  }
}

}  // namespace quarc
