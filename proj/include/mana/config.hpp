#pragma once

// JSON run configuration: defaults, strict key validation, path overrides
// ("prefetcher.lookahead=5") and conversion to EngineConfig.

#include <cstdint>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mana/engine.hpp"
#include "mana/error.hpp"

namespace mana {

using Json = nlohmann::ordered_json;

namespace config_detail {

[[noreturn]] inline void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::invalid_config, key + ": " + what, {}, key);
}

inline void reject_unknown(const Json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) bad(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) bad(path.empty() ? key : path + "." + key, "unknown key");
  }
}

inline std::uint64_t get_uint(const Json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad(path + "." + key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline RegionGeometry get_geometry(const Json& obj, const std::string& path, RegionGeometry fallback) {
  if (!obj.contains("geometry")) return fallback;
  const auto& v = obj.at("geometry");
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() || !v[1].is_number_unsigned()) {
    bad(path + ".geometry", "expected [behind, ahead]");
  }
  RegionGeometry g{v[0].get<unsigned>(), v[1].get<unsigned>()};
  try {
    g.validate();
  } catch (const Error& e) {
    bad(path + ".geometry", e.what());
  }
  return g;
}

inline std::uint64_t kb_to_bytes(std::uint64_t kb) { return kb * 1024; }

}  // namespace config_detail

/// Converts a configuration document into an EngineConfig. Absent keys take
/// their defaults; unknown keys are rejected with the offending path.
inline EngineConfig parse_engine_config(const Json& doc) {
  using namespace config_detail;
  EngineConfig cfg;
  const Json root = doc.is_null() ? Json::object() : doc;
  reject_unknown(root, "", {"l1", "l2", "latency", "prefetcher", "warmup"});

  auto cache_section = [&](const char* name, CacheGeometry g) {
    if (!root.contains(name)) return g;
    const auto& s = root.at(name);
    reject_unknown(s, name, {"kb", "ways", "hit_latency"});
    g.total_bytes = kb_to_bytes(get_uint(s, name, "kb", g.total_bytes / 1024));
    g.ways = static_cast<std::uint32_t>(get_uint(s, name, "ways", g.ways));
    g.hit_latency = get_uint(s, name, "hit_latency", g.hit_latency);
    try {
      g.validate(name);
    } catch (const Error& e) {
      bad(std::string(name) + ".kb", e.what());
    }
    return g;
  };
  cfg.l1 = cache_section("l1", cfg.l1);
  cfg.l2 = cache_section("l2", cfg.l2);
  // The L1 refills from the L2 at the L2's hit latency.
  cfg.l1.fill_latency_from_below = cfg.l2.hit_latency;
  if (root.contains("latency")) {
    const auto& s = root.at("latency");
    reject_unknown(s, "latency", {"beyond_l2"});
    cfg.l2.fill_latency_from_below = get_uint(s, "latency", "beyond_l2", cfg.l2.fill_latency_from_below);
  }
  if (root.contains("warmup") && !root.at("warmup").is_null()) {
    cfg.warmup_instructions = get_uint(root, "", "warmup", 0);
  }

  const Json pf = root.value("prefetcher", Json::object());
  if (!pf.is_object()) bad("prefetcher", "expected an object");
  const std::string kind = pf.value("kind", std::string("mana"));
  const std::string p = "prefetcher";
  auto wrap = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      bad(e.key() ? p + "." + *e.key() : p, e.what());
    }
  };
  if (kind == "none") {
    reject_unknown(pf, p, {"kind"});
    cfg.prefetcher = NoPrefetcherConfig{};
  } else if (kind == "next_line") {
    reject_unknown(pf, p, {"kind", "degree"});
    NextLineConfig c;
    c.degree = static_cast<std::uint32_t>(get_uint(pf, p, "degree", c.degree));
    wrap([&] { c.validate(); });
    cfg.prefetcher = c;
  } else if (kind == "rdip") {
    reject_unknown(pf, p, {"kind", "ras_depth", "table_entries", "table_ways", "triggers_per_entry", "geometry"});
    RdipConfig c;
    c.ras_depth = get_uint(pf, p, "ras_depth", c.ras_depth);
    c.table_entries = get_uint(pf, p, "table_entries", c.table_entries);
    c.table_ways = get_uint(pf, p, "table_ways", c.table_ways);
    c.triggers_per_entry = get_uint(pf, p, "triggers_per_entry", c.triggers_per_entry);
    c.geometry = get_geometry(pf, p, c.geometry);
    wrap([&] { c.validate(); });
    cfg.prefetcher = c;
  } else if (kind == "pif") {
    reject_unknown(pf, p, {"kind", "geometry", "compactor_length", "history_entries", "index_entries", "index_ways",
                           "sab_count", "sab_capacity", "lookahead"});
    PifConfig c;
    c.geometry = get_geometry(pf, p, c.geometry);
    c.compactor_length = get_uint(pf, p, "compactor_length", c.compactor_length);
    c.history_entries = get_uint(pf, p, "history_entries", c.history_entries);
    c.index_entries = get_uint(pf, p, "index_entries", c.index_entries);
    c.index_ways = get_uint(pf, p, "index_ways", c.index_ways);
    c.sab_count = get_uint(pf, p, "sab_count", c.sab_count);
    c.sab_capacity = get_uint(pf, p, "sab_capacity", c.sab_capacity);
    c.lookahead = get_uint(pf, p, "lookahead", c.lookahead);
    wrap([&] { c.validate(); });
    cfg.prefetcher = c;
  } else if (kind == "mana") {
    reject_unknown(pf, p, {"kind", "geometry", "srq_length", "lookahead", "table_entries", "table_ways",
                           "partial_tag_bits", "hobpt_entries", "hobpt_ways", "sab_count", "sab_capacity"});
    ManaConfig c;
    c.geometry = get_geometry(pf, p, c.geometry);
    c.srq_length = get_uint(pf, p, "srq_length", c.srq_length);
    c.lookahead = get_uint(pf, p, "lookahead", c.lookahead);
    c.table_entries = get_uint(pf, p, "table_entries", c.table_entries);
    c.table_ways = get_uint(pf, p, "table_ways", c.table_ways);
    c.partial_tag_bits = static_cast<unsigned>(get_uint(pf, p, "partial_tag_bits", c.partial_tag_bits));
    c.hobpt_entries = get_uint(pf, p, "hobpt_entries", c.hobpt_entries);
    c.hobpt_ways = get_uint(pf, p, "hobpt_ways", c.hobpt_ways);
    c.sab_count = get_uint(pf, p, "sab_count", c.sab_count);
    c.sab_capacity = get_uint(pf, p, "sab_capacity", c.sab_capacity);
    wrap([&] { c.validate(); });
    cfg.prefetcher = c;
  } else {
    bad("prefetcher.kind", "unknown prefetcher kind '" + kind + "'");
  }
  return cfg;
}

/// Parses an override value: JSON literal if it parses, "X:Y" as a region
/// geometry, otherwise a plain string.
inline Json parse_override_value(const std::string& text) {
  static const std::regex geometry(R"((\d+):(\d+))");
  std::smatch m;
  if (std::regex_match(text, m, geometry)) {
    return Json::array({std::stoul(m[1].str()), std::stoul(m[2].str())});
  }
  auto parsed = Json::parse(text, nullptr, false);
  if (parsed.is_discarded()) return Json(text);
  return parsed;
}

/// Sets a dotted path such as "prefetcher.lookahead" inside `doc`.
inline void set_path(Json& doc, const std::string& path, const Json& value) {
  if (path.empty()) throw Error(ErrorKind::invalid_config, "empty override path", {}, path);
  if (doc.is_null()) doc = Json::object();
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorKind::invalid_config, "malformed override path", {}, path);
    if (!node->is_object()) throw Error(ErrorKind::invalid_config, "override path crosses a non-object", {}, path);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

/// "path=value" as accepted by --set.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorKind::usage, "override must look like path=value: " + assignment, {}, assignment);
  }
  set_path(doc, assignment.substr(0, eq), parse_override_value(assignment.substr(eq + 1)));
}

/// Resolves a sweep key (short alias or full path) to its config path.
inline std::string resolve_sweep_key(const std::string& key) {
  static const std::set<std::string, std::less<>> prefetcher_keys{
      "lookahead", "srq_length", "table_entries", "table_ways", "partial_tag_bits", "geometry", "sab_count",
      "sab_capacity"};
  if (prefetcher_keys.count(key) != 0) return "prefetcher." + key;
  if (key.rfind("prefetcher.", 0) == 0 && prefetcher_keys.count(key.substr(11)) != 0) return key;
  if (key == "l1.kb" || key == "l1.size" || key == "l1") return "l1.kb";
  throw Error(ErrorKind::unknown_sweep_key, "'" + key + "' is not a sweepable parameter", {}, key);
}

}  // namespace mana
