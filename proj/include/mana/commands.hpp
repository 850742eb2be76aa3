#pragma once

// Command implementations behind the mana_sim CLI. Each returns the exact
// bytes the CLI prints or writes so they can be tested in-process.

#include <algorithm>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "mana/config.hpp"
#include "mana/engine.hpp"
#include "mana/report_io.hpp"
#include "mana/storage_model.hpp"
#include "mana/trace.hpp"

namespace mana::commands {

inline std::vector<std::uint8_t> gen(const SyntheticTraceSpec& spec, bool text = false) {
  const auto records = generate(spec);
  if (text) {
    const auto s = format_text_trace(records);
    return {s.begin(), s.end()};
  }
  return write_trace(records);
}

inline RunReport run_report(std::span<const TraceRecord> trace, const Json& config) {
  return run(trace, parse_engine_config(config));
}

inline std::string run_json(std::span<const TraceRecord> trace, const Json& config) {
  return to_json(run_report(trace, config)).dump(2) + "\n";
}

inline std::string run_csv(std::span<const TraceRecord> trace, const Json& config) {
  return std::string(kReportCsvHeader) + "\n" + to_csv_row(run_report(trace, config)) + "\n";
}

inline std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string::npos) comma = list.size();
    auto v = list.substr(start, comma - start);
    if (!v.empty()) out.push_back(v);
    start = comma + 1;
  }
  return out;
}

/// One report per value of `key`, in the given order. Rows may run
/// concurrently (`jobs` > 1); output order never depends on completion order.
inline std::vector<RunReport> sweep_reports(std::span<const TraceRecord> trace, const Json& base,
                                            const std::string& key, const std::vector<std::string>& values,
                                            unsigned jobs = 1) {
  const auto path = resolve_sweep_key(key);
  if (values.empty()) throw Error(ErrorKind::unknown_sweep_key, "sweep of '" + key + "' has no values", {}, key);

  std::vector<EngineConfig> configs;
  for (const auto& v : values) {
    Json doc = base;
    set_path(doc, path, parse_override_value(v));
    configs.push_back(parse_engine_config(doc));
  }

  std::vector<RunReport> reports(configs.size());
  jobs = std::max(1u, jobs);
  for (std::size_t first = 0; first < configs.size(); first += jobs) {
    std::vector<std::future<RunReport>> batch;
    const auto last = std::min(configs.size(), first + jobs);
    for (auto i = first; i < last; ++i) {
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                 [&trace, &cfg = configs[i]] { return run(trace, cfg); }));
    }
    for (auto i = first; i < last; ++i) reports[i] = batch[i - first].get();
  }
  return reports;
}

inline std::string sweep_csv(std::span<const TraceRecord> trace, const Json& base, const std::string& key,
                             const std::vector<std::string>& values, unsigned jobs = 1) {
  const auto reports = sweep_reports(trace, base, key, values, jobs);
  std::string out = std::string("sweep_key,sweep_value,") + kReportCsvHeader + "\n";
  const auto path = resolve_sweep_key(key);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out += path + ',' + values[i] + ',' + to_csv_row(reports[i]) + '\n';
  }
  return out;
}

/// `partial` is "all" for the standard table rows or a single width.
inline std::string storage(const std::string& partial, bool csv) {
  std::vector<storage::StorageBreakdown> rows;
  if (partial == "all") {
    rows = storage::partial_tag_table();
  } else {
    std::size_t used = 0;
    unsigned long n = 0;
    try {
      n = std::stoul(partial, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != partial.size()) {
      throw Error(ErrorKind::usage, "--partial-tag expects 'all' or a bit count", {}, "partial-tag");
    }
    storage::StorageParams p;
    p.partial_tag_bits = static_cast<unsigned>(std::min<unsigned long>(n, 1u << 16));
    rows.push_back(storage::mana_storage_breakdown(p));
  }
  return csv ? storage::render_csv(rows) : storage::render_text(rows);
}

inline std::string count_records(std::span<const TraceRecord> trace, const std::string& kind) {
  nlohmann::ordered_json j;
  if (kind == "all") {
    const auto c = count_all_distinct_records(trace);
    j["mana_trigger"] = c.mana_trigger;
    j["pif_trigger"] = c.pif_trigger;
    j["rdip_signature"] = c.rdip_signature;
  } else {
    j[kind] = count_distinct_records(trace, parse_record_count_kind(kind));
  }
  return j.dump(2) + "\n";
}

}  // namespace mana::commands
