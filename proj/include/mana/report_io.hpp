#pragma once

// RunReport serialization. JSON keys and CSV column order are stable.

#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "mana/engine.hpp"

namespace mana {

inline nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["prefetcher"] = r.prefetcher;
  j["instructions"] = r.instructions;
  j["measured_instructions"] = r.measured_instructions;
  j["baseline_misses"] = r.baseline_misses;
  j["demand_misses"] = r.demand_misses;
  j["non_covered_misses"] = r.non_covered_misses;
  j["untimely_misses"] = r.untimely_misses;
  j["covered_fraction"] = r.covered_fraction;
  j["non_covered_fraction"] = r.non_covered_fraction;
  j["untimely_fraction"] = r.untimely_fraction;
  j["overprediction_ratio"] = r.overprediction_ratio;
  j["prefetches_issued"] = r.prefetches_issued;
  j["prefetches_useful"] = r.prefetches_useful;
  j["prefetches_useless"] = r.prefetches_useless;
  j["prefetches_in_flight_at_end"] = r.prefetches_in_flight_at_end;
  j["l1_external_requests"] = r.l1_external_requests;
  j["l2_external_requests"] = r.l2_external_requests;
  j["bandwidth_ratio_vs_no_prefetch_32k"] = r.bandwidth_ratio_vs_no_prefetch_32k;
  j["fetch_stall_cycles"] = r.fetch_stall_cycles;
  j["distinct_record_counts"] = {{"mana_trigger", r.distinct_record_counts.mana_trigger},
                                 {"pif_trigger", r.distinct_record_counts.pif_trigger},
                                 {"rdip_signature", r.distinct_record_counts.rdip_signature}};
  j["storage_bits"] = r.storage_bits;
  return j;
}

inline const char* kReportCsvHeader =
    "prefetcher,instructions,measured_instructions,baseline_misses,demand_misses,non_covered_misses,"
    "untimely_misses,covered_fraction,non_covered_fraction,untimely_fraction,overprediction_ratio,"
    "prefetches_issued,prefetches_useful,prefetches_useless,prefetches_in_flight_at_end,l1_external_requests,"
    "l2_external_requests,bandwidth_ratio_vs_no_prefetch_32k,fetch_stall_cycles,distinct_mana_trigger,"
    "distinct_pif_trigger,distinct_rdip_signature,storage_bits";

inline std::string to_csv_row(const RunReport& r) {
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  auto d = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  return r.prefetcher + ',' + u(r.instructions) + ',' + u(r.measured_instructions) + ',' + u(r.baseline_misses) +
         ',' + u(r.demand_misses) + ',' + u(r.non_covered_misses) + ',' + u(r.untimely_misses) + ',' +
         d(r.covered_fraction) + ',' + d(r.non_covered_fraction) + ',' + d(r.untimely_fraction) + ',' +
         d(r.overprediction_ratio) + ',' + u(r.prefetches_issued) + ',' + u(r.prefetches_useful) + ',' +
         u(r.prefetches_useless) + ',' + u(r.prefetches_in_flight_at_end) + ',' + u(r.l1_external_requests) + ',' +
         u(r.l2_external_requests) + ',' + d(r.bandwidth_ratio_vs_no_prefetch_32k) + ',' +
         u(r.fetch_stall_cycles) + ',' + u(r.distinct_record_counts.mana_trigger) + ',' +
         u(r.distinct_record_counts.pif_trigger) + ',' + u(r.distinct_record_counts.rdip_signature) + ',' +
         u(r.storage_bits);
}

}  // namespace mana
