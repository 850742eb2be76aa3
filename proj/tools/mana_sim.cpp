// mana_sim: generate traces, run simulations and sweeps, print storage tables.
//
// Exit codes: 0 success, 2 usage, 3 input error, 4 internal invariant violation.
// Failures print a JSON error object on stderr.

#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mana/commands.hpp"

namespace {

int exit_code_for(mana::ErrorKind kind) {
  switch (kind) {
    case mana::ErrorKind::usage:
    case mana::ErrorKind::unknown_sweep_key:
      return 2;
    case mana::ErrorKind::invariant_violation:
      return 4;
    default:
      return 3;
  }
}

void print_error(std::string_view kind, const std::string& message, const mana::Error* err = nullptr) {
  nlohmann::ordered_json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  if (err != nullptr && err->key()) j["error"]["key"] = *err->key();
  if (err != nullptr && err->offset()) j["error"]["offset"] = *err->offset();
  std::cerr << j.dump() << std::endl;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  mana::write_file_bytes(out_path, {reinterpret_cast<const std::uint8_t*>(content.data()), content.size()});
}

mana::Json load_config(const std::string& path, const std::vector<std::string>& overrides) {
  mana::Json doc = mana::Json::object();
  if (!path.empty()) {
    const auto bytes = mana::read_file_bytes(path);
    doc = mana::Json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded()) throw mana::Error(mana::ErrorKind::invalid_config, "config is not valid JSON: " + path);
  }
  for (const auto& o : overrides) mana::apply_override(doc, o);
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven L1-I prefetching simulator (MANA, next-line, RDIP, PIF)"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Write a synthetic trace");
  std::string gen_kind;
  mana::SyntheticTraceSpec spec;
  std::string gen_out;
  bool gen_text = false;
  gen->add_option("kind", gen_kind, "loop | segmented | calls | random")->required();
  gen->add_option("--segments", spec.segment_count, "Segment count")->default_val(1);
  gen->add_option("--blocks", spec.blocks_per_segment, "Blocks per segment")->default_val(1);
  gen->add_option("--iters", spec.iterations, "Iterations")->default_val(1);
  gen->add_option("--seed", spec.seed, "RNG seed (random walk)")->default_val(0);
  gen->add_option("--out", gen_out, "Output path")->required();
  gen->add_flag("--text", gen_text, "Write the text format instead of MIT1");

  // run
  auto* run = app.add_subcommand("run", "Simulate one trace and emit a RunReport");
  std::string run_trace, run_config, run_out;
  std::vector<std::string> run_sets;
  bool run_csv = false;
  run->add_option("--trace", run_trace, "Trace file (MIT1 or text)")->required();
  run->add_option("--config", run_config, "JSON config file");
  run->add_option("--set", run_sets, "Override path=value (repeatable)");
  run->add_option("--out", run_out, "Output path (default stdout)");
  run->add_flag("--csv", run_csv, "Emit CSV instead of JSON");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run one simulation per value of a parameter");
  std::string sw_trace, sw_config, sw_vary, sw_out;
  std::vector<std::string> sw_sets;
  unsigned sw_jobs = 1;
  sweep->add_option("--trace", sw_trace, "Trace file")->required();
  sweep->add_option("--config", sw_config, "JSON config file");
  sweep->add_option("--set", sw_sets, "Override path=value (repeatable)");
  sweep->add_option("--vary", sw_vary, "key=v1,v2,...")->required();
  sweep->add_option("--jobs", sw_jobs, "Rows simulated concurrently")->default_val(1);
  sweep->add_option("--out", sw_out, "Output path (default stdout)");

  // storage
  auto* storage = app.add_subcommand("storage", "MANA storage breakdown by partial-tag width");
  std::string st_partial = "all";
  std::string st_format = "text";
  storage->add_option("--partial-tag", st_partial, "'all' or a bit count")->default_val("all");
  storage->add_option("--format", st_format, "text | csv")
      ->default_val("text")
      ->check(CLI::IsMember({"text", "csv"}));

  // count-records
  auto* count = app.add_subcommand("count-records", "Count distinct prefetching records in a trace");
  std::string cr_trace, cr_kind = "all";
  count->add_option("--trace", cr_trace, "Trace file")->required();
  count->add_option("--kind", cr_kind, "mana_trigger | pif_trigger | rdip_signature | all")->default_val("all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) {
      spec.kind = mana::parse_synthetic_kind(gen_kind);
      const auto bytes = mana::commands::gen(spec, gen_text);
      mana::write_file_bytes(gen_out, bytes);
    } else if (run->parsed()) {
      const auto trace = mana::load_trace_file(run_trace);
      const auto cfg = load_config(run_config, run_sets);
      emit(run_out, run_csv ? mana::commands::run_csv(trace, cfg) : mana::commands::run_json(trace, cfg));
    } else if (sweep->parsed()) {
      const auto eq = sw_vary.find('=');
      if (eq == std::string::npos) throw mana::Error(mana::ErrorKind::usage, "--vary expects key=v1,v2,...");
      const auto trace = mana::load_trace_file(sw_trace);
      const auto cfg = load_config(sw_config, sw_sets);
      const auto values = mana::commands::split_values(sw_vary.substr(eq + 1));
      emit(sw_out, mana::commands::sweep_csv(trace, cfg, sw_vary.substr(0, eq), values, sw_jobs));
    } else if (storage->parsed()) {
      emit("", mana::commands::storage(st_partial, st_format == "csv"));
    } else if (count->parsed()) {
      const auto trace = mana::load_trace_file(cr_trace);
      emit("", mana::commands::count_records(trace, cr_kind));
    }
  } catch (const mana::Error& e) {
    print_error(mana::to_string(e.kind()), e.what(), &e);
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return 4;
  }
  return 0;
}
