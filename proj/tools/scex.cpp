// Command-line front end: extract, synth, compare, validate.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scex/config.hpp"
#include "scex/error.hpp"
#include "scex/ingest.hpp"
#include "scex/io.hpp"
#include "scex/opendrive.hpp"
#include "scex/openscenario.hpp"
#include "scex/pipeline.hpp"
#include "scex/synth.hpp"
#include "scex/xml.hpp"

namespace fs = std::filesystem;
using namespace scex;

namespace {

int report_error(const std::string& stage, const std::exception& e, int code) {
  std::cerr << "error [" << stage << "]: " << e.what() << "\n";
  return code;
}

// Runs `f`, mapping module errors to exit codes with a stage label.
template <typename F>
int guarded(const std::string& stage, F&& f) {
  try {
    f();
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
    return e.exit_code();
  } catch (const InputError& e) {
    return report_error(stage, e, 1);
  } catch (const InvariantError& e) {
    return report_error(stage, e, 2);
  } catch (const std::exception& e) {
    return report_error(stage, e, 2);
  }
}

std::optional<PipelineConfig> make_config(const std::string& path, const std::vector<std::string>& overrides) {
  PipelineConfig cfg;
  const int rc = guarded("config", [&] {
    if (!path.empty()) cfg = load_config(path);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
  });
  if (rc != 0) return std::nullopt;
  return cfg;
}

int cmd_extract(const std::vector<std::string>& logs, const PipelineConfig& cfg, const fs::path& out, int jobs,
                bool debug_dump) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < logs.size(); i = next++) {
      const fs::path path = logs[i];
      const std::string stem = path.stem().string();
      std::string summary;
      const int rc = guarded("ingest", [&] {
        const DriveLog log = [&] {
          try {
            return load_drive_log(path);
          } catch (const InputError& e) {
            throw StageError("ingest", e.what(), 1);
          }
        }();
        const DriveResult r = run_pipeline(log, cfg, stem);
        try {
          write_outputs(r, out, debug_dump);
        } catch (const InputError& e) {
          throw StageError("output", e.what(), 1);
        }
        const auto j = report_json(r);
        summary = stem + ": " + std::to_string(j["counts"]["cut_in"].get<int>()) + " cut_in, " +
                  std::to_string(j["counts"]["cut_out"].get<int>()) + " cut_out, " +
                  std::to_string(j["files"]["xosc"].size()) + " scenario file(s)";
      });
      std::lock_guard lock(io);
      if (rc == 0) std::cout << summary << "\n";
      int w = worst.load();
      while (rc > w && !worst.compare_exchange_weak(w, rc)) {
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(logs.size())));
  std::vector<std::thread> pool;
  for (int k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return worst.load();
}

int cmd_synth(const fs::path& spec_path, std::optional<std::uint64_t> seed, const fs::path& out) {
  return guarded("synth", [&] {
    DriveSpec spec = load_drive_spec(spec_path);
    if (seed) spec.seed = *seed;
    const SynthResult r = synthesize_drive(spec);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ostringstream log;
    write_drive_log(r.log, log);
    write_text_file_atomic(out, log.str());
    fs::path truth = out;
    truth.replace_filename(out.stem().string() + "_truth.json");
    write_text_file_atomic(truth, truth_to_json(r.truth).dump(2) + "\n");
    std::cout << out.string() << "\n" << truth.string() << "\n";
  });
}

int cmd_compare(const fs::path& log_path, const fs::path& xosc, const fs::path& xodr, const fs::path& out,
                const PipelineConfig& cfg) {
  return guarded("compare", [&] {
    const DriveLog log = load_drive_log(log_path);
    const OscDocument osc = parse_openscenario(read_text_file(xosc)).document;
    const OdrDocument odr = parse_opendrive(read_text_file(xodr)).document;
    const ScenarioComparison c = compare_scenario(log, osc, odr, cfg);
    fs::create_directories(out);
    const std::string stem = xosc.stem().string();
    emit_comparison(c.adversary, out / (stem + "_adversary.csv"));
    emit_comparison(c.ego, out / (stem + "_ego.csv"));
    auto summary = [](const SimilarityReport& r) {
      return nlohmann::ordered_json{{"rmse_s", r.rmse_s},
                                    {"rmse_t", r.rmse_t},
                                    {"rmse_speed", r.rmse_speed},
                                    {"max_abs_s_error", r.max_abs_s_error},
                                    {"sample_count", r.sample_count}};
    };
    nlohmann::ordered_json j{{"scenario", xosc.filename().string()},
                             {"adversary_id", c.adversary_id},
                             {"window", {c.window_start, c.window_end}},
                             {"adversary", summary(c.adversary.report)},
                             {"ego", summary(c.ego.report)}};
    std::cout << j.dump(2) << "\n";
  });
}

int cmd_validate(const std::vector<std::string>& files) {
  int worst = 0;
  for (const fs::path path : files) {
    const int rc = guarded("validate", [&] {
      const std::string text = read_text_file(path);
      const std::string ext = path.extension().string();
      std::string again;
      if (ext == ".xodr") {
        const OdrParseResult p = parse_opendrive(text);
        for (const std::string& d : p.diagnostics) std::cout << path.string() << ": note: " << d << "\n";
        validate_opendrive(p.document);
        again = serialize_opendrive(p.document);
      } else if (ext == ".xosc") {
        const OscParseResult p = parse_openscenario(text);
        for (const std::string& d : p.diagnostics) std::cout << path.string() << ": note: " << d << "\n";
        validate_openscenario(p.document);
        again = serialize_openscenario(p.document);
      } else {
        throw InputError("unsupported file type '" + ext + "' (expected .xodr or .xosc)");
      }
      std::cout << path.string() << ": ok" << (again == text ? "" : " (not in canonical form)") << "\n";
    });
    worst = std::max(worst, rc);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extract cut-in/cut-out scenarios from drive logs as OpenDRIVE/OpenSCENARIO"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--set", overrides, "override one config key (key=value)");
  };

  auto* extract = app.add_subcommand("extract", "run the full pipeline on drive logs");
  std::vector<std::string> logs;
  std::string out_dir = "out";
  int jobs = 1;
  bool debug_dump = false;
  extract->add_option("logs", logs, "drive log files")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", out_dir, "output directory");
  extract->add_option("--jobs", jobs, "drives processed in parallel")->check(CLI::PositiveNumber);
  extract->add_flag("--debug-dump", debug_dump, "also write lane GeoJSON and section CSV");
  add_config(extract);

  auto* synth = app.add_subcommand("synth", "generate a synthetic drive log and its ground truth");
  std::string spec_path;
  std::string synth_out;
  std::optional<std::uint64_t> seed;
  synth->add_option("spec", spec_path, "drive spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "drive log output path")->required();
  synth->add_option("--seed", seed, "override the spec's RNG seed");

  auto* compare = app.add_subcommand("compare", "replay a scenario and compare it with its source log");
  std::string cmp_log, cmp_xosc, cmp_xodr, cmp_out = "compare";
  compare->add_option("log", cmp_log, "drive log")->required()->check(CLI::ExistingFile);
  compare->add_option("xosc", cmp_xosc, "scenario file")->required()->check(CLI::ExistingFile);
  compare->add_option("xodr", cmp_xodr, "road file")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", cmp_out, "output directory");
  add_config(compare);

  auto* validate = app.add_subcommand("validate", "re-parse emitted OpenX files and print diagnostics");
  std::vector<std::string> files;
  validate->add_option("files", files, ".xodr / .xosc files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*synth) return cmd_synth(spec_path, seed, synth_out);
  if (*validate) return cmd_validate(files);
  const auto cfg = make_config(config_path, overrides);
  if (!cfg) return 1;
  if (*extract) return cmd_extract(logs, *cfg, out_dir, jobs, debug_dump);
  return cmd_compare(cmp_log, cmp_xosc, cmp_xodr, cmp_out, *cfg);
}
