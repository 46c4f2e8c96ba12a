#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sitescout/documents.hpp"
#include "sitescout/error.hpp"
#include "sitescout/mission.hpp"
#include "sitescout/scenario.hpp"
#include "sitescout/service.hpp"

namespace fs = std::filesystem;
using namespace sitescout;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << bytes;
}

int cmd_validate(const fs::path& file) {
  const auto diags = validate_scenario_file(file);
  for (const Diagnostic& d : diags) std::cout << d.field << ": " << d.message << "\n";
  return diags.empty() ? 0 : 1;
}

int cmd_run(const fs::path& file, std::optional<std::uint64_t> seed, const fs::path& out_dir, bool headless,
            const std::optional<fs::path>& replay) {
  const Scenario sc = load_scenario(file);
  MissionOptions opts;
  opts.seed = seed;
  if (replay) {
    opts.scripted_commands = commands_from_log(read_file(*replay));
    for (const TimedCommand& tc : opts.scripted_commands) {
      if (tc.command.kind == OperatorCommand::Kind::Start) opts.auto_start = false;
    }
  }
  Mission mission(sc, opts);
  if (!headless) {
    mission.set_listener([](const MissionEvent& e) { std::cerr << event_document(e) << "\n"; });
  }
  MissionResult result = mission.run();

  fs::create_directories(out_dir);
  result.artifacts = {"metrics.jsonl", "map.pgm", "groundtruth.pgm", "coverage.pgm", "result.json"};
  write_file(out_dir / "metrics.jsonl", mission.metrics_log());
  write_file(out_dir / "map.pgm", export_map(mission.merged_grid()));
  write_file(out_dir / "groundtruth.pgm", export_groundtruth(mission.ground_truth()));
  write_file(out_dir / "coverage.pgm", export_coverage(mission.coverage(), mission.ground_truth()));
  write_file(out_dir / "result.json", result_document(result));

  std::cout << to_string(result.outcome);
  if (result.outcome == Outcome::Aborted) std::cout << "(" << to_string(result.abort_reason) << "): " << result.diagnostic;
  std::cout << " phi=" << result.final_phi << " ticks=" << result.ticks << " help_requests=" << result.help_log.size()
            << "\n";
  return result.outcome == Outcome::Done ? 0 : 2;
}

std::atomic<bool> g_interrupted{false};

int cmd_serve(const fs::path& file, ServiceOptions options, bool wait_for_start) {
  const Scenario sc = load_scenario(file);
  MissionOptions opts;
  opts.auto_start = !wait_for_start;
  Mission mission(sc, opts);
  Service service(mission, options);
  const int port = service.start();
  std::cout << "listening on http://" << options.host << ":" << port << std::endl;
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  return 0;
}

int cmd_export(const fs::path& run_dir, bool map, bool coverage, const std::optional<fs::path>& output) {
  const fs::path src = run_dir / (map ? "map.pgm" : "coverage.pgm");
  const std::string bytes = read_file(src);
  const StateRaster r = parse_map(bytes);
  if (output) {
    write_file(*output, bytes);
    std::cout << output->string() << " " << r.width << "x" << r.height << "\n";
  } else {
    std::cout.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  (void)coverage;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent exploration simulator"};
  app.require_subcommand(1);

  fs::path validate_file;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("file", validate_file, "Scenario file")->required();

  fs::path run_file;
  std::optional<std::uint64_t> run_seed;
  fs::path run_out = "run";
  bool run_headless = false;
  std::optional<fs::path> run_replay;
  auto* run = app.add_subcommand("run", "Run a mission to completion");
  run->add_option("file", run_file, "Scenario file")->required();
  run->add_option("--seed", run_seed, "Override the scenario seed");
  run->add_option("--out", run_out, "Output directory")->capture_default_str();
  run->add_flag("--headless", run_headless, "Do not stream events to stderr");
  run->add_option("--replay", run_replay, "Metrics log whose operator commands are re-applied");

  fs::path serve_file;
  ServiceOptions serve_opts;
  std::optional<fs::path> serve_static;
  bool serve_wait = false;
  auto* serve = app.add_subcommand("serve", "Run a mission behind the HTTP service");
  serve->add_option("file", serve_file, "Scenario file")->required();
  serve->add_option("--port", serve_opts.port, "Port (0 picks one)")->capture_default_str();
  serve->add_option("--host", serve_opts.host, "Bind address")->capture_default_str();
  serve->add_option("--tick-ms", serve_opts.tick_ms, "Milliseconds per tick")->capture_default_str();
  serve->add_option("--static", serve_static, "Directory served at /");
  serve->add_flag("--wait-start", serve_wait, "Hold at tick 0 until a start command");

  fs::path export_dir;
  bool export_map_flag = false;
  bool export_cov_flag = false;
  std::optional<fs::path> export_out;
  auto* exp = app.add_subcommand("export", "Export a graymap from a run directory");
  exp->add_option("run_dir", export_dir, "Run directory")->required();
  auto* fm = exp->add_flag("--map", export_map_flag, "Final merged map");
  auto* fc = exp->add_flag("--coverage", export_cov_flag, "Payload scan coverage mask");
  fm->excludes(fc);
  exp->add_option("-o,--output", export_out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(validate_file);
    if (*run) return cmd_run(run_file, run_seed, run_out, run_headless, run_replay);
    if (*serve) {
      serve_opts.static_dir = serve_static;
      return cmd_serve(serve_file, serve_opts, serve_wait);
    }
    if (*exp) {
      if (!export_map_flag && !export_cov_flag) {
        std::cerr << "export: one of --map or --coverage is required\n";
        return 1;
      }
      return cmd_export(export_dir, export_map_flag, export_cov_flag, export_out);
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
