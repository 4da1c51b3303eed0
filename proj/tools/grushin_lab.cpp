#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "grushinlab/problem.hpp"

using namespace grushinlab;

namespace {

void write_report(const pjson& rep, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/report.json");
  if (!out) throw std::runtime_error("cannot write " + out_dir + "/report.json");
  out << rep.dump(2) << "\n";
}

int run(const std::string& cmd, const std::string& config, const std::string& out_dir,
        int workers) {
  const ProblemSpec spec = load_problem_file(config);
  std::filesystem::create_directories(out_dir);

  pjson rep;
  rep["command"] = cmd;
  const AnalyzeOutcome an = run_analyze_layer(spec);
  rep["analyze"] = analyze_report(spec, an);

  if (cmd == "grushin" || cmd == "validate") {
    GrushinOutcome gr = run_grushin_layer(spec, an);
    rep["grushin"] = grushin_report(spec, gr);
    if (cmd == "validate") rep["validate"] = validate_report(spec, gr);
  } else if (cmd == "pseudospectrum") {
    rep["pseudospectrum"] = pseudospectrum_report(spec, an, out_dir, workers);
  }
  write_report(rep, out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grushin reduction laboratory for doubly characteristic semiclassical operators"};
  app.require_subcommand(1);

  std::string config, out_dir = ".";
  int workers = 1;
  for (const char* name : {"analyze", "grushin", "validate", "pseudospectrum"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "problem spec JSON")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--workers", workers, "worker threads for grid scans");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return run(cmd, config, out_dir, workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const AssumptionViolation& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
}
