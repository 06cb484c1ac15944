// starris: seeded instances, single solves, sweeps and oracle checks.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "starris/channel.hpp"
#include "starris/experiments.hpp"
#include "starris/report.hpp"

using namespace starris;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value experiment file (defaults if omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "channel seed; replaces the config's seed list");
  cmd->add_option("-o,--out", c.out_path, "output file (stdout if omitted)");
}

ExperimentConfig Load(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : LoadConfig(c.config_path);
  if (c.seed) cfg.seeds = {*c.seed};
  cfg.Validate();
  return cfg;
}

// Writes to the named file, or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ContractError("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-min energy efficiency for STAR-RIS assisted downlinks"};
  app.require_subcommand(1);

  Common gen_opts, solve_opts, sweep_opts, oracle_opts;

  CLI::App* gen = app.add_subcommand("gen", "write the channel fixture for one seed");
  AddCommon(gen, gen_opts);

  CLI::App* solve = app.add_subcommand("solve", "run alternating optimization on one instance");
  AddCommon(solve, solve_opts);
  std::string mode_text;
  bool json = false;
  std::string trace_path;
  solve->add_option("--mode", mode_text, "star_es | reflect_only | transmit_only (first config mode if omitted)");
  solve->add_flag("--json", json, "emit JSON instead of text");
  solve->add_option("--trace", trace_path, "also write the convergence trace CSV here");

  CLI::App* sweep = app.add_subcommand("sweep", "run every (value, mode, seed) and write CSV");
  AddCommon(sweep, sweep_opts);

  CLI::App* oracle = app.add_subcommand("oracle-check", "compare AO with the grid oracle and write CSV");
  AddCommon(oracle, oracle_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = Load(gen_opts);
      Output out(gen_opts.out_path);
      WriteChannelCsv(out.stream(), cfg.Instance(cfg.seeds.front()).channels);
    } else if (solve->parsed()) {
      const ExperimentConfig cfg = Load(solve_opts);
      AoConfig ao = cfg.ao;
      ao.mode = mode_text.empty() ? cfg.modes.front() : ParseRisMode(mode_text);
      const SolveReport rep = AlternatingOptimize(cfg.Instance(cfg.seeds.front()), ao);
      Output out(solve_opts.out_path);
      if (json) {
        out.stream() << ReportJson(rep) << "\n";
      } else {
        WriteReportText(out.stream(), rep);
      }
      if (!trace_path.empty()) {
        Output trace(trace_path);
        WriteTraceCsv(trace.stream(), rep.trace);
      }
    } else if (sweep->parsed()) {
      const ExperimentConfig cfg = Load(sweep_opts);
      const SweepTable table = RunSweep(cfg);
      Output out(sweep_opts.out_path);
      WriteSweepCsv(out.stream(), table);
    } else if (oracle->parsed()) {
      const ExperimentConfig cfg = Load(oracle_opts);
      const std::vector<OracleCheckRow> rows = RunOracleCheck(cfg);
      Output out(oracle_opts.out_path);
      WriteOracleCsv(out.stream(), rows);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
