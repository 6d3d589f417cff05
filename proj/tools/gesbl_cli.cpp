// Command-line front end. Talks to the library only through gesbl.h.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gesbl/gesbl.h"

namespace {

struct Flags {
  std::string config;
  std::string out = "gesbl_out";
  std::vector<std::string> modes;
  std::string solver;
  long long seed = -1;
  int runs = -1;
  int jobs = 0;
  bool fix_lambda = false;
  bool emit_curves = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Master seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--runs", f.runs, "Number of runs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--solver", f.solver, "cccp, admm or em")
      ->check(CLI::IsMember({"cccp", "admm", "em"}));
  cmd->add_option("--mode", f.modes, "gesbl, sbl or gsbl; repeat for a paired sweep")
      ->check(CLI::IsMember({"gesbl", "sbl", "gsbl"}))
      ->delimiter(',');
  cmd->add_option("--jobs", f.jobs, "Worker threads per run")->check(CLI::PositiveNumber);
  cmd->add_flag("--fix-lambda", f.fix_lambda, "Hold the noise variance at its initial estimate");
  cmd->add_flag("--emit-curves", f.emit_curves, "Write ROC and PR curve points per run");
}

bool check(gesbl_status st) {
  if (st == GESBL_OK) return true;
  std::fprintf(stderr, "error [%s]: %s\n", gesbl_status_name(st), gesbl_last_error());
  return false;
}

gesbl_config* load(const Flags& f) {
  gesbl_config* cfg = nullptr;
  if (!check(f.config.empty() ? gesbl_config_default(&cfg) : gesbl_config_from_file(f.config.c_str(), &cfg)))
    return nullptr;
  bool ok = true;
  if (f.seed >= 0) ok = ok && check(gesbl_config_set_seed(cfg, static_cast<uint64_t>(f.seed)));
  if (f.runs >= 0) ok = ok && check(gesbl_config_set_runs(cfg, f.runs));
  if (!f.solver.empty()) ok = ok && check(gesbl_config_set_solver(cfg, f.solver.c_str()));
  if (!f.modes.empty()) {
    std::string joined;
    for (const auto& m : f.modes) joined += (joined.empty() ? "" : ",") + m;
    ok = ok && check(gesbl_config_set_modes(cfg, joined.c_str()));
  }
  if (f.jobs > 0) ok = ok && check(gesbl_config_set_jobs(cfg, f.jobs));
  if (f.fix_lambda) ok = ok && check(gesbl_config_set_fix_lambda(cfg, 1));
  if (f.emit_curves) ok = ok && check(gesbl_config_set_emit_curves(cfg, 1));
  if (!ok) {
    gesbl_config_free(cfg);
    return nullptr;
  }
  return cfg;
}

int print_report(gesbl_status st, gesbl_report* rep) {
  if (!check(st)) return 1;
  std::fputs(gesbl_report_table(rep), stdout);
  const int failed = gesbl_report_failed_runs(rep);
  if (failed > 0) std::printf("%d run(s) failed; see report.json\n", failed);
  gesbl_report_free(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse ARX/NARX network inference"};
  app.set_version_flag("--version", std::string(gesbl_version()));
  app.require_subcommand(1);

  Flags f;
  auto* sim = app.add_subcommand("simulate", "Generate networks and time series");
  auto* inf = app.add_subcommand("infer", "Run inference on simulated runs in --out");
  auto* ev = app.add_subcommand("evaluate", "Score inferred runs in --out");
  auto* mc = app.add_subcommand("montecarlo", "simulate, infer and evaluate in one go");
  for (auto* cmd : {sim, inf, ev, mc}) add_flags(cmd, f);
  auto* show = app.add_subcommand("show-config", "Print the effective config as JSON");
  add_flags(show, f);

  CLI11_PARSE(app, argc, argv);

  gesbl_config* cfg = load(f);
  if (!cfg) return 1;
  int rc = 0;
  const char* out = f.out.c_str();
  if (*sim) {
    rc = check(gesbl_simulate(cfg, out)) ? 0 : 1;
  } else if (*inf) {
    rc = check(gesbl_infer(cfg, out)) ? 0 : 1;
  } else if (*ev) {
    gesbl_report* rep = nullptr;
    const gesbl_status st = gesbl_evaluate(cfg, out, &rep);
    rc = print_report(st, rep);
  } else if (*mc) {
    gesbl_report* rep = nullptr;
    const gesbl_status st = gesbl_montecarlo(cfg, out, &rep);
    rc = print_report(st, rep);
  } else if (*show) {
    char* text = nullptr;
    rc = check(gesbl_config_to_json(cfg, &text)) ? 0 : 1;
    if (text) std::fputs(text, stdout);
    gesbl_string_free(text);
  }
  gesbl_config_free(cfg);
  return rc;
}
