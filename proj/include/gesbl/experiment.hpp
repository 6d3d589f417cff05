#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gesbl/arx_model.hpp"
#include "gesbl/metrics.hpp"
#include "gesbl/regression.hpp"
#include "gesbl/sbl.hpp"

namespace gesbl {

enum class ExperimentKind { RandomArx, Ring, Repressilator, CustomData };
enum class DictionaryKind { Hill, MichaelisMenten };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::RandomArx;

  // network
  int p = 10;
  int m = 10;
  double edge_prob = 0.4;
  OrderRange orders;

  // data
  int t = 100;
  /// Noise variance is input_variance * 10^(-snr_db/10) when set, noise_var otherwise.
  std::optional<double> snr_db = 30.0;
  double noise_var = 0.0;
  double input_variance = 1.0;
  /// Repressilator step amplitude.
  double input_amplitude = 0.01;
  /// custom-data only.
  std::string data_path;
  std::string network_path;

  // inference
  int k = 8;
  SolverKind solver = SolverKind::Cccp;
  std::vector<PriorMode> modes{PriorMode::Combined};
  EpsilonPolicy epsilon = EpsilonPolicy::Zero;
  double epsilon_norm = 1e-3;
  /// Initial noise variance. When unset: the high-order ARX residual estimate
  /// for linear kinds, the least-squares residual on the dictionary otherwise.
  std::optional<double> lambda0;
  bool fix_lambda = false;
  int max_outer = 100;
  double w_tol = 1e-6;
  double cost_tol = 1e-9;
  double inner_tol = 1e-10;
  DictionaryKind dictionary = DictionaryKind::Hill;
  int max_hill = 4;
  std::vector<double> mm_grid{0.5, 1.0, 2.0};

  // campaign
  int runs = 20;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  bool emit_curves = false;

  /// Throws InvalidArgument.
  void validate() const;
  bool nonlinear() const { return kind == ExperimentKind::Repressilator; }
};

/// Flat JSON object; keys mirror the field names, enums are written as
/// strings (kind: random-arx|ring|repressilator|custom-data, solver:
/// cccp|admm|em, modes: list of gesbl|sbl|gsbl, epsilon: zero|uniform,
/// dictionary: hill|mm). Missing keys keep their defaults; unknown keys are
/// rejected.
ExperimentConfig parse_config_json(const std::string& text);
std::string format_config_json(const ExperimentConfig& cfg);

const char* mode_name(PriorMode mode);
PriorMode parse_mode(const std::string& name);
const char* solver_name(SolverKind solver);
SolverKind parse_solver(const std::string& name);

/// Ground truth used for scoring.
struct Truth {
  Topology topology;
  ScoreScope scope = ScoreScope::OffDiagonalA;
  /// Per-node coefficients in the inference parametrization; empty when
  /// unknown (NRMSE is then not reported).
  std::vector<Eigen::VectorXd> weights;
};

std::string format_truth_json(const Truth& truth);
Truth parse_truth_json(const std::string& text);

struct SimulatedRun {
  std::optional<ArxNetwork> network;
  TimeSeriesData data;
  std::optional<Truth> truth;
};

/// Draws network, input and noise from sub_seed(master_seed, run, purpose).
SimulatedRun simulate_run(const ExperimentConfig& cfg, int run);

RegressionProblem build_problem(const ExperimentConfig& cfg, const TimeSeriesData& data, int node);

struct NodeFailure {
  int node = 0;
  std::string error;
};

struct RunInference {
  std::vector<InferenceResult> results;  // node order; empty if any node failed
  std::vector<NodeFailure> failures;
  std::optional<NetworkEstimate> estimate;
  double seconds = 0.0;
};

/// Solves every node with `jobs` workers; a failing node is recorded and the
/// others still run.
RunInference infer_run(const ExperimentConfig& cfg, const TimeSeriesData& data, PriorMode mode);

struct RunScore {
  int run = 0;
  PriorMode mode = PriorMode::Combined;
  bool ok = false;
  std::string error;
  TopologyScore topology;
  std::optional<double> nrmse;
  double auroc = 0.0;
  double auprec = 0.0;
  int iterations = 0;
  int nonconverged_nodes = 0;
};

struct ModeSummary {
  PriorMode mode = PriorMode::Combined;
  int scored = 0;
  int failed = 0;
  double mean_prec = 0.0;
  double mean_tpr = 0.0;
  double success_rate = 0.0;
  std::optional<double> mean_nrmse;
  double mean_auroc = 0.0;
  double mean_auprec = 0.0;
  int convergence_failures = 0;
};

/// Wall-clock time is kept out of the report (cmd_evaluate writes it to
/// timing.json) so that equal configs give byte-equal reports.
struct CampaignReport {
  std::vector<RunScore> runs;  // run order, then mode order
  std::vector<ModeSummary> summary;
};

RunScore score_run(int run, PriorMode mode, const std::vector<InferenceResult>& results,
                   const NetworkEstimate& estimate, const Truth& truth, CurveScore* curves = nullptr);
/// Means over successfully scored runs.
std::vector<ModeSummary> summarize(const std::vector<RunScore>& runs,
                                   const std::vector<PriorMode>& modes);

std::string format_report_json(const CampaignReport& report);
CampaignReport parse_report_json(const std::string& text);
/// Columns Prec, TPR, Success, NRMSE per mode.
std::string format_report_table(const CampaignReport& report);

/// Writes <out>/run_<i>/{network.json,data.csv,truth.json} and
/// <out>/manifest.json. Generation failures are recorded in the manifest.
void cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out);
/// For every simulated run writes result_node_<j>.json, topology.json and
/// inference.json into the run directory, or into run_<i>/<mode>/ when more
/// than one mode is configured.
void cmd_infer(const ExperimentConfig& cfg, const std::filesystem::path& dir);
/// Writes <dir>/report.json, <dir>/report.txt and <dir>/timing.json.
CampaignReport cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& dir);
/// cmd_simulate, cmd_infer and cmd_evaluate on one directory.
CampaignReport cmd_montecarlo(const ExperimentConfig& cfg, const std::filesystem::path& out);

std::filesystem::path result_dir(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                 int run, PriorMode mode);

}  // namespace gesbl
