#include "gesbl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <thread>

#include <json.hpp>

#include "gesbl/errors.hpp"
#include "gesbl/io.hpp"
#include "gesbl/random.hpp"

namespace gesbl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::RandomArx: return "random-arx";
    case ExperimentKind::Ring: return "ring";
    case ExperimentKind::Repressilator: return "repressilator";
    case ExperimentKind::CustomData: return "custom-data";
  }
  return "random-arx";
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "random-arx") return ExperimentKind::RandomArx;
  if (s == "ring") return ExperimentKind::Ring;
  if (s == "repressilator") return ExperimentKind::Repressilator;
  if (s == "custom-data") return ExperimentKind::CustomData;
  fail(ErrorCode::InvalidArgument, "unknown experiment kind '" + s + "'");
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json edges_json(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& e) {
  json rows = json::array();
  for (int i = 0; i < e.rows(); ++i) {
    std::vector<int> row(e.cols());
    for (int j = 0; j < e.cols(); ++j) row[j] = e(i, j) ? 1 : 0;
    rows.push_back(row);
  }
  return rows;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> edges_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<int>>>();
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> e(r, c);
  for (int i = 0; i < r; ++i) {
    require(static_cast<int>(rows[i].size()) == c, ErrorCode::Parse, "ragged edge matrix");
    for (int k = 0; k < c; ++k) e(i, k) = rows[i][k] != 0;
  }
  return e;
}

template <class F>
auto with_json(const std::string& text, const char* what, F&& body) {
  try {
    return body(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path run_dir(const fs::path& dir, int run) { return dir / ("run_" + std::to_string(run)); }

struct ManifestEntry {
  int run = 0;
  bool ok = false;
  std::string error;
};

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  require(fs::exists(path), ErrorCode::MismatchedManifest, "missing " + path.string());
  return with_json(read_text(path), "manifest json", [](const json& j) {
    std::vector<ManifestEntry> out;
    for (const auto& e : j.at("runs"))
      out.push_back({e.at("run").get<int>(), e.at("ok").get<bool>(), e.value("error", "")});
    return out;
  });
}

SolverOptions solver_options(const ExperimentConfig& cfg, PriorMode mode) {
  SolverOptions so;
  so.solver = cfg.solver;
  so.mode = mode;
  so.max_outer = cfg.max_outer;
  so.w_tol = cfg.w_tol;
  so.cost_tol = cfg.cost_tol;
  so.fix_lambda = cfg.fix_lambda;
  so.inner.tol = cfg.inner_tol;
  return so;
}

BasisDictionary dictionary(const ExperimentConfig& cfg) {
  return cfg.dictionary == DictionaryKind::Hill ? hill_dictionary(cfg.max_hill)
                                                : mm_dictionary(cfg.mm_grid);
}

Truth arx_truth(const ArxNetwork& net, int k) {
  Truth truth;
  truth.topology = net.topology();
  truth.scope = ScoreScope::OffDiagonalA;
  if (k >= std::max(net.order_a, net.order_b))
    for (int i = 0; i < net.p; ++i) truth.weights.push_back(arx_true_weights(net, i, k));
  return truth;
}

}  // namespace

const char* mode_name(PriorMode mode) {
  switch (mode) {
    case PriorMode::Combined: return "gesbl";
    case PriorMode::ElementOnly: return "sbl";
    case PriorMode::GroupOnly: return "gsbl";
  }
  return "gesbl";
}

PriorMode parse_mode(const std::string& name) {
  if (name == "gesbl") return PriorMode::Combined;
  if (name == "sbl") return PriorMode::ElementOnly;
  if (name == "gsbl") return PriorMode::GroupOnly;
  fail(ErrorCode::InvalidArgument, "unknown mode '" + name + "' (gesbl|sbl|gsbl)");
}

const char* solver_name(SolverKind solver) {
  switch (solver) {
    case SolverKind::Cccp: return "cccp";
    case SolverKind::Admm: return "admm";
    case SolverKind::Em: return "em";
  }
  return "cccp";
}

SolverKind parse_solver(const std::string& name) {
  if (name == "cccp") return SolverKind::Cccp;
  if (name == "admm") return SolverKind::Admm;
  if (name == "em") return SolverKind::Em;
  fail(ErrorCode::InvalidArgument, "unknown solver '" + name + "' (cccp|admm|em)");
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::InvalidArgument, what); };
  check(p >= 1 && m >= 0, "p >= 1 and m >= 0 required");
  check(edge_prob >= 0.0 && edge_prob <= 1.0, "edge_prob must lie in [0, 1]");
  check(orders.min >= 1 && orders.max >= orders.min, "order range must satisfy 1 <= min <= max");
  check(t >= 2, "t must be at least 2");
  check(!snr_db || std::isfinite(*snr_db), "snr_db must be finite");
  check(noise_var >= 0.0 && std::isfinite(noise_var), "noise_var must be finite and >= 0");
  check(input_variance > 0.0, "input_variance must be positive");
  check(k >= 1 && k < t, "k must satisfy 1 <= k < t");
  check(!modes.empty(), "at least one mode required");
  std::set<PriorMode> seen(modes.begin(), modes.end());
  check(seen.size() == modes.size(), "modes must be distinct");
  check(epsilon_norm >= 0.0, "epsilon_norm must be >= 0");
  check(!lambda0 || *lambda0 > 0.0, "lambda0 must be positive");
  check(max_outer >= 1, "max_outer must be >= 1");
  check(w_tol > 0.0 && cost_tol > 0.0 && inner_tol > 0.0, "tolerances must be positive");
  check(max_hill >= 1, "max_hill must be >= 1");
  check(!mm_grid.empty(), "mm_grid must not be empty");
  for (double kk : mm_grid) check(kk > 0.0, "mm_grid entries must be positive");
  check(runs >= 0, "runs must be >= 0");
  check(jobs >= 1, "jobs must be >= 1");
  if (kind == ExperimentKind::CustomData) check(!data_path.empty(), "custom-data needs data_path");
  if (kind == ExperimentKind::Repressilator)
    check(!snr_db, "repressilator noise is set by noise_var; snr_db must be null");
}

ExperimentConfig parse_config_json(const std::string& text) {
  return with_json(text, "config json", [](const json& j) {
    require(j.is_object(), ErrorCode::Parse, "config json: expected an object");
    static const std::set<std::string> known{
        "kind", "p", "m", "edge_prob", "order_min", "order_max", "t", "snr_db", "noise_var",
        "input_variance", "input_amplitude", "data_path", "network_path", "k", "solver", "modes",
        "epsilon", "epsilon_norm", "lambda0", "fix_lambda", "max_outer", "w_tol", "cost_tol",
        "inner_tol", "dictionary", "max_hill", "mm_grid", "runs", "master_seed", "jobs",
        "emit_curves"};
    for (const auto& [key, _] : j.items())
      require(known.count(key) > 0, ErrorCode::Parse, "config json: unknown key '" + key + "'");

    ExperimentConfig c;
    if (j.contains("kind")) {
      c.kind = parse_kind(j["kind"].get<std::string>());
      if (c.kind == ExperimentKind::Ring) {
        c.m = 1;
        c.t = 65;
        c.snr_db = 20.0;
      } else if (c.kind == ExperimentKind::Repressilator) {
        c.p = 6;
        c.m = 1;
        c.t = 50;
        c.snr_db.reset();
        c.k = 1;
      }
    }
    c.p = j.value("p", c.p);
    c.m = j.value("m", c.m);
    c.edge_prob = j.value("edge_prob", c.edge_prob);
    c.orders.min = j.value("order_min", c.orders.min);
    c.orders.max = j.value("order_max", c.orders.max);
    c.t = j.value("t", c.t);
    if (j.contains("snr_db")) c.snr_db = opt_from(j["snr_db"]);
    c.noise_var = j.value("noise_var", c.noise_var);
    c.input_variance = j.value("input_variance", c.input_variance);
    c.input_amplitude = j.value("input_amplitude", c.input_amplitude);
    c.data_path = j.value("data_path", c.data_path);
    c.network_path = j.value("network_path", c.network_path);
    c.k = j.value("k", c.k);
    if (j.contains("solver")) c.solver = parse_solver(j["solver"].get<std::string>());
    if (j.contains("modes")) {
      c.modes.clear();
      for (const auto& s : j["modes"]) c.modes.push_back(parse_mode(s.get<std::string>()));
    }
    if (j.contains("epsilon")) {
      const auto e = j["epsilon"].get<std::string>();
      require(e == "zero" || e == "uniform", ErrorCode::InvalidArgument,
              "epsilon must be zero or uniform");
      c.epsilon = e == "zero" ? EpsilonPolicy::Zero : EpsilonPolicy::Uniform;
    }
    c.epsilon_norm = j.value("epsilon_norm", c.epsilon_norm);
    if (j.contains("lambda0")) c.lambda0 = opt_from(j["lambda0"]);
    c.fix_lambda = j.value("fix_lambda", c.fix_lambda);
    c.max_outer = j.value("max_outer", c.max_outer);
    c.w_tol = j.value("w_tol", c.w_tol);
    c.cost_tol = j.value("cost_tol", c.cost_tol);
    c.inner_tol = j.value("inner_tol", c.inner_tol);
    if (j.contains("dictionary")) {
      const auto d = j["dictionary"].get<std::string>();
      require(d == "hill" || d == "mm", ErrorCode::InvalidArgument, "dictionary must be hill or mm");
      c.dictionary = d == "hill" ? DictionaryKind::Hill : DictionaryKind::MichaelisMenten;
    }
    c.max_hill = j.value("max_hill", c.max_hill);
    if (j.contains("mm_grid")) c.mm_grid = j["mm_grid"].get<std::vector<double>>();
    c.runs = j.value("runs", c.runs);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.jobs = j.value("jobs", c.jobs);
    c.emit_curves = j.value("emit_curves", c.emit_curves);
    c.validate();
    return c;
  });
}

std::string format_config_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = kind_name(c.kind);
  j["p"] = c.p;
  j["m"] = c.m;
  j["edge_prob"] = c.edge_prob;
  j["order_min"] = c.orders.min;
  j["order_max"] = c.orders.max;
  j["t"] = c.t;
  j["snr_db"] = opt_json(c.snr_db);
  j["noise_var"] = c.noise_var;
  j["input_variance"] = c.input_variance;
  j["input_amplitude"] = c.input_amplitude;
  j["data_path"] = c.data_path;
  j["network_path"] = c.network_path;
  j["k"] = c.k;
  j["solver"] = solver_name(c.solver);
  json modes = json::array();
  for (auto md : c.modes) modes.push_back(mode_name(md));
  j["modes"] = modes;
  j["epsilon"] = c.epsilon == EpsilonPolicy::Zero ? "zero" : "uniform";
  j["epsilon_norm"] = c.epsilon_norm;
  j["lambda0"] = opt_json(c.lambda0);
  j["fix_lambda"] = c.fix_lambda;
  j["max_outer"] = c.max_outer;
  j["w_tol"] = c.w_tol;
  j["cost_tol"] = c.cost_tol;
  j["inner_tol"] = c.inner_tol;
  j["dictionary"] = c.dictionary == DictionaryKind::Hill ? "hill" : "mm";
  j["max_hill"] = c.max_hill;
  j["mm_grid"] = c.mm_grid;
  j["runs"] = c.runs;
  j["master_seed"] = c.master_seed;
  j["jobs"] = c.jobs;
  j["emit_curves"] = c.emit_curves;
  return j.dump(2) + '\n';
}

std::string format_truth_json(const Truth& truth) {
  json j;
  j["scope"] = truth.scope == ScoreScope::OffDiagonalA ? "off-diagonal-a" : "a-and-b";
  j["a_edges"] = edges_json(truth.topology.a_edges);
  j["b_edges"] = edges_json(truth.topology.b_edges);
  json w = json::array();
  for (const auto& v : truth.weights) w.push_back(vec_json(v));
  j["weights"] = w;
  return j.dump(2) + '\n';
}

Truth parse_truth_json(const std::string& text) {
  return with_json(text, "truth json", [](const json& j) {
    Truth t;
    const auto scope = j.at("scope").get<std::string>();
    require(scope == "off-diagonal-a" || scope == "a-and-b", ErrorCode::Parse,
            "truth json: unknown scope '" + scope + "'");
    t.scope = scope == "off-diagonal-a" ? ScoreScope::OffDiagonalA : ScoreScope::AandB;
    t.topology.a_edges = edges_from(j.at("a_edges"));
    t.topology.b_edges = edges_from(j.at("b_edges"));
    if (t.topology.b_edges.rows() == 0)
      t.topology.b_edges.resize(t.topology.a_edges.rows(), 0);
    for (const auto& w : j.at("weights")) t.weights.push_back(vec_from(w));
    return t;
  });
}

SimulatedRun simulate_run(const ExperimentConfig& cfg, int run) {
  cfg.validate();
  const auto r = static_cast<std::uint64_t>(run);
  Rng net_rng = make_rng(sub_seed(cfg.master_seed, r, SeedPurpose::Network));
  Rng input_rng = make_rng(sub_seed(cfg.master_seed, r, SeedPurpose::Input));
  Rng noise_rng = make_rng(sub_seed(cfg.master_seed, r, SeedPurpose::Noise));
  const double nv = cfg.snr_db ? noise_var_for_snr(cfg.input_variance, *cfg.snr_db) : cfg.noise_var;

  SimulatedRun out;
  switch (cfg.kind) {
    case ExperimentKind::RandomArx: {
      RandomNetworkOptions o;
      o.p = cfg.p;
      o.m = cfg.m;
      o.edge_prob = cfg.edge_prob;
      o.orders = cfg.orders;
      o.noise_var = nv;
      out.network = gen_random_network(o, net_rng);
      break;
    }
    case ExperimentKind::Ring: {
      RingNetworkOptions o;
      o.p = cfg.p;
      o.orders = cfg.orders;
      o.noise_var = nv;
      out.network = gen_ring_network(o, net_rng);
      break;
    }
    case ExperimentKind::Repressilator: {
      out.data = simulate_repressilator(cfg.t, nv, cfg.input_amplitude, noise_rng);
      Truth truth;
      truth.topology = repressilator_topology();
      truth.scope = ScoreScope::AandB;
      if (cfg.dictionary == DictionaryKind::Hill)
        for (int i = 0; i < out.data.p(); ++i)
          truth.weights.push_back(repressilator_true_weights(i, cfg.max_hill));
      out.truth = std::move(truth);
      return out;
    }
    case ExperimentKind::CustomData: {
      out.data = parse_data_csv(read_text(cfg.data_path));
      if (!cfg.network_path.empty()) {
        out.network = parse_network_json(read_text(cfg.network_path));
        require(out.network->p == out.data.p() && out.network->m == out.data.m(),
                ErrorCode::DimensionMismatch, "network and data dimensions differ");
        out.truth = arx_truth(*out.network, cfg.k);
      }
      return out;
    }
  }
  const Eigen::MatrixXd u = gaussian_input(out.network->m, cfg.t, cfg.input_variance, input_rng);
  out.data = simulate(*out.network, u, cfg.t, noise_rng);
  out.truth = arx_truth(*out.network, cfg.k);
  return out;
}

RegressionProblem build_problem(const ExperimentConfig& cfg, const TimeSeriesData& data, int node) {
  RegressionOptions ro;
  ro.epsilon = cfg.epsilon;
  ro.epsilon_norm = cfg.epsilon_norm;
  if (!cfg.nonlinear()) return build_arx_regression(data, node, cfg.k, ro);
  NarxOptions no;
  no.lag = cfg.k;
  no.regression = ro;
  if (data.m() > 0) no.known_input = 0;
  return build_narx_regression(data, node, dictionary(cfg), no);
}

RunInference infer_run(const ExperimentConfig& cfg, const TimeSeriesData& data, PriorMode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  const int p = data.p();
  const SolverOptions so = solver_options(cfg, mode);
  const int noise_order = default_noise_order(data, cfg.k);

  std::vector<std::optional<InferenceResult>> slots(p);
  std::vector<std::string> errors(p);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < p; i = next++) {
      try {
        const RegressionProblem prob = build_problem(cfg, data, i);
        double lam0 = 0.0;
        if (cfg.lambda0) lam0 = *cfg.lambda0;
        else if (cfg.nonlinear()) lam0 = estimate_noise_least_squares(prob);
        else lam0 = estimate_noise_high_order(data, i, noise_order);
        // The solver raises lambda to its own floor; an exact fit must not stop it.
        lam0 = std::max(lam0, std::numeric_limits<double>::min());
        slots[i] = solve(prob, lam0, so);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int workers = std::min(cfg.jobs, std::max(p, 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunInference out;
  for (int i = 0; i < p; ++i)
    if (!slots[i]) out.failures.push_back({i, errors[i]});
  if (out.failures.empty()) {
    for (auto& s : slots) out.results.push_back(std::move(*s));
    out.estimate = extract_network(out.results, p, data.m());
  }
  out.seconds = elapsed(t0);
  return out;
}

RunScore score_run(int run, PriorMode mode, const std::vector<InferenceResult>& results,
                   const NetworkEstimate& estimate, const Truth& truth, CurveScore* curves) {
  RunScore s;
  s.run = run;
  s.mode = mode;
  s.topology = score_topology(estimate.topology, truth.topology, truth.scope);
  const CurveScore cs = rank_curves(
      scored_edges(estimate.a_confidence, estimate.b_confidence, truth.topology, truth.scope));
  s.auroc = cs.auroc;
  s.auprec = cs.auprec;
  if (curves) *curves = cs;
  for (const auto& r : results) {
    s.iterations += r.iterations;
    if (!r.converged) ++s.nonconverged_nodes;
  }
  if (truth.weights.size() == results.size() && !results.empty()) {
    Eigen::Index n = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      require(truth.weights[i].size() == results[i].w.size(), ErrorCode::DimensionMismatch,
              "true and estimated coefficient vectors differ in length");
      n += results[i].w.size();
    }
    Eigen::VectorXd est(n), real(n);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const Eigen::Index len = results[i].w.size();
      est.segment(off, len) = results[i].w;
      real.segment(off, len) = truth.weights[i];
      off += len;
    }
    s.nrmse = nrmse(est, real);
  }
  s.ok = true;
  return s;
}

std::vector<ModeSummary> summarize(const std::vector<RunScore>& runs,
                                   const std::vector<PriorMode>& modes) {
  std::vector<ModeSummary> out;
  for (PriorMode mode : modes) {
    ModeSummary m;
    m.mode = mode;
    double nr = 0.0;
    int nr_count = 0, success = 0;
    for (const auto& r : runs) {
      if (r.mode != mode) continue;
      if (!r.ok) {
        ++m.failed;
        continue;
      }
      ++m.scored;
      m.mean_prec += r.topology.prec;
      m.mean_tpr += r.topology.tpr;
      m.mean_auroc += r.auroc;
      m.mean_auprec += r.auprec;
      m.convergence_failures += r.nonconverged_nodes;
      if (r.topology.success) ++success;
      if (r.nrmse) {
        nr += *r.nrmse;
        ++nr_count;
      }
    }
    if (m.scored > 0) {
      m.mean_prec /= m.scored;
      m.mean_tpr /= m.scored;
      m.mean_auroc /= m.scored;
      m.mean_auprec /= m.scored;
      m.success_rate = static_cast<double>(success) / m.scored;
    }
    if (nr_count > 0) m.mean_nrmse = nr / nr_count;
    out.push_back(m);
  }
  return out;
}

std::string format_report_json(const CampaignReport& report) {
  json runs = json::array();
  for (const auto& r : report.runs) {
    json j;
    j["run"] = r.run;
    j["mode"] = mode_name(r.mode);
    j["ok"] = r.ok;
    j["error"] = r.error;
    j["tpr"] = r.topology.tpr;
    j["prec"] = r.topology.prec;
    j["tp"] = r.topology.tp;
    j["fp"] = r.topology.fp;
    j["fn"] = r.topology.fn;
    j["success"] = r.topology.success;
    j["nrmse"] = opt_json(r.nrmse);
    j["auroc"] = r.auroc;
    j["auprec"] = r.auprec;
    j["iterations"] = r.iterations;
    j["nonconverged_nodes"] = r.nonconverged_nodes;
    runs.push_back(j);
  }
  json summary = json::array();
  for (const auto& m : report.summary) {
    json j;
    j["mode"] = mode_name(m.mode);
    j["scored"] = m.scored;
    j["failed"] = m.failed;
    j["mean_prec"] = m.mean_prec;
    j["mean_tpr"] = m.mean_tpr;
    j["success_rate"] = m.success_rate;
    j["mean_nrmse"] = opt_json(m.mean_nrmse);
    j["mean_auroc"] = m.mean_auroc;
    j["mean_auprec"] = m.mean_auprec;
    j["convergence_failures"] = m.convergence_failures;
    summary.push_back(j);
  }
  json j;
  j["runs"] = runs;
  j["summary"] = summary;
  return j.dump(2) + '\n';
}

CampaignReport parse_report_json(const std::string& text) {
  return with_json(text, "report json", [](const json& j) {
    CampaignReport rep;
    for (const auto& e : j.at("runs")) {
      RunScore r;
      r.run = e.at("run").get<int>();
      r.mode = parse_mode(e.at("mode").get<std::string>());
      r.ok = e.at("ok").get<bool>();
      r.error = e.at("error").get<std::string>();
      r.topology.tpr = e.at("tpr").get<double>();
      r.topology.prec = e.at("prec").get<double>();
      r.topology.tp = e.at("tp").get<int>();
      r.topology.fp = e.at("fp").get<int>();
      r.topology.fn = e.at("fn").get<int>();
      r.topology.success = e.at("success").get<bool>();
      r.nrmse = opt_from(e.at("nrmse"));
      r.auroc = e.at("auroc").get<double>();
      r.auprec = e.at("auprec").get<double>();
      r.iterations = e.at("iterations").get<int>();
      r.nonconverged_nodes = e.at("nonconverged_nodes").get<int>();
      rep.runs.push_back(r);
    }
    for (const auto& e : j.at("summary")) {
      ModeSummary m;
      m.mode = parse_mode(e.at("mode").get<std::string>());
      m.scored = e.at("scored").get<int>();
      m.failed = e.at("failed").get<int>();
      m.mean_prec = e.at("mean_prec").get<double>();
      m.mean_tpr = e.at("mean_tpr").get<double>();
      m.success_rate = e.at("success_rate").get<double>();
      m.mean_nrmse = opt_from(e.at("mean_nrmse"));
      m.mean_auroc = e.at("mean_auroc").get<double>();
      m.mean_auprec = e.at("mean_auprec").get<double>();
      m.convergence_failures = e.at("convergence_failures").get<int>();
      rep.summary.push_back(m);
    }
    return rep;
  });
}

std::string format_report_table(const CampaignReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %6s %6s %8s %8s %8s %8s\n", "Mode", "Runs", "Failed",
                "Prec", "TPR", "Success", "NRMSE");
  out += line;
  for (const auto& m : report.summary) {
    char nr[32] = "n/a";
    if (m.mean_nrmse) std::snprintf(nr, sizeof nr, "%.3f", *m.mean_nrmse);
    std::snprintf(line, sizeof line, "%-6s %6d %6d %7.1f%% %7.1f%% %7.1f%% %8s\n",
                  mode_name(m.mode), m.scored, m.failed, 100.0 * m.mean_prec, 100.0 * m.mean_tpr,
                  100.0 * m.success_rate, nr);
    out += line;
  }
  return out;
}

fs::path result_dir(const ExperimentConfig& cfg, const fs::path& dir, int run, PriorMode mode) {
  const fs::path base = run_dir(dir, run);
  return cfg.modes.size() == 1 ? base : base / mode_name(mode);
}

void cmd_simulate(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec, ErrorCode::Io, "cannot create " + out.string());
  const int runs = cfg.kind == ExperimentKind::CustomData ? std::min(cfg.runs, 1) : cfg.runs;
  json entries = json::array();
  for (int run = 0; run < runs; ++run) {
    json e;
    e["run"] = run;
    try {
      const SimulatedRun sim = simulate_run(cfg, run);
      const fs::path rd = run_dir(out, run);
      write_text(rd / "data.csv", format_data_csv(sim.data));
      if (sim.network) write_text(rd / "network.json", format_network_json(*sim.network));
      if (sim.truth) write_text(rd / "truth.json", format_truth_json(*sim.truth));
      e["ok"] = true;
    } catch (const Error& err) {
      if (err.code() == ErrorCode::Io) throw;
      e["ok"] = false;
      e["error"] = std::string(to_string(err.code())) + ": " + err.what();
    }
    entries.push_back(e);
  }
  json manifest;
  manifest["config"] = json::parse(format_config_json(cfg));
  manifest["runs"] = entries;
  write_text(out / "manifest.json", manifest.dump(2) + '\n');
}

void cmd_infer(const ExperimentConfig& cfg, const fs::path& dir) {
  cfg.validate();
  for (const auto& entry : read_manifest(dir)) {
    if (!entry.ok) continue;
    const TimeSeriesData data = parse_data_csv(read_text(run_dir(dir, entry.run) / "data.csv"));
    for (PriorMode mode : cfg.modes) {
      const fs::path rd = result_dir(cfg, dir, entry.run, mode);
      const RunInference inf = infer_run(cfg, data, mode);
      json status;
      status["node_failures"] = json::array();
      for (const auto& f : inf.failures)
        status["node_failures"].push_back({{"node", f.node}, {"error", f.error}});
      status["seconds"] = inf.seconds;
      write_text(rd / "inference.json", status.dump(2) + '\n');
      for (const auto& r : inf.results)
        write_text(rd / ("result_node_" + std::to_string(r.node) + ".json"), format_result_json(r));
      if (inf.estimate) write_text(rd / "topology.json", format_topology_json(inf.estimate->topology));
    }
  }
}

CampaignReport cmd_evaluate(const ExperimentConfig& cfg, const fs::path& dir) {
  cfg.validate();
  CampaignReport report;
  json timing = json::array();
  for (const auto& entry : read_manifest(dir)) {
    for (PriorMode mode : cfg.modes) {
      RunScore s;
      s.run = entry.run;
      s.mode = mode;
      if (!entry.ok) {
        s.error = entry.error;
        report.runs.push_back(s);
        continue;
      }
      const fs::path rd = result_dir(cfg, dir, entry.run, mode);
      try {
        const fs::path truth_path = run_dir(dir, entry.run) / "truth.json";
        require(fs::exists(truth_path), ErrorCode::MismatchedManifest,
                "no ground truth for run " + std::to_string(entry.run));
        const Truth truth = parse_truth_json(read_text(truth_path));
        require(fs::exists(rd / "inference.json"), ErrorCode::MismatchedManifest,
                "run " + std::to_string(entry.run) + " has not been inferred");
        const json status = json::parse(read_text(rd / "inference.json"));
        timing.push_back({{"run", entry.run}, {"mode", mode_name(mode)}, {"seconds", status.at("seconds")}});
        if (!status.at("node_failures").empty()) {
          const auto& f = status.at("node_failures")[0];
          fail(ErrorCode::SingularSystem, "node " + std::to_string(f.at("node").get<int>()) +
                                               ": " + f.at("error").get<std::string>());
        }
        const int p = static_cast<int>(truth.topology.a_edges.rows());
        const int m = static_cast<int>(truth.topology.b_edges.cols());
        std::vector<InferenceResult> results;
        for (int i = 0; i < p; ++i)
          results.push_back(parse_result_json(
              read_text(rd / ("result_node_" + std::to_string(i) + ".json"))));
        const NetworkEstimate est = extract_network(results, p, m);
        const Topology stored = parse_topology_json(read_text(rd / "topology.json"));
        require(stored.a_edges == est.topology.a_edges && stored.b_edges == est.topology.b_edges,
                ErrorCode::MismatchedManifest,
                "topology.json disagrees with the result files of run " + std::to_string(entry.run));
        CurveScore curves;
        s = score_run(entry.run, mode, results, est, truth, &curves);
        if (cfg.emit_curves) {
          write_text(rd / "roc.csv", format_curve_csv(curves.roc, true));
          write_text(rd / "pr.csv", format_curve_csv(curves.pr, false));
        }
      } catch (const std::exception& e) {
        s = RunScore{};
        s.run = entry.run;
        s.mode = mode;
        s.error = e.what();
      }
      report.runs.push_back(s);
    }
  }
  report.summary = summarize(report.runs, cfg.modes);
  write_text(dir / "report.json", format_report_json(report));
  write_text(dir / "report.txt", format_report_table(report));
  write_text(dir / "timing.json", timing.dump(2) + '\n');
  return report;
}

CampaignReport cmd_montecarlo(const ExperimentConfig& cfg, const fs::path& out) {
  cmd_simulate(cfg, out);
  cmd_infer(cfg, out);
  return cmd_evaluate(cfg, out);
}

}  // namespace gesbl
