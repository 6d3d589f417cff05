#include "properties.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "gesbl/metrics.hpp"

namespace gesbl::testing {

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

Eigen::MatrixXd gaussian(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

GroupStructure uniform_groups(int count, int size) {
  GroupStructure g;
  for (int r = 0; r < count; ++r) g.add(size, {RegulatorKind::Node, r});
  return g;
}

RegressionProblem plain_problem(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                GroupStructure groups) {
  RegressionProblem prob;
  prob.phi = phi;
  prob.y = y;
  prob.groups = std::move(groups);
  prob.epsilon = Eigen::VectorXd::Zero(phi.cols());
  prob.k = prob.groups.size(0);
  return prob;
}

void track(PropertyCheck& c, double violation) { c.worst = std::max(c.worst, violation); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

PropertyCheck monotone(const char* name, SolverKind solver, int problems, std::uint64_t seed,
                       double rel_tol) {
  PropertyCheck c{name, false, 0.0, rel_tol, 0, {}};
  Rng rng(seed);
  int longest = 0;
  for (int i = 0; i < problems; ++i) {
    RandomProblemShape shape;
    shape.noise_sd = i % 2 ? 0.1 : 0.01;
    const RegressionProblem prob = random_problem(rng, shape);
    const double lambda0 = std::max(estimate_noise_least_squares(prob), 1e-6);
    for (PriorMode mode : {PriorMode::Combined, PriorMode::ElementOnly, PriorMode::GroupOnly}) {
      SolverOptions opts;
      opts.solver = solver;
      opts.mode = mode;
      const InferenceResult res = solve(prob, lambda0, opts);
      const auto& tr = res.cost_trajectory;
      longest = std::max(longest, static_cast<int>(tr.size()));
      for (std::size_t s = 1; s < tr.size(); ++s)
        track(c, (tr[s] - tr[s - 1]) / std::max(1.0, std::abs(tr[s - 1])));
      ++c.cases;
    }
  }
  c.pass = c.worst <= rel_tol;
  c.detail = "largest relative increase " + fmt(c.worst) + ", longest trajectory " +
             std::to_string(longest);
  return c;
}

// Minimizer of f on the box [lo, hi] by repeated grid refinement.
Eigen::VectorXd grid_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                              Eigen::VectorXd lo, Eigen::VectorXd hi, int points, int levels) {
  const int dim = static_cast<int>(lo.size());
  Eigen::VectorXd best = 0.5 * (lo + hi);
  for (int level = 0; level < levels; ++level) {
    const Eigen::VectorXd step = (hi - lo) / (points - 1);
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x(dim);
    std::vector<int> idx(dim, 0);
    while (true) {
      for (int d = 0; d < dim; ++d) x(d) = lo(d) + idx[d] * step(d);
      const double v = f(x);
      if (v < best_val) {
        best_val = v;
        best = x;
      }
      int d = 0;
      while (d < dim && ++idx[d] == points) idx[d++] = 0;
      if (d == dim) break;
    }
    lo = best - 3.0 * step;
    hi = best + 3.0 * step;
  }
  return best;
}

}  // namespace

RegressionProblem random_problem(Rng& rng, const RandomProblemShape& shape) {
  const int dim = shape.groups * shape.group_size;
  const Eigen::MatrixXd phi = gaussian(rng, shape.rows, dim);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  std::vector<int> order(shape.groups);
  for (int g = 0; g < shape.groups; ++g) order[g] = g;
  std::shuffle(order.begin(), order.end(), rng);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, shape.group_size - 1);
  for (int a = 0; a < std::min(shape.active_groups, shape.groups); ++a) {
    const int off = order[a] * shape.group_size;
    for (int j = 0; j < shape.group_size; ++j) w(off + j) = n(rng);
    if (shape.group_size > 1) w(off + pick(rng)) = 0.0;
  }
  Eigen::VectorXd y = phi * w;
  for (int i = 0; i < shape.rows; ++i) y(i) += shape.noise_sd * n(rng);
  RegressionProblem prob = plain_problem(phi, y, uniform_groups(shape.groups, shape.group_size));
  if (shape.random_epsilon) {
    Eigen::VectorXd eps = gaussian(rng, dim, 1);
    prob.epsilon = eps / eps.norm() * 1e-3;
  }
  return prob;
}

Hyperparameters random_hyper(Rng& rng, const GroupStructure& groups, PriorMode mode) {
  Hyperparameters h = Hyperparameters::initial(groups, log_uniform(rng, 0.1, 10.0), mode);
  for (int q = 0; q < groups.dim(); ++q) h.beta(q) = log_uniform(rng, 0.1, 10.0);
  for (int g = 0; g < groups.count(); ++g) h.gamma(g) = log_uniform(rng, 0.1, 10.0);
  return h;
}

PropertyCheck cccp_monotone(int problems, std::uint64_t seed, double rel_tol) {
  return monotone("CCCP cost nonincreasing", SolverKind::Cccp, problems, seed, rel_tol);
}

PropertyCheck em_monotone(int problems, std::uint64_t seed, double rel_tol) {
  return monotone("EM marginal cost nonincreasing", SolverKind::Em, problems, seed, rel_tol);
}

PropertyCheck type2_identity(int problems, std::uint64_t seed, double rel_tol) {
  PropertyCheck c{"type-II cost equals -2 log marginal likelihood", false, 0.0, rel_tol, 0, {}};
  Rng rng(seed);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (int i = 0; i < problems; ++i) {
    RandomProblemShape shape;
    shape.rows = 6;
    shape.groups = 2;
    shape.group_size = 2;
    shape.active_groups = 1;
    RegressionProblem prob = random_problem(rng, shape);
    prob.epsilon = gaussian(rng, prob.dim(), 1) * 0.5;
    const Hyperparameters h = random_hyper(rng, prob.groups, PriorMode::Combined);
    const int n = prob.rows();
    const int dim = prob.dim();

    const PosteriorMoments post = posterior_moments(prob, h);
    const double ours = type2_cost(prob, h, post.mu) + (n + dim) * log2pi;

    // N(w | eps, B) N(w | 0, Gamma) = N(eps | 0, B + Gamma) N(w | m, P), then
    // integrate the Gaussian likelihood against N(w | m, P).
    Eigen::VectorXd pv(dim), m(dim);
    double prior_part = dim * log2pi;
    for (int q = 0; q < dim; ++q) {
      const double b = h.beta(q);
      const double g = h.gamma(prob.groups.group_of(q));
      pv(q) = b * g / (b + g);
      m(q) = pv(q) * prob.epsilon(q) / b;
      prior_part += std::log(b + g) + prob.epsilon(q) * prob.epsilon(q) / (b + g);
    }
    Eigen::MatrixXd cov = prob.phi * pv.asDiagonal() * prob.phi.transpose();
    cov.diagonal().array() += h.lambda;
    const Eigen::VectorXd r = prob.y - prob.phi * m;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const double like_part =
        n * log2pi + ldlt.vectorD().array().log().sum() + r.dot(ldlt.solve(r));
    const double oracle = like_part + prior_part;
    track(c, std::abs(ours - oracle) / std::abs(oracle));
    ++c.cases;
  }
  c.pass = c.worst <= rel_tol;
  c.detail = "largest relative gap " + fmt(c.worst);
  return c;
}

PropertyCheck woodbury_matches_direct(int problems, std::uint64_t seed, double rel_tol) {
  PropertyCheck c{"Woodbury posterior equals direct inverse", false, 0.0, rel_tol, 0, {}};
  Rng rng(seed);
  for (int i = 0; i < problems; ++i) {
    RandomProblemShape shape;
    shape.rows = 20;
    shape.groups = 10;
    shape.group_size = 4;
    shape.active_groups = 3;
    shape.random_epsilon = i % 2 == 1;
    const RegressionProblem prob = random_problem(rng, shape);
    const PriorMode mode = std::array{PriorMode::Combined, PriorMode::ElementOnly,
                                      PriorMode::GroupOnly}[i % 3];
    const Hyperparameters h = random_hyper(rng, prob.groups, mode);
    const PosteriorMoments direct = posterior_moments(prob, h, PosteriorPath::Direct);
    const PosteriorMoments wood = posterior_moments(prob, h, PosteriorPath::Woodbury);
    track(c, (wood.mu - direct.mu).norm() / direct.mu.norm());
    track(c, (wood.sigma - direct.sigma).norm() / direct.sigma.norm());
    ++c.cases;
  }
  c.pass = c.worst <= rel_tol;
  c.detail = "largest relative difference " + fmt(c.worst);
  return c;
}

PropertyCheck inner_matches_grid(int problems, std::uint64_t seed, double abs_tol) {
  PropertyCheck c{"inner solvers match grid search", false, 0.0, abs_tol, 0, {}};
  Rng rng(seed);
  std::uniform_real_distribution<double> coef(-1.5, 1.5);
  for (int i = 0; i < problems; ++i) {
    const int dim = 1 + i % 2;
    const GroupStructure groups = (i % 4 == 1) ? uniform_groups(1, 2) : uniform_groups(dim, 1);
    const Eigen::MatrixXd phi = gaussian(rng, 4, dim);
    Eigen::VectorXd truth(dim);
    for (int q = 0; q < dim; ++q) truth(q) = coef(rng);
    const Eigen::VectorXd y = phi * truth + 0.1 * gaussian(rng, 4, 1);
    const RegressionProblem prob = plain_problem(phi, y, groups);

    CccpWeights wts;
    wts.g_lambda = log_uniform(rng, 0.1, 10.0);
    wts.g_gamma = Eigen::VectorXd(groups.count());
    wts.g_beta = Eigen::VectorXd(dim);
    for (int g = 0; g < groups.count(); ++g) wts.g_gamma(g) = log_uniform(rng, 0.01, 1.0);
    for (int q = 0; q < dim; ++q) wts.g_beta(q) = log_uniform(rng, 0.01, 1.0);
    const double fixed = i % 3 == 2 ? log_uniform(rng, 0.05, 1.0) : 0.0;

    auto objective = [&](const Eigen::VectorXd& w) {
      const Eigen::VectorXd r = y - phi * w;
      double f = fixed > 0.0 ? r.squaredNorm() / (2.0 * fixed) : std::sqrt(wts.g_lambda) * r.norm();
      for (int g = 0; g < groups.count(); ++g)
        f += std::sqrt(wts.g_gamma(g)) * w.segment(groups.offset(g), groups.size(g)).norm();
      for (int q = 0; q < dim; ++q) f += std::sqrt(wts.g_beta(q)) * std::abs(w(q));
      return f;
    };
    const Eigen::VectorXd ls = phi.colPivHouseholderQr().solve(y);
    const double radius = 1.5 * ls.cwiseAbs().maxCoeff() + 0.1;
    const Eigen::VectorXd oracle = grid_minimize(objective, Eigen::VectorXd::Constant(dim, -radius),
                                                 Eigen::VectorXd::Constant(dim, radius),
                                                 dim == 1 ? 4001 : 201, dim == 1 ? 3 : 6);

    const Eigen::VectorXd start = Eigen::VectorXd::Zero(dim);
    const InnerResult cd = solve_inner_sgl(prob, wts, start, {}, fixed);
    AdmmOptions admm;
    admm.tol = 1e-9;
    admm.max_rounds = 200000;
    const InnerResult sharing = solve_inner_admm(prob, wts, start, admm, fixed);
    track(c, (cd.w - oracle).cwiseAbs().maxCoeff());
    track(c, (sharing.w - oracle).cwiseAbs().maxCoeff());
    ++c.cases;
  }
  c.pass = c.worst <= abs_tol;
  c.detail = "largest coefficient distance " + fmt(c.worst);
  return c;
}

PropertyCheck midpoint_convexity(int pairs, std::uint64_t seed) {
  PropertyCheck c{"midpoint convexity of the DC parts", false, 0.0, 1e-10, 0, {}};
  Rng rng(seed);
  RandomProblemShape shape;
  shape.rows = 6;
  shape.groups = 2;
  shape.group_size = 2;
  shape.active_groups = 1;
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int i = 0; i < pairs; ++i) {
    RegressionProblem prob = random_problem(rng, shape);
    prob.epsilon = gaussian(rng, prob.dim(), 1) * 0.3;
    auto draw = [&] {
      Hyperparameters h = Hyperparameters::initial(prob.groups, log_uniform(rng, 0.01, 100.0));
      for (int q = 0; q < prob.dim(); ++q) h.beta(q) = log_uniform(rng, 0.01, 100.0);
      for (int g = 0; g < prob.groups.count(); ++g) h.gamma(g) = log_uniform(rng, 0.01, 100.0);
      Eigen::VectorXd w(prob.dim());
      for (int q = 0; q < prob.dim(); ++q) w(q) = coef(rng);
      return std::pair{h, w};
    };
    const auto [h1, w1] = draw();
    const auto [h2, w2] = draw();
    Hyperparameters hm = h1;
    hm.lambda = 0.5 * (h1.lambda + h2.lambda);
    hm.beta = 0.5 * (h1.beta + h2.beta);
    hm.gamma = 0.5 * (h1.gamma + h2.gamma);
    const Eigen::VectorXd wm = 0.5 * (w1 + w2);

    const double u1 = quadratic_part(prob, h1, w1);
    const double u2 = quadratic_part(prob, h2, w2);
    const double um = quadratic_part(prob, hm, wm);
    track(c, (um - 0.5 * (u1 + u2)) / std::max(1.0, std::abs(u1) + std::abs(u2)));

    const double v1 = -log_det_part(prob, h1);
    const double v2 = -log_det_part(prob, h2);
    const double vm = -log_det_part(prob, hm);
    track(c, (vm - 0.5 * (v1 + v2)) / std::max(1.0, std::abs(v1) + std::abs(v2)));
    ++c.cases;
  }
  c.pass = c.worst <= c.tolerance;
  c.detail = "largest relative midpoint excess " + fmt(c.worst);
  return c;
}

PropertyCheck weights_match_differences(int problems, std::uint64_t seed, double rel_tol) {
  PropertyCheck c{"CCCP weights match finite differences", false, 0.0, rel_tol, 0, {}};
  Rng rng(seed);
  for (int i = 0; i < problems; ++i) {
    RandomProblemShape shape;
    shape.rows = i % 2 ? 8 : 20;  // both posterior paths
    shape.groups = 3;
    shape.group_size = 3;
    const RegressionProblem prob = random_problem(rng, shape);
    const PriorMode mode = std::array{PriorMode::Combined, PriorMode::ElementOnly,
                                      PriorMode::GroupOnly}[i % 3];
    const Hyperparameters h = random_hyper(rng, prob.groups, mode);
    const CccpWeights wts = cccp_weights(prob, h);

    auto central = [&](auto&& bump) {
      const double step = 1e-4;
      Hyperparameters up = h, down = h;
      const double base = bump(up, 1.0 + step);
      bump(down, 1.0 - step);
      return (log_det_part(prob, up) - log_det_part(prob, down)) / (2.0 * step * base);
    };
    auto compare = [&](double analytic, double numeric) {
      track(c, std::abs(analytic - numeric) / std::max({std::abs(numeric), std::abs(analytic), 1e-12}));
    };
    compare(wts.g_lambda, central([](Hyperparameters& x, double f) {
              const double v = x.lambda;
              x.lambda *= f;
              return v;
            }));
    if (h.uses_beta())
      for (int q = 0; q < prob.dim(); ++q)
        compare(wts.g_beta(q), central([q](Hyperparameters& x, double f) {
                  const double v = x.beta(q);
                  x.beta(q) *= f;
                  return v;
                }));
    if (h.uses_gamma())
      for (int g = 0; g < prob.groups.count(); ++g)
        compare(wts.g_gamma(g), central([g](Hyperparameters& x, double f) {
                  const double v = x.gamma(g);
                  x.gamma(g) *= f;
                  return v;
                }));
    ++c.cases;
  }
  c.pass = c.worst <= rel_tol;
  c.detail = "largest relative error " + fmt(c.worst);
  return c;
}

PropertyCheck shrink_positive_part(int cases, std::uint64_t seed) {
  PropertyCheck c{"shared-variable shrinkage is the positive part", false, 0.0, 1e-12, 0, {}};
  Rng rng(seed);
  for (int i = 0; i < cases; ++i) {
    const Eigen::VectorXd v = gaussian(rng, 5, 1);
    const double norm = v.norm();
    const double kappa = i % 10 == 0 ? norm : log_uniform(rng, 0.1, 10.0) * norm / 3.0;
    const Eigen::VectorXd z = shrink_shared(v, kappa);
    if (norm <= kappa) {
      track(c, z.cwiseAbs().maxCoeff());
    } else {
      const double expected = norm - kappa;
      track(c, std::abs(z.norm() - expected) / norm);
      track(c, (z - v * (expected / norm)).norm() / norm);
    }
    ++c.cases;
  }
  c.pass = c.worst <= c.tolerance;
  c.detail = "largest deviation " + fmt(c.worst);
  return c;
}

PropertyCheck metric_hand_cases() {
  PropertyCheck c{"metric hand cases", false, 0.0, 0.0, 0, {}};
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    ++c.cases;
    if (!ok) failed.emplace_back(what);
  };
  auto topo = [](int p, std::initializer_list<std::pair<int, int>> links) {
    Topology t;
    t.a_edges = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, p, false);
    t.b_edges = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, 0, false);
    for (auto [from, to] : links) t.a_edges(to, from) = true;
    return t;
  };

  const Topology truth = topo(3, {{0, 1}, {1, 2}});
  const TopologyScore same = score_topology(truth, truth);
  expect(same.tpr == 1.0 && same.prec == 1.0 && same.success, "identity scores perfect");
  const TopologyScore half = score_topology(topo(3, {{0, 1}}), truth);
  expect(half.tpr == 0.5 && half.prec == 1.0 && !half.success, "one of two links found");

  Topology ring = topo(10, {});
  for (int i = 0; i < 10; ++i) ring.a_edges((i + 1) % 10, i) = true;
  Topology full = topo(10, {});
  full.a_edges.setConstant(true);
  const TopologyScore dense = score_topology(full, ring);
  expect(dense.tpr == 1.0 && std::abs(dense.prec - 10.0 / 90.0) < 1e-15, "dense guess on a ring");

  expect(nrmse(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)) == 0.0, "nrmse identity");
  expect(std::abs(nrmse(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)) - 1.0) < 1e-15, "nrmse of zero estimate");
  expect(std::abs(nrmse(Eigen::Vector2d(2, 0), Eigen::Vector2d(2, 2)) - std::sqrt(0.5)) < 1e-15,
         "nrmse half missing");

  const CurveScore perfect = rank_curves({{0.9, true}, {0.8, true}, {0.3, false}, {0.1, false}});
  expect(perfect.auroc == 1.0 && perfect.auprec == 1.0, "perfect ranking");
  const CurveScore single = rank_curves({{0.9, true}, {0.5, false}, {0.2, false}});
  expect(single.auroc == 1.0 && single.auprec == 1.0, "single true edge on top");

  Rng rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredEdge> noise(10000);
  for (auto& e : noise) e = {u(rng), u(rng) < 0.5};
  expect(std::abs(rank_curves(noise).auroc - 0.5) <= 0.02, "random ranking auroc near one half");

  c.worst = static_cast<double>(failed.size());
  c.pass = failed.empty();
  c.detail = failed.empty() ? std::to_string(c.cases) + " cases" : "failed: " + failed.front();
  return c;
}

std::vector<PropertyCheck> property_suite(std::uint64_t seed) {
  return {
      cccp_monotone(50, seed + 1),
      em_monotone(50, seed + 2),
      type2_identity(50, seed + 3),
      woodbury_matches_direct(20, seed + 4),
      inner_matches_grid(20, seed + 5),
      midpoint_convexity(1000, seed + 6),
      weights_match_differences(20, seed + 7),
      shrink_positive_part(1000, seed + 8),
      metric_hand_cases(),
  };
}

}  // namespace gesbl::testing
