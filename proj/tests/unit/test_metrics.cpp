#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gesbl/errors.hpp"
#include "gesbl/metrics.hpp"
#include "gesbl/random.hpp"

using namespace gesbl;

namespace {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

Topology empty_topology(int p, int m = 0) {
  Topology t;
  t.a_edges = BoolMatrix::Constant(p, p, false);
  t.b_edges = BoolMatrix::Constant(p, m, false);
  return t;
}

Topology random_topology(int p, int m, double prob, Rng& rng) {
  std::bernoulli_distribution edge(prob);
  Topology t = empty_topology(p, m);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) t.a_edges(i, j) = edge(rng);
    for (int j = 0; j < m; ++j) t.b_edges(i, j) = edge(rng);
  }
  return t;
}

Topology relabel(const Topology& t, const std::vector<int>& perm) {
  Topology out = t;
  for (int i = 0; i < t.p(); ++i) {
    for (int j = 0; j < t.p(); ++j) out.a_edges(perm[i], perm[j]) = t.a_edges(i, j);
    for (int j = 0; j < t.b_edges.cols(); ++j) out.b_edges(perm[i], j) = t.b_edges(i, j);
  }
  return out;
}

// Mann-Whitney statistic: probability that a positive outranks a negative,
// ties counted as one half. Equals the trapezoidal ROC area.
double mann_whitney(const std::vector<ScoredEdge>& edges) {
  double wins = 0.0;
  int pos = 0, neg = 0;
  for (const auto& a : edges) {
    if (!a.truth) {
      ++neg;
      continue;
    }
    ++pos;
    for (const auto& b : edges) {
      if (b.truth) continue;
      if (a.confidence > b.confidence) wins += 1.0;
      else if (a.confidence == b.confidence) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * neg);
}

}  // namespace

TEST_CASE("score_topology hand counts") {
  Topology truth = empty_topology(3);
  truth.a_edges(1, 0) = truth.a_edges(2, 1) = true;
  const TopologyScore same = score_topology(truth, truth);
  CHECK(same.tpr == 1.0);
  CHECK(same.prec == 1.0);
  CHECK(same.success);

  Topology one = empty_topology(3);
  one.a_edges(1, 0) = true;
  const TopologyScore half = score_topology(one, truth);
  CHECK(half.tpr == 0.5);
  CHECK(half.prec == 1.0);
  CHECK_FALSE(half.success);
  CHECK(half.tp == 1);
  CHECK(half.fn == 1);
}

TEST_CASE("a fully connected guess on a ring") {
  Topology ring = empty_topology(10);
  for (int i = 0; i < 10; ++i) ring.a_edges((i + 1) % 10, i) = true;
  Topology full = empty_topology(10);
  full.a_edges.setConstant(true);
  const TopologyScore s = score_topology(full, ring);
  CHECK(s.tpr == 1.0);
  CHECK(s.prec == doctest::Approx(10.0 / 90.0));
  CHECK(s.fp == 80);
}

TEST_CASE("self-loops are never scored") {
  Topology truth = empty_topology(3);
  Topology inferred = truth;
  inferred.a_edges.diagonal().setConstant(true);
  CHECK(score_topology(inferred, truth).success);
}

TEST_CASE("B edges count only in the A-and-B scope") {
  Topology truth = empty_topology(2, 2);
  truth.a_edges(0, 1) = true;
  truth.b_edges(0, 0) = true;
  Topology inferred = truth;
  inferred.b_edges(1, 1) = true;
  CHECK(score_topology(inferred, truth).success);
  const TopologyScore both = score_topology(inferred, truth, ScoreScope::AandB);
  CHECK(both.fp == 1);
  CHECK(both.prec == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("degenerate scoring conventions") {
  const Topology none = empty_topology(3);
  Topology some = none;
  some.a_edges(0, 2) = true;
  const TopologyScore empty_both = score_topology(none, none);
  CHECK(empty_both.tpr == 1.0);
  CHECK(empty_both.prec == 1.0);
  CHECK(empty_both.success);
  const TopologyScore missed = score_topology(none, some);
  CHECK(missed.tpr == 0.0);
  CHECK(missed.prec == 0.0);
  const TopologyScore spurious = score_topology(some, none);
  CHECK(spurious.tpr == 1.0);
  CHECK(spurious.prec == 0.0);
  CHECK_THROWS_AS(score_topology(empty_topology(2), none), Error);
}

TEST_CASE("score_topology is invariant under node relabeling") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Topology truth = random_topology(6, 3, 0.4, rng);
    const Topology inferred = random_topology(6, 3, 0.4, rng);
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (ScoreScope scope : {ScoreScope::OffDiagonalA, ScoreScope::AandB}) {
      const TopologyScore a = score_topology(inferred, truth, scope);
      const TopologyScore b = score_topology(relabel(inferred, perm), relabel(truth, perm), scope);
      CHECK(a.tp == b.tp);
      CHECK(a.fp == b.fp);
      CHECK(a.fn == b.fn);
      CHECK(a.success == b.success);
    }
  }
}

TEST_CASE("nrmse hand values") {
  CHECK(nrmse(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)) == 0.0);
  CHECK(nrmse(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)) == doctest::Approx(1.0));
  CHECK(nrmse(Eigen::Vector2d(2, 0), Eigen::Vector2d(2, 2)) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("nrmse errors") {
  try {
    nrmse(Eigen::Vector2d(1, 1), Eigen::Vector2d::Zero());
    FAIL("expected DegenerateTruth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateTruth);
  }
  CHECK_THROWS_AS(nrmse(Eigen::Vector3d(1, 1, 1), Eigen::Vector2d(1, 1)), Error);
}

TEST_CASE("nrmse is invariant under a shared permutation") {
  Rng rng(32);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd est(12), truth(12);
    for (int i = 0; i < 12; ++i) {
      est(i) = n(rng);
      truth(i) = n(rng);
    }
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(12);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 12, rng);
    CHECK(nrmse(perm * est, perm * truth) == doctest::Approx(nrmse(est, truth)).epsilon(1e-14));
  }
}

TEST_CASE("rank_curves hand sweeps") {
  const CurveScore perfect = rank_curves({{0.9, true}, {0.8, true}, {0.3, false}, {0.1, false}});
  CHECK(perfect.auroc == 1.0);
  CHECK(perfect.auprec == 1.0);

  const CurveScore single = rank_curves({{0.9, true}, {0.5, false}, {0.2, false}});
  CHECK(single.auroc == 1.0);
  CHECK(single.auprec == 1.0);

  // One negative above one positive: ROC (0,0) (1,0) (1,1), PR (0,0) (1,1/2).
  const CurveScore inverted = rank_curves({{0.9, false}, {0.1, true}});
  CHECK(inverted.auroc == 0.0);
  CHECK(inverted.auprec == doctest::Approx(0.25));

  // A tie between a positive and a negative is one step: ROC diagonal.
  const CurveScore tie = rank_curves({{0.5, true}, {0.5, false}});
  CHECK(tie.auroc == doctest::Approx(0.5));
  REQUIRE(tie.roc.size() == 2);
  REQUIRE(tie.pr.size() == 2);
  CHECK(tie.pr[0].x == 0.0);
  CHECK(tie.pr[0].y == doctest::Approx(0.5));
}

TEST_CASE("rank_curves degenerate truth conventions") {
  const CurveScore no_pos = rank_curves({{0.9, false}, {0.1, false}});
  CHECK(no_pos.auroc == 0.5);
  CHECK(no_pos.auprec == 0.0);
  const CurveScore no_neg = rank_curves({{0.9, true}, {0.1, true}});
  CHECK(no_neg.auroc == 1.0);
  CHECK(no_neg.auprec == 1.0);
}

TEST_CASE("auroc matches the Mann-Whitney statistic") {
  Rng rng(33);
  std::uniform_int_distribution<int> level(0, 9);
  std::bernoulli_distribution positive(0.3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ScoredEdge> edges(40);
    for (auto& e : edges) e = {level(rng) / 10.0, positive(rng)};
    edges[0].truth = true;
    edges[1].truth = false;
    const CurveScore cs = rank_curves(edges);
    CHECK(cs.auroc == doctest::Approx(mann_whitney(edges)).epsilon(1e-12));
    CHECK(cs.auprec >= 0.0);
    CHECK(cs.auprec <= 1.0);
    for (std::size_t k = 1; k < cs.roc.size(); ++k) {
      CHECK(cs.roc[k].x >= cs.roc[k - 1].x);
      CHECK(cs.roc[k].y >= cs.roc[k - 1].y);
    }
  }
}

TEST_CASE("random confidences give auroc near one half") {
  Rng rng(34);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredEdge> edges(10000);
  for (auto& e : edges) e = {u(rng), u(rng) < 0.5};
  CHECK(std::abs(rank_curves(edges).auroc - 0.5) <= 0.02);
}

TEST_CASE("curve areas are invariant under monotone transforms") {
  Rng rng(35);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ScoredEdge> edges(60);
    for (auto& e : edges) e = {std::round(20.0 * u(rng)) / 20.0, u(rng) < 0.4};
    edges[0].truth = true;
    edges[1].truth = false;
    std::vector<ScoredEdge> warped = edges;
    for (auto& e : warped) e.confidence = std::exp(3.0 * e.confidence) - 7.0;
    const CurveScore a = rank_curves(edges);
    const CurveScore b = rank_curves(warped);
    CHECK(a.auroc == doctest::Approx(b.auroc).epsilon(1e-14));
    CHECK(a.auprec == doctest::Approx(b.auprec).epsilon(1e-14));
  }
}

TEST_CASE("scored_edges skips self-loops and follows the scope") {
  Topology truth = empty_topology(3, 2);
  truth.a_edges(0, 1) = true;
  truth.b_edges(2, 1) = true;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(3, 3, 0.5);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Constant(3, 2, 0.25);
  const auto only_a = scored_edges(a, b, truth);
  CHECK(only_a.size() == 6);
  CHECK(std::count_if(only_a.begin(), only_a.end(), [](const ScoredEdge& e) { return e.truth; }) == 1);
  const auto with_b = scored_edges(a, b, truth, ScoreScope::AandB);
  CHECK(with_b.size() == 12);
  CHECK(with_b.back().confidence == 0.25);
  CHECK_THROWS_AS(scored_edges(Eigen::MatrixXd::Zero(2, 2), b, truth), Error);
}
