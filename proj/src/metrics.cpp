#include "gesbl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gesbl/errors.hpp"

namespace gesbl {

namespace {

void check_shapes(const Topology& a, const Topology& b) {
  require(a.a_edges.rows() == b.a_edges.rows() && a.a_edges.cols() == b.a_edges.cols() &&
              a.b_edges.rows() == b.b_edges.rows() && a.b_edges.cols() == b.b_edges.cols(),
          ErrorCode::DimensionMismatch, "score_topology: topology shapes differ");
  require(a.a_edges.rows() == a.a_edges.cols(), ErrorCode::DimensionMismatch,
          "score_topology: A adjacency must be square");
}

}  // namespace

TopologyScore score_topology(const Topology& inferred, const Topology& truth, ScoreScope scope) {
  check_shapes(inferred, truth);
  TopologyScore s;
  auto tally = [&](bool est, bool real) {
    if (est && real) ++s.tp;
    else if (est) ++s.fp;
    else if (real) ++s.fn;
  };
  const int p = truth.p();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j) tally(inferred.a_edges(i, j), truth.a_edges(i, j));
  if (scope == ScoreScope::AandB)
    for (int i = 0; i < truth.b_edges.rows(); ++i)
      for (int j = 0; j < truth.b_edges.cols(); ++j) tally(inferred.b_edges(i, j), truth.b_edges(i, j));

  s.tpr = s.tp + s.fn > 0 ? static_cast<double>(s.tp) / (s.tp + s.fn) : 1.0;
  if (s.tp + s.fp > 0) s.prec = static_cast<double>(s.tp) / (s.tp + s.fp);
  else s.prec = s.fn == 0 ? 1.0 : 0.0;
  s.success = s.fp == 0 && s.fn == 0;
  return s;
}

double nrmse(const Eigen::VectorXd& w_est, const Eigen::VectorXd& w_true) {
  require(w_est.size() == w_true.size(), ErrorCode::DimensionMismatch,
          "nrmse: vector lengths differ");
  const double l1 = w_true.lpNorm<1>();
  require(l1 > 0.0, ErrorCode::DegenerateTruth, "nrmse: true parameter vector is zero");
  const double n = static_cast<double>(w_true.size());
  return (w_est - w_true).norm() / (std::sqrt(n) * (l1 / n));
}

std::vector<ScoredEdge> scored_edges(const Eigen::MatrixXd& a_confidence,
                                     const Eigen::MatrixXd& b_confidence, const Topology& truth,
                                     ScoreScope scope) {
  require(a_confidence.rows() == truth.a_edges.rows() &&
              a_confidence.cols() == truth.a_edges.cols(),
          ErrorCode::DimensionMismatch, "scored_edges: A confidence shape");
  std::vector<ScoredEdge> out;
  for (int i = 0; i < a_confidence.rows(); ++i)
    for (int j = 0; j < a_confidence.cols(); ++j)
      if (i != j) out.push_back({a_confidence(i, j), truth.a_edges(i, j)});
  if (scope == ScoreScope::AandB) {
    require(b_confidence.rows() == truth.b_edges.rows() &&
                b_confidence.cols() == truth.b_edges.cols(),
            ErrorCode::DimensionMismatch, "scored_edges: B confidence shape");
    for (int i = 0; i < b_confidence.rows(); ++i)
      for (int j = 0; j < b_confidence.cols(); ++j)
        out.push_back({b_confidence(i, j), truth.b_edges(i, j)});
  }
  return out;
}

CurveScore rank_curves(const std::vector<ScoredEdge>& edges) {
  std::vector<ScoredEdge> sorted = edges;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredEdge& a, const ScoredEdge& b) { return a.confidence > b.confidence; });
  int pos = 0;
  for (const auto& e : sorted) pos += e.truth ? 1 : 0;
  const int neg = static_cast<int>(sorted.size()) - pos;

  CurveScore cs;
  const double inf = std::numeric_limits<double>::infinity();
  cs.roc.push_back({inf, 0.0, 0.0});
  int tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double thr = sorted[i].confidence;
    while (i < sorted.size() && sorted[i].confidence == thr) {
      if (sorted[i].truth) ++tp;
      else ++fp;
      ++i;
    }
    const double fpr = neg > 0 ? static_cast<double>(fp) / neg : 0.0;
    const double tpr = pos > 0 ? static_cast<double>(tp) / pos : 0.0;
    cs.roc.push_back({thr, fpr, tpr});
    const double prec = static_cast<double>(tp) / (tp + fp);
    if (cs.pr.empty()) cs.pr.push_back({thr, 0.0, prec});
    cs.pr.push_back({thr, tpr, prec});
  }

  if (pos == 0) {
    cs.auroc = 0.5;
    cs.auprec = 0.0;
    return cs;
  }
  if (neg == 0) {
    cs.auroc = 1.0;
    cs.auprec = 1.0;
    return cs;
  }
  for (std::size_t k = 1; k < cs.roc.size(); ++k)
    cs.auroc += (cs.roc[k].x - cs.roc[k - 1].x) * (cs.roc[k].y + cs.roc[k - 1].y) / 2.0;
  for (std::size_t k = 1; k < cs.pr.size(); ++k)
    cs.auprec += (cs.pr[k].x - cs.pr[k - 1].x) * (cs.pr[k].y + cs.pr[k - 1].y) / 2.0;
  return cs;
}

}  // namespace gesbl
