#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gesbl/arx_model.hpp"

namespace gesbl {

/// Links that count towards a score. Self-loops are never scored.
enum class ScoreScope { OffDiagonalA, AandB };

struct TopologyScore {
  double tpr = 0.0;
  double prec = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  bool success = false;
};

/// tpr is 1 when the truth has no links in scope; prec is 1 when nothing is
/// inferred and the truth is empty too, 0 when nothing is inferred otherwise.
TopologyScore score_topology(const Topology& inferred, const Topology& truth,
                             ScoreScope scope = ScoreScope::OffDiagonalA);

/// ||w_est - w_true||_2 / (sqrt(N) * ||w_true||_1 / N). Throws DegenerateTruth
/// for an all-zero truth.
double nrmse(const Eigen::VectorXd& w_est, const Eigen::VectorXd& w_true);

struct ScoredEdge {
  double confidence = 0.0;
  bool truth = false;
};

/// Candidate edges in scope, row-major over A then B.
std::vector<ScoredEdge> scored_edges(const Eigen::MatrixXd& a_confidence,
                                     const Eigen::MatrixXd& b_confidence, const Topology& truth,
                                     ScoreScope scope = ScoreScope::OffDiagonalA);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;  // fpr (ROC) or recall (PR)
  double y = 0.0;  // tpr (ROC) or precision (PR)
};

struct CurveScore {
  double auroc = 0.0;
  double auprec = 0.0;
  std::vector<CurvePoint> roc;
  std::vector<CurvePoint> pr;
};

/// Threshold sweep over distinct confidences, trapezoidal areas. Equal
/// confidences form one step. The PR curve starts at recall 0 with the
/// precision of the top group. Without positives auroc is 0.5 and auprec 0;
/// without negatives both are 1.
CurveScore rank_curves(const std::vector<ScoredEdge>& edges);

}  // namespace gesbl
