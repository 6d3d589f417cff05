#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gesbl/arx_model.hpp"

namespace gesbl {

enum class RegulatorKind { Node, Input };

/// Which signal a coefficient group describes.
struct GroupLabel {
  RegulatorKind kind = RegulatorKind::Node;
  int index = 0;  // 0-based node or input index

  bool operator==(const GroupLabel&) const = default;
};

/// Contiguous partition of the coefficient vector into regulator groups.
class GroupStructure {
 public:
  GroupStructure() = default;
  void add(int size, GroupLabel label);

  int count() const { return static_cast<int>(sizes_.size()); }
  int dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int size(int g) const { return sizes_[g]; }
  int offset(int g) const { return offsets_[g]; }
  const GroupLabel& label(int g) const { return labels_[g]; }
  const std::vector<int>& sizes() const { return sizes_; }

  /// Group index of coefficient q.
  int group_of(int q) const { return owner_[q]; }

  template <class Vec>
  auto slice(Vec& w, int g) const {
    return w.segment(offsets_[g], sizes_[g]);
  }

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_{0};
  std::vector<GroupLabel> labels_;
  std::vector<int> owner_;
};

enum class EpsilonPolicy { Zero, Uniform };

struct RegressionOptions {
  EpsilonPolicy epsilon = EpsilonPolicy::Zero;
  double epsilon_norm = 1e-3;  // Uniform policy: ||epsilon||_2
};

/// Per-node linear regression y = Phi w + e with grouped coefficients.
struct RegressionProblem {
  Eigen::VectorXd y;
  Eigen::MatrixXd phi;
  GroupStructure groups;
  Eigen::VectorXd epsilon;
  int node = 0;
  int k = 1;
  /// Groups hold lag coefficients (linear ARX) rather than basis functions.
  bool lagged = true;

  int rows() const { return static_cast<int>(y.size()); }
  int dim() const { return static_cast<int>(phi.cols()); }
  void validate() const;
};

/// Row r targets y_node(t - r); block g <= p holds the negated lagged outputs
/// of node g and block p < g holds lagged inputs. Column j of every block is
/// the lag-(k - j) regressor, so coefficient j multiplies z^-(k - j).
RegressionProblem build_arx_regression(const TimeSeriesData& data, int node, int k,
                                       const RegressionOptions& opts = {});

/// Map a lag-ordered coefficient group (length k) back to polynomial
/// coefficients of z^-1 .. z^-k.
Eigen::VectorXd group_to_polynomial(const Eigen::VectorXd& group);
/// True coefficient vector of one node in the k-lag parametrization.
Eigen::VectorXd arx_true_weights(const ArxNetwork& net, int node, int k);

enum class BasisKind { Linear, HillActivation, HillRepression, MmActivation, MmRepression };

struct BasisFunction {
  BasisKind kind = BasisKind::Linear;
  double param = 0.0;  // Hill coefficient n or Michaelis constant K

  /// Non-linear kinds are evaluated at max(x, 0).
  double operator()(double x) const;
  std::string name() const;
  bool operator==(const BasisFunction&) const = default;
};

/// Basis functions applied to every regulator.
struct BasisDictionary {
  std::vector<BasisFunction> functions;
  /// Skip the target node as a regulator (grey-box models without self terms).
  bool exclude_target = false;

  int size() const { return static_cast<int>(functions.size()); }
};

/// x, then x^n/(1+x^n), 1/(1+x^n) for n = 1..max_hill.
BasisDictionary hill_dictionary(int max_hill);
/// x/(x+K), K/(x+K) for each K in the grid; self-regulation excluded.
BasisDictionary mm_dictionary(const std::vector<double>& k_grid);

struct NarxOptions {
  int lag = 1;
  bool include_linear_lags = false;
  std::optional<int> known_input;
  RegressionOptions regression;
};

/// Basis functions of every regulator at lag `lag`; one group per regulator.
/// With include_linear_lags each group is prefixed with the raw regulator at
/// lags 1..lag. A known input adds a trailing size-1 group holding u(t - 1).
RegressionProblem build_narx_regression(const TimeSeriesData& data, int node,
                                        const BasisDictionary& dict, const NarxOptions& opts = {});

/// Coefficients of the repressilator in the hill_dictionary(max_hill)
/// parametrization with one trailing input group, for node `node`.
Eigen::VectorXd repressilator_true_weights(int node, int max_hill,
                                           const RepressilatorParams& params = {});

/// Unit-l2 column scaling. Returns the scales so that w_original = scale .* w_scaled.
Eigen::VectorXd normalize_columns(RegressionProblem& prob);

}  // namespace gesbl
