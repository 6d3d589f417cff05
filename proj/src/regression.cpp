#include "gesbl/regression.hpp"

#include <cmath>
#include <sstream>

#include "gesbl/errors.hpp"

namespace gesbl {

void GroupStructure::add(int size, GroupLabel label) {
  require(size >= 1, ErrorCode::InvalidArgument, "group size must be positive");
  const int g = count();
  sizes_.push_back(size);
  labels_.push_back(label);
  offsets_.push_back(offsets_.back() + size);
  owner_.insert(owner_.end(), size, g);
}

void RegressionProblem::validate() const {
  require(phi.rows() == y.size(), ErrorCode::DimensionMismatch, "Phi rows must match y");
  require(groups.dim() == phi.cols(), ErrorCode::DimensionMismatch,
          "group sizes must sum to the number of columns");
  require(epsilon.size() == phi.cols(), ErrorCode::DimensionMismatch,
          "epsilon length must match the number of columns");
  require(y.size() >= 1, ErrorCode::InsufficientData, "regression has no rows");
}

namespace {

Eigen::VectorXd make_epsilon(int dim, const RegressionOptions& opts) {
  if (opts.epsilon == EpsilonPolicy::Zero || dim == 0) return Eigen::VectorXd::Zero(dim);
  return Eigen::VectorXd::Constant(dim, opts.epsilon_norm / std::sqrt(static_cast<double>(dim)));
}

}  // namespace

RegressionProblem build_arx_regression(const TimeSeriesData& data, int node, int k,
                                       const RegressionOptions& opts) {
  data.validate();
  const int p = data.p();
  const int m = data.m();
  const int t = data.t();
  require(node >= 0 && node < p, ErrorCode::InvalidArgument, "node index out of range");
  require(k >= 1, ErrorCode::InvalidArgument, "lag order must be >= 1");
  require(t - k >= 1, ErrorCode::InsufficientData, "need more samples than the lag order");

  const int rows = t - k;
  RegressionProblem prob;
  prob.node = node;
  prob.k = k;
  prob.lagged = true;
  prob.y.resize(rows);
  prob.phi.resize(rows, k * (p + m));
  for (int g = 0; g < p; ++g) prob.groups.add(k, {RegulatorKind::Node, g});
  for (int g = 0; g < m; ++g) prob.groups.add(k, {RegulatorKind::Input, g});

  // Row r <-> time index tau = t - 1 - r (0-based), newest first.
  for (int r = 0; r < rows; ++r) {
    const int tau = t - 1 - r;
    prob.y(r) = data.y(node, tau);
    for (int j = 0; j < k; ++j) {
      const int src = tau - k + j;
      for (int g = 0; g < p; ++g) prob.phi(r, g * k + j) = -data.y(g, src);
      for (int g = 0; g < m; ++g) prob.phi(r, (p + g) * k + j) = data.u(g, src);
    }
  }
  prob.epsilon = make_epsilon(prob.dim(), opts);
  return prob;
}

Eigen::VectorXd group_to_polynomial(const Eigen::VectorXd& group) {
  return group.reverse();
}

Eigen::VectorXd arx_true_weights(const ArxNetwork& net, int node, int k) {
  require(k >= net.order_a && k >= net.order_b, ErrorCode::InvalidArgument,
          "k must be at least the true polynomial orders");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k * (net.p + net.m));
  for (int g = 0; g < net.p; ++g)
    for (int l = 0; l < net.order_a; ++l) w(g * k + (k - 1 - l)) = net.a_coeffs(node, g, l);
  for (int g = 0; g < net.m; ++g)
    for (int l = 0; l < net.order_b; ++l) w((net.p + g) * k + (k - 1 - l)) = net.b_coeffs(node, g, l);
  return w;
}

double BasisFunction::operator()(double x) const {
  if (kind == BasisKind::Linear) return x;
  const double xp = std::max(x, 0.0);
  switch (kind) {
    case BasisKind::HillActivation: {
      const double v = std::pow(xp, param);
      return v / (1.0 + v);
    }
    case BasisKind::HillRepression: return 1.0 / (1.0 + std::pow(xp, param));
    case BasisKind::MmActivation: return xp / (xp + param);
    case BasisKind::MmRepression: return param / (xp + param);
    case BasisKind::Linear: break;
  }
  return x;
}

std::string BasisFunction::name() const {
  std::ostringstream os;
  switch (kind) {
    case BasisKind::Linear: return "linear";
    case BasisKind::HillActivation: os << "hill_act(" << param << ")"; break;
    case BasisKind::HillRepression: os << "hill_rep(" << param << ")"; break;
    case BasisKind::MmActivation: os << "mm_act(" << param << ")"; break;
    case BasisKind::MmRepression: os << "mm_rep(" << param << ")"; break;
  }
  return os.str();
}

BasisDictionary hill_dictionary(int max_hill) {
  require(max_hill >= 1, ErrorCode::InvalidArgument, "max_hill must be >= 1");
  BasisDictionary dict;
  dict.functions.push_back({BasisKind::Linear, 0.0});
  for (int n = 1; n <= max_hill; ++n) {
    dict.functions.push_back({BasisKind::HillActivation, static_cast<double>(n)});
    dict.functions.push_back({BasisKind::HillRepression, static_cast<double>(n)});
  }
  return dict;
}

BasisDictionary mm_dictionary(const std::vector<double>& k_grid) {
  require(!k_grid.empty(), ErrorCode::EmptyDictionary, "Michaelis-Menten grid is empty");
  BasisDictionary dict;
  dict.exclude_target = true;
  for (double kval : k_grid) {
    require(kval > 0.0, ErrorCode::InvalidArgument, "Michaelis constants must be positive");
    dict.functions.push_back({BasisKind::MmActivation, kval});
    dict.functions.push_back({BasisKind::MmRepression, kval});
  }
  return dict;
}

RegressionProblem build_narx_regression(const TimeSeriesData& data, int node,
                                        const BasisDictionary& dict, const NarxOptions& opts) {
  data.validate();
  const int p = data.p();
  const int t = data.t();
  const int lag = opts.lag;
  require(node >= 0 && node < p, ErrorCode::InvalidArgument, "node index out of range");
  require(lag >= 1, ErrorCode::InvalidArgument, "lag must be >= 1");
  require(!dict.functions.empty() || opts.include_linear_lags, ErrorCode::EmptyDictionary,
          "dictionary has no basis functions");
  require(t - lag >= 1, ErrorCode::InsufficientData, "need more samples than the lag");
  if (opts.known_input)
    require(*opts.known_input >= 0 && *opts.known_input < data.m(), ErrorCode::InvalidArgument,
            "known input index out of range");

  const int rows = t - lag;
  const int linear = opts.include_linear_lags ? lag : 0;
  const int per_group = linear + dict.size();

  RegressionProblem prob;
  prob.node = node;
  prob.k = lag;
  prob.lagged = false;
  std::vector<int> regulators;
  for (int g = 0; g < p; ++g) {
    if (dict.exclude_target && g == node) continue;
    regulators.push_back(g);
    prob.groups.add(per_group, {RegulatorKind::Node, g});
  }
  require(!regulators.empty(), ErrorCode::EmptyDictionary, "no regulators left for this node");
  if (opts.known_input) prob.groups.add(1, {RegulatorKind::Input, *opts.known_input});

  prob.y.resize(rows);
  prob.phi.resize(rows, prob.groups.dim());
  for (int r = 0; r < rows; ++r) {
    const int tau = t - 1 - r;
    prob.y(r) = data.y(node, tau);
    for (std::size_t gi = 0; gi < regulators.size(); ++gi) {
      const int g = regulators[gi];
      const int base = static_cast<int>(gi) * per_group;
      for (int l = 0; l < linear; ++l) prob.phi(r, base + l) = data.y(g, tau - 1 - l);
      const double x = data.y(g, tau - lag);
      for (int f = 0; f < dict.size(); ++f) prob.phi(r, base + linear + f) = dict.functions[f](x);
    }
    if (opts.known_input) prob.phi(r, prob.groups.dim() - 1) = data.u(*opts.known_input, tau - 1);
  }
  prob.epsilon = make_epsilon(prob.dim(), opts.regression);
  return prob;
}

Eigen::VectorXd repressilator_true_weights(int node, int max_hill, const RepressilatorParams& params) {
  require(node >= 0 && node < 6, ErrorCode::InvalidArgument, "repressilator has six nodes");
  const int per = 1 + 2 * max_hill;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(6 * per + 1);
  w(node * per) = 1.0 - params.delta[node];  // linear self term
  auto repression_slot = [&](int n) { return 2 * n; };  // hill_rep(n) position inside a group
  if (node < 3) {
    const int repressor = node == 0 ? 5 : (node == 1 ? 3 : 4);
    const int n = params.hill[node];
    require(n <= max_hill, ErrorCode::InvalidArgument, "dictionary lacks the true Hill order");
    w(repressor * per + repression_slot(n)) = params.alpha[node];
  } else {
    w((node - 3) * per) = params.beta[node - 3];
  }
  if (node == 0) w(6 * per) = 1.0;
  return w;
}

Eigen::VectorXd normalize_columns(RegressionProblem& prob) {
  Eigen::VectorXd scale(prob.dim());
  for (int q = 0; q < prob.dim(); ++q) {
    const double norm = prob.phi.col(q).norm();
    scale(q) = norm > 0.0 ? 1.0 / norm : 1.0;
    prob.phi.col(q) *= scale(q);
    prob.epsilon(q) /= scale(q);
  }
  return scale;
}

}  // namespace gesbl
