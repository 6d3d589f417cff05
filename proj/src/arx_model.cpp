#include "gesbl/arx_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "gesbl/errors.hpp"

namespace gesbl {

Eigen::MatrixXd CoeffTensor::lag_matrix(int lag) const {
  Eigen::MatrixXd out(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) out(i, j) = (*this)(i, j, lag - 1);
  return out;
}

bool CoeffTensor::nonzero(int i, int j, double tol) const {
  for (int l = 0; l < depth_; ++l)
    if (std::abs((*this)(i, j, l)) > tol) return true;
  return false;
}

int Topology::link_count() const {
  int n = 0;
  for (int i = 0; i < a_edges.rows(); ++i)
    for (int j = 0; j < a_edges.cols(); ++j)
      if (i != j && a_edges(i, j)) ++n;
  return n;
}

ArxNetwork::ArxNetwork(int p_, int m_, int order_a_, int order_b_)
    : p(p_), m(m_), order_a(order_a_), order_b(order_b_),
      a_coeffs(p_, p_, order_a_), b_coeffs(p_, m_, order_b_),
      noise_var(Eigen::VectorXd::Zero(p_)) {}

void ArxNetwork::validate() const {
  require(p >= 1 && m >= 0 && order_a >= 1 && order_b >= 1, ErrorCode::InvalidArgument,
          "network dimensions must satisfy p >= 1, m >= 0, orders >= 1");
  require(a_coeffs.rows() == p && a_coeffs.cols() == p && a_coeffs.depth() == order_a,
          ErrorCode::DimensionMismatch, "a_coeffs shape does not match p x p x order_a");
  require(b_coeffs.rows() == p && b_coeffs.cols() == m && b_coeffs.depth() == order_b,
          ErrorCode::DimensionMismatch, "b_coeffs shape does not match p x m x order_b");
  require(noise_var.size() == p, ErrorCode::DimensionMismatch, "noise_var must have p entries");
  for (int i = 0; i < p; ++i) {
    require(std::isfinite(noise_var(i)) && noise_var(i) >= 0.0, ErrorCode::InvalidArgument,
            "noise variances must be finite and nonnegative");
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < order_a; ++l)
        require(std::isfinite(a_coeffs(i, j, l)), ErrorCode::InvalidArgument,
                "non-finite A coefficient");
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < order_b; ++l)
        require(std::isfinite(b_coeffs(i, j, l)), ErrorCode::InvalidArgument,
                "non-finite B coefficient");
  }
}

Topology ArxNetwork::topology(double tol) const {
  Topology topo;
  topo.a_edges.resize(p, p);
  topo.b_edges.resize(p, m);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) topo.a_edges(i, j) = a_coeffs.nonzero(i, j, tol);
    for (int j = 0; j < m; ++j) topo.b_edges(i, j) = b_coeffs.nonzero(i, j, tol);
  }
  return topo;
}

void TimeSeriesData::validate() const {
  require(t() > 0, ErrorCode::InsufficientData, "time series must contain at least one sample");
  require(u.rows() == 0 || u.cols() == y.cols(), ErrorCode::DimensionMismatch,
          "inputs and outputs must have the same number of samples");
  require(y.allFinite() && u.allFinite(), ErrorCode::InvalidArgument,
          "time series contains non-finite values");
}

std::vector<double> gen_stable_poly(int order, Rng& rng, double root_cap) {
  require(order >= 1, ErrorCode::InvalidArgument, "polynomial order must be >= 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  std::vector<std::complex<double>> poly{1.0};  // highest power first
  auto multiply = [&poly](std::complex<double> root) {
    std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] -= root * poly[i];
    }
    poly = std::move(next);
  };

  int remaining = order;
  while (remaining > 0) {
    if (remaining >= 2 && coin(rng)) {
      const double radius = root_cap * std::sqrt(unit(rng));
      const double angle = std::numbers::pi * unit(rng);
      const auto root = std::polar(radius, angle);
      multiply(root);
      multiply(std::conj(root));
      remaining -= 2;
    } else {
      multiply(root_cap * (2.0 * unit(rng) - 1.0));
      remaining -= 1;
    }
  }

  std::vector<double> coeffs(order);
  for (int i = 0; i < order; ++i) coeffs[i] = poly[i + 1].real();
  return coeffs;
}

namespace {

int draw_order(const OrderRange& range, Rng& rng) {
  std::uniform_int_distribution<int> dist(range.min, range.max);
  return dist(rng);
}

void check_orders(const OrderRange& range) {
  require(range.min >= 1 && range.max >= range.min, ErrorCode::InvalidArgument,
          "order range must satisfy 1 <= min <= max");
}

void fill_stable_entry(ArxNetwork& net, int i, int j, const OrderRange& range, double gain,
                       Rng& rng) {
  const auto coeffs = gen_stable_poly(draw_order(range, rng), rng);
  for (std::size_t l = 0; l < coeffs.size(); ++l) net.a_coeffs(i, j, static_cast<int>(l)) = gain * coeffs[l];
}

void fill_gaussian_b(ArxNetwork& net, int i, int j, const OrderRange& range, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int order = draw_order(range, rng);
  for (int l = 0; l < order; ++l) net.b_coeffs(i, j, l) = normal(rng);
}

}  // namespace

ArxNetwork gen_random_network(const RandomNetworkOptions& opts, Rng& rng) {
  require(opts.p >= 1 && opts.m >= 0, ErrorCode::InvalidArgument, "p >= 1 and m >= 0 required");
  require(opts.edge_prob > 0.0 && opts.edge_prob < 1.0, ErrorCode::InvalidArgument,
          "edge_prob must lie in (0, 1)");
  check_orders(opts.orders);
  std::bernoulli_distribution edge(opts.edge_prob);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    ArxNetwork net(opts.p, opts.m, opts.orders.max, opts.orders.max);
    for (int i = 0; i < opts.p; ++i) {
      for (int j = 0; j < opts.p; ++j) {
        if (i == j) {
          fill_stable_entry(net, i, i, opts.orders, 1.0, rng);
        } else if (edge(rng)) {
          fill_stable_entry(net, i, j, opts.orders, normal(rng), rng);
        }
      }
    }
    if (!has_directed_cycle(net.topology().a_edges) || !is_stable(net)) continue;
    for (int i = 0; i < std::min(opts.p, opts.m); ++i) fill_gaussian_b(net, i, i, opts.orders, rng);
    net.noise_var.setConstant(opts.noise_var);
    return net;
  }
  fail(ErrorCode::GenerationBudgetExceeded,
       "no stable random network with a feedback loop after " +
           std::to_string(opts.max_attempts) + " attempts");
}

ArxNetwork gen_ring_network(const RingNetworkOptions& opts, Rng& rng) {
  require(opts.p >= 2, ErrorCode::InvalidArgument, "a ring needs at least two nodes");
  check_orders(opts.orders);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    ArxNetwork net(opts.p, 1, opts.orders.max, opts.orders.max);
    for (int i = 0; i < opts.p; ++i) fill_stable_entry(net, i, i, opts.orders, 1.0, rng);
    for (int j = 0; j < opts.p; ++j) {
      // Link j -> j+1 lives in row j+1, column j.
      fill_stable_entry(net, (j + 1) % opts.p, j, opts.orders, normal(rng), rng);
    }
    if (!is_stable(net)) continue;
    fill_gaussian_b(net, 0, 0, opts.orders, rng);
    net.noise_var.setConstant(opts.noise_var);
    return net;
  }
  fail(ErrorCode::GenerationBudgetExceeded,
       "no stable ring network after " + std::to_string(opts.max_attempts) + " attempts");
}

Eigen::MatrixXd companion_matrix(const ArxNetwork& net) {
  const int p = net.p;
  const int n = net.order_a;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p * n, p * n);
  for (int l = 1; l <= n; ++l) c.block(0, (l - 1) * p, p, p) = -net.a_coeffs.lag_matrix(l);
  if (n > 1) c.block(p, 0, p * (n - 1), p * (n - 1)).setIdentity();
  return c;
}

double spectral_radius(const ArxNetwork& net) {
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion_matrix(net), false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stable(const ArxNetwork& net) { return spectral_radius(net) < 1.0; }

bool has_directed_cycle(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adj) {
  // Edge j -> i when adj(i, j). Iterative three-colour DFS.
  const int n = static_cast<int>(adj.rows());
  std::vector<int> colour(n, 0);
  std::vector<std::pair<int, int>> stack;
  for (int root = 0; root < n; ++root) {
    if (colour[root] != 0) continue;
    stack.emplace_back(root, 0);
    colour[root] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next == n) {
        colour[node] = 2;
        stack.pop_back();
        continue;
      }
      const int target = next++;
      if (target == node || !adj(target, node)) continue;
      if (colour[target] == 1) return true;
      if (colour[target] == 0) {
        colour[target] = 1;
        stack.emplace_back(target, 0);
      }
    }
  }
  return false;
}

double noise_var_for_snr(double u_var, double snr_db) {
  require(u_var > 0.0, ErrorCode::InvalidArgument, "input variance must be positive");
  return u_var * std::pow(10.0, -snr_db / 10.0);
}

TimeSeriesData simulate(const ArxNetwork& net, const Eigen::MatrixXd& u, int t, Rng& rng) {
  net.validate();
  require(t > 0, ErrorCode::InvalidArgument, "sample count must be positive");
  require(u.rows() == net.m, ErrorCode::DimensionMismatch, "input rows must equal m");
  require(u.cols() >= t, ErrorCode::DimensionMismatch, "input has fewer than t samples");

  std::vector<Eigen::MatrixXd> a_lags, b_lags;
  for (int l = 1; l <= net.order_a; ++l) a_lags.push_back(net.a_coeffs.lag_matrix(l));
  for (int l = 1; l <= net.order_b; ++l) b_lags.push_back(net.b_coeffs.lag_matrix(l));
  const Eigen::VectorXd noise_sd = net.noise_var.cwiseSqrt();
  std::normal_distribution<double> normal(0.0, 1.0);

  TimeSeriesData data;
  data.y = Eigen::MatrixXd::Zero(net.p, t);
  data.u = u.leftCols(t);
  for (int tau = 0; tau < t; ++tau) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(net.p);
    for (int l = 1; l <= net.order_a && tau - l >= 0; ++l) next.noalias() -= a_lags[l - 1] * data.y.col(tau - l);
    for (int l = 1; l <= net.order_b && tau - l >= 0; ++l) next.noalias() += b_lags[l - 1] * u.col(tau - l);
    for (int i = 0; i < net.p; ++i) next(i) += noise_sd(i) * normal(rng);
    data.y.col(tau) = next;
  }
  return data;
}

Eigen::MatrixXd gaussian_input(int m, int t, double variance, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  Eigen::MatrixXd u(m, t);
  // Column-major fill order is part of the reproducibility contract.
  for (int tau = 0; tau < t; ++tau)
    for (int i = 0; i < m; ++i) u(i, tau) = normal(rng);
  return u;
}

TimeSeriesData simulate_repressilator(int t, double noise_var, double u_amplitude, Rng& rng,
                                      const RepressilatorParams& params) {
  require(t >= 2, ErrorCode::InvalidArgument, "repressilator needs t >= 2");
  require(noise_var >= 0.0, ErrorCode::InvalidArgument, "noise variance must be nonnegative");
  std::normal_distribution<double> normal(0.0, std::sqrt(noise_var));
  auto repress = [](double x, int n) { return 1.0 / (1.0 + std::pow(std::max(x, 0.0), n)); };

  TimeSeriesData data;
  data.y = Eigen::MatrixXd::Zero(6, t);
  data.u = Eigen::MatrixXd::Constant(1, t, u_amplitude);
  data.u(0, 0) = 0.0;  // the step switches on at sample 1
  for (int k = 0; k + 1 < t; ++k) {
    const auto x = data.y.col(k);
    Eigen::Matrix<double, 6, 1> next;
    // mRNA i is repressed by the protein of gene (i + 2) mod 3.
    next(0) = (1 - params.delta[0]) * x(0) + params.alpha[0] * repress(x(5), params.hill[0]) + data.u(0, k);
    next(1) = (1 - params.delta[1]) * x(1) + params.alpha[1] * repress(x(3), params.hill[1]);
    next(2) = (1 - params.delta[2]) * x(2) + params.alpha[2] * repress(x(4), params.hill[2]);
    next(3) = (1 - params.delta[3]) * x(3) + params.beta[0] * x(0);
    next(4) = (1 - params.delta[4]) * x(4) + params.beta[1] * x(1);
    next(5) = (1 - params.delta[5]) * x(5) + params.beta[2] * x(2);
    if (noise_var > 0.0)
      for (int i = 0; i < 6; ++i) next(i) += normal(rng);
    data.y.col(k + 1) = next;
  }
  return data;
}

Topology repressilator_topology() {
  Topology topo;
  topo.a_edges = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(6, 6, false);
  topo.b_edges = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(6, 1, false);
  for (int i = 0; i < 6; ++i) topo.a_edges(i, i) = true;
  topo.a_edges(0, 5) = true;  // x6 -| x1
  topo.a_edges(1, 3) = true;  // x4 -| x2
  topo.a_edges(2, 4) = true;  // x5 -| x3
  topo.a_edges(3, 0) = true;  // x1 -> x4
  topo.a_edges(4, 1) = true;  // x2 -> x5
  topo.a_edges(5, 2) = true;  // x3 -> x6
  topo.b_edges(0, 0) = true;
  return topo;
}

}  // namespace gesbl
