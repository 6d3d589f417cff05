#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <vector>

#include "gesbl/random.hpp"

namespace gesbl {

/// Dense rows x cols x depth tensor of polynomial coefficients, row-major.
/// Entry (i, j, l) is the coefficient of z^-(l+1) in polynomial (i, j).
class CoeffTensor {
 public:
  CoeffTensor() = default;
  CoeffTensor(int rows, int cols, int depth)
      : rows_(rows), cols_(cols), depth_(depth),
        data_(static_cast<std::size_t>(rows) * cols * depth, 0.0) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int depth() const noexcept { return depth_; }

  double& operator()(int i, int j, int l) { return data_[index(i, j, l)]; }
  double operator()(int i, int j, int l) const { return data_[index(i, j, l)]; }

  /// Coefficient matrix of z^-(lag), lag in [1, depth].
  Eigen::MatrixXd lag_matrix(int lag) const;

  /// True if polynomial (i, j) has any coefficient with |c| > tol.
  bool nonzero(int i, int j, double tol = 0.0) const;

  bool operator==(const CoeffTensor&) const = default;

 private:
  std::size_t index(int i, int j, int l) const {
    return (static_cast<std::size_t>(i) * cols_ + j) * depth_ + l;
  }

  int rows_ = 0;
  int cols_ = 0;
  int depth_ = 0;
  std::vector<double> data_;
};

/// Boolean network structure. a_edges(i, j) means node j regulates node i.
struct Topology {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> a_edges;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> b_edges;

  int p() const { return static_cast<int>(a_edges.rows()); }
  int m() const { return static_cast<int>(b_edges.cols()); }
  /// Off-diagonal A edges.
  int link_count() const;
};

/// A(z^-1) Y(t) = B(z^-1) U(t) + E(t) with
/// A = I + A_1 z^-1 + ... + A_na z^-na and B = B_1 z^-1 + ... + B_nb z^-nb.
struct ArxNetwork {
  int p = 0;
  int m = 0;
  int order_a = 1;
  int order_b = 1;
  CoeffTensor a_coeffs;  // p x p x order_a
  CoeffTensor b_coeffs;  // p x m x order_b
  Eigen::VectorXd noise_var;

  ArxNetwork() = default;
  ArxNetwork(int p, int m, int order_a, int order_b);

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
  Topology topology(double tol = 0.0) const;
};

struct TimeSeriesData {
  Eigen::MatrixXd y;  // p x t
  Eigen::MatrixXd u;  // m x t

  int p() const { return static_cast<int>(y.rows()); }
  int m() const { return static_cast<int>(u.rows()); }
  int t() const { return static_cast<int>(y.cols()); }

  void validate() const;
};

inline constexpr double kRootCap = 0.95;
inline constexpr int kMaxGenerationAttempts = 1000;

/// Non-leading coefficients c_1..c_order of the monic polynomial
/// 1 + c_1 z^-1 + ... + c_order z^-order whose roots are drawn uniformly in
/// the complex disk of radius root_cap (complex roots come in conjugate pairs).
std::vector<double> gen_stable_poly(int order, Rng& rng, double root_cap = kRootCap);

struct OrderRange {
  int min = 1;
  int max = 5;
};

struct RandomNetworkOptions {
  int p = 10;
  int m = 10;
  double edge_prob = 0.4;
  OrderRange orders;
  double noise_var = 0.0;
  int max_attempts = kMaxGenerationAttempts;
};

/// Random sparse stable network with self-loops on every node, diagonal B and
/// at least one directed cycle among the off-diagonal links.
ArxNetwork gen_random_network(const RandomNetworkOptions& opts, Rng& rng);

struct RingNetworkOptions {
  int p = 10;
  OrderRange orders;
  double noise_var = 0.0;
  int max_attempts = kMaxGenerationAttempts;
};

/// Ring 1 -> 2 -> ... -> p -> 1 with self-loops and one input entering node 1.
ArxNetwork gen_ring_network(const RingNetworkOptions& opts, Rng& rng);

/// Block-companion matrix of A(z^-1), size (p * order_a) square.
Eigen::MatrixXd companion_matrix(const ArxNetwork& net);
double spectral_radius(const ArxNetwork& net);
bool is_stable(const ArxNetwork& net);

/// Directed cycle among off-diagonal edges of the A graph (self-loops ignored).
bool has_directed_cycle(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adj);

/// sigma_e^2 = sigma_u^2 * 10^(-snr_db / 10).
double noise_var_for_snr(double u_var, double snr_db);

/// Zero initial state; E(t) ~ N(0, diag(noise_var)). u must have m rows and at
/// least t columns; only the first t columns are used.
TimeSeriesData simulate(const ArxNetwork& net, const Eigen::MatrixXd& u, int t, Rng& rng);

/// m x t matrix of i.i.d. N(0, variance) samples.
Eigen::MatrixXd gaussian_input(int m, int t, double variance, Rng& rng);

struct RepressilatorParams {
  std::array<double, 6> delta{0.3, 0.4, 0.5, 0.2, 0.4, 0.6};
  std::array<double, 3> alpha{4.0, 3.0, 5.0};
  std::array<double, 3> beta{1.4, 1.5, 1.6};
  std::array<int, 3> hill{1, 2, 2};
};

/// Six-state discrete repressilator (mRNA x1..x3, proteins x4..x6) started
/// from zero, with a step input of the given amplitude entering x1 and
/// additive N(0, noise_var) noise on every state. The Hill terms see
/// max(x, 0) so that noisy negative concentrations stay finite.
TimeSeriesData simulate_repressilator(int t, double noise_var, double u_amplitude, Rng& rng,
                                      const RepressilatorParams& params = {});

/// Regulation graph of the repressilator, self-loops included on the diagonal,
/// and the single input edge into x1.
Topology repressilator_topology();

}  // namespace gesbl
