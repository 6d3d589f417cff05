#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "gesbl/arx_model.hpp"
#include "gesbl/errors.hpp"

using namespace gesbl;

namespace {

// Schur-Cohn step-down: 1 + c_1 z^-1 + ... + c_n z^-n has all roots strictly
// inside the unit circle iff every reflection coefficient has modulus < 1.
bool schur_cohn_stable(std::vector<double> a) {
  a.insert(a.begin(), 1.0);
  for (int m = static_cast<int>(a.size()) - 1; m >= 1; --m) {
    const double k = a[m];
    if (std::abs(k) >= 1.0) return false;
    std::vector<double> next(m);
    for (int i = 0; i < m; ++i) next[i] = (a[i] - k * a[m - i]) / (1.0 - k * k);
    a = std::move(next);
  }
  return true;
}

// Roots of z^n + c_1 z^(n-1) + ... + c_n from the scalar companion matrix.
Eigen::VectorXcd poly_roots(const std::vector<double>& c) {
  const int n = static_cast<int>(c.size());
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) comp(0, i) = -c[i];
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  return comp.eigenvalues();
}

// Largest pole modulus of A(z^-1), built independently of companion_matrix:
// the state stacks y(t-1) .. y(t-na).
double pole_radius(const ArxNetwork& net) {
  const int p = net.p;
  const int na = net.order_a;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p * na, p * na);
  for (int l = 0; l < na; ++l)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) m(i, l * p + j) = -net.a_coeffs(i, j, l);
  for (int r = p; r < p * na; ++r) m(r, r - p) = 1.0;
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

// Draws until the generator succeeds; budget failures are part of its contract.
ArxNetwork next_random_network(const RandomNetworkOptions& opts, Rng& rng) {
  for (;;) {
    try {
      return gen_random_network(opts, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GenerationBudgetExceeded) throw;
    }
  }
}

ArxNetwork scalar_ar(double a1) {
  ArxNetwork net(2, 0, 1, 1);
  net.a_coeffs(0, 0, 0) = a1;
  net.a_coeffs(1, 1, 0) = a1;
  return net;
}

}  // namespace

TEST_CASE("gen_stable_poly keeps roots inside the cap") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = gen_stable_poly(1, rng);
    REQUIRE(c.size() == 1);
    CHECK(std::abs(c[0]) <= kRootCap);
  }
  Rng seven(7);
  const auto c5 = gen_stable_poly(5, seven);
  REQUIRE(c5.size() == 5);
  const Eigen::VectorXcd roots = poly_roots(c5);
  for (int i = 0; i < roots.size(); ++i) CHECK(std::abs(roots(i)) < 1.0);
  CHECK(schur_cohn_stable(c5));
}

TEST_CASE("gen_stable_poly rejects order zero") {
  Rng rng(1);
  CHECK_THROWS_AS(gen_stable_poly(0, rng), Error);
}

TEST_CASE("is_stable on diagonal examples") {
  CHECK(is_stable(scalar_ar(-0.5)));
  CHECK_FALSE(is_stable(scalar_ar(-1.1)));
  CHECK(spectral_radius(scalar_ar(-0.5)) == doctest::Approx(0.5));
}

TEST_CASE("is_stable agrees with Schur-Cohn on scalar polynomials") {
  Rng rng(11);
  std::uniform_real_distribution<double> coef(-1.6, 1.6);
  std::uniform_int_distribution<int> order(1, 4);
  int stable = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = order(rng);
    ArxNetwork net(1, 0, n, 1);
    std::vector<double> c(n);
    for (int l = 0; l < n; ++l) net.a_coeffs(0, 0, l) = c[l] = coef(rng);
    const bool oracle = schur_cohn_stable(c);
    stable += oracle;
    CHECK(is_stable(net) == oracle);
  }
  CHECK(stable > 20);
  CHECK(stable < 180);
}

TEST_CASE("random networks are stable, cyclic and have a diagonal B") {
  RandomNetworkOptions opts;
  opts.p = 5;
  opts.m = 5;
  Rng rng(1);
  const ArxNetwork net = gen_random_network(opts, rng);
  CHECK(pole_radius(net) < 1.0);
  CHECK(is_stable(net));
  const Topology topo = net.topology();
  CHECK(has_directed_cycle(topo.a_edges));
  for (int i = 0; i < 5; ++i) {
    CHECK(topo.a_edges(i, i));
    for (int j = 0; j < 5; ++j) CHECK(topo.b_edges(i, j) == (i == j));
  }
}

TEST_CASE("random networks average about 36 of 90 links at edge_prob 0.4") {
  RandomNetworkOptions opts;
  Rng rng(3);
  double total = 0.0;
  const int nets = 40;
  for (int i = 0; i < nets; ++i) {
    const ArxNetwork net = next_random_network(opts, rng);
    CHECK(pole_radius(net) < 1.0);
    total += net.topology().link_count();
  }
  const double mean = total / nets;
  CHECK(mean > 30.0);
  CHECK(mean < 42.0);
}

TEST_CASE("near-empty edge probability exhausts the generation budget") {
  RandomNetworkOptions opts;
  opts.p = 4;
  opts.m = 4;
  opts.edge_prob = 1e-12;
  opts.max_attempts = 20;
  Rng rng(5);
  try {
    gen_random_network(opts, rng);
    FAIL("expected GenerationBudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GenerationBudgetExceeded);
  }
}

TEST_CASE("ring networks") {
  RingNetworkOptions opts;
  Rng rng(3);
  const ArxNetwork ring = gen_ring_network(opts, rng);
  const Topology topo = ring.topology();
  CHECK(topo.link_count() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(topo.a_edges(i, i));
    CHECK(topo.a_edges((i + 1) % 10, i));
  }
  CHECK(ring.m == 1);
  CHECK(topo.b_edges.count() == 1);
  CHECK(topo.b_edges(0, 0));
  CHECK(pole_radius(ring) < 1.0);

  opts.p = 2;
  Rng rng2(9);
  const Topology two = gen_ring_network(opts, rng2).topology();
  CHECK(two.link_count() == 2);
  CHECK(two.a_edges(1, 0));
  CHECK(two.a_edges(0, 1));
}

TEST_CASE("generation is deterministic per seed") {
  RandomNetworkOptions opts;
  Rng a(42), b(42);
  const ArxNetwork n1 = next_random_network(opts, a);
  const ArxNetwork n2 = next_random_network(opts, b);
  CHECK(n1.a_coeffs == n2.a_coeffs);
  CHECK(n1.b_coeffs == n2.b_coeffs);
  const Eigen::MatrixXd u = gaussian_input(10, 50, 1.0, a);
  Rng s1(8), s2(8);
  ArxNetwork noisy = n1;
  noisy.noise_var.setConstant(0.1);
  CHECK(simulate(noisy, u, 50, s1).y == simulate(noisy, u, 50, s2).y);
}

TEST_CASE("simulate with zero input and no noise stays at zero") {
  RandomNetworkOptions opts;
  Rng rng(2);
  const ArxNetwork net = next_random_network(opts, rng);
  const TimeSeriesData d = simulate(net, Eigen::MatrixXd::Zero(10, 30), 30, rng);
  CHECK(d.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulate follows the hand recursion for a first-order loop") {
  ArxNetwork net(1, 1, 1, 1);
  net.a_coeffs(0, 0, 0) = -0.5;
  net.b_coeffs(0, 0, 0) = 1.0;
  Rng rng(0);
  const TimeSeriesData d = simulate(net, Eigen::MatrixXd::Ones(1, 6), 6, rng);
  double y = 0.0;
  for (int t = 0; t < 6; ++t) {
    CHECK(d.y(0, t) == doctest::Approx(y).epsilon(1e-15));
    y = 0.5 * y + 1.0;
  }
  CHECK(d.y(0, 3) == doctest::Approx(1.75));
}

TEST_CASE("simulate rejects mismatched inputs") {
  ArxNetwork net(1, 2, 1, 1);
  Rng rng(0);
  CHECK_THROWS_AS(simulate(net, Eigen::MatrixXd::Zero(1, 5), 5, rng), Error);
  CHECK_THROWS_AS(simulate(net, Eigen::MatrixXd::Zero(2, 3), 5, rng), Error);
}

TEST_CASE("noise_var_for_snr") {
  CHECK(noise_var_for_snr(1.0, 0.0) == doctest::Approx(1.0));
  CHECK(noise_var_for_snr(1.0, 20.0) == doctest::Approx(0.01));
  CHECK(noise_var_for_snr(4.0, 10.0) == doctest::Approx(0.4));
}

TEST_CASE("simulated noise matches the requested variance and SNR") {
  // A = I and B = z^-1 make the injected noise observable: e(t) = y(t) - u(t-1).
  ArxNetwork net(1, 1, 1, 1);
  net.b_coeffs(0, 0, 0) = 1.0;
  net.noise_var(0) = noise_var_for_snr(1.0, 20.0);
  Rng rng(17);
  const int t = 100000;
  const Eigen::MatrixXd u = gaussian_input(1, t, 1.0, rng);
  const TimeSeriesData d = simulate(net, u, t, rng);
  Eigen::VectorXd e(t - 1), uu(t - 1);
  for (int i = 1; i < t; ++i) {
    e(i - 1) = d.y(0, i) - u(0, i - 1);
    uu(i - 1) = u(0, i - 1);
  }
  auto var = [](const Eigen::VectorXd& v) { return (v.array() - v.mean()).square().sum() / (v.size() - 1); };
  CHECK(std::abs(var(e) / 0.01 - 1.0) < 0.05);
  const double snr = 10.0 * std::log10(var(uu) / var(e));
  CHECK(std::abs(snr - 20.0) < 1.0);
}

TEST_CASE("repressilator uses the published parameters") {
  const RepressilatorParams p;
  CHECK(p.delta == std::array<double, 6>{0.3, 0.4, 0.5, 0.2, 0.4, 0.6});
  CHECK(p.alpha == std::array<double, 3>{4.0, 3.0, 5.0});
  CHECK(p.beta == std::array<double, 3>{1.4, 1.5, 1.6});
  CHECK(p.hill == std::array<int, 3>{1, 2, 2});
}

TEST_CASE("repressilator first step and determinism") {
  Rng a(1), b(2);
  const TimeSeriesData d = simulate_repressilator(10, 0.0, 0.0, a);
  CHECK(d.y(0, 1) == doctest::Approx(4.0));
  CHECK(d.y(1, 1) == doctest::Approx(3.0));
  CHECK(d.y(2, 1) == doctest::Approx(5.0));
  CHECK(d.y(3, 1) == 0.0);
  CHECK(simulate_repressilator(10, 0.0, 0.0, b).y == d.y);
}

TEST_CASE("repressilator oscillates") {
  Rng rng(4);
  const TimeSeriesData d = simulate_repressilator(50, 1e-4, 0.01, rng);
  int maxima = 0;
  for (int t = 1; t + 1 < 50; ++t)
    if (d.y(0, t) > d.y(0, t - 1) && d.y(0, t) > d.y(0, t + 1)) ++maxima;
  CHECK(maxima >= 2);
}

TEST_CASE("repressilator topology") {
  const Topology topo = repressilator_topology();
  CHECK(topo.link_count() == 6);
  CHECK(topo.a_edges(0, 5));
  CHECK(topo.a_edges(1, 3));
  CHECK(topo.a_edges(2, 4));
  CHECK(topo.a_edges(3, 0));
  CHECK(topo.a_edges(4, 1));
  CHECK(topo.a_edges(5, 2));
  CHECK(topo.b_edges(0, 0));
  CHECK(topo.b_edges.count() == 1);
}
