#include "gesbl/sbl.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gesbl/errors.hpp"

namespace gesbl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Quantities derived from one factorization of lambda I + Phi P Phi^T.
struct Evidence {
  std::vector<int> active;
  Eigen::VectorXd p;           // prior variances of active coefficients
  Eigen::VectorXd mu;          // D
  Eigen::VectorXd sigma_diag;  // D
  Eigen::MatrixXd sigma;       // |A| x |A|, only when requested
  Eigen::VectorXd d;           // D, diag(Phi^T C^-1 Phi), only when requested
  double log_det_c = 0.0;
  double trace_c_inv = 0.0;
};

struct EvidenceRequest {
  bool sigma = false;
  bool d = false;
};

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

// Linear term of the posterior: Phi^T y / lambda + B^-1 eps on active entries.
Eigen::VectorXd posterior_rhs(const RegressionProblem& prob, const Hyperparameters& hyper,
                              const std::vector<int>& active, const Eigen::MatrixXd& phi_a) {
  Eigen::VectorXd b = phi_a.transpose() * prob.y / hyper.lambda;
  if (hyper.uses_beta()) {
    for (std::size_t i = 0; i < active.size(); ++i) {
      const int q = active[i];
      if (prob.epsilon(q) != 0.0 && hyper.beta(q) > 0.0) b(static_cast<Eigen::Index>(i)) += prob.epsilon(q) / hyper.beta(q);
    }
  }
  return b;
}

Evidence compute_evidence(const RegressionProblem& prob, const Hyperparameters& hyper,
                          PosteriorPath path, EvidenceRequest req) {
  const int n = prob.rows();
  const int dim = prob.dim();
  require(hyper.lambda > 0.0 && std::isfinite(hyper.lambda), ErrorCode::InvalidArgument,
          "noise variance must be positive");

  Evidence ev;
  for (int q = 0; q < dim; ++q) {
    const double pv = hyper.prior_variance(prob.groups, q);
    if (pv > 0.0) {
      ev.active.push_back(q);
    }
  }
  const int na = static_cast<int>(ev.active.size());
  ev.p.resize(na);
  for (int i = 0; i < na; ++i) ev.p(i) = hyper.prior_variance(prob.groups, ev.active[i]);
  ev.mu = Eigen::VectorXd::Zero(dim);
  ev.sigma_diag = Eigen::VectorXd::Zero(dim);
  const double lambda = hyper.lambda;

  if (path == PosteriorPath::Auto) path = na <= n ? PosteriorPath::Direct : PosteriorPath::Woodbury;
  const Eigen::MatrixXd phi_a = columns(prob.phi, ev.active);
  const Eigen::VectorXd b = posterior_rhs(prob, hyper, ev.active, phi_a);

  if (path == PosteriorPath::Direct) {
    // M = I + S Phi_A^T Phi_A S / lambda with S = diag(sqrt(p)); Sigma_A = S M^-1 S.
    const Eigen::VectorXd s = ev.p.cwiseSqrt();
    const Eigen::MatrixXd ga = phi_a.transpose() * phi_a;
    Eigen::MatrixXd m = s.asDiagonal() * ga * s.asDiagonal() / lambda;
    m.diagonal().array() += 1.0;
    const Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) fail(ErrorCode::SingularSystem, "posterior system is not positive definite");
    const Eigen::MatrixXd m_inv = llt.solve(Eigen::MatrixXd::Identity(na, na));
    const Eigen::MatrixXd l = llt.matrixL();
    ev.log_det_c = n * std::log(lambda) + 2.0 * l.diagonal().array().log().sum();
    ev.trace_c_inv = (n - na + m_inv.trace()) / lambda;
    const Eigen::MatrixXd sigma = s.asDiagonal() * m_inv * s.asDiagonal();
    const Eigen::VectorXd mu_a = sigma * b;
    for (int i = 0; i < na; ++i) {
      ev.mu(ev.active[i]) = mu_a(i);
      ev.sigma_diag(ev.active[i]) = sigma(i, i);
    }
    if (req.sigma) ev.sigma = sigma;
    if (req.d) {
      // d_q = (||phi_q||^2 - ||L^-1 S Phi_A^T phi_q||^2 / lambda) / lambda, or
      // (1 - [M^-1]_qq) / p_q for strongly determined active entries.
      Eigen::MatrixXd w = s.asDiagonal() * (phi_a.transpose() * prob.phi);
      llt.matrixL().solveInPlace(w);
      ev.d.resize(dim);
      for (int q = 0; q < dim; ++q)
        ev.d(q) = (prob.phi.col(q).squaredNorm() - w.col(q).squaredNorm() / lambda) / lambda;
      for (int i = 0; i < na; ++i) {
        const int q = ev.active[i];
        if (ev.p(i) * ga(i, i) > lambda) ev.d(q) = (1.0 - m_inv(i, i)) / ev.p(i);
      }
      ev.d = ev.d.cwiseMax(0.0);
    }
  } else {
    Eigen::MatrixXd c = phi_a * ev.p.asDiagonal() * phi_a.transpose();
    c.diagonal().array() += lambda;
    const Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) fail(ErrorCode::SingularSystem, "lambda I + Phi P Phi^T is singular");
    const Eigen::MatrixXd l = llt.matrixL();
    ev.log_det_c = 2.0 * l.diagonal().array().log().sum();
    Eigen::MatrixXd l_inv = Eigen::MatrixXd::Identity(n, n);
    llt.matrixL().solveInPlace(l_inv);
    ev.trace_c_inv = l_inv.squaredNorm();
    Eigen::MatrixXd z = phi_a;  // L^-1 Phi_A
    llt.matrixL().solveInPlace(z);
    // Sigma_A = P - P Z^T Z P
    Eigen::MatrixXd sigma = -(ev.p.asDiagonal() * (z.transpose() * z) * ev.p.asDiagonal());
    sigma.diagonal() += ev.p;
    const Eigen::VectorXd mu_a = sigma * b;
    for (int i = 0; i < na; ++i) {
      ev.mu(ev.active[i]) = mu_a(i);
      ev.sigma_diag(ev.active[i]) = sigma(i, i);
    }
    if (req.sigma) ev.sigma = sigma;
    if (req.d) {
      Eigen::MatrixXd zall = prob.phi;
      llt.matrixL().solveInPlace(zall);
      ev.d = zall.colwise().squaredNorm().transpose();
    }
  }
  return ev;
}

double log_prior_terms(const RegressionProblem& prob, const Hyperparameters& hyper) {
  const auto& groups = prob.groups;
  double total = 0.0;
  for (int g = 0; g < groups.count(); ++g) {
    const int off = groups.offset(g);
    const int size = groups.size(g);
    switch (hyper.mode) {
      case PriorMode::Combined:
        if (hyper.group_pruned[g]) break;
        for (int q = off; q < off + size; ++q) total += std::log(hyper.beta(q) + hyper.gamma(g));
        break;
      case PriorMode::ElementOnly:
        for (int q = off; q < off + size; ++q)
          if (!hyper.element_pruned[q]) total += std::log(hyper.beta(q));
        break;
      case PriorMode::GroupOnly:
        if (!hyper.group_pruned[g]) total += size * std::log(hyper.gamma(g));
        break;
    }
  }
  return total;
}

double residual_sq(const RegressionProblem& prob, const Eigen::VectorXd& w) {
  return (prob.y - prob.phi * w).squaredNorm();
}

CccpWeights weights_from(const RegressionProblem& prob, const Hyperparameters& hyper,
                         const Evidence& ev) {
  const auto& groups = prob.groups;
  CccpWeights wts;
  wts.g_lambda = ev.trace_c_inv;
  wts.g_beta = Eigen::VectorXd::Zero(prob.dim());
  wts.g_gamma = Eigen::VectorXd::Zero(groups.count());
  for (int g = 0; g < groups.count(); ++g) {
    const int off = groups.offset(g);
    const int size = groups.size(g);
    switch (hyper.mode) {
      case PriorMode::Combined: {
        if (hyper.group_pruned[g]) {
          wts.g_gamma(g) = kInf;
          wts.g_beta.segment(off, size).setConstant(kInf);
          break;
        }
        const double gam = hyper.gamma(g);
        double gg = 0.0;
        for (int q = off; q < off + size; ++q) {
          const double bet = hyper.beta(q);
          const double sum = gam + bet;
          wts.g_beta(q) = 1.0 / sum + gam * gam * ev.d(q) / (sum * sum);
          gg += 1.0 / sum + bet * bet * ev.d(q) / (sum * sum);
        }
        wts.g_gamma(g) = gg;
        break;
      }
      case PriorMode::ElementOnly:
        for (int q = off; q < off + size; ++q)
          wts.g_beta(q) = hyper.element_pruned[q] ? kInf : 1.0 / hyper.beta(q) + ev.d(q);
        break;
      case PriorMode::GroupOnly: {
        if (hyper.group_pruned[g]) {
          wts.g_gamma(g) = kInf;
          break;
        }
        double gg = 0.0;
        for (int q = off; q < off + size; ++q) gg += 1.0 / hyper.gamma(g) + ev.d(q);
        wts.g_gamma(g) = gg;
        break;
      }
    }
  }
  return wts;
}

// inf * 0 is taken as 0: pinned coefficients cost nothing while they stay at zero.
double weighted_abs(double weight, double value) {
  if (value == 0.0) return 0.0;
  return weight * std::abs(value);
}

struct GramCache {
  Eigen::MatrixXd gram;     // Phi^T Phi
  Eigen::VectorXd phi_t_y;  // Phi^T y
  std::vector<double> lipschitz;

  explicit GramCache(const RegressionProblem& prob)
      : gram(prob.phi.transpose() * prob.phi), phi_t_y(prob.phi.transpose() * prob.y) {
    for (int g = 0; g < prob.groups.count(); ++g) {
      const int off = prob.groups.offset(g);
      const int size = prob.groups.size(g);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.block(off, off, size, size),
                                                              Eigen::EigenvaluesOnly);
      lipschitz.push_back(es.eigenvalues().maxCoeff());
    }
  }
};

// Exact solution of the group problem restricted to a fixed support and sign
// pattern (eps = 0), verified against the full optimality conditions.
bool polish_group(const Eigen::MatrixXd& h, const Eigen::VectorXd& c, double mu,
                  const Eigen::VectorXd& nu, Eigen::VectorXd& x) {
  std::vector<int> support;
  for (int q = 0; q < x.size(); ++q)
    if (x(q) != 0.0 && std::isfinite(nu(q))) support.push_back(q);
  if (support.empty()) return false;
  const int ns = static_cast<int>(support.size());
  Eigen::MatrixXd hs(ns, ns);
  Eigen::VectorXd d(ns);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j) hs(i, j) = h(support[i], support[j]);
    d(i) = c(support[i]) - nu(support[i]) * sign(x(support[i]));
  }

  Eigen::VectorXd xs;
  if (mu == 0.0) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hs);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    xs = ldlt.solve(d);
  } else {
    if (d.norm() <= mu) return false;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs);
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    const Eigen::VectorXd dt = es.eigenvectors().transpose() * d;
    // Secular equation sum dt_i^2 / (lam_i rho + mu)^2 = 1 is convex and
    // decreasing in rho, so Newton from rho = 0 increases monotonically to the root.
    double rho = 0.0;
    bool found = false;
    for (int it = 0; it < 200; ++it) {
      const Eigen::ArrayXd den = lam.array() * rho + mu;
      const double f = (dt.array().square() / den.square()).sum() - 1.0;
      const double fp = -2.0 * (lam.array() * dt.array().square() / den.cube()).sum();
      if (std::abs(f) <= 1e-15) {
        found = true;
        break;
      }
      if (fp >= 0.0) return false;
      const double step = -f / fp;
      rho += step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, rho)) {
        found = true;
        break;
      }
    }
    if (!found || !(rho > 0.0) || !std::isfinite(rho)) return false;
    const Eigen::ArrayXd den = lam.array() * rho + mu;
    xs = rho * (es.eigenvectors() * (dt.array() / den).matrix());
  }

  for (int i = 0; i < ns; ++i)
    if (sign(xs(i)) != sign(x(support[i]))) return false;
  Eigen::VectorXd candidate = Eigen::VectorXd::Zero(x.size());
  for (int i = 0; i < ns; ++i) candidate(support[i]) = xs(i);
  const Eigen::VectorXd grad = h * candidate - c;
  for (int q = 0; q < x.size(); ++q) {
    if (candidate(q) != 0.0 || !std::isfinite(nu(q))) continue;
    if (std::abs(grad(q)) > nu(q) * (1.0 + 1e-9) + 1e-13 * std::max(1.0, c.cwiseAbs().maxCoeff()))
      return false;
  }
  x = candidate;
  return true;
}

double segment_max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Block coordinate descent for 1/2 ||y - Phi w||^2 + s * pen(w).
int block_cd(const RegressionProblem& prob, const GramCache& cache, const CccpWeights& wts,
             double s, Eigen::VectorXd& w, Eigen::VectorXd& gw, double tol, int max_sweeps,
             bool& converged) {
  const auto& groups = prob.groups;
  converged = false;
  int sweep = 0;
  while (sweep < max_sweeps) {
    ++sweep;
    double max_delta = 0.0;
    for (int g = 0; g < groups.count(); ++g) {
      const int off = groups.offset(g);
      const int size = groups.size(g);
      const double mu = s * std::sqrt(wts.g_gamma(g));
      if (std::isinf(mu)) {
        if (w.segment(off, size).any()) {
          const Eigen::VectorXd delta = -w.segment(off, size);
          gw.noalias() += cache.gram.middleCols(off, size) * delta;
          w.segment(off, size).setZero();
          max_delta = std::max(max_delta, segment_max_abs(delta));
        }
        continue;
      }
      const Eigen::VectorXd nu = s * wts.g_beta.segment(off, size).cwiseSqrt();
      const Eigen::MatrixXd h = cache.gram.block(off, off, size, size);
      const Eigen::VectorXd old = w.segment(off, size);
      const Eigen::VectorXd c = cache.phi_t_y.segment(off, size) - gw.segment(off, size) + h * old;
      const Eigen::VectorXd x =
          solve_group_prox(h, c, mu, nu, prob.epsilon.segment(off, size), old, cache.lipschitz[g]);
      const Eigen::VectorXd delta = x - old;
      if (delta.any()) {
        gw.noalias() += cache.gram.middleCols(off, size) * delta;
        w.segment(off, size) = x;
        max_delta = std::max(max_delta, segment_max_abs(delta));
      }
    }
    if (max_delta <= tol * std::max(1.0, segment_max_abs(w))) {
      converged = true;
      break;
    }
  }
  return sweep;
}

// Inner problem with the residual norm replaced by min over admissible scales s
// of ||r||^2 / (2s) + a s / 2: s >= floor when the scale is free, s = lambda
// (and no a s / 2 term) when it is fixed.
struct SglProblem {
  const RegressionProblem& prob;
  GramCache cache;
  const CccpWeights& wts;
  Eigen::VectorXd mu;  // per group
  Eigen::VectorXd nu;  // per element
  double a;
  double fixed;
  double floor;

  SglProblem(const RegressionProblem& p, const CccpWeights& w, double fixed_lambda, double scale_floor)
      : prob(p), cache(p), wts(w), mu(w.g_gamma.cwiseSqrt()), nu(w.g_beta.cwiseSqrt()),
        a(w.g_lambda), fixed(fixed_lambda), floor(scale_floor) {}

  double scale(double rnorm) const {
    return fixed > 0.0 ? fixed : std::max(rnorm / std::sqrt(a), floor);
  }
  double data(double rnorm) const {
    const double s = scale(rnorm);
    return rnorm * rnorm / (2.0 * s) + (fixed > 0.0 ? 0.0 : 0.5 * a * s);
  }
  double penalty(const Eigen::VectorXd& w) const {
    double total = 0.0;
    for (int g = 0; g < prob.groups.count(); ++g) {
      const int off = prob.groups.offset(g);
      const int size = prob.groups.size(g);
      total += weighted_abs(mu(g), w.segment(off, size).norm());
      for (int q = off; q < off + size; ++q) total += weighted_abs(nu(q), w(q) - prob.epsilon(q));
    }
    return total;
  }
  double objective(const Eigen::VectorXd& w) const {
    return data((prob.y - prob.phi * w).norm()) + penalty(w);
  }
};

enum class NewtonOutcome { Converged, Dropped, Stalled };

// Newton's method on the support of w with signs held fixed (eps = 0), where
// the objective is smooth. Steps that would flip a sign stop at the boundary
// and zero the coefficient when that does not increase the objective. On
// return w holds the last accepted iterate.
NewtonOutcome newton_on_support(const SglProblem& sp, Eigen::VectorXd& w) {
  const auto& groups = sp.prob.groups;
  std::vector<int> idx;
  std::vector<int> owner;
  for (int q = 0; q < w.size(); ++q) {
    if (w(q) != 0.0) {
      idx.push_back(q);
      owner.push_back(groups.group_of(q));
    }
  }
  const int ns = static_cast<int>(idx.size());
  if (ns == 0) return NewtonOutcome::Converged;
  const Eigen::MatrixXd phi_s = columns(sp.prob.phi, idx);
  Eigen::MatrixXd g_ss(ns, ns);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) g_ss(i, j) = sp.cache.gram(idx[i], idx[j]);
  Eigen::VectorXd sigma(ns);
  Eigen::VectorXd nu_s(ns);
  Eigen::VectorXd x(ns);
  for (int i = 0; i < ns; ++i) {
    x(i) = w(idx[i]);
    sigma(i) = sign(x(i));
    nu_s(i) = sp.nu(idx[i]);
  }
  // Contiguous runs of idx that share a group.
  std::vector<std::pair<int, int>> runs;
  for (int i = 0; i < ns; ++i) {
    if (i == 0 || owner[i] != owner[i - 1]) runs.push_back({i, 0});
    ++runs.back().second;
  }

  auto value = [&](const Eigen::VectorXd& v) {
    double f = sp.data((sp.prob.y - phi_s * v).norm()) + nu_s.dot(sigma.cwiseProduct(v));
    for (const auto& [start, len] : runs) f += sp.mu(owner[start]) * v.segment(start, len).norm();
    return f;
  };
  auto write_back = [&] {
    for (int i = 0; i < ns; ++i) w(idx[i]) = x(i);
  };

  double f = value(x);
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd r = sp.prob.y - phi_s * x;
    const double rnorm = r.norm();
    const double s = sp.scale(rnorm);
    const Eigen::VectorXd pr = phi_s.transpose() * r;
    Eigen::VectorXd grad = -pr / s + nu_s.cwiseProduct(sigma);
    Eigen::MatrixXd hess = g_ss / s;
    if (sp.fixed <= 0.0 && rnorm / std::sqrt(sp.a) > sp.floor) hess -= pr * pr.transpose() / (s * rnorm * rnorm);
    for (const auto& [start, len] : runs) {
      const double m = sp.mu(owner[start]);
      const Eigen::VectorXd xr = x.segment(start, len);
      const double nr = xr.norm();
      grad.segment(start, len) += m * xr / nr;
      hess.block(start, start, len, len) -= m * xr * xr.transpose() / (nr * nr * nr);
      hess.block(start, start, len, len).diagonal().array() += m / nr;
    }
    hess.diagonal().array() += 1e-13 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd dx = -ldlt.solve(grad);
    const double decrement = -grad.dot(dx);
    if (!std::isfinite(decrement) || decrement < 0.0) break;
    if (0.5 * decrement <= 1e-15 * std::max(1.0, std::abs(f))) {
      write_back();
      return NewtonOutcome::Converged;
    }
    double alpha_max = kInf;
    for (int i = 0; i < ns; ++i)
      if (dx(i) * sigma(i) < 0.0) alpha_max = std::min(alpha_max, -x(i) / dx(i));
    if (alpha_max <= 1.0) {
      Eigen::VectorXd trial = x + alpha_max * dx;
      for (int i = 0; i < ns; ++i)
        if (trial(i) * sigma(i) <= 0.0 || (dx(i) * sigma(i) < 0.0 && -x(i) / dx(i) <= alpha_max)) trial(i) = 0.0;
      if (value(trial) <= f) {
        x = trial;
        write_back();
        return NewtonOutcome::Dropped;
      }
    }
    double alpha = alpha_max > 1.0 ? 1.0 : 0.5 * alpha_max;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd trial = x + alpha * dx;
      const double ft = value(trial);
      if (ft <= f - 1e-4 * alpha * decrement) {
        x = trial;
        f = ft;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  write_back();
  return NewtonOutcome::Stalled;
}

// Repeats Newton solves while coefficients keep dropping out of the support.
bool newton_active_set(const SglProblem& sp, Eigen::VectorXd& w) {
  for (int epoch = 0; epoch <= w.size(); ++epoch) {
    const NewtonOutcome out = newton_on_support(sp, w);
    if (out != NewtonOutcome::Dropped) return out == NewtonOutcome::Converged;
  }
  return false;
}

// Optimality conditions of the inner problem at w (eps = 0).
bool kkt_holds(const SglProblem& sp, const Eigen::VectorXd& w) {
  const auto& groups = sp.prob.groups;
  const Eigen::VectorXd r = sp.prob.y - sp.prob.phi * w;
  const Eigen::VectorXd g = sp.prob.phi.transpose() * r / sp.scale(r.norm());
  double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  for (int q = 0; q < g.size(); ++q)
    if (std::isfinite(sp.nu(q))) scale = std::max(scale, sp.nu(q));
  const double tol = 1e-6 * scale;
  for (int k = 0; k < groups.count(); ++k) {
    const double m = sp.mu(k);
    if (std::isinf(m)) continue;
    const int off = groups.offset(k);
    const int size = groups.size(k);
    const double nr = w.segment(off, size).norm();
    if (nr == 0.0) {
      double acc = 0.0;
      for (int q = off; q < off + size; ++q) {
        const double v = std::isinf(sp.nu(q)) ? 0.0 : soft(g(q), sp.nu(q));
        acc += v * v;
      }
      if (std::sqrt(acc) > m + tol) return false;
      continue;
    }
    for (int q = off; q < off + size; ++q) {
      if (std::isinf(sp.nu(q))) continue;
      if (w(q) == 0.0) {
        if (std::abs(g(q)) > sp.nu(q) + tol) return false;
      } else if (std::abs(g(q) - m * w(q) / nr - sp.nu(q) * sign(w(q))) > tol) {
        return false;
      }
    }
  }
  return true;
}

// Log-barrier interior-point solve of the inner problem as a second-order
// cone program: one cone t_i >= ||v_i|| per group norm, per element term and,
// with a free scale, for the residual. Pruned coordinates stay at zero. The
// returned point is strictly interior; gap bounds its suboptimality.
struct BarrierResult {
  Eigen::VectorXd w;
  double gap = 0.0;
};

BarrierResult barrier_solve(const SglProblem& sp, const Eigen::VectorXd& w0, double gap_rel) {
  const auto& prob = sp.prob;
  const auto& groups = prob.groups;
  std::vector<int> free_idx;
  std::vector<int> pos(prob.dim(), -1);
  for (int q = 0; q < prob.dim(); ++q)
    if (std::isfinite(sp.nu(q)) && std::isfinite(sp.mu(groups.group_of(q)))) {
      pos[q] = static_cast<int>(free_idx.size());
      free_idx.push_back(q);
    }
  const int d = static_cast<int>(free_idx.size());
  BarrierResult out{Eigen::VectorXd::Zero(prob.dim()), 0.0};
  if (d == 0) return out;

  Eigen::MatrixXd phi(prob.rows(), d);
  for (int i = 0; i < d; ++i) phi.col(i) = prob.phi.col(free_idx[i]);
  const Eigen::MatrixXd gram = phi.transpose() * phi;
  const bool free_scale = sp.fixed <= 0.0;

  struct Cone {
    double cost;
    std::vector<int> idx;  // positions in x; empty for the residual cone
    double shift;          // element cones: v = x - shift
  };
  std::vector<Cone> cones;
  for (int g = 0; g < groups.count(); ++g) {
    if (!(sp.mu(g) > 0.0) || std::isinf(sp.mu(g))) continue;
    Cone c{sp.mu(g), {}, 0.0};
    for (int q = groups.offset(g); q < groups.offset(g) + groups.size(g); ++q)
      if (pos[q] >= 0) c.idx.push_back(pos[q]);
    if (!c.idx.empty()) cones.push_back(std::move(c));
  }
  for (int i = 0; i < d; ++i) {
    const int q = free_idx[i];
    if (sp.nu(q) > 0.0) cones.push_back({sp.nu(q), {i}, prob.epsilon(q)});
  }
  const int data_cone = free_scale ? static_cast<int>(cones.size()) : -1;
  if (free_scale) cones.push_back({std::sqrt(sp.a), {}, 0.0});
  const int nc = static_cast<int>(cones.size());

  auto cone_v = [&](const Cone& c, int i, const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
    if (i == data_cone) return Eigen::VectorXd(r);
    Eigen::VectorXd v(c.idx.size());
    for (std::size_t j = 0; j < c.idx.size(); ++j) v(j) = x(c.idx[j]) - c.shift;
    return v;
  };
  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return phi * x - prob.y; };
  auto linear_obj = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& t) {
    double f = 0.0;
    for (int i = 0; i < nc; ++i) f += cones[i].cost * t(i);
    if (!free_scale) f += residual(x).squaredNorm() / (2.0 * sp.fixed);
    return f;
  };
  const double inf = std::numeric_limits<double>::infinity();
  auto barrier_obj = [&](double tau, const Eigen::VectorXd& x, const Eigen::VectorXd& t) {
    const Eigen::VectorXd r = residual(x);
    double val = tau * linear_obj(x, t);
    for (int i = 0; i < nc; ++i) {
      const double slack = t(i) * t(i) - cone_v(cones[i], i, x, r).squaredNorm();
      if (!(t(i) > 0.0) || !(slack > 0.0)) return inf;
      val -= std::log(slack);
    }
    return val;
  };

  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = w0(free_idx[i]);
  Eigen::VectorXd t(nc);
  {
    const Eigen::VectorXd r = residual(x);
    double big = 0.0;
    for (int i = 0; i < nc; ++i) big = std::max(big, cone_v(cones[i], i, x, r).norm());
    for (int i = 0; i < nc; ++i) t(i) = 1.5 * cone_v(cones[i], i, x, r).norm() + 1e-3 * (1.0 + big);
  }
  const double nu_total = 2.0 * nc;
  double tau = nu_total / std::max(linear_obj(x, t), 1e-300);

  for (int stage = 0; stage < 60; ++stage) {
    for (int step = 0; step < 100; ++step) {
      const Eigen::VectorXd r = residual(x);
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
      Eigen::VectorXd gx = Eigen::VectorXd::Zero(d);
      if (!free_scale) {
        h += tau * gram / sp.fixed;
        gx += tau * phi.transpose() * r / sp.fixed;
      }
      Eigen::VectorXd gt(nc), htt(nc);
      std::vector<Eigen::VectorXd> htw(nc);
      for (int i = 0; i < nc; ++i) {
        const Cone& c = cones[i];
        const Eigen::VectorXd v = cone_v(c, i, x, r);
        const double vv = v.squaredNorm();
        const double slack = t(i) * t(i) - vv;
        gt(i) = tau * c.cost - 2.0 * t(i) / slack;
        htt(i) = 2.0 * (t(i) * t(i) + vv) / (slack * slack);
        Eigen::VectorXd pv;
        if (i == data_cone) {
          pv = phi.transpose() * v;
          h += 2.0 * gram / slack;
          h.noalias() += (4.0 / (slack * slack)) * pv * pv.transpose();
          gx += 2.0 * pv / slack;
          htw[i] = -4.0 * t(i) / (slack * slack) * pv;
        } else {
          htw[i] = Eigen::VectorXd::Zero(d);
          for (std::size_t a = 0; a < c.idx.size(); ++a) {
            const int ia = c.idx[a];
            gx(ia) += 2.0 * v(a) / slack;
            h(ia, ia) += 2.0 / slack;
            for (std::size_t b = 0; b < c.idx.size(); ++b)
              h(ia, c.idx[b]) += 4.0 * v(a) * v(b) / (slack * slack);
            htw[i](ia) = -4.0 * t(i) * v(a) / (slack * slack);
          }
        }
      }
      Eigen::MatrixXd hred = h;
      Eigen::VectorXd rhs = -gx;
      for (int i = 0; i < nc; ++i) {
        hred.noalias() -= htw[i] * htw[i].transpose() / htt(i);
        rhs += htw[i] * (gt(i) / htt(i));
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hred);
      Eigen::VectorXd dx = ldlt.solve(rhs);
      if (!dx.allFinite()) {
        hred.diagonal().array() += 1e-12 * (1.0 + hred.diagonal().cwiseAbs().maxCoeff());
        dx = hred.ldlt().solve(rhs);
        if (!dx.allFinite()) break;
      }
      Eigen::VectorXd dt(nc);
      for (int i = 0; i < nc; ++i) dt(i) = -(gt(i) + htw[i].dot(dx)) / htt(i);
      const double decrement = -(gx.dot(dx) + gt.dot(dt));
      if (!(decrement > 1e-10)) break;

      const double f0 = barrier_obj(tau, x, t);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
        const double f1 = barrier_obj(tau, x + alpha * dx, t + alpha * dt);
        if (f1 <= f0 - 0.25 * alpha * decrement) {
          x += alpha * dx;
          t += alpha * dt;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    out.gap = nu_total / tau;
    if (out.gap <= gap_rel * std::max(1.0, std::abs(linear_obj(x, t)))) break;
    tau *= 20.0;
  }
  for (int i = 0; i < d; ++i) out.w(free_idx[i]) = x(i);
  return out;
}

}  // namespace

Hyperparameters Hyperparameters::initial(const GroupStructure& groups, double lambda,
                                         PriorMode mode, double beta0, double gamma0) {
  Hyperparameters h;
  h.beta = Eigen::VectorXd::Constant(groups.dim(), beta0);
  h.gamma = Eigen::VectorXd::Constant(groups.count(), gamma0);
  h.lambda = lambda;
  h.mode = mode;
  h.element_pruned.assign(groups.dim(), 0);
  h.group_pruned.assign(groups.count(), 0);
  return h;
}

double Hyperparameters::prior_variance(const GroupStructure& groups, int q) const {
  const int g = groups.group_of(q);
  switch (mode) {
    case PriorMode::Combined: {
      if (group_pruned[g] || element_pruned[q]) return 0.0;
      const double b = beta(q);
      const double c = gamma(g);
      return b + c > 0.0 ? b * c / (b + c) : 0.0;
    }
    case PriorMode::ElementOnly: return element_pruned[q] ? 0.0 : beta(q);
    case PriorMode::GroupOnly: return group_pruned[g] ? 0.0 : gamma(g);
  }
  return 0.0;
}

void Hyperparameters::validate(const GroupStructure& groups) const {
  require(beta.size() == groups.dim() && gamma.size() == groups.count() &&
              static_cast<int>(element_pruned.size()) == groups.dim() &&
              static_cast<int>(group_pruned.size()) == groups.count(),
          ErrorCode::DimensionMismatch, "hyperparameter sizes do not match the group structure");
  require(lambda > 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be positive");
  require((beta.array() >= 0.0).all() && (gamma.array() >= 0.0).all() && beta.allFinite() &&
              gamma.allFinite(),
          ErrorCode::InvalidArgument, "variances must be finite and nonnegative");
  for (int q = 0; q < groups.dim(); ++q)
    if (!element_pruned[q] && uses_beta() && mode == PriorMode::ElementOnly)
      require(beta(q) > 0.0, ErrorCode::InvalidArgument, "active element variance must be positive");
  for (int g = 0; g < groups.count(); ++g)
    if (!group_pruned[g] && uses_gamma())
      require(gamma(g) > 0.0, ErrorCode::InvalidArgument, "active group variance must be positive");
}

PosteriorMoments posterior_moments(const RegressionProblem& prob, const Hyperparameters& hyper,
                                   PosteriorPath path) {
  prob.validate();
  hyper.validate(prob.groups);
  const Evidence ev = compute_evidence(prob, hyper, path, {.sigma = true});
  PosteriorMoments out;
  out.mu = ev.mu;
  out.sigma = Eigen::MatrixXd::Zero(prob.dim(), prob.dim());
  for (std::size_t i = 0; i < ev.active.size(); ++i)
    for (std::size_t j = 0; j < ev.active.size(); ++j)
      out.sigma(ev.active[i], ev.active[j]) = ev.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

double quadratic_part(const RegressionProblem& prob, const Hyperparameters& hyper,
                      const Eigen::VectorXd& w) {
  const auto& groups = prob.groups;
  double total = residual_sq(prob, w) / hyper.lambda;
  for (int g = 0; g < groups.count(); ++g) {
    const int off = groups.offset(g);
    const int size = groups.size(g);
    if (hyper.uses_gamma() && !hyper.group_pruned[g])
      total += w.segment(off, size).squaredNorm() / hyper.gamma(g);
    if (!hyper.uses_beta() || (hyper.mode == PriorMode::Combined && hyper.group_pruned[g])) continue;
    for (int q = off; q < off + size; ++q) {
      if (hyper.element_pruned[q]) continue;
      const double diff = w(q) - prob.epsilon(q);
      if (diff != 0.0) total += diff * diff / hyper.beta(q);
    }
  }
  return total;
}

double log_det_part(const RegressionProblem& prob, const Hyperparameters& hyper) {
  const Evidence ev = compute_evidence(prob, hyper, PosteriorPath::Auto, {});
  return log_prior_terms(prob, hyper) + ev.log_det_c;
}

double type2_cost(const RegressionProblem& prob, const Hyperparameters& hyper,
                  const Eigen::VectorXd& w) {
  return quadratic_part(prob, hyper, w) + log_det_part(prob, hyper);
}

double marginal_cost(const RegressionProblem& prob, const Hyperparameters& hyper) {
  const Evidence ev = compute_evidence(prob, hyper, PosteriorPath::Auto, {});
  return quadratic_part(prob, hyper, ev.mu) + log_prior_terms(prob, hyper) + ev.log_det_c;
}

CccpWeights cccp_weights(const RegressionProblem& prob, const Hyperparameters& hyper) {
  prob.validate();
  hyper.validate(prob.groups);
  const Evidence ev = compute_evidence(prob, hyper, PosteriorPath::Auto, {.d = true});
  return weights_from(prob, hyper, ev);
}

double inner_objective(const RegressionProblem& prob, const CccpWeights& weights,
                       const Eigen::VectorXd& w) {
  double total = std::sqrt(weights.g_lambda) * (prob.y - prob.phi * w).norm();
  for (int g = 0; g < prob.groups.count(); ++g) {
    const int off = prob.groups.offset(g);
    const int size = prob.groups.size(g);
    total += weighted_abs(std::sqrt(weights.g_gamma(g)), w.segment(off, size).norm());
    for (int q = off; q < off + size; ++q)
      total += weighted_abs(std::sqrt(weights.g_beta(q)), w(q) - prob.epsilon(q));
  }
  return total;
}

Eigen::VectorXd solve_group_prox(const Eigen::MatrixXd& h, const Eigen::VectorXd& c, double mu,
                                 const Eigen::VectorXd& nu, const Eigen::VectorXd& eps,
                                 const Eigen::VectorXd& x0, double lipschitz, double tol,
                                 int max_iter) {
  const int size = static_cast<int>(c.size());
  if (std::isinf(mu)) return Eigen::VectorXd::Zero(size);

  // Zero is optimal iff the subgradient condition holds at x = 0.
  Eigen::VectorXd r(size);
  for (int q = 0; q < size; ++q) {
    if (std::isinf(nu(q))) r(q) = 0.0;
    else if (eps(q) == 0.0) r(q) = soft(c(q), nu(q));
    else r(q) = c(q) + nu(q) * sign(eps(q));
  }
  if (r.norm() <= mu) return Eigen::VectorXd::Zero(size);
  if (!(lipschitz > 0.0)) return Eigen::VectorXd::Zero(size);

  const bool centered = (eps.array() == 0.0).all();
  const double step = 1.0 / lipschitz;
  auto prox = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd z(size);
    for (int q = 0; q < size; ++q)
      z(q) = std::isinf(nu(q)) ? 0.0 : eps(q) + soft(v(q) - eps(q), step * nu(q));
    const double norm = z.norm();
    if (norm <= step * mu) return Eigen::VectorXd::Zero(size).eval();
    return (z * (1.0 - step * mu / norm)).eval();
  };

  Eigen::VectorXd x = x0;
  Eigen::VectorXd y = x0;
  double t = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd next = prox(y - step * (h * y - c));
    const bool restart = (y - next).dot(next - x) > 0.0;
    const double t_next = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double diff = (next - x).norm();
    y = restart ? next : (next + ((t - 1.0) / t_next) * (next - x)).eval();
    t = t_next;
    x = next;
    const bool done = diff <= tol * std::max(1.0, x.norm());
    if (centered && (done || it % 25 == 0)) {
      Eigen::VectorXd polished = x;
      if (polish_group(h, c, mu, nu, polished)) return polished;
    }
    if (done) break;
  }
  return x;
}

InnerResult solve_inner_sgl(const RegressionProblem& prob, const CccpWeights& weights,
                            const Eigen::VectorXd& w_init, const InnerOptions& opts,
                            double fixed_lambda) {
  require(fixed_lambda > 0.0 || (weights.g_lambda > 0.0 && std::isfinite(weights.g_lambda)),
          ErrorCode::InvalidArgument, "g_lambda must be positive");
  const SglProblem sp(prob, weights, fixed_lambda, opts.scale_floor);
  const bool centered = (prob.epsilon.array() == 0.0).all();
  InnerResult res;
  res.w = w_init;
  for (int q = 0; q < prob.dim(); ++q)
    if (std::isinf(sp.nu(q)) || std::isinf(sp.mu(prob.groups.group_of(q)))) res.w(q) = 0.0;
  Eigen::VectorXd gw = sp.cache.gram * res.w;
  auto residual_norm = [&](const Eigen::VectorXd& w) { return (prob.y - prob.phi * w).norm(); };

  double s = sp.scale(residual_norm(res.w));
  const int cd_limit = std::min(opts.max_sweeps, opts.barrier_after_sweeps);
  while (res.iterations < cd_limit) {
    bool cd_converged = false;
    const int budget = std::min(opts.sweeps_per_round, cd_limit - res.iterations);
    res.iterations += block_cd(prob, sp.cache, weights, s, res.w, gw, opts.tol, budget, cd_converged);
    if (centered) {
      Eigen::VectorXd candidate = res.w;
      newton_active_set(sp, candidate);
      if (sp.objective(candidate) <= sp.objective(res.w)) {
        res.w = candidate;
        gw = sp.cache.gram * res.w;
      }
      if (kkt_holds(sp, res.w)) {
        res.converged = true;
        break;
      }
    }
    const double next = sp.scale(residual_norm(res.w));
    const bool settled = std::abs(next - s) <= 1e-10 * s;
    s = next;
    if (!centered && cd_converged && settled) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged && cd_limit < opts.max_sweeps) {
    // Coordinate descent stalls on nearly interpolating problems; fall back to
    // the barrier method and recover exact zeros with the support Newton step.
    const BarrierResult br = barrier_solve(sp, res.w, opts.barrier_gap);
    double best = sp.objective(res.w);
    if (sp.objective(br.w) < best) {
      res.w = br.w;
      best = sp.objective(br.w);
    }
    if (centered) {
      Eigen::VectorXd candidate = br.w;
      const double peak = candidate.cwiseAbs().maxCoeff();
      for (int q = 0; q < candidate.size(); ++q)
        if (std::abs(candidate(q)) <= opts.barrier_zero_rel * peak) candidate(q) = 0.0;
      newton_active_set(sp, candidate);
      if (sp.objective(candidate) <= best) res.w = candidate;
      res.converged = kkt_holds(sp, res.w);
    }
    if (!res.converged)
      res.converged = br.gap <= opts.barrier_gap * std::max(1.0, std::abs(best)) &&
                      sp.objective(res.w) <= sp.objective(br.w);
  }
  res.objective = inner_objective(prob, weights, res.w);
  return res;
}

Eigen::VectorXd shrink_shared(const Eigen::VectorXd& c, double kappa) {
  const double norm = c.norm();
  if (norm <= kappa) return Eigen::VectorXd::Zero(c.size());
  return c * ((norm - kappa) / norm);
}

namespace {

struct AdmmContext {
  std::vector<Eigen::MatrixXd> h;  // rho Phi_r^T Phi_r
  std::vector<double> lipschitz;

  AdmmContext(const RegressionProblem& prob, double rho) {
    for (int g = 0; g < prob.groups.count(); ++g) {
      const auto block = prob.phi.middleCols(prob.groups.offset(g), prob.groups.size(g));
      h.push_back(rho * block.transpose() * block);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.back(), Eigen::EigenvaluesOnly);
      lipschitz.push_back(es.eigenvalues().maxCoeff());
    }
  }
};

AdmmState admm_round(const RegressionProblem& prob, const CccpWeights& weights,
                     const AdmmState& state, double rho, double fixed_lambda,
                     const AdmmContext& ctx) {
  const auto& groups = prob.groups;
  const int ng = groups.count();
  AdmmState next = state;
  // Group updates are independent given the shared quantities of round n.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(prob.rows());
  for (int g = 0; g < ng; ++g) {
    const int off = groups.offset(g);
    const int size = groups.size(g);
    const auto block = prob.phi.middleCols(off, size);
    const Eigen::VectorXd wr = state.w.segment(off, size);
    const Eigen::VectorXd target = block * wr - state.phi_w_bar + state.z_bar - state.u;
    const Eigen::VectorXd c = rho * block.transpose() * target;
    const Eigen::VectorXd x = solve_group_prox(ctx.h[g], c, std::sqrt(weights.g_gamma(g)),
                                               weights.g_beta.segment(off, size).cwiseSqrt(),
                                               prob.epsilon.segment(off, size), wr, ctx.lipschitz[g]);
    next.w.segment(off, size) = x;
    sum.noalias() += block * x;
  }
  next.phi_w_bar = sum / ng;
  const Eigen::VectorXd c = -prob.y / ng + state.u + next.phi_w_bar;
  Eigen::VectorXd z_hat;
  if (fixed_lambda > 0.0) z_hat = rho * c / (ng / fixed_lambda + rho);
  else z_hat = shrink_shared(c, std::sqrt(weights.g_lambda) / rho);
  next.z_bar = z_hat + prob.y / ng;
  next.u = state.u + next.phi_w_bar - next.z_bar;
  const double root = std::sqrt(static_cast<double>(ng));
  next.primal_residual = root * (next.phi_w_bar - next.z_bar).norm();
  next.dual_residual = rho * root * (next.z_bar - state.z_bar).norm();
  next.round = state.round + 1;
  return next;
}

}  // namespace

AdmmState admm_init(const RegressionProblem& prob, const Eigen::VectorXd& w_init) {
  AdmmState st;
  st.w = w_init;
  st.phi_w_bar = prob.phi * w_init / prob.groups.count();
  st.z_bar = st.phi_w_bar;
  st.u = Eigen::VectorXd::Zero(prob.rows());
  return st;
}

AdmmState admm_step(const RegressionProblem& prob, const CccpWeights& weights,
                    const AdmmState& state, double rho, double fixed_lambda) {
  require(rho > 0.0, ErrorCode::InvalidArgument, "ADMM penalty rho must be positive");
  const AdmmContext ctx(prob, rho);
  return admm_round(prob, weights, state, rho, fixed_lambda, ctx);
}

InnerResult solve_inner_admm(const RegressionProblem& prob, const CccpWeights& weights,
                             const Eigen::VectorXd& w_init, const AdmmOptions& opts,
                             double fixed_lambda) {
  require(opts.rho > 0.0, ErrorCode::InvalidArgument, "ADMM penalty rho must be positive");
  const AdmmContext ctx(prob, opts.rho);
  AdmmState st = admm_init(prob, w_init);
  const double scale = std::max(1.0, prob.y.norm());
  InnerResult res;
  for (int round = 0; round < opts.max_rounds; ++round) {
    st = admm_round(prob, weights, st, opts.rho, fixed_lambda, ctx);
    if (st.primal_residual <= opts.tol * scale && st.dual_residual <= opts.tol * scale) {
      res.converged = true;
      break;
    }
  }
  res.w = st.w;
  res.iterations = st.round;
  res.objective = inner_objective(prob, weights, res.w);
  return res;
}

namespace {

struct PruneState {
  double frozen = 0.0;  // log-prior contributions of pruned entries
};

double lambda_floor(const RegressionProblem& prob, const SolverOptions& opts) {
  const double power = prob.y.squaredNorm() / prob.rows();
  return std::max(opts.lambda_floor_rel * power, 1e-300);
}

// Flags entries whose variance fell below the floors, zeroes them in w and
// freezes their log-prior contribution at max(value, element floor).
void prune(const RegressionProblem& prob, const SolverOptions& opts, Hyperparameters& h,
           Eigen::VectorXd& w, PruneState& ps) {
  const auto& groups = prob.groups;
  const double floor = opts.element_prune;
  if (h.uses_gamma()) {
    double gmax = 0.0;
    for (int g = 0; g < groups.count(); ++g)
      if (!h.group_pruned[g]) gmax = std::max(gmax, h.gamma(g));
    for (int g = 0; g < groups.count(); ++g) {
      if (h.group_pruned[g] || (h.gamma(g) > 0.0 && h.gamma(g) >= opts.group_prune_rel * gmax)) continue;
      const int off = groups.offset(g);
      const int size = groups.size(g);
      if (h.mode == PriorMode::Combined) {
        for (int q = off; q < off + size; ++q) {
          ps.frozen += std::log(std::max(h.beta(q) + h.gamma(g), floor));
          h.beta(q) = 0.0;
          h.element_pruned[q] = 1;
        }
      } else {
        ps.frozen += size * std::log(std::max(h.gamma(g), floor));
      }
      h.group_pruned[g] = 1;
      h.gamma(g) = 0.0;
      w.segment(off, size).setZero();
    }
  }
  if (h.uses_beta()) {
    for (int q = 0; q < groups.dim(); ++q) {
      const int g = groups.group_of(q);
      if (h.mode == PriorMode::Combined) {
        if (h.group_pruned[g]) continue;
        // log(beta + gamma) stays finite at beta = 0, so nothing is frozen and
        // the element may re-enter on a later iteration.
        if (h.beta(q) < floor) {
          h.beta(q) = 0.0;
          h.element_pruned[q] = 1;
          w(q) = 0.0;
        } else {
          h.element_pruned[q] = 0;
        }
      } else if (!h.element_pruned[q] && h.beta(q) < floor) {
        ps.frozen += std::log(std::max(h.beta(q), floor));
        h.beta(q) = 0.0;
        h.element_pruned[q] = 1;
        w(q) = 0.0;
      }
    }
  }
}

double relative_change(const Eigen::VectorXd& next, const Eigen::VectorXd& prev) {
  return (next - prev).norm() / std::max(1.0, prev.norm());
}

bool cost_settled(double next, double prev, double tol) {
  return std::abs(next - prev) <= tol * std::max(1.0, std::abs(prev));
}

InferenceResult make_result(const RegressionProblem& prob) {
  InferenceResult res;
  res.node = prob.node;
  res.k = prob.k;
  res.lagged = prob.lagged;
  res.groups = prob.groups;
  return res;
}

}  // namespace

InferenceResult cccp_solve(const RegressionProblem& prob, const Hyperparameters& init,
                           const SolverOptions& opts) {
  prob.validate();
  init.validate(prob.groups);
  const auto& groups = prob.groups;
  const double lam_floor = lambda_floor(prob, opts);
  Hyperparameters h = init;
  h.lambda = std::max(h.lambda, lam_floor);
  PruneState ps;
  InferenceResult res = make_result(prob);

  Evidence ev = compute_evidence(prob, h, PosteriorPath::Auto, {.d = true});
  Eigen::VectorXd w = ev.mu;
  res.cost_trajectory.push_back(quadratic_part(prob, h, ev.mu) + log_prior_terms(prob, h) +
                                ev.log_det_c + ps.frozen);

  InnerOptions inner = opts.inner;
  inner.scale_floor = std::max(inner.scale_floor, lam_floor);
  for (int it = 1; it <= opts.max_outer; ++it) {
    const CccpWeights wts = weights_from(prob, h, ev);
    const double fixed = opts.fix_lambda ? h.lambda : 0.0;
    auto run_inner = [&](const Eigen::VectorXd& start) {
      return opts.solver == SolverKind::Admm ? solve_inner_admm(prob, wts, start, opts.admm, fixed)
                                             : solve_inner_sgl(prob, wts, start, inner, fixed);
    };
    // Descent from the posterior mean is what the majorization argument needs;
    // a converged solve from the previous iterate is at least as good.
    InnerResult step = run_inner(w);
    if (!step.converged) {
      InnerResult from_mean = run_inner(ev.mu);
      if (from_mean.objective < step.objective) step = std::move(from_mean);
    }
    Eigen::VectorXd w_next = std::move(step.w);

    // Closed-form hyperparameters given w.
    for (int g = 0; g < groups.count(); ++g) {
      if (h.uses_gamma() && !h.group_pruned[g])
        h.gamma(g) = groups.slice(w_next, g).norm() / std::sqrt(wts.g_gamma(g));
      if (!h.uses_beta() || (h.mode == PriorMode::Combined && h.group_pruned[g])) continue;
      for (int q = groups.offset(g); q < groups.offset(g) + groups.size(g); ++q) {
        if (h.mode == PriorMode::ElementOnly && h.element_pruned[q]) continue;
        h.beta(q) = std::abs(w_next(q) - prob.epsilon(q)) / std::sqrt(wts.g_beta(q));
      }
    }
    if (!opts.fix_lambda)
      h.lambda = std::max((prob.y - prob.phi * w_next).norm() / std::sqrt(wts.g_lambda), lam_floor);
    prune(prob, opts, h, w_next, ps);

    ev = compute_evidence(prob, h, PosteriorPath::Auto, {.d = true});
    const double cost = quadratic_part(prob, h, ev.mu) + log_prior_terms(prob, h) + ev.log_det_c + ps.frozen;
    const bool settled = relative_change(w_next, w) < opts.w_tol ||
                         cost_settled(cost, res.cost_trajectory.back(), opts.cost_tol);
    res.cost_trajectory.push_back(cost);
    w = std::move(w_next);
    res.iterations = it;
    if (settled) {
      res.converged = true;
      break;
    }
  }
  res.w = w;
  res.hyper = h;
  summarize_result(res);
  return res;
}

InferenceResult em_solve(const RegressionProblem& prob, const Hyperparameters& init,
                         const SolverOptions& opts) {
  prob.validate();
  init.validate(prob.groups);
  const auto& groups = prob.groups;
  const double lam_floor = lambda_floor(prob, opts);
  Hyperparameters h = init;
  h.lambda = std::max(h.lambda, lam_floor);
  PruneState ps;
  InferenceResult res = make_result(prob);

  Evidence ev = compute_evidence(prob, h, PosteriorPath::Auto, {});
  res.cost_trajectory.push_back(quadratic_part(prob, h, ev.mu) + log_prior_terms(prob, h) +
                                ev.log_det_c + ps.frozen);
  Eigen::VectorXd w = ev.mu;

  for (int it = 1; it <= opts.max_outer; ++it) {
    const Eigen::VectorXd& mu = ev.mu;
    const Eigen::VectorXd& sd = ev.sigma_diag;
    double trace_term = 0.0;  // sum over active entries of 1 - Sigma_qq / p_q
    for (std::size_t i = 0; i < ev.active.size(); ++i)
      trace_term += 1.0 - sd(ev.active[i]) / ev.p(static_cast<Eigen::Index>(i));
    const double rss = (prob.y - prob.phi * mu).squaredNorm();

    for (int g = 0; g < groups.count(); ++g) {
      const int off = groups.offset(g);
      const int size = groups.size(g);
      if (h.uses_gamma() && !h.group_pruned[g]) {
        double acc = 0.0;
        for (int q = off; q < off + size; ++q) acc += sd(q) + mu(q) * mu(q);
        h.gamma(g) = acc / size;
      }
      if (!h.uses_beta() || (h.mode == PriorMode::Combined && h.group_pruned[g])) continue;
      for (int q = off; q < off + size; ++q) {
        if (h.element_pruned[q]) continue;
        const double diff = mu(q) - prob.epsilon(q);
        h.beta(q) = sd(q) + diff * diff;
      }
    }
    if (!opts.fix_lambda)
      h.lambda = std::max((rss + h.lambda * trace_term) / prob.rows(), lam_floor);
    Eigen::VectorXd dummy = mu;
    prune(prob, opts, h, dummy, ps);
    if (h.mode == PriorMode::Combined) {
      // EM never revives an element whose variance collapsed.
      for (int q = 0; q < groups.dim(); ++q)
        if (h.element_pruned[q]) h.beta(q) = 0.0;
    }

    ev = compute_evidence(prob, h, PosteriorPath::Auto, {});
    const double cost = quadratic_part(prob, h, ev.mu) + log_prior_terms(prob, h) + ev.log_det_c + ps.frozen;
    const bool settled = relative_change(ev.mu, w) < opts.w_tol ||
                         cost_settled(cost, res.cost_trajectory.back(), opts.cost_tol);
    res.cost_trajectory.push_back(cost);
    w = ev.mu;
    res.iterations = it;
    if (settled) {
      res.converged = true;
      break;
    }
  }
  res.w = w;
  res.hyper = h;
  summarize_result(res);
  return res;
}

InferenceResult solve(const RegressionProblem& prob, double lambda0, const SolverOptions& opts) {
  const Hyperparameters init = Hyperparameters::initial(prob.groups, lambda0, opts.mode);
  if (opts.solver == SolverKind::Em) return em_solve(prob, init, opts);
  return cccp_solve(prob, init, opts);
}

double estimate_noise_least_squares(const RegressionProblem& prob) {
  const Eigen::VectorXd w = prob.phi.completeOrthogonalDecomposition().solve(prob.y);
  return (prob.y - prob.phi * w).squaredNorm() / prob.rows();
}

double estimate_noise_high_order(const TimeSeriesData& data, int node, int k_big) {
  const RegressionProblem prob = build_arx_regression(data, node, k_big);
  const int n = prob.rows();
  const int dim = prob.dim();
  Eigen::VectorXd w;
  if (n >= dim) {
    w = prob.phi.colPivHouseholderQr().solve(prob.y);
  } else {
    Eigen::MatrixXd normal = prob.phi.transpose() * prob.phi;
    normal.diagonal().array() += 1e-6;
    w = normal.ldlt().solve(prob.phi.transpose() * prob.y);
  }
  return (prob.y - prob.phi * w).squaredNorm() / n;
}

int default_noise_order(const TimeSeriesData& data, int k_max) {
  const int regressors = data.p() + data.m();
  int best = 1;
  for (int kb = 1; kb <= k_max; ++kb)
    if (data.t() - kb >= 2 * kb * regressors) best = kb;
  return best;
}

int estimate_group_order(const Eigen::VectorXd& group, bool lagged, double rel_element) {
  const double peak = group.size() ? group.cwiseAbs().maxCoeff() : 0.0;
  if (peak == 0.0) return 0;
  const double cut = rel_element * peak;
  const int size = static_cast<int>(group.size());
  if (!lagged) {
    int count = 0;
    for (int j = 0; j < size; ++j) count += std::abs(group(j)) > cut || std::abs(group(j)) == peak;
    return count;
  }
  for (int j = 0; j < size; ++j)
    if (std::abs(group(j)) > cut || std::abs(group(j)) == peak) return size - j;
  return 0;
}

void summarize_result(InferenceResult& result, const ThresholdPolicy& policy) {
  const auto& groups = result.groups;
  result.group_norms.resize(groups.count());
  result.estimated_orders.assign(groups.count(), 0);
  for (int g = 0; g < groups.count(); ++g) {
    const Eigen::VectorXd seg = groups.slice(result.w, g);
    result.group_norms(g) = seg.norm();
    result.estimated_orders[g] = estimate_group_order(seg, result.lagged, policy.rel_element);
  }
  const double total = result.w.norm();
  result.confidences = total > 0.0 ? (result.group_norms / total).eval()
                                   : Eigen::VectorXd::Zero(groups.count()).eval();
}

NetworkEstimate extract_network(const std::vector<InferenceResult>& results, int p, int m,
                                const ThresholdPolicy& policy) {
  require(static_cast<int>(results.size()) == p, ErrorCode::DimensionMismatch,
          "need one inference result per node");
  NetworkEstimate est;
  est.topology.a_edges = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, p, false);
  est.topology.b_edges = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, m, false);
  est.a_confidence = Eigen::MatrixXd::Zero(p, p);
  est.b_confidence = Eigen::MatrixXd::Zero(p, m);
  est.a_orders = Eigen::MatrixXi::Zero(p, p);
  est.b_orders = Eigen::MatrixXi::Zero(p, m);

  for (int i = 0; i < p; ++i) {
    const InferenceResult& res = results[i];
    const auto& groups = res.groups;
    const double total = res.w.norm();
    double peak = 0.0;
    for (int g = 0; g < groups.count(); ++g) peak = std::max(peak, groups.slice(res.w, g).norm());
    for (int g = 0; g < groups.count(); ++g) {
      const Eigen::VectorXd seg = groups.slice(res.w, g);
      const double norm = seg.norm();
      const bool link = norm > 0.0 && norm > policy.rel_group * peak;
      const double conf = total > 0.0 ? norm / total : 0.0;
      const int order = estimate_group_order(seg, res.lagged, policy.rel_element);
      const GroupLabel& label = groups.label(g);
      if (label.kind == RegulatorKind::Node) {
        require(label.index < p, ErrorCode::DimensionMismatch, "group label outside the network");
        est.topology.a_edges(i, label.index) = link;
        est.a_confidence(i, label.index) = conf;
        est.a_orders(i, label.index) = link ? order : 0;
      } else {
        require(label.index < m, ErrorCode::DimensionMismatch, "input label outside the network");
        est.topology.b_edges(i, label.index) = link;
        est.b_confidence(i, label.index) = conf;
        est.b_orders(i, label.index) = link ? order : 0;
      }
    }
  }
  return est;
}

}  // namespace gesbl
