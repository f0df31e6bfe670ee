#include "ctdc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "ctdc/error.hpp"
#include "ctdc/parallel.hpp"
#include "ctdc/simulator.hpp"
#include "posterior_engine.hpp"

namespace ctdc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using detail::PosteriorEngine;

// Working point of the EM: Cholesky factor instead of sigma.
struct Point {
  std::vector<double> betas;
  std::vector<double> gammas;
  CholeskyFactor factor;
};

VectorXd to_vector(const Point& x) {
  const auto K = static_cast<Eigen::Index>(x.betas.size());
  VectorXd v(2 * K + 3);
  for (Eigen::Index k = 0; k < K; ++k) {
    v[k] = x.betas[static_cast<std::size_t>(k)];
    v[K + k] = x.gammas[static_cast<std::size_t>(k)];
  }
  v[2 * K] = x.factor.l11;
  v[2 * K + 1] = x.factor.l21;
  v[2 * K + 2] = x.factor.l22;
  return v;
}

Point from_vector(const VectorXd& v, const Point& shape) {
  Point x = shape;
  const auto K = static_cast<Eigen::Index>(x.betas.size());
  for (Eigen::Index k = 0; k < K; ++k) {
    x.betas[static_cast<std::size_t>(k)] = v[k];
    x.gammas[static_cast<std::size_t>(k)] = v[K + k];
  }
  x.factor = {v[2 * K], v[2 * K + 1], v[2 * K + 2]};
  if (!v.allFinite()) throw_convergence("extrapolated parameters are not finite");
  return x;
}

Point to_point(const FixedParams& p) { return {p.betas, p.gammas, psd_cholesky(p.sigma)}; }

FixedParams to_params(const Point& x, const std::vector<std::string>& task_ids) {
  FixedParams p;
  p.task_ids = task_ids;
  p.betas = x.betas;
  p.gammas = x.gammas;
  p.sigma = x.factor.covariance();
  return p;
}

// Posterior over each person's adaptive nodes from the last E-step.
struct PersonPosterior {
  detail::NodeLayout layout;
  std::vector<double> post;      // [r * P + s]
  std::vector<double> marginal;  // [r]
  double mean_u1 = 0.0;
  double mean_u2 = 0.0;
};

struct Expectations {
  double loglik = 0.0;
  std::vector<PersonPosterior> persons;
};

Expectations e_step(PosteriorEngine& engine, const Point& x, bool with_stats) {
  engine.set_params(x.betas, x.gammas, x.factor);
  const Dataset& data = engine.data();
  const std::size_t P = engine.points();
  const auto& z = engine.rule().nodes;
  Expectations ex;
  if (with_stats) ex.persons.resize(data.num_persons());
  std::vector<double> buf(engine.nodes());
  for (std::size_t i = 0; i < data.num_persons(); ++i) {
    const detail::NodeLayout lay = engine.log_joint(i, buf);
    ex.loglik += PosteriorEngine::normalize(buf);
    if (!with_stats) continue;
    PersonPosterior& pp = ex.persons[i];
    pp.layout = lay;
    pp.marginal.assign(P, 0.0);
    for (std::size_t r = 0; r < P; ++r) {
      double m = 0.0, mu2 = 0.0;
      for (std::size_t s = 0; s < P; ++s) {
        m += buf[r * P + s];
        mu2 += buf[r * P + s] * z[s];
      }
      pp.marginal[r] = m;
      pp.mean_u1 += m * lay.u1(z[r]);
      pp.mean_u2 += m * (lay.m2 + lay.b21 * z[r]) + lay.b22 * mu2;
    }
    pp.post = buf;
  }
  return ex;
}

// Expected complete-data log-likelihood, choice block in (beta_1..K, l11).
double q_choice(const PosteriorEngine& engine, const Expectations& ex, const VectorXd& y, VectorXd* grad,
                MatrixXd* hess) {
  const Dataset& data = engine.data();
  const std::size_t K = data.num_tasks();
  const std::size_t P = engine.points();
  const auto& z = engine.rule().nodes;
  const auto L = static_cast<Eigen::Index>(K);
  const double l11 = y[L];
  const bool derivs = grad || hess;
  if (grad) grad->setZero(L + 1);
  if (hess) hess->setZero(L + 1, L + 1);
  double f = 0.0;
  for (std::size_t i = 0; i < data.num_persons(); ++i) {
    const PersonPosterior& pp = ex.persons[i];
    for (std::size_t k = 0; k < K; ++k) {
      const auto& cell = data.cell(i, k);
      if (!cell.present || cell.situations.empty()) continue;
      const auto ki = static_cast<Eigen::Index>(k);
      for (std::size_t r = 0; r < P; ++r) {
        const double p = pp.marginal[r];
        if (p == 0.0) continue;
        const double u1 = pp.layout.u1(z[r]);
        const detail::ChoiceSum c = engine.choice(i, k, y[ki] + l11 * u1, derivs);
        f += p * c.value;
        if (grad) {
          (*grad)[ki] += p * c.d1;
          (*grad)[L] += p * c.d1 * u1;
        }
        if (hess) {
          (*hess)(ki, ki) += p * c.d2;
          (*hess)(ki, L) += p * c.d2 * u1;
          (*hess)(L, L) += p * c.d2 * u1 * u1;
        }
      }
    }
  }
  if (hess) {
    for (Eigen::Index k = 0; k < L; ++k) (*hess)(L, k) = (*hess)(k, L);
  }
  return f;
}

// Expected complete-data log-likelihood, timing block in (gamma_1..K, l21, l22).
double q_timing(const PosteriorEngine& engine, const Expectations& ex, const VectorXd& y, VectorXd* grad,
                MatrixXd* hess) {
  const Dataset& data = engine.data();
  const std::size_t K = data.num_tasks();
  const std::size_t P = engine.points();
  const auto& z = engine.rule().nodes;
  const auto i21 = static_cast<Eigen::Index>(K);
  const auto i22 = static_cast<Eigen::Index>(K + 1);
  const double l21 = y[i21];
  const double l22 = y[i22];
  const bool derivs = grad || hess;
  if (grad) grad->setZero(i22 + 1);
  if (hess) hess->setZero(i22 + 1, i22 + 1);
  std::vector<double> eg(K);
  for (std::size_t k = 0; k < K; ++k) eg[k] = std::exp(y[static_cast<Eigen::Index>(k)]);
  std::vector<double> e1(P), e2(P);
  double f = 0.0;
  for (std::size_t i = 0; i < data.num_persons(); ++i) {
    double gaps = 0.0, rate = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& cell = data.cell(i, k);
      if (!cell.present || cell.num_events < 2) continue;
      const double g = static_cast<double>(cell.num_events - 1);
      gaps += g;
      rate += cell.active_span * eg[k];
      f += g * y[static_cast<Eigen::Index>(k)];
      if (grad) (*grad)[static_cast<Eigen::Index>(k)] += g;
    }
    if (gaps == 0.0) continue;
    const PersonPosterior& pp = ex.persons[i];
    const detail::NodeLayout& lay = pp.layout;
    // exponent l21 u1 + l22 u2 = e0 + c1 z_r + c2 z_s
    const double e0 = l21 * lay.m1 + l22 * lay.m2;
    const double c1 = l21 * lay.b11 + l22 * lay.b21;
    const double c2 = l22 * lay.b22;
    for (std::size_t r = 0; r < P; ++r) {
      e1[r] = std::exp(e0 + c1 * z[r]);
      e2[r] = std::exp(c2 * z[r]);
    }
    double S = 0.0, S1 = 0.0, S2 = 0.0, S11 = 0.0, S12 = 0.0, S22 = 0.0;
    for (std::size_t r = 0; r < P; ++r) {
      const double* p = &pp.post[r * P];
      double t0 = 0.0, t1 = 0.0, t2 = 0.0;
      for (std::size_t s = 0; s < P; ++s) {
        const double w = p[s] * e2[s];
        t0 += w;
        if (derivs) {
          t1 += w * z[s];
          t2 += w * z[s] * z[s];
        }
      }
      const double a = e1[r];
      S += a * t0;
      if (derivs) {
        const double u1 = lay.u1(z[r]);
        const double v = lay.m2 + lay.b21 * z[r];  // u2 = v + b22 z_s
        const double m_u2 = v * t0 + lay.b22 * t1;
        const double m_u2u2 = v * v * t0 + 2.0 * v * lay.b22 * t1 + lay.b22 * lay.b22 * t2;
        S1 += a * u1 * t0;
        S2 += a * m_u2;
        S11 += a * u1 * u1 * t0;
        S12 += a * u1 * m_u2;
        S22 += a * m_u2u2;
      }
    }
    f += gaps * (l21 * pp.mean_u1 + l22 * pp.mean_u2) - rate * S;
    if (!derivs) continue;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& cell = data.cell(i, k);
      if (!cell.present || cell.num_events < 2) continue;
      const auto ki = static_cast<Eigen::Index>(k);
      const double dk = cell.active_span * eg[k];
      if (grad) (*grad)[ki] -= dk * S;
      if (hess) {
        (*hess)(ki, ki) -= dk * S;
        (*hess)(ki, i21) -= dk * S1;
        (*hess)(ki, i22) -= dk * S2;
      }
    }
    if (grad) {
      (*grad)[i21] += gaps * pp.mean_u1 - rate * S1;
      (*grad)[i22] += gaps * pp.mean_u2 - rate * S2;
    }
    if (hess) {
      (*hess)(i21, i21) -= rate * S11;
      (*hess)(i21, i22) -= rate * S12;
      (*hess)(i22, i22) -= rate * S22;
    }
  }
  if (hess) {
    for (Eigen::Index k = 0; k < i21; ++k) {
      (*hess)(i21, k) = (*hess)(k, i21);
      (*hess)(i22, k) = (*hess)(k, i22);
    }
    (*hess)(i22, i21) = (*hess)(i21, i22);
  }
  return f;
}

using Objective = std::function<double(const VectorXd&, VectorXd*, MatrixXd*)>;

// Damped Newton ascent for a concave objective; never accepts a decrease.
VectorXd newton_maximize(const Objective& fn, VectorXd x, int max_iter = 20) {
  VectorXd g;
  MatrixXd H;
  double f = fn(x, &g, &H);
  for (int it = 0; it < max_iter; ++it) {
    MatrixXd M = -H;
    const double scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    double ridge = 0.0;
    VectorXd d;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::LLT<MatrixXd> llt(M + ridge * MatrixXd::Identity(M.rows(), M.cols()));
      if (llt.info() == Eigen::Success) {
        d = llt.solve(g);
        break;
      }
      ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 10.0;
    }
    if (d.size() == 0 || !d.allFinite()) break;
    if (g.cwiseAbs().maxCoeff() < 1e-9 || !(g.dot(d) > 0.0)) break;
    if (g.dot(d) < 1e-10) {
      // Predicted gain is below the rounding error of f; the quadratic model
      // is exact to that order, so take the full step.
      x += d;
      f = fn(x, &g, &H);
      continue;
    }
    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      const VectorXd trial = x + step * d;
      const double ft = fn(trial, nullptr, nullptr);
      if (std::isfinite(ft) && ft >= f) {
        x = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    f = fn(x, &g, &H);
  }
  return x;
}

struct Score {
  VectorXd natural;  // (beta, gamma, l11, l21, l22)
  std::vector<double> unconstrained;
};

Score score_at(const PosteriorEngine& engine, const Expectations& ex, const Point& x) {
  const std::size_t K = engine.data().num_tasks();
  VectorXd yc(static_cast<Eigen::Index>(K + 1)), yt(static_cast<Eigen::Index>(K + 2));
  for (std::size_t k = 0; k < K; ++k) {
    yc[static_cast<Eigen::Index>(k)] = x.betas[k];
    yt[static_cast<Eigen::Index>(k)] = x.gammas[k];
  }
  yc[static_cast<Eigen::Index>(K)] = x.factor.l11;
  yt[static_cast<Eigen::Index>(K)] = x.factor.l21;
  yt[static_cast<Eigen::Index>(K + 1)] = x.factor.l22;
  VectorXd gc, gt;
  q_choice(engine, ex, yc, &gc, nullptr);
  q_timing(engine, ex, yt, &gt, nullptr);

  Score s;
  s.natural.resize(static_cast<Eigen::Index>(2 * K + 3));
  s.natural << gc.head(static_cast<Eigen::Index>(K)), gt.head(static_cast<Eigen::Index>(K)),
      gc[static_cast<Eigen::Index>(K)], gt[static_cast<Eigen::Index>(K)], gt[static_cast<Eigen::Index>(K + 1)];
  s.unconstrained.assign(s.natural.data(), s.natural.data() + s.natural.size());
  s.unconstrained[2 * K] *= x.factor.l11;
  s.unconstrained[2 * K + 2] *= x.factor.l22;
  return s;
}

Point m_step(const PosteriorEngine& engine, const Expectations& ex, const Point& x) {
  const std::size_t K = engine.data().num_tasks();
  VectorXd yc(static_cast<Eigen::Index>(K + 1)), yt(static_cast<Eigen::Index>(K + 2));
  for (std::size_t k = 0; k < K; ++k) {
    yc[static_cast<Eigen::Index>(k)] = x.betas[k];
    yt[static_cast<Eigen::Index>(k)] = x.gammas[k];
  }
  yc[static_cast<Eigen::Index>(K)] = x.factor.l11;
  yt[static_cast<Eigen::Index>(K)] = x.factor.l21;
  yt[static_cast<Eigen::Index>(K + 1)] = x.factor.l22;

  yc = newton_maximize([&](const VectorXd& y, VectorXd* g, MatrixXd* h) { return q_choice(engine, ex, y, g, h); },
                       yc);
  yt = newton_maximize([&](const VectorXd& y, VectorXd* g, MatrixXd* h) { return q_timing(engine, ex, y, g, h); },
                       yt);

  Point out = x;
  for (std::size_t k = 0; k < K; ++k) {
    out.betas[k] = yc[static_cast<Eigen::Index>(k)];
    out.gammas[k] = yt[static_cast<Eigen::Index>(k)];
  }
  out.factor.l11 = yc[static_cast<Eigen::Index>(K)];
  out.factor.l21 = yt[static_cast<Eigen::Index>(K)];
  out.factor.l22 = yt[static_cast<Eigen::Index>(K + 1)];
  // The symmetric node set makes column sign flips of L exact symmetries of
  // the objective; keep the diagonal non-negative.
  if (out.factor.l11 < 0.0) {
    out.factor.l11 = -out.factor.l11;
    out.factor.l21 = -out.factor.l21;
  }
  out.factor.l22 = std::abs(out.factor.l22);
  return out;
}

void check_compatible(const Dataset& data, const FixedParams& params) {
  params.check();
  if (params.num_tasks() != data.num_tasks()) throw_usage("parameters and data cover different numbers of tasks");
  for (std::size_t k = 0; k < data.num_tasks(); ++k) {
    if (params.task_ids[k] != data.task(k).id()) {
      throw_usage("parameter task order does not match the data: expected " + data.task(k).id() + ", got " +
                  params.task_ids[k]);
    }
  }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

double marginal_log_likelihood(const Dataset& data, const FixedParams& params, int points_per_dim) {
  check_compatible(data, params);
  if (data.num_persons() == 0) throw_data("marginal_log_likelihood: empty data");
  PosteriorEngine engine(data, points_per_dim);
  return e_step(engine, to_point(params), false).loglik;
}

double marginal_log_likelihood(const Dataset& data, const FixedParams& params, const QuadratureGrid& grid) {
  const CholeskyFactor expect = psd_cholesky(params.sigma);
  const CholeskyFactor& got = grid.factor();
  const double tol = 1e-12 * std::max(1.0, std::abs(params.sigma.s11) + std::abs(params.sigma.s22));
  if (std::abs(expect.l11 - got.l11) > tol || std::abs(expect.l21 - got.l21) > tol ||
      std::abs(expect.l22 - got.l22) > tol) {
    throw_usage("quadrature grid was built for a different covariance");
  }
  return marginal_log_likelihood(data, params, grid.points_per_dim());
}

std::vector<std::string> unconstrained_names(const std::vector<std::string>& task_ids) {
  std::vector<std::string> out;
  for (const auto& id : task_ids) out.push_back("beta[" + id + "]");
  for (const auto& id : task_ids) out.push_back("gamma[" + id + "]");
  out.insert(out.end(), {"log_l11", "l21", "log_l22"});
  return out;
}

std::vector<double> to_unconstrained(const FixedParams& params) {
  params.check();
  const CholeskyFactor f = psd_cholesky(params.sigma);
  if (!(f.l11 > 0.0) || !(f.l22 > 0.0)) throw_usage("unconstrained coordinates need a positive definite sigma");
  std::vector<double> u(params.betas);
  u.insert(u.end(), params.gammas.begin(), params.gammas.end());
  u.push_back(std::log(f.l11));
  u.push_back(f.l21);
  u.push_back(std::log(f.l22));
  return u;
}

FixedParams from_unconstrained(const std::vector<double>& u, const std::vector<std::string>& task_ids) {
  const std::size_t K = task_ids.size();
  if (u.size() != 2 * K + 3) throw_usage("unconstrained vector has the wrong length");
  Point x;
  x.betas.assign(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(K));
  x.gammas.assign(u.begin() + static_cast<std::ptrdiff_t>(K), u.begin() + static_cast<std::ptrdiff_t>(2 * K));
  x.factor = {std::exp(u[2 * K]), u[2 * K + 1], std::exp(u[2 * K + 2])};
  return to_params(x, task_ids);
}

std::vector<double> marginal_score(const Dataset& data, const FixedParams& params, int points_per_dim) {
  check_compatible(data, params);
  PosteriorEngine engine(data, points_per_dim);
  const Point x = to_point(params);
  const Expectations ex = e_step(engine, x, true);
  return score_at(engine, ex, x).unconstrained;
}

FixedParams default_start(const Dataset& data) {
  FixedParams p;
  p.task_ids = data.task_ids();
  p.sigma = {1.0, 0.0, 0.25};
  for (std::size_t k = 0; k < data.num_tasks(); ++k) {
    double gaps = 0.0, span = 0.0;
    for (std::size_t i = 0; i < data.num_persons(); ++i) {
      const auto& c = data.cell(i, k);
      if (!c.present || c.num_events < 2) continue;
      gaps += static_cast<double>(c.num_events - 1);
      span += c.active_span;
    }
    p.betas.push_back(0.0);
    p.gammas.push_back(gaps > 0.0 && span > 0.0 ? std::log(gaps / span) : 0.0);
  }
  return p;
}

FitResult fit_em(const Dataset& data, const EmOptions& options) { return fit_em(data, default_start(data), options); }

FitResult fit_em(const Dataset& data, const FixedParams& init, const EmOptions& options) {
  check_compatible(data, init);
  if (data.num_records() == 0) throw_data("no records");
  if (options.points_per_dim < 2) throw_usage("fit_em: points_per_dim must be at least 2");

  PosteriorEngine engine(data, options.points_per_dim);
  const auto task_ids = data.task_ids();
  FitResult result;
  result.points_per_dim = options.points_per_dim;

  Point x = to_point(init);
  Expectations ex = e_step(engine, x, true);
  double previous = -std::numeric_limits<double>::infinity();
  double last_step = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;

  // Records the current iterate and reports whether the stopping rule holds.
  auto settle = [&] {
    result.loglik_trace.push_back(ex.loglik);
    result.final_loglik = ex.loglik;
    result.em_iterations = iter;
    double norm = 0.0;
    for (double v : score_at(engine, ex, x).unconstrained) norm = std::max(norm, std::abs(v));
    result.score_norm = norm;
    const double delta = ex.loglik - previous;
    result.converged =
        iter > 0 && (delta < options.loglik_tol || last_step < options.param_tol) && norm < options.score_tol;
    return result.converged || iter >= options.max_iters;
  };
  auto move_to = [&](Point next, Expectations next_ex) {
    last_step = max_abs_diff(to_params(next, task_ids).flatten(), to_params(x, task_ids).flatten());
    previous = ex.loglik;
    x = std::move(next);
    ex = std::move(next_ex);
    ++iter;
    return settle();
  };
  auto em_step = [&] {
    Point next = m_step(engine, ex, x);
    Expectations next_ex = e_step(engine, next, true);
    return move_to(std::move(next), std::move(next_ex));
  };

  bool done = settle();
  while (!done) {
    if (!options.accelerate) {
      done = em_step();
      continue;
    }
    // Squared extrapolation from two plain steps; the extrapolated point is
    // kept only if one further EM step from it does not lower the likelihood.
    const VectorXd x0 = to_vector(x);
    if ((done = em_step())) break;
    const VectorXd x1 = to_vector(x);
    if ((done = em_step())) break;
    const VectorXd x2 = to_vector(x);
    const VectorXd r = x1 - x0;
    const VectorXd v = x2 - x1 - r;
    if (!(v.norm() > 0.0)) continue;
    const double alpha = std::min(-1.0, -r.norm() / v.norm());
    if (alpha == -1.0) continue;
    const VectorXd xp = x0 - 2.0 * alpha * r + alpha * alpha * v;
    try {
      const Point jump = from_vector(xp, x);
      const Expectations jump_ex = e_step(engine, jump, true);
      Point next = m_step(engine, jump_ex, jump);
      Expectations next_ex = e_step(engine, next, true);
      if (std::isfinite(next_ex.loglik) && next_ex.loglik >= ex.loglik) {
        done = move_to(std::move(next), std::move(next_ex));
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::convergence) throw;
    }
  }
  result.params = to_params(x, task_ids);

  if (options.compute_standard_errors) {
    StandardErrors se = standard_errors(data, result.params, options.points_per_dim);
    result.std_errors = std::move(se.values);
    result.se_diagnostic = std::move(se.diagnostic);
  }
  return result;
}

StandardErrors standard_errors(const Dataset& data, const FixedParams& params_hat, int points_per_dim) {
  check_compatible(data, params_hat);
  StandardErrors out;
  const CholeskyFactor f = psd_cholesky(params_hat.sigma);
  if (!(f.l11 > 1e-8) || !(f.l22 > 1e-8)) {
    out.diagnostic = "sigma is on the boundary of the positive semidefinite cone; standard errors withheld";
    return out;
  }
  const auto task_ids = params_hat.task_ids;
  const std::vector<double> u = to_unconstrained(params_hat);
  const auto n = static_cast<Eigen::Index>(u.size());
  MatrixXd H(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-4 * std::max(1.0, std::abs(u[static_cast<std::size_t>(j)]));
    std::vector<double> up = u, dn = u;
    up[static_cast<std::size_t>(j)] += h;
    dn[static_cast<std::size_t>(j)] -= h;
    const auto sp = marginal_score(data, from_unconstrained(up, task_ids), points_per_dim);
    const auto sm = marginal_score(data, from_unconstrained(dn, task_ids), points_per_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      H(i, j) = (sp[static_cast<std::size_t>(i)] - sm[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
  }
  const MatrixXd info = -0.5 * (H + H.transpose());
  Eigen::LLT<MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    out.diagnostic = "observed information is not positive definite; standard errors withheld";
    return out;
  }
  const MatrixXd cov_u = llt.solve(MatrixXd::Identity(n, n));

  const std::size_t K = task_ids.size();
  const auto Ki = static_cast<Eigen::Index>(K);
  MatrixXd J = MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < 2 * Ki; ++k) J(k, k) = 1.0;
  const Eigen::Index a = 2 * Ki, b = 2 * Ki + 1, c = 2 * Ki + 2;
  J(a, a) = 2.0 * f.l11 * f.l11;        // d s11 / d log l11
  J(b, a) = f.l11 * f.l21;              // d s12 / d log l11
  J(b, b) = f.l11;                      // d s12 / d l21
  J(c, b) = 2.0 * f.l21;                // d s22 / d l21
  J(c, c) = 2.0 * f.l22 * f.l22;        // d s22 / d log l22
  const MatrixXd cov = J * cov_u * J.transpose();
  std::vector<double> se(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) se[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, cov(i, i)));
  out.values = std::move(se);
  return out;
}

double sample_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw_usage("sample_quantile: no values");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CorrelationInterval correlation_with_ci(const FitResult& fit, const Dataset& data, std::size_t bootstrap_reps,
                                        std::uint64_t seed, const EmOptions& options, std::size_t jobs) {
  if (bootstrap_reps < 200) throw_usage("correlation_with_ci: at least 200 bootstrap replicates are required");
  const std::size_t N = data.num_persons();
  if (N == 0) throw_data("correlation_with_ci: empty data");
  EmOptions refit = options;
  refit.compute_standard_errors = false;

  std::vector<double> draws(bootstrap_reps, std::numeric_limits<double>::quiet_NaN());
  parallel_for(bootstrap_reps, jobs, [&](std::size_t b) {
    Rng rng = make_rng(seed, b, 0xB0075712ull);
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    std::vector<std::size_t> idx(N);
    for (auto& v : idx) v = pick(rng);
    const Dataset sample = data.resample(idx);
    try {
      const FitResult r = fit_em(sample, fit.params, refit);
      if (r.converged) draws[b] = r.params.sigma.correlation();
    } catch (const Error&) {
      // counted as a failed replicate below
    }
  });

  CorrelationInterval ci;
  ci.estimate = fit.params.sigma.correlation();
  ci.replicates = bootstrap_reps;
  for (double d : draws) {
    if (std::isnan(d)) {
      ++ci.failures;
    } else {
      ci.draws.push_back(d);
    }
  }
  ci.flagged = static_cast<double>(ci.failures) > 0.1 * static_cast<double>(bootstrap_reps);
  if (ci.draws.empty()) throw_convergence("correlation_with_ci: every bootstrap refit failed");
  ci.lower = sample_quantile(ci.draws, 0.025);
  ci.upper = sample_quantile(ci.draws, 0.975);
  return ci;
}

}  // namespace ctdc
