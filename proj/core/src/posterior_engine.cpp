#include "posterior_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ctdc/error.hpp"

namespace ctdc::detail {

PosteriorEngine::PosteriorEngine(const Dataset& data, int points_per_dim)
    : data_(data), p_(static_cast<std::size_t>(points_per_dim)), rule_(gauss_hermite_normal(points_per_dim)) {
  log_w_.resize(p_);
  for (std::size_t r = 0; r < p_; ++r) log_w_[r] = std::log(rule_.weights[r]) + 0.5 * rule_.nodes[r] * rule_.nodes[r];

  const std::size_t K = data.num_tasks();
  values_.resize(K);
  types_.resize(K);
  std::size_t widest = 1;
  for (std::size_t k = 0; k < K; ++k) {
    auto& vals = values_[k];
    for (const auto& t : data.situation_types(k)) vals.insert(vals.end(), t.values.begin(), t.values.end());
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    widest = std::max(widest, vals.size());
    for (const auto& t : data.situation_types(k)) {
      CompiledType ct;
      ct.chosen = t.chosen;
      for (double v : t.values) {
        const auto idx = static_cast<std::uint32_t>(std::lower_bound(vals.begin(), vals.end(), v) - vals.begin());
        if (!ct.mult.empty() && ct.mult.back().first == idx) {
          ct.mult.back().second += 1.0;
        } else {
          ct.mult.emplace_back(idx, 1.0);
        }
      }
      types_[k].push_back(std::move(ct));
    }
  }
  exp_buf_.resize(widest);

  timing_.resize(data.num_persons());
  for (std::size_t i = 0; i < data.num_persons(); ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto& c = data.cell(i, k);
      if (!c.present || c.num_events < 2) continue;
      timing_[i].gaps += static_cast<double>(c.num_events - 1);
      timing_[i].spans.emplace_back(k, c.active_span);
    }
  }
  modes_.assign(data.num_persons(), {0.0, 0.0});
  e1_.resize(p_);
  e2_.resize(p_);
}

void PosteriorEngine::set_params(const std::vector<double>& betas, const std::vector<double>& gammas,
                                 const CholeskyFactor& factor) {
  const std::size_t K = data_.num_tasks();
  if (betas.size() != K || gammas.size() != K) throw_usage("parameter count does not match the dataset tasks");
  betas_ = betas;
  gammas_ = gammas;
  exp_gammas_.resize(K);
  for (std::size_t k = 0; k < K; ++k) exp_gammas_[k] = std::exp(gammas[k]);
  factor_ = factor;
}

ChoiceSum PosteriorEngine::choice(std::size_t person, std::size_t k, double a, bool derivatives) const {
  ChoiceSum out;
  const auto& cell = data_.cell(person, k);
  if (!cell.present || cell.situations.empty()) return out;
  const auto& vals = values_[k];
  const double shift = a >= 0.0 ? a * vals.back() : a * vals.front();
  for (std::size_t d = 0; d < vals.size(); ++d) exp_buf_[d] = std::exp(a * vals[d] - shift);
  for (const auto& sc : cell.situations) {
    const CompiledType& t = types_[k][sc.type];
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (const auto& [idx, m] : t.mult) {
      const double e = m * exp_buf_[idx];
      s0 += e;
      if (derivatives) {
        const double v = vals[idx];
        s1 += e * v;
        s2 += e * v * v;
      }
    }
    const double n = sc.count;
    out.value += n * (a * t.chosen - shift - std::log(s0));
    if (derivatives) {
      const double mean = s1 / s0;
      out.d1 += n * (t.chosen - mean);
      out.d2 -= n * std::max(0.0, s2 / s0 - mean * mean);
    }
  }
  return out;
}

NodeLayout PosteriorEngine::find_layout(std::size_t person) {
  const CholeskyFactor& L = factor_;
  const std::size_t K = data_.num_tasks();
  const Timing& tm = timing_[person];
  double rate = 0.0, base = 0.0;
  for (const auto& [k, d] : tm.spans) {
    rate += d * exp_gammas_[k];
    base += static_cast<double>(data_.cell(person, k).num_events - 1) * gammas_[k];
  }

  struct Eval {
    double f, g1, g2, h11, h12, h22;
  };
  auto evaluate = [&](double u1, double u2, bool derivs) {
    const double theta = L.l11 * u1;
    const double tau = L.l21 * u1 + L.l22 * u2;
    double f = 0.0, gt = 0.0, ht = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const ChoiceSum c = choice(person, k, betas_[k] + theta, derivs);
      f += c.value;
      gt += c.d1;
      ht += c.d2;
    }
    const double et = rate * std::exp(tau);
    f += base + tm.gaps * tau - et - 0.5 * (u1 * u1 + u2 * u2);
    Eval e{f, 0, 0, 0, 0, 0};
    if (derivs) {
      const double gs = tm.gaps - et;
      const double hs = -et;
      e.g1 = L.l11 * gt + L.l21 * gs - u1;
      e.g2 = L.l22 * gs - u2;
      e.h11 = L.l11 * L.l11 * ht + L.l21 * L.l21 * hs - 1.0;
      e.h12 = L.l21 * L.l22 * hs;
      e.h22 = L.l22 * L.l22 * hs - 1.0;
    }
    return e;
  };

  auto& mode = modes_[person];
  double u1 = mode[0], u2 = mode[1];
  Eval cur = evaluate(u1, u2, true);
  if (!std::isfinite(cur.f)) {
    u1 = u2 = 0.0;
    cur = evaluate(u1, u2, true);
  }
  for (int iter = 0; iter < 100; ++iter) {
    const double a11 = -cur.h11, a12 = -cur.h12, a22 = -cur.h22;
    const double det = a11 * a22 - a12 * a12;
    const double d1 = (a22 * cur.g1 - a12 * cur.g2) / det;
    const double d2 = (a11 * cur.g2 - a12 * cur.g1) / det;
    if (std::max(std::abs(d1), std::abs(d2)) < 1e-13 * (1.0 + std::abs(u1) + std::abs(u2))) break;
    double step = 1.0;
    bool moved = false;
    for (int half = 0; half < 60; ++half) {
      const double n1 = u1 + step * d1, n2 = u2 + step * d2;
      const Eval trial = evaluate(n1, n2, false);
      if (std::isfinite(trial.f) && trial.f >= cur.f) {
        u1 = n1;
        u2 = n2;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    cur = evaluate(u1, u2, true);
  }
  mode = {u1, u2};

  // Curvature of the log posterior is at least the prior's, so A >= I.
  const double a11 = -cur.h11, a12 = -cur.h12, a22 = -cur.h22;
  const double det = a11 * a22 - a12 * a12;
  const double i11 = a22 / det, i12 = -a12 / det;
  NodeLayout lay;
  lay.m1 = u1;
  lay.m2 = u2;
  lay.b11 = std::sqrt(i11);
  lay.b21 = i12 / lay.b11;
  lay.b22 = 1.0 / std::sqrt(a22);  // Schur complement of i11
  return lay;
}

NodeLayout PosteriorEngine::log_joint(std::size_t person, std::vector<double>& out) {
  const NodeLayout lay = find_layout(person);
  const CholeskyFactor& L = factor_;
  const std::size_t K = data_.num_tasks();
  const auto& z = rule_.nodes;
  const Timing& tm = timing_[person];
  double rate = 0.0, base = 0.0;
  for (const auto& [k, d] : tm.spans) {
    rate += d * exp_gammas_[k];
    base += static_cast<double>(data_.cell(person, k).num_events - 1) * gammas_[k];
  }
  // tau at node (r, s) = c0 + c1 z_r + c2 z_s
  const double c0 = L.l21 * lay.m1 + L.l22 * lay.m2;
  const double c1 = L.l21 * lay.b11 + L.l22 * lay.b21;
  const double c2 = L.l22 * lay.b22;
  const double scale = rate * std::exp(c0);
  const double log_det = std::log(lay.b11) + std::log(lay.b22);
  for (std::size_t s = 0; s < p_; ++s) e2_[s] = std::exp(c2 * z[s]);

  out.resize(p_ * p_);
  for (std::size_t r = 0; r < p_; ++r) {
    const double u1 = lay.u1(z[r]);
    const double theta = L.l11 * u1;
    double row = log_w_[r] + log_det + base + tm.gaps * (c0 + c1 * z[r]) - 0.5 * u1 * u1;
    for (std::size_t k = 0; k < K; ++k) row += choice(person, k, betas_[k] + theta, false).value;
    const double b = scale * std::exp(c1 * z[r]);
    const double m2r = lay.m2 + lay.b21 * z[r];
    double* o = &out[r * p_];
    for (std::size_t s = 0; s < p_; ++s) {
      const double u2 = m2r + lay.b22 * z[s];
      o[s] = row + log_w_[s] + tm.gaps * c2 * z[s] - b * e2_[s] - 0.5 * u2 * u2;
    }
  }
  return lay;
}

double PosteriorEngine::normalize(std::vector<double>& values) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) top = std::max(top, v);
  if (!std::isfinite(top)) throw_convergence("posterior weights underflowed at every quadrature node");
  double total = 0.0;
  for (double& v : values) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : values) v /= total;
  return top + std::log(total);
}

}  // namespace ctdc::detail
