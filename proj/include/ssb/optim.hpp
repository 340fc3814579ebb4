#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ssb/common.hpp"

namespace ssb {

/// Objective protocol for the optimizers: value (and gradient when grad
/// is non-null) at x. Must be deterministic.
using Objective = std::function<double(std::span<const double> x, std::vector<double>* grad)>;

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr_decay = 1.0;       // multiplicative, applied every decay_steps
  int decay_steps = 0;         // 0 = no decay
};

struct AdamState {
  std::vector<double> m, v;
  long long t = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update; params are modified in place.
inline void adam_step(AdamState& st, std::span<double> params, std::span<const double> grad,
                      const AdamOptions& opt) {
  if (params.size() != st.m.size() || grad.size() != st.m.size())
    throw ConfigError("adam_step: shape mismatch");
  st.t += 1;
  double lr = opt.lr;
  if (opt.decay_steps > 0) {
    lr *= std::pow(opt.lr_decay, static_cast<double>((st.t - 1) / opt.decay_steps));
  }
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = opt.beta1 * st.m[i] + (1.0 - opt.beta1) * grad[i];
    st.v[i] = opt.beta2 * st.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

// ---------------------------------------------------------------------------
// L-BFGS with a strong-Wolfe line search
// ---------------------------------------------------------------------------

struct LbfgsOptions {
  int memory = 20;
  double c1 = 1e-4;      // sufficient decrease
  double c2 = 0.9;       // curvature
  int max_linesearch = 40;
  double grad_tol = 0.0;  // stop when the sup norm of g falls below this
};

struct LbfgsState {
  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho;
  int memory = 20;

  explicit LbfgsState(int m) : memory(m) {}
  int size() const { return static_cast<int>(s_hist.size()); }

  void push(std::vector<double> s, std::vector<double> y) {
    double sy = 0.0, yy = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      sy += s[i] * y[i];
      yy += y[i] * y[i];
      ss += s[i] * s[i];
    }
    // Curvature guard: skip pairs that cannot keep the Hessian estimate SPD.
    if (!(sy > 1e-10 * std::sqrt(ss * yy)) || !std::isfinite(sy)) return;
    s_hist.push_back(std::move(s));
    y_hist.push_back(std::move(y));
    rho.push_back(1.0 / sy);
    if (size() > memory && memory >= 0) {
      s_hist.erase(s_hist.begin());
      y_hist.erase(y_hist.begin());
      rho.erase(rho.begin());
    }
  }
};

enum class StepStatus { ok, converged, line_search_failed, fallback_used };

struct StepResult {
  StepStatus status = StepStatus::ok;
  double f = 0.0;
  double step_length = 0.0;
  int n_evals = 0;
  bool monotone = true;  // f_new <= f_old
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Two-loop recursion: d = -H g. With empty history this is -g
/// (plain gradient descent direction).
inline void lbfgs_direction(const LbfgsState& st, std::span<const double> g,
                            std::vector<double>& d) {
  const std::size_t n = g.size();
  d.assign(g.begin(), g.end());
  const int k = st.size();
  std::vector<double> alpha(k);
  for (int i = k - 1; i >= 0; --i) {
    alpha[i] = st.rho[i] * dot(st.s_hist[i], d);
    for (std::size_t j = 0; j < n; ++j) d[j] -= alpha[i] * st.y_hist[i][j];
  }
  if (k > 0) {
    const double yy = dot(st.y_hist[k - 1], st.y_hist[k - 1]);
    const double sy = 1.0 / st.rho[k - 1];
    const double gamma = sy / yy;
    for (std::size_t j = 0; j < n; ++j) d[j] *= gamma;
  }
  for (int i = 0; i < k; ++i) {
    const double beta = st.rho[i] * dot(st.y_hist[i], d);
    for (std::size_t j = 0; j < n; ++j) d[j] += (alpha[i] - beta) * st.s_hist[i][j];
  }
  for (std::size_t j = 0; j < n; ++j) d[j] = -d[j];
}

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  double f = 0.0;
  int n_evals = 0;
};

/// Strong-Wolfe line search (bracket + zoom; Nocedal-Wright style).
/// phi(a) = f(x + a d); requires phi'(0) < 0.
inline LineSearchResult wolfe_line_search(const Objective& obj, std::span<const double> x,
                                          std::span<const double> d, double f0, double dphi0,
                                          double alpha_init, const LbfgsOptions& opt,
                                          std::vector<double>& x_trial,
                                          std::vector<double>& g_trial) {
  LineSearchResult res;
  const std::size_t n = x.size();
  x_trial.resize(n);
  const auto phi = [&](double a, double& dphi) {
    for (std::size_t i = 0; i < n; ++i) x_trial[i] = x[i] + a * d[i];
    const double f = obj(x_trial, &g_trial);
    dphi = dot(g_trial, d);
    ++res.n_evals;
    return f;
  };

  double a_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
  double a = alpha_init;
  double a_hi = 0.0, f_hi = 0.0;
  double a_lo = 0.0, f_lo = f0, dphi_lo = dphi0;
  bool bracketed = false;

  for (int it = 0; it < opt.max_linesearch && !bracketed; ++it) {
    double dphi_a = 0.0;
    const double f_a = phi(a, dphi_a);
    if (!std::isfinite(f_a)) {
      a *= 0.25;  // back off from a blow-up region
      continue;
    }
    if (f_a > f0 + opt.c1 * a * dphi0 || (it > 0 && f_a >= f_prev)) {
      a_lo = a_prev; f_lo = f_prev; dphi_lo = dphi_prev;
      a_hi = a; f_hi = f_a;
      bracketed = true;
      break;
    }
    if (std::abs(dphi_a) <= -opt.c2 * dphi0) {
      res.ok = true;
      res.alpha = a;
      res.f = f_a;
      return res;
    }
    if (dphi_a >= 0.0) {
      a_lo = a; f_lo = f_a; dphi_lo = dphi_a;
      a_hi = a_prev; f_hi = f_prev;
      bracketed = true;
      break;
    }
    a_prev = a; f_prev = f_a; dphi_prev = dphi_a;
    a *= 2.0;
  }
  if (!bracketed) return res;

  // Zoom with quadratic interpolation (exact on quadratic objectives),
  // safeguarded by bisection.
  for (int it = 0; it < opt.max_linesearch; ++it) {
    if (!(std::abs(a_hi - a_lo) > 1e-16 * std::max(1.0, std::abs(a_lo)))) break;
    const double d = a_hi - a_lo;
    double a_trial = a_lo + 0.5 * d;
    const double denom = 2.0 * (f_hi - f_lo - dphi_lo * d);
    if (std::isfinite(f_hi) && std::abs(denom) > 0.0) {
      const double interp = a_lo - dphi_lo * d * d / denom;
      const double lo = std::min(a_lo, a_hi), hi = std::max(a_lo, a_hi);
      const double margin = 0.05 * std::abs(d);
      if (interp > lo + margin && interp < hi - margin) a_trial = interp;
    }
    double dphi_a = 0.0;
    const double f_a = phi(a_trial, dphi_a);
    if (!std::isfinite(f_a) || f_a > f0 + opt.c1 * a_trial * dphi0 || f_a >= f_lo) {
      a_hi = a_trial;
      f_hi = f_a;
    } else {
      if (std::abs(dphi_a) <= -opt.c2 * dphi0) {
        res.ok = true;
        res.alpha = a_trial;
        res.f = f_a;
        return res;
      }
      if (dphi_a * (a_hi - a_lo) >= 0.0) {
        a_hi = a_lo;
        f_hi = f_lo;
      }
      a_lo = a_trial;
      f_lo = f_a;
      dphi_lo = dphi_a;
    }
  }
  // Armijo-only fallback point, if any zoom iterate achieved decrease.
  if (f_lo < f0 && a_lo > 0.0) {
    double dphi_a = 0.0;
    res.f = phi(a_lo, dphi_a);
    res.ok = true;
    res.alpha = a_lo;
  }
  return res;
}

}  // namespace detail

/// One quasi-Newton step: two-loop direction, strong-Wolfe line search,
/// curvature-guarded history update. Falls back to a steepest-descent
/// backtracking step when the line search fails. x, f, g are updated in
/// place on success.
inline StepResult lbfgs_step(LbfgsState& st, std::vector<double>& x, double& f,
                             std::vector<double>& g, const Objective& obj,
                             const LbfgsOptions& opt) {
  StepResult out;
  const std::size_t n = x.size();
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  if (gmax <= opt.grad_tol || gmax == 0.0) {
    out.status = StepStatus::converged;
    out.f = f;
    return out;
  }
  std::vector<double> d;
  detail::lbfgs_direction(st, g, d);
  double dphi0 = detail::dot(g, d);
  if (!(dphi0 < 0.0)) {
    // Not a descent direction (stale curvature); reset to steepest descent.
    st.s_hist.clear();
    st.y_hist.clear();
    st.rho.clear();
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    dphi0 = detail::dot(g, d);
  }
  const double alpha0 = st.size() == 0 ? std::min(1.0, 1.0 / gmax) : 1.0;
  std::vector<double> x_trial, g_trial(n);
  auto ls = detail::wolfe_line_search(obj, x, d, f, dphi0, alpha0, opt, x_trial, g_trial);
  out.n_evals = ls.n_evals;
  if (!ls.ok) {
    // Steepest-descent backtracking rescue.
    out.status = StepStatus::fallback_used;
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    double a = 1.0 / std::max(1.0, gmax);
    for (int it = 0; it < opt.max_linesearch; ++it, a *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) x_trial[i] = x[i] + a * d[i];
      const double f_a = obj(x_trial, &g_trial);
      ++out.n_evals;
      if (std::isfinite(f_a) && f_a < f) {
        ls.ok = true;
        ls.alpha = a;
        ls.f = f_a;
        break;
      }
    }
    if (!ls.ok) {
      out.status = StepStatus::line_search_failed;
      out.f = f;
      return out;
    }
  }
  // Accept the step and update the curvature history.
  std::vector<double> s(n), ydiff(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = x_trial[i] - x[i];
    ydiff[i] = g_trial[i] - g[i];
  }
  out.monotone = ls.f <= f;
  out.f = ls.f;
  out.step_length = ls.alpha;
  x.swap(x_trial);
  g.swap(g_trial);
  f = ls.f;
  st.push(std::move(s), std::move(ydiff));
  if (out.status != StepStatus::fallback_used) out.status = StepStatus::ok;
  return out;
}

// ---------------------------------------------------------------------------
// Two-stage schedule
// ---------------------------------------------------------------------------

struct Schedule {
  int adam_iters = 0;
  int lbfgs_iters = 0;
  AdamOptions adam;
  LbfgsOptions lbfgs;
  int log_every = 10;
  int checkpoint_every = 0;  // 0 = stage boundaries and completion only
};

struct TrainDiagnostics {
  int iterations_run = 0;
  int lbfgs_steps_accepted = 0;
  int lbfgs_monotone_violations = 0;
  int lbfgs_fallback_steps = 0;
  bool lbfgs_stopped_early = false;
  double final_value = 0.0;
};

/// Callbacks: on_log(iter, f, x) at the configured cadence,
/// on_checkpoint(tag, x) at stage boundaries / cadence.
struct TrainCallbacks {
  std::function<void(int, double, std::span<const double>)> on_log;
  std::function<void(const std::string&, std::span<const double>)> on_checkpoint;
};

/// Runs Adam then L-BFGS on the objective, in place on x.
inline TrainDiagnostics train_schedule(const Objective& obj, std::vector<double>& x,
                                       const Schedule& sched, const TrainCallbacks& cb = {}) {
  TrainDiagnostics diag;
  std::vector<double> g;
  int iter = 0;
  const auto log_now = [&](double f) {
    if (cb.on_log) cb.on_log(iter, f, x);
  };
  const auto maybe_log = [&](double f) {
    if (cb.on_log && (iter % std::max(1, sched.log_every) == 0)) cb.on_log(iter, f, x);
  };
  const auto maybe_checkpoint = [&]() {
    if (cb.on_checkpoint && sched.checkpoint_every > 0 && iter > 0 &&
        iter % sched.checkpoint_every == 0) {
      cb.on_checkpoint("iter_" + std::to_string(iter), x);
    }
  };

  double f = obj(x, &g);
  log_now(f);

  AdamState adam(x.size());
  for (int i = 0; i < sched.adam_iters; ++i) {
    adam_step(adam, x, g, sched.adam);
    ++iter;
    f = obj(x, &g);
    maybe_log(f);
    maybe_checkpoint();
  }
  if (cb.on_checkpoint && sched.adam_iters > 0) cb.on_checkpoint("adam", x);

  LbfgsState st(sched.lbfgs.memory);
  for (int i = 0; i < sched.lbfgs_iters; ++i) {
    const StepResult r = lbfgs_step(st, x, f, g, obj, sched.lbfgs);
    if (r.status == StepStatus::converged || r.status == StepStatus::line_search_failed) {
      diag.lbfgs_stopped_early = true;
      break;
    }
    ++iter;
    ++diag.lbfgs_steps_accepted;
    if (!r.monotone) ++diag.lbfgs_monotone_violations;
    if (r.status == StepStatus::fallback_used) ++diag.lbfgs_fallback_steps;
    maybe_log(f);
    maybe_checkpoint();
  }
  if (cb.on_log && iter % std::max(1, sched.log_every) != 0) log_now(f);
  diag.iterations_run = iter;
  diag.final_value = f;
  return diag;
}

}  // namespace ssb
