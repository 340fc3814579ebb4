#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ssb/net.hpp"
#include "ssb/optim.hpp"

namespace ssb {

namespace detail {

/// |got - want| relative to the larger of the two, floored by a
/// characteristic scale so near-zero entries are judged against the
/// magnitude of their siblings rather than against themselves.
inline double rel_err(double got, double want, double scale_floor) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), scale_floor});
}

}  // namespace detail

/// Max relative error of the analytic gradient/Hessian of the
/// parity-symmetrized network against central finite differences of its
/// value at y.
inline double jet_fd_error(const ModelParams& net, const ParityTag& parity, const Point& y,
                           double h = 1e-4) {
  JetEvaluator ev(net, parity);
  const Jet2 jet = ev.eval(y);
  const int d = net.dim();
  const auto value = [&](const Point& p) { return ev.eval(p).v; };
  const int nh = d == 1 ? 1 : 3;
  // Scale floors: second differences of the value carry ~eps/h^2 roundoff,
  // so near-zero Hessian entries are judged against the jet's curvature
  // scale rather than entrywise.
  double gscale = 1e-3, hscale = 1e-2;
  for (int k = 0; k < d; ++k) gscale = std::max(gscale, std::abs(jet.g[k]));
  for (int k = 0; k < nh; ++k) hscale = std::max(hscale, std::abs(jet.h[k]));
  double err = 0.0;
  for (int k = 0; k < d; ++k) {
    Point yp = y, ym = y;
    yp[k] += h;
    ym[k] -= h;
    const double fd = (value(yp) - value(ym)) / (2.0 * h);
    err = std::max(err, detail::rel_err(jet.g[k], fd, gscale));
  }
  const double v0 = value(y);
  for (int k = 0; k < d; ++k) {
    Point yp = y, ym = y;
    yp[k] += h;
    ym[k] -= h;
    const double fd = (value(yp) - 2.0 * v0 + value(ym)) / (h * h);
    const int hidx = (d == 2 && k == 1) ? 2 : 0;
    err = std::max(err, detail::rel_err(jet.h[hidx], fd, hscale));
  }
  if (d == 2) {
    Point pp = y, pm = y, mp = y, mm = y;
    pp[0] += h; pp[1] += h;
    pm[0] += h; pm[1] -= h;
    mp[0] -= h; mp[1] += h;
    mm[0] -= h; mm[1] -= h;
    const double fd = (value(pp) - value(pm) - value(mp) + value(mm)) / (4.0 * h * h);
    err = std::max(err, detail::rel_err(jet.h[1], fd, hscale));
  }
  return err;
}

/// Max relative error of the analytic Hessian against central finite
/// differences of the analytic gradient (a much better conditioned probe
/// than second differences of the value).
inline double hess_vs_grad_fd_error(const ModelParams& net, const ParityTag& parity,
                                    const Point& y, double h = 1e-5) {
  JetEvaluator ev(net, parity);
  const Jet2 jet = ev.eval(y);
  const int d = net.dim();
  double hscale = 1e-3;
  for (int k = 0; k < (d == 1 ? 1 : 3); ++k) hscale = std::max(hscale, std::abs(jet.h[k]));
  double err = 0.0;
  for (int k = 0; k < d; ++k) {
    Point yp = y, ym = y;
    yp[k] += h;
    ym[k] -= h;
    const Jet2 jp = ev.eval(yp);
    const Jet2 jm = ev.eval(ym);
    for (int l = 0; l < d; ++l) {
      const double fd = (jp.g[l] - jm.g[l]) / (2.0 * h);
      const int hidx = (k == l) ? (d == 2 && k == 1 ? 2 : 0) : 1;
      err = std::max(err, detail::rel_err(jet.h[hidx], fd, 0.5 * hscale));
    }
  }
  return err;
}

/// Relative error of grad against a Richardson-extrapolated central
/// difference of the objective along direction v.
inline double directional_fd_error(const Objective& obj, std::span<const double> x,
                                   std::span<const double> grad, std::span<const double> v,
                                   double h = 1e-5) {
  std::vector<double> u(v.begin(), v.end());
  double vnorm = 0.0;
  for (double e : u) vnorm += e * e;
  vnorm = std::sqrt(vnorm);
  if (vnorm == 0.0) return 0.0;
  for (double& e : u) e /= vnorm;
  std::vector<double> xt(x.begin(), x.end());
  const auto diff = [&](double step) {
    for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + step * u[i];
    const double fp = obj(xt, nullptr);
    for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] - step * u[i];
    const double fm = obj(xt, nullptr);
    return (fp - fm) / (2.0 * step);
  };
  const double fd = (4.0 * diff(h / 2.0) - diff(h)) / 3.0;
  double gv = 0.0, gnorm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    gv += grad[i] * u[i];
    gnorm += grad[i] * grad[i];
  }
  const double floor = 1e-6 * std::sqrt(gnorm) + 1e-12;
  return detail::rel_err(gv, fd, floor);
}

}  // namespace ssb
