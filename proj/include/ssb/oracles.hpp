#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ssb/loss.hpp"
#include "ssb/problems.hpp"

namespace ssb {

// ---------------------------------------------------------------------------
// Burgers: the implicit solution y = -U - C U^{1 + 1/lambda} with C = 1
// (the branch through U(-2) = 1), odd-extended to y > 0.
// ---------------------------------------------------------------------------

/// Profile value at y for exponent lambda > 0, by safeguarded
/// bisection+Newton on the strictly decreasing branch with U(0) = 0.
inline double burgers_implicit(double y, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("burgers_implicit: lambda must be positive");
  if (y == 0.0) return 0.0;
  if (y > 0.0) return -burgers_implicit(-y, lambda);
  const double q = 1.0 + 1.0 / lambda;
  const double target = y;  // solve -U - U^q = y on U > 0
  const auto phi = [q](double u) { return -u - std::pow(u, q); };
  double a = 0.0;                                        // phi(a) = 0 >= y
  double b = std::max(-y, std::pow(-y, 1.0 / q)) + 1.0;  // phi(b) <= y
  double u = std::min(-y, b);
  for (int it = 0; it < 200; ++it) {
    const double r = phi(u) - target;
    if (std::abs(r) <= 1e-13 * std::max(1.0, std::abs(target))) return u;
    if (r > 0.0) {
      a = u;  // phi decreasing: residual positive means u too small
    } else {
      b = u;
    }
    const double dphi = -1.0 - q * std::pow(u, q - 1.0);
    double next = u - r / dphi;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    u = next;
  }
  std::ostringstream os;
  os << "burgers_implicit: no convergence for y=" << y << ", lambda=" << lambda
     << " (bracket [" << a << ", " << b << "])";
  throw NumericalError(os.str());
}

/// d U / d y along the branch, by implicit differentiation.
inline double burgers_implicit_slope(double y, double lambda) {
  const double u = burgers_implicit(y, lambda);
  const double q = 1.0 + 1.0 / lambda;
  return -1.0 / (1.0 + q * std::pow(std::abs(u), q - 1.0));
}

/// Full jet of the oracle profile (for residual substitution checks).
inline Jet2 burgers_implicit_jet(double y, double lambda) {
  Jet2 j;
  j.v = burgers_implicit(y, lambda);
  const double q = 1.0 + 1.0 / lambda;
  const double uq = std::pow(std::abs(j.v), q - 1.0);
  const double dy_du = -1.0 - q * uq;  // dy/dU
  j.g[0] = 1.0 / dy_du;
  // d2U/dy2 = -(d2y/dU2) (dU/dy)^3 with d2y/dU2 = -q(q-1)|U|^{q-2} sgn(U).
  const double sgn = j.v >= 0.0 ? 1.0 : -1.0;
  const double d2y = -q * (q - 1.0) * (j.v == 0.0 ? 0.0 : std::pow(std::abs(j.v), q - 2.0)) * sgn;
  j.h[0] = -d2y * j.g[0] * j.g[0] * j.g[0];
  return j;
}

// ---------------------------------------------------------------------------
// Constantin-Lax-Majda (a = 0): closed-form self-similar profile in the
// gauge d(Omega)/dy (0) = 2.
// ---------------------------------------------------------------------------

struct ClmPoint {
  double omega = 0.0;
  double u_y = 0.0;
  double lambda = 0.0;
};

/// Omega(y) = 2y/(1+y^2), U_y = H[Omega] = -2/(1+y^2), lambda = 0.
/// Verified by substitution into the a = 0 residual (see tests); this
/// anchors the repo-wide Hilbert sign convention.
inline ClmPoint clm_exact(double y) {
  const double d = 1.0 + y * y;
  return ClmPoint{2.0 * y / d, -2.0 / d, 0.0};
}

inline Jet2 clm_omega_jet(double y) {
  const double d = 1.0 + y * y;
  Jet2 j;
  j.v = 2.0 * y / d;
  j.g[0] = 2.0 * (1.0 - y * y) / (d * d);
  j.h[0] = 4.0 * y * (y * y - 3.0) / (d * d * d);
  return j;
}

/// U(y) = -2 atan(y); U_y = -2/(1+y^2); U_yy = 4y/(1+y^2)^2.
inline Jet2 clm_u_jet(double y) {
  const double d = 1.0 + y * y;
  Jet2 j;
  j.v = -2.0 * std::atan(y);
  j.g[0] = -2.0 / d;
  j.h[0] = 4.0 * y / (d * d);
  return j;
}

// ---------------------------------------------------------------------------
// Chen-Hou approximate non-smooth Boussinesq profile:
//   Omega = (a/c) cos(g)^a 3R/(1+R)^2,  Phi = (a/c) cos(g)^a 6R/(1+R)^3,
//   Psi = 0, with R = r^a, cos(g) = y1/r on y1 >= 0, odd-extended in y1.
// ---------------------------------------------------------------------------

namespace detail {

inline double adaptive_gl(const std::function<double(double)>& f, double a, double b, double tol,
                          int depth) {
  const auto& [gx, gw] = gl32();
  const auto rule = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double s = 0.0;
    for (std::size_t k = 0; k < gx.size(); ++k) s += gw[k] * f(mid + half * gx[k]);
    return half * s;
  };
  const double whole = rule(a, b);
  const double mid = 0.5 * (a + b);
  const double left = rule(a, mid);
  const double right = rule(mid, b);
  if (std::abs(left + right - whole) <= tol || depth >= 40) return left + right;
  return adaptive_gl(f, a, mid, 0.5 * tol, depth + 1) +
         adaptive_gl(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Normalization constant c(alpha) = (2/pi) int_0^{pi/2} cos(t)^alpha sin(2t) dt,
/// by adaptive quadrature to 1e-12.
inline double chen_hou_c(double alpha) {
  const auto f = [alpha](double t) { return std::pow(std::cos(t), alpha) * std::sin(2.0 * t); };
  return 2.0 / M_PI * detail::adaptive_gl(f, 0.0, M_PI / 2.0, 1e-13, 0);
}

struct ChenHouPoint {
  double omega = 0.0;
  double phi = 0.0;
  double psi = 0.0;
};

inline ChenHouPoint chen_hou_profile(const Point& y, double alpha, double c) {
  const double x1 = std::abs(y[0]);
  const double sgn = y[0] >= 0.0 ? 1.0 : -1.0;  // odd extension in y1
  const double r = std::hypot(x1, y[1]);
  if (r == 0.0) return ChenHouPoint{};
  const double cosg = x1 / r;  // gamma in [0, pi/2] on the half plane
  const double R = std::pow(r, alpha);
  const double cg = std::pow(cosg, alpha);
  const double pre = alpha / c * cg;
  ChenHouPoint p;
  p.omega = sgn * pre * 3.0 * R / ((1.0 + R) * (1.0 + R));
  p.phi = sgn * pre * 6.0 * R / ((1.0 + R) * (1.0 + R) * (1.0 + R));
  p.psi = 0.0;
  return p;
}

inline ChenHouPoint chen_hou_profile(const Point& y, double alpha) {
  return chen_hou_profile(y, alpha, chen_hou_c(alpha));
}

// ---------------------------------------------------------------------------
// Norm tables: per-equation residual RMS/sup vs per-field RMS/sup.
// ---------------------------------------------------------------------------

struct NormRow {
  std::string name;
  double rms = 0.0;
  double sup = 0.0;
};

struct ResidualReport {
  std::vector<NormRow> equations;
  std::vector<NormRow> fields;
  std::vector<double> ratio;  // equation RMS / reference field RMS
};

/// Field indices whose magnitude an equation's residual is judged against.
inline std::vector<int> equation_reference_fields(const ProblemSpec& prob, int k) {
  switch (prob.kind) {
    case ProblemKind::burgers:
      return {0};
    case ProblemKind::degregorio:
      return {kDgOmega};
    case ProblemKind::boussinesq:
      switch (k) {
        case 0: return {kOmega};
        case 1: return {kPhi};
        case 2: return {kPsi};
        case 3: return {kPhi, kPsi};
        case 4: return {kU1, kU2};
        default: return {kOmega, kU1, kU2};
      }
  }
  return {0};
}

/// Residual and field norms over a point set, generic over the jet
/// provider so both trained networks and closed-form profiles fit.
inline ResidualReport residual_report(const ProblemSpec& prob, std::span<const Point> points,
                                      const JetSource& source, double lambda, double a = 0.0,
                                      const HilbertSource* hs = nullptr) {
  if (points.empty()) throw ConfigError("residual_report: empty point set");
  const int n_e = prob.n_equations;
  const std::size_t nf = prob.field_names.size();
  ResidualReport rep;
  std::vector<double> f2(n_e, 0.0), fsup(n_e, 0.0);
  std::vector<double> v2(nf, 0.0), vsup(nf, 0.0);
  std::vector<Jet2> jets(nf);
  ResidualBundle b;
  for (const Point& y : points) {
    for (std::size_t f = 0; f < nf; ++f) {
      jets[f] = source(static_cast<int>(f), y);
      v2[f] += jets[f].v * jets[f].v;
      vsup[f] = std::max(vsup[f], std::abs(jets[f].v));
    }
    eval_residual_bundle(prob, jets.data(), lambda, a, y, hs, b);
    for (int k = 0; k < n_e; ++k) {
      f2[k] += b.f[k] * b.f[k];
      fsup[k] = std::max(fsup[k], std::abs(b.f[k]));
    }
  }
  const double inv = 1.0 / static_cast<double>(points.size());
  for (int k = 0; k < n_e; ++k) {
    rep.equations.push_back(
        NormRow{"f" + std::to_string(k + 1), std::sqrt(f2[k] * inv), fsup[k]});
  }
  for (std::size_t f = 0; f < nf; ++f) {
    rep.fields.push_back(NormRow{prob.field_names[f], std::sqrt(v2[f] * inv), vsup[f]});
  }
  for (int k = 0; k < n_e; ++k) {
    double ref = 0.0;
    for (int fi : equation_reference_fields(prob, k)) ref = std::max(ref, rep.fields[fi].rms);
    rep.ratio.push_back(ref > 0.0 ? rep.equations[k].rms / ref
                                  : (rep.equations[k].rms > 0.0 ? INFINITY : 0.0));
  }
  return rep;
}

}  // namespace ssb
