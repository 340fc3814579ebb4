#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ssb/fields.hpp"
#include "ssb/net.hpp"

namespace ssb {

/// Residual values of all equations of a system at one point, together
/// with their spatial gradients (fy unused for 1-D systems).
struct ResidualBundle {
  static constexpr int kMax = 6;
  int n = 0;
  std::array<double, kMax> f{};
  std::array<double, kMax> fx{};
  std::array<double, kMax> fy{};
};

/// Adjoints flowing back from a residual bundle into the field jets and
/// the problem scalars.
struct ResidualAdjoint {
  std::array<Jet2, 5> jet_bar{};
  double lambda_bar = 0.0;
  double a_bar = 0.0;
  double hilbert_bar = 0.0;    // d(obj)/d(H[omega] at the point)
  double hilbert_dx_bar = 0.0; // d(obj)/d(H[omega'] at the point)
};

// ---------------------------------------------------------------------------
// Boussinesq vorticity-form system (2-D).
// Field order everywhere: U1, U2, Omega, Phi, Psi.
// ---------------------------------------------------------------------------

enum BsqField { kU1 = 0, kU2 = 1, kOmega = 2, kPhi = 3, kPsi = 4 };

/// Six residuals: three transport equations with stretching factors, the
/// Theta-gradient compatibility, incompressibility, and the vorticity
/// definition. Spatial gradients are assembled from the field Hessians.
inline void boussinesq_residuals(const Jet2* j, double lambda, const Point& y,
                                 ResidualBundle& out) {
  const Jet2& u1 = j[kU1];
  const Jet2& u2 = j[kU2];
  const Jet2& om = j[kOmega];
  const Jet2& ph = j[kPhi];
  const Jet2& ps = j[kPsi];
  const double lp = 1.0 + lambda;
  const double c1 = lp * y[0] + u1.v;
  const double c2 = lp * y[1] + u2.v;
  const double c1x = lp + u1.g[0];
  const double c1y = u1.g[1];
  const double c2x = u2.g[0];
  const double c2y = lp + u2.g[1];

  out.n = 6;
  out.f[0] = om.v + c1 * om.g[0] + c2 * om.g[1] - ph.v;
  out.fx[0] = om.g[0] + c1x * om.g[0] + c1 * om.h[0] + c2x * om.g[1] + c2 * om.h[1] - ph.g[0];
  out.fy[0] = om.g[1] + c1y * om.g[0] + c1 * om.h[1] + c2y * om.g[1] + c2 * om.h[2] - ph.g[1];

  out.f[1] = (2.0 + u1.g[0]) * ph.v + c1 * ph.g[0] + c2 * ph.g[1] + u2.g[0] * ps.v;
  out.fx[1] = u1.h[0] * ph.v + (2.0 + u1.g[0]) * ph.g[0] + c1x * ph.g[0] + c1 * ph.h[0] +
              c2x * ph.g[1] + c2 * ph.h[1] + u2.h[0] * ps.v + u2.g[0] * ps.g[0];
  out.fy[1] = u1.h[1] * ph.v + (2.0 + u1.g[0]) * ph.g[1] + c1y * ph.g[0] + c1 * ph.h[1] +
              c2y * ph.g[1] + c2 * ph.h[2] + u2.h[1] * ps.v + u2.g[0] * ps.g[1];

  out.f[2] = (2.0 + u2.g[1]) * ps.v + c1 * ps.g[0] + c2 * ps.g[1] + u1.g[1] * ph.v;
  out.fx[2] = u2.h[1] * ps.v + (2.0 + u2.g[1]) * ps.g[0] + c1x * ps.g[0] + c1 * ps.h[0] +
              c2x * ps.g[1] + c2 * ps.h[1] + u1.h[1] * ph.v + u1.g[1] * ph.g[0];
  out.fy[2] = u2.h[2] * ps.v + (2.0 + u2.g[1]) * ps.g[1] + c1y * ps.g[0] + c1 * ps.h[1] +
              c2y * ps.g[1] + c2 * ps.h[2] + u1.h[2] * ph.v + u1.g[1] * ph.g[1];

  out.f[3] = ph.g[1] - ps.g[0];
  out.fx[3] = ph.h[1] - ps.h[0];
  out.fy[3] = ph.h[2] - ps.h[1];

  out.f[4] = u1.g[0] + u2.g[1];
  out.fx[4] = u1.h[0] + u2.h[1];
  out.fy[4] = u1.h[1] + u2.h[2];

  out.f[5] = om.v - u1.g[1] + u2.g[0];
  out.fx[5] = om.g[0] - u1.h[1] + u2.h[0];
  out.fy[5] = om.g[1] - u1.h[2] + u2.h[1];
}

/// Reverse of boussinesq_residuals: accumulates jet and lambda adjoints
/// given weights (bar.f, bar.fx, bar.fy) on the bundle entries.
inline void boussinesq_adjoint(const Jet2* j, double lambda, const Point& y,
                               const ResidualBundle& bar, ResidualAdjoint& adj) {
  const Jet2& u1 = j[kU1];
  const Jet2& u2 = j[kU2];
  const Jet2& om = j[kOmega];
  const Jet2& ph = j[kPhi];
  const Jet2& ps = j[kPsi];
  const double lp = 1.0 + lambda;
  const double c1 = lp * y[0] + u1.v;
  const double c2 = lp * y[1] + u2.v;
  const double c1x = lp + u1.g[0];
  const double c1y = u1.g[1];
  const double c2x = u2.g[0];
  const double c2y = lp + u2.g[1];

  Jet2& u1b = adj.jet_bar[kU1];
  Jet2& u2b = adj.jet_bar[kU2];
  Jet2& omb = adj.jet_bar[kOmega];
  Jet2& phb = adj.jet_bar[kPhi];
  Jet2& psb = adj.jet_bar[kPsi];
  double cb1 = 0.0, cb2 = 0.0, cb1x = 0.0, cb1y = 0.0, cb2x = 0.0, cb2y = 0.0;

  {  // equation 1
    const double wf = bar.f[0], wx = bar.fx[0], wy = bar.fy[0];
    omb.v += wf;
    omb.g[0] += wf * c1 + wx * (1.0 + c1x) + wy * c1y;
    omb.g[1] += wf * c2 + wx * c2x + wy * (1.0 + c2y);
    omb.h[0] += wx * c1;
    omb.h[1] += wx * c2 + wy * c1;
    omb.h[2] += wy * c2;
    phb.v -= wf;
    phb.g[0] -= wx;
    phb.g[1] -= wy;
    cb1 += wf * om.g[0] + wx * om.h[0] + wy * om.h[1];
    cb2 += wf * om.g[1] + wx * om.h[1] + wy * om.h[2];
    cb1x += wx * om.g[0];
    cb1y += wy * om.g[0];
    cb2x += wx * om.g[1];
    cb2y += wy * om.g[1];
  }
  {  // equation 2
    const double wf = bar.f[1], wx = bar.fx[1], wy = bar.fy[1];
    u1b.g[0] += wf * ph.v + wx * ph.g[0] + wy * ph.g[1];
    phb.v += wf * (2.0 + u1.g[0]) + wx * u1.h[0] + wy * u1.h[1];
    phb.g[0] += wf * c1 + wx * (2.0 + u1.g[0]) + wx * c1x + wy * c1y;
    phb.g[1] += wf * c2 + wx * c2x + wy * (2.0 + u1.g[0]) + wy * c2y;
    phb.h[0] += wx * c1;
    phb.h[1] += wx * c2 + wy * c1;
    phb.h[2] += wy * c2;
    u1b.h[0] += wx * ph.v;
    u1b.h[1] += wy * ph.v;
    u2b.g[0] += wf * ps.v + wx * ps.g[0] + wy * ps.g[1];
    u2b.h[0] += wx * ps.v;
    u2b.h[1] += wy * ps.v;
    psb.v += wf * u2.g[0] + wx * u2.h[0] + wy * u2.h[1];
    psb.g[0] += wx * u2.g[0];
    psb.g[1] += wy * u2.g[0];
    cb1 += wf * ph.g[0] + wx * ph.h[0] + wy * ph.h[1];
    cb2 += wf * ph.g[1] + wx * ph.h[1] + wy * ph.h[2];
    cb1x += wx * ph.g[0];
    cb1y += wy * ph.g[0];
    cb2x += wx * ph.g[1];
    cb2y += wy * ph.g[1];
  }
  {  // equation 3
    const double wf = bar.f[2], wx = bar.fx[2], wy = bar.fy[2];
    u2b.g[1] += wf * ps.v + wx * ps.g[0] + wy * ps.g[1];
    psb.v += wf * (2.0 + u2.g[1]) + wx * u2.h[1] + wy * u2.h[2];
    psb.g[0] += wf * c1 + wx * (2.0 + u2.g[1]) + wx * c1x + wy * c1y;
    psb.g[1] += wf * c2 + wx * c2x + wy * (2.0 + u2.g[1]) + wy * c2y;
    psb.h[0] += wx * c1;
    psb.h[1] += wx * c2 + wy * c1;
    psb.h[2] += wy * c2;
    u2b.h[1] += wx * ps.v;
    u2b.h[2] += wy * ps.v;
    u1b.g[1] += wf * ph.v + wx * ph.g[0] + wy * ph.g[1];
    u1b.h[1] += wx * ph.v;
    u1b.h[2] += wy * ph.v;
    phb.v += wf * u1.g[1] + wx * u1.h[1] + wy * u1.h[2];
    phb.g[0] += wx * u1.g[1];
    phb.g[1] += wy * u1.g[1];
    cb1 += wf * ps.g[0] + wx * ps.h[0] + wy * ps.h[1];
    cb2 += wf * ps.g[1] + wx * ps.h[1] + wy * ps.h[2];
    cb1x += wx * ps.g[0];
    cb1y += wy * ps.g[0];
    cb2x += wx * ps.g[1];
    cb2y += wy * ps.g[1];
  }
  {  // equation 4
    const double wf = bar.f[3], wx = bar.fx[3], wy = bar.fy[3];
    phb.g[1] += wf;
    psb.g[0] -= wf;
    phb.h[1] += wx;
    psb.h[0] -= wx;
    phb.h[2] += wy;
    psb.h[1] -= wy;
  }
  {  // equation 5
    const double wf = bar.f[4], wx = bar.fx[4], wy = bar.fy[4];
    u1b.g[0] += wf;
    u2b.g[1] += wf;
    u1b.h[0] += wx;
    u2b.h[1] += wx;
    u1b.h[1] += wy;
    u2b.h[2] += wy;
  }
  {  // equation 6
    const double wf = bar.f[5], wx = bar.fx[5], wy = bar.fy[5];
    omb.v += wf;
    u1b.g[1] -= wf;
    u2b.g[0] += wf;
    omb.g[0] += wx;
    u1b.h[1] -= wx;
    u2b.h[0] += wx;
    omb.g[1] += wy;
    u1b.h[2] -= wy;
    u2b.h[1] += wy;
  }
  // Transport coefficients: c1 = (1+l)y1 + U1, c2 = (1+l)y2 + U2,
  // c1x = (1+l) + U1_x, c2y = (1+l) + U2_y.
  u1b.v += cb1;
  u2b.v += cb2;
  u1b.g[0] += cb1x;
  u1b.g[1] += cb1y;
  u2b.g[0] += cb2x;
  u2b.g[1] += cb2y;
  adj.lambda_bar += cb1 * y[0] + cb2 * y[1] + cb1x + cb2y;
}

// ---------------------------------------------------------------------------
// Self-similar Burgers (1-D): f = -l U + ((1+l) y + U) U_y.
// ---------------------------------------------------------------------------

inline void burgers_residual(const Jet2& u, double lambda, double y, ResidualBundle& out) {
  const double c = (1.0 + lambda) * y + u.v;
  const double cx = (1.0 + lambda) + u.g[0];
  out.n = 1;
  out.f[0] = -lambda * u.v + c * u.g[0];
  out.fx[0] = -lambda * u.g[0] + cx * u.g[0] + c * u.h[0];
  out.fy[0] = 0.0;
}

inline void burgers_adjoint(const Jet2& u, double lambda, double y, const ResidualBundle& bar,
                            ResidualAdjoint& adj) {
  const double c = (1.0 + lambda) * y + u.v;
  const double cx = (1.0 + lambda) + u.g[0];
  const double wf = bar.f[0], wx = bar.fx[0];
  Jet2& ub = adj.jet_bar[0];
  double cb = wf * u.g[0] + wx * u.h[0];
  double cxb = wx * u.g[0];
  ub.v += -wf * lambda;
  ub.g[0] += wf * c + wx * (cx - lambda);
  ub.h[0] += wx * c;
  adj.lambda_bar += -wf * u.v - wx * u.g[0] + cb * y + cxb;
  ub.v += cb;
  ub.g[0] += cxb;
}

// ---------------------------------------------------------------------------
// Generalized De Gregorio (1-D, nonlocal):
//   f = Omega + ((1+l) y - a U) Omega_y + Omega U_y     (transport/stretch)
//   g = U_y - H[Omega]                                  (velocity coupling)
// H[Omega] and H[Omega'] at the point are supplied by the caller.
// Field order: Omega, U.
// ---------------------------------------------------------------------------

enum DgField { kDgOmega = 0, kDgU = 1 };

inline void degregorio_residuals(const Jet2& om, const Jet2& u, double h_om, double h_om_dx,
                                 double a, double lambda, double y, ResidualBundle& out) {
  const double c = (1.0 + lambda) * y - a * u.v;
  const double cx = (1.0 + lambda) - a * u.g[0];
  out.n = 2;
  out.f[0] = om.v + c * om.g[0] + om.v * u.g[0];
  out.fx[0] = om.g[0] + cx * om.g[0] + c * om.h[0] + om.g[0] * u.g[0] + om.v * u.h[0];
  out.f[1] = u.g[0] - h_om;
  out.fx[1] = u.h[0] - h_om_dx;
  out.fy[0] = out.fy[1] = 0.0;
}

inline void degregorio_adjoint(const Jet2& om, const Jet2& u, double a, double lambda, double y,
                               const ResidualBundle& bar, ResidualAdjoint& adj) {
  const double c = (1.0 + lambda) * y - a * u.v;
  const double cx = (1.0 + lambda) - a * u.g[0];
  Jet2& omb = adj.jet_bar[kDgOmega];
  Jet2& ub = adj.jet_bar[kDgU];
  {
    const double wf = bar.f[0], wx = bar.fx[0];
    const double cb = wf * om.g[0] + wx * om.h[0];
    const double cxb = wx * om.g[0];
    omb.v += wf * (1.0 + u.g[0]) + wx * u.h[0];
    omb.g[0] += wf * c + wx * (1.0 + cx + u.g[0]);
    omb.h[0] += wx * c;
    ub.g[0] += wf * om.v + wx * om.g[0];
    ub.h[0] += wx * om.v;
    // c = (1+l) y - a U, cx = (1+l) - a U_y
    adj.lambda_bar += cb * y + cxb;
    adj.a_bar += -cb * u.v - cxb * u.g[0];
    ub.v += -cb * a;
    ub.g[0] += -cxb * a;
  }
  {
    const double wg = bar.f[1], wgx = bar.fx[1];
    ub.g[0] += wg;
    ub.h[0] += wgx;
    adj.hilbert_bar -= wg;
    adj.hilbert_dx_bar -= wgx;
  }
}

// ---------------------------------------------------------------------------
// Diagnostics: error terms of the rescaled axi-symmetric Euler system
// relative to the Boussinesq limit (exponentially decaying in s).
// ---------------------------------------------------------------------------

inline std::array<double, 2> euler_error_terms(const Point& y, double s, double lambda,
                                               double phi, double u2) {
  const double e = std::exp(-(1.0 + lambda) * s);
  const double ye = y[1] * e;
  const double denom = 1.0 + ye;
  if (!(denom > 0.0)) throw NumericalError("euler_error_terms: 1 + y2 e^{-(1+l)s} must be positive");
  const double d4 = denom * denom * denom * denom;
  const double e1 = -ye * (ye + 2.0) * (ye * ye + 2.0 * ye + 2.0) / d4 * phi;
  const double e2 = -e * u2 / denom;
  return {e1, e2};
}

// ---------------------------------------------------------------------------
// Problem description assembled from a run configuration.
// ---------------------------------------------------------------------------

enum class ProblemKind { burgers, degregorio, boussinesq };

inline const char* problem_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::burgers: return "burgers";
    case ProblemKind::degregorio: return "degregorio";
    default: return "boussinesq";
  }
}

inline ProblemKind problem_from_name(const std::string& s) {
  if (s == "burgers") return ProblemKind::burgers;
  if (s == "degregorio") return ProblemKind::degregorio;
  if (s == "boussinesq") return ProblemKind::boussinesq;
  throw ConfigError("unknown problem: " + s);
}

/// Where a constraint's sample points live.
enum class Locus {
  single_point,    // one fixed point
  bottom_edge,     // y2 == lo2 (the wall)
  left_axis,       // y1 == 0
  outer_boundary,  // |y1| == L or y2 == top
};

/// Kinds of pointwise condition residuals g.
enum class ConstraintKind {
  field_value,   // g = F(y) - target, one field
  slope_x,       // g = dF/dy1 (y) - target, one field
  grad_decay,    // g^2 = sum over fields of |grad F|^2 (target 0)
  value_decay,   // g^2 = sum over fields of F^2 (target 0)
};

struct ConstraintSpec {
  std::string name;
  ConstraintKind kind = ConstraintKind::field_value;
  Locus locus = Locus::single_point;
  std::vector<int> fields;  // indices into the problem's field list
  double target = 0.0;
  Point point{{0.0, 0.0}};  // for single_point loci
};

/// Everything the loss assembly needs to know about a registered system.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::burgers;
  int dim = 1;
  std::vector<std::string> field_names;
  std::vector<ParityTag> field_parity;
  int n_equations = 1;
  std::vector<ConstraintSpec> constraints;
  Box domain;
  bool uses_hilbert = false;
  // Interior collocation is drawn from the domain shrunk by this factor
  // (nonlocal problems keep evaluation points away from the quadrature
  // endpoints where the principal-value kernel degenerates).
  double collocation_inset = 1.0;

  int n_conditions() const { return static_cast<int>(constraints.size()); }

  Box collocation_box() const {
    Box b = domain;
    if (collocation_inset < 1.0) {
      for (int k = 0; k < b.dim; ++k) {
        const double mid = (kind == ProblemKind::boussinesq && k == 1) ? b.lo[k] : 0.0;
        b.lo[k] = mid + (b.lo[k] - mid) * collocation_inset;
        b.hi[k] = mid + (b.hi[k] - mid) * collocation_inset;
      }
    }
    return b;
  }
};

}  // namespace ssb
