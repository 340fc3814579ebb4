#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ssb/common.hpp"

namespace ssb {

/// Composite Gauss-Legendre grid on [-L, L], exactly symmetric about 0,
/// with an assumed algebraic decay rate for integrands beyond L.
struct QuadratureGrid {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive
  double half_width = 0.0;      // L
  double tail_exponent = 2.0;   // f ~ c |y|^{-p} for |y| > L
};

namespace detail {

/// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Roots are computed for one half and mirrored so the rule is exactly
/// symmetric in floating point.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    if (n % 2 == 1 && i == half - 1) xi = 0.0;  // middle root is exact
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = xi;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      const double dx = p1 / pp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double wi = 2.0 / ((1.0 - xi * xi) * pp * pp);
    x[i] = -std::abs(xi);
    x[n - 1 - i] = std::abs(xi);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
}

inline const std::pair<std::vector<double>, std::vector<double>>& gl32() {
  static const auto rule = [] {
    std::vector<double> x, w;
    gauss_legendre(32, x, w);
    return std::make_pair(std::move(x), std::move(w));
  }();
  return rule;
}

}  // namespace detail

/// Composite Gauss-Legendre rule on [-L, L]. n must be even and >= 16;
/// when n is a multiple of 16 the rule uses n/16 panels of 16 nodes,
/// otherwise two panels of n/2. Panels are mirrored around 0 so the node
/// set satisfies nodes[i] == -nodes[n-1-i] bitwise.
inline QuadratureGrid build_grid(double L, int n, double tail_exponent = 2.0) {
  if (!(L > 0.0)) throw ConfigError("build_grid: L must be positive");
  if (n < 16 || n % 2 != 0) throw ConfigError("build_grid: n must be even and >= 16");
  int panel_nodes = 16;
  int n_panels = n / 16;
  if (n % 16 != 0) {
    n_panels = 2;
    panel_nodes = n / 2;
  }
  std::vector<double> gx, gw;
  detail::gauss_legendre(panel_nodes, gx, gw);

  QuadratureGrid grid;
  grid.half_width = L;
  grid.tail_exponent = tail_exponent;
  grid.nodes.resize(n);
  grid.weights.resize(n);
  const double panel_width = 2.0 * L / n_panels;
  const double half = panel_width / 2.0;
  for (int p = 0; p < n_panels; ++p) {
    const double center = -L + (p + 0.5) * panel_width;
    if (center < -1e-14 * L) continue;  // left half is filled by mirroring
    for (int k = 0; k < panel_nodes; ++k) {
      const int idx = p * panel_nodes + k;
      grid.nodes[idx] = center + half * gx[k];
      grid.weights[idx] = half * gw[k];
      const int m = n - 1 - idx;
      grid.nodes[m] = -grid.nodes[idx];
      grid.weights[m] = grid.weights[idx];
    }
  }
  return grid;
}

inline double integrate(const QuadratureGrid& g, const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * f(g.nodes[i]);
  return s;
}

/// Hilbert transform H[f](x) = (1/pi) p.v. integral f(t)/(x-t) dt on the
/// real line, discretized as a linear functional of the node values and
/// of f(x) itself:
///   - the pole is removed by subtracting f(x); the remaining
///     p.v. integral of 1/(x-t) over [-L, L] is log((L+x)/(L-x)),
///   - the tails beyond [-L, L] assume f ~ c |t|^{-p} with c fitted from
///     the outermost node on each side.
class HilbertTransform {
 public:
  explicit HilbertTransform(QuadratureGrid grid) : grid_(std::move(grid)) {}

  const QuadratureGrid& grid() const { return grid_; }

  struct Row {
    std::vector<double> node_w;  // coefficients of f(node q)
    double self_w = 0.0;         // coefficient of f(x)
  };

  /// Weight row for evaluation at x in (-L, L) with decay exponent p.
  Row row(double x, double p) const {
    const double L = grid_.half_width;
    if (!(x > -L && x < L)) throw NumericalError("hilbert: x outside (-L, L)");
    const std::size_t n = grid_.nodes.size();
    Row r;
    r.node_w.assign(n, 0.0);
    double sum_wk = 0.0;  // sum of w_q/(x - t_q), paired with the f(x) term
    for (std::size_t q = 0; q < n; ++q) {
      const double dt = x - grid_.nodes[q];
      if (std::abs(dt) < 1e-13 * L) continue;  // node hit: drop the pair
      const double wq = grid_.weights[q] / dt;
      r.node_w[q] = wq * kInvPi;
      sum_wk += wq;
    }
    r.self_w = (std::log((L + x) / (L - x)) - sum_wk) * kInvPi;
    // Two-term algebraic tails f ~ c |t|^{-p} + d |t|^{-p-2}, fitted from
    // the two outermost nodes on each side.
    add_tail_weights(r, x, p, n - 2, n - 1, tail_right(x, p), tail_right(x, p + 2.0));
    add_tail_weights(r, x, p, 1, 0, tail_left(x, p), tail_left(x, p + 2.0));
    return r;
  }

  static double apply(const Row& r, std::span<const double> node_values, double f_at_x) {
    double s = r.self_w * f_at_x;
    for (std::size_t q = 0; q < node_values.size(); ++q) s += r.node_w[q] * node_values[q];
    return s;
  }

  double operator()(const std::function<double(double)>& f, double x) const {
    const Row r = row(x, grid_.tail_exponent);
    std::vector<double> vals(grid_.nodes.size());
    for (std::size_t q = 0; q < vals.size(); ++q) vals[q] = f(grid_.nodes[q]);
    return apply(r, vals, f(x));
  }

 private:
  static constexpr double kInvPi = 1.0 / M_PI;

  // Weights of f(node ia), f(node ib) reproducing int of the fitted
  // two-term tail model, where Tp/Tp2 are the kernel integrals against
  // |t|^{-p} and |t|^{-p-2}.
  void add_tail_weights(Row& r, double /*x*/, double p, std::size_t ia, std::size_t ib,
                        double Tp, double Tp2) const {
    const double ta = std::abs(grid_.nodes[ia]);
    const double tb = std::abs(grid_.nodes[ib]);
    const double a00 = std::pow(ta, -p), a01 = std::pow(ta, -p - 2.0);
    const double a10 = std::pow(tb, -p), a11 = std::pow(tb, -p - 2.0);
    const double det = a00 * a11 - a01 * a10;
    // c = (a11 f_a - a01 f_b)/det, d = (-a10 f_a + a00 f_b)/det
    const double wa = (Tp * a11 - Tp2 * a10) / det;
    const double wb = (-Tp * a01 + Tp2 * a00) / det;
    r.node_w[ia] += kInvPi * wa;
    r.node_w[ib] += kInvPi * wb;
  }

  // int_L^inf t^{-p}/(x-t) dt = int_0^{1/L} u^{p-1}/(x u - 1) du   (u = 1/t)
  double tail_right(double x, double p) const { return tail_integral(x, p, -1.0); }
  // int_{-inf}^{-L} |t|^{-p}/(x-t) dt = int_0^{1/L} u^{p-1}/(x u + 1) du
  double tail_left(double x, double p) const { return tail_integral(x, p, +1.0); }

  double tail_integral(double x, double p, double denom_sign) const {
    const auto& [gx, gw] = detail::gl32();
    const double b = 1.0 / grid_.half_width;
    double s = 0.0;
    for (std::size_t k = 0; k < gx.size(); ++k) {
      const double u = 0.5 * b * (gx[k] + 1.0);
      s += gw[k] * std::pow(u, p - 1.0) / (x * u + denom_sign);
    }
    return 0.5 * b * s;
  }

  QuadratureGrid grid_;
};

/// Spec-level convenience: H[f](x) with the grid's tail exponent.
inline double hilbert_at(const std::function<double(double)>& f, const QuadratureGrid& g,
                         double x) {
  return HilbertTransform(g)(f, x);
}

}  // namespace ssb
