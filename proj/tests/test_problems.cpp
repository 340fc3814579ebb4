#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "ssb/net.hpp"
#include "ssb/problems.hpp"

using namespace ssb;
using cplx = std::complex<double>;

namespace {

// Manufactured field F(y) = sin(p0 + p.y) cos(q0 + q.y): closed-form jets,
// valid for complex arguments (used by the complex-step oracle below).
struct Wave {
  double p0, p1, p2, q0, q1, q2;

  template <class T>
  T value(T y1, T y2) const {
    return std::sin(p0 + p1 * y1 + p2 * y2) * std::cos(q0 + q1 * y1 + q2 * y2);
  }
  template <class T>
  std::array<T, 2> grad(T y1, T y2) const {
    const T P = p0 + p1 * y1 + p2 * y2;
    const T Q = q0 + q1 * y1 + q2 * y2;
    return {p1 * std::cos(P) * std::cos(Q) - q1 * std::sin(P) * std::sin(Q),
            p2 * std::cos(P) * std::cos(Q) - q2 * std::sin(P) * std::sin(Q)};
  }
  Jet2 jet(const Point& y) const {
    const double P = p0 + p1 * y[0] + p2 * y[1];
    const double Q = q0 + q1 * y[0] + q2 * y[1];
    const double sc = std::sin(P) * std::cos(Q);
    const double cs = std::cos(P) * std::sin(Q);
    const double cc = std::cos(P) * std::cos(Q);
    const double ss = std::sin(P) * std::sin(Q);
    Jet2 j;
    j.v = sc;
    j.g[0] = p1 * cc - q1 * ss;
    j.g[1] = p2 * cc - q2 * ss;
    j.h[0] = -(p1 * p1 + q1 * q1) * sc - 2.0 * p1 * q1 * cs;
    j.h[1] = -(p1 * p2 + q1 * q2) * sc - (p1 * q2 + q1 * p2) * cs;
    j.h[2] = -(p2 * p2 + q2 * q2) * sc - 2.0 * p2 * q2 * cs;
    return j;
  }
};

// Independent transcription of the six vorticity-form residuals, written
// against complex arithmetic so spatial gradients come from a complex
// step instead of the field Hessians.
std::array<cplx, 6> boussinesq_ref(const std::array<Wave, 5>& w, double lambda, cplx y1,
                                   cplx y2) {
  const cplx u1 = w[0].value(y1, y2), u2 = w[1].value(y1, y2);
  const cplx om = w[2].value(y1, y2), ph = w[3].value(y1, y2), ps = w[4].value(y1, y2);
  const auto du1 = w[0].grad(y1, y2);
  const auto du2 = w[1].grad(y1, y2);
  const auto dom = w[2].grad(y1, y2);
  const auto dph = w[3].grad(y1, y2);
  const auto dps = w[4].grad(y1, y2);
  const cplx a1 = (1.0 + lambda) * y1 + u1;
  const cplx a2 = (1.0 + lambda) * y2 + u2;
  std::array<cplx, 6> f;
  f[0] = om + a1 * dom[0] + a2 * dom[1] - ph;
  f[1] = (2.0 + du1[0]) * ph + a1 * dph[0] + a2 * dph[1] + du2[0] * ps;
  f[2] = (2.0 + du2[1]) * ps + a1 * dps[0] + a2 * dps[1] + du1[1] * ph;
  f[3] = dph[1] - dps[0];
  f[4] = du1[0] + du2[1];
  f[5] = om - (du1[1] - du2[0]);
  return f;
}

}  // namespace

TEST_CASE("boussinesq residuals: trivial and hand-checked cases", "[problems]") {
  const double lambda = 0.37;
  SECTION("zero fields solve every equation") {
    Jet2 jets[5] = {};
    ResidualBundle b;
    boussinesq_residuals(jets, lambda, Point{{0.4, 1.3}}, b);
    for (int k = 0; k < 6; ++k) {
      REQUIRE(b.f[k] == 0.0);
      REQUIRE(b.fx[k] == 0.0);
      REQUIRE(b.fy[k] == 0.0);
    }
  }
  SECTION("Omega = y1, Phi = (2+lambda) y1, U = Psi = 0") {
    const Point y{{1.0, 1.0}};
    Jet2 jets[5] = {};
    jets[kOmega].v = y[0];
    jets[kOmega].g[0] = 1.0;
    jets[kPhi].v = (2.0 + lambda) * y[0];
    jets[kPhi].g[0] = 2.0 + lambda;
    ResidualBundle b;
    boussinesq_residuals(jets, lambda, y, b);
    REQUIRE(std::abs(b.f[0]) < 1e-15);  // transport balances the source
    REQUIRE(b.f[5] == Catch::Approx(1.0));
  }
  SECTION("linear strain field is divergence free") {
    Jet2 jets[5] = {};
    const Point y{{0.7, -0.3}};
    jets[kU1].v = y[0];
    jets[kU1].g[0] = 1.0;
    jets[kU2].v = -y[1];
    jets[kU2].g[1] = -1.0;
    ResidualBundle b;
    boussinesq_residuals(jets, lambda, y, b);
    REQUIRE(b.f[4] == 0.0);
    REQUIRE(b.f[5] == 0.0);
  }
}

TEST_CASE("boussinesq residuals agree with an independent complex-step evaluator",
          "[problems]") {
  Rng rng(2024);
  std::array<Wave, 5> w;
  for (auto& f : w) {
    f = Wave{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
             rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  }
  const double lambda = 1.37;
  const double h = 1e-100;
  for (int t = 0; t < 25; ++t) {
    const Point y{{rng.uniform(-2, 2), rng.uniform(-2, 2)}};
    Jet2 jets[5];
    for (int f = 0; f < 5; ++f) jets[f] = w[f].jet(y);
    ResidualBundle b;
    boussinesq_residuals(jets, lambda, y, b);
    const auto f0 = boussinesq_ref(w, lambda, cplx(y[0]), cplx(y[1]));
    const auto fx = boussinesq_ref(w, lambda, cplx(y[0], h), cplx(y[1]));
    const auto fy = boussinesq_ref(w, lambda, cplx(y[0]), cplx(y[1], h));
    for (int k = 0; k < 6; ++k) {
      const double scale = std::max(1.0, std::abs(f0[k].real()));
      REQUIRE(std::abs(b.f[k] - f0[k].real()) <= 1e-12 * scale);
      REQUIRE(std::abs(b.fx[k] - fx[k].imag() / h) <=
              1e-12 * std::max(1.0, std::abs(b.fx[k])));
      REQUIRE(std::abs(b.fy[k] - fy[k].imag() / h) <=
              1e-12 * std::max(1.0, std::abs(b.fy[k])));
    }
  }
}

TEST_CASE("boussinesq residual parity under y1 reflection is exact", "[problems]") {
  // Parity-hardened networks: U1, Omega, Phi odd; U2, Psi even.
  const ParityTag par[5] = {{Parity::odd, Parity::none},
                            {Parity::even, Parity::none},
                            {Parity::odd, Parity::none},
                            {Parity::odd, Parity::none},
                            {Parity::even, Parity::none}};
  std::vector<ModelParams> nets;
  for (int f = 0; f < 5; ++f) {
    auto m = init_model({2, 10, 10, 1}, 100 + f);
    // nonzero biases so even projections are not identically zero
    Rng rb(200 + f);
    for (auto& b : m.biases) b = rb.uniform(-0.3, 0.3);
    nets.push_back(std::move(m));
  }
  Rng rng(31);
  const double lambda = 1.95;
  // f1, f2, f4, f6 are odd; f3, f5 are even.
  const double sign[6] = {-1, -1, 1, -1, 1, -1};
  for (int t = 0; t < 20; ++t) {
    const Point y{{rng.uniform(-2, 2), rng.uniform(0, 2)}};
    const Point ry{{-y[0], y[1]}};
    Jet2 a[5], b[5];
    for (int f = 0; f < 5; ++f) {
      JetEvaluator ev(nets[f], par[f]);
      a[f] = ev.eval(y);
      b[f] = ev.eval(ry);
    }
    ResidualBundle ba, bb;
    boussinesq_residuals(a, lambda, y, ba);
    boussinesq_residuals(b, lambda, ry, bb);
    for (int k = 0; k < 6; ++k) {
      REQUIRE(bb.f[k] == sign[k] * ba.f[k]);  // bitwise
    }
  }
}

TEST_CASE("burgers residual cases", "[problems]") {
  SECTION("zero profile") {
    Jet2 u{};
    ResidualBundle b;
    burgers_residual(u, 0.5, 1.7, b);
    REQUIRE(b.f[0] == 0.0);
    REQUIRE(b.fx[0] == 0.0);
  }
  SECTION("U = -y solves the equation for every lambda") {
    for (double lambda : {0.1, 0.5, 1.0, 2.5}) {
      for (double y : {-3.0, -0.2, 0.9, 4.0}) {
        Jet2 u;
        u.v = -y;
        u.g[0] = -1.0;
        ResidualBundle b;
        burgers_residual(u, lambda, y, b);
        REQUIRE(std::abs(b.f[0]) <= 1e-14 * std::max(1.0, std::abs(lambda * y)));
      }
    }
  }
  SECTION("complex-step cross check") {
    Rng rng(8);
    const Wave w{0.2, 1.3, 0.0, -0.4, 0.7, 0.0};
    const double lambda = 0.5;
    const double h = 1e-100;
    for (int t = 0; t < 10; ++t) {
      const double y = rng.uniform(-2, 2);
      ResidualBundle b;
      burgers_residual(w.jet(Point{{y, 0.0}}), lambda, y, b);
      const auto f = [&](cplx z) {
        return -lambda * w.value(z, cplx(0.0)) +
               ((1.0 + lambda) * z + w.value(z, cplx(0.0))) * w.grad(z, cplx(0.0))[0];
      };
      REQUIRE(std::abs(b.f[0] - f(cplx(y)).real()) <= 1e-13);
      REQUIRE(std::abs(b.fx[0] - f(cplx(y, h)).imag() / h) <=
              1e-12 * std::max(1.0, std::abs(b.fx[0])));
    }
  }
}

TEST_CASE("degregorio residual cases", "[problems]") {
  SECTION("zero fields") {
    Jet2 z{};
    ResidualBundle b;
    degregorio_residuals(z, z, 0.0, 0.0, 0.6, -1.0, 0.3, b);
    REQUIRE(b.f[0] == 0.0);
    REQUIRE(b.f[1] == 0.0);
  }
  SECTION("complex-step cross check including the nonlocal term") {
    Rng rng(9);
    const Wave wom{0.1, 0.9, 0.0, 0.3, 0.4, 0.0};
    const Wave wu{-0.2, 0.5, 0.0, 0.1, 1.1, 0.0};
    const Wave wh{0.4, 0.8, 0.0, -0.1, 0.2, 0.0};  // stand-in for H[Omega]
    const double a = 0.6887, lambda = -1.0;
    const double h = 1e-100;
    for (int t = 0; t < 10; ++t) {
      const double y = rng.uniform(-2, 2);
      const Point yp{{y, 0.0}};
      const Jet2 hj = wh.jet(yp);
      ResidualBundle b;
      degregorio_residuals(wom.jet(yp), wu.jet(yp), hj.v, hj.g[0], a, lambda, y, b);
      const auto fg = [&](cplx z) {
        const cplx om = wom.value(z, cplx(0.0));
        const cplx omy = wom.grad(z, cplx(0.0))[0];
        const cplx u = wu.value(z, cplx(0.0));
        const cplx uy = wu.grad(z, cplx(0.0))[0];
        const cplx f = om + ((1.0 + lambda) * z - a * u) * omy + om * uy;
        const cplx g = uy - wh.value(z, cplx(0.0));
        return std::array<cplx, 2>{f, g};
      };
      const auto f0 = fg(cplx(y));
      const auto fx = fg(cplx(y, h));
      for (int k = 0; k < 2; ++k) {
        REQUIRE(std::abs(b.f[k] - f0[k].real()) <= 1e-13 * std::max(1.0, std::abs(b.f[k])));
        REQUIRE(std::abs(b.fx[k] - fx[k].imag() / h) <=
                1e-12 * std::max(1.0, std::abs(b.fx[k])));
      }
    }
  }
}

TEST_CASE("euler error terms", "[problems]") {
  SECTION("wall points have no transport error") {
    const auto e = euler_error_terms(Point{{1.3, 0.0}}, 2.0, 1.95, 0.7, 0.4);
    REQUIRE(e[0] == 0.0);
    REQUIRE(e[1] != 0.0);
  }
  SECTION("exponential decay in s") {
    const Point y{{0.5, 1.0}};
    double prev = 1e9;
    for (double s : {1.0, 3.0, 6.0, 12.0}) {
      const auto e = euler_error_terms(y, s, 1.95, 1.0, 1.0);
      REQUIRE(std::abs(e[0]) < prev);
      REQUIRE(std::abs(e[1]) <= std::exp(-(1.0 + 1.95) * s) * 1.001);
      prev = std::abs(e[0]);
    }
  }
  SECTION("printed example at lambda = 1.95, s = 5") {
    const auto e = euler_error_terms(Point{{0.0, 1.0}}, 5.0, 1.95, 1.0, 1.0);
    const double z = std::exp(-14.75);
    REQUIRE(std::abs(e[1]) == Catch::Approx(z / (1.0 + z)).epsilon(1e-12));
  }
  SECTION("vanishing denominator is a domain error") {
    REQUIRE_THROWS_AS(euler_error_terms(Point{{0.0, -2.0}}, 0.0, 0.0, 1.0, 1.0),
                      NumericalError);
  }
}
