#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssb/io.hpp"
#include "ssb/loss.hpp"
#include "ssb/oracles.hpp"
#include "ssb/sampling.hpp"
#include "ssb/selftest.hpp"

using namespace ssb;

namespace {

RunConfig tiny_config(const std::string& problem, std::uint64_t seed) {
  json j = {{"problem", problem},
            {"seed", seed},
            {"network", {{"hidden", {6, 6}}}},
            {"collocation", {{"n_near", 24}, {"n_far", 12}, {"boundary_n", 8}}}};
  if (problem == "degregorio") {
    j["hilbert"] = {{"l", 10.0}, {"n", 64}, {"tail_exponent", 1.0}};
    j["scalars"] = {{"lambda", {{"window", {-0.5, 0.5}}}}, {"a", {{"window", {0.0, 1.0}}}}};
  }
  return parse_config(j);
}

struct Setup {
  RunConfig cfg;
  ProblemSpec prob;
  FieldSet fs;
  CollocationSet colloc;
  std::optional<QuadratureGrid> grid;

  explicit Setup(const std::string& problem, std::uint64_t seed = 3)
      : cfg(tiny_config(problem, seed)), prob(make_problem_spec(cfg)) {
    fs = make_fieldset(cfg, prob);
    colloc = sample_collocation(prob, cfg.n_near, cfg.n_far, cfg.r_split,
                                boundary_counts(cfg, prob), cfg.seed);
    if (prob.uses_hilbert) grid = build_grid(cfg.hilbert_l, cfg.hilbert_n, cfg.tail_exponent);
  }

  LossEvaluator evaluator(double gamma = 0.1) {
    LossEvaluator::Options opt;
    opt.gamma = gamma;
    return LossEvaluator(prob, fs, colloc, opt, grid ? &*grid : nullptr);
  }
};

}  // namespace

TEST_CASE("condition loss values", "[loss]") {
  std::vector<Point> pts = {{0.1, 0.0}, {0.5, 0.0}, {-0.7, 0.0}};
  ConstraintSpec c;
  c.kind = ConstraintKind::field_value;
  c.fields = {0};
  SECTION("zero field against a zero target") {
    c.target = 0.0;
    const double l = condition_loss(c, 1, pts, [](int, const Point&) { return Jet2{}; });
    REQUIRE(l == 0.0);
  }
  SECTION("constant residual g = 2 gives 4") {
    c.target = -2.0;
    const double l = condition_loss(c, 1, pts, [](int, const Point&) { return Jet2{}; });
    REQUIRE(l == 4.0);
  }
  SECTION("independent summation oracle at 1e-14") {
    c.target = 0.3;
    Rng rng(5);
    std::vector<Point> many;
    std::vector<double> vals;
    for (int i = 0; i < 500; ++i) {
      many.push_back({rng.uniform(-1, 1), 0.0});
      vals.push_back(rng.uniform(-2, 2));
    }
    const auto src = [&](int, const Point& y) {
      Jet2 j;
      for (std::size_t i = 0; i < many.size(); ++i) {
        if (many[i][0] == y[0]) j.v = vals[i];
      }
      return j;
    };
    const double got = condition_loss(c, 1, many, src);
    // brute-force recomputation with Kahan summation
    double s = 0.0, comp = 0.0;
    for (double v : vals) {
      const double g = v - 0.3;
      const double term = g * g - comp;
      const double t = s + term;
      comp = (t - s) - term;
      s = t;
    }
    s /= vals.size();
    REQUIRE(std::abs(got - s) <= 1e-14 * std::max(1.0, s));
  }
  SECTION("empty point set is a configuration error") {
    REQUIRE_THROWS_AS(
        condition_loss(c, 1, std::vector<Point>{}, [](int, const Point&) { return Jet2{}; }),
        ConfigError);
  }
}

TEST_CASE("equation and gradient loss values", "[loss]") {
  const RunConfig cfg = tiny_config("boussinesq", 1);
  const ProblemSpec bsq = make_problem_spec(cfg);
  const RunConfig bcfg = tiny_config("burgers", 1);
  const ProblemSpec bur = make_problem_spec(bcfg);
  std::vector<Point> pts;
  Rng rng(17);
  for (int i = 0; i < 40; ++i) pts.push_back({rng.uniform(-2, 2), rng.uniform(0, 2)});

  SECTION("zero fields give zero equation loss for all six equations") {
    const auto zero = [](int, const Point&) { return Jet2{}; };
    for (int k = 0; k < 6; ++k) {
      REQUIRE(equation_loss(bsq, k, pts, zero, 1.95) == 0.0);
      REQUIRE(gradient_loss(bsq, k, pts, zero, 1.95) == 0.0);
    }
    REQUIRE_THROWS_AS(equation_loss(bsq, 6, pts, zero, 1.95), ConfigError);
  }
  SECTION("burgers oracle profile has equation loss at rounding level") {
    std::vector<Point> ypts;
    for (int i = 0; i < 60; ++i) ypts.push_back({-4.0 + 8.0 * i / 59.0, 0.0});
    const auto oracle = [](int, const Point& y) { return burgers_implicit_jet(y[0], 0.5); };
    REQUIRE(equation_loss(bur, 0, ypts, oracle, 0.5) <= 1e-12);
  }
  SECTION("constant residual c gives c^2") {
    const double lambda = 0.5, c = 0.8;
    const auto src = [&](int, const Point&) {
      Jet2 j;
      j.v = -c / lambda;  // f = -lambda U with U_y = 0
      return j;
    };
    std::vector<Point> ypts = {{-1.0, 0.0}, {0.2, 0.0}, {2.0, 0.0}};
    REQUIRE(equation_loss(bur, 0, ypts, src, lambda) == Catch::Approx(c * c).epsilon(1e-14));
  }
  SECTION("linear residual with slope (3,4) gives gradient loss 25") {
    const auto src = [](int f, const Point& y) {
      Jet2 j;
      if (f == kOmega) {
        j.v = 3.0 * y[0] + 4.0 * y[1];
        j.g = {3.0, 4.0};
      }
      return j;
    };
    // f6 = Omega - (dU1/dy2 - dU2/dy1) = 3 y1 + 4 y2
    REQUIRE(gradient_loss(bsq, 5, pts, src, 1.95) == Catch::Approx(25.0).epsilon(1e-14));
  }
  SECTION("1-D gradient loss reduces to squared y-derivative (finite differences)") {
    const auto u = [](double y) {
      Jet2 j;
      j.v = std::sin(1.3 * y);
      j.g[0] = 1.3 * std::cos(1.3 * y);
      j.h[0] = -1.69 * std::sin(1.3 * y);
      return j;
    };
    const auto src = [&](int, const Point& y) { return u(y[0]); };
    const double lambda = 0.4;
    for (double y : {-1.1, 0.3, 0.9}) {
      ResidualBundle b;
      burgers_residual(u(y), lambda, y, b);
      const double h = 1e-5;
      ResidualBundle bp, bm;
      burgers_residual(u(y + h), lambda, y + h, bp);
      burgers_residual(u(y - h), lambda, y - h, bm);
      const double fd = (bp.f[0] - bm.f[0]) / (2.0 * h);
      REQUIRE(std::abs(b.fx[0] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
    (void)src;
  }
}

TEST_CASE("total cost assembly", "[loss]") {
  SECTION("printed combination: five ones and gamma = 0.1") {
    const std::vector<double> lc(5, 1.0), lf(6, 1.0), ldf(6, 1.0);
    REQUIRE(assemble_total(lc, lf, ldf, 0.1) == Catch::Approx(1.2).epsilon(1e-15));
    REQUIRE(assemble_total(lc, lf, ldf, 0.0) == Catch::Approx(1.0).epsilon(1e-15));
  }
  SECTION("all zero components give zero") {
    REQUIRE(assemble_total(std::vector<double>(3, 0.0), std::vector<double>(2, 0.0),
                           std::vector<double>(2, 0.0), 0.1) == 0.0);
  }
}

TEST_CASE("full evaluator: identity, gamma linearity, permutation invariance", "[loss]") {
  Setup s("boussinesq");
  std::vector<double> x;
  s.fs.pack(x);
  Rng rng(99);
  for (auto& v : x) v += rng.uniform(-0.1, 0.1);

  auto ev1 = s.evaluator(0.1);
  const LossBreakdown b1 = ev1.evaluate(x, nullptr);
  SECTION("breakdown identity") {
    const double manual = assemble_total(b1.loss_c, b1.loss_f, b1.loss_df, b1.gamma);
    REQUIRE(std::abs(b1.total - manual) <= 1e-14 * std::max(1.0, std::abs(b1.total)));
    for (double v : b1.loss_c) REQUIRE(v >= 0.0);
    for (double v : b1.loss_f) REQUIRE(v >= 0.0);
    for (double v : b1.loss_df) REQUIRE(v >= 0.0);
  }
  SECTION("doubling gamma adds exactly gamma (mean f + mean df)") {
    auto ev2 = s.evaluator(0.2);
    const LossBreakdown b2 = ev2.evaluate(x, nullptr);
    const double meanf = std::accumulate(b1.loss_f.begin(), b1.loss_f.end(), 0.0) / 6.0;
    const double meandf = std::accumulate(b1.loss_df.begin(), b1.loss_df.end(), 0.0) / 6.0;
    REQUIRE(b2.total - b1.total ==
            Catch::Approx(0.1 * (meanf + meandf)).epsilon(1e-13));
  }
  SECTION("permutation of interior points changes nothing beyond rounding") {
    Setup sp("boussinesq");
    std::reverse(sp.colloc.interior.begin(), sp.colloc.interior.end());
    auto evp = sp.evaluator(0.1);
    const LossBreakdown bp = evp.evaluate(x, nullptr);
    REQUIRE(bp.total == Catch::Approx(b1.total).epsilon(1e-13));
  }
  SECTION("reflected symmetric point set gives bitwise equal loss") {
    Setup sa("boussinesq");
    // Build a y1-symmetric interior set, then its reflection (same set,
    // mirrored entries in the same slots).
    Setup sb("boussinesq");
    for (std::size_t i = 0; i < sa.colloc.interior.size(); ++i) {
      sb.colloc.interior[i] = {-sa.colloc.interior[i][0], sa.colloc.interior[i][1]};
    }
    for (std::size_t j = 0; j < sa.colloc.boundary.size(); ++j) {
      for (std::size_t i = 0; i < sa.colloc.boundary[j].size(); ++i) {
        sb.colloc.boundary[j][i] = {-sa.colloc.boundary[j][i][0], sa.colloc.boundary[j][i][1]};
      }
    }
    auto eva = sa.evaluator(0.1);
    auto evb = sb.evaluator(0.1);
    const LossBreakdown ba = eva.evaluate(x, nullptr);
    const LossBreakdown bb = evb.evaluate(x, nullptr);
    REQUIRE(ba.total == bb.total);
    for (int k = 0; k < 6; ++k) {
      REQUIRE(ba.loss_f[k] == bb.loss_f[k]);
      REQUIRE(ba.loss_df[k] == bb.loss_df[k]);
    }
  }
  SECTION("non-finite parameters raise a numerical error") {
    std::vector<double> bad = x;
    bad[s.fs.n_field_params() - 1] = std::numeric_limits<double>::quiet_NaN();
    auto ev = s.evaluator(0.1);
    REQUIRE_THROWS_AS(ev.evaluate(bad, nullptr), NumericalError);
  }
}

TEST_CASE("full-cost parameter gradients match finite differences", "[loss]") {
  for (const std::string problem : {"burgers", "degregorio", "boussinesq"}) {
    DYNAMIC_SECTION("problem " << problem) {
      Setup s(problem, 7);
      std::vector<double> x;
      s.fs.pack(x);
      Rng rng(123);
      for (auto& v : x) v += rng.uniform(-0.15, 0.15);
      auto ev = s.evaluator(0.1);
      const Objective obj = [&](std::span<const double> p, std::vector<double>* g) {
        return ev.evaluate(p, g).total;
      };
      std::vector<double> grad;
      obj(x, &grad);
      double gnorm = 0.0;
      for (double g : grad) gnorm += g * g;
      gnorm = std::sqrt(gnorm) + 1e-30;
      for (int t = 0; t < 3; ++t) {
        std::vector<double> dir(x.size());
        for (std::size_t i = 0; i < dir.size(); ++i)
          dir[i] = grad[i] / gnorm + 0.3 * rng.uniform(-1, 1);
        REQUIRE(directional_fd_error(obj, x, grad, dir) <= 1e-5);
      }
      // Scalar entries (lambda and, for the nonlocal model, a) probed
      // coordinate-wise.
      for (std::size_t i = s.fs.n_field_params(); i < x.size(); ++i) {
        std::vector<double> e(x.size(), 0.0);
        e[i] = 1.0;
        REQUIRE(directional_fd_error(obj, x, grad, e) <= 1e-5);
      }
    }
  }
}
