#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "ssb/fields.hpp"
#include "ssb/hilbert.hpp"
#include "ssb/problems.hpp"
#include "ssb/sampling.hpp"

namespace ssb {

/// Per-term losses and their weighted combination
///   J = (1/n_b) sum loss_c + gamma ((1/n_e) sum loss_f + (1/n_e) sum loss_df).
struct LossBreakdown {
  std::vector<double> loss_c;
  std::vector<double> loss_f;
  std::vector<double> loss_df;
  double gamma = 0.1;
  double total = 0.0;
};

/// The weighted combination above, with optional per-term weights
/// (all 1 by default).
inline double assemble_total(const std::vector<double>& loss_c, const std::vector<double>& loss_f,
                             const std::vector<double>& loss_df, double gamma,
                             const std::vector<double>* wc = nullptr,
                             const std::vector<double>* we = nullptr) {
  double c = 0.0;
  for (std::size_t j = 0; j < loss_c.size(); ++j)
    c += (wc ? (*wc)[j] : 1.0) * loss_c[j];
  if (!loss_c.empty()) c /= static_cast<double>(loss_c.size());
  double f = 0.0, df = 0.0;
  for (std::size_t k = 0; k < loss_f.size(); ++k) {
    const double w = we ? (*we)[k] : 1.0;
    f += w * loss_f[k];
    df += w * loss_df[k];
  }
  const double ne = loss_f.empty() ? 1.0 : static_cast<double>(loss_f.size());
  return c + gamma * (f / ne + df / ne);
}

// ---------------------------------------------------------------------------
// Value-only entry points, generic over the jet provider so tests can feed
// closed-form jets. field index -> jet at point.
// ---------------------------------------------------------------------------

using JetSource = std::function<Jet2(int, const Point&)>;
/// (H[omega], H[omega'] ) at a point, for the nonlocal system.
using HilbertSource = std::function<std::array<double, 2>(const Point&)>;

inline void eval_residual_bundle(const ProblemSpec& prob, const Jet2* jets, double lambda,
                                 double a, const Point& y, const HilbertSource* hs,
                                 ResidualBundle& out) {
  switch (prob.kind) {
    case ProblemKind::burgers:
      burgers_residual(jets[0], lambda, y[0], out);
      break;
    case ProblemKind::degregorio: {
      std::array<double, 2> h{{0.0, 0.0}};
      if (hs) h = (*hs)(y);
      degregorio_residuals(jets[kDgOmega], jets[kDgU], h[0], h[1], a, lambda, y[0], out);
      break;
    }
    case ProblemKind::boussinesq:
      boussinesq_residuals(jets, lambda, y, out);
      break;
  }
}

/// Mean of squared residuals of equation k over the points.
inline double equation_loss(const ProblemSpec& prob, int k, std::span<const Point> points,
                            const JetSource& source, double lambda, double a = 0.0,
                            const HilbertSource* hs = nullptr) {
  if (k < 0 || k >= prob.n_equations) throw ConfigError("equation index out of range");
  if (points.empty()) throw ConfigError("equation_loss: empty point list");
  std::vector<Jet2> jets(prob.field_names.size());
  ResidualBundle b;
  double s = 0.0;
  for (const Point& y : points) {
    for (std::size_t f = 0; f < jets.size(); ++f) jets[f] = source(static_cast<int>(f), y);
    eval_residual_bundle(prob, jets.data(), lambda, a, y, hs, b);
    s += b.f[k] * b.f[k];
  }
  return s / static_cast<double>(points.size());
}

/// Mean of squared residual-gradient magnitudes of equation k.
inline double gradient_loss(const ProblemSpec& prob, int k, std::span<const Point> points,
                            const JetSource& source, double lambda, double a = 0.0,
                            const HilbertSource* hs = nullptr) {
  if (k < 0 || k >= prob.n_equations) throw ConfigError("equation index out of range");
  if (points.empty()) throw ConfigError("gradient_loss: empty point list");
  std::vector<Jet2> jets(prob.field_names.size());
  ResidualBundle b;
  double s = 0.0;
  for (const Point& y : points) {
    for (std::size_t f = 0; f < jets.size(); ++f) jets[f] = source(static_cast<int>(f), y);
    eval_residual_bundle(prob, jets.data(), lambda, a, y, hs, b);
    s += b.fx[k] * b.fx[k];
    if (prob.dim == 2) s += b.fy[k] * b.fy[k];
  }
  return s / static_cast<double>(points.size());
}

namespace detail {

/// Pointwise condition residual components for one constraint.
/// Returns the number of components written into comps.
inline int constraint_components(const ConstraintSpec& c, int dim, const Jet2* jets,
                                 double* comps) {
  int n = 0;
  switch (c.kind) {
    case ConstraintKind::field_value:
      comps[n++] = jets[0].v - c.target;
      break;
    case ConstraintKind::slope_x:
      comps[n++] = jets[0].g[0] - c.target;
      break;
    case ConstraintKind::grad_decay:
      for (std::size_t f = 0; f < c.fields.size(); ++f) {
        comps[n++] = jets[f].g[0];
        if (dim == 2) comps[n++] = jets[f].g[1];
      }
      break;
    case ConstraintKind::value_decay:
      for (std::size_t f = 0; f < c.fields.size(); ++f) comps[n++] = jets[f].v;
      break;
  }
  return n;
}

/// Scatter of d(obj)/d(component) back into the jet adjoints, mirroring
/// constraint_components.
inline void constraint_adjoint(const ConstraintSpec& c, int dim, const double* comp_bars,
                               Jet2* jet_bars) {
  int n = 0;
  switch (c.kind) {
    case ConstraintKind::field_value:
      jet_bars[0].v += comp_bars[n++];
      break;
    case ConstraintKind::slope_x:
      jet_bars[0].g[0] += comp_bars[n++];
      break;
    case ConstraintKind::grad_decay:
      for (std::size_t f = 0; f < c.fields.size(); ++f) {
        jet_bars[f].g[0] += comp_bars[n++];
        if (dim == 2) jet_bars[f].g[1] += comp_bars[n++];
      }
      break;
    case ConstraintKind::value_decay:
      for (std::size_t f = 0; f < c.fields.size(); ++f) jet_bars[f].v += comp_bars[n++];
      break;
  }
}

}  // namespace detail

/// Mean squared condition residual of one constraint over its points,
/// generic over the jet provider. Multi-component constraints sum their
/// squared components per point.
inline double condition_loss(const ConstraintSpec& c, int dim, std::span<const Point> points,
                             const JetSource& source) {
  if (points.empty()) throw ConfigError("condition_loss: empty point list");
  std::vector<Jet2> jets(std::max<std::size_t>(c.fields.size(), 1));
  double s = 0.0;
  double comps[16];
  for (const Point& y : points) {
    for (std::size_t f = 0; f < c.fields.size(); ++f) jets[f] = source(c.fields[f], y);
    const int nc = detail::constraint_components(c, dim, jets.data(), comps);
    for (int i = 0; i < nc; ++i) s += comps[i] * comps[i];
  }
  return s / static_cast<double>(points.size());
}

// ---------------------------------------------------------------------------
// Full cost + parameter gradient over a fixed collocation set.
// ---------------------------------------------------------------------------

class LossEvaluator {
 public:
  struct Options {
    double gamma = 0.1;
    std::vector<double> condition_weights;  // empty = all 1
    std::vector<double> equation_weights;   // empty = all 1
    std::size_t block_size = 32;
  };

  LossEvaluator(const ProblemSpec& prob, FieldSet& fs, const CollocationSet& cs, Options opt,
                const QuadratureGrid* hilbert_grid = nullptr)
      : prob_(&prob), fs_(&fs), cs_(&cs), opt_(std::move(opt)) {
    if (cs.interior.empty()) throw ConfigError("loss: empty interior point set");
    if (cs.boundary.size() != prob.constraints.size())
      throw ConfigError("loss: boundary sets do not match the constraint list");
    for (std::size_t j = 0; j < cs.boundary.size(); ++j) {
      if (cs.boundary[j].empty())
        throw ConfigError("loss: empty boundary point set for constraint " +
                          prob.constraints[j].name);
    }
    if (opt_.condition_weights.empty()) opt_.condition_weights.assign(prob.n_conditions(), 1.0);
    if (opt_.equation_weights.empty()) opt_.equation_weights.assign(prob.n_equations, 1.0);
    if (static_cast<int>(opt_.condition_weights.size()) != prob.n_conditions() ||
        static_cast<int>(opt_.equation_weights.size()) != prob.n_equations)
      throw ConfigError("loss: weight vector lengths do not match the problem");
    if (prob.uses_hilbert) {
      if (!hilbert_grid) throw ConfigError("loss: nonlocal problem needs a quadrature grid");
      hilbert_.emplace(*hilbert_grid);
      const std::size_t m = cs.interior.size();
      const std::size_t nq = hilbert_grid->nodes.size();
      h_w_.resize(m * nq);
      h_self_.resize(m);
      hdx_w_.resize(m * nq);
      hdx_self_.resize(m);
      const double p = hilbert_grid->tail_exponent;
      for (std::size_t i = 0; i < m; ++i) {
        const auto r = hilbert_->row(cs.interior[i][0], p);
        const auto r2 = hilbert_->row(cs.interior[i][0], p + 1.0);
        std::copy(r.node_w.begin(), r.node_w.end(), h_w_.begin() + i * nq);
        h_self_[i] = r.self_w;
        std::copy(r2.node_w.begin(), r2.node_w.end(), hdx_w_.begin() + i * nq);
        hdx_self_[i] = r2.self_w;
      }
    }
    // Field offsets into the flat parameter vector.
    field_off_.resize(fs.fields.size());
    field_np_.resize(fs.fields.size());
    for (std::size_t f = 0; f < fs.fields.size(); ++f) {
      field_off_[f] = fs.field_offset(f);
      field_np_[f] = fs.fields[f].net.n_params();
    }
    lambda_idx_ = fs.scalar_index("lambda");
    a_idx_ = fs.scalar_index("a");
  }

  std::size_t n_params() const { return fs_->n_params(); }
  const FieldSet& fields() const { return *fs_; }
  const ProblemSpec& problem() const { return *prob_; }
  double gamma() const { return opt_.gamma; }

  /// Cost (and optionally its gradient) at the flat parameter vector x.
  /// The bound FieldSet is left holding x on return.
  LossBreakdown evaluate(std::span<const double> x, std::vector<double>* grad) {
    fs_->unpack(x);
    const int n_e = prob_->n_equations;
    const int n_b = prob_->n_conditions();
    const double lambda = lambda_idx_ >= 0 ? fs_->scalars[lambda_idx_].value() : 0.0;
    const double a_val = a_idx_ >= 0 ? fs_->scalars[a_idx_].value() : 0.0;
    const std::size_t np = fs_->n_params();
    if (grad) grad->assign(np, 0.0);

    LossBreakdown bd;
    bd.gamma = opt_.gamma;
    bd.loss_c.assign(n_b, 0.0);
    bd.loss_f.assign(n_e, 0.0);
    bd.loss_df.assign(n_e, 0.0);

    // --- Nonlocal stage: field 0 sampled on the quadrature grid. ---
    const std::size_t nq = hilbert_ ? hilbert_->grid().nodes.size() : 0;
    std::vector<double> node_v(nq), node_g(nq);
    if (hilbert_) {
      const auto& nodes = hilbert_->grid().nodes;
      for_each_block(nq, 64, [&](std::size_t, std::size_t lo, std::size_t hi) {
        JetEvaluator ev(fs_->fields[kDgOmega].net, fs_->fields[kDgOmega].parity);
        for (std::size_t q = lo; q < hi; ++q) {
          const Jet2 j = ev.eval(Point{{nodes[q], 0.0}});
          node_v[q] = j.v;
          node_g[q] = j.g[0];
        }
      });
    }

    // --- Interior pass. ---
    const auto& interior = cs_->interior;
    const std::size_t m = interior.size();
    const std::size_t nblk = block_count(m, opt_.block_size);
    const std::size_t nf = fs_->fields.size();
    std::vector<std::array<double, ResidualBundle::kMax>> blk_f(nblk), blk_df(nblk);
    std::vector<std::vector<double>> blk_grad;
    std::vector<std::vector<double>> blk_nadj;
    std::vector<std::array<double, 2>> blk_scal(nblk, {{0.0, 0.0}});
    std::vector<long long> blk_bad(nblk, -1);
    if (grad) {
      blk_grad.assign(nblk, std::vector<double>(np, 0.0));
      if (hilbert_) blk_nadj.assign(nblk, std::vector<double>(2 * nq, 0.0));
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    const double scale_e = 2.0 * opt_.gamma / static_cast<double>(n_e) * inv_m;

    for_each_block(m, opt_.block_size, [&](std::size_t b, std::size_t lo, std::size_t hi) {
      std::vector<JetEvaluator> evs;
      evs.reserve(nf);
      for (std::size_t f = 0; f < nf; ++f)
        evs.emplace_back(fs_->fields[f].net, fs_->fields[f].parity);
      std::array<double, ResidualBundle::kMax> lf{}, ldf{};
      std::vector<Jet2> jets(nf);
      ResidualBundle bundle, bar;
      for (std::size_t i = lo; i < hi; ++i) {
        const Point& y = interior[i];
        for (std::size_t f = 0; f < nf; ++f) jets[f] = evs[f].eval(y);
        double h_om = 0.0, h_om_dx = 0.0;
        if (hilbert_) {
          const double* wrow = &h_w_[i * nq];
          const double* w2row = &hdx_w_[i * nq];
          for (std::size_t q = 0; q < nq; ++q) h_om += wrow[q] * node_v[q];
          for (std::size_t q = 0; q < nq; ++q) h_om_dx += w2row[q] * node_g[q];
          h_om += h_self_[i] * jets[kDgOmega].v;
          h_om_dx += hdx_self_[i] * jets[kDgOmega].g[0];
        }
        switch (prob_->kind) {
          case ProblemKind::burgers:
            burgers_residual(jets[0], lambda, y[0], bundle);
            break;
          case ProblemKind::degregorio:
            degregorio_residuals(jets[kDgOmega], jets[kDgU], h_om, h_om_dx, a_val, lambda, y[0],
                                 bundle);
            break;
          case ProblemKind::boussinesq:
            boussinesq_residuals(jets.data(), lambda, y, bundle);
            break;
        }
        bool ok = true;
        for (int k = 0; k < n_e; ++k) {
          const double gf = bundle.fx[k] * bundle.fx[k] +
                            (prob_->dim == 2 ? bundle.fy[k] * bundle.fy[k] : 0.0);
          if (!std::isfinite(bundle.f[k]) || !std::isfinite(gf)) ok = false;
          lf[k] += bundle.f[k] * bundle.f[k];
          ldf[k] += gf;
        }
        if (!ok && blk_bad[b] < 0) blk_bad[b] = static_cast<long long>(i);
        if (grad) {
          bar = ResidualBundle{};
          bar.n = n_e;
          for (int k = 0; k < n_e; ++k) {
            const double w = scale_e * opt_.equation_weights[k];
            bar.f[k] = w * bundle.f[k];
            bar.fx[k] = w * bundle.fx[k];
            bar.fy[k] = prob_->dim == 2 ? w * bundle.fy[k] : 0.0;
          }
          ResidualAdjoint adj;
          switch (prob_->kind) {
            case ProblemKind::burgers:
              burgers_adjoint(jets[0], lambda, y[0], bar, adj);
              break;
            case ProblemKind::degregorio:
              degregorio_adjoint(jets[kDgOmega], jets[kDgU], a_val, lambda, y[0], bar, adj);
              break;
            case ProblemKind::boussinesq:
              boussinesq_adjoint(jets.data(), lambda, y, bar, adj);
              break;
          }
          if (hilbert_) {
            const double* wrow = &h_w_[i * nq];
            const double* w2row = &hdx_w_[i * nq];
            double* nadj = blk_nadj[b].data();
            if (adj.hilbert_bar != 0.0) {
              for (std::size_t q = 0; q < nq; ++q) nadj[q] += adj.hilbert_bar * wrow[q];
              adj.jet_bar[kDgOmega].v += adj.hilbert_bar * h_self_[i];
            }
            if (adj.hilbert_dx_bar != 0.0) {
              for (std::size_t q = 0; q < nq; ++q) nadj[nq + q] += adj.hilbert_dx_bar * w2row[q];
              adj.jet_bar[kDgOmega].g[0] += adj.hilbert_dx_bar * hdx_self_[i];
            }
          }
          for (std::size_t f = 0; f < nf; ++f) {
            evs[f].backprop(adj.jet_bar[f],
                            std::span<double>(blk_grad[b]).subspan(field_off_[f], field_np_[f]));
          }
          blk_scal[b][0] += adj.lambda_bar;
          blk_scal[b][1] += adj.a_bar;
        }
      }
      blk_f[b] = lf;
      blk_df[b] = ldf;
    });

    for (std::size_t b = 0; b < nblk; ++b) {
      if (blk_bad[b] >= 0) {
        const Point& y = interior[static_cast<std::size_t>(blk_bad[b])];
        std::ostringstream os;
        os << "non-finite residual at collocation point (" << y[0];
        if (prob_->dim == 2) os << ", " << y[1];
        os << ")";
        throw NumericalError(os.str());
      }
    }
    double lambda_bar = 0.0, a_bar = 0.0;
    for (std::size_t b = 0; b < nblk; ++b) {
      for (int k = 0; k < n_e; ++k) {
        bd.loss_f[k] += blk_f[b][k];
        bd.loss_df[k] += blk_df[b][k];
      }
      lambda_bar += blk_scal[b][0];
      a_bar += blk_scal[b][1];
    }
    for (int k = 0; k < n_e; ++k) {
      bd.loss_f[k] *= inv_m;
      bd.loss_df[k] *= inv_m;
    }
    if (grad) {
      for (std::size_t b = 0; b < nblk; ++b) {
        const auto& g = blk_grad[b];
        for (std::size_t i = 0; i < np; ++i) (*grad)[i] += g[i];
      }
    }

    // --- Nonlocal node adjoints back into field 0. ---
    if (grad && hilbert_) {
      std::vector<double> nadj(2 * nq, 0.0);
      for (std::size_t b = 0; b < nblk; ++b) {
        for (std::size_t q = 0; q < 2 * nq; ++q) nadj[q] += blk_nadj[b][q];
      }
      const auto& nodes = hilbert_->grid().nodes;
      const std::size_t nnb = block_count(nq, 64);
      std::vector<std::vector<double>> node_grad(nnb,
                                                 std::vector<double>(field_np_[kDgOmega], 0.0));
      for_each_block(nq, 64, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        JetEvaluator ev(fs_->fields[kDgOmega].net, fs_->fields[kDgOmega].parity);
        for (std::size_t q = lo; q < hi; ++q) {
          if (nadj[q] == 0.0 && nadj[nq + q] == 0.0) continue;
          ev.eval(Point{{nodes[q], 0.0}});
          Jet2 seed;
          seed.v = nadj[q];
          seed.g[0] = nadj[nq + q];
          ev.backprop(seed, std::span<double>(node_grad[b]));
        }
      });
      for (std::size_t b = 0; b < nnb; ++b) {
        for (std::size_t i = 0; i < field_np_[kDgOmega]; ++i)
          (*grad)[field_off_[kDgOmega] + i] += node_grad[b][i];
      }
    }

    // --- Condition pass. ---
    for (int j = 0; j < n_b; ++j) {
      const auto& c = prob_->constraints[j];
      const auto& pts = cs_->boundary[j];
      const std::size_t nj = pts.size();
      const double seed_w =
          2.0 * opt_.condition_weights[j] / static_cast<double>(n_b) / static_cast<double>(nj);
      const std::size_t cnblk = block_count(nj, opt_.block_size);
      std::vector<double> cblk(cnblk, 0.0);
      std::vector<std::vector<double>> cblk_grad;
      if (grad) cblk_grad.assign(cnblk, std::vector<double>(np, 0.0));
      for_each_block(nj, opt_.block_size, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        std::vector<JetEvaluator> evs;
        for (int fi : c.fields)
          evs.emplace_back(fs_->fields[fi].net, fs_->fields[fi].parity);
        std::vector<Jet2> jets(c.fields.size());
        std::vector<Jet2> jbars(c.fields.size());
        double comps[16], cbars[16];
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
          const Point& y = pts[i];
          for (std::size_t f = 0; f < c.fields.size(); ++f) jets[f] = evs[f].eval(y);
          const int ncomp = detail::constraint_components(c, prob_->dim, jets.data(), comps);
          for (int t = 0; t < ncomp; ++t) acc += comps[t] * comps[t];
          if (grad) {
            for (int t = 0; t < ncomp; ++t) cbars[t] = seed_w * comps[t];
            for (auto& jb : jbars) jb = Jet2{};
            detail::constraint_adjoint(c, prob_->dim, cbars, jbars.data());
            for (std::size_t f = 0; f < c.fields.size(); ++f) {
              const int fi = c.fields[f];
              evs[f].backprop(jbars[f],
                              std::span<double>(cblk_grad[b]).subspan(field_off_[fi],
                                                                      field_np_[fi]));
            }
          }
        }
        cblk[b] = acc;
      });
      double s = 0.0;
      for (std::size_t b = 0; b < cnblk; ++b) s += cblk[b];
      bd.loss_c[j] = s / static_cast<double>(nj);
      if (grad) {
        for (std::size_t b = 0; b < cnblk; ++b) {
          for (std::size_t i = 0; i < np; ++i) (*grad)[i] += cblk_grad[b][i];
        }
      }
    }

    // --- Scalar chain rule through the window squashing. ---
    if (grad) {
      if (lambda_idx_ >= 0 && fs_->scalars[lambda_idx_].trainable) {
        (*grad)[fs_->scalar_flat_index(lambda_idx_)] =
            lambda_bar * fs_->scalars[lambda_idx_].window.dvalue_draw();
      }
      if (a_idx_ >= 0 && fs_->scalars[a_idx_].trainable) {
        (*grad)[fs_->scalar_flat_index(a_idx_)] =
            a_bar * fs_->scalars[a_idx_].window.dvalue_draw();
      }
    }

    bd.total = assemble_total(bd.loss_c, bd.loss_f, bd.loss_df, opt_.gamma,
                              &opt_.condition_weights, &opt_.equation_weights);
    if (!std::isfinite(bd.total)) throw NumericalError("non-finite total loss");
    // Breakdown identity, re-derived with an independent summation order.
    double cc = 0.0, ff = 0.0, dd = 0.0;
    for (int j = n_b - 1; j >= 0; --j) cc += opt_.condition_weights[j] * bd.loss_c[j];
    for (int k = n_e - 1; k >= 0; --k) {
      ff += opt_.equation_weights[k] * bd.loss_f[k];
      dd += opt_.equation_weights[k] * bd.loss_df[k];
    }
    const double check = (n_b > 0 ? cc / n_b : 0.0) + opt_.gamma * (ff / n_e + dd / n_e);
    if (std::abs(check - bd.total) > 1e-14 * std::max(1.0, std::abs(bd.total)))
      throw NumericalError("loss breakdown identity violated");
    return bd;
  }

 private:
  const ProblemSpec* prob_;
  FieldSet* fs_;
  const CollocationSet* cs_;
  Options opt_;
  std::optional<HilbertTransform> hilbert_;
  std::vector<double> h_w_, h_self_, hdx_w_, hdx_self_;
  std::vector<std::size_t> field_off_, field_np_;
  int lambda_idx_ = -1;
  int a_idx_ = -1;
};

}  // namespace ssb
