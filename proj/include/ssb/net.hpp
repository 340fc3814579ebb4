#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssb/common.hpp"

namespace ssb {

/// Behaviour of a network output under reflection of one input axis.
enum class Parity { none, even, odd };

/// Per-axis parity tags. Entries past the input dimension are ignored.
using ParityTag = std::array<Parity, 2>;

inline ParityTag parity_none() { return {Parity::none, Parity::none}; }

inline const char* parity_name(Parity p) {
  switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    default: return "none";
  }
}

inline Parity parity_from_name(const std::string& s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  if (s == "none") return Parity::none;
  throw ConfigError("unknown parity tag: " + s);
}

/// Second-order jet of a scalar field at a point: value, gradient, and the
/// upper triangle of the (symmetric) Hessian. In 1-D only g[0] and h[0] are
/// used; in 2-D h = (hxx, hxy, hyy).
struct Jet2 {
  double v = 0.0;
  std::array<double, 2> g{{0.0, 0.0}};
  std::array<double, 3> h{{0.0, 0.0, 0.0}};
};

/// Weights and biases of a fully connected tanh network with a linear
/// output layer. Weight matrices are stored row-major (out x in) and
/// concatenated layer by layer; biases likewise.
struct ModelParams {
  std::vector<int> layer_dims;  // [d, hidden..., 1] with d in {1, 2}
  std::vector<double> weights;
  std::vector<double> biases;

  int dim() const { return layer_dims.front(); }
  int n_affine() const { return static_cast<int>(layer_dims.size()) - 1; }

  static std::size_t weight_count_for(const std::vector<int>& dims) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      n += static_cast<std::size_t>(dims[l]) * static_cast<std::size_t>(dims[l + 1]);
    }
    return n;
  }
  static std::size_t bias_count_for(const std::vector<int>& dims) {
    std::size_t n = 0;
    for (std::size_t l = 1; l < dims.size(); ++l) n += static_cast<std::size_t>(dims[l]);
    return n;
  }

  std::size_t weight_count() const { return weights.size(); }
  std::size_t bias_count() const { return biases.size(); }
  std::size_t n_params() const { return weights.size() + biases.size(); }

  static void validate_dims(const std::vector<int>& dims) {
    if (dims.size() < 2) throw ConfigError("layer_dims needs at least [d, 1]");
    if (dims.front() != 1 && dims.front() != 2)
      throw ConfigError("layer_dims must start with input dim 1 or 2");
    if (dims.back() != 1) throw ConfigError("layer_dims must end with output dim 1");
    for (int w : dims) {
      if (w < 1) throw ConfigError("layer_dims entries must be positive");
    }
  }
};

/// Fresh network with uniform weights of standard deviation 1/sqrt(fan_in)
/// and zero biases. Deterministic in the seed.
inline ModelParams init_model(const std::vector<int>& layer_dims, std::uint64_t seed) {
  ModelParams::validate_dims(layer_dims);
  ModelParams m;
  m.layer_dims = layer_dims;
  m.weights.resize(ModelParams::weight_count_for(layer_dims));
  m.biases.assign(ModelParams::bias_count_for(layer_dims), 0.0);
  Rng rng(seed);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double s = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (int j = 0; j < fan_out * fan_in; ++j) m.weights[off++] = rng.uniform(-s, s);
  }
  return m;
}

namespace detail {

// Jet component counts: value + d gradient entries + d(d+1)/2 Hessian entries.
constexpr int jet_comps(int d) { return d == 1 ? 3 : 6; }

// tanh applied to an NC-component jet, z -> a.
template <int D>
inline void act_forward(const double* z, double* a) {
  const double t = std::tanh(z[0]);
  const double t1 = 1.0 - t * t;
  const double t2 = -2.0 * t * t1;
  a[0] = t;
  if constexpr (D == 1) {
    a[1] = t1 * z[1];
    a[2] = t2 * z[1] * z[1] + t1 * z[2];
  } else {
    a[1] = t1 * z[1];
    a[2] = t1 * z[2];
    a[3] = t2 * z[1] * z[1] + t1 * z[3];
    a[4] = t2 * z[1] * z[2] + t1 * z[4];
    a[5] = t2 * z[2] * z[2] + t1 * z[5];
  }
}

// Adjoint of act_forward: given abar = d(obj)/d(a), accumulate
// zbar = d(obj)/d(z). Uses the stored pre-activation jet z.
template <int D>
inline void act_adjoint(const double* z, const double* abar, double* zbar) {
  const double t = std::tanh(z[0]);
  const double t1 = 1.0 - t * t;
  const double t2 = -2.0 * t * t1;
  const double t3 = -2.0 * t1 * t1 - 2.0 * t * t2;
  if constexpr (D == 1) {
    const double q = z[1];
    zbar[0] = abar[0] * t1 + abar[1] * t2 * q + abar[2] * (t3 * q * q + t2 * z[2]);
    zbar[1] = abar[1] * t1 + abar[2] * 2.0 * t2 * q;
    zbar[2] = abar[2] * t1;
  } else {
    const double q0 = z[1];
    const double q1 = z[2];
    zbar[0] = abar[0] * t1 + (abar[1] * q0 + abar[2] * q1) * t2 +
              abar[3] * (t3 * q0 * q0 + t2 * z[3]) +
              abar[4] * (t3 * q0 * q1 + t2 * z[4]) +
              abar[5] * (t3 * q1 * q1 + t2 * z[5]);
    zbar[1] = abar[1] * t1 + 2.0 * t2 * q0 * abar[3] + t2 * q1 * abar[4];
    zbar[2] = abar[2] * t1 + 2.0 * t2 * q1 * abar[5] + t2 * q0 * abar[4];
    zbar[3] = abar[3] * t1;
    zbar[4] = abar[4] * t1;
    zbar[5] = abar[5] * t1;
  }
}

}  // namespace detail

/// Evaluates a parity-symmetrized network as a second-order jet and
/// backpropagates jet adjoints to parameter gradients. Holds reusable
/// forward tapes; one instance per thread.
///
/// Parity is hard-enforced by construction: for each tagged axis j the
/// output is (N(y) -/+ N(refl_j y))/2, composed over tagged axes.
class JetEvaluator {
 public:
  JetEvaluator(const ModelParams& net, const ParityTag& parity)
      : net_(&net), d_(net.dim()), nc_(detail::jet_comps(d_)) {
    // Enumerate reflections of the tagged axes with their signs/coefs.
    std::vector<int> tagged;
    for (int ax = 0; ax < d_; ++ax) {
      if (parity[ax] != Parity::none) tagged.push_back(ax);
    }
    const int n_refl = 1 << tagged.size();
    const double inv = 1.0 / static_cast<double>(n_refl);
    for (int mask = 0; mask < n_refl; ++mask) {
      Refl r;
      r.sgn = {1.0, 1.0};
      r.coef = inv;
      for (std::size_t t = 0; t < tagged.size(); ++t) {
        if (mask & (1 << t)) {
          r.sgn[tagged[t]] = -1.0;
          if (parity[tagged[t]] == Parity::odd) r.coef = -r.coef;
        }
      }
      refls_.push_back(r);
    }
    // Per-layer offsets into the tape buffers.
    const auto& dims = net.layer_dims;
    a_off_.resize(dims.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l < dims.size(); ++l) {
      a_off_[l] = off;
      off += static_cast<std::size_t>(dims[l]) * nc_;
    }
    tape_len_ = off;
    z_off_.assign(dims.size(), 0);
    off = 0;
    for (std::size_t l = 1; l < dims.size(); ++l) {
      z_off_[l] = off;
      off += static_cast<std::size_t>(dims[l]) * nc_;
    }
    z_len_ = off;
    a_.assign(refls_.size(), std::vector<double>(tape_len_, 0.0));
    z_.assign(refls_.size(), std::vector<double>(z_len_, 0.0));
    const int wmax = *std::max_element(dims.begin(), dims.end());
    abar_.assign(static_cast<std::size_t>(wmax) * nc_, 0.0);
    zbar_.assign(static_cast<std::size_t>(wmax) * nc_, 0.0);
  }

  int dim() const { return d_; }

  /// Forward pass at y; the tape is kept for a subsequent backprop.
  Jet2 eval(const Point& y) {
    Jet2 out;
    for (std::size_t r = 0; r < refls_.size(); ++r) {
      forward_one(r, y);
      accumulate_output(r, out);
    }
    return out;
  }

  /// Accumulates d(obj)/d(params) into grad (layout: weights then biases,
  /// matching ModelParams) given seed = d(obj)/d(output jet) for the
  /// point of the last eval() call.
  void backprop(const Jet2& seed, std::span<double> grad) {
    for (std::size_t r = 0; r < refls_.size(); ++r) backward_one(r, seed, grad);
  }

 private:
  struct Refl {
    std::array<double, 2> sgn;
    double coef;
  };

  void forward_one(std::size_t r, const Point& y) {
    const auto& dims = net_->layer_dims;
    auto& a = a_[r];
    auto& z = z_[r];
    // Input jets.
    for (int i = 0; i < d_; ++i) {
      double* ji = &a[a_off_[0] + static_cast<std::size_t>(i) * nc_];
      std::fill(ji, ji + nc_, 0.0);
      ji[0] = refls_[r].sgn[i] * y[i];
      ji[1 + i] = 1.0;
    }
    const int n_aff = net_->n_affine();
    std::size_t woff = 0;
    std::size_t boff = 0;
    for (int l = 1; l <= n_aff; ++l) {
      const int win = dims[l - 1];
      const int wout = dims[l];
      const double* aprev = &a[a_off_[l - 1]];
      double* zl = &z[z_off_[l]];
      for (int j = 0; j < wout; ++j) {
        double acc[6] = {net_->biases[boff + j], 0.0, 0.0, 0.0, 0.0, 0.0};
        const double* wrow = &net_->weights[woff + static_cast<std::size_t>(j) * win];
        for (int i = 0; i < win; ++i) {
          const double w = wrow[i];
          const double* ai = aprev + static_cast<std::size_t>(i) * nc_;
          for (int c = 0; c < nc_; ++c) acc[c] += w * ai[c];
        }
        double* zj = zl + static_cast<std::size_t>(j) * nc_;
        for (int c = 0; c < nc_; ++c) zj[c] = acc[c];
        double* aj = &a[a_off_[l] + static_cast<std::size_t>(j) * nc_];
        if (l < n_aff) {
          if (d_ == 1) {
            detail::act_forward<1>(zj, aj);
          } else {
            detail::act_forward<2>(zj, aj);
          }
        } else {
          for (int c = 0; c < nc_; ++c) aj[c] = zj[c];
        }
      }
      woff += static_cast<std::size_t>(win) * wout;
      boff += wout;
    }
  }

  void accumulate_output(std::size_t r, Jet2& out) const {
    const auto& dims = net_->layer_dims;
    const double* c = &a_[r][a_off_[dims.size() - 1]];
    const double coef = refls_[r].coef;
    const double s0 = refls_[r].sgn[0];
    out.v += coef * c[0];
    if (d_ == 1) {
      out.g[0] += coef * s0 * c[1];
      out.h[0] += coef * c[2];
    } else {
      const double s1 = refls_[r].sgn[1];
      out.g[0] += coef * s0 * c[1];
      out.g[1] += coef * s1 * c[2];
      out.h[0] += coef * c[3];
      out.h[1] += coef * s0 * s1 * c[4];
      out.h[2] += coef * c[5];
    }
  }

  void backward_one(std::size_t r, const Jet2& seed, std::span<double> grad) {
    const auto& dims = net_->layer_dims;
    const auto& a = a_[r];
    const auto& z = z_[r];
    const double coef = refls_[r].coef;
    const double s0 = refls_[r].sgn[0];
    // Seed adjoints for this reflection's raw network output.
    if (d_ == 1) {
      abar_[0] = coef * seed.v;
      abar_[1] = coef * s0 * seed.g[0];
      abar_[2] = coef * seed.h[0];
    } else {
      const double s1 = refls_[r].sgn[1];
      abar_[0] = coef * seed.v;
      abar_[1] = coef * s0 * seed.g[0];
      abar_[2] = coef * s1 * seed.g[1];
      abar_[3] = coef * seed.h[0];
      abar_[4] = coef * s0 * s1 * seed.h[1];
      abar_[5] = coef * seed.h[2];
    }
    const int n_aff = net_->n_affine();
    std::size_t woff = net_->weights.size();
    std::size_t boff = net_->biases.size();
    double* wgrad = grad.data();
    double* bgrad = grad.data() + net_->weights.size();
    for (int l = n_aff; l >= 1; --l) {
      const int win = dims[l - 1];
      const int wout = dims[l];
      woff -= static_cast<std::size_t>(win) * wout;
      boff -= wout;
      const double* zl = &z[z_off_[l]];
      const double* aprev = &a[a_off_[l - 1]];
      // abar_ holds d(obj)/d(a_l); convert to d(obj)/d(z_l).
      for (int j = 0; j < wout; ++j) {
        const double* ab = &abar_[static_cast<std::size_t>(j) * nc_];
        double* zb = &zbar_[static_cast<std::size_t>(j) * nc_];
        if (l < n_aff) {
          if (d_ == 1) {
            detail::act_adjoint<1>(zl + static_cast<std::size_t>(j) * nc_, ab, zb);
          } else {
            detail::act_adjoint<2>(zl + static_cast<std::size_t>(j) * nc_, ab, zb);
          }
        } else {
          for (int c = 0; c < nc_; ++c) zb[c] = ab[c];
        }
      }
      // Parameter gradients and previous-layer adjoints.
      if (l > 1) {
        for (int i = 0; i < win; ++i) {
          double* ab = &abar_[static_cast<std::size_t>(i) * nc_];
          for (int c = 0; c < nc_; ++c) ab[c] = 0.0;
        }
      }
      for (int j = 0; j < wout; ++j) {
        const double* zb = &zbar_[static_cast<std::size_t>(j) * nc_];
        bgrad[boff + j] += zb[0];
        double* wg = &wgrad[woff + static_cast<std::size_t>(j) * win];
        const double* wrow = &net_->weights[woff + static_cast<std::size_t>(j) * win];
        for (int i = 0; i < win; ++i) {
          const double* ai = aprev + static_cast<std::size_t>(i) * nc_;
          double dot = 0.0;
          for (int c = 0; c < nc_; ++c) dot += zb[c] * ai[c];
          wg[i] += dot;
          if (l > 1) {
            double* ab = &abar_[static_cast<std::size_t>(i) * nc_];
            const double w = wrow[i];
            for (int c = 0; c < nc_; ++c) ab[c] += w * zb[c];
          }
        }
      }
    }
  }

  const ModelParams* net_;
  int d_;
  int nc_;
  std::vector<Refl> refls_;
  std::vector<std::size_t> a_off_, z_off_;
  std::size_t tape_len_ = 0, z_len_ = 0;
  std::vector<std::vector<double>> a_, z_;
  std::vector<double> abar_, zbar_;
};

/// One-shot jet evaluation (convenience wrapper; hot paths reuse a
/// JetEvaluator instead).
inline Jet2 eval_jet2(const ModelParams& net, const ParityTag& parity, const Point& y) {
  JetEvaluator ev(net, parity);
  return ev.eval(y);
}

}  // namespace ssb
