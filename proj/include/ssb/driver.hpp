#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssb/io.hpp"
#include "ssb/loss.hpp"
#include "ssb/optim.hpp"
#include "ssb/oracles.hpp"
#include "ssb/sampling.hpp"
#include "ssb/selftest.hpp"

namespace ssb {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Snapshot export: fields and residuals on a regular grid, plus norms.
// ---------------------------------------------------------------------------

struct GridSpec {
  int nx = 401;
  int ny = 0;  // 2-D only; 0 derives from nx
};

inline std::vector<Point> make_export_grid(const ProblemSpec& prob, const GridSpec& g) {
  const Box box = prob.collocation_box();
  std::vector<Point> pts;
  if (prob.dim == 1) {
    for (int i = 0; i < g.nx; ++i) {
      const double t = static_cast<double>(i) / (g.nx - 1);
      pts.push_back(Point{{box.lo[0] + t * (box.hi[0] - box.lo[0]), 0.0}});
    }
  } else {
    const int ny = g.ny > 0 ? g.ny : (g.nx + 1) / 2;
    for (int jy = 0; jy < ny; ++jy) {
      for (int ix = 0; ix < g.nx; ++ix) {
        const double tx = static_cast<double>(ix) / (g.nx - 1);
        const double ty = static_cast<double>(jy) / (ny - 1);
        pts.push_back(Point{{box.lo[0] + tx * (box.hi[0] - box.lo[0]),
                             box.lo[1] + ty * (box.hi[1] - box.lo[1])}});
      }
    }
  }
  return pts;
}

/// Jet provider backed by the trained networks.
class NetJetSource {
 public:
  explicit NetJetSource(const FieldSet& fs) {
    for (const auto& f : fs.fields) evs_.emplace_back(f.net, f.parity);
  }
  Jet2 operator()(int field, const Point& y) { return evs_[field].eval(y); }
  JetSource source() {
    return [this](int f, const Point& y) { return (*this)(f, y); };
  }

 private:
  std::vector<JetEvaluator> evs_;
};

/// Hilbert provider for grid evaluation of the nonlocal system.
class GridHilbertSource {
 public:
  GridHilbertSource(const RunConfig& cfg, const FieldSet& fieldset)
      : ht_(build_grid(cfg.hilbert_l, cfg.hilbert_n, cfg.tail_exponent)) {
    JetEvaluator ev(fieldset.fields[kDgOmega].net, fieldset.fields[kDgOmega].parity);
    const auto& nodes = ht_.grid().nodes;
    node_v_.resize(nodes.size());
    node_g_.resize(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const Jet2 j = ev.eval(Point{{nodes[q], 0.0}});
      node_v_[q] = j.v;
      node_g_[q] = j.g[0];
    }
    om_ = std::make_unique<JetEvaluator>(fieldset.fields[kDgOmega].net,
                                         fieldset.fields[kDgOmega].parity);
  }

  std::array<double, 2> operator()(const Point& y) {
    const double p = ht_.grid().tail_exponent;
    const auto r = ht_.row(y[0], p);
    const auto r2 = ht_.row(y[0], p + 1.0);
    const Jet2 j = om_->eval(y);
    return {HilbertTransform::apply(r, node_v_, j.v),
            HilbertTransform::apply(r2, node_g_, j.g[0])};
  }

  HilbertSource source() {
    return [this](const Point& y) { return (*this)(y); };
  }

 private:
  HilbertTransform ht_;
  std::vector<double> node_v_, node_g_;
  std::unique_ptr<JetEvaluator> om_;
};

/// Writes field_<name>.csv, residual_f<k>.csv, norms.csv (and an oracle
/// comparison when the problem has a closed-form reference). Returns the
/// norm table.
inline ResidualReport export_snapshot(const ProblemSpec& prob, const FieldSet& fieldset,
                                      const RunConfig& cfg, const GridSpec& grid,
                                      const fs::path& dir) {
  const std::string hash = config_hash(cfg);
  const auto pts = make_export_grid(prob, grid);
  NetJetSource nets(fieldset);
  auto source = nets.source();
  std::optional<GridHilbertSource> hsrc;
  HilbertSource hs;
  const HilbertSource* hs_ptr = nullptr;
  if (prob.uses_hilbert) {
    hsrc.emplace(cfg, fieldset);
    hs = hsrc->source();
    hs_ptr = &hs;
  }
  const double lambda = fieldset.scalar_value("lambda");
  const double a_val = fieldset.scalar_index("a") >= 0 ? fieldset.scalar_value("a") : 0.0;

  const std::vector<std::string> coord_cols =
      prob.dim == 1 ? std::vector<std::string>{"y"} : std::vector<std::string>{"y1", "y2"};
  // Field values.
  for (std::size_t f = 0; f < prob.field_names.size(); ++f) {
    auto cols = coord_cols;
    cols.push_back("value");
    CsvWriter csv(dir / ("field_" + prob.field_names[f] + ".csv"), hash, cols);
    for (const Point& y : pts) {
      const Jet2 j = source(static_cast<int>(f), y);
      if (prob.dim == 1) {
        csv.row({y[0], j.v});
      } else {
        csv.row({y[0], y[1], j.v});
      }
    }
  }
  // Residuals.
  std::vector<Jet2> jets(prob.field_names.size());
  std::vector<std::unique_ptr<CsvWriter>> rcsv;
  for (int k = 0; k < prob.n_equations; ++k) {
    auto cols = coord_cols;
    cols.push_back("value");
    rcsv.push_back(std::make_unique<CsvWriter>(
        dir / ("residual_f" + std::to_string(k + 1) + ".csv"), hash, cols));
  }
  ResidualBundle b;
  for (const Point& y : pts) {
    for (std::size_t f = 0; f < jets.size(); ++f) jets[f] = source(static_cast<int>(f), y);
    eval_residual_bundle(prob, jets.data(), lambda, a_val, y, hs_ptr, b);
    for (int k = 0; k < prob.n_equations; ++k) {
      if (prob.dim == 1) {
        rcsv[k]->row({y[0], b.f[k]});
      } else {
        rcsv[k]->row({y[0], y[1], b.f[k]});
      }
    }
  }
  // Norm table.
  const ResidualReport rep = residual_report(prob, pts, source, lambda, a_val, hs_ptr);
  {
    CsvWriter csv(dir / "norms.csv", hash, {"kind", "name", "rms", "sup", "ratio"});
    for (std::size_t k = 0; k < rep.equations.size(); ++k) {
      const auto& e = rep.equations[k];
      csv.raw_row("equation," + e.name + "," + fmt_double(e.rms) + "," + fmt_double(e.sup) + "," +
                  fmt_double(rep.ratio[k]));
    }
    for (const auto& e : rep.fields) {
      csv.raw_row("field," + e.name + "," + fmt_double(e.rms) + "," + fmt_double(e.sup) + ",");
    }
  }
  // Oracle comparison where a closed-form reference exists.
  if (prob.kind == ProblemKind::burgers) {
    CsvWriter csv(dir / "oracle_compare.csv", hash, {"y", "u_net", "u_oracle", "abs_err"});
    double sup = 0.0;
    for (const Point& y : pts) {
      const double un = source(0, y).v;
      const double uo = burgers_implicit(y[0], lambda);
      sup = std::max(sup, std::abs(un - uo));
      csv.row({y[0], un, uo, std::abs(un - uo)});
    }
    csv.raw_row("# sup_err=" + fmt_double(sup));
  } else if (prob.kind == ProblemKind::degregorio && fieldset.scalar_index("a") >= 0 &&
             !fieldset.scalars[fieldset.scalar_index("a")].trainable &&
             fieldset.scalar_value("a") == 0.0) {
    CsvWriter csv(dir / "oracle_compare.csv", hash,
                  {"y", "omega_net", "omega_exact", "abs_err"});
    for (const Point& y : pts) {
      const double on = source(kDgOmega, y).v;
      const double oe = clm_exact(y[0]).omega;
      csv.row({y[0], on, oe, std::abs(on - oe)});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

struct SolveResult {
  fs::path run_dir;
  double lambda_hat = 0.0;
  std::optional<double> a_hat;
  double final_total = 0.0;
  LossBreakdown final_loss;
  TrainDiagnostics diag;
  ResidualReport report;
};

/// Runs the two-stage schedule on a configuration and writes the full
/// run directory. initial_fields, when given, warm-starts the networks
/// (shapes must match; scalars are re-initialized from the config).
inline SolveResult cmd_solve(const RunConfig& cfg, const fs::path& out_dir,
                             const FieldSet* initial_fields = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  set_thread_count(cfg.threads);
  fs::create_directories(out_dir);
  const std::string hash = config_hash(cfg);

  const ProblemSpec prob = make_problem_spec(cfg);
  FieldSet fieldset = make_fieldset(cfg, prob);
  if (initial_fields) {
    if (initial_fields->fields.size() != fieldset.fields.size())
      throw ConfigError("warm start: field count mismatch");
    for (std::size_t f = 0; f < fieldset.fields.size(); ++f) {
      if (initial_fields->fields[f].net.layer_dims != fieldset.fields[f].net.layer_dims)
        throw ConfigError("warm start: layer dims mismatch");
      fieldset.fields[f].net = initial_fields->fields[f].net;
    }
  }
  const CollocationSet colloc = sample_collocation(prob, cfg.n_near, cfg.n_far, cfg.r_split,
                                                   boundary_counts(cfg, prob), cfg.seed);
  {
    std::ofstream cf(out_dir / "config.json");
    cf << canonical_config(cfg).dump(1) << "\n";
  }
  {
    std::vector<std::string> cols = {"set", "y1"};
    if (prob.dim == 2) cols.push_back("y2");
    CsvWriter csv(out_dir / "collocation.csv", hash, cols);
    for (const Point& p : colloc.interior) {
      std::string line = "interior," + fmt_double(p[0]);
      if (prob.dim == 2) line += "," + fmt_double(p[1]);
      csv.raw_row(line);
    }
    for (std::size_t j = 0; j < colloc.boundary.size(); ++j) {
      for (const Point& p : colloc.boundary[j]) {
        std::string line = prob.constraints[j].name + "," + fmt_double(p[0]);
        if (prob.dim == 2) line += "," + fmt_double(p[1]);
        csv.raw_row(line);
      }
    }
  }

  std::optional<QuadratureGrid> hgrid;
  if (prob.uses_hilbert) hgrid = build_grid(cfg.hilbert_l, cfg.hilbert_n, cfg.tail_exponent);
  LossEvaluator::Options lopt;
  lopt.gamma = cfg.gamma;
  lopt.condition_weights = cfg.condition_weights;
  lopt.equation_weights = cfg.equation_weights;
  LossEvaluator loss(prob, fieldset, colloc, lopt, hgrid ? &*hgrid : nullptr);

  std::vector<double> x;
  fieldset.pack(x);
  LossBreakdown last_bd;
  std::vector<double> last_good = x;
  const Objective obj = [&](std::span<const double> p, std::vector<double>* g) {
    last_bd = loss.evaluate(p, g);
    last_good.assign(p.begin(), p.end());
    return last_bd.total;
  };

  // History columns.
  std::vector<std::string> cols = {"iteration"};
  for (int jj = 0; jj < prob.n_conditions(); ++jj) cols.push_back("loss_c_" + std::to_string(jj + 1));
  for (int k = 0; k < prob.n_equations; ++k) cols.push_back("loss_f_" + std::to_string(k + 1));
  for (int k = 0; k < prob.n_equations; ++k) cols.push_back("loss_df_" + std::to_string(k + 1));
  cols.push_back("total");
  cols.push_back("lambda");
  const bool has_a = fieldset.scalar_index("a") >= 0;
  if (has_a) cols.push_back("a");
  if (cfg.log_wall_clock) cols.push_back("wall_s");
  CsvWriter history(out_dir / "loss_history.csv", hash, cols);

  Schedule sched;
  sched.adam_iters = cfg.adam_iters;
  sched.lbfgs_iters = cfg.lbfgs_iters;
  sched.adam = AdamOptions{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.lr_decay,
                           cfg.decay_steps};
  sched.lbfgs.memory = cfg.lbfgs_memory;
  sched.lbfgs.c1 = cfg.wolfe_c1;
  sched.lbfgs.c2 = cfg.wolfe_c2;
  sched.log_every = cfg.log_every;
  sched.checkpoint_every = cfg.checkpoint_every;

  TrainCallbacks cb;
  cb.on_log = [&](int iter, double f, std::span<const double>) {
    std::vector<double> row;
    row.push_back(static_cast<double>(iter));
    for (double v : last_bd.loss_c) row.push_back(v);
    for (double v : last_bd.loss_f) row.push_back(v);
    for (double v : last_bd.loss_df) row.push_back(v);
    row.push_back(f);
    row.push_back(fieldset.scalar_value("lambda"));
    if (has_a) row.push_back(fieldset.scalar_value("a"));
    if (cfg.log_wall_clock) {
      row.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    history.row(row);
    history.flush();
  };
  cb.on_checkpoint = [&](const std::string& tag, std::span<const double> p) {
    fieldset.unpack(p);
    write_checkpoint(out_dir / ("checkpoint_" + tag + ".json"), fieldset, cfg, tag);
  };

  TrainDiagnostics diag;
  try {
    diag = train_schedule(obj, x, sched, cb);
  } catch (const NumericalError&) {
    fieldset.unpack(last_good);
    write_checkpoint(out_dir / "checkpoint_abort.json", fieldset, cfg, "abort");
    throw;
  }
  fieldset.unpack(x);
  write_checkpoint(out_dir / "checkpoint_final.json", fieldset, cfg, "final");

  SolveResult res;
  res.run_dir = out_dir;
  res.lambda_hat = fieldset.scalar_value("lambda");
  if (has_a) res.a_hat = fieldset.scalar_value("a");
  res.final_loss = last_bd;
  res.final_total = diag.final_value;
  res.diag = diag;
  res.report = export_snapshot(prob, fieldset, cfg, GridSpec{cfg.export_n, 0}, out_dir);

  ordered_json meta;
  meta["format"] = "ssb-run-metadata";
  meta["version"] = 1;
  meta["artifact_version"] = SSB_VERSION;
  meta["compiler"] = __VERSION__;
  meta["problem"] = cfg.problem;
  meta["config_hash"] = hash;
  meta["config"] = canonical_config(cfg);
  meta["inferred"]["lambda"] = res.lambda_hat;
  if (has_a) meta["inferred"]["a"] = *res.a_hat;
  meta["final_loss"] = {{"total", last_bd.total},
                        {"loss_c", last_bd.loss_c},
                        {"loss_f", last_bd.loss_f},
                        {"loss_df", last_bd.loss_df},
                        {"gamma", last_bd.gamma}};
  meta["iterations"] = {{"adam", cfg.adam_iters},
                        {"lbfgs", cfg.lbfgs_iters},
                        {"run", diag.iterations_run},
                        {"lbfgs_accepted", diag.lbfgs_steps_accepted},
                        {"lbfgs_monotone_violations", diag.lbfgs_monotone_violations},
                        {"lbfgs_fallback_steps", diag.lbfgs_fallback_steps},
                        {"lbfgs_stopped_early", diag.lbfgs_stopped_early}};
  {
    ordered_json names = ordered_json::array();
    for (const auto& k : prob.constraints) names.push_back(k.name);
    meta["constraints"] = names;
  }
  meta["timing"]["wall_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream mf(out_dir / "run_metadata.json");
  mf << meta.dump(1) << "\n";
  return res;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalResult {
  fs::path out_dir;
  ResidualReport report;
  RunConfig config;
  FieldSet fieldset;
};

/// Re-evaluates a checkpoint on a grid. expected_hash, when nonempty,
/// must match the checkpoint's config hash (guards against mixing runs).
inline EvalResult cmd_eval(const fs::path& checkpoint_path, const GridSpec& grid,
                           const fs::path& out_dir, const std::string& expected_hash = "") {
  Checkpoint ck = read_checkpoint(checkpoint_path);
  if (!expected_hash.empty() && expected_hash != ck.hash)
    throw ConfigError("config hash mismatch: checkpoint " + ck.hash + " vs expected " +
                      expected_hash);
  fs::create_directories(out_dir);
  const ProblemSpec prob = make_problem_spec(ck.config);
  if (prob.field_names.size() != ck.fields.fields.size())
    throw ConfigError("checkpoint incompatible with its problem (field count)");
  GridSpec g = grid;
  if (g.nx <= 0) g.nx = ck.config.export_n;
  EvalResult res;
  res.out_dir = out_dir;
  res.config = ck.config;
  res.report = export_snapshot(prob, ck.fields, ck.config, g, out_dir);
  res.fieldset = std::move(ck.fields);
  return res;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  double value = 0.0;
  double inferred = 0.0;  // the other scalar
  double final_total = 0.0;
  bool ok = false;
  std::string error;
};

struct SweepResult {
  fs::path out_dir;
  std::vector<SweepRow> rows;
};

/// Runs one solve per parameter value with that scalar fixed; the
/// complementary scalar stays trainable and is reported per row.
/// warm_start seeds each run's networks from the previous value's final
/// checkpoint.
inline SweepResult cmd_sweep(const RunConfig& base, const std::string& param,
                             const std::vector<double>& values, bool warm_start,
                             const fs::path& out_dir) {
  if (param != "a" && param != "lambda") throw ConfigError("sweep: parameter must be a or lambda");
  if (values.empty()) throw ConfigError("sweep: no values given");
  if (!base.scalars.count(param))
    throw ConfigError("sweep: the base config declares no scalar '" + param + "'");
  fs::create_directories(out_dir);
  SweepResult sw;
  sw.out_dir = out_dir;
  const std::string other = param == "a" ? "lambda" : "a";
  std::optional<FieldSet> prev;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunConfig cfg = base;
    ScalarConfig fixed;
    fixed.trainable = false;
    fixed.fixed = values[i];
    cfg.scalars[param] = fixed;
    if (!cfg.scalars.count(other) || !cfg.scalars[other].trainable)
      throw ConfigError("sweep: scalar '" + other + "' must be trainable in the base config");
    std::ostringstream name;
    name << "sweep_" << param << "_" << i;
    SweepRow row;
    row.value = values[i];
    try {
      const SolveResult r =
          cmd_solve(cfg, out_dir / name.str(), warm_start && prev ? &*prev : nullptr);
      row.ok = true;
      row.inferred = other == "lambda" ? r.lambda_hat : r.a_hat.value_or(0.0);
      row.final_total = r.final_total;
      if (warm_start) prev = read_checkpoint(out_dir / name.str() / "checkpoint_final.json").fields;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    sw.rows.push_back(row);
  }
  CsvWriter csv(out_dir / "sweep_summary.csv", config_hash(base),
                {param, other, "final_total", "status"});
  for (const auto& r : sw.rows) {
    csv.raw_row(fmt_double(r.value) + "," + (r.ok ? fmt_double(r.inferred) : "") + "," +
                (r.ok ? fmt_double(r.final_total) : "") + "," + (r.ok ? "ok" : "failed"));
  }
  return sw;
}

// ---------------------------------------------------------------------------
// check: fast oracle/gradient self-tests
// ---------------------------------------------------------------------------

inline int cmd_check(std::ostream& os) {
  int failures = 0;
  const auto report = [&](const char* name, bool ok, double value, double bound) {
    os << (ok ? "[ok]   " : "[FAIL] ") << name << "  (" << value << " vs " << bound << ")\n";
    if (!ok) ++failures;
  };

  {  // jet derivatives vs finite differences
    const ModelParams net = init_model({2, 16, 16, 1}, 123);
    double err = 0.0;
    Rng rng(5);
    for (int t = 0; t < 5; ++t) {
      const Point y{{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)}};
      err = std::max(err, jet_fd_error(net, parity_none(), y));
    }
    report("jet gradients/Hessians vs central differences", err <= 1e-6, err, 1e-6);
  }
  {  // Burgers implicit oracle
    const double u2 = burgers_implicit(-2.0, 0.5);
    const double u10 = burgers_implicit(-10.0, 0.5);
    const bool ok = std::abs(u2 - 1.0) <= 1e-12 && std::abs(u10 - 2.0) <= 1e-12;
    report("burgers implicit branch (U(-2)=1, U(-10)=2)", ok,
           std::max(std::abs(u2 - 1.0), std::abs(u10 - 2.0)), 1e-12);
  }
  {  // CLM substitution with the analytic Hilbert pair
    double worst = 0.0;
    for (double y : {0.5, 1.0, 3.0, -2.0}) {
      const Jet2 om = clm_omega_jet(y);
      const Jet2 u = clm_u_jet(y);
      ResidualBundle b;
      degregorio_residuals(om, u, u.g[0], u.h[0], 0.0, 0.0, y, b);
      worst = std::max(worst, std::abs(b.f[0]));
    }
    report("CLM a=0 exact profile solves the residual", worst <= 1e-10, worst, 1e-10);
  }
  {  // Hilbert transform pairs
    const QuadratureGrid g2 = build_grid(30.0, 480, 2.0);
    const double h1 = hilbert_at([](double t) { return 1.0 / (1.0 + t * t); }, g2, 1.0);
    const QuadratureGrid g1 = build_grid(30.0, 480, 1.0);
    const double h2 = hilbert_at([](double t) { return t / (1.0 + t * t); }, g1, 0.0);
    const double err = std::max(std::abs(h1 - 0.5), std::abs(h2 + 1.0));
    report("Hilbert transform pairs", err <= 1e-6, err, 1e-6);
  }
  {  // Adam first-step closed form
    AdamState st(1);
    AdamOptions opt;
    std::vector<double> p{0.0};
    const std::vector<double> g{0.37};
    adam_step(st, p, g, opt);
    const double expect = -opt.lr * g[0] / (std::abs(g[0]) + opt.eps);
    report("Adam first-step closed form", std::abs(p[0] - expect) <= 1e-12,
           std::abs(p[0] - expect), 1e-12);
  }
  os << (failures == 0 ? "all checks passed\n" : "CHECKS FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace ssb
