#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssb/fields.hpp"
#include "ssb/hilbert.hpp"
#include "ssb/problems.hpp"
#include "ssb/version.hpp"

namespace ssb {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct ScalarConfig {
  bool trainable = false;
  double lo = 0.0, hi = 1.0;
  std::optional<double> init;  // default: window midpoint
  double fixed = 0.0;
};

struct GaugeConfig {
  std::string kind = "slope";  // "slope" (d field/dy1 at a point) or "value"
  std::string field;           // defaults per problem
  Point point{{0.0, 0.0}};
  double target = 1.0;
};

struct RunConfig {
  std::string problem = "burgers";
  std::uint64_t seed = 0;
  bool seed_set = false;

  double domain_l = 5.0;  // box: [-L, L] (1-D) or [-L, L] x [0, L] (2-D)
  std::vector<int> hidden{20, 20, 20};

  std::map<std::string, ScalarConfig> scalars;

  int n_near = 900;
  int n_far = 300;
  double r_split = 0.0;  // 0 = L/4
  int boundary_n = 400;

  double gamma = 0.1;
  std::vector<double> condition_weights;  // empty = all 1
  std::vector<double> equation_weights;

  int adam_iters = 1000;
  int lbfgs_iters = 1000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_decay = 1.0;
  int decay_steps = 0;
  int lbfgs_memory = 20;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int log_every = 10;
  int checkpoint_every = 0;

  double hilbert_l = 0.0;  // 0 = domain_l
  int hilbert_n = 320;
  double tail_exponent = 1.0;
  double collocation_inset = 0.0;  // 0 = problem default

  bool farfield = true;  // boussinesq outer-boundary decay conditions
  std::optional<GaugeConfig> gauge;

  int export_n = 401;
  bool log_wall_clock = false;
  int threads = 0;
};

namespace detail {

inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Parses and validates a run configuration. Unknown keys are rejected.
inline RunConfig parse_config(const json& j) {
  RunConfig c;
  detail::require_keys(j,
                       {"problem", "seed", "domain", "network", "scalars", "collocation", "loss",
                        "optimizer", "hilbert", "constraints", "export", "output", "threads"},
                       "top level");
  if (!j.contains("problem")) throw ConfigError("config: missing 'problem'");
  c.problem = j.at("problem").get<std::string>();
  problem_from_name(c.problem);  // validates
  if (!j.contains("seed")) throw ConfigError("config: missing 'seed' (runs must be reproducible)");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.seed_set = true;

  // Per-problem defaults before section parsing.
  if (c.problem == "burgers") {
    c.domain_l = 5.0;
    c.hidden = {20, 20, 20};
    c.scalars["lambda"] = ScalarConfig{true, 1.0 / 3.0, 1.0, std::nullopt, 0.0};
  } else if (c.problem == "degregorio") {
    c.domain_l = 10.0;
    c.hidden = {20, 20, 20};
    c.scalars["lambda"] = ScalarConfig{true, -0.5, 0.5, std::nullopt, 0.0};
    ScalarConfig a;
    a.trainable = false;
    a.fixed = 0.0;
    c.scalars["a"] = a;
    c.collocation_inset = 0.9;
  } else {
    c.domain_l = 6.0;
    c.hidden = {24, 24, 24};
    c.scalars["lambda"] = ScalarConfig{true, 1.0, 3.0, std::nullopt, 0.0};
    c.n_near = 2200;
    c.n_far = 1100;
  }

  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    detail::require_keys(d, {"l"}, "domain");
    c.domain_l = detail::get_or(d, "l", c.domain_l);
    if (!(c.domain_l > 0.0)) throw ConfigError("config: domain.l must be positive");
  }
  if (j.contains("network")) {
    const auto& n = j.at("network");
    detail::require_keys(n, {"hidden"}, "network");
    c.hidden = detail::get_or(n, "hidden", c.hidden);
    if (c.hidden.empty()) throw ConfigError("config: network.hidden must not be empty");
    for (int w : c.hidden)
      if (w < 1) throw ConfigError("config: network.hidden entries must be positive");
  }
  if (j.contains("scalars")) {
    for (auto it = j.at("scalars").begin(); it != j.at("scalars").end(); ++it) {
      const std::string name = it.key();
      if (name != "lambda" && name != "a")
        throw ConfigError("config: unknown scalar '" + name + "'");
      if (name == "a" && c.problem != "degregorio")
        throw ConfigError("config: scalar 'a' only exists for the degregorio problem");
      const json& s = *it;
      detail::require_keys(s, {"window", "fixed", "init"}, "scalars." + name);
      ScalarConfig sc;
      if (s.contains("window")) {
        const auto w = s.at("window").get<std::vector<double>>();
        if (w.size() != 2 || !(w[0] < w[1]))
          throw ConfigError("config: scalars." + name + ".window must be [lo, hi] with lo < hi");
        sc.trainable = true;
        sc.lo = w[0];
        sc.hi = w[1];
        if (s.contains("init")) sc.init = s.at("init").get<double>();
      } else if (s.contains("fixed")) {
        sc.trainable = false;
        sc.fixed = s.at("fixed").get<double>();
      } else {
        throw ConfigError("config: scalars." + name + " needs 'window' or 'fixed'");
      }
      c.scalars[name] = sc;
    }
  }
  if (j.contains("collocation")) {
    const auto& cc = j.at("collocation");
    detail::require_keys(cc, {"n_near", "n_far", "r_split", "boundary_n", "inset"}, "collocation");
    c.n_near = detail::get_or(cc, "n_near", c.n_near);
    c.n_far = detail::get_or(cc, "n_far", c.n_far);
    c.r_split = detail::get_or(cc, "r_split", c.r_split);
    c.boundary_n = detail::get_or(cc, "boundary_n", c.boundary_n);
    c.collocation_inset = detail::get_or(cc, "inset", c.collocation_inset);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    detail::require_keys(l, {"gamma", "condition_weights", "equation_weights"}, "loss");
    c.gamma = detail::get_or(l, "gamma", c.gamma);
    c.condition_weights = detail::get_or(l, "condition_weights", c.condition_weights);
    c.equation_weights = detail::get_or(l, "equation_weights", c.equation_weights);
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    detail::require_keys(o,
                         {"adam_iters", "lbfgs_iters", "lr", "beta1", "beta2", "eps", "lr_decay",
                          "decay_steps", "lbfgs_memory", "wolfe_c1", "wolfe_c2", "log_every",
                          "checkpoint_every"},
                         "optimizer");
    c.adam_iters = detail::get_or(o, "adam_iters", c.adam_iters);
    c.lbfgs_iters = detail::get_or(o, "lbfgs_iters", c.lbfgs_iters);
    c.lr = detail::get_or(o, "lr", c.lr);
    c.beta1 = detail::get_or(o, "beta1", c.beta1);
    c.beta2 = detail::get_or(o, "beta2", c.beta2);
    c.adam_eps = detail::get_or(o, "eps", c.adam_eps);
    c.lr_decay = detail::get_or(o, "lr_decay", c.lr_decay);
    c.decay_steps = detail::get_or(o, "decay_steps", c.decay_steps);
    c.lbfgs_memory = detail::get_or(o, "lbfgs_memory", c.lbfgs_memory);
    c.wolfe_c1 = detail::get_or(o, "wolfe_c1", c.wolfe_c1);
    c.wolfe_c2 = detail::get_or(o, "wolfe_c2", c.wolfe_c2);
    c.log_every = detail::get_or(o, "log_every", c.log_every);
    c.checkpoint_every = detail::get_or(o, "checkpoint_every", c.checkpoint_every);
    if (c.adam_iters < 0 || c.lbfgs_iters < 0)
      throw ConfigError("config: iteration counts must be nonnegative");
  }
  if (j.contains("hilbert")) {
    const auto& h = j.at("hilbert");
    detail::require_keys(h, {"l", "n", "tail_exponent"}, "hilbert");
    c.hilbert_l = detail::get_or(h, "l", c.hilbert_l);
    c.hilbert_n = detail::get_or(h, "n", c.hilbert_n);
    c.tail_exponent = detail::get_or(h, "tail_exponent", c.tail_exponent);
  }
  if (j.contains("constraints")) {
    const auto& k = j.at("constraints");
    detail::require_keys(k, {"farfield", "gauge"}, "constraints");
    c.farfield = detail::get_or(k, "farfield", c.farfield);
    if (k.contains("gauge")) {
      const auto& g = k.at("gauge");
      detail::require_keys(g, {"kind", "field", "point", "target"}, "constraints.gauge");
      GaugeConfig gc;
      gc.kind = detail::get_or<std::string>(g, "kind", "slope");
      if (gc.kind != "slope" && gc.kind != "value")
        throw ConfigError("config: gauge.kind must be 'slope' or 'value'");
      gc.field = detail::get_or<std::string>(g, "field", "");
      const auto pt = detail::get_or<std::vector<double>>(g, "point", {0.0, 0.0});
      gc.point = {pt[0], pt.size() > 1 ? pt[1] : 0.0};
      gc.target = detail::get_or(g, "target", 1.0);
      c.gauge = gc;
    }
  }
  if (j.contains("export")) {
    const auto& e = j.at("export");
    detail::require_keys(e, {"n"}, "export");
    c.export_n = detail::get_or(e, "n", c.export_n);
    if (c.export_n < 2) throw ConfigError("config: export.n must be at least 2");
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    detail::require_keys(o, {"log_wall_clock"}, "output");
    c.log_wall_clock = detail::get_or(o, "log_wall_clock", c.log_wall_clock);
  }
  c.threads = detail::get_or(j, "threads", 0);

  if (c.r_split == 0.0) c.r_split = c.domain_l / 4.0;
  if (c.hilbert_l == 0.0) c.hilbert_l = c.domain_l;
  if (c.collocation_inset == 0.0) c.collocation_inset = 1.0;
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

/// Canonical (effective) form of the configuration: every field, fixed
/// order. Hashing this string identifies a run setup.
inline ordered_json canonical_config(const RunConfig& c) {
  ordered_json j;
  j["problem"] = c.problem;
  j["seed"] = c.seed;
  j["domain"]["l"] = c.domain_l;
  j["network"]["hidden"] = c.hidden;
  for (const auto& [name, sc] : c.scalars) {
    ordered_json s;
    if (sc.trainable) {
      s["window"] = {sc.lo, sc.hi};
      if (sc.init) s["init"] = *sc.init;
    } else {
      s["fixed"] = sc.fixed;
    }
    j["scalars"][name] = s;
  }
  j["collocation"] = {{"n_near", c.n_near},
                      {"n_far", c.n_far},
                      {"r_split", c.r_split},
                      {"boundary_n", c.boundary_n},
                      {"inset", c.collocation_inset}};
  j["loss"] = {{"gamma", c.gamma}};
  if (!c.condition_weights.empty()) j["loss"]["condition_weights"] = c.condition_weights;
  if (!c.equation_weights.empty()) j["loss"]["equation_weights"] = c.equation_weights;
  j["optimizer"] = {{"adam_iters", c.adam_iters}, {"lbfgs_iters", c.lbfgs_iters},
                    {"lr", c.lr},           {"beta1", c.beta1},
                    {"beta2", c.beta2},     {"eps", c.adam_eps},
                    {"lr_decay", c.lr_decay}, {"decay_steps", c.decay_steps},
                    {"lbfgs_memory", c.lbfgs_memory}, {"wolfe_c1", c.wolfe_c1},
                    {"wolfe_c2", c.wolfe_c2}, {"log_every", c.log_every},
                    {"checkpoint_every", c.checkpoint_every}};
  if (c.problem == "degregorio") {
    j["hilbert"] = {{"l", c.hilbert_l}, {"n", c.hilbert_n}, {"tail_exponent", c.tail_exponent}};
  }
  j["constraints"]["farfield"] = c.farfield;
  if (c.gauge) {
    j["constraints"]["gauge"] = {{"kind", c.gauge->kind},
                                 {"field", c.gauge->field},
                                 {"point", {c.gauge->point[0], c.gauge->point[1]}},
                                 {"target", c.gauge->target}};
  }
  j["export"]["n"] = c.export_n;
  j["output"]["log_wall_clock"] = c.log_wall_clock;
  return j;
}

/// FNV-1a 64 over the canonical config dump.
inline std::string config_hash(const RunConfig& c) {
  const std::string s = canonical_config(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Problem assembly from a configuration
// ---------------------------------------------------------------------------

inline ProblemSpec make_problem_spec(const RunConfig& c) {
  ProblemSpec p;
  p.kind = problem_from_name(c.problem);
  p.collocation_inset = c.collocation_inset;
  switch (p.kind) {
    case ProblemKind::burgers: {
      p.dim = 1;
      p.field_names = {"U"};
      p.field_parity = {{Parity::odd, Parity::none}};
      p.n_equations = 1;
      p.domain = Box{1, {{-c.domain_l, 0.0}}, {{c.domain_l, 0.0}}};
      ConstraintSpec g;
      g.name = "normalization";
      g.kind = ConstraintKind::field_value;
      g.locus = Locus::single_point;
      g.fields = {0};
      g.point = {-2.0, 0.0};
      g.target = 1.0;
      if (c.gauge) {
        g.kind = c.gauge->kind == "slope" ? ConstraintKind::slope_x : ConstraintKind::field_value;
        g.point = c.gauge->point;
        g.target = c.gauge->target;
      }
      p.constraints = {g};
      break;
    }
    case ProblemKind::degregorio: {
      p.dim = 1;
      p.field_names = {"Omega", "U"};
      p.field_parity = {{Parity::odd, Parity::none}, {Parity::odd, Parity::none}};
      p.n_equations = 2;
      p.domain = Box{1, {{-c.domain_l, 0.0}}, {{c.domain_l, 0.0}}};
      p.uses_hilbert = true;
      ConstraintSpec g;
      g.name = "normalization";
      g.kind = ConstraintKind::slope_x;
      g.locus = Locus::single_point;
      g.fields = {kDgOmega};
      g.point = {0.0, 0.0};
      g.target = 2.0;
      if (c.gauge) {
        g.kind = c.gauge->kind == "slope" ? ConstraintKind::slope_x : ConstraintKind::field_value;
        g.point = c.gauge->point;
        g.target = c.gauge->target;
      }
      p.constraints = {g};
      break;
    }
    case ProblemKind::boussinesq: {
      p.dim = 2;
      p.field_names = {"U1", "U2", "Omega", "Phi", "Psi"};
      p.field_parity = {{Parity::odd, Parity::none},
                        {Parity::even, Parity::none},
                        {Parity::odd, Parity::none},
                        {Parity::odd, Parity::none},
                        {Parity::even, Parity::none}};
      p.n_equations = 6;
      p.domain = Box{2, {{-c.domain_l, 0.0}}, {{c.domain_l, c.domain_l}}};
      ConstraintSpec wall;
      wall.name = "non_penetration";
      wall.kind = ConstraintKind::field_value;
      wall.locus = Locus::bottom_edge;
      wall.fields = {kU2};
      wall.target = 0.0;
      ConstraintSpec axis;
      axis.name = "psi_axis";
      axis.kind = ConstraintKind::field_value;
      axis.locus = Locus::left_axis;
      axis.fields = {kPsi};
      axis.target = 0.0;
      ConstraintSpec gauge;
      gauge.name = "normalization";
      gauge.kind = ConstraintKind::slope_x;
      gauge.locus = Locus::single_point;
      gauge.fields = {kOmega};
      gauge.point = {0.0, 0.0};
      gauge.target = 1.0;
      if (c.gauge) {
        gauge.kind =
            c.gauge->kind == "slope" ? ConstraintKind::slope_x : ConstraintKind::field_value;
        gauge.point = c.gauge->point;
        gauge.target = c.gauge->target;
        if (!c.gauge->field.empty()) {
          if (c.gauge->field == "U1") gauge.fields = {kU1};
          else if (c.gauge->field == "U2") gauge.fields = {kU2};
          else if (c.gauge->field == "Omega") gauge.fields = {kOmega};
          else if (c.gauge->field == "Phi") gauge.fields = {kPhi};
          else if (c.gauge->field == "Psi") gauge.fields = {kPsi};
          else throw ConfigError("config: unknown gauge field " + c.gauge->field);
        }
      }
      p.constraints = {wall, axis, gauge};
      if (c.farfield) {
        ConstraintSpec du;
        du.name = "farfield_grad_u";
        du.kind = ConstraintKind::grad_decay;
        du.locus = Locus::outer_boundary;
        du.fields = {kU1, kU2};
        ConstraintSpec dtheta;
        dtheta.name = "farfield_phi_psi";
        dtheta.kind = ConstraintKind::value_decay;
        dtheta.locus = Locus::outer_boundary;
        dtheta.fields = {kPhi, kPsi};
        p.constraints.push_back(du);
        p.constraints.push_back(dtheta);
      }
      break;
    }
  }
  return p;
}

/// Networks and scalars for a run, deterministically seeded.
inline FieldSet make_fieldset(const RunConfig& c, const ProblemSpec& prob) {
  FieldSet fs;
  for (std::size_t f = 0; f < prob.field_names.size(); ++f) {
    FieldModel fm;
    fm.name = prob.field_names[f];
    fm.parity = prob.field_parity[f];
    std::vector<int> dims;
    dims.push_back(prob.dim);
    for (int w : c.hidden) dims.push_back(w);
    dims.push_back(1);
    fm.net = init_model(dims, c.seed * 1000003ull + 7919ull * (f + 1));
    fs.fields.push_back(std::move(fm));
  }
  const auto add_scalar = [&](const std::string& name) {
    auto it = c.scalars.find(name);
    if (it == c.scalars.end()) return;
    ScalarSpec s;
    s.name = name;
    s.trainable = it->second.trainable;
    if (s.trainable) {
      s.window = it->second.init
                     ? WindowedScalar::at_value(*it->second.init, it->second.lo, it->second.hi)
                     : WindowedScalar::midpoint(it->second.lo, it->second.hi);
    } else {
      s.fixed_value = it->second.fixed;
    }
    fs.scalars.push_back(std::move(s));
  };
  add_scalar("lambda");
  add_scalar("a");
  if (fs.scalar_index("lambda") < 0) throw ConfigError("config: scalar 'lambda' is required");
  if (prob.kind == ProblemKind::degregorio && fs.scalar_index("a") < 0)
    throw ConfigError("config: degregorio needs scalar 'a'");
  return fs;
}

inline std::vector<int> boundary_counts(const RunConfig& c, const ProblemSpec& prob) {
  std::vector<int> counts;
  for (const auto& k : prob.constraints) {
    counts.push_back(k.locus == Locus::single_point ? 1 : c.boundary_n);
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned self-describing containers, bit-exact round trip.
// ---------------------------------------------------------------------------

inline ordered_json checkpoint_to_json(const FieldSet& fs, const RunConfig& cfg,
                                       const std::string& tag) {
  ordered_json j;
  j["format"] = "ssb-checkpoint";
  j["version"] = 1;
  j["artifact_version"] = SSB_VERSION;
  j["tag"] = tag;
  j["problem"] = cfg.problem;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  j["config"] = canonical_config(cfg);
  ordered_json scal = ordered_json::array();
  for (const auto& s : fs.scalars) {
    ordered_json e;
    e["name"] = s.name;
    if (s.trainable) {
      e["kind"] = "window";
      e["raw"] = s.window.raw;
      e["lo"] = s.window.lo;
      e["hi"] = s.window.hi;
      e["value"] = s.value();
    } else {
      e["kind"] = "fixed";
      e["value"] = s.fixed_value;
    }
    scal.push_back(e);
  }
  j["scalars"] = scal;
  ordered_json fields = ordered_json::array();
  for (const auto& f : fs.fields) {
    ordered_json e;
    e["name"] = f.name;
    e["layer_dims"] = f.net.layer_dims;
    e["parity"] = {parity_name(f.parity[0]), parity_name(f.parity[1])};
    e["weights"] = f.net.weights;  // row-major per layer
    e["biases"] = f.net.biases;
    fields.push_back(e);
  }
  j["fields"] = fields;
  return j;
}

inline void write_checkpoint(const std::filesystem::path& path, const FieldSet& fs,
                             const RunConfig& cfg, const std::string& tag) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  out << checkpoint_to_json(fs, cfg, tag).dump(1) << "\n";
}

struct Checkpoint {
  RunConfig config;
  FieldSet fields;
  std::string tag;
  std::string hash;
};

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("checkpoint parse error: " + std::string(e.what()));
  }
  if (detail::get_or<std::string>(j, "format", "") != "ssb-checkpoint")
    throw ConfigError("not a checkpoint file: " + path.string());
  if (detail::get_or(j, "version", 0) != 1)
    throw ConfigError("unsupported checkpoint version in " + path.string());
  Checkpoint ck;
  ck.config = parse_config(j.at("config"));
  ck.tag = detail::get_or<std::string>(j, "tag", "");
  ck.hash = detail::get_or<std::string>(j, "config_hash", "");
  if (ck.hash != config_hash(ck.config))
    throw ConfigError("checkpoint config hash mismatch (file corrupted or mixed)");
  for (const auto& e : j.at("fields")) {
    FieldModel fm;
    fm.name = e.at("name").get<std::string>();
    fm.net.layer_dims = e.at("layer_dims").get<std::vector<int>>();
    ModelParams::validate_dims(fm.net.layer_dims);
    fm.net.weights = e.at("weights").get<std::vector<double>>();
    fm.net.biases = e.at("biases").get<std::vector<double>>();
    if (fm.net.weights.size() != ModelParams::weight_count_for(fm.net.layer_dims) ||
        fm.net.biases.size() != ModelParams::bias_count_for(fm.net.layer_dims))
      throw ConfigError("checkpoint: parameter counts do not match layer_dims");
    const auto par = e.at("parity").get<std::vector<std::string>>();
    fm.parity = {parity_from_name(par[0]), parity_from_name(par.size() > 1 ? par[1] : "none")};
    ck.fields.fields.push_back(std::move(fm));
  }
  for (const auto& e : j.at("scalars")) {
    ScalarSpec s;
    s.name = e.at("name").get<std::string>();
    if (e.at("kind").get<std::string>() == "window") {
      s.trainable = true;
      s.window.raw = e.at("raw").get<double>();
      s.window.lo = e.at("lo").get<double>();
      s.window.hi = e.at("hi").get<double>();
    } else {
      s.trainable = false;
      s.fixed_value = e.at("value").get<double>();
    }
    ck.fields.scalars.push_back(std::move(s));
  }
  return ck;
}

// ---------------------------------------------------------------------------
// CSV helpers. Every file starts with a comment line carrying the config
// hash, then a header row. Doubles are written with round-trip precision.
// ---------------------------------------------------------------------------

inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& hash,
            const std::vector<std::string>& columns)
      : out_(path) {
    if (!out_) throw ConfigError("cannot write csv: " + path.string());
    out_ << "# config_hash=" << hash << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
    }
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out_ << fmt_double(values[i]) << (i + 1 < values.size() ? "," : "");
    }
    out_ << "\n";
  }

  void raw_row(const std::string& line) { out_ << line << "\n"; }

  void flush() { out_.flush(); }

  std::ofstream& stream() { return out_; }

 private:
  std::ofstream out_;
};

}  // namespace ssb
