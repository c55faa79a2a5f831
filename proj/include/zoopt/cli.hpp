#pragma once

// Experiment configs (JSON), result tables (CSV) and the command drivers
// behind the `zoopt` executable.
//
// Exit codes: 0 pass, 1 check failure, 2 usage or config error, 3 budget error.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zoopt/error.hpp"
#include "zoopt/function_space.hpp"
#include "zoopt/optimizer.hpp"
#include "zoopt/oracle.hpp"
#include "zoopt/verification.hpp"

namespace zoopt::cli {

using nlohmann::json;

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kConfigError = 2, kBudgetError = 3 };

// ---------------------------------------------------------------------------
// Config schema.

struct FamilySpec {
  std::string name = "quadratic";  // quadratic | cubic-perturbed | hard-instance
  double rho = 1.0;
  double M = 1.0;
  double R = 1.0;
  std::optional<std::size_t> d;
  std::optional<std::vector<int>> s;
  std::optional<std::vector<std::vector<double>>> A;
  std::optional<std::vector<double>> b;

  bool operator==(const FamilySpec&) const = default;
};

struct NoiseSpec {
  std::string kind = "gaussian";  // gaussian | uniform | zero
  std::optional<double> half_width;

  bool operator==(const NoiseSpec&) const = default;
};

/// Check-specific knobs; every field is optional and falls back to a per-check default.
struct CheckParams {
  std::optional<std::vector<double>> x;
  std::optional<std::vector<std::vector<double>>> Z;
  std::optional<std::vector<double>> z_scales;
  std::optional<double> r;
  std::optional<std::uint64_t> n;
  std::optional<std::vector<std::uint64_t>> n_list;
  std::optional<std::vector<double>> K_grid;
  std::optional<std::uint64_t> n_mc;
  std::optional<double> bound_scale;
  std::optional<std::uint64_t> n_instances;
  std::optional<std::vector<double>> R0_range;
  std::optional<std::vector<double>> s_grid;
  std::optional<std::size_t> grid_points;
  std::optional<std::vector<double>> slope_window;

  bool operator==(const CheckParams&) const = default;
};

struct ExperimentConfig {
  std::string command;  // optimize | verify | regret-sweep | audit-lower-bound
  std::optional<std::string> check;
  std::optional<FamilySpec> family;
  NoiseSpec noise;
  std::optional<std::uint64_t> T;
  std::optional<std::vector<std::uint64_t>> T_list;
  std::optional<std::vector<std::size_t>> d_list;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::optional<std::string> output;
  bool synthetic_fit = false;
  CheckParams params;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError(where + ": unknown field '" + item.key() + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void write(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace detail

inline json to_json(const FamilySpec& f) {
  json j{{"name", f.name}, {"rho", f.rho}, {"M", f.M}, {"R", f.R}};
  detail::write(j, "d", f.d);
  detail::write(j, "s", f.s);
  detail::write(j, "A", f.A);
  detail::write(j, "b", f.b);
  return j;
}

inline json to_json(const NoiseSpec& n) {
  json j{{"kind", n.kind}};
  detail::write(j, "half_width", n.half_width);
  return j;
}

inline json to_json(const CheckParams& p) {
  json j = json::object();
  detail::write(j, "x", p.x);
  detail::write(j, "Z", p.Z);
  detail::write(j, "z_scales", p.z_scales);
  detail::write(j, "r", p.r);
  detail::write(j, "n", p.n);
  detail::write(j, "n_list", p.n_list);
  detail::write(j, "K_grid", p.K_grid);
  detail::write(j, "n_mc", p.n_mc);
  detail::write(j, "bound_scale", p.bound_scale);
  detail::write(j, "n_instances", p.n_instances);
  detail::write(j, "R0_range", p.R0_range);
  detail::write(j, "s_grid", p.s_grid);
  detail::write(j, "grid_points", p.grid_points);
  detail::write(j, "slope_window", p.slope_window);
  return j;
}

inline json to_json(const ExperimentConfig& c) {
  json j{{"command", c.command}, {"noise", to_json(c.noise)}, {"trials", c.trials},
         {"seed", c.seed},       {"synthetic_fit", c.synthetic_fit},
         {"params", to_json(c.params)}};
  detail::write(j, "check", c.check);
  if (c.family) j["family"] = to_json(*c.family);
  detail::write(j, "T", c.T);
  detail::write(j, "T_list", c.T_list);
  detail::write(j, "d_list", c.d_list);
  detail::write(j, "output", c.output);
  return j;
}

inline FamilySpec family_from_json(const json& j) {
  detail::reject_unknown(j, {"name", "rho", "M", "R", "d", "s", "A", "b"}, "family");
  FamilySpec f;
  detail::read(j, "name", f.name);
  detail::read(j, "rho", f.rho);
  detail::read(j, "M", f.M);
  detail::read(j, "R", f.R);
  detail::read(j, "d", f.d);
  detail::read(j, "s", f.s);
  detail::read(j, "A", f.A);
  detail::read(j, "b", f.b);
  return f;
}

inline NoiseSpec noise_from_json(const json& j) {
  detail::reject_unknown(j, {"kind", "half_width"}, "noise");
  NoiseSpec n;
  detail::read(j, "kind", n.kind);
  detail::read(j, "half_width", n.half_width);
  return n;
}

inline CheckParams params_from_json(const json& j) {
  detail::reject_unknown(j,
                         {"x", "Z", "z_scales", "r", "n", "n_list", "K_grid", "n_mc", "bound_scale",
                          "n_instances", "R0_range", "s_grid", "grid_points", "slope_window"},
                         "params");
  CheckParams p;
  detail::read(j, "x", p.x);
  detail::read(j, "Z", p.Z);
  detail::read(j, "z_scales", p.z_scales);
  detail::read(j, "r", p.r);
  detail::read(j, "n", p.n);
  detail::read(j, "n_list", p.n_list);
  detail::read(j, "K_grid", p.K_grid);
  detail::read(j, "n_mc", p.n_mc);
  detail::read(j, "bound_scale", p.bound_scale);
  detail::read(j, "n_instances", p.n_instances);
  detail::read(j, "R0_range", p.R0_range);
  detail::read(j, "s_grid", p.s_grid);
  detail::read(j, "grid_points", p.grid_points);
  detail::read(j, "slope_window", p.slope_window);
  return p;
}

/// Strict parse: unknown fields and type mismatches raise ConfigError.
inline ExperimentConfig config_from_json(const json& j) {
  try {
    detail::reject_unknown(j,
                           {"command", "check", "family", "noise", "T", "T_list", "d_list",
                            "trials", "seed", "output", "synthetic_fit", "params"},
                           "config");
    ExperimentConfig c;
    detail::read(j, "command", c.command);
    detail::read(j, "check", c.check);
    if (j.contains("family")) c.family = family_from_json(j.at("family"));
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    detail::read(j, "T", c.T);
    detail::read(j, "T_list", c.T_list);
    detail::read(j, "d_list", c.d_list);
    detail::read(j, "trials", c.trials);
    detail::read(j, "seed", c.seed);
    detail::read(j, "output", c.output);
    detail::read(j, "synthetic_fit", c.synthetic_fit);
    if (j.contains("params")) c.params = params_from_json(j.at("params"));
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// 64-bit FNV-1a of the canonical (key-sorted, compact) JSON form.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV.

/// Shortest form that still has 17 significant digits of precision.
inline std::string fmt17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

inline std::string reports_csv(const std::vector<BoundCheckReport>& reports) {
  std::string s = "claim,parameters,empirical,std_error,bound,k,fp_floor,margin,pass\n";
  for (const auto& r : reports) {
    s += csv_escape(r.claim) + ',' + csv_escape(r.parameters) + ',' + fmt17(r.empirical) + ',' +
         fmt17(r.std_error) + ',' + fmt17(r.bound) + ',' + fmt17(r.k) + ',' + fmt17(r.fp_floor) +
         ',' + fmt17(r.margin) + ',' + (r.pass ? "1" : "0") + '\n';
  }
  return s;
}

inline json reports_json(const std::vector<BoundCheckReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back({{"claim", r.claim},
                   {"parameters", r.parameters},
                   {"empirical", r.empirical},
                   {"std_error", r.std_error},
                   {"bound", r.bound},
                   {"k", r.k},
                   {"fp_floor", r.fp_floor},
                   {"margin", r.margin},
                   {"pass", r.pass}});
  }
  return arr;
}

/// Columns T,d,rho,M,seed,trial,regret,regret_bootstrap,queries_used,wall_ms.
inline std::string trials_csv(const std::vector<TrialRecord>& rows) {
  std::string s = "T,d,rho,M,seed,trial,regret,regret_bootstrap,queries_used,wall_ms\n";
  for (const auto& r : rows) {
    s += std::to_string(r.T) + ',' + std::to_string(r.d) + ',' + fmt17(r.rho) + ',' + fmt17(r.M) +
         ',' + std::to_string(r.seed) + ',' + std::to_string(r.trial) + ',' + fmt17(r.regret) +
         ',' + fmt17(r.regret_bootstrap) + ',' + std::to_string(r.queries_used) + ',' +
         fmt17(r.wall_ms) + '\n';
  }
  return s;
}

inline std::string cells_csv(const std::vector<SweepCell>& cells) {
  std::string s = "d,T,trials,mean_regret,stderr_regret,mean_regret_bootstrap,reference_rate\n";
  for (const auto& c : cells) {
    s += std::to_string(c.d) + ',' + std::to_string(c.T) + ',' + std::to_string(c.trials) + ',' +
         fmt17(c.mean_regret) + ',' + fmt17(c.stderr_regret) + ',' +
         fmt17(c.mean_regret_bootstrap) + ',' + fmt17(c.reference_rate) + '\n';
  }
  return s;
}

// ---------------------------------------------------------------------------
// Building objects from a config.

struct Options {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool timing = false;
  std::ostream* log = &std::cout;
};

inline NoiseModel make_noise(const NoiseSpec& n) {
  if (n.kind == "gaussian") return NoiseModel::std_gaussian();
  if (n.kind == "zero") return NoiseModel::zero();
  if (n.kind == "uniform") return NoiseModel::uniform_bounded(n.half_width.value_or(std::sqrt(3.0)));
  throw ConfigError("unknown noise kind '" + n.kind + "'");
}

inline FunctionClassParams class_params(const FamilySpec& f) {
  return FunctionClassParams{f.rho, f.M, f.R};
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline SymmetricMatrix to_symmetric(const std::vector<std::vector<double>>& rows,
                                    const char* what) {
  const auto d = static_cast<Eigen::Index>(rows.size());
  if (d == 0) throw ConfigError(std::string(what) + ": empty matrix");
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != d) {
      throw ConfigError(std::string(what) + ": matrix must be square");
    }
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  if (!m.isApprox(m.transpose(), 1e-12)) {
    throw ConfigError(std::string(what) + ": matrix must be symmetric");
  }
  return SymmetricMatrix(m);
}

/// Dimension implied by a family spec: the size of A or s if present, else d, else 1.
inline std::size_t family_dim(const FamilySpec& f) {
  if (f.A) return f.A->size();
  if (f.s) return f.s->size();
  return f.d.value_or(1);
}

/// Objective of dimension d (hard instances are tuned to budget T). Families
/// with explicit A or s are fixed-dimension.
inline Objective build_objective(const FamilySpec& f, std::size_t d, double T) {
  const FunctionClassParams p = class_params(f);
  if (f.name == "quadratic") {
    if (!f.A) return make_standard_quadratic(d, p);
    if (!f.b || f.b->size() != f.A->size()) {
      throw ConfigError("family: quadratic needs b with the same dimension as A");
    }
    if (f.A->size() != d) throw ConfigError("family: A is fixed to dimension " + std::to_string(f.A->size()));
    return make_quadratic(to_symmetric(*f.A, "family.A"), to_vector(*f.b), p);
  }
  if (f.name == "cubic-perturbed") return make_cubic_perturbed(p, d);
  if (f.name == "hard-instance") {
    if (f.s && f.s->size() != d) throw ConfigError("family: s is fixed to dimension " + std::to_string(f.s->size()));
    return make_hard_instance_product(f.s.value_or(std::vector<int>(d, 1)), T, p);
  }
  throw ConfigError("unknown family '" + f.name + "'");
}

inline std::vector<std::uint64_t> budgets(const ExperimentConfig& c,
                                          std::vector<std::uint64_t> fallback) {
  if (c.T_list) return *c.T_list;
  if (c.T) return {*c.T};
  return fallback;
}

inline std::vector<std::size_t> dims(const ExperimentConfig& c, const FamilySpec& f,
                                     std::vector<std::size_t> fallback = {}) {
  if (c.d_list) return *c.d_list;
  if (f.d || f.A || f.s || fallback.empty()) return {family_dim(f)};
  return fallback;
}

inline std::size_t resolve_threads(std::optional<std::size_t> flag, const char* env_value) {
  if (flag && *flag > 0) return *flag;
  if (env_value && *env_value) {
    std::size_t v = 0;
    const std::string s(env_value);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size() && v > 0) return v;
    throw ConfigError("ZOO_OPT_THREADS must be a positive integer");
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Commands.

inline json record_header(const ExperimentConfig& c) {
  return json{{"command", c.command},
              {"config", to_json(c)},
              {"config_hash", hex64(config_hash(c))},
              {"seed", c.seed}};
}

inline void write_summary(const Options& opt, const std::string& stem, const json& summary) {
  write_text(opt.out_dir / (stem + ".json"), summary.dump(2) + "\n");
}

inline ExperimentConfig effective(ExperimentConfig c, const Options& opt) {
  if (opt.seed) c.seed = *opt.seed;
  return c;
}

inline int cmd_optimize(ExperimentConfig c, const Options& opt) {
  c = effective(std::move(c), opt);
  const FamilySpec f = c.family.value_or(FamilySpec{});
  if (!c.T && !c.T_list) throw ConfigError("optimize: T is required");
  auto family = [&f](std::size_t d, std::uint64_t T) {
    return build_objective(f, d, static_cast<double>(T));
  };
  const RegretSweepResult res = regret_sweep(family, dims(c, f), budgets(c, {}), c.trials, c.seed,
                                             make_noise(c.noise), opt.threads, opt.timing);
  write_text(opt.out_dir / "optimize.csv", trials_csv(res.trials));
  json rows = json::array();
  for (const auto& r : res.trials) {
    json row{{"T", r.T},         {"d", r.d},
             {"rho", r.rho},     {"M", r.M},
             {"seed", r.seed},   {"trial", r.trial},
             {"regret", r.regret}, {"regret_bootstrap", r.regret_bootstrap},
             {"queries_used", r.queries_used}};
    if (opt.timing) row["wall_ms"] = r.wall_ms;
    rows.push_back(std::move(row));
  }
  json summary = record_header(c);
  summary["rows"] = std::move(rows);
  write_summary(opt, "optimize", summary);
  *opt.log << "optimize: " << res.trials.size() << " runs written to "
           << (opt.out_dir / "optimize.csv").string() << "\n";
  return kPass;
}

namespace detail {

inline Vector point_or_zero(const CheckParams& p, std::size_t d) {
  if (!p.x) return Vector::Zero(static_cast<Eigen::Index>(d));
  if (p.x->size() != d) throw ConfigError("params.x has the wrong dimension");
  return to_vector(*p.x);
}

inline std::vector<SymmetricMatrix> shapes(const CheckParams& p, std::size_t d,
                                           std::vector<double> default_scales) {
  if (p.Z) {
    if (p.Z->size() != d) throw ConfigError("params.Z has the wrong dimension");
    return {to_symmetric(*p.Z, "params.Z")};
  }
  std::vector<SymmetricMatrix> out;
  for (double s : p.z_scales.value_or(default_scales)) {
    out.push_back(SymmetricMatrix::identity(d).scaled(s));
  }
  return out;
}

inline FamilySpec family_or(const ExperimentConfig& c, const std::string& name) {
  if (c.family) return *c.family;
  FamilySpec f;
  f.name = name;
  return f;
}

}  // namespace detail

/// Names accepted by `verify`.
inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"bias",   "variance",   "concentration",
                                              "step-stability", "newton", "noise-tail",
                                              "lower-bound"};
  return names;
}

inline std::vector<BoundCheckReport> run_check(const std::string& check,
                                               const ExperimentConfig& c) {
  const CheckParams& p = c.params;
  std::vector<BoundCheckReport> out;
  if (check == "bias") {
    const FamilySpec f = detail::family_or(c, "cubic-perturbed");
    for (std::size_t d : dims(c, f)) {
      const Objective obj = build_objective(f, d, static_cast<double>(c.T.value_or(100000000)));
      const Vector x = detail::point_or_zero(p, d);
      std::uint64_t stream = 0;
      for (const auto& z : detail::shapes(p, d, {0.1, 0.5, 1.0})) {
        out.push_back(bias_experiment(obj, x, z, p.n_mc.value_or(100000),
                                      derive_seed(c.seed, d * 1000 + stream++),
                                      p.bound_scale.value_or(1.0)));
      }
    }
  } else if (check == "variance") {
    const FamilySpec f = detail::family_or(c, "quadratic");
    for (std::size_t d : dims(c, f, {2, 4})) {
      const Objective obj = build_objective(f, d, static_cast<double>(c.T.value_or(100000000)));
      const Vector x = detail::point_or_zero(p, d);
      std::uint64_t stream = 0;
      for (std::uint64_t n : p.n_list.value_or(std::vector<std::uint64_t>{10, 100, 1000})) {
        for (const auto& z : detail::shapes(p, d, {0.5})) {
          out.push_back(variance_experiment(obj, x, z, n, p.n_mc.value_or(2000),
                                            derive_seed(c.seed, d * 1000 + stream++),
                                            make_noise(c.noise), p.bound_scale.value_or(1.0)));
        }
      }
    }
  } else if (check == "concentration") {
    const FamilySpec f = detail::family_or(c, "quadratic");
    for (std::size_t d : dims(c, f, {2})) {
      const Objective obj = build_objective(f, d, static_cast<double>(c.T.value_or(100000000)));
      const Vector x = detail::point_or_zero(p, d);
      const double r = p.r.value_or(0.3);
      const std::uint64_t n = p.n.value_or(100);
      std::uint64_t stream = 0;
      for (auto kind : {ConcentrationKind::kBootstrap, ConcentrationKind::kHessian}) {
        const auto grid = p.K_grid.value_or(default_k_grid(kind, d, f.rho, r, n));
        auto reps = concentration_experiment(kind, obj, x, r, n, grid, p.n_mc.value_or(10000),
                                             derive_seed(c.seed, d * 1000 + stream++),
                                             make_noise(c.noise));
        out.insert(out.end(), reps.begin(), reps.end());
      }
    }
  } else if (check == "step-stability") {
    const FamilySpec f = detail::family_or(c, "quadratic");
    const auto range = p.R0_range.value_or(std::vector<double>{0.01, 100.0});
    if (range.size() != 2 || !(range[0] > 0.0) || range[1] < range[0]) {
      throw ConfigError("params.R0_range must be [lo, hi] with 0 < lo <= hi");
    }
    const auto d_list = c.d_list.value_or(std::vector<std::size_t>{1, 2, 4});
    for (std::size_t d : d_list) {
      Rng rng = make_stream(derive_seed(c.seed, d), Stream::kFixture);
      const StepFuzzReport rep = step_perturbation_fuzz(p.n_instances.value_or(100000), d, f.M,
                                                        range[0], range[1], rng);
      const std::string params = "d=" + std::to_string(d) +
                                 ",instances=" + std::to_string(rep.instances);
      out.push_back(make_report("step-stability-distance",
                                params + ",worst_slack=" + zoopt::detail::fmt_num(rep.worst_slack_a),
                                static_cast<double>(rep.violations_a), 0.0, 0.0, 0.0));
      out.push_back(make_report("step-stability-weighted",
                                params + ",worst_slack=" + zoopt::detail::fmt_num(rep.worst_slack_b),
                                static_cast<double>(rep.violations_b), 0.0, 0.0, 0.0));
    }
  } else if (check == "newton") {
    const NewtonFuzzReport rep = newton_fuzz(p.n_instances.value_or(100), c.seed);
    out.push_back(make_report("newton-iteration-bound",
                              "instances=" + std::to_string(rep.instances) +
                                  ",quadratic=" + std::to_string(rep.quadratic_instances) +
                                  ",hard=" + std::to_string(rep.hard_instances) +
                                  ",worst_late_ratio=" +
                                  zoopt::detail::fmt_num(rep.worst_late_ratio),
                              static_cast<double>(rep.failing_instances), 0.0, 0.0, 0.0));
  } else if (check == "noise-tail") {
    out = noise_tail_check(make_noise(c.noise),
                           p.s_grid.value_or(std::vector<double>{0.5, 1.0, 1.5, 2.0}),
                           p.n_mc.value_or(1000000), c.seed);
  } else if (check == "lower-bound") {
    const FamilySpec f = detail::family_or(c, "hard-instance");
    const double T = static_cast<double>(c.T.value_or(100000000));
    const LowerBoundAudit a = lower_bound_audit(T, family_dim(f), class_params(f),
                                                p.grid_points.value_or(10000), c.seed);
    out = lower_bound_reports(a, class_params(f));
  } else {
    throw ConfigError("unknown check '" + check + "'");
  }
  return out;
}

inline int cmd_verify(ExperimentConfig c, const std::string& check, const Options& opt) {
  c = effective(std::move(c), opt);
  const std::vector<BoundCheckReport> reports = run_check(check, c);
  std::string stem = "verify_" + check;
  for (auto& ch : stem) {
    if (ch == '-') ch = '_';
  }
  write_text(opt.out_dir / (stem + ".csv"), reports_csv(reports));
  json summary = record_header(c);
  summary["check"] = check;
  summary["reports"] = reports_json(reports);
  summary["pass"] = all_pass(reports);
  write_summary(opt, stem, summary);
  for (const auto& r : reports) {
    *opt.log << (r.pass ? "PASS " : "FAIL ") << r.claim << " [" << r.parameters
             << "] empirical=" << fmt17(r.empirical) << " bound=" << fmt17(r.bound)
             << " margin=" << fmt17(r.margin) << "\n";
  }
  return all_pass(reports) ? kPass : kCheckFailure;
}

inline int cmd_regret_sweep(ExperimentConfig c, const Options& opt) {
  c = effective(std::move(c), opt);
  const FamilySpec f = c.family.value_or(FamilySpec{});
  const auto t_list = budgets(c, {10000, 30000, 100000, 300000, 1000000});
  const auto window = c.params.slope_window.value_or(std::vector<double>{-0.85, -0.5});
  if (window.size() != 2) throw ConfigError("params.slope_window must be [lo, hi]");

  RegretSweepResult res;
  if (c.synthetic_fit) {
    // Fitter self-test: regrets exactly T^(-2/3), no optimizer runs.
    for (std::size_t d : dims(c, f)) {
      std::vector<std::pair<double, double>> pts;
      for (std::uint64_t T : t_list) {
        SweepCell cell;
        cell.d = d;
        cell.T = T;
        cell.trials = 0;
        cell.mean_regret = std::pow(static_cast<double>(T), -2.0 / 3.0);
        res.cells.push_back(cell);
        pts.emplace_back(static_cast<double>(T), cell.mean_regret);
      }
      SlopeResult sr;
      sr.d = d;
      try {
        sr.fit = fit_loglog_slope(pts);
        sr.ok = true;
      } catch (const DegenerateFit& e) {
        sr.error = e.what();
      }
      res.slopes.push_back(sr);
    }
  } else {
    auto family = [&f](std::size_t d, std::uint64_t T) {
      return build_objective(f, d, static_cast<double>(T));
    };
    res = regret_sweep(family, dims(c, f), t_list, c.trials, c.seed, make_noise(c.noise),
                       opt.threads, opt.timing);
  }

  write_text(opt.out_dir / "regret_sweep_cells.csv", cells_csv(res.cells));
  if (!c.synthetic_fit) write_text(opt.out_dir / "regret_sweep_trials.csv", trials_csv(res.trials));
  bool pass = true;
  json slopes = json::array();
  for (const auto& s : res.slopes) {
    json js{{"d", s.d}, {"ok", s.ok}};
    if (s.ok) {
      const bool in_window = s.fit.slope >= window[0] && s.fit.slope <= window[1];
      js["slope"] = s.fit.slope;
      js["intercept"] = s.fit.intercept;
      js["slope_se"] = s.fit.slope_se;
      js["ci"] = {s.fit.ci_low, s.fit.ci_high};
      js["in_window"] = in_window;
      pass = pass && (c.synthetic_fit || in_window);
      *opt.log << "d=" << s.d << " slope=" << fmt17(s.fit.slope) << " 95% CI ["
               << fmt17(s.fit.ci_low) << ", " << fmt17(s.fit.ci_high) << "]"
               << (c.synthetic_fit ? "" : in_window ? " in window" : " OUTSIDE window") << "\n";
    } else {
      js["error"] = s.error;
      pass = false;
      *opt.log << "d=" << s.d << " slope fit failed: " << s.error << "\n";
    }
    slopes.push_back(std::move(js));
  }
  json summary = record_header(c);
  summary["slope_window"] = window;
  summary["slopes"] = std::move(slopes);
  summary["pass"] = pass;
  write_summary(opt, "regret_sweep", summary);
  return pass ? kPass : kCheckFailure;
}

inline int cmd_audit_lower_bound(ExperimentConfig c, const Options& opt) {
  c = effective(std::move(c), opt);
  const FamilySpec f = detail::family_or(c, "hard-instance");
  const double T = static_cast<double>(c.T.value_or(100000000));
  const LowerBoundAudit a = lower_bound_audit(T, family_dim(f), class_params(f),
                                              c.params.grid_points.value_or(10000), c.seed);
  const auto reports = lower_bound_reports(a, class_params(f));
  write_text(opt.out_dir / "audit_lower_bound.csv", reports_csv(reports));
  json summary = record_header(c);
  summary["instance"] = {{"T", a.instance.T},
                         {"y0", a.instance.y0},
                         {"x0", a.instance.x0},
                         {"eps", a.instance.eps},
                         {"grid_points", a.grid_points}};
  summary["reports"] = reports_json(reports);
  summary["pass"] = a.pass();
  write_summary(opt, "audit_lower_bound", summary);
  for (const auto& r : reports) {
    *opt.log << (r.pass ? "PASS " : "FAIL ") << r.claim << " empirical=" << fmt17(r.empirical)
             << " bound=" << fmt17(r.bound) << "\n";
  }
  return a.pass() && all_pass(reports) ? kPass : kCheckFailure;
}

/// Dispatches a command and maps exceptions onto the exit-code contract.
/// `check` is the positional argument of `verify` (falls back to config.check).
inline int dispatch(const std::string& command, const ExperimentConfig& config,
                    const std::optional<std::string>& check, const Options& opt,
                    std::ostream& err = std::cerr) {
  try {
    if (command == "optimize") return cmd_optimize(config, opt);
    if (command == "verify") {
      const auto name = check ? check : config.check;
      if (!name) throw ConfigError("verify: no check name given");
      return cmd_verify(config, *name, opt);
    }
    if (command == "regret-sweep") return cmd_regret_sweep(config, opt);
    if (command == "audit-lower-bound") return cmd_audit_lower_bound(config, opt);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NotInClass& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const BudgetExhausted& e) {
    err << "budget error: " << e.what() << "\n";
    return kBudgetError;
  } catch (const TooSmallBudget& e) {
    err << "budget error: " << e.what() << "\n";
    return kBudgetError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kCheckFailure;
  }
}

}  // namespace zoopt::cli
