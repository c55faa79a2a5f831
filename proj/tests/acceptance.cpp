// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "zoopt/cli.hpp"
#include "zoopt/verification.hpp"

using namespace zoopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// 1. Single-sample gradient estimates of x^3/6 at 0 with Z = r all equal r^3/6,
// which is exactly the bias bound; the bound must hold and must fail at 0.8x.
Outcome bias_equality() {
  const Objective f = make_cubic_perturbed(FunctionClassParams{1.0, 0.0, 1.0}, 1);
  Outcome o{true, ""};
  std::uint64_t seed = 1;
  for (double r : {0.1, 0.5, 1.0}) {
    const SymmetricMatrix z = SymmetricMatrix::identity(1).scaled(r);
    const BoundCheckReport rep = bias_experiment(f, Vector::Zero(1), z, 1000000, seed);
    const BoundCheckReport tight = bias_experiment(f, Vector::Zero(1), z, 1000000, seed, 0.8);
    ++seed;
    const double exact = r * r * r / 6.0;
    const bool equal = std::abs(rep.empirical - exact) <= 4.0 * rep.std_error + 1e-12 * exact;
    const bool within = rep.empirical <= 1.01 * rep.bound && rep.pass;
    o.pass = o.pass && equal && within && !tight.pass;
    o.detail += "r=" + num(r) + ": bias=" + num(rep.empirical) + " bound=" + num(rep.bound) +
                (tight.pass ? " (0.8x bound PASSED)" : "") + "; ";
  }
  return o;
}

std::vector<SymmetricMatrix> bias_shapes(std::size_t d) {
  Rng rng = make_stream(d, Stream::kFixture);
  Vector aniso(static_cast<Eigen::Index>(d)), rot(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < aniso.size(); ++i) {
    const double t = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    aniso(i) = 0.2 + 0.6 * t;
    rot(i) = 0.3 + 0.7 * t;
  }
  return {SymmetricMatrix::identity(d).scaled(0.5), SymmetricMatrix::diagonal(aniso),
          SymmetricMatrix::from_spectrum(zoopt::detail::random_orthogonal(d, rng), rot)};
}

// 2. Bias bound on cubic-perturbed objectives, 3 shapes for each d in {1, 2, 4}.
Outcome bias_inequality() {
  const FunctionClassParams p{1.0, 1.0, 1.0};
  Outcome o{true, ""};
  int cells = 0, passed = 0;
  double worst = 1e300;
  std::uint64_t seed = 100;
  for (std::size_t d : {1u, 2u, 4u}) {
    const Objective f = make_cubic_perturbed(p, d);
    const Vector x = Vector::Constant(static_cast<Eigen::Index>(d), 0.2);
    for (const auto& z : bias_shapes(d)) {
      const BoundCheckReport r = bias_experiment(f, x, z, 1000000, seed++);
      ++cells;
      passed += r.pass ? 1 : 0;
      worst = std::min(worst, r.margin / r.bound);
    }
  }
  o.pass = cells == 9 && passed == 9;
  o.detail = std::to_string(passed) + "/" + std::to_string(cells) +
             " cells within bound + 5 se; min relative margin " + num(worst);
  return o;
}

// 3. Variance bound, d in {2, 4} x n in {10, 100, 1000}, Gaussian noise.
Outcome variance_bound() {
  const FunctionClassParams p{1.0, 1.0, 1.0};
  int cells = 0, passed = 0;
  double max_ratio = 0.0;
  std::uint64_t seed = 200;
  for (std::size_t d : {2u, 4u}) {
    const Objective f = make_standard_quadratic(d, p);
    const Vector x = Vector::Constant(static_cast<Eigen::Index>(d), 0.3);
    for (std::uint64_t n : {10u, 100u, 1000u}) {
      const BoundCheckReport r = variance_experiment(
          f, x, SymmetricMatrix::identity(d).scaled(0.5), n, 2000, seed++);
      ++cells;
      passed += r.pass ? 1 : 0;
      max_ratio = std::max(max_ratio, r.empirical / r.bound);
    }
  }
  return {cells == 6 && passed == 6, std::to_string(passed) + "/" + std::to_string(cells) +
                                         " cells; max empirical/bound " + num(max_ratio)};
}

// 4. Sub-Gaussian tails of the coordinate-wise estimators.
Outcome estimator_tails() {
  const FunctionClassParams p{1.0, 1.0, 1.0};
  const Objective f = make_standard_quadratic(2, p);
  const double r = 0.3;
  const std::uint64_t n = 100;
  std::string detail;
  bool pass = true;
  std::uint64_t seed = 300;
  for (auto kind : {ConcentrationKind::kBootstrap, ConcentrationKind::kHessian}) {
    const auto grid = default_k_grid(kind, 2, p.rho, r, n);
    const auto reps =
        concentration_experiment(kind, f, Vector::Zero(2), r, n, grid, 10000, seed++);
    pass = pass && reps.size() == 3 && all_pass(reps);
    detail += reps.front().claim + ":";
    for (const auto& rep : reps) detail += " " + num(rep.empirical) + "<=" + num(rep.bound);
    detail += "; ";
  }
  return {pass, detail};
}

// 5. Noiseless clipped-Newton iteration bound on random class members.
Outcome newton_bound() {
  const NewtonFuzzReport r = newton_fuzz(100, 500);
  return {r.pass() && r.instances == 100,
          std::to_string(r.failing_instances) + " failing of " + std::to_string(r.instances) +
              " (" + std::to_string(r.quadratic_instances) + " quadratic, " +
              std::to_string(r.hard_instances) + " hard); worst late gradient ratio " +
              num(r.worst_late_ratio)};
}

// 6. Perturbation inequalities of the clipped step, 1e5 instances per d.
Outcome step_stability() {
  bool pass = true;
  std::string detail;
  for (std::size_t d : {1u, 2u, 4u}) {
    Rng rng = make_stream(600 + d, Stream::kFixture);
    const StepFuzzReport r = step_perturbation_fuzz(100000, d, 1.0, 0.01, 100.0, rng, 1e-8);
    pass = pass && r.pass();
    detail += "d=" + std::to_string(d) + ": " + std::to_string(r.violations_a + r.violations_b) +
              " violations, worst slack " + num(std::min(r.worst_slack_a, r.worst_slack_b)) + "; ";
  }
  return {pass, detail};
}

// 7. Fitted regret exponent and order of magnitude at T = 1e6.
Outcome regret_rate() {
  const FunctionClassParams p{1.0, 1.0, 1.0};
  Matrix a(2, 2);
  a << 2.0, 0.5, 0.5, 1.5;
  Vector x_star(2);
  x_star << 0.5, -0.3;
  const Objective f = make_quadratic(SymmetricMatrix(a), -(a * x_star), p);
  auto family = [&f](std::size_t, std::uint64_t) { return f; };
  const auto res = regret_sweep(family, {2}, {10000, 30000, 100000, 300000, 1000000}, 20, 0,
                                NoiseModel::std_gaussian(), 1);
  const SlopeResult& s = res.slopes.at(0);
  const SweepCell& last = res.cells.back();
  const double cap = 100.0 * 2.0 * std::cbrt(p.rho * p.rho) * std::pow(1e6, -2.0 / 3.0) / p.M;
  const bool slope_ok = s.ok && s.fit.slope >= -0.85 && s.fit.slope <= -0.5;
  const bool level_ok = last.mean_regret <= cap;
  return {slope_ok && level_ok,
          "slope " + num(s.fit.slope) + " [CI " + num(s.fit.ci_low) + ", " + num(s.fit.ci_high) +
              "]; mean regret at 1e6 " + num(last.mean_regret) + " <= " + num(cap)};
}

// 8. Noiseless two-stage runs are exact on quadratics.
Outcome noiseless_exactness() {
  const FunctionClassParams p{1.0, 1.0, 1.0};
  bool pass = true;
  std::string detail;
  for (std::size_t d : {1u, 2u, 4u}) {
    const RunResult r = run(make_standard_quadratic(d, p), 10000, 1, NoiseModel::zero());
    pass = pass && r.regret <= 1e-10;
    detail += "d=" + std::to_string(d) + ": " + num(r.regret) + "; ";
  }
  return {pass, detail};
}

// 9. Hard-instance construction audit at T = 1e8.
Outcome lower_bound_construction() {
  const FunctionClassParams p{1.0, 1.0, 1.0};
  const LowerBoundAudit a = lower_bound_audit(1e8, 1, p, 10000);
  const bool membership = a.membership_f1.all() && a.membership_f2.all();
  return {membership && a.gap_ok && a.variance_ok,
          std::string("membership ") + (membership ? "ok" : "FAILED") + "; gap " +
              num(std::min(a.gap_f1, a.gap_f2)) + " >= 4 eps " + num(4.0 * a.instance.eps) +
              "; max local variance " + num(a.max_local_variance) + " <= " + num(1.0 / a.T) +
              "; grid " + std::to_string(a.grid_points)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = "'" + std::string(ZOOPT_CLI_PATH) + "' " + args + " --out '" +
                          out.string() + "' > '" + (out / "log.txt").string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 10. Every command, run twice with the same config and seed, writes identical CSV bytes.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "zoopt_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  struct Case {
    std::string name, args;
    std::string config;
  };
  const std::vector<Case> cases{
      {"optimize", "optimize",
       R"({"command": "optimize", "family": {"name": "quadratic", "d": 3}, "T": 50000, "trials": 4})"},
      {"verify", "verify bias",
       R"({"command": "verify", "d_list": [1, 2], "params": {"n_mc": 20000}})"},
      {"regret-sweep", "regret-sweep",
       R"({"command": "regret-sweep", "family": {"name": "hard-instance", "d": 1}, "T_list": [10000, 30000, 100000], "trials": 3})"},
      {"audit-lower-bound", "audit-lower-bound",
       R"({"command": "audit-lower-bound", "T": 100000000})"},
  };
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const fs::path cfg = root / (c.name + ".json");
    std::ofstream(cfg) << c.config;
    const fs::path a = root / (c.name + "_a"), b = root / (c.name + "_b");
    fs::create_directories(a);
    fs::create_directories(b);
    const std::string args = c.args + " --config '" + cfg.string() + "' --seed 2024";
    const int ca = run_cli(args, a);
    const int cb = run_cli(args + " --threads 2", b);
    bool same = ca == cb && ca != 2 && ca != 3;
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      same = same && fs::exists(b / e.path().filename()) &&
             slurp(e.path()) == slurp(b / e.path().filename());
    }
    same = same && files > 0;
    pass = pass && same;
    detail += c.name + (same ? " identical" : " DIFFERENT") + " (" + std::to_string(files) +
              " csv); ";
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 bias equality on the cubic", bias_equality},
      {"2 bias bound, cubic-perturbed grid", bias_inequality},
      {"3 variance bound, Gaussian noise", variance_bound},
      {"4 estimator tail bounds", estimator_tails},
      {"5 noiseless Newton iteration bound", newton_bound},
      {"6 clipped-step perturbation fuzz", step_stability},
      {"7 regret rate exponent", regret_rate},
      {"8 noiseless end-to-end exactness", noiseless_exactness},
      {"9 hard-instance construction audit", lower_bound_construction},
      {"10 byte-identical CSV under seed", determinism},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    while (!o.detail.empty() && (o.detail.back() == ' ' || o.detail.back() == ';')) {
      o.detail.pop_back();
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << "[" << name << "] " << o.detail << " ("
              << num(secs) << " s)" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
