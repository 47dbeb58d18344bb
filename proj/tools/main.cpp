// bergman_lab: command-line front end for the weighted Bergman projection
// toolkit. Subcommands classify, constants, kernel, norm and verify.

#include <cmath>
#include <complex>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bergman/bergman_kernel.hpp"
#include "bergman/errors.hpp"
#include "bergman/experiments.hpp"
#include "bergman/operator_norm.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace bergman;

namespace {

constexpr int kExitMalformed = 2;

struct Options {
  std::string config;
  int grid_levels = 24;
  int grid_nodes = 16;
  double tol = 1e-6;
  unsigned jobs = 1;
  std::string out;

  std::string omega, nu, eta;
  double p = 2.0;
  std::string suite = "standard";

  bool closed_form = false;
  double alpha = 0.0;
  std::string mean_sweep;
};

// Values from the JSON config fill every option not given on the command line.
void apply_config(Options& o, const CLI::App& app, const CLI::App* sub) {
  if (o.config.empty()) return;
  std::ifstream in(o.config);
  if (!in) throw ConfigError("cannot open config " + o.config);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config " + o.config + ": " + e.what());
  }
  auto given = [&](const std::string& name) {
    for (const CLI::App* a : {&app, sub}) {
      if (a == nullptr) continue;
      if (const auto* opt = a->get_option_no_throw(name); opt && opt->count() > 0) return true;
    }
    return false;
  };
  try {
    if (!given("--grid-levels") && j.contains("grid_levels")) o.grid_levels = j["grid_levels"];
    if (!given("--grid-nodes") && j.contains("grid_nodes")) o.grid_nodes = j["grid_nodes"];
    if (!given("--tol") && j.contains("tol")) o.tol = j["tol"];
    if (!given("--jobs") && j.contains("jobs")) o.jobs = j["jobs"];
    if (!given("--out") && j.contains("out")) o.out = j["out"].get<std::string>();
    if (!given("--omega") && j.contains("omega")) o.omega = j["omega"].get<std::string>();
    if (!given("--nu") && j.contains("nu")) o.nu = j["nu"].get<std::string>();
    if (!given("--eta") && j.contains("eta")) o.eta = j["eta"].get<std::string>();
    if (!given("--p") && j.contains("p")) o.p = j["p"];
    if (!given("--suite") && j.contains("suite")) o.suite = j["suite"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + o.config + ": " + e.what());
  }
}

RunSettings settings_of(const Options& o) {
  RunSettings s;
  s.grid_levels = o.grid_levels;
  s.grid_nodes = o.grid_nodes;
  s.tol = o.tol;
  s.jobs = o.jobs;
  if (!o.out.empty()) s.out = o.out;
  return s;
}

TripleSpec triple_of(const Options& o) {
  if (o.omega.empty()) throw ConfigError("--omega is required");
  TripleSpec t;
  t.label = "triple";
  t.omega = o.omega;
  t.nu = o.nu.empty() ? o.omega : o.nu;
  t.eta = o.eta.empty() ? o.omega : o.eta;
  t.p = o.p;
  for (const auto* spec : {&t.omega, &t.nu, &t.eta}) {
    try {
      parse_weight(*spec);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (!(t.p >= 1.0) || !std::isfinite(t.p)) throw ConfigError("p must be 1 or lie in (1, inf)");
  return t;
}

void check_grid(const Options& o) {
  if (o.grid_levels < 4 || o.grid_levels > 40) throw ConfigError("--grid-levels must lie in [4, 40]");
  if (o.grid_nodes < 2 || o.grid_nodes > 64) throw ConfigError("--grid-nodes must lie in [2, 64]");
  if (!(o.tol > 0.0 && o.tol < 1.0)) throw ConfigError("--tol must lie in (0, 1)");
}

void emit(const ojson& j, const Options& o, const std::string& file) {
  std::cout << j.dump(2) << '\n';
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / file, std::ios::binary) << j.dump(2) << '\n';
  }
}

int cmd_classify(const Options& o) {
  if (o.omega.empty()) throw ConfigError("--omega is required");
  RadialWeight w = [&] {
    try {
      return parse_weight(o.omega);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }();
  ojson j;
  j["omega"] = w.spec();
  j["report"] = to_json(classify(w, RadialGrid(o.grid_levels, o.grid_nodes)));
  emit(j, o, "classify.json");
  return 0;
}

int cmd_constants(const Options& o) {
  const TripleSpec t = triple_of(o);
  const TripleConfig cfg(parse_weight(t.omega), parse_weight(t.nu), parse_weight(t.eta), t.p);
  const RadialGrid grid(o.grid_levels, o.grid_nodes);
  const fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
  fs::create_directories(dir);
  ojson j;
  j["omega"] = t.omega;
  j["nu"] = t.nu;
  j["eta"] = t.eta;
  j["p"] = t.p;
  j["grid_levels"] = o.grid_levels;
  j["grid_nodes"] = o.grid_nodes;
  if (t.p == 1.0) {
    const auto p1 = p1_constant(cfg, grid);
    j["status"] = "remark-level";
    j["p1"] = summary_json(p1);
    write_trace_csv(p1, dir / "trace.csv");
  } else {
    const auto mp = mp_constant(cfg, grid);
    j["Mp"] = summary_json(mp);
    j["Np"] = summary_json(np_constant(cfg, grid));
    const auto hyp = hypothesis_ratio(cfg, grid);
    j["hypothesis"] = summary_json(hyp);
    j["hypothesis"]["holds"] = hyp.verdict == Verdict::finite;
    write_trace_csv(mp, dir / "trace.csv");
    emit_plot_data(mp, dir / "plot.dat");
  }
  std::ofstream(dir / "summary.json", std::ios::binary) << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

// --out for kernel selects the format (json, csv); any other value is a
// directory receiving kernel.json.
void emit_table(const ojson& j, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows, const Options& o) {
  if (o.out == "csv") {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    os.precision(17);
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
    std::cout << os.str();
    return;
  }
  std::cout << j.dump(2) << '\n';
  if (!o.out.empty() && o.out != "json") {
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / "kernel.json", std::ios::binary) << j.dump(2) << '\n';
  }
}

int kernel_closed_form(const Options& o) {
  double alpha = o.alpha;
  if (!o.omega.empty()) {
    const RadialWeight given = parse_weight(o.omega);
    const auto pos = given.spec().find("alpha=");
    if (given.family() != WeightFamily::standard || pos == std::string::npos) {
      throw ConfigError("--check-closed-form needs a standard weight");
    }
    alpha = std::stod(given.spec().substr(pos + 6));
  }
  std::ostringstream spec;
  spec.precision(17);
  spec << "std:alpha=" << alpha;
  const RadialWeight w = parse_weight(spec.str());
  const KernelEvaluator k(w);
  const double moduli[] = {0.0, 0.3, 0.6, 0.8, 0.9};
  ojson rows = ojson::array();
  std::vector<std::vector<double>> table;
  double worst = 0.0;
  for (double a : moduli) {
    for (double b : moduli) {
      for (int m = 0; m < 8; ++m) {
        const double theta = 2.0 * std::numbers::pi * m / 8.0 + 0.1;
        const std::complex<double> z = std::polar(a, 0.3);
        const std::complex<double> zeta = std::polar(b, 0.3 + theta);
        const auto got = k.eval(z, zeta).value;
        const auto want = std::pow(1.0 - std::conj(z) * zeta, -(2.0 + alpha));
        const double err = std::abs(got - want) / std::abs(want);
        worst = std::max(worst, err);
        table.push_back({a, b, theta, got.real(), got.imag(), want.real(), want.imag(), err});
        rows.push_back({{"abs_z", a}, {"abs_zeta", b}, {"theta", theta},
                        {"relative_error", err}});
      }
    }
  }
  ojson j{{"omega", w.spec()}, {"alpha", alpha}, {"points", rows.size()},
          {"max_relative_error", worst}, {"rows", rows}};
  emit_table(j, {"abs_z", "abs_zeta", "theta", "series_re", "series_im", "closed_re",
                 "closed_im", "relative_error"},
             table, o);
  return 0;
}

// "p=2,radii=0.9,0.99" (radii may also be separated by ';' or '/').
std::pair<double, std::vector<double>> parse_mean_sweep(const std::string& text) {
  double p = 2.0;
  std::vector<double> radii;
  std::string rest = text;
  auto pos = rest.find("radii=");
  if (pos == std::string::npos) throw ConfigError("--mean-sweep needs radii=...");
  std::string head = rest.substr(0, pos);
  std::string tail = rest.substr(pos + 6);
  if (auto q = head.find("p="); q != std::string::npos) {
    try {
      p = std::stod(head.substr(q + 2));
    } catch (const std::exception&) {
      throw ConfigError("--mean-sweep: bad p in '" + text + "'");
    }
  }
  for (char& c : tail) {
    if (c == ';' || c == '/') c = ',';
  }
  std::stringstream ss(tail);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item.rfind("p=", 0) == 0) {
      p = std::stod(item.substr(2));
      continue;
    }
    try {
      radii.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("--mean-sweep: bad radius '" + item + "'");
    }
  }
  if (radii.empty()) throw ConfigError("--mean-sweep: no radii");
  return {p, radii};
}

int kernel_mean_sweep(const Options& o) {
  if (o.omega.empty()) throw ConfigError("--omega is required");
  const auto [p, radii] = parse_mean_sweep(o.mean_sweep);
  const RadialWeight w = parse_weight(o.omega);
  const RadialWeight nu = o.nu.empty() ? w : parse_weight(o.nu);
  const KernelEvaluator k(w);
  const auto sweep = theorem_a_ratio_sweep(k, nu, p, radii);
  ojson rows = ojson::array();
  std::vector<std::vector<double>> table;
  for (const auto& r : sweep.rows) {
    rows.push_back({{"radius", r.radius},
                    {"mean_p", r.mean_p},
                    {"mean_comparison", r.mean_comparison},
                    {"mean_ratio", r.mean_ratio},
                    {"norm_p", r.norm_p},
                    {"norm_comparison", r.norm_comparison},
                    {"norm_ratio", r.norm_ratio}});
    table.push_back({r.radius, r.mean_p, r.mean_comparison, r.mean_ratio, r.norm_p,
                     r.norm_comparison, r.norm_ratio});
  }
  ojson j{{"omega", w.spec()}, {"nu", nu.spec()}, {"p", p}, {"rows", rows},
          {"mean_spread", sweep.mean_spread}, {"norm_spread", sweep.norm_spread}};
  emit_table(j, {"radius", "mean_p", "mean_comparison", "mean_ratio", "norm_p",
                 "norm_comparison", "norm_ratio"},
             table, o);
  return 0;
}

int cmd_kernel(const Options& o) {
  if (o.closed_form) return kernel_closed_form(o);
  if (!o.mean_sweep.empty()) return kernel_mean_sweep(o);
  if (o.omega.empty()) throw ConfigError("--omega is required");
  const KernelEvaluator k(parse_weight(o.omega));
  ojson coeffs = ojson::array();
  std::vector<std::vector<double>> table;
  for (long n = 0; n <= 8; ++n) {
    coeffs.push_back(k.coefficient(n));
    table.push_back({static_cast<double>(n), k.coefficient(n)});
  }
  ojson j{{"omega", k.weight().spec()}, {"coefficients", coeffs},
          {"growth_slope", k.growth_slope()}, {"term_budget", k.term_budget()},
          {"accurate", k.accurate()}};
  emit_table(j, {"n", "a_n"}, table, o);
  return 0;
}

int cmd_norm(const Options& o) {
  const TripleSpec t = triple_of(o);
  if (t.p == 1.0) throw ConfigError("norm needs 1 < p < inf");
  const ojson rec = evaluate_triple(t, settings_of(o), {});
  if (rec.contains("error")) {
    std::cerr << "norm: " << rec["error"].get<std::string>() << '\n';
    return 1;
  }
  ojson j;
  j["kind"] = rec["boyd"]["kind"];
  j["estimate"] = rec["boyd"]["estimate"];
  j["iterations"] = rec["boyd"]["iterations"];
  j["converged"] = rec["boyd"]["converged"];
  j["truncation_error"] = rec["boyd"]["truncation_error"];
  j["adjoint_estimate"] = rec["boyd"]["adjoint_estimate"];
  j["Mp"] = rec["Mp"];
  j["Np"] = rec["Np"];
  j["ratio_to_Mp"] = rec["ratio_to_Mp"];
  j["testfn_lower_bounds"] = rec["testfn_lower_bounds"];
  j["omega"] = t.omega;
  j["nu"] = t.nu;
  j["eta"] = t.eta;
  j["p"] = t.p;
  j["grid_levels"] = o.grid_levels;
  j["grid_nodes"] = o.grid_nodes;
  emit(j, o, "norm.json");
  return rec["boyd"]["converged"].get<bool>() ? 0 : 1;
}

int cmd_verify(const Options& o) {
  SweepConfig cfg;
  if (!o.config.empty()) cfg = load_sweep_config(o.config);
  cfg.settings = settings_of(o);
  if (o.out.empty()) cfg.settings.out = "out";
  if (!o.suite.empty()) cfg.suite = o.suite;
  const auto result = run_suite(cfg);
  for (const auto& c : result.report["checks"]) {
    std::cout << (c["pass"].get<bool>() ? "[PASS] " : "[FAIL] ")
              << c["name"].get<std::string>() << "  (" << c["detail"].get<std::string>()
              << ")\n";
  }
  std::cout << "report: " << (cfg.settings.out / "report.json").string() << '\n';
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Bergman projection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "JSON config; command-line flags win");
  app.add_option("--grid-levels", o.grid_levels, "dyadic levels L of the radial grid");
  app.add_option("--grid-nodes", o.grid_nodes, "Gauss nodes per dyadic panel");
  app.add_option("--tol", o.tol, "Boyd iteration tolerance");
  app.add_option("--jobs", o.jobs, "configurations run in parallel");
  app.add_option("--out", o.out, "output directory (kernel: json|csv)");

  auto add_triple = [&](CLI::App* sub) {
    sub->add_option("--omega", o.omega, "weight spec, e.g. std:alpha=1");
    sub->add_option("--nu", o.nu, "source weight (default omega)");
    sub->add_option("--eta", o.eta, "target weight (default omega)");
    sub->add_option("--p", o.p, "exponent, 1 or > 1");
  };

  auto* classify_cmd = app.add_subcommand("classify", "weight-class verdicts");
  classify_cmd->add_option("--omega", o.omega, "weight spec");
  auto* constants_cmd = app.add_subcommand("constants", "Mp, Np and hypothesis traces");
  add_triple(constants_cmd);
  auto* kernel_cmd = app.add_subcommand("kernel", "kernel coefficients, checks, mean sweeps");
  kernel_cmd->add_option("--omega", o.omega, "weight spec");
  kernel_cmd->add_option("--nu", o.nu, "norm weight for --mean-sweep (default omega)");
  kernel_cmd->add_flag("--check-closed-form", o.closed_form,
                       "compare with (1 - conj(z) zeta)^-(2+alpha)");
  kernel_cmd->add_option("--alpha", o.alpha, "standard weight exponent");
  kernel_cmd->add_option("--mean-sweep", o.mean_sweep, "p=<p>,radii=<r1>,<r2>,...");
  auto* norm_cmd = app.add_subcommand("norm", "radial-restricted operator norm estimate");
  add_triple(norm_cmd);
  auto* verify_cmd = app.add_subcommand("verify", "run a suite and write report.json");
  verify_cmd->add_option("--suite", o.suite, "standard | counterexample | p1 | all | custom");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitMalformed;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config(o, app, sub);
    check_grid(o);
    if (sub == classify_cmd) return cmd_classify(o);
    if (sub == constants_cmd) return cmd_constants(o);
    if (sub == kernel_cmd) return cmd_kernel(o);
    if (sub == norm_cmd) return cmd_norm(o);
    if (sub == verify_cmd) {
      // With a config file the suite comes from the file unless --suite is given.
      if (!o.config.empty() && verify_cmd->count("--suite") == 0) o.suite.clear();
      return cmd_verify(o);
    }
  } catch (const ConfigError& e) {
    std::cerr << "malformed input: " << e.what() << '\n';
    return kExitMalformed;
  } catch (const DomainError& e) {
    std::cerr << "malformed input: " << e.what() << '\n';
    return kExitMalformed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
