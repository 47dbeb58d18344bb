#include "bergman/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "bergman/bergman_kernel.hpp"
#include "bergman/errors.hpp"
#include "bergman/operator_norm.hpp"

namespace bergman {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Shortest round-trip text; keeps CSV output bitwise stable.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// JSON cannot hold inf/nan; they are spelled out as strings.
ojson jnum(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

ojson measured(double value, double tolerance) {
  return ojson{{"value", jnum(value)}, {"tolerance", jnum(tolerance)}};
}

std::string label_number(double v) {
  std::string s = num(v);
  std::replace(s.begin(), s.end(), '.', 'p');
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
  }
  return s;
}

std::vector<TripleSpec> standard_triples() {
  std::vector<TripleSpec> out;
  for (double alpha : {-0.5, 0.0, 1.0, 3.0}) {
    for (double p : {1.5, 2.0, 3.0}) {
      const std::string w = "std:alpha=" + num(alpha);
      out.push_back({"std_a" + label_number(alpha) + "_p" + label_number(p), w, w, w, p});
    }
  }
  return out;
}

std::vector<TripleSpec> counterexample_triples() {
  const std::string base = "std:alpha=0";
  return {{"cex_std_a0_p2", base, "cex-nu:base=" + base + ",p=2",
           "cex-eta:base=" + base + ",p=2", 2.0}};
}

std::vector<TripleSpec> p1_triples() {
  return {{"p1_unweighted", "std:alpha=0", "std:alpha=0", "std:alpha=0", 1.0},
          {"p1_eta_std_a1", "std:alpha=0", "std:alpha=0", "std:alpha=1", 1.0}};
}

ojson check(const std::string& name, bool pass, const std::string& detail) {
  return ojson{{"name", name}, {"pass", pass}, {"detail", detail}};
}

ojson trace_json(const ConstantTrace& t) {
  ojson probes = ojson::array();
  for (std::size_t i = 0; i < t.probe_values.size(); ++i) {
    probes.push_back({{"level", t.probe_levels[i]}, {"value", jnum(t.probe_values[i])}});
  }
  return ojson{{"sup", measured(t.sup, t.tolerance)},
               {"argsup", t.argsup},
               {"argsup_gap", t.argsup_gap},
               {"verdict", to_string(t.verdict)},
               {"measure", t.measure},
               {"last", jnum(t.values.empty() ? 0.0 : t.values.back())},
               {"probes", probes}};
}

std::string join_messages(const std::vector<std::string>& msgs) {
  std::string out;
  for (const auto& m : msgs) out += m + "\n";
  return out;
}

}  // namespace

std::vector<TripleSpec> suite_triples(const SweepConfig& cfg) {
  if (cfg.suite == "standard") return standard_triples();
  if (cfg.suite == "counterexample") return counterexample_triples();
  if (cfg.suite == "p1") return p1_triples();
  if (cfg.suite == "all") {
    auto out = standard_triples();
    for (auto& t : counterexample_triples()) out.push_back(t);
    for (auto& t : p1_triples()) out.push_back(t);
    return out;
  }
  if (cfg.suite == "custom") return cfg.triples;
  throw ConfigError("unknown suite '" + cfg.suite +
                    "' (standard, counterexample, p1, all, custom)");
}

SweepConfig load_sweep_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  SweepConfig cfg;
  try {
    auto& s = cfg.settings;
    s.grid_levels = j.value("grid_levels", s.grid_levels);
    s.grid_nodes = j.value("grid_nodes", s.grid_nodes);
    s.tol = j.value("tol", s.tol);
    s.jobs = j.value("jobs", s.jobs);
    if (j.contains("out")) s.out = j.at("out").get<std::string>();
    cfg.suite = j.value("suite", cfg.suite);
    if (j.contains("triples")) {
      int idx = 0;
      for (const auto& t : j.at("triples")) {
        TripleSpec spec;
        spec.omega = t.at("omega").get<std::string>();
        spec.nu = t.value("nu", spec.omega);
        spec.eta = t.value("eta", spec.omega);
        spec.p = t.at("p").get<double>();
        spec.label = t.value("label", "config" + std::to_string(idx));
        cfg.triples.push_back(spec);
        ++idx;
      }
      if (!j.contains("suite")) cfg.suite = "custom";
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return cfg;
}

void validate(const SweepConfig& cfg) {
  std::vector<std::string> problems;
  const auto& s = cfg.settings;
  if (s.grid_levels < 4 || s.grid_levels > 40) {
    problems.push_back("grid_levels must lie in [4, 40]");
  }
  if (s.grid_nodes < 2 || s.grid_nodes > 64) problems.push_back("grid_nodes must lie in [2, 64]");
  if (!(s.tol > 0.0) || !(s.tol < 1.0)) problems.push_back("tol must lie in (0, 1)");
  std::vector<TripleSpec> triples;
  try {
    triples = suite_triples(cfg);
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  if (cfg.suite == "custom" && triples.empty()) problems.push_back("custom suite has no triples");
  std::vector<std::string> labels;
  for (const auto& t : triples) {
    for (const auto* spec : {&t.omega, &t.nu, &t.eta}) {
      try {
        parse_weight(*spec);
      } catch (const std::exception& e) {
        problems.push_back(t.label + ": " + e.what());
      }
    }
    if (!(t.p >= 1.0) || !std::isfinite(t.p)) {
      problems.push_back(t.label + ": p must be 1 or lie in (1, inf)");
    }
    if (std::find(labels.begin(), labels.end(), t.label) != labels.end()) {
      problems.push_back("duplicate label " + t.label);
    }
    labels.push_back(t.label);
  }
  if (!problems.empty()) throw ConfigError(join_messages(problems));
}

ojson to_json(const WeightClassReport& rep) {
  return ojson{
      {"Dhat",
       {{"holds", rep.in_Dhat.holds},
        {"constant", jnum(rep.in_Dhat.constant)},
        {"beta", jnum(rep.in_Dhat.beta)},
        {"drifting", rep.in_Dhat.drifting}}},
      {"Dcheck",
       {{"holds", rep.in_Dcheck.holds},
        {"K", rep.in_Dcheck.K},
        {"constant", jnum(rep.in_Dcheck.constant)},
        {"gamma", jnum(rep.in_Dcheck.gamma)}}},
      {"regular",
       {{"holds", rep.regular.holds},
        {"min_ratio", jnum(rep.regular.min_ratio)},
        {"max_ratio", jnum(rep.regular.max_ratio)},
        {"drifting", rep.regular.drifting}}},
      {"loglog_slope", jnum(rep.loglog_slope)},
      {"grid_levels", rep.grid_levels},
      {"grid_nodes", rep.grid_nodes},
      {"grid_limited", rep.grid_limited},
      {"caveat", rep.caveat}};
}

ojson summary_json(const ConstantTrace& t) {
  ojson j = trace_json(t);
  j["quantity"] = t.quantity;
  return j;
}

void write_trace_csv(const ConstantTrace& t, const fs::path& path) {
  if (t.empty()) throw DomainError("trace.csv: empty trace");
  std::ostringstream os;
  if (t.quantity == "p1") {
    os << "r,p1\n";
    for (std::size_t i = 0; i < t.r.size(); ++i) {
      os << num(t.r[i]) << ',' << num(t.values[i]) << '\n';
    }
  } else {
    os << "r,Phi,Psi,m,n,hyp_ratio\n";
    for (std::size_t i = 0; i < t.r.size(); ++i) {
      os << num(t.r[i]) << ',' << num(t.phi[i]) << ',' << num(t.psi[i]) << ','
         << num(t.m[i]) << ',' << num(t.n[i]) << ',' << num(t.hyp[i]) << '\n';
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << os.str();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void emit_plot_data(const ConstantTrace& t, const fs::path& path) {
  if (t.empty() || t.m.size() != t.r.size() || t.n.size() != t.r.size()) {
    throw DomainError("emit_plot_data: trace has no m/n columns");
  }
  std::ostringstream os;
  os << "# r m n\n";
  for (std::size_t i = 0; i < t.r.size(); ++i) {
    os << num(t.r[i]) << ',' << num(t.m[i]) << ',' << num(t.n[i]) << '\n';
  }
  // Write beside the target and rename so a failure leaves no partial file.
  fs::path tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << os.str();
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed: " + path.string());
    }
  }
  fs::rename(tmp, path);
}

ojson evaluate_triple(const TripleSpec& spec, const RunSettings& settings,
                      const fs::path& trace_dir) {
  ojson rec;
  rec["label"] = spec.label;
  rec["omega"] = spec.omega;
  rec["nu"] = spec.nu;
  rec["eta"] = spec.eta;
  rec["p"] = spec.p;
  try {
    const TripleConfig cfg(parse_weight(spec.omega), parse_weight(spec.nu),
                           parse_weight(spec.eta), spec.p);
    const RadialGrid grid(settings.grid_levels, settings.grid_nodes);
    rec["classify"] = {{"omega", to_json(classify(cfg.omega, grid))},
                       {"nu", to_json(classify(cfg.nu, grid))},
                       {"eta", to_json(classify(cfg.eta, grid))}};

    if (spec.p == 1.0) {
      const auto t = p1_constant(cfg, grid);
      rec["status"] = "remark-level";
      rec["p1"] = summary_json(t);
      if (!trace_dir.empty()) {
        fs::create_directories(trace_dir);
        write_trace_csv(t, trace_dir / "trace.csv");
      }
      return rec;
    }

    const auto mp = mp_constant(cfg, grid);
    const auto np = np_constant(cfg, grid);
    const auto hyp = hypothesis_ratio(cfg, grid);
    rec["Mp"] = summary_json(mp);
    rec["Np"] = summary_json(np);
    rec["hypothesis"] = summary_json(hyp);
    rec["hypothesis"]["holds"] = hyp.verdict == Verdict::finite;
    const auto lb = necessity_lower_bound(cfg, grid);
    rec["necessity_lower_bound"] = {{"sup", jnum(lb.sup)},
                                    {"argsup", lb.argsup},
                                    {"measure", "s ds"}};
    if (!trace_dir.empty()) {
      fs::create_directories(trace_dir);
      write_trace_csv(mp, trace_dir / "trace.csv");
    }

    const KernelEvaluator k(cfg.omega);
    MeanTableOptions mopt;
    mopt.max_level = std::max(30, settings.grid_levels + 2);
    mopt.jobs = 1;
    const MeanTable means(k, 1.0, mopt);
    const auto T = assemble(cfg, grid, means);
    BoydOptions bopt;
    bopt.tolerance = settings.tol;
    const auto est = boyd_norm(T, bopt);
    const auto dual = boyd_norm(adjoint(T), bopt);
    bool monotone = true;
    for (std::size_t i = 1; i < est.trace.size(); ++i) {
      if (est.trace[i] < est.trace[i - 1] * (1.0 - 1e-12)) monotone = false;
    }
    rec["boyd"] = {{"kind", "radial-restricted estimate"},
                   {"estimate", measured(est.value, settings.tol)},
                   {"iterations", est.iterations},
                   {"converged", est.converged},
                   {"monotone", monotone},
                   {"truncation_error", jnum(T.truncation_error())},
                   {"means_extrapolated_beyond", 1.0 - means.exact_limit().gap},
                   {"adjoint_estimate", measured(dual.value, settings.tol)},
                   {"adjoint_converged", dual.converged},
                   {"adjoint_relative_difference",
                    jnum(std::abs(est.value - dual.value) / est.value)}};

    ojson lbs = ojson::array();
    double lb_max = 0.0;
    for (double t : {0.0, 0.5, 0.9, 0.99}) {
      for (double n : {1.0, 10.0, 100.0}) {
        const auto f = test_function(cfg, n, t, grid);
        double q = 0.0;
        if (std::any_of(f.begin(), f.end(), [](double v) { return v > 0.0; })) {
          q = rayleigh(T, f);
        }
        lb_max = std::max(lb_max, q);
        lbs.push_back({{"t", t}, {"n", n}, {"value", jnum(q)}});
      }
    }
    rec["testfn_lower_bounds"] = lbs;
    rec["testfn_lower_bound_max"] = jnum(lb_max);
    rec["ratio_to_Mp"] = jnum(est.value / mp.sup);
  } catch (const std::exception& e) {
    rec["error"] = e.what();
  }
  return rec;
}

namespace {

// Checks for one record; only fields already in the record are consulted.
void record_checks(const std::string& suite, ojson& rec, ojson& checks) {
  const std::string& label = rec["label"].get_ref<const std::string&>();
  if (rec.contains("error")) {
    checks.push_back(check(label + ": evaluation", false, rec["error"].get<std::string>()));
    return;
  }
  if (suite == "standard") {
    checks.push_back(check(label + ": Mp finite", rec["Mp"]["verdict"] == "finite",
                           rec["Mp"]["verdict"].get<std::string>()));
    checks.push_back(check(label + ": Np finite", rec["Np"]["verdict"] == "finite",
                           rec["Np"]["verdict"].get<std::string>()));
    checks.push_back(check(label + ": hypothesis holds", rec["hypothesis"]["holds"].get<bool>(),
                           rec["hypothesis"]["verdict"].get<std::string>()));
    const auto& b = rec["boyd"];
    checks.push_back(check(label + ": boyd converged and monotone",
                           b["converged"].get<bool>() && b["monotone"].get<bool>(),
                           "iterations " + std::to_string(b["iterations"].get<int>())));
    const double est = b["estimate"]["value"].get<double>();
    const double lb = rec["testfn_lower_bound_max"].get<double>();
    checks.push_back(check(label + ": test-function bounds <= 1.05 boyd", lb <= 1.05 * est,
                           num(lb) + " vs " + num(est)));
    const double nec = rec["necessity_lower_bound"]["sup"].get<double>();
    checks.push_back(check(label + ": necessity bound <= 1.05 boyd", nec <= 1.05 * est,
                           num(nec) + " vs " + num(est)));
    if (rec["p"].get<double>() == 2.0) {
      const double d = b["adjoint_relative_difference"].get<double>();
      checks.push_back(check(label + ": adjoint agreement", d <= 1e-3, num(d)));
    }
  } else if (suite == "counterexample") {
    checks.push_back(check(label + ": Np finite", rec["Np"]["verdict"] == "finite",
                           rec["Np"]["verdict"].get<std::string>()));
    checks.push_back(check(label + ": Mp diverging", rec["Mp"]["verdict"] == "diverging",
                           rec["Mp"]["verdict"].get<std::string>()));
  } else if (suite == "p1") {
    const std::string expected = label == "p1_unweighted" ? "diverging" : "finite";
    checks.push_back(check(label + ": p1 constant " + expected,
                           rec["p1"]["verdict"] == expected,
                           rec["p1"]["verdict"].get<std::string>()));
  } else {
    // custom: every module ran; an operator estimate must have converged.
    if (rec.contains("boyd")) {
      checks.push_back(check(label + ": boyd converged", rec["boyd"]["converged"].get<bool>(),
                             "iterations " + std::to_string(rec["boyd"]["iterations"].get<int>())));
    } else {
      checks.push_back(check(label + ": evaluation", true, "completed"));
    }
  }
}

std::string suite_of(const SweepConfig& cfg, const TripleSpec& t) {
  if (cfg.suite != "all") return cfg.suite;
  if (t.label.rfind("std_", 0) == 0) return "standard";
  if (t.label.rfind("cex_", 0) == 0) return "counterexample";
  return "p1";
}

}  // namespace

SuiteResult run_suite(const SweepConfig& cfg) {
  validate(cfg);
  const auto triples = suite_triples(cfg);
  const auto& s = cfg.settings;
  fs::create_directories(s.out);

  std::vector<ojson> records(triples.size());
  const unsigned jobs = std::max(1u, s.jobs);
  // Each worker owns the indices i = w (mod jobs); results land by index.
  std::vector<std::future<void>> workers;
  for (unsigned w = 0; w < std::min<std::size_t>(jobs, triples.size()); ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < triples.size(); i += jobs) {
        records[i] = evaluate_triple(triples[i], s, s.out / sanitize(triples[i].label));
      }
    }));
  }
  for (auto& f : workers) f.get();

  ojson checks = ojson::array();
  double band_lo = INFINITY, band_hi = 0.0;
  bool any_standard = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string suite = suite_of(cfg, triples[i]);
    record_checks(suite, records[i], checks);
    if (suite == "standard" && records[i].contains("ratio_to_Mp")) {
      const double r = records[i]["ratio_to_Mp"].get<double>();
      band_lo = std::min(band_lo, r);
      band_hi = std::max(band_hi, r);
      any_standard = true;
    }
  }
  ojson band = nullptr;
  if (any_standard) {
    const double width = band_hi / band_lo;
    band = {{"min", band_lo}, {"max", band_hi}, {"width", jnum(width)}};
    checks.push_back(check("boyd/Mp band width <= 100", width <= 100.0, num(width)));
  }

  bool pass = true;
  for (const auto& c : checks) pass = pass && c["pass"].get<bool>();

  ojson report;
  report["schema"] = kReportSchema;
  report["provenance"] = {{"code_version", kVersion},
                          {"suite", cfg.suite},
                          {"grid_levels", s.grid_levels},
                          {"grid_nodes", s.grid_nodes},
                          {"boyd_tolerance", s.tol},
                          {"quadrature_tolerance", QuadratureOptions{}.tolerance},
                          {"kernel_tail_tolerance", KernelOptions{}.tail_tolerance},
                          {"verdict_rule",
                           {{"window", VerdictRule{}.window},
                            {"growth", VerdictRule{}.growth},
                            {"plateau", VerdictRule{}.plateau}}}};
  report["configurations"] = records;
  report["band"] = band;
  report["checks"] = checks;
  report["pass"] = pass;

  SuiteResult result;
  result.report = report;
  result.exit_code = pass ? 0 : 1;
  std::ofstream out(s.out / "report.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report.json");
  out << report.dump(2) << '\n';
  return result;
}

}  // namespace bergman
