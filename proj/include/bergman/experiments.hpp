#pragma once
//
// Sweep orchestration and report emission.
//

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bergman/characterization.hpp"

namespace bergman {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kReportSchema = 1;

struct RunSettings {
  int grid_levels = 24;
  int grid_nodes = 16;
  double tol = 1e-6;  ///< Boyd iteration tolerance
  unsigned jobs = 1;
  std::filesystem::path out = "out";
};

struct TripleSpec {
  std::string label;
  std::string omega, nu, eta;
  double p = 2.0;
};

struct SweepConfig {
  std::string suite = "standard";  ///< standard | counterexample | p1 | all | custom
  std::vector<TripleSpec> triples;  ///< used by the custom suite
  RunSettings settings;
};

/// Triples of the named suite ("custom" returns cfg.triples).
std::vector<TripleSpec> suite_triples(const SweepConfig& cfg);

/// Thrown for malformed configurations (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a JSON sweep file; keys mirror the command-line flags.
SweepConfig load_sweep_config(const std::filesystem::path& path);
/// Parses every weight spec of the sweep; throws ConfigError with the
/// diagnostics of all malformed entries.
void validate(const SweepConfig& cfg);

struct SuiteResult {
  nlohmann::ordered_json report;
  int exit_code = 0;
};

/// classify -> constants -> norm for every triple; writes report.json and one
/// trace.csv per triple under settings.out. Triples run in parallel up to
/// settings.jobs; the report is assembled in configuration order.
SuiteResult run_suite(const SweepConfig& cfg);

/// Per-triple record (also used by the `norm` subcommand).
nlohmann::ordered_json evaluate_triple(const TripleSpec& spec,
                                       const RunSettings& settings,
                                       const std::filesystem::path& trace_dir);

/// CSV of r, m(r), n(r) with a '#' header. Throws on an empty trace without
/// creating the file.
void emit_plot_data(const ConstantTrace& trace, const std::filesystem::path& path);

/// CSV of r, Phi, Psi, m, n, hyp_ratio.
void write_trace_csv(const ConstantTrace& trace, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const WeightClassReport& rep);
nlohmann::ordered_json summary_json(const ConstantTrace& t);

}  // namespace bergman
