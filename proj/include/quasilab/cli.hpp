#pragma once

#include "quasilab/freqcond.hpp"
#include "quasilab/montecarlo.hpp"
#include "quasilab/potential.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace quasilab::cli {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: a failed Gordon check is a result, not a fault.
enum ExitCode : int { kPass = 0, kGordonFail = 1, kFault = 2 };

/// Experiment description. Schema (all objects reject unknown keys):
///
///   experiment   one of freq-search, interleave, measure-zero, measure-probe,
///                gordon-check, spectrum, transport
///   frequencies  [ {rule, ...rule parameters, depth?} ]
///   potential    {family, d, ...family parameters}
///   params       experiment-specific numbers (see README)
///   mc           {samples, seed, chunk_size}
///   output       directory for CSV files and manifest.json
struct ExperimentConfig {
    std::string experiment;
    std::vector<contfrac::Frequency> frequencies;
    std::optional<potential::PotentialSpec> potential;
    json params = json::object();
    mc::Params mc;
    std::string output = "out";
    json raw; // the document as given
};

contfrac::Frequency parse_frequency(const json& j);
potential::PotentialSpec parse_potential(const json& j);

/// Validates every section, including parameter ranges for the named
/// experiment. Throws ConfigError.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);

struct RunOptions {
    std::optional<std::uint64_t> seed; // overrides mc.seed
    std::optional<std::string> out_dir; // overrides output
    unsigned threads = 1;
};

/// Runs the experiment, writes <out>/<experiment>.csv and <out>/manifest.json.
/// Returns kPass or kGordonFail; module and I/O errors propagate.
int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

struct TrendRow {
    std::string manifest;
    std::vector<long long> tau;
    double tau_product = 0.0;
    double margin_log = 0.0;
    bool pass = false;
};

/// Per-tau Gordon rows from the given manifests, sorted by tau product.
std::vector<TrendRow> collect_trend(const std::vector<std::string>& manifests);
std::string trend_csv(const std::vector<TrendRow>& rows);

/// Full command line entry point: parses arguments, runs, maps errors to kFault.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

/// "%.17g"
std::string format_double(double x);

} // namespace quasilab::cli
