#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "attain/cp.hpp"

namespace attain {

/// Monte Carlo studies shipped with the CLI. Each kind samples seeded random
/// instances, runs the matching solver pipeline, and tabulates one row per
/// trial (WitnessLimit: one row per trial and step size).
enum class ExperimentKind {
    RealVsComplex2x2x2,  // random real 2x2x2: classifier sign vs solver fate on both fields
    WitnessLimit,        // rank-2 difference quotients closing in on a border-rank-2 tangent
    RestartUniqueness,   // spread of final residuals across independent restarts
    Completion,          // planted low-rank recovery from a random observation mask
    SPLR,                // planted sparse-plus-low-rank recovery with free support
    BlockTerm,           // planted two-block multilinear-rank sum
};

const char* experiment_kind_name(ExperimentKind k);
ExperimentKind experiment_kind_from_name(const std::string& s);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::RealVsComplex2x2x2;
    int trials = 100;
    std::uint64_t seed = 0;
    std::vector<std::size_t> dims;                        // empty = kind default
    std::size_t rank = 2;
    std::vector<std::vector<std::size_t>> block_ranks;    // BlockTerm; empty = {{2,2,2},{1,1,1}}
    double fill = 0.7;                                    // Completion observed fraction
    std::size_t sparsity = 4;                             // SPLR free-support budget
    std::vector<double> t_grid = {1e-1, 1e-2, 1e-3};      // WitnessLimit step sizes
    SolveOptions options;                                 // options.seed is ignored; seed above rules
    std::string out_dir;                                  // empty = do not write files

    void validate() const;
    /// dims with the kind default filled in.
    std::vector<std::size_t> effective_dims() const;
    std::vector<std::vector<std::size_t>> effective_block_ranks() const;
};

using CellValue = std::variant<std::int64_t, double, std::string>;

/// One table row; cells are ordered and share one schema across the report.
struct ExperimentRow {
    std::vector<std::pair<std::string, CellValue>> cells;

    const CellValue& at(const std::string& name) const;
    double number(const std::string& name) const;
};

struct ExperimentReport {
    std::string artifact_version;
    ExperimentConfig config;
    std::string csv_header;  // bit-exact documented header for this kind
    std::vector<std::string> csv_columns;
    std::vector<ExperimentRow> rows;
    std::vector<std::pair<std::string, double>> summary;
};

/// Documented CSV header for a kind, e.g.
/// "trial,delta_sign,real_status,real_kappa,complex_residual".
std::string experiment_csv_header(ExperimentKind k);

/// Runs all trials (in parallel when TENSOR_ATTAIN_THREADS > 1; rows land in
/// trial order either way) and, when config.out_dir is set, writes
/// <kind>.csv and <kind>.json into it. Rerunning a config reproduces the
/// rows bit for bit; only the JSON timestamp differs.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// CSV table of the report: pinned header line, then one line per row with
/// doubles printed via "%.17g".
std::string experiment_csv(const ExperimentReport& report);

void write_experiment_files(const ExperimentReport& report, const std::string& dir);

}  // namespace attain
