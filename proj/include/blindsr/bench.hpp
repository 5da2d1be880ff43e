#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blindsr/model.hpp"
#include "blindsr/solver.hpp"

/// Monte-Carlo experiment harness: phase transitions over (s, r) and (n, K),
/// convergence traces across condition numbers, SNR sweeps and the full
/// localization pipeline.
///
/// Every trial draws its instance from a seed that depends only on seed0, the
/// cell's axis values and the trial index, so any cell can be replayed alone
/// and results do not depend on scheduling.
namespace blindsr::bench {

using linalg::Index;

enum class Family { phase_sr, phase_nk, cond, noise, end2end };

std::string to_string(Family f);
Family      parse_family(const std::string& text);

inline constexpr const char* kToolVersion = "blindsr 1.0.0";

struct ExperimentSpec {
    Family family = Family::phase_sr;

    // Fixed dimensions; the swept ones are ignored.
    Index n = 48;
    Index K = 2;
    Index s = 2;
    Index r = 2;

    std::vector<Index>  s_values;   // phase_sr rows
    std::vector<Index>  r_values;   // phase_sr cols
    std::vector<Index>  n_values;   // phase_nk rows
    std::vector<Index>  K_values;   // phase_nk cols
    std::vector<double> kappas;     // cond
    std::vector<double> snrs_db;    // noise; +inf is the noiseless control

    model::InstanceMode mode  = model::InstanceMode::random;
    double              kappa = 1.0;  // conditioned instances outside cond

    Index         trials      = 20;
    double        success_tol = 1e-3;
    std::uint64_t seed0       = 1;
    bool          full        = false;
    unsigned      threads     = 0;  // 0: default_thread_count()

    solver::SolverConfig solver;
    /// Iteration budget for the vanilla baseline in cond runs.
    Index vanilla_max_iters = 3000;

    void validate() const;

    /// Desk-scale (or, with full, figure-scale) defaults for a family.
    static ExperimentSpec defaults(Family family, bool full = false);
};

/// exp v1 documents. Unknown keys are rejected; absent keys keep defaults.
nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);
ExperimentSpec load_spec(const std::filesystem::path& path);

struct TrialOutcome {
    double      rel_err = 0.0;  // +inf when the solver failed
    bool        success = false;
    Index       iterations = 0;
    std::string failure;        // empty unless a numerical error stopped the trial
};

/// Instance seed for one trial of one cell. `a` and `b` are the cell's axis values.
std::uint64_t trial_seed(std::uint64_t seed0, Family family, std::uint64_t a, std::uint64_t b,
                         Index trial);

/// Generates, senses and solves one benchmark-mode trial.
TrialOutcome run_trial(const ExperimentSpec& spec, const model::InstanceRecipe& recipe,
                       const model::Dims& dims, std::uint64_t seed, double snr_db = model::kNoiseless);

struct ResultGrid {
    std::string         row_label;
    std::string         col_label;
    std::string         value_label;
    std::vector<double> row_values;
    std::vector<double> col_values;
    linalg::RMatrix     values;  // rows x cols
    /// seeds[i][j][t]: instance seed of trial t in cell (i, j).
    std::vector<std::vector<std::vector<std::uint64_t>>> seeds;
};

/// Success rate of one (s, r) cell; identical to the corresponding grid entry.
double run_phase_sr_cell(const ExperimentSpec& spec, Index s, Index r);
double run_phase_nk_cell(const ExperimentSpec& spec, Index n, Index K);

ResultGrid run_phase_sr(const ExperimentSpec& spec);
ResultGrid run_phase_nk(const ExperimentSpec& spec);

/// Least-squares slope c of n = c K through the 50% success boundary of an
/// (n, K) grid; nullopt when no column crosses 0.5.
std::optional<double> fit_boundary_slope(const ResultGrid& grid);

struct CondTrace {
    double                        kappa = 1.0;
    solver::StepMode              mode  = solver::StepMode::scaled;
    Index                         trial = 0;
    std::vector<solver::TraceRow> rows;
    std::optional<Index>          iters_to_1e4;
    std::optional<Index>          iters_to_1e3;
    double                        r_squared = 0.0;  // log-linear fit of the decay
    std::string                   failure;
};

struct CondResult {
    std::vector<CondTrace> traces;
};

/// Coefficient of determination of log10(rel_err) against iteration over rows
/// with iter >= first_iter and rel_err > floor.
double log_linear_r2(const std::vector<solver::TraceRow>& rows, Index first_iter, double floor);

CondResult run_cond(const ExperimentSpec& spec);

struct NoiseRow {
    double              snr_db = 0.0;
    double              median_rel_err = 0.0;
    std::vector<double> errors;
};

struct NoiseResult {
    std::vector<NoiseRow> rows;
};

NoiseResult run_noise(const ExperimentSpec& spec);

struct SpikeReport {
    Index  k = 0;
    Index  p = 0;
    double tau_true = 0.0;
    double tau_hat  = 0.0;
    double location_error = 0.0;
    double product_rel_err = 0.0;
};

struct EndToEndReport {
    std::uint64_t            seed = 0;
    double                   matrix_rel_err = 0.0;
    Index                    iterations = 0;
    std::vector<SpikeReport> spikes;
    double                   max_location_error = 0.0;
    double                   max_product_rel_err = 0.0;
    double                   coefficient_residual = 0.0;
};

EndToEndReport run_end2end(const ExperimentSpec& spec);

// --- output -----------------------------------------------------------------

/// Long-format grid CSV: "<row>,<col>,<value>", values in shortest
/// round-trip decimal form.
void       write_grid_csv(std::ostream& os, const ResultGrid& grid);
ResultGrid read_grid_csv(std::istream& is);

void write_cond_csv(std::ostream& os, const CondResult& result);
void write_noise_csv(std::ostream& os, const NoiseResult& result);
void write_end2end_csv(std::ostream& os, const EndToEndReport& report);

/// Greyscale heatmap (white = 1, black = 0) with an optional overlay curve.
/// Cells are <rect class="cell" data-row data-col data-value>.
struct Overlay {
    enum class Kind { none, hyperbola, line } kind = Kind::none;
    double constant = 0.0;  // row*col = constant, or row = constant * col
};
std::string heatmap_svg(const ResultGrid& grid, const std::string& title, const Overlay& overlay);

struct Series {
    std::string         label;
    std::vector<double> x;
    std::vector<double> y;
    bool                dashed = false;
};
/// Line chart; log_y plots log10 of y.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label, bool log_y);

/// Runs the spec's family and writes grid.csv, plot.svg and manifest.json under
/// <outdir>/<family>/. Returns the directory written.
std::filesystem::path run_and_emit(const ExperimentSpec& spec, const std::filesystem::path& outdir);

}  // namespace blindsr::bench
