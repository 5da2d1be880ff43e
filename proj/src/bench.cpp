#include "blindsr/bench.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "blindsr/parallel.hpp"
#include "blindsr/post.hpp"
#include "blindsr/rng.hpp"

namespace blindsr::bench {

using json = nlohmann::json;
using linalg::format_double;

std::string to_string(Family f)
{
    switch (f) {
    case Family::phase_sr: return "phase_sr";
    case Family::phase_nk: return "phase_nk";
    case Family::cond: return "cond";
    case Family::noise: return "noise";
    case Family::end2end: return "end2end";
    }
    return "?";
}

Family parse_family(const std::string& text)
{
    for (Family f : {Family::phase_sr, Family::phase_nk, Family::cond, Family::noise,
                     Family::end2end}) {
        if (to_string(f) == text) return f;
    }
    throw ValidationError("unknown experiment family '" + text + "'");
}

namespace {

std::vector<Index> range(Index lo, Index hi, Index step = 1)
{
    std::vector<Index> out;
    for (Index v = lo; v <= hi; v += step) out.push_back(v);
    return out;
}

unsigned worker_count(const ExperimentSpec& spec)
{
    return spec.threads ? spec.threads : default_thread_count();
}

double median(std::vector<double> v)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

model::InstanceRecipe recipe_for(const ExperimentSpec& spec, double kappa)
{
    model::InstanceRecipe recipe;
    recipe.mode = spec.mode;
    if (spec.mode == model::InstanceMode::conditioned) recipe.kappa = kappa;
    return recipe;
}

}  // namespace

ExperimentSpec ExperimentSpec::defaults(Family family, bool full)
{
    ExperimentSpec spec;
    spec.family = family;
    spec.full   = full;
    switch (family) {
    case Family::phase_sr:
        spec.n = 48;
        spec.K = 2;
        spec.s_values = full ? range(1, 12) : range(1, 8);
        spec.r_values = full ? range(1, 12) : range(1, 8);
        spec.mode     = model::InstanceMode::random;
        spec.solver.max_iters = 500;
        spec.solver.tol       = spec.success_tol;
        break;
    case Family::phase_nk:
        spec.s = 3;
        spec.r = 3;
        spec.n_values = full ? range(16, 128, 8) : range(16, 64, 8);
        spec.K_values = full ? range(1, 10) : range(1, 6);
        spec.mode     = model::InstanceMode::separated;
        spec.solver.max_iters = 500;
        spec.solver.tol       = spec.success_tol;
        break;
    case Family::cond:
        spec.n      = full ? 512 : 128;
        spec.s      = full ? 4 : 2;
        spec.r      = spec.s;
        spec.K      = full ? 6 : 2;
        spec.kappas = {1.0, 5.0, 10.0, 20.0};
        spec.mode   = model::InstanceMode::conditioned;
        spec.trials = 1;
        spec.solver.max_iters = 150;
        spec.solver.tol       = 1e-10;
        break;
    case Family::noise:
        spec.n = full ? 512 : 256;
        spec.s = full ? 4 : 2;
        spec.r = spec.s;
        spec.K = full ? 6 : 4;
        for (int snr = 0; snr <= 60; snr += 10) spec.snrs_db.push_back(snr);
        spec.mode  = model::InstanceMode::conditioned;
        spec.kappa = 1.0;
        spec.solver.max_iters = 80;
        spec.solver.tol       = 0.0;
        break;
    case Family::end2end:
        spec.n = 256;
        spec.s = 4;
        spec.r = 4;
        spec.K = 2;
        spec.mode   = model::InstanceMode::separated;
        spec.trials = 1;
        spec.solver.max_iters = 100;
        spec.solver.tol       = 0.0;
        break;
    }
    return spec;
}

void ExperimentSpec::validate() const
{
    if (trials < 1) throw ValidationError("experiment: trials must be >= 1");
    if (!(success_tol > 0.0)) throw ValidationError("experiment: success_tol must be > 0");
    if (mode == model::InstanceMode::conditioned && !(kappa >= 1.0)) {
        throw ValidationError("experiment: kappa must be >= 1");
    }
    solver.validate();
    switch (family) {
    case Family::phase_sr:
        if (s_values.empty() || r_values.empty()) {
            throw ValidationError("phase_sr: s and r ranges must be nonempty");
        }
        break;
    case Family::phase_nk:
        if (n_values.empty() || K_values.empty()) {
            throw ValidationError("phase_nk: n and K ranges must be nonempty");
        }
        break;
    case Family::cond:
        if (kappas.empty()) throw ValidationError("cond: kappa list must be nonempty");
        for (double k : kappas) {
            if (!(k >= 1.0)) throw ValidationError("cond: every kappa must be >= 1");
        }
        if (vanilla_max_iters < 0) throw ValidationError("cond: vanilla_max_iters must be >= 0");
        break;
    case Family::noise:
        if (snrs_db.empty()) throw ValidationError("noise: SNR list must be nonempty");
        break;
    case Family::end2end: break;
    }
}

// --- exp v1 -------------------------------------------------------------------

namespace {

json snr_json(double v)
{
    return std::isinf(v) && v > 0 ? json("inf") : json(v);
}

double snr_from(const json& j)
{
    if (j.is_string() && j.get<std::string>() == "inf") return model::kNoiseless;
    if (j.is_number()) return j.get<double>();
    throw ParseError("exp v1: SNR values are numbers or \"inf\"");
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where)
{
    if (!j.is_object()) throw ParseError(where + " must be an object");
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw ParseError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

}  // namespace

json to_json(const ExperimentSpec& spec)
{
    json j;
    j["schema"]   = "exp v1";
    j["family"]   = to_string(spec.family);
    j["n"]        = spec.n;
    j["K"]        = spec.K;
    j["s"]        = spec.s;
    j["r"]        = spec.r;
    j["s_values"] = spec.s_values;
    j["r_values"] = spec.r_values;
    j["n_values"] = spec.n_values;
    j["K_values"] = spec.K_values;
    j["kappas"]   = spec.kappas;
    json snrs     = json::array();
    for (double v : spec.snrs_db) snrs.push_back(snr_json(v));
    j["snrs_db"]     = std::move(snrs);
    j["mode"]        = model::to_string(spec.mode);
    j["kappa"]       = spec.kappa;
    j["trials"]      = spec.trials;
    j["success_tol"] = spec.success_tol;
    j["seed0"]       = spec.seed0;
    j["full"]        = spec.full;
    j["vanilla_max_iters"] = spec.vanilla_max_iters;
    json s;
    s["eta"]        = spec.solver.eta;
    s["max_iters"]  = spec.solver.max_iters;
    s["tol"]        = spec.solver.tol;
    s["mode"]       = solver::to_string(spec.solver.mode);
    s["init"]       = spec.solver.init == solver::InitMode::hankel ? "hankel" : "weighted";
    s["parallel_k"] = spec.solver.parallel_k;
    if (spec.solver.vanilla_eta) s["vanilla_eta"] = *spec.solver.vanilla_eta;
    j["solver"] = std::move(s);
    return j;
}

ExperimentSpec spec_from_json(const json& j)
{
    reject_unknown(j,
                   {"schema", "family", "n", "K", "s", "r", "s_values", "r_values", "n_values",
                    "K_values", "kappas", "snrs_db", "mode", "kappa", "trials", "success_tol",
                    "seed0", "full", "vanilla_max_iters", "solver", "threads"},
                   "exp v1");
    if (j.value("schema", "") != "exp v1") throw ParseError("exp v1: schema must be 'exp v1'");
    try {
        ExperimentSpec spec =
            ExperimentSpec::defaults(parse_family(j.at("family").get<std::string>()),
                                     j.value("full", false));
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
        };
        get("n", spec.n);
        get("K", spec.K);
        get("s", spec.s);
        get("r", spec.r);
        get("s_values", spec.s_values);
        get("r_values", spec.r_values);
        get("n_values", spec.n_values);
        get("K_values", spec.K_values);
        get("kappas", spec.kappas);
        if (j.contains("snrs_db")) {
            spec.snrs_db.clear();
            for (const auto& v : j["snrs_db"]) spec.snrs_db.push_back(snr_from(v));
        }
        if (j.contains("mode")) spec.mode = model::parse_instance_mode(j["mode"].get<std::string>());
        get("kappa", spec.kappa);
        get("trials", spec.trials);
        get("success_tol", spec.success_tol);
        get("seed0", spec.seed0);
        get("threads", spec.threads);
        get("vanilla_max_iters", spec.vanilla_max_iters);
        if (j.contains("solver")) {
            const json& s = j["solver"];
            reject_unknown(s, {"eta", "max_iters", "tol", "mode", "init", "parallel_k", "vanilla_eta"},
                           "exp v1 solver");
            if (s.contains("eta")) spec.solver.eta = s["eta"].get<double>();
            if (s.contains("max_iters")) spec.solver.max_iters = s["max_iters"].get<Index>();
            if (s.contains("tol")) spec.solver.tol = s["tol"].get<double>();
            if (s.contains("mode")) spec.solver.mode = solver::parse_step_mode(s["mode"].get<std::string>());
            if (s.contains("init")) {
                const auto init = s["init"].get<std::string>();
                if (init == "hankel") spec.solver.init = solver::InitMode::hankel;
                else if (init == "weighted") spec.solver.init = solver::InitMode::weighted;
                else throw ValidationError("unknown init mode '" + init + "'");
            }
            if (s.contains("parallel_k")) spec.solver.parallel_k = s["parallel_k"].get<bool>();
            if (s.contains("vanilla_eta")) spec.solver.vanilla_eta = s["vanilla_eta"].get<double>();
        }
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw ParseError(std::string("exp v1: ") + e.what());
    }
}

ExperimentSpec load_spec(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw IOError("cannot open " + path.string());
    try {
        return spec_from_json(json::parse(is));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// --- trials -------------------------------------------------------------------

std::uint64_t trial_seed(std::uint64_t seed0, Family family, std::uint64_t a, std::uint64_t b,
                         Index trial)
{
    return derive_seed(seed0, {static_cast<std::uint64_t>(family), a, b,
                               static_cast<std::uint64_t>(trial)});
}

TrialOutcome run_trial(const ExperimentSpec& spec, const model::InstanceRecipe& recipe,
                       const model::Dims& dims, std::uint64_t seed, double snr_db)
{
    TrialOutcome out;
    out.rel_err = std::numeric_limits<double>::infinity();
    try {
        const auto gt = model::generate_instance(recipe, dims, seed);
        const auto xs = model::build_data_matrices(gt);
        auto       y  = model::sense_forward(gt.bases, xs);
        if (!(std::isinf(snr_db) && snr_db > 0)) {
            y = model::add_noise(y, snr_db, derive_seed(seed, {std::bit_cast<std::uint64_t>(snr_db)})).y;
        }
        solver::SolverConfig config = spec.solver;
        config.rank                 = dims.r;
        const auto trace            = solver::run(y, gt.bases, config, &xs);
        out.rel_err                 = trace.final_error();
        out.iterations              = trace.iterations;
    } catch (const NumericalError& e) {
        out.failure = e.what();
    } catch (const DimensionError& e) {
        out.failure = e.what();
    }
    out.success = out.rel_err <= spec.success_tol;
    return out;
}

namespace {

struct CellJob {
    Index         row;
    Index         col;
    Index         trial;
    std::uint64_t seed;
    model::Dims   dims;
};

ResultGrid run_grid(const ExperimentSpec& spec, const std::vector<Index>& rows,
                    const std::vector<Index>& cols,
                    const std::function<model::Dims(Index, Index)>& dims_for,
                    const char* row_label, const char* col_label)
{
    spec.validate();
    ResultGrid grid;
    grid.row_label   = row_label;
    grid.col_label   = col_label;
    grid.value_label = "success_rate";
    grid.row_values.assign(rows.begin(), rows.end());
    grid.col_values.assign(cols.begin(), cols.end());
    grid.values = linalg::RMatrix::Zero(rows.size(), cols.size());
    grid.seeds.assign(rows.size(), std::vector<std::vector<std::uint64_t>>(cols.size()));

    std::vector<CellJob> jobs;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            for (Index t = 0; t < spec.trials; ++t) {
                const auto seed = trial_seed(spec.seed0, spec.family, rows[i], cols[j], t);
                grid.seeds[i][j].push_back(seed);
                jobs.push_back({static_cast<Index>(i), static_cast<Index>(j), t, seed,
                                dims_for(rows[i], cols[j])});
            }
        }
    }
    const auto        recipe = recipe_for(spec, spec.kappa);
    std::vector<char> success(jobs.size(), 0);
    parallel_for(jobs.size(), worker_count(spec), [&](std::size_t idx) {
        success[idx] = run_trial(spec, recipe, jobs[idx].dims, jobs[idx].seed).success;
    });
    for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
        grid.values(jobs[idx].row, jobs[idx].col) += success[idx];
    }
    grid.values /= static_cast<double>(spec.trials);
    return grid;
}

double run_cell(const ExperimentSpec& spec, Index a, Index b, const model::Dims& dims)
{
    const auto recipe = recipe_for(spec, spec.kappa);
    Index      hits   = 0;
    for (Index t = 0; t < spec.trials; ++t) {
        hits += run_trial(spec, recipe, dims, trial_seed(spec.seed0, spec.family, a, b, t)).success;
    }
    return static_cast<double>(hits) / static_cast<double>(spec.trials);
}

}  // namespace

double run_phase_sr_cell(const ExperimentSpec& spec, Index s, Index r)
{
    return run_cell(spec, s, r, {spec.K, r, s, spec.n});
}

double run_phase_nk_cell(const ExperimentSpec& spec, Index n, Index K)
{
    return run_cell(spec, n, K, {K, spec.r, spec.s, n});
}

ResultGrid run_phase_sr(const ExperimentSpec& spec)
{
    if (spec.family != Family::phase_sr) throw ValidationError("run_phase_sr: wrong family");
    return run_grid(
        spec, spec.s_values, spec.r_values,
        [&](Index s, Index r) { return model::Dims{spec.K, r, s, spec.n}; }, "s", "r");
}

ResultGrid run_phase_nk(const ExperimentSpec& spec)
{
    if (spec.family != Family::phase_nk) throw ValidationError("run_phase_nk: wrong family");
    return run_grid(
        spec, spec.n_values, spec.K_values,
        [&](Index n, Index K) { return model::Dims{K, spec.r, spec.s, n}; }, "n", "K");
}

std::optional<double> fit_boundary_slope(const ResultGrid& grid)
{
    // For each K column take the smallest n whose success rate reaches 0.5.
    double num = 0.0, den = 0.0;
    for (Index j = 0; j < grid.values.cols(); ++j) {
        for (Index i = 0; i < grid.values.rows(); ++i) {
            if (grid.values(i, j) >= 0.5) {
                num += grid.row_values[i] * grid.col_values[j];
                den += grid.col_values[j] * grid.col_values[j];
                break;
            }
        }
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

// --- cond -----------------------------------------------------------------------

double log_linear_r2(const std::vector<solver::TraceRow>& rows, Index first_iter, double floor)
{
    std::vector<double> xs, ys;
    for (const auto& row : rows) {
        if (row.iter < first_iter) continue;
        if (!(row.rel_err > floor) || !std::isfinite(row.rel_err)) break;
        xs.push_back(static_cast<double>(row.iter));
        ys.push_back(std::log10(row.rel_err));
    }
    if (xs.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    const double n  = static_cast<double>(xs.size());
    double       mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (syy == 0.0) return 1.0;
    return (sxy * sxy) / (sxx * syy);
}

CondResult run_cond(const ExperimentSpec& spec)
{
    if (spec.family != Family::cond) throw ValidationError("run_cond: wrong family");
    spec.validate();
    struct Job {
        double           kappa;
        solver::StepMode mode;
        Index            trial;
    };
    std::vector<Job> jobs;
    for (double kappa : spec.kappas) {
        for (Index t = 0; t < spec.trials; ++t) {
            jobs.push_back({kappa, solver::StepMode::scaled, t});
            jobs.push_back({kappa, solver::StepMode::vanilla, t});
        }
    }
    CondResult result;
    result.traces.resize(jobs.size());
    const model::Dims dims{spec.K, spec.r, spec.s, spec.n};
    parallel_for(jobs.size(), worker_count(spec), [&](std::size_t idx) {
        const Job& job   = jobs[idx];
        CondTrace& out   = result.traces[idx];
        out.kappa        = job.kappa;
        out.mode         = job.mode;
        out.trial        = job.trial;
        // Matched seeds: the instance depends on the trial only, so every kappa
        // shares locations, phases, coefficients and bases.
        model::InstanceRecipe recipe;
        recipe.mode  = model::InstanceMode::conditioned;
        recipe.kappa = job.kappa;
        try {
            const auto gt = model::generate_instance(
                recipe, dims, trial_seed(spec.seed0, Family::cond, 0, 0, job.trial));
            const auto xs     = model::build_data_matrices(gt);
            const auto y      = model::sense_forward(gt.bases, xs);
            auto       config = spec.solver;
            config.rank       = spec.r;
            config.mode       = job.mode;
            if (job.mode == solver::StepMode::vanilla) config.max_iters = spec.vanilla_max_iters;
            const auto trace  = solver::run(y, gt.bases, config, &xs);
            out.rows          = trace.rows;
            out.iters_to_1e4  = trace.iterations_to(1e-4);
            out.iters_to_1e3  = trace.iterations_to(1e-3);
            out.r_squared     = log_linear_r2(trace.rows, 5, std::max(spec.solver.tol, 1e-12));
        } catch (const NumericalError& e) {
            out.failure = e.what();
        }
    });
    return result;
}

// --- noise ----------------------------------------------------------------------

NoiseResult run_noise(const ExperimentSpec& spec)
{
    if (spec.family != Family::noise) throw ValidationError("run_noise: wrong family");
    spec.validate();
    const model::Dims dims{spec.K, spec.r, spec.s, spec.n};
    const auto        recipe = recipe_for(spec, spec.kappa);
    const std::size_t T      = static_cast<std::size_t>(spec.trials);
    std::vector<double> errors(spec.snrs_db.size() * T);
    parallel_for(errors.size(), worker_count(spec), [&](std::size_t idx) {
        const std::size_t i = idx / T;
        const Index       t = static_cast<Index>(idx % T);
        // Matched instances across SNR; only the noise draw changes.
        errors[idx] = run_trial(spec, recipe, dims, trial_seed(spec.seed0, Family::noise, 0, 0, t),
                                spec.snrs_db[i])
                          .rel_err;
    });
    NoiseResult result;
    for (std::size_t i = 0; i < spec.snrs_db.size(); ++i) {
        NoiseRow row;
        row.snr_db = spec.snrs_db[i];
        row.errors.assign(errors.begin() + i * T, errors.begin() + (i + 1) * T);
        row.median_rel_err = median(row.errors);
        result.rows.push_back(std::move(row));
    }
    return result;
}

// --- end-to-end ---------------------------------------------------------------

EndToEndReport run_end2end(const ExperimentSpec& spec)
{
    if (spec.family != Family::end2end) throw ValidationError("run_end2end: wrong family");
    spec.validate();
    const model::Dims dims{spec.K, spec.r, spec.s, spec.n};
    EndToEndReport    report;
    report.seed    = trial_seed(spec.seed0, Family::end2end, 0, 0, 0);
    const auto gt  = model::generate_instance(recipe_for(spec, spec.kappa), dims, report.seed);
    const auto xs  = model::build_data_matrices(gt);
    const auto y   = model::sense_forward(gt.bases, xs);
    auto config    = spec.solver;
    config.rank    = spec.r;
    const auto trace      = solver::run(y, gt.bases, config, &xs);
    report.matrix_rel_err = trace.final_error();
    report.iterations     = trace.iterations;

    std::vector<std::vector<double>> taus_hat(dims.K), taus_true(dims.K);
    std::vector<post::MusicResult>   music(dims.K);
    parallel_for(dims.K, worker_count(spec),
                 [&](std::size_t k) { music[k] = post::smoothed_music(trace.estimates[k], dims.r); });
    for (Index k = 0; k < dims.K; ++k) {
        taus_hat[k] = music[k].taus;
        for (Index p = 0; p < dims.r; ++p) taus_true[k].push_back(gt.taus(k, p));
    }
    const auto coeffs  = post::recover_coefficients(taus_hat, gt.bases, y);
    report.coefficient_residual = coeffs.residual;
    const auto matches = post::match_and_score(taus_hat, taus_true);
    for (Index k = 0; k < dims.K; ++k) {
        for (Index p = 0; p < dims.r; ++p) {
            const Index   q     = matches[k].assignment[p];
            const auto    truth = gt.product(k, p);
            SpikeReport   s;
            s.k               = k;
            s.p               = p;
            s.tau_true        = gt.taus(k, p);
            s.tau_hat         = taus_hat[k][q];
            s.location_error  = matches[k].errors[p];
            s.product_rel_err = (coeffs.products[k][q] - truth).norm() / truth.norm();
            report.max_location_error  = std::max(report.max_location_error, s.location_error);
            report.max_product_rel_err = std::max(report.max_product_rel_err, s.product_rel_err);
            report.spikes.push_back(s);
        }
    }
    return report;
}

// --- CSV ------------------------------------------------------------------------

void write_grid_csv(std::ostream& os, const ResultGrid& grid)
{
    os << grid.row_label << ',' << grid.col_label << ',' << grid.value_label << '\n';
    for (Index i = 0; i < grid.values.rows(); ++i) {
        for (Index j = 0; j < grid.values.cols(); ++j) {
            os << format_double(grid.row_values[i]) << ',' << format_double(grid.col_values[j])
               << ',' << format_double(grid.values(i, j)) << '\n';
        }
    }
}

ResultGrid read_grid_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw ParseError("grid csv: empty input", 1);
    ResultGrid grid;
    {
        std::stringstream        ss(line);
        std::vector<std::string> h;
        for (std::string f; std::getline(ss, f, ',');) h.push_back(f);
        if (h.size() != 3) throw ParseError("grid csv: header needs 3 fields", 1);
        grid.row_label   = h[0];
        grid.col_label   = h[1];
        grid.value_label = h[2];
    }
    struct Entry {
        double row, col, value;
    };
    std::vector<Entry> entries;
    std::size_t        lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream        ss(line);
        std::vector<std::string> f;
        for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
        if (f.size() != 3) throw ParseError("grid csv: expected 3 fields", lineno);
        Entry e{linalg::parse_double(f[0], lineno), linalg::parse_double(f[1], lineno),
                linalg::parse_double(f[2], lineno)};
        if (std::find(grid.row_values.begin(), grid.row_values.end(), e.row) == grid.row_values.end())
            grid.row_values.push_back(e.row);
        if (std::find(grid.col_values.begin(), grid.col_values.end(), e.col) == grid.col_values.end())
            grid.col_values.push_back(e.col);
        entries.push_back(e);
    }
    const auto rows = static_cast<Index>(grid.row_values.size());
    const auto cols = static_cast<Index>(grid.col_values.size());
    if (static_cast<Index>(entries.size()) != rows * cols) {
        throw ParseError("grid csv: entries do not form a full grid");
    }
    grid.values.resize(rows, cols);
    for (const auto& e : entries) {
        const auto i = std::find(grid.row_values.begin(), grid.row_values.end(), e.row) - grid.row_values.begin();
        const auto j = std::find(grid.col_values.begin(), grid.col_values.end(), e.col) - grid.col_values.begin();
        grid.values(i, j) = e.value;
    }
    return grid;
}

void write_cond_csv(std::ostream& os, const CondResult& result)
{
    os << "kappa,mode,trial,iter,rel_err\n";
    for (const auto& tr : result.traces) {
        for (const auto& row : tr.rows) {
            os << format_double(tr.kappa) << ',' << solver::to_string(tr.mode) << ',' << tr.trial
               << ',' << row.iter << ',' << format_double(row.rel_err) << '\n';
        }
    }
}

void write_noise_csv(std::ostream& os, const NoiseResult& result)
{
    os << "snr_db,median_rel_err\n";
    for (const auto& row : result.rows) {
        os << format_double(row.snr_db) << ',' << format_double(row.median_rel_err) << '\n';
    }
}

void write_end2end_csv(std::ostream& os, const EndToEndReport& report)
{
    os << "k,p,tau_true,tau_hat,location_error,product_rel_err\n";
    for (const auto& s : report.spikes) {
        os << s.k << ',' << s.p << ',' << format_double(s.tau_true) << ','
           << format_double(s.tau_hat) << ',' << format_double(s.location_error) << ','
           << format_double(s.product_rel_err) << '\n';
    }
}

// --- run + emit -------------------------------------------------------------------

namespace {

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IOError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw IOError("write failed: " + path.string());
}

std::string series_label(const CondTrace& tr)
{
    std::ostringstream os;
    os << (tr.mode == solver::StepMode::scaled ? "Scaled-GD" : "GD") << " kappa="
       << format_double(tr.kappa);
    if (tr.trial) os << " #" << tr.trial;
    return os.str();
}

}  // namespace

std::filesystem::path run_and_emit(const ExperimentSpec& spec, const std::filesystem::path& outdir)
{
    spec.validate();
    const auto dir = outdir / to_string(spec.family);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IOError("cannot create " + dir.string() + ": " + ec.message());

    json manifest;
    manifest["schema"] = "manifest v1";
    manifest["tool"]   = kToolVersion;
    manifest["spec"]   = to_json(spec);
    std::ostringstream csv;
    std::string        svg;

    switch (spec.family) {
    case Family::phase_sr:
    case Family::phase_nk: {
        const bool sr   = spec.family == Family::phase_sr;
        const auto grid = sr ? run_phase_sr(spec) : run_phase_nk(spec);
        write_grid_csv(csv, grid);
        Overlay overlay;
        if (sr) {
            overlay = {Overlay::Kind::hyperbola, 6.0};
        } else if (const auto c = fit_boundary_slope(grid)) {
            overlay                 = {Overlay::Kind::line, *c};
            manifest["fitted_slope"] = *c;
        }
        svg = heatmap_svg(grid, sr ? "Success rate, n=" + std::to_string(spec.n) + ", K=" + std::to_string(spec.K)
                                   : "Success rate, s=" + std::to_string(spec.s) + ", r=" + std::to_string(spec.r),
                          overlay);
        manifest["seeds"] = grid.seeds;
        break;
    }
    case Family::cond: {
        const auto result = run_cond(spec);
        write_cond_csv(csv, result);
        std::vector<Series> series;
        json                summary = json::array();
        for (const auto& tr : result.traces) {
            Series s{series_label(tr), {}, {}, tr.mode == solver::StepMode::vanilla};
            for (const auto& row : tr.rows) {
                s.x.push_back(static_cast<double>(row.iter));
                s.y.push_back(row.rel_err);
            }
            series.push_back(std::move(s));
            json item = {{"kappa", tr.kappa}, {"mode", solver::to_string(tr.mode)}, {"trial", tr.trial}};
            item["iters_to_1e-4"] = tr.iters_to_1e4 ? json(*tr.iters_to_1e4) : json(nullptr);
            item["iters_to_1e-3"] = tr.iters_to_1e3 ? json(*tr.iters_to_1e3) : json(nullptr);
            item["r_squared"]     = std::isfinite(tr.r_squared) ? json(tr.r_squared) : json(nullptr);
            if (!tr.failure.empty()) item["failure"] = tr.failure;
            summary.push_back(std::move(item));
        }
        manifest["summary"] = std::move(summary);
        manifest["seeds"]   = json::array();
        for (Index t = 0; t < spec.trials; ++t) {
            manifest["seeds"].push_back(trial_seed(spec.seed0, Family::cond, 0, 0, t));
        }
        svg = line_chart_svg(series, "Relative error vs iteration", "iteration", "log10 relative error", true);
        break;
    }
    case Family::noise: {
        const auto result = run_noise(spec);
        write_noise_csv(csv, result);
        Series s{"median", {}, {}, false};
        for (const auto& row : result.rows) {
            if (!std::isfinite(row.snr_db)) continue;
            s.x.push_back(row.snr_db);
            s.y.push_back(row.median_rel_err);
        }
        manifest["seeds"] = json::array();
        for (Index t = 0; t < spec.trials; ++t) {
            manifest["seeds"].push_back(trial_seed(spec.seed0, Family::noise, 0, 0, t));
        }
        svg = line_chart_svg({s}, "Median relative error vs SNR", "SNR (dB)", "log10 relative error", true);
        break;
    }
    case Family::end2end: {
        const auto report = run_end2end(spec);
        write_end2end_csv(csv, report);
        manifest["seeds"]   = {report.seed};
        manifest["summary"] = {{"matrix_rel_err", report.matrix_rel_err},
                               {"max_location_error", report.max_location_error},
                               {"max_product_rel_err", report.max_product_rel_err},
                               {"iterations", report.iterations}};
        std::vector<Series> series;
        for (Index k = 0; k < spec.K; ++k) {
            Series truth{"true k=" + std::to_string(k), {}, {}, false};
            Series est{"estimate k=" + std::to_string(k), {}, {}, true};
            for (const auto& sp : report.spikes) {
                if (sp.k != k) continue;
                truth.x.push_back(sp.tau_true);
                truth.y.push_back(static_cast<double>(k + 1));
                est.x.push_back(sp.tau_hat);
                est.y.push_back(static_cast<double>(k + 1));
            }
            series.push_back(std::move(truth));
            series.push_back(std::move(est));
        }
        svg = line_chart_svg(series, "Locations and estimates", "tau", "signal", false);
        break;
    }
    }

    write_text(dir / "grid.csv", csv.str());
    write_text(dir / "plot.svg", svg);
    manifest["outputs"] = {"grid.csv", "plot.svg", "manifest.json"};
    write_text(dir / "manifest.json", manifest.dump(1) + "\n");
    return dir;
}

}  // namespace blindsr::bench
