#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "blindsr/bench.hpp"
#include "blindsr/errors.hpp"
#include "blindsr/model.hpp"
#include "blindsr/post.hpp"
#include "blindsr/rng.hpp"
#include "blindsr/solver.hpp"

namespace blindsr::cli {

namespace fs = std::filesystem;
using json   = nlohmann::json;
using linalg::CMatrix;
using linalg::CVector;
using linalg::Index;

namespace {

/// Thrown for bad flag combinations discovered after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json read_json(const fs::path& path)
{
    std::ifstream is(path);
    if (!is) throw IOError("cannot open " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream os(path);
    if (!os) throw IOError("cannot open " + path.string() + " for writing");
    os << j.dump(1) << '\n';
    if (!os) throw IOError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IOError("cannot create " + dir.string() + ": " + ec.message());
}

/// Loads a flat config object, rejecting keys outside `known`.
json load_config(const std::string& path, const std::set<std::string>& known)
{
    if (path.empty()) return json::object();
    json j = read_json(path);
    if (!j.is_object()) throw ParseError(path + ": config must be a JSON object");
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw ParseError(path + ": unknown config key '" + item.key() + "'");
        }
    }
    return j;
}

/// Fills `field` from the config unless the flag was given.
template <class T>
void from_config(const json& config, const char* key, const CLI::Option* flag, T& field)
{
    if (flag->count() || !config.contains(key)) return;
    try {
        field = config[key].get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("config key '") + key + "': " + e.what());
    }
}

double parse_snr_token(const std::string& token)
{
    if (token == "inf") return model::kNoiseless;
    try {
        return linalg::parse_double(token);
    } catch (const ParseError&) {
        throw UsageError("bad SNR value '" + token + "'");
    }
}

/// "a:b:c" (inclusive, step b) or a comma list that may contain "inf".
std::vector<double> parse_snr_list(const std::string& text)
{
    std::vector<double> out;
    if (std::count(text.begin(), text.end(), ':') == 2) {
        std::stringstream ss(text);
        std::string       a, b, c;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, c);
        const double lo = parse_snr_token(a), step = parse_snr_token(b), hi = parse_snr_token(c);
        if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
            throw UsageError("SNR range needs lo:step:hi with step > 0 and hi >= lo");
        }
        const auto count = static_cast<Index>(std::floor((hi - lo) / step + 1e-9));
        for (Index i = 0; i <= count; ++i) out.push_back(lo + static_cast<double>(i) * step);
        return out;
    }
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ',');) out.push_back(parse_snr_token(tok));
    if (out.empty()) throw UsageError("empty SNR list");
    return out;
}

std::vector<double> parse_number_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream   ss(text);
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            out.push_back(linalg::parse_double(tok));
        } catch (const ParseError&) {
            throw UsageError("bad number '" + tok + "'");
        }
    }
    if (out.empty()) throw UsageError("empty list");
    return out;
}

// --- shared input loading -------------------------------------------------------

struct Inputs {
    CVector              y;
    std::vector<CMatrix> bases;
    std::vector<fs::path> basis_paths;
    std::optional<model::GroundTruth> truth;
};

/// Basis files for a synth directory: those listed in gt.json, else basis_0.cmx, basis_1.cmx, ...
std::vector<fs::path> discover_bases(const fs::path& dir)
{
    std::vector<fs::path> out;
    if (fs::exists(dir / "gt.json")) {
        for (const auto& f : model::read_spike_document(dir / "gt.json").basis_files) {
            out.push_back(dir / f);
        }
        return out;
    }
    for (Index k = 0; fs::exists(dir / ("basis_" + std::to_string(k) + ".cmx")); ++k) {
        out.push_back(dir / ("basis_" + std::to_string(k) + ".cmx"));
    }
    return out;
}

Inputs load_inputs(const std::string& in_dir, std::string measurement,
                   std::vector<std::string> basis_files, std::string truth_path, bool no_truth)
{
    if (!in_dir.empty()) {
        const fs::path dir(in_dir);
        if (!fs::is_directory(dir)) throw IOError("input directory not found: " + in_dir);
        if (measurement.empty()) measurement = (dir / "measurement.csv").string();
        if (basis_files.empty()) {
            for (const auto& p : discover_bases(dir)) basis_files.push_back(p.string());
        }
        if (truth_path.empty() && !no_truth && fs::exists(dir / "gt.json")) {
            truth_path = (dir / "gt.json").string();
        }
    }
    if (measurement.empty()) throw UsageError("no measurement given (use --in or --measurement)");
    if (basis_files.empty()) throw UsageError("no basis files given (use --in or --basis)");

    Inputs in;
    in.y = model::load_measurement_csv(measurement);
    for (const auto& f : basis_files) {
        in.bases.push_back(linalg::load_cmx(f));
        in.basis_paths.emplace_back(f);
        const CMatrix& b = in.bases.back();
        if (b.rows() != in.y.size()) {
            throw DimensionError(f + ": basis has " + std::to_string(b.rows()) + " rows but " +
                                 measurement + " has " + std::to_string(in.y.size()) + " samples");
        }
        if (b.cols() != in.bases.front().cols()) {
            throw DimensionError(f + ": basis has " + std::to_string(b.cols()) + " columns, " +
                                 basis_files.front() + " has " +
                                 std::to_string(in.bases.front().cols()));
        }
    }
    if (!truth_path.empty() && !no_truth) {
        in.truth = model::load_ground_truth(truth_path);
        const auto& d = in.truth->dims;
        if (d.n != in.y.size() || d.K != static_cast<Index>(in.bases.size()) ||
            d.s != in.bases.front().cols()) {
            throw DimensionError(truth_path + ": dimensions disagree with the measurement and bases");
        }
    }
    return in;
}

// --- synth -------------------------------------------------------------------------

struct SynthArgs {
    Index         n = 0, K = 0, s = 0, r = 0;
    std::string   mode = "random";
    double        kappa = 1.0;
    std::uint64_t seed = 1;
    std::string   snr;
    std::string   out = ".";
    std::string   config;
};

int cmd_synth(SynthArgs a, const std::map<std::string, CLI::Option*>& opts, std::ostream& out)
{
    const json config = load_config(a.config, {"n", "K", "s", "r", "mode", "kappa", "seed", "snr"});
    from_config(config, "n", opts.at("n"), a.n);
    from_config(config, "K", opts.at("K"), a.K);
    from_config(config, "s", opts.at("s"), a.s);
    from_config(config, "r", opts.at("r"), a.r);
    from_config(config, "mode", opts.at("mode"), a.mode);
    from_config(config, "kappa", opts.at("kappa"), a.kappa);
    from_config(config, "seed", opts.at("seed"), a.seed);
    if (!opts.at("snr")->count() && config.contains("snr")) {
        a.snr = config["snr"].is_string() ? config["snr"].get<std::string>()
                                          : linalg::format_double(config["snr"].get<double>());
    }
    for (auto [name, v] : {std::pair{"--n", a.n}, {"--K", a.K}, {"--s", a.s}, {"--r", a.r}}) {
        if (v <= 0) throw UsageError(std::string(name) + " is required and must be positive");
    }

    model::InstanceRecipe recipe;
    recipe.mode = model::parse_instance_mode(a.mode);
    if (recipe.mode == model::InstanceMode::conditioned) recipe.kappa = a.kappa;
    const model::Dims dims{a.K, a.r, a.s, a.n};
    const auto        gt = model::generate_instance(recipe, dims, a.seed);
    CVector           y  = model::sense_forward(gt.bases, model::build_data_matrices(gt));

    const double snr = a.snr.empty() ? model::kNoiseless : parse_snr_token(a.snr);
    const auto   noise_seed = derive_seed(a.seed, {0x6e6f697365ULL});
    y                       = model::add_noise(y, snr, noise_seed).y;

    const fs::path dir(a.out);
    ensure_dir(dir);
    auto files = model::save_ground_truth(dir, gt);
    model::save_measurement_csv(dir / "measurement.csv", y);
    files.push_back(dir / "measurement.csv");
    files.push_back(dir / "manifest.json");

    json manifest;
    manifest["schema"]  = "manifest v1";
    manifest["tool"]    = bench::kToolVersion;
    manifest["command"] = "synth";
    manifest["n"] = a.n;
    manifest["K"] = a.K;
    manifest["s"] = a.s;
    manifest["r"] = a.r;
    manifest["mode"] = model::to_string(recipe.mode);
    if (recipe.kappa) manifest["kappa"] = *recipe.kappa;
    manifest["seed"] = a.seed;
    if (std::isfinite(snr)) {
        manifest["snr_db"]     = snr;
        manifest["noise_seed"] = noise_seed;
    }
    json names = json::array();
    for (const auto& f : files) names.push_back(f.filename().string());
    manifest["files"] = names;
    write_json(dir / "manifest.json", manifest);
    out << "wrote " << files.size() << " files to " << dir.string() << '\n';
    return kOk;
}

// --- solve -------------------------------------------------------------------------

struct SolveArgs {
    std::string              in, measurement, truth, out = ".", config;
    std::vector<std::string> bases;
    bool                     no_truth = false;
    Index                    rank = 0;
    double                   eta = 0.5;
    Index                    max_iters = 500;
    double                   tol = 1e-10;
    std::string              mode = "scaled";
    std::string              init = "hankel";
    double                   vanilla_eta = 0.0;
    unsigned                 threads = 0;
    bool                     verbose = false;
};

int cmd_solve(SolveArgs a, const std::map<std::string, CLI::Option*>& opts, std::ostream& out,
              std::ostream& err)
{
    const json config = load_config(
        a.config, {"rank", "eta", "max_iters", "tol", "mode", "init", "vanilla_eta", "threads"});
    from_config(config, "rank", opts.at("rank"), a.rank);
    from_config(config, "eta", opts.at("eta"), a.eta);
    from_config(config, "max_iters", opts.at("max-iters"), a.max_iters);
    from_config(config, "tol", opts.at("tol"), a.tol);
    from_config(config, "mode", opts.at("mode"), a.mode);
    from_config(config, "init", opts.at("init"), a.init);
    from_config(config, "vanilla_eta", opts.at("vanilla-eta"), a.vanilla_eta);
    from_config(config, "threads", opts.at("threads"), a.threads);

    const Inputs in = load_inputs(a.in, a.measurement, a.bases, a.truth, a.no_truth);
    if (a.rank == 0) {
        if (!in.truth) throw UsageError("--rank is required without ground truth");
        a.rank = in.truth->dims.r;
    }

    solver::SolverConfig cfg;
    cfg.rank      = a.rank;
    cfg.eta       = a.eta;
    cfg.max_iters = a.max_iters;
    cfg.tol       = a.tol;
    cfg.mode      = solver::parse_step_mode(a.mode);
    if (a.init == "hankel") cfg.init = solver::InitMode::hankel;
    else if (a.init == "weighted") cfg.init = solver::InitMode::weighted;
    else throw UsageError("--init must be hankel or weighted");
    if (a.vanilla_eta > 0.0) cfg.vanilla_eta = a.vanilla_eta;
    cfg.threads    = a.threads;
    cfg.parallel_k = true;

    std::vector<CMatrix> truth_xs;
    if (in.truth) truth_xs = model::build_data_matrices(*in.truth);
    const auto trace = solver::run(in.y, in.bases, cfg, in.truth ? &truth_xs : nullptr);

    if (a.verbose) {
        for (const auto& row : trace.rows) {
            err << "iter " << row.iter << " rel_err " << linalg::format_double(row.rel_err)
                << " objective " << linalg::format_double(row.objective) << '\n';
        }
    }

    const fs::path dir(a.out);
    ensure_dir(dir);
    solver::save_trace_csv(dir / "trace.csv", trace);
    for (std::size_t k = 0; k < trace.estimates.size(); ++k) {
        const auto ks = std::to_string(k);
        linalg::save_cmx(dir / ("xhat_" + ks + ".cmx"), trace.estimates[k]);
        linalg::save_cmx(dir / ("L_" + ks + ".cmx"), trace.factors[k].L);
        linalg::save_cmx(dir / ("R_" + ks + ".cmx"), trace.factors[k].R);
    }
    json summary;
    summary["schema"]     = "summary v1";
    summary["tool"]       = bench::kToolVersion;
    summary["mode"]       = solver::to_string(trace.mode);
    summary["init"]       = a.init;
    summary["rank"]       = cfg.rank;
    summary["eta"]        = cfg.eta;
    summary["step"]       = trace.step;
    summary["tol"]        = cfg.tol;
    summary["max_iters"]  = cfg.max_iters;
    summary["iterations"] = trace.iterations;
    summary["converged"]  = trace.converged;
    summary["K"]          = in.bases.size();
    summary["n"]          = in.y.size();
    if (!trace.rows.empty()) {
        summary["objective"] = trace.rows.back().objective;
        summary["residual"]  = trace.rows.back().residual;
    }
    if (in.truth) summary["final_rel_err"] = trace.final_error();
    write_json(dir / "summary.json", summary);

    out << "iterations " << trace.iterations << (trace.converged ? " (converged)" : "");
    if (in.truth) out << ", relative error " << linalg::format_double(trace.final_error());
    out << '\n';
    return kOk;
}

// --- extract -----------------------------------------------------------------------

struct ExtractArgs {
    std::string              in, data, measurement, truth, out = ".";
    std::vector<std::string> bases;
    bool                     no_truth = false;
    Index                    rank = 0;
    Index                    grid = 0;
};

int cmd_extract(ExtractArgs a, std::ostream& out)
{
    const Inputs in = load_inputs(a.data, a.measurement, a.bases, a.truth, a.no_truth);
    const Index  K  = static_cast<Index>(in.bases.size());
    const Index  n  = in.y.size();
    const Index  s  = in.bases.front().cols();
    if (a.rank == 0) {
        if (!in.truth) throw UsageError("--rank is required without ground truth");
        a.rank = in.truth->dims.r;
    }
    const auto shape = lift::LiftShape::balanced(s, n);
    if (a.rank > shape.n2 || a.rank < 1) {
        throw UsageError("--rank " + std::to_string(a.rank) + " must lie in [1, n2 = " +
                         std::to_string(shape.n2) + "]");
    }

    const fs::path src(a.in);
    std::vector<CMatrix> xhat;
    for (Index k = 0; k < K; ++k) {
        const fs::path f = src / ("xhat_" + std::to_string(k) + ".cmx");
        xhat.push_back(linalg::load_cmx(f));
        if (xhat.back().rows() != s || xhat.back().cols() != n) {
            throw DimensionError(f.string() + ": expected " + std::to_string(s) + " x " +
                                 std::to_string(n));
        }
    }

    post::MusicOptions opts;
    opts.grid_size = a.grid;
    std::vector<std::vector<double>> taus(K);
    for (Index k = 0; k < K; ++k) taus[k] = post::smoothed_music(xhat[k], a.rank, opts).taus;
    const auto coeffs = post::recover_coefficients(taus, in.bases, in.y);

    model::SpikeDocument doc;
    doc.dims = {K, a.rank, s, n};
    doc.taus.resize(K, a.rank);
    for (Index k = 0; k < K; ++k) {
        for (Index p = 0; p < a.rank; ++p) doc.taus(k, p) = taus[k][p];
    }
    doc.products = coeffs.products;
    for (const auto& p : in.basis_paths) {
        doc.basis_files.push_back(fs::absolute(p).lexically_normal().string());
    }

    const fs::path dir(a.out);
    ensure_dir(dir);
    model::write_spike_document(dir / "estimate.json", doc);
    out << "estimated " << K * a.rank << " locations, coefficient residual "
        << linalg::format_double(coeffs.residual) << '\n';

    if (in.truth) {
        const auto& gt = *in.truth;
        if (gt.dims.r != a.rank) throw UsageError("--rank disagrees with the ground truth");
        std::vector<std::vector<double>> truth(K);
        for (Index k = 0; k < K; ++k) {
            for (Index p = 0; p < a.rank; ++p) truth[k].push_back(gt.taus(k, p));
        }
        const auto     matches = post::match_and_score(taus, truth);
        std::ofstream  csv(dir / "report.csv");
        if (!csv) throw IOError("cannot open " + (dir / "report.csv").string() + " for writing");
        csv << "k,p,tau_true,tau_hat,location_error,product_rel_err\n";
        double max_loc = 0.0, max_prod = 0.0;
        for (Index k = 0; k < K; ++k) {
            for (Index p = 0; p < a.rank; ++p) {
                const Index   q    = matches[k].assignment[p];
                const CVector ref  = gt.product(k, p);
                const double  perr = (coeffs.products[k][q] - ref).norm() / ref.norm();
                max_loc            = std::max(max_loc, matches[k].errors[p]);
                max_prod           = std::max(max_prod, perr);
                csv << k << ',' << p << ',' << linalg::format_double(truth[k][p]) << ','
                    << linalg::format_double(taus[k][q]) << ','
                    << linalg::format_double(matches[k].errors[p]) << ','
                    << linalg::format_double(perr) << '\n';
            }
        }
        write_json(dir / "score.json", {{"max_location_error", max_loc},
                                        {"max_product_rel_err", max_prod},
                                        {"coefficient_residual", coeffs.residual}});
        out << "max location error " << linalg::format_double(max_loc)
            << ", max product error " << linalg::format_double(max_prod) << '\n';
    }
    return kOk;
}

// --- bench -------------------------------------------------------------------------

struct BenchArgs {
    std::string   family, config, kappas, snr, out = "results";
    bool          full = false;
    std::uint64_t seed = 1;
    Index         trials = 0;
    unsigned      threads = 0;
};

int cmd_bench(const BenchArgs& a, const std::map<std::string, CLI::Option*>& opts,
              std::ostream& out)
{
    json j = a.config.empty() ? json::object() : read_json(a.config);
    if (!j.is_object()) throw ParseError(a.config + ": config must be a JSON object");
    j["schema"] = "exp v1";
    j["family"] = a.family;
    if (a.full) j["full"] = true;
    bench::ExperimentSpec spec = bench::spec_from_json(j);
    if (opts.at("seed")->count()) spec.seed0 = a.seed;
    if (opts.at("trials")->count()) spec.trials = a.trials;
    if (opts.at("threads")->count()) spec.threads = a.threads;
    if (!a.kappas.empty()) spec.kappas = parse_number_list(a.kappas);
    if (!a.snr.empty()) spec.snrs_db = parse_snr_list(a.snr);
    spec.validate();

    const fs::path dir = bench::run_and_emit(spec, a.out);
    out << "wrote " << (dir / "grid.csv").string() << ", plot.svg, manifest.json\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Blind super-resolution and demixing with scaled gradient descent", "blindsr"};
    app.require_subcommand(1);
    app.set_version_flag("--version", bench::kToolVersion);

    std::map<std::string, CLI::Option*> synth_opts, solve_opts, bench_opts;

    SynthArgs sa;
    auto*     synth = app.add_subcommand("synth", "Generate a synthetic instance and its measurement");
    synth_opts["n"]     = synth->add_option("--n", sa.n, "Number of samples");
    synth_opts["K"]     = synth->add_option("--K", sa.K, "Number of signals");
    synth_opts["s"]     = synth->add_option("--s", sa.s, "Subspace dimension");
    synth_opts["r"]     = synth->add_option("--r", sa.r, "Spikes per signal");
    synth_opts["mode"]  = synth->add_option("--mode", sa.mode, "random | separated | conditioned");
    synth_opts["kappa"] = synth->add_option("--kappa", sa.kappa, "Amplitude dynamic range (conditioned)");
    synth_opts["seed"]  = synth->add_option("--seed", sa.seed, "Instance seed");
    synth_opts["snr"]   = synth->add_option("--snr", sa.snr, "Measurement SNR in dB (default: noiseless)");
    synth->add_option("--out,-o", sa.out, "Output directory");
    synth->add_option("--config", sa.config, "JSON config; flags win");

    SolveArgs va;
    auto*     solve = app.add_subcommand("solve", "Recover the data matrices from a measurement");
    solve->add_option("--in,-i", va.in, "Directory written by synth");
    solve->add_option("--measurement", va.measurement, "Measurement CSV");
    solve->add_option("--basis", va.bases, "Basis cmx files, one per signal");
    solve->add_option("--truth", va.truth, "Ground truth gt.json for error tracking");
    solve->add_flag("--no-truth", va.no_truth, "Ignore gt.json in --in");
    solve_opts["rank"]        = solve->add_option("--rank,-r", va.rank, "Spikes per signal");
    solve_opts["eta"]         = solve->add_option("--eta", va.eta, "Step size");
    solve_opts["max-iters"]   = solve->add_option("--max-iters", va.max_iters, "Iteration cap");
    solve_opts["tol"]         = solve->add_option("--tol", va.tol, "Stopping tolerance");
    solve_opts["mode"]        = solve->add_option("--mode", va.mode, "scaled | vanilla");
    solve_opts["init"]        = solve->add_option("--init", va.init, "hankel | weighted");
    solve_opts["vanilla-eta"] = solve->add_option("--vanilla-eta", va.vanilla_eta, "Explicit vanilla step");
    solve_opts["threads"]     = solve->add_option("--threads", va.threads, "Worker threads");
    solve->add_option("--out,-o", va.out, "Output directory");
    solve->add_option("--config", va.config, "JSON config; flags win");
    solve->add_flag("--verbose,-v", va.verbose, "Log every iteration to stderr");

    ExtractArgs ea;
    auto* extract = app.add_subcommand("extract", "Estimate locations and coefficients from solve output");
    extract->add_option("--in,-i", ea.in, "Directory written by solve")->required();
    extract->add_option("--data", ea.data, "Directory written by synth");
    extract->add_option("--measurement", ea.measurement, "Measurement CSV");
    extract->add_option("--basis", ea.bases, "Basis cmx files, one per signal");
    extract->add_option("--truth", ea.truth, "Ground truth gt.json for scoring");
    extract->add_flag("--no-truth", ea.no_truth, "Ignore gt.json in --data");
    extract->add_option("--rank,-r", ea.rank, "Spikes per signal");
    extract->add_option("--grid", ea.grid, "Pseudospectrum grid size (default 16 n)");
    extract->add_option("--out,-o", ea.out, "Output directory");

    BenchArgs ba;
    auto*     benchc = app.add_subcommand("bench", "Run an experiment family");
    benchc->add_option("family", ba.family, "phase_sr | phase_nk | cond | noise | end2end")
        ->required()
        ->check(CLI::IsMember({"phase_sr", "phase_nk", "cond", "noise", "end2end"}));
    benchc->add_flag("--full", ba.full, "Figure-scale sweep");
    benchc->add_option("--config", ba.config, "exp v1 JSON; flags win");
    benchc->add_option("--kappas", ba.kappas, "Comma list of condition numbers (cond)");
    benchc->add_option("--snr", ba.snr, "lo:step:hi or comma list in dB (noise)");
    bench_opts["seed"]    = benchc->add_option("--seed", ba.seed, "Base seed");
    bench_opts["trials"]  = benchc->add_option("--trials", ba.trials, "Trials per cell");
    bench_opts["threads"] = benchc->add_option("--threads", ba.threads, "Worker threads");
    benchc->add_option("--out,-o", ba.out, "Results directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        if (*synth) return cmd_synth(sa, synth_opts, out);
        if (*solve) return cmd_solve(va, solve_opts, out, err);
        if (*extract) return cmd_extract(ea, out);
        if (*benchc) return cmd_bench(ba, bench_opts, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const IOError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIO;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kIO;
    } catch (const Error& e) {
        err << "invalid input: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace blindsr::cli
