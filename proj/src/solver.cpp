#include "blindsr/solver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "blindsr/model.hpp"
#include "blindsr/parallel.hpp"

namespace blindsr::solver {

std::string to_string(StepMode mode)
{
    return mode == StepMode::scaled ? "scaled" : "vanilla";
}

StepMode parse_step_mode(const std::string& text)
{
    if (text == "scaled") return StepMode::scaled;
    if (text == "vanilla") return StepMode::vanilla;
    throw ValidationError("unknown solver mode '" + text + "'");
}

void SolverConfig::validate() const
{
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("solver: eta must be > 0");
    if (max_iters < 0) throw ValidationError("solver: max_iters must be >= 0");
    if (!(tol >= 0.0)) throw ValidationError("solver: tol must be >= 0");
    if (rank < 1) throw ValidationError("solver: rank must be >= 1");
    if (vanilla_eta && !(*vanilla_eta > 0.0)) {
        throw ValidationError("solver: vanilla_eta must be > 0");
    }
    if (!(divergence_factor > 1.0) || divergence_patience < 1) {
        throw ValidationError("solver: divergence guard needs factor > 1 and patience >= 1");
    }
}

Problem Problem::make(const CVector& y, std::vector<CMatrix> bases)
{
    if (bases.empty()) throw DimensionError("problem: need at least one basis");
    const Index n = y.size();
    const Index s = bases.front().cols();
    for (const auto& b : bases) {
        if (b.rows() != n || b.cols() != s) {
            throw DimensionError("problem: every basis must be " + std::to_string(n) + "x" +
                                 std::to_string(s));
        }
    }
    linalg::require_finite(y, "measurement");
    Problem p;
    p.bases = std::move(bases);
    p.shape = LiftShape::balanced(s, n);
    p.y     = y;
    p.dy    = lift::weight_sqrt(p.shape).cast<linalg::Complex>().cwiseProduct(y);
    return p;
}

std::optional<Index> SolverTrace::iterations_to(double threshold) const
{
    for (const auto& row : rows) {
        if (row.rel_err <= threshold) return row.iter;
    }
    return std::nullopt;
}

double SolverTrace::final_error() const
{
    return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().rel_err;
}

std::vector<FactorPair> spectral_init(const Problem& problem, Index rank, InitMode mode)
{
    const LiftShape& shape = problem.shape;
    if (rank < 1 || rank > std::min(shape.lifted_rows(), shape.n2)) {
        throw DimensionError("spectral_init: rank " + std::to_string(rank) +
                             " exceeds min(s*n1, n2) = " +
                             std::to_string(std::min(shape.lifted_rows(), shape.n2)));
    }
    std::vector<FactorPair> out;
    for (const auto& basis : problem.bases) {
        const CMatrix w = mode == InitMode::hankel
                              ? lift::hankel_lift(model::sense_adjoint(basis, problem.y), shape)
                              : lift::g_forward(model::sense_adjoint(basis, problem.dy), shape);
        const auto    svd  = linalg::svd_truncated(w, rank);
        const auto    root = svd.sigma.cwiseSqrt().cast<linalg::Complex>().asDiagonal();
        out.push_back({svd.U * root, svd.V * root});
    }
    return out;
}

Evaluation evaluate(const Problem& problem, const std::vector<FactorPair>& factors,
                    unsigned threads)
{
    if (static_cast<Index>(factors.size()) != problem.K()) {
        throw DimensionError("evaluate: need one factor pair per signal");
    }
    const auto K = factors.size();
    Evaluation ev;
    ev.lifted.resize(K);
    ev.offspace.resize(K);
    ev.estimates.resize(K);
    std::vector<CVector> sensed(K);
    parallel_for(K, threads, [&](std::size_t k) {
        const auto& f = factors[k];
        if (f.L.rows() != problem.shape.lifted_rows() || f.R.rows() != problem.shape.n2 ||
            f.L.cols() != f.R.cols()) {
            throw DimensionError("evaluate: factor shapes do not match the lift");
        }
        ev.lifted[k]      = f.product();
        const CMatrix gz  = lift::g_adjoint(ev.lifted[k], problem.shape);
        ev.offspace[k]    = ev.lifted[k] - lift::g_forward(gz, problem.shape);
        ev.estimates[k]   = lift::apply_weight_inverse(gz, problem.shape);
        sensed[k]         = model::sense(problem.bases[k], gz);
    });
    // Fixed k order keeps the sum independent of scheduling.
    ev.residual = -problem.dy;
    for (std::size_t k = 0; k < K; ++k) {
        ev.residual += sensed[k];
        ev.offspace_energy += ev.offspace[k].squaredNorm();
    }
    ev.objective = 0.5 * ev.residual.squaredNorm() + 0.5 * ev.offspace_energy;
    return ev;
}

namespace {

Gradient gradient_for(const Problem& problem, const FactorPair& f, const Evaluation& ev,
                      std::size_t k)
{
    CMatrix m = lift::g_forward(model::sense_adjoint(problem.bases[k], ev.residual), problem.shape);
    m += ev.offspace[k];
    return {m * f.R, m.adjoint() * f.L};
}

FactorPair scaled_update(const FactorPair& f, const Gradient& g, double eta,
                         const linalg::Tolerances& tol)
{
    const CMatrix gram_r = f.R.adjoint() * f.R;
    const CMatrix gram_l = f.L.adjoint() * f.L;
    return {f.L - eta * linalg::right_solve_gram(g.gL, gram_r, tol),
            f.R - eta * linalg::right_solve_gram(g.gR, gram_l, tol)};
}

FactorPair vanilla_update(const FactorPair& f, const Gradient& g, double eta)
{
    return {f.L - eta * g.gL, f.R - eta * g.gR};
}

}  // namespace

std::vector<Gradient> gradients(const Problem& problem, const std::vector<FactorPair>& factors,
                                const Evaluation& eval, unsigned threads)
{
    std::vector<Gradient> out(factors.size());
    parallel_for(factors.size(), threads,
                 [&](std::size_t k) { out[k] = gradient_for(problem, factors[k], eval, k); });
    return out;
}

std::vector<Gradient> gradients(const Problem& problem, const std::vector<FactorPair>& factors,
                                unsigned threads)
{
    return gradients(problem, factors, evaluate(problem, factors, threads), threads);
}

std::vector<FactorPair> scaled_step(const std::vector<FactorPair>& factors,
                                    const std::vector<Gradient>& grads, double eta,
                                    const linalg::Tolerances& tol)
{
    if (factors.size() != grads.size()) throw DimensionError("scaled_step: size mismatch");
    std::vector<FactorPair> out;
    for (std::size_t k = 0; k < factors.size(); ++k) {
        out.push_back(scaled_update(factors[k], grads[k], eta, tol));
    }
    return out;
}

std::vector<FactorPair> vanilla_step(const std::vector<FactorPair>& factors,
                                     const std::vector<Gradient>& grads, double eta)
{
    if (factors.size() != grads.size()) throw DimensionError("vanilla_step: size mismatch");
    std::vector<FactorPair> out;
    for (std::size_t k = 0; k < factors.size(); ++k) {
        out.push_back(vanilla_update(factors[k], grads[k], eta));
    }
    return out;
}

double relative_error(const std::vector<CMatrix>& estimate, const std::vector<CMatrix>& truth)
{
    if (estimate.size() != truth.size()) throw DimensionError("relative_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        num += (estimate[k] - truth[k]).squaredNorm();
        den += truth[k].squaredNorm();
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

namespace {

SolverTrace run_impl(const CVector& y, const std::vector<CMatrix>& bases,
                     const SolverConfig& config, const std::vector<CMatrix>* truth)
{
    config.validate();
    using Clock      = std::chrono::steady_clock;
    const auto start = Clock::now();

    const Problem problem = Problem::make(y, bases);
    if (truth && static_cast<Index>(truth->size()) != problem.K()) {
        throw DimensionError("run: ground truth must hold one data matrix per signal");
    }
    const unsigned threads = config.parallel_k
                                 ? (config.threads ? config.threads : default_thread_count())
                                 : 1u;

    SolverTrace trace;
    trace.mode                      = config.mode;
    std::vector<FactorPair> factors = spectral_init(problem, config.rank, config.init);

    trace.step = config.eta;
    if (config.mode == StepMode::vanilla) {
        double sigma1 = 0.0;
        for (const auto& f : factors) {
            sigma1 = std::max(sigma1, f.L.colwise().squaredNorm().maxCoeff());
        }
        trace.step = config.vanilla_eta ? *config.vanilla_eta
                                        : (sigma1 > 0.0 ? config.eta / sigma1 : config.eta);
    }

    const double dy_norm   = problem.dy.norm();
    double       f0        = 0.0;
    Index        above     = 0;
    for (Index t = 0;; ++t) {
        Evaluation ev = evaluate(problem, factors, threads);
        if (!std::isfinite(ev.objective)) {
            throw DivergenceError("run: objective became non-finite at iteration " +
                                  std::to_string(t));
        }
        TraceRow row;
        row.iter      = t;
        row.objective = ev.objective;
        row.residual  = dy_norm > 0.0 ? ev.residual.norm() / dy_norm : ev.residual.norm();
        row.rel_err   = truth ? relative_error(ev.estimates, *truth)
                              : std::numeric_limits<double>::quiet_NaN();
        row.wall_ms   = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        trace.rows.push_back(row);

        bool done = false;
        if (truth) {
            done = row.rel_err <= config.tol;
        } else {
            double lifted_energy = 0.0;
            for (const auto& z : ev.lifted) lifted_energy += z.squaredNorm();
            done = row.residual <= config.tol &&
                   std::sqrt(ev.offspace_energy) <= config.tol * std::sqrt(lifted_energy);
        }
        if (done || t >= config.max_iters) {
            trace.converged  = done;
            trace.iterations = t;
            trace.estimates  = std::move(ev.estimates);
            break;
        }

        if (t == 0) {
            f0 = ev.objective;
        } else if (ev.objective > config.divergence_factor * f0) {
            if (++above >= config.divergence_patience) {
                throw DivergenceError("run: objective above " +
                                      std::to_string(config.divergence_factor) +
                                      "x its initial value for " +
                                      std::to_string(config.divergence_patience) +
                                      " consecutive iterations");
            }
        } else {
            above = 0;
        }

        std::vector<FactorPair> next(factors.size());
        parallel_for(factors.size(), threads, [&](std::size_t k) {
            const Gradient g = gradient_for(problem, factors[k], ev, k);
            next[k]          = config.mode == StepMode::scaled
                                   ? scaled_update(factors[k], g, trace.step, config.numerics)
                                   : vanilla_update(factors[k], g, trace.step);
        });
        factors = std::move(next);
    }
    trace.factors = std::move(factors);
    return trace;
}

}  // namespace

SolverTrace run(const CVector& y, const std::vector<CMatrix>& bases, const SolverConfig& config,
                const std::vector<CMatrix>* truth)
{
    return run_impl(y, bases, config, truth);
}

SolverTrace run_vanilla(const CVector& y, const std::vector<CMatrix>& bases,
                        const SolverConfig& config, const std::vector<CMatrix>* truth)
{
    SolverConfig c = config;
    c.mode         = StepMode::vanilla;
    return run_impl(y, bases, c, truth);
}

void write_trace_csv(std::ostream& os, const SolverTrace& trace)
{
    os << "iter,rel_err,objective,wall_ms\n";
    for (const auto& row : trace.rows) {
        os << row.iter << ',' << linalg::format_double(row.rel_err) << ','
           << linalg::format_double(row.objective) << ',' << linalg::format_double(row.wall_ms)
           << '\n';
    }
}

void save_trace_csv(const std::filesystem::path& path, const SolverTrace& trace)
{
    std::ofstream os(path);
    if (!os) throw IOError("cannot open " + path.string() + " for writing");
    write_trace_csv(os, trace);
}

std::vector<TraceRow> read_trace_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "iter,rel_err,objective,wall_ms") {
        throw ParseError("trace csv: bad header", 1);
    }
    std::vector<TraceRow> rows;
    std::size_t           lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream        ss(line);
        for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
        if (f.size() != 4) throw ParseError("trace csv: expected 4 fields", lineno);
        TraceRow row;
        row.iter      = static_cast<Index>(linalg::parse_double(f[0], lineno));
        row.rel_err   = linalg::parse_double(f[1], lineno);
        row.objective = linalg::parse_double(f[2], lineno);
        row.wall_ms   = linalg::parse_double(f[3], lineno);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace blindsr::solver
