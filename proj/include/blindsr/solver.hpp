#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blindsr/lift.hpp"
#include "blindsr/linalg.hpp"

/// Scaled gradient descent over K low-rank factor pairs.
///
/// Each signal k is represented by its lifted matrix Z_k = L_k R_k^H
/// (s*n1 x n2). The objective is
///
///   f = 1/2 ||D y - sum_k A_k G^*(L_k R_k^H)||^2
///     + 1/2 sum_k ||(I - G G^*)(L_k R_k^H)||_F^2
///
/// and the scaled update right-multiplies each factor gradient by the inverse
/// Gram matrix of the other factor.
namespace blindsr::solver {

using linalg::CMatrix;
using linalg::CVector;
using linalg::Index;
using lift::LiftShape;

struct FactorPair {
    CMatrix L;  // s*n1 x r
    CMatrix R;  // n2 x r

    CMatrix product() const { return L * R.adjoint(); }
};

enum class StepMode { scaled, vanilla };

/// How the spectral initializer back-projects y. `hankel` lifts A_k^*(y)
/// without weighting; `weighted` applies G to A_k^*(D y). The two coincide
/// algebraically because D commutes with A_k^*; both are kept so the identity
/// stays under test.
enum class InitMode { hankel, weighted };

std::string to_string(StepMode mode);
StepMode    parse_step_mode(const std::string& text);

struct SolverConfig {
    double   eta       = 0.5;
    Index    max_iters = 500;
    /// Stop when the relative error (benchmark mode) or the relative
    /// measurement residual and off-space energy (deployment mode) drop to tol.
    double   tol       = 1e-10;
    Index    rank      = 1;
    StepMode mode      = StepMode::scaled;
    InitMode init      = InitMode::hankel;
    bool     parallel_k = false;
    unsigned threads    = 0;  // 0: default_thread_count()
    /// Vanilla step; defaults to eta / sigma_1(Z_0) when unset.
    std::optional<double> vanilla_eta;
    /// Abort when f exceeds divergence_factor * f_0 for divergence_patience
    /// consecutive iterations.
    double             divergence_factor   = 10.0;
    Index              divergence_patience = 10;
    linalg::Tolerances numerics;

    void validate() const;
};

/// Theory-safe step bound for the scaled iteration.
inline constexpr double kTheoryStepBound = 1.0 / 20.0;

/// Everything the iteration needs that stays fixed across steps.
struct Problem {
    std::vector<CMatrix> bases;  // K matrices, n x s
    LiftShape            shape;
    CVector              y;
    CVector              dy;     // D y

    static Problem make(const CVector& y, std::vector<CMatrix> bases);
    Index          K() const { return static_cast<Index>(bases.size()); }
};

struct Gradient {
    CMatrix gL;
    CMatrix gR;
};

/// Objective value together with the pieces the gradient reuses.
struct Evaluation {
    double               objective = 0.0;
    CVector              residual;   // sum_k A_k G^*(Z_k) - D y
    std::vector<CMatrix> lifted;     // Z_k = L_k R_k^H
    std::vector<CMatrix> offspace;   // (I - G G^*)(Z_k)
    std::vector<CMatrix> estimates;  // D^{-1} G^*(Z_k)
    double               offspace_energy = 0.0;  // sum_k ||offspace_k||_F^2
};

struct TraceRow {
    Index  iter      = 0;
    double rel_err   = 0.0;  // NaN without ground truth
    double objective = 0.0;
    double residual  = 0.0;  // ||sum_k A_k G^*(Z_k) - D y|| / ||D y||
    double wall_ms   = 0.0;
};

struct SolverTrace {
    std::vector<TraceRow>   rows;
    std::vector<FactorPair> factors;
    std::vector<CMatrix>    estimates;  // D^{-1} G^*(L_k R_k^H)
    bool                    converged  = false;
    Index                   iterations = 0;
    StepMode                mode       = StepMode::scaled;
    double                  step       = 0.0;

    /// First iteration whose relative error is at most `threshold`.
    std::optional<Index> iterations_to(double threshold) const;
    double               final_error() const;
};

/// Rank-r truncated SVD of the back-projected measurements for every k,
/// split evenly into L = U Sigma^{1/2}, R = V Sigma^{1/2}.
std::vector<FactorPair> spectral_init(const Problem& problem, Index rank,
                                      InitMode mode = InitMode::hankel);

Evaluation evaluate(const Problem& problem, const std::vector<FactorPair>& factors,
                    unsigned threads = 1);

/// Wirtinger gradients of f as used by the update rule:
///   grad_L_k = M_k R_k,  grad_R_k = M_k^H L_k,
///   M_k = G A_k^*(residual) + (I - G G^*)(L_k R_k^H).
/// For a perturbation (dL, dR) the first-order change of f is
/// Re<grad_L, dL> + Re<grad_R, dR>.
std::vector<Gradient> gradients(const Problem& problem, const std::vector<FactorPair>& factors,
                                unsigned threads = 1);
std::vector<Gradient> gradients(const Problem& problem, const std::vector<FactorPair>& factors,
                                const Evaluation& eval, unsigned threads = 1);

/// L' = L - eta gL (R^H R)^{-1},  R' = R - eta gR (L^H L)^{-1}, both from the
/// pre-update factors.
std::vector<FactorPair> scaled_step(const std::vector<FactorPair>& factors,
                                    const std::vector<Gradient>& grads, double eta,
                                    const linalg::Tolerances& tol = {});

/// L' = L - eta gL,  R' = R - eta gR.
std::vector<FactorPair> vanilla_step(const std::vector<FactorPair>& factors,
                                     const std::vector<Gradient>& grads, double eta);

/// sqrt(sum_k ||Xhat_k - X_k||^2 / sum_k ||X_k||^2); absolute when the truth is zero.
double relative_error(const std::vector<CMatrix>& estimate, const std::vector<CMatrix>& truth);

/// Runs spectral initialization followed by the configured iteration. With
/// `truth` the trace records relative data-matrix errors and stops on them.
SolverTrace run(const CVector& y, const std::vector<CMatrix>& bases, const SolverConfig& config,
                const std::vector<CMatrix>* truth = nullptr);

/// Same loop with unpreconditioned steps.
SolverTrace run_vanilla(const CVector& y, const std::vector<CMatrix>& bases,
                        const SolverConfig& config, const std::vector<CMatrix>* truth = nullptr);

/// Trace CSV: "iter,rel_err,objective,wall_ms".
void                  write_trace_csv(std::ostream& os, const SolverTrace& trace);
void                  save_trace_csv(const std::filesystem::path& path, const SolverTrace& trace);
std::vector<TraceRow> read_trace_csv(std::istream& is);

}  // namespace blindsr::solver
