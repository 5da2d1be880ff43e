#pragma once

#include <filesystem>
#include <vector>

#include "blindsr/lift.hpp"
#include "blindsr/linalg.hpp"

/// Location and coefficient extraction from recovered data matrices.
namespace blindsr::post {

using linalg::CMatrix;
using linalg::CVector;
using linalg::Index;

struct MusicOptions {
    /// Pseudospectrum grid size; 0 selects 16 n. Must be >= 8 n otherwise.
    Index  grid_size = 0;
    /// Golden-section refinement stops once the bracket is this narrow.
    double refine_width = 1e-10;
    /// Lift is rank deficient when sigma_r <= rank_floor * sigma_1.
    double rank_floor = 1e-12;
    /// Keep the sampled pseudospectrum in the result.
    bool keep_spectrum = false;
};

struct MusicResult {
    std::vector<double> taus;       // r locations in [0, 1), ascending
    std::vector<double> grid;       // sampled tau values (keep_spectrum)
    std::vector<double> spectrum;   // 1 / distance at each grid point (keep_spectrum)
};

/// Normalized subspace distance used by the pseudospectrum: the smallest
/// eigenvalue of Q^H Q / n1 where Q = (I - U U^H)(a_tau ⊗ I_s) and a_tau is the
/// length-n1 steering vector. Zero exactly when some a_tau ⊗ c lies in span(U).
double music_distance(const CMatrix& signal_basis, double tau, Index s, Index n1);

/// Spatial-smoothing MUSIC on the vectorized Hankel lift of `xhat` (s x n).
///
/// The lift stacks n2 overlapping length-n1 windows of the s channels, so its
/// r leading left singular vectors span {a_tau_p ⊗ h_p}. The pseudospectrum
/// 1 / music_distance is scanned on a uniform grid; the r deepest local minima
/// of the distance are refined by golden-section search.
MusicResult smoothed_music(const CMatrix& xhat, Index r, const MusicOptions& options = {});

struct CoefficientEstimate {
    std::vector<std::vector<CVector>> products;  // [k][p] ~ d_{k,p} h_{k,p}
    double                            residual = 0.0;
};

/// Solves the n x (K s r) least-squares system
///   y[j] = sum_{k,p} a_{tau_{k,p}}[j] B_k[j,:] (d_{k,p} h_{k,p}).
CoefficientEstimate recover_coefficients(const std::vector<std::vector<double>>& taus,
                                         const std::vector<CMatrix>& bases, const CVector& y,
                                         const linalg::Tolerances& tol = {});

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method).
/// Returns assignment[row] = column.
std::vector<Index> hungarian(const linalg::RMatrix& cost);

struct SignalMatch {
    std::vector<Index>  assignment;  // truth spike p -> estimate index
    std::vector<double> errors;      // wrap-around error per truth spike
    double              total = 0.0;
};

/// Per-signal optimal assignment of estimates to truth under wrap-around distance.
SignalMatch              match_locations(const std::vector<double>& estimate,
                                         const std::vector<double>& truth);
std::vector<SignalMatch> match_and_score(const std::vector<std::vector<double>>& estimate,
                                         const std::vector<std::vector<double>>& truth);

/// Pseudospectrum CSV: "tau,value".
void save_spectrum_csv(const std::filesystem::path& path, const MusicResult& result);

}  // namespace blindsr::post
