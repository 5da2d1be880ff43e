#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "blindsr/linalg.hpp"

/// Point-source signal model: ground-truth synthesis, the per-signal sensing
/// operators A_k and their adjoints, and the additive noise model.
///
/// Signal k is a sum of r spikes at locations tau_{k,p} in [0, 1) with complex
/// amplitudes d_{k,p}. Its point spread functions live in the column span of a
/// known n x s basis B_k, with coefficient vectors h_{k,p}. Only the products
/// d_{k,p} h_{k,p} are identifiable.
namespace blindsr::model {

using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;
using linalg::Index;
using linalg::RMatrix;

struct Dims {
    Index K = 0;  // signals
    Index r = 0;  // spikes per signal
    Index s = 0;  // subspace dimension
    Index n = 0;  // samples

    void validate() const;
    bool operator==(const Dims&) const = default;
};

enum class InstanceMode { random, separated, conditioned };

std::string to_string(InstanceMode mode);
InstanceMode parse_instance_mode(const std::string& text);

struct InstanceRecipe {
    InstanceMode          mode = InstanceMode::random;
    std::optional<double> kappa;              // conditioned mode only, >= 1
    bool                  grid_locked = true; // conditioned mode: tau on {1/n, ..., 1}

    void validate() const;
};

struct GroundTruth {
    Dims                             dims;
    RMatrix                          taus;    // K x r, each in [0, 1)
    CMatrix                          amps;    // K x r
    std::vector<std::vector<CVector>> coeffs; // [k][p], length s, unit norm
    std::vector<CMatrix>             bases;   // K matrices, n x s

    /// d_{k,p} * h_{k,p}
    CVector product(Index k, Index p) const;
};

struct Measurement {
    CVector                    y;
    std::optional<double>      snr_db;
    std::optional<std::uint64_t> seed;
};

/// Sentinel SNR meaning "no noise".
inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

/// Rejection-sampling budget per spike in separated mode.
inline constexpr int kSeparationAttempts = 10000;

/// a_tau[j] = exp(-i 2 pi j tau), j = 0..n-1.
CVector steering_vector(double tau, Index n);

/// Wrap-around distance on the unit circle, min(|a-b|, 1-|a-b|).
double wrap_distance(double a, double b);

GroundTruth generate_instance(const InstanceRecipe& recipe, const Dims& dims, std::uint64_t seed);

/// X_k = sum_p d_{k,p} h_{k,p} a_{tau_{k,p}}^T  (s x n).
CMatrix build_data_matrix(const GroundTruth& gt, Index k);
std::vector<CMatrix> build_data_matrices(const GroundTruth& gt);

/// A_k(X)[j] = b_{k,j}^H X e_j where b_{k,j} is the j-th column of B_k^H.
CVector sense(const CMatrix& basis, const CMatrix& x);

/// y = sum_k A_k(X_k).
CVector sense_forward(const std::vector<CMatrix>& bases, const std::vector<CMatrix>& xs);

/// A_k^*(v): column j equals v[j] b_{k,j}.
CMatrix sense_adjoint(const CMatrix& basis, const CVector& v);

/// y' = y + sigma z / ||z|| with sigma = ||y|| / 10^(snr_db / 20) and z
/// circular complex Gaussian. snr_db = +inf leaves y unchanged.
Measurement add_noise(const CVector& y, double snr_db, std::uint64_t seed);

// --- gt v1 documents -------------------------------------------------------

/// JSON document shared by ground truth and estimates. Estimates carry only
/// taus and products; ground truth carries everything.
struct SpikeDocument {
    Dims                              dims;
    RMatrix                           taus;
    std::optional<CMatrix>            amps;
    std::vector<std::vector<CVector>> coeffs;    // empty when absent
    std::vector<std::vector<CVector>> products;
    std::vector<std::string>          basis_files; // relative to the document
};

SpikeDocument to_document(const GroundTruth& gt, std::vector<std::string> basis_files);
void          write_spike_document(const std::filesystem::path& path, const SpikeDocument& doc);
SpikeDocument read_spike_document(const std::filesystem::path& path);

/// Writes gt.json plus basis_<k>.cmx into `dir`; returns the files written.
std::vector<std::filesystem::path> save_ground_truth(const std::filesystem::path& dir,
                                                     const GroundTruth&           gt);
/// Reads a gt v1 document and the basis files it references.
GroundTruth load_ground_truth(const std::filesystem::path& gt_json);

/// Measurement CSV: header "j,re,im", one row per sample.
void    save_measurement_csv(const std::filesystem::path& path, const CVector& y);
CVector load_measurement_csv(const std::filesystem::path& path);

}  // namespace blindsr::model
