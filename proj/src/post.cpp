#include "blindsr/post.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "blindsr/model.hpp"

namespace blindsr::post {

namespace {

double wrap01(double t)
{
    t -= std::floor(t);
    return t >= 1.0 ? 0.0 : t;
}

/// Distance evaluator with scratch storage reused across calls.
class DistanceProbe {
public:
    DistanceProbe(const CMatrix& basis, Index s, Index n1)
        : u_(basis), s_(s), n1_(n1), a_(n1), q_(s * n1, s)
    {
        // Column i of U reshaped to s x n1 (channel, window offset).
        for (Index i = 0; i < u_.cols(); ++i) {
            blocks_.push_back(Eigen::Map<const CMatrix>(u_.col(i).data(), s, n1).conjugate());
        }
    }

    double operator()(double tau)
    {
        const double t = wrap01(tau);
        for (Index b = 0; b < n1_; ++b) {
            const double turns = std::fmod(static_cast<double>(b) * t, 1.0);
            a_[b]              = std::polar(1.0, -2.0 * std::numbers::pi * turns);
        }
        // Q = A - U (U^H A) with A = a ⊗ I_s; column u of A is a placed on channel u.
        q_.setZero();
        for (Index b = 0; b < n1_; ++b) {
            for (Index u = 0; u < s_; ++u) q_(b * s_ + u, u) = a_[b];
        }
        for (Index i = 0; i < u_.cols(); ++i) {
            const linalg::CVector c = blocks_[i] * a_;  // row i of U^H A, length s
            q_.noalias() -= u_.col(i) * c.transpose();
        }
        const CMatrix gram = q_.adjoint() * q_;
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram, Eigen::EigenvaluesOnly);
        return std::max(0.0, eig.eigenvalues()[0]) / static_cast<double>(n1_);
    }

private:
    const CMatrix&       u_;
    Index                s_;
    Index                n1_;
    std::vector<CMatrix> blocks_;
    linalg::CVector      a_;
    CMatrix              q_;
};

double golden_minimize(DistanceProbe& f, double lo, double hi, double width)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double       c       = hi - inv_phi * (hi - lo);
    double       d       = lo + inv_phi * (hi - lo);
    double       fc = f(c), fd = f(d);
    while (hi - lo > width) {
        if (fc <= fd) {
            hi = d;
            d  = c;
            fd = fc;
            c  = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c  = d;
            fc = fd;
            d  = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double music_distance(const CMatrix& signal_basis, double tau, Index s, Index n1)
{
    if (signal_basis.rows() != s * n1) {
        throw DimensionError("music_distance: basis must have s*n1 rows");
    }
    DistanceProbe probe(signal_basis, s, n1);
    return probe(tau);
}

MusicResult smoothed_music(const CMatrix& xhat, Index r, const MusicOptions& options)
{
    const Index s = xhat.rows();
    const Index n = xhat.cols();
    const auto  shape = lift::LiftShape::balanced(s, n);
    if (r < 1 || r >= shape.n1 || r >= shape.n2) {
        throw DimensionError("smoothed_music: need 1 <= r < min(n1, n2)");
    }
    const Index grid = options.grid_size == 0 ? 16 * n : options.grid_size;
    if (grid < 8 * n) {
        throw ValidationError("smoothed_music: grid size must be >= 8n");
    }
    linalg::require_finite(xhat, "smoothed_music");

    const CMatrix z   = lift::hankel_lift(xhat, shape);
    Eigen::BDCSVD<CMatrix> svd(z, Eigen::ComputeThinU);
    if (svd.info() != Eigen::Success) {
        throw ConvergenceError("smoothed_music: SVD did not converge");
    }
    const auto& sv = svd.singularValues();
    if (!(sv[0] > 0.0) || sv[r - 1] <= options.rank_floor * sv[0]) {
        throw SubspaceDeficientError("smoothed_music: lifted matrix has numerical rank below " +
                                     std::to_string(r));
    }
    const CMatrix basis = svd.matrixU().leftCols(r);
    DistanceProbe probe(basis, s, shape.n1);

    std::vector<double> dist(grid);
    for (Index g = 0; g < grid; ++g) {
        dist[g] = probe(static_cast<double>(g) / static_cast<double>(grid));
    }

    // Local minima of the distance (peaks of the pseudospectrum), cyclic.
    std::vector<Index> peaks;
    for (Index g = 0; g < grid; ++g) {
        const double prev = dist[(g + grid - 1) % grid];
        const double next = dist[(g + 1) % grid];
        if (dist[g] <= prev && dist[g] < next) peaks.push_back(g);
    }
    std::sort(peaks.begin(), peaks.end(), [&](Index a, Index b) { return dist[a] < dist[b]; });

    std::vector<Index> chosen;
    auto far_enough = [&](Index g) {
        // Half a grid cell in tau is less than one index step, so distinct
        // indices always pass; adjacent indices belong to the same peak.
        for (Index c : chosen) {
            const Index d = std::min((g - c + grid) % grid, (c - g + grid) % grid);
            if (d <= 1) return false;
        }
        return true;
    };
    for (Index g : peaks) {
        if (static_cast<Index>(chosen.size()) == r) break;
        if (far_enough(g)) chosen.push_back(g);
    }
    if (static_cast<Index>(chosen.size()) < r) {
        // Fewer distinct minima than spikes: fall back to the deepest remaining points.
        std::vector<Index> order(grid);
        std::iota(order.begin(), order.end(), Index{0});
        std::sort(order.begin(), order.end(), [&](Index a, Index b) { return dist[a] < dist[b]; });
        for (Index g : order) {
            if (static_cast<Index>(chosen.size()) == r) break;
            if (far_enough(g)) chosen.push_back(g);
        }
    }

    MusicResult result;
    const double cell = 1.0 / static_cast<double>(grid);
    for (Index g : chosen) {
        const double center = static_cast<double>(g) * cell;
        result.taus.push_back(
            wrap01(golden_minimize(probe, center - cell, center + cell, options.refine_width)));
    }
    std::sort(result.taus.begin(), result.taus.end());

    if (options.keep_spectrum) {
        for (Index g = 0; g < grid; ++g) {
            result.grid.push_back(static_cast<double>(g) * cell);
            result.spectrum.push_back(dist[g] > 0.0 ? 1.0 / dist[g]
                                                    : std::numeric_limits<double>::infinity());
        }
    }
    return result;
}

CoefficientEstimate recover_coefficients(const std::vector<std::vector<double>>& taus,
                                         const std::vector<CMatrix>& bases, const CVector& y,
                                         const linalg::Tolerances& tol)
{
    if (taus.size() != bases.size() || bases.empty()) {
        throw DimensionError("recover_coefficients: need one location list per basis");
    }
    const Index K = static_cast<Index>(bases.size());
    const Index n = y.size();
    const Index s = bases.front().cols();
    const Index r = static_cast<Index>(taus.front().size());
    for (Index k = 0; k < K; ++k) {
        if (bases[k].rows() != n || bases[k].cols() != s ||
            static_cast<Index>(taus[k].size()) != r) {
            throw DimensionError("recover_coefficients: inconsistent bases or location counts");
        }
    }
    if (n < K * s * r) {
        throw DimensionError("recover_coefficients: need n >= K*s*r measurements");
    }

    CMatrix design(n, K * s * r);
    for (Index k = 0; k < K; ++k) {
        for (Index p = 0; p < r; ++p) {
            const CVector a   = model::steering_vector(taus[k][p], n);
            const Index   col = (k * r + p) * s;
            design.middleCols(col, s) = a.asDiagonal() * bases[k];
        }
    }
    const CVector x = linalg::lstsq(design, y, tol);

    CoefficientEstimate est;
    est.residual = (design * x - y).norm();
    est.products.assign(K, {});
    for (Index k = 0; k < K; ++k) {
        for (Index p = 0; p < r; ++p) est.products[k].push_back(x.segment((k * r + p) * s, s));
    }
    return est;
}

std::vector<Index> hungarian(const linalg::RMatrix& cost)
{
    const Index n = cost.rows();
    if (cost.cols() != n) throw DimensionError("hungarian: cost matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();
    // Potentials u (rows), v (cols); p[j] = row matched to column j; 1-based with sentinel 0.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<Index>  p(n + 1, 0), way(n + 1, 0);
    for (Index i = 1; i <= n; ++i) {
        p[0]       = i;
        Index j0   = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char>   used(n + 1, false);
        do {
            used[j0]    = true;
            const Index i0 = p[j0];
            double      delta = inf;
            Index       j1    = 0;
            for (Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j]  = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1    = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const Index j1 = way[j0];
            p[j0]          = p[j1];
            j0             = j1;
        } while (j0);
    }
    std::vector<Index> assignment(n, -1);
    for (Index j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
    return assignment;
}

SignalMatch match_locations(const std::vector<double>& estimate, const std::vector<double>& truth)
{
    if (estimate.size() != truth.size()) {
        throw DimensionError("match_locations: estimate and truth counts differ");
    }
    const Index   r = static_cast<Index>(truth.size());
    linalg::RMatrix cost(r, r);
    for (Index p = 0; p < r; ++p) {
        for (Index q = 0; q < r; ++q) cost(p, q) = model::wrap_distance(truth[p], estimate[q]);
    }
    SignalMatch m;
    m.assignment = hungarian(cost);
    for (Index p = 0; p < r; ++p) {
        m.errors.push_back(cost(p, m.assignment[p]));
        m.total += m.errors.back();
    }
    return m;
}

std::vector<SignalMatch> match_and_score(const std::vector<std::vector<double>>& estimate,
                                         const std::vector<std::vector<double>>& truth)
{
    if (estimate.size() != truth.size()) {
        throw DimensionError("match_and_score: signal counts differ");
    }
    std::vector<SignalMatch> out;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        out.push_back(match_locations(estimate[k], truth[k]));
    }
    return out;
}

void save_spectrum_csv(const std::filesystem::path& path, const MusicResult& result)
{
    std::ofstream os(path);
    if (!os) throw IOError("cannot open " + path.string() + " for writing");
    os << "tau,value\n";
    for (std::size_t g = 0; g < result.grid.size(); ++g) {
        os << linalg::format_double(result.grid[g]) << ','
           << linalg::format_double(result.spectrum[g]) << '\n';
    }
}

}  // namespace blindsr::post
