#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "blindsr/model.hpp"
#include "blindsr/post.hpp"
#include "blindsr/solver.hpp"
#include "test_util.hpp"

using namespace blindsr;
using linalg::Complex;
using linalg::RVector;
using namespace blindsr::post;
using testutil::random_matrix;

namespace {

CMatrix spikes(const std::vector<double>& taus, Index s, Index n, std::uint64_t seed)
{
    CMatrix x = CMatrix::Zero(s, n);
    for (std::size_t p = 0; p < taus.size(); ++p) {
        x += random_matrix(s, 1, seed + p) * model::steering_vector(taus[p], n).transpose();
    }
    return x;
}

double brute_force_total(const std::vector<double>& est, const std::vector<double>& truth)
{
    std::vector<std::size_t> perm(truth.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t p = 0; p < truth.size(); ++p) total += model::wrap_distance(truth[p], est[perm[p]]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST(Music, SingleSpike)
{
    const auto res = smoothed_music(spikes({0.3}, 2, 32, 1), 1);
    ASSERT_EQ(res.taus.size(), 1u);
    EXPECT_NEAR(res.taus[0], 0.3, 1e-6);
}

TEST(Music, TwoSpikes)
{
    const auto res = smoothed_music(spikes({0.7, 0.2}, 3, 40, 2), 2);
    ASSERT_EQ(res.taus.size(), 2u);
    EXPECT_NEAR(res.taus[0], 0.2, 1e-6);
    EXPECT_NEAR(res.taus[1], 0.7, 1e-6);
}

TEST(Music, SpikeNearWrapPoint)
{
    const auto res = smoothed_music(spikes({0.9999, 0.5}, 2, 48, 3), 2);
    std::vector<double> truth{0.5, 0.9999};
    const auto m = match_locations(res.taus, truth);
    EXPECT_LE(m.total, 2e-6);
}

TEST(Music, DistanceVanishesAtTruth)
{
    const Index   s = 2, n = 40;
    const CMatrix x = spikes({0.15, 0.55, 0.8}, s, n, 4);
    const auto    shape = lift::LiftShape::balanced(s, n);
    const auto    svd   = linalg::svd_truncated(lift::hankel_lift(x, shape), 3);
    MusicOptions  opts;
    opts.keep_spectrum = true;
    const auto res     = smoothed_music(x, 3, opts);
    double max_dist = 0.0;
    for (double v : res.spectrum) max_dist = std::max(max_dist, 1.0 / v);
    for (double t : {0.15, 0.55, 0.8}) {
        EXPECT_LE(music_distance(svd.U, t, s, shape.n1), 1e-8 * max_dist);
    }
    EXPECT_EQ(res.grid.size(), static_cast<std::size_t>(16 * n));
}

TEST(Music, Preconditions)
{
    const CMatrix x = spikes({0.3}, 2, 16, 5);
    EXPECT_THROW(smoothed_music(x, 2), SubspaceDeficientError);
    EXPECT_THROW(smoothed_music(x, 0), DimensionError);
    EXPECT_THROW(smoothed_music(x, 8), DimensionError);
    MusicOptions coarse;
    coarse.grid_size = 8 * 16 - 1;
    EXPECT_THROW(smoothed_music(x, 1, coarse), ValidationError);
    EXPECT_THROW(music_distance(CMatrix::Zero(5, 1), 0.1, 2, 3), DimensionError);
}

TEST(Music, SpectrumCsv)
{
    MusicOptions opts;
    opts.keep_spectrum = true;
    const auto res  = smoothed_music(spikes({0.3}, 1, 16, 6), 1, opts);
    const auto path = std::filesystem::temp_directory_path() / "blindsr_spectrum.csv";
    save_spectrum_csv(path, res);
    std::ifstream is(path);
    std::string   header;
    std::getline(is, header);
    EXPECT_EQ(header, "tau,value");
    std::size_t lines = 0;
    for (std::string line; std::getline(is, line);) ++lines;
    EXPECT_EQ(lines, res.grid.size());
}

TEST(Coefficients, ExactLocationsRecoverProducts)
{
    model::InstanceRecipe recipe;
    recipe.mode   = model::InstanceMode::separated;
    const auto gt = model::generate_instance(recipe, {2, 3, 2, 64}, 7);
    const auto y  = model::sense_forward(gt.bases, model::build_data_matrices(gt));
    std::vector<std::vector<double>> taus(2);
    for (Index k = 0; k < 2; ++k) {
        for (Index p = 0; p < 3; ++p) taus[k].push_back(gt.taus(k, p));
    }
    const auto est = recover_coefficients(taus, gt.bases, y);
    EXPECT_LE(est.residual, 1e-10 * y.norm());
    for (Index k = 0; k < 2; ++k) {
        for (Index p = 0; p < 3; ++p) {
            const CVector truth = gt.product(k, p);
            EXPECT_LE((est.products[k][p] - truth).norm(), 1e-8 * truth.norm());
        }
    }
}

TEST(Coefficients, ScalarOracle)
{
    const Index   n   = 9;
    const double  tau = 0.37;
    const CVector y   = testutil::random_vector(n, 8);
    const CVector a   = model::steering_vector(tau, n);
    Complex       mean = 0.0;
    for (Index j = 0; j < n; ++j) mean += y[j] / a[j];
    mean /= static_cast<double>(n);
    const auto est = recover_coefficients({{tau}}, {CMatrix::Ones(n, 1)}, y);
    EXPECT_NEAR(std::abs(est.products[0][0][0] - mean), 0.0, 1e-12);
}

TEST(Coefficients, ZeroMeasurement)
{
    const auto est = recover_coefficients({{0.1, 0.6}}, {random_matrix(20, 2, 1)}, CVector::Zero(20));
    EXPECT_EQ(est.residual, 0.0);
    EXPECT_EQ(est.products[0][1].norm(), 0.0);
}

TEST(Coefficients, Errors)
{
    const CMatrix b = random_matrix(20, 2, 1);
    EXPECT_THROW(recover_coefficients({{0.1}, {0.1}}, {b, b}, CVector::Zero(20)), RankDeficientError);
    EXPECT_THROW(recover_coefficients({{0.1}}, {b, b}, CVector::Zero(20)), DimensionError);
    EXPECT_THROW(recover_coefficients({{0.1, 0.2, 0.3}}, {random_matrix(5, 2, 1)}, CVector::Zero(5)),
                 DimensionError);
}

TEST(Hungarian, MatchesBruteForce)
{
    std::mt19937_64                        gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Index     n = 1 + trial % 6;
        linalg::RMatrix cost(n, n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) cost(i, j) = trial % 3 ? u(gen) : std::floor(4 * u(gen));
        }
        const auto assignment = hungarian(cost);
        std::vector<Index> seen = assignment;
        std::sort(seen.begin(), seen.end());
        for (Index i = 0; i < n; ++i) ASSERT_EQ(seen[i], i);
        double got = 0.0;
        for (Index i = 0; i < n; ++i) got += cost(i, assignment[i]);
        std::vector<Index> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double total = 0.0;
            for (Index i = 0; i < n; ++i) total += cost(i, perm[i]);
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        EXPECT_NEAR(got, best, 1e-12);
    }
    EXPECT_THROW(hungarian(linalg::RMatrix(2, 3)), DimensionError);
}

TEST(Matching, IdentityAndWrap)
{
    const std::vector<double> t{0.1, 0.5, 0.8};
    EXPECT_EQ(match_locations(t, t).total, 0.0);
    const auto m = match_locations({0.99}, {0.01});
    EXPECT_NEAR(m.total, 0.02, 1e-15);
    EXPECT_THROW(match_locations({0.1}, {0.1, 0.2}), DimensionError);
}

TEST(Matching, PermutedSetsMatchBruteForce)
{
    std::mt19937_64                        gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t r = 1 + trial % 6;
        std::vector<double> truth(r), est(r);
        for (auto& t : truth) t = u(gen);
        for (std::size_t p = 0; p < r; ++p) est[p] = std::fmod(truth[(p + 2) % r] + 0.01 * u(gen), 1.0);
        EXPECT_NEAR(match_locations(est, truth).total, brute_force_total(est, truth), 1e-12);
    }
}

TEST(Pipeline, SolverOutputLocalizes)
{
    model::InstanceRecipe recipe;
    recipe.mode   = model::InstanceMode::separated;
    const auto gt = model::generate_instance(recipe, {2, 3, 2, 96}, 17);
    const auto xs = model::build_data_matrices(gt);
    const auto y  = model::sense_forward(gt.bases, xs);
    solver::SolverConfig c;
    c.rank         = 3;
    c.tol          = 1e-6;
    const auto tr  = solver::run(y, gt.bases, c, &xs);
    ASSERT_LE(tr.final_error(), 1e-4);
    for (Index k = 0; k < 2; ++k) {
        const auto res = smoothed_music(tr.estimates[k], 3);
        std::vector<double> truth;
        for (Index p = 0; p < 3; ++p) truth.push_back(gt.taus(k, p));
        const auto m = match_locations(res.taus, truth);
        for (double e : m.errors) EXPECT_LE(e, 1e-3);
    }
}
