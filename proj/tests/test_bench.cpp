#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "blindsr/bench.hpp"

using namespace blindsr;
using namespace blindsr::bench;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream      is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

ExperimentSpec tiny_sr()
{
    auto spec      = ExperimentSpec::defaults(Family::phase_sr);
    spec.n         = 24;
    spec.s_values  = {1, 2};
    spec.r_values  = {1, 3};
    spec.trials    = 4;
    spec.seed0     = 99;
    return spec;
}

ResultGrid grid_2x2()
{
    ResultGrid g;
    g.row_label   = "s";
    g.col_label   = "r";
    g.value_label = "success_rate";
    g.row_values  = {1, 2};
    g.col_values  = {3, 4};
    g.values.resize(2, 2);
    g.values << 1.0, 0.25, 0.1, 0.0;
    return g;
}

}  // namespace

TEST(ExperimentSpec, Validation)
{
    auto spec   = ExperimentSpec::defaults(Family::phase_sr);
    spec.trials = 0;
    EXPECT_THROW(spec.validate(), ValidationError);
    auto nk     = ExperimentSpec::defaults(Family::phase_nk);
    nk.K_values = {};
    EXPECT_THROW(nk.validate(), ValidationError);
    auto cond   = ExperimentSpec::defaults(Family::cond);
    cond.kappas = {0.5};
    EXPECT_THROW(cond.validate(), ValidationError);
    auto noise    = ExperimentSpec::defaults(Family::noise);
    noise.snrs_db = {};
    EXPECT_THROW(noise.validate(), ValidationError);
    EXPECT_THROW(parse_family("phase"), ValidationError);
}

TEST(ExperimentSpec, Defaults)
{
    const auto sr = ExperimentSpec::defaults(Family::phase_sr);
    EXPECT_EQ(sr.n, 48);
    EXPECT_EQ(sr.K, 2);
    EXPECT_EQ(sr.trials, 20);
    EXPECT_EQ(sr.success_tol, 1e-3);
    EXPECT_EQ(sr.s_values.back(), 8);
    EXPECT_EQ(ExperimentSpec::defaults(Family::phase_sr, true).s_values.back(), 12);
    const auto noise = ExperimentSpec::defaults(Family::noise);
    EXPECT_EQ(noise.snrs_db.size(), 7u);
    EXPECT_EQ(noise.solver.max_iters, 80);
    EXPECT_EQ(ExperimentSpec::defaults(Family::cond).kappas, (std::vector<double>{1, 5, 10, 20}));
}

TEST(ExperimentSpec, JsonRoundTrip)
{
    auto spec      = ExperimentSpec::defaults(Family::noise);
    spec.snrs_db   = {0.0, 30.0, model::kNoiseless};
    spec.seed0     = 0xfedcba9876543210ULL;
    spec.solver.vanilla_eta = 0.01;
    const auto back = spec_from_json(to_json(spec));
    EXPECT_EQ(to_json(back), to_json(spec));
    EXPECT_TRUE(std::isinf(back.snrs_db.back()));
    EXPECT_EQ(back.seed0, spec.seed0);
}

TEST(ExperimentSpec, JsonRejectsUnknownKeys)
{
    auto j     = to_json(ExperimentSpec::defaults(Family::cond));
    j["bogus"] = 1;
    EXPECT_THROW(spec_from_json(j), ParseError);
    auto k               = to_json(ExperimentSpec::defaults(Family::cond));
    k["solver"]["speed"] = 2;
    EXPECT_THROW(spec_from_json(k), ParseError);
    auto s      = to_json(ExperimentSpec::defaults(Family::cond));
    s["schema"] = "exp v2";
    EXPECT_THROW(spec_from_json(s), ParseError);
    EXPECT_THROW(load_spec("/nonexistent/spec.json"), IOError);
}

TEST(ExperimentSpec, PartialJsonKeepsDefaults)
{
    const auto spec = spec_from_json({{"schema", "exp v1"}, {"family", "phase_nk"}, {"trials", 3}});
    EXPECT_EQ(spec.trials, 3);
    EXPECT_EQ(spec.s, 3);
    EXPECT_EQ(spec.mode, model::InstanceMode::separated);
}

TEST(Trials, SeedsArePureFunctions)
{
    EXPECT_EQ(trial_seed(1, Family::phase_sr, 2, 3, 4), trial_seed(1, Family::phase_sr, 2, 3, 4));
    EXPECT_NE(trial_seed(1, Family::phase_sr, 2, 3, 4), trial_seed(1, Family::phase_nk, 2, 3, 4));
    EXPECT_NE(trial_seed(1, Family::phase_sr, 2, 3, 4), trial_seed(1, Family::phase_sr, 3, 2, 4));
}

TEST(Trials, InfeasibleInstanceIsFailureNotThrow)
{
    auto spec = ExperimentSpec::defaults(Family::phase_nk);
    model::InstanceRecipe recipe;
    recipe.mode = model::InstanceMode::separated;
    const auto out = run_trial(spec, recipe, {8, 3, 3, 16}, 1);
    EXPECT_FALSE(out.success);
    EXPECT_FALSE(out.failure.empty());
}

TEST(PhaseSr, CellsReplayAndIgnoreThreadCount)
{
    auto spec    = tiny_sr();
    spec.threads = 1;
    const auto a = run_phase_sr(spec);
    spec.threads = 3;
    const auto b = run_phase_sr(spec);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.seeds, b.seeds);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_EQ(a.values(i, j), run_phase_sr_cell(spec, spec.s_values[i], spec.r_values[j]));
            EXPECT_GE(a.values(i, j), 0.0);
            EXPECT_LE(a.values(i, j), 1.0);
        }
    }
    EXPECT_THROW(run_phase_nk(spec), ValidationError);
}

TEST(PhaseSr, EasyCellSucceeds)
{
    const auto spec = ExperimentSpec::defaults(Family::phase_sr);
    EXPECT_GE(run_phase_sr_cell(spec, 1, 1), 0.95);
}

TEST(PhaseNk, TrendsInNAndK)
{
    auto spec     = ExperimentSpec::defaults(Family::phase_nk);
    spec.n_values = {16, 32, 48, 64};
    spec.K_values = {1, 3};
    spec.trials   = 10;
    const auto g  = run_phase_nk(spec);
    // Smoothed (pairwise mean) rates are nondecreasing in n, within one trial.
    for (Index j = 0; j < 2; ++j) {
        for (Index i = 1; i + 1 < 4; ++i) {
            const double prev = 0.5 * (g.values(i - 1, j) + g.values(i, j));
            const double next = 0.5 * (g.values(i, j) + g.values(i + 1, j));
            EXPECT_GE(next, prev - 0.1);
        }
    }
    double k1 = 0.0, k3 = 0.0;
    for (Index i = 0; i < 4; ++i) {
        k1 += g.values(i, 0);
        k3 += g.values(i, 1);
    }
    EXPECT_GT(k1, k3);
}

TEST(PhaseNk, BoundarySlopeFit)
{
    ResultGrid g;
    g.row_values = {8, 16, 24, 32, 40};
    g.col_values = {1, 2, 3};
    g.values     = linalg::RMatrix::Zero(5, 3);
    // Success starts at n = 8 K exactly.
    for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 3; ++j) g.values(i, j) = g.row_values[i] >= 8 * g.col_values[j] ? 1.0 : 0.0;
    }
    EXPECT_NEAR(fit_boundary_slope(g).value(), 8.0, 1e-12);
    g.values.setZero();
    EXPECT_FALSE(fit_boundary_slope(g).has_value());
}

TEST(Cond, LogLinearFit)
{
    std::vector<solver::TraceRow> rows;
    for (Index t = 0; t < 40; ++t) rows.push_back({t, std::pow(0.7, t), 0, 0, 0});
    EXPECT_NEAR(log_linear_r2(rows, 5, 1e-12), 1.0, 1e-12);
    EXPECT_TRUE(std::isnan(log_linear_r2(rows, 39, 1e-12)));
}

TEST(Cond, TracesPerKappaAndMode)
{
    auto spec              = ExperimentSpec::defaults(Family::cond);
    spec.kappas            = {1.0, 10.0};
    spec.vanilla_max_iters = 200;
    const auto res         = run_cond(spec);
    ASSERT_EQ(res.traces.size(), 4u);
    for (const auto& tr : res.traces) {
        EXPECT_TRUE(tr.failure.empty());
        if (tr.mode == solver::StepMode::scaled) {
            ASSERT_TRUE(tr.iters_to_1e4.has_value());
            EXPECT_LE(*tr.iters_to_1e4, 150);
            EXPECT_GE(tr.r_squared, 0.99);
        }
    }
}

TEST(Noise, ErrorTracksNoiseLevel)
{
    auto spec     = ExperimentSpec::defaults(Family::noise);
    spec.n        = 96;
    spec.K        = 2;
    spec.trials   = 5;
    spec.snrs_db  = {20.0, 40.0, model::kNoiseless};
    const auto res = run_noise(spec);
    ASSERT_EQ(res.rows.size(), 3u);
    EXPECT_LE(res.rows[2].median_rel_err, 1e-4);
    const double ratio = res.rows[0].median_rel_err / res.rows[1].median_rel_err;
    EXPECT_GE(ratio, 5.0);
    EXPECT_LE(ratio, 20.0);
}

TEST(GridCsv, RoundTripBitExact)
{
    auto g        = grid_2x2();
    g.values(0, 1) = 1.0 / 3.0;
    std::stringstream ss;
    write_grid_csv(ss, g);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "s,r,success_rate");
    const auto back = read_grid_csv(ss);
    EXPECT_EQ(back.values, g.values);
    EXPECT_EQ(back.row_values, g.row_values);
    EXPECT_EQ(back.col_values, g.col_values);
    EXPECT_EQ(back.row_label, "s");
    std::stringstream ragged("s,r,v\n1,1,0\n1,2,1\n2,1,0\n");
    EXPECT_THROW(read_grid_csv(ragged), ParseError);
}

TEST(Svg, HeatmapCellsParseBack)
{
    const auto  g   = grid_2x2();
    const auto  svg = heatmap_svg(g, "t", {Overlay::Kind::hyperbola, 6.0});
    std::regex  cell(R"re(<rect class="cell"[^>]*data-row="([^"]+)" data-col="([^"]+)" data-value="([^"]+)")re");
    std::size_t count = 0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it) {
        const double row = std::stod((*it)[1]), col = std::stod((*it)[2]), v = std::stod((*it)[3]);
        const auto   i = row == 1 ? 0 : 1, j = col == 3 ? 0 : 1;
        EXPECT_EQ(v, g.values(i, j));
        ++count;
    }
    EXPECT_EQ(count, 4u);
    EXPECT_NE(svg.find("class=\"overlay\""), std::string::npos);
    EXPECT_EQ(svg, heatmap_svg(g, "t", {Overlay::Kind::hyperbola, 6.0}));
    EXPECT_NE(svg.find("fill=\"#ffffff\" data-row=\"1\" data-col=\"3\""), std::string::npos);
    EXPECT_NE(svg.find("fill=\"#000000\" data-row=\"2\" data-col=\"4\""), std::string::npos);
}

TEST(Svg, EmptyInputsRejected)
{
    ResultGrid empty;
    EXPECT_THROW(heatmap_svg(empty, "t", {}), ValidationError);
    EXPECT_THROW(line_chart_svg({}, "t", "x", "y", false), ValidationError);
    EXPECT_THROW(line_chart_svg({{"a", {1.0}, {}, false}}, "t", "x", "y", false), ValidationError);
}

TEST(Svg, LineChartDeterministic)
{
    const std::vector<Series> s = {{"a", {0, 1, 2}, {1, 0.1, 0.01}, false},
                                   {"b", {0, 1, 2}, {1, 0.5, 0.25}, true}};
    const auto svg = line_chart_svg(s, "t", "x", "y", true);
    EXPECT_EQ(svg, line_chart_svg(s, "t", "x", "y", true));
    EXPECT_NE(svg.find("data-label=\"b\""), std::string::npos);
    EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
}

TEST(RunAndEmit, WritesReproducibleArtifacts)
{
    const auto root = std::filesystem::temp_directory_path() / "blindsr_emit";
    std::filesystem::remove_all(root);
    auto spec = tiny_sr();
    const auto dir = run_and_emit(spec, root / "a");
    EXPECT_EQ(dir, root / "a" / "phase_sr");
    for (const char* f : {"grid.csv", "plot.svg", "manifest.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    spec.threads = 2;
    const auto again = run_and_emit(spec, root / "b");
    EXPECT_EQ(slurp(dir / "grid.csv"), slurp(again / "grid.csv"));
    EXPECT_EQ(slurp(dir / "plot.svg"), slurp(again / "plot.svg"));

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["tool"], kToolVersion);
    EXPECT_EQ(manifest["seeds"][1][0][2].get<std::uint64_t>(), trial_seed(99, Family::phase_sr, 2, 1, 2));
    const auto replay = spec_from_json(manifest["spec"]);
    EXPECT_EQ(run_phase_sr_cell(replay, 2, 3), read_grid_csv(*std::make_unique<std::ifstream>(dir / "grid.csv")).values(1, 1));
}
