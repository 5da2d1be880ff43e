#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "blindsr/linalg.hpp"
#include "blindsr/model.hpp"
#include "blindsr/solver.hpp"
#include "cli.hpp"

using namespace blindsr;
namespace fs = std::filesystem;

namespace {

struct Result {
    int         code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int          code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("blindsr_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream      is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::size_t data_lines(const fs::path& p)
{
    std::ifstream is(p);
    std::string   line;
    std::getline(is, line);
    std::size_t n = 0;
    while (std::getline(is, line)) n += !line.empty();
    return n;
}

}  // namespace

TEST(Cli, VersionAndHelp)
{
    EXPECT_EQ(run({"--version"}).code, 0);
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({}).code, cli::kUsage);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
}

TEST(Cli, SynthWritesDeterministicFiles)
{
    const auto a = scratch("synth_a"), b = scratch("synth_b");
    const std::vector<std::string> common = {"synth", "--n", "32", "--K", "2", "--s", "2", "--r", "2",
                                             "--seed", "5"};
    auto args_a = common, args_b = common;
    args_a.insert(args_a.end(), {"--out", a.string()});
    args_b.insert(args_b.end(), {"--out", b.string()});
    ASSERT_EQ(run(args_a).code, 0);
    ASSERT_EQ(run(args_b).code, 0);
    for (const char* f : {"basis_0.cmx", "basis_1.cmx", "gt.json", "measurement.csv", "manifest.json"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        if (std::string(f) != "gt.json" && std::string(f) != "manifest.json") {
            EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
        }
    }
    // The measurement is the forward model applied to the stored truth.
    const auto gt = model::load_ground_truth(a / "gt.json");
    const auto y  = model::load_measurement_csv(a / "measurement.csv");
    EXPECT_LE((y - model::sense_forward(gt.bases, model::build_data_matrices(gt))).norm(), 1e-12 * y.norm());
}

TEST(Cli, SynthUsageErrors)
{
    const auto dir = scratch("synth_bad");
    EXPECT_EQ(run({"synth", "--K", "1", "--s", "1", "--r", "1", "--out", dir.string()}).code, cli::kUsage);
    EXPECT_EQ(run({"synth", "--n", "8", "--K", "1", "--s", "1", "--r", "5", "--out", dir.string()}).code,
              cli::kUsage);
    EXPECT_EQ(run({"synth", "--n", "8", "--K", "1", "--s", "1", "--r", "1", "--mode", "odd", "--out",
                   dir.string()})
                  .code,
              cli::kUsage);
}

TEST(Cli, SynthNoiseLevel)
{
    const auto clean = scratch("noise_clean"), noisy = scratch("noise_20");
    const std::vector<std::string> common = {"synth", "--n", "256", "--K", "2", "--s", "2", "--r", "2",
                                             "--seed", "8"};
    auto a = common, b = common;
    a.insert(a.end(), {"--out", clean.string()});
    b.insert(b.end(), {"--out", noisy.string(), "--snr", "20"});
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    const auto y0 = model::load_measurement_csv(clean / "measurement.csv");
    const auto y1 = model::load_measurement_csv(noisy / "measurement.csv");
    EXPECT_NEAR((y1 - y0).norm() / y0.norm(), 0.1, 1e-9);
}

TEST(Cli, SynthConfigFile)
{
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "c.json");
        cfg << R"({"n": 24, "K": 1, "s": 1, "r": 2, "seed": 3})";
    }
    ASSERT_EQ(run({"synth", "--config", (dir / "c.json").string(), "--r", "1", "--out", (dir / "o").string()}).code,
              0);
    const auto gt = model::load_ground_truth(dir / "o" / "gt.json");
    EXPECT_EQ(gt.dims.n, 24);
    EXPECT_EQ(gt.dims.r, 1);
    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"n": 24, "colour": "red"})";
    }
    EXPECT_NE(run({"synth", "--config", (dir / "bad.json").string(), "--out", (dir / "p").string()}).code, 0);
}

TEST(Cli, SolveConditionedInstance)
{
    const auto data = scratch("solve_data"), out = scratch("solve_out");
    ASSERT_EQ(run({"synth", "--n", "128", "--K", "2", "--s", "2", "--r", "2", "--mode", "conditioned",
                   "--kappa", "5", "--seed", "2", "--out", data.string()})
                  .code,
              0);
    const auto res = run({"solve", "--in", data.string(), "--max-iters", "150", "--tol", "1e-10", "--out",
                          out.string()});
    ASSERT_EQ(res.code, 0) << res.err;
    std::ifstream trace_in(out / "trace.csv");
    const auto    trace = solver::read_trace_csv(trace_in);
    ASSERT_FALSE(trace.empty());
    EXPECT_LE(trace.size(), 151u);
    bool reached = false;
    for (const auto& row : trace) reached = reached || row.rel_err <= 1e-4;
    EXPECT_TRUE(reached);
    for (const char* f : {"xhat_0.cmx", "xhat_1.cmx", "L_0.cmx", "R_1.cmx", "summary.json"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }

    const auto vout = scratch("solve_vanilla");
    EXPECT_EQ(run({"solve", "--in", data.string(), "--mode", "vanilla", "--max-iters", "20", "--out",
                   vout.string()})
                  .code,
              0);
    EXPECT_EQ(data_lines(vout / "trace.csv"), 21u);
}

TEST(Cli, SolveReportsCorruptBasis)
{
    const auto data = scratch("corrupt"), out = scratch("corrupt_out");
    ASSERT_EQ(run({"synth", "--n", "16", "--K", "1", "--s", "1", "--r", "1", "--out", data.string()}).code, 0);
    {
        std::ofstream os(data / "basis_0.cmx");
        os << "cmx 16 1\n1 0\nnot-a-number 0\n";
    }
    const auto res = run({"solve", "--in", data.string(), "--out", out.string()});
    EXPECT_EQ(res.code, cli::kIO);
    EXPECT_NE(res.err.find("line 3"), std::string::npos) << res.err;
    EXPECT_EQ(run({"solve", "--in", (data / "missing").string()}).code, cli::kIO);
}

TEST(Cli, SolveDimensionMismatchNamesFiles)
{
    const auto a = scratch("dim_a"), b = scratch("dim_b");
    ASSERT_EQ(run({"synth", "--n", "16", "--K", "1", "--s", "1", "--r", "1", "--out", a.string()}).code, 0);
    ASSERT_EQ(run({"synth", "--n", "20", "--K", "1", "--s", "1", "--r", "1", "--out", b.string()}).code, 0);
    const auto res = run({"solve", "--measurement", (a / "measurement.csv").string(), "--basis",
                          (b / "basis_0.cmx").string(), "--rank", "1", "--out", scratch("dim_o").string()});
    EXPECT_EQ(res.code, cli::kUsage);
    EXPECT_NE(res.err.find("basis_0.cmx"), std::string::npos);
    EXPECT_NE(res.err.find("measurement.csv"), std::string::npos);
}

TEST(Cli, ExtractEndToEnd)
{
    const auto data = scratch("e2e_data"), sol = scratch("e2e_solve"), est = scratch("e2e_est");
    ASSERT_EQ(run({"synth", "--n", "256", "--K", "2", "--s", "4", "--r", "4", "--mode", "separated",
                   "--seed", "3", "--out", data.string()})
                  .code,
              0);
    ASSERT_EQ(run({"solve", "--in", data.string(), "--max-iters", "100", "--tol", "0", "--out", sol.string()})
                  .code,
              0);
    const auto res = run({"extract", "--in", sol.string(), "--data", data.string(), "--out", est.string()});
    ASSERT_EQ(res.code, 0) << res.err;
    EXPECT_EQ(data_lines(est / "report.csv"), 8u);
    const auto score = nlohmann::json::parse(slurp(est / "score.json"));
    EXPECT_LE(score["max_location_error"].get<double>(), 1e-4);
    const auto doc = model::read_spike_document(est / "estimate.json");
    EXPECT_EQ(doc.dims.r, 4);

    EXPECT_EQ(run({"extract", "--in", sol.string(), "--data", data.string(), "--rank", "200", "--out",
                   est.string()})
                  .code,
              cli::kUsage);
}

TEST(Cli, ExtractSubspaceDeficient)
{
    const auto data = scratch("def_data"), sol = scratch("def_solve");
    ASSERT_EQ(run({"synth", "--n", "32", "--K", "1", "--s", "1", "--r", "1", "--mode", "separated", "--out",
                   data.string()})
                  .code,
              0);
    ASSERT_EQ(run({"solve", "--in", data.string(), "--out", sol.string()}).code, 0);
    // An exact single-spike estimate has a one-dimensional signal subspace.
    const auto gt = model::load_ground_truth(data / "gt.json");
    linalg::save_cmx(sol / "xhat_0.cmx", model::build_data_matrix(gt, 0));
    const auto res = run({"extract", "--in", sol.string(), "--data", data.string(), "--no-truth", "--rank", "3",
                          "--out", scratch("def_est").string()});
    EXPECT_EQ(res.code, cli::kNumerical) << res.err;
}

TEST(Cli, BenchCondAndNoise)
{
    const auto out = scratch("bench");
    auto       res = run({"bench", "cond", "--kappas", "1,20", "--out", out.string()});
    ASSERT_EQ(res.code, 0) << res.err;
    const auto manifest = nlohmann::json::parse(slurp(out / "cond" / "manifest.json"));
    EXPECT_EQ(manifest["spec"]["kappas"].size(), 2u);
    EXPECT_TRUE(fs::exists(out / "cond" / "plot.svg"));

    res = run({"bench", "noise", "--snr", "0:10:60", "--trials", "2", "--out", out.string()});
    ASSERT_EQ(res.code, 0) << res.err;
    EXPECT_EQ(data_lines(out / "noise" / "grid.csv"), 7u);

    EXPECT_EQ(run({"bench", "phase_xy", "--out", out.string()}).code, cli::kUsage);
    EXPECT_EQ(run({"bench", "noise", "--snr", "10:0:60", "--out", out.string()}).code, cli::kUsage);
}

TEST(Cli, BenchConfigRejectsUnknownKeys)
{
    const auto dir = scratch("bench_cfg");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "c.json");
        cfg << R"({"trials": 2, "speed": "fast"})";
    }
    const auto res = run({"bench", "phase_sr", "--config", (dir / "c.json").string(), "--out", dir.string()});
    EXPECT_NE(res.code, 0);
    EXPECT_NE(res.err.find("speed"), std::string::npos) << res.err;
}
