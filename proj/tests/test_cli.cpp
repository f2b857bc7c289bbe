#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "andersonkit/matrix_market.hpp"
#include "support/test_support.hpp"

namespace fs = std::filesystem;
namespace tt = ank::testing;

namespace {

const char* cli_path() { return ANDERSONKIT_CLI_PATH; }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(cli_path()) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// non-timing CSV content: strip the wall-time column from trace rows
std::string strip_time_columns(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t comma = line.rfind(',');
        if (!line.empty() && line[0] != '#' && comma != std::string::npos &&
            line.find("iteration") == std::string::npos)
            out << line.substr(0, comma) << "\n";
        else
            out << line << "\n";
    }
    return out.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / "ank_cli_test";
        fs::create_directories(dir_);
        std::ofstream out(dir_ / "eye.mtx");
        write_matrix_market(out, ank::identity_matrix(8));
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

} // namespace

TEST_F(CliTest, SolveWithBenchmarkFlagsConverges) {
    const fs::path trace = dir_ / "trace.csv";
    const int code = run_cli("solve " + (dir_ / "eye.mtx").string() +
                             " --mode alternating_aa --omega 0.2 --p 3 --m 20 --tol 1e-8"
                             " --out " + trace.string());
    EXPECT_EQ(code, 0);
    const std::string csv = slurp(trace);
    EXPECT_NE(csv.find("mode=alternating_aa omega=0.2 p=3 m=20 tol=1e-08"),
              std::string::npos);
    EXPECT_NE(csv.find("iteration,residual_norm,was_anderson_step,reduced_dimension_s,"
                       "rollback,wall_time_s"),
              std::string::npos);
}

TEST_F(CliTest, MissingMatrixFileExitsOneWithoutOutput) {
    const fs::path out = dir_ / "never.csv";
    const int code =
        run_cli("solve " + (dir_ / "missing.mtx").string() + " --out " + out.string());
    EXPECT_EQ(code, 1);
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliTest, IdentityAnyModeConvergesFast) {
    for (const std::string mode : {"picard", "aa", "alternating_aa"}) {
        const int code = run_cli("solve " + (dir_ / "eye.mtx").string() + " --mode " + mode +
                                 " --omega 1.0");
        EXPECT_EQ(code, 0) << mode;
    }
}

TEST_F(CliTest, NonConvergenceExitsTwo) {
    // relaxed iteration with a hopeless budget on a non-trivial system
    std::ofstream out(dir_ / "cd.mtx");
    write_matrix_market(out, tt::convection_diffusion_matrix(6));
    out.close();
    const int code = run_cli("solve " + (dir_ / "cd.mtx").string() +
                             " --mode picard --omega 1e-9 --max-iter 5");
    EXPECT_EQ(code, 2);
}

TEST_F(CliTest, PerturbDefaultSweepShape) {
    const fs::path out = dir_ / "perturb.csv";
    const int code = run_cli("perturb --seed 5 --out " + out.string());
    EXPECT_EQ(code, 0);
    const std::string csv = slurp(out);
    // baseline + four magnitudes
    for (const std::string eps :
         {"\n0,", "\n1e-08,", "\n9.9999999999999995e-07,", "\n0.0001,", "\n1,"})
        EXPECT_NE(csv.find(eps), std::string::npos) << eps;
}

TEST_F(CliTest, PerturbEpsZeroIsBaselineOnly) {
    const fs::path out = dir_ / "p0.csv";
    const int code = run_cli("perturb --eps 0 --seed 5 --out " + out.string());
    EXPECT_EQ(code, 0);
    std::istringstream in(slurp(out));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.find("epsilon") == 0) continue;
        EXPECT_EQ(line.substr(0, 2), "0,");
    }
}

TEST_F(CliTest, PerturbDeterministicAcrossRuns) {
    const fs::path out1 = dir_ / "d1.csv";
    const fs::path out2 = dir_ / "d2.csv";
    ASSERT_EQ(run_cli("perturb --eps 1e-6 --seed 7 --out " + out1.string()), 0);
    ASSERT_EQ(run_cli("perturb --eps 1e-6 --seed 7 --out " + out2.string()), 0);
    EXPECT_EQ(slurp(out1), slurp(out2)); // byte-identical (no timing columns)
}

TEST_F(CliTest, BenchEmptyDirectoryExitsOne) {
    const fs::path empty = dir_ / "empty";
    fs::create_directories(empty);
    EXPECT_EQ(run_cli("bench " + empty.string()), 1);
}

TEST_F(CliTest, BenchPaperConfigurationRuns) {
    const fs::path out = dir_ / "records.csv";
    std::ofstream cd(dir_ / "cd.mtx");
    write_matrix_market(cd, tt::convection_diffusion_matrix(8));
    cd.close();
    const int code = run_cli("bench " + dir_.string() +
                             " --precond ilut --tau 1e-4 --solvers gmres --restart 50"
                             " --omega 0.2 --out " + out.string());
    EXPECT_EQ(code, 0);
    const std::string csv = slurp(out);
    EXPECT_NE(csv.find("gmres"), std::string::npos);
    EXPECT_NE(csv.find("precond=ilut tau=0.0001 restart=50"), std::string::npos);
}

TEST_F(CliTest, BenchSolveTraceDeterminismAcrossRuns) {
    std::ofstream cd(dir_ / "cd.mtx");
    write_matrix_market(cd, tt::convection_diffusion_matrix(7));
    cd.close();
    const fs::path t1 = dir_ / "t1.csv";
    const fs::path t2 = dir_ / "t2.csv";
    const std::string flags = " --mode reduced_alternating_aa --projection randomized"
                              " --omega 0.2 --p 3 --m 10 --seed 11 --precond ilu0 --out ";
    ASSERT_EQ(run_cli("solve " + (dir_ / "cd.mtx").string() + flags + t1.string()), 0);
    ASSERT_EQ(run_cli("solve " + (dir_ / "cd.mtx").string() + flags + t2.string()), 0);
    EXPECT_EQ(strip_time_columns(slurp(t1)), strip_time_columns(slurp(t2)));
}

TEST_F(CliTest, ConfigFileComposesWithFlagsWinning) {
    const fs::path cfg = dir_ / "run.cfg";
    {
        std::ofstream out(cfg);
        out << "# solver configuration\n";
        out << "omega=0.5\n";
        out << "m=7\n";
    }
    const fs::path trace = dir_ / "cfg_trace.csv";
    const int code = run_cli("solve " + (dir_ / "eye.mtx").string() + " --config " +
                             cfg.string() + " --omega 1.0 --out " + trace.string());
    EXPECT_EQ(code, 0);
    const std::string csv = slurp(trace);
    EXPECT_NE(csv.find("omega=1"), std::string::npos); // flag beats config
    EXPECT_NE(csv.find("m=7"), std::string::npos);     // config value applies
}

TEST_F(CliTest, BoltzmannTinySuiteRuns) {
    const fs::path out = dir_ / "boltz.csv";
    const int code = run_cli("boltzmann --densities 0.5 --solvers picard,alternating_aa"
                             " --repeats 1 --m 3 --p 3 --out " + out.string());
    EXPECT_EQ(code, 0);
    const std::string csv = slurp(out);
    EXPECT_NE(csv.find("density,solver,mean_iterations,mean_wall_time_s,converged"),
              std::string::npos);
    EXPECT_NE(csv.find("repeats=1: single-run timings"), std::string::npos);
    EXPECT_NE(csv.find("m=3"), std::string::npos);
}
