#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "tvprox/io.hpp"

using namespace tvprox;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               (std::string("tvprox_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write_text(const std::string& name, const std::string& body) const { std::ofstream(path(name)) << body; }

    std::string read_text(const std::string& name) const {
        std::ifstream in(path(name));
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    /// Runs the CLI with stdout and stderr captured; returns the exit status.
    int run(const std::string& args) {
        const std::string cmd = std::string("\"") + TVPROX_CLI_PATH + "\" " + args + " >\"" + path("stdout") +
                                "\" 2>\"" + path("stderr") + "\"";
        const int status = std::system(cmd.c_str());
        out_ = read_text("stdout");
        err_ = read_text("stderr");
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path dir_;
    std::string out_, err_;
};

}  // namespace

TEST_F(CliTest, Prox1dTwoPoint) {
    write_text("y.csv", "0\n2\n");
    ASSERT_EQ(run("prox1d --input " + path("y.csv") + " --lambda 0.5 --output " + path("x.csv")), 0) << err_;
    const Vector x = read_csv_column(path("x.csv"));
    ASSERT_EQ(x.size(), 2u);
    EXPECT_NEAR(x[0], 0.5, 1e-12);
    EXPECT_NEAR(x[1], 1.5, 1e-12);
    const auto report = nlohmann::json::parse(out_);
    EXPECT_TRUE(report["converged"].get<bool>());
}

TEST_F(CliTest, Prox1dToStdoutWithWeights) {
    write_text("y.csv", "0\n4\n-4\n0\n");
    write_text("w.csv", "1\n0\n1\n");
    ASSERT_EQ(run("prox1d -i " + path("y.csv") + " --weights " + path("w.csv") + " --solver pn"), 0) << err_;
    std::stringstream ss(out_);
    double a, b, c, d;
    ss >> a >> b >> c >> d;
    EXPECT_NEAR(a, 1, 1e-9);
    EXPECT_NEAR(b, 3, 1e-9);
    EXPECT_NEAR(c, -3, 1e-9);
    EXPECT_NEAR(d, -1, 1e-9);
    EXPECT_NE(err_.find("\"solver\":\"pn\""), std::string::npos);
}

TEST_F(CliTest, Prox1dLpAndNonConvergence) {
    write_text("y.csv", "0\n1\n5\n-2\n3\n0.5\n");
    EXPECT_EQ(run("prox1d -i " + path("y.csv") + " --lambda 0.7 --p 1.5 -o " + path("x.csv")), 0) << err_;
    EXPECT_EQ(run("prox1d -i " + path("y.csv") + " --lambda 0.7 --p 1.5 --solver fw --max-iter 1 --tol 1e-15 -o " +
                  path("x.csv")),
              2);
}

TEST_F(CliTest, IoErrorsExitThree) {
    EXPECT_EQ(run("prox1d -i " + path("missing.csv") + " --lambda 1"), 3);
    write_text("bad.csv", "1\nfoo\n");
    EXPECT_EQ(run("prox1d -i " + path("bad.csv") + " --lambda 1"), 3);
    write_text("bad.pgm", "P7\n");
    EXPECT_EQ(run("prox2d -i " + path("bad.pgm") + " --lambda-rows 1 --lambda-cols 1 -o " + path("o.pgm")), 3);
}

TEST_F(CliTest, UsageErrors) {
    write_text("y.csv", "0\n2\n");
    EXPECT_EQ(run("prox1d -i " + path("y.csv")), 1);
    EXPECT_EQ(run("prox1d -i " + path("y.csv") + " --lambda 1 --solver taut"), 1);
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("--help"), 0);
}

TEST_F(CliTest, Prox2dOnPgm) {
    write_text("img.pgm", "P2\n2 2\n4\n0 4\n0 4\n");
    ASSERT_EQ(run("prox2d -i " + path("img.pgm") +
                  " --lambda-rows 0.125 --lambda-cols 0.125 --combiner pd --stop-tol 1e-9 -o " + path("out.tvt")),
              0)
        << err_;
    const TensorND x = read_tvt(path("out.tvt"));
    EXPECT_NEAR(x[0], 0.125, 1e-7);
    EXPECT_NEAR(x[1], 0.875, 1e-7);
    ASSERT_EQ(run("prox2d -i " + path("img.pgm") + " --lambda-rows 0.1 --lambda-cols 0.1 -o " + path("out.pgm")), 0);
    EXPECT_EQ(read_pgm(path("out.pgm")).dims(), (Dims{2, 2}));
}

TEST_F(CliTest, ProxNdSpec) {
    write_tvt(path("t.tvt"), TensorND({2, 2, 2}, Vector{0, 1, 0, 1, 2, 3, 2, 3}));
    ASSERT_EQ(run("proxnd -i " + path("t.tvt") + " --spec 0=0.1:1,2=0.1:2 --combiner admm --workers 2 -o " +
                  path("o.tvt")),
              0)
        << err_;
    EXPECT_EQ(read_tvt(path("o.tvt")).dims(), (Dims{2, 2, 2}));
    EXPECT_EQ(run("proxnd -i " + path("t.tvt") + " --spec 5=1 -o " + path("o.tvt")), 1);
    EXPECT_EQ(run("proxnd -i " + path("t.tvt") + " --spec 0=1,0=2 -o " + path("o.tvt")), 1);
    EXPECT_EQ(run("proxnd -i " + path("t.tvt") + " --spec 0=1,1=1,2=1 --combiner dr -o " + path("o.tvt")), 1);
}

TEST_F(CliTest, FlsaAndFusedLasso) {
    write_text("y.csv", "0\n2\n");
    ASSERT_EQ(run("flsa -i " + path("y.csv") + " --l1 0.2 --l2 0.5 -o " + path("x.csv")), 0) << err_;
    const Vector x = read_csv_column(path("x.csv"));
    EXPECT_NEAR(x[0], 0.3, 1e-10);
    EXPECT_NEAR(x[1], 1.3, 1e-10);

    write_text("A.csv", "1,0\n0,1\n");
    ASSERT_EQ(run("fusedlasso --design " + path("A.csv") + " --response " + path("y.csv") +
                  " --l1 0.2 --l2 0.5 --loss ls -o " + path("b.csv")),
              0)
        << err_;
    const Vector b = read_csv_column(path("b.csv"));
    EXPECT_NEAR(b[0], 0.3, 1e-6);
    EXPECT_NEAR(b[1], 1.3, 1e-6);
    EXPECT_EQ(run("fusedlasso --design " + path("A.csv") + " --response " + path("y.csv") +
                  " --l1 0.2 --l2 0.5 --loss logistic"),
              1);
}

TEST_F(CliTest, DenoiseAndIsnr) {
    write_text("clean.pgm", "P2\n4 4\n10\n2 2 8 8\n2 2 8 8\n5 5 1 1\n5 5 1 1\n");
    write_text("noisy.pgm", "P2\n4 4\n10\n3 1 9 7\n2 3 8 9\n4 5 2 1\n6 5 1 0\n");
    ASSERT_EQ(run("denoise -i " + path("noisy.pgm") + " --lambda 0.05 --original " + path("clean.pgm") + " -o " +
                  path("den.tvt")),
              0)
        << err_;
    const auto report = nlohmann::json::parse(out_);
    EXPECT_TRUE(report.contains("isnr_db"));
    ASSERT_EQ(run("isnr --original " + path("clean.pgm") + " --noisy " + path("noisy.pgm") + " --restored " +
                  path("den.tvt")),
              0);
    EXPECT_NEAR(std::stod(out_), report["isnr_db"].get<double>(), 1e-9);
    ASSERT_EQ(run("isnr --original " + path("clean.pgm") + " --noisy " + path("noisy.pgm") + " --restored " +
                  path("noisy.pgm")),
              0);
    EXPECT_EQ(out_, "-inf\n");
}

TEST_F(CliTest, BenchEmitsJson) {
    ASSERT_EQ(run("bench --scenario size --max-n 100 --repeats 1 --solver classic --solver pn --emit " +
                  path("b.json")),
              0)
        << err_;
    const auto doc = nlohmann::json::parse(read_text("b.json"));
    EXPECT_EQ(doc["scenario"], "size");
    EXPECT_EQ(doc["grid"].size(), 2u);
    EXPECT_EQ(doc["solver"], (nlohmann::json{"classic", "pn"}));
    ASSERT_EQ(doc["cells"].size(), 4u);
    for (const auto& c : doc["cells"]) {
        EXPECT_TRUE(c.contains("wall_ns"));
        EXPECT_TRUE(c.contains("inner_steps"));
        EXPECT_TRUE(c.contains("gap"));
    }
}

TEST_F(CliTest, WorstCaseSignal) {
    ASSERT_EQ(run("worstcase --n 16 --lambda 1 -o " + path("w.csv")), 0);
    EXPECT_EQ(read_csv_column(path("w.csv")).size(), 16u);
    EXPECT_EQ(run("worstcase --n 2"), 1);
}
