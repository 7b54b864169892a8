#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "test_util.hpp"
#include "tvprox/io.hpp"

using namespace tvprox;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("tvprox_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    void write_text(const std::string& name, const std::string& body) const {
        std::ofstream(path(name), std::ios::binary) << body;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(IoTest, CsvColumnRoundTripIsExact) {
    std::mt19937_64 rng(1);
    const Vector v = testutil::normal_vector(rng, 100, 1e3);
    write_csv_column(path("a.csv"), v);
    EXPECT_EQ(read_csv_column(path("a.csv")), v);
}

TEST_F(IoTest, CsvSkipsCommentsAndBlanks) {
    write_text("b.csv", "# header\n1.5\n\n  -2 \r\n# note\n3e-1\n");
    EXPECT_EQ(read_csv_column(path("b.csv")), (Vector{1.5, -2, 0.3}));
}

TEST_F(IoTest, CsvRejectsGarbage) {
    write_text("c.csv", "1\nabc\n");
    EXPECT_THROW(read_csv_column(path("c.csv")), IoError);
    write_text("d.csv", "1\nnan\n");
    EXPECT_THROW(read_csv_column(path("d.csv")), IoError);
    EXPECT_THROW(read_csv_column(path("missing.csv")), IoError);
}

TEST_F(IoTest, CsvMatrix) {
    const DenseMatrix m{2, 3, {1, 2, 3, 4, 5, 6.25}};
    write_csv_matrix(path("m.csv"), m);
    const DenseMatrix back = read_csv_matrix(path("m.csv"));
    EXPECT_EQ(back.rows, 2u);
    EXPECT_EQ(back.cols, 3u);
    EXPECT_EQ(back.data, m.data);
    write_text("ragged.csv", "1,2\n3\n");
    EXPECT_THROW(read_csv_matrix(path("ragged.csv")), IoError);
    write_text("empty.csv", "# nothing\n");
    EXPECT_THROW(read_csv_matrix(path("empty.csv")), IoError);
}

TEST_F(IoTest, PgmRoundTripWithinHalfStep) {
    std::mt19937_64 rng(2);
    TensorND img({7, 5}, testutil::uniform_vector(rng, 35, 0, 1));
    for (bool binary : {true, false}) {
        for (std::size_t maxval : {255u, 1000u, 65535u}) {
            write_pgm(path("x.pgm"), img, binary, maxval);
            const TensorND back = read_pgm(path("x.pgm"));
            ASSERT_EQ(back.dims(), img.dims());
            for (std::size_t i = 0; i < img.size(); ++i)
                EXPECT_LE(std::abs(back[i] - img[i]), 0.5 / static_cast<double>(maxval) + 1e-15);
        }
    }
}

TEST_F(IoTest, PgmClampsOutOfRange) {
    write_pgm(path("c.pgm"), TensorND({1, 2}, Vector{-0.5, 1.7}));
    const TensorND back = read_pgm(path("c.pgm"));
    EXPECT_EQ(back[0], 0);
    EXPECT_EQ(back[1], 1);
}

TEST_F(IoTest, PgmAsciiWithComments) {
    write_text("a.pgm", "P2\n# comment\n3 1 # inline\n4\n0 2 4\n");
    const TensorND t = read_pgm(path("a.pgm"));
    EXPECT_EQ(t.dims(), (Dims{1, 3}));
    EXPECT_EQ(t.data(), (Vector{0, 0.5, 1}));
}

TEST_F(IoTest, PgmRejectsMalformed) {
    write_text("bad1.pgm", "P3\n1 1\n255\n0\n");
    EXPECT_THROW(read_pgm(path("bad1.pgm")), IoError);
    write_text("bad2.pgm", "P2\n2 1\n4\n0 9\n");
    EXPECT_THROW(read_pgm(path("bad2.pgm")), IoError);
    write_text("bad3.pgm", std::string("P5\n4 1\n255\n") + "ab");
    EXPECT_THROW(read_pgm(path("bad3.pgm")), IoError);
    write_text("bad4.pgm", "P2\n1 1\n70000\n0\n");
    EXPECT_THROW(read_pgm(path("bad4.pgm")), IoError);
    EXPECT_THROW(write_pgm(path("o.pgm"), TensorND({2, 2, 2})), IoError);
}

TEST_F(IoTest, TvtRoundTripIsExact) {
    std::mt19937_64 rng(3);
    const TensorND t({3, 1, 4, 2}, testutil::normal_vector(rng, 24));
    write_tvt(path("t.tvt"), t);
    EXPECT_EQ(read_tvt(path("t.tvt")), t);
    EXPECT_EQ(read_tensor_any(path("t.tvt")), t);
    EXPECT_EQ(fs::file_size(path("t.tvt")), 4u + 4u + 4u * 4u + 24u * 8u);
}

TEST_F(IoTest, TvtRejectsMalformed) {
    write_text("m.tvt", "TVT2");
    EXPECT_THROW(read_tvt(path("m.tvt")), IoError);
    write_tvt(path("ok.tvt"), TensorND({2}, Vector{1, 2}));
    {
        std::ofstream extra(path("ok.tvt"), std::ios::binary | std::ios::app);
        extra.put('x');
    }
    EXPECT_THROW(read_tvt(path("ok.tvt")), IoError);
    std::string body(4 + 4 + 4, '\0');
    body.replace(0, 4, "TVT1");
    body[4] = 1;
    body[8] = 3;  // one axis of length 3, but no data
    write_text("short.tvt", body);
    EXPECT_THROW(read_tvt(path("short.tvt")), IoError);
}

TEST_F(IoTest, ReadAnyFallsBackToCsv) {
    write_text("s.txt", "1\n2\n3\n");
    const TensorND t = read_tensor_any(path("s.txt"));
    EXPECT_EQ(t.dims(), (Dims{3}));
    write_pgm(path("UPPER.PGM"), TensorND({1, 1}, 1.0));
    EXPECT_EQ(read_tensor_any(path("UPPER.PGM")).dims(), (Dims{1, 1}));
}
