#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "perfalign/matrix_io.hpp"
#include "test_util.hpp"

using namespace perfalign;

TEST(MatrixCsv, Format) {
  Matrix m(2, 3);
  m << 1, -2.5, 0.1, 1e-300, 3, 0;
  EXPECT_EQ(matrix_to_csv(m), "# rows=2 cols=3\n1,-2.5,0.1\n1e-300,3,0\n");
}

TEST(MatrixCsv, RoundTripIsLossless) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Matrix m = testutil::gaussian(1 + static_cast<Eigen::Index>(s % 5), 1 + static_cast<Eigen::Index>(s % 7), s);
    m *= std::pow(10.0, static_cast<double>(s) - 10.0);
    if (s == 3) m(0, 0) = std::numeric_limits<double>::denorm_min();
    if (s == 4) m(0, 0) = std::numeric_limits<double>::max();
    EXPECT_EQ(matrix_from_csv(matrix_to_csv(m)), m);
  }
}

TEST(MatrixCsv, EmptyShapes) {
  EXPECT_EQ(matrix_from_csv(matrix_to_csv(Matrix(0, 3))).cols(), 3);
  EXPECT_EQ(matrix_from_csv(matrix_to_csv(Matrix(2, 0))).rows(), 2);
}

TEST(MatrixCsv, ToleratesWhitespaceAndCrlf) {
  const Matrix m = matrix_from_csv("# rows=2 cols=2\r\n 1, +2\r\n3 ,4\r\n\n");
  Matrix expect(2, 2);
  expect << 1, 2, 3, 4;
  EXPECT_EQ(m, expect);
}

TEST(MatrixCsv, RejectsMalformedInput) {
  EXPECT_THROW(matrix_from_csv("1,2\n"), DataError);
  EXPECT_THROW(matrix_from_csv("# rows=2 cols=2\n1,2\n"), DataError);
  EXPECT_THROW(matrix_from_csv("# rows=1 cols=2\n1,2,3\n"), DataError);
  EXPECT_THROW(matrix_from_csv("# rows=1 cols=2\n1\n"), DataError);
  EXPECT_THROW(matrix_from_csv("# rows=1 cols=2\n1,abc\n"), DataError);
  EXPECT_THROW(matrix_from_csv("# rows=1 cols=2\n1,nan\n"), DataError);
  EXPECT_THROW(matrix_from_csv("# rows=1 cols=2\n1,inf\n"), DataError);
  EXPECT_THROW(matrix_from_csv("# rows=1 cols=1\n1\n2\n"), DataError);
  EXPECT_THROW(matrix_from_csv("# cols=1\n1\n"), DataError);
}

TEST(Files, AtomicWriteAndRead) {
  const auto dir = testutil::temp_dir("io");
  const Matrix m = testutil::gaussian(3, 4, 1);
  write_matrix_csv(dir / "sub" / "m.csv", m);
  EXPECT_EQ(read_matrix_csv(dir / "sub" / "m.csv"), m);
  for (const auto& e : fs::directory_iterator(dir / "sub")) {
    EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos);
  }
  write_labels_csv(dir / "labels.csv", {0, 1, 1});
  EXPECT_EQ(read_labels_csv(dir / "labels.csv"), (std::vector<int>{0, 1, 1}));
  write_json(dir / "x.json", {{"a", 1}});
  EXPECT_EQ(read_json(dir / "x.json").at("a"), 1);
  EXPECT_THROW(read_matrix_csv(dir / "missing.csv"), DataError);
  atomic_write_text(dir / "bad.json", "{not json");
  EXPECT_THROW(read_json(dir / "bad.json"), DataError);
}
