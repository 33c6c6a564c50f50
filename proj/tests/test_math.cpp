#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "kml/matrix.hpp"

using kml::Matrix;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<float>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (float v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix random_matrix(std::mt19937& rng, Eigen::Index r, Eigen::Index c, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = d(rng);
  return m;
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix b = mat({{3, 4}, {5, 6}});
  EXPECT_EQ(kml::matmul(Matrix::Identity(2, 2), b), b);
}

TEST(Matmul, RowTimesColumnIsDotProduct) {
  const Matrix r = kml::matmul(mat({{1, 2}}), mat({{3}, {4}}));
  ASSERT_EQ(r.rows(), 1);
  ASSERT_EQ(r.cols(), 1);
  EXPECT_FLOAT_EQ(r(0, 0), 11.0f);
}

TEST(Matmul, MismatchedShapesNameBoth) {
  try {
    kml::matmul(Matrix::Zero(2, 3), Matrix::Zero(2, 3));
    FAIL() << "expected ShapeError";
  } catch (const kml::ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos);
  }
}

TEST(Matmul, AssociativeOnRandomSmallMatrices) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> dim(1, 6);
    const int n = dim(rng), k = dim(rng), m = dim(rng), p = dim(rng);
    const Matrix a = random_matrix(rng, n, k), b = random_matrix(rng, k, m), c = random_matrix(rng, m, p);
    const Matrix left = kml::matmul(kml::matmul(a, b), c);
    const Matrix right = kml::matmul(a, kml::matmul(b, c));
    for (Eigen::Index i = 0; i < left.size(); ++i) {
      const float scale = std::max({std::abs(left(i)), std::abs(right(i)), 1.0f});
      EXPECT_LE(std::abs(left(i) - right(i)) / scale, 1e-4f);
    }
  }
}

TEST(Matmul, ReusesOutputWithStableShape) {
  Matrix out(2, 2);
  const float* before = out.data();
  kml::matmul_into(out, mat({{1, 0}, {0, 1}}), mat({{1, 2}, {3, 4}}));
  EXPECT_EQ(out.data(), before);
}

TEST(Elementwise, Examples) {
  const Matrix a = mat({{1, -2}, {3.5f, 4}});
  EXPECT_EQ(kml::elementwise(kml::Elementwise::add, a, Matrix::Zero(2, 2)), a);
  EXPECT_EQ(kml::elementwise(kml::Elementwise::mul, mat({{2, 3}}), mat({{4, 5}})), mat({{8, 15}}));
  EXPECT_EQ(kml::elementwise(kml::Elementwise::sub, a, a), Matrix::Zero(2, 2));
  EXPECT_THROW(kml::elementwise(kml::Elementwise::add, a, Matrix::Zero(1, 2)), kml::ShapeError);
}

TEST(Transpose, Examples) {
  EXPECT_EQ(kml::transpose(mat({{1, 2}, {3, 4}})), mat({{1, 3}, {2, 4}}));
  EXPECT_EQ(kml::transpose(mat({{7}})), mat({{7}}));
  std::mt19937 rng(3);
  const Matrix m = random_matrix(rng, 3, 5);
  const Matrix back = kml::transpose(kml::transpose(m));
  EXPECT_EQ(std::memcmp(back.data(), m.data(), sizeof(float) * m.size()), 0);
}

TEST(Softmax, UniformInput) {
  const Matrix p = kml::softmax(mat({{0, 0, 0, 0}}));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(p(i), 0.25f, 1e-6f);
}

TEST(Softmax, ClosedFormOfLogs) {
  const Matrix p = kml::softmax(mat({{std::log(1.0f), std::log(2.0f), std::log(3.0f)}}));
  EXPECT_NEAR(p(0), 1.0f / 6, 1e-6f);
  EXPECT_NEAR(p(1), 2.0f / 6, 1e-6f);
  EXPECT_NEAR(p(2), 3.0f / 6, 1e-6f);
}

TEST(Softmax, ShiftInvariant) {
  std::mt19937 rng(11);
  for (int t = 0; t < 100; ++t) {
    const Matrix x = random_matrix(rng, 1, 6, -5, 5);
    const Matrix shifted = (x.array() + 3.25f).matrix();
    const Matrix a = kml::softmax(x), b = kml::softmax(shifted);
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a(i), b(i), 1e-6f);
  }
}

TEST(Softmax, SumsToOneOnWideRange) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> width(1, 16);
  for (int t = 0; t < 10000; ++t) {
    const Matrix x = random_matrix(rng, width(rng), 1, -50, 50);
    const Matrix p = kml::softmax(x);
    double total = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      ASSERT_TRUE(std::isfinite(p(i)));
      ASSERT_GE(p(i), 0.0f);
      total += p(i);
    }
    ASSERT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Softmax, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(kml::softmax(mat({{0, std::numeric_limits<float>::quiet_NaN()}})), kml::NumericError);
  EXPECT_THROW(kml::softmax(mat({{0, std::numeric_limits<float>::infinity()}})), kml::NumericError);
  EXPECT_THROW(kml::softmax(Matrix(0, 1)), kml::ShapeError);
  EXPECT_THROW(kml::softmax(Matrix::Zero(2, 2)), kml::ShapeError);
}

TEST(Argmax, LowestIndexWinsTies) {
  EXPECT_EQ(kml::argmax(mat({{5, 1, 1, 1}})), 0u);
  EXPECT_EQ(kml::argmax(mat({{0, 2, 2, 1}})), 1u);
  EXPECT_EQ(kml::argmax(mat({{3, 3, 3}})), 0u);
}
