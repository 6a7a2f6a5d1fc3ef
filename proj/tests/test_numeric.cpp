#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "doctest.h"
#include "relcnn/numeric.hpp"

using namespace relcnn;

TEST_SUITE("numeric") {

TEST_CASE("matmul agrees with a triple loop") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = static_cast<Eigen::Index>(1 + rng.below(7));
    const auto k = static_cast<Eigen::Index>(1 + rng.below(7));
    const auto n = static_cast<Eigen::Index>(1 + rng.below(7));
    Matrix a(m, k), b(k, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-2, 2);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-2, 2);
    const Matrix c = matmul(a, b);
    REQUIRE(c.rows() == m);
    REQUIRE(c.cols() == n);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        double acc = 0.0;
        for (Eigen::Index t = 0; t < k; ++t) acc += a(i, t) * b(t, j);
        CHECK(c(i, j) == doctest::Approx(acc).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Matrix a(2, 3), b(4, 5);
  a.setZero();
  b.setZero();
  try {
    (void)matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
}

TEST_CASE("relu keeps shape and clamps negatives") {
  Matrix x(2, 2);
  x << -1, 2, 0, -3.5;
  const Matrix y = relu(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 2.0);
  CHECK(y(1, 0) == 0.0);
  CHECK(y(1, 1) == 0.0);
}

TEST_CASE("softmax properties") {
  Vector s(4);
  s << 1.0, 2.0, 3.0, 4.0;
  const Vector p = softmax(s);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((p.array() > 0).all());
  // Shift invariance.
  const Vector q = softmax(Vector((s.array() + 1000.0).matrix()));
  CHECK((p - q).cwiseAbs().maxCoeff() < 1e-15);
  // Large inputs stay finite.
  Vector big(3);
  big << 1000.0, 999.0, -1000.0;
  const Vector r = softmax(big);
  CHECK(all_finite(r));
  CHECK(r(0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK_THROWS_AS(softmax(Vector()), std::invalid_argument);
}

TEST_CASE("log_sum_exp matches the naive formula on small inputs") {
  Vector s(3);
  s << 0.5, -1.0, 2.0;
  const double naive = std::log(std::exp(0.5) + std::exp(-1.0) + std::exp(2.0));
  CHECK(log_sum_exp(s) == doctest::Approx(naive).epsilon(1e-14));
  Vector big(2);
  big << 800.0, 800.0;
  CHECK(log_sum_exp(big) == doctest::Approx(800.0 + std::log(2.0)));
}

TEST_CASE("argmax ties go to the lowest index") {
  Vector v(4);
  v << 1.0, 3.0, 3.0, 2.0;
  CHECK(argmax(v) == 1);
}

TEST_CASE("glorot bounds and variance") {
  Rng rng(5);
  const Matrix w = glorot_init(200, 300, rng);
  const double bound = std::sqrt(6.0 / 500.0);
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
  const double mean = w.mean();
  const double var = (w.array() - mean).square().mean();
  // Uniform(-b, b) has variance b^2 / 3 = 2 / (rows + cols).
  CHECK(var == doctest::Approx(2.0 / 500.0).epsilon(0.03));
  CHECK(std::abs(mean) < 0.002);
  CHECK_THROWS_AS(glorot_init(0, 3, rng), std::invalid_argument);
}

TEST_CASE("glorot is seed-deterministic") {
  Rng a(9), b(9), c(10);
  const Matrix x = glorot_init(5, 7, a);
  const Matrix y = glorot_init(5, 7, b);
  const Matrix z = glorot_init(5, 7, c);
  CHECK(std::memcmp(x.data(), y.data(), sizeof(double) * 35) == 0);
  CHECK(x != z);
}

TEST_CASE("rng helpers") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7);
  }
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 20);
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 100; ++s) seeds.insert(derive_seed(1, s));
  CHECK(seeds.size() == 100);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("finite differences of a quadratic and bit-exact restore") {
  std::vector<double> x = {0.3, -1.2, 2.5};
  const std::vector<double> before = x;
  auto f = [&] { return x[0] * x[0] + 3.0 * x[1] * x[1] + x[0] * x[2]; };
  const auto g = finite_diff_grad(f, std::span<double>(x));
  CHECK(g[0] == doctest::Approx(2 * 0.3 + 2.5).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(6 * -1.2).epsilon(1e-8));
  CHECK(g[2] == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(std::memcmp(x.data(), before.data(), sizeof(double) * 3) == 0);
}

TEST_CASE("finite differences reject non-finite objectives and bad epsilon") {
  std::vector<double> x = {1.0};
  auto f = [&] { return std::log(x[0] - 1.0); };
  CHECK_THROWS_AS(finite_diff_grad(f, std::span<double>(x)), NonFiniteError);
  CHECK_THROWS_AS(finite_diff_grad(f, std::span<double>(x), 0.0), std::invalid_argument);
}

TEST_CASE("relative error uses the floor") {
  CHECK(relative_error(1.0, 1.1, 1e-8) == doctest::Approx(0.1 / 1.1));
  CHECK(relative_error(1e-12, 0.0, 1e-8) == doctest::Approx(1e-4));
}

}
