#ifndef RELCNN_NUMERIC_HPP_
#define RELCNN_NUMERIC_HPP_

// Dense numeric core. Every matrix in the model is an Eigen dense type in
// double precision; the free functions here are templated on the Eigen
// expression so they compose with blocks, maps and lazy products.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relcnn {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

// Checked product; Eigen only asserts on mismatch in debug builds.
template <typename A, typename B>
auto matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b)
    -> MatrixX<typename A::Scalar> {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a.rows(), a.cols()) +
                     " by " + shape_string(b.rows(), b.cols()));
  }
  return a * b;
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

/// Numerically stable softmax (max-subtracted).
template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& s) -> VectorX<typename Derived::Scalar> {
  using Scalar = typename Derived::Scalar;
  if (s.size() == 0) throw std::invalid_argument("softmax: empty input");
  const Scalar top = s.maxCoeff();
  VectorX<Scalar> e = (s.array() - top).exp().matrix();
  return e / e.sum();
}

/// log(sum(exp(s))) with max subtraction.
template <typename Derived>
auto log_sum_exp(const Eigen::MatrixBase<Derived>& s) -> typename Derived::Scalar {
  using Scalar = typename Derived::Scalar;
  if (s.size() == 0) throw std::invalid_argument("log_sum_exp: empty input");
  const Scalar top = s.maxCoeff();
  return top + std::log((s.array() - top).exp().sum());
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
Eigen::Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

// Seedable generator. The engine is std::mt19937_64, whose output sequence
// the standard fixes exactly; all derived draws below use our own integer
// arithmetic (never the implementation-defined std distributions), so a seed
// reproduces bit-identical results on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Fisher-Yates, last element first.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 mix of (seed, stream); used for per-task child seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Normalized (Glorot) initialization: U[-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
inline Matrix glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("glorot_init: empty shape");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  // Row-major fill order so the draw sequence matches the documented layout.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Central-difference gradient of `f` with respect to every coordinate of
/// every block. Blocks are perturbed in place and restored bit-exactly.
template <typename F>
std::vector<std::vector<double>> finite_diff_grad(F&& f, std::span<const std::span<double>> blocks,
                                                  double epsilon = 1e-5) {
  if (!(epsilon > 0)) throw std::invalid_argument("finite_diff_grad: epsilon must be > 0");
  std::vector<std::vector<double>> grads;
  grads.reserve(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::span<double> block = blocks[b];
    std::vector<double> g(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) {
      const double saved = block[i];
      block[i] = saved + epsilon;
      const double up = f();
      block[i] = saved - epsilon;
      const double down = f();
      block[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        std::ostringstream msg;
        msg << "finite_diff_grad: non-finite objective at block " << b << " coordinate " << i;
        throw NonFiniteError(msg.str());
      }
      g[i] = (up - down) / (2 * epsilon);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

/// Single-vector convenience overload.
template <typename F>
std::vector<double> finite_diff_grad(F&& f, std::span<double> x, double epsilon = 1e-5) {
  const std::span<double> one[] = {x};
  return finite_diff_grad(std::forward<F>(f), std::span<const std::span<double>>(one), epsilon)
      .front();
}

/// Coordinate-wise relative error |a-b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

template <typename Derived>
std::span<double> as_span(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace relcnn

#endif  // RELCNN_NUMERIC_HPP_
