#ifndef NCHMC_RNG_HPP
#define NCHMC_RNG_HPP

#include "nchmc/types.hpp"

#include <cstdint>
#include <random>

namespace nchmc {

// Seeded random stream. Every stochastic routine in the library takes one of
// these (or a seed it turns into one), so runs replay exactly on a given
// toolchain.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Independent stream derived from (seed, index) through seed_seq mixing,
  // used for restarts and per-chain streams.
  static RandomStream substream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 engine(seq);
    return RandomStream(engine);
  }

  double normal() { return normal_(engine_); }

  // Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  // Filled row by row.
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  explicit RandomStream(std::mt19937_64 engine) : engine_(engine) {}

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace nchmc

#endif  // NCHMC_RNG_HPP
