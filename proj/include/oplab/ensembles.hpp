#ifndef OPLAB_ENSEMBLES_HPP
#define OPLAB_ENSEMBLES_HPP

#include <cstdint>
#include <random>

#include "oplab/opmeasure.hpp"
#include "oplab/scattering.hpp"

namespace oplab {

// Per-item seed derived from a master seed (splitmix64 of master ^ mixed
// index), so item i sees the same stream whatever the thread count.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

struct MeasureSpec {
  int min_atoms = 1;
  int max_atoms = 200;
  int max_dim = 16;       // rows and cols drawn uniformly from [1, max_dim]
  int rows = 0;           // fixed shape when both > 0
  int cols = 0;
  double support_lo = -1.0;
  double support_hi = 1.0;

  void validate() const;
};

// Complex Gaussian entries with E|a_ij|^2 = 1.
ComplexMatrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);

// Atoms at uniform positions in [support_lo, support_hi) with Gaussian
// values scaled by 1/sqrt(rows*cols) and a log-uniform weight in [0.1, 10].
SimpleOpMeasure random_simple_measure(std::mt19937_64& rng, const MeasureSpec& spec);

// 1..max_cells disjoint density cells with uniform random edges in the
// support and Gaussian densities (same scaling as the atoms); rows, cols
// and support as for random_simple_measure. max_atoms is ignored.
OpMeasure random_density_measure(std::mt19937_64& rng, const MeasureSpec& spec, int max_cells);

// S1, S2 or the operator norm, uniformly.
SchattenIndex random_norm(std::mt19937_64& rng);

// Gaussian Hermitian H0 (scaled by 1/sqrt(n)), Gaussian G (scaled by
// 1/sqrt(n)), J = diag(±1) with at least one entry of each sign when k > 1.
ScatteringModel random_model(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k);

}  // namespace oplab

#endif  // OPLAB_ENSEMBLES_HPP
