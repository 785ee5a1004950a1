#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace cvarrl {

using Rng = std::mt19937_64;

/** Derives an independent child seed from a root seed and a stream tag. */
uint64_t mix_seed(uint64_t root, uint64_t stream);

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

/** Uniform draw on [0, 1). */
double uniform01(Rng& rng);

/**
 * Samples an index from a probability vector by inverse CDF. Entries are
 * assumed nonnegative and summing to 1 up to numerical noise; the last
 * positive entry absorbs any leftover mass.
 */
int sample_discrete(const Eigen::VectorXd& probs, Rng& rng);

/** Uniform action draw from {0, ..., num_actions - 1}. */
int sample_uniform(int num_actions, Rng& rng);

/** Symmetric Dirichlet(alpha) sample of the given length. */
Eigen::VectorXd sample_dirichlet(int length, double alpha, Rng& rng);

} // namespace cvarrl
