#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>

namespace prl {

/// 64-bit Mersenne Twister. Its output sequence is fixed by the C++ standard,
/// and all distributions used with it come from Boost.Random, so draws are
/// identical on every platform.
using Rng = std::mt19937_64;

/// One round of the splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a sub-stream identified by a path of indices, e.g.
/// derive_seed(base, {cell, replication, stream}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

Rng make_rng(std::uint64_t seed);

/// Vector of i.i.d. N(0, 1) draws.
Eigen::VectorXd standard_normal(Eigen::Index n, Rng& rng);

/// n x k matrix of i.i.d. N(0, 1) draws, filled column by column.
Eigen::MatrixXd standard_normal(Eigen::Index n, Eigen::Index k, Rng& rng);

}  // namespace prl
