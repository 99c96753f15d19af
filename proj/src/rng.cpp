#include "prl/rng.hpp"

#include <boost/random/normal_distribution.hpp>

namespace prl {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

Rng make_rng(std::uint64_t seed) { return Rng(seed); }

Eigen::VectorXd standard_normal(Eigen::Index n, Rng& rng) {
    boost::random::normal_distribution<double> z;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = z(rng);
    return out;
}

Eigen::MatrixXd standard_normal(Eigen::Index n, Eigen::Index k, Rng& rng) {
    boost::random::normal_distribution<double> z;
    Eigen::MatrixXd out(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) out(i, j) = z(rng);
    }
    return out;
}

}  // namespace prl
