#ifndef MDAG_RANDOM_HPP
#define MDAG_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mdag {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of the named stream `purpose`/`index` under a root seed. Streams for
/// different purposes never share state, so adding draws to one leaves the
/// others untouched.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index = 0) {
    return splitmix64(splitmix64(root ^ fnv1a(purpose)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t root, std::string_view purpose, std::uint64_t index = 0) {
    return Rng(derive_seed(root, purpose, index));
}

inline double draw_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline double draw_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

inline double draw_chi_squared(Rng& rng, double dof) {
    std::gamma_distribution<double> dist(0.5 * dof, 2.0);
    return dist(rng);
}

inline std::size_t draw_categorical(Rng& rng, const Eigen::VectorXd& probs) {
    const double u = draw_uniform(rng, 0.0, 1.0);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<std::size_t>(i);
    }
    // Round-off: fall back to the last category with positive mass.
    for (Eigen::Index i = probs.size() - 1; i >= 0; --i)
        if (probs[i] > 0.0) return static_cast<std::size_t>(i);
    return 0;
}

inline Eigen::VectorXd draw_dirichlet(Rng& rng, const Eigen::VectorXd& alphas) {
    Eigen::VectorXd out(alphas.size());
    for (Eigen::Index i = 0; i < alphas.size(); ++i) {
        std::gamma_distribution<double> dist(alphas[i], 1.0);
        out[i] = dist(rng);
    }
    const double total = out.sum();
    if (total > 0.0) return out / total;
    return alphas / alphas.sum();
}

/// Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> draw_permutation(Rng& rng, std::size_t n) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> dist(0, i - 1);
        std::swap(perm[i - 1], perm[dist(rng)]);
    }
    return perm;
}

}  // namespace mdag

#endif  // MDAG_RANDOM_HPP
