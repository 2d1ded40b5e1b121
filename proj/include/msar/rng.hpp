#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "msar/errors.hpp"

namespace msar {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded 64-bit generator with substream derivation.
///
/// Substream r of a master seed is an independent stream derived by splitmix
/// mixing of (seed, r), so Monte Carlo replicates can run concurrently and
/// reproducibly. Gaussian variates use the Marsaglia polar method so output
/// sequences do not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        std::uint32_t words[8];
        for (int i = 0; i < 4; ++i) {
            const std::uint64_t w = splitmix64_next(s);
            words[2 * i] = static_cast<std::uint32_t>(w);
            words[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
        }
        std::seed_seq seq(words, words + 8);
        engine_.seed(seq);
    }

    /// Independent substream for replicate `stream_id` of `seed`.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (stream_id + 1));
        return Rng(splitmix64_next(s));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via the polar method (spare value cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Draws an index from a probability vector by inverse-CDF walk.
    int categorical(const Eigen::VectorXd& probs) {
        if (probs.size() == 0) throw ArgumentError("categorical: empty probability vector");
        const double u = uniform();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size() - 1);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace msar
