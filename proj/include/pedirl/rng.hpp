#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace pedirl {

/// splitmix64 step; the standard 64-bit finalizer-based generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child-seed derivation: the sample index is mixed into the root seed with
/// splitmix64 so that independent streams come from (seed, index) alone.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t s = root ^ (0xd1b54a32d192ed03ULL * (index + 1));
    return splitmix64(s);
}

/// Deterministic random stream built on xoshiro-style splitmix64 state.
/// All distributions are implemented explicitly so output is bit-identical
/// across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // warm up so nearby seeds decorrelate
        splitmix64(state_);
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via Box-Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Samples an index from an (unnormalized is fine) nonnegative weight vector.
    std::size_t categorical(std::span<const double> weights) {
        if (weights.empty()) throw std::invalid_argument("categorical: empty weights");
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw std::invalid_argument("categorical: weights sum to zero");
        const double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;  // fp guard
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pedirl
