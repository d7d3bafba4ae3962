#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fedmimo {

// splitmix64 finalizer (Steele et al.), used as the seed mixing function.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent random streams derived from one master seed. Each consumer
// (topology draw, dataset synthesis, per-round channels, ...) gets its own
// stream so that adding draws to one never perturbs another.
enum class SeedStream : std::uint64_t {
    topology = 1,
    dataset = 2,
    partition = 3,
    channel = 4,
    policy = 5,
    probe = 6,
};

// sub_seed(master, stream, index) = splitmix64(splitmix64(master ^ stream_tag) ^ index).
// Documented so that any single round can be reproduced in isolation.
constexpr std::uint64_t sub_seed(std::uint64_t master, SeedStream stream,
                                 std::uint64_t index = 0) {
    const std::uint64_t tagged =
        splitmix64(master ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(stream)));
    return splitmix64(tagged ^ index);
}

// Deterministic scalar source on top of mt19937_64. Gaussians come from an
// explicit Box-Muller transform rather than std::normal_distribution, whose
// output sequence is implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Integer in [0, n-1] by rejection, unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fedmimo
