#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace synthpanel {

// Counter-based generator with named stream derivation. Every consumer owns a
// stream derived from (seed, tag, index), so results do not depend on the
// order in which parallel tasks draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    static std::uint64_t derive(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

    Rng stream(std::string_view tag, std::uint64_t index = 0) const {
        return Rng(derive(state_, tag, index));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (no implementation-defined distributions,
    // draws are identical across platforms)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // symmetric Dirichlet(1): normalized exponentials
    std::vector<double> dirichlet(std::size_t n) {
        std::vector<double> w(n);
        double total = 0.0;
        for (auto& x : w) {
            double u = 0.0;
            while (u <= 0.0) u = uniform();
            x = -std::log(u);
            total += x;
        }
        for (auto& x : w) x /= total;
        return w;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline std::uint64_t Rng::derive(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return mix(mix(h) ^ seed);
}

}  // namespace synthpanel
