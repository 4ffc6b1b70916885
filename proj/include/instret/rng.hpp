#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace instret {

// splitmix64-style mixer, used to derive independent stream seeds.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Seeded generator with explicit sampling helpers. std::mt19937_64 output is
// standardized; the derived uniforms below are pinned here so that results do
// not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive range, rejection-sampled for exact uniformity
    int uniform_int(int lo, int hi) {
        uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
        uint64_t bound = UINT64_MAX - UINT64_MAX % range;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= bound);
        return lo + static_cast<int>(x % range);
    }

    double gaussian() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(0, static_cast<int>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n)
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        for (int i = 0; i < k; ++i) {
            int j = uniform_int(i, n - 1);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

    Rng fork(uint64_t stream) { return Rng(mix_seed(next_u64(), stream)); }

private:
    std::mt19937_64 gen_;
};

}  // namespace instret
