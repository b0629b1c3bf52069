#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

namespace poac {

// SplitMix64-based generator. Hand-rolled so that streams are bit-identical
// across standard libraries; std::normal_distribution is not portable and
// every artifact here must reproduce byte-for-byte from a seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1]; never returns 0 so it is safe under log().
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller with a cached spare.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n), unbiased via rejection.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return x % n;
    }

    // Uniform integer in [lo, hi] inclusive.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent child seed from a base seed and a salt path.
// Every stochastic site in the pipeline gets its own (base, salts...) stream
// so that consuming noise in one place never shifts another.
inline uint64_t mix_seed(uint64_t base, std::initializer_list<uint64_t> salts) {
    uint64_t s = base;
    auto step = [&s](uint64_t v) {
        s ^= v + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        Rng r(s);
        s = r.next_u64();
    };
    for (uint64_t v : salts) {
        step(v);
    }
    return s;
}

inline uint64_t mix_seed(uint64_t base, uint64_t a) { return mix_seed(base, {a}); }
inline uint64_t mix_seed(uint64_t base, uint64_t a, uint64_t b) { return mix_seed(base, {a, b}); }
inline uint64_t mix_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c) {
    return mix_seed(base, {a, b, c});
}
inline uint64_t mix_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    return mix_seed(base, {a, b, c, d});
}

// Salt constants, one per stochastic pipeline site.
namespace salt {
inline constexpr uint64_t kWorldObject = 0x01;
inline constexpr uint64_t kWorldAbstract = 0x02;
inline constexpr uint64_t kWorldScene = 0x03;
inline constexpr uint64_t kWorldModifier = 0x04;
inline constexpr uint64_t kCorpusModifiers = 0x10;
inline constexpr uint64_t kRenderNoise = 0x11;
inline constexpr uint64_t kPlmInit = 0x20;
inline constexpr uint64_t kPlmShuffle = 0x21;
inline constexpr uint64_t kPlmSample = 0x22;
inline constexpr uint64_t kDiffInit = 0x30;
inline constexpr uint64_t kDiffPretrain = 0x31;
inline constexpr uint64_t kDiffSample = 0x32;
inline constexpr uint64_t kReflStep = 0x40;
inline constexpr uint64_t kReflPretrainBatch = 0x41;
inline constexpr uint64_t kEvalSample = 0x50;
}  // namespace salt

}  // namespace poac
