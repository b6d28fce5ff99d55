#pragma once
// xoshiro256++ with splitmix64 seeding. Substreams are derived from
// (master_seed, stream_id) so parallel blocks are reproducible regardless
// of scheduling.

#include <cstdint>
#include <cmath>

namespace expile {

inline uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) {
        uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        s_[0] = splitmix64(x);
        s_[1] = splitmix64(x);
        s_[2] = splitmix64(x);
        s_[3] = splitmix64(x);
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1), 53 bits
    double uniform() { return (double)(next() >> 11) * 0x1.0p-53; }

    // uniform in {0,...,m-1}, m small; rejection keeps it unbiased
    uint32_t below(uint32_t m) {
        uint64_t threshold = (~uint64_t(0) / m) * m;
        uint64_t r;
        do { r = next(); } while (r >= threshold);
        return (uint32_t)(r % m);
    }

    double exponential() { return -std::log1p(-uniform()); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

} // namespace expile
