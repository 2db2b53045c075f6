#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace samplecraft {

// Bad arguments, bad configuration, malformed programs. CLI exit code 1.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or failed numeric contracts. CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// File reading/writing failures, malformed files. CLI exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Program text errors with a 1-based source location.
class ParseError : public UsageError {
public:
    ParseError(int line, int col, const std::string& msg)
        : UsageError("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line;
    int col;
};

// splitmix64, used for seeding and seed-stream derivation.
struct SplitMix64 {
    uint64_t state;
    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

// xoshiro256++: the portable PRNG behind every stochastic draw in this
// project. Seeded through splitmix64 so any 64-bit seed is usable.
class Xoshiro256pp {
public:
    using result_type = uint64_t;
    explicit Xoshiro256pp(uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& w : s_) w = sm.next();
    }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~uint64_t(0); }
    result_type operator()() {
        uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Xoshiro256pp& g) { return double(g() >> 11) * 0x1.0p-53; }

// Derives an independent seed stream from a base seed and a stream index.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    SplitMix64 sm{seed ^ (stream * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull)};
    return sm.next();
}
inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

// Worker count: SAMPLECRAFT_THREADS, where 0 or unset means all hardware
// threads. Re-read on every call so tests can adjust it at runtime.
inline int thread_count() {
    if (const char* env = std::getenv("SAMPLECRAFT_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
}

// Runs f(i) for i in [begin, end) on up to thread_count() threads with a
// static contiguous partition. Callers must write only to per-i slots;
// results are then independent of the thread count.
template <class F>
void parallel_for(long begin, long end, F&& f) {
    long len = end - begin;
    if (len <= 0) return;
    int workers = thread_count();
    if (workers > len) workers = int(len);
    if (workers <= 1) {
        for (long i = begin; i < end; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    long chunk = (len + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        long lo = begin + w * chunk;
        long hi = lo + chunk < end ? lo + chunk : end;
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f] {
            for (long i = lo; i < hi; ++i) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace samplecraft
