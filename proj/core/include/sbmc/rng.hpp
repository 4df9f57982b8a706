#pragma once

#include <cstdint>

namespace sbmc {

// Counter-based generator built on the splitmix64 finalizer. State is the
// (key, counter) pair, so streams are reproducible bit-for-bit across
// platforms and independent of call interleaving.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
    return h;
}

class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    /// Derive an independent stream, e.g. per sub-task name.
    CounterRng fork(const char* tag) const { return CounterRng(splitmix64(key_ ^ fnv1a(tag))); }
    CounterRng fork(std::uint64_t salt) const { return CounterRng(splitmix64(key_ ^ salt)); }

    std::uint64_t next_u64() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Uniform integer in [0, n), n >= 1.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace sbmc
