#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace delib {

using Rng = std::mt19937_64;

/// Uniform double in [0,1) built from the top 53 bits, identical across
/// platforms (std::uniform_real_distribution is not).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Draw an index from an unnormalized-tolerant probability row.
inline int sample_discrete(const double* p, int n, Rng& rng) {
    double u = uniform01(rng);
    double c = 0.0;
    int last = 0;
    for (int i = 0; i < n; ++i) {
        if (p[i] <= 0.0) continue;
        c += p[i];
        last = i;
        if (u < c) return i;
    }
    return last;  // u fell into the rounding slack at the top
}

inline int uniform_int(int n, Rng& rng) {
    int i = static_cast<int>(uniform01(rng) * n);
    return i >= n ? n - 1 : i;
}

}  // namespace delib
