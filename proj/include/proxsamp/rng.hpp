// Counter-based splittable PRNG.
//
// Output i of a stream with key k is splitmix64_finalizer(k + (i+1)*GAMMA):
// a pure function of (key, counter), so streams can be recreated at any
// position and identical seeds give identical sequences on every platform.
// substream(i) derives an independent key from (key, i) through two extra
// finalizer passes; chains, steps, and RGO invocations each get their own
// substream, so a variable-length rejection loop never shifts another
// consumer's draws.
//
// Draw procedures (fixed, part of the output contract):
//   uniform():  u = ((z >> 11) + 1) * 2^-53, z the next 64-bit word -> (0, 1]
//   normal():   Box-Muller on two uniforms, r = sqrt(-2 ln u1),
//               pair (r cos(2 pi u2), r sin(2 pi u2)); the second value is
//               cached, so each pair of normals consumes exactly two words.

#pragma once

#include <cstdint>

#include "proxsamp/vec.hpp"

namespace proxsamp {

class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : key_(seed) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

    // Uniform on (0, 1]; never zero, so log(u) is always finite.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * kPi * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    Vec normal_vec(std::size_t d) {
        Vec z(d);
        for (std::size_t i = 0; i < d; ++i) z[i] = normal();
        return z;
    }

    RngStream substream(std::uint64_t index) const {
        return RngStream(mix(mix(key_ ^ mix(index + kSplitSalt))));
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

  private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kSplitSalt = 0xD1B54A32D192ED03ULL;
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace proxsamp
