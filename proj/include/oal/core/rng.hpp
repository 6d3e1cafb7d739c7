#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace oal {

// Named deterministic pseudorandom stream.
//
// A child stream's seed depends only on the parent's key and the child label,
// never on how many draws the parent has made, so adding or reordering draws
// in one stream leaves every sibling untouched.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::string_view label = "root");

    RngStream child(std::string_view label) const;
    RngStream child(std::string_view label, std::uint64_t index) const;

    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    double normal();                         // standard normal
    std::size_t index(std::size_t n);        // uniform in [0, n)
    std::uint64_t next_u64() { return engine_(); }

    std::uint64_t key() const { return key_; }

private:
    struct FromKey {};
    RngStream(FromKey, std::uint64_t key);

    std::uint64_t key_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// 64-bit FNV-1a; used for stream labels and config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace oal
