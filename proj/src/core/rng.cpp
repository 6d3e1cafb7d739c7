#include "oal/core/rng.hpp"

namespace oal {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RngStream::RngStream(std::uint64_t seed, std::string_view label)
    : RngStream(FromKey{}, splitmix64(seed ^ fnv1a64(label))) {}

RngStream::RngStream(FromKey, std::uint64_t key) : key_(key), engine_(splitmix64(key)) {}

RngStream RngStream::child(std::string_view label) const {
    return RngStream(FromKey{}, splitmix64(key_ ^ fnv1a64(label)));
}

RngStream RngStream::child(std::string_view label, std::uint64_t index) const {
    return RngStream(FromKey{}, splitmix64(splitmix64(key_ ^ fnv1a64(label)) + index));
}

double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngStream::normal() { return normal_(engine_); }

std::size_t RngStream::index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

}  // namespace oal
