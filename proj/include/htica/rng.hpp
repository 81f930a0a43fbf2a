#ifndef HTICA_RNG_HPP_
#define HTICA_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace htica {

// splitmix64 step; used to hash seed material into substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Deterministic random stream.
 *
 * Wraps std::mt19937_64 (whose output sequence is pinned by the standard) and
 * supplies our own variate transforms, so identical seeds give bit-identical
 * draws across platforms and across serial/parallel execution.  Substreams
 * are derived by hashing a (tag...) path into a fresh seed; disjoint paths
 * give statistically independent streams.
 */
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0,1)
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform in (0,1]; safe to feed to inverse transforms with a pole at 0
    double uniform_pos() { return 1.0 - uniform01(); }

    // fair coin as +-1
    double sign() { return (engine_() & 1u) ? 1.0 : -1.0; }

    // standard normal via Marsaglia polar; spare value cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    std::size_t uniform_index(std::size_t bound) {
        // rejection to avoid modulo bias
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derive the seed of a substream from a master seed and a tag path.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = master ^ 0x8000000080003ULL;
    std::uint64_t out = splitmix64(s);
    for (std::uint64_t tag : path) {
        s ^= splitmix64(s) + tag;
        out = splitmix64(s);
    }
    return out;
}

inline RandomStream derive_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return RandomStream(derive_seed(master, path));
}

// Fixed purpose tags for substream derivation.
namespace stream_tag {
constexpr std::uint64_t sources = 0x5352435301ULL;
constexpr std::uint64_t mixing = 0x4d49580a02ULL;
constexpr std::uint64_t damping = 0x44414d5003ULL;
constexpr std::uint64_t ica_init = 0x4943414904ULL;
constexpr std::uint64_t harness = 0x4841524e05ULL;
}  // namespace stream_tag

}  // namespace htica

#endif  // HTICA_RNG_HPP_
