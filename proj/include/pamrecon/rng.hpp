#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pam {

/// Purposes that get their own random stream, all expanded from one root seed.
enum class Stream : std::uint64_t {
    split = 1,
    init = 2,
    augment = 3,
    shuffle = 4,
    validation = 5,
    phantom = 6,
};

/// Seeded generator with portable uniform/normal draws (no std distributions,
/// whose output is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    Rng(std::uint64_t root_seed, Stream stream);

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer on [0, n).
    std::size_t index(std::size_t n);
    /// Standard normal (Box-Muller, spare value cached).
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace pam
