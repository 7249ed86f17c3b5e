#pragma once

#include "clare/numkit/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace clare::numkit {

/// SplitMix64 finalizer: derives independent stream seeds from (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded generator passed explicitly to everything random.
///
/// The standard distributions are implementation-defined, so uniform and
/// normal draws are computed here from raw mt19937_64 output. This keeps
/// seeded runs identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, bound), unbiased.
    std::uint64_t below(std::uint64_t bound);
    // Standard normal via the Box-Muller transform.
    double normal();

    Tensor normal_tensor(Shape shape);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Glorot-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

} // namespace clare::numkit
