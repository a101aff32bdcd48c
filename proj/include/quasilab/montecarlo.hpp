#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace quasilab::mc {

/// Sampling parameters. Samples are split into fixed-size chunks; chunk c is
/// drawn from its own generator seeded with derive_seed(seed, c), so results
/// depend only on (seed, samples, chunk_size) and never on `threads`.
struct Params {
    std::uint64_t samples = 100000;
    std::uint64_t seed = 0;
    std::uint64_t chunk_size = 4096;
    unsigned threads = 1;
};

/// SplitMix64 finalizer applied to master + (stream + 1) * golden gamma.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Uniform doubles in [0, 1) with 53 random bits, independent of the
/// standard library's distribution implementation.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

struct WilsonInterval {
    double lower = 0.0;
    double upper = 0.0;
};

inline constexpr double kZ95 = 1.959963984540054;

WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t samples, double z = kZ95);

/// Sampled Lebesgue measure of a subset of the torus.
struct MeasureEstimate {
    double value = 0.0;      // hits / samples
    double lower = 0.0;      // Wilson 95%
    double upper = 0.0;
    double half_width = 0.0; // (upper - lower) / 2
    std::uint64_t hits = 0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;

    /// Binomial standard error sqrt(p(1-p)/n) at the point estimate.
    double sigma() const;
    bool interval_contains(double x) const { return lower <= x && x <= upper; }
};

MeasureEstimate make_estimate(std::uint64_t hits, std::uint64_t samples, std::uint64_t seed);

/// Per-sample callback: a point of [0,1)^dim and the counters to increment.
using SampleFn = std::function<void(std::span<const double>, std::span<std::uint64_t>)>;

/// Draws params.samples uniform points of [0,1)^dim and returns the summed
/// counters (width `counters`).
std::vector<std::uint64_t> accumulate(const Params& params, std::size_t dim, std::size_t counters,
                                      const SampleFn& fn);

/// Single-counter convenience: estimate of the measure of {x : predicate(x)}.
MeasureEstimate estimate(const Params& params, std::size_t dim,
                         const std::function<bool(std::span<const double>)>& predicate);

} // namespace quasilab::mc
