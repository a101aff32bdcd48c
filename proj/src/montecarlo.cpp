#include "quasilab/montecarlo.hpp"
#include "quasilab/errors.hpp"
#include "quasilab/parallel.hpp"

#include <cmath>

namespace quasilab::mc {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t samples, double z) {
    if (samples == 0) return {0.0, 1.0};
    const double n = static_cast<double>(samples);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - spread), std::min(1.0, center + spread)};
}

double MeasureEstimate::sigma() const {
    if (samples == 0) return 0.0;
    return std::sqrt(value * (1.0 - value) / static_cast<double>(samples));
}

MeasureEstimate make_estimate(std::uint64_t hits, std::uint64_t samples, std::uint64_t seed) {
    MeasureEstimate e;
    e.hits = hits;
    e.samples = samples;
    e.seed = seed;
    e.value = samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0;
    const auto w = wilson_interval(hits, samples);
    e.lower = w.lower;
    e.upper = w.upper;
    e.half_width = 0.5 * (w.upper - w.lower);
    return e;
}

std::vector<std::uint64_t> accumulate(const Params& params, std::size_t dim, std::size_t counters,
                                      const SampleFn& fn) {
    if (params.chunk_size == 0) throw InvalidArgument("chunk_size must be positive");
    if (dim == 0) throw InvalidArgument("sampling dimension must be positive");
    const std::uint64_t chunks = (params.samples + params.chunk_size - 1) / params.chunk_size;
    std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(counters, 0));
    parallel_for(chunks, params.threads, [&](std::size_t c) {
        UniformStream stream(derive_seed(params.seed, c));
        std::vector<double> point(dim);
        const std::uint64_t begin = c * params.chunk_size;
        const std::uint64_t end = std::min(params.samples, begin + params.chunk_size);
        auto& local = partial[c];
        for (std::uint64_t s = begin; s < end; ++s) {
            for (auto& x : point) x = stream.next();
            fn(point, local);
        }
    });
    std::vector<std::uint64_t> total(counters, 0);
    for (const auto& local : partial)
        for (std::size_t i = 0; i < counters; ++i) total[i] += local[i];
    return total;
}

MeasureEstimate estimate(const Params& params, std::size_t dim,
                         const std::function<bool(std::span<const double>)>& predicate) {
    const auto counts = accumulate(params, dim, 1, [&](std::span<const double> x, std::span<std::uint64_t> c) {
        if (predicate(x)) ++c[0];
    });
    return make_estimate(counts[0], params.samples, params.seed);
}

} // namespace quasilab::mc
