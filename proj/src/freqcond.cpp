#include "quasilab/freqcond.hpp"
#include "quasilab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace quasilab::freqcond {

FrequencyVector::FrequencyVector(std::vector<Frequency> components) : components_(std::move(components)) {
    if (components_.empty()) throw InvalidArgument("frequency vector needs d >= 1 components");
}

std::vector<double> FrequencyVector::to_doubles() const {
    std::vector<double> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.to_double());
    return out;
}

namespace {

// Tightest decided enclosure, stopping early once width <= rel_tol * lower.
contfrac::TorusInterval relative_enclosure(const BigInt& k, const Frequency& alpha, const BigRational& rel_tol) {
    std::optional<contfrac::TorusInterval> deepest;
    for (std::size_t n = 1; n + 1 <= alpha.precision_depth(); ++n) {
        auto enc = contfrac::torus_dist_at_level(k, alpha, n);
        if (!enc.decided) continue;
        if (enc.interval.width() <= rel_tol * enc.interval.lower) return enc.interval;
        deepest = enc.interval;
    }
    if (!deepest)
        throw InsufficientPrecision("insufficient precision: no decided enclosure of ||k alpha|| for " + alpha.name());
    return *deepest;
}

TauCandidate combine(std::span<const BigInt> tau, std::span<const contfrac::TorusInterval> dist) {
    TauCandidate c;
    c.tau.assign(tau.begin(), tau.end());
    for (std::size_t i = 0; i < tau.size(); ++i) {
        BigInt others = 1;
        for (std::size_t j = 0; j < tau.size(); ++j)
            if (j != i) others *= tau[j];
        const BigRational lo = BigRational(others) * dist[i].lower;
        const BigRational hi = BigRational(others) * dist[i].upper;
        if (i == 0 || lo > c.score_lower) c.score_lower = lo;
        if (i == 0 || hi > c.score_upper) c.score_upper = hi;
    }
    return c;
}

} // namespace

TauCandidate score_tau(const FrequencyVector& alpha, std::span<const BigInt> tau, double rel_tol) {
    if (tau.size() != alpha.dimension()) throw InvalidArgument("tau dimension does not match frequency vector");
    std::vector<contfrac::TorusInterval> dist;
    const BigRational rel = to_rational(rel_tol);
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] < 1) throw InvalidArgument("tau components must be >= 1");
        dist.push_back(relative_enclosure(tau[i], alpha[i], rel));
    }
    return combine(tau, dist);
}

SearchResult generic_seq_search(const FrequencyVector& alpha, double target, const SearchBudget& budget) {
    if (!(target > 0)) throw InvalidArgument("target must be positive");
    const std::size_t d = alpha.dimension();
    const BigRational target_exact = to_rational(target);

    SearchResult result;
    std::vector<std::vector<BigInt>> values(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (budget.full_integer) {
            if (budget.max_integer == 0) throw InvalidArgument("full integer search needs max_integer >= 1");
            for (std::uint64_t k = 1; k <= budget.max_integer; ++k) values[i].emplace_back(k);
            result.levels_searched.push_back(0);
        } else {
            // ||q_m alpha|| is only decided from brackets at levels > m
            const std::size_t depth_i = alpha[i].precision_depth();
            const std::size_t top = depth_i >= 2 ? std::min(budget.depth, depth_i - 2) : 0;
            for (std::size_t m = 1; m <= top; ++m) {
                const BigInt& q = alpha[i].q(m);
                if (values[i].empty() || values[i].back() != q) values[i].push_back(q);
            }
            result.levels_searched.push_back(top);
        }
        if (values[i].empty()) throw InsufficientPrecision("no searchable denominators for component " + std::to_string(i));
    }
    double total = 1;
    for (const auto& v : values) total *= static_cast<double>(v.size());
    if (total > static_cast<double>(budget.max_candidates))
        throw CostGuardExceeded("search space of " + std::to_string(total) + " tau vectors exceeds guard");

    // Enclosures are cached per (component, value index); refined on demand.
    const BigRational coarse = to_rational(0x1p-40), fine = to_rational(0x1p-100);
    std::vector<std::map<std::size_t, contfrac::TorusInterval>> cache(d);
    auto enclosure = [&](std::size_t i, std::size_t idx) -> const contfrac::TorusInterval& {
        auto it = cache[i].find(idx);
        if (it == cache[i].end()) it = cache[i].emplace(idx, relative_enclosure(values[i][idx], alpha[i], coarse)).first;
        return it->second;
    };

    std::vector<std::size_t> index(d, 0);
    std::vector<BigInt> tau(d);
    std::vector<contfrac::TorusInterval> dist(d);
    bool have_best = false;
    for (;;) {
        for (std::size_t i = 0; i < d; ++i) {
            tau[i] = values[i][index[i]];
            dist[i] = enclosure(i, index[i]);
        }
        TauCandidate cand = combine(tau, dist);
        if (cand.score_lower < target_exact && !(cand.score_upper < target_exact)) {
            for (std::size_t i = 0; i < d; ++i) dist[i] = relative_enclosure(tau[i], alpha[i], fine);
            cand = combine(tau, dist);
            if (cand.score_lower < target_exact && !(cand.score_upper < target_exact))
                throw ToleranceTooCoarse("tolerance too coarse: score of candidate straddles the target");
        }
        ++result.examined;
        if (!have_best || cand.score_upper < result.best.score_upper) {
            result.best = cand;
            have_best = true;
        }
        if (cand.score_upper < target_exact) {
            result.found = true;
            result.candidate = std::move(cand);
            return result;
        }
        // odometer: last component fastest gives lexicographic order
        std::size_t pos = d;
        while (pos > 0) {
            --pos;
            if (++index[pos] < values[pos].size()) break;
            index[pos] = 0;
            if (pos == 0) return result;
        }
    }
}

InterleaveResult d2_interleave(const Frequency& alpha1, const Frequency& alpha2, double epsilon, std::size_t depth) {
    if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
    if (depth == 0) throw InvalidArgument("depth must be positive");
    const BigRational eps = to_rational(epsilon);
    const std::size_t top_n = std::min(depth, alpha1.precision_depth() - 1);
    const std::size_t top_m = std::min(depth, alpha2.precision_depth() - 1);
    if (top_n == 0 || top_m == 0) throw InsufficientPrecision("interleave needs at least two materialized levels");

    InterleaveResult out;
    std::optional<BigRational> best;
    for (std::size_t n = 1; n <= top_n; ++n) {
        for (std::size_t m = 1; m <= top_m; ++m) {
            const BigRational a(alpha2.q(m), alpha1.q(n + 1));
            const BigRational b(alpha1.q(n), alpha2.q(m + 1));
            const BigRational worst = a < b ? b : a;
            if (!best || worst < *best) {
                best = worst;
                out.n = n;
                out.m = m;
                out.ratio_a = a;
                out.ratio_b = b;
            }
            if (worst < eps) {
                out.found = true;
                out.n = n;
                out.m = m;
                out.ratio_a = a;
                out.ratio_b = b;
                out.best_max_ratio = to_double(worst);
                return out;
            }
        }
    }
    out.best_max_ratio = to_double(*best);
    return out;
}

double aeps_closed_form(std::span<const long long> m, double epsilon) {
    if (m.empty()) throw InvalidArgument("m must have d >= 1 components");
    if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
    double product = 1;
    for (const long long mi : m) {
        if (mi < 1) throw InvalidArgument("m components must be >= 1");
        product *= static_cast<double>(mi);
    }
    double measure = 1;
    for (const long long mi : m) {
        // {a : ||m_i a|| < r} has measure 2r only while r <= 1/2
        const double r = epsilon * static_cast<double>(mi) / product;
        if (r > 0.5)
            throw FormulaRegimeViolated("formula regime violated: strip half-width " + std::to_string(r) +
                                        " > 1/2 for m_i = " + std::to_string(mi));
        measure *= 2 * r;
    }
    return measure;
}

AepsMeasure aeps_measure(std::span<const long long> m, double epsilon, const mc::Params& params) {
    AepsMeasure out;
    out.closed_form = aeps_closed_form(m, epsilon);
    double product = 1;
    for (const long long mi : m) product *= static_cast<double>(mi);
    std::vector<double> weight, scale;
    for (const long long mi : m) {
        scale.push_back(static_cast<double>(mi));
        weight.push_back(product / static_cast<double>(mi));
    }
    out.mc = mc::estimate(params, m.size(), [&](std::span<const double> a) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double y = scale[i] * a[i];
            const double frac = y - std::floor(y);
            const double dist = std::min(frac, 1.0 - frac);
            if (!(weight[i] * dist < epsilon)) return false;
        }
        return true;
    });
    return out;
}

AepsSeries aeps_series(double epsilon, int d, std::uint64_t cutoff) {
    if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
    if (d < 1) throw InvalidArgument("dimension must be >= 1");
    if (cutoff == 0) throw InvalidArgument("cutoff must be positive");
    AepsSeries out;
    out.d = d;
    out.epsilon = epsilon;
    out.cutoff = cutoff;

    // smallest terms first
    double inner = 0;
    for (std::uint64_t m = cutoff; m >= 1; --m) inner += std::pow(static_cast<double>(m), -(d - 1));
    const double prefactor = std::pow(2 * epsilon, d);
    out.partial_sum = prefactor * std::pow(inner, d);
    if (d >= 3) {
        const double inner_tail = std::pow(static_cast<double>(cutoff), -(d - 2)) / (d - 2);
        out.tail_bound = prefactor * (std::pow(inner + inner_tail, d) - std::pow(inner, d));
    } else {
        out.divergent = true;
    }
    return out;
}

} // namespace quasilab::freqcond
