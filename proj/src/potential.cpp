#include "quasilab/potential.hpp"
#include "quasilab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace quasilab::potential {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap(double x) {
    const double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

// signed representative of x mod 1 in [-1/2, 1/2)
double centered(double x) {
    return wrap(x + 0.5) - 0.5;
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool in_box(const IndicatorBox& box, std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (box.side[i] >= 1.0) continue;
        if (!(wrap(x[i] - box.corner[i]) < box.side[i])) return false;
    }
    return true;
}

double box_volume(const IndicatorBox& box) {
    double v = 1;
    for (const double s : box.side) v *= std::min(s, 1.0);
    return v;
}

bool arcs_overlap(double a1, double s1, double a2, double s2) {
    if (s1 + s2 >= 1.0) return true;
    return wrap(a2 - a1) < s1 || wrap(a1 - a2) < s2;
}

bool boxes_disjoint(const IndicatorBox& a, const IndicatorBox& b) {
    for (std::size_t i = 0; i < a.side.size(); ++i)
        if (!arcs_overlap(a.corner[i], a.side[i], b.corner[i], b.side[i])) return true;
    return false;
}

bool pairwise_disjoint(const StepSum& s) {
    for (std::size_t i = 0; i < s.boxes.size(); ++i)
        for (std::size_t j = i + 1; j < s.boxes.size(); ++j)
            if (!boxes_disjoint(s.boxes[i], s.boxes[j])) return false;
    return true;
}

void validate_box(const IndicatorBox& box, int d) {
    if (box.corner.size() != static_cast<std::size_t>(d) || box.side.size() != static_cast<std::size_t>(d))
        throw InvalidArgument("indicator box corner and side must have d components");
    for (const double s : box.side)
        if (!(s > 0)) throw InvalidArgument("indicator box sides must be positive");
    if (!std::isfinite(box.height)) throw InvalidArgument("indicator box height must be finite");
}

double torus_distance(std::span<const double> x, const std::vector<double>& c) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = centered(x[i] - c[i]);
        s += t * t;
    }
    return std::sqrt(s);
}

double unit_ball_volume(int d) {
    return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1);
}

double phase(const std::vector<int>& wave, std::span<const double> x) {
    double t = 0;
    for (std::size_t i = 0; i < x.size(); ++i) t += wave[i] * wrap(x[i]);
    return wrap(t);
}

std::vector<double> shifted(std::span<const double> x, std::span<const double> s) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + s[i];
    return out;
}

} // namespace

PotentialSpec::PotentialSpec(int d, Family family) : d_(d), family_(std::move(family)) {
    if (d < 1) throw InvalidArgument("potential dimension must be >= 1");
    const auto dim = static_cast<std::size_t>(d);
    sup_ = std::visit(
        Overloaded{
            [&](const TrigPolynomial& p) -> std::optional<double> {
                double s = std::abs(p.constant);
                for (const auto& t : p.terms) {
                    if (t.wave.size() != dim) throw InvalidArgument("trig term wave vector must have d components");
                    s += std::hypot(t.cos_coef, t.sin_coef);
                }
                return s;
            },
            [&](const IndicatorBox& b) -> std::optional<double> {
                validate_box(b, d);
                return std::abs(b.height);
            },
            [&](const StepSum& s) -> std::optional<double> {
                double total = 0, largest = 0;
                for (const auto& b : s.boxes) {
                    validate_box(b, d);
                    total += std::abs(b.height);
                    largest = std::max(largest, std::abs(b.height));
                }
                return pairwise_disjoint(s) ? largest : total;
            },
            [&](const InversePowerSingularity& p) -> std::optional<double> {
                if (p.center.size() != dim) throw InvalidArgument("singularity center must have d components");
                if (!(p.exponent > 0 && p.exponent < 1.0 / d))
                    throw InvalidArgument("inverse power exponent must lie in (0, 1/d)");
                if (!(p.ceiling > 0)) throw InvalidArgument("inverse power ceiling must be positive");
                return std::nullopt;
            },
        },
        family_);
}

PotentialSpec PotentialSpec::constant(int d, double value) {
    return PotentialSpec(d, TrigPolynomial{value, {}});
}

PotentialSpec PotentialSpec::cosine(double amplitude) {
    return PotentialSpec(1, TrigPolynomial{0.0, {TrigTerm{{1}, amplitude, 0.0}}});
}

std::string PotentialSpec::family_name() const {
    static constexpr const char* names[] = {"trig_polynomial", "indicator_box", "step_sum",
                                            "inverse_power_singularity"};
    return names[family_.index()];
}

double PotentialSpec::eval_total(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(d_)) throw InvalidArgument("point dimension does not match potential");
    return std::visit(
        Overloaded{
            [&](const TrigPolynomial& p) {
                double v = p.constant;
                for (const auto& t : p.terms) {
                    const double theta = kTwoPi * phase(t.wave, x);
                    v += t.cos_coef * std::cos(theta) + t.sin_coef * std::sin(theta);
                }
                return v;
            },
            [&](const IndicatorBox& b) { return in_box(b, x) ? b.height : 0.0; },
            [&](const StepSum& s) {
                double v = 0;
                for (const auto& b : s.boxes)
                    if (in_box(b, x)) v += b.height;
                return v;
            },
            [&](const InversePowerSingularity& p) {
                const double r = torus_distance(x, p.center);
                return r == 0 ? kInf : std::pow(r, -p.exponent);
            },
        },
        family_);
}

double PotentialSpec::eval(std::span<const double> x) const {
    const double v = eval_total(x);
    if (std::isinf(v)) throw SingularEvaluation("singular evaluation at the center of an inverse-power potential");
    return v;
}

LogValue PotentialSpec::difference(std::span<const double> y, std::span<const LogValue> shift) const {
    if (y.size() != static_cast<std::size_t>(d_) || shift.size() != y.size())
        throw InvalidArgument("point and shift dimensions must match the potential");
    std::vector<double> s(shift.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = shift[i].to_double();

    if (const auto* p = std::get_if<TrigPolynomial>(&family_)) {
        LogValue total;
        for (const auto& t : p->terms) {
            LogValue delta;
            for (std::size_t i = 0; i < shift.size(); ++i)
                delta = delta + LogValue::from_double(t.wave[i]) * shift[i];
            delta = delta * LogValue::from_double(kTwoPi);
            const double theta = kTwoPi * phase(t.wave, y);
            if (delta.is_zero()) continue;
            if (delta.log_mag > std::log(1e-4)) {
                const double dd = std::fmod(delta.to_double(), kTwoPi);
                const double half = dd / 2;
                total = total + LogValue::from_double(2 * std::sin(half) *
                                                      (t.sin_coef * std::cos(theta + half) -
                                                       t.cos_coef * std::sin(theta + half)));
            } else {
                // second-order Taylor in delta; relative error O(delta^2)
                const double first = t.sin_coef * std::cos(theta) - t.cos_coef * std::sin(theta);
                const double second = -(t.cos_coef * std::cos(theta) + t.sin_coef * std::sin(theta)) / 2;
                total = total + delta * LogValue::from_double(first) + delta * delta * LogValue::from_double(second);
            }
        }
        return total;
    }
    if (const auto* p = std::get_if<InversePowerSingularity>(&family_)) {
        const double r = torus_distance(y, p->center);
        if (r == 0) throw SingularEvaluation("singular evaluation at the center of an inverse-power potential");
        double smax = 0;
        for (const auto& v : shift) smax = std::max(smax, std::abs(v.to_double()));
        if (smax > 1e-8 * r) return LogValue::from_double(eval(shifted(y, s)) - eval(y));
        // gradient: -beta r^(-beta-2) (y - c)
        const double scale = -p->exponent * std::pow(r, -p->exponent - 2);
        LogValue total;
        for (std::size_t i = 0; i < y.size(); ++i)
            total = total + LogValue::from_double(scale * centered(y[i] - p->center[i])) * shift[i];
        return total;
    }
    return LogValue::from_double(eval(shifted(y, s)) - eval(y));
}

std::optional<double> PotentialSpec::exact_level_measure(double level) const {
    if (!(level >= 0)) throw InvalidArgument("level M must be >= 0");
    return std::visit(
        Overloaded{
            [&](const TrigPolynomial& p) -> std::optional<double> {
                if (!p.terms.empty()) return std::nullopt;
                return std::abs(p.constant) > level ? 1.0 : 0.0;
            },
            [&](const IndicatorBox& b) -> std::optional<double> {
                return std::abs(b.height) > level ? box_volume(b) : 0.0;
            },
            [&](const StepSum& s) -> std::optional<double> {
                if (!pairwise_disjoint(s)) return std::nullopt;
                double v = 0;
                for (const auto& b : s.boxes)
                    if (std::abs(b.height) > level) v += box_volume(b);
                return v;
            },
            [&](const InversePowerSingularity& p) -> std::optional<double> {
                if (level == 0) return 1.0;
                // |f| > M  <=>  ||x - c|| < M^(-1/beta)
                const double r = std::pow(level, -1.0 / p.exponent);
                if (r <= 0.5) return unit_ball_volume(d_) * std::pow(r, d_);
                if (r >= std::sqrt(static_cast<double>(d_)) / 2) return 1.0;
                return std::nullopt;
            },
        },
        family_);
}

MeasureEstimate f_set_measure(const PotentialSpec& f, std::span<const double> shift, double epsilon,
                              const mc::Params& params) {
    if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
    if (shift.size() != static_cast<std::size_t>(f.dimension()))
        throw InvalidArgument("shift dimension does not match potential");
    const std::vector<double> y(shift.begin(), shift.end());
    return mc::estimate(params, y.size(), [&](std::span<const double> x) {
        std::vector<double> xs(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) xs[i] = x[i] + y[i];
        return std::abs(f.eval_total(xs) - f.eval_total(x)) >= epsilon;
    });
}

LevelMeasure e_set_measure(const PotentialSpec& f, double level, const mc::Params& params) {
    if (!(level >= 0)) throw InvalidArgument("level M must be >= 0");
    LevelMeasure out;
    out.exact = f.exact_level_measure(level);
    out.estimate = mc::estimate(params, static_cast<std::size_t>(f.dimension()),
                                [&](std::span<const double> x) { return std::abs(f.eval_total(x)) > level; });
    return out;
}

double estimate_kappa(const PotentialSpec& f, double epsilon, double eta, const mc::Params& params,
                      const KappaOptions& options) {
    if (!(epsilon > 0) || !(eta > 0)) throw InvalidArgument("epsilon and eta must be positive");
    if (!(options.max_radius > options.min_radius) || !(options.min_radius > 0))
        throw InvalidArgument("kappa radii must satisfy 0 < min_radius < max_radius");
    const int d = f.dimension();

    // probe k reuses one seed at every radius (common random numbers)
    auto passes = [&](double r) {
        std::vector<std::vector<double>> probes;
        for (int i = 0; i < d; ++i) {
            std::vector<double> y(d, 0.0);
            y[i] = r;
            probes.push_back(std::move(y));
        }
        if (d >= 2) probes.emplace_back(d, r / std::sqrt(static_cast<double>(d)));
        for (std::size_t k = 0; k < probes.size(); ++k) {
            mc::Params p = params;
            p.seed = mc::derive_seed(params.seed, k);
            if (!(f_set_measure(f, probes[k], epsilon, p).upper < eta)) return false;
        }
        return true;
    };

    double r = options.max_radius;
    if (passes(r)) return r;
    do {
        r /= 2;
        if (r < options.min_radius)
            throw KappaBelowResolution("kappa below resolution: no passing radius above " +
                                       std::to_string(options.min_radius));
    } while (!passes(r));
    double lo = r, hi = 2 * r;
    for (int step = 0; step < options.refine_steps; ++step) {
        const double mid = (lo + hi) / 2;
        (passes(mid) ? lo : hi) = mid;
    }
    return lo;
}

double m_tau_level(const PotentialSpec& f, std::span<const long long> tau, const mc::Params& params,
                   const LevelOptions& options) {
    if (tau.size() != static_cast<std::size_t>(f.dimension()))
        throw InvalidArgument("tau dimension does not match potential");
    double log_product = 0;
    for (const long long t : tau) {
        if (t < 1) throw InvalidArgument("tau components must be >= 1");
        log_product += std::log(static_cast<double>(t));
    }
    if (!(options.rel_tol > 0)) throw InvalidArgument("rel_tol must be positive");
    const double target = std::exp(-f.dimension() * log_product);
    auto satisfied = [&](double m) { return e_set_measure(f, m, params).value() <= target; };

    if (satisfied(0.0)) return 0.0;
    double lo = 0, hi;
    if (f.bounded()) {
        hi = *f.declared_sup();
    } else {
        double ceiling = options.ceiling.value_or(0.0);
        if (const auto* p = std::get_if<InversePowerSingularity>(&f.family()); p && !options.ceiling)
            ceiling = p->ceiling;
        hi = 1;
        while (!satisfied(hi)) {
            lo = hi;
            hi *= 2;
            if (hi > ceiling)
                throw LevelSearchOverflow("level search overflow: measure condition not met below ceiling " +
                                          std::to_string(ceiling));
        }
    }
    while (hi - lo > options.rel_tol * hi) {
        const double mid = (lo + hi) / 2;
        (satisfied(mid) ? hi : lo) = mid;
    }
    return hi;
}

double periodic_approximant(const PotentialSpec& f, std::span<const double> x, std::span<const double> alpha,
                            std::span<const long long> tau, std::span<const long long> n) {
    const auto d = static_cast<std::size_t>(f.dimension());
    if (x.size() != d || alpha.size() != d || tau.size() != d || n.size() != d)
        throw InvalidArgument("periodic approximant arguments must all have d components");
    std::vector<double> point(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (tau[i] < 1) throw InvalidArgument("tau components must be >= 1");
        const long long m = ((n[i] % tau[i]) + tau[i]) % tau[i];
        point[i] = wrap(x[i] + static_cast<double>(m) * alpha[i]);
    }
    return f.eval(point);
}

double periodic_approximant(const PotentialSpec& f, std::span<const double> x,
                            const freqcond::FrequencyVector& alpha, std::span<const long long> tau,
                            std::span<const long long> n) {
    const auto a = alpha.to_doubles();
    return periodic_approximant(f, x, a, tau, n);
}

ZTauReport z_tau_measure(const PotentialSpec& f, const freqcond::FrequencyVector& alpha,
                         std::span<const long long> tau, double gamma, double delta, const mc::Params& params,
                         const ZTauOptions& options) {
    const int d = f.dimension();
    const auto dim = static_cast<std::size_t>(d);
    if (!(gamma > 0)) throw InvalidArgument("gamma must be positive");
    if (!(delta > 0 && delta < gamma / 2)) throw InvalidArgument("delta must lie in (0, gamma/2)");
    if (alpha.dimension() != dim || tau.size() != dim)
        throw InvalidArgument("alpha and tau must have d components");

    double product = 1;
    for (const long long t : tau) {
        if (t < 1) throw InvalidArgument("tau components must be >= 1");
        product *= static_cast<double>(t);
    }
    std::vector<long long> radius(dim);
    double count = 1;
    for (std::size_t i = 0; i < dim; ++i) {
        radius[i] = static_cast<long long>(std::floor((2 * d + delta) * product / static_cast<double>(tau[i])));
        count *= static_cast<double>(2 * radius[i] + 1);
    }
    if (count > static_cast<double>(options.max_terms))
        throw CostGuardExceeded("index set I_tau has " + std::to_string(count) + " vectors, above the guard");

    ZTauReport out;
    out.m_tau = m_tau_level(f, tau, params);
    out.e_at_m_tau = e_set_measure(f, out.m_tau, params);

    std::vector<double> sigma(dim);
    for (std::size_t i = 0; i < dim; ++i) sigma[i] = contfrac::signed_offset(BigInt(tau[i]), alpha[i]);

    const double exponent = (2 * d + gamma) * product;
    const double base_log = out.m_tau > 0 ? -exponent * std::log(out.m_tau) : kInf;
    const double min_log = std::log(std::numeric_limits<double>::min());

    struct Term {
        std::vector<long long> j;
        std::vector<double> shift;
        double threshold_log;
        bool has_x;
    };
    std::vector<Term> terms;
    std::vector<long long> j(dim);
    for (std::size_t i = 0; i < dim; ++i) j[i] = -radius[i];
    for (;;) {
        long long l1 = 0;
        for (const long long v : j) l1 += std::llabs(v);
        Term t{j, std::vector<double>(dim), 0.0, l1 != 0};
        for (std::size_t i = 0; i < dim; ++i) t.shift[i] = static_cast<double>(j[i]) * sigma[i];
        t.threshold_log = l1 == 0 ? -kInf : std::log(static_cast<double>(l1)) + base_log;
        terms.push_back(std::move(t));
        std::size_t pos = dim;
        bool done = true;
        while (pos > 0) {
            --pos;
            if (++j[pos] <= radius[pos]) {
                done = false;
                break;
            }
            j[pos] = -radius[pos];
        }
        if (done) break;
    }

    // counters: [2k] X_k, [2k+1] Y_k, [2n] union
    const std::size_t n_terms = terms.size();
    const double level = out.m_tau;
    const auto counts = mc::accumulate(params, dim, 2 * n_terms + 1,
                                       [&](std::span<const double> x, std::span<std::uint64_t> c) {
        const double f0 = f.eval_total(x);
        std::vector<double> xs(dim);
        bool any = false;
        for (std::size_t k = 0; k < n_terms; ++k) {
            const Term& t = terms[k];
            for (std::size_t i = 0; i < dim; ++i) xs[i] = x[i] + t.shift[i];
            const double fj = f.eval_total(xs);
            if (t.has_x) {
                const double diff = std::abs(fj - f0);
                bool member;
                if (t.threshold_log < min_log) member = diff > 0;
                else member = diff >= std::exp(t.threshold_log);
                if (member) {
                    ++c[2 * k];
                    any = true;
                }
            }
            if (std::abs(fj) > level) {
                ++c[2 * k + 1];
                any = true;
            }
        }
        if (any) ++c[2 * n_terms];
    });

    for (std::size_t k = 0; k < n_terms; ++k) {
        ZTerm z;
        z.j = terms[k].j;
        z.threshold_log = terms[k].threshold_log;
        long long l1 = 0;
        for (const long long v : z.j) l1 += std::llabs(v);
        z.x_bound = static_cast<double>(l1) / std::pow(product, 3);
        if (terms[k].has_x) {
            z.x = mc::make_estimate(counts[2 * k], params.samples, params.seed);
            out.x_sum += z.x->value;
        }
        z.y = mc::make_estimate(counts[2 * k + 1], params.samples, params.seed);
        out.y_sum += z.y.value;
        out.x_bound_sum += z.x_bound;
        out.terms.push_back(std::move(z));
    }
    out.y_bound_sum = static_cast<double>(n_terms) / std::pow(product, d);
    out.union_bound = out.x_sum + out.y_sum;
    out.z = mc::make_estimate(counts[2 * n_terms], params.samples, params.seed);
    return out;
}

} // namespace quasilab::potential
