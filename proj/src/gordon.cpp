#include "quasilab/gordon.hpp"
#include "quasilab/contfrac.hpp"
#include "quasilab/errors.hpp"
#include "quasilab/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace quasilab::gordon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tau_product(std::span<const long long> tau) {
    double p = 1;
    for (const long long t : tau) p *= static_cast<double>(t);
    return p;
}

void check_tau(int d, std::span<const long long> tau) {
    if (d < 1) throw InvalidArgument("dimension must be >= 1");
    if (tau.size() != static_cast<std::size_t>(d)) throw InvalidArgument("tau must have d components");
    for (const long long t : tau)
        if (t < 1) throw InvalidArgument("tau components must be >= 1");
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// floor(a / b) and ceil(a / b) for b > 0
long long floor_div(long long a, long long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
long long ceil_div(long long a, long long b) { return -floor_div(-a, b); }

} // namespace

long long box_radius(int d, std::span<const long long> tau, double delta) {
    check_tau(d, tau);
    const long double r = (2.0L * d + delta) * static_cast<long double>(tau_product(tau));
    if (r > 1e15L) throw CostGuardExceeded("box radius exceeds 1e15");
    return static_cast<long long>(std::floor(r));
}

void validate(const GordonInput& in) {
    check_tau(in.d, in.tau);
    if (!(in.delta > 0 && in.gamma > in.delta))
        throw InvalidArgument("need gamma > delta > 0 (Gordon criterion hypothesis), got gamma = " + fmt(in.gamma) +
                              ", delta = " + fmt(in.delta));
    if (!(in.lambda0 > 0)) throw InvalidArgument("lambda0 must be positive");
    const long long r = box_radius(in.d, in.tau, in.delta);
    const double side = static_cast<double>(2 * r + 1);
    const double expected = std::pow(side, in.d);
    if (expected > 1e9) throw CostGuardExceeded("sample box too large");
    const auto n = static_cast<std::size_t>(expected);
    if (in.v.size() != n || in.v_per.size() != n)
        throw MissingSamples("missing samples: box needs " + std::to_string(n) + " values, got " +
                             std::to_string(in.v.size()) + " and " + std::to_string(in.v_per.size()));
    for (std::size_t i = 0; i < n; ++i)
        if (std::isnan(in.v[i]) || std::isnan(in.v_per[i]))
            throw MissingSamples("missing samples: NaN at flat index " + std::to_string(i));

    // v_per(n) == v_per(n + tau_i e_i) whenever both lie in the box
    const auto w = static_cast<std::size_t>(2 * r + 1);
    std::vector<std::size_t> stride(in.d, 1);
    for (int i = in.d - 2; i >= 0; --i) stride[i] = stride[i + 1] * w;
    for (std::size_t flat = 0; flat < n; ++flat) {
        for (int i = 0; i < in.d; ++i) {
            const std::size_t coord = (flat / stride[i]) % w;
            const auto t = static_cast<std::size_t>(in.tau[i]);
            if (coord + t < w && in.v_per[flat] != in.v_per[flat + t * stride[i]])
                throw InvalidArgument("v_per is not tau-periodic at flat index " + std::to_string(flat));
        }
    }
}

RhoM rho_and_m(const GordonInput& in) {
    validate(in);
    RhoM out;
    for (std::size_t i = 0; i < in.v.size(); ++i) {
        out.rho = std::max(out.rho, std::abs(in.v_per[i] - in.v[i]));
        out.m = std::max(out.m, std::abs(in.v[i]));
    }
    return out;
}

double GordonReport::tau_product() const { return gordon::tau_product(tau); }

std::string GordonReport::to_text() const {
    std::ostringstream os;
    os << "d: " << d << "\n";
    os << "tau:";
    for (const long long t : tau) os << ' ' << t;
    os << "\n";
    os << "tau_product: " << fmt(tau_product()) << "\n";
    os << "gamma: " << fmt(gamma) << "\n";
    os << "lambda0: " << fmt(lambda0) << "\n";
    os << "box_radius: " << radius << "\n";
    os << "rho_sign: " << rho_log.sign << "\n";
    os << "rho_log: " << fmt(rho_log.log_mag) << "\n";
    os << "rho_log10: " << fmt(rho_log.log_mag / std::log(10.0)) << "\n";
    os << "box_max: " << fmt(m_tau) << "\n";
    os << "threshold_log: " << fmt(threshold_log) << "\n";
    os << "threshold_log10: " << fmt(threshold_log / std::log(10.0)) << "\n";
    os << "margin_log: " << fmt(margin_log) << "\n";
    os << "pass: " << (pass ? "true" : "false") << "\n";
    if (bounded_threshold_log) {
        os << "bounded_threshold_log: " << fmt(*bounded_threshold_log) << "\n";
        os << "bounded_pass: " << (*bounded_pass ? "true" : "false") << "\n";
    }
    os << "label: " << label << "\n";
    return os.str();
}

GordonReport gordon_check(const LogValue& rho, double m, int d, std::span<const long long> tau, double gamma,
                          double lambda0) {
    check_tau(d, tau);
    if (rho.sign < 0) throw InvalidArgument("rho must be >= 0");
    if (!(m >= 0)) throw InvalidArgument("m must be >= 0");
    if (!(gamma > 0)) throw InvalidArgument("gamma must be positive");
    if (!(lambda0 > 0)) throw InvalidArgument("lambda0 must be positive");
    GordonReport r;
    r.d = d;
    r.tau.assign(tau.begin(), tau.end());
    r.gamma = gamma;
    r.lambda0 = lambda0;
    r.rho_log = rho;
    r.m_tau = m;
    const double exponent = (2 * d + gamma) * tau_product(tau);
    r.threshold_log = -exponent * std::log(2 * d - 1 + m + lambda0);
    r.pass = rho.log_mag < r.threshold_log;
    r.margin_log = rho.is_zero() ? kInf : r.threshold_log - rho.log_mag;
    r.label = r.pass ? "hypothesis verified at this period" : "hypothesis not verified at this period";
    return r;
}

GordonReport gordon_check(double rho, double m, int d, std::span<const long long> tau, double gamma, double lambda0) {
    if (!(rho >= 0)) throw InvalidArgument("rho must be >= 0");
    return gordon_check(LogValue::from_double(rho), m, d, tau, gamma, lambda0);
}

GordonReport gordon_check_orbit(const potential::PotentialSpec& f, std::span<const double> x,
                                const freqcond::FrequencyVector& alpha, std::span<const long long> tau, double gamma,
                                double delta, const OrbitOptions& options) {
    const int d = f.dimension();
    const auto dim = static_cast<std::size_t>(d);
    check_tau(d, tau);
    if (x.size() != dim || alpha.dimension() != dim) throw InvalidArgument("x and alpha must have d components");
    if (!(delta > 0 && gamma > delta))
        throw InvalidArgument("need gamma > delta > 0 (Gordon criterion hypothesis)");
    double lambda0;
    if (options.lambda0) lambda0 = *options.lambda0;
    else if (f.bounded()) lambda0 = 2 * d + *f.declared_sup();
    else throw InvalidArgument("lambda0 is required for an unbounded potential");

    const long long radius = box_radius(d, tau, delta);
    const double sites = std::pow(static_cast<double>(2 * radius + 1), d);
    if (sites > static_cast<double>(options.max_sites))
        throw CostGuardExceeded("orbit box has " + fmt(sites) + " sites, above the guard of " +
                                std::to_string(options.max_sites));

    const auto a = alpha.to_doubles();
    std::vector<LogValue> sigma(dim);
    for (std::size_t i = 0; i < dim; ++i) sigma[i] = contfrac::log_signed_offset(BigInt(tau[i]), alpha[i]);

    // one work item per residue class m in [0, tau)
    std::size_t classes = 1;
    for (const long long t : tau) classes *= static_cast<std::size_t>(t);
    struct Partial {
        LogValue rho;
        double m = 0.0;
    };
    std::vector<Partial> partial(classes);
    parallel_for(classes, options.threads, [&](std::size_t c) {
        std::vector<long long> m(dim), k_lo(dim), k_hi(dim), k(dim);
        std::size_t rest = c;
        for (std::size_t i = dim; i-- > 0;) {
            m[i] = static_cast<long long>(rest % static_cast<std::size_t>(tau[i]));
            rest /= static_cast<std::size_t>(tau[i]);
        }
        std::vector<double> y(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            const double t = x[i] + static_cast<double>(m[i]) * a[i];
            y[i] = t - std::floor(t);
            k_lo[i] = ceil_div(-radius - m[i], tau[i]);
            k_hi[i] = floor_div(radius - m[i], tau[i]);
            if (k_lo[i] > k_hi[i]) return; // class not present in the box
        }
        const double base = f.eval(y);
        Partial p;
        p.m = std::abs(base);
        k = k_lo;
        std::vector<LogValue> shift(dim);
        for (;;) {
            bool zero = true;
            for (std::size_t i = 0; i < dim; ++i) {
                shift[i] = LogValue::from_double(static_cast<double>(k[i])) * sigma[i];
                zero = zero && k[i] == 0;
            }
            if (!zero) {
                const LogValue diff = f.difference(y, shift);
                p.rho = max_abs(p.rho, diff);
                p.m = std::max(p.m, std::abs(base + diff.to_double()));
            }
            std::size_t pos = dim;
            bool done = true;
            while (pos > 0) {
                --pos;
                if (++k[pos] <= k_hi[pos]) {
                    done = false;
                    break;
                }
                k[pos] = k_lo[pos];
            }
            if (done) break;
        }
        partial[c] = p;
    });

    LogValue rho;
    double m = 0;
    for (const auto& p : partial) {
        rho = max_abs(rho, p.rho);
        m = std::max(m, p.m);
    }
    GordonReport report = gordon_check(rho, m, d, tau, gamma, lambda0);
    report.radius = radius;
    if (f.bounded()) {
        const double exponent = (2 * d + gamma) * tau_product(tau);
        report.bounded_threshold_log = -exponent * std::log(4 * d - 1 + 2 * *f.declared_sup());
        report.bounded_pass = rho.log_mag < *report.bounded_threshold_log;
    }
    return report;
}

} // namespace quasilab::gordon
