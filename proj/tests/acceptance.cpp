// Acceptance run: one line per criterion, nonzero exit if any criterion fails.

#include "fixtures.hpp"
#include "quasilab/cli.hpp"
#include "quasilab/contfrac.hpp"
#include "quasilab/freqcond.hpp"
#include "quasilab/gordon.hpp"
#include "quasilab/lattice.hpp"
#include "quasilab/potential.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace quasilab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& label, double time_limit, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (time_limit > 0 && secs >= time_limit) {
        o.pass = false;
        o.detail += "; over the time limit";
    }
    if (!o.pass) ++failures;
    std::printf("%s: %s (%.2f s) %s\n", label.c_str(), o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
}

void supplementary(const std::string& label, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s: %s %s\n", label.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

contfrac::Frequency rule(contfrac::QuotientRule r, std::size_t depth) { return contfrac::Frequency(std::move(r), depth); }

std::vector<contfrac::Frequency> sandwich_rules() {
    using namespace contfrac;
    auto tail = std::make_shared<const QuotientRule>(constant_rule(3));
    return {rule(constant_rule(1), 64),
            rule(QuotientRule{ArithmeticRule{1, 1}}, 64),
            rule(QuotientRule{PeriodicRule{{1, 4, 2}}}, 64),
            rule(QuotientRule{GeometricRule{2}}, 64),
            rule(explicit_rule({7, 1, 12, 2, 5}, tail), 64)};
}

Outcome sandwich(bool literal) {
    int checked = 0, held = 0;
    for (const auto& alpha : sandwich_rules())
        for (std::size_t n = 1; n <= 30; ++n) {
            const auto c = contfrac::sandwich_check(alpha, n);
            ++checked;
            held += literal ? c.literal() : c.classical();
        }
    const contfrac::Frequency de(contfrac::QuotientRule{contfrac::DoublyExponentialRule{2}});
    for (std::size_t n = 1; n + 4 < de.precision_depth(); ++n) {
        const auto c = contfrac::sandwich_check(de, n);
        ++checked;
        held += literal ? c.literal() : c.classical();
    }
    return {held == checked, std::to_string(held) + "/" + std::to_string(checked) + " level checks hold"};
}

std::vector<double> margins(const contfrac::Frequency& freq, std::initializer_list<std::size_t> levels) {
    const auto f = potential::PotentialSpec::cosine(2);
    const freqcond::FrequencyVector alpha({freq});
    const std::vector<double> x = {0.0};
    std::vector<double> out;
    for (const std::size_t level : levels) {
        const std::vector<long long> tau = {static_cast<long long>(freq.q(level))};
        out.push_back(gordon::gordon_check_orbit(f, x, alpha, tau, 1.0, 0.5).margin_log);
    }
    return out;
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt("%.6g", v[i]);
    return s + "]";
}

bool decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

bool increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

int main() {
    criterion("criterion 1 (continued fractions)", 1.0, [] {
        const auto golden = contfrac::Frequency::golden_mean(121);
        // q_n = F_{n+1}
        BigInt a = 1, b = 1;
        bool fib = true, invariants = true;
        for (std::size_t n = 1; n <= 120; ++n) {
            fib = fib && golden.q(n) == b;
            const BigInt next = a + b;
            a = b;
            b = next;
            const BigInt det = golden.p(n) * golden.q(n - 1) - golden.p(n - 1) * golden.q(n);
            invariants = invariants && det == (n % 2 == 1 ? 1 : -1) && gcd(golden.p(n), golden.q(n)) == 1;
        }
        const std::string q120 = golden.q(120).str();
        return Outcome{fib && invariants && q120.size() == 25, "q_120 = " + q120};
    });

    criterion("criterion 2 (best approximation)", 10.0, [] {
        int levels = 0;
        bool ok = true;
        for (const auto& alpha : {contfrac::Frequency::golden_mean(), contfrac::Frequency::silver_mean()})
            for (std::size_t n = 1; alpha.q(n) <= 10000; ++n) {
                ok = ok && contfrac::best_approx_verify(alpha, n);
                ++levels;
            }
        return Outcome{ok, std::to_string(levels) + " levels verified by brute force"};
    });

    criterion("criterion 3 (sandwich, literal 1/q_{n+1} <= ||q_n alpha|| <= 2/q_{n+1})", 5.0,
              [] { return sandwich(true); });
    supplementary("criterion 3 supplementary (classical 1/(2 q_{n+1}) <= ||q_n alpha|| <= 1/q_{n+1})",
                  [] { return sandwich(false); });

    criterion("criterion 4 (A_eps measure formula)", 0.0, [] {
        const std::vector<long long> m = {2, 2, 2};
        int covered = 0;
        double closed = 0;
        for (std::uint64_t rep = 0; rep < 100; ++rep) {
            const auto e = freqcond::aeps_measure(m, 0.1, {.samples = 1000000, .seed = mc::derive_seed(4, rep)});
            covered += e.mc.interval_contains(e.closed_form);
            closed = e.closed_form;
        }
        const double zeta2 = kPi * kPi / 6;
        const double limit = 0.008 * zeta2 * zeta2 * zeta2;
        const auto s = freqcond::aeps_series(0.1, 3, 1000000);
        const bool series_ok = std::fabs(s.partial_sum - limit) < 1e-4 && std::fabs(s.partial_sum - 0.035625) < 1e-4;
        const bool closed_ok = std::fabs(closed - 1.25e-4) < 1e-15;
        return Outcome{covered >= 93 && series_ok && closed_ok,
                       std::to_string(covered) + "/100 intervals contain " + fmt("%.6g", closed) +
                           "; series at cutoff 1e6 = " + fmt("%.10f", s.partial_sum) + " vs " +
                           fmt("%.10f", limit)};
    });

    criterion("criterion 5 (Gordon log-domain arithmetic)", 0.0, [] {
        std::mt19937_64 rng(5);
        int disagreements = 0, cases = 0;
        while (cases < 200) {
            const int d = 1 + static_cast<int>(rng() % 2);
            std::vector<long long> tau(d);
            long long product = 1;
            for (auto& t : tau) product *= (t = 1 + static_cast<long long>(rng() % 3));
            const int gamma = 1 + static_cast<int>(rng() % 6);
            const long long exponent = (2 * d + gamma) * product;
            if (exponent > 60) continue;
            const double m = static_cast<double>(rng() % 33) / 4;
            const double lambda0 = static_cast<double>(1 + rng() % 32) / 4;
            const BigRational base = BigRational(2 * d - 1) + to_rational(m) + to_rational(lambda0);
            const double threshold = -static_cast<double>(exponent) * std::log(2 * d - 1 + m + lambda0);
            double rho;
            switch (rng() % 4) {
            case 0: rho = 0; break;
            case 1: rho = std::exp(threshold + (static_cast<double>(rng() % 2001) - 1000) / 100); break;
            default:
                rho = std::exp(threshold) *
                      (1 + (rng() % 2 ? 1.0 : -1.0) * std::ldexp(1.0 + static_cast<double>(rng() % 8), -30));
            }
            BigRational power = 1;
            for (long long i = 0; i < exponent; ++i) power *= base;
            const bool exact = to_rational(rho) * power < 1;
            disagreements += gordon::gordon_check(rho, m, d, tau, gamma, lambda0).pass != exact;
            ++cases;
        }
        const auto worked = gordon::gordon_check(1e-30, 2.0, 2, std::vector<long long>{2, 3}, 1.0, 1.0);
        const double log10_threshold = worked.threshold_log / std::log(10.0);
        return Outcome{disagreements == 0 && std::fabs(log10_threshold + 23.345) < 1e-3,
                       std::to_string(disagreements) + " disagreements in 200 cases; log10 6^-30 = " +
                           fmt("%.6f", log10_threshold)};
    });

    criterion("criterion 6 (Z_tau bounds, d = 2, tau = (2, 3))", 30.0, [] {
        const auto f = fixtures::two_box_step();
        const auto alpha = fixtures::near_half_third();
        const std::vector<long long> tau = {2, 3};
        const double gamma = 1.0, delta = 0.25;
        const mc::Params params{.samples = 100000, .seed = 6};
        const auto r = potential::z_tau_measure(f, alpha, tau, gamma, delta, params);
        const double eps = std::exp(-(2 * 2 + gamma) * 6 * std::log(r.m_tau));
        const double kappa = potential::estimate_kappa(f, eps, 1.0 / 36, params);
        const double shift = std::hypot(contfrac::signed_offset(BigInt(2), alpha[0]),
                                        contfrac::signed_offset(BigInt(3), alpha[1]));
        const double y_exact = *r.e_at_m_tau.exact;
        // Bonferroni over every Y_j: two-sided 95% joint
        const double z = 3.9;
        int x_bad = 0, y_bad = 0;
        for (const auto& t : r.terms) {
            if (t.x && t.x->value > t.x_bound + 3 * t.x->sigma()) ++x_bad;
            if (std::fabs(t.y.value - y_exact) > z * std::sqrt(y_exact * (1 - y_exact) / params.samples)) ++y_bad;
        }
        return Outcome{shift < kappa && x_bad == 0 && y_bad == 0,
                       "shift " + fmt("%.3g", shift) + " < kappa " + fmt("%.3g", kappa) + "; " +
                           std::to_string(r.terms.size()) + " terms, " + std::to_string(x_bad) + " X and " +
                           std::to_string(y_bad) + " Y violations"};
    });

    criterion("criterion 7 (spectral norm bound)", 0.0, [] {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0, 1);
        int violations = 0;
        const auto golden = contfrac::Frequency::golden_mean();
        const auto silver = contfrac::Frequency::silver_mean();
        for (int c = 0; c < 100; ++c) {
            const int d = 1 + c % 2;
            potential::TrigPolynomial poly{2 * u(rng) - 1, {}};
            for (int t = 0; t < 3; ++t) {
                std::vector<int> wave(d);
                for (auto& w : wave) w = static_cast<int>(rng() % 5) - 2;
                poly.terms.push_back({wave, 3 * u(rng) - 1.5, 3 * u(rng) - 1.5});
            }
            const potential::PotentialSpec f(d, poly);
            std::vector<double> x(d);
            for (auto& v : x) v = u(rng);
            const std::vector<long long> sides =
                d == 1 ? std::vector<long long>{20 + static_cast<long long>(rng() % 150)}
                       : std::vector<long long>{3 + static_cast<long long>(rng() % 12),
                                                3 + static_cast<long long>(rng() % 12)};
            const auto bc = rng() % 2 ? lattice::Boundary::periodic : lattice::Boundary::dirichlet;
            const freqcond::FrequencyVector alpha(d == 1 ? std::vector{golden} : std::vector{golden, silver});
            const auto s = lattice::spectrum(lattice::BoxHamiltonian::assemble(f, x, alpha, sides, bc));
            const double bound = 2 * d + *f.declared_sup();
            violations += s.values.maxCoeff() > bound || s.values.minCoeff() < -bound;
        }
        const long long n = 2000;
        const auto chain = lattice::BoxHamiltonian::assemble(
            potential::PotentialSpec::constant(1, 0.0), std::vector<double>{0.0},
            freqcond::FrequencyVector({golden}), std::vector<long long>{n}, lattice::Boundary::dirichlet);
        const auto s = lattice::spectrum(chain);
        double worst = 0;
        for (long long k = 1; k <= n; ++k)
            worst = std::max(worst, std::fabs(s.values[k - 1] - 2 * std::cos(kPi * static_cast<double>(n + 1 - k) /
                                                                              static_cast<double>(n + 1))));
        return Outcome{violations == 0 && worst <= 1e-10, std::to_string(violations) +
                                                              " configurations out of bounds; free chain N = 2000 "
                                                              "max error " + fmt("%.3g", worst)};
    });

    criterion("criterion 8 (transport)", 0.0, [] {
        const long long n = 4 * 5 + 61;
        const auto chain = lattice::BoxHamiltonian::from_diagonal(std::vector<long long>{n}, lattice::Boundary::dirichlet,
                                                                  std::vector<double>(n, 0.0));
        const auto origin = static_cast<std::size_t>(n / 2);
        Eigen::VectorXcd u0 = Eigen::VectorXcd::Zero(n);
        u0[static_cast<Eigen::Index>(origin)] = 1.0;
        const std::vector<double> times = {1.0, 2.0, 5.0};
        const auto free = lattice::evolve(chain, u0, times, origin);
        double worst_rel = 0;
        for (std::size_t i = 0; i < times.size(); ++i)
            worst_rel = std::max(worst_rel, std::fabs(free.rows[i].mean_x2 - 2 * times[i] * times[i]) /
                                                (2 * times[i] * times[i]));

        const long long m = 201;
        const auto disorder = lattice::BoxHamiltonian::from_diagonal(
            std::vector<long long>{m}, lattice::Boundary::dirichlet, lattice::random_diagonal(m, 10.0, 8));
        const auto o2 = static_cast<std::size_t>(m / 2);
        Eigen::VectorXcd v0 = Eigen::VectorXcd::Zero(m);
        v0[static_cast<Eigen::Index>(o2)] = 1.0;
        std::vector<double> t2;
        for (int i = 0; i <= 100; ++i) t2.push_back(0.5 * i);
        const auto loc = lattice::evolve(disorder, v0, t2, o2);
        double first = 0, second = 0;
        for (const auto& row : loc.rows) (row.t <= 25 ? first : second) = std::max(row.t <= 25 ? first : second, row.mean_x2);
        const double drift = std::max(free.max_norm_drift, loc.max_norm_drift);
        return Outcome{worst_rel <= 0.01 && drift <= 1e-8 && second <= 1.2 * first,
                       "free <X^2> max relative error " + fmt("%.3g", worst_rel) + "; drift " + fmt("%.3g", drift) +
                           "; disorder plateau " + fmt("%.4g", second) + " vs 1.2 x " + fmt("%.4g", first)};
    });

    criterion("criterion 9 (Gordon margin trends: golden decreasing, doubly exponential increasing)", 0.0, [] {
        const auto g = margins(contfrac::Frequency::golden_mean(), {2, 4, 6, 8, 10, 12});
        const contfrac::Frequency de(contfrac::QuotientRule{contfrac::DoublyExponentialRule{2}});
        const auto e = margins(de, {1, 2, 3});
        return Outcome{decreasing(g) && increasing(e),
                       "golden " + list(g) + (decreasing(g) ? " decreasing" : " not decreasing") +
                           "; doubly exponential " + list(e) + (increasing(e) ? " increasing" : " not increasing")};
    });
    supplementary("criterion 9 supplementary (super-Liouville [1, 1, 10^5, 2^1750000, 1, ...])", [] {
        auto tail = std::make_shared<const contfrac::QuotientRule>(contfrac::constant_rule(1));
        const contfrac::Frequency liouville(contfrac::explicit_rule({1, 1, 100000, BigInt(1) << 1750000}, tail), 8);
        const auto s = margins(liouville, {1, 2, 3});
        return Outcome{increasing(s) && s.back() > 0, list(s) + (increasing(s) ? " increasing" : " not increasing") +
                                                           (s.back() > 0 ? ", passes at the last tau" : "")};
    });

    criterion("criterion 10 (reproducibility across 1 and 8 threads)", 0.0, [] {
        using cli::json;
        const auto root = fs::temp_directory_path() / "quasilab_acceptance";
        fs::remove_all(root);
        const json cos = {{"family", "trig_polynomial"}, {"d", 1}, {"terms", json::array({{{"wave", {1}}, {"cos", 2.0}}})}};
        const json golden = json::array({{{"rule", "golden"}}});
        const std::vector<json> configs = {
            {{"experiment", "measure-zero"},
             {"params", {{"m", {2, 2, 2}}, {"epsilon", 0.1}, {"cutoff", 1000}}},
             {"mc", {{"samples", 200000}, {"seed", 10}}}},
            {{"experiment", "gordon-check"},
             {"frequencies", golden},
             {"potential", cos},
             {"params", {{"taus", {{5}, {8}, {13}}}, {"gamma", 1.0}, {"delta", 0.5}}}},
            {{"experiment", "measure-probe"},
             {"potential", cos},
             {"params", {{"shifts", {{0.01}, {0.2}}}, {"epsilons", {0.1, 1.0}}, {"levels", {1.0, 1.9}}}},
             {"mc", {{"samples", 50000}, {"seed", 10}}}},
            {{"experiment", "spectrum"},
             {"frequencies", golden},
             {"potential", cos},
             {"params", {{"sides", {64}}, {"vectors", true}}}},
            {{"experiment", "transport"},
             {"frequencies", golden},
             {"potential", cos},
             {"params", {{"sides", {101}}, {"times", {0.0, 1.0, 5.0}}}}},
            {{"experiment", "freq-search"},
             {"frequencies", json::array({{{"rule", "golden"}}, {{"rule", "doubly_exponential"}, {"base", 2}}})},
             {"params", {{"target", 1e-3}, {"depth", 6}}}},
            {{"experiment", "interleave"},
             {"frequencies", json::array({{{"rule", "golden"}}, {{"rule", "silver"}}})},
             {"params", {{"epsilon", 0.5}}}},
        };
        int identical = 0, compared = 0;
        std::ostringstream log;
        for (std::size_t i = 0; i < configs.size(); ++i) {
            const auto config = cli::parse_config(configs[i]);
            std::vector<fs::path> dirs;
            for (const unsigned threads : {1u, 8u}) {
                for (int rerun = 0; rerun < 2; ++rerun) {
                    const auto dir = root / (std::to_string(i) + "_" + std::to_string(threads) + "_" +
                                             std::to_string(rerun));
                    cli::run(config, {.seed = 1234, .out_dir = dir.string(), .threads = threads}, log);
                    dirs.push_back(dir);
                }
            }
            for (const auto& entry : fs::directory_iterator(dirs[0])) {
                if (entry.path().extension() != ".csv") continue;
                const auto name = entry.path().filename();
                const auto reference = slurp(entry.path());
                for (std::size_t k = 1; k < dirs.size(); ++k) {
                    ++compared;
                    identical += slurp(dirs[k] / name) == reference;
                }
            }
        }
        fs::remove_all(root);
        return Outcome{compared > 0 && identical == compared,
                       std::to_string(identical) + "/" + std::to_string(compared) +
                           " CSV comparisons byte-identical over " + std::to_string(configs.size()) + " experiments"};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
