#include "quasilab/cli.hpp"
#include "quasilab/errors.hpp"
#include "quasilab/gordon.hpp"
#include "quasilab/lattice.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace quasilab::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kExperiments = {"freq-search",  "interleave", "measure-zero", "measure-probe",
                                               "gordon-check", "spectrum",   "transport"};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config error in " + where + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) fail(where, "expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) fail(where, "missing required key '" + key + "'");
    return obj.at(key);
}

double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    return v.get<double>();
}

long long as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    return v.get<long long>();
}

double get_double(const json& obj, const std::string& key, const std::string& where, std::optional<double> fallback = {}) {
    if (!obj.contains(key)) {
        if (!fallback) fail(where, "missing required key '" + key + "'");
        return *fallback;
    }
    return as_double(obj.at(key), where + "." + key);
}

long long get_int(const json& obj, const std::string& key, const std::string& where,
                  std::optional<long long> fallback = {}) {
    if (!obj.contains(key)) {
        if (!fallback) fail(where, "missing required key '" + key + "'");
        return *fallback;
    }
    return as_int(obj.at(key), where + "." + key);
}

bool get_bool(const json& obj, const std::string& key, const std::string& where, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) fail(where + "." + key, "expected true or false");
    return obj.at(key).get<bool>();
}

std::vector<double> double_list(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_double(e, where));
    return out;
}

std::vector<long long> int_list(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of integers");
    std::vector<long long> out;
    for (const auto& e : v) out.push_back(as_int(e, where));
    return out;
}

BigInt big_int(const json& v, const std::string& where) {
    if (v.is_number_integer()) return BigInt(v.get<long long>());
    if (v.is_string()) {
        try {
            return parse_big_int(v.get<std::string>());
        } catch (const std::exception& e) {
            fail(where, e.what());
        }
    }
    fail(where, "expected an integer or a string such as \"2^64\"");
}

std::string join(const std::vector<long long>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
    return s;
}

std::string join(const std::vector<BigInt>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i].str();
    return s;
}

contfrac::QuotientRule parse_rule(const json& j, const std::string& where) {
    using namespace contfrac;
    if (!j.is_object()) fail(where, "expected an object");
    const std::string rule = require(j, "rule", where).get<std::string>();
    if (rule == "golden" || rule == "silver") {
        check_keys(j, {"rule", "depth"}, where);
        return constant_rule(rule == "golden" ? 1 : 2);
    }
    if (rule == "constant") {
        check_keys(j, {"rule", "value", "depth"}, where);
        return QuotientRule{ConstantRule{big_int(require(j, "value", where), where + ".value")}};
    }
    if (rule == "arithmetic") {
        check_keys(j, {"rule", "start", "step", "depth"}, where);
        return QuotientRule{ArithmeticRule{big_int(require(j, "start", where), where + ".start"),
                                           big_int(require(j, "step", where), where + ".step")}};
    }
    if (rule == "periodic") {
        check_keys(j, {"rule", "period", "depth"}, where);
        const json& p = require(j, "period", where);
        if (!p.is_array() || p.empty()) fail(where + ".period", "expected a nonempty array");
        std::vector<BigInt> period;
        for (const auto& e : p) period.push_back(big_int(e, where + ".period"));
        return QuotientRule{PeriodicRule{period}};
    }
    if (rule == "geometric" || rule == "doubly_exponential") {
        check_keys(j, {"rule", "base", "depth"}, where);
        const BigInt base = big_int(require(j, "base", where), where + ".base");
        if (rule == "geometric") return QuotientRule{GeometricRule{base}};
        return QuotientRule{DoublyExponentialRule{base}};
    }
    if (rule == "explicit") {
        check_keys(j, {"rule", "quotients", "tail", "depth"}, where);
        const json& q = require(j, "quotients", where);
        if (!q.is_array()) fail(where + ".quotients", "expected an array");
        std::vector<BigInt> quotients;
        for (const auto& e : q) quotients.push_back(big_int(e, where + ".quotients"));
        std::shared_ptr<const QuotientRule> tail;
        if (j.contains("tail")) tail = std::make_shared<const QuotientRule>(parse_rule(j.at("tail"), where + ".tail"));
        return explicit_rule(std::move(quotients), std::move(tail));
    }
    fail(where, "unknown rule '" + rule + "'");
}

potential::IndicatorBox parse_box(const json& j, const std::string& where) {
    check_keys(j, {"corner", "side", "height"}, where);
    return {double_list(require(j, "corner", where), where + ".corner"),
            double_list(require(j, "side", where), where + ".side"), get_double(j, "height", where, 1.0)};
}

mc::Params parse_mc(const json& j) {
    check_keys(j, {"samples", "seed", "chunk_size"}, "mc");
    mc::Params p;
    const long long samples = get_int(j, "samples", "mc", 100000);
    const long long chunk = get_int(j, "chunk_size", "mc", 4096);
    if (samples < 1) fail("mc.samples", "must be >= 1");
    if (chunk < 1) fail("mc.chunk_size", "must be >= 1");
    if (j.contains("seed") && !j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0))
        fail("mc.seed", "expected a nonnegative integer");
    p.samples = static_cast<std::uint64_t>(samples);
    p.chunk_size = static_cast<std::uint64_t>(chunk);
    p.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
    return p;
}

void need_frequencies(const ExperimentConfig& c, std::size_t count, const std::string& what) {
    if (c.frequencies.size() != count)
        fail("frequencies", what + " needs " + std::to_string(count) + " frequencies, got " +
                                std::to_string(c.frequencies.size()));
}

void need_potential(const ExperimentConfig& c) {
    if (!c.potential) fail("potential", c.experiment + " needs a potential");
    need_frequencies(c, static_cast<std::size_t>(c.potential->dimension()), c.experiment);
}

void validate_gordon_params(const json& p, const ExperimentConfig& c) {
    const std::string w = "params";
    const bool direct = p.contains("rho");
    if (direct) {
        check_keys(p, {"rho", "m", "d", "tau", "gamma", "delta", "lambda0"}, w);
        if (get_double(p, "rho", w) < 0) fail("params.rho", "must be >= 0");
        if (get_double(p, "m", w) < 0) fail("params.m", "must be >= 0");
        const long long d = get_int(p, "d", w);
        if (d < 1) fail("params.d", "must be >= 1");
        if (int_list(require(p, "tau", w), "params.tau").size() != static_cast<std::size_t>(d))
            fail("params.tau", "must have d components");
        if (!(get_double(p, "lambda0", w) > 0)) fail("params.lambda0", "must be positive");
    } else {
        check_keys(p, {"tau", "taus", "gamma", "delta", "lambda0", "x", "max_sites"}, w);
        need_potential(c);
        if (p.contains("tau") == p.contains("taus")) fail(w, "give exactly one of 'tau' or 'taus'");
        std::vector<std::vector<long long>> taus;
        if (p.contains("tau")) taus.push_back(int_list(p.at("tau"), "params.tau"));
        else {
            if (!p.at("taus").is_array()) fail("params.taus", "expected an array of tau vectors");
            for (const auto& t : p.at("taus")) taus.push_back(int_list(t, "params.taus"));
        }
        for (const auto& t : taus) {
            if (t.size() != static_cast<std::size_t>(c.potential->dimension())) fail("params.tau", "must have d components");
            for (const long long v : t)
                if (v < 1) fail("params.tau", "components must be >= 1");
        }
        if (p.contains("x") && double_list(p.at("x"), "params.x").size() != static_cast<std::size_t>(c.potential->dimension()))
            fail("params.x", "must have d components");
        if (p.contains("lambda0") && !(get_double(p, "lambda0", w) > 0)) fail("params.lambda0", "must be positive");
        if (!p.contains("lambda0") && !c.potential->bounded())
            fail("params.lambda0", "required for an unbounded potential");
    }
    const double gamma = get_double(p, "gamma", w);
    if (!direct || p.contains("delta")) {
        const double delta = get_double(p, "delta", w);
        if (!(delta > 0 && gamma > delta))
            fail(w, "need gamma > delta > 0 (the Gordon criterion requires some gamma > delta > 0); got gamma = " +
                        format_double(gamma) + ", delta = " + format_double(delta));
    } else if (!(gamma > 0)) {
        fail("params.gamma", "must be positive");
    }
}

void validate_box_params(const json& p, const ExperimentConfig& c, bool transport) {
    const std::string w = "params";
    const bool disorder = transport && p.contains("disorder");
    if (transport) check_keys(p, {"sides", "boundary", "x", "times", "origin", "disorder"}, w);
    else check_keys(p, {"sides", "boundary", "x", "vectors", "dump", "dense_cap"}, w);
    const auto sides = int_list(require(p, "sides", w), "params.sides");
    if (sides.empty()) fail("params.sides", "must be nonempty");
    for (const long long s : sides)
        if (s < 1) fail("params.sides", "side lengths must be >= 1");
    if (p.contains("boundary")) {
        try {
            lattice::boundary_from_string(p.at("boundary").get<std::string>());
        } catch (const std::exception& e) {
            fail("params.boundary", e.what());
        }
    }
    if (disorder) {
        check_keys(p.at("disorder"), {"half_width", "seed"}, "params.disorder");
        if (!(get_double(p.at("disorder"), "half_width", "params.disorder") >= 0))
            fail("params.disorder.half_width", "must be >= 0");
    } else {
        need_potential(c);
        if (sides.size() != static_cast<std::size_t>(c.potential->dimension()))
            fail("params.sides", "must have d components");
    }
    if (p.contains("x") && double_list(p.at("x"), "params.x").size() != sides.size())
        fail("params.x", "must have d components");
    if (transport) {
        const auto times = double_list(require(p, "times", w), "params.times");
        for (std::size_t i = 0; i < times.size(); ++i)
            if (times[i] < 0 || (i && times[i] < times[i - 1])) fail("params.times", "must be ascending and >= 0");
        if (p.contains("origin")) {
            const auto o = int_list(p.at("origin"), "params.origin");
            if (o.size() != sides.size()) fail("params.origin", "must have d components");
            for (std::size_t i = 0; i < o.size(); ++i)
                if (o[i] < 0 || o[i] >= sides[i]) fail("params.origin", "outside the box");
        }
    } else if (p.contains("dense_cap") && get_int(p, "dense_cap", w) < 1) {
        fail("params.dense_cap", "must be >= 1");
    }
}

void validate_params(const ExperimentConfig& c) {
    const json& p = c.params;
    const std::string w = "params";
    const std::string& e = c.experiment;
    if (e == "freq-search") {
        check_keys(p, {"target", "depth", "full_integer", "max_integer", "max_candidates"}, w);
        if (c.frequencies.empty()) fail("frequencies", "freq-search needs at least one frequency");
        if (!(get_double(p, "target", w) > 0)) fail("params.target", "must be positive");
        if (get_int(p, "depth", w, 25) < 1) fail("params.depth", "must be >= 1");
        if (get_bool(p, "full_integer", w, false) && get_int(p, "max_integer", w, 0) < 1)
            fail("params.max_integer", "full_integer search needs max_integer >= 1");
    } else if (e == "interleave") {
        check_keys(p, {"epsilon", "depth"}, w);
        need_frequencies(c, 2, e);
        if (!(get_double(p, "epsilon", w) > 0)) fail("params.epsilon", "must be positive");
        if (get_int(p, "depth", w, 35) < 1) fail("params.depth", "must be >= 1");
    } else if (e == "measure-zero") {
        check_keys(p, {"m", "epsilon", "cutoff"}, w);
        const auto m = int_list(require(p, "m", w), "params.m");
        if (m.empty()) fail("params.m", "must be nonempty");
        for (const long long v : m)
            if (v < 1) fail("params.m", "components must be >= 1");
        if (!(get_double(p, "epsilon", w) > 0)) fail("params.epsilon", "must be positive");
        if (p.contains("cutoff") && get_int(p, "cutoff", w) < 1) fail("params.cutoff", "must be >= 1");
    } else if (e == "measure-probe") {
        check_keys(p, {"shifts", "epsilons", "levels", "kappa"}, w);
        if (!c.potential) fail("potential", "measure-probe needs a potential");
        const auto d = static_cast<std::size_t>(c.potential->dimension());
        if (p.contains("shifts")) {
            if (!p.at("shifts").is_array()) fail("params.shifts", "expected an array of shift vectors");
            for (const auto& s : p.at("shifts"))
                if (double_list(s, "params.shifts").size() != d) fail("params.shifts", "shifts must have d components");
            for (const double eps : double_list(require(p, "epsilons", w), "params.epsilons"))
                if (!(eps > 0)) fail("params.epsilons", "must be positive");
        }
        if (p.contains("levels"))
            for (const double m : double_list(p.at("levels"), "params.levels"))
                if (!(m >= 0)) fail("params.levels", "must be >= 0");
        if (p.contains("kappa")) {
            check_keys(p.at("kappa"), {"epsilon", "eta"}, "params.kappa");
            if (!(get_double(p.at("kappa"), "epsilon", "params.kappa") > 0) ||
                !(get_double(p.at("kappa"), "eta", "params.kappa") > 0))
                fail("params.kappa", "epsilon and eta must be positive");
        }
    } else if (e == "gordon-check") {
        validate_gordon_params(p, c);
    } else if (e == "spectrum") {
        validate_box_params(p, c, false);
    } else {
        validate_box_params(p, c, true);
    }
}

struct Output {
    fs::path dir;
    std::vector<std::string> files;

    void write(const std::string& name, const std::string& content) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) throw Error("cannot write " + (dir / name).string());
        os << content;
        files.push_back(name);
    }
};

json number_or_string(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

double read_number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return std::stod(v.get<std::string>());
    throw Error("expected a number");
}

std::vector<double> phase_or_zero(const json& p, std::size_t d) {
    return p.contains("x") ? p.at("x").get<std::vector<double>>() : std::vector<double>(d, 0.0);
}

struct RunState {
    const ExperimentConfig& config;
    mc::Params mc;
    unsigned threads;
    Output out;
    json manifest_extra = json::object();
    std::vector<std::string> warnings;
    int status = kPass;
};

void run_freq_search(RunState& s) {
    const json& p = s.config.params;
    freqcond::SearchBudget budget;
    budget.depth = static_cast<std::size_t>(get_int(p, "depth", "params", 25));
    budget.full_integer = get_bool(p, "full_integer", "params", false);
    budget.max_integer = static_cast<std::uint64_t>(get_int(p, "max_integer", "params", 0));
    if (p.contains("max_candidates")) budget.max_candidates = static_cast<std::uint64_t>(get_int(p, "max_candidates", "params"));
    const freqcond::FrequencyVector alpha(s.config.frequencies);
    const auto r = freqcond::generic_seq_search(alpha, get_double(p, "target", "params"), budget);
    std::ostringstream csv;
    csv << "found,tau,score_lower,score_upper,examined,best_tau,best_score_upper\n";
    csv << (r.found ? "true" : "false") << ',';
    if (r.candidate)
        csv << join(r.candidate->tau) << ',' << format_double(to_double(r.candidate->score_lower)) << ','
            << format_double(to_double(r.candidate->score_upper));
    else
        csv << ",,";
    csv << ',' << r.examined << ',' << join(r.best.tau) << ',' << format_double(to_double(r.best.score_upper)) << "\n";
    s.out.write("freq-search.csv", csv.str());
    s.manifest_extra["levels_searched"] = r.levels_searched;
}

void run_interleave(RunState& s) {
    const json& p = s.config.params;
    const auto r = freqcond::d2_interleave(s.config.frequencies[0], s.config.frequencies[1],
                                           get_double(p, "epsilon", "params"),
                                           static_cast<std::size_t>(get_int(p, "depth", "params", 35)));
    std::ostringstream csv;
    csv << "found,n,m,ratio_a,ratio_b,best_max_ratio\n";
    csv << (r.found ? "true" : "false") << ',' << r.n << ',' << r.m << ',' << format_double(to_double(r.ratio_a)) << ','
        << format_double(to_double(r.ratio_b)) << ',' << format_double(r.best_max_ratio) << "\n";
    s.out.write("interleave.csv", csv.str());
}

void run_measure_zero(RunState& s) {
    const json& p = s.config.params;
    const auto m = int_list(p.at("m"), "params.m");
    const double eps = get_double(p, "epsilon", "params");
    auto params = s.mc;
    params.threads = s.threads;
    const auto r = freqcond::aeps_measure(m, eps, params);
    std::ostringstream csv;
    csv << "d,m,epsilon,closed_form,estimate,lower,upper,half_width,samples,seed,series_cutoff,series_partial_sum,"
           "series_tail_bound\n";
    csv << m.size() << ',' << join(m) << ',' << format_double(eps) << ',' << format_double(r.closed_form) << ','
        << format_double(r.mc.value) << ',' << format_double(r.mc.lower) << ',' << format_double(r.mc.upper) << ','
        << format_double(r.mc.half_width) << ',' << r.mc.samples << ',' << r.mc.seed << ',';
    if (p.contains("cutoff")) {
        const auto series = freqcond::aeps_series(eps, static_cast<int>(m.size()),
                                                  static_cast<std::uint64_t>(get_int(p, "cutoff", "params")));
        csv << series.cutoff << ',' << format_double(series.partial_sum) << ','
            << (series.tail_bound ? format_double(*series.tail_bound) : "divergent");
    } else {
        csv << ",,";
    }
    csv << "\n";
    s.out.write("measure-zero.csv", csv.str());
}

void run_measure_probe(RunState& s) {
    const json& p = s.config.params;
    const auto& f = *s.config.potential;
    std::uint64_t task = 0;
    auto task_params = [&] {
        auto q = s.mc;
        q.threads = s.threads;
        q.seed = mc::derive_seed(s.mc.seed, task++);
        return q;
    };
    if (p.contains("shifts")) {
        std::ostringstream csv;
        csv << "y,epsilon,estimate,half_width,seed\n";
        const auto eps_list = double_list(p.at("epsilons"), "params.epsilons");
        for (const auto& sj : p.at("shifts")) {
            const auto y = double_list(sj, "params.shifts");
            for (const double eps : eps_list) {
                const auto e = potential::f_set_measure(f, y, eps, task_params());
                csv << join(y) << ',' << format_double(eps) << ',' << format_double(e.value) << ','
                    << format_double(e.half_width) << ',' << e.seed << "\n";
            }
        }
        s.out.write("measure-probe.csv", csv.str());
    }
    if (p.contains("levels")) {
        std::ostringstream csv;
        csv << "M,estimate,half_width,exact,seed\n";
        for (const double m : double_list(p.at("levels"), "params.levels")) {
            const auto e = potential::e_set_measure(f, m, task_params());
            csv << format_double(m) << ',' << format_double(e.estimate.value) << ','
                << format_double(e.estimate.half_width) << ',' << (e.exact ? format_double(*e.exact) : "") << ','
                << e.estimate.seed << "\n";
        }
        s.out.write("levels.csv", csv.str());
    }
    if (p.contains("kappa")) {
        const double eps = get_double(p.at("kappa"), "epsilon", "params.kappa");
        const double eta = get_double(p.at("kappa"), "eta", "params.kappa");
        const auto q = task_params();
        const double kappa = potential::estimate_kappa(f, eps, eta, q);
        std::ostringstream csv;
        csv << "epsilon,eta,kappa,seed\n"
            << format_double(eps) << ',' << format_double(eta) << ',' << format_double(kappa) << ',' << q.seed << "\n";
        s.out.write("kappa.csv", csv.str());
    }
}

void run_gordon(RunState& s) {
    const json& p = s.config.params;
    std::vector<gordon::GordonReport> reports;
    if (p.contains("rho")) {
        const auto tau = int_list(p.at("tau"), "params.tau");
        reports.push_back(gordon::gordon_check(get_double(p, "rho", "params"), get_double(p, "m", "params"),
                                               static_cast<int>(get_int(p, "d", "params")), tau,
                                               get_double(p, "gamma", "params"), get_double(p, "lambda0", "params")));
    } else {
        const auto& f = *s.config.potential;
        const freqcond::FrequencyVector alpha(s.config.frequencies);
        const auto x = phase_or_zero(p, static_cast<std::size_t>(f.dimension()));
        std::vector<std::vector<long long>> taus;
        if (p.contains("tau")) taus.push_back(int_list(p.at("tau"), "params.tau"));
        else
            for (const auto& t : p.at("taus")) taus.push_back(int_list(t, "params.taus"));
        gordon::OrbitOptions opts;
        if (p.contains("lambda0")) opts.lambda0 = get_double(p, "lambda0", "params");
        if (p.contains("max_sites")) opts.max_sites = static_cast<std::uint64_t>(get_int(p, "max_sites", "params"));
        opts.threads = s.threads;
        for (const auto& tau : taus)
            reports.push_back(gordon::gordon_check_orbit(f, x, alpha, tau, get_double(p, "gamma", "params"),
                                                         get_double(p, "delta", "params"), opts));
    }
    std::ostringstream csv, text;
    csv << "tau,tau_product,box_radius,rho_sign,rho_log,box_max,threshold_log,margin_log,pass,bounded_threshold_log,"
           "bounded_pass\n";
    json rows = json::array();
    for (const auto& r : reports) {
        csv << join(r.tau) << ',' << format_double(r.tau_product()) << ',' << r.radius << ',' << r.rho_log.sign << ','
            << format_double(r.rho_log.log_mag) << ',' << format_double(r.m_tau) << ','
            << format_double(r.threshold_log) << ',' << format_double(r.margin_log) << ','
            << (r.pass ? "true" : "false") << ','
            << (r.bounded_threshold_log ? format_double(*r.bounded_threshold_log) : "") << ','
            << (r.bounded_pass ? (*r.bounded_pass ? "true" : "false") : "") << "\n";
        text << r.to_text() << "\n";
        rows.push_back({{"tau", r.tau},
                        {"tau_product", r.tau_product()},
                        {"margin_log", number_or_string(r.margin_log)},
                        {"pass", r.pass}});
        if (!r.pass) s.status = kGordonFail;
    }
    s.out.write("gordon-check.csv", csv.str());
    s.out.write("gordon-report.txt", text.str());
    s.manifest_extra["gordon"] = rows;
}

lattice::BoxHamiltonian build_box(const RunState& s) {
    const json& p = s.config.params;
    const auto sides = int_list(p.at("sides"), "params.sides");
    const auto bc = lattice::boundary_from_string(p.value("boundary", std::string("dirichlet")));
    lattice::AssemblyOptions opts;
    opts.threads = s.threads;
    if (p.contains("disorder")) {
        const json& dj = p.at("disorder");
        std::size_t n = 1;
        for (const long long l : sides) n *= static_cast<std::size_t>(l);
        const std::uint64_t seed =
            dj.contains("seed") ? dj.at("seed").get<std::uint64_t>() : mc::derive_seed(s.mc.seed, 0);
        return lattice::BoxHamiltonian::from_diagonal(
            sides, bc, lattice::random_diagonal(n, get_double(dj, "half_width", "params.disorder"), seed), opts);
    }
    const auto& f = *s.config.potential;
    return lattice::BoxHamiltonian::assemble(f, phase_or_zero(p, sides.size()),
                                             freqcond::FrequencyVector(s.config.frequencies), sides, bc, opts);
}

void run_spectrum(RunState& s) {
    const json& p = s.config.params;
    const auto h = build_box(s);
    lattice::SpectrumOptions opts;
    opts.want_vectors = get_bool(p, "vectors", "params", false) || get_bool(p, "dump", "params", false);
    opts.dense_cap = static_cast<std::size_t>(get_int(p, "dense_cap", "params", 4096));
    const auto spec = lattice::spectrum(h, opts);
    std::ostringstream csv;
    csv << (opts.want_vectors ? "index,eigenvalue,ipr\n" : "index,eigenvalue\n");
    for (Eigen::Index k = 0; k < spec.values.size(); ++k) {
        csv << k << ',' << format_double(spec.values[k]);
        if (opts.want_vectors) csv << ',' << format_double(lattice::ipr(spec.vectors.col(k)));
        csv << "\n";
    }
    s.out.write("spectrum.csv", csv.str());
    if (get_bool(p, "dump", "params", false)) {
        lattice::write_eigenvectors((s.out.dir / "eigenvectors.bin").string(), spec);
        s.out.files.push_back("eigenvectors.bin");
    }
    s.manifest_extra["boundary"] = lattice::to_string(h.boundary());
    s.manifest_extra["norm_bound"] = h.norm_bound();
    if (spec.max_residual) s.manifest_extra["max_residual"] = *spec.max_residual;
}

void run_transport(RunState& s) {
    const json& p = s.config.params;
    const auto h = build_box(s);
    std::vector<long long> origin;
    if (p.contains("origin")) origin = int_list(p.at("origin"), "params.origin");
    else
        for (const long long l : h.sides()) origin.push_back(l / 2);
    const std::size_t o = h.index(origin);
    Eigen::VectorXcd u0 = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(h.size()));
    u0[static_cast<Eigen::Index>(o)] = 1.0;
    const auto times = double_list(p.at("times"), "params.times");
    lattice::EvolveOptions opts;
    opts.threads = s.threads;
    const auto r = lattice::evolve(h, u0, times, o, opts);
    std::ostringstream csv;
    csv << "t,norm,mean_abs_x,mean_x2\n";
    for (const auto& row : r.rows)
        csv << format_double(row.t) << ',' << format_double(row.norm) << ',' << format_double(row.mean_abs_x) << ','
            << format_double(row.mean_x2) << "\n";
    s.out.write("transport.csv", csv.str());
    if (r.warning) s.warnings.push_back(*r.warning);
    s.manifest_extra["boundary"] = lattice::to_string(h.boundary());
    s.manifest_extra["max_norm_drift"] = r.max_norm_drift;
    s.manifest_extra["chebyshev_order"] = r.chebyshev_order;
}

} // namespace

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

contfrac::Frequency parse_frequency(const json& j) {
    const std::string where = "frequencies";
    const auto rule = parse_rule(j, where);
    const std::string name = j.at("rule").get<std::string>();
    if (j.contains("depth")) {
        const long long depth = as_int(j.at("depth"), where + ".depth");
        if (depth < 2) fail(where + ".depth", "must be >= 2");
        return contfrac::Frequency(rule, static_cast<std::size_t>(depth));
    }
    return contfrac::Frequency(rule);
}

potential::PotentialSpec parse_potential(const json& j) {
    const std::string w = "potential";
    if (!j.is_object()) fail(w, "expected an object");
    const std::string family = require(j, "family", w).get<std::string>();
    const auto d = static_cast<int>(get_int(j, "d", w));
    try {
        if (family == "constant") {
            check_keys(j, {"family", "d", "value"}, w);
            return potential::PotentialSpec::constant(d, get_double(j, "value", w));
        }
        if (family == "trig_polynomial") {
            check_keys(j, {"family", "d", "constant", "terms"}, w);
            potential::TrigPolynomial poly{get_double(j, "constant", w, 0.0), {}};
            if (j.contains("terms")) {
                if (!j.at("terms").is_array()) fail(w + ".terms", "expected an array");
                for (const auto& t : j.at("terms")) {
                    check_keys(t, {"wave", "cos", "sin"}, w + ".terms");
                    std::vector<int> wave;
                    for (const long long k : int_list(require(t, "wave", w + ".terms"), w + ".terms.wave"))
                        wave.push_back(static_cast<int>(k));
                    poly.terms.push_back({wave, get_double(t, "cos", w + ".terms", 0.0),
                                          get_double(t, "sin", w + ".terms", 0.0)});
                }
            }
            return potential::PotentialSpec(d, poly);
        }
        if (family == "indicator_box") {
            check_keys(j, {"family", "d", "corner", "side", "height"}, w);
            json box = j;
            box.erase("family");
            box.erase("d");
            return potential::PotentialSpec(d, parse_box(box, w));
        }
        if (family == "step_sum") {
            check_keys(j, {"family", "d", "boxes"}, w);
            potential::StepSum sum;
            const json& boxes = require(j, "boxes", w);
            if (!boxes.is_array()) fail(w + ".boxes", "expected an array");
            for (const auto& b : boxes) sum.boxes.push_back(parse_box(b, w + ".boxes"));
            return potential::PotentialSpec(d, sum);
        }
        if (family == "inverse_power_singularity") {
            check_keys(j, {"family", "d", "center", "exponent", "ceiling"}, w);
            return potential::PotentialSpec(
                d, potential::InversePowerSingularity{double_list(require(j, "center", w), w + ".center"),
                                                      get_double(j, "exponent", w),
                                                      get_double(j, "ceiling", w, 1e12)});
        }
    } catch (const InvalidArgument& e) {
        fail(w, e.what());
    }
    fail(w, "unknown family '" + family + "'");
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j, {"experiment", "frequencies", "potential", "params", "mc", "output"}, "config");
    ExperimentConfig c;
    c.raw = j;
    const json& e = require(j, "experiment", "config");
    if (!e.is_string()) fail("experiment", "expected a string");
    c.experiment = e.get<std::string>();
    if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) == kExperiments.end())
        fail("experiment", "unknown experiment '" + c.experiment + "'");
    try {
        if (j.contains("frequencies")) {
            if (!j.at("frequencies").is_array()) fail("frequencies", "expected an array");
            for (const auto& f : j.at("frequencies")) c.frequencies.push_back(parse_frequency(f));
        }
    } catch (const InvalidArgument& ex) {
        fail("frequencies", ex.what());
    }
    if (j.contains("potential")) c.potential = parse_potential(j.at("potential"));
    if (j.contains("params")) {
        if (!j.at("params").is_object()) fail("params", "expected an object");
        c.params = j.at("params");
    }
    if (j.contains("mc")) c.mc = parse_mc(j.at("mc"));
    if (j.contains("output")) {
        if (!j.at("output").is_string()) fail("output", "expected a path string");
        c.output = j.at("output").get<std::string>();
    }
    validate_params(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed config " + path + ": " + e.what());
    }
    return parse_config(j);
}

int run(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    RunState s{config, config.mc, std::max(1u, options.threads), {}, json::object(), {}, kPass};
    if (options.seed) s.mc.seed = *options.seed;
    s.out.dir = options.out_dir.value_or(config.output);
    fs::create_directories(s.out.dir);

    const std::string& e = config.experiment;
    if (e == "freq-search") run_freq_search(s);
    else if (e == "interleave") run_interleave(s);
    else if (e == "measure-zero") run_measure_zero(s);
    else if (e == "measure-probe") run_measure_probe(s);
    else if (e == "gordon-check") run_gordon(s);
    else if (e == "spectrum") run_spectrum(s);
    else run_transport(s);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json echo = config.raw;
    echo["mc"]["seed"] = s.mc.seed;
    echo["output"] = s.out.dir.string();
    json manifest = {{"tool", "quasilab"},
                     {"version", kVersion},
                     {"experiment", e},
                     {"seed", s.mc.seed},
                     {"threads", s.threads},
                     {"config", echo},
                     {"outputs", s.out.files},
                     {"warnings", s.warnings},
                     {"wall_time_seconds", wall},
                     {"status", e == "gordon-check" ? (s.status == kPass ? "pass" : "fail") : "ok"}};
    for (const auto& [k, v] : s.manifest_extra.items()) manifest[k] = v;
    std::ofstream(s.out.dir / "manifest.json") << manifest.dump(2) << "\n";
    for (const auto& w : s.warnings) log << "warning: " << w << "\n";
    log << e << ": wrote";
    for (const auto& f : s.out.files) log << ' ' << (s.out.dir / f).string();
    log << " (" << (e == "gordon-check" ? (s.status == kPass ? "pass" : "fail") : "ok") << ")\n";
    return s.status;
}

std::vector<TrendRow> collect_trend(const std::vector<std::string>& manifests) {
    std::vector<TrendRow> rows;
    for (const auto& path : manifests) {
        std::ifstream is(path);
        if (!is) throw Error("missing manifest " + path);
        json m;
        try {
            m = json::parse(is);
        } catch (const json::parse_error& e) {
            throw Error("corrupt manifest " + path + ": " + e.what());
        }
        if (!m.contains("gordon") || !m.at("gordon").is_array())
            throw Error("manifest " + path + " carries no gordon rows");
        try {
            for (const auto& g : m.at("gordon")) {
                TrendRow r;
                r.manifest = path;
                r.tau = g.at("tau").get<std::vector<long long>>();
                r.tau_product = g.at("tau_product").get<double>();
                r.margin_log = read_number(g.at("margin_log"));
                r.pass = g.at("pass").get<bool>();
                rows.push_back(std::move(r));
            }
        } catch (const json::exception& e) {
            throw Error("corrupt manifest " + path + ": " + e.what());
        }
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const TrendRow& a, const TrendRow& b) { return a.tau_product < b.tau_product; });
    return rows;
}

std::string trend_csv(const std::vector<TrendRow>& rows) {
    std::ostringstream csv;
    csv << "tau_product,tau,margin_log,pass,manifest\n";
    for (const auto& r : rows)
        csv << format_double(r.tau_product) << ',' << join(r.tau) << ',' << format_double(r.margin_log) << ','
            << (r.pass ? "true" : "false") << ',' << r.manifest << "\n";
    return csv.str();
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"quasilab: Diophantine frequencies, Gordon checks and lattice probes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<std::string> manifests;

    std::vector<CLI::App*> experiments;
    for (const auto& name : kExperiments) {
        auto* sub = app.add_subcommand(name, "run a " + name + " experiment");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed, "master seed, overrides mc.seed");
        sub->add_option("--out", out_dir, "output directory, overrides output");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
        experiments.push_back(sub);
    }
    auto* report = app.add_subcommand("report", "aggregate gordon-check manifests into a trend table");
    report->add_option("manifests", manifests, "manifest.json files");
    report->add_option("--out", out_dir, "directory for report.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kPass : kFault;
    }

    try {
        if (report->parsed()) {
            const auto csv = trend_csv(collect_trend(manifests));
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                std::ofstream(fs::path(out_dir) / "report.csv") << csv;
            }
            out << csv;
            return kPass;
        }
        for (auto* sub : experiments) {
            if (!sub->parsed()) continue;
            auto config = load_config(config_path);
            if (config.experiment != sub->get_name())
                throw ConfigError("config names experiment '" + config.experiment + "' but subcommand is '" +
                                  sub->get_name() + "'");
            RunOptions options;
            if (sub->count("--seed")) options.seed = seed;
            if (sub->count("--out")) options.out_dir = out_dir;
            options.threads = threads;
            return run(config, options, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFault;
    }
    return kFault;
}

} // namespace quasilab::cli
