#include "quasilab/lattice.hpp"
#include "quasilab/errors.hpp"
#include "quasilab/montecarlo.hpp"
#include "quasilab/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace quasilab::lattice {

namespace {

using Complex = std::complex<double>;

std::size_t checked_volume(std::span<const long long> sides, std::size_t cap) {
    if (sides.empty()) throw InvalidArgument("box needs at least one side length");
    double volume = 1;
    for (const long long l : sides) {
        if (l < 1) throw InvalidArgument("side lengths must be >= 1");
        volume *= static_cast<double>(l);
    }
    if (volume > static_cast<double>(cap))
        throw CostGuardExceeded("box dimension " + std::to_string(volume) + " exceeds the cap of " +
                                std::to_string(cap));
    return static_cast<std::size_t>(volume);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<std::uint64_t>(x)); }

} // namespace

std::string to_string(Boundary bc) { return bc == Boundary::dirichlet ? "dirichlet" : "periodic"; }

Boundary boundary_from_string(const std::string& name) {
    if (name == "dirichlet") return Boundary::dirichlet;
    if (name == "periodic") return Boundary::periodic;
    throw InvalidArgument("unknown boundary condition '" + name + "' (expected dirichlet or periodic)");
}

BoxHamiltonian::BoxHamiltonian(std::vector<long long> sides, Boundary bc, std::vector<double> diagonal,
                               double potential_bound, const AssemblyOptions& options)
    : sides_(std::move(sides)), bc_(bc), diagonal_(std::move(diagonal)), potential_bound_(potential_bound) {
    const std::size_t n = checked_volume(sides_, options.max_dimension);
    if (diagonal_.size() != n) throw InvalidArgument("diagonal length does not match the box");
    if (bc_ == Boundary::periodic)
        for (const long long l : sides_)
            if (l < 3) throw InvalidArgument("periodic boundaries need every side length >= 3");

    const int d = dimension();
    std::vector<std::size_t> stride(d, 1);
    for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * static_cast<std::size_t>(sides_[i + 1]);

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(n * (2 * d + 1));
    for (std::size_t s = 0; s < n; ++s) {
        const auto r = static_cast<int>(s);
        entries.emplace_back(r, r, diagonal_[s]);
        for (int i = 0; i < d; ++i) {
            const auto l = static_cast<std::size_t>(sides_[i]);
            const std::size_t coord = (s / stride[i]) % l;
            std::size_t t;
            if (coord + 1 < l) t = s + stride[i];
            else if (bc_ == Boundary::periodic) t = s - coord * stride[i];
            else continue;
            entries.emplace_back(r, static_cast<int>(t), 1.0);
            entries.emplace_back(static_cast<int>(t), r, 1.0);
        }
    }
    matrix_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    matrix_.setFromTriplets(entries.begin(), entries.end());
    matrix_.makeCompressed();
}

BoxHamiltonian BoxHamiltonian::assemble(const potential::PotentialSpec& f, std::span<const double> x,
                                        const freqcond::FrequencyVector& alpha, std::span<const long long> sides,
                                        Boundary bc, const AssemblyOptions& options) {
    const auto d = static_cast<std::size_t>(f.dimension());
    if (sides.size() != d || x.size() != d || alpha.dimension() != d)
        throw InvalidArgument("sides, phase and frequency must match the potential dimension");
    const std::size_t n = checked_volume(sides, options.max_dimension);

    std::vector<double> a(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double error = static_cast<double>(sides[i]) * to_double(alpha[i].truncation_error_bound());
        if (!(error < 1e-12))
            throw InsufficientPrecision("phase error " + std::to_string(error) + " >= 1e-12 for side " +
                                        std::to_string(sides[i]) + "; materialize " + alpha[i].name() +
                                        " deeper");
        a[i] = alpha[i].to_double();
    }

    std::vector<std::size_t> stride(d, 1);
    for (std::size_t i = d - 1; i-- > 0;) stride[i] = stride[i + 1] * static_cast<std::size_t>(sides[i + 1]);

    std::vector<double> diagonal(n);
    constexpr std::size_t kChunk = 4096;
    parallel_for((n + kChunk - 1) / kChunk, options.threads, [&](std::size_t c) {
        std::vector<double> point(d);
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t s = c * kChunk; s < end; ++s) {
            for (std::size_t i = 0; i < d; ++i) {
                const auto coord = static_cast<long double>((s / stride[i]) % static_cast<std::size_t>(sides[i]));
                long double t = x[i] + coord * a[i];
                t -= std::floor(t);
                point[i] = static_cast<double>(t);
            }
            diagonal[s] = f.eval(point);
        }
    });

    double bound = 0;
    if (f.bounded()) bound = *f.declared_sup();
    else
        for (const double v : diagonal) bound = std::max(bound, std::abs(v));
    return BoxHamiltonian(std::vector<long long>(sides.begin(), sides.end()), bc, std::move(diagonal), bound,
                          options);
}

BoxHamiltonian BoxHamiltonian::from_diagonal(std::span<const long long> sides, Boundary bc,
                                             std::vector<double> diagonal, const AssemblyOptions& options) {
    double bound = 0;
    for (const double v : diagonal) {
        if (!std::isfinite(v)) throw InvalidArgument("diagonal entries must be finite");
        bound = std::max(bound, std::abs(v));
    }
    return BoxHamiltonian(std::vector<long long>(sides.begin(), sides.end()), bc, std::move(diagonal), bound,
                          options);
}

std::size_t BoxHamiltonian::index(std::span<const long long> site) const {
    if (site.size() != sides_.size()) throw InvalidArgument("site dimension does not match the box");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < sides_.size(); ++i) {
        if (site[i] < 0 || site[i] >= sides_[i]) throw InvalidArgument("site outside the box");
        idx = idx * static_cast<std::size_t>(sides_[i]) + static_cast<std::size_t>(site[i]);
    }
    return idx;
}

std::vector<long long> BoxHamiltonian::site(std::size_t index) const {
    if (index >= size()) throw InvalidArgument("site index outside the box");
    std::vector<long long> out(sides_.size());
    for (std::size_t i = sides_.size(); i-- > 0;) {
        out[i] = static_cast<long long>(index % static_cast<std::size_t>(sides_[i]));
        index /= static_cast<std::size_t>(sides_[i]);
    }
    return out;
}

Spectrum spectrum(const BoxHamiltonian& h, const SpectrumOptions& options) {
    const std::size_t n = h.size();
    if (n > options.dense_cap)
        throw CostGuardExceeded("dimension " + std::to_string(n) + " exceeds the dense cap of " +
                                std::to_string(options.dense_cap) +
                                "; use extremal_eigenvalues (iterative mode, extremal eigenvalues only)");
    const int mode = options.want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    if (h.dimension() == 1 && h.boundary() == Boundary::dirichlet) {
        const Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(h.diagonal().data(), n);
        const Eigen::VectorXd sub = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n) - 1);
        solver.computeFromTridiagonal(diag, sub, mode);
    } else {
        solver.compute(Eigen::MatrixXd(h.matrix()), mode);
    }
    if (solver.info() != Eigen::Success) throw Error("eigensolver did not converge");

    Spectrum out;
    out.values = solver.eigenvalues();
    if (options.want_vectors) {
        out.vectors = solver.eigenvectors();
        const Eigen::MatrixXd r = h.matrix() * out.vectors - out.vectors * out.values.asDiagonal();
        out.max_residual = r.colwise().norm().maxCoeff();
    }
    return out;
}

ExtremalEigenvalues extremal_eigenvalues(const BoxHamiltonian& h, std::size_t max_iterations, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(h.size());
    const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(max_iterations, h.size()));
    if (m < 1) throw InvalidArgument("max_iterations must be positive");
    Eigen::MatrixXd basis(n, m);
    std::vector<double> alpha, beta;
    mc::UniformStream rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.next() - 0.5;
    v.normalize();
    Eigen::Index k = 0;
    for (; k < m; ++k) {
        basis.col(k) = v;
        Eigen::VectorXd w = h.matrix() * v;
        alpha.push_back(v.dot(w));
        for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
        const double b = w.norm();
        if (k + 1 == m || b < 1e-12) {
            ++k;
            break;
        }
        beta.push_back(b);
        v = w / b;
    }
    const Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), k);
    const Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(beta.data(), k - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    return {solver.eigenvalues()[0], solver.eigenvalues()[k - 1], static_cast<std::size_t>(k)};
}

double ipr(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double norm = v.norm();
    if (!(std::abs(norm - 1) <= 1e-8))
        throw InvalidArgument("ipr needs a unit vector, got norm " + std::to_string(norm));
    return v.array().square().square().sum();
}

void write_eigenvectors(const std::string& path, const Spectrum& s) {
    if (s.vectors.size() == 0) throw InvalidArgument("spectrum carries no eigenvectors");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    const auto dim = static_cast<std::uint64_t>(s.vectors.rows());
    const auto count = static_cast<std::uint64_t>(s.vectors.cols());
    put_u64(os, dim);
    put_u64(os, count);
    for (Eigen::Index k = 0; k < s.values.size(); ++k) put_f64(os, s.values[k]);
    for (Eigen::Index k = 0; k < s.vectors.cols(); ++k)
        for (Eigen::Index i = 0; i < s.vectors.rows(); ++i) put_f64(os, s.vectors(i, k));
    if (!os) throw Error("write to " + path + " failed");
}

Transport evolve(const BoxHamiltonian& h, const Eigen::VectorXcd& u0, std::span<const double> times,
                 std::size_t origin, const EvolveOptions& options) {
    const std::size_t n = h.size();
    if (static_cast<std::size_t>(u0.size()) != n) throw InvalidArgument("initial state size does not match the box");
    if (origin >= n) throw InvalidArgument("origin outside the box");
    if (!(std::abs(u0.norm() - 1) <= options.norm_tolerance)) throw InvalidArgument("initial state must be a unit vector");
    for (std::size_t i = 0; i < times.size(); ++i)
        if (!(times[i] >= 0) || (i > 0 && times[i] < times[i - 1]))
            throw InvalidArgument("times must be ascending and nonnegative");

    const int d = h.dimension();
    const double a = h.norm_bound();
    const Eigen::SparseMatrix<Complex> scaled = (h.matrix() / a).cast<Complex>();
    const auto o = h.site(origin);

    Transport out;
    const double t_max = times.empty() ? 0.0 : times.back();
    long long room = std::numeric_limits<long long>::max();
    for (int i = 0; i < d; ++i) room = std::min({room, o[i], h.sides()[i] - 1 - o[i]});
    if (static_cast<double>(room) < 2.0 * d * t_max + 10)
        out.warning = "boundary contamination possible: origin is " + std::to_string(room) +
                      " sites from the boundary, wavefront may travel " + std::to_string(2.0 * d * t_max);

    // squared and plain distances from the origin, minimal image on periodic axes
    std::vector<double> r2(n);
    for (std::size_t s = 0; s < n; ++s) {
        const auto c = h.site(s);
        double acc = 0;
        for (int i = 0; i < d; ++i) {
            long long dx = std::llabs(c[i] - o[i]);
            if (h.boundary() == Boundary::periodic) dx = std::min(dx, h.sides()[i] - dx);
            acc += static_cast<double>(dx * dx);
        }
        r2[s] = acc;
    }

    auto step = [&](Eigen::VectorXcd& u, double dt) {
        const double z = a * dt;
        std::size_t order = static_cast<std::size_t>(std::ceil(z)) + 1;
        while (order * std::log(std::numbers::e * z / (2.0 * order)) >= std::log(1e-16)) ++order;
        out.chebyshev_order = std::max(out.chebyshev_order, order);
        Eigen::VectorXcd t_prev = u;
        Eigen::VectorXcd t_cur = scaled * u;
        Eigen::VectorXcd result = std::cyl_bessel_j(0.0, z) * t_prev + 2.0 * Complex(0, -1) * std::cyl_bessel_j(1.0, z) * t_cur;
        Complex phase(0, -1);
        for (std::size_t k = 2; k <= order; ++k) {
            Eigen::VectorXcd t_next = 2.0 * (scaled * t_cur) - t_prev;
            phase *= Complex(0, -1);
            result += 2.0 * phase * std::cyl_bessel_j(static_cast<double>(k), z) * t_next;
            t_prev.swap(t_cur);
            t_cur.swap(t_next);
        }
        u.swap(result);
    };

    Eigen::VectorXcd u = u0;
    double now = 0;
    for (const double t : times) {
        const double span_t = t - now;
        if (span_t > 0) {
            const auto substeps = static_cast<std::size_t>(std::ceil(a * span_t / options.max_substep_phase));
            const double dt = span_t / static_cast<double>(substeps);
            for (std::size_t s = 0; s < substeps; ++s) step(u, dt);
            now = t;
        }
        TransportRow row;
        row.t = t;
        row.norm = u.norm();
        const double drift = std::abs(row.norm - 1);
        out.max_norm_drift = std::max(out.max_norm_drift, drift);
        if (drift > options.norm_tolerance)
            throw ToleranceTooCoarse("norm drift " + std::to_string(drift) + " above " +
                                     std::to_string(options.norm_tolerance) + " at t = " + std::to_string(t) +
                                     " (Chebyshev order " + std::to_string(out.chebyshev_order) + ")");
        for (std::size_t s = 0; s < n; ++s) {
            const double p = std::norm(u[static_cast<Eigen::Index>(s)]);
            row.mean_abs_x += p * std::sqrt(r2[s]);
            row.mean_x2 += p * r2[s];
        }
        out.rows.push_back(row);
    }
    return out;
}

std::vector<double> random_diagonal(std::size_t n, double half_width, std::uint64_t seed) {
    if (!(half_width >= 0)) throw InvalidArgument("half_width must be >= 0");
    mc::UniformStream rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = half_width * (2 * rng.next() - 1);
    return out;
}

} // namespace quasilab::lattice
