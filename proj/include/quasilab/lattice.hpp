#pragma once

#include "quasilab/freqcond.hpp"
#include "quasilab/potential.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quasilab::lattice {

enum class Boundary { dirichlet, periodic };

std::string to_string(Boundary bc);
Boundary boundary_from_string(const std::string& name);

struct AssemblyOptions {
    std::size_t max_dimension = 4'000'000;
    unsigned threads = 1;
};

/// H u(n) = sum_{|m - n|_1 = 1} u(m) + V(n) u(n) on the box prod_i [0, L_i).
///
/// Sites are indexed row-major: the last coordinate varies fastest, so
/// index(n) = ((n_0 L_1 + n_1) L_2 + n_2) ... . Periodic boundaries need
/// every L_i >= 3 so that wrap-around hops stay distinct.
class BoxHamiltonian {
public:
    /// V(n) = f(x + n * alpha mod 1) with alpha from its deepest convergent.
    static BoxHamiltonian assemble(const potential::PotentialSpec& f, std::span<const double> x,
                                   const freqcond::FrequencyVector& alpha, std::span<const long long> sides,
                                   Boundary bc, const AssemblyOptions& options = {});

    /// Arbitrary site potentials, e.g. a seeded disorder realization.
    static BoxHamiltonian from_diagonal(std::span<const long long> sides, Boundary bc, std::vector<double> diagonal,
                                        const AssemblyOptions& options = {});

    int dimension() const { return static_cast<int>(sides_.size()); }
    const std::vector<long long>& sides() const { return sides_; }
    std::size_t size() const { return diagonal_.size(); }
    Boundary boundary() const { return bc_; }
    const std::vector<double>& diagonal() const { return diagonal_; }
    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

    /// ||f||_inf when the potential declares one, else max |V(n)| on the box.
    double potential_bound() const { return potential_bound_; }
    /// 2d + potential_bound(): bounds every eigenvalue in absolute value.
    double norm_bound() const { return 2.0 * dimension() + potential_bound_; }

    std::size_t index(std::span<const long long> site) const;
    std::vector<long long> site(std::size_t index) const;

private:
    BoxHamiltonian(std::vector<long long> sides, Boundary bc, std::vector<double> diagonal, double potential_bound,
                   const AssemblyOptions& options);

    std::vector<long long> sides_;
    Boundary bc_;
    std::vector<double> diagonal_;
    double potential_bound_;
    Eigen::SparseMatrix<double> matrix_;
};

struct SpectrumOptions {
    bool want_vectors = false;
    std::size_t dense_cap = 4096;
};

struct Spectrum {
    Eigen::VectorXd values; // ascending
    Eigen::MatrixXd vectors; // columns, orthonormal; empty unless requested
    /// max_k ||H v_k - lambda_k v_k||_2 when vectors were computed.
    std::optional<double> max_residual;
};

/// Dense symmetric eigensolve; one-dimensional Dirichlet boxes use the
/// tridiagonal solver directly. Throws CostGuardExceeded above dense_cap.
Spectrum spectrum(const BoxHamiltonian& h, const SpectrumOptions& options = {});

struct ExtremalEigenvalues {
    double lowest = 0.0;
    double highest = 0.0;
    std::size_t iterations = 0;
};

/// Lanczos with full reorthogonalization for boxes beyond the dense cap.
ExtremalEigenvalues extremal_eigenvalues(const BoxHamiltonian& h, std::size_t max_iterations = 300,
                                         std::uint64_t seed = 0);

/// Inverse participation ratio sum |v_n|^4 of a unit vector.
double ipr(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Little-endian dump: uint64 dimension, uint64 count, count eigenvalues,
/// then count vectors of `dimension` doubles each (vector k contiguous).
void write_eigenvectors(const std::string& path, const Spectrum& s);

struct TransportRow {
    double t = 0.0;
    double norm = 0.0;
    double mean_abs_x = 0.0; // <|X|>
    double mean_x2 = 0.0;    // <|X|^2>
};

struct Transport {
    std::vector<TransportRow> rows;
    double max_norm_drift = 0.0;
    std::size_t chebyshev_order = 0; // largest order used by a substep
    std::optional<std::string> warning;
};

struct EvolveOptions {
    double norm_tolerance = 1e-8;
    /// a * dt per substep, a = norm_bound().
    double max_substep_phase = 20.0;
    unsigned threads = 1;
};

/// e^{-itH} u0 at each time (ascending, >= 0) by Chebyshev expansion.
///
/// With a = norm_bound(), e^{-itH} = sum_k c_k (-i)^k J_k(a t) T_k(H / a),
/// c_0 = 1 and c_k = 2 otherwise. A substep of length dt stops at the first
/// order K > a dt with (e a dt / (2K))^K < 1e-16, which bounds the discarded
/// Bessel tail. Moments are taken about `origin` in lattice coordinates.
Transport evolve(const BoxHamiltonian& h, const Eigen::VectorXcd& u0, std::span<const double> times,
                 std::size_t origin, const EvolveOptions& options = {});

/// Seeded i.i.d. uniform values on [-half_width, half_width].
std::vector<double> random_diagonal(std::size_t n, double half_width, std::uint64_t seed);

} // namespace quasilab::lattice
