#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcdc/poly.hpp"

namespace dcdc {

/// Constant-coefficient polynomial matrix pencil ξ(λ) = Σ λ^i A_i.
/// The leading matrix A_k may be singular; that is the case this library is
/// built around. The order is structural: leading zero matrices are kept.
struct PolyMatrixPencil {
    int order = 0; ///< k ≥ 0
    int size = 1;  ///< n ≥ 1
    std::vector<Eigen::MatrixXd> coeffs; ///< A_0 .. A_k, each n×n

    static PolyMatrixPencil zero(int n, int k);

    const Eigen::MatrixXd& leading() const { return coeffs.back(); }

    /// Throws std::invalid_argument when the type invariants are violated.
    void validate() const;
};

/// Matrix whose entries are polynomials, stored as coefficient matrices
/// C_0 .. C_g with trailing zero matrices trimmed (g = 0 for a constant,
/// including the zero matrix).
struct MatrixPolynomial {
    int size = 1;
    std::vector<Eigen::MatrixXd> coeffs; ///< C_0 .. C_g

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    void trim();
};

/// Outcome of the pencil analysis: determinant degree, leading rank,
/// finite-dimensionality of the solution space and the index estimate.
struct PencilReport {
    std::optional<int> det_degree;       ///< empty ⇔ det ξ ≡ 0
    int leading_rank = 0;                ///< r = rank A_k
    bool finite_dim = false;             ///< det ξ ≢ 0
    std::optional<int> index_l;          ///< absent when infinite-dimensional
    std::vector<std::pair<int, int>> dj_sequence; ///< (j, d_j) pairs used
};

/// Exact determinant of ξ(λ) by cofactor expansion on polynomial entries.
/// Coefficients below rel_tol times the largest magnitude are truncated to
/// zero; the identically zero determinant comes back as the zero polynomial.
Poly det_polynomial(const PolyMatrixPencil& p, double rel_tol = 1e-12);

/// Numerical rank by row reduction with pivot threshold
/// rel_tol * (largest absolute entry). rel_tol must be > 0.
int rank_of(const Eigen::MatrixXd& m, double rel_tol = 1e-9);

/// Row compression: returns (P, r) with det P ≠ 0 and P·A having its bottom
/// n−r rows zero (up to the pivot threshold; callers zero them explicitly).
std::pair<Eigen::MatrixXd, int> row_compression(const Eigen::MatrixXd& a,
                                                double rel_tol = 1e-9);

/// Determinant degree, leading rank and the index estimate at j = 0:
/// l = (nk − d)/(n − r) rounded up when not a multiple.
PencilReport analyze(const PolyMatrixPencil& p, double rank_tol = 1e-9);

/// Adjugate (algebraic complement) matrix polynomial: adj(ξ)·ξ = det ξ · I.
MatrixPolynomial adjugate(const PolyMatrixPencil& p);

/// Closed-form solver for Σ A_i x^(i) = f when det ξ is a nonzero constant
/// a₀: x(t) = (1/a₀)·adj(ξ)[d/dt] f(t), with d/dt acting on the polynomial
/// entries of f. The result is substituted back and checked against f
/// (coefficient comparison, 1e-10 relative). Throws NotConstantDeterminant
/// when deg det ξ > 0 or det ξ ≡ 0.
std::vector<Poly> adjugate_solve(const PolyMatrixPencil& p,
                                 const std::vector<Poly>& f);

/// Applies Σ A_i (d/dt)^i to a vector of polynomials.
std::vector<Poly> apply_pencil(const PolyMatrixPencil& p,
                               const std::vector<Poly>& x);

/// Plain-text pencil format: first line "n k", then k+1 blocks of n rows of
/// n whitespace-separated reals, A_0 first.
PolyMatrixPencil read_pencil(std::istream& in);
void write_pencil(std::ostream& out, const PolyMatrixPencil& p);

/// Structured key-value rendering of a report.
std::string format_report(const PencilReport& rep);

} // namespace dcdc
