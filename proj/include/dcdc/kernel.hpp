#pragma once

#include <Eigen/Dense>

#include <vector>

namespace dcdc {

/// One term M · u^m · e^{μu} of an exponential-polynomial convolution kernel
/// (u = t − s).
struct KernelTerm {
    Eigen::MatrixXd coeff; ///< n×n
    int power = 0;         ///< m ≥ 0
    double rate = 0.0;     ///< μ
};

/// Matrix convolution kernel K(u) = Σ M_i · u^{m_i} · e^{μ_i u}. The class is
/// closed under differentiation in t, K(0) is always finite, and the term
/// list is kept canonical: terms with identical (m, μ) are merged and exact
/// zero matrices dropped.
class ExpPolyKernel {
public:
    ExpPolyKernel() = default;
    explicit ExpPolyKernel(int size) : size_(size) {}

    static ExpPolyKernel zero(int size) { return ExpPolyKernel(size); }

    int size() const { return size_; }
    bool empty() const { return terms_.empty(); }
    const std::vector<KernelTerm>& terms() const { return terms_; }

    void add_term(const Eigen::MatrixXd& coeff, int power, double rate);

    /// K(0): only the u^0 terms survive.
    Eigen::MatrixXd value_at_zero() const;

    Eigen::MatrixXd eval(double u) const;

    /// ∂K/∂t, term-wise: d/dt [M u^m e^{μu}] = mM u^{m-1} e^{μu} + μM u^m e^{μu}.
    ExpPolyKernel derivative() const;

    /// P·K(u)
    ExpPolyKernel left_multiplied(const Eigen::MatrixXd& p) const;

    /// Rows below `first_row` keep their terms; rows from `first_row` on are
    /// replaced by the corresponding rows of ∂K/∂t.
    ExpPolyKernel rows_differentiated(int first_row) const;

private:
    void canonicalize();

    int size_ = 0;
    std::vector<KernelTerm> terms_;
};

} // namespace dcdc
