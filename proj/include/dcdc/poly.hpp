#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace dcdc {

/// Dense univariate polynomial with real coefficients, lowest order first.
/// One shared representation serves polynomials in the pencil variable and in
/// time; the canonical form has no trailing zero coefficients (the zero
/// polynomial is the empty list).
class Poly {
public:
    Poly() = default;
    Poly(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }
    explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Poly constant(double v) {
        Poly p;
        if (v != 0.0) p.c_ = {v};
        return p;
    }

    /// v * x^degree
    static Poly monomial(int degree, double v = 1.0) {
        Poly p;
        if (v != 0.0) {
            p.c_.assign(static_cast<std::size_t>(degree) + 1, 0.0);
            p.c_.back() = v;
        }
        return p;
    }

    bool is_zero() const { return c_.empty(); }

    /// Degree of the polynomial; -1 for the zero polynomial.
    int degree() const { return static_cast<int>(c_.size()) - 1; }

    /// Coefficient of x^i (0 beyond the stored range).
    double coeff(int i) const {
        return (i >= 0 && i < static_cast<int>(c_.size())) ? c_[static_cast<std::size_t>(i)] : 0.0;
    }

    const std::vector<double>& coeffs() const { return c_; }

    double max_abs_coeff() const {
        double m = 0.0;
        for (double v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    double eval(double x) const {
        double acc = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
        return acc;
    }

    Poly derivative() const {
        Poly d;
        if (c_.size() <= 1) return d;
        d.c_.resize(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i)
            d.c_[i - 1] = static_cast<double>(i) * c_[i];
        d.trim();
        return d;
    }

    /// n-th derivative.
    Poly derivative(int n) const {
        Poly d = *this;
        for (int i = 0; i < n; ++i) d = d.derivative();
        return d;
    }

    /// Zeroes every coefficient whose magnitude is below rel_tol times the
    /// largest magnitude, then re-trims.
    Poly truncated(double rel_tol) const {
        Poly p = *this;
        const double thresh = rel_tol * p.max_abs_coeff();
        for (double& v : p.c_)
            if (std::abs(v) < thresh) v = 0.0;
        p.trim();
        return p;
    }

    Poly operator-() const {
        Poly p = *this;
        for (double& v : p.c_) v = -v;
        return p;
    }

    Poly& operator+=(const Poly& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
        for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
        trim();
        return *this;
    }

    Poly& operator-=(const Poly& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
        for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
        trim();
        return *this;
    }

    Poly& operator*=(double s) {
        if (s == 0.0) {
            c_.clear();
        } else {
            for (double& v : c_) v *= s;
        }
        return *this;
    }

    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(Poly a, double s) { return a *= s; }
    friend Poly operator*(double s, Poly a) { return a *= s; }

    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly p;
        if (a.is_zero() || b.is_zero()) return p;
        p.c_.assign(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j)
                p.c_[i + j] += a.c_[i] * b.c_[j];
        p.trim();
        return p;
    }

    friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }

    std::string str(const std::string& var = "x") const;

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }

    std::vector<double> c_;
};

/// Coefficient-wise comparison relative to the larger of the two magnitudes.
inline bool approx_equal(const Poly& a, const Poly& b, double rel_tol,
                         double abs_floor = 0.0) {
    const double scale = std::max({a.max_abs_coeff(), b.max_abs_coeff(), abs_floor});
    const int deg = std::max(a.degree(), b.degree());
    for (int i = 0; i <= deg; ++i)
        if (std::abs(a.coeff(i) - b.coeff(i)) > rel_tol * scale) return false;
    return true;
}

inline std::string Poly::str(const std::string& var) const {
    if (is_zero()) return "0";
    std::string out;
    for (int i = 0; i <= degree(); ++i) {
        double v = coeff(i);
        if (v == 0.0) continue;
        if (!out.empty()) out += v < 0 ? " - " : " + ";
        else if (v < 0) out += "-";
        out += std::to_string(std::abs(v));
        if (i > 0) out += "*" + var + (i > 1 ? "^" + std::to_string(i) : "");
    }
    return out;
}

} // namespace dcdc
