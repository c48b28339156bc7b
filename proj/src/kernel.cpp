#include "dcdc/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace dcdc {

void ExpPolyKernel::add_term(const Eigen::MatrixXd& coeff, int power, double rate) {
    if (size_ == 0) size_ = static_cast<int>(coeff.rows());
    if (coeff.rows() != size_ || coeff.cols() != size_)
        throw std::invalid_argument("kernel term has wrong shape");
    if (power < 0) throw std::invalid_argument("kernel term power must be >= 0");
    terms_.push_back({coeff, power, rate});
    canonicalize();
}

void ExpPolyKernel::canonicalize() {
    std::vector<KernelTerm> merged;
    for (const auto& t : terms_) {
        bool found = false;
        for (auto& m : merged)
            if (m.power == t.power && m.rate == t.rate) {
                m.coeff += t.coeff;
                found = true;
                break;
            }
        if (!found) merged.push_back(t);
    }
    terms_.clear();
    for (auto& m : merged)
        if (m.coeff.cwiseAbs().maxCoeff() != 0.0) terms_.push_back(std::move(m));
}

Eigen::MatrixXd ExpPolyKernel::value_at_zero() const {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(size_, size_);
    for (const auto& t : terms_)
        if (t.power == 0) v += t.coeff;
    return v;
}

Eigen::MatrixXd ExpPolyKernel::eval(double u) const {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(size_, size_);
    for (const auto& t : terms_)
        v += t.coeff * (std::pow(u, t.power) * std::exp(t.rate * u));
    return v;
}

ExpPolyKernel ExpPolyKernel::derivative() const {
    ExpPolyKernel d(size_);
    for (const auto& t : terms_) {
        if (t.power > 0) d.terms_.push_back({t.coeff * t.power, t.power - 1, t.rate});
        if (t.rate != 0.0) d.terms_.push_back({t.coeff * t.rate, t.power, t.rate});
    }
    d.canonicalize();
    return d;
}

ExpPolyKernel ExpPolyKernel::left_multiplied(const Eigen::MatrixXd& p) const {
    ExpPolyKernel out(size_);
    for (const auto& t : terms_) out.terms_.push_back({p * t.coeff, t.power, t.rate});
    out.canonicalize();
    return out;
}

ExpPolyKernel ExpPolyKernel::rows_differentiated(int first_row) const {
    ExpPolyKernel out(size_);
    for (const auto& t : terms_) {
        Eigen::MatrixXd top = t.coeff;
        Eigen::MatrixXd bottom = Eigen::MatrixXd::Zero(size_, size_);
        for (int r = first_row; r < size_; ++r) {
            bottom.row(r) = t.coeff.row(r);
            top.row(r).setZero();
        }
        out.terms_.push_back({top, t.power, t.rate});
        if (t.power > 0) out.terms_.push_back({bottom * t.power, t.power - 1, t.rate});
        if (t.rate != 0.0) out.terms_.push_back({bottom * t.rate, t.power, t.rate});
    }
    out.canonicalize();
    return out;
}

} // namespace dcdc
