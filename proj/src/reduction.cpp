#include "dcdc/reduction.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dcdc/errors.hpp"

namespace dcdc {

void IDEOperator::validate() const {
    pencil.validate();
    if (!kernel.empty() && kernel.size() != pencil.size)
        throw std::invalid_argument("kernel size does not match pencil size");
}

IDEOperator differentiate_operator(const IDEOperator& op) {
    op.validate();
    const int n = op.pencil.size;
    const int k = op.pencil.order;

    IDEOperator out;
    out.pencil.size = n;
    out.pencil.order = k + 1;
    out.pencil.coeffs.assign(static_cast<std::size_t>(k) + 2, Eigen::MatrixXd::Zero(n, n));
    for (int i = 0; i <= k; ++i) out.pencil.coeffs[static_cast<std::size_t>(i) + 1] = op.pencil.coeffs[static_cast<std::size_t>(i)];
    out.kernel = ExpPolyKernel::zero(n);
    if (!op.kernel.empty()) {
        out.pencil.coeffs[0] = op.kernel.value_at_zero();
        out.kernel = op.kernel.derivative();
    }
    return out;
}

std::pair<Eigen::MatrixXd, IDEOperator> omega0_step(const IDEOperator& op,
                                                    double rel_tol) {
    op.validate();
    const int n = op.pencil.size;
    const int k = op.pencil.order;

    auto [P, r] = row_compression(op.pencil.leading(), rel_tol);
    if (r == n) throw NotSingularLeading("leading matrix is nonsingular");

    // Apply P to every coefficient and to the kernel; the compressed bottom
    // rows of the leading matrix are zero by construction, so zero them
    // exactly before the shift.
    std::vector<Eigen::MatrixXd> b(static_cast<std::size_t>(k) + 1);
    for (int i = 0; i <= k; ++i) b[static_cast<std::size_t>(i)] = P * op.pencil.coeffs[static_cast<std::size_t>(i)];
    for (int row = r; row < n; ++row) b[static_cast<std::size_t>(k)].row(row).setZero();

    ExpPolyKernel kp = op.kernel.empty() ? ExpPolyKernel::zero(n)
                                         : op.kernel.left_multiplied(P);
    const Eigen::MatrixXd k0 = kp.empty() ? Eigen::MatrixXd::Zero(n, n)
                                          : kp.value_at_zero();

    // Top r rows unchanged; bottom rows differentiated: their order-i
    // coefficient moves to order i+1 (the vacated order-k slot was zero), and
    // K(0) lands at order 0.
    IDEOperator red;
    red.pencil.size = n;
    red.pencil.order = k;
    red.pencil.coeffs = b;
    for (int row = r; row < n; ++row) {
        for (int i = k; i >= 1; --i)
            red.pencil.coeffs[static_cast<std::size_t>(i)].row(row) = b[static_cast<std::size_t>(i) - 1].row(row);
        red.pencil.coeffs[0].row(row) = k0.row(row);
    }
    red.kernel = kp.empty() ? ExpPolyKernel::zero(n) : kp.rows_differentiated(r);
    return {P, red};
}

ReductionTrace reduce_to_nonsingular(const IDEOperator& op, int max_steps) {
    op.validate();
    const int n = op.pencil.size;
    const int k = op.pencil.order;
    if (max_steps < 0) max_steps = std::max(1, n * k + 1);
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");

    ReductionTrace trace;
    trace.final_op = op;
    IDEOperator cur = op;
    while (true) {
        if (rank_of(cur.pencil.leading()) == n) {
            trace.terminal_status = ReductionStatus::NonsingularLeading;
            break;
        }
        // With the kernel gone the operator is a pure pencil; det ξ ≡ 0 then
        // stays ≡ 0 under every further ω₀ step.
        if (cur.kernel.empty() && det_polynomial(cur.pencil).is_zero()) {
            trace.terminal_status = ReductionStatus::InfiniteDim;
            break;
        }
        if (trace.step_count() >= max_steps) {
            trace.terminal_status = ReductionStatus::StepLimit;
            break;
        }
        auto [P, red] = omega0_step(cur);
        trace.steps.push_back({P, red});
        cur = red;
        trace.final_op = cur;
    }
    return trace;
}

LroResult lro_exists(const IDEOperator& op, int j_max) {
    op.validate();
    if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
    const int k = op.pencil.order;

    IDEOperator cur = op;
    for (int j = 0; j <= j_max; ++j) {
        const PencilReport rep = analyze(cur.pencil);
        if (j == 0 && rep.finite_dim && rep.leading_rank == op.pencil.size)
            return {true, 0}; // nonsingular leading matrix: the identity is an LRO
        if (rep.finite_dim && rep.index_l && *rep.index_l >= j + k)
            return {true, j};
        if (j < j_max) cur = differentiate_operator(cur);
    }
    return {false, -1};
}

IDEOperator read_operator(std::istream& in) {
    IDEOperator op;
    op.pencil = read_pencil(in);
    const int n = op.pencil.size;
    op.kernel = ExpPolyKernel::zero(n);
    std::string tag;
    while (in >> tag) {
        if (tag != "KERNEL")
            throw std::runtime_error("operator file: expected KERNEL, got '" + tag + "'");
        int m = 0;
        double mu = 0.0;
        if (!(in >> m >> mu)) throw std::runtime_error("operator file: bad kernel term header");
        Eigen::MatrixXd coeff(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                if (!(in >> coeff(r, c)))
                    throw std::runtime_error("operator file: truncated kernel block");
        op.kernel.add_term(coeff, m, mu);
    }
    return op;
}

void write_operator(std::ostream& out, const IDEOperator& op) {
    write_pencil(out, op.pencil);
    for (const auto& t : op.kernel.terms()) {
        out << "KERNEL " << t.power << " " << t.rate << "\n";
        for (int r = 0; r < op.pencil.size; ++r) {
            for (int c = 0; c < op.pencil.size; ++c) {
                if (c) out << " ";
                out << t.coeff(r, c);
            }
            out << "\n";
        }
    }
}

std::string format_trace(const ReductionTrace& trace) {
    std::ostringstream os;
    switch (trace.terminal_status) {
        case ReductionStatus::NonsingularLeading: os << "status = NONSINGULAR_LEADING\n"; break;
        case ReductionStatus::InfiniteDim: os << "status = INFINITE_DIM\n"; break;
        case ReductionStatus::StepLimit: os << "status = STEP_LIMIT\n"; break;
    }
    os << "steps = " << trace.step_count() << "\n";
    for (int i = 0; i < trace.step_count(); ++i) {
        const auto& step = trace.steps[static_cast<std::size_t>(i)];
        os << "STEP " << i + 1 << "\n";
        os << "P\n" << step.P << "\n";
        os << "OPERATOR\n";
        std::ostringstream op_text;
        write_operator(op_text, step.result);
        os << op_text.str();
    }
    return os.str();
}

} // namespace dcdc
