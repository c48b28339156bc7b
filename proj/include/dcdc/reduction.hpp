#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dcdc/kernel.hpp"
#include "dcdc/pencil.hpp"

namespace dcdc {

/// Constant-coefficient integro-differential operator
///   (op v)(t) = Σ A_i v^(i)(t) + ∫₀ᵗ K(t−s) v(s) ds
/// with an exponential-polynomial convolution kernel (possibly empty).
struct IDEOperator {
    PolyMatrixPencil pencil;
    ExpPolyKernel kernel;

    void validate() const;
};

enum class ReductionStatus { NonsingularLeading, InfiniteDim, StepLimit };

struct ReductionStep {
    Eigen::MatrixXd P;  ///< the row compression used by this ω₀ step
    IDEOperator result; ///< operator after the step
};

struct ReductionTrace {
    std::vector<ReductionStep> steps;
    ReductionStatus terminal_status = ReductionStatus::StepLimit;
    IDEOperator final_op; ///< the original operator when no step was taken

    bool succeeded() const { return terminal_status == ReductionStatus::NonsingularLeading; }
    int step_count() const { return static_cast<int>(steps.size()); }
};

struct LroResult {
    bool exists = false;
    int witness_j = -1; ///< first j at which the criterion held; -1 when none
};

/// (d/dt) ∘ op: pencil order k+1 with shifted coefficients, the new order-0
/// coefficient absorbed from K(0), kernel replaced by its t-derivative.
IDEOperator differentiate_operator(const IDEOperator& op);

/// One ω₀ = (P₁ ; (d/dt)P₂) step: a nonsingular row compression P puts the
/// leading matrix into (full-rank block ; zero block) form, the top r rows
/// stay, the bottom n−r rows are differentiated with their K(0) contribution
/// absorbed at order 0. Requires a singular leading matrix.
std::pair<Eigen::MatrixXd, IDEOperator> omega0_step(const IDEOperator& op,
                                                    double rel_tol = 1e-9);

/// Iterates omega0_step until the leading matrix is nonsingular, the operator
/// is detected infinite-dimensional (kernel gone and det ξ ≡ 0), or max_steps
/// is exhausted. max_steps < 0 selects the default n·k + 1 (at least 1).
/// On success the step count equals the operator's index.
ReductionTrace reduce_to_nonsingular(const IDEOperator& op, int max_steps = -1);

/// Existence test for a left regularizing operator: sweeps j = 0..j_max,
/// forms (d/dt)^j ∘ op, analyzes its pencil and reports the first j whose
/// pencil is finite-dimensional with index estimate l_j ≥ j + k. An operator
/// whose leading matrix is already nonsingular is trivially regularizable
/// (the identity is an LRO) and reports j = 0.
LroResult lro_exists(const IDEOperator& op, int j_max);

/// Operator text format: the pencil format followed by zero or more kernel
/// terms, each "KERNEL m mu" plus an n×n coefficient block.
IDEOperator read_operator(std::istream& in);
void write_operator(std::ostream& out, const IDEOperator& op);

std::string format_trace(const ReductionTrace& trace);

} // namespace dcdc
