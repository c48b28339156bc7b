#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dcdc/converter.hpp"
#include "dcdc/stability.hpp"
#include "dcdc/waveform.hpp"

namespace dcdc {

enum class Objective { Itae, Ise, SettlingTime };

/// Per-constant box bounds for the six regulator constants.
struct GainBounds {
    ControllerGains lo;
    ControllerGains hi;

    void validate() const;
};

/// Derivative-free tuning of the six regulator constants against a waveform
/// objective, constrained to the stability region.
struct TuningProblem {
    ConverterParams params; ///< includes the load event of the scenario
    GainBounds bounds;
    Objective objective = Objective::Itae;
    double horizon = 0;
    double h = 0;
    double penalty = 1e9; ///< surrogate for +∞ on failure or instability

    void validate() const;
};

struct TuningResult {
    ControllerGains best;
    double objective_value = 0;
    int evaluations = 0;
    StabilityReport stability;
    std::vector<double> trace; ///< best-so-far objective per iteration
};

/// Error-signal objective over a simulated waveform, integrated from the load
/// event to the end: ITAE = ∫ (t−t_ev)·|e| dt, ISE = ∫ e² dt, settling time =
/// time after which |e| stays below 2% of U_ref.
double objective_on_error(Objective kind, const Waveform& wave, double t_event,
                          double U_ref);

/// Runs the full simulator on the scenario and scores it; returns the penalty
/// value instead of throwing when the state diverges or the stability
/// conditions are violated.
double evaluate_gains(const TuningProblem& problem, const ControllerGains& gains);

/// Nelder–Mead direct search in log-space of the six constants with random
/// restarts; deterministic under a fixed seed. Throws NoFeasiblePoint when no
/// stable gain set was found within the budget (budget ≥ 10).
TuningResult tune(const TuningProblem& problem, int budget, std::uint64_t seed);

/// Same search against a caller-supplied objective (used to validate the
/// optimizer against closed-form test functions).
TuningResult tune_with_objective(const TuningProblem& problem,
                                 const std::function<double(const ControllerGains&)>& fn,
                                 int budget, std::uint64_t seed);

} // namespace dcdc
