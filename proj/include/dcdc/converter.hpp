#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dcdc/waveform.hpp"

namespace dcdc {

/// Abrupt multiplicative load change: R_load ← factor · R_load at t_step.
/// A negative t_step disables the event.
struct LoadEvent {
    double t_step = -1.0;
    double factor = 0.1;

    bool enabled() const { return t_step >= 0.0; }
    bool active(double t) const { return enabled() && t >= t_step; }
};

/// Physical circuit parameters. Inductances are identical across phases;
/// phase j starts its control cycle at offset j·T/N_f.
struct ConverterParams {
    double R_L = 0.01;        ///< phase series resistance [ohm]
    double R_C = 0.002;       ///< capacitor ESR [ohm]
    double C = 200e-6;        ///< output capacitance [F]
    double L = 10e-6;         ///< per-phase inductance [H]
    int N_f = 4;              ///< phase count
    double U_S = 12.0;        ///< source voltage [V]
    double U_ref = 5.0;       ///< reference output voltage [V]
    double R_load_initial = 1.0; ///< load resistance before the event [ohm]
    double T = 10e-6;         ///< control cycle period [s]
    LoadEvent load_event;

    void validate() const;

    double phase_offset(int j) const { return T * j / N_f; } ///< j in [0, N_f)
    double load_at(double t) const {
        return load_event.active(t) ? R_load_initial * load_event.factor : R_load_initial;
    }
};

/// The six regulator constants. a = −1/T_d and b = −1/T_dd.
struct ControllerGains {
    double K_p = 0.0;
    double K_d = 0.0;
    double K_i = 0.0;
    double K_dd = 0.0;
    double T_d = 1e-6;
    double T_dd = 1e-6;

    void validate() const;
    double a() const { return -1.0 / T_d; }
    double b() const { return -1.0 / T_dd; }
    /// K_d − K_dd·b > 0
    bool pid_positivity() const { return K_d - K_dd * b() > 0.0; }
};

/// Comparator handling for a run: normal PWM or frozen conducting switches.
enum class AlphaMode { Pwm, Frozen };

/// Full model state: differential states plus cached derived outputs. The
/// derived fields always satisfy the algebraic output equation, the error
/// definition, and the comparator.
struct ConverterState {
    double t = 0.0;
    Eigen::VectorXd I;   ///< phase currents, length N_f
    double U_C = 0.0;
    double U_ad = 0.0;
    double U_dd = 0.0;
    double U_ai = 0.0;

    // derived
    double U_O = 0.0;
    double e = 0.0;
    double de_dt = 0.0;
    double d2e_dt2 = 0.0;
    double U_a = 0.0;
    double D_0 = 0.0;
    std::vector<int> alpha;
    double R_load_current = 0.0;
};

/// Unique solution of the algebraic output equation:
/// U_O = (U_C + R_C·ΣI) / (1 + R_C/R_load).
double algebraic_output(double U_C, double I_sum, double R_load, double R_C);

/// Comparator: 1 when (t − Δt_j) mod T ≤ D_0·T (nonnegative remainder),
/// else 0.
int pwm_alpha(double t, double dt_j, double T, double D_0);

/// Time derivative of the differential state vector
/// (I_1..I_Nf, U_C, U_ad, U_ai, U_dd), with de/dt and d²e/dt² produced
/// analytically through the algebraic-output chain.
Eigen::VectorXd derivatives(const ConverterState& s, const ConverterParams& p,
                            const ControllerGains& g);

/// One step of size h with derived-field refresh; comparator and load changes
/// inside (t, t+h) are localized and the step is split there.
ConverterState step(const ConverterState& s, double h, const ConverterParams& p,
                    const ControllerGains& g, AlphaMode mode = AlphaMode::Pwm);

/// Default initial state: everything zero except U_C = U_ref, derived fields
/// refreshed.
ConverterState make_initial_state(const ConverterParams& p, const ControllerGains& g,
                                  AlphaMode mode = AlphaMode::Pwm);

/// Recomputes every derived field of `s` from its differential states.
void refresh_derived(ConverterState& s, const ConverterParams& p,
                     const ControllerGains& g, AlphaMode mode = AlphaMode::Pwm);

/// Fixed-step simulation over [init.t, init.t + horizon], sampled every step,
/// with event markers for comparator switches and the load step. Channel set:
/// U_O, U_C, e, D0, U_a, U_ad, U_ai, U_dd, I_1.., alpha_1.., R_load.
/// Requires h ≤ T/200.
Waveform simulate(const ConverterParams& p, const ControllerGains& g,
                  const ConverterState& init, double horizon, double h,
                  AlphaMode mode = AlphaMode::Pwm,
                  ConverterState* final_state = nullptr);

namespace detail {

/// Model adapter used by the step engine; exposed for the reduced model's
/// cross-checks and for tests.
class FullModel {
public:
    FullModel(const ConverterParams& p, const ControllerGains& g, AlphaMode mode);

    int dim() const { return params_.N_f + 4; }
    Eigen::VectorXd rhs(double t, const Eigen::VectorXd& x, std::uint64_t mask) const;
    std::uint64_t mask(double t, const Eigen::VectorXd& x) const;
    std::vector<double> event_times() const;
    std::string event_name(double t) const;
    void apply_event(double t, Eigen::VectorXd& x) const; ///< no state jump

    Eigen::VectorXd pack(const ConverterState& s) const;
    void unpack(double t, const Eigen::VectorXd& x, ConverterState& s) const;

    /// Derived quantities at (t, x) under a frozen mask.
    struct Derived {
        double I_sum, U_O, e, de, d2e, U_a, D_0, R_load;
        double dU_C;
    };
    Derived derived(double t, const Eigen::VectorXd& x, std::uint64_t mask,
                    Eigen::VectorXd* deriv = nullptr) const;

private:
    ConverterParams params_;
    ControllerGains gains_;
    AlphaMode mode_;
};

} // namespace detail

} // namespace dcdc
