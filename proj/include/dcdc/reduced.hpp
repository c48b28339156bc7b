#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dcdc/converter.hpp"
#include "dcdc/waveform.hpp"

namespace dcdc {

/// Coefficients of the reduced closed-loop system in (y₁, y₂) = (ΣI_j, e):
/// the 2×2 dynamics matrix, the convolution-kernel parameters, the φ
/// transient coefficients and the forcing-assembly constants. Copies of the
/// physical inputs are kept for diagnostics.
struct ReducedCoeffs {
    double p11 = 0, p12 = 0, p21 = 0, p22 = 0; ///< [1/s]
    double a = 0, b = 0;                       ///< −1/T_d, −1/T_dd, both < 0
    double r_factor = 1;                       ///< 1 + R_C/R_load

    // kernel 𝒦(u) = c_i + c_a·e^{au} + c_b·e^{bu}
    double kernel_c_i = 0; ///< K_i
    double kernel_c_a = 0; ///< −K_d·a/T_d
    double kernel_c_b = 0; ///< K_dd·b²/T_dd

    // φ(t) = phi_c_ad·e^{at}·U_ad(0) + phi_c_dd·e^{bt}·U_dd(0)
    //      + phi_c_ea·e^{at}·e(0) + phi_c_eb·e^{bt}·e(0) + phi_c_de·e^{bt}·e'(0)
    double phi_c_ad = 1;
    double phi_c_dd = 1;
    double phi_c_ea = 0; ///< −K_d/T_d
    double phi_c_eb = 0; ///< K_dd·b/T_dd
    double phi_c_de = 0; ///< −K_dd/T_dd

    double kd_eff = 0; ///< K₁ = K_d − K_dd·b, the proportional-like weight
    double K2 = 0;     ///< K₂ = K_dd
    double U2 = 0;     ///< U_ref
    double U3 = 1;     ///< U_S

    // forcing assembly: F₁ = f1_alpha·Σα_j − f1_ref
    //                   F₂ = f2_f1·F₁ + f2_const  (constant reference)
    double f1_alpha = 0; ///< U_S/ℒ
    double f1_ref = 0;   ///< N_f·U_ref/ℒ
    double f2_f1 = 0;    ///< −R_C/r
    double f2_const = 0; ///< U_ref/(r·C·R_load)

    // inputs retained for reports and sweeps
    double R_L = 0, R_C = 0, C = 0, L = 0, R_load = 0, U_S = 0, U_ref = 0;
    int N_f = 1;
};

/// φ initial data: (U_ad(0), U_dd(0), e(0), de/dt(0)).
struct PhiInit {
    double U_ad0 = 0, U_dd0 = 0, e0 = 0, de0 = 0;
};

/// Reduced model state: the two dynamic variables plus the three linear
/// channels that realize ∫₀ᵗ 𝒦(t−τ)e(τ)dτ exactly as s_i + s_a + s_b.
struct ReducedState {
    double t = 0;
    double y1 = 0; ///< ΣI_j [A]
    double y2 = 0; ///< e [V]
    double s_i = 0, s_a = 0, s_b = 0;

    // cached
    double U_a = 0, D_0 = 0;
    double alpha = 0; ///< duty state; fraction of conducting phases in per-phase mode
};

/// Which comparator drives the reduced forcing: the single comparator of the
/// reduced system, or one comparator per phase with the full model's offsets.
enum class ReducedComparator { Single, PerPhase };

struct ReducedOptions {
    AlphaMode alpha_mode = AlphaMode::Pwm;
    ReducedComparator comparator = ReducedComparator::Single;
};

/// Fills every coefficient from the physical parameters and gains, using the
/// load resistance of `p` before its event.
ReducedCoeffs build_reduced(const ConverterParams& p, const ControllerGains& g);

/// The five-term decay transient of the PID filters.
double phi(double t, const ReducedCoeffs& coeffs, const PhiInit& init);

/// 𝒦(u) = K_i − (K_d/T_d)·a·e^{au} + (K_dd/T_dd)·b²·e^{bu}, u ≥ 0.
double kernel_eval(const ReducedCoeffs& coeffs, double u);

/// Integrates the 2-state dynamics plus the three kernel channels; U_a is
/// assembled from kd_eff·y₂ + K₂·dy₂/dt + (s_i+s_a+s_b) + φ(t), the duty
/// cycle from (U_ref + U_a)/U_S, and the comparator matches the full model's.
/// Channels: y1, y2, U_a, D0, alpha, phi.
Waveform simulate_reduced(const ReducedCoeffs& coeffs, const ConverterParams& p,
                          const ControllerGains& g, const ReducedState& init,
                          const PhiInit& phi_init, double horizon, double h,
                          const ReducedOptions& opts = {},
                          ReducedState* final_state = nullptr);

/// Initial reduced state and φ data matching a full-model state at t = 0
/// (the full state's integral channel must be zero, since the kernel channels
/// start empty).
std::pair<ReducedState, PhiInit> reduced_init_from_full(const ConverterParams& p,
                                                        const ControllerGains& g,
                                                        const ConverterState& full_init);

namespace detail {

/// Engine adapter for the reduced system. Holds pre- and post-load-event
/// coefficient sets and switches on the load mask bit.
class ReducedModel {
public:
    ReducedModel(const ReducedCoeffs& coeffs, const ConverterParams& p,
                 const ControllerGains& g, const PhiInit& phi_init,
                 const ReducedOptions& opts);

    int dim() const { return 5; }
    Eigen::VectorXd rhs(double t, const Eigen::VectorXd& x, std::uint64_t mask) const;
    std::uint64_t mask(double t, const Eigen::VectorXd& x) const;
    std::vector<double> event_times() const;
    std::string event_name(double t) const;
    /// y₂ = U_ref − U_O jumps with the algebraic output when R_load steps:
    /// y₂⁺ = U_ref − (r⁻/r⁺)(U_ref − y₂⁻).
    void apply_event(double t, Eigen::VectorXd& x) const;

    int comparator_count() const { return comparators_; }
    const ReducedCoeffs& coeffs_at(std::uint64_t mask) const;

    /// U_a, D₀ and the comparator outputs at (t, x). When K₂ ≠ 0 the dy₂ term
    /// inside U_a is resolved with a second pass over the comparator.
    struct Derived {
        double U_a, D_0, phi_t;
        double alpha_sum; ///< Σα over the active comparators
        std::uint64_t alpha_bits;
    };
    Derived derived(double t, const Eigen::VectorXd& x, bool load_active) const;

private:
    double forcing_f1(const ReducedCoeffs& c, double alpha_sum) const;

    ReducedCoeffs pre_, post_;
    ConverterParams params_;
    ControllerGains gains_;
    PhiInit phi_init_;
    ReducedOptions opts_;
    int comparators_;
};

} // namespace detail

} // namespace dcdc
