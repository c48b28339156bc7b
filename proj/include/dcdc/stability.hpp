#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "dcdc/converter.hpp"
#include "dcdc/reduced.hpp"
#include "dcdc/waveform.hpp"

namespace dcdc {

/// Hurwitz analysis of λ² + c₁λ + c₂ for the reduced 2×2 system. The printed
/// first condition of the source material uses p₁₂ where the trace belongs;
/// both forms are computed and the corrected one drives the verdict.
struct StabilityReport {
    double c1 = 0; ///< −(p11 + p22), corrected trace coefficient
    double c2 = 0; ///< p11·p22 − p12·p21
    double trace = 0;
    double det = 0;

    bool condition_1 = false; ///< c1 > 0 (margin = c1)
    bool condition_2 = false; ///< c2 > 0 (margin = c2)
    double margin_1 = 0;
    double margin_2 = 0;

    double printed_c1 = 0; ///< p11 + p12, as printed
    bool printed_condition_1 = false;

    bool p21_sign_warning = false; ///< 1/(rC) < R_C·R_L/(rℒ)
    bool pid_condition = false;    ///< K_d − K_dd·b > 0

    std::complex<double> eig1, eig2; ///< roots of the characteristic polynomial

    bool stable() const { return condition_1 && condition_2; }
    double max_re_eig() const { return std::max(eig1.real(), eig2.real()); }
};

StabilityReport analyze_stability(const ReducedCoeffs& coeffs);

std::string format_stability_report(const StabilityReport& rep);

/// Boundedness probe for a waveform: κ is the largest sample norm over the
/// listed channels, and the trajectory counts as bounded when the running max
/// grows by less than 1% over the final tail fraction of the horizon.
struct BoundednessResult {
    bool bounded = false;
    double kappa = 0;
};
BoundednessResult boundedness_check(const Waveform& wave,
                                    const std::vector<std::string>& channels,
                                    double horizon_tail_fraction = 0.25);

/// One axis of a stability sweep over a named real field of ConverterParams
/// or ControllerGains.
struct SweepAxis {
    std::string name;
    double lo = 0, hi = 0;
    int count = 1;
    bool log_scale = false;

    std::vector<double> values() const;
};

struct SweepPoint {
    double v1 = 0, v2 = 0;
    StabilityReport report;
};

/// Evaluates build_reduced + analyze_stability on a 1-D or 2-D grid. Throws
/// UnknownAxis for a bad field name. jobs > 1 evaluates grid points on a
/// worker pool; results keep deterministic grid order.
std::vector<SweepPoint> sweep(const ConverterParams& base_params,
                              const ControllerGains& base_gains,
                              const std::vector<SweepAxis>& axes, int jobs = 1);

/// CSV grid "axis1,axis2,c1,c2,cond1,cond2,p21_warning,pid_cond,max_re_eig";
/// the axis2 column is empty for 1-D sweeps.
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points,
                     bool has_axis2);

/// Names accepted as sweep axes.
const std::vector<std::string>& sweepable_fields();

} // namespace dcdc
