#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dcdc/config.hpp"
#include "dcdc/waveform.hpp"

namespace dcdc {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Resolved command-line invocation: one mode, a config file as the source of
/// truth, and overrides applied on top.
struct RunConfig {
    std::string mode; ///< simulate | compare | analyze-pencil | reduce-operator |
                      ///< stability | sweep | tune
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides; ///< repeated key=value
    int jobs = 1;
    std::uint64_t seed = 0;
};

/// Cross-model comparison on one scenario: the full model's U_O against
/// U_ref − y₂ and ΣI_j against y₁, sampled on the same grid.
struct CompareResult {
    std::vector<double> t;
    std::vector<double> U_O_full, U_O_reduced;
    double linf_rel_UO = 0, l2_rel_UO = 0;
    double linf_rel_I = 0, l2_rel_I = 0;
};

CompareResult compare_models(const ConverterParams& params, const ControllerGains& gains,
                             const Scenario& scenario);

void write_compare_csv(std::ostream& out, const CompareResult& res);

/// Dispatches to the selected mode, writes the mode's artifacts plus a
/// run manifest into the output directory. Returns the process exit status:
/// 0 success, 1 domain error, 2 configuration error.
int run(const RunConfig& config);

std::string usage_text();

} // namespace dcdc
