#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcdc/converter.hpp"
#include "dcdc/reduced.hpp"
#include "dcdc/stability.hpp"
#include "dcdc/tuner.hpp"

namespace dcdc {

/// Flat key = value configuration text: one assignment per line, '#' starts a
/// comment, blank lines ignored. Parse errors carry line numbers. Overrides
/// of the form "key=value" are applied on top of the file.
class ConfigMap {
public:
    ConfigMap() = default;

    static ConfigMap from_file(const std::string& path);
    static ConfigMap from_stream(std::istream& in);

    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    double require_double(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    void set(const std::string& key, const std::string& value, int line);
    double parse_double(const std::string& key) const;

    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
};

/// Scenario settings shared by the simulation modes.
struct Scenario {
    double horizon = 0;
    double h = 0; ///< 0 selects the default T/500
    AlphaMode alpha_mode = AlphaMode::Pwm;
    ReducedComparator reduced_comparator = ReducedComparator::Single;
    double init_U_C = 0;
    bool init_U_C_set = false;
    double init_I = 0;
    double init_U_ad = 0, init_U_ai = 0, init_U_dd = 0;

    double step_for(const ConverterParams& p) const { return h > 0 ? h : p.T / 500.0; }
};

ConverterParams params_from_config(const ConfigMap& cfg);
ControllerGains gains_from_config(const ConfigMap& cfg);
Scenario scenario_from_config(const ConfigMap& cfg, const ConverterParams& p);
std::vector<SweepAxis> sweep_axes_from_config(const ConfigMap& cfg);
TuningProblem tuning_problem_from_config(const ConfigMap& cfg);

/// Initial full-model state from the scenario overrides.
ConverterState initial_state_from_scenario(const ConverterParams& p,
                                           const ControllerGains& g,
                                           const Scenario& sc);

} // namespace dcdc
