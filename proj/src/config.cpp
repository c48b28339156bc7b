#include "dcdc/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dcdc/errors.hpp"

namespace dcdc {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

} // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return from_stream(in);
}

ConfigMap ConfigMap::from_stream(std::istream& in) {
    ConfigMap cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (value.empty()) throw ConfigError("empty value for key '" + key + "'", line_no);
        cfg.set(key, value, line_no);
    }
    return cfg;
}

void ConfigMap::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: " + assignment);
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (key.empty() || value.empty())
        throw ConfigError("override must look like key=value: " + assignment);
    set(key, value, 0);
}

void ConfigMap::set(const std::string& key, const std::string& value, int line) {
    values_[key] = value;
    lines_[key] = line;
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) > 0; }

double ConfigMap::parse_double(const std::string& key) const {
    const std::string& text = values_.at(key);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "' is not a number: '" + text + "'",
                          lines_.at(key));
    return v;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    return has(key) ? parse_double(key) : fallback;
}

double ConfigMap::require_double(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required key '" + key + "'");
    return parse_double(key);
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const double v = parse_double(key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("key '" + key + "' must be an integer", lines_.at(key));
    return i;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? values_.at(key) : fallback;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = values_.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "' must be a boolean", lines_.at(key));
}

ConverterParams params_from_config(const ConfigMap& cfg) {
    ConverterParams p;
    p.R_L = cfg.get_double("R_L", p.R_L);
    p.R_C = cfg.get_double("R_C", p.R_C);
    p.C = cfg.get_double("C", p.C);
    p.L = cfg.get_double("L", p.L);
    p.N_f = cfg.get_int("N_f", p.N_f);
    p.U_S = cfg.get_double("U_S", p.U_S);
    p.U_ref = cfg.get_double("U_ref", p.U_ref);
    p.R_load_initial = cfg.get_double("R_load", p.R_load_initial);
    p.T = cfg.get_double("T", p.T);
    p.load_event.t_step = cfg.get_double("load_time", -1.0);
    p.load_event.factor = cfg.get_double("load_factor", 0.1);
    try {
        p.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return p;
}

ControllerGains gains_from_config(const ConfigMap& cfg) {
    ControllerGains g;
    g.K_p = cfg.get_double("K_p", g.K_p);
    g.K_d = cfg.get_double("K_d", g.K_d);
    g.K_i = cfg.get_double("K_i", g.K_i);
    g.K_dd = cfg.get_double("K_dd", g.K_dd);
    g.T_d = cfg.get_double("T_d", g.T_d);
    g.T_dd = cfg.get_double("T_dd", g.T_dd);
    try {
        g.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return g;
}

Scenario scenario_from_config(const ConfigMap& cfg, const ConverterParams& p) {
    Scenario sc;
    sc.horizon = cfg.get_double("horizon", 100.0 * p.T);
    sc.h = cfg.get_double("h", 0.0);

    const std::string mode = cfg.get_string("alpha_mode", "pwm");
    if (mode == "pwm") sc.alpha_mode = AlphaMode::Pwm;
    else if (mode == "frozen") sc.alpha_mode = AlphaMode::Frozen;
    else throw ConfigError("alpha_mode must be 'pwm' or 'frozen'");

    const std::string comp = cfg.get_string("reduced_alpha", "single");
    if (comp == "single") sc.reduced_comparator = ReducedComparator::Single;
    else if (comp == "per_phase") sc.reduced_comparator = ReducedComparator::PerPhase;
    else throw ConfigError("reduced_alpha must be 'single' or 'per_phase'");

    sc.init_U_C_set = cfg.has("init_U_C");
    sc.init_U_C = cfg.get_double("init_U_C", p.U_ref);
    sc.init_I = cfg.get_double("init_I", 0.0);
    sc.init_U_ad = cfg.get_double("init_U_ad", 0.0);
    sc.init_U_ai = cfg.get_double("init_U_ai", 0.0);
    sc.init_U_dd = cfg.get_double("init_U_dd", 0.0);

    if (sc.horizon <= 0) throw ConfigError("horizon must be > 0");
    if (sc.h < 0) throw ConfigError("h must be >= 0");
    return sc;
}

std::vector<SweepAxis> sweep_axes_from_config(const ConfigMap& cfg) {
    std::vector<SweepAxis> axes;
    for (int i = 1; i <= 2; ++i) {
        const std::string suffix = std::to_string(i);
        if (!cfg.has("sweep_axis" + suffix)) break;
        SweepAxis ax;
        ax.name = cfg.get_string("sweep_axis" + suffix, "");
        ax.lo = cfg.require_double("sweep_min" + suffix);
        ax.hi = cfg.require_double("sweep_max" + suffix);
        ax.count = cfg.get_int("sweep_count" + suffix, 2);
        const std::string scale = cfg.get_string("sweep_scale" + suffix, "linear");
        if (scale == "log") ax.log_scale = true;
        else if (scale != "linear") throw ConfigError("sweep_scale must be 'linear' or 'log'");
        if (ax.count < 1) throw ConfigError("sweep_count must be >= 1");
        axes.push_back(ax);
    }
    if (axes.empty()) throw ConfigError("sweep mode needs sweep_axis1");
    return axes;
}

TuningProblem tuning_problem_from_config(const ConfigMap& cfg) {
    TuningProblem prob;
    prob.params = params_from_config(cfg);

    auto bound = [&](const std::string& name, double lo_def, double hi_def) {
        return std::pair<double, double>(cfg.get_double("bound_lo_" + name, lo_def),
                                         cfg.get_double("bound_hi_" + name, hi_def));
    };
    std::tie(prob.bounds.lo.K_p, prob.bounds.hi.K_p) = bound("K_p", 1e-4, 10.0);
    std::tie(prob.bounds.lo.K_d, prob.bounds.hi.K_d) = bound("K_d", 1e-9, 1e-2);
    std::tie(prob.bounds.lo.K_i, prob.bounds.hi.K_i) = bound("K_i", 1e-1, 1e5);
    std::tie(prob.bounds.lo.K_dd, prob.bounds.hi.K_dd) = bound("K_dd", 1e-14, 1e-6);
    std::tie(prob.bounds.lo.T_d, prob.bounds.hi.T_d) = bound("T_d", 1e-7, 1e-5);
    std::tie(prob.bounds.lo.T_dd, prob.bounds.hi.T_dd) = bound("T_dd", 1e-7, 1e-5);

    const std::string obj = cfg.get_string("objective", "itae");
    if (obj == "itae") prob.objective = Objective::Itae;
    else if (obj == "ise") prob.objective = Objective::Ise;
    else if (obj == "settling") prob.objective = Objective::SettlingTime;
    else throw ConfigError("objective must be itae, ise or settling");

    const Scenario sc = scenario_from_config(cfg, prob.params);
    prob.horizon = sc.horizon;
    prob.h = sc.step_for(prob.params);
    prob.penalty = cfg.get_double("penalty", 1e9);
    try {
        prob.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return prob;
}

ConverterState initial_state_from_scenario(const ConverterParams& p,
                                           const ControllerGains& g,
                                           const Scenario& sc) {
    ConverterState s;
    s.t = 0.0;
    s.I = Eigen::VectorXd::Constant(p.N_f, sc.init_I);
    s.U_C = sc.init_U_C_set ? sc.init_U_C : p.U_ref;
    s.U_ad = sc.init_U_ad;
    s.U_ai = sc.init_U_ai;
    s.U_dd = sc.init_U_dd;
    refresh_derived(s, p, g, sc.alpha_mode);
    return s;
}

} // namespace dcdc
