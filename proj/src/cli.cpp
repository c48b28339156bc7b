#include "dcdc/cli.hpp"

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dcdc/errors.hpp"
#include "dcdc/pencil.hpp"
#include "dcdc/reduction.hpp"

namespace dcdc {

namespace fs = std::filesystem;

CompareResult compare_models(const ConverterParams& params, const ControllerGains& gains,
                             const Scenario& scenario) {
    const double h = scenario.step_for(params);
    const ConverterState full_init = initial_state_from_scenario(params, gains, scenario);

    const Waveform full = simulate(params, gains, full_init, scenario.horizon, h,
                                   scenario.alpha_mode);

    const ReducedCoeffs coeffs = build_reduced(params, gains);
    auto [red_init, phi_init] = reduced_init_from_full(params, gains, full_init);
    ReducedOptions opts;
    opts.alpha_mode = scenario.alpha_mode;
    opts.comparator = scenario.reduced_comparator;
    const Waveform red = simulate_reduced(coeffs, params, gains, red_init, phi_init,
                                          scenario.horizon, h, opts);

    if (full.samples() != red.samples())
        throw std::runtime_error("model sample grids do not align");

    CompareResult res;
    const auto& tf = full.times();
    const auto& uo = full.channel("U_O");
    const auto& y2 = red.channel("y2");
    const auto& y1 = red.channel("y1");

    double uo_scale = 0, i_scale = 0;
    double uo_max_diff = 0, i_max_diff = 0;
    double uo_sq_diff = 0, uo_sq = 0, i_sq_diff = 0, i_sq = 0;
    res.t = tf;
    res.U_O_full = uo;
    res.U_O_reduced.resize(tf.size());
    for (std::size_t s = 0; s < tf.size(); ++s) {
        const double uo_red = params.U_ref - y2[s];
        res.U_O_reduced[s] = uo_red;
        double i_full = 0;
        for (int j = 1; j <= params.N_f; ++j)
            i_full += full.value("I_" + std::to_string(j), s);

        uo_scale = std::max(uo_scale, std::abs(uo[s]));
        i_scale = std::max(i_scale, std::abs(i_full));
        uo_max_diff = std::max(uo_max_diff, std::abs(uo[s] - uo_red));
        i_max_diff = std::max(i_max_diff, std::abs(i_full - y1[s]));
        uo_sq_diff += (uo[s] - uo_red) * (uo[s] - uo_red);
        uo_sq += uo[s] * uo[s];
        i_sq_diff += (i_full - y1[s]) * (i_full - y1[s]);
        i_sq += i_full * i_full;
    }
    res.linf_rel_UO = uo_scale > 0 ? uo_max_diff / uo_scale : uo_max_diff;
    res.linf_rel_I = i_scale > 0 ? i_max_diff / i_scale : i_max_diff;
    res.l2_rel_UO = uo_sq > 0 ? std::sqrt(uo_sq_diff / uo_sq) : std::sqrt(uo_sq_diff);
    res.l2_rel_I = i_sq > 0 ? std::sqrt(i_sq_diff / i_sq) : std::sqrt(i_sq_diff);
    return res;
}

void write_compare_csv(std::ostream& out, const CompareResult& res) {
    out << "t,U_O_full,U_O_reduced,abs_err,rel_err\n";
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < res.t.size(); ++i) {
        const double abs_err = std::abs(res.U_O_full[i] - res.U_O_reduced[i]);
        const double rel_err = abs_err / std::max(std::abs(res.U_O_full[i]), 1e-12);
        out << num(res.t[i]) << "," << num(res.U_O_full[i]) << ","
            << num(res.U_O_reduced[i]) << "," << num(abs_err) << "," << num(rel_err)
            << "\n";
    }
}

std::string usage_text() {
    return "usage: dcdc <mode> --config FILE [--out DIR] [--set key=value]... "
           "[--jobs N] [--seed N]\n"
           "modes: simulate | compare | analyze-pencil | reduce-operator | "
           "stability | sweep | tune\n";
}

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_waveform_files(const fs::path& dir, const Waveform& wave,
                          const std::string& stem) {
    std::ofstream csv(dir / (stem + ".csv"));
    wave.write_csv(csv);
    std::ofstream events(dir / (stem + "_events.csv"));
    wave.write_events_csv(events);
}

void append_resolved(std::ostringstream& os, const ConverterParams& p,
                     const ControllerGains& g) {
    os << "R_L = " << p.R_L << "\nR_C = " << p.R_C << "\nC = " << p.C
       << "\nL = " << p.L << "\nN_f = " << p.N_f << "\nU_S = " << p.U_S
       << "\nU_ref = " << p.U_ref << "\nR_load = " << p.R_load_initial
       << "\nT = " << p.T << "\nload_time = " << p.load_event.t_step
       << "\nload_factor = " << p.load_event.factor << "\n";
    os << "K_p = " << g.K_p << "\nK_d = " << g.K_d << "\nK_i = " << g.K_i
       << "\nK_dd = " << g.K_dd << "\nT_d = " << g.T_d << "\nT_dd = " << g.T_dd
       << "\n";
}

struct ManifestWriter {
    std::ostringstream body;

    void finish(const fs::path& dir, const RunConfig& rc, double wall_s) {
        std::ostringstream os;
        os << "tool = dcdc " << kToolVersion << "\n";
        os << "mode = " << rc.mode << "\n";
        os << "config = " << rc.config_path << "\n";
        for (const auto& o : rc.overrides) os << "override = " << o << "\n";
        os << "jobs = " << rc.jobs << "\n";
        os << "seed = " << rc.seed << "\n";
        os << body.str();
        os << "wall_time_s = " << wall_s << "\n";
        write_text_file(dir / "manifest.txt", os.str());
    }
};

int dispatch(const RunConfig& rc, const ConfigMap& cfg, ManifestWriter& manifest) {
    const fs::path out_dir(rc.out_dir);
    fs::create_directories(out_dir);

    if (rc.mode == "simulate") {
        const ConverterParams p = params_from_config(cfg);
        const ControllerGains g = gains_from_config(cfg);
        const Scenario sc = scenario_from_config(cfg, p);
        const std::string model = cfg.get_string("model", "full");
        const double h = sc.step_for(p);
        append_resolved(manifest.body, p, g);
        manifest.body << "model = " << model << "\nhorizon = " << sc.horizon
                      << "\nh = " << h << "\n";

        if (model == "full") {
            const ConverterState init = initial_state_from_scenario(p, g, sc);
            const Waveform wave = simulate(p, g, init, sc.horizon, h, sc.alpha_mode);
            write_waveform_files(out_dir, wave, "waveform");
        } else if (model == "reduced") {
            const ReducedCoeffs coeffs = build_reduced(p, g);
            const ConverterState full_init = initial_state_from_scenario(p, g, sc);
            auto [init, phi_init] = reduced_init_from_full(p, g, full_init);
            ReducedOptions opts{sc.alpha_mode, sc.reduced_comparator};
            const Waveform wave =
                simulate_reduced(coeffs, p, g, init, phi_init, sc.horizon, h, opts);
            write_waveform_files(out_dir, wave, "waveform");
        } else {
            throw ConfigError("model must be 'full' or 'reduced'");
        }
        fmt::print("wrote {}\n", (out_dir / "waveform.csv").string());
        return 0;
    }

    if (rc.mode == "compare") {
        const ConverterParams p = params_from_config(cfg);
        const ControllerGains g = gains_from_config(cfg);
        Scenario sc = scenario_from_config(cfg, p);
        if (cfg.has("h_full") && cfg.has("h_reduced") &&
            cfg.get_double("h_full", 0) != cfg.get_double("h_reduced", 0))
            throw ConfigError("h_full and h_reduced must match for a comparison");
        if (cfg.has("h_full")) sc.h = cfg.get_double("h_full", sc.h);

        const CompareResult res = compare_models(p, g, sc);
        std::ofstream csv(out_dir / "compare.csv");
        write_compare_csv(csv, res);
        append_resolved(manifest.body, p, g);
        manifest.body << "linf_rel_UO = " << res.linf_rel_UO
                      << "\nl2_rel_UO = " << res.l2_rel_UO
                      << "\nlinf_rel_I = " << res.linf_rel_I
                      << "\nl2_rel_I = " << res.l2_rel_I << "\n";
        fmt::print("max rel_err U_O = {:.3e} (L2 {:.3e}); I_sum {:.3e} (L2 {:.3e})\n",
                   res.linf_rel_UO, res.l2_rel_UO, res.linf_rel_I, res.l2_rel_I);
        return 0;
    }

    if (rc.mode == "analyze-pencil") {
        const std::string path = cfg.get_string("pencil_file", "");
        if (path.empty()) throw ConfigError("analyze-pencil needs pencil_file");
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open pencil file: " + path);
        const PolyMatrixPencil pencil = read_pencil(in);
        const PencilReport rep = analyze(pencil, cfg.get_double("rank_tol", 1e-9));
        const std::string text = format_report(rep);
        write_text_file(out_dir / "pencil_report.txt", text);
        fmt::print("{}", text);
        manifest.body << "pencil_file = " << path << "\n";
        return 0;
    }

    if (rc.mode == "reduce-operator") {
        const std::string path = cfg.get_string("operator_file", "");
        if (path.empty()) throw ConfigError("reduce-operator needs operator_file");
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open operator file: " + path);
        const IDEOperator op = read_operator(in);
        const ReductionTrace trace =
            reduce_to_nonsingular(op, cfg.get_int("max_steps", -1));
        const std::string text = format_trace(trace);
        write_text_file(out_dir / "reduction_trace.txt", text);
        fmt::print("{}", text);
        manifest.body << "operator_file = " << path << "\n";
        return 0;
    }

    if (rc.mode == "stability") {
        const ConverterParams p = params_from_config(cfg);
        const ControllerGains g = gains_from_config(cfg);
        const StabilityReport rep = analyze_stability(build_reduced(p, g));
        const std::string text = format_stability_report(rep);
        write_text_file(out_dir / "stability_report.txt", text);
        fmt::print("{}", text);
        append_resolved(manifest.body, p, g);
        return 0;
    }

    if (rc.mode == "sweep") {
        const ConverterParams p = params_from_config(cfg);
        const ControllerGains g = gains_from_config(cfg);
        const std::vector<SweepAxis> axes = sweep_axes_from_config(cfg);
        const std::vector<SweepPoint> grid = sweep(p, g, axes, rc.jobs);
        std::ofstream csv(out_dir / "sweep.csv");
        write_sweep_csv(csv, grid, axes.size() == 2);
        append_resolved(manifest.body, p, g);
        for (std::size_t i = 0; i < axes.size(); ++i)
            manifest.body << "axis" << i + 1 << " = " << axes[i].name << " ["
                          << axes[i].lo << ", " << axes[i].hi << "] x"
                          << axes[i].count << "\n";
        fmt::print("wrote {} ({} points)\n", (out_dir / "sweep.csv").string(),
                   grid.size());
        return 0;
    }

    if (rc.mode == "tune") {
        const TuningProblem problem = tuning_problem_from_config(cfg);
        const int budget = cfg.get_int("budget", 200);
        const TuningResult res = tune(problem, budget, rc.seed);

        std::ostringstream os;
        os << "best_K_p = " << res.best.K_p << "\nbest_K_d = " << res.best.K_d
           << "\nbest_K_i = " << res.best.K_i << "\nbest_K_dd = " << res.best.K_dd
           << "\nbest_T_d = " << res.best.T_d << "\nbest_T_dd = " << res.best.T_dd
           << "\nobjective = " << res.objective_value
           << "\nevaluations = " << res.evaluations << "\n";
        os << format_stability_report(res.stability);
        write_text_file(out_dir / "tuning_result.txt", os.str());

        std::ofstream conv(out_dir / "convergence.csv");
        conv << "iter,best_objective\n";
        for (std::size_t i = 0; i < res.trace.size(); ++i)
            conv << i << "," << res.trace[i] << "\n";

        append_resolved(manifest.body, problem.params, res.best);
        manifest.body << "objective = " << res.objective_value
                      << "\nevaluations = " << res.evaluations << "\n";
        fmt::print("{}", os.str());
        return 0;
    }

    fmt::print(stderr, "unknown mode '{}'\n{}", rc.mode, usage_text());
    return 2;
}

} // namespace

int run(const RunConfig& rc) {
    const auto t_start = std::chrono::steady_clock::now();
    ManifestWriter manifest;
    int status = 0;
    try {
        ConfigMap cfg;
        if (!rc.config_path.empty()) cfg = ConfigMap::from_file(rc.config_path);
        for (const auto& o : rc.overrides) cfg.apply_override(o);
        status = dispatch(rc, cfg, manifest);
    } catch (const ConfigError& ex) {
        fmt::print(stderr, "config error: {}\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        fmt::print(stderr, "error: {}\n", ex.what());
        return 1;
    }
    if (status == 0) {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                .count();
        manifest.finish(fs::path(rc.out_dir), rc, wall);
    }
    return status;
}

} // namespace dcdc
