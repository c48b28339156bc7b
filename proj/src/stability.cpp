#include "dcdc/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

#include "dcdc/errors.hpp"

namespace dcdc {

StabilityReport analyze_stability(const ReducedCoeffs& c) {
    StabilityReport rep;
    rep.trace = c.p11 + c.p22;
    rep.det = c.p11 * c.p22 - c.p12 * c.p21;
    rep.c1 = -rep.trace;
    rep.c2 = rep.det;
    rep.margin_1 = rep.c1;
    rep.margin_2 = rep.c2;
    rep.condition_1 = rep.c1 > 0.0;
    rep.condition_2 = rep.c2 > 0.0;

    rep.printed_c1 = c.p11 + c.p12;
    rep.printed_condition_1 = rep.printed_c1 > 0.0;

    rep.p21_sign_warning = 1.0 / (c.r_factor * c.C) < c.R_C * c.R_L / (c.r_factor * c.L);
    rep.pid_condition = c.kd_eff > 0.0;

    // roots of λ² + c₁λ + c₂
    const double disc = rep.c1 * rep.c1 - 4.0 * rep.c2;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        rep.eig1 = {(-rep.c1 + s) / 2.0, 0.0};
        rep.eig2 = {(-rep.c1 - s) / 2.0, 0.0};
    } else {
        const double s = std::sqrt(-disc);
        rep.eig1 = {-rep.c1 / 2.0, s / 2.0};
        rep.eig2 = {-rep.c1 / 2.0, -s / 2.0};
    }
    return rep;
}

std::string format_stability_report(const StabilityReport& rep) {
    std::ostringstream os;
    os << "char_poly = 1 " << rep.c1 << " " << rep.c2 << "\n";
    os << "trace = " << rep.trace << "\n";
    os << "det = " << rep.det << "\n";
    os << "condition_1 = " << (rep.condition_1 ? "true" : "false")
       << " (margin " << rep.margin_1 << ")\n";
    os << "condition_2 = " << (rep.condition_2 ? "true" : "false")
       << " (margin " << rep.margin_2 << ")\n";
    os << "printed_condition_1 = " << (rep.printed_condition_1 ? "true" : "false")
       << " (p11+p12 = " << rep.printed_c1 << ")\n";
    os << "p21_sign_warning = " << (rep.p21_sign_warning ? "true" : "false") << "\n";
    os << "pid_condition = " << (rep.pid_condition ? "true" : "false") << "\n";
    os << "eigenvalues = (" << rep.eig1.real() << (rep.eig1.imag() >= 0 ? "+" : "")
       << rep.eig1.imag() << "i) (" << rep.eig2.real() << (rep.eig2.imag() >= 0 ? "+" : "")
       << rep.eig2.imag() << "i)\n";
    os << "stable = " << (rep.stable() ? "true" : "false") << "\n";
    return os.str();
}

BoundednessResult boundedness_check(const Waveform& wave,
                                    const std::vector<std::string>& channels,
                                    double horizon_tail_fraction) {
    if (wave.samples() == 0) throw std::invalid_argument("waveform is empty");
    const std::size_t n = wave.samples();
    std::vector<const std::vector<double>*> cols;
    cols.reserve(channels.size());
    for (const auto& name : channels) cols.push_back(&wave.channel(name));

    const std::size_t tail_start =
        static_cast<std::size_t>(static_cast<double>(n) * (1.0 - horizon_tail_fraction));

    double max_all = 0.0, max_pre_tail = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (const auto* col : cols) sq += (*col)[i] * (*col)[i];
        const double norm = std::sqrt(sq);
        max_all = std::max(max_all, norm);
        if (i < tail_start) max_pre_tail = std::max(max_pre_tail, norm);
    }

    BoundednessResult res;
    res.kappa = max_all;
    res.bounded = max_all == 0.0 || (max_all - max_pre_tail) < 0.01 * max_all;
    return res;
}

std::vector<double> SweepAxis::values() const {
    std::vector<double> v;
    if (count <= 1) {
        v.push_back(lo);
        return v;
    }
    for (int i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / (count - 1);
        if (log_scale)
            v.push_back(lo * std::pow(hi / lo, f));
        else
            v.push_back(lo + f * (hi - lo));
    }
    return v;
}

namespace {

void set_field(ConverterParams& p, ControllerGains& g, const std::string& name,
               double value) {
    if (name == "R_L") p.R_L = value;
    else if (name == "R_C") p.R_C = value;
    else if (name == "C") p.C = value;
    else if (name == "L") p.L = value;
    else if (name == "U_S") p.U_S = value;
    else if (name == "U_ref") p.U_ref = value;
    else if (name == "R_load") p.R_load_initial = value;
    else if (name == "T") p.T = value;
    else if (name == "K_p") g.K_p = value;
    else if (name == "K_d") g.K_d = value;
    else if (name == "K_i") g.K_i = value;
    else if (name == "K_dd") g.K_dd = value;
    else if (name == "T_d") g.T_d = value;
    else if (name == "T_dd") g.T_dd = value;
    else throw UnknownAxis("unknown sweep axis: " + name);
}

} // namespace

const std::vector<std::string>& sweepable_fields() {
    static const std::vector<std::string> fields = {
        "R_L", "R_C", "C", "L", "U_S", "U_ref", "R_load", "T",
        "K_p", "K_d", "K_i", "K_dd", "T_d", "T_dd"};
    return fields;
}

std::vector<SweepPoint> sweep(const ConverterParams& base_params,
                              const ControllerGains& base_gains,
                              const std::vector<SweepAxis>& axes, int jobs) {
    if (axes.empty() || axes.size() > 2)
        throw std::invalid_argument("sweep takes 1 or 2 axes");
    // Reject bad axis names before any grid work.
    for (const auto& ax : axes) {
        ConverterParams p = base_params;
        ControllerGains g = base_gains;
        set_field(p, g, ax.name, ax.lo);
    }

    const std::vector<double> v1 = axes[0].values();
    const std::vector<double> v2 =
        axes.size() == 2 ? axes[1].values() : std::vector<double>{0.0};

    std::vector<SweepPoint> grid(v1.size() * v2.size());
    auto eval_point = [&](std::size_t idx) {
        const std::size_t i = idx / v2.size();
        const std::size_t j = idx % v2.size();
        ConverterParams p = base_params;
        ControllerGains g = base_gains;
        set_field(p, g, axes[0].name, v1[i]);
        if (axes.size() == 2) set_field(p, g, axes[1].name, v2[j]);
        SweepPoint pt;
        pt.v1 = v1[i];
        pt.v2 = axes.size() == 2 ? v2[j] : 0.0;
        pt.report = analyze_stability(build_reduced(p, g));
        grid[idx] = pt;
    };

    const std::size_t total = grid.size();
    if (jobs <= 1 || total < 2) {
        for (std::size_t idx = 0; idx < total; ++idx) eval_point(idx);
    } else {
        const int workers = std::min<int>(jobs, static_cast<int>(total));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t idx = static_cast<std::size_t>(w); idx < total;
                     idx += static_cast<std::size_t>(workers))
                    eval_point(idx);
            });
        for (auto& th : pool) th.join();
    }
    return grid;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points,
                     bool has_axis2) {
    out << "axis1,axis2,c1,c2,cond1,cond2,p21_warning,pid_cond,max_re_eig\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& pt : points) {
        out << num(pt.v1) << ",";
        if (has_axis2) out << num(pt.v2);
        out << "," << num(pt.report.c1) << "," << num(pt.report.c2) << ","
            << (pt.report.condition_1 ? 1 : 0) << "," << (pt.report.condition_2 ? 1 : 0)
            << "," << (pt.report.p21_sign_warning ? 1 : 0) << ","
            << (pt.report.pid_condition ? 1 : 0) << "," << num(pt.report.max_re_eig())
            << "\n";
    }
}

} // namespace dcdc
