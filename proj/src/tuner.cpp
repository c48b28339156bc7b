#include "dcdc/tuner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dcdc/errors.hpp"
#include "dcdc/reduced.hpp"

namespace dcdc {

namespace {

constexpr int kDim = 6;
using LogPoint = std::array<double, kDim>;

LogPoint to_log(const ControllerGains& g) {
    return {std::log(g.K_p), std::log(g.K_d), std::log(g.K_i),
            std::log(g.K_dd), std::log(g.T_d), std::log(g.T_dd)};
}

ControllerGains from_log(const LogPoint& z) {
    ControllerGains g;
    g.K_p = std::exp(z[0]);
    g.K_d = std::exp(z[1]);
    g.K_i = std::exp(z[2]);
    g.K_dd = std::exp(z[3]);
    g.T_d = std::exp(z[4]);
    g.T_dd = std::exp(z[5]);
    return g;
}

} // namespace

void GainBounds::validate() const {
    const std::array<std::pair<double, double>, kDim> box = {{{lo.K_p, hi.K_p},
                                                              {lo.K_d, hi.K_d},
                                                              {lo.K_i, hi.K_i},
                                                              {lo.K_dd, hi.K_dd},
                                                              {lo.T_d, hi.T_d},
                                                              {lo.T_dd, hi.T_dd}}};
    for (const auto& [l, h] : box) {
        if (!(l > 0.0) || !(h > 0.0) || !std::isfinite(l) || !std::isfinite(h))
            throw std::invalid_argument("gain bounds must be finite and > 0");
        if (l > h) throw std::invalid_argument("gain bounds must be ordered");
    }
}

void TuningProblem::validate() const {
    params.validate();
    bounds.validate();
    if (horizon <= 0 || h <= 0) throw std::invalid_argument("scenario horizon and h must be > 0");
    if (params.load_event.enabled() && horizon <= params.load_event.t_step)
        throw std::invalid_argument("objective horizon must exceed the load-event time");
    if (penalty <= 0 || !std::isfinite(penalty))
        throw std::invalid_argument("penalty must be a positive finite value");
}

double objective_on_error(Objective kind, const Waveform& wave, double t_event,
                          double U_ref) {
    const auto& t = wave.times();
    const auto& e = wave.channel(wave.has_channel("e") ? "e" : "y2");
    if (t.empty()) return 0.0;

    switch (kind) {
        case Objective::Itae:
        case Objective::Ise: {
            double acc = 0.0;
            for (std::size_t i = 1; i < t.size(); ++i) {
                if (t[i] < t_event) continue;
                const double t0 = std::max(t[i - 1], t_event);
                const double dt = t[i] - t0;
                if (dt <= 0.0) continue;
                auto weight = [&](double tt, double ee) {
                    return kind == Objective::Itae ? (tt - t_event) * std::abs(ee)
                                                   : ee * ee;
                };
                acc += 0.5 * dt * (weight(t0, e[i - 1]) + weight(t[i], e[i]));
            }
            return acc;
        }
        case Objective::SettlingTime: {
            const double thresh = 0.02 * std::abs(U_ref);
            double settle = t_event;
            for (std::size_t i = 0; i < t.size(); ++i)
                if (t[i] >= t_event && std::abs(e[i]) > thresh) settle = t[i];
            return settle - t_event;
        }
    }
    return 0.0;
}

double evaluate_gains(const TuningProblem& problem, const ControllerGains& gains) {
    const StabilityReport rep = analyze_stability(build_reduced(problem.params, gains));
    if (!rep.stable() || !gains.pid_positivity()) return problem.penalty;
    try {
        const ConverterState init = make_initial_state(problem.params, gains);
        const Waveform wave =
            simulate(problem.params, gains, init, problem.horizon, problem.h);
        const double t_event =
            problem.params.load_event.enabled() ? problem.params.load_event.t_step : 0.0;
        const double value =
            objective_on_error(problem.objective, wave, t_event, problem.params.U_ref);
        return std::isfinite(value) ? value : problem.penalty;
    } catch (const NonFiniteState&) {
        return problem.penalty;
    }
}

namespace {

struct SearchState {
    std::function<double(const ControllerGains&)> fn;
    LogPoint lo, hi;
    int budget = 0;
    int evaluations = 0;
    double best_value = std::numeric_limits<double>::infinity();
    LogPoint best_point{};
    std::vector<double> trace;

    bool exhausted() const { return evaluations >= budget; }

    LogPoint clamp(const LogPoint& z) const {
        LogPoint c = z;
        for (int i = 0; i < kDim; ++i) c[i] = std::clamp(c[i], lo[i], hi[i]);
        return c;
    }

    double eval(const LogPoint& z) {
        const LogPoint c = clamp(z);
        ++evaluations;
        const double v = fn(from_log(c));
        if (v < best_value) {
            best_value = v;
            best_point = c;
        }
        return v;
    }

    void record_iteration() { trace.push_back(best_value); }
};

// One Nelder–Mead run from the given start until convergence or budget end.
void nelder_mead(SearchState& st, const LogPoint& start, double spread) {
    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    const int n = kDim;

    std::vector<LogPoint> x(static_cast<std::size_t>(n) + 1, start);
    std::vector<double> fx(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i) + 1][i] += spread * (st.hi[i] - st.lo[i]);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (st.exhausted()) return;
        fx[i] = st.eval(x[i]);
    }

    auto order = [&] {
        std::vector<std::size_t> idx(x.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        std::vector<LogPoint> x2(x.size());
        std::vector<double> f2(x.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            x2[i] = x[idx[i]];
            f2[i] = fx[idx[i]];
        }
        x.swap(x2);
        fx.swap(f2);
    };

    while (!st.exhausted()) {
        order();
        st.record_iteration();

        double xspread = 0.0;
        for (std::size_t i = 1; i < x.size(); ++i)
            for (int d = 0; d < n; ++d)
                xspread = std::max(xspread, std::abs(x[i][d] - x[0][d]));
        if (std::abs(fx.back() - fx.front()) < 1e-14 && xspread < 1e-10) return;

        LogPoint centroid{};
        for (int d = 0; d < n; ++d) {
            for (std::size_t i = 0; i + 1 < x.size(); ++i) centroid[d] += x[i][d];
            centroid[d] /= n;
        }

        auto blend = [&](const LogPoint& base, const LogPoint& dir, double s) {
            LogPoint p;
            for (int d = 0; d < n; ++d) p[d] = base[d] + s * (dir[d] - base[d]);
            return p;
        };

        const LogPoint xr = blend(centroid, x.back(), -alpha);
        const double fr = st.eval(xr);
        if (st.exhausted()) return;

        if (fr < fx.front()) {
            const LogPoint xe = blend(centroid, xr, gamma);
            const double fe = st.eval(xe);
            if (fe < fr) {
                x.back() = xe;
                fx.back() = fe;
            } else {
                x.back() = xr;
                fx.back() = fr;
            }
        } else if (fr < fx[fx.size() - 2]) {
            x.back() = xr;
            fx.back() = fr;
        } else {
            const bool outside = fr < fx.back();
            const LogPoint xc = blend(centroid, outside ? xr : x.back(), rho);
            const double fc = st.eval(xc);
            if (fc < (outside ? fr : fx.back())) {
                x.back() = xc;
                fx.back() = fc;
            } else {
                for (std::size_t i = 1; i < x.size(); ++i) {
                    x[i] = blend(x[0], x[i], sigma);
                    if (st.exhausted()) return;
                    fx[i] = st.eval(x[i]);
                }
            }
        }
    }
}

TuningResult run_search(const TuningProblem& problem,
                        const std::function<double(const ControllerGains&)>& fn,
                        int budget, std::uint64_t seed) {
    problem.validate();
    if (budget < 10) throw std::invalid_argument("budget must be >= 10");

    SearchState st;
    st.fn = fn;
    st.lo = to_log(problem.bounds.lo);
    st.hi = to_log(problem.bounds.hi);
    st.budget = budget;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    LogPoint start;
    for (int d = 0; d < kDim; ++d) start[d] = 0.5 * (st.lo[d] + st.hi[d]);
    nelder_mead(st, start, 0.10);
    while (!st.exhausted()) {
        LogPoint restart;
        for (int d = 0; d < kDim; ++d)
            restart[d] = st.lo[d] + unit(rng) * (st.hi[d] - st.lo[d]);
        nelder_mead(st, restart, 0.05);
    }
    st.record_iteration();

    TuningResult res;
    res.best = from_log(st.best_point);
    res.objective_value = st.best_value;
    res.evaluations = st.evaluations;
    res.trace = std::move(st.trace);
    res.stability = analyze_stability(build_reduced(problem.params, res.best));
    return res;
}

} // namespace

TuningResult tune_with_objective(const TuningProblem& problem,
                                 const std::function<double(const ControllerGains&)>& fn,
                                 int budget, std::uint64_t seed) {
    TuningResult res = run_search(problem, fn, budget, seed);
    if (!res.stability.stable() || !res.best.pid_positivity())
        throw NoFeasiblePoint("no stable gain set within budget");
    return res;
}

TuningResult tune(const TuningProblem& problem, int budget, std::uint64_t seed) {
    TuningResult res = run_search(
        problem, [&](const ControllerGains& g) { return evaluate_gains(problem, g); },
        budget, seed);
    if (res.objective_value >= problem.penalty || !res.stability.stable() ||
        !res.best.pid_positivity())
        throw NoFeasiblePoint("no stable gain set within budget");
    return res;
}

} // namespace dcdc
