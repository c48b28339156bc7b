#include "dcdc/converter.hpp"

#include <cmath>
#include <stdexcept>

#include "dcdc/sim_engine.hpp"

namespace dcdc {

void ConverterParams::validate() const {
    if (R_L < 0 || R_C < 0) throw std::invalid_argument("resistances must be >= 0");
    if (C <= 0) throw std::invalid_argument("C must be > 0");
    if (L <= 0) throw std::invalid_argument("L must be > 0");
    if (U_S <= 0) throw std::invalid_argument("U_S must be > 0");
    if (T <= 0) throw std::invalid_argument("T must be > 0");
    if (R_load_initial <= 0) throw std::invalid_argument("R_load must be > 0");
    if (N_f < 1) throw std::invalid_argument("N_f must be >= 1");
    if (N_f > 63) throw std::invalid_argument("N_f must fit the 64-bit switch mask");
    if (load_event.enabled() &&
        (load_event.factor <= 0 || load_event.factor > 1))
        throw std::invalid_argument("load factor must be in (0, 1]");
}

void ControllerGains::validate() const {
    if (T_d <= 0 || T_dd <= 0) throw std::invalid_argument("T_d, T_dd must be > 0");
}

double algebraic_output(double U_C, double I_sum, double R_load, double R_C) {
    return (U_C + R_C * I_sum) / (1.0 + R_C / R_load);
}

int pwm_alpha(double t, double dt_j, double T, double D_0) {
    double m = std::fmod(t - dt_j, T);
    if (m < 0) m += T;
    return m <= D_0 * T ? 1 : 0;
}

namespace detail {

FullModel::FullModel(const ConverterParams& p, const ControllerGains& g, AlphaMode mode)
    : params_(p), gains_(g), mode_(mode) {
    params_.validate();
    gains_.validate();
}

// State layout: x = [I_0 .. I_{Nf-1}, U_C, U_ad, U_ai, U_dd].
// Mask layout: bits 0..N_f-1 comparator outputs, bit N_f load-step active.

std::uint64_t FullModel::mask(double t, const Eigen::VectorXd& x) const {
    const ConverterParams& p = params_;
    const int nf = p.N_f;
    const bool load = p.load_event.active(t);
    const double R_load = load ? p.R_load_initial * p.load_event.factor : p.R_load_initial;

    const double I_sum = x.head(nf).sum();
    const double U_O = algebraic_output(x[nf], I_sum, R_load, p.R_C);
    const double e = p.U_ref - U_O;
    const double U_a = x[nf + 1] + x[nf + 2] + gains_.K_p * e + x[nf + 3];
    const double D_0 = (p.U_ref + U_a) / p.U_S;

    std::uint64_t m = 0;
    for (int j = 0; j < nf; ++j) {
        const int a = mode_ == AlphaMode::Frozen
                          ? 1
                          : pwm_alpha(t, p.phase_offset(j), p.T, D_0);
        if (a) m |= std::uint64_t{1} << j;
    }
    if (load) m |= std::uint64_t{1} << nf;
    return m;
}

FullModel::Derived FullModel::derived(double t, const Eigen::VectorXd& x,
                                      std::uint64_t mask, Eigen::VectorXd* deriv) const {
    (void)t;
    const ConverterParams& p = params_;
    const ControllerGains& g = gains_;
    const int nf = p.N_f;

    Derived d{};
    const bool load = (mask >> nf) & 1;
    d.R_load = load ? p.R_load_initial * p.load_event.factor : p.R_load_initial;
    const double r = 1.0 + p.R_C / d.R_load;

    const double U_C = x[nf];
    const double U_ad = x[nf + 1];
    const double U_ai = x[nf + 2];
    const double U_dd = x[nf + 3];

    d.I_sum = x.head(nf).sum();
    d.U_O = (U_C + p.R_C * d.I_sum) / r;
    d.e = p.U_ref - d.U_O;
    d.U_a = U_ad + U_ai + g.K_p * d.e + U_dd;
    d.D_0 = (p.U_ref + d.U_a) / p.U_S;

    double dI_sum = 0.0;
    Eigen::VectorXd dI(nf);
    for (int j = 0; j < nf; ++j) {
        const double alpha = static_cast<double>((mask >> j) & 1);
        dI[j] = (alpha * p.U_S - x[j] * p.R_L - d.U_O) / p.L;
        dI_sum += dI[j];
    }
    d.dU_C = (d.I_sum - d.U_O / d.R_load) / p.C;
    const double dU_O = (d.dU_C + p.R_C * dI_sum) / r;
    d.de = -dU_O;

    // Second derivative of the error through the control-cycle expression,
    // with the comparator frozen inside the segment.
    const double d2U_C = (dI_sum - d.dU_C / d.R_load) / p.C;
    double d2I_sum = 0.0;
    for (int j = 0; j < nf; ++j) d2I_sum += (-p.R_L * dI[j] - dU_O) / p.L;
    const double d2U_O = (d2U_C + p.R_C * d2I_sum) / r;
    d.d2e = -d2U_O;

    if (deriv) {
        deriv->resize(nf + 4);
        deriv->head(nf) = dI;
        (*deriv)[nf] = d.dU_C;
        (*deriv)[nf + 1] = (g.K_d * d.de - U_ad) / g.T_d;
        (*deriv)[nf + 2] = g.K_i * d.e;
        (*deriv)[nf + 3] = (g.K_dd * d.d2e - U_dd) / g.T_dd;
    }
    return d;
}

Eigen::VectorXd FullModel::rhs(double t, const Eigen::VectorXd& x,
                               std::uint64_t mask) const {
    Eigen::VectorXd dx;
    derived(t, x, mask, &dx);
    return dx;
}

std::vector<double> FullModel::event_times() const {
    if (params_.load_event.enabled()) return {params_.load_event.t_step};
    return {};
}

std::string FullModel::event_name(double) const { return "load_step"; }

void FullModel::apply_event(double, Eigen::VectorXd&) const {
    // the differential states are continuous across the load step; the
    // algebraic output picks the new load up from the mask
}

Eigen::VectorXd FullModel::pack(const ConverterState& s) const {
    const int nf = params_.N_f;
    Eigen::VectorXd x(nf + 4);
    x.head(nf) = s.I;
    x[nf] = s.U_C;
    x[nf + 1] = s.U_ad;
    x[nf + 2] = s.U_ai;
    x[nf + 3] = s.U_dd;
    return x;
}

void FullModel::unpack(double t, const Eigen::VectorXd& x, ConverterState& s) const {
    const int nf = params_.N_f;
    s.t = t;
    s.I = x.head(nf);
    s.U_C = x[nf];
    s.U_ad = x[nf + 1];
    s.U_ai = x[nf + 2];
    s.U_dd = x[nf + 3];

    const std::uint64_t m = mask(t, x);
    const Derived d = derived(t, x, m);
    s.U_O = d.U_O;
    s.e = d.e;
    s.de_dt = d.de;
    s.d2e_dt2 = d.d2e;
    s.U_a = d.U_a;
    s.D_0 = d.D_0;
    s.alpha.resize(static_cast<std::size_t>(nf));
    for (int j = 0; j < nf; ++j) s.alpha[static_cast<std::size_t>(j)] = static_cast<int>((m >> j) & 1);
    s.R_load_current = d.R_load;
}

} // namespace detail

Eigen::VectorXd derivatives(const ConverterState& s, const ConverterParams& p,
                            const ControllerGains& g) {
    detail::FullModel model(p, g, AlphaMode::Pwm);
    const Eigen::VectorXd x = model.pack(s);
    return model.rhs(s.t, x, model.mask(s.t, x));
}

void refresh_derived(ConverterState& s, const ConverterParams& p,
                     const ControllerGains& g, AlphaMode mode) {
    detail::FullModel model(p, g, mode);
    const Eigen::VectorXd x = model.pack(s);
    model.unpack(s.t, x, s);
}

ConverterState make_initial_state(const ConverterParams& p, const ControllerGains& g,
                                  AlphaMode mode) {
    ConverterState s;
    s.t = 0.0;
    s.I = Eigen::VectorXd::Zero(p.N_f);
    s.U_C = p.U_ref;
    refresh_derived(s, p, g, mode);
    return s;
}

ConverterState step(const ConverterState& s, double h, const ConverterParams& p,
                    const ControllerGains& g, AlphaMode mode) {
    if (h <= 0) throw std::invalid_argument("step size must be > 0");
    detail::FullModel model(p, g, mode);
    StepEngine<detail::FullModel> engine(model);
    double t = s.t;
    Eigen::VectorXd x = model.pack(s);
    engine.advance(t, x, h, nullptr);
    ConverterState out;
    model.unpack(t, x, out);
    return out;
}

Waveform simulate(const ConverterParams& p, const ControllerGains& g,
                  const ConverterState& init, double horizon, double h,
                  AlphaMode mode, ConverterState* final_state) {
    if (horizon <= 0) throw std::invalid_argument("horizon must be > 0");
    if (h <= 0) throw std::invalid_argument("step size must be > 0");
    if (h > p.T / 200.0)
        throw std::invalid_argument("step size must satisfy h <= T/200");

    detail::FullModel model(p, g, mode);
    StepEngine<detail::FullModel> engine(model);

    std::vector<std::string> names = {"U_O", "U_C", "e", "D0", "U_a", "U_ad", "U_ai", "U_dd"};
    for (int j = 1; j <= p.N_f; ++j) names.push_back("I_" + std::to_string(j));
    for (int j = 1; j <= p.N_f; ++j) names.push_back("alpha_" + std::to_string(j));
    names.push_back("R_load");
    Waveform wave(names);

    ConverterState s = init;
    auto emit = [&](const ConverterState& st) {
        std::vector<double> row = {st.U_O, st.U_C, st.e, st.D_0, st.U_a, st.U_ad, st.U_ai, st.U_dd};
        for (int j = 0; j < p.N_f; ++j) row.push_back(st.I[j]);
        for (int j = 0; j < p.N_f; ++j) row.push_back(static_cast<double>(st.alpha[static_cast<std::size_t>(j)]));
        row.push_back(st.R_load_current);
        wave.append(st.t, row);
    };

    refresh_derived(s, p, g, mode);
    emit(s);

    const double t0 = init.t;
    const long steps = static_cast<long>(std::ceil(horizon / h - 1e-9));
    double t = t0;
    Eigen::VectorXd x = model.pack(s);
    std::vector<StepEngine<detail::FullModel>::EventRecord> events;
    for (long i = 1; i <= steps; ++i) {
        const double target = (i == steps) ? t0 + horizon : t0 + static_cast<double>(i) * h;
        engine.advance(t, x, target - t, &events);
        model.unpack(t, x, s);
        emit(s);
    }
    for (const auto& ev : events) wave.add_event(ev.t, ev.kind);
    if (final_state) *final_state = s;
    return wave;
}

} // namespace dcdc
