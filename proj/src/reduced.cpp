#include "dcdc/reduced.hpp"

#include <cmath>
#include <stdexcept>

#include "dcdc/sim_engine.hpp"

namespace dcdc {

ReducedCoeffs build_reduced(const ConverterParams& p, const ControllerGains& g) {
    p.validate();
    g.validate();

    ReducedCoeffs c;
    const double R_load = p.R_load_initial;
    const double r = 1.0 + p.R_C / R_load;

    c.r_factor = r;
    c.p11 = -p.R_L / p.L;
    c.p12 = static_cast<double>(p.N_f) / p.L;
    c.p21 = -1.0 / (r * p.C) + p.R_C * p.R_L / (r * p.L);
    c.p22 = -(1.0 / (r * p.C * R_load) + p.R_C * static_cast<double>(p.N_f) / (r * p.L));

    c.a = g.a();
    c.b = g.b();

    c.kernel_c_i = g.K_i;
    c.kernel_c_a = -g.K_d * c.a / g.T_d;
    c.kernel_c_b = g.K_dd * c.b * c.b / g.T_dd;

    c.phi_c_ad = 1.0;
    c.phi_c_dd = 1.0;
    c.phi_c_ea = -g.K_d / g.T_d;
    c.phi_c_eb = g.K_dd * c.b / g.T_dd;
    c.phi_c_de = -g.K_dd / g.T_dd;

    c.kd_eff = g.K_d - g.K_dd * c.b;
    c.K2 = g.K_dd;
    c.U2 = p.U_ref;
    c.U3 = p.U_S;

    c.f1_alpha = p.U_S / p.L;
    c.f1_ref = static_cast<double>(p.N_f) * p.U_ref / p.L;
    c.f2_f1 = -p.R_C / r;
    c.f2_const = p.U_ref / (r * p.C * R_load);

    c.R_L = p.R_L;
    c.R_C = p.R_C;
    c.C = p.C;
    c.L = p.L;
    c.R_load = R_load;
    c.U_S = p.U_S;
    c.U_ref = p.U_ref;
    c.N_f = p.N_f;
    return c;
}

double phi(double t, const ReducedCoeffs& c, const PhiInit& init) {
    const double ea = std::exp(c.a * t);
    const double eb = std::exp(c.b * t);
    return c.phi_c_ad * ea * init.U_ad0 + c.phi_c_dd * eb * init.U_dd0 +
           c.phi_c_ea * ea * init.e0 + c.phi_c_eb * eb * init.e0 +
           c.phi_c_de * eb * init.de0;
}

double kernel_eval(const ReducedCoeffs& c, double u) {
    return c.kernel_c_i + c.kernel_c_a * std::exp(c.a * u) +
           c.kernel_c_b * std::exp(c.b * u);
}

namespace detail {

ReducedModel::ReducedModel(const ReducedCoeffs& coeffs, const ConverterParams& p,
                           const ControllerGains& g, const PhiInit& phi_init,
                           const ReducedOptions& opts)
    : pre_(coeffs), post_(coeffs), params_(p), gains_(g), phi_init_(phi_init),
      opts_(opts),
      comparators_(opts.comparator == ReducedComparator::PerPhase ? p.N_f : 1) {
    if (p.load_event.enabled()) {
        ConverterParams stepped = p;
        stepped.R_load_initial = p.R_load_initial * p.load_event.factor;
        stepped.load_event = LoadEvent{};
        post_ = build_reduced(stepped, g);
    }
}

const ReducedCoeffs& ReducedModel::coeffs_at(std::uint64_t mask) const {
    return ((mask >> comparators_) & 1) ? post_ : pre_;
}

double ReducedModel::forcing_f1(const ReducedCoeffs& c, double alpha_sum) const {
    // Per-phase: F₁ = (U_S/ℒ)·Σα_j − N_f·U_ref/ℒ. The single comparator is
    // the same expression with Σα_j = N_f·α.
    const double scale = opts_.comparator == ReducedComparator::PerPhase
                             ? 1.0
                             : static_cast<double>(params_.N_f);
    return c.f1_alpha * scale * alpha_sum - c.f1_ref;
}

ReducedModel::Derived ReducedModel::derived(double t, const Eigen::VectorXd& x,
                                            bool load_active) const {
    const ReducedCoeffs& c = load_active ? post_ : pre_;
    const double y1 = x[0], y2 = x[1];
    const double conv = x[2] + x[3] + x[4];

    Derived d{};
    d.phi_t = phi(t, c, phi_init_);

    auto comparator_pass = [&](double U_a) {
        const double D_0 = (c.U2 + U_a) / c.U3;
        std::uint64_t bits = 0;
        double sum = 0.0;
        for (int j = 0; j < comparators_; ++j) {
            const double offset = opts_.comparator == ReducedComparator::PerPhase
                                      ? params_.phase_offset(j)
                                      : 0.0;
            const int a = opts_.alpha_mode == AlphaMode::Frozen
                              ? 1
                              : pwm_alpha(t, offset, params_.T, D_0);
            if (a) {
                bits |= std::uint64_t{1} << j;
                sum += 1.0;
            }
        }
        return std::tuple<double, std::uint64_t, double>(D_0, bits, sum);
    };

    double U_a = c.kd_eff * y2 + conv + d.phi_t;
    auto [D_0, bits, sum] = comparator_pass(U_a);
    if (c.K2 != 0.0) {
        // dy₂ feeds back into U_a; resolve the comparator with the dy₂ term
        // evaluated at the first-pass switch state.
        const double F1 = forcing_f1(c, sum);
        const double F2 = c.f2_f1 * F1 + c.f2_const;
        const double dy2 = c.p21 * y1 + c.p22 * y2 + F2;
        U_a += c.K2 * dy2;
        std::tie(D_0, bits, sum) = comparator_pass(U_a);
    }
    d.U_a = U_a;
    d.D_0 = D_0;
    d.alpha_bits = bits;
    d.alpha_sum = sum;
    return d;
}

std::uint64_t ReducedModel::mask(double t, const Eigen::VectorXd& x) const {
    const bool load = params_.load_event.active(t);
    const Derived d = derived(t, x, load);
    std::uint64_t m = d.alpha_bits;
    if (load) m |= std::uint64_t{1} << comparators_;
    return m;
}

Eigen::VectorXd ReducedModel::rhs(double t, const Eigen::VectorXd& x,
                                  std::uint64_t mask) const {
    (void)t;
    const ReducedCoeffs& c = coeffs_at(mask);
    double alpha_sum = 0.0;
    for (int j = 0; j < comparators_; ++j) alpha_sum += static_cast<double>((mask >> j) & 1);

    const double y1 = x[0], y2 = x[1];
    const double F1 = forcing_f1(c, alpha_sum);
    const double F2 = c.f2_f1 * F1 + c.f2_const;

    Eigen::VectorXd dx(5);
    dx[0] = c.p11 * y1 + c.p12 * y2 + F1;
    dx[1] = c.p21 * y1 + c.p22 * y2 + F2;
    dx[2] = c.kernel_c_i * y2;
    dx[3] = c.a * x[3] + c.kernel_c_a * y2;
    dx[4] = c.b * x[4] + c.kernel_c_b * y2;
    return dx;
}

std::vector<double> ReducedModel::event_times() const {
    if (params_.load_event.enabled()) return {params_.load_event.t_step};
    return {};
}

std::string ReducedModel::event_name(double) const { return "load_step"; }

void ReducedModel::apply_event(double, Eigen::VectorXd& x) const {
    // U_C and ΣI_j are continuous, so U_O scales by r⁻/r⁺ at the load step.
    x[1] = pre_.U_ref - (pre_.r_factor / post_.r_factor) * (pre_.U_ref - x[1]);
}

} // namespace detail

Waveform simulate_reduced(const ReducedCoeffs& coeffs, const ConverterParams& p,
                          const ControllerGains& g, const ReducedState& init,
                          const PhiInit& phi_init, double horizon, double h,
                          const ReducedOptions& opts, ReducedState* final_state) {
    if (horizon <= 0) throw std::invalid_argument("horizon must be > 0");
    if (h <= 0) throw std::invalid_argument("step size must be > 0");
    if (h > p.T / 200.0)
        throw std::invalid_argument("step size must satisfy h <= T/200");

    detail::ReducedModel model(coeffs, p, g, phi_init, opts);
    StepEngine<detail::ReducedModel> engine(model);

    Waveform wave({"y1", "y2", "U_a", "D0", "alpha", "phi"});

    double t = init.t;
    Eigen::VectorXd x(5);
    x << init.y1, init.y2, init.s_i, init.s_a, init.s_b;

    const int comparators = model.comparator_count();
    auto emit = [&]() {
        const bool load = p.load_event.active(t);
        const auto d = model.derived(t, x, load);
        wave.append(t, {x[0], x[1], d.U_a, d.D_0,
                        d.alpha_sum / static_cast<double>(comparators), d.phi_t});
    };

    emit();
    const double t0 = init.t;
    const long steps = static_cast<long>(std::ceil(horizon / h - 1e-9));
    std::vector<StepEngine<detail::ReducedModel>::EventRecord> events;
    for (long i = 1; i <= steps; ++i) {
        const double target = (i == steps) ? t0 + horizon : t0 + static_cast<double>(i) * h;
        engine.advance(t, x, target - t, &events);
        emit();
    }
    for (const auto& ev : events) wave.add_event(ev.t, ev.kind);

    if (final_state) {
        const bool load = p.load_event.active(t);
        const auto d = model.derived(t, x, load);
        *final_state = {t, x[0], x[1], x[2], x[3], x[4], d.U_a, d.D_0,
                        d.alpha_sum / static_cast<double>(comparators)};
    }
    return wave;
}

std::pair<ReducedState, PhiInit> reduced_init_from_full(const ConverterParams& p,
                                                        const ControllerGains& g,
                                                        const ConverterState& full_init) {
    ConverterState s = full_init;
    refresh_derived(s, p, g);

    ReducedState rs;
    rs.t = s.t;
    rs.y1 = s.I.sum();
    rs.y2 = s.e;
    rs.s_i = rs.s_a = rs.s_b = 0.0;

    PhiInit pi;
    pi.U_ad0 = s.U_ad;
    pi.U_dd0 = s.U_dd;
    pi.e0 = s.e;
    pi.de0 = s.de_dt;
    return {rs, pi};
}

} // namespace dcdc
