#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "dcdc/errors.hpp"

namespace dcdc {

/// Fixed-step classical 4-stage explicit integration with discrete-event
/// handling, shared by the full and the reduced converter models.
///
/// A model provides:
///   int dim() const;
///   Eigen::VectorXd rhs(double t, const Eigen::VectorXd& x, std::uint64_t mask) const;
///   std::uint64_t mask(double t, const Eigen::VectorXd& x) const;
///   std::vector<double> event_times() const;       // known split times, sorted
///   std::string event_name(double t) const;        // label for a known time
///   void apply_event(double t, Eigen::VectorXd& x) const; // state jump at t
///
/// The discrete configuration (comparator outputs, load state) is frozen
/// during the four stages of a step. Known event times split the step
/// exactly; comparator changes detected across a step are localized by
/// bisection to within h_macro·1e-6 and the step is split there.
template <class Model>
class StepEngine {
public:
    explicit StepEngine(const Model& model) : model_(model) {}

    struct EventRecord {
        double t;
        std::string kind;
    };

    /// Advances (t, x) to exactly t + h, splitting at events. Appends any
    /// events encountered to `events` when non-null.
    void advance(double& t, Eigen::VectorXd& x, double h,
                 std::vector<EventRecord>* events) const {
        const double t_end = t + h;
        const double tol = h * 1e-6;
        const double eps = h * 1e-12;
        // More comparator changes per step than this means sub-resolution
        // chattering; the regime is then frozen for the remainder of the step.
        int splits_left = 64;
        while (t_end - t > eps) {
            // Known event times split the segment exactly. A segment that ends
            // on an event commits without comparator detection: the regime
            // boundary is the segment boundary itself.
            double seg_end = t_end;
            for (double te : model_.event_times())
                if (te > t + eps && te < seg_end) seg_end = te;
            bool ends_at_event = false;
            for (double te : model_.event_times())
                if (std::abs(te - seg_end) <= eps) ends_at_event = true;

            const double seg = seg_end - t;
            const std::uint64_t m0 = model_.mask(t, x);
            Eigen::VectorXd x1 = rk4(t, x, seg, m0);
            if (splits_left > 0 && !ends_at_event && seg > tol &&
                model_.mask(seg_end, x1) != m0) {
                --splits_left;
                // Earliest comparator change inside (t, t+seg].
                double lo = 0.0, hi = seg;
                for (int it = 0; it < 80 && hi - lo > tol; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const Eigen::VectorXd xm = rk4(t, x, mid, m0);
                    if (model_.mask(t + mid, xm) == m0) lo = mid;
                    else hi = mid;
                }
                x = rk4(t, x, hi, m0);
                t += hi;
                check_finite(t, x);
                if (events) events->push_back({t, "alpha_switch"});
            } else {
                x = x1;
                t = seg_end;
                check_finite(t, x);
                if (ends_at_event) {
                    model_.apply_event(t, x);
                    if (events)
                        for (double te : model_.event_times())
                            if (std::abs(te - t) <= eps)
                                events->push_back({te, model_.event_name(te)});
                }
            }
        }
        t = t_end;
    }

    Eigen::VectorXd rk4(double t, const Eigen::VectorXd& x, double h,
                        std::uint64_t mask) const {
        const Eigen::VectorXd k1 = model_.rhs(t, x, mask);
        const Eigen::VectorXd k2 = model_.rhs(t + 0.5 * h, x + 0.5 * h * k1, mask);
        const Eigen::VectorXd k3 = model_.rhs(t + 0.5 * h, x + 0.5 * h * k2, mask);
        const Eigen::VectorXd k4 = model_.rhs(t + h, x + h * k3, mask);
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

private:
    static void check_finite(double t, const Eigen::VectorXd& x) {
        if (!x.allFinite())
            throw NonFiniteState("state became non-finite at t = " + std::to_string(t), t);
    }

    const Model& model_;
};

} // namespace dcdc
