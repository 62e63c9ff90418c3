#pragma once

// Generic adaptive Dormand-Prince 5(4) integrator with sign-change event
// location. Model-specific drivers live in integrator.hpp; this file knows
// nothing about charts.

#include "fso/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace fso {

enum class Direction { Up, Down, Any };

namespace ode {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
struct Event {
    std::function<double(double, const Vec<N>&)> g;
    Direction direction = Direction::Any;
    bool halting = false;
};

template <std::size_t N>
struct Hit {
    double t = 0.0;
    std::size_t index = 0;
    Vec<N> y{};
};

struct Settings {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 picks a small fraction of the span
    double event_tol = 1e-12;   // bracket width in time
    std::uint64_t max_steps = 0;  // 0 = unlimited
    double sample_interval = 0.0;  // 0 = keep every accepted step
    bool record_samples = true;
};

struct Stats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t rhs_evals = 0;
};

template <std::size_t N>
struct Result {
    std::vector<double> t;
    std::vector<Vec<N>> y;
    std::vector<Hit<N>> hits;
    bool halted = false;
    std::size_t halting_index = 0;
    Stats stats;
};

/// Thrown on step underflow or exhausted step budget; carries the last accepted point.
template <std::size_t N>
struct Interrupted {
    ErrorKind kind;
    double t;
    Vec<N> y;
};

namespace tableau {
// Dormand-Prince 5(4), FSAL.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace tableau

/// One DP5 step of size h from (t, y) with k1 = f(t, y). Writes the 5th-order
/// increment (without adding it to y), the error vector and k7 = f(t + h, y + increment).
template <std::size_t N, class Rhs>
inline void dp5_step(Rhs& f, double t, const Vec<N>& y, const Vec<N>& k1, double h, Vec<N>& incr, Vec<N>& err,
                     Vec<N>& k7) {
    using namespace tableau;
    Vec<N> tmp, k2, k3, k4, k5, k6;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, tmp, k6);
    for (std::size_t i = 0; i < N; ++i) {
        incr[i] = h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        tmp[i] = y[i] + incr[i];
    }
    f(t + h, tmp, k7);
    for (std::size_t i = 0; i < N; ++i)
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
}

namespace detail {

inline bool crossed(double g0, double g1, Direction d) {
    const bool up = g0 < 0.0 && g1 >= 0.0;
    const bool down = g0 > 0.0 && g1 <= 0.0;
    switch (d) {
        case Direction::Up: return up;
        case Direction::Down: return down;
        case Direction::Any: return up || down;
    }
    return false;
}

}  // namespace detail

/// Integrate y' = f(t, y) from t0 to t_end.
///
/// `cap(t, y)` bounds the step size at each point; `after_step(t, y)` runs on every
/// accepted, non-halted state and may throw to abort (used for chart checks).
/// Events are bracketed per accepted step and refined by bisection, re-stepping
/// from the start of the step so the located state carries full step accuracy.
template <std::size_t N, class Rhs, class Cap, class AfterStep>
Result<N> solve(Rhs&& f, const Vec<N>& y0, double t0, double t_end, std::span<const Event<N>> events,
                const Settings& s, Cap&& cap, AfterStep&& after_step) {
    require(t_end > t0, ErrorKind::InvalidArgument, "integration span must be positive");
    require(s.rel_tol > 0.0 && s.abs_tol > 0.0, ErrorKind::InvalidArgument, "tolerances must be positive");

    Result<N> out;
    Stats& st = out.stats;
    auto rhs = [&](double t, const Vec<N>& y, Vec<N>& dy) {
        ++st.rhs_evals;
        f(t, y, dy);
    };

    Vec<N> y = y0;
    Vec<N> comp{};  // Kahan compensation for y
    double t = t0;
    double t_comp = 0.0;
    Vec<N> k1;
    rhs(t, y, k1);

    if (s.record_samples) {
        out.t.push_back(t);
        out.y.push_back(y);
    }
    double last_sample = t;

    std::vector<double> g_prev(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) g_prev[i] = events[i].g(t, y);

    const double span = t_end - t0;
    double h = s.initial_step > 0.0 ? s.initial_step : 1e-6 * span;
    h = std::min({h, s.max_step, cap(t, y)});

    Vec<N> incr, err, k7, y_new;
    std::vector<double> g_new(events.size());
    bool last_rejected = false;

    while (t < t_end) {
        if (s.max_steps != 0 && st.accepted >= s.max_steps) {
            throw Interrupted<N>{ErrorKind::Infeasible, t, y};
        }
        double h_cap = std::min(s.max_step, cap(t, y));
        h = std::min(h, h_cap);
        bool final_step = false;
        if (t + h >= t_end) {
            h = t_end - t;
            final_step = true;
        }
        if (!(h > 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))) {
            throw Interrupted<N>{ErrorKind::StepUnderflow, t, y};
        }

        dp5_step<N>(rhs, t, y, k1, h, incr, err, k7);

        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            y_new[i] = y[i] + incr[i];
            const double sc = s.abs_tol + s.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            const double r = err[i] / sc;
            acc += r * r;
        }
        const double en = std::sqrt(acc / static_cast<double>(N));

        if (!(en <= 1.0)) {
            ++st.rejected;
            const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
            h *= fac;
            last_rejected = true;
            continue;
        }

        // Compensated update of y and t.
        for (std::size_t i = 0; i < N; ++i) {
            const double d = incr[i] + comp[i];
            y_new[i] = y[i] + d;
            comp[i] = d - (y_new[i] - y[i]);
        }
        double t_new;
        if (final_step) {
            t_new = t_end;
        } else {
            const double d = h + t_comp;
            t_new = t + d;
            t_comp = d - (t_new - t);
        }

        // Events.
        double theta_halt = 2.0;
        std::size_t halt_index = 0;
        struct Pending {
            double theta;
            std::size_t index;
            Vec<N> y;
        };
        std::vector<Pending> pending;
        for (std::size_t i = 0; i < events.size(); ++i) {
            g_new[i] = events[i].g(t_new, y_new);
            if (!detail::crossed(g_prev[i], g_new[i], events[i].direction)) continue;
            double lo = 0.0, hi = 1.0;
            double g_lo = g_prev[i];
            Vec<N> y_hi = y_new;
            Vec<N> inc2, err2, k72, ym;
            while ((hi - lo) * h > s.event_tol && hi - lo > 1e-15) {
                const double mid = 0.5 * (lo + hi);
                dp5_step<N>(rhs, t, y, k1, mid * h, inc2, err2, k72);
                for (std::size_t j = 0; j < N; ++j) ym[j] = y[j] + inc2[j];
                const double gm = events[i].g(t + mid * h, ym);
                if ((g_lo < 0.0) == (gm < 0.0) && gm != 0.0) {
                    lo = mid;
                    g_lo = gm;
                } else {
                    hi = mid;
                    y_hi = ym;
                }
            }
            if (hi == 1.0) y_hi = y_new;
            pending.push_back({hi, i, y_hi});
            if (events[i].halting && hi < theta_halt) {
                theta_halt = hi;
                halt_index = i;
            }
        }

        if (!pending.empty()) {
            std::sort(pending.begin(), pending.end(),
                      [](const Pending& a, const Pending& b) { return a.theta < b.theta; });
            for (const auto& p : pending) {
                if (p.theta > theta_halt) break;
                const double te = (p.theta == 1.0) ? t_new : t + p.theta * h;
                out.hits.push_back({te, p.index, p.y});
            }
        }

        ++st.accepted;
        if (theta_halt <= 1.0) {
            const double te = (theta_halt == 1.0) ? t_new : t + theta_halt * h;
            Vec<N> ye{};
            for (const auto& p : pending)
                if (p.index == halt_index && p.theta == theta_halt) ye = p.y;
            out.halted = true;
            out.halting_index = out.hits.size() - 1;
            for (std::size_t k = 0; k < out.hits.size(); ++k)
                if (out.hits[k].index == halt_index && out.hits[k].t == te) out.halting_index = k;
            if (s.record_samples) {
                out.t.push_back(te);
                out.y.push_back(ye);
            } else {
                out.t.assign(1, te);
                out.y.assign(1, ye);
            }
            return out;
        }

        after_step(t_new, y_new);

        t = t_new;
        y = y_new;
        k1 = k7;
        for (std::size_t i = 0; i < events.size(); ++i) g_prev[i] = g_new[i];

        if (s.record_samples && (s.sample_interval <= 0.0 || t - last_sample >= s.sample_interval || t >= t_end)) {
            out.t.push_back(t);
            out.y.push_back(y);
            last_sample = t;
        }

        double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
        fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
        last_rejected = false;
        h *= fac;
    }

    if (!s.record_samples) {
        out.t.assign(1, t);
        out.y.assign(1, y);
    }
    return out;
}

template <std::size_t N, class Rhs>
Result<N> solve(Rhs&& f, const Vec<N>& y0, double t0, double t_end, std::span<const Event<N>> events,
                const Settings& s) {
    return solve<N>(
        std::forward<Rhs>(f), y0, t0, t_end, events, s,
        [](double, const Vec<N>&) { return std::numeric_limits<double>::infinity(); },
        [](double, const Vec<N>&) {});
}

}  // namespace ode
}  // namespace fso
