#pragma once

// Classical Pais-Uhlenbeck oscillator L = (q''^2 - W^4 q^2)/2 in Ostrogradsky
// variables, its decoupling into an oscillator and an inverted oscillator,
// and the exponentially growing observable X.

#include <array>
#include <span>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "common.hpp"

namespace pulab {

struct PUParams {
    double omega_cap = 1.0;
    double hbar = 1.0;

    void validate() const {
        require(std::isfinite(omega_cap) && omega_cap > 0.0, "PUParams: omega_cap must be > 0");
        require(std::isfinite(hbar) && hbar > 0.0, "PUParams: hbar must be > 0");
    }
};

/// Ostrogradsky phase point: q1 = q, q2 = q', pi1 = -q''', pi2 = q''.
struct PhaseState {
    double q1 = 0.0, q2 = 0.0, pi1 = 0.0, pi2 = 0.0;

    std::array<double, 4> as_array() const { return {q1, q2, pi1, pi2}; }
    static PhaseState from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
    bool finite() const {
        return std::isfinite(q1) && std::isfinite(q2) && std::isfinite(pi1) && std::isfinite(pi2);
    }
};

/// Oscillator pair (x1, p1) and inverted-oscillator pair (x2, p2).
struct DecoupledState {
    double x1 = 0.0, p1 = 0.0, x2 = 0.0, p2 = 0.0;
};

inline double lagrangian_pu(double q_ddot, double q, const PUParams& p) {
    const double w2 = p.omega_cap * p.omega_cap;
    return 0.5 * (q_ddot * q_ddot - w2 * w2 * q * q);
}

inline PhaseState ostrogradsky_state(double q, double q_dot, double q_ddot, double q_dddot) {
    return {q, q_dot, -q_dddot, q_ddot};
}

inline double hamiltonian_pu(const PhaseState& s, const PUParams& p) {
    const double w2 = p.omega_cap * p.omega_cap;
    return s.pi1 * s.q2 + 0.5 * s.pi2 * s.pi2 + 0.5 * w2 * w2 * s.q1 * s.q1;
}

/// Sum of the magnitudes of the three Hamiltonian terms; the natural scale for
/// judging cancellation when H is evaluated on states carrying the e^{Wt} mode.
inline double hamiltonian_pu_scale(const PhaseState& s, const PUParams& p) {
    const double w2 = p.omega_cap * p.omega_cap;
    return std::abs(s.pi1 * s.q2) + 0.5 * s.pi2 * s.pi2 + 0.5 * w2 * w2 * s.q1 * s.q1;
}

/// Hamilton's equations of H = pi1 q2 + pi2^2/2 + W^4 q1^2/2.
inline PhaseState canonical_flow(const PhaseState& s, const PUParams& p) {
    const double w2 = p.omega_cap * p.omega_cap;
    return {s.q2, s.pi2, -w2 * w2 * s.q1, -s.pi1};
}

/// Canonical map (q1, q2, pi1, pi2) -> (X1, P1, X2, P2). This is the inverse
/// of the substitution
///   q1 = (X1 + X2)/(sqrt2 W),   q2 = (P1 - P2)/(sqrt2 W),
///   pi1 = W (P1 + P2)/sqrt2,    pi2 = W (X2 - X1)/sqrt2.
inline DecoupledState decouple(const PhaseState& s, const PUParams& p) {
    const double w = p.omega_cap;
    return {(w * s.q1 - s.pi2 / w) / sqrt2, (w * s.q2 + s.pi1 / w) / sqrt2,
            (w * s.q1 + s.pi2 / w) / sqrt2, (s.pi1 / w - w * s.q2) / sqrt2};
}

inline PhaseState recouple(const DecoupledState& d, const PUParams& p) {
    const double w = p.omega_cap;
    return {(d.x1 + d.x2) / (sqrt2 * w), (d.p1 - d.p2) / (sqrt2 * w), w * (d.p1 + d.p2) / sqrt2,
            w * (d.x2 - d.x1) / sqrt2};
}

inline double h_oscillator(double x, double p, double omega) { return 0.5 * (p * p + omega * omega * x * x); }
inline double h_inverted(double x, double p, double omega) { return 0.5 * (p * p - omega * omega * x * x); }

/// H = h_osc(X1, P1) - h_inv(X2, P2), both with frequency W.
inline double hamiltonian_decoupled(const DecoupledState& d, const PUParams& p) {
    return h_oscillator(d.x1, d.p1, p.omega_cap) - h_inverted(d.x2, d.p2, p.omega_cap);
}

inline double x_observable(const PhaseState& s, const PUParams& p) {
    const double w = p.omega_cap;
    return s.pi1 - w * s.pi2 - w * w * w * s.q1 - w * w * s.q2;
}

inline double x_in_decoupled(const DecoupledState& d, const PUParams& p) {
    const double w = p.omega_cap;
    return sqrt2 * w * (d.p2 - w * d.x2);
}

/// Jacobian of decouple in the ordering (q1, q2, pi1, pi2) -> (X1, X2, P1, P2)
/// (coordinates first, then momenta), by central differences. The map is
/// linear, so the difference quotient is exact up to rounding.
inline std::array<std::array<double, 4>, 4> decouple_jacobian(const PhaseState& s, const PUParams& p,
                                                              double step = 1.0) {
    std::array<std::array<double, 4>, 4> jac{};
    for (int j = 0; j < 4; ++j) {
        auto plus = s.as_array(), minus = s.as_array();
        plus[j] += step;
        minus[j] -= step;
        const auto dp = decouple(PhaseState::from_array(plus), p);
        const auto dm = decouple(PhaseState::from_array(minus), p);
        const std::array<double, 4> fp{dp.x1, dp.x2, dp.p1, dp.p2};
        const std::array<double, 4> fm{dm.x1, dm.x2, dm.p1, dm.p2};
        for (int i = 0; i < 4; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * step);
    }
    return jac;
}

/// max |J^T S J - S| with S the standard symplectic form on R^4.
inline double symplectic_defect(const std::array<std::array<double, 4>, 4>& jac) {
    auto omega = [](int i, int j) -> double {
        if (j == i + 2) return 1.0;
        if (i == j + 2) return -1.0;
        return 0.0;
    };
    double worst = 0.0;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            double acc = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) acc += jac[i][a] * omega(i, j) * jac[j][b];
            worst = std::max(worst, std::abs(acc - omega(a, b)));
        }
    }
    return worst;
}

/// Exact solution q(t) = c+ e^{iWt} + c- e^{-iWt} + c_grow e^{Wt} + c_decay e^{-Wt}.
class ClassicalSolutionCoeffs {
public:
    ClassicalSolutionCoeffs(cplx c_osc_plus, cplx c_osc_minus, double c_grow, double c_decay, double omega_cap)
        : c_plus_(c_osc_plus), c_minus_(c_osc_minus), c_grow_(c_grow), c_decay_(c_decay), omega_(omega_cap) {
        require(omega_cap > 0.0, "ClassicalSolutionCoeffs: omega_cap must be > 0");
        const double tol = 1e-14 * std::max(1.0, std::abs(c_osc_plus));
        require(std::abs(c_osc_minus - std::conj(c_osc_plus)) <= tol,
                "ClassicalSolutionCoeffs: real trajectory requires c_osc_minus = conj(c_osc_plus)");
    }

    static ClassicalSolutionCoeffs real(cplx c_osc_plus, double c_grow, double c_decay, double omega_cap) {
        return {c_osc_plus, std::conj(c_osc_plus), c_grow, c_decay, omega_cap};
    }

    static ClassicalSolutionCoeffs from_state(const PhaseState& s, const PUParams& p) {
        const double w = p.omega_cap;
        const double q = s.q1, qd = s.q2, qdd = s.pi2, qddd = -s.pi1;
        const double sum_gd = 0.5 * (q + qdd / (w * w));
        const double diff_gd = 0.5 * (qd / w + qddd / (w * w * w));
        const double re2 = 0.5 * (q - qdd / (w * w));
        const double im2 = 0.5 * (qd / w - qddd / (w * w * w));
        return real(cplx(re2, -im2) / 2.0, 0.5 * (sum_gd + diff_gd), 0.5 * (sum_gd - diff_gd), w);
    }

    /// k-th time derivative of q at t, k = 0..3.
    double derivative(int k, double t) const {
        const double w = omega_;
        const cplx iw = I * w;
        const cplx osc = c_plus_ * std::pow(iw, k) * std::exp(iw * t) + c_minus_ * std::pow(-iw, k) * std::exp(-iw * t);
        return osc.real() + c_grow_ * std::pow(w, k) * std::exp(w * t) + c_decay_ * std::pow(-w, k) * std::exp(-w * t);
    }

    PhaseState state(double t) const {
        return ostrogradsky_state(derivative(0, t), derivative(1, t), derivative(2, t), derivative(3, t));
    }

    cplx c_osc_plus() const { return c_plus_; }
    cplx c_osc_minus() const { return c_minus_; }
    double c_grow() const { return c_grow_; }
    double c_decay() const { return c_decay_; }

private:
    cplx c_plus_, c_minus_;
    double c_grow_, c_decay_, omega_;
};

struct FlowOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double initial_step = 1e-3;
};

/// Integrates the canonical flow with adaptive Dormand-Prince 5(4) and dense
/// output; returns the state at every time in `times` (ascending, times[0] is
/// the time of `initial`).
inline std::vector<PhaseState> integrate_flow(const PhaseState& initial, const PUParams& params,
                                              std::span<const double> times, const FlowOptions& opt = {}) {
    namespace ode = boost::numeric::odeint;
    using state_t = std::array<double, 4>;
    params.validate();
    require(!times.empty(), "integrate_flow: empty time grid");

    auto rhs = [&params](const state_t& x, state_t& dxdt, double) {
        dxdt = canonical_flow(PhaseState::from_array(x), params).as_array();
    };
    std::vector<PhaseState> out;
    out.reserve(times.size());
    state_t x = initial.as_array();
    if (times.size() == 1) return {initial};
    auto stepper = ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<state_t>());
    ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), opt.initial_step,
                         [&out](const state_t& s, double) { out.push_back(PhaseState::from_array(s)); });
    return out;
}

inline std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
    require(n >= 2, "uniform_grid: need at least two points");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

/// Max over interior points of |d4 q - h^4 W^4 q| / (sum |stencil terms| + h^4 W^4 |q|),
/// where d4 is the five-point fourth difference. Second-order accurate in h.
inline double fourth_difference_residual(std::span<const double> q, double h, const PUParams& p) {
    require(q.size() >= 5, "fourth_difference_residual: need at least five samples");
    const double w4h4 = std::pow(p.omega_cap * h, 4);
    double worst = 0.0;
    for (std::size_t j = 2; j + 2 < q.size(); ++j) {
        const double d4 = q[j + 2] - 4.0 * q[j + 1] + 6.0 * q[j] - 4.0 * q[j - 1] + q[j - 2];
        const double scale = std::abs(q[j + 2]) + 4.0 * std::abs(q[j + 1]) + 6.0 * std::abs(q[j]) +
                             4.0 * std::abs(q[j - 1]) + std::abs(q[j - 2]) + w4h4 * std::abs(q[j]);
        if (scale > 0.0) worst = std::max(worst, std::abs(d4 - w4h4 * q[j]) / scale);
    }
    return worst;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "fit_line: need matching samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i)
        f.max_residual = std::max(f.max_residual, std::abs(y[i] - (f.intercept + f.slope * x[i])));
    return f;
}

struct GrowthFit {
    LinearFit fit;
    std::vector<double> times;
    std::vector<double> log_abs_x;
};

/// Integrates from `initial`, samples log|X(t)| on the window [0.5, 3]/W and
/// fits a line; the slope is the classical growth rate of X.
inline GrowthFit x_growth_fit(const PhaseState& initial, const PUParams& p, std::size_t samples = 101,
                              const FlowOptions& opt = {}) {
    const double w = p.omega_cap;
    std::vector<double> times = uniform_grid(0.0, 3.0 / w, 6 * samples);
    auto traj = integrate_flow(initial, p, times, opt);
    GrowthFit g;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.5 / w) continue;
        const double x = x_observable(traj[i], p);
        if (x == 0.0) throw InvalidArgument("x_growth_fit: X vanishes; state has no growing mode");
        g.times.push_back(times[i]);
        g.log_abs_x.push_back(std::log(std::abs(x)));
    }
    g.fit = fit_line(g.times, g.log_abs_x);
    return g;
}

}  // namespace pulab
