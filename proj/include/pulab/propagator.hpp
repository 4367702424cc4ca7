#pragma once

// Propagation kernels for the inverted oscillator h = p^2/2 - w^2 x^2/2, the
// harmonic oscillator, and their product for the Pais-Uhlenbeck system;
// Trotter chains composed exactly in the algebra of complex Gaussians; the
// Fourier check of K(0,0;t) against the continuum eigenfunctions; and the
// imaginary-time continuation that turns periodic for the inverted case.

#include <algorithm>
#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "ostrogradsky.hpp"
#include "quadrature.hpp"
#include "special_functions.hpp"

namespace pulab {

// ---------------------------------------------------------------- closed forms

/// Free kernel (2 pi i hbar t)^{-1/2} exp(i (x-y)^2 / (2 hbar t)).
inline cplx free_propagator(double x, double y, double t, double hbar) {
    require(t != 0.0, "free_propagator: t must be nonzero");
    const cplx pref = cplx(1.0, -sgn(t)) / (2.0 * std::sqrt(pi * hbar * std::abs(t)));
    return pref * std::exp(I * (x - y) * (x - y) / (2.0 * hbar * t));
}

/// x / sinh(x), exact at 0.
inline double x_over_sinh(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : x / std::sinh(x); }

/// Kernel of exp(-i h t / hbar) for h = p^2/2 - w^2 x^2/2.
inline cplx inverted_propagator(double x, double y, double t, double omega, double hbar) {
    require(t != 0.0, "inverted_propagator: t must be nonzero");
    require(omega >= 0.0 && hbar > 0.0, "inverted_propagator: need omega >= 0, hbar > 0");
    const double wt = omega * t;
    const cplx pref = cplx(1.0, -sgn(t)) / (2.0 * std::sqrt(pi * hbar * std::abs(t))) * std::sqrt(x_over_sinh(wt));
    // w / sinh(wt) = (1/t) * wt / sinh(wt)
    const double k = x_over_sinh(wt) / t;
    const double ch = std::cosh(wt);
    return pref * std::exp(I * k / (2.0 * hbar) * ((x * x + y * y) * ch - 2.0 * x * y));
}

/// The inverted kernel as an analytic function of a complex frequency, with
/// the square-root branch continued from omega = 0. omega = i w gives the
/// harmonic kernel for |w t| < pi.
inline cplx inverted_propagator_continued(double x, double y, double t, cplx omega, double hbar) {
    require(t != 0.0, "inverted_propagator_continued: t must be nonzero");
    const cplx wt = omega * t;
    const cplx ratio = std::abs(wt) < 1e-8 ? 1.0 - wt * wt / 6.0 : wt / std::sinh(wt);
    const cplx pref = cplx(1.0, -sgn(t)) / (2.0 * std::sqrt(pi * hbar * std::abs(t))) * std::sqrt(ratio);
    return pref * std::exp(I * ratio / (2.0 * hbar * t) * ((x * x + y * y) * std::cosh(wt) - 2.0 * x * y));
}

/// Mehler kernel of exp(-i h t / hbar), h = p^2/2 + w^2 x^2/2, with the
/// phase advancing by -pi/2 at each focal time. Focal times are rejected.
inline cplx harmonic_propagator(double x, double y, double t, double omega, double hbar) {
    require(t != 0.0, "harmonic_propagator: t must be nonzero");
    require(omega >= 0.0 && hbar > 0.0, "harmonic_propagator: need omega >= 0, hbar > 0");
    const double wt = omega * t;
    if (std::abs(wt) < 1e-8) {
        const double r = 1.0 + wt * wt / 6.0;  // wt / sin(wt)
        const cplx pref = cplx(1.0, -sgn(t)) / (2.0 * std::sqrt(pi * hbar * std::abs(t))) * std::sqrt(r);
        return pref * std::exp(I * r / (2.0 * hbar * t) * ((x * x + y * y) * std::cos(wt) - 2.0 * x * y));
    }
    const double s = std::sin(wt);
    const double cycles = std::abs(wt) / pi;
    if (std::abs(s) < 1e-12 || std::abs(cycles - std::round(cycles)) < 1e-12)
        throw CausticError("harmonic_propagator: focal time, sin(omega t) = 0");
    const int maslov = static_cast<int>(std::floor(cycles));
    const cplx phase = std::exp(-I * sgn(t) * (pi / 4.0 + maslov * pi / 2.0));
    const cplx pref = phase * std::sqrt(omega / (2.0 * pi * hbar * std::abs(s)));
    return pref * std::exp(I * omega / (2.0 * hbar * s) * ((x * x + y * y) * std::cos(wt) - 2.0 * x * y));
}

/// Pais-Uhlenbeck kernel: the oscillator factor evolves forward and the
/// inverted factor, entering the Hamiltonian with a minus sign, takes t -> -t.
inline cplx pu_propagator(double x1p, double x2p, double x1, double x2, double t, const PUParams& p) {
    p.validate();
    return harmonic_propagator(x1p, x1, t, p.omega_cap, p.hbar) * inverted_propagator(x2p, x2, -t, p.omega_cap, p.hbar);
}

// ---------------------------------------------------------------- Gaussian algebra

/// prefactor * exp(i (coeff_xx x^2 + coeff_yy y^2 + coeff_xy x y)).
struct QuadraticKernel {
    cplx coeff_xx = 0.0;
    cplx coeff_yy = 0.0;
    cplx coeff_xy = 0.0;
    cplx prefactor = 1.0;

    cplx operator()(double x, double y) const {
        return prefactor * std::exp(I * (coeff_xx * x * x + coeff_yy * y * y + coeff_xy * x * y));
    }
};

/// Integral over z of first(x, z) * second(z, y). The z-Gaussian must be
/// Fresnel-integrable: Im(s) >= 0 and s != 0 for s = first.yy + second.xx.
inline QuadraticKernel compose(const QuadraticKernel& first, const QuadraticKernel& second) {
    const cplx s = first.coeff_yy + second.coeff_xx;
    if (std::abs(s) == 0.0 || s.imag() < -1e-12 * std::abs(s))
        throw NumericalFailure("compose: Gaussian integral not convergent");
    QuadraticKernel r;
    r.coeff_xx = first.coeff_xx - first.coeff_xy * first.coeff_xy / (4.0 * s);
    r.coeff_yy = second.coeff_yy - second.coeff_xy * second.coeff_xy / (4.0 * s);
    r.coeff_xy = -first.coeff_xy * second.coeff_xy / (2.0 * s);
    r.prefactor = first.prefactor * second.prefactor * std::sqrt(I * pi / s);
    return r;
}

enum class PotentialSign { inverted, harmonic };

/// How the potential enters a short-time step of length dt.
///   endpoint_average  +-w^2 (x^2 + y^2)/2 * dt/2: the exact kernel of the
///                     symmetric split e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}
///   midpoint          +-w^2 ((x+y)/2)^2 * dt/2
enum class TrotterRule { endpoint_average, midpoint };

/// Short-time kernel over dt: kinetic (x-y)^2/(2 dt) plus the potential term.
inline QuadraticKernel short_time_kernel(double dt, double omega, double hbar,
                                         PotentialSign sign = PotentialSign::inverted,
                                         TrotterRule rule = TrotterRule::endpoint_average) {
    require(dt != 0.0 && hbar > 0.0, "short_time_kernel: need dt != 0, hbar > 0");
    const double v = (sign == PotentialSign::inverted ? 1.0 : -1.0) * omega * omega * dt / hbar;
    QuadraticKernel k;
    if (rule == TrotterRule::endpoint_average) {
        k.coeff_xx = 1.0 / (2.0 * hbar * dt) + v / 4.0;
        k.coeff_xy = -1.0 / (hbar * dt);
    } else {
        k.coeff_xx = 1.0 / (2.0 * hbar * dt) + v / 8.0;
        k.coeff_xy = -1.0 / (hbar * dt) + v / 4.0;
    }
    k.coeff_yy = k.coeff_xx;
    k.prefactor = 1.0 / std::sqrt(2.0 * pi * I * hbar * dt);
    return k;
}

/// N-step Trotter chain for total time t.
inline QuadraticKernel trotter_kernel(double t, double omega, double hbar, int steps,
                                      PotentialSign sign = PotentialSign::inverted,
                                      TrotterRule rule = TrotterRule::endpoint_average) {
    require(steps >= 2, "trotter_propagator: N must be >= 2");
    require(t != 0.0, "trotter_propagator: t must be nonzero");
    const auto step = short_time_kernel(t / steps, omega, hbar, sign, rule);
    QuadraticKernel k = step;
    for (int n = 1; n < steps; ++n) k = compose(k, step);
    return k;
}

inline cplx trotter_propagator(double x, double y, double t, double omega, double hbar, int steps,
                               PotentialSign sign = PotentialSign::inverted,
                               TrotterRule rule = TrotterRule::endpoint_average) {
    return trotter_kernel(t, omega, hbar, steps, sign, rule)(x, y);
}

// ---------------------------------------------------------------- spectral identity

struct TaperWindow {
    double flat_fraction = 0.8;  // cosine roll-off over the remaining fraction
};

inline double taper(double t, double t_max, const TaperWindow& w) {
    const double a = std::abs(t) / t_max;
    if (a >= 1.0) return 0.0;
    if (a <= w.flat_fraction) return 1.0;
    return 0.5 * (1.0 + std::cos(pi * (a - w.flat_fraction) / (1.0 - w.flat_fraction)));
}

struct SpectralIdentityResult {
    double energy = 0.0;
    cplx lhs;
    double rhs = 0.0;
    double ratio = 0.0;          // Re lhs / rhs
    double tail_estimate = 0.0;  // integral of |K(0,0;t)| over the tapered part
    bool tail_warning = false;
};

/// Windowed Fourier transform of K(0,0;t) over [-t_max, t_max] against
/// (2 pi / w) sum over branches of |psi_eps(0)|^2.
inline SpectralIdentityResult spectral_identity(double energy, double t_max, const TaperWindow& window,
                                                const PUParams& p) {
    p.validate();
    const double w = p.omega_cap, hb = p.hbar;
    require(t_max * w >= 20.0, "spectral_identity: need t_max * omega >= 20");
    require(window.flat_fraction >= 0.0 && window.flat_fraction < 1.0, "spectral_identity: bad taper");
    // K(0,0;-t) = conj K(0,0;t), so the integral is 2 Re of the t > 0 half.
    // With t = s^2 the 1/sqrt(t) endpoint singularity becomes smooth.
    const double smax = std::sqrt(t_max);
    const int panels = 64 + static_cast<int>(std::ceil(std::abs(energy) * t_max / hb + w * t_max));
    auto integrand = [&](double s) -> cplx {
        if (s == 0.0) return 0.0;
        const double t = s * s;
        return std::exp(I * energy * t / hb) * inverted_propagator(0.0, 0.0, t, w, hb) * taper(t, t_max, window) * 2.0 * s;
    };
    const cplx half = composite_gauss(integrand, 0.0, smax, panels);
    SpectralIdentityResult r;
    r.energy = energy;
    r.lhs = 2.0 * half.real();
    for (int b : {1, -1}) r.rhs += std::norm(inverted_eigenfunction(energy, b, 0.0, p));
    r.rhs *= 2.0 * pi / w;
    r.ratio = r.lhs.real() / r.rhs;
    const double t0 = window.flat_fraction * t_max;
    r.tail_estimate = 2.0 * composite_gauss(
                                [&](double t) { return std::abs(inverted_propagator(0.0, 0.0, t, w, hb)); },
                                t0, t_max, 16);
    r.tail_warning = r.tail_estimate > 0.01 * std::abs(r.lhs);
    return r;
}

// ---------------------------------------------------------------- Euclidean continuation

struct EuclideanPitfall {
    std::vector<double> tau;
    std::vector<cplx> inverted_value;   // naive continuation t -> -i tau of K(0,0;t)
    std::vector<double> harmonic_value; // same continuation of the harmonic kernel
    std::vector<bool> masked;           // near a pole sin(w tau) = 0
    double expected_period = 0.0;       // pi / w
    double detected_period = 0.0;       // 0 when none found
    bool periodic = false;
    double harmonic_ground_energy = 0.0;
    double harmonic_fit_residual = 0.0;
    nlohmann::json verdict;
};

namespace detail {

/// Pearson correlation of f with itself shifted by `lag`, over unmasked pairs.
inline double lagged_correlation(const std::vector<double>& f, const std::vector<bool>& masked, std::size_t lag) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    int n = 0;
    for (std::size_t i = 0; i + lag < f.size(); ++i) {
        if (masked[i] || masked[i + lag]) continue;
        const double a = f[i], b = f[i + lag];
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
        ++n;
    }
    if (n < 8) return 0.0;
    const double ca = saa - sa * sa / n, cb = sbb - sb * sb / n, cab = sab - sa * sb / n;
    if (ca <= 0.0 || cb <= 0.0) return 0.0;
    return cab / std::sqrt(ca * cb);
}

}  // namespace detail

/// Continues K(0,0;t) to t = -i tau for the inverted and the harmonic
/// oscillator. The inverted one becomes |K| ~ |sin(w tau)|^{-1/2}, periodic
/// in tau; the harmonic one decays like exp(-w tau / 2) and yields the
/// ground energy from its log-slope over tau in [5, 10] / w.
inline EuclideanPitfall euclidean_pitfall(const std::vector<double>& tau_grid, double omega, double hbar) {
    require(tau_grid.size() >= 16, "euclidean_pitfall: need at least 16 tau samples");
    require(omega > 0.0 && hbar > 0.0, "euclidean_pitfall: need omega > 0, hbar > 0");
    const double dtau = tau_grid[1] - tau_grid[0];
    for (std::size_t i = 1; i < tau_grid.size(); ++i) {
        require(tau_grid[i] > tau_grid[i - 1] && tau_grid[0] > 0.0, "euclidean_pitfall: tau grid must be increasing and > 0");
        require(std::abs(tau_grid[i] - tau_grid[i - 1] - dtau) <= 1e-9 * std::max(1.0, tau_grid[i]),
                "euclidean_pitfall: tau grid must be uniform");
    }
    EuclideanPitfall r;
    r.tau = tau_grid;
    r.expected_period = pi / omega;
    std::vector<double> logmod;
    for (double tau : tau_grid) {
        const double s = std::sin(omega * tau);
        const bool m = std::abs(s) < 0.05 || s == 0.0;
        r.masked.push_back(m);
        // sinh(w * (-i tau)) = -i sin(w tau)
        const cplx val = m ? cplx(0.0) : cplx(1.0, -1.0) / 2.0 * std::sqrt(omega / (pi * hbar * (-I * s)));
        r.inverted_value.push_back(val);
        logmod.push_back(m ? 0.0 : std::log(std::abs(val)));
        const double sh = std::sinh(omega * tau);
        r.harmonic_value.push_back(std::sqrt(omega / (2.0 * pi * hbar * sh)));
    }
    // Period: first lag where the autocorrelation, after dipping below 0.5,
    // climbs back to a local maximum above 0.9.
    const std::size_t max_lag = tau_grid.size() / 2;
    std::vector<double> corr(max_lag + 1, 0.0);
    for (std::size_t l = 1; l <= max_lag; ++l) corr[l] = detail::lagged_correlation(logmod, r.masked, l);
    bool dipped = false;
    for (std::size_t l = 2; l < max_lag; ++l) {
        if (corr[l] < 0.5) dipped = true;
        if (dipped && corr[l] > 0.9 && corr[l] >= corr[l - 1] && corr[l] >= corr[l + 1]) {
            const double c0 = corr[l - 1], c1 = corr[l], c2 = corr[l + 1];
            const double den = c0 - 2.0 * c1 + c2;
            const double off = den != 0.0 ? 0.5 * (c0 - c2) / den : 0.0;
            r.detected_period = (l + std::clamp(off, -0.5, 0.5)) * dtau;
            r.periodic = true;
            break;
        }
    }
    // Harmonic control: -hbar * d log K / d tau over tau in [5, 10] / w.
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
        if (omega * tau_grid[i] >= 5.0 && omega * tau_grid[i] <= 10.0) {
            xs.push_back(tau_grid[i]);
            ys.push_back(std::log(r.harmonic_value[i]));
        }
    if (xs.size() >= 2) {
        const auto fit = fit_line(xs, ys);
        r.harmonic_ground_energy = -hbar * fit.slope;
        r.harmonic_fit_residual = fit.max_residual;
    }
    r.verdict = {
        {"periodic", r.periodic},
        {"detected_period", r.detected_period},
        {"expected_period", r.expected_period},
        {"harmonic_ground_energy", r.harmonic_ground_energy},
        {"expected_ground_energy", 0.5 * hbar * omega},
        {"interpretation",
         r.periodic ? "The imaginary-time continuation of the inverted-oscillator kernel is periodic, which a naive "
                      "reading would take as imaginary energies. The Hamiltonian is unbounded below, so the Euclidean "
                      "continuation does not exist as a spectral representation; the real-time kernel is unitary and "
                      "its spectrum is the whole real line."
                    : "No periodicity detected on this grid."},
    };
    return r;
}

}  // namespace pulab
