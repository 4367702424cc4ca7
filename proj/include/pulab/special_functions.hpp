#pragma once

// Hermite polynomials, the parabolic cylinder function D_nu(z) for complex
// order and argument, and the Pais-Uhlenbeck eigenfunctions built from them.
//
// D_nu(z) is the solution of w'' = (z^2/4 - nu - 1/2) w that decays on the
// positive real axis. It is evaluated by several routes, each of which
// reports its own relative error estimate:
//   maclaurin   Taylor series about 0 (long double), error from the term
//               cancellation ratio sum|t_k| / |sum t_k|
//   asymptotic  z^nu e^{-z^2/4} sum_s (-1)^s (-nu)_{2s} / (s! (2z^2)^s) for
//               |arg z| <= pi/2, error from the smallest retained term
//   ode_out     Taylor-stepped continuation of the ODE from z = 0 along the
//               ray to z (stable where D is dominant)
//   ode_in      the same, started from the asymptotic expansion at a large
//               radius on the ray and integrated inward (stable where D is
//               recessive)
//   connection  D_nu(z) = e^{+-i pi nu} D_nu(-z)
//                         + sqrt(2pi)/Gamma(-nu) e^{+-i pi (nu+1)/2} D_{-nu-1}(-+iz)
//               mapping |arg z| > pi/2 into the principal sector
//   extended    the Taylor series about 0 in software floating point with
//               50 to 800 digits, chosen from the measured cancellation
// The dispatcher tries the cheap routes first and returns the first whose
// estimate meets kPcfAcceptTolerance. If none reaches kPcfExtendedTrigger the
// extended route is used. Gamma
// enters only through 1/Gamma, which is entire, so integer orders are not
// special cases.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "common.hpp"
#include "detail/pcf_multiprecision.hpp"
#include "ostrogradsky.hpp"

namespace pulab {

// ---------------------------------------------------------------- Hermite

inline constexpr int kHermiteMaxOrder = 200;

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence.
inline double hermite(int n, double x) {
    require(n >= 0, "hermite: n must be >= 0");
    if (n > kHermiteMaxOrder) throw OverflowGuard("hermite: n > 200 is not supported");
    double hm1 = 1.0;
    if (n == 0) return hm1;
    double h = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double hp1 = 2.0 * x * h - 2.0 * k * hm1;
        hm1 = h;
        h = hp1;
        if (!std::isfinite(h)) throw OverflowGuard("hermite: value overflows double");
    }
    return h;
}

/// Normalized Hermite function H_n(x) e^{-x^2/2} / sqrt(sqrt(pi) 2^n n!) by
/// the stable normalized recurrence.
inline double hermite_function(int n, double x) {
    require(n >= 0, "hermite_function: n must be >= 0");
    double pm1 = std::exp(-0.5 * x * x) / std::sqrt(std::sqrt(pi));
    if (n == 0) return pm1;
    double p = sqrt2 * x * pm1;
    for (int k = 1; k < n; ++k) {
        const double pp1 = std::sqrt(2.0 / (k + 1)) * x * p - std::sqrt(static_cast<double>(k) / (k + 1)) * pm1;
        pm1 = p;
        p = pp1;
    }
    return p;
}

// ---------------------------------------------------------------- Gamma

namespace detail {

using cl = std::complex<long double>;
inline constexpr long double pi_l = 3.141592653589793238462643383279502884L;

/// log Gamma(z) for Re z >= 1/2: shift to Re z >= 20, then Stirling.
inline cl lgamma_right(cl z) {
    cl prod = 1.0L;
    cl log_shift = 0.0L;
    while (z.real() < 20.0L) {
        prod *= z;
        if (std::abs(prod) > 1e300L) {
            log_shift += std::log(prod);
            prod = 1.0L;
        }
        z += 1.0L;
    }
    log_shift += std::log(prod);
    static constexpr std::array<long double, 8> c{
        1.0L / 12.0L,        -1.0L / 360.0L,        1.0L / 1260.0L,   -1.0L / 1680.0L,
        1.0L / 1188.0L,      -691.0L / 360360.0L,   1.0L / 156.0L,    -3617.0L / 122400.0L};
    const cl zinv = 1.0L / z;
    const cl zinv2 = zinv * zinv;
    cl series = 0.0L;
    cl pw = zinv;
    for (long double ck : c) {
        series += ck * pw;
        pw *= zinv2;
    }
    return (z - 0.5L) * std::log(z) - z + 0.5L * std::log(2.0L * pi_l) + series - log_shift;
}

}  // namespace detail

/// 1/Gamma(z), entire; exact zeros at z = 0, -1, -2, ...
inline std::complex<long double> rgamma(std::complex<long double> z) {
    using detail::cl;
    if (z.real() >= 0.5L) return std::exp(-detail::lgamma_right(z));
    const long double re = z.real();
    if (z.imag() == 0.0L && re == std::floor(re)) return 0.0L;
    return std::sin(detail::pi_l * z) * std::exp(detail::lgamma_right(1.0L - z)) / detail::pi_l;
}

inline cplx rgamma(cplx z) {
    const auto r = rgamma(std::complex<long double>(z.real(), z.imag()));
    return {static_cast<double>(r.real()), static_cast<double>(r.imag())};
}

inline cplx gamma(cplx z) {
    const auto r = rgamma(z);
    if (r == 0.0) throw PoleHit("gamma: pole at a non-positive integer");
    return 1.0 / r;
}

// ---------------------------------------------------------------- D_nu(z)

enum class PcfMethod { maclaurin, asymptotic, ode_out, ode_in, connection, extended };

inline const char* to_string(PcfMethod m) {
    switch (m) {
        case PcfMethod::maclaurin: return "maclaurin";
        case PcfMethod::asymptotic: return "asymptotic";
        case PcfMethod::ode_out: return "ode_out";
        case PcfMethod::ode_in: return "ode_in";
        case PcfMethod::connection: return "connection";
        case PcfMethod::extended: return "extended";
    }
    return "?";
}

struct PcfResult {
    cplx value;
    cplx derivative;
    double error_estimate = 0.0;  // relative; series routes measure it over the pair (D, z D')
    PcfMethod method = PcfMethod::maclaurin;
};

/// Region on which the 1e-8 accuracy target is validated.
inline constexpr double kPcfMaxAbsZ = 50.0;
inline constexpr double kPcfMaxAbsNu = 50.0;
/// The dispatcher stops at the first route whose estimate is at most this.
inline constexpr double kPcfAcceptTolerance = 1e-13;
/// Estimates above this raise AccuracyLoss.
inline constexpr double kPcfFailTolerance = 1e-6;
/// Fast-route estimates above this fall back to the extended-precision series.
inline constexpr double kPcfExtendedTrigger = 1e-11;
/// Largest |z| at which the Maclaurin route is attempted. For |arg z| <= pi/4
/// the series stops certifying 1e-8 before |z| = 9 at every scanned order;
/// closer to the imaginary axis it lasts longer, but the other routes already
/// cover there and the term count grows like |z|^2 (tools/pcf_switch_scan.cpp).
inline constexpr double kPcfMaclaurinMaxRadius = 12.0;

namespace detail {

/// (w, w') * exp(log_scale), with an error estimate.
struct Scaled {
    cl w;
    cl dw;
    long double log_scale = 0.0L;
    double err = 0.0;
};

inline cl to_cl(cplx z) { return {z.real(), z.imag()}; }
inline cplx to_c(cl z) { return {static_cast<double>(z.real()), static_cast<double>(z.imag())}; }

inline void renormalize(Scaled& s) {
    const long double m = std::max(std::abs(s.w), std::abs(s.dw));
    if (m > 0.0L && std::isfinite(m)) {
        s.w /= m;
        s.dw /= m;
        s.log_scale += std::log(m);
    }
}

inline Scaled origin_values(cl nu) {
    const long double sqpi = std::sqrt(pi_l);
    Scaled s;
    s.w = std::pow(cl(2.0L), nu / 2.0L) * sqpi * rgamma((1.0L - nu) / 2.0L);
    s.dw = -std::pow(cl(2.0L), (nu + 1.0L) / 2.0L) * sqpi * rgamma(-nu / 2.0L);
    return s;
}

struct TaylorStep {
    cl w, dw;
    long double kappa;  // sum |terms| / |sum|, normwise over (w, h w')
};

/// One Taylor step of w'' = (z^2/4 - a) w from z0 by h, with e_k = c_k h^k.
inline TaylorStep taylor_step(cl a, cl z0, cl w0, cl dw0, cl h) {
    const cl q0 = z0 * z0 / 4.0L - a;
    const cl q1 = z0 * h / 2.0L;
    const cl q2 = h * h / 4.0L;
    const cl h2 = h * h;
    // Registers hold e_{k-2}, e_{k-1}, e_k, e_{k+1}.
    cl ekm2 = 0.0L, ekm1 = 0.0L, ek = w0, ek1 = dw0 * h;
    cl sum = ek + ek1, dsum = ek1;
    long double abs_sum = std::abs(ek) + std::abs(ek1), abs_dsum = std::abs(ek1);
    int quiet = 0;
    // Advance: compute e_{k+2} for k = 0, 1, 2, ...
    for (int k = 0; k < 4000; ++k) {
        const cl next = h2 / static_cast<long double>((k + 2) * (k + 1)) * (q0 * ek + q1 * ekm1 + q2 * ekm2);
        ekm2 = ekm1;
        ekm1 = ek;
        ek = ek1;
        ek1 = next;
        sum += next;
        dsum += static_cast<long double>(k + 2) * next;
        abs_sum += std::abs(next);
        abs_dsum += static_cast<long double>(k + 2) * std::abs(next);
        const long double scale = std::max(abs_sum, 1e-4000L);
        if (std::abs(next) <= 1e-22L * scale && std::abs(ek) <= 1e-22L * scale) {
            if (++quiet >= 3) break;
        } else {
            quiet = 0;
        }
    }
    TaylorStep r;
    r.w = sum;
    r.dw = dsum / h;
    const long double total = std::abs(sum) + std::abs(dsum);
    r.kappa = total > 0 ? (abs_sum + abs_dsum) / total : 1.0L;
    return r;
}

/// Continues (w, w') from z_from to z_to along the segment.
inline Scaled continue_path(cl a, cl z_from, Scaled s, cl z_to, long double step_factor) {
    const cl span = z_to - z_from;
    const long double length = std::abs(span);
    if (length == 0.0L) return s;
    const cl dir = span / length;
    long double done = 0.0L;
    cl z0 = z_from;
    while (done < length) {
        const long double local = std::sqrt(std::norm(z0) / 4.0L + std::abs(a));
        long double hmag = step_factor * 1.5L / std::max(1.0L, local);
        if (done + hmag > length) hmag = length - done;
        const cl h = dir * hmag;
        const TaylorStep st = taylor_step(a, z0, s.w, s.dw, h);
        s.w = st.w;
        s.dw = st.dw;
        renormalize(s);
        done += hmag;
        z0 = (done >= length) ? z_to : z_from + dir * done;
    }
    return s;
}

inline long double arg_abs(cl z) { return std::abs(std::arg(z)); }

/// Large-|z| expansion, valid for |arg z| <= pi/2.
inline Scaled asymptotic(cl nu, cl z) {
    const cl z2 = z * z;
    cl term = 1.0L, s = 0.0L, sd = 0.0L;
    long double abs_sum = 0.0L, prev = std::numeric_limits<long double>::infinity();
    long double trunc = 0.0L;
    bool converged = false;
    for (int k = 0; k < 2000; ++k) {
        const long double at = std::abs(term);
        if (term == 0.0L) {
            converged = true;
            break;
        }
        if (k > 0 && at <= 1e-22L * std::abs(s)) {
            converged = true;
            break;
        }
        if (k > 0 && at > prev) {
            trunc = prev;
            break;
        }
        s += term;
        sd += term * (-2.0L * static_cast<long double>(k)) / z;
        abs_sum += at;
        prev = at;
        const long double kk = static_cast<long double>(k);
        term *= -(-nu + 2.0L * kk) * (-nu + 2.0L * kk + 1.0L) / ((kk + 1.0L) * 2.0L * z2);
    }
    if (!converged && trunc == 0.0L) trunc = prev;
    Scaled r;
    const cl logpref = nu * std::log(z) - z2 / 4.0L;
    const cl phase = std::exp(cl(0.0L, logpref.imag()));
    r.w = s * phase;
    r.dw = ((nu / z - z / 2.0L) * s + sd) * phase;
    r.log_scale = logpref.real();
    const long double as = std::abs(s);
    long double err = as > 0 ? (trunc + 4e-19L * abs_sum) / as : 1.0L;
    // Outside |arg z| <= pi/4 the recessive-to-dominant switching term is not
    // exponentially small a priori; bound it by its full Stokes weight.
    if (arg_abs(z) > pi_l / 4.0L + 1e-12L) {
        const cl lg = -(2.0L * nu + 1.0L) * std::log(z) + z2 / 2.0L;
        const long double sub = std::abs(std::sqrt(2.0L * pi_l) * rgamma(-nu)) * std::exp(lg.real());
        err += sub / std::max(as, 1e-300L);
    }
    r.err = static_cast<double>(std::min(err, 1.0L));
    renormalize(r);
    return r;
}

inline Scaled maclaurin(cl nu, cl z) {
    Scaled s = origin_values(nu);
    if (z == 0.0L) {
        s.err = 1e-17;
        return s;
    }
    const TaylorStep st = taylor_step(nu + 0.5L, 0.0L, s.w, s.dw, z);
    Scaled r;
    r.w = st.w;
    r.dw = st.dw;
    r.err = static_cast<double>(std::min(1.0L, 2e-17L * st.kappa));
    renormalize(r);
    return r;
}

inline long double rel_diff(const Scaled& a, const Scaled& b) {
    const long double m = std::max(a.log_scale, b.log_scale);
    const cl va = a.w * std::exp(a.log_scale - m), vb = b.w * std::exp(b.log_scale - m);
    const long double den = std::max(std::abs(va), std::abs(vb));
    return den > 0 ? std::abs(va - vb) / den : 0.0L;
}

inline Scaled ode_out(cl nu, cl z) {
    const cl a = nu + 0.5L;
    const Scaled start = origin_values(nu);
    Scaled r1 = continue_path(a, 0.0L, start, z, 1.0L);
    const Scaled r2 = continue_path(a, 0.0L, start, z, 0.6L);
    r1.err = static_cast<double>(std::min(1.0L, rel_diff(r1, r2) + 1e-17L));
    return r1;
}

inline std::optional<Scaled> ode_in(cl nu, cl z) {
    const cl a = nu + 0.5L;
    const cl dir = z / std::abs(z);
    long double radius = std::max({std::abs(z) * 1.25L, 8.0L, 2.5L * std::sqrt(std::abs(nu) + 1.0L)});
    std::optional<Scaled> start;
    for (int i = 0; i < 40 && radius <= 600.0L; ++i, radius *= 1.3L) {
        Scaled s = asymptotic(nu, dir * radius);
        if (s.err <= 1e-17) {
            start = s;
            break;
        }
    }
    if (!start) return std::nullopt;
    const long double r0 = radius;
    Scaled r1 = continue_path(a, dir * r0, *start, z, 1.0L);
    const long double r_alt = r0 * 1.2L;
    Scaled start2 = asymptotic(nu, dir * r_alt);
    const Scaled r2 = continue_path(a, dir * r_alt, start2, z, 0.6L);
    r1.err = static_cast<double>(std::min(1.0L, rel_diff(r1, r2) + 1e-17L));
    return r1;
}

struct Candidate {
    Scaled s;
    PcfMethod method;
};

inline void keep_best(std::optional<Candidate>& best, const Scaled& s, PcfMethod m) {
    if (!std::isfinite(s.err) || !std::isfinite(static_cast<double>(s.log_scale))) return;
    if (!best || s.err < best->s.err) best = Candidate{s, m};
}

inline Candidate principal(cl nu, cl z) {
    std::optional<Candidate> best;
    const long double r = std::abs(z);
    if (r <= kPcfMaclaurinMaxRadius) {
        keep_best(best, maclaurin(nu, z), PcfMethod::maclaurin);
        if (best && best->s.err <= kPcfAcceptTolerance) return *best;
    }
    if (r > 0) {
        keep_best(best, asymptotic(nu, z), PcfMethod::asymptotic);
        if (best && best->s.err <= kPcfAcceptTolerance) return *best;
    }
    const bool recessive_sector = arg_abs(z) <= pi_l / 4.0L;
    auto try_in = [&] {
        if (auto s = ode_in(nu, z)) keep_best(best, *s, PcfMethod::ode_in);
    };
    auto try_out = [&] { keep_best(best, ode_out(nu, z), PcfMethod::ode_out); };
    if (recessive_sector) try_in(); else try_out();
    if (best && best->s.err <= kPcfAcceptTolerance) return *best;
    if (recessive_sector) try_out(); else try_in();
    if (!best) throw AccuracyLoss("parabolic_cylinder_d: no evaluation route succeeded");
    return *best;
}

/// ca * A + cb * B where A, B carry their own scales, with (dA, dB) already
/// multiplied by the chain-rule factors da, db.
inline Scaled combine(cl ca, const Scaled& a, cl da, cl cb, const Scaled& b, cl db) {
    const long double m = std::max(a.log_scale, b.log_scale);
    const cl fa = ca * std::exp(a.log_scale - m), fb = cb * std::exp(b.log_scale - m);
    Scaled r;
    r.w = fa * a.w + fb * b.w;
    r.dw = fa * da * a.dw + fb * db * b.dw;
    r.log_scale = m;
    const long double ta = std::abs(fa * a.w), tb = std::abs(fb * b.w);
    const long double ar = std::abs(r.w);
    r.err = static_cast<double>(
        std::min(1.0L, ar > 0 ? (ta * a.err + tb * b.err + 4e-19L * (ta + tb)) / ar : 1.0L));
    renormalize(r);
    return r;
}

inline Candidate evaluate(cl nu, cl z) {
    if (arg_abs(z) <= pi_l / 2.0L) return principal(nu, z);
    std::optional<Candidate> best;
    if (std::abs(z) <= kPcfMaclaurinMaxRadius) {
        keep_best(best, maclaurin(nu, z), PcfMethod::maclaurin);
        if (best && best->s.err <= kPcfAcceptTolerance) return *best;
    }
    const cl i(0.0L, 1.0L);
    const long double sq2pi = std::sqrt(2.0L * pi_l);
    const cl rg = rgamma(-nu);
    // Upper half plane: D(z) = e^{i pi nu} D(-z) + sqrt(2pi)/G(-nu) e^{i pi (nu+1)/2} D_{-nu-1}(-iz)
    // Lower half plane: D(z) = e^{-i pi nu} D(-z) + sqrt(2pi)/G(-nu) e^{-i pi (nu+1)/2} D_{-nu-1}(iz)
    const long double s = z.imag() >= 0.0L ? 1.0L : -1.0L;
    const Candidate a = principal(nu, -z);
    const cl rot = -s * i;  // argument multiplier for the second term
    Candidate b{};
    cl cb = 0.0L;
    if (rg != 0.0L) {
        b = principal(-nu - 1.0L, rot * z);
        cb = sq2pi * rg * std::exp(s * i * pi_l * (nu + 1.0L) / 2.0L);
    } else {
        b.s.w = 0.0L;
        b.s.dw = 0.0L;
        b.s.log_scale = a.s.log_scale;
    }
    // d/dz D(-z) = -D'(-z); d/dz D(rot z) = rot D'(rot z).
    const cl ca = std::exp(s * i * pi_l * nu);
    const Scaled r = combine(ca, a.s, -1.0L, cb, b.s, rot);
    keep_best(best, r, PcfMethod::connection);
    return *best;
}

inline std::optional<Scaled> extended(cl nu, cl z) {
    const auto r = mp::maclaurin(to_c(nu), to_c(z));
    if (!r) return std::nullopt;
    Scaled s{r->w, r->dw, r->log_scale, r->err};
    renormalize(s);
    return s;
}

inline Candidate evaluate_with_fallback(cl nu, cl z) {
    Candidate c = evaluate(nu, z);
    if (c.s.err <= kPcfExtendedTrigger) return c;
    if (auto s = extended(nu, z); s && s->err < c.s.err) c = Candidate{*s, PcfMethod::extended};
    return c;
}

inline cplx unscale(cl w, long double log_scale) {
    if (w == 0.0L) return 0.0;
    const long double lm = log_scale + std::log(std::abs(w));
    if (lm > 709.0L) throw OverflowGuard("parabolic_cylinder_d: value overflows double");
    if (lm < -745.0L) return 0.0;
    return to_c(w * std::exp(log_scale));
}

}  // namespace detail

/// Region where the 1e-8 target has been validated. Outside it evaluation
/// still runs and the error estimate still gates AccuracyLoss.
inline bool pcf_supported(cplx nu, cplx z) { return std::abs(nu) <= kPcfMaxAbsNu && std::abs(z) <= kPcfMaxAbsZ; }

/// D_nu(z) and D_nu'(z) with the best available route and its error estimate.
inline PcfResult parabolic_cylinder_d_eval(cplx nu, cplx z) {
    require(std::isfinite(nu.real()) && std::isfinite(nu.imag()) && std::isfinite(z.real()) &&
                std::isfinite(z.imag()),
            "parabolic_cylinder_d: non-finite input");
    const auto c = detail::evaluate_with_fallback(detail::to_cl(nu), detail::to_cl(z));
    PcfResult r;
    r.value = detail::unscale(c.s.w, c.s.log_scale);
    r.derivative = detail::unscale(c.s.dw, c.s.log_scale);
    r.error_estimate = c.s.err;
    r.method = c.method;
    return r;
}

/// D_nu(z). Raises AccuracyLoss when no route certifies 1e-6.
inline cplx parabolic_cylinder_d(cplx nu, cplx z) {
    const auto r = parabolic_cylinder_d_eval(nu, z);
    if (r.error_estimate > kPcfFailTolerance)
        throw AccuracyLoss("parabolic_cylinder_d: error estimate " + std::to_string(r.error_estimate) +
                           " at nu=(" + std::to_string(nu.real()) + "," + std::to_string(nu.imag()) + "), z=(" +
                           std::to_string(z.real()) + "," + std::to_string(z.imag()) + ")");
    return r.value;
}

/// Values of D_nu(z) from every route that applies at (nu, z), for cross-validation.
struct PcfRouteValue {
    PcfMethod method;
    cplx value;
    double error_estimate;
};

inline std::vector<PcfRouteValue> parabolic_cylinder_d_routes(cplx nu, cplx z) {
    using namespace detail;
    const cl n = to_cl(nu), x = to_cl(z);
    std::vector<PcfRouteValue> out;
    auto push = [&](const Scaled& s, PcfMethod m) {
        if (!std::isfinite(s.err)) return;
        out.push_back({m, unscale(s.w, s.log_scale), s.err});
    };
    if (std::abs(x) <= kPcfMaclaurinMaxRadius) push(maclaurin(n, x), PcfMethod::maclaurin);
    if (arg_abs(x) <= pi_l / 2.0L && std::abs(x) > 0) {
        push(asymptotic(n, x), PcfMethod::asymptotic);
        push(ode_out(n, x), PcfMethod::ode_out);
        if (auto s = ode_in(n, x)) push(*s, PcfMethod::ode_in);
    }
    if (auto s = extended(n, x)) push(*s, PcfMethod::extended);
    return out;
}

/// Cross-validates the two best-certified routes; AccuracyLoss if they
/// disagree by more than 1e-6. Returns the relative disagreement.
inline double parabolic_cylinder_d_cross_check(cplx nu, cplx z) {
    auto routes = parabolic_cylinder_d_routes(nu, z);
    std::sort(routes.begin(), routes.end(),
              [](const auto& a, const auto& b) { return a.error_estimate < b.error_estimate; });
    if (routes.size() < 2) throw AccuracyLoss("parabolic_cylinder_d_cross_check: fewer than two routes apply");
    const double d = rel_err(routes[0].value, routes[1].value);
    if (d > kPcfFailTolerance)
        throw AccuracyLoss(std::string("parabolic_cylinder_d: routes ") + to_string(routes[0].method) + " and " +
                           to_string(routes[1].method) + " disagree by " + std::to_string(d));
    return d;
}

// ---------------------------------------------------------------- eigenfunctions

struct EigenLabel {
    int n = 0;
    double epsilon = 0.0;
    int branch = 1;

    void validate() const {
        require(n >= 0, "EigenLabel: n must be >= 0");
        require(branch == 1 || branch == -1, "EigenLabel: branch must be +1 or -1");
        require(std::isfinite(epsilon), "EigenLabel: epsilon must be finite");
    }
};

/// E(n, eps) = hbar W (n + 1/2) - eps.
inline double pu_energy(const EigenLabel& l, const PUParams& p) {
    return p.hbar * p.omega_cap * (l.n + 0.5) - l.epsilon;
}

/// Normalized oscillator factor (W/hbar)^{1/4} psi_n(sqrt(W/hbar) x).
inline double oscillator_factor(int n, double x, const PUParams& p) {
    const double s = std::sqrt(p.omega_cap / p.hbar);
    return std::sqrt(s) * hermite_function(n, s * x);
}

namespace detail {

inline double log_cosh(double y) {
    const double a = std::abs(y);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

struct InvertedSetup {
    cplx nu;
    cplx beta;  // D argument is beta * x
    double norm;
};

inline InvertedSetup inverted_setup(double epsilon, int branch, const PUParams& p) {
    p.validate();
    require(branch == 1 || branch == -1, "inverted_eigenfunction: branch must be +1 or -1");
    const double e = epsilon / (p.hbar * p.omega_cap);
    InvertedSetup s;
    s.nu = cplx(-0.5, -e);
    s.beta = static_cast<double>(branch) * std::sqrt(2.0 * p.omega_cap / p.hbar) * cplx(1.0, 1.0) / sqrt2;
    s.norm = std::pow(2.0 * p.omega_cap / p.hbar, 0.25) *
             std::exp(e * pi / 4.0 - 0.5 * (std::log(4.0 * pi) + log_cosh(pi * e)));
    return s;
}

}  // namespace detail

/// Continuum factor of the PU eigenfunction: an eigenfunction of
/// h_inv = P^2/2 - W^2 X^2/2 with eigenvalue epsilon.
inline cplx inverted_eigenfunction(double epsilon, int branch, double x, const PUParams& p) {
    const auto s = detail::inverted_setup(epsilon, branch, p);
    return s.norm * parabolic_cylinder_d(s.nu, s.beta * x);
}

/// d/dx of inverted_eigenfunction.
inline cplx inverted_eigenfunction_derivative(double epsilon, int branch, double x, const PUParams& p) {
    const auto s = detail::inverted_setup(epsilon, branch, p);
    const auto r = parabolic_cylinder_d_eval(s.nu, s.beta * x);
    if (r.error_estimate > kPcfFailTolerance) throw AccuracyLoss("inverted_eigenfunction_derivative: accuracy loss");
    return s.norm * s.beta * r.derivative;
}

inline cplx pu_eigenfunction(const EigenLabel& label, double x1, double x2, const PUParams& p) {
    label.validate();
    return oscillator_factor(label.n, x1, p) * inverted_eigenfunction(label.epsilon, label.branch, x2, p);
}

}  // namespace pulab
