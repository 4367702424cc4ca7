#pragma once

// Nonlocal oscillator q'' + (w^2/2)(q(t-T) + q(t+T)) = 0: zeros of
// Phi = z^2 + w^2 cosh(T z), their residue weights in the partial-fraction
// expansion of w^4/Phi(u), u = z^2, and the commuting generators built from
// them (oscillators for imaginary roots, dilatation-rotations for the rest).
//
// Root conventions. A real mode is a root z = i*W with W > 0 (u = -W^2).
// Complex roots come in quadruples {z, conj z, -z, -conj z}; the stored
// representative has Re z > 0, Im z > 0 and mode frequency w_k = -i z, so
// that u = z^2 = -w_k^2.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "common.hpp"

namespace pulab {

struct NonlocalParams {
    double omega = 1.0;
    double delay = 1.0;
    double hbar = 1.0;

    void validate() const {
        require(std::isfinite(omega) && omega > 0.0, "NonlocalParams: omega must be > 0");
        require(std::isfinite(delay) && delay >= 0.0, "NonlocalParams: delay must be >= 0");
        require(std::isfinite(hbar) && hbar > 0.0, "NonlocalParams: hbar must be > 0");
    }
};

struct RealMode {
    double omega_i = 0.0;  // W_i > 0, root z = i W_i
    double eta = 0.0;
    int sign = 1;
};

struct ComplexMode {
    cplx root;     // representative zero of Phi in the open first quadrant
    cplx omega_k;  // -i * root
    cplx eta;
};

struct ModeDecomposition {
    std::vector<RealMode> real_modes;
    std::vector<ComplexMode> complex_modes;  // sorted by |root|
    int truncation_K = 0;
    double tail_bound = 0.0;  // estimate of sum over dropped pairs of |w_k|^-2
    double search_radius = 0.0;
    bool residues_ready = false;
};

// ---------------------------------------------------------------- Phi

inline constexpr double kPhiMaxExponent = 700.0;

inline void check_phi_range(cplx z, const NonlocalParams& p) {
    if (std::abs(p.delay * z.real()) > kPhiMaxExponent)
        throw OverflowGuard("phi: |Re(T z)| exceeds 700");
}

inline cplx phi(cplx z, const NonlocalParams& p) {
    check_phi_range(z, p);
    return z * z + p.omega * p.omega * std::cosh(p.delay * z);
}

/// d Phi / dz.
inline cplx phi_prime(cplx z, const NonlocalParams& p) {
    check_phi_range(z, p);
    return 2.0 * z + p.omega * p.omega * p.delay * std::sinh(p.delay * z);
}

/// |z^2| + w^2 |cosh(Tz)|, the magnitude against which |Phi| is judged.
inline double phi_scale(cplx z, const NonlocalParams& p) {
    check_phi_range(z, p);
    return std::norm(z) + p.omega * p.omega * std::abs(std::cosh(p.delay * z));
}

/// |z^2 + (w^2/2)(e^{-zT} + e^{zT})|: the Euler-Lagrange residual of e^{zt}.
inline double characteristic_residual(cplx z, const NonlocalParams& p) {
    check_phi_range(z, p);
    const double w2 = p.omega * p.omega;
    return std::abs(z * z + 0.5 * w2 * (std::exp(-z * p.delay) + std::exp(z * p.delay)));
}

/// dPhi/du at a zero, u = z^2.
inline cplx phi_u_prime(cplx z, const NonlocalParams& p) { return phi_prime(z, p) / (2.0 * z); }

inline double root_tolerance(cplx z) { return 1e-10 * std::max(1.0, std::norm(z)); }

// ---------------------------------------------------------------- argument principle

namespace detail {

inline double arg_step(cplx a, cplx b) { return std::arg(b / a); }

inline double winding_segment(const std::function<cplx(double)>& f, double ta, double tb, cplx fa, cplx fb,
                              int depth) {
    const double d = arg_step(fa, fb);
    if (std::abs(d) < 0.25 || depth >= 40) return d;
    const double tm = 0.5 * (ta + tb);
    const cplx fm = f(tm);
    return winding_segment(f, ta, tm, fa, fm, depth + 1) + winding_segment(f, tm, tb, fm, fb, depth + 1);
}

}  // namespace detail

/// Winding number of Phi around |z| = radius, from the accumulated argument
/// with adaptive bisection wherever the phase moves by more than 0.25 rad.
inline int winding_number(const NonlocalParams& p, double radius) {
    p.validate();
    require(radius > 0.0, "winding_number: radius must be > 0");
    if (p.delay * radius > kPhiMaxExponent) throw OverflowGuard("winding_number: T*radius exceeds 700");
    auto f = [&](double th) { return phi(std::polar(radius, th), p); };
    const int n = 128 + 32 * static_cast<int>(std::ceil(radius * p.delay));
    double total = 0.0;
    cplx fa = f(0.0);
    for (int k = 0; k < n; ++k) {
        const double ta = 2.0 * pi * k / n, tb = 2.0 * pi * (k + 1) / n;
        const cplx fb = f(tb);
        if (fa == 0.0 || fb == 0.0) throw ContourMiss("winding_number: zero on the contour");
        total += detail::winding_segment(f, ta, tb, fa, fb, 0);
        fa = fb;
    }
    return static_cast<int>(std::lround(total / (2.0 * pi)));
}

/// Zeros of Phi (in z, all copies) strictly inside |z| = radius.
inline int count_enclosed(const ModeDecomposition& d, double radius) {
    int c = 0;
    for (const auto& m : d.real_modes)
        if (m.omega_i < radius) c += 2;
    for (const auto& m : d.complex_modes)
        if (std::abs(m.root) < radius) c += 4;
    return c;
}

// ---------------------------------------------------------------- root search

namespace detail {

struct NewtonResult {
    cplx z;
    bool converged = false;
};

inline NewtonResult newton_phi(cplx z, const NonlocalParams& p, int max_iter = 80) {
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(p.delay * z.real()) > kPhiMaxExponent || !std::isfinite(z.real()) ||
            !std::isfinite(z.imag()))
            return {z, false};
        const cplx f = phi(z, p), fp = phi_prime(z, p);
        if (fp == 0.0) return {z, false};
        const cplx step = f / fp;
        z -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
    }
    if (std::abs(p.delay * z.real()) > kPhiMaxExponent) return {z, false};
    return {z, std::abs(phi(z, p)) <= root_tolerance(z)};
}

/// Relative size of Phi' at a root; tiny values flag a multiple zero.
inline double derivative_ratio(cplx z, const NonlocalParams& p) {
    const double w2T = p.omega * p.omega * p.delay;
    const double scale = 2.0 * std::abs(z) + w2T * std::abs(std::sinh(p.delay * z)) + w2T;
    return std::abs(phi_prime(z, p)) / scale;
}

inline constexpr double kDegenerateRatio = 1e-8;

/// Real modes W in (0, w]: zeros of g(y) = y^2 - w^2 cos(T y).
inline std::vector<double> real_mode_scan(const NonlocalParams& p) {
    const double w = p.omega, w2 = w * w, T = p.delay;
    auto g = [&](double y) { return y * y - w2 * std::cos(T * y); };
    auto gp = [&](double y) { return 2.0 * y + w2 * T * std::sin(T * y); };
    const int n = 4000 + static_cast<int>(400.0 * w * T);
    std::vector<double> out;
    const double h = w / n;
    double ya = 0.0, ga = g(0.0);
    boost::math::tools::eps_tolerance<double> tol(52);
    for (int k = 1; k <= n; ++k) {
        const double yb = (k == n) ? w : k * h;
        const double gb = g(yb);
        if (gb == 0.0) {
            out.push_back(yb);
        } else if (ga * gb < 0.0) {
            std::uintmax_t iters = 200;
            auto [lo, hi] = boost::math::tools::toms748_solve(g, ya, yb, ga, gb, tol, iters);
            out.push_back(0.5 * (lo + hi));
        } else if (k < n) {
            // A local extremum of g touching zero without a sign change is a double root.
            const double gc = g(yb + h);
            if (std::abs(gb) <= std::abs(ga) && std::abs(gb) <= std::abs(gc) && gp(ya) * gp(yb + h) < 0.0) {
                std::uintmax_t iters = 200;
                auto [lo, hi] = boost::math::tools::toms748_solve(gp, ya, yb + h, tol, iters);
                const double ys = 0.5 * (lo + hi);
                if (std::abs(g(ys)) <= kDegenerateRatio * w2)
                    throw DegenerateModes("find_modes: double real zero near W = " + std::to_string(ys));
            }
        }
        ya = yb;
        ga = gb;
    }
    for (double y : out) {
        const double ratio = std::abs(gp(y)) / (2.0 * y + w2 * T);
        if (ratio < kDegenerateRatio)
            throw DegenerateModes("find_modes: double real zero at W = " + std::to_string(y));
    }
    return out;
}

inline cplx first_quadrant(cplx z) { return {std::abs(z.real()), std::abs(z.imag())}; }

inline bool is_imaginary_axis(cplx z) { return std::abs(z.real()) <= 1e-9 * (1.0 + std::abs(z)); }

inline void insert_unique(std::vector<cplx>& roots, cplx z) {
    for (const auto& r : roots)
        if (std::abs(r - z) <= 1e-6 * (1.0 + std::abs(z))) return;
    roots.push_back(z);
}

/// Complex zeros from the large-|z| branches T z = Log(2 z^2 / w^2) + i(2k+1)pi.
inline std::optional<cplx> branch_root(int k, const NonlocalParams& p) {
    const double T = p.delay, w2 = p.omega * p.omega;
    cplx z = cplx(1.0, (2 * k + 1) * pi) / T;
    for (int it = 0; it < 100; ++it) {
        const cplx zn = (std::log(2.0 * z * z / w2) + cplx(0.0, (2 * k + 1) * pi)) / T;
        const bool done = std::abs(zn - z) <= 1e-14 * std::abs(zn);
        z = zn;
        if (done) break;
    }
    const auto nr = newton_phi(z, p);
    if (!nr.converged || is_imaginary_axis(nr.z)) return std::nullopt;
    return first_quadrant(nr.z);
}

/// Moves r off any known zero so the contour stays clear of them.
inline double clear_radius(double r, const std::vector<double>& moduli) {
    for (int tries = 0; tries < 50; ++tries) {
        bool ok = true;
        for (double m : moduli)
            if (std::abs(m - r) < 1e-3 * r) ok = false;
        if (ok) return r;
        r *= 1.0 + 2.5e-3;
    }
    return r;
}

}  // namespace detail

inline constexpr int kDefaultTruncation = 32;

/// All zeros with |z| <= search_radius plus enough larger ones to hold K
/// complex pairs. The count inside the search circle and inside the circle
/// just enclosing the K-th pair are audited against the argument principle.
inline ModeDecomposition find_modes(const NonlocalParams& p, int K = kDefaultTruncation,
                                    double search_radius = 40.0) {
    p.validate();
    require(K >= 1, "find_modes: K must be >= 1");
    require(std::isfinite(search_radius) && search_radius > 0.0, "find_modes: search_radius must be > 0");
    require(p.delay * search_radius <= kPhiMaxExponent, "find_modes: T*search_radius must be <= 700");
    const double R = search_radius;
    ModeDecomposition d;
    d.search_radius = R;

    for (double y : detail::real_mode_scan(p)) d.real_modes.push_back({y, 0.0, 1});
    if (p.delay == 0.0) {
        d.truncation_K = 0;
        return d;
    }

    // Newton from a grid over the part of the upper half plane that can hold zeros:
    // |z|^2 >= w^2 sinh(T |Re z|) bounds |Re z|.
    const double T = p.delay, w2 = p.omega * p.omega;
    const double xmax = std::min(R, std::asinh(R * R / w2) / T);
    const double step = std::min({0.5, 0.25 * pi / T, R / 20.0});
    const int nx = static_cast<int>(std::ceil(xmax / step));
    const int ny = static_cast<int>(std::ceil(R / step));
    std::vector<cplx> candidates;
    for (int i = -nx; i <= nx; ++i)
        for (int j = 0; j <= ny; ++j) {
            const cplx z0(i * step + 0.37 * step, j * step + 0.29 * step);
            const auto nr = detail::newton_phi(z0, p);
            if (nr.converged) candidates.push_back(nr.z);
        }
    std::sort(candidates.begin(), candidates.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<cplx> inner;
    for (const auto& z : candidates) {
        if (detail::is_imaginary_axis(z)) {
            const double y = std::abs(z.imag());
            bool known = false;
            for (const auto& m : d.real_modes)
                if (std::abs(m.omega_i - y) <= 1e-6 * (1.0 + y)) known = true;
            if (!known) throw ContourMiss("find_modes: real mode found by Newton but missed by the scan");
            continue;
        }
        const cplx q = detail::first_quadrant(z);
        if (std::abs(q) <= R) detail::insert_unique(inner, q);
    }
    for (const auto& z : inner)
        if (detail::derivative_ratio(z, p) < detail::kDegenerateRatio)
            throw DegenerateModes("find_modes: double complex zero near z = (" + std::to_string(z.real()) + ", " +
                                  std::to_string(z.imag()) + ")");
    auto by_modulus = [](cplx a, cplx b) { return std::abs(a) < std::abs(b); };
    std::sort(inner.begin(), inner.end(), by_modulus);

    auto set_complex = [&](const std::vector<cplx>& roots) {
        d.complex_modes.clear();
        for (const auto& z : roots) d.complex_modes.push_back({z, -I * z, 0.0});
    };
    auto audit = [&](double radius, const char* where) {
        std::vector<double> mod;
        for (const auto& m : d.real_modes) mod.push_back(m.omega_i);
        for (const auto& m : d.complex_modes) mod.push_back(std::abs(m.root));
        const double r = detail::clear_radius(radius, mod);
        const int wn = winding_number(p, r), found = count_enclosed(d, r);
        if (wn != found) {
            double worst = 1.0;
            for (const auto& m : d.complex_modes) worst = std::min(worst, detail::derivative_ratio(m.root, p));
            if (worst < 1e-4)
                throw DegenerateModes(std::string("find_modes: count mismatch ") + where +
                                      " with a nearly multiple zero");
            throw ContourMiss(std::string("find_modes: argument principle counts ") + std::to_string(wn) +
                              " zeros " + where + ", search found " + std::to_string(found));
        }
    };
    set_complex(inner);
    audit(R, "inside the search radius");

    // Extend along the asymptotic branches until K pairs are held.
    std::vector<cplx> all = inner;
    std::vector<cplx> outer;
    const int kmin = std::max(0, static_cast<int>(std::floor((R * T / pi - 1.0) / 2.0)) - 2);
    int misses = 0;
    for (int k = kmin; static_cast<int>(all.size() + outer.size()) < K + 1 && misses < 50; ++k) {
        const auto z = detail::branch_root(k, p);
        if (!z || std::abs(*z) <= R) {
            ++misses;
            continue;
        }
        bool dup = false;
        for (const auto& r : outer)
            if (std::abs(r - *z) <= 1e-6 * (1.0 + std::abs(*z))) dup = true;
        if (!dup) outer.push_back(*z);
    }
    std::sort(outer.begin(), outer.end(), by_modulus);
    for (const auto& z : outer) all.push_back(z);
    if (static_cast<int>(all.size()) < K)
        throw ContourMiss("find_modes: could not locate " + std::to_string(K) + " complex pairs");
    const bool have_next = static_cast<int>(all.size()) > K;
    const cplx next = have_next ? all[K] : 0.0;
    all.resize(std::max<std::size_t>(K, inner.size()));
    set_complex(all);
    const double rk = std::abs(all.back());
    if (have_next && std::abs(next) > rk) {
        const double ra = 0.5 * (rk + std::abs(next));
        if (T * ra <= kPhiMaxExponent) audit(ra, "inside the truncation radius");
    }
    for (const auto& m : d.complex_modes)
        if (detail::derivative_ratio(m.root, p) < detail::kDegenerateRatio)
            throw DegenerateModes("find_modes: nearly multiple complex zero");
    d.truncation_K = static_cast<int>(d.complex_modes.size());
    // Zeros beyond the last stored one are spaced about 2 pi / T along Im z.
    d.tail_bound = T / (2.0 * pi * rk);
    return d;
}

/// Populates the residue weights eta = w^4 / (u^2 dPhi/du) at each zero u.
inline ModeDecomposition residues(ModeDecomposition d, const NonlocalParams& p) {
    p.validate();
    const double w4 = std::pow(p.omega, 4);
    for (auto& m : d.real_modes) {
        const cplx z(0.0, m.omega_i);
        const cplx dpu = phi_u_prime(z, p);
        if (detail::derivative_ratio(z, p) < detail::kDegenerateRatio)
            throw DegenerateModes("residues: vanishing derivative at a real mode");
        const double u = -m.omega_i * m.omega_i;
        m.eta = w4 / (u * u * dpu.real());
        m.sign = m.eta >= 0.0 ? 1 : -1;
    }
    for (auto& m : d.complex_modes) {
        if (detail::derivative_ratio(m.root, p) < detail::kDegenerateRatio)
            throw DegenerateModes("residues: vanishing derivative at a complex mode");
        const cplx u = m.root * m.root;
        m.eta = w4 / (u * u * phi_u_prime(m.root, p));
    }
    d.residues_ready = true;
    return d;
}

/// Residue weight at an arbitrary zero z of Phi (used to check conjugation symmetry).
inline cplx residue_at(cplx z, const NonlocalParams& p) {
    const cplx u = z * z;
    return std::pow(p.omega, 4) / (u * u * phi_u_prime(z, p));
}

/// Right-hand side of the partial-fraction expansion of w^4 / Phi(z^2),
/// keeping the first `pairs` complex pairs (all stored ones by default).
inline cplx partial_fraction_eval(const ModeDecomposition& d, cplx z, int pairs = -1) {
    require(d.residues_ready, "partial_fraction_eval: residues not populated");
    const int n = pairs < 0 ? static_cast<int>(d.complex_modes.size())
                            : std::min<int>(pairs, static_cast<int>(d.complex_modes.size()));
    const cplx z2 = z * z;
    auto term = [&](cplx eta, cplx w2) {
        const cplx den = 1.0 + z2 / w2;
        if (std::abs(den) <= 1e-15) throw PoleHit("partial_fraction_eval: evaluated at a mode");
        return eta * w2 / den;
    };
    cplx real_part = 0.0, complex_part = 0.0;
    for (const auto& m : d.real_modes) real_part += term(m.eta, m.omega_i * m.omega_i);
    for (int k = 0; k < n; ++k) {
        const auto& m = d.complex_modes[k];
        const cplx w2 = m.omega_k * m.omega_k;
        complex_part += term(m.eta, w2) + term(std::conj(m.eta), std::conj(w2));
    }
    return real_part + complex_part;
}

/// Left-hand side w^4 / Phi(z^2).
inline cplx partial_fraction_target(cplx z, const NonlocalParams& p) {
    return std::pow(p.omega, 4) / phi(z, p);
}

// ---------------------------------------------------------------- generators

enum class GeneratorKind { oscillator, dilatation_rotation };

struct SpectrumGenerator {
    GeneratorKind kind = GeneratorKind::oscillator;
    int sign = 1;        // oscillator
    double omega = 0.0;  // oscillator
    double mu = 0.0;     // dilatation_rotation
    double nu = 0.0;     // dilatation_rotation
};

/// Oscillators (sign of eta, W_i) for real modes, and for each complex pair the
/// coefficients of h = mu D + nu L with mu = -Im w_k, nu = -Re w_k.
inline std::vector<SpectrumGenerator> spectrum_generators(const ModeDecomposition& d) {
    require(d.residues_ready, "spectrum_generators: residues not populated");
    std::vector<SpectrumGenerator> out;
    for (const auto& m : d.real_modes) out.push_back({GeneratorKind::oscillator, m.sign, m.omega_i, 0.0, 0.0});
    for (const auto& m : d.complex_modes)
        out.push_back({GeneratorKind::dilatation_rotation, 0, 0.0, -m.omega_k.imag(), -m.omega_k.real()});
    return out;
}

/// Level of one generator: sign * hbar W (n + 1/2) for an oscillator,
/// hbar (mu lambda + nu n) for a dilatation-rotation (lambda real, n integer).
inline double generator_level(const SpectrumGenerator& g, int n, double lambda, double hbar) {
    if (g.kind == GeneratorKind::oscillator) {
        require(n >= 0, "generator_level: oscillator quantum number must be >= 0");
        return g.sign * hbar * g.omega * (n + 0.5);
    }
    return hbar * (g.mu * lambda + g.nu * n);
}

// ---------------------------------------------------------------- classical modes

/// Every stored zero: i W, -i W per real mode, then z, conj z, -z, -conj z per complex pair.
inline std::vector<cplx> root_list(const ModeDecomposition& d) {
    std::vector<cplx> out;
    for (const auto& m : d.real_modes) {
        out.emplace_back(0.0, m.omega_i);
        out.emplace_back(0.0, -m.omega_i);
    }
    for (const auto& m : d.complex_modes) {
        out.push_back(m.root);
        out.push_back(std::conj(m.root));
        out.push_back(-m.root);
        out.push_back(-std::conj(m.root));
    }
    return out;
}

struct ModeTrajectory {
    std::vector<double> t;
    std::vector<double> q;
    std::vector<double> envelope;  // 2 |sum over upper-half-plane zeros of a_r e^{z_r t}|
    std::vector<double> residual;  // |sum a_r Phi(z_r) e^{z_r t}|
    std::vector<double> scale;     // sum |a_r| (|z_r|^2 + w^2 |cosh T z_r|) |e^{z_r t}|
};

/// q(t) = Re sum a_r e^{z_r t} over root_list(d), with the Euler-Lagrange
/// residual evaluated from exact exponentials.
inline ModeTrajectory mode_trajectory(const ModeDecomposition& d, const NonlocalParams& p,
                                      const std::vector<cplx>& amplitudes, const std::vector<double>& t_grid) {
    const auto roots = root_list(d);
    require(amplitudes.size() == roots.size(), "mode_trajectory: one amplitude per stored zero required");
    double tmax = 0.0;
    for (double t : t_grid) tmax = std::max(tmax, std::abs(t));
    for (std::size_t r = 0; r < roots.size(); ++r)
        if (amplitudes[r] != 0.0 && std::abs(roots[r].real()) * tmax > kPhiMaxExponent)
            throw OverflowGuard("mode_trajectory: Re(z) * t exceeds 700");
    std::vector<cplx> phis(roots.size());
    std::vector<double> mags(roots.size());
    for (std::size_t r = 0; r < roots.size(); ++r) {
        phis[r] = phi(roots[r], p);
        mags[r] = phi_scale(roots[r], p);
    }
    ModeTrajectory out;
    for (double t : t_grid) {
        cplx q = 0.0, res = 0.0, upper = 0.0;
        double sc = 0.0;
        for (std::size_t r = 0; r < roots.size(); ++r) {
            if (amplitudes[r] == 0.0) continue;
            const cplx e = amplitudes[r] * std::exp(roots[r] * t);
            q += e;
            res += phis[r] * e;
            sc += mags[r] * std::abs(e);
            if (roots[r].imag() > 0.0) upper += e;
        }
        out.t.push_back(t);
        out.q.push_back(q.real());
        out.envelope.push_back(2.0 * std::abs(upper));
        out.residual.push_back(std::abs(res));
        out.scale.push_back(sc);
    }
    return out;
}

// ---------------------------------------------------------------- JSON

inline nlohmann::json complex_to_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }
inline cplx complex_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline void to_json(nlohmann::json& j, const ModeDecomposition& d) {
    j = nlohmann::json::object();
    j["real_modes"] = nlohmann::json::array();
    for (const auto& m : d.real_modes)
        j["real_modes"].push_back({{"Omega_i", m.omega_i}, {"eta_i", m.eta}, {"sign_i", m.sign}});
    j["complex_modes"] = nlohmann::json::array();
    for (const auto& m : d.complex_modes)
        j["complex_modes"].push_back(
            {{"root", complex_to_json(m.root)}, {"omega_k", complex_to_json(m.omega_k)}, {"eta_k", complex_to_json(m.eta)}});
    j["truncation_K"] = d.truncation_K;
    j["tail_bound"] = d.tail_bound;
    j["search_radius"] = d.search_radius;
    j["residues_ready"] = d.residues_ready;
}

inline void from_json(const nlohmann::json& j, ModeDecomposition& d) {
    d = {};
    for (const auto& m : j.at("real_modes"))
        d.real_modes.push_back({m.at("Omega_i").get<double>(), m.at("eta_i").get<double>(), m.at("sign_i").get<int>()});
    for (const auto& m : j.at("complex_modes"))
        d.complex_modes.push_back(
            {complex_from_json(m.at("root")), complex_from_json(m.at("omega_k")), complex_from_json(m.at("eta_k"))});
    d.truncation_K = j.at("truncation_K").get<int>();
    d.tail_bound = j.at("tail_bound").get<double>();
    d.search_radius = j.value("search_radius", 0.0);
    d.residues_ready = j.value("residues_ready", false);
}

}  // namespace pulab
