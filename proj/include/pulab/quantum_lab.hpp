#pragma once

// Grid quantum mechanics for the pieces of the Pais-Uhlenbeck and nonlocal
// Hamiltonians: finite-difference operators with homogeneous Dirichlet
// boundaries, Cayley (Crank-Nicolson) evolution, the dilatation-rotation
// generator in two dimensions, the divergent matrix elements of X, and the
// operator identity [X, H] = i hbar W X.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "common.hpp"
#include "ostrogradsky.hpp"
#include "quadrature.hpp"
#include "special_functions.hpp"

namespace pulab {

using SparseOp = Eigen::SparseMatrix<cplx>;
using CVector = Eigen::VectorXcd;

// ---------------------------------------------------------------- grids and states

struct Grid1D {
    double extent = 10.0;  // half-width L
    int points = 256;

    void validate() const {
        require(std::isfinite(extent) && extent > 0.0, "Grid1D: extent must be > 0");
        require(points >= 64, "Grid1D: need at least 64 points");
    }
    double spacing() const { return 2.0 * extent / (points - 1); }
    double x(int i) const { return -extent + i * spacing(); }
};

struct Grid2D {
    double extent = 10.0;
    int points = 128;  // per axis

    void validate() const {
        require(std::isfinite(extent) && extent > 0.0, "Grid2D: extent must be > 0");
        require(points >= 64, "Grid2D: need at least 64 points per axis");
    }
    Grid1D axis() const { return {extent, points}; }
    double spacing() const { return axis().spacing(); }
    int size() const { return points * points; }
    int index(int i, int j) const { return i + points * j; }  // i along x1, j along x2
};

/// Mass within this many cells of any boundary is monitored.
inline int boundary_band(int points) { return std::max(4, points / 32); }

inline constexpr double kBoundaryMassLimit = 1e-8;

struct WaveState {
    double spacing = 0.0;
    int points_per_axis = 0;
    int dims = 1;
    CVector psi;
    double norm = 0.0;
    bool boundary_flag = false;

    double compute_norm() const {
        return std::sqrt(psi.squaredNorm() * std::pow(spacing, dims));
    }
    void refresh() { norm = compute_norm(); }

    /// Probability in the boundary band, relative to the total.
    double boundary_mass() const {
        const int n = points_per_axis, b = boundary_band(n);
        double edge = 0.0;
        if (dims == 1) {
            for (int i = 0; i < n; ++i)
                if (i < b || i >= n - b) edge += std::norm(psi[i]);
        } else {
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    if (i < b || i >= n - b || j < b || j >= n - b) edge += std::norm(psi[i + n * j]);
        }
        const double total = psi.squaredNorm();
        return total > 0.0 ? edge / total : 0.0;
    }
};

inline WaveState make_state(const Grid1D& g, const std::function<cplx(double)>& f) {
    g.validate();
    WaveState s;
    s.spacing = g.spacing();
    s.points_per_axis = g.points;
    s.dims = 1;
    s.psi.resize(g.points);
    for (int i = 0; i < g.points; ++i) s.psi[i] = f(g.x(i));
    s.refresh();
    s.boundary_flag = s.boundary_mass() > kBoundaryMassLimit;
    return s;
}

inline WaveState make_state(const Grid2D& g, const std::function<cplx(double, double)>& f) {
    g.validate();
    const Grid1D a = g.axis();
    WaveState s;
    s.spacing = g.spacing();
    s.points_per_axis = g.points;
    s.dims = 2;
    s.psi.resize(g.size());
    for (int j = 0; j < g.points; ++j)
        for (int i = 0; i < g.points; ++i) s.psi[g.index(i, j)] = f(a.x(i), a.x(j));
    s.refresh();
    s.boundary_flag = s.boundary_mass() > kBoundaryMassLimit;
    return s;
}

/// Normalized Gaussian packet centred at x0 with mean momentum p0.
inline WaveState gaussian_packet(const Grid1D& g, double x0, double p0, double sigma, double hbar) {
    const double c = std::pow(pi * sigma * sigma, -0.25);
    return make_state(g, [&](double x) {
        return c * std::exp(-(x - x0) * (x - x0) / (2.0 * sigma * sigma) + I * p0 * x / hbar);
    });
}

/// psi(r, theta) = f(r) e^{i n theta}.
inline WaveState angular_state(const Grid2D& g, const std::function<double(double)>& radial, int n) {
    return make_state(g, [&](double x, double y) {
        return radial(std::hypot(x, y)) * std::exp(I * static_cast<double>(n) * std::atan2(y, x));
    });
}

inline cplx inner(const WaveState& a, const WaveState& b) {
    return a.psi.dot(b.psi) * std::pow(a.spacing, a.dims);
}

inline double fidelity(const WaveState& a, const WaveState& b) {
    return std::norm(inner(a, b)) / (std::norm(a.norm) * std::norm(b.norm));
}

inline cplx rayleigh_quotient(const WaveState& s, const SparseOp& H) {
    const CVector hpsi = H * s.psi;
    return s.psi.dot(hpsi) / s.psi.squaredNorm();
}

// ---------------------------------------------------------------- difference operators

namespace detail {

/// One-sided weights c_1..c_m of centered stencils on a unit grid:
/// first derivative sum_k c_k (f_{i+k} - f_{i-k}); second derivative
/// c_0 f_i + sum_k c_k (f_{i+k} + f_{i-k}).
inline std::vector<double> first_weights(int order) {
    switch (order) {
        case 2: return {0.5};
        case 4: return {8.0 / 12.0, -1.0 / 12.0};
        case 6: return {45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0};
    }
    throw InvalidArgument("difference stencil: order must be 2, 4 or 6");
}

inline std::vector<double> second_weights(int order) {
    switch (order) {
        case 2: return {-2.0, 1.0};
        case 4: return {-30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0};
        case 6: return {-490.0 / 180.0, 270.0 / 180.0, -27.0 / 180.0, 2.0 / 180.0};
    }
    throw InvalidArgument("difference stencil: order must be 2, 4 or 6");
}

}  // namespace detail

/// Centered first difference of order 2, 4 or 6, Dirichlet (values outside are 0).
inline SparseOp first_difference(int n, double h, int order = 2) {
    const auto c = detail::first_weights(order);
    std::vector<Eigen::Triplet<cplx>> t;
    for (int i = 0; i < n; ++i)
        for (int k = 1; k <= static_cast<int>(c.size()); ++k) {
            if (i + k < n) t.emplace_back(i, i + k, c[k - 1] / h);
            if (i - k >= 0) t.emplace_back(i, i - k, -c[k - 1] / h);
        }
    SparseOp m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

/// Centered second difference of order 2, 4 or 6, Dirichlet.
inline SparseOp second_difference(int n, double h, int order = 2) {
    const auto c = detail::second_weights(order);
    std::vector<Eigen::Triplet<cplx>> t;
    const double h2 = h * h;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, c[0] / h2);
        for (int k = 1; k < static_cast<int>(c.size()); ++k) {
            if (i + k < n) t.emplace_back(i, i + k, c[k] / h2);
            if (i - k >= 0) t.emplace_back(i, i - k, c[k] / h2);
        }
    }
    SparseOp m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

inline SparseOp diagonal(const std::vector<double>& d) {
    SparseOp m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    std::vector<Eigen::Triplet<cplx>> t;
    for (int i = 0; i < static_cast<int>(d.size()); ++i) t.emplace_back(i, i, d[i]);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

inline SparseOp position(const Grid1D& g) {
    std::vector<double> x(g.points);
    for (int i = 0; i < g.points; ++i) x[i] = g.x(i);
    return diagonal(x);
}

inline SparseOp identity(int n) {
    SparseOp m(n, n);
    m.setIdentity();
    return m;
}

/// max |A - A^dagger|.
inline double hermiticity_defect(const SparseOp& a) {
    const SparseOp d = SparseOp(a.adjoint()) - a;
    double worst = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SparseOp::InnerIterator it(d, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
}

// ---------------------------------------------------------------- Hamiltonians

/// -hbar^2/2 D2 + s w^2 x^2 / 2 with s = -1 (inverted) or +1 (harmonic);
/// second-order stencil, real symmetric.
inline SparseOp build_hamiltonian_quadratic(const Grid1D& g, double omega, double hbar, double potential_sign) {
    g.validate();
    require(hbar > 0.0, "build_hamiltonian: hbar must be > 0");
    std::vector<double> v(g.points);
    for (int i = 0; i < g.points; ++i) v[i] = potential_sign * 0.5 * omega * omega * g.x(i) * g.x(i);
    SparseOp h = -0.5 * hbar * hbar * second_difference(g.points, g.spacing()) + diagonal(v);
    h.makeCompressed();
    return h;
}

inline SparseOp build_hamiltonian_inverted(const Grid1D& g, double omega, double hbar) {
    return build_hamiltonian_quadratic(g, omega, hbar, -1.0);
}

inline SparseOp build_hamiltonian_harmonic(const Grid1D& g, double omega, double hbar) {
    return build_hamiltonian_quadratic(g, omega, hbar, +1.0);
}

/// All eigenvalues of the (tridiagonal) inverted-oscillator operator, ascending.
inline std::vector<double> inverted_spectrum(const Grid1D& g, double omega, double hbar) {
    g.validate();
    const double h = g.spacing();
    Eigen::VectorXd diag(g.points), sub(g.points - 1);
    for (int i = 0; i < g.points; ++i) diag[i] = hbar * hbar / (h * h) - 0.5 * omega * omega * g.x(i) * g.x(i);
    for (int i = 0; i + 1 < g.points; ++i) sub[i] = -0.5 * hbar * hbar / (h * h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

struct GapAtZero {
    double gap = 0.0;            // distance between the eigenvalues bracketing 0
    double local_spacing = 0.0;  // median spacing of the 10 neighbouring levels on each side
    bool both_signs = false;
};

inline GapAtZero gap_at_zero(const std::vector<double>& ev) {
    GapAtZero r;
    const auto it = std::lower_bound(ev.begin(), ev.end(), 0.0);
    r.both_signs = it != ev.begin() && it != ev.end();
    if (!r.both_signs) return r;
    const auto k = static_cast<std::size_t>(it - ev.begin());
    r.gap = ev[k] - ev[k - 1];
    std::vector<double> sp;
    for (std::size_t i = (k > 11 ? k - 11 : 1); i < std::min(ev.size(), k + 11); ++i)
        if (i != k) sp.push_back(ev[i] - ev[i - 1]);
    std::nth_element(sp.begin(), sp.begin() + sp.size() / 2, sp.end());
    r.local_spacing = sp[sp.size() / 2];
    return r;
}

/// (mu/2)(Q1 P1 + P1 Q1 + Q2 P2 + P2 Q2) + nu (Q1 P2 - Q2 P1), P = -i hbar D1
/// with centered differences. Hermitian including the boundary rows.
inline SparseOp build_hamiltonian_dilrot(const Grid2D& g, double mu, double nu, double hbar) {
    g.validate();
    const int n = g.points;
    const Grid1D a = g.axis();
    const SparseOp id = identity(n);
    const SparseOp q = position(a);
    const SparseOp p = cplx(0.0, -hbar) * first_difference(n, a.spacing());
    // Kronecker products: index = i + n j, x1 acts on i, x2 acts on j.
    auto kron = [&](const SparseOp& on_x2, const SparseOp& on_x1) {
        SparseOp out(n * n, n * n);
        std::vector<Eigen::Triplet<cplx>> t;
        for (int ka = 0; ka < on_x2.outerSize(); ++ka)
            for (SparseOp::InnerIterator ia(on_x2, ka); ia; ++ia)
                for (int kb = 0; kb < on_x1.outerSize(); ++kb)
                    for (SparseOp::InnerIterator ib(on_x1, kb); ib; ++ib)
                        t.emplace_back(static_cast<int>(ia.row()) * n + static_cast<int>(ib.row()),
                                       static_cast<int>(ia.col()) * n + static_cast<int>(ib.col()),
                                       ia.value() * ib.value());
        out.setFromTriplets(t.begin(), t.end());
        return out;
    };
    const SparseOp q1 = kron(id, q), q2 = kron(q, id), p1 = kron(id, p), p2 = kron(p, id);
    SparseOp h = (0.5 * mu) * (SparseOp(q1 * p1) + SparseOp(p1 * q1) + SparseOp(q2 * p2) + SparseOp(p2 * q2)) +
                 nu * (SparseOp(q1 * p2) - SparseOp(q2 * p1));
    h.prune(cplx(0.0));
    h.makeCompressed();
    return h;
}

// ---------------------------------------------------------------- evolution

struct EvolutionRecord {
    WaveState final_state;
    std::vector<double> norms;  // after each step
    double max_step_drift = 0.0;
    double max_boundary_mass = 0.0;
};

/// Cayley steps (1 + i dt H / 2 hbar) psi' = (1 - i dt H / 2 hbar) psi.
inline EvolutionRecord evolve_tracked(const WaveState& state, const SparseOp& H, double dt, int steps, double hbar) {
    require(H.rows() == state.psi.size() && H.cols() == state.psi.size(), "evolve: operator size mismatch");
    require(steps >= 0 && std::isfinite(dt) && hbar > 0.0, "evolve: bad dt/steps/hbar");
    const int n = static_cast<int>(H.rows());
    const cplx f = I * dt / (2.0 * hbar);
    SparseOp A = identity(n) + f * H;
    SparseOp B = identity(n) - f * H;
    A.makeCompressed();
    Eigen::SparseLU<SparseOp> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw NumericalFailure("evolve: factorization failed");
    EvolutionRecord rec;
    rec.final_state = state;
    WaveState& s = rec.final_state;
    double prev = s.compute_norm();
    for (int k = 0; k < steps; ++k) {
        const CVector rhs = B * s.psi;
        s.psi = lu.solve(rhs);
        if (lu.info() != Eigen::Success) throw NumericalFailure("evolve: solve failed");
        const double nm = s.compute_norm();
        rec.norms.push_back(nm);
        rec.max_step_drift = std::max(rec.max_step_drift, std::abs(nm - prev) / prev);
        prev = nm;
        const double bm = s.boundary_mass();
        rec.max_boundary_mass = std::max(rec.max_boundary_mass, bm);
        if (bm > kBoundaryMassLimit) s.boundary_flag = true;
    }
    s.refresh();
    return rec;
}

inline WaveState evolve(const WaveState& state, const SparseOp& H, double dt, int steps, double hbar) {
    return evolve_tracked(state, H, dt, steps, hbar).final_state;
}

// ---------------------------------------------------------------- dilatation-rotation flow

struct DilrotPoint {
    double q1 = 0.0, q2 = 0.0, p1 = 0.0, p2 = 0.0;
};

/// Exact flow of h = mu (q.p) + nu (q1 p2 - q2 p1): q dilates by e^{mu t},
/// p by e^{-mu t}, and both planes rotate by the angle nu t.
inline DilrotPoint classical_dilrot_flow(const DilrotPoint& s, double mu, double nu, double t) {
    if (std::abs(mu * t) > 700.0) throw OverflowGuard("classical_dilrot_flow: |mu t| exceeds 700");
    const double c = std::cos(nu * t), sn = std::sin(nu * t);
    const double eq = std::exp(mu * t), ep = std::exp(-mu * t);
    return {eq * (c * s.q1 - sn * s.q2), eq * (sn * s.q1 + c * s.q2), ep * (c * s.p1 - sn * s.p2),
            ep * (sn * s.p1 + c * s.p2)};
}

/// Jacobian of the flow in the ordering (q1, q2, p1, p2), by central differences.
inline std::array<std::array<double, 4>, 4> dilrot_jacobian(const DilrotPoint& s, double mu, double nu, double t,
                                                            double step = 1e-6) {
    std::array<std::array<double, 4>, 4> jac{};
    const std::array<double, 4> base{s.q1, s.q2, s.p1, s.p2};
    for (int c = 0; c < 4; ++c) {
        auto plus = base, minus = base;
        plus[c] += step;
        minus[c] -= step;
        const auto fp = classical_dilrot_flow({plus[0], plus[1], plus[2], plus[3]}, mu, nu, t);
        const auto fm = classical_dilrot_flow({minus[0], minus[1], minus[2], minus[3]}, mu, nu, t);
        const std::array<double, 4> a{fp.q1, fp.q2, fp.p1, fp.p2}, b{fm.q1, fm.q2, fm.p1, fm.p2};
        for (int r = 0; r < 4; ++r) jac[r][c] = (a[r] - b[r]) / (2.0 * step);
    }
    return jac;
}

// ---------------------------------------------------------------- divergent matrix elements

struct DivergenceRow {
    double cutoff = 0.0;
    cplx element;         // truncated matrix element of X
    cplx control;         // same with the damped control operator
    double increment = 0.0;          // |element(R_k) - element(R_{k-1})|, R_{-1} = 0
    double control_increment = 0.0;
};

struct DivergenceScan {
    std::vector<DivergenceRow> rows;
    double oscillator_overlap = 0.0;  // delta_{n' n}
    double control_width = 4.0;
};

/// X psi for the continuum factor: sqrt(2) W (-i hbar psi' - W x psi).
inline cplx x_on_inverted(double epsilon, int branch, double x, const PUParams& p) {
    const cplx f = inverted_eigenfunction(epsilon, branch, x, p);
    const cplx df = inverted_eigenfunction_derivative(epsilon, branch, x, p);
    return sqrt2 * p.omega_cap * (-I * p.hbar * df - p.omega_cap * x * f);
}

/// Truncated <n', eps'| X |n, eps> over |x2| <= R for each cutoff R (in units
/// of sqrt(hbar/W)). The oscillator factor contributes delta_{n' n}; the x2
/// integral uses the continuum factors. The control replaces X by
/// x exp(-x^2 / (2 s^2)) with s = control_width sqrt(hbar/W).
inline DivergenceScan divergence_scan(const EigenLabel& bra, const EigenLabel& ket, const std::vector<double>& cutoffs,
                                      const PUParams& p, double control_width = 4.0) {
    p.validate();
    bra.validate();
    ket.validate();
    require(!cutoffs.empty(), "divergence_scan: need cutoffs");
    for (std::size_t k = 0; k < cutoffs.size(); ++k)
        require(cutoffs[k] > 0.0 && (k == 0 || cutoffs[k] > cutoffs[k - 1]), "divergence_scan: cutoffs must increase");
    DivergenceScan out;
    out.control_width = control_width;
    out.oscillator_overlap = bra.n == ket.n ? 1.0 : 0.0;
    const double unit = std::sqrt(p.hbar / p.omega_cap);
    const double s = control_width * unit;
    auto integrand = [&](double x) -> std::pair<cplx, cplx> {
        const cplx b = std::conj(inverted_eigenfunction(bra.epsilon, bra.branch, x, p));
        const cplx xk = x_on_inverted(ket.epsilon, ket.branch, x, p);
        const cplx kk = inverted_eigenfunction(ket.epsilon, ket.branch, x, p);
        return {b * xk, b * x * std::exp(-x * x / (2.0 * s * s)) * kk};
    };
    // Accumulate over the shells between successive cutoffs. The integrand
    // oscillates at most like exp(i W x^2 / hbar), so panels scale with R.
    auto shell = [&](double a, double b) {
        std::pair<cplx, cplx> acc{0.0, 0.0};
        for (double sign : {1.0, -1.0}) {
            const double span = b - a;
            const double kmax = 2.0 * p.omega_cap * b / p.hbar;
            const int panels = 8 + static_cast<int>(std::ceil(span * (kmax / (2.0 * pi) + 1.0 / unit)));
            for (const auto& [x, w] : composite_gauss_nodes(a, b, panels)) {
                const auto v = integrand(sign * x);
                acc.first += w * v.first;
                acc.second += w * v.second;
            }
        }
        return acc;
    };
    std::pair<cplx, cplx> total{0.0, 0.0};
    double prev_r = 0.0;
    cplx prev_e = 0.0, prev_c = 0.0;
    for (double rc : cutoffs) {
        const double r = rc * unit;
        const auto add = shell(prev_r, r);
        total.first += add.first;
        total.second += add.second;
        DivergenceRow row;
        row.cutoff = rc;
        row.element = out.oscillator_overlap * total.first;
        row.control = out.oscillator_overlap * total.second;
        row.increment = std::abs(row.element - prev_e);
        row.control_increment = std::abs(row.control - prev_c);
        prev_e = row.element;
        prev_c = row.control;
        prev_r = r;
        out.rows.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------- commutator

struct CommutatorResult {
    double residual = 0.0;  // interior max |([X,H] - i hbar W X) f| / max |i hbar W X f|
    int points = 0;
    double spacing = 0.0;
};

/// Applies [X, H] - i hbar W X to a smooth test function (a displaced
/// Gaussian times a linear factor) with X = sqrt(2) W (P - W Q) and H the
/// inverted piece of the decoupled Hamiltonian, -(P^2/2 - W^2 Q^2/2),
/// P = -i hbar D1. Reports the residual over the interior |x| <= L/2.
inline CommutatorResult commutator_check(const Grid1D& g, const PUParams& p, int stencil_order = 6) {
    g.validate();
    require(p.hbar > 0.0 && p.omega_cap >= 0.0, "commutator_check: need hbar > 0, omega >= 0");
    const int n = g.points;
    const double h = g.spacing(), w = p.omega_cap, hb = p.hbar;
    const SparseOp q = position(g);
    const SparseOp d1 = first_difference(n, h, stencil_order);
    const SparseOp d2 = second_difference(n, h, stencil_order);
    const SparseOp mom = cplx(0.0, -hb) * d1;
    const SparseOp x_op = (sqrt2 * w) * (mom - w * q);
    const SparseOp h_op = (0.5 * hb * hb) * d2 + (0.5 * w * w) * SparseOp(q * q);
    CVector f(n);
    for (int i = 0; i < n; ++i) {
        const double x = g.x(i);
        f[i] = (1.0 + 0.5 * x) * std::exp(-(x - 0.3) * (x - 0.3) / 2.0);
    }
    const CVector xf = x_op * f, hf = h_op * f;
    const CVector comm = x_op * hf - h_op * xf - cplx(0.0, hb * w) * xf;
    CommutatorResult r;
    r.points = n;
    r.spacing = h;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(g.x(i)) > 0.5 * g.extent) continue;
        num = std::max(num, std::abs(comm[i]));
        den = std::max(den, std::abs(hb * w * xf[i]));
    }
    r.residual = den > 0.0 ? num / den : num;
    return r;
}

}  // namespace pulab
