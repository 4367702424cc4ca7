#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <pulab/ostrogradsky.hpp>

using namespace pulab;

namespace {

PhaseState random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    return {u(rng), u(rng), u(rng), u(rng)};
}

}  // namespace

TEST(Lagrangian, SmallCases) {
    EXPECT_EQ(lagrangian_pu(0.0, 0.0, {1.0, 1.0}), 0.0);
    EXPECT_DOUBLE_EQ(lagrangian_pu(1.0, 0.0, {1.0, 1.0}), 0.5);
    // mpmath: (4 - 1.5^4 * 9) / 2
    EXPECT_NEAR(lagrangian_pu(2.0, 3.0, {1.5, 1.0}), -20.78125, 1e-13);
}

TEST(PhaseVariables, SlotsAndSigns) {
    const auto s = ostrogradsky_state(1, 2, 3, 4);
    EXPECT_EQ(s.q1, 1);
    EXPECT_EQ(s.q2, 2);
    EXPECT_EQ(s.pi1, -4);
    EXPECT_EQ(s.pi2, 3);
    const auto c = ostrogradsky_state(std::cos(0.0), -std::sin(0.0), -std::cos(0.0), std::sin(0.0));
    EXPECT_EQ(c.q1, 1.0);
    EXPECT_EQ(c.q2, 0.0);
    EXPECT_EQ(c.pi1, 0.0);
    EXPECT_EQ(c.pi2, -1.0);
}

TEST(Hamiltonian, ValuesAndConservationOnExactSolution) {
    const PUParams p{1.0, 1.0};
    EXPECT_DOUBLE_EQ(hamiltonian_pu({1, 0, 0, 0}, p), 0.5);
    EXPECT_EQ(hamiltonian_pu({}, p), 0.0);
    const double h0 = hamiltonian_pu(ostrogradsky_state(1, 0, -1, 0), p);
    for (double t = 0.0; t <= 10.0; t += 0.37) {
        const auto s = ostrogradsky_state(std::cos(t), -std::sin(t), -std::cos(t), std::sin(t));
        EXPECT_NEAR(hamiltonian_pu(s, p), h0, 1e-14);
    }
}

TEST(CanonicalFlow, FixedPointAndDecayingSolution) {
    const PUParams p{1.3, 1.0};
    const auto z = canonical_flow({}, p);
    EXPECT_EQ(z.q1, 0.0);
    EXPECT_EQ(z.pi2, 0.0);
    const double w = p.omega_cap;
    const auto s0 = ostrogradsky_state(1.0, -w, w * w, -w * w * w);
    const auto times = uniform_grid(0.0, 5.0, 51);
    const auto traj = integrate_flow(s0, p, times);
    for (std::size_t i = 0; i < times.size(); ++i)
        EXPECT_NEAR(traj[i].q1, std::exp(-w * times[i]), 1e-8) << "t=" << times[i];
}

TEST(CanonicalFlow, EnergyDriftOverTenUnits) {
    const PUParams p{1.0, 1.0};
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const auto s0 = random_state(rng);
        const auto times = uniform_grid(0.0, 10.0, 101);
        const auto traj = integrate_flow(s0, p, times);
        const double h0 = hamiltonian_pu(s0, p);
        for (const auto& s : traj) {
            const double scale = std::max(hamiltonian_pu_scale(s, p), hamiltonian_pu_scale(s0, p));
            EXPECT_LE(std::abs(hamiltonian_pu(s, p) - h0) / scale, 1e-9);
        }
    }
}

TEST(CanonicalFlow, FourthDifferenceResidualIsSecondOrder) {
    const PUParams p{1.0, 1.0};
    const PhaseState s0{0.4, -0.3, 0.2, 0.5};
    double prev = 0.0;
    // Coarse grids: below h ~ 0.01 the integrator tolerance dominates.
    for (int n : {51, 101, 201}) {
        const auto times = uniform_grid(0.0, 5.0, n);
        const auto traj = integrate_flow(s0, p, times, {1e-12, 1e-14, 1e-4});
        std::vector<double> q;
        for (const auto& s : traj) q.push_back(s.q1);
        const double r = fourth_difference_residual(q, times[1] - times[0], p);
        EXPECT_LE(r, 1e-6);
        if (prev > 0.0) EXPECT_GT(prev / r, 4.0);
        prev = r;
    }
}

TEST(CanonicalFlow, ScalingCovariance) {
    // W -> sW, t -> t/s maps trajectories with q2, pi2, pi1 rescaled by s, s^2, s^3.
    const double s = 1.7;
    const PUParams p1{1.0, 1.0}, p2{s, 1.0};
    const PhaseState a{0.3, 0.2, -0.1, 0.4};
    const PhaseState b{a.q1, s * a.q2, s * s * s * a.pi1, s * s * a.pi2};
    const auto ta = uniform_grid(0.0, 3.0, 31);
    std::vector<double> tb;
    for (double t : ta) tb.push_back(t / s);
    const auto ra = integrate_flow(a, p1, ta, {1e-12, 1e-14, 1e-4});
    const auto rb = integrate_flow(b, p2, tb, {1e-12, 1e-14, 1e-4});
    for (std::size_t i = 0; i < ta.size(); ++i) {
        const double sc = 1.0 + std::abs(ra[i].q1) + std::abs(ra[i].pi1);
        EXPECT_NEAR(rb[i].q1, ra[i].q1, 1e-9 * sc);
        EXPECT_NEAR(rb[i].q2, s * ra[i].q2, 1e-9 * s * sc);
        EXPECT_NEAR(rb[i].pi2, s * s * ra[i].pi2, 1e-9 * s * s * sc);
        EXPECT_NEAR(rb[i].pi1, s * s * s * ra[i].pi1, 1e-9 * s * s * s * sc);
    }
}

TEST(Decoupling, RoundTripAndZero) {
    std::mt19937_64 rng(11);
    for (double w : {0.5, 1.0, 2.3}) {
        const PUParams p{w, 1.0};
        for (int i = 0; i < 200; ++i) {
            const auto s = random_state(rng);
            const auto back = recouple(decouple(s, p), p);
            EXPECT_NEAR(back.q1, s.q1, 1e-12 * 3);
            EXPECT_NEAR(back.q2, s.q2, 1e-12 * 3);
            EXPECT_NEAR(back.pi1, s.pi1, 1e-12 * 3);
            EXPECT_NEAR(back.pi2, s.pi2, 1e-12 * 3);
        }
        const auto z = decouple({}, p);
        EXPECT_EQ(z.x1, 0.0);
        EXPECT_EQ(z.p2, 0.0);
    }
}

TEST(Decoupling, HamiltonianIdentityOnRandomStates) {
    std::mt19937_64 rng(3);
    for (double w : {0.7, 1.0, 2.0}) {
        const PUParams p{w, 1.0};
        for (int i = 0; i < 1000; ++i) {
            const auto s = random_state(rng);
            const double a = hamiltonian_pu(s, p);
            const double b = hamiltonian_decoupled(decouple(s, p), p);
            EXPECT_LE(std::abs(a - b), 1e-12 * hamiltonian_pu_scale(s, p));
        }
    }
}

TEST(Decoupling, SymplecticJacobian) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        const PUParams p{0.5 + i * 0.3, 1.0};
        EXPECT_LE(symplectic_defect(decouple_jacobian(random_state(rng), p)), 1e-12);
    }
}

TEST(DecoupledHamiltonian, SingleTerms) {
    // oscillator term is W^2 X^2 / 2
    EXPECT_DOUBLE_EQ(hamiltonian_decoupled({1, 0, 0, 0}, {2.0, 1.0}), 2.0);
    EXPECT_EQ(hamiltonian_decoupled({}, {2.0, 1.0}), 0.0);
    EXPECT_DOUBLE_EQ(hamiltonian_decoupled({0, 1, 0, 0}, {2.0, 1.0}), 0.5);
    EXPECT_DOUBLE_EQ(hamiltonian_decoupled({0, 0, 0, 1}, {2.0, 1.0}), -0.5);
}

TEST(XObservable, ValuesAndDecoupledForm) {
    const PUParams p{1.0, 1.0};
    EXPECT_EQ(x_observable({}, p), 0.0);
    EXPECT_EQ(x_in_decoupled({}, p), 0.0);
    EXPECT_NEAR(x_in_decoupled({0, 0, 0, 1}, p), std::sqrt(2.0), 1e-15);
    std::mt19937_64 rng(13);
    for (double w : {0.6, 1.0, 1.9}) {
        const PUParams q{w, 1.0};
        for (int i = 0; i < 1000; ++i) {
            const auto s = random_state(rng);
            const double a = x_observable(s, q);
            const double b = x_in_decoupled(decouple(s, q), q);
            const double scale = std::abs(s.pi1) + w * std::abs(s.pi2) + w * w * w * std::abs(s.q1) + w * w * std::abs(s.q2);
            EXPECT_LE(std::abs(a - b), 1e-12 * scale);
        }
    }
}

TEST(XObservable, GrowthRateAlongFlow) {
    std::mt19937_64 rng(17);
    for (double w : {1.0, 0.8}) {
        const PUParams p{w, 1.0};
        const auto g = x_growth_fit(random_state(rng), p);
        EXPECT_NEAR(g.fit.slope, w, 1e-6);
        EXPECT_LE(g.fit.max_residual, 1e-6);
    }
}

TEST(XObservable, VanishesOnOscillatorySolution) {
    const PUParams p{1.0, 1.0};
    const auto s0 = ostrogradsky_state(1.0, 0.0, -1.0, 0.0);
    const auto times = uniform_grid(0.0, 5.0, 26);
    for (const auto& s : integrate_flow(s0, p, times)) EXPECT_NEAR(x_observable(s, p), 0.0, 1e-8);
}

TEST(SolutionCoeffs, RealityAndReconstruction) {
    EXPECT_THROW(ClassicalSolutionCoeffs(cplx(1, 1), cplx(1, 1), 0, 0, 1.0), InvalidArgument);
    const PUParams p{1.2, 1.0};
    const PhaseState s{0.3, -0.4, 0.7, 0.1};
    const auto c = ClassicalSolutionCoeffs::from_state(s, p);
    const auto times = uniform_grid(0.0, 2.0, 11);
    const auto traj = integrate_flow(s, p, times, {1e-12, 1e-14, 1e-4});
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto e = c.state(times[i]);
        EXPECT_NEAR(e.q1, traj[i].q1, 1e-9);
        EXPECT_NEAR(e.pi1, traj[i].pi1, 1e-8);
    }
}

TEST(Params, Validation) {
    EXPECT_THROW((PUParams{0.0, 1.0}.validate()), InvalidArgument);
    EXPECT_THROW((PUParams{1.0, -1.0}.validate()), InvalidArgument);
}
