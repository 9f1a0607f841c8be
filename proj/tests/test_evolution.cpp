#include <gtest/gtest.h>

#include "support.hpp"

using namespace susyopt;
using testing_support::hermite;
using testing_support::max_abs;
using testing_support::max_abs_diff;

namespace {

const double pi = std::numbers::pi;
const double period = 2.0 * pi;

Grid1D unit_grid(std::size_t n = 1024) { return make_grid(n, -15.0, 15.0); }
Superpotential barrier_w() { return Superpotential::paper_form({}); }

PotentialField harmonic(const Grid1D& g) {
    return PotentialField::sample(g, [](double x) { return 0.5 * x * x; });
}

double second_moment(const WaveFunction& psi) {
    double m = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) m += psi.grid().x(i) * psi.grid().x(i) * std::norm(psi[i]);
    return m * psi.grid().dx() / norm_squared(psi);
}

}  // namespace

TEST(KineticStep, PlaneWavePhase) {
    const auto g = make_grid(256, -10.0, 10.0);
    const double p0 = g.p(5);
    const auto psi = sample(g, [&](double x) { return std::polar(1.0, p0 * x); });
    const double tau = 0.37;
    const auto out = kinetic_step(psi, tau);
    EXPECT_LE(max_abs_diff(out, std::polar(1.0, -0.5 * p0 * p0 * tau) * psi), 1e-12);
}

TEST(KineticStep, FreeGaussianSpreading) {
    // |psi|^2 ~ exp(-x^2/sigma^2) with sigma(tau) = s0 sqrt(1 + tau^2/s0^4); <x^2> = sigma^2/2.
    const auto g = make_grid(4096, -60.0, 60.0);
    const double s0 = 1.3;
    const auto psi = sample(g, [&](double x) { return std::exp(-x * x / (2 * s0 * s0)); });
    for (double tau : {0.5, 2.0, 6.0}) {
        const double sigma2 = s0 * s0 * (1.0 + tau * tau / std::pow(s0, 4));
        EXPECT_NEAR(second_moment(kinetic_step(psi, tau)), 0.5 * sigma2, 1e-10);
    }
}

TEST(KineticStep, SemigroupUnitarityAndIdentity) {
    const auto g = unit_grid();
    const auto psi = testing_support::random_states(g, 1)[0];
    EXPECT_LE(max_abs_diff(kinetic_step(kinetic_step(psi, 0.3), 0.45), kinetic_step(psi, 0.75)), 1e-12);
    EXPECT_NEAR(norm(kinetic_step(psi, 1.7)), norm(psi), 1e-12);
    EXPECT_EQ(max_abs_diff(kinetic_step(psi, 0.0), psi), 0.0);
    EXPECT_THROW(kinetic_step(psi, -0.1), ContractError);
}

TEST(KineticStep, WorksInMomentumRepresentation) {
    const auto g = unit_grid(256);
    const auto psi = testing_support::random_states(g, 1, 4)[0];
    const auto via_momentum = to_position(kinetic_step(to_momentum(psi), 0.6));
    EXPECT_LE(max_abs_diff(via_momentum, kinetic_step(psi, 0.6)), 1e-12);
}

TEST(PotentialStep, PhaseOnly) {
    const auto g = unit_grid();
    const auto psi = testing_support::random_states(g, 1, 8)[0];
    const auto zero = PotentialField::sample(g, [](double) { return 0.0; });
    EXPECT_EQ(max_abs_diff(potential_step(psi, zero, 0.4), psi), 0.0);

    const auto v = partner_potential(barrier_w(), 2, g);
    const auto out = potential_step(psi, v, 0.4);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::norm(out[i]), std::norm(psi[i]), 1e-15);

    const auto c = PotentialField::sample(g, [](double) { return 3.2; });
    const auto shifted = potential_step(psi, c, 0.5);
    EXPECT_NEAR(fidelity(shifted, psi), 1.0, 1e-14);
    EXPECT_LE(max_abs_diff(shifted, std::polar(1.0, -1.6) * psi), 1e-15);
}

TEST(PotentialStep, RejectsMomentumRepresentation) {
    const auto g = unit_grid(64);
    const auto v = harmonic(g);
    EXPECT_THROW(potential_step(to_momentum(hermite(g, 0)), v, 0.1), ContractError);
}

TEST(TrotterPlan, Validation) {
    EXPECT_THROW(make_plan(0.0, 3), ConfigError);
    EXPECT_THROW(make_plan(-1.0, 3), ConfigError);
    EXPECT_THROW(plan_for_duration(1.0, 0.3), ConfigError);
    const auto plan = plan_for_duration(3 * period, period / 60);
    EXPECT_EQ(plan.n_steps, 180u);
    EXPECT_NEAR(plan.total_time(), 3 * period, 1e-12);
}

TEST(Trotter, ZeroStepsIsIdentity) {
    const auto g = unit_grid();
    const auto psi = testing_support::random_states(g, 1, 2)[0];
    const auto trace = trotter_evolve(psi, harmonic(g), make_plan(0.1, 0));
    EXPECT_EQ(max_abs_diff(trace.final_state, psi), 0.0);
    ASSERT_EQ(trace.times.size(), 1u);
    EXPECT_EQ(trace.times[0], 0.0);
}

TEST(Trotter, HarmonicRevival) {
    const auto g = unit_grid();
    const auto psi = hermite(g, 0, 5.0);
    const auto out = trotter_propagate(psi, harmonic(g), plan_for_duration(period, period / 60));
    EXPECT_GE(fidelity(out, psi), 1.0 - 1e-4);
}

TEST(Trotter, CoherentStateFollowsClassicalOrbit) {
    // Oracle: |psi(x,t)|^2 = pi^{-1/2} exp(-(x - a cos t)^2) for a displaced ground state.
    const auto g = unit_grid();
    const double a = 4.0;
    const auto psi = hermite(g, 0, a);
    const auto v = harmonic(g);
    const auto plan = make_plan(period / 6000, 1500);
    const auto trace = trotter_evolve(psi, v, plan, {true, 500});
    ASSERT_EQ(trace.times.size(), 4u);
    for (std::size_t s = 0; s < trace.times.size(); ++s) {
        const double t = trace.times[s];
        double dev = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.x(i) - a * std::cos(t);
            dev = std::max(dev, std::abs(trace.densities[s][i] - std::exp(-x * x) / std::sqrt(pi)));
        }
        EXPECT_LE(dev, 1e-6) << "t = " << t;
    }
}

TEST(Trotter, TraceTimesAscendEndAtTotal) {
    const auto g = unit_grid(256);
    const auto psi = hermite(g, 0, 1.0);
    const auto trace = trotter_evolve(psi, harmonic(g), make_plan(0.01, 25), {true, 7});
    const std::vector<double> expected{0.0, 0.07, 0.14, 0.21, 0.25};
    ASSERT_EQ(trace.times.size(), expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(trace.times[k], expected[k], 1e-15);
}

TEST(Trotter, UnitarityOverManySteps) {
    const auto g = unit_grid();
    const auto psi = apply_B_dag(hermite(g, 0, -5.0), barrier_w());
    const auto v = partner_potential(barrier_w(), 2, g);
    for (auto order : {TrotterOrder::first, TrotterOrder::second}) {
        const auto out = trotter_propagate(psi, v, make_plan(period / 60, 1000, order));
        EXPECT_LE(std::abs(norm(out) - norm(psi)), 1e-10 * norm(psi));
    }
}

TEST(Trotter, MergedEqualsUnmerged) {
    const auto g = unit_grid();
    const auto psi = normalized(apply_B_dag(hermite(g, 0, -5.0), barrier_w()));
    const auto v = partner_potential(barrier_w(), 2, g);
    const auto plan = make_plan(period / 60, 90);
    const auto merged = trotter_propagate(psi, v, plan, {true, 1});
    const auto plain = trotter_propagate(psi, v, plan, {false, 1});
    EXPECT_LE(max_abs_diff(merged, plain), 1e-12);
}

TEST(Trotter, ObserverSeesSameStatesEitherWay) {
    const auto g = unit_grid(256);
    const auto psi = hermite(g, 1, 2.0);
    const auto v = harmonic(g);
    const auto plan = make_plan(0.05, 12);
    std::vector<WaveFunction> a, b;
    trotter_propagate(psi, v, plan, {true, 1}, [&](std::size_t, double, const WaveFunction& s) { a.push_back(s); });
    trotter_propagate(psi, v, plan, {false, 1}, [&](std::size_t, double, const WaveFunction& s) { b.push_back(s); });
    ASSERT_EQ(a.size(), 13u);
    ASSERT_EQ(b.size(), 13u);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LE(max_abs_diff(a[k], b[k]), 1e-13);
}

TEST(ExactEvolve, FreeParticleMatchesKineticStep) {
    const auto g = unit_grid(512);
    const auto zero = PotentialField::sample(g, [](double) { return 0.0; });
    const ExactPropagator u(zero);
    for (const auto& psi : testing_support::random_states(g, 2, 13)) {
        EXPECT_LE(max_abs_diff(u.evolve(psi, 0.8), kinetic_step(psi, 0.8)), 1e-8 * max_abs(psi));
    }
}

TEST(ExactEvolve, IdentityLinearityAndReversal) {
    const auto g = unit_grid(512);
    const auto v = partner_potential(barrier_w(), 1, g);
    const ExactPropagator u(v);
    const auto states = testing_support::random_states(g, 2, 17);
    const auto& psi = states[0];
    const auto& phi = states[1];
    EXPECT_LE(max_abs_diff(u.evolve(psi, 0.0), psi), 1e-12);

    const complex a(0.4, 1.1), b(-2.0, 0.3);
    const double t = 1.3;
    const auto lhs = u.evolve(a * psi + b * phi, t);
    const auto rhs = a * u.evolve(psi, t) + b * u.evolve(phi, t);
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-10 * max_abs(rhs));

    EXPECT_LE(max_abs_diff(u.evolve(u.evolve(psi, 2.5), -2.5), psi), 1e-8);
    EXPECT_NEAR(norm(u.evolve(psi, 4.0)), norm(psi), 1e-12);
    EXPECT_THROW(exact_evolve(psi, v, -1.0), ContractError);
}

TEST(ExactEvolve, HarmonicEnergiesAreAnalytic) {
    const auto g = unit_grid(512);
    const ExactPropagator u(harmonic(g));
    for (std::size_t n = 0; n < 10; ++n) EXPECT_NEAR(u.energies()[n], n + 0.5, 1e-9);
}

TEST(Intertwining, ExactOracleOnRandomStates) {
    const auto g = unit_grid();
    const auto w = barrier_w();
    const ExactPropagator u1(partner_potential(w, 1, g));
    const ExactPropagator u2(partner_potential(w, 2, g));
    for (const auto& psi : testing_support::random_states(g, 3, 41)) {
        for (double t : {period / 4, period / 2, period, 3 * period}) {
            const double f = fidelity(apply_B_dag(u1.evolve(psi, t), w), u2.evolve(apply_B_dag(psi, w), t));
            EXPECT_GE(f, 1.0 - 1e-6) << "t = " << t;
        }
    }
}

TEST(Intertwining, TrotterOnRandomStates) {
    const auto g = unit_grid();
    const auto w = barrier_w();
    const auto v1 = partner_potential(w, 1, g);
    const auto v2 = partner_potential(w, 2, g);
    // Random states carry more kinetic energy than the reference packet, so a
    // finer step than T/60 keeps the splitting error out of the comparison.
    const double dt = period / 120;
    for (const auto& psi : testing_support::random_states(g, 3, 43)) {
        for (double t : {period / 4, period / 2, period, 3 * period}) {
            const auto plan = plan_for_duration(t, dt);
            const double f = fidelity(apply_B_dag(trotter_propagate(psi, v1, plan), w),
                                      trotter_propagate(apply_B_dag(psi, w), v2, plan));
            EXPECT_GE(f, 0.999) << "t = " << t;
        }
    }
}

TEST(ConvergenceScan, Validation) {
    const auto g = unit_grid(128);
    const auto v = harmonic(g);
    const ExactPropagator u(v);
    const auto psi = hermite(g, 0, 1.0);
    EXPECT_THROW(trotter_convergence_scan(psi, u, v, 1.0, {10, 5}), ConfigError);
    EXPECT_THROW(trotter_convergence_scan(psi, u, v, 1.0, {0, 5}), ConfigError);
}

TEST(ConvergenceScan, StateErrorOrders) {
    // The relative state error tracks the splitting order: n^-2 for second order, n^-1 for first.
    const auto g = unit_grid(512);
    const auto w = barrier_w();
    const auto v = partner_potential(w, 2, g);
    const ExactPropagator u(v);
    const auto psi = apply_B_dag(hermite(g, 0, -5.0), w);
    const std::vector<std::size_t> steps{60, 120, 240, 480};
    std::vector<double> n, e2, e1;
    const auto second = trotter_convergence_scan(psi, u, v, pi, steps, TrotterOrder::second);
    const auto first = trotter_convergence_scan(psi, u, v, pi, steps, TrotterOrder::first);
    for (std::size_t k = 0; k < steps.size(); ++k) {
        n.push_back(static_cast<double>(steps[k]));
        e2.push_back(second[k].l2_error);
        e1.push_back(first[k].l2_error);
        // 1 - |<a|b>| is at most half the squared relative error for small errors.
        EXPECT_LE(second[k].infidelity, 0.51 * second[k].l2_error * second[k].l2_error);
    }
    EXPECT_NEAR(fit_loglog_slope(n, e2), -2.0, 0.1);
    EXPECT_NEAR(fit_loglog_slope(n, e1), -1.0, 0.15);
}

TEST(FitSlope, ExactPowerLaw) {
    const std::vector<double> x{1, 2, 4, 8};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -2.5));
    EXPECT_NEAR(fit_loglog_slope(x, y), -2.5, 1e-12);
    EXPECT_THROW(fit_loglog_slope({1.0}, {1.0}), ContractError);
    EXPECT_THROW(fit_loglog_slope({1.0, 2.0}, {1.0, 0.0}), NumericalError);
}
