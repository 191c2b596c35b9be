#include "khessian/picard.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace khessian;
using namespace khessian::picard;

namespace
{
    ProblemSpec laplace(double r_max = 5.0)
    {
        ProblemSpec pr;
        pr.controls.r_max = r_max;
        return pr;
    }

    RadialGrid constant(const ProblemSpec &pr, double a)
    {
        RadialGrid g;
        g.nodes = stretched_nodes(pr.controls.r_max, pr.controls.grid_points);
        g.values.assign(g.nodes.size(), a);
        g.derivative.assign(g.nodes.size(), 0.0);
        return g;
    }

    double sinhc(double r) { return r < 1e-4 ? 1.0 + r * r / 6 : std::sinh(r) / r; }
}

TEST(PicardStep, ClosedFormLaplace)
{
    const auto pr = laplace();
    const auto w = picard_step(constant(pr, 1.0), pr);
    EXPECT_EQ(w.values[0], 1.0);
    EXPECT_EQ(w.derivative[0], 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
    {
        const double r = w.nodes[i];
        EXPECT_NEAR(w.values[i], 1.0 + r * r / 6, 1e-8);
        EXPECT_NEAR(w.derivative[i], r / 3, 1e-10);
    }
}

TEST(PicardStep, ClosedFormMongeAmpere)
{
    auto pr = laplace();
    pr.k = 3;
    const auto w = picard_step(constant(pr, 1.0), pr);
    for (std::size_t i = 0; i < w.size(); ++i)
        EXPECT_NEAR(w.values[i], 1.0 + w.nodes[i] * w.nodes[i] / 2, 1e-8);
}

TEST(PicardStep, VanishingNonlinearityIsFixed)
{
    auto pr = laplace();
    pr.h = expr::parse("max(u-1,0)", 1);
    const auto w = picard_step(constant(pr, 1.0), pr);
    for (double v : w.values)
        EXPECT_EQ(v, 1.0);
}

TEST(PicardStep, MonotoneInIterationAndRadius)
{
    const auto pr = laplace();
    auto prev = picard_step(constant(pr, 1.0), pr);
    for (int m = 0; m < 5; ++m)
    {
        const auto next = picard_step(prev, pr);
        for (std::size_t i = 0; i < next.size(); ++i)
        {
            EXPECT_GE(next.values[i], prev.values[i]);
            EXPECT_GE(next.derivative[i], 0.0);
            if (i > 0)
                EXPECT_GE(next.values[i], next.values[i - 1]);
        }
        prev = next;
    }
}

TEST(Solve, LaplaceOracle)
{
    const auto pr = laplace();
    const auto rep = solve_scalar(pr);
    ASSERT_EQ(rep.trace.status, Status::Converged);
    double err = 0.0;
    for (std::size_t i = 0; i < rep.solution.size(); ++i)
        err = std::max(err, std::fabs(rep.solution.values[i] - sinhc(rep.solution.nodes[i])));
    EXPECT_LT(err, 1e-4);
    EXPECT_NEAR(rep.solution.values.back(), 14.84064, 1e-3);
    EXPECT_TRUE(rep.gamma_k_certified);
    EXPECT_LE(rep.residual, 10 * pr.controls.tol * (1 + rep.sup_value));
    // the profile keeps accelerating at r_max, so boundedness is not claimed
    EXPECT_NE(rep.classification, Classification::Bounded);
}

TEST(Solve, DecayingWeightIsBounded)
{
    auto pr = laplace(50.0);
    pr.p = expr::parse("exp(-t)", 1);
    const auto rep = solve_scalar(pr);
    ASSERT_EQ(rep.trace.status, Status::Converged);
    EXPECT_EQ(rep.classification, Classification::Bounded);
    EXPECT_LT(rep.residual, 1e-4);
    // S_1 = p u drops below the absolute cone tolerance once e^-r u < 1e-12, so the
    // far tail is boundary contact; nothing may be strictly outside the cone
    EXPECT_FALSE(rep.gamma_k_certified);
    EXPECT_GT(rep.cone.boundary_contacts, 0u);
    EXPECT_EQ(rep.cone.failing_nodes, rep.cone.boundary_contacts);
    const auto &g = rep.solution;
    const auto d2u = differentiate(g.nodes, g.derivative);
    for (std::size_t i = 1; i < g.size() && g.nodes[i] < 20.0; ++i)
        EXPECT_TRUE(radial::in_gamma_k(radial::radial_eigenvalues(g.derivative[i], d2u[i], g.nodes[i], 3), 1));
    // sup over [0, 50] stabilizes: the tail adds almost nothing
    const auto &u = rep.solution;
    const double mid = HermiteProfile(u)(25.0);
    EXPECT_LT(u.values.back() - mid, 0.1 * (mid - 1.0));
}

TEST(Solve, TrivialSolution)
{
    auto pr = laplace();
    pr.h = expr::parse("max(u-1,0)", 1);
    const auto rep = solve_scalar(pr);
    EXPECT_EQ(rep.trace.status, Status::Converged);
    EXPECT_EQ(rep.iterations, 1u);
    EXPECT_EQ(rep.residual, 0.0);
    for (double v : rep.solution.values)
        EXPECT_EQ(v, 1.0);
}

TEST(Solve, SuperlinearBlowsUp)
{
    auto pr = laplace();
    pr.h = expr::parse("u^2", 1);
    const auto rep = solve_scalar(pr);
    EXPECT_EQ(rep.trace.status, Status::GrowthDetected);
    EXPECT_EQ(rep.classification, Classification::LargeCandidate);
    EXPECT_FALSE(rep.notes.empty());
}

TEST(Solve, IterationCap)
{
    auto pr = laplace();
    pr.controls.max_iter = 2;
    const auto rep = solve_scalar(pr);
    EXPECT_EQ(rep.trace.status, Status::MaxIterations);
    EXPECT_EQ(rep.classification, Classification::Inconclusive);
    EXPECT_EQ(rep.trace.sup_deltas.size(), 2u);
    EXPECT_EQ(rep.trace.iterates.size(), 3u);
}

TEST(Solve, InvalidProblems)
{
    auto pr = laplace();
    pr.p = expr::parse("t-1", 1);
    EXPECT_THROW((void)solve_scalar(pr), SpecError);
    pr = laplace();
    pr.h = expr::parse("u+1", 1);
    EXPECT_THROW((void)solve_scalar(pr), SpecError);
    pr = laplace();
    pr.k = 4;
    EXPECT_THROW((void)solve_scalar(pr), SpecError);
    pr = laplace();
    pr.controls.grid_points = 10;
    EXPECT_THROW((void)solve_scalar(pr), SpecError);
}

TEST(System, SymmetricReducesToScalar)
{
    SystemSpec sys;
    const auto rep = solve_system(sys);
    ASSERT_EQ(rep.status, Status::Converged);
    const auto scalar = solve_scalar(laplace());
    for (std::size_t i = 0; i < rep.u.solution.size(); ++i)
    {
        EXPECT_EQ(rep.u.solution.values[i], rep.v.solution.values[i]);
        EXPECT_NEAR(rep.u.solution.values[i], scalar.solution.values[i], 1e-6);
        EXPECT_NEAR(rep.u.solution.values[i], sinhc(rep.u.solution.nodes[i]), 1e-4);
    }
}

TEST(System, IteratesStaySymmetric)
{
    SystemSpec sys;
    auto u = constant(laplace(), 1.0), v = u;
    for (int m = 0; m < 4; ++m)
    {
        std::tie(u, v) = picard_step_system(u, v, sys);
        EXPECT_EQ(u.values, v.values);
    }
}

TEST(System, RejectsVanishingNonlinearity)
{
    SystemSpec sys;
    sys.f = expr::parse("0*u", 2);
    sys.g = expr::parse("0*v", 2);
    EXPECT_THROW((void)solve_system(sys), SpecError);
}

TEST(System, AsymmetricBounded)
{
    SystemSpec sys;
    sys.controls.r_max = 10.0;
    sys.p = expr::parse("exp(-t)", 1);
    sys.q = expr::parse("exp(-2*t)", 1);
    sys.f = expr::parse("v", 2);
    sys.g = expr::parse("u", 2);
    const auto rep = solve_system(sys);
    ASSERT_EQ(rep.status, Status::Converged);
    EXPECT_TRUE(rep.u.gamma_k_certified);
    EXPECT_TRUE(rep.v.gamma_k_certified);
    EXPECT_LT(rep.u.residual, 1e-5);
    EXPECT_LT(rep.v.residual, 1e-5);
}

TEST(Comparison, Examples)
{
    const auto same = comparison_check(laplace(), laplace());
    EXPECT_TRUE(same.ordered);
    EXPECT_EQ(same.min_gap, 0.0);

    auto hi = laplace();
    hi.a = 2.0;
    const auto strict = comparison_check(laplace(), hi);
    EXPECT_TRUE(strict.ordered);
    EXPECT_GT(strict.min_gap, 0.0);

    auto lo = laplace();
    lo.p = expr::parse("exp(-t)", 1);
    EXPECT_TRUE(comparison_check(lo, laplace()).ordered);

    EXPECT_THROW((void)comparison_check(hi, laplace()), SpecError);
    EXPECT_THROW((void)comparison_check(laplace(), lo), SpecError);
}

TEST(Apriori, Examples)
{
    const auto pr = laplace();
    IterationTrace flat;
    flat.iterates.push_back(constant(pr, 1.0));
    const auto b0 = apriori_bound_check(flat, pr, 1.0);
    EXPECT_EQ(b0.lhs, 0.0);
    EXPECT_TRUE(b0.holds);

    const auto rep = solve_scalar(pr);
    IterationTrace last;
    last.iterates.push_back(rep.solution);
    const auto b1 = apriori_bound_check(last, pr, 1.0);
    EXPECT_NEAR(b1.rhs, std::sqrt(2.0), 1e-12);
    // independent evaluation: int_1^w ((t^2-1)/2)^(-1/2) dt = sqrt(2) acosh(w)
    EXPECT_NEAR(b1.lhs, std::sqrt(2.0) * std::acosh(std::sinh(1.0)), 1e-7);
    EXPECT_LT(b1.lhs, b1.rhs);

    auto decay = laplace(20.0);
    decay.p = expr::parse("exp(-t)", 1);
    const auto d = solve_scalar(decay);
    const auto b2 = apriori_bound_check(d.trace, decay, 2.0);
    EXPECT_TRUE(b2.holds);
    EXPECT_EQ(b2.lhs_per_iterate.size(), d.trace.iterates.size());

    auto shifted = pr;
    shifted.a = 2.0;
    EXPECT_THROW((void)apriori_bound_check(rep.trace, shifted, 1.0), SpecError);
    EXPECT_THROW((void)apriori_bound_check(rep.trace, pr, 6.0), SpecError);
}
