#pragma once

// Theorem engine: combines condition verdicts into the strongest conclusion the
// existence/largeness theorems license, and cross-checks it against the solver.

#include "khessian/conditions.hpp"
#include "khessian/picard.hpp"
#include "khessian/problem.hpp"

#include <array>
#include <string>
#include <vector>

namespace khessian::classify
{
    using conditions::ConditionId;
    using conditions::ConditionReport;
    using conditions::Verdict;

    enum class TheoremId
    {
        T1,
        T2Existence,
        T2Largeness,
        T2Converse,
        T3,
        T4Existence,
        T4Largeness,
        T4Converse
    };

    inline const char *to_string(TheoremId id)
    {
        static constexpr const char *names[] = {"T1", "T2-existence", "T2-largeness", "T2-converse",
                                                "T3", "T4-existence", "T4-largeness", "T4-converse"};
        return names[static_cast<int>(id)];
    }

    enum class Conclusion
    {
        BoundedSolutionExists,
        EntireSolutionExists,
        AllSolutionsLarge,
        NecessaryConditionsHold,
        NotApplicable
    };

    inline const char *to_string(Conclusion c)
    {
        static constexpr const char *names[] = {"BoundedSolutionExists", "EntireSolutionExists", "AllSolutionsLarge",
                                                "NecessaryConditionsHold", "NotApplicable"};
        return names[static_cast<int>(c)];
    }

    struct TheoremVerdict
    {
        TheoremId id = TheoremId::T1;
        bool applicable = false;
        std::vector<ConditionReport> ledger; // every hypothesis of the theorem, in order
        Conclusion conclusion = Conclusion::NotApplicable;
        std::vector<std::string> blocking; // hypotheses that did not Hold
    };

    struct ClassifyOptions
    {
        std::vector<double> epsilon_grid = conditions::default_epsilon_grid();
        bool assume_large = false; // user asserts an entire large solution exists
    };

    namespace detail
    {
        inline ConditionReport structural_p1()
        {
            ConditionReport r{ConditionId::P1, Verdict::Holds};
            r.summary = "weights are functions of |x| only (enforced by the input format)";
            return r;
        }

        inline ConditionReport assumed_large(bool asserted)
        {
            ConditionReport r{ConditionId::ASSUMED_LARGE, asserted ? Verdict::Holds : Verdict::Inconclusive};
            r.summary = asserted ? "user asserts an entire large solution exists"
                                 : "not asserted; rerun with the large-solution assumption to evaluate";
            return r;
        }

        // Hypotheses are those in `ledger`; `reported` entries are appended for information only.
        inline TheoremVerdict combine(TheoremId id, std::vector<ConditionReport> hypotheses, Conclusion conclusion,
                                      std::vector<ConditionReport> reported = {})
        {
            TheoremVerdict v;
            v.id = id;
            for (const auto &h : hypotheses)
                if (h.verdict != Verdict::Holds)
                {
                    std::string b = std::string(conditions::to_string(h.id)) + " (" + conditions::to_string(h.verdict);
                    if (!h.summary.empty())
                        b += ": " + h.summary;
                    v.blocking.push_back(b + ")");
                }
            v.applicable = v.blocking.empty();
            v.conclusion = v.applicable ? conclusion : Conclusion::NotApplicable;
            v.ledger = std::move(hypotheses);
            for (auto &r : reported)
                v.ledger.push_back(std::move(r));
            return v;
        }
    }

    /// Scalar theorems: T1 (bounded), T2 existence / largeness / converse.
    inline std::vector<TheoremVerdict> classify_scalar(const ProblemSpec &problem, const ClassifyOptions &opt = {})
    {
        validate(problem);
        const int N = problem.N, k = problem.k;
        const auto p1 = detail::structural_p1();
        const auto gate = conditions::dimension_gate(N, k);
        const auto p2 = conditions::check_weight_monotonicity(problem.p, k, N);
        const auto c1 = conditions::check_nonlinearity(problem.h);
        const auto c3 = conditions::check_keller_osserman(problem.h, k);
        const auto eq5 = conditions::check_weight_decay(problem.p, k, opt.epsilon_grid);
        const auto eq12 = conditions::check_weight_largeness(problem.p, k, N);
        const auto eq13 =
            conditions::necessary_condition(N, k, std::span<const FunctionSpec>(&problem.p, 1), opt.epsilon_grid);
        const auto large = detail::assumed_large(opt.assume_large);

        std::vector<TheoremVerdict> out;
        out.push_back(detail::combine(TheoremId::T1, {gate, p1, p2, c1, c3, eq5}, Conclusion::BoundedSolutionExists));
        out.push_back(detail::combine(TheoremId::T2Existence, {p1, c1, c3}, Conclusion::EntireSolutionExists));
        out.push_back(detail::combine(TheoremId::T2Largeness, {p1, c1, c3, p2, eq12}, Conclusion::AllSolutionsLarge));
        out.push_back(
            detail::combine(TheoremId::T2Converse, {large, c1, c3, p2}, Conclusion::NecessaryConditionsHold, {eq13}));
        return out;
    }

    /// System theorems: T3 (bounded), T4 existence / largeness / converse.
    inline std::vector<TheoremVerdict> classify_system(const SystemSpec &sys, const ClassifyOptions &opt = {})
    {
        validate(sys);
        const int N = sys.N, k = sys.k;
        const std::array<FunctionSpec, 2> weights{sys.p, sys.q};
        const std::span<const FunctionSpec> w(weights);
        const auto p1 = detail::structural_p1();
        const auto gate = conditions::dimension_gate(N, k);
        const auto p3 = conditions::check_weight_monotonicity(w, k, N);
        const auto c2 = conditions::check_nonlinearity(sys.f, sys.g);
        const auto c4 = conditions::check_keller_osserman(sys.f, sys.g, k);
        const auto eq5s = conditions::check_weight_decay(w, k, opt.epsilon_grid);
        const auto eq12s = conditions::check_weight_largeness(sys.p, sys.q, k, N);
        const auto eq13s = conditions::necessary_condition(N, k, w, opt.epsilon_grid);
        const auto large = detail::assumed_large(opt.assume_large);

        std::vector<TheoremVerdict> out;
        out.push_back(detail::combine(TheoremId::T3, {gate, p1, p3, c2, c4, eq5s}, Conclusion::BoundedSolutionExists));
        out.push_back(detail::combine(TheoremId::T4Existence, {p1, c2, c4}, Conclusion::EntireSolutionExists));
        out.push_back(detail::combine(TheoremId::T4Largeness, {p1, c2, c4, p3, eq12s}, Conclusion::AllSolutionsLarge));
        out.push_back(
            detail::combine(TheoremId::T4Converse, {large, c2, c4, p3}, Conclusion::NecessaryConditionsHold, {eq13s}));
        return out;
    }

    inline const TheoremVerdict *find(const std::vector<TheoremVerdict> &vs, TheoremId id)
    {
        for (const auto &v : vs)
            if (v.id == id)
                return &v;
        return nullptr;
    }

    struct CrossCheck
    {
        std::vector<double> r_max;
        std::vector<picard::Status> status;
        std::vector<double> end_value;
        bool bounded_claim = false;
        bool large_claim = false;
        bool consistent = true;
        std::vector<std::string> notes;
    };

    /// Solves at each r_max and checks the classification against the profiles: a
    /// bounded claim must never meet GrowthDetected; a largeness claim needs the end
    /// value to at least double each time r_max doubles.
    inline CrossCheck solver_cross_check(const ProblemSpec &problem, const std::vector<TheoremVerdict> &verdicts,
                                         std::vector<double> radii = {5.0, 10.0, 20.0})
    {
        CrossCheck cc;
        const auto *t1 = find(verdicts, TheoremId::T1);
        const auto *t2 = find(verdicts, TheoremId::T2Largeness);
        cc.bounded_claim = t1 && t1->applicable;
        cc.large_claim = t2 && t2->applicable;
        picard::SolveOptions so;
        so.record_iterates = false;
        for (double R : radii)
        {
            ProblemSpec pr = problem;
            pr.controls.r_max = R;
            const auto rep = picard::solve_scalar(pr, so);
            cc.r_max.push_back(R);
            cc.status.push_back(rep.trace.status);
            cc.end_value.push_back(rep.solution.values.back());
            if (cc.bounded_claim && rep.trace.status == picard::Status::GrowthDetected)
            {
                cc.consistent = false;
                cc.notes.push_back("bounded claim but growth detected at r_max = " + std::to_string(R));
            }
        }
        if (cc.large_claim)
            for (std::size_t i = 1; i < cc.end_value.size(); ++i)
                if (!(cc.end_value[i] >= 2.0 * cc.end_value[i - 1]))
                {
                    cc.consistent = false;
                    cc.notes.push_back("largeness claim but end value did not double between r_max = " +
                                       std::to_string(cc.r_max[i - 1]) + " and " + std::to_string(cc.r_max[i]));
                }
        return cc;
    }
}
