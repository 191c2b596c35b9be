#pragma once

// Successive approximation for entire radial solutions.
//
// A radial solution with u(0) = a, u'(0) = 0 is a fixed point of
//
//   T[w](r) = a + int_0^r ( k I(t) / t^(N-k) )^(1/k) dt,
//   I(t)    = int_0^t s^(N-1) / C(N-1, k-1) * (p(s) h(w(s)))^k ds,
//
// and the iterates w^0 = a, w^m = T[w^(m-1)] are non-decreasing in both r and m.

#include "khessian/error.hpp"
#include "khessian/grid.hpp"
#include "khessian/problem.hpp"
#include "khessian/quad.hpp"
#include "khessian/radial.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace khessian::picard
{
    enum class Status
    {
        Converged,
        GrowthDetected,
        MaxIterations
    };

    enum class Classification
    {
        Bounded,
        LargeCandidate,
        Inconclusive
    };

    inline const char *to_string(Status s)
    {
        switch (s)
        {
        case Status::Converged: return "Converged";
        case Status::GrowthDetected: return "GrowthDetected";
        default: return "MaxIterations";
        }
    }

    inline const char *to_string(Classification c)
    {
        switch (c)
        {
        case Classification::Bounded: return "Bounded";
        case Classification::LargeCandidate: return "LargeCandidate";
        default: return "Inconclusive";
        }
    }

    struct IterationTrace
    {
        std::vector<RadialGrid> iterates; // w^0, w^1, ... (when recorded)
        std::vector<double> sup_deltas;   // sup |w^m - w^(m-1)|, m = 1, 2, ...
        Status status = Status::MaxIterations;
    };

    struct SolveReport
    {
        RadialGrid solution;
        IterationTrace trace;
        std::size_t iterations = 0;
        double residual = 0.0;
        bool gamma_k_certified = false;
        radial::ConeCertificate cone;
        Classification classification = Classification::Inconclusive;
        double sup_value = 0.0;
        std::vector<std::string> notes;
    };

    struct SolveOptions
    {
        bool record_iterates = true;
        // Growth heuristic: this many consecutive non-shrinking deltas with a rising end value.
        std::size_t growth_streak = 5;
    };

    namespace detail
    {
        inline double ipow(double x, int k)
        {
            double r = 1.0;
            for (int i = 0; i < k; ++i)
                r *= x;
            return r;
        }

        inline double root(double x, int k)
        {
            if (k == 1)
                return x;
            if (k == 2)
                return std::sqrt(x);
            if (k == 3)
                return std::cbrt(x);
            return std::pow(x, 1.0 / k);
        }

        // Gauss-Legendre 7-point rule on [-1, 1], for inner integrals over part of a cell.
        inline constexpr double gl7_x[7] = {-0.949107912342758524526189684047851, -0.741531185599394439863864773280788,
                                            -0.405845151377397166906606412076961, 0.0,
                                            0.405845151377397166906606412076961, 0.741531185599394439863864773280788,
                                            0.949107912342758524526189684047851};
        inline constexpr double gl7_w[7] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                            0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
                                            0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
                                            0.129484966168869693270611432679082};

        inline double quad_tol(double tol) { return std::min(1e-12, 1e-4 * tol); }

        /// One application of T on `nodes`, with the k-th root of the inner integrand
        /// supplied by `source(cell, s)` (= p(s) h(w(s)) for the scalar problem).
        template <class Source>
        RadialGrid apply_operator(const std::vector<double> &nodes, double a, int N, int k, const Source &source,
                                  double tol)
        {
            const double c = static_cast<double>(radial::binomial(N - 1, k - 1));
            const std::size_t n = nodes.size();

            auto cell_of = [&](double s) {
                auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
                std::size_t i = static_cast<std::size_t>(it - nodes.begin());
                return i == 0 ? 0 : std::min(i - 1, n - 2);
            };
            auto inner_integrand = [&](std::size_t cell, double s) {
                const double v = source(cell, s);
                if (v < 0.0)
                    throw NumericalError("negative radicand in the Picard operator at s = " + std::to_string(s));
                return ipow(s, N - 1) / c * ipow(v, k);
            };

            const auto prefix = quad::cumulative_integral(
                [&](double s) { return inner_integrand(cell_of(s), s); }, nodes, tol);

            // t^(k-N) cancels the t^N growth of I(t); the limit at t = 0 is 0.
            auto slope = [&](double inner, double t) {
                if (t <= 0.0)
                    return 0.0;
                return root(std::max(0.0, k * inner / ipow(t, N - k)), k);
            };

            RadialGrid out;
            out.nodes = nodes;
            out.values.assign(n, a);
            out.derivative.assign(n, 0.0);
            for (std::size_t i = 1; i < n; ++i)
                out.derivative[i] = slope(prefix[i], nodes[i]);

            for (std::size_t i = 0; i + 1 < n; ++i)
            {
                const double lo = nodes[i];
                auto phi = [&](double t) {
                    const double half = 0.5 * (t - lo), mid = 0.5 * (t + lo);
                    double partial = 0.0;
                    for (int q = 0; q < 7; ++q)
                        partial += gl7_w[q] * inner_integrand(i, mid + half * gl7_x[q]);
                    return slope(prefix[i] + half * partial, t);
                };
                out.values[i + 1] = out.values[i] + quad::integrate(phi, lo, nodes[i + 1], tol).value;
            }
            return out;
        }

        inline double sup_delta(const RadialGrid &x, const RadialGrid &y)
        {
            double d = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                d = std::max(d, std::fabs(x.values[i] - y.values[i]));
            return d;
        }

        inline bool all_finite(const RadialGrid &g)
        {
            for (std::size_t i = 0; i < g.size(); ++i)
                if (!std::isfinite(g.values[i]) || !std::isfinite(g.derivative[i]))
                    return false;
            return true;
        }

        inline RadialGrid constant_profile(const std::vector<double> &nodes, double a)
        {
            return {nodes, std::vector<double>(nodes.size(), a), std::vector<double>(nodes.size(), 0.0)};
        }

        // The profile has stopped rising steeply: u' at r_max is no larger than at r_max / 2.
        inline bool stabilized(const RadialGrid &g)
        {
            const double half = 0.5 * g.r_max();
            auto it = std::lower_bound(g.nodes.begin(), g.nodes.end(), half);
            const std::size_t mid = static_cast<std::size_t>(it - g.nodes.begin());
            return g.derivative.back() <= g.derivative[std::min(mid, g.size() - 1)];
        }

        /// Runs the iteration to convergence, growth, or the iteration cap. `step`
        /// maps the current state to the next one and `measure` returns (sup delta,
        /// previous end value, end value, sup value, finite?) between two states.
        template <class State, class Step, class Measure>
        Status iterate(State &state, const SolverControls &ctl, const SolveOptions &opt, const Step &step,
                       const Measure &measure, std::vector<State> *history, std::vector<double> &deltas,
                       std::size_t &iterations, std::vector<std::string> &notes)
        {
            std::size_t small_streak = 0, growth_streak = 0;
            if (history)
                history->push_back(state);
            for (iterations = 0; iterations < ctl.max_iter;)
            {
                State next;
                try
                {
                    next = step(state);
                }
                catch (const OverflowError &e)
                {
                    notes.push_back(std::string("iteration overflowed: ") + e.what());
                    return Status::GrowthDetected;
                }
                ++iterations;
                const auto [delta, prev_end, end_value, sup_value, finite] = measure(state, next);
                if (!finite)
                {
                    notes.push_back("iterate became non-finite");
                    return Status::GrowthDetected;
                }
                const double prev_delta = deltas.empty() ? -1.0 : deltas.back();
                deltas.push_back(delta);
                state = std::move(next);
                if (history)
                    history->push_back(state);

                if (end_value > ctl.growth_ceiling)
                {
                    notes.push_back("end value exceeded the growth ceiling");
                    return Status::GrowthDetected;
                }
                if (delta == 0.0)
                    return Status::Converged;
                small_streak = delta <= ctl.tol * std::max(1.0, sup_value) ? small_streak + 1 : 0;
                if (small_streak >= 2)
                    return Status::Converged;
                growth_streak = (prev_delta >= 0.0 && delta >= prev_delta && end_value > prev_end) ? growth_streak + 1 : 0;
                if (growth_streak >= opt.growth_streak)
                {
                    notes.push_back("sup-norm deltas grew for " + std::to_string(growth_streak) +
                                    " consecutive iterations");
                    return Status::GrowthDetected;
                }
            }
            return Status::MaxIterations;
        }

        inline void finish_report(SolveReport &rep, const ProblemSpec &pr)
        {
            rep.sup_value = rep.solution.values.back();
            if (all_finite(rep.solution))
            {
                rep.residual = radial::residual(rep.solution, pr);
                rep.cone = radial::certify_gamma_k(rep.solution, pr.N, pr.k);
                rep.gamma_k_certified = rep.cone.certified;
            }
            else
            {
                rep.residual = std::numeric_limits<double>::infinity();
            }
            switch (rep.trace.status)
            {
            case Status::Converged:
                rep.classification = stabilized(rep.solution) ? Classification::Bounded : Classification::Inconclusive;
                break;
            case Status::GrowthDetected:
                rep.classification = Classification::LargeCandidate;
                rep.notes.push_back("growth on a finite interval is a heuristic; largeness is decided by the "
                                    "weight integral condition, and finite-radius blow-up is expected when the "
                                    "Keller-Osserman condition fails");
                break;
            default:
                rep.classification = Classification::Inconclusive;
            }
        }
    }

    /// One successive-approximation step: T applied to `w_prev` on its own nodes.
    inline RadialGrid picard_step(const RadialGrid &w_prev, const ProblemSpec &problem)
    {
        const HermiteProfile w(w_prev);
        const auto &p = problem.p;
        const auto &h = problem.h;
        auto source = [&](std::size_t cell, double s) { return p(s) * h(w.in_cell(cell, s)); };
        return detail::apply_operator(w_prev.nodes, problem.a, problem.N, problem.k, source,
                                      detail::quad_tol(problem.controls.tol));
    }

    /// Iterates from w^0 = a until convergence, detected growth, or max_iter.
    inline SolveReport solve_scalar(const ProblemSpec &problem, const SolveOptions &opt = {})
    {
        validate(problem);
        const auto &ctl = problem.controls;
        SolveReport rep;
        RadialGrid state = detail::constant_profile(stretched_nodes(ctl.r_max, ctl.grid_points), problem.a);

        auto step = [&](const RadialGrid &g) { return picard_step(g, problem); };
        auto measure = [](const RadialGrid &prev, const RadialGrid &next) {
            return std::tuple{detail::sup_delta(prev, next), prev.values.back(), next.values.back(),
                              next.values.back(), detail::all_finite(next)};
        };
        rep.trace.status = detail::iterate(state, ctl, opt, step, measure,
                                           opt.record_iterates ? &rep.trace.iterates : nullptr,
                                           rep.trace.sup_deltas, rep.iterations, rep.notes);
        rep.solution = std::move(state);
        detail::finish_report(rep, problem);
        return rep;
    }

    struct SystemSolveReport
    {
        SolveReport u;
        SolveReport v;
        Status status = Status::MaxIterations;
        std::size_t iterations = 0;
    };

    /// One Jacobi step of the coupled iteration: both components from the previous pair.
    inline std::pair<RadialGrid, RadialGrid> picard_step_system(const RadialGrid &u_prev, const RadialGrid &v_prev,
                                                                const SystemSpec &sys)
    {
        const HermiteProfile u(u_prev), v(v_prev);
        const double tol = detail::quad_tol(sys.controls.tol);
        auto source_u = [&](std::size_t cell, double s) { return sys.p(s) * sys.f(u.in_cell(cell, s), v.in_cell(cell, s)); };
        auto source_v = [&](std::size_t cell, double s) { return sys.q(s) * sys.g(u.in_cell(cell, s), v.in_cell(cell, s)); };
        return {detail::apply_operator(u_prev.nodes, sys.a_u, sys.N, sys.k, source_u, tol),
                detail::apply_operator(v_prev.nodes, sys.a_v, sys.N, sys.k, source_v, tol)};
    }

    inline SystemSolveReport solve_system(const SystemSpec &sys, const SolveOptions &opt = {})
    {
        validate(sys);
        const auto &ctl = sys.controls;
        const auto nodes = stretched_nodes(ctl.r_max, ctl.grid_points);
        using Pair = std::pair<RadialGrid, RadialGrid>;
        Pair state{detail::constant_profile(nodes, sys.a_u), detail::constant_profile(nodes, sys.a_v)};

        auto step = [&](const Pair &s) { return picard_step_system(s.first, s.second, sys); };
        auto measure = [](const Pair &prev, const Pair &next) {
            const double d = std::max(detail::sup_delta(prev.first, next.first), detail::sup_delta(prev.second, next.second));
            const double prev_end = std::max(prev.first.values.back(), prev.second.values.back());
            const double end = std::max(next.first.values.back(), next.second.values.back());
            return std::tuple{d, prev_end, end, end, detail::all_finite(next.first) && detail::all_finite(next.second)};
        };

        SystemSolveReport rep;
        std::vector<Pair> history;
        std::vector<double> deltas;
        std::vector<std::string> notes;
        rep.status = detail::iterate(state, ctl, opt, step, measure, opt.record_iterates ? &history : nullptr, deltas,
                                     rep.iterations, notes);

        auto fill = [&](SolveReport &r, RadialGrid sol, double a, const FunctionSpec &w, bool first) {
            r.solution = std::move(sol);
            r.iterations = rep.iterations;
            r.trace.status = rep.status;
            r.notes = notes;
            for (std::size_t m = 0; m < history.size(); ++m)
                r.trace.iterates.push_back(first ? history[m].first : history[m].second);
            for (std::size_t m = 1; m < r.trace.iterates.size(); ++m)
                r.trace.sup_deltas.push_back(detail::sup_delta(r.trace.iterates[m - 1], r.trace.iterates[m]));
            if (r.trace.sup_deltas.empty())
                r.trace.sup_deltas = deltas;
            // Residual against the component equation, with the other component frozen at its solution.
            ProblemSpec frozen;
            frozen.N = sys.N;
            frozen.k = sys.k;
            frozen.a = a;
            frozen.p = w;
            frozen.controls = ctl;
            r.sup_value = r.solution.values.back();
            const auto &other = first ? state.second : state.first;
            if (detail::all_finite(r.solution) && detail::all_finite(other))
            {
                const auto hp = radial::HessianParams::make(sys.N, sys.k);
                const auto s = radial::k_hessian_radial(r.solution.nodes, r.solution.derivative, hp);
                std::vector<double> rhs(r.solution.size());
                for (std::size_t i = 0; i < rhs.size(); ++i)
                {
                    const double uu = first ? r.solution.values[i] : other.values[i];
                    const double vv = first ? other.values[i] : r.solution.values[i];
                    rhs[i] = w(r.solution.nodes[i]) * (first ? sys.f(uu, vv) : sys.g(uu, vv));
                }
                const auto res = radial::pointwise_residual(s, rhs, sys.k);
                r.residual = *std::max_element(res.begin(), res.end());
                r.cone = radial::certify_gamma_k(r.solution, sys.N, sys.k);
                r.gamma_k_certified = r.cone.certified;
            }
            else
            {
                r.residual = std::numeric_limits<double>::infinity();
            }
            switch (rep.status)
            {
            case Status::Converged:
                r.classification = detail::stabilized(r.solution) ? Classification::Bounded : Classification::Inconclusive;
                break;
            case Status::GrowthDetected: r.classification = Classification::LargeCandidate; break;
            default: r.classification = Classification::Inconclusive;
            }
        };
        fill(rep.u, state.first, sys.a_u, sys.p, true);
        fill(rep.v, state.second, sys.a_v, sys.q, false);
        // Bounded needs both components bounded.
        if (rep.u.classification != rep.v.classification &&
            (rep.u.classification == Classification::Bounded || rep.v.classification == Classification::Bounded))
        {
            if (rep.u.classification == Classification::Bounded)
                rep.u.classification = Classification::Inconclusive;
            if (rep.v.classification == Classification::Bounded)
                rep.v.classification = Classification::Inconclusive;
        }
        return rep;
    }

    struct ComparisonResult
    {
        bool ordered = false;
        double min_gap = 0.0; // min over nodes of high - low
        std::size_t compared_iteration = 0;
    };

    /// Solves both problems and checks solution_low <= solution_high at every node.
    ///
    /// The problems may differ only in the initial value and the weight, with
    /// a_low <= a_high and p_low <= p_high on the grid.
    inline ComparisonResult comparison_check(const ProblemSpec &low, const ProblemSpec &high)
    {
        if (low.N != high.N || low.k != high.k || !(low.h == high.h) || low.controls.r_max != high.controls.r_max ||
            low.controls.grid_points != high.controls.grid_points)
            throw SpecError("comparison_check: problems must share N, k, h and the grid");
        if (!(low.a <= high.a))
            throw SpecError("comparison_check: incomparable initial values");
        for (double r : stretched_nodes(low.controls.r_max, low.controls.grid_points))
            if (low.p(r) > high.p(r))
                throw SpecError("comparison_check: incomparable weights at r = " + std::to_string(r));

        const auto lo = solve_scalar(low);
        const auto hi = solve_scalar(high);
        const RadialGrid *x = &lo.solution;
        const RadialGrid *y = &hi.solution;
        ComparisonResult res;
        res.compared_iteration = std::max(lo.iterations, hi.iterations);
        if (lo.trace.status != Status::Converged || hi.trace.status != Status::Converged)
        {
            // compare at a common iteration count
            const std::size_t m = std::min(lo.trace.iterates.size(), hi.trace.iterates.size()) - 1;
            x = &lo.trace.iterates[m];
            y = &hi.trace.iterates[m];
            res.compared_iteration = m;
        }
        res.ordered = true;
        res.min_gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x->size(); ++i)
        {
            const double gap = y->values[i] - x->values[i];
            res.min_gap = std::min(res.min_gap, gap);
            if (gap < -1e-10)
                res.ordered = false;
        }
        return res;
    }

    struct AprioriBound
    {
        double R = 0.0;
        double phi_R = 0.0; // max of p^k on [0, R]
        double lhs = 0.0;   // largest left-hand side over the iterates
        double rhs = 0.0;
        std::vector<double> lhs_per_iterate;
        bool holds = true;
        bool degenerate = false;
    };

    namespace detail
    {
        // int_1^w [ int_1^t h^k ]^(-1/(k+1)) dt, substituting t = 1 + x^(k+1) to remove
        // the endpoint singularity.
        inline double bound_lhs(double w, const FunctionSpec &h, int k, double tol)
        {
            if (w <= 1.0)
                return 0.0;
            auto hk = [&](double s) { return ipow(h(s), k); };
            const double m = k + 1.0;
            const double top = std::pow(w - 1.0, 1.0 / m);
            auto integrand = [&](double x) {
                const double t = 1.0 + std::pow(x, m);
                const double inner = quad::integrate(hk, 1.0, t, tol).value;
                if (!(inner > 0.0))
                    throw NumericalError("a priori bound: inner integral vanishes");
                return m * std::pow(x, k) * std::pow(inner, -1.0 / m);
            };
            return quad::integrate(integrand, 0.0, top, tol).value;
        }
    }

    /// Evaluates the a priori bound
    ///   int_1^{w(R)} [int_1^t h^k]^(-1/(k+1)) dt <= ((k+1) phi_R / C(N-1,k-1))^(1/(k+1)) R^(2k/(k+1))
    /// for every recorded iterate.
    inline AprioriBound apriori_bound_check(const IterationTrace &trace, const ProblemSpec &problem, double R,
                                            double slack = 1e-8)
    {
        if (problem.a != 1.0)
            throw SpecError("apriori_bound_check: the bound is stated for iterates anchored at 1");
        if (!(R > 0.0) || R > problem.controls.r_max)
            throw SpecError("apriori_bound_check: requires 0 < R <= r_max");
        const int k = problem.k;
        AprioriBound b;
        b.R = R;
        constexpr int samples = 2001;
        for (int i = 0; i < samples; ++i)
            b.phi_R = std::max(b.phi_R, detail::ipow(problem.p(R * i / (samples - 1)), k));
        const double c = static_cast<double>(radial::binomial(problem.N - 1, k - 1));
        b.rhs = std::pow((k + 1) * b.phi_R / c, 1.0 / (k + 1)) * std::pow(R, 2.0 * k / (k + 1));

        if (!(problem.h(1.0) > 0.0))
        {
            b.degenerate = true;
            for (const auto &it : trace.iterates)
                if (HermiteProfile(it)(R) > 1.0)
                    b.holds = false;
            return b;
        }
        for (const auto &it : trace.iterates)
        {
            const double lhs = detail::bound_lhs(HermiteProfile(it)(R), problem.h, k, 1e-10);
            b.lhs_per_iterate.push_back(lhs);
            b.lhs = std::max(b.lhs, lhs);
            if (lhs > b.rhs + slack)
                b.holds = false;
        }
        return b;
    }
}
