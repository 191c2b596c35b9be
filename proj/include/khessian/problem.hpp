#pragma once

#include "khessian/error.hpp"
#include "khessian/expr.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

namespace khessian
{
    /// Numerical controls shared by scalar and system solves.
    struct SolverControls
    {
        double r_max = 5.0;
        std::size_t grid_points = 1000;
        double tol = 1e-8;
        std::size_t max_iter = 500;
        double growth_ceiling = 1e8;
    };

    /// Radial problem S_k(D^2 u)^(1/k) = p(|x|) h(u) with u(0) = a, u'(0) = 0.
    struct ProblemSpec
    {
        int N = 3;
        int k = 1;
        double a = 1.0;
        FunctionSpec p = expr::parse("1", 1);
        FunctionSpec h = expr::parse("u", 1);
        SolverControls controls;
    };

    /// Coupled problem: S_k(D^2 u)^(1/k) = p f(u, v), S_k(D^2 v)^(1/k) = q g(u, v).
    struct SystemSpec
    {
        int N = 3;
        int k = 1;
        double a_u = 1.0;
        double a_v = 1.0;
        FunctionSpec p = expr::parse("1", 1);
        FunctionSpec q = expr::parse("1", 1);
        FunctionSpec f = expr::parse("(u+v)/2", 2);
        FunctionSpec g = expr::parse("(u+v)/2", 2);
        SolverControls controls;
    };

    namespace detail
    {
        inline void validate_dimensions(int N, int k)
        {
            if (N < 3)
                throw SpecError("dimension: N must be >= 3");
            if (k < 1 || k > N)
                throw SpecError("k: must satisfy 1 <= k <= N");
        }

        inline void validate_controls(const SolverControls &c)
        {
            if (!(c.r_max > 0.0) || !std::isfinite(c.r_max))
                throw SpecError("r_max: must be a positive finite number");
            if (c.grid_points < 64)
                throw SpecError("grid_points: must be >= 64");
            if (!(c.tol > 0.0))
                throw SpecError("tol: must be positive");
            if (c.max_iter < 1)
                throw SpecError("max_iter: must be >= 1");
            if (!(c.growth_ceiling > 0.0))
                throw SpecError("growth_ceiling: must be positive");
        }

        inline void validate_weight(const FunctionSpec &w, double r_max, const char *key)
        {
            if (w.arity() != 1)
                throw SpecError(std::string(key) + ": weight must be a function of one variable");
            constexpr int samples = 257;
            for (int i = 0; i < samples; ++i)
            {
                const double r = r_max * i / (samples - 1);
                double value;
                try
                {
                    value = w(r);
                }
                catch (const DomainError &e)
                {
                    throw SpecError(std::string(key) + ": cannot evaluate at r = " + std::to_string(r) + " (" +
                                    e.what() + ")");
                }
                if (!(value > 0.0))
                    throw SpecError(std::string(key) + ": weight must be positive on [0, r_max]; value " +
                                    std::to_string(value) + " at r = " + std::to_string(r));
            }
        }
    }

    /// Checks structural preconditions: ranges, positive weight on [0, r_max], h(0) = 0 and h >= 0.
    inline void validate(const ProblemSpec &pr)
    {
        detail::validate_dimensions(pr.N, pr.k);
        detail::validate_controls(pr.controls);
        if (!(pr.a >= 0.0) || !std::isfinite(pr.a))
            throw SpecError("initial_value: must be a finite number >= 0");
        detail::validate_weight(pr.p, pr.controls.r_max, "weight_p");
        if (pr.h.arity() != 1)
            throw SpecError("nonlinearity_h: must be a function of one variable");
        try
        {
            if (std::fabs(pr.h(0.0)) > 1e-14)
                throw SpecError("nonlinearity_h: h(0) must be 0");
            for (int i = 0; i <= 256; ++i)
            {
                const double u = pr.a + (pr.a + 10.0) * i / 256.0;
                if (pr.h(u) < 0.0)
                    throw SpecError("nonlinearity_h: h must be nonnegative; h(" + std::to_string(u) + ") < 0");
            }
        }
        catch (const DomainError &e)
        {
            throw SpecError(std::string("nonlinearity_h: ") + e.what());
        }
    }

    /// As for ProblemSpec, plus the sampled form of (C2) that the solver relies on:
    /// f, g vanish at the origin, are nonnegative and positive for positive arguments.
    inline void validate(const SystemSpec &sys)
    {
        detail::validate_dimensions(sys.N, sys.k);
        detail::validate_controls(sys.controls);
        if (!(sys.a_u >= 0.0) || !(sys.a_v >= 0.0) || !std::isfinite(sys.a_u) || !std::isfinite(sys.a_v))
            throw SpecError("initial_value: must be finite numbers >= 0");
        detail::validate_weight(sys.p, sys.controls.r_max, "weight_p");
        detail::validate_weight(sys.q, sys.controls.r_max, "weight_q");
        const std::pair<const FunctionSpec *, const char *> fs[] = {{&sys.f, "nonlinearity_f"},
                                                                   {&sys.g, "nonlinearity_g"}};
        for (auto [fn, key] : fs)
        {
            if (fn->arity() != 2)
                throw SpecError(std::string(key) + ": must be a function of (u, v)");
            try
            {
                if (std::fabs((*fn)(0.0, 0.0)) > 1e-14)
                    throw SpecError(std::string(key) + ": must vanish at (0, 0)");
                constexpr double probe[] = {1e-3, 0.5, 1.0, 3.0, 10.0};
                for (double s : probe)
                    for (double t : probe)
                        if (!((*fn)(s, t) > 0.0))
                            throw SpecError(std::string(key) + ": must be positive for positive arguments; fails at (" +
                                            std::to_string(s) + ", " + std::to_string(t) + ")");
            }
            catch (const DomainError &e)
            {
                throw SpecError(std::string(key) + ": " + e.what());
            }
        }
    }
}
