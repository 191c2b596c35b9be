#pragma once

// Adaptive Gauss-Kronrod quadrature, prefix integrals on grids, and a three-valued
// convergence classifier for improper integrals on [a, inf).

#include "khessian/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace khessian::quad
{
    struct IntegralEstimate
    {
        double value = 0.0;
        double error_bound = 0.0; // absolute
        std::size_t evaluations = 0;
    };

    /// Thrown when the tolerance cannot be met within the subdivision budget.
    class QuadratureError : public NumericalError
    {
    public:
        QuadratureError(const std::string &what, IntegralEstimate best)
            : NumericalError(what), best_(best) {}

        const IntegralEstimate &best() const noexcept { return best_; }

    private:
        IntegralEstimate best_;
    };

    namespace detail
    {
        // 15-point Kronrod abscissae with the embedded 7-point Gauss rule (QUADPACK qk15).
        inline constexpr double xgk[8] = {
            0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
        inline constexpr double wgk[8] = {
            0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
        inline constexpr double wg[4] = {
            0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

        struct Segment
        {
            double a, b, value, error;
        };

        inline double finite_or_throw(double y, double x)
        {
            if (!std::isfinite(y))
                throw NumericalError("non-finite integrand at t = " + std::to_string(x));
            return y;
        }

        template <class F>
        Segment gk15(const F &f, double a, double b)
        {
            const double c = 0.5 * (a + b);
            const double h = 0.5 * (b - a);
            const double fc = finite_or_throw(f(c), c);
            double kronrod = fc * wgk[7];
            double gauss = fc * wg[3];
            for (int j = 0; j < 7; ++j)
            {
                const double dx = h * xgk[j];
                const double f1 = finite_or_throw(f(c - dx), c - dx);
                const double f2 = finite_or_throw(f(c + dx), c + dx);
                kronrod += wgk[j] * (f1 + f2);
                if (j % 2 == 1)
                    gauss += wg[j / 2] * (f1 + f2);
            }
            kronrod *= h;
            gauss *= h;
            return {a, b, kronrod, std::fabs(kronrod - gauss)};
        }
    }

    /// Integrates f over [a, b] until the error estimate is below max(tol, tol*|value|).
    ///
    /// Global adaptive bisection of the interval with the largest error estimate. The
    /// rule never samples the endpoints, so an integrable singularity at `a` is tolerated.
    template <class F>
    IntegralEstimate integrate(const F &f, double a, double b, double tol, std::size_t max_segments = 2000)
    {
        if (!(a <= b))
            throw SpecError("integrate: requires a <= b");
        if (a == b)
            return {0.0, 0.0, 1};

        std::vector<detail::Segment> heap;
        heap.reserve(64);
        auto by_error = [](const detail::Segment &x, const detail::Segment &y) { return x.error < y.error; };

        heap.push_back(detail::gk15(f, a, b));
        std::size_t evaluations = 15;
        double value = heap.front().value;
        double error = heap.front().error;

        while (error > std::max(tol, tol * std::fabs(value)))
        {
            if (heap.size() >= max_segments)
                throw QuadratureError("integrate: tolerance not reached on [" + std::to_string(a) + ", " +
                                          std::to_string(b) + "]",
                                      {value, error, evaluations});
            std::pop_heap(heap.begin(), heap.end(), by_error);
            const detail::Segment worst = heap.back();
            heap.pop_back();
            const double mid = 0.5 * (worst.a + worst.b);
            if (!(mid > worst.a && mid < worst.b))
                throw QuadratureError("integrate: interval cannot be subdivided further", {value, error, evaluations});
            const detail::Segment left = detail::gk15(f, worst.a, mid);
            const detail::Segment right = detail::gk15(f, mid, worst.b);
            evaluations += 30;
            heap.push_back(left);
            std::push_heap(heap.begin(), heap.end(), by_error);
            heap.push_back(right);
            std::push_heap(heap.begin(), heap.end(), by_error);

            // Re-sum instead of updating incrementally so the result does not depend
            // on accumulated cancellation.
            value = 0.0;
            error = 0.0;
            for (const auto &s : heap)
            {
                value += s.value;
                error += s.error;
            }
        }
        return {value, error, evaluations};
    }

    /// Prefix integrals: out[0] = 0, out[i] = out[i-1] + integral of f over [nodes[i-1], nodes[i]].
    template <class F>
    std::vector<double> cumulative_integral(const F &f, std::span<const double> nodes, double tol)
    {
        std::vector<double> out(nodes.size(), 0.0);
        if (nodes.empty())
            return out;
        if (nodes.front() < 0.0)
            throw SpecError("cumulative_integral: first node must be >= 0");
        for (std::size_t i = 1; i < nodes.size(); ++i)
        {
            if (!(nodes[i] > nodes[i - 1]))
                throw SpecError("cumulative_integral: nodes must be strictly increasing");
            out[i] = out[i - 1] + integrate(f, nodes[i - 1], nodes[i], tol).value;
        }
        return out;
    }

    enum class Convergence
    {
        Converges,
        Diverges,
        Inconclusive
    };

    inline const char *to_string(Convergence c)
    {
        switch (c)
        {
        case Convergence::Converges: return "Converges";
        case Convergence::Diverges: return "Diverges";
        default: return "Inconclusive";
        }
    }

    struct TailVerdict
    {
        Convergence verdict = Convergence::Inconclusive;
        // Log-log slope of the integrand over the last decade; -inf once it underflows.
        double tail_exponent = 0.0;
        // Slope over the decade before the last one.
        double previous_exponent = 0.0;
        std::vector<std::pair<double, double>> partial_values; // (cutoff, integral from a)
        std::optional<double> limit_estimate;
    };

    struct TailOptions
    {
        double margin = 0.05;
        double tol = 1e-10;
        // Increment ratio below which the partial integrals count as geometrically shrinking.
        double cauchy_ratio = 0.99;
        // A drifting exponent blocks a verdict if it could reach the margin band
        // within this many further decades at the observed drift.
        double drift_decades = 5.0;
    };

    /// 16 geometric cutoffs from max(a, 1) to 1e6.
    inline std::vector<double> default_cutoffs(double a)
    {
        const double lo = std::max(a, 1.0);
        const double hi = 1e6;
        std::vector<double> c(16);
        for (std::size_t i = 0; i < c.size(); ++i)
            c[i] = lo * std::pow(hi / lo, static_cast<double>(i) / 15.0);
        c.back() = hi;
        return c;
    }

    namespace detail
    {
        // Least-squares slope of log f against log t on [lo, hi]; -inf if f vanishes there.
        template <class F>
        double loglog_slope(const F &f, double lo, double hi)
        {
            constexpr int n = 11;
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (int i = 0; i < n; ++i)
            {
                const double x = std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1);
                const double y = f(std::exp(x));
                if (!std::isfinite(y))
                    throw NumericalError("non-finite integrand at t = " + std::to_string(std::exp(x)));
                if (y <= 0.0)
                    return -std::numeric_limits<double>::infinity();
                const double ly = std::log(y);
                sx += x;
                sy += ly;
                sxx += x * x;
                sxy += x * ly;
            }
            return (n * sxy - sx * sy) / (n * sxx - sx * sx);
        }
    }

    /// Classifies convergence of the integral of a nonnegative f over [a, inf).
    ///
    /// Converges needs a tail exponent below -1 - margin together with geometrically
    /// shrinking increments between cutoffs; Diverges needs an exponent above
    /// -1 + margin or increments that stop shrinking. An exponent that is still
    /// drifting towards -1 fast enough to reach the margin band is reported as
    /// Inconclusive.
    template <class F>
    TailVerdict classify_improper(const F &f, double a, std::span<const double> cutoffs, TailOptions opt = {})
    {
        if (cutoffs.size() < 4)
            throw SpecError("classify_improper: at least 4 cutoffs required");
        if (!(cutoffs.front() >= a) || !(cutoffs.front() > 0.0) || cutoffs.back() / cutoffs.front() < 1e3 * (1 - 1e-12))
            throw SpecError("classify_improper: cutoffs must start at or after a and span 3 decades");

        // partial sums only feed ratio tests, so a best-effort estimate is enough
        auto piece = [&](double lo, double hi) {
            try
            {
                return integrate(f, lo, hi, opt.tol).value;
            }
            catch (const QuadratureError &e)
            {
                return e.best().value;
            }
        };

        TailVerdict tv;
        double total = a < cutoffs.front() ? piece(a, cutoffs.front()) : 0.0;
        tv.partial_values.emplace_back(cutoffs.front(), total);
        std::vector<double> increments;
        for (std::size_t i = 1; i < cutoffs.size(); ++i)
        {
            if (!(cutoffs[i] > cutoffs[i - 1]))
                throw SpecError("classify_improper: cutoffs must be strictly increasing");
            const double inc = piece(cutoffs[i - 1], cutoffs[i]);
            increments.push_back(inc);
            total += inc;
            tv.partial_values.emplace_back(cutoffs[i], total);
        }

        const double last = cutoffs.back();
        tv.tail_exponent = detail::loglog_slope(f, last / 10.0, last);
        tv.previous_exponent = detail::loglog_slope(f, last / 100.0, last / 10.0);

        const double negligible = 1e-15 * std::max(std::fabs(total), std::numeric_limits<double>::min());
        bool shrinking = true, stalled = true;
        for (std::size_t j = increments.size() - 3; j < increments.size(); ++j)
        {
            const double prev = increments[j - 1], cur = increments[j];
            if (!(cur <= opt.cauchy_ratio * prev || cur <= negligible))
                shrinking = false;
            if (!(cur > negligible && cur >= (1.0 - 1e-6) * prev))
                stalled = false;
        }

        const double alpha = tv.tail_exponent;
        bool drifting = false;
        if (std::isfinite(alpha) && std::isfinite(tv.previous_exponent))
        {
            const double gap = std::fabs(alpha + 1.0);
            const double drift = std::fabs(alpha - tv.previous_exponent);
            if (gap < std::fabs(tv.previous_exponent + 1.0) && gap - opt.margin < opt.drift_decades * drift)
                drifting = true;
        }

        if (stalled)
            tv.verdict = Convergence::Diverges;
        else if (alpha < -1.0 - opt.margin && shrinking && !drifting)
            tv.verdict = Convergence::Converges;
        else if (alpha > -1.0 + opt.margin && !drifting)
            tv.verdict = Convergence::Diverges;
        else
            tv.verdict = Convergence::Inconclusive;

        if (tv.verdict == Convergence::Converges)
        {
            double tail = 0.0;
            if (std::isfinite(alpha))
                tail = f(last) * last / (-alpha - 1.0);
            tv.limit_estimate = total + tail;
        }
        return tv;
    }

    template <class F>
    TailVerdict classify_improper(const F &f, double a, TailOptions opt = {})
    {
        const auto cutoffs = default_cutoffs(a);
        return classify_improper(f, a, std::span<const double>(cutoffs), opt);
    }
}
