#pragma once

#include "khessian/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace khessian
{
    /// Radial profile on nodes 0 = r_0 < r_1 < ... < r_{n-1}: values u(r_i) and u'(r_i).
    struct RadialGrid
    {
        std::vector<double> nodes;
        std::vector<double> values;
        std::vector<double> derivative;

        std::size_t size() const noexcept { return nodes.size(); }
        double r_max() const { return nodes.back(); }
    };

    /// Geometrically stretched nodes on [0, r_max]: consecutive spacings grow by
    /// 4^(1/(n-2)), so the last spacing is four times the first (ratio ~1.022 at n = 64).
    inline std::vector<double> stretched_nodes(double r_max, std::size_t n)
    {
        if (!(r_max > 0.0))
            throw SpecError("grid: r_max must be positive");
        if (n < 3)
            throw SpecError("grid: at least 3 nodes required");
        const double ratio = std::pow(4.0, 1.0 / static_cast<double>(n - 2));
        const double denom = std::pow(ratio, static_cast<double>(n - 1)) - 1.0;
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = r_max * (std::pow(ratio, static_cast<double>(i)) - 1.0) / denom;
        r.front() = 0.0;
        r.back() = r_max;
        return r;
    }

    inline std::vector<double> uniform_nodes(double r_max, std::size_t n)
    {
        if (!(r_max > 0.0) || n < 3)
            throw SpecError("grid: need r_max > 0 and at least 3 nodes");
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = r_max * static_cast<double>(i) / static_cast<double>(n - 1);
        r.back() = r_max;
        return r;
    }

    namespace detail
    {
        // Fornberg's recursion for first-derivative weights at x0 over the stencil x.
        template <std::size_t M>
        std::array<double, M> first_derivative_weights(double x0, const std::array<double, M> &x)
        {
            double c[M][2] = {};
            c[0][0] = 1.0;
            double c1 = 1.0;
            double c4 = x[0] - x0;
            for (std::size_t i = 1; i < M; ++i)
            {
                const std::size_t mn = std::min<std::size_t>(i, 1);
                double c2 = 1.0;
                const double c5 = c4;
                c4 = x[i] - x0;
                for (std::size_t j = 0; j < i; ++j)
                {
                    const double c3 = x[i] - x[j];
                    c2 *= c3;
                    if (j == i - 1)
                    {
                        for (std::size_t k = mn; k >= 1; --k)
                            c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
                    }
                    for (std::size_t k = mn; k >= 1; --k)
                        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
                    c[j][0] = c4 * c[j][0] / c3;
                }
                c1 = c2;
            }
            std::array<double, M> w{};
            for (std::size_t i = 0; i < M; ++i)
                w[i] = c[i][1];
            return w;
        }
    }

    /// Fourth-order finite-difference derivative of samples f(x_i) on a nonuniform grid
    /// (five-point stencils, one-sided near the ends).
    inline std::vector<double> differentiate(std::span<const double> x, std::span<const double> f)
    {
        const std::size_t n = x.size();
        if (f.size() != n)
            throw SpecError("differentiate: size mismatch");
        if (n < 5)
            throw SpecError("differentiate: at least 5 nodes required");
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            const std::size_t lo = std::min(i < 2 ? 0 : i - 2, n - 5);
            std::array<double, 5> xs{};
            for (std::size_t j = 0; j < 5; ++j)
                xs[j] = x[lo + j];
            const auto w = detail::first_derivative_weights(x[i], xs);
            double s = 0.0;
            for (std::size_t j = 0; j < 5; ++j)
                s += w[j] * f[lo + j];
            d[i] = s;
        }
        return d;
    }

    /// Monotone piecewise-cubic Hermite interpolant of a grid profile.
    ///
    /// Uses the stored node derivatives, limited per cell (Fritsch-Carlson) so that each
    /// cell's cubic stays within its end values. Non-decreasing data gives a
    /// non-decreasing interpolant.
    class HermiteProfile
    {
    public:
        explicit HermiteProfile(const RadialGrid &g) : x_(g.nodes), y_(g.values)
        {
            const std::size_t cells = x_.size() - 1;
            m0_.resize(cells);
            m1_.resize(cells);
            for (std::size_t i = 0; i < cells; ++i)
            {
                const double h = x_[i + 1] - x_[i];
                const double secant = (y_[i + 1] - y_[i]) / h;
                double a = g.derivative[i], b = g.derivative[i + 1];
                if (secant == 0.0)
                {
                    a = b = 0.0;
                }
                else
                {
                    const double alpha = a / secant, beta = b / secant;
                    if (alpha < 0.0 || beta < 0.0)
                    {
                        // derivative data disagrees with the data direction: fall back to linear
                        a = b = secant;
                    }
                    else if (alpha * alpha + beta * beta > 9.0)
                    {
                        const double tau = 3.0 / std::sqrt(alpha * alpha + beta * beta);
                        a = tau * alpha * secant;
                        b = tau * beta * secant;
                    }
                }
                m0_[i] = a;
                m1_[i] = b;
            }
        }

        std::size_t cell_of(double r) const
        {
            if (r <= x_.front())
                return 0;
            if (r >= x_.back())
                return x_.size() - 2;
            auto it = std::upper_bound(x_.begin(), x_.end(), r);
            return static_cast<std::size_t>(it - x_.begin()) - 1;
        }

        double in_cell(std::size_t i, double r) const
        {
            const double h = x_[i + 1] - x_[i];
            const double t = (r - x_[i]) / h;
            const double s = 1.0 - t;
            // difference form reproduces constant cells exactly
            return y_[i] + t * t * (3.0 - 2.0 * t) * (y_[i + 1] - y_[i]) + t * s * s * h * m0_[i] -
                   t * t * s * h * m1_[i];
        }

        double operator()(double r) const { return in_cell(cell_of(r), r); }

    private:
        std::vector<double> x_, y_, m0_, m1_;
    };
}
