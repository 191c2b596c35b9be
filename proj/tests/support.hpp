#pragma once

// Shared fixtures for the property tests and the acceptance runner: the regression
// problem set and oracles that do not reuse library numerics.

#include "khessian/khessian.hpp"

#include <bit>
#include <cmath>
#include <string>
#include <vector>

namespace support
{
    using khessian::ProblemSpec;

    struct Named
    {
        std::string name;
        ProblemSpec problem;
    };

    inline ProblemSpec make(int N, int k, const char *p, const char *h, double r_max = 5.0, double a = 1.0)
    {
        ProblemSpec pr;
        pr.N = N;
        pr.k = k;
        pr.a = a;
        pr.p = khessian::expr::parse(p, 1);
        pr.h = khessian::expr::parse(h, 1);
        pr.controls.r_max = r_max;
        return pr;
    }

    inline std::vector<Named> regression_suite()
    {
        return {
            {"laplace N3 k1 p=1 h=u", make(3, 1, "1", "u")},
            {"decaying N3 k1 p=exp(-t) h=u", make(3, 1, "exp(-t)", "u", 20.0)},
            {"bounded N5 k2 p=(1+t)^(-5/2) h=u", make(5, 2, "(1+t)^(-5/2)", "u", 10.0)},
            {"bounded N3 k1 p=(1+t)^(-3) h=u", make(3, 1, "(1+t)^(-3)", "u", 10.0)},
            {"bounded N7 k3 p=(1+t)^(-2.25) h=u", make(7, 3, "(1+t)^(-2.25)", "u", 10.0)},
            {"sublinear N3 k1 p=1 h=sqrt(u)", make(3, 1, "1", "sqrt(u)")},
            {"superlinear N3 k1 p=1 h=u^2", make(3, 1, "1", "u^2")},
            {"large N5 k2 p=1 h=u", make(5, 2, "1", "u")},
            {"monge-ampere N3 k3 p=1 h=u", make(3, 3, "1", "u", 3.0)},
            {"trivial N3 k1 h=max(u-1,0)", make(3, 1, "1", "max(u-1,0)")},
        };
    }

    /// e_j of an explicit vector by enumerating every j-subset.
    inline double brute_sigma(const std::vector<double> &lambda, int j)
    {
        const int n = static_cast<int>(lambda.size());
        double total = 0.0;
        for (unsigned mask = 0; mask < (1u << n); ++mask)
        {
            if (std::popcount(mask) != j)
                continue;
            double prod = 1.0;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i))
                    prod *= lambda[i];
            total += prod;
        }
        return total;
    }

    /// Classical RK4 shooting for (r^(N-1) u')' = r^(N-1) p(r) h(u), u(0) = a, u'(0) = 0,
    /// in the variables (u, r^(N-1) u'). Starts from the two-term series at nodes[1] and
    /// returns u at every node, taking `substeps` RK4 steps per grid interval.
    inline std::vector<double> shoot_laplacian(const ProblemSpec &pr, const std::vector<double> &nodes,
                                               int substeps = 16)
    {
        const int N = pr.N;
        const double c = pr.p(0.0) * pr.h(pr.a);
        std::vector<double> out(nodes.size());
        out[0] = pr.a;
        double r = nodes[1];
        double y1 = pr.a + c * r * r / (2.0 * N);
        double y2 = std::pow(r, N - 1) * c * r / N;
        out[1] = y1;
        auto rhs = [&](double x, double u, double flux, double &du, double &dflux) {
            du = flux / std::pow(x, N - 1);
            dflux = std::pow(x, N - 1) * pr.p(x) * pr.h(u);
        };
        for (std::size_t i = 2; i < nodes.size(); ++i)
        {
            const double hstep = (nodes[i] - nodes[i - 1]) / substeps;
            for (int s = 0; s < substeps; ++s)
            {
                double k1u, k1f, k2u, k2f, k3u, k3f, k4u, k4f;
                rhs(r, y1, y2, k1u, k1f);
                rhs(r + hstep / 2, y1 + hstep / 2 * k1u, y2 + hstep / 2 * k1f, k2u, k2f);
                rhs(r + hstep / 2, y1 + hstep / 2 * k2u, y2 + hstep / 2 * k2f, k3u, k3f);
                rhs(r + hstep, y1 + hstep * k3u, y2 + hstep * k3f, k4u, k4f);
                y1 += hstep / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
                y2 += hstep / 6 * (k1f + 2 * k2f + 2 * k3f + k4f);
                r += hstep;
            }
            r = nodes[i];
            out[i] = y1;
        }
        return out;
    }
}
