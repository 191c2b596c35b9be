#pragma once

// The k-Hessian operator on radial functions u(|x|).
//
// D^2 u has eigenvalue u'' once and u'/r with multiplicity N-1, so for the spectrum
// (a; b x (N-1)) the elementary symmetric polynomials collapse to
//
//   S_j = C(N-1, j) b^j + C(N-1, j-1) b^(j-1) a,
//
// and S_k = r^(1-N) C(N-1, k-1) [ r^(N-k) (u')^k / k ]'.

#include "khessian/error.hpp"
#include "khessian/grid.hpp"
#include "khessian/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace khessian::radial
{
    /// Exact binomial coefficient C(n, j) for 0 <= j <= n <= 64.
    inline std::uint64_t binomial(int n, int j)
    {
        if (n < 0 || n > 64 || j < 0 || j > n)
            throw SpecError("binomial: requires 0 <= j <= n <= 64");
        j = std::min(j, n - j);
        unsigned __int128 c = 1;
        for (int i = 1; i <= j; ++i)
            c = c * static_cast<unsigned>(n - j + i) / static_cast<unsigned>(i);
        return static_cast<std::uint64_t>(c);
    }

    struct HessianParams
    {
        int N = 3;
        int k = 1;
        std::uint64_t c_binom = 1; // C(N-1, k-1)

        static HessianParams make(int N, int k)
        {
            if (N < 3 || k < 1 || k > N)
                throw SpecError("HessianParams: requires N >= 3 and 1 <= k <= N");
            return {N, k, binomial(N - 1, k - 1)};
        }
    };

    struct RadialSpectrum
    {
        double lambda_radial = 0.0;     // u''
        double lambda_tangential = 0.0; // u'/r, multiplicity N-1
        int N = 3;
    };

    inline RadialSpectrum radial_eigenvalues(double du, double d2u, double r, int N)
    {
        if (N < 3)
            throw SpecError("radial_eigenvalues: N must be >= 3");
        if (r < 0.0)
            throw SpecError("radial_eigenvalues: r must be >= 0");
        if (r == 0.0)
        {
            if (du != 0.0)
                throw SpecError("radial_eigenvalues: u'(0) must vanish for a C^2 radial function");
            return {d2u, d2u, N};
        }
        return {d2u, du / r, N};
    }

    inline double sigma_j(const RadialSpectrum &s, int j)
    {
        if (j < 1 || j > s.N)
            throw SpecError("sigma_j: requires 1 <= j <= N");
        const double b = s.lambda_tangential;
        const double bj1 = std::pow(b, j - 1);
        const double tangential = j <= s.N - 1 ? static_cast<double>(binomial(s.N - 1, j)) * bj1 * b : 0.0;
        return tangential + static_cast<double>(binomial(s.N - 1, j - 1)) * bj1 * s.lambda_radial;
    }

    inline constexpr double kConeTolerance = 1e-12;

    /// Smallest of S_1 .. S_k. Positive (above the cone tolerance) means inside Gamma_k.
    inline double gamma_k_margin(const RadialSpectrum &s, int k)
    {
        if (k < 1 || k > s.N)
            throw SpecError("in_gamma_k: requires 1 <= k <= N");
        double m = sigma_j(s, 1);
        for (int j = 2; j <= k; ++j)
            m = std::min(m, sigma_j(s, j));
        return m;
    }

    inline bool in_gamma_k(const RadialSpectrum &s, int k) { return gamma_k_margin(s, k) > kConeTolerance; }

    /// S_k at every node from u' samples.
    ///
    /// u'' is the fourth-order finite difference of u'; the divergence form is expanded as
    /// C(N-1, k-1) [ (N-k)/k (u'/r)^k + (u'/r)^(k-1) u'' ], and r = 0 uses the limit
    /// C(N, k) u''(0)^k.
    inline std::vector<double> k_hessian_radial(std::span<const double> nodes, std::span<const double> du,
                                                const HessianParams &hp)
    {
        const auto d2u = differentiate(nodes, du);
        const double c = static_cast<double>(hp.c_binom);
        const double ratio = static_cast<double>(hp.N - hp.k) / hp.k;
        std::vector<double> s(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i)
        {
            if (nodes[i] == 0.0)
            {
                s[i] = static_cast<double>(binomial(hp.N, hp.k)) * std::pow(d2u[i], hp.k);
                continue;
            }
            const double b = du[i] / nodes[i];
            const double bk1 = std::pow(b, hp.k - 1);
            s[i] = c * (ratio * bk1 * b + bk1 * d2u[i]);
        }
        return s;
    }

    namespace detail
    {
        inline double signed_root(double x, int k)
        {
            if (k == 1)
                return x;
            const double r = std::pow(std::fabs(x), 1.0 / k);
            return x < 0.0 ? -r : r;
        }
    }

    /// Per-node |S_k^(1/k) - weight(r) * nonlinearity(r)| given S_k values and the
    /// right-hand side already evaluated at the nodes.
    inline std::vector<double> pointwise_residual(std::span<const double> s_k, std::span<const double> rhs, int k)
    {
        std::vector<double> out(s_k.size());
        for (std::size_t i = 0; i < s_k.size(); ++i)
            out[i] = std::fabs(detail::signed_root(s_k[i], k) - rhs[i]);
        return out;
    }

    /// Per-node residual of S_k^(1/k)(D^2 u) = p(r) h(u) for a grid profile.
    inline std::vector<double> residual_profile(const RadialGrid &u, const ProblemSpec &problem)
    {
        const auto hp = HessianParams::make(problem.N, problem.k);
        const auto s = k_hessian_radial(u.nodes, u.derivative, hp);
        std::vector<double> rhs(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            rhs[i] = problem.p(u.nodes[i]) * problem.h(u.values[i]);
        return pointwise_residual(s, rhs, problem.k);
    }

    /// max over nodes of |S_k^(1/k)(D^2 u) - p(r) h(u(r))|.
    inline double residual(const RadialGrid &u, const ProblemSpec &problem)
    {
        const auto r = residual_profile(u, problem);
        return r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
    }

    struct ConeCertificate
    {
        bool certified = true;
        std::size_t checked_nodes = 0;
        std::size_t failing_nodes = 0;
        // nodes where min_j S_j lies within the cone tolerance of zero
        std::size_t boundary_contacts = 0;
        double min_margin = 0.0;
    };

    /// Checks Gamma_k membership at every node with r > 0 and u'(r) > 0.
    inline ConeCertificate certify_gamma_k(const RadialGrid &u, int N, int k)
    {
        ConeCertificate cert;
        const auto d2u = differentiate(u.nodes, u.derivative);
        bool first = true;
        for (std::size_t i = 0; i < u.size(); ++i)
        {
            if (!(u.nodes[i] > 0.0) || !(u.derivative[i] > 0.0))
                continue;
            const auto spec = radial_eigenvalues(u.derivative[i], d2u[i], u.nodes[i], N);
            const double m = gamma_k_margin(spec, k);
            ++cert.checked_nodes;
            cert.min_margin = first ? m : std::min(cert.min_margin, m);
            first = false;
            if (std::fabs(m) <= kConeTolerance)
                ++cert.boundary_contacts;
            if (!(m > kConeTolerance))
            {
                ++cert.failing_nodes;
                cert.certified = false;
            }
        }
        return cert;
    }
}
