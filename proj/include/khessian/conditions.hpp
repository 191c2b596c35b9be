#pragma once

// Numerical verdicts for the hypotheses on weights and nonlinearities: monotonicity of
// the weighted weight (P2)/(P3), the structural conditions (C1)/(C2), the
// Keller-Osserman integrals (C3)/(C4), the weight decay integrals, the largeness
// integrals, the dimension gate, and the necessary-condition disjunction.

#include "khessian/error.hpp"
#include "khessian/expr.hpp"
#include "khessian/quad.hpp"
#include "khessian/radial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace khessian::conditions
{
    enum class ConditionId
    {
        P1,
        P2,
        P3,
        C1,
        C2,
        C3,
        C4,
        EQ5,
        EQ5S,
        EQ12,
        EQ12S,
        EQ13,
        EQ13S,
        GATE,
        ASSUMED_LARGE
    };

    inline const char *to_string(ConditionId id)
    {
        static constexpr const char *names[] = {"P1",  "P2",   "P3",    "C1",    "C2",   "C3",  "C4",           "EQ5",
                                                "EQ5S", "EQ12", "EQ12S", "EQ13", "EQ13S", "GATE", "ASSUMED_LARGE"};
        return names[static_cast<int>(id)];
    }

    inline std::optional<ConditionId> condition_from_string(std::string_view s)
    {
        for (int i = 0; i <= static_cast<int>(ConditionId::ASSUMED_LARGE); ++i)
            if (s == to_string(static_cast<ConditionId>(i)))
                return static_cast<ConditionId>(i);
        return std::nullopt;
    }

    enum class Verdict
    {
        Holds,
        Fails,
        Inconclusive
    };

    inline const char *to_string(Verdict v)
    {
        switch (v)
        {
        case Verdict::Holds: return "Holds";
        case Verdict::Fails: return "Fails";
        default: return "Inconclusive";
        }
    }

    struct TailEvidence
    {
        std::string label;
        quad::TailVerdict tail;
    };

    struct ConditionReport
    {
        ConditionId id = ConditionId::GATE;
        Verdict verdict = Verdict::Inconclusive;
        std::string summary;
        std::vector<TailEvidence> tails;
        std::optional<std::pair<double, double>> witness;
        std::optional<double> epsilon_found;    // EQ5 / EQ5S
        std::optional<double> threshold_radius; // P2 / P3
        std::vector<std::pair<std::string, Verdict>> items;
        std::vector<int> admissible_k; // GATE
    };

    inline Verdict from_divergence(quad::Convergence c)
    {
        switch (c)
        {
        case quad::Convergence::Diverges: return Verdict::Holds;
        case quad::Convergence::Converges: return Verdict::Fails;
        default: return Verdict::Inconclusive;
        }
    }

    namespace detail
    {
        inline std::string fmt(double x)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", x);
            return buf;
        }

        inline void check_weights(std::span<const FunctionSpec> weights)
        {
            if (weights.empty() || weights.size() > 2)
                throw SpecError("weights: one (p) or two (p, q) weights required");
            for (const auto &w : weights)
                if (w.arity() != 1)
                    throw SpecError("weights: must be functions of t");
        }

        inline double sum_pow(std::span<const FunctionSpec> weights, double t, int k)
        {
            double s = 0.0;
            for (const auto &w : weights)
                s += std::pow(w(t), k);
            return s;
        }

        /// F(t) = int_0^t f, tabulated once on a geometric grid; queries add one short
        /// adaptive integral from the nearest node. Past an overflow, F is +inf.
        class PrefixIntegral
        {
        public:
            explicit PrefixIntegral(std::function<double(double)> f, double tol = 1e-12) : f_(std::move(f)), tol_(tol)
            {
                nodes_.push_back(0.0);
                for (int j = 0; j <= 9 * 32; ++j)
                    nodes_.push_back(1e-2 * std::pow(10.0, j / 32.0));
                values_.assign(nodes_.size(), 0.0);
                for (std::size_t i = 1; i < nodes_.size(); ++i)
                {
                    try
                    {
                        values_[i] = values_[i - 1] + quad::integrate(f_, nodes_[i - 1], nodes_[i], tol_).value;
                    }
                    catch (const OverflowError &)
                    {
                        overflow_at_ = nodes_[i - 1];
                        break;
                    }
                    catch (const quad::QuadratureError &)
                    {
                        throw;
                    }
                    catch (const NumericalError &)
                    {
                        overflow_at_ = nodes_[i - 1];
                        break;
                    }
                    if (!std::isfinite(values_[i]))
                    {
                        overflow_at_ = nodes_[i - 1];
                        break;
                    }
                }
            }

            double operator()(double t) const
            {
                if (t <= 0.0)
                    return 0.0;
                if (overflow_at_ && t > *overflow_at_)
                    return std::numeric_limits<double>::infinity();
                auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
                const std::size_t j = static_cast<std::size_t>(it - nodes_.begin()) - 1;
                if (nodes_[j] == t)
                    return values_[j];
                return values_[j] + quad::integrate(f_, nodes_[j], t, tol_).value;
            }

            const std::vector<double> &nodes() const noexcept { return nodes_; }

        private:
            std::function<double(double)> f_;
            double tol_;
            std::vector<double> nodes_;
            std::vector<double> values_;
            std::optional<double> overflow_at_;
        };

        inline ConditionReport keller_osserman(ConditionId id, std::function<double(double)> density, int k,
                                               const char *name)
        {
            if (k < 1)
                throw SpecError("k: must be >= 1");
            const PrefixIntegral H(std::move(density));
            double lower = 1.0;
            if (!(H(lower) > 0.0))
            {
                const auto &nodes = H.nodes();
                auto it = std::find_if(nodes.begin(), nodes.end(), [&](double t) { return t > 1.0 && H(t) > 0.0; });
                if (it == nodes.end() || it + 1 == nodes.end())
                {
                    ConditionReport rep{id, Verdict::Inconclusive};
                    rep.summary = std::string(name) + " vanishes on the sampled range";
                    return rep;
                }
                lower = *(it + 1);
            }
            auto integrand = [&](double t) { return std::pow((k + 1) * H(t), -1.0 / (k + 1)); };
            ConditionReport rep{id};
            const auto cutoffs = quad::default_cutoffs(lower);
            rep.tails.push_back({std::string("((k+1)") + name + ")^(-1/(k+1)) from " + fmt(lower),
                                 quad::classify_improper(integrand, lower, std::span<const double>(cutoffs))});
            rep.verdict = from_divergence(rep.tails.back().tail.verdict);
            rep.summary = std::string("Keller-Osserman integral ") +
                          quad::to_string(rep.tails.back().tail.verdict) + ", tail exponent " +
                          fmt(rep.tails.back().tail.tail_exponent);
            return rep;
        }
    }

    /// Theorem gate on k: k <= [N/2] for odd N, k <= [N/2] - 1 for even N.
    /// The complementary range is reported as item "eq13_item2".
    inline ConditionReport dimension_gate(int N, int k)
    {
        if (N < 3 || k < 1 || k > N)
            throw SpecError("dimension_gate: requires N >= 3 and 1 <= k <= N");
        const int top = N % 2 == 1 ? N / 2 : N / 2 - 1;
        ConditionReport rep{ConditionId::GATE};
        for (int j = 1; j <= top; ++j)
            rep.admissible_k.push_back(j);
        rep.verdict = k <= top ? Verdict::Holds : Verdict::Fails;
        rep.items.emplace_back("eq13_item2", k > top ? Verdict::Holds : Verdict::Fails);
        rep.summary = "admissible k for N = " + std::to_string(N) + ": 1.." + std::to_string(top) +
                      (rep.verdict == Verdict::Holds ? "" : "; k = " + std::to_string(k) + " is outside");
        return rep;
    }

    /// Monotonicity of g(r) = r^(N + N/k - 2) * sum_i p_i(r)^k for large r, sampled
    /// geometrically up to r = 1e4. Reports the detected threshold radius.
    inline ConditionReport check_weight_monotonicity(std::span<const FunctionSpec> weights, int k, int N)
    {
        detail::check_weights(weights);
        if (N < 3 || k < 1 || k > N)
            throw SpecError("check_weight_monotonicity: requires N >= 3 and 1 <= k <= N");
        const ConditionId id = weights.size() == 1 ? ConditionId::P2 : ConditionId::P3;
        const double expo = N + static_cast<double>(N) / k - 2.0;

        std::vector<double> r{0.0};
        constexpr int per_decade = 80;
        for (int j = 0; j <= 7 * per_decade; ++j)
            r.push_back(1e-3 * std::pow(10.0, static_cast<double>(j) / per_decade));
        std::vector<double> g;
        bool underflow = false;
        for (double x : r)
        {
            const double s = detail::sum_pow(weights, x, k);
            if (x > 0.0 && s == 0.0)
            {
                underflow = true; // decayed below the representable range
                break;
            }
            g.push_back(std::pow(x, expo) * s);
        }
        const std::size_t n = g.size();
        std::vector<std::size_t> violations; // pair (i, i+1)
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (g[i] > g[i + 1] + 1e-12 * std::max(std::fabs(g[i]), std::fabs(g[i + 1])))
                violations.push_back(i);
        if (underflow && n >= 1)
            violations.push_back(n - 1);
        const std::size_t pairs = underflow ? n : n - 1; // pairs in the valid range

        ConditionReport rep{id};
        if (violations.empty())
        {
            rep.verdict = Verdict::Holds;
            rep.threshold_radius = 0.0;
            rep.summary = "non-decreasing on all samples up to r = " + detail::fmt(r[n - 1]);
            return rep;
        }
        const double r_last = underflow ? r[n] : r[n - 1];
        const std::size_t last = violations.back();
        rep.witness = std::pair{r[last], r[last + 1]};
        if (r[last] >= r_last / 10.0)
        {
            std::size_t in_decade = 0, bad = 0;
            for (std::size_t i = 0; i < pairs; ++i)
                if (r[i] >= r_last / 10.0)
                    ++in_decade;
            for (std::size_t v : violations)
                if (r[v] >= r_last / 10.0)
                    ++bad;
            if (bad == in_decade)
            {
                rep.verdict = Verdict::Fails;
                rep.summary = "decreasing over the last sampled decade up to r = " + detail::fmt(r_last);
            }
            else
            {
                rep.verdict = Verdict::Inconclusive;
                rep.summary = "oscillates at the largest sampled scale";
            }
            return rep;
        }
        rep.verdict = Verdict::Holds;
        rep.threshold_radius = r[last + 1];
        rep.summary = "non-decreasing for r >= " + detail::fmt(r[last + 1]);
        return rep;
    }

    inline ConditionReport check_weight_monotonicity(const FunctionSpec &p, int k, int N)
    {
        return check_weight_monotonicity(std::span<const FunctionSpec>(&p, 1), k, N);
    }

    /// (C1): h(0) = 0, h > 0 for s > 0, h non-decreasing; sampled on [0, 100].
    inline ConditionReport check_nonlinearity(const FunctionSpec &h)
    {
        if (h.arity() != 1)
            throw SpecError("check_nonlinearity: h must be a function of one variable");
        ConditionReport rep{ConditionId::C1};
        if (std::fabs(h(0.0)) > 1e-14)
        {
            rep.verdict = Verdict::Fails;
            rep.summary = "h(0) = " + detail::fmt(h(0.0)) + " != 0";
            return rep;
        }
        for (int i = 1; i <= 1024; ++i)
        {
            const double s = 100.0 * std::pow(1e-6, 1.0 - i / 1024.0);
            if (!(h(s) > 0.0))
            {
                rep.verdict = Verdict::Fails;
                rep.witness = std::pair{s, s};
                rep.summary = "h(" + detail::fmt(s) + ") <= 0";
                return rep;
            }
        }
        const auto mono = expr::sample_monotone(h, 0, 0.0, 100.0, 1024);
        if (mono.verdict == expr::Monotonicity::Violated)
        {
            rep.verdict = Verdict::Fails;
            rep.witness = mono.witness;
            rep.summary = "h decreases between " + detail::fmt(mono.witness->first) + " and " +
                          detail::fmt(mono.witness->second);
            return rep;
        }
        rep.verdict = mono.verdict == expr::Monotonicity::NonDecreasing ? Verdict::Holds : Verdict::Inconclusive;
        rep.summary = rep.verdict == Verdict::Holds ? "h(0) = 0, positive and non-decreasing on [0, 100]"
                                                    : "monotonicity inconclusive";
        return rep;
    }

    /// (C2) for the pair (f, g): vanish at (0, 0), positive for positive arguments,
    /// non-decreasing in each variable on [0, 100].
    inline ConditionReport check_nonlinearity(const FunctionSpec &f, const FunctionSpec &g)
    {
        if (f.arity() != 2 || g.arity() != 2)
            throw SpecError("check_nonlinearity: f and g must be functions of (u, v)");
        ConditionReport rep{ConditionId::C2};
        const std::pair<const FunctionSpec *, const char *> fs[] = {{&f, "f"}, {&g, "g"}};
        constexpr double probes[] = {1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0};
        constexpr double slices[] = {0.0, 0.1, 1.0, 10.0, 100.0};
        for (auto [fn, name] : fs)
        {
            if (std::fabs((*fn)(0.0, 0.0)) > 1e-14)
            {
                rep.verdict = Verdict::Fails;
                rep.summary = std::string(name) + "(0, 0) != 0";
                return rep;
            }
            for (double s : probes)
                for (double t : probes)
                    if (!((*fn)(s, t) > 0.0))
                    {
                        rep.verdict = Verdict::Fails;
                        rep.witness = std::pair{s, t};
                        rep.summary = std::string(name) + "(" + detail::fmt(s) + ", " + detail::fmt(t) + ") <= 0";
                        return rep;
                    }
            for (std::size_t var = 0; var < 2; ++var)
                for (double other : slices)
                {
                    const double base[2] = {other, other};
                    const auto mono = expr::sample_monotone(*fn, var, 0.0, 100.0, 512, base);
                    if (mono.verdict == expr::Monotonicity::Violated)
                    {
                        rep.verdict = Verdict::Fails;
                        rep.witness = mono.witness;
                        rep.summary = std::string(name) + " decreases in " + (var == 0 ? "u" : "v") + " between " +
                                      detail::fmt(mono.witness->first) + " and " + detail::fmt(mono.witness->second) +
                                      " with the other variable at " + detail::fmt(other);
                        return rep;
                    }
                }
        }
        rep.verdict = Verdict::Holds;
        rep.summary = "f, g vanish at the origin, positive and non-decreasing in each variable on [0, 100]";
        return rep;
    }

    /// (C3): int_1^inf ((k+1) H(t))^(-1/(k+1)) dt = inf with H(t) = int_0^t h^k.
    inline ConditionReport check_keller_osserman(const FunctionSpec &h, int k)
    {
        if (h.arity() != 1)
            throw SpecError("check_keller_osserman: h must be a function of one variable");
        return detail::keller_osserman(
            ConditionId::C3, [&h, k](double z) { return std::pow(h(z), k); }, k, "H");
    }

    /// (C4): the same integral with F(t) = int_0^t f^k(z, z) + g^k(z, z).
    inline ConditionReport check_keller_osserman(const FunctionSpec &f, const FunctionSpec &g, int k)
    {
        if (f.arity() != 2 || g.arity() != 2)
            throw SpecError("check_keller_osserman: f and g must be functions of (u, v)");
        return detail::keller_osserman(
            ConditionId::C4, [&f, &g, k](double z) { return std::pow(f(z, z), k) + std::pow(g(z, z), k); }, k, "F");
    }

    inline std::vector<double> default_epsilon_grid() { return {0.01, 0.05, 0.1, 0.5, 1.0}; }

    /// Weight decay: exists eps > 0 with
    ///   int_0^inf t^(1 + eps + 2(k-1)/(k+1)) (sum_i p_i^k)^(2/(k+1)) dt < inf.
    /// Each grid eps is classified in ascending order; the first that converges is reported.
    inline ConditionReport check_weight_decay(std::span<const FunctionSpec> weights, int k,
                                              std::span<const double> epsilon_grid, double margin = 0.05)
    {
        detail::check_weights(weights);
        if (k < 1)
            throw SpecError("k: must be >= 1");
        std::vector<double> eps(epsilon_grid.begin(), epsilon_grid.end());
        if (eps.empty())
            throw SpecError("epsilon_grid: must not be empty");
        for (double e : eps)
            if (!(e > 0.0))
                throw SpecError("epsilon_grid: values must be positive");
        std::sort(eps.begin(), eps.end());

        ConditionReport rep{weights.size() == 1 ? ConditionId::EQ5 : ConditionId::EQ5S};
        const double base = 1.0 + 2.0 * (k - 1.0) / (k + 1.0);
        const auto cutoffs = quad::default_cutoffs(0.0);
        quad::TailOptions opt;
        opt.margin = margin;
        for (double e : eps)
        {
            auto integrand = [&](double t) {
                if (t == 0.0)
                    return 0.0;
                return std::pow(t, base + e) * std::pow(detail::sum_pow(weights, t, k), 2.0 / (k + 1));
            };
            rep.tails.push_back(
                {"epsilon=" + detail::fmt(e), quad::classify_improper(integrand, 0.0, std::span<const double>(cutoffs), opt)});
            if (rep.tails.back().tail.verdict == quad::Convergence::Converges)
            {
                rep.verdict = Verdict::Holds;
                rep.epsilon_found = e;
                rep.summary = "converges for epsilon = " + detail::fmt(e);
                return rep;
            }
        }
        const auto &first = rep.tails.front().tail;
        const bool all_diverge = std::all_of(rep.tails.begin(), rep.tails.end(), [](const TailEvidence &t) {
            return t.tail.verdict == quad::Convergence::Diverges;
        });
        if (all_diverge && first.tail_exponent > -1.0 + margin)
        {
            rep.verdict = Verdict::Fails;
            rep.summary = "diverges for every epsilon on the grid; tail exponent at the smallest epsilon " +
                          detail::fmt(first.tail_exponent);
        }
        else
        {
            rep.verdict = Verdict::Inconclusive;
            rep.summary = "no epsilon on the grid converges, but divergence is not established";
        }
        return rep;
    }

    inline ConditionReport check_weight_decay(const FunctionSpec &p, int k,
                                              std::span<const double> epsilon_grid, double margin = 0.05)
    {
        return check_weight_decay(std::span<const FunctionSpec>(&p, 1), k, epsilon_grid, margin);
    }

    /// Largeness integral for one weight:
    ///   int_0^inf ( k / t^(N-k) int_0^t s^(N-1) / C(N-1,k-1) p^k(s) ds )^(1/k) dt = inf.
    inline ConditionReport check_weight_largeness(const FunctionSpec &weight, int k, int N)
    {
        if (weight.arity() != 1)
            throw SpecError("check_weight_largeness: weight must be a function of t");
        const auto hp = radial::HessianParams::make(N, k);
        const double c = static_cast<double>(hp.c_binom);
        const detail::PrefixIntegral inner([&weight, N, k, c](double s) {
            return std::pow(s, N - 1) / c * std::pow(weight(s), k);
        });
        auto composite = [&](double t) {
            if (t <= 0.0)
                return 0.0;
            return std::pow(k * inner(t) / std::pow(t, N - k), 1.0 / k);
        };
        ConditionReport rep{ConditionId::EQ12};
        const auto cutoffs = quad::default_cutoffs(0.0);
        rep.tails.push_back({"largeness integral", quad::classify_improper(composite, 0.0, std::span<const double>(cutoffs))});
        rep.verdict = from_divergence(rep.tails.back().tail.verdict);
        rep.summary = std::string("largeness integral ") + quad::to_string(rep.tails.back().tail.verdict) +
                      ", tail exponent " + detail::fmt(rep.tails.back().tail.tail_exponent);
        return rep;
    }

    /// System form: both largeness integrals (for p and for q) must diverge.
    inline ConditionReport check_weight_largeness(const FunctionSpec &p, const FunctionSpec &q, int k, int N)
    {
        const auto rp = check_weight_largeness(p, k, N);
        const auto rq = check_weight_largeness(q, k, N);
        ConditionReport rep{ConditionId::EQ12S};
        rep.tails.push_back({"largeness integral for p", rp.tails.front().tail});
        rep.tails.push_back({"largeness integral for q", rq.tails.front().tail});
        rep.items.emplace_back("p", rp.verdict);
        rep.items.emplace_back("q", rq.verdict);
        if (rp.verdict == Verdict::Holds && rq.verdict == Verdict::Holds)
        {
            rep.verdict = Verdict::Holds;
            rep.summary = "both largeness integrals diverge";
        }
        else
        {
            rep.verdict = (rp.verdict == Verdict::Fails || rq.verdict == Verdict::Fails) ? Verdict::Fails
                                                                                         : Verdict::Inconclusive;
            std::string blocking;
            if (rp.verdict != Verdict::Holds)
                blocking += "p (" + std::string(to_string(rp.verdict)) + ")";
            if (rq.verdict != Verdict::Holds)
                blocking += std::string(blocking.empty() ? "" : ", ") + "q (" + to_string(rq.verdict) + ")";
            rep.summary = "blocked by the largeness integral for " + blocking;
        }
        return rep;
    }

    /// Necessary conditions for an entire large solution: item 1 (the decay integral
    /// diverges for every eps) or item 2 (k in the complementary dimension range).
    inline ConditionReport necessary_condition(int N, int k, std::span<const FunctionSpec> weights,
                                               std::span<const double> epsilon_grid)
    {
        const auto decay = check_weight_decay(weights, k, epsilon_grid);
        const auto gate = dimension_gate(N, k);
        ConditionReport rep{weights.size() == 1 ? ConditionId::EQ13 : ConditionId::EQ13S};
        Verdict item1 = Verdict::Inconclusive;
        if (decay.verdict == Verdict::Fails)
            item1 = Verdict::Holds;
        else if (decay.verdict == Verdict::Holds)
            item1 = Verdict::Fails;
        const Verdict item2 = gate.items.front().second;
        rep.items.emplace_back("item1_decay_diverges_for_every_epsilon", item1);
        rep.items.emplace_back("item2_k_in_complementary_range", item2);
        rep.tails = decay.tails;
        rep.epsilon_found = decay.epsilon_found;
        if (item1 == Verdict::Holds || item2 == Verdict::Holds)
            rep.verdict = Verdict::Holds;
        else if (item1 == Verdict::Fails && item2 == Verdict::Fails)
            rep.verdict = Verdict::Fails;
        else
            rep.verdict = Verdict::Inconclusive;
        rep.summary = std::string("item 1 ") + to_string(item1) + ", item 2 " + to_string(item2);
        return rep;
    }
}
