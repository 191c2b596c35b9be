#pragma once

// Command-line plumbing: configuration documents, CSV profiles and JSON reports.
// The executable in tools/ only parses flags and calls run().

#include "khessian/classify.hpp"
#include "khessian/conditions.hpp"
#include "khessian/picard.hpp"
#include "khessian/problem.hpp"
#include "khessian/radial.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace khessian::cli
{
    using json = nlohmann::ordered_json;

    enum class Mode
    {
        Solve,
        SolveSystem,
        Classify,
        ClassifySystem,
        Check
    };

    inline std::optional<Mode> mode_from_string(std::string_view s)
    {
        if (s == "solve") return Mode::Solve;
        if (s == "solve-system") return Mode::SolveSystem;
        if (s == "classify") return Mode::Classify;
        if (s == "classify-system") return Mode::ClassifySystem;
        if (s == "check") return Mode::Check;
        return std::nullopt;
    }

    enum class Format
    {
        Csv,
        Json
    };

    enum ExitCode
    {
        Success = 0,
        IoFailure = 1,
        ValidationError = 2,
        NumericalFailure = 3
    };

    /// Problem fields are kept as text until the run, so a config always echoes verbatim.
    struct RunConfig
    {
        Mode mode = Mode::Solve;
        int dimension = 3;
        int k = 1;
        std::string weight_p = "1";
        std::string weight_q = "1";
        std::string nonlinearity_h = "u";
        std::string nonlinearity_f = "(u+v)/2";
        std::string nonlinearity_g = "(u+v)/2";
        double initial_value = 1.0;
        double initial_value_v = 1.0;
        double r_max = 5.0;
        long long grid_points = 1000;
        double tol = 1e-8;
        long long max_iter = 500;
        std::vector<double> epsilon_grid = conditions::default_epsilon_grid();
        double growth_ceiling = 1e8;

        std::optional<std::string> condition;
        bool assume_large = false;
        std::optional<std::string> out;
        std::optional<Format> format;
    };

    inline const std::vector<std::string> &config_keys()
    {
        static const std::vector<std::string> keys = {
            "dimension",      "k",              "weight_p",      "weight_q", "nonlinearity_h",
            "nonlinearity_f", "nonlinearity_g", "initial_value", "initial_value_v", "r_max",
            "grid_points",    "tol",            "max_iter",      "epsilon_grid",    "growth_ceiling"};
        return keys;
    }

    inline json config_to_json(const RunConfig &c)
    {
        json j;
        j["dimension"] = c.dimension;
        j["k"] = c.k;
        j["weight_p"] = c.weight_p;
        j["weight_q"] = c.weight_q;
        j["nonlinearity_h"] = c.nonlinearity_h;
        j["nonlinearity_f"] = c.nonlinearity_f;
        j["nonlinearity_g"] = c.nonlinearity_g;
        j["initial_value"] = c.initial_value;
        j["initial_value_v"] = c.initial_value_v;
        j["r_max"] = c.r_max;
        j["grid_points"] = c.grid_points;
        j["tol"] = c.tol;
        j["max_iter"] = c.max_iter;
        j["epsilon_grid"] = c.epsilon_grid;
        j["growth_ceiling"] = c.growth_ceiling;
        return j;
    }

    namespace detail
    {
        template <class T>
        T get_as(const json &j, const std::string &key)
        {
            try
            {
                return j.at(key).get<T>();
            }
            catch (const nlohmann::json::exception &)
            {
                throw SpecError(key + ": wrong type");
            }
        }

        inline double get_number(const json &j, const std::string &key)
        {
            if (!j.at(key).is_number())
                throw SpecError(key + ": must be a number");
            return j.at(key).get<double>();
        }

        inline long long get_integer(const json &j, const std::string &key)
        {
            if (!j.at(key).is_number_integer())
                throw SpecError(key + ": must be an integer");
            return j.at(key).get<long long>();
        }

        inline std::string get_string(const json &j, const std::string &key)
        {
            if (!j.at(key).is_string())
                throw SpecError(key + ": must be a string expression");
            return j.at(key).get<std::string>();
        }
    }

    /// Overlays the keys present in `doc` onto `base`. Unknown keys are rejected.
    inline RunConfig apply_config_json(RunConfig base, const json &doc)
    {
        if (!doc.is_object())
            throw SpecError("config: top level must be an object");
        const auto &keys = config_keys();
        for (const auto &[key, value] : doc.items())
            if (std::find(keys.begin(), keys.end(), key) == keys.end())
                throw SpecError(key + ": unknown configuration key");
        if (doc.contains("dimension"))
            base.dimension = static_cast<int>(detail::get_integer(doc, "dimension"));
        if (doc.contains("k"))
            base.k = static_cast<int>(detail::get_integer(doc, "k"));
        if (doc.contains("weight_p"))
            base.weight_p = detail::get_string(doc, "weight_p");
        if (doc.contains("weight_q"))
            base.weight_q = detail::get_string(doc, "weight_q");
        if (doc.contains("nonlinearity_h"))
            base.nonlinearity_h = detail::get_string(doc, "nonlinearity_h");
        if (doc.contains("nonlinearity_f"))
            base.nonlinearity_f = detail::get_string(doc, "nonlinearity_f");
        if (doc.contains("nonlinearity_g"))
            base.nonlinearity_g = detail::get_string(doc, "nonlinearity_g");
        if (doc.contains("initial_value"))
            base.initial_value = detail::get_number(doc, "initial_value");
        if (doc.contains("initial_value_v"))
            base.initial_value_v = detail::get_number(doc, "initial_value_v");
        if (doc.contains("r_max"))
            base.r_max = detail::get_number(doc, "r_max");
        if (doc.contains("grid_points"))
            base.grid_points = detail::get_integer(doc, "grid_points");
        if (doc.contains("tol"))
            base.tol = detail::get_number(doc, "tol");
        if (doc.contains("max_iter"))
            base.max_iter = detail::get_integer(doc, "max_iter");
        if (doc.contains("epsilon_grid"))
            base.epsilon_grid = detail::get_as<std::vector<double>>(doc, "epsilon_grid");
        if (doc.contains("growth_ceiling"))
            base.growth_ceiling = detail::get_number(doc, "growth_ceiling");
        return base;
    }

    inline RunConfig load_config_file(RunConfig base, const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw SpecError("config: cannot open " + path);
        json doc;
        try
        {
            doc = json::parse(in);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw SpecError(std::string("config: invalid JSON in ") + path + ": " + e.what());
        }
        return apply_config_json(std::move(base), doc);
    }

    namespace detail
    {
        inline FunctionSpec parse_field(const std::string &source, int arity, const char *key)
        {
            try
            {
                return expr::parse(source, arity);
            }
            catch (const ParseError &e)
            {
                throw SpecError(std::string(key) + ": " + e.what() + " at offset " + std::to_string(e.offset()));
            }
        }

        inline SolverControls controls(const RunConfig &c)
        {
            if (c.grid_points < 0)
                throw SpecError("grid_points: must be >= 64");
            if (c.max_iter < 1)
                throw SpecError("max_iter: must be >= 1");
            SolverControls ctl;
            ctl.r_max = c.r_max;
            ctl.grid_points = static_cast<std::size_t>(c.grid_points);
            ctl.tol = c.tol;
            ctl.max_iter = static_cast<std::size_t>(c.max_iter);
            ctl.growth_ceiling = c.growth_ceiling;
            return ctl;
        }
    }

    inline ProblemSpec to_problem(const RunConfig &c)
    {
        ProblemSpec pr;
        pr.N = c.dimension;
        pr.k = c.k;
        pr.a = c.initial_value;
        pr.p = detail::parse_field(c.weight_p, 1, "weight_p");
        pr.h = detail::parse_field(c.nonlinearity_h, 1, "nonlinearity_h");
        pr.controls = detail::controls(c);
        return pr;
    }

    inline SystemSpec to_system(const RunConfig &c)
    {
        SystemSpec sys;
        sys.N = c.dimension;
        sys.k = c.k;
        sys.a_u = c.initial_value;
        sys.a_v = c.initial_value_v;
        sys.p = detail::parse_field(c.weight_p, 1, "weight_p");
        sys.q = detail::parse_field(c.weight_q, 1, "weight_q");
        sys.f = detail::parse_field(c.nonlinearity_f, 2, "nonlinearity_f");
        sys.g = detail::parse_field(c.nonlinearity_g, 2, "nonlinearity_g");
        sys.controls = detail::controls(c);
        return sys;
    }

    inline std::string format_number(double x)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }

    inline std::string profile_csv(const picard::SolveReport &rep, const ProblemSpec &problem)
    {
        const auto &u = rep.solution;
        const auto s = radial::k_hessian_radial(u.nodes, u.derivative, radial::HessianParams::make(problem.N, problem.k));
        const auto res = radial::residual_profile(u, problem);
        std::string out = "r,u,du,S_k,residual\n";
        for (std::size_t i = 0; i < u.size(); ++i)
            out += format_number(u.nodes[i]) + ',' + format_number(u.values[i]) + ',' + format_number(u.derivative[i]) +
                   ',' + format_number(s[i]) + ',' + format_number(res[i]) + '\n';
        return out;
    }

    inline std::string system_csv(const picard::SystemSolveReport &rep, const SystemSpec &sys)
    {
        const auto &u = rep.u.solution;
        const auto &v = rep.v.solution;
        const auto hp = radial::HessianParams::make(sys.N, sys.k);
        const auto su = radial::k_hessian_radial(u.nodes, u.derivative, hp);
        const auto sv = radial::k_hessian_radial(v.nodes, v.derivative, hp);
        std::vector<double> rhs_u(u.size()), rhs_v(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
        {
            rhs_u[i] = sys.p(u.nodes[i]) * sys.f(u.values[i], v.values[i]);
            rhs_v[i] = sys.q(u.nodes[i]) * sys.g(u.values[i], v.values[i]);
        }
        const auto ru = radial::pointwise_residual(su, rhs_u, sys.k);
        const auto rv = radial::pointwise_residual(sv, rhs_v, sys.k);
        std::string out = "r,u,v,du,dv,S_k_u,S_k_v,residual_u,residual_v\n";
        for (std::size_t i = 0; i < u.size(); ++i)
            out += format_number(u.nodes[i]) + ',' + format_number(u.values[i]) + ',' + format_number(v.values[i]) +
                   ',' + format_number(u.derivative[i]) + ',' + format_number(v.derivative[i]) + ',' +
                   format_number(su[i]) + ',' + format_number(sv[i]) + ',' + format_number(ru[i]) + ',' +
                   format_number(rv[i]) + '\n';
        return out;
    }

    inline json tail_to_json(const conditions::TailEvidence &t)
    {
        json j;
        j["label"] = t.label;
        j["verdict"] = quad::to_string(t.tail.verdict);
        j["tail_exponent"] = t.tail.tail_exponent;
        j["previous_exponent"] = t.tail.previous_exponent;
        j["partial_values"] = t.tail.partial_values;
        j["limit_estimate"] = t.tail.limit_estimate ? json(*t.tail.limit_estimate) : json(nullptr);
        return j;
    }

    inline json condition_to_json(const conditions::ConditionReport &r)
    {
        json j;
        j["condition"] = conditions::to_string(r.id);
        j["verdict"] = conditions::to_string(r.verdict);
        j["summary"] = r.summary;
        if (!r.tails.empty())
            j["tail_exponent"] = r.tails.front().tail.tail_exponent;
        if (r.epsilon_found)
            j["epsilon_found"] = *r.epsilon_found;
        if (r.threshold_radius)
            j["threshold_radius"] = *r.threshold_radius;
        if (r.witness)
            j["witness"] = json::array({r.witness->first, r.witness->second});
        if (!r.items.empty())
        {
            json items;
            for (const auto &[name, v] : r.items)
                items[name] = conditions::to_string(v);
            j["items"] = items;
        }
        if (r.id == conditions::ConditionId::GATE)
            j["admissible_k"] = r.admissible_k;
        json tails = json::array();
        for (const auto &t : r.tails)
            tails.push_back(tail_to_json(t));
        j["tails"] = tails;
        return j;
    }

    inline json theorem_to_json(const classify::TheoremVerdict &t)
    {
        json j;
        j["theorem"] = classify::to_string(t.id);
        j["applicable"] = t.applicable;
        j["conclusion"] = classify::to_string(t.conclusion);
        j["blocking"] = t.blocking;
        json ledger = json::array();
        for (const auto &c : t.ledger)
            ledger.push_back(condition_to_json(c));
        j["ledger"] = ledger;
        return j;
    }

    inline json solve_to_json(const picard::SolveReport &rep)
    {
        json j;
        j["status"] = picard::to_string(rep.trace.status);
        j["residual"] = rep.residual;
        j["gamma_k_certified"] = rep.gamma_k_certified;
        j["sup_value"] = rep.sup_value;
        j["iterations"] = rep.iterations;
        j["classification"] = picard::to_string(rep.classification);
        j["notes"] = rep.notes;
        return j;
    }

    inline json system_solve_to_json(const picard::SystemSolveReport &rep)
    {
        json j;
        j["status"] = picard::to_string(rep.status);
        j["residual"] = std::max(rep.u.residual, rep.v.residual);
        j["gamma_k_certified"] = rep.u.gamma_k_certified && rep.v.gamma_k_certified;
        j["sup_value"] = std::max(rep.u.sup_value, rep.v.sup_value);
        j["iterations"] = rep.iterations;
        j["u"] = solve_to_json(rep.u);
        j["v"] = solve_to_json(rep.v);
        return j;
    }

    namespace detail
    {
        inline bool is_system_condition(conditions::ConditionId id)
        {
            using conditions::ConditionId;
            return id == ConditionId::P3 || id == ConditionId::C2 || id == ConditionId::C4 || id == ConditionId::EQ5S ||
                   id == ConditionId::EQ12S || id == ConditionId::EQ13S;
        }

        inline conditions::ConditionReport run_check(const RunConfig &c, conditions::ConditionId id)
        {
            using conditions::ConditionId;
            const int N = c.dimension, k = c.k;
            khessian::detail::validate_dimensions(N, k);
            auto weights = [&](bool system) {
                std::vector<FunctionSpec> w{parse_field(c.weight_p, 1, "weight_p")};
                if (system)
                    w.push_back(parse_field(c.weight_q, 1, "weight_q"));
                return w;
            };
            const bool sys = is_system_condition(id);
            switch (id)
            {
            case ConditionId::GATE: return conditions::dimension_gate(N, k);
            case ConditionId::P2:
            case ConditionId::P3: {
                const auto w = weights(sys);
                return conditions::check_weight_monotonicity(w, k, N);
            }
            case ConditionId::C1: return conditions::check_nonlinearity(parse_field(c.nonlinearity_h, 1, "nonlinearity_h"));
            case ConditionId::C2:
                return conditions::check_nonlinearity(parse_field(c.nonlinearity_f, 2, "nonlinearity_f"),
                                                      parse_field(c.nonlinearity_g, 2, "nonlinearity_g"));
            case ConditionId::C3:
                return conditions::check_keller_osserman(parse_field(c.nonlinearity_h, 1, "nonlinearity_h"), k);
            case ConditionId::C4:
                return conditions::check_keller_osserman(parse_field(c.nonlinearity_f, 2, "nonlinearity_f"),
                                                         parse_field(c.nonlinearity_g, 2, "nonlinearity_g"), k);
            case ConditionId::EQ5:
            case ConditionId::EQ5S: {
                const auto w = weights(sys);
                return conditions::check_weight_decay(w, k, c.epsilon_grid);
            }
            case ConditionId::EQ12: return conditions::check_weight_largeness(parse_field(c.weight_p, 1, "weight_p"), k, N);
            case ConditionId::EQ12S:
                return conditions::check_weight_largeness(parse_field(c.weight_p, 1, "weight_p"),
                                                          parse_field(c.weight_q, 1, "weight_q"), k, N);
            case ConditionId::EQ13:
            case ConditionId::EQ13S: {
                const auto w = weights(sys);
                return conditions::necessary_condition(N, k, w, c.epsilon_grid);
            }
            default: throw SpecError(std::string("condition: ") + conditions::to_string(id) + " has no numerical check");
            }
        }

        inline std::string dump(const json &j) { return j.dump(2) + "\n"; }
    }

    /// Produces the artifact text for a run. Throws SpecError (validation) or
    /// NumericalError/DomainError (numerical failure).
    inline std::string render(const RunConfig &c)
    {
        json report;
        report["config"] = config_to_json(c);
        switch (c.mode)
        {
        case Mode::Solve: {
            const auto pr = to_problem(c);
            validate(pr);
            const auto rep = picard::solve_scalar(pr, {.record_iterates = false});
            if (c.format.value_or(Format::Csv) == Format::Csv)
                return profile_csv(rep, pr);
            report["verdicts"] = json::array();
            report["solve"] = solve_to_json(rep);
            return detail::dump(report);
        }
        case Mode::SolveSystem: {
            const auto sys = to_system(c);
            validate(sys);
            const auto rep = picard::solve_system(sys, {.record_iterates = false});
            if (c.format.value_or(Format::Csv) == Format::Csv)
                return system_csv(rep, sys);
            report["verdicts"] = json::array();
            report["solve"] = system_solve_to_json(rep);
            return detail::dump(report);
        }
        case Mode::Classify: {
            if (c.format == Format::Csv)
                throw SpecError("format: classify produces JSON only");
            const auto pr = to_problem(c);
            const auto verdicts =
                classify::classify_scalar(pr, {.epsilon_grid = c.epsilon_grid, .assume_large = c.assume_large});
            json vs = json::array();
            for (const auto &v : verdicts)
                vs.push_back(theorem_to_json(v));
            report["verdicts"] = vs;
            report["solve"] = solve_to_json(picard::solve_scalar(pr, {.record_iterates = false}));
            return detail::dump(report);
        }
        case Mode::ClassifySystem: {
            if (c.format == Format::Csv)
                throw SpecError("format: classify-system produces JSON only");
            const auto sys = to_system(c);
            const auto verdicts =
                classify::classify_system(sys, {.epsilon_grid = c.epsilon_grid, .assume_large = c.assume_large});
            json vs = json::array();
            for (const auto &v : verdicts)
                vs.push_back(theorem_to_json(v));
            report["verdicts"] = vs;
            report["solve"] = system_solve_to_json(picard::solve_system(sys, {.record_iterates = false}));
            return detail::dump(report);
        }
        case Mode::Check: {
            if (c.format == Format::Csv)
                throw SpecError("format: check produces JSON only");
            if (!c.condition)
                throw SpecError("condition: check requires --condition ID");
            const auto id = conditions::condition_from_string(*c.condition);
            if (!id)
                throw SpecError("condition: unknown condition id '" + *c.condition + "'");
            report["verdicts"] = json::array({condition_to_json(detail::run_check(c, *id))});
            return detail::dump(report);
        }
        }
        return {};
    }

    /// Runs a command: writes the artifact to c.out (or `out`), diagnostics to `err`.
    inline int run(const RunConfig &c, std::ostream &out, std::ostream &err)
    {
        std::string text;
        try
        {
            text = render(c);
        }
        catch (const SpecError &e)
        {
            err << "error: " << e.what() << "\n";
            return ValidationError;
        }
        catch (const ParseError &e)
        {
            err << "error: " << e.what() << " at offset " << e.offset() << "\n";
            return ValidationError;
        }
        catch (const NumericalError &e)
        {
            err << "numerical failure: " << e.what() << "\n";
            return NumericalFailure;
        }
        catch (const DomainError &e)
        {
            err << "numerical failure: " << e.what() << "\n";
            return NumericalFailure;
        }
        if (c.out)
        {
            std::ofstream f(*c.out, std::ios::binary);
            if (!f || !(f << text) || !f.flush())
            {
                err << "error: cannot write " << *c.out << "\n";
                return IoFailure;
            }
            return Success;
        }
        out << text;
        return Success;
    }
}
