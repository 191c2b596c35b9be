#include "khessian/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{
    struct Overrides
    {
        std::optional<int> dimension, k;
        std::optional<std::string> p, q, h, f, g;
        std::optional<double> a, a_v, r_max, tol, growth_ceiling;
        std::optional<long long> grid_points, max_iter;
        std::optional<std::vector<double>> epsilon_grid;
    };

    void add_problem_flags(CLI::App *cmd, Overrides &o)
    {
        const khessian::cli::RunConfig d;
        auto def = [](auto v) { return "(default " + CLI::detail::to_string(v) + ")"; };
        cmd->add_option("--dimension,--N", o.dimension, "space dimension N >= 3 " + def(d.dimension));
        cmd->add_option("--k", o.k, "Hessian order, 1 <= k <= N " + def(d.k));
        cmd->add_option("--p", o.p, "weight p(t) (default \"" + d.weight_p + "\")");
        cmd->add_option("--q", o.q, "weight q(t), systems (default \"" + d.weight_q + "\")");
        cmd->add_option("--h", o.h, "nonlinearity h(u) (default \"" + d.nonlinearity_h + "\")");
        cmd->add_option("--f", o.f, "nonlinearity f(u,v), systems (default \"" + d.nonlinearity_f + "\")");
        cmd->add_option("--g", o.g, "nonlinearity g(u,v), systems (default \"" + d.nonlinearity_g + "\")");
        cmd->add_option("--a", o.a, "initial value u(0) " + def(d.initial_value));
        cmd->add_option("--a-v", o.a_v, "initial value v(0), systems " + def(d.initial_value_v));
        cmd->add_option("--r-max", o.r_max, "radius of the computational interval " + def(d.r_max));
        cmd->add_option("--grid-points", o.grid_points, "number of grid nodes >= 64 " + def(d.grid_points));
        cmd->add_option("--tol", o.tol, "Picard convergence tolerance " + def(d.tol));
        cmd->add_option("--max-iter", o.max_iter, "Picard iteration cap " + def(d.max_iter));
        cmd->add_option("--growth-ceiling", o.growth_ceiling, "end value treated as blow-up " + def(d.growth_ceiling));
        cmd->add_option("--epsilon-grid", o.epsilon_grid, "epsilon values for the decay test (default 0.01 0.05 0.1 0.5 1)")
            ->expected(1, -1);
    }

    void apply(const Overrides &o, khessian::cli::RunConfig &c)
    {
        if (o.dimension) c.dimension = *o.dimension;
        if (o.k) c.k = *o.k;
        if (o.p) c.weight_p = *o.p;
        if (o.q) c.weight_q = *o.q;
        if (o.h) c.nonlinearity_h = *o.h;
        if (o.f) c.nonlinearity_f = *o.f;
        if (o.g) c.nonlinearity_g = *o.g;
        if (o.a) c.initial_value = *o.a;
        if (o.a_v) c.initial_value_v = *o.a_v;
        if (o.r_max) c.r_max = *o.r_max;
        if (o.grid_points) c.grid_points = *o.grid_points;
        if (o.tol) c.tol = *o.tol;
        if (o.max_iter) c.max_iter = *o.max_iter;
        if (o.growth_ceiling) c.growth_ceiling = *o.growth_ceiling;
        if (o.epsilon_grid) c.epsilon_grid = *o.epsilon_grid;
    }
}

int main(int argc, char **argv)
{
    using namespace khessian::cli;
    CLI::App app{"Radial solutions of k-Hessian equations and systems: Picard solver, condition checks, "
                 "theorem classification"};
    app.require_subcommand(1);
    // --h is the nonlinearity option, so help is long-form only
    app.set_help_flag("--help", "print this help message and exit");

    std::string config_path, out_path, format, condition;
    bool print_config = false, assume_large = false;
    Overrides o;

    const std::pair<const char *, const char *> commands[] = {
        {"solve", "solve the scalar problem; CSV profile r,u,du,S_k,residual (or JSON report)"},
        {"solve-system", "solve the coupled system; CSV profile (or JSON report)"},
        {"classify", "evaluate the scalar theorems; JSON report"},
        {"classify-system", "evaluate the system theorems; JSON report"},
        {"check", "evaluate one condition (--condition ID); JSON report"}};
    for (auto [name, help] : commands)
    {
        auto *cmd = app.add_subcommand(name, help);
        cmd->add_option("--config", config_path, "JSON configuration file");
        cmd->add_option("--out", out_path, "output path (default stdout)");
        cmd->add_option("--format", format, "csv or json (solve commands default to csv)")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_flag("--print-config", print_config, "print the effective configuration and exit");
        add_problem_flags(cmd, o);
        if (std::string(name) == "check")
            cmd->add_option("--condition", condition,
                            "P2 P3 C1 C2 C3 C4 EQ5 EQ5S EQ12 EQ12S EQ13 EQ13S GATE")
                ->required();
        if (std::string(name).starts_with("classify"))
            cmd->add_flag("--assume-large", assume_large, "assert a large solution exists (converse branch)");
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ValidationError;
    }

    RunConfig cfg;
    cfg.mode = *mode_from_string(app.get_subcommands().front()->get_name());
    try
    {
        if (!config_path.empty())
            cfg = load_config_file(cfg, config_path);
    }
    catch (const khessian::SpecError &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return ValidationError;
    }
    apply(o, cfg);
    if (!condition.empty())
        cfg.condition = condition;
    cfg.assume_large = assume_large;
    if (!out_path.empty())
        cfg.out = out_path;
    if (!format.empty())
        cfg.format = format == "csv" ? Format::Csv : Format::Json;

    if (print_config)
    {
        std::cout << config_to_json(cfg).dump(2) << "\n";
        return Success;
    }
    return run(cfg, std::cout, std::cerr);
}
