#pragma once

// Expression language for weights p(t), q(t) and nonlinearities h(u), f(u,v), g(u,v).
//
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := atom ('^' unary)?
//   atom  := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
//
// `^` is right-associative and binds tighter than unary minus, so -t^2 == -(t^2)
// and t^2^3 == t^(2^3). Builtins: exp, log, sqrt, abs, pow, min, max.

#include "khessian/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace khessian::expr
{
    enum class NodeKind
    {
        Number,
        Variable,
        Negate,
        Add,
        Sub,
        Mul,
        Div,
        Pow,
        Call
    };

    enum class Builtin
    {
        Exp,
        Log,
        Sqrt,
        Abs,
        Pow,
        Min,
        Max
    };

    struct Node
    {
        NodeKind kind = NodeKind::Number;
        double value = 0.0;        // Number
        int variable = 0;          // Variable: argument slot
        std::string name;          // Variable or Call: identifier as written
        Builtin builtin = Builtin::Exp;
        std::vector<Node> children;

        bool operator==(const Node &) const = default;
    };

    namespace detail
    {
        struct BuiltinInfo
        {
            std::string_view name;
            Builtin id;
            std::size_t min_args;
            std::size_t max_args;
        };

        inline constexpr std::array<BuiltinInfo, 7> kBuiltins{{
            {"exp", Builtin::Exp, 1, 1},
            {"log", Builtin::Log, 1, 1},
            {"sqrt", Builtin::Sqrt, 1, 1},
            {"abs", Builtin::Abs, 1, 1},
            {"pow", Builtin::Pow, 2, 2},
            {"min", Builtin::Min, 2, std::numeric_limits<std::size_t>::max()},
            {"max", Builtin::Max, 2, std::numeric_limits<std::size_t>::max()},
        }};

        inline const BuiltinInfo *find_builtin(std::string_view name)
        {
            for (const auto &b : kBuiltins)
                if (b.name == name)
                    return &b;
            return nullptr;
        }

        class Parser
        {
        public:
            Parser(std::string_view src, int arity) : src_(src), arity_(arity) {}

            Node parse()
            {
                skip_ws();
                if (pos_ >= src_.size())
                    throw ParseError("empty expression", pos_);
                Node n = expr();
                skip_ws();
                if (pos_ < src_.size())
                    throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
                return n;
            }

        private:
            std::string_view src_;
            int arity_;
            std::size_t pos_ = 0;
            // arity-1 specs may use `t` or `u`, but not both
            std::optional<char> unary_var_;

            void skip_ws()
            {
                while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            }

            bool accept(char c)
            {
                skip_ws();
                if (pos_ < src_.size() && src_[pos_] == c)
                {
                    ++pos_;
                    return true;
                }
                return false;
            }

            static Node binary(NodeKind kind, Node lhs, Node rhs)
            {
                Node n;
                n.kind = kind;
                n.children.push_back(std::move(lhs));
                n.children.push_back(std::move(rhs));
                return n;
            }

            Node expr()
            {
                Node lhs = term();
                for (;;)
                {
                    if (accept('+'))
                        lhs = binary(NodeKind::Add, std::move(lhs), term());
                    else if (accept('-'))
                        lhs = binary(NodeKind::Sub, std::move(lhs), term());
                    else
                        return lhs;
                }
            }

            Node term()
            {
                Node lhs = unary();
                for (;;)
                {
                    if (accept('*'))
                        lhs = binary(NodeKind::Mul, std::move(lhs), unary());
                    else if (accept('/'))
                        lhs = binary(NodeKind::Div, std::move(lhs), unary());
                    else
                        return lhs;
                }
            }

            Node unary()
            {
                if (accept('-'))
                {
                    Node n;
                    n.kind = NodeKind::Negate;
                    n.children.push_back(unary());
                    return n;
                }
                return power();
            }

            Node power()
            {
                Node base = atom();
                if (accept('^'))
                    return binary(NodeKind::Pow, std::move(base), unary());
                return base;
            }

            Node atom()
            {
                skip_ws();
                if (pos_ >= src_.size())
                    throw ParseError("unexpected end of expression", pos_);
                const char c = src_[pos_];
                if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
                    return number();
                if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
                    return identifier();
                if (c == '(')
                {
                    ++pos_;
                    Node inner = expr();
                    if (!accept(')'))
                        throw ParseError("expected ')'", pos_);
                    return inner;
                }
                throw ParseError(std::string("unexpected '") + c + "'", pos_);
            }

            Node number()
            {
                const std::size_t start = pos_;
                auto digits = [&] {
                    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                        ++pos_;
                };
                digits();
                if (pos_ < src_.size() && src_[pos_] == '.')
                {
                    ++pos_;
                    digits();
                }
                if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E'))
                {
                    std::size_t save = pos_++;
                    if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                        ++pos_;
                    if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                        digits();
                    else
                        pos_ = save;
                }
                Node n;
                n.kind = NodeKind::Number;
                const char *first = src_.data() + start;
                const char *last = src_.data() + pos_;
                auto [ptr, ec] = std::from_chars(first, last, n.value);
                if (ec != std::errc() || ptr != last || !std::isfinite(n.value))
                    throw ParseError("malformed number", start);
                return n;
            }

            Node identifier()
            {
                const std::size_t start = pos_;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    ++pos_;
                std::string name(src_.substr(start, pos_ - start));

                if (accept('('))
                {
                    const BuiltinInfo *info = find_builtin(name);
                    if (!info)
                        throw ParseError("unknown function '" + name + "'", start);
                    Node n;
                    n.kind = NodeKind::Call;
                    n.name = name;
                    n.builtin = info->id;
                    n.children.push_back(expr());
                    while (accept(','))
                        n.children.push_back(expr());
                    if (!accept(')'))
                        throw ParseError("expected ')'", pos_);
                    if (n.children.size() < info->min_args || n.children.size() > info->max_args)
                        throw ParseError("wrong number of arguments to '" + name + "'", start);
                    return n;
                }

                Node n;
                n.kind = NodeKind::Variable;
                n.name = name;
                n.variable = resolve_variable(name, start);
                return n;
            }

            int resolve_variable(const std::string &name, std::size_t at)
            {
                const bool known = name == "t" || name == "u" || name == "v";
                if (!known)
                {
                    if (find_builtin(name))
                        throw ParseError("function '" + name + "' used without arguments", at);
                    throw ParseError("unknown identifier '" + name + "'", at);
                }
                if (arity_ == 1)
                {
                    if (name == "v")
                        throw ParseError("arity violation: 'v' in a one-argument function", at);
                    if (unary_var_ && *unary_var_ != name[0])
                        throw ParseError("arity violation: mixes 't' and 'u'", at);
                    unary_var_ = name[0];
                    return 0;
                }
                if (name == "t")
                    throw ParseError("arity violation: 't' in a two-argument function", at);
                return name == "u" ? 0 : 1;
            }
        };

        enum class Op : unsigned char
        {
            Push,
            Load,
            Neg,
            Add,
            Sub,
            Mul,
            Div,
            Pow,
            Exp,
            Log,
            Sqrt,
            Abs,
            Min,
            Max
        };

        struct Instr
        {
            Op op;
            int index = 0; // Load: slot; Min/Max: argument count
            double value = 0.0;
        };

        inline double checked(double x, const char *what)
        {
            if (std::isnan(x))
                throw DomainError(std::string("domain error in ") + what);
            if (std::isinf(x))
                throw OverflowError(std::string("overflow in ") + what);
            return x;
        }

        inline double checked_pow(double base, double exponent)
        {
            if (base == 0.0 && exponent < 0.0)
                throw DomainError("domain error: 0 raised to a negative power");
            if (base < 0.0 && exponent != std::trunc(exponent))
                throw DomainError("domain error: negative base with non-integer exponent");
            return checked(std::pow(base, exponent), "power");
        }

        inline void compile(const Node &n, std::vector<Instr> &code)
        {
            switch (n.kind)
            {
            case NodeKind::Number:
                code.push_back({Op::Push, 0, n.value});
                return;
            case NodeKind::Variable:
                code.push_back({Op::Load, n.variable, 0.0});
                return;
            case NodeKind::Negate:
                compile(n.children[0], code);
                code.push_back({Op::Neg});
                return;
            case NodeKind::Add:
            case NodeKind::Sub:
            case NodeKind::Mul:
            case NodeKind::Div:
            case NodeKind::Pow:
            {
                compile(n.children[0], code);
                compile(n.children[1], code);
                static constexpr Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
                code.push_back({ops[static_cast<int>(n.kind) - static_cast<int>(NodeKind::Add)]});
                return;
            }
            case NodeKind::Call:
                for (const auto &c : n.children)
                    compile(c, code);
                switch (n.builtin)
                {
                case Builtin::Exp: code.push_back({Op::Exp}); break;
                case Builtin::Log: code.push_back({Op::Log}); break;
                case Builtin::Sqrt: code.push_back({Op::Sqrt}); break;
                case Builtin::Abs: code.push_back({Op::Abs}); break;
                case Builtin::Pow: code.push_back({Op::Pow}); break;
                case Builtin::Min: code.push_back({Op::Min, static_cast<int>(n.children.size())}); break;
                case Builtin::Max: code.push_back({Op::Max, static_cast<int>(n.children.size())}); break;
                }
                return;
            }
        }

        inline std::size_t stack_depth(const std::vector<Instr> &code)
        {
            std::size_t depth = 0, peak = 0;
            for (const auto &ins : code)
            {
                switch (ins.op)
                {
                case Op::Push:
                case Op::Load: ++depth; break;
                case Op::Add:
                case Op::Sub:
                case Op::Mul:
                case Op::Div:
                case Op::Pow: --depth; break;
                case Op::Min:
                case Op::Max: depth -= static_cast<std::size_t>(ins.index - 1); break;
                default: break;
                }
                peak = std::max(peak, depth);
            }
            return peak;
        }

        inline void print(const Node &n, std::string &out)
        {
            switch (n.kind)
            {
            case NodeKind::Number:
            {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", n.value);
                out += buf;
                return;
            }
            case NodeKind::Variable:
                out += n.name;
                return;
            case NodeKind::Negate:
                out += "(-";
                print(n.children[0], out);
                out += ')';
                return;
            case NodeKind::Call:
                out += n.name;
                out += '(';
                for (std::size_t i = 0; i < n.children.size(); ++i)
                {
                    if (i)
                        out += ", ";
                    print(n.children[i], out);
                }
                out += ')';
                return;
            default:
            {
                static constexpr const char *sym[] = {" + ", " - ", " * ", " / ", " ^ "};
                out += '(';
                print(n.children[0], out);
                out += sym[static_cast<int>(n.kind) - static_cast<int>(NodeKind::Add)];
                print(n.children[1], out);
                out += ')';
                return;
            }
            }
        }
    }

    /// A parsed, immutable function of one or two real arguments.
    class FunctionSpec
    {
    public:
        FunctionSpec() = default;

        const std::string &source() const noexcept { return source_; }
        int arity() const noexcept { return arity_; }
        const Node &root() const noexcept { return root_; }

        /// Fully parenthesized text that re-parses to an identical tree.
        std::string print() const
        {
            std::string out;
            detail::print(root_, out);
            return out;
        }

        double operator()(std::span<const double> args) const
        {
            if (static_cast<int>(args.size()) != arity_)
                throw DomainError("expected " + std::to_string(arity_) + " argument(s), got " +
                                  std::to_string(args.size()));
            return run(args.data());
        }

        double operator()(double x) const
        {
            const double a[1] = {x};
            return (*this)(std::span<const double>(a, 1));
        }

        double operator()(double x, double y) const
        {
            const double a[2] = {x, y};
            return (*this)(std::span<const double>(a, 2));
        }

        bool operator==(const FunctionSpec &o) const { return arity_ == o.arity_ && root_ == o.root_; }

    private:
        friend FunctionSpec parse(std::string_view source, int arity);

        std::string source_;
        int arity_ = 1;
        Node root_;
        std::vector<detail::Instr> code_;
        std::size_t depth_ = 1;

        double run(const double *args) const
        {
            using detail::checked;
            using detail::Op;
            constexpr std::size_t kInline = 32;
            std::array<double, kInline> small;
            std::vector<double> big;
            double *stack = small.data();
            if (depth_ > kInline)
            {
                big.resize(depth_);
                stack = big.data();
            }
            std::size_t sp = 0;
            for (const auto &ins : code_)
            {
                switch (ins.op)
                {
                case Op::Push: stack[sp++] = ins.value; break;
                case Op::Load: stack[sp++] = args[ins.index]; break;
                case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
                case Op::Add: --sp; stack[sp - 1] = checked(stack[sp - 1] + stack[sp], "addition"); break;
                case Op::Sub: --sp; stack[sp - 1] = checked(stack[sp - 1] - stack[sp], "subtraction"); break;
                case Op::Mul: --sp; stack[sp - 1] = checked(stack[sp - 1] * stack[sp], "multiplication"); break;
                case Op::Div:
                    --sp;
                    if (stack[sp] == 0.0)
                        throw DomainError("domain error: division by zero");
                    stack[sp - 1] = checked(stack[sp - 1] / stack[sp], "division");
                    break;
                case Op::Pow: --sp; stack[sp - 1] = detail::checked_pow(stack[sp - 1], stack[sp]); break;
                case Op::Exp: stack[sp - 1] = checked(std::exp(stack[sp - 1]), "exp"); break;
                case Op::Log:
                    if (!(stack[sp - 1] > 0.0))
                        throw DomainError("domain error: log of a non-positive number");
                    stack[sp - 1] = std::log(stack[sp - 1]);
                    break;
                case Op::Sqrt:
                    if (stack[sp - 1] < 0.0)
                        throw DomainError("domain error: sqrt of a negative number");
                    stack[sp - 1] = std::sqrt(stack[sp - 1]);
                    break;
                case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
                case Op::Min:
                case Op::Max:
                {
                    const std::size_t n = static_cast<std::size_t>(ins.index);
                    double acc = stack[sp - n];
                    for (std::size_t i = sp - n + 1; i < sp; ++i)
                        acc = ins.op == Op::Min ? std::min(acc, stack[i]) : std::max(acc, stack[i]);
                    sp -= n;
                    stack[sp++] = acc;
                    break;
                }
                }
            }
            return stack[0];
        }
    };

    /// Parses `source` as a function of `arity` (1 or 2) arguments.
    inline FunctionSpec parse(std::string_view source, int arity)
    {
        if (arity != 1 && arity != 2)
            throw SpecError("arity must be 1 or 2");
        FunctionSpec spec;
        spec.source_ = std::string(source);
        spec.arity_ = arity;
        spec.root_ = detail::Parser(source, arity).parse();
        detail::compile(spec.root_, spec.code_);
        spec.depth_ = std::max<std::size_t>(1, detail::stack_depth(spec.code_));
        return spec;
    }

    enum class Monotonicity
    {
        NonDecreasing,
        Violated,
        Inconclusive
    };

    struct MonotoneVerdict
    {
        Monotonicity verdict = Monotonicity::Inconclusive;
        // Consecutive sample abscissae (x_i, x_{i+1}) with f(x_i) > f(x_{i+1}) + tol.
        std::optional<std::pair<double, double>> witness;
    };

    /// Samples `spec` along one coordinate on [lo, hi] and checks it never decreases.
    ///
    /// `base` supplies the remaining coordinates for two-argument specs (its entry at
    /// `variable` is ignored). When the sample spacing is coarser than `resolution`, a
    /// clean pass is reported as Inconclusive instead of NonDecreasing.
    inline MonotoneVerdict sample_monotone(const FunctionSpec &spec, std::size_t variable, double lo, double hi,
                                           std::size_t samples, std::span<const double> base = {},
                                           double resolution = std::numeric_limits<double>::infinity())
    {
        if (!(hi > lo))
            throw SpecError("sample_monotone: degenerate interval");
        if (samples < 16)
            throw SpecError("sample_monotone: at least 16 samples required");
        if (variable >= static_cast<std::size_t>(spec.arity()))
            throw SpecError("sample_monotone: variable index out of range");

        std::array<double, 2> point{0.0, 0.0};
        for (std::size_t i = 0; i < base.size() && i < point.size(); ++i)
            point[i] = base[i];
        const std::span<const double> args(point.data(), static_cast<std::size_t>(spec.arity()));

        const double step = (hi - lo) / static_cast<double>(samples - 1);
        auto at = [&](std::size_t i) { return i + 1 == samples ? hi : lo + step * static_cast<double>(i); };

        point[variable] = at(0);
        double prev = spec(args);
        for (std::size_t i = 1; i < samples; ++i)
        {
            point[variable] = at(i);
            const double cur = spec(args);
            if (prev > cur + 1e-12 * (1.0 + std::fabs(prev)))
                return {Monotonicity::Violated, std::pair{at(i - 1), at(i)}};
            prev = cur;
        }
        if (step > resolution)
            return {Monotonicity::Inconclusive, std::nullopt};
        return {Monotonicity::NonDecreasing, std::nullopt};
    }
}

namespace khessian
{
    using expr::FunctionSpec;
}
