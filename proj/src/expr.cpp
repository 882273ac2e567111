#include "qvi/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace qvi {

namespace {

constexpr std::array<std::pair<const char*, Func>, 9> kFunctions{{
    {"sin", Func::Sin},
    {"cos", Func::Cos},
    {"exp", Func::Exp},
    {"log", Func::Log},
    {"abs", Func::Abs},
    {"sqrt", Func::Sqrt},
    {"min", Func::Min},
    {"max", Func::Max},
    {"tanh", Func::Tanh},
}};

unsigned var_bit(Var v) { return 1u << static_cast<unsigned>(v); }

unsigned collect_vars(const Node& n)
{
    unsigned mask = n.kind == NodeKind::Variable ? var_bit(n.var) : 0u;
    for (const auto& a : n.args) {
        mask |= collect_vars(*a);
    }
    return mask;
}

std::string format_number(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

char var_char(Var v)
{
    switch (v) {
    case Var::X: return 'x';
    case Var::Y: return 'y';
    case Var::T: return 't';
    case Var::U: return 'u';
    }
    return '?';
}

void print(const Node& n, std::string& out)
{
    switch (n.kind) {
    case NodeKind::Constant:
        if (std::signbit(n.value)) {
            out += "(-" + format_number(-n.value) + ")";
        } else {
            out += format_number(n.value);
        }
        return;
    case NodeKind::Variable:
        out += var_char(n.var);
        return;
    case NodeKind::Negate:
        out += "(-";
        print(*n.args[0], out);
        out += ")";
        return;
    case NodeKind::Call: {
        out += function_name(n.func);
        out += "(";
        for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ", ";
            print(*n.args[i], out);
        }
        out += ")";
        return;
    }
    default: break;
    }
    const char* op = "?";
    switch (n.kind) {
    case NodeKind::Add: op = " + "; break;
    case NodeKind::Sub: op = " - "; break;
    case NodeKind::Mul: op = " * "; break;
    case NodeKind::Div: op = " / "; break;
    case NodeKind::Pow: op = " ^ "; break;
    default: break;
    }
    out += "(";
    print(*n.args[0], out);
    out += op;
    print(*n.args[1], out);
    out += ")";
}

std::string printed(const Node& n)
{
    std::string s;
    print(n, s);
    return s;
}

// Precedence climbing: expr := term (('+'|'-') term)*, term := unary (('*'|'/') unary)*,
// unary := '-' unary | power, power := primary ('^' unary)?
class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr parse()
    {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError("empty expression", pos_);
        }
        NodePtr n = parse_sum();
        skip_ws();
        if (pos_ != src_.size()) {
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        }
        return n;
    }

private:
    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    NodePtr parse_sum()
    {
        NodePtr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = make_binary(NodeKind::Add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = make_binary(NodeKind::Sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_product()
    {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_binary(NodeKind::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = make_binary(NodeKind::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary()
    {
        if (accept('-')) {
            return make_unary(NodeKind::Negate, parse_unary());
        }
        return parse_power();
    }

    NodePtr parse_power()
    {
        NodePtr base = parse_primary();
        if (accept('^')) {
            // right-associative; exponent may carry its own unary minus
            return make_binary(NodeKind::Pow, base, parse_unary());
        }
        return base;
    }

    NodePtr parse_primary()
    {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError("unexpected end of expression", pos_);
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_sum();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return parse_identifier();
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        const std::string text(src_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) {
            throw ParseError("malformed number '" + text + "'", start);
        }
        return make_constant(v);
    }

    NodePtr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        if (name.size() == 1) {
            switch (name[0]) {
            case 'x': return make_variable(Var::X);
            case 'y': return make_variable(Var::Y);
            case 't': return make_variable(Var::T);
            case 'u': return make_variable(Var::U);
            default: break;
            }
        }
        for (const auto& [fname, f] : kFunctions) {
            if (name == fname) {
                return parse_call(f, start);
            }
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    NodePtr parse_call(Func f, std::size_t start)
    {
        expect('(');
        std::vector<NodePtr> args;
        if (!accept(')')) {
            do {
                args.push_back(parse_sum());
            } while (accept(','));
            expect(')');
        }
        if (args.size() != function_arity(f)) {
            throw ParseError(std::string("function '") + function_name(f) + "' expects " +
                                 std::to_string(function_arity(f)) + " argument(s), got " +
                                 std::to_string(args.size()),
                             start);
        }
        return make_call(f, std::move(args));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

double eval_node(const Node& n, const Point& p)
{
    switch (n.kind) {
    case NodeKind::Constant: return n.value;
    case NodeKind::Variable:
        switch (n.var) {
        case Var::X: return p.x;
        case Var::T: return p.t;
        case Var::U: return p.u;
        case Var::Y:
            if (!p.y) {
                throw EvalError("variable y is not available in 1D", "y");
            }
            return *p.y;
        }
        return 0.0;
    case NodeKind::Negate: return -eval_node(*n.args[0], p);
    case NodeKind::Add: return eval_node(*n.args[0], p) + eval_node(*n.args[1], p);
    case NodeKind::Sub: return eval_node(*n.args[0], p) - eval_node(*n.args[1], p);
    case NodeKind::Mul: return eval_node(*n.args[0], p) * eval_node(*n.args[1], p);
    case NodeKind::Div: {
        const double den = eval_node(*n.args[1], p);
        if (den == 0.0) {
            throw EvalError("division by zero", printed(n));
        }
        return eval_node(*n.args[0], p) / den;
    }
    case NodeKind::Pow: {
        const double b = eval_node(*n.args[0], p);
        const double e = eval_node(*n.args[1], p);
        if (b < 0.0 && std::floor(e) != e) {
            throw EvalError("non-integer power of a negative base", printed(n));
        }
        if (b == 0.0 && e < 0.0) {
            throw EvalError("division by zero", printed(n));
        }
        return std::pow(b, e);
    }
    case NodeKind::Call: {
        const double a = eval_node(*n.args[0], p);
        switch (n.func) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Exp: return std::exp(a);
        case Func::Tanh: return std::tanh(a);
        case Func::Abs: return std::fabs(a);
        case Func::Log:
            if (a <= 0.0) {
                throw EvalError("log of non-positive value", printed(n));
            }
            return std::log(a);
        case Func::Sqrt:
            if (a < 0.0) {
                throw EvalError("square root of negative value", printed(n));
            }
            return std::sqrt(a);
        case Func::Min: return std::min(a, eval_node(*n.args[1], p));
        case Func::Max: return std::max(a, eval_node(*n.args[1], p));
        }
        return 0.0;
    }
    }
    return 0.0;
}

}  // namespace

std::size_t function_arity(Func f)
{
    return (f == Func::Min || f == Func::Max) ? 2 : 1;
}

const char* function_name(Func f)
{
    for (const auto& [name, g] : kFunctions) {
        if (g == f) return name;
    }
    return "?";
}

NodePtr make_constant(double v)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

NodePtr make_variable(Var v)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Variable;
    n->var = v;
    return n;
}

NodePtr make_unary(NodeKind kind, NodePtr a)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args.push_back(std::move(a));
    return n;
}

NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args.push_back(std::move(a));
    n->args.push_back(std::move(b));
    return n;
}

NodePtr make_call(Func f, std::vector<NodePtr> args)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Call;
    n->func = f;
    n->args = std::move(args);
    return n;
}

Expression::Expression() : Expression(make_constant(0.0)) {}

Expression::Expression(NodePtr root) : root_(std::move(root)), var_mask_(collect_vars(*root_)) {}

double Expression::operator()(const Point& p) const
{
    return eval_node(*root_, p);
}

bool Expression::depends_on(Var v) const
{
    return (var_mask_ & var_bit(v)) != 0;
}

bool Expression::is_constant() const
{
    return var_mask_ == 0;
}

std::string Expression::to_string() const
{
    return printed(*root_);
}

Expression parse_expression(std::string_view source)
{
    return Expression(Parser(source).parse());
}

double evaluate(const Expression& e, const Point& p)
{
    return e(p);
}

double partial_u(const Expression& e, const Point& at, double h)
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("partial_u: step must be positive");
    }
    Point lo = at;
    Point hi = at;
    lo.u -= h;
    hi.u += h;
    return (e(hi) - e(lo)) / (2.0 * h);
}

bool structurally_equal(const Node& a, const Node& b)
{
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    switch (a.kind) {
    case NodeKind::Constant:
        if (a.value != b.value) return false;
        break;
    case NodeKind::Variable:
        if (a.var != b.var) return false;
        break;
    case NodeKind::Call:
        if (a.func != b.func) return false;
        break;
    default: break;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (!structurally_equal(*a.args[i], *b.args[i])) return false;
    }
    return true;
}

}  // namespace qvi
