#include "nal/expr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <boost/math/special_functions/zeta.hpp>

namespace nal {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

std::size_t hash_double(double d) {
    if (d == 0.0) d = 0.0;  // fold -0
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    return std::hash<std::uint64_t>{}(bits);
}

Expr make(Op op, cplx value, int index, SeriesFn fn, std::vector<Expr> args) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    n->index = index;
    n->fn = fn;
    n->args = std::move(args);
    std::size_t h = mix(0x51ed27, static_cast<std::size_t>(op));
    h = mix(h, hash_double(value.real()));
    h = mix(h, hash_double(value.imag()));
    h = mix(h, static_cast<std::size_t>(index + 1000003));
    h = mix(h, static_cast<std::size_t>(fn));
    for (const auto& a : n->args) h = mix(h, a.hash());
    n->hash = h;
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

cplx ipow(cplx b, int n) {
    bool inv = n < 0;
    unsigned m = static_cast<unsigned>(inv ? -n : n);
    cplx r(1.0, 0.0);
    while (m) {
        if (m & 1u) r *= b;
        b *= b;
        m >>= 1u;
    }
    return inv ? cplx(1.0) / r : r;
}

// Split c*rest; rest is null Expr() when the term is a bare constant.
std::pair<cplx, std::shared_ptr<const Node>> split_coeff(const Expr& e) {
    const Node& n = e.node();
    if (n.op == Op::Const) return {n.value, nullptr};
    if (n.op == Op::Mul && n.args.front().is_const()) {
        cplx c = n.args.front().const_value();
        if (n.args.size() == 2) return {c, n.args[1].ptr()};
        std::vector<Expr> rest(n.args.begin() + 1, n.args.end());
        return {c, make(Op::Mul, 0.0, 0, SeriesFn::SinOverTheta, std::move(rest)).ptr()};
    }
    return {cplx(1.0), e.ptr()};
}

Expr build_add(std::vector<Expr> terms) {
    std::vector<Expr> flat;
    flat.reserve(terms.size());
    for (auto& t : terms) {
        if (t.node().op == Op::Add)
            for (const auto& a : t.node().args) flat.push_back(a);
        else
            flat.push_back(t);
    }
    cplx c0(0.0);
    struct Group {
        std::shared_ptr<const Node> rest;
        cplx coeff;
    };
    std::vector<Group> groups;
    std::unordered_map<std::size_t, std::vector<std::size_t>> index;
    for (const auto& t : flat) {
        auto [c, rest] = split_coeff(t);
        if (!rest) {
            c0 += c;
            continue;
        }
        Expr r(rest);
        auto& bucket = index[r.hash()];
        bool found = false;
        for (auto gi : bucket) {
            if (structurally_equal(Expr(groups[gi].rest), r)) {
                groups[gi].coeff += c;
                found = true;
                break;
            }
        }
        if (!found) {
            bucket.push_back(groups.size());
            groups.push_back({rest, c});
        }
    }
    std::stable_sort(groups.begin(), groups.end(),
                     [](const Group& a, const Group& b) { return a.rest->hash < b.rest->hash; });
    std::vector<Expr> out;
    for (auto& g : groups) {
        if (g.coeff == cplx(0.0)) continue;
        if (g.coeff == cplx(1.0))
            out.push_back(Expr(g.rest));
        else
            out.push_back(Expr(g.coeff) * Expr(g.rest));
    }
    if (c0 != cplx(0.0)) out.insert(out.begin(), Expr(c0));
    if (out.empty()) return Expr(0.0);
    if (out.size() == 1) return out.front();
    return make(Op::Add, 0.0, 0, SeriesFn::SinOverTheta, std::move(out));
}

Expr build_mul(std::vector<Expr> factors) {
    cplx c(1.0);
    struct Factor {
        Expr base;
        int power;
    };
    std::vector<Factor> fs;
    std::unordered_map<std::size_t, std::vector<std::size_t>> index;
    std::function<void(const Expr&, int)> push = [&](const Expr& f, int p) {
        const Node& n = f.node();
        if (n.op == Op::Const) {
            c *= ipow(n.value, p);
            return;
        }
        if (n.op == Op::Mul) {
            for (const auto& a : n.args) push(a, p);
            return;
        }
        Expr base = f;
        int pw = p;
        if (n.op == Op::Pow) {
            base = n.args.front();
            pw = p * n.index;
        }
        auto& bucket = index[base.hash()];
        for (auto fi : bucket) {
            if (structurally_equal(fs[fi].base, base)) {
                fs[fi].power += pw;
                return;
            }
        }
        bucket.push_back(fs.size());
        fs.push_back({base, pw});
    };
    for (const auto& f : factors) push(f, 1);
    if (c == cplx(0.0)) return Expr(0.0);
    std::stable_sort(fs.begin(), fs.end(),
                     [](const Factor& a, const Factor& b) { return a.base.hash() < b.base.hash(); });
    std::vector<Expr> out;
    for (auto& f : fs) {
        if (f.power == 0) continue;
        if (f.power == 1)
            out.push_back(f.base);
        else
            out.push_back(make(Op::Pow, 0.0, f.power, SeriesFn::SinOverTheta, {f.base}));
    }
    if (out.empty()) return Expr(c);
    if (c != cplx(1.0)) out.insert(out.begin(), Expr(c));
    if (out.size() == 1) return out.front();
    return make(Op::Mul, 0.0, 0, SeriesFn::SinOverTheta, std::move(out));
}

Expr unary(Op op, const Expr& a) {
    if (a.is_const()) {
        cplx v = a.const_value();
        switch (op) {
            case Op::Exp: return Expr(std::exp(v));
            case Op::Log: return Expr(std::log(v));
            case Op::Sqrt: return Expr(std::sqrt(v));
            case Op::Sin: return Expr(std::sin(v));
            case Op::Cos: return Expr(std::cos(v));
            default: break;
        }
    }
    return make(op, 0.0, 0, SeriesFn::SinOverTheta, {a});
}

constexpr int kSeriesTerms = 90;

const std::array<double, kSeriesTerms>& series_coeffs(SeriesFn fn) {
    static const auto table = [] {
        std::array<std::array<double, kSeriesTerms>, 5> t{};
        // inverse factorials 1/m! for m < 2*kSeriesTerms + 4
        std::vector<double> invf(2 * kSeriesTerms + 4);
        invf[0] = 1.0;
        for (std::size_t m = 1; m < invf.size(); ++m) invf[m] = invf[m - 1] / static_cast<double>(m);
        const double two_pi = 2.0 * M_PI;
        for (int n = 0; n < kSeriesTerms; ++n) {
            double sgn = (n % 2 == 0) ? 1.0 : -1.0;
            t[0][n] = sgn * invf[2 * n + 1];
            t[1][n] = sgn * invf[2 * n + 2];
            t[2][n] = sgn * invf[2 * n + 3];
            t[4][n] = sgn * invf[2 * n];
            // B_{2k}/(2k)! (-u)^{k-1} = 2 zeta(2k) u^{k-1} / (2 pi)^{2k}, k = n + 1
            int k = n + 1;
            t[3][n] = 2.0 * boost::math::zeta(static_cast<double>(2 * k)) * std::pow(two_pi, -2.0 * k);
        }
        return t;
    }();
    return table[static_cast<int>(fn)];
}

}  // namespace

double series_eval(SeriesFn fn, int order, double u) {
    const auto& c = series_coeffs(fn);
    double sum = 0.0;
    double upow = 1.0;
    for (int n = 0; n + order < kSeriesTerms; ++n) {
        double fall = 1.0;
        for (int j = 1; j <= order; ++j) fall *= static_cast<double>(n + j);
        double term = c[n + order] * fall * upow;
        sum += term;
        if (n > 4 && std::abs(term) < 1e-19 * std::max(1.0, std::abs(sum))) break;
        upow *= u;
    }
    return sum;
}

Expr::Expr() : Expr(0.0) {}
Expr::Expr(double v) : Expr(cplx(v, 0.0)) {}
Expr::Expr(cplx v) : n_(make(Op::Const, v, 0, SeriesFn::SinOverTheta, {}).ptr()) {}

Expr Expr::var(int index) { return make(Op::Var, 0.0, index, SeriesFn::SinOverTheta, {}); }

bool Expr::is_const() const { return n_->op == Op::Const; }
bool Expr::is_zero() const { return is_const() && n_->value == cplx(0.0); }
bool Expr::is_one() const { return is_const() && n_->value == cplx(1.0); }
cplx Expr::const_value() const {
    if (!is_const()) throw std::logic_error("const_value on non-constant expression");
    return n_->value;
}
std::size_t Expr::hash() const { return n_->hash; }

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.ptr() == b.ptr()) return true;
    const Node& x = a.node();
    const Node& y = b.node();
    if (x.hash != y.hash || x.op != y.op || x.index != y.index || x.fn != y.fn || x.value != y.value ||
        x.args.size() != y.args.size())
        return false;
    for (std::size_t i = 0; i < x.args.size(); ++i)
        if (!structurally_equal(x.args[i], y.args[i])) return false;
    return true;
}

cplx Expr::eval(const double* x) const {
    const Node& n = *n_;
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return cplx(x[n.index], 0.0);
        case Op::Add: {
            cplx s(0.0);
            for (const auto& a : n.args) s += a.eval(x);
            return s;
        }
        case Op::Mul: {
            cplx p(1.0);
            for (const auto& a : n.args) p *= a.eval(x);
            return p;
        }
        case Op::Pow: return ipow(n.args[0].eval(x), n.index);
        case Op::Exp: return std::exp(n.args[0].eval(x));
        case Op::Log: return std::log(n.args[0].eval(x));
        case Op::Sqrt: return std::sqrt(n.args[0].eval(x));
        case Op::Sin: return std::sin(n.args[0].eval(x));
        case Op::Cos: return std::cos(n.args[0].eval(x));
        case Op::Series: return series_eval(n.fn, n.index, n.args[0].eval(x).real());
    }
    return 0.0;
}

Expr Expr::diff(int v) const {
    const Node& n = *n_;
    switch (n.op) {
        case Op::Const: return Expr(0.0);
        case Op::Var: return Expr(n.index == v ? 1.0 : 0.0);
        case Op::Add: {
            std::vector<Expr> d;
            for (const auto& a : n.args) d.push_back(a.diff(v));
            return build_add(std::move(d));
        }
        case Op::Mul: {
            std::vector<Expr> terms;
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                Expr di = n.args[i].diff(v);
                if (di.is_zero()) continue;
                std::vector<Expr> f;
                for (std::size_t j = 0; j < n.args.size(); ++j) f.push_back(j == i ? di : n.args[j]);
                terms.push_back(build_mul(std::move(f)));
            }
            return build_add(std::move(terms));
        }
        case Op::Pow: {
            Expr da = n.args[0].diff(v);
            if (da.is_zero()) return Expr(0.0);
            return Expr(static_cast<double>(n.index)) * pow(n.args[0], n.index - 1) * da;
        }
        case Op::Exp: return *this * n.args[0].diff(v);
        case Op::Log: return n.args[0].diff(v) * pow(n.args[0], -1);
        case Op::Sqrt: return Expr(0.5) * n.args[0].diff(v) * pow(*this, -1);
        case Op::Sin: return cos(n.args[0]) * n.args[0].diff(v);
        case Op::Cos: return -(sin(n.args[0]) * n.args[0].diff(v));
        case Op::Series: return series(n.fn, n.index + 1, n.args[0]) * n.args[0].diff(v);
    }
    return Expr(0.0);
}

int Expr::max_var() const {
    const Node& n = *n_;
    int m = (n.op == Op::Var) ? n.index : -1;
    for (const auto& a : n.args) m = std::max(m, a.max_var());
    return m;
}

std::string Expr::str(const std::vector<std::string>& names) const {
    const Node& n = *n_;
    std::ostringstream os;
    os.precision(17);
    auto wrap = [&](const Expr& e) {
        std::string s = e.str(names);
        Op o = e.node().op;
        if (o == Op::Add || (o == Op::Const && e.const_value().imag() != 0.0) ||
            (o == Op::Const && e.const_value().real() < 0))
            return "(" + s + ")";
        return s;
    };
    switch (n.op) {
        case Op::Const:
            if (n.value.imag() == 0.0)
                os << n.value.real();
            else if (n.value.real() == 0.0)
                os << n.value.imag() << "*i";
            else
                os << n.value.real() << (n.value.imag() < 0 ? "-" : "+") << std::abs(n.value.imag()) << "*i";
            break;
        case Op::Var:
            if (n.index < static_cast<int>(names.size()))
                os << names[n.index];
            else
                os << "v" << n.index;
            break;
        case Op::Add:
            for (std::size_t i = 0; i < n.args.size(); ++i) os << (i ? " + " : "") << n.args[i].str(names);
            break;
        case Op::Mul:
            for (std::size_t i = 0; i < n.args.size(); ++i) os << (i ? "*" : "") << wrap(n.args[i]);
            break;
        case Op::Pow: {
            Op o = n.args[0].node().op;
            std::string b = n.args[0].str(names);
            if (o != Op::Var && o != Op::Exp && o != Op::Log && o != Op::Sqrt && o != Op::Sin && o != Op::Cos)
                b = "(" + b + ")";
            os << b << "^";
            if (n.index < 0)
                os << "(" << n.index << ")";
            else
                os << n.index;
            break;
        }
        case Op::Exp: os << "exp(" << n.args[0].str(names) << ")"; break;
        case Op::Log: os << "log(" << n.args[0].str(names) << ")"; break;
        case Op::Sqrt: os << "sqrt(" << n.args[0].str(names) << ")"; break;
        case Op::Sin: os << "sin(" << n.args[0].str(names) << ")"; break;
        case Op::Cos: os << "cos(" << n.args[0].str(names) << ")"; break;
        case Op::Series:
            os << "series" << static_cast<int>(n.fn) << "_" << n.index << "(" << n.args[0].str(names) << ")";
            break;
    }
    return os.str();
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return build_add({a, b});
}
Expr operator-(const Expr& a) { return build_mul({Expr(-1.0), a}); }
Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero()) return a;
    return build_add({a, -b});
}
Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr(0.0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    return build_mul({a, b});
}
Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_zero()) throw std::domain_error("division by the zero expression");
    if (b.is_const()) return a * Expr(cplx(1.0) / b.const_value());
    return a * pow(b, -1);
}
Expr pow(const Expr& a, int n) {
    if (n == 0) return Expr(1.0);
    if (n == 1) return a;
    if (a.is_const()) return Expr(ipow(a.const_value(), n));
    return build_mul({make(Op::Pow, 0.0, n, SeriesFn::SinOverTheta, {a})});
}
Expr exp(const Expr& a) { return unary(Op::Exp, a); }
Expr log(const Expr& a) { return unary(Op::Log, a); }
Expr sqrt(const Expr& a) { return unary(Op::Sqrt, a); }
Expr sin(const Expr& a) { return unary(Op::Sin, a); }
Expr cos(const Expr& a) { return unary(Op::Cos, a); }
Expr series(SeriesFn fn, int order, const Expr& u) {
    if (u.is_const()) return Expr(series_eval(fn, order, u.const_value().real()));
    return make(Op::Series, 0.0, order, fn, {u});
}
Expr sum(const std::vector<Expr>& terms) { return build_add(terms); }

Program::Program(const std::vector<Expr>& outputs) {
    std::unordered_map<const Node*, int> by_ptr;
    std::unordered_map<std::size_t, std::vector<std::pair<Expr, int>>> by_hash;
    std::function<int(const Expr&)> emit = [&](const Expr& e) -> int {
        auto it = by_ptr.find(e.ptr().get());
        if (it != by_ptr.end()) return it->second;
        auto& bucket = by_hash[e.hash()];
        for (auto& [other, reg] : bucket) {
            if (structurally_equal(other, e)) {
                by_ptr[e.ptr().get()] = reg;
                return reg;
            }
        }
        const Node& n = e.node();
        Instr ins{n.op, n.index, n.fn, n.value, {}};
        for (const auto& a : n.args) ins.args.push_back(emit(a));
        int reg = static_cast<int>(code_.size());
        code_.push_back(std::move(ins));
        by_ptr[e.ptr().get()] = reg;
        bucket.emplace_back(e, reg);
        return reg;
    };
    for (const auto& o : outputs) outputs_.push_back(emit(o));
}

void Program::run(const double* x, std::vector<cplx>& r) const {
    r.resize(code_.size());
    for (std::size_t k = 0; k < code_.size(); ++k) {
        const Instr& in = code_[k];
        switch (in.op) {
            case Op::Const: r[k] = in.value; break;
            case Op::Var: r[k] = cplx(x[in.index], 0.0); break;
            case Op::Add: {
                cplx s(0.0);
                for (int a : in.args) s += r[a];
                r[k] = s;
                break;
            }
            case Op::Mul: {
                cplx p(1.0);
                for (int a : in.args) p *= r[a];
                r[k] = p;
                break;
            }
            case Op::Pow: r[k] = ipow(r[in.args[0]], in.index); break;
            case Op::Exp: r[k] = std::exp(r[in.args[0]]); break;
            case Op::Log: r[k] = std::log(r[in.args[0]]); break;
            case Op::Sqrt: r[k] = std::sqrt(r[in.args[0]]); break;
            case Op::Sin: r[k] = std::sin(r[in.args[0]]); break;
            case Op::Cos: r[k] = std::cos(r[in.args[0]]); break;
            case Op::Series: r[k] = series_eval(in.fn, in.index, r[in.args[0]].real()); break;
        }
    }
}

void Program::eval(const double* x, cplx* out, std::vector<cplx>& regs) const {
    run(x, regs);
    for (std::size_t i = 0; i < outputs_.size(); ++i) out[i] = regs[outputs_[i]];
}

}  // namespace nal
