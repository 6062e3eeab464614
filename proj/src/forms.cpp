#include "nal/forms.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

#include "nal/errors.hpp"

namespace nal {

EquivariantForm EquivariantForm::scalar(const std::string& chart, int n, int g, const Expr& f) {
    EquivariantForm r(chart, n, g);
    r.add_term(0, PhiMonomial(g, 0), f);
    return r;
}

EquivariantForm EquivariantForm::dx(const std::string& chart, int n, int g, int k) {
    EquivariantForm r(chart, n, g);
    r.add_term(Mask(1) << k, PhiMonomial(g, 0), Expr(1.0));
    return r;
}

EquivariantForm EquivariantForm::phi(const std::string& chart, int n, int g, int a) {
    EquivariantForm r(chart, n, g);
    PhiMonomial m(g, 0);
    m[a] = 1;
    r.add_term(0, m, Expr(1.0));
    return r;
}

void EquivariantForm::add_term(Mask mask, const PhiMonomial& mono, const Expr& c) {
    if (c.is_zero()) return;
    if (static_cast<int>(mono.size()) != phi_dim_) throw InputError("phi monomial length differs from algebra dim");
    FormKey key{mask, mono};
    auto it = terms_.find(key);
    if (it == terms_.end()) {
        terms_.emplace(std::move(key), c);
        return;
    }
    it->second = it->second + c;
    if (it->second.is_zero()) terms_.erase(it);
}

std::vector<FormTerm> EquivariantForm::term_list() const {
    std::vector<FormTerm> out;
    for (const auto& [k, c] : terms_) out.push_back({k.mask, k.mono, c});
    return out;
}

int EquivariantForm::max_form_degree() const {
    int d = -1;
    for (const auto& [k, c] : terms_) d = std::max(d, popcount(k.mask));
    return d;
}

int EquivariantForm::min_form_degree() const {
    int d = 1 << 20;
    for (const auto& [k, c] : terms_) d = std::min(d, popcount(k.mask));
    return terms_.empty() ? -1 : d;
}

int EquivariantForm::max_phi_degree() const {
    int d = 0;
    for (const auto& [k, c] : terms_) d = std::max(d, monomial_degree(k.mono));
    return d;
}

int EquivariantForm::grade() const {
    int g = -2;
    for (const auto& [k, c] : terms_) {
        int t = popcount(k.mask) + 2 * monomial_degree(k.mono);
        if (g == -2)
            g = t;
        else if (g != t)
            return -1;
    }
    return g == -2 ? 0 : g;
}

bool EquivariantForm::is_scalar_field() const {
    for (const auto& [k, c] : terms_)
        if (k.mask != 0 || monomial_degree(k.mono) != 0) return false;
    return true;
}

Expr EquivariantForm::scalar_field() const {
    if (!is_scalar_field()) throw InputError("expression is not a scalar field");
    if (terms_.empty()) return Expr(0.0);
    return terms_.begin()->second;
}

EquivariantForm EquivariantForm::operator+(const EquivariantForm& o) const {
    if (o.chart_id_ != chart_id_) throw InputError("chart mismatch in form sum");
    EquivariantForm r(*this);
    for (const auto& [k, c] : o.terms_) r.add_term(k.mask, k.mono, c);
    return r;
}

EquivariantForm EquivariantForm::operator-(const EquivariantForm& o) const { return *this + o * cplx(-1.0); }

EquivariantForm EquivariantForm::operator*(const Expr& s) const {
    EquivariantForm r(chart_id_, ambient_dim_, phi_dim_);
    for (const auto& [k, c] : terms_) r.add_term(k.mask, k.mono, c * s);
    return r;
}

EquivariantForm EquivariantForm::operator*(cplx s) const { return *this * Expr(s); }

EquivariantForm EquivariantForm::form_part(int degree) const {
    EquivariantForm r(chart_id_, ambient_dim_, phi_dim_);
    for (const auto& [k, c] : terms_)
        if (popcount(k.mask) == degree) r.add_term(k.mask, k.mono, c);
    return r;
}

Dense EquivariantForm::evaluate(const double* x, const CVec& phi) const {
    Dense out(std::size_t(1) << ambient_dim_, 0.0);
    for (const auto& [k, c] : terms_) {
        cplx v = c.eval(x);
        for (int a = 0; a < phi_dim_; ++a)
            for (int e = 0; e < k.mono[a]; ++e) v *= phi(a);
        out[k.mask] += v;
    }
    return out;
}

std::string EquivariantForm::str(const Chart& chart, const std::vector<std::string>& phi_names) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << "(" << c.str(chart.coords) << ")";
        for (int a = 0; a < phi_dim_; ++a)
            for (int e = 0; e < k.mono[a]; ++e) os << "*" << phi_names[a];
        for (int i = 0; i < ambient_dim_; ++i)
            if (k.mask & (Mask(1) << i)) os << "*d" << chart.coords[i];
    }
    return os.str();
}

Vec VectorFieldFamily::at(const double* x, const Vec& phi) const {
    Vec v = Vec::Zero(ambient_dim);
    for (int a = 0; a < phi_dim(); ++a) {
        if (phi(a) == 0.0) continue;
        for (int k = 0; k < ambient_dim; ++k) v(k) += phi(a) * comps[a][k].eval(x).real();
    }
    return v;
}

Mat VectorFieldFamily::matrix_at(const double* x) const {
    Mat m(ambient_dim, phi_dim());
    for (int a = 0; a < phi_dim(); ++a)
        for (int k = 0; k < ambient_dim; ++k) m(k, a) = comps[a][k].eval(x).real();
    return m;
}

EquivariantForm wedge(const EquivariantForm& a, const EquivariantForm& b) {
    if (a.chart_id() != b.chart_id()) throw InputError("wedge: chart mismatch");
    EquivariantForm r(a.chart_id(), a.ambient_dim(), a.phi_dim());
    for (const auto& [ka, ca] : a.terms())
        for (const auto& [kb, cb] : b.terms()) {
            int s = wedge_sign(ka.mask, kb.mask);
            if (s == 0) continue;
            r.add_term(ka.mask | kb.mask, monomial_product(ka.mono, kb.mono), Expr(static_cast<double>(s)) * ca * cb);
        }
    return r;
}

EquivariantForm exterior_d(const EquivariantForm& a) {
    EquivariantForm r(a.chart_id(), a.ambient_dim(), a.phi_dim());
    for (const auto& [k, c] : a.terms())
        for (int i = 0; i < a.ambient_dim(); ++i) {
            Mask bit = Mask(1) << i;
            if (k.mask & bit) continue;
            Expr dc = c.diff(i);
            if (dc.is_zero()) continue;
            r.add_term(k.mask | bit, k.mono, Expr(static_cast<double>(wedge_sign(bit, k.mask))) * dc);
        }
    return r;
}

EquivariantForm contract_field(const EquivariantForm& a, const std::vector<Expr>& field) {
    EquivariantForm r(a.chart_id(), a.ambient_dim(), a.phi_dim());
    for (const auto& [k, c] : a.terms())
        for (int i = 0; i < a.ambient_dim(); ++i) {
            Mask bit = Mask(1) << i;
            if (!(k.mask & bit) || field[i].is_zero()) continue;
            r.add_term(k.mask & ~bit, k.mono, Expr(static_cast<double>(contraction_sign(k.mask, i))) * field[i] * c);
        }
    return r;
}

EquivariantForm contract(const EquivariantForm& a, const VectorFieldFamily& v) {
    if (a.chart_id() != v.chart_id) throw InputError("contract: chart mismatch");
    EquivariantForm r(a.chart_id(), a.ambient_dim(), a.phi_dim());
    for (int g = 0; g < v.phi_dim(); ++g) {
        EquivariantForm part = contract_field(a, v.comps[g]);
        for (const auto& [k, c] : part.terms()) {
            PhiMonomial m(k.mono);
            m[g] += 1;
            r.add_term(k.mask, m, c);
        }
    }
    return r;
}

EquivariantForm equivariant_D(const EquivariantForm& a, const VectorFieldFamily& v) {
    return exterior_d(a) + contract(a, v) * cplx(0.0, 1.0);
}

EquivariantForm exp_form_part(const EquivariantForm& a) {
    for (const auto& [k, c] : a.terms())
        if (k.mask == 0) throw InputError("exp_form_part: exponent has a form-degree-0 term");
    EquivariantForm result = EquivariantForm::scalar(a.chart_id(), a.ambient_dim(), a.phi_dim(), Expr(1.0));
    EquivariantForm power = result;
    for (int k = 1; k <= a.ambient_dim(); ++k) {
        power = wedge(power, a) * cplx(1.0 / k);
        if (power.is_zero()) break;
        result = result + power;
    }
    return result;
}

EquivariantForm lie_derivative(const EquivariantForm& a, const std::vector<Expr>& field) {
    return exterior_d(contract_field(a, field)) + contract_field(exterior_d(a), field);
}

double pointwise_norm(const EquivariantForm& a, const double* x, const CVec& phi) {
    Dense d = a.evaluate(x, phi);
    double s = 0.0;
    for (const auto& v : d) s += std::norm(v);
    return std::sqrt(s);
}

namespace {

// Directional derivative in phi along eta, evaluated at (x, phi).
Dense phi_directional(const EquivariantForm& a, const double* x, const CVec& phi, const Vec& eta) {
    Dense out(std::size_t(1) << a.ambient_dim(), 0.0);
    int g = a.phi_dim();
    for (const auto& [k, c] : a.terms()) {
        cplx cv = c.eval(x);
        for (int b = 0; b < g; ++b) {
            if (k.mono[b] == 0 || eta(b) == 0.0) continue;
            cplx v = cv * static_cast<double>(k.mono[b]) * eta(b);
            for (int q = 0; q < g; ++q)
                for (int e = 0; e < k.mono[q] - (q == b ? 1 : 0); ++e) v *= phi(q);
            out[k.mask] += v;
        }
    }
    return out;
}

}  // namespace

double invariance_residual(const EquivariantForm& a, const VectorFieldFamily& v, const LieAlgebraSpec& g,
                           const std::vector<std::vector<double>>& points, int n_phi, unsigned seed) {
    int n = a.ambient_dim();
    // Convention check: flows of a left action give [V_a, V_b] = -V_[a,b].
    double sign = 1.0;
    if (!g.abelian() && !points.empty()) {
        const double* x = points.front().data();
        double plus = 0.0, minus = 0.0;
        for (int p = 0; p < g.dim; ++p)
            for (int q = 0; q < g.dim; ++q) {
                Vec lie = Vec::Zero(n);
                for (int k = 0; k < n; ++k) {
                    double s = 0.0;
                    for (int l = 0; l < n; ++l) {
                        s += v.comps[p][l].eval(x).real() * v.comps[q][k].diff(l).eval(x).real();
                        s -= v.comps[q][l].eval(x).real() * v.comps[p][k].diff(l).eval(x).real();
                    }
                    lie(k) = s;
                }
                Vec br = bracket(g, Vec::Unit(g.dim, p), Vec::Unit(g.dim, q));
                Vec vb = v.at(x, br);
                plus += (lie - vb).squaredNorm();
                minus += (lie + vb).squaredNorm();
            }
        sign = (minus <= plus) ? 1.0 : -1.0;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    double worst = 0.0;
    std::vector<EquivariantForm> lies;
    for (int b = 0; b < g.dim; ++b) lies.push_back(lie_derivative(a, v.comps[b]));
    for (const auto& pt : points) {
        for (int s = 0; s < n_phi; ++s) {
            CVec phi(g.dim);
            Vec phir(g.dim);
            for (int q = 0; q < g.dim; ++q) {
                phir(q) = nd(rng);
                phi(q) = phir(q);
            }
            for (int b = 0; b < g.dim; ++b) {
                Dense l = lies[b].evaluate(pt.data(), phi);
                Vec eta = bracket(g, Vec::Unit(g.dim, b), phir);
                Dense d = phi_directional(a, pt.data(), phi, eta);
                double r = 0.0;
                for (std::size_t k = 0; k < l.size(); ++k) r += std::norm(l[k] + sign * d[k]);
                worst = std::max(worst, std::sqrt(r));
            }
        }
    }
    return worst;
}

namespace {

class Parser {
public:
    Parser(const std::string& text, const Chart& chart, const LieAlgebraSpec& g)
        : s_(text), chart_(chart), g_(g), n_(chart.dim()), gd_(g.dim) {}

    EquivariantForm parse() {
        EquivariantForm r = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return r;
    }

private:
    const std::string& s_;
    const Chart& chart_;
    const LieAlgebraSpec& g_;
    int n_, gd_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError("parse error at offset " + std::to_string(pos_) + ": " + msg + " in '" + s_ + "'");
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    EquivariantForm scal(const Expr& e) const { return EquivariantForm::scalar(chart_.id, n_, gd_, e); }

    EquivariantForm expr() {
        skip();
        EquivariantForm r = accept('-') ? term() * cplx(-1.0) : (accept('+'), term());
        while (true) {
            if (accept('+'))
                r = r + term();
            else if (accept('-'))
                r = r - term();
            else
                return r;
        }
    }
    EquivariantForm term() {
        EquivariantForm r = power();
        while (true) {
            if (accept('*')) {
                r = wedge(r, power());
            } else if (accept('/')) {
                EquivariantForm d = power();
                if (!d.is_scalar_field()) fail("division by a non-scalar");
                r = r * (Expr(1.0) / d.scalar_field());
            } else {
                return r;
            }
        }
    }
    EquivariantForm power() {
        EquivariantForm b = unary();
        if (accept('^')) {
            skip();
            bool neg = accept('-');
            skip();
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            if (start == pos_) fail("integer exponent expected");
            int e = std::stoi(s_.substr(start, pos_ - start));
            if (neg) {
                if (!b.is_scalar_field()) fail("negative power of a non-scalar");
                return scal(pow(b.scalar_field(), -e));
            }
            if (b.is_scalar_field()) return scal(pow(b.scalar_field(), e));
            EquivariantForm r = scal(Expr(1.0));
            for (int k = 0; k < e; ++k) r = wedge(r, b);
            return r;
        }
        return b;
    }
    EquivariantForm unary() {
        if (accept('-')) return unary() * cplx(-1.0);
        if (accept('+')) return unary();
        return atom();
    }
    EquivariantForm atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            EquivariantForm r = expr();
            if (!accept(')')) fail("missing ')'");
            return r;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = std::stod(s_.substr(pos_), &used);
            pos_ += used;
            return scal(Expr(v));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            std::string id = s_.substr(start, pos_ - start);
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                ++pos_;
                EquivariantForm arg = expr();
                if (!accept(')')) fail("missing ')' after function argument");
                if (!arg.is_scalar_field()) fail("function argument must be a scalar field");
                Expr a = arg.scalar_field();
                if (id == "exp") return scal(exp(a));
                if (id == "log") return scal(log(a));
                if (id == "sqrt") return scal(sqrt(a));
                if (id == "sin") return scal(sin(a));
                if (id == "cos") return scal(cos(a));
                fail("unknown function " + id);
            }
            return identifier(id);
        }
        fail(std::string("unexpected character '") + c + "'");
    }
    EquivariantForm identifier(const std::string& id) {
        if (id == "i") return scal(Expr(cplx(0.0, 1.0)));
        if (id == "pi") return scal(Expr(M_PI));
        for (int k = 0; k < n_; ++k)
            if (chart_.coords[k] == id) return scal(Expr::var(k));
        if (id.size() > 1 && id[0] == 'd') {
            std::string rest = id.substr(1);
            for (int k = 0; k < n_; ++k)
                if (chart_.coords[k] == rest) return EquivariantForm::dx(chart_.id, n_, gd_, k);
        }
        if (id.rfind("phi", 0) == 0) {
            std::string rest = id.substr(3);
            if (!rest.empty() && rest[0] == '_') {
                std::string label = rest.substr(1);
                for (int a = 0; a < gd_; ++a)
                    if (g_.basis_labels[a] == label) return EquivariantForm::phi(chart_.id, n_, gd_, a);
            } else if (rest.empty() && gd_ == 1) {
                return EquivariantForm::phi(chart_.id, n_, gd_, 0);
            } else if (!rest.empty() && std::all_of(rest.begin(), rest.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
                int a = std::stoi(rest) - 1;
                if (a >= 0 && a < gd_) return EquivariantForm::phi(chart_.id, n_, gd_, a);
            }
        }
        fail("unknown identifier " + id);
    }
};

}  // namespace

EquivariantForm parse_form(const std::string& text, const Chart& chart, const LieAlgebraSpec& g) {
    return Parser(text, chart, g).parse();
}

Expr parse_scalar(const std::string& text, const Chart& chart) {
    LieAlgebraSpec dummy;
    dummy.dim = 0;
    EquivariantForm f = Parser(text, chart, dummy).parse();
    if (!f.is_scalar_field()) throw InputError("expected a scalar expression: " + text);
    return f.scalar_field();
}

}  // namespace nal
