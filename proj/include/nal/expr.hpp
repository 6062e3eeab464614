#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace nal {

using cplx = std::complex<double>;

enum class Op : std::uint8_t { Const, Var, Add, Mul, Pow, Exp, Log, Sqrt, Sin, Cos, Series };

// Entire functions of u = |xi|^2 used by exponential charts on Rodrigues-type algebras.
enum class SeriesFn : std::uint8_t {
    SinOverTheta,   // sin(t)/t
    OneMinusCos,    // (1 - cos t)/t^2
    ThetaMinusSin,  // (t - sin t)/t^3
    BernoulliEven,  // (1 - (t/2)cot(t/2))/t^2
    CosTheta        // cos t
};

struct Node;

class Expr {
public:
    Expr();
    Expr(double v);
    Expr(cplx v);
    explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

    static Expr var(int index);
    static Expr constant(cplx v) { return Expr(v); }

    const Node& node() const { return *n_; }
    const std::shared_ptr<const Node>& ptr() const { return n_; }

    bool is_const() const;
    bool is_zero() const;
    bool is_one() const;
    cplx const_value() const;
    std::size_t hash() const;

    cplx eval(const double* x) const;
    Expr diff(int var) const;
    std::string str(const std::vector<std::string>& names = {}) const;
    int max_var() const;

private:
    std::shared_ptr<const Node> n_;
};

struct Node {
    Op op;
    cplx value{0.0, 0.0};
    int index = 0;      // variable index, integer power, or series derivative order
    SeriesFn fn = SeriesFn::SinOverTheta;
    std::vector<Expr> args;
    std::size_t hash = 0;
};

bool structurally_equal(const Expr& a, const Expr& b);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& a, int n);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr series(SeriesFn fn, int order, const Expr& u);
Expr sum(const std::vector<Expr>& terms);

double series_eval(SeriesFn fn, int order, double u);

// Flattened evaluator for a batch of expressions with shared subexpressions.
class Program {
public:
    Program() = default;
    explicit Program(const std::vector<Expr>& outputs);

    void run(const double* x, std::vector<cplx>& regs) const;
    void eval(const double* x, cplx* out, std::vector<cplx>& regs) const;
    std::size_t size() const { return code_.size(); }
    std::size_t n_outputs() const { return outputs_.size(); }

private:
    struct Instr {
        Op op;
        int index;
        SeriesFn fn;
        cplx value;
        std::vector<int> args;
    };
    std::vector<Instr> code_;
    std::vector<int> outputs_;
};

}  // namespace nal
