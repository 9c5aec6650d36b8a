#include "steklov/expr.hpp"

#include <cmath>
#include <sstream>

namespace steklov {

namespace {

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

// d/dx of x^n, with the n = 0 case handled without negative powers.
double dpow(double x, int n) { return n == 0 ? 0.0 : n * ipow(x, n - 1); }

double d2pow(double x, int n) { return n <= 1 ? 0.0 : double(n) * (n - 1) * ipow(x, n - 2); }

}  // namespace

ScalarExpr ScalarExpr::constant(double c) { return monomial(c, 0, 0); }

ScalarExpr ScalarExpr::monomial(double c, int px, int py) {
    ExprTerm t;
    t.kind = ExprTerm::Kind::Poly;
    t.coeff = c;
    t.px = px;
    t.py = py;
    return ScalarExpr{{t}};
}

ScalarExpr ScalarExpr::wave(double c, double kx, double ky, double phase) {
    ExprTerm t;
    t.kind = ExprTerm::Kind::Wave;
    t.coeff = c;
    t.kx = kx;
    t.ky = ky;
    t.phase = phase;
    return ScalarExpr{{t}};
}

double ScalarExpr::eval(const Vec2& p) const {
    double v = 0.0;
    for (const ExprTerm& t : terms_) {
        if (t.kind == ExprTerm::Kind::Poly) {
            v += t.coeff * ipow(p.x(), t.px) * ipow(p.y(), t.py);
        } else {
            v += t.coeff * std::cos(t.kx * p.x() + t.ky * p.y() + t.phase);
        }
    }
    return v;
}

Vec2 ScalarExpr::gradient(const Vec2& p) const {
    Vec2 g = Vec2::Zero();
    for (const ExprTerm& t : terms_) {
        if (t.kind == ExprTerm::Kind::Poly) {
            g.x() += t.coeff * dpow(p.x(), t.px) * ipow(p.y(), t.py);
            g.y() += t.coeff * ipow(p.x(), t.px) * dpow(p.y(), t.py);
        } else {
            const double s = std::sin(t.kx * p.x() + t.ky * p.y() + t.phase);
            g.x() -= t.coeff * t.kx * s;
            g.y() -= t.coeff * t.ky * s;
        }
    }
    return g;
}

Mat2 ScalarExpr::hessian(const Vec2& p) const {
    Mat2 h = Mat2::Zero();
    for (const ExprTerm& t : terms_) {
        if (t.kind == ExprTerm::Kind::Poly) {
            h(0, 0) += t.coeff * d2pow(p.x(), t.px) * ipow(p.y(), t.py);
            h(1, 1) += t.coeff * ipow(p.x(), t.px) * d2pow(p.y(), t.py);
            const double cxy = t.coeff * dpow(p.x(), t.px) * dpow(p.y(), t.py);
            h(0, 1) += cxy;
            h(1, 0) += cxy;
        } else {
            const double c = std::cos(t.kx * p.x() + t.ky * p.y() + t.phase);
            h(0, 0) -= t.coeff * t.kx * t.kx * c;
            h(1, 1) -= t.coeff * t.ky * t.ky * c;
            h(0, 1) -= t.coeff * t.kx * t.ky * c;
            h(1, 0) -= t.coeff * t.kx * t.ky * c;
        }
    }
    return h;
}

ScalarExpr ScalarExpr::scaled(double s) const {
    std::vector<ExprTerm> out = terms_;
    for (ExprTerm& t : out) t.coeff *= s;
    return ScalarExpr{std::move(out)};
}

ScalarExpr ScalarExpr::operator+(const ScalarExpr& other) const {
    std::vector<ExprTerm> out = terms_;
    out.insert(out.end(), other.terms_.begin(), other.terms_.end());
    return ScalarExpr{std::move(out)};
}

std::string ScalarExpr::describe() const {
    std::ostringstream os;
    os.precision(12);
    bool first = true;
    for (const ExprTerm& t : terms_) {
        if (!first) os << " + ";
        first = false;
        if (t.kind == ExprTerm::Kind::Poly) {
            os << t.coeff << "*x^" << t.px << "*y^" << t.py;
        } else {
            os << t.coeff << "*cos(" << t.kx << "x+" << t.ky << "y+" << t.phase << ")";
        }
    }
    if (first) os << "0";
    return os.str();
}

}  // namespace steklov
