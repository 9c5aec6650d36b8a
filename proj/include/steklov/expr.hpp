#pragma once

// Closed-form scalar fields on the plane: sums of monomials c*x^a*y^b and
// plane waves c*cos(kx*x + ky*y + phase). Values, gradients and Hessians are
// exact, which is what the metric-variation formulas need from their inputs.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace steklov {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct ExprTerm {
    enum class Kind : std::uint8_t { Poly, Wave };
    Kind kind = Kind::Poly;
    double coeff = 0.0;
    // Poly: coeff * x^px * y^py
    int px = 0;
    int py = 0;
    // Wave: coeff * cos(kx*x + ky*y + phase)
    double kx = 0.0;
    double ky = 0.0;
    double phase = 0.0;
};

class ScalarExpr {
  public:
    ScalarExpr() = default;
    explicit ScalarExpr(std::vector<ExprTerm> terms) : terms_(std::move(terms)) {}

    static ScalarExpr zero() { return ScalarExpr{}; }
    static ScalarExpr constant(double c);
    static ScalarExpr monomial(double c, int px, int py);
    /// c * cos(kx*x + ky*y + phase)
    static ScalarExpr wave(double c, double kx, double ky, double phase = 0.0);

    double eval(const Vec2& p) const;
    Vec2 gradient(const Vec2& p) const;
    Mat2 hessian(const Vec2& p) const;

    ScalarExpr scaled(double s) const;
    ScalarExpr operator+(const ScalarExpr& other) const;
    void add_term(const ExprTerm& t) { terms_.push_back(t); }

    bool empty() const { return terms_.empty(); }
    const std::vector<ExprTerm>& terms() const { return terms_; }

    /// Compact text form used in report descriptors.
    std::string describe() const;

  private:
    std::vector<ExprTerm> terms_;
};

}  // namespace steklov
