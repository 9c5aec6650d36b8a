#pragma once

// Triangle and edge quadrature rules. Triangle rules are given in barycentric
// form with weights summing to 1 (so int_T f ~ area * sum w_i f(x_i)); the
// edge rule is Gauss-Legendre on [0,1].

#include <Eigen/Dense>
#include <vector>

#include "steklov/expr.hpp"

namespace steklov {

struct TrianglePoint {
    double l0, l1, l2;  // barycentric coordinates
    double w;
};

/// Rule exact for polynomials of the given total degree (supported: 1, 2, 4).
const std::vector<TrianglePoint>& triangle_rule(int order);

struct EdgePoint {
    double t;  // parameter in [0,1]
    double w;
};

/// 3-point Gauss-Legendre rule on [0,1] (degree 5).
const std::vector<EdgePoint>& edge_rule();

inline Vec2 barycentric_point(const Vec2& a, const Vec2& b, const Vec2& c,
                              const TrianglePoint& q) {
    return q.l0 * a + q.l1 * b + q.l2 * c;
}

}  // namespace steklov
