#include "steklov/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace steklov {

const std::vector<TrianglePoint>& triangle_rule(int order) {
    static const std::vector<TrianglePoint> rule1 = {
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0},
    };
    static const std::vector<TrianglePoint> rule2 = {
        {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0},
        {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0},
        {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0},
    };
    // Dunavant degree-4 rule (6 points).
    static const std::vector<TrianglePoint> rule4 = [] {
        const double a1 = 0.108103018168070, b1 = 0.445948490915965;
        const double w1 = 0.223381589678011;
        const double a2 = 0.816847572980459, b2 = 0.091576213509771;
        const double w2 = 0.109951743655322;
        std::vector<TrianglePoint> r;
        r.push_back({a1, b1, b1, w1});
        r.push_back({b1, a1, b1, w1});
        r.push_back({b1, b1, a1, w1});
        r.push_back({a2, b2, b2, w2});
        r.push_back({b2, a2, b2, w2});
        r.push_back({b2, b2, a2, w2});
        return r;
    }();

    switch (order) {
        case 1: return rule1;
        case 2: return rule2;
        case 3:
        case 4: return rule4;
        default: throw std::invalid_argument("triangle_rule: unsupported order");
    }
}

const std::vector<EdgePoint>& edge_rule() {
    static const std::vector<EdgePoint> rule = [] {
        const double x = std::sqrt(3.0 / 5.0);
        std::vector<EdgePoint> r;
        r.push_back({0.5 * (1.0 - x), 5.0 / 18.0});
        r.push_back({0.5, 8.0 / 18.0});
        r.push_back({0.5 * (1.0 + x), 5.0 / 18.0});
        return r;
    }();
    return rule;
}

}  // namespace steklov
