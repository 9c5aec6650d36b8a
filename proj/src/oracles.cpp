#include "steklov/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "steklov/errors.hpp"

namespace steklov {

std::vector<double> disk_steklov_oracle(double radius, int count) {
    if (!(radius > 0.0) || count < 1) throw ValidationError("disk_steklov_oracle: bad arguments");
    std::vector<double> out{0.0};
    for (int k = 1; static_cast<int>(out.size()) < count; ++k) {
        out.push_back(k / radius);
        out.push_back(k / radius);
    }
    out.resize(count);
    return out;
}

double annulus_mode_determinant(int k, double a, double b, double lambda) {
    if (k == 0) {
        // det = lambda * (lambda*log(a/b) + 1/a + 1/b); the reduced factor is
        // returned so the nonzero root is a simple sign change.
        return lambda * std::log(a / b) + 1.0 / a + 1.0 / b;
    }
    const double row_b1 = k * std::pow(b, k - 1) - lambda * std::pow(b, k);
    const double row_b2 = k * std::pow(a, -k - 1) - lambda * std::pow(a, -k);
    const double row_a1 = k * std::pow(b, -k - 1) + lambda * std::pow(b, -k);
    const double row_a2 = k * std::pow(a, k - 1) + lambda * std::pow(a, k);
    return row_b1 * row_b2 - row_a1 * row_a2;
}

namespace {

double bisect_root(int k, double a, double b, double lo, double hi) {
    double flo = annulus_mode_determinant(k, a, b, lo);
    double fhi = annulus_mode_determinant(k, a, b, hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) {
        std::ostringstream os;
        os << "annulus oracle: no sign change for mode k=" << k << " in [" << lo << ", " << hi
           << "] (f(lo)=" << flo << ", f(hi)=" << fhi << ")";
        throw SolverError(os.str());
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = annulus_mode_determinant(k, a, b, mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

// Quadratic coefficients of the mode-k determinant, used only to build
// brackets around the two roots.
void mode_quadratic(int k, double a, double b, double& qa, double& qb, double& qc) {
    qa = std::pow(b / a, k) - std::pow(a / b, k);
    qb = -static_cast<double>(k) *
         (std::pow(b, k - 1) * std::pow(a, -k) + std::pow(b, k) * std::pow(a, -k - 1) +
          std::pow(b, -k - 1) * std::pow(a, k) + std::pow(b, -k) * std::pow(a, k - 1));
    qc = static_cast<double>(k) * k *
         (std::pow(b, k - 1) * std::pow(a, -k - 1) - std::pow(b, -k - 1) * std::pow(a, k - 1));
}

}  // namespace

std::vector<AnnulusMode> annulus_steklov_modes(double a, double b, int count) {
    if (!(a > 0.0) || !(a < b) || count < 1)
        throw ValidationError("annulus_steklov_modes: bad arguments");

    std::vector<AnnulusMode> modes;
    modes.push_back({0, 0.0, 1});
    {
        const double root = (1.0 / a + 1.0 / b) / std::log(b / a);
        modes.push_back({0, bisect_root(0, a, b, 0.5 * root, 1.5 * root), 1});
    }
    // Each k >= 1 contributes two double eigenvalues; k up to count is ample.
    for (int k = 1; k <= count; ++k) {
        double qa, qb, qc;
        mode_quadratic(k, a, b, qa, qb, qc);
        const double disc = qb * qb - 4.0 * qa * qc;
        if (!(disc > 0.0) || !(qa > 0.0))
            throw SolverError("annulus oracle: mode quadratic has no real bracket");
        const double sq = std::sqrt(disc);
        const double r1 = (-qb - sq) / (2.0 * qa);
        const double r2 = (-qb + sq) / (2.0 * qa);
        const double pad = 0.5 * (r2 - r1);
        modes.push_back({k, bisect_root(k, a, b, std::max(0.0, r1 - pad), 0.5 * (r1 + r2)), 2});
        modes.push_back({k, bisect_root(k, a, b, 0.5 * (r1 + r2), r2 + pad), 2});
    }
    std::sort(modes.begin(), modes.end(),
              [](const AnnulusMode& x, const AnnulusMode& y) { return x.lambda < y.lambda; });
    return modes;
}

std::vector<double> annulus_steklov_oracle(double a, double b, int count) {
    std::vector<double> out;
    for (const AnnulusMode& m : annulus_steklov_modes(a, b, count)) {
        for (int r = 0; r < m.multiplicity && static_cast<int>(out.size()) < count; ++r)
            out.push_back(m.lambda);
        if (static_cast<int>(out.size()) >= count) break;
    }
    return out;
}

}  // namespace steklov
