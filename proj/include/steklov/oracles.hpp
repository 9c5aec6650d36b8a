#pragma once

// Closed-form Steklov spectra of the round benchmark domains.
//
// Disk of radius R: lambda_0 = 0 and lambda = k/R with multiplicity 2 for
// k >= 1 (separation of variables, u = r^k {cos,sin}(k theta)).
//
// Annulus a < r < b: per Fourier mode k the radial solutions A r^k + B r^{-k}
// (A + B log r for k = 0) must satisfy u_n = lambda u on both circles; the
// 2x2 matching determinant is quadratic in lambda and its roots are found by
// a bracketed bisection (the quadratic coefficients only supply brackets).

#include <vector>

namespace steklov {

std::vector<double> disk_steklov_oracle(double radius, int count);

struct AnnulusMode {
    int k = 0;            // Fourier mode
    double lambda = 0.0;
    int multiplicity = 1;  // 1 for k = 0, 2 otherwise
};

/// All modes needed to cover the first `count` eigenvalues, sorted by lambda.
std::vector<AnnulusMode> annulus_steklov_modes(double r_inner, double r_outer, int count);

/// First `count` eigenvalues with multiplicity expanded.
std::vector<double> annulus_steklov_oracle(double r_inner, double r_outer, int count);

/// Matching determinant for Fourier mode k (exposed for the oracle tests).
double annulus_mode_determinant(int k, double r_inner, double r_outer, double lambda);

}  // namespace steklov
