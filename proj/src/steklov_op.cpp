#include "steklov/steklov_op.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "steklov/errors.hpp"

namespace steklov {

Eigen::VectorXd DtnOperator::apply(const Eigen::VectorXd& f) const {
    return Mb.M.llt().solve(S * f);
}

DtnOperator dtn_schur(std::shared_ptr<const DirichletSolver> solver, BoundaryMassMatrix Mb,
                      int threads) {
    const int nb = solver->dofs().n_boundary();
    const int ni = solver->dofs().n_interior();

    Eigen::MatrixXd Kib = Eigen::MatrixXd(solver->K_ib());
    Eigen::MatrixXd X(ni, nb);
    threads = std::max(1, threads);
    if (threads == 1 || nb < 2 * threads) {
        X = solver->solve_interior(Kib);
    } else {
        // Disjoint column chunks; the per-column solves do not interact, so
        // the result is bit-identical for any chunking.
        std::vector<std::thread> pool;
        const int chunk = (nb + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int j0 = t * chunk;
            const int j1 = std::min(nb, j0 + chunk);
            if (j0 >= j1) break;
            pool.emplace_back([&, j0, j1] {
                X.middleCols(j0, j1 - j0) = solver->solve_interior(
                    Eigen::MatrixXd(Kib.middleCols(j0, j1 - j0)));
            });
        }
        for (auto& th : pool) th.join();
    }

    DtnOperator dtn;
    dtn.S = Eigen::MatrixXd(solver->K_bb()) - Kib.transpose() * X;
    dtn.S = 0.5 * (dtn.S + dtn.S.transpose()).eval();
    dtn.Mb = std::move(Mb);
    dtn.solver = std::move(solver);
    return dtn;
}

std::vector<ClusterRange> cluster_multiplicities(const Eigen::VectorXd& eigenvalues,
                                                 double gap_tol) {
    std::vector<ClusterRange> clusters;
    const int n = static_cast<int>(eigenvalues.size());
    int begin = 0;
    for (int i = 0; i + 1 <= n; ++i) {
        const bool close_run =
            i + 1 < n &&
            eigenvalues[i + 1] - eigenvalues[i] <= gap_tol * std::max(1.0, eigenvalues[i]);
        if (!close_run) {
            clusters.push_back({begin, i + 1});
            begin = i + 1;
        }
    }
    return clusters;
}

double SteklovSpectrum::zero_threshold() const {
    const double scale = eigenvalues.size() ? std::max(1.0, eigenvalues.maxCoeff()) : 1.0;
    return gap_tol * scale;
}

double SteklovSpectrum::mb_norm(const Eigen::VectorXd& f) const {
    return std::sqrt(std::max(0.0, f.dot(Mb * f)));
}

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    int imax = 0;
    double best = std::abs(v[0]);
    for (int i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            imax = i;
        }
    if (v[imax] < 0.0) v = -v;
}

// Deterministic basis of a cluster eigenspace: select m pivot nodes by a
// greedy column-pivot pass (invariant under orthogonal recombination of the
// input basis), normalize the basis to the identity pattern on those nodes,
// then M_b-orthonormalize by Cholesky.
void canonicalize_cluster(Eigen::Ref<Eigen::MatrixXd> V, const Eigen::MatrixXd& Mb) {
    const int m = static_cast<int>(V.cols());
    if (m == 1) {
        fix_sign(V.col(0));
        return;
    }
    Eigen::MatrixXd R = V;
    std::vector<int> pivots;
    for (int k = 0; k < m; ++k) {
        int best_i = -1;
        double best = -1.0;
        for (int i = 0; i < R.rows(); ++i) {
            const double r = R.row(i).norm();
            if (r > best * (1.0 + 1e-12)) {
                best = r;
                best_i = i;
            }
        }
        pivots.push_back(best_i);
        const Eigen::RowVectorXd u = R.row(best_i) / R.row(best_i).norm();
        R -= (R * u.transpose()) * u;
    }
    Eigen::MatrixXd A(m, m);
    for (int k = 0; k < m; ++k) A.row(k) = V.row(pivots[k]);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
        for (int k = 0; k < m; ++k) fix_sign(V.col(k));
        return;
    }
    Eigen::MatrixXd W = V * lu.inverse();
    const Eigen::MatrixXd G = W.transpose() * Mb * W;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
        for (int k = 0; k < m; ++k) fix_sign(V.col(k));
        return;
    }
    W = llt.matrixL().solve(W.transpose()).transpose();
    V = W;
    for (int k = 0; k < m; ++k) fix_sign(V.col(k));
}

}  // namespace

SteklovSpectrum steklov_eigs(const DtnOperator& dtn, int count, double gap_tol) {
    const int nb = static_cast<int>(dtn.S.rows());
    if (count < 1 || count > nb)
        throw ValidationError("steklov_eigs: count must be in [1, #boundary DOFs]");

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(dtn.S, dtn.Mb.M,
                                                                     Eigen::ComputeEigenvectors |
                                                                         Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success)
        throw SolverError("steklov_eigs: generalized eigensolver failed to converge");

    SteklovSpectrum spec;
    spec.gap_tol = gap_tol;
    spec.full_dimension = nb;
    spec.Mb = dtn.Mb.M;
    spec.eigenvalues = solver.eigenvalues().head(count);
    spec.eigenvectors = solver.eigenvectors().leftCols(count);
    spec.clusters = cluster_multiplicities(spec.eigenvalues, gap_tol);

    for (const auto& [begin, end] : spec.clusters)
        canonicalize_cluster(spec.eigenvectors.middleCols(begin, end - begin), spec.Mb);

    const double s_norm = dtn.S.cwiseAbs().rowwise().sum().maxCoeff();  // inf norm
    double worst = 0.0;
    for (int k = 0; k < count; ++k) {
        const Eigen::VectorXd r =
            dtn.S * spec.eigenvectors.col(k) -
            spec.eigenvalues[k] * (dtn.Mb.M * spec.eigenvectors.col(k));
        worst = std::max(worst, r.norm() / (s_norm * spec.eigenvectors.col(k).norm()));
    }
    spec.max_pencil_residual = worst;
    return spec;
}

Eigen::VectorXd resolvent_apply(const SteklovSpectrum& spectrum, double lambda,
                                const Eigen::VectorXd& w, double orth_tol) {
    const int count = static_cast<int>(spectrum.eigenvalues.size());
    if (w.size() != spectrum.eigenvectors.rows())
        throw ValidationError("resolvent_apply: size mismatch");
    const double zero_tol = spectrum.zero_threshold();
    const double cluster_tol = spectrum.gap_tol * std::max(1.0, std::abs(lambda));
    const double w_norm = spectrum.mb_norm(w);
    if (w_norm == 0.0) return Eigen::VectorXd::Zero(w.size());

    const Eigen::VectorXd Mw = spectrum.Mb * w;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
    for (int n = 0; n < count; ++n) {
        const double ln = spectrum.eigenvalues[n];
        const double cn = spectrum.eigenvectors.col(n).dot(Mw);
        const bool in_cluster = std::abs(ln - lambda) <= cluster_tol;
        const bool zero_mode = ln <= zero_tol;
        if (in_cluster || zero_mode) {
            if (std::abs(cn) > orth_tol * w_norm)
                throw PreconditionError(
                    "resolvent_apply: w is not orthogonal to the excluded eigenspace");
            continue;
        }
        out += (cn / (ln - lambda)) * spectrum.eigenvectors.col(n);
    }
    return out;
}

// --- trace differentiation ---------------------------------------------------

namespace {

// Fornberg's algorithm: weights C(i, k) such that f^(k)(x0) ~ sum_i C(i,k) f(x_i)
// for derivative orders k = 0..m.
void fornberg_weights(double x0, const std::vector<double>& x, int m, Eigen::MatrixXd& C) {
    const int n = static_cast<int>(x.size());
    C = Eigen::MatrixXd::Zero(n, m + 1);
    double c1 = 1.0;
    double c4 = x[0] - x0;
    C(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
                C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k) C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
            C(j, 0) = c4 * C(j, 0) / c3;
        }
        c1 = c2;
    }
}

bool is_uniform(const std::vector<double>& s, double length) {
    const int n = static_cast<int>(s.size());
    const double mean = length / n;
    for (int i = 0; i < n; ++i) {
        const double ds = (i + 1 < n ? s[i + 1] : length) - s[i];
        if (std::abs(ds - mean) > 1e-9 * mean) return false;
    }
    return true;
}

void fd_derivatives(const std::vector<double>& s, double length,
                    const std::vector<double>& values, std::vector<double>& d1,
                    std::vector<double>& d2) {
    const int n = static_cast<int>(s.size());
    constexpr int half = 2;  // 5-point stencils
    d1.assign(n, 0.0);
    d2.assign(n, 0.0);
    if (n < 2 * half + 1)
        throw ValidationError("trace_derivatives: loop has too few nodes for the stencil");
    std::vector<double> xs(2 * half + 1);
    Eigen::MatrixXd C;
    for (int j = 0; j < n; ++j) {
        for (int o = -half; o <= half; ++o) {
            const int idx = ((j + o) % n + n) % n;
            double x = s[idx];
            if (j + o < 0) x -= length;
            if (j + o >= n) x += length;
            xs[o + half] = x;
        }
        fornberg_weights(s[j], xs, 2, C);
        double a = 0.0, b = 0.0;
        for (int o = -half; o <= half; ++o) {
            const int idx = ((j + o) % n + n) % n;
            a += C(o + half, 1) * values[idx];
            b += C(o + half, 2) * values[idx];
        }
        d1[j] = a;
        d2[j] = b;
    }
}

void fourier_derivatives(const std::vector<double>& s, double length,
                         const std::vector<double>& values, std::vector<double>& d1,
                         std::vector<double>& d2) {
    (void)s;
    const int n = static_cast<int>(values.size());
    const double two_pi = 2.0 * std::numbers::pi;
    // Direct real DFT; loop sizes stay in the low thousands.
    const int kmax = n / 2;
    std::vector<double> ca(kmax + 1, 0.0), sa(kmax + 1, 0.0);
    for (int k = 0; k <= kmax; ++k) {
        double cs = 0.0, ss = 0.0;
        for (int j = 0; j < n; ++j) {
            const double ang = two_pi * k * j / n;
            cs += values[j] * std::cos(ang);
            ss += values[j] * std::sin(ang);
        }
        ca[k] = 2.0 * cs / n;
        sa[k] = 2.0 * ss / n;
    }
    d1.assign(n, 0.0);
    d2.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double a = 0.0, b = 0.0;
        for (int k = 1; k <= kmax; ++k) {
            const double kappa = two_pi * k / length;
            const double ang = two_pi * k * j / n;
            const bool nyquist = (2 * k == n);
            // For real data the Nyquist mode carries no usable first
            // derivative; its curvature term is kept.
            const double amp = nyquist ? 0.5 : 1.0;
            if (!nyquist)
                a += kappa * (-ca[k] * std::sin(ang) + sa[k] * std::cos(ang));
            b -= kappa * kappa * amp * (ca[k] * std::cos(ang) + sa[k] * std::sin(ang));
        }
        d1[j] = a;
        d2[j] = b;
    }
}

}  // namespace

void trace_derivatives(const std::vector<double>& s, double length,
                       const std::vector<double>& values, TraceScheme scheme,
                       std::vector<double>& d1, std::vector<double>& d2) {
    if (s.size() != values.size() || s.empty())
        throw ValidationError("trace_derivatives: bad input sizes");
    if (scheme == TraceScheme::Auto)
        scheme = is_uniform(s, length) ? TraceScheme::Fourier : TraceScheme::FiniteDifference;
    if (scheme == TraceScheme::Fourier)
        fourier_derivatives(s, length, values, d1, d2);
    else
        fd_derivatives(s, length, values, d1, d2);
}

std::vector<BoundaryTrace> extract_trace(const SteklovSpectrum& spectrum, int index,
                                         const Mesh& mesh, const MetricField& metric,
                                         TraceScheme scheme) {
    if (index < 0 || index >= spectrum.eigenvalues.size())
        throw ValidationError("extract_trace: eigenpair index out of range");
    const auto arcs = boundary_arclength(mesh, metric);
    std::vector<BoundaryTrace> out;
    int offset = 0;
    for (size_t l = 0; l < mesh.boundary_loops.size(); ++l) {
        const int n = static_cast<int>(mesh.boundary_loops[l].size());
        BoundaryTrace tr;
        tr.loop = static_cast<int>(l);
        tr.loop_length = arcs[l].total;
        tr.s = arcs[l].s;
        tr.values.resize(n);
        for (int i = 0; i < n; ++i) tr.values[i] = spectrum.eigenvectors(offset + i, index);
        trace_derivatives(tr.s, tr.loop_length, tr.values, scheme, tr.d1, tr.d2);
        tr.eigen_index = index;
        tr.lambda = spectrum.eigenvalues[index];
        out.push_back(std::move(tr));
        offset += n;
    }
    return out;
}

}  // namespace steklov
