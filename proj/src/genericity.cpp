#include "steklov/genericity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "steklov/errors.hpp"

namespace steklov {

Eigen::MatrixXd splitting_matrix(const SteklovSetup& setup, const SteklovSpectrum& spectrum,
                                 ClusterRange cluster, const PerturbationDirection& h) {
    const auto [begin, end] = cluster;
    const int m = end - begin;
    if (m < 1 || begin < 0 || end > spectrum.eigenvalues.size())
        throw ValidationError("splitting_matrix: bad cluster range");
    const double lambda = spectrum.eigenvalues.segment(begin, m).mean();

    const VariationWorkspace ws = make_variation_workspace(setup, h);
    Eigen::MatrixXd P(m, m);
    for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd fj = spectrum.eigenvectors.col(begin + j);
        const Eigen::VectorXd dS_fj = ds_apply(setup, ws, fj);
        const Eigen::VectorXd dM_fj = ws.DMb.M * fj;
        for (int i = 0; i < m; ++i) {
            const Eigen::VectorXd fi = spectrum.eigenvectors.col(begin + i);
            P(i, j) = fi.dot(dS_fj) - lambda * fi.dot(dM_fj);
        }
    }
    P = 0.5 * (P + P.transpose()).eval();
    return P;
}

SplitReport splitting_experiment(const Mesh& mesh, const MetricField& metric, int cluster_index,
                                 const PerturbationDirection& h, const std::vector<double>& steps,
                                 int eig_count, double gap_tol) {
    const SteklovSetup setup(mesh, metric);
    const DtnOperator dtn = dtn_schur(setup.solver, setup.Mb);
    const SteklovSpectrum base = steklov_eigs(dtn, eig_count, gap_tol);
    if (cluster_index < 0 || cluster_index >= static_cast<int>(base.clusters.size()))
        throw ValidationError("splitting_experiment: cluster index out of range");
    const ClusterRange cluster = base.clusters[cluster_index];
    const int m = cluster.second - cluster.first;
    if (cluster.second + 1 > eig_count)
        throw ValidationError("splitting_experiment: eig_count too small for the cluster");

    SplitReport report;
    report.cluster_index = cluster_index;
    report.cluster = cluster;
    report.base_lambda = base.eigenvalues.segment(cluster.first, m).mean();
    report.direction = h.describe();
    report.steps = steps;
    report.step_skipped.assign(steps.size(), false);

    const Eigen::MatrixXd P = splitting_matrix(setup, base, cluster, h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pes(P);
    report.predicted_slopes = pes.eigenvalues();

    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.measured = Eigen::MatrixXd::Constant(m, steps.size(), nan);
    report.residuals = Eigen::MatrixXd::Constant(m, steps.size(), nan);
    report.gap_over_t.assign(steps.size(), nan);

    for (size_t k = 0; k < steps.size(); ++k) {
        const double t = steps[k];
        const MetricField g_t = metric.perturbed(h, t);
        if (!validate_spd(g_t, mesh).ok) {
            report.step_skipped[k] = true;
            continue;
        }
        const SteklovSetup setup_t(mesh, g_t);
        const DtnOperator dtn_t = dtn_schur(setup_t.solver, setup_t.Mb);
        const SteklovSpectrum spec_t = steklov_eigs(dtn_t, eig_count, gap_tol);
        for (int i = 0; i < m; ++i) {
            const double measured = spec_t.eigenvalues[cluster.first + i];
            report.measured(i, k) = measured;
            report.residuals(i, k) =
                std::abs(measured - (report.base_lambda + t * report.predicted_slopes[i]));
        }
        if (m >= 2)
            report.gap_over_t[k] =
                (report.measured(m - 1, k) - report.measured(0, k)) / t;
    }

    // Per-branch least-squares order of the residual in t, ignoring steps at
    // the solver noise floor.
    const double noise = 1e-12 * std::max(1.0, std::abs(report.base_lambda));
    report.fitted_orders.assign(m, nan);
    for (int i = 0; i < m; ++i) {
        std::vector<double> lt, lr;
        for (size_t k = 0; k < steps.size(); ++k) {
            if (report.step_skipped[k]) continue;
            if (!(report.residuals(i, k) > noise)) continue;
            lt.push_back(std::log(steps[k]));
            lr.push_back(std::log(report.residuals(i, k)));
        }
        if (lt.size() < 2) continue;
        double mt = 0, mr = 0;
        for (size_t k = 0; k < lt.size(); ++k) {
            mt += lt[k];
            mr += lr[k];
        }
        mt /= lt.size();
        mr /= lr.size();
        double num = 0, den = 0;
        for (size_t k = 0; k < lt.size(); ++k) {
            num += (lt[k] - mt) * (lr[k] - mr);
            den += (lt[k] - mt) * (lt[k] - mt);
        }
        if (den > 0) report.fitted_orders[i] = num / den;
    }
    return report;
}

namespace {

TrialRecord run_simplicity_trial(const Mesh& mesh, const MetricField& base,
                                 const SamplerConfig& sampler, int trial, int m, double gap_tol) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = sampler.seed_base + static_cast<std::uint64_t>(trial);
    const PerturbationDirection dir =
        sample_random_conformal(rec.seed, sampler.modes, sampler.amplitude);
    const MetricField g = base.perturbed(dir, 1.0);

    // |sigma| <= amplitude by the sampler normalization, so the perturbed
    // metric stays SPD; record the realized sup as a diagnostic.
    double sup_sigma = 0.0;
    for (const auto& tri : mesh.triangles) {
        const Vec2 c = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
        sup_sigma = std::max(sup_sigma, std::abs(dir.sigma.eval(c)));
    }
    rec.sup_sigma = sup_sigma;

    const int count = std::min(m + 3, static_cast<int>(mesh.boundary_vertices().size()));
    const SteklovSetup setup(mesh, g);
    const DtnOperator dtn = dtn_schur(setup.solver, setup.Mb);
    const SteklovSpectrum spec = steklov_eigs(dtn, count, gap_tol);

    rec.eigenvalues = spec.eigenvalues;
    rec.clusters = spec.clusters;
    rec.all_simple = true;
    for (const auto& [begin, end] : spec.clusters) {
        if (end - begin == 1) continue;
        if (begin <= m && end > 1) rec.all_simple = false;  // touches indices 1..m
    }
    rec.min_rel_gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 <= m && i + 1 < spec.eigenvalues.size(); ++i) {
        const double gap = (spec.eigenvalues[i + 1] - spec.eigenvalues[i]) /
                           std::max(1.0, spec.eigenvalues[i]);
        rec.min_rel_gap = std::min(rec.min_rel_gap, gap);
    }
    return rec;
}

}  // namespace

SimplicityStats simplicity_scan(const Mesh& mesh, const MetricField& base,
                                const SamplerConfig& sampler, int trials, int m, double gap_tol,
                                int threads) {
    if (trials < 1) throw ValidationError("simplicity_scan: trials must be >= 1");
    SimplicityStats stats;
    stats.m = m;
    stats.gap_tol = gap_tol;
    stats.sampler = sampler;
    stats.trials.resize(trials);

    threads = std::max(1, threads);
    if (threads == 1) {
        for (int i = 0; i < trials; ++i)
            stats.trials[i] = run_simplicity_trial(mesh, base, sampler, i, m, gap_tol);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1))
                    stats.trials[i] = run_simplicity_trial(mesh, base, sampler, i, m, gap_tol);
            });
        for (auto& th : pool) th.join();
    }

    int simple = 0;
    for (const TrialRecord& r : stats.trials) simple += r.all_simple ? 1 : 0;
    stats.fraction_simple = static_cast<double>(simple) / trials;
    return stats;
}

// --- boundary trace scans -----------------------------------------------------

double sup_normalize(std::vector<BoundaryTrace>& traces) {
    double sup = 0.0;
    for (const BoundaryTrace& tr : traces)
        for (double v : tr.values) sup = std::max(sup, std::abs(v));
    if (sup == 0.0) return 1.0;
    const double factor = 1.0 / sup;
    for (BoundaryTrace& tr : traces) {
        for (double& v : tr.values) v *= factor;
        for (double& v : tr.d1) v *= factor;
        for (double& v : tr.d2) v *= factor;
    }
    return factor;
}

namespace {

// Cyclic cubic Hermite interpolation of (value, slope) nodal data.
struct HermiteSegment {
    double s0, s1, f0, f1, d0, d1;

    double eval(double s) const {
        const double w = s1 - s0;
        const double t = (s - s0) / w;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * w * d0 +
               (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * w * d1;
    }
    double deriv(double s) const {
        const double w = s1 - s0;
        const double t = (s - s0) / w;
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * w * d0 +
                (-6 * t2 + 6 * t) * f1 + (3 * t2 - 2 * t) * w * d1) /
               w;
    }
};

HermiteSegment segment(const BoundaryTrace& tr, const std::vector<double>& values,
                       const std::vector<double>& slopes, int i) {
    const int n = static_cast<int>(tr.s.size());
    const int j = (i + 1) % n;
    const double s1 = (i + 1 < n) ? tr.s[j] : tr.loop_length;
    return {tr.s[i], s1, values[i], values[j], slopes[i], slopes[j]};
}

double bisect(const HermiteSegment& seg, double a, double b) {
    double fa = seg.eval(a);
    if (fa == 0.0) return a;
    for (int it = 0; it < 90; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = seg.eval(mid);
        if (fm == 0.0) return mid;
        if (fa * fm < 0.0) {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

ScanReport nodal_regularity_scan(const std::vector<BoundaryTrace>& traces, double zero_tol,
                                 double deriv_tol) {
    ScanReport report;
    report.zero_tol = zero_tol;
    report.deriv_tol = deriv_tol;
    report.min_abs_d1_at_zeros = std::numeric_limits<double>::infinity();

    for (size_t ti = 0; ti < traces.size(); ++ti) {
        const BoundaryTrace& tr = traces[ti];
        const int n = static_cast<int>(tr.s.size());
        TraceScanEntry entry;
        entry.trace = static_cast<int>(ti);
        entry.eigen_index = tr.eigen_index;
        entry.loop = tr.loop;
        entry.lambda = tr.lambda;

        auto record_zero = [&](double s, double fval, double d1val) {
            TraceZero z;
            z.s = s;
            z.abs_value = std::abs(fval);
            z.abs_d1 = std::abs(d1val);
            z.degenerate = z.abs_d1 < deriv_tol;
            if (z.degenerate) entry.flags += 1;
            report.min_abs_d1_at_zeros = std::min(report.min_abs_d1_at_zeros, z.abs_d1);
            entry.zeros.push_back(z);
        };

        for (int i = 0; i < n; ++i) {
            const HermiteSegment f_seg = segment(tr, tr.values, tr.d1, i);
            const HermiteSegment d_seg = segment(tr, tr.d1, tr.d2, i);
            if (tr.values[i] == 0.0) record_zero(tr.s[i], 0.0, tr.d1[i]);
            const double fa = tr.values[i], fb = tr.values[(i + 1) % n];
            if (fa * fb < 0.0) {
                const double s = bisect(f_seg, f_seg.s0, f_seg.s1);
                record_zero(s, f_seg.eval(s), d_seg.eval(s));
            }
            // Tangential zeros: critical points where the trace touches zero.
            const double da = tr.d1[i], db = tr.d1[(i + 1) % n];
            if (da * db < 0.0) {
                const double s = bisect(d_seg, d_seg.s0, d_seg.s1);
                const double fval = f_seg.eval(s);
                if (std::abs(fval) <= zero_tol && fa * fb >= 0.0 && fa != 0.0)
                    record_zero(s, fval, d_seg.eval(s));
            }
        }
        report.total_flags += entry.flags;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

ScanReport morse_scan(const std::vector<BoundaryTrace>& traces, double deriv_tol,
                      double second_deriv_tol) {
    ScanReport report;
    report.deriv_tol = deriv_tol;
    report.second_deriv_tol = second_deriv_tol;
    report.min_abs_d2_at_criticals = std::numeric_limits<double>::infinity();

    for (size_t ti = 0; ti < traces.size(); ++ti) {
        const BoundaryTrace& tr = traces[ti];
        const int n = static_cast<int>(tr.s.size());
        TraceScanEntry entry;
        entry.trace = static_cast<int>(ti);
        entry.eigen_index = tr.eigen_index;
        entry.loop = tr.loop;
        entry.lambda = tr.lambda;

        auto record_critical = [&](double s, double d1val, double d2val) {
            TraceCritical c;
            c.s = s;
            c.abs_d1 = std::abs(d1val);
            c.abs_d2 = std::abs(d2val);
            c.degenerate = c.abs_d2 < second_deriv_tol;
            if (c.degenerate) entry.flags += 1;
            report.min_abs_d2_at_criticals = std::min(report.min_abs_d2_at_criticals, c.abs_d2);
            entry.criticals.push_back(c);
        };

        for (int i = 0; i < n; ++i) {
            const HermiteSegment d_seg = segment(tr, tr.d1, tr.d2, i);
            if (tr.d1[i] == 0.0) record_critical(tr.s[i], 0.0, tr.d2[i]);
            const double da = tr.d1[i], db = tr.d1[(i + 1) % n];
            if (da * db < 0.0) {
                const double s = bisect(d_seg, d_seg.s0, d_seg.s1);
                record_critical(s, d_seg.eval(s), d_seg.deriv(s));
            }
            // Tangential criticals (f' touches zero without a sign change,
            // e.g. a cubic flat point): locate the zero of f'' and test |f'|.
            const double ca = tr.d2[i], cb = tr.d2[(i + 1) % n];
            if (ca * cb < 0.0 && da * db >= 0.0 && da != 0.0) {
                const double s = d_seg.s0 + (d_seg.s1 - d_seg.s0) * ca / (ca - cb);
                const double d1v = d_seg.eval(s);
                if (std::abs(d1v) <= deriv_tol)
                    record_critical(s, d1v, ca + (cb - ca) * (s - d_seg.s0) / (d_seg.s1 - d_seg.s0));
            }
        }
        report.total_flags += entry.flags;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

WucpResult wucp_check(const BoundaryTrace& trace, double arc_fraction, double vanish_tol) {
    WucpResult out;
    out.loop_length = trace.loop_length;
    const int n = static_cast<int>(trace.s.size());

    std::vector<bool> small(n);
    bool all_small = true;
    for (int i = 0; i < n; ++i) {
        small[i] = std::abs(trace.values[i]) < vanish_tol;
        all_small = all_small && small[i];
    }
    if (all_small) {
        out.flagged = true;
        out.max_arc_length = trace.loop_length;
        out.flagged_arcs.push_back({trace.s.empty() ? 0.0 : trace.s[0], trace.loop_length});
        return out;
    }

    const double threshold = arc_fraction * trace.loop_length;
    // Walk maximal cyclic runs of small nodes; the run length is the
    // arclength between its first and last node.
    for (int start = 0; start < n; ++start) {
        if (!small[start]) continue;
        const int prev = (start + n - 1) % n;
        if (small[prev]) continue;  // not the head of a run
        int len = 1;
        while (len < n && small[(start + len) % n]) ++len;
        const int last = (start + len - 1) % n;
        double arc = trace.s[last] - trace.s[start];
        if (arc < 0.0) arc += trace.loop_length;
        out.max_arc_length = std::max(out.max_arc_length, arc);
        if (arc > threshold) {
            out.flagged = true;
            out.flagged_arcs.push_back({trace.s[start], arc});
        }
    }
    return out;
}

}  // namespace steklov
