#pragma once

// Desk-scale experimental analogs of the genericity statements: first-order
// splitting of multiple eigenvalues under metric perturbations, statistics of
// eigenvalue simplicity over seeded conformal perturbations, and scans of
// boundary traces for degenerate zeros (regular-value check), degenerate
// critical points (Morse check) and vanishing arcs (weak unique continuation).

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "steklov/steklov_op.hpp"
#include "steklov/variation.hpp"

namespace steklov {

/// First-order cluster perturbation matrix P_ij = f_i^T (DS - lambda DM_b) f_j
/// over the M_b-orthonormal cluster basis; its eigenvalues are the predicted
/// slopes d lambda_i / dt.
Eigen::MatrixXd splitting_matrix(const SteklovSetup& setup, const SteklovSpectrum& spectrum,
                                 ClusterRange cluster, const PerturbationDirection& h);

struct SplitReport {
    int cluster_index = -1;
    ClusterRange cluster{0, 0};
    double base_lambda = 0.0;
    std::string direction;
    std::vector<double> steps;          // requested steps, in order
    std::vector<bool> step_skipped;     // SPD loss at that step
    Eigen::VectorXd predicted_slopes;   // ascending
    Eigen::MatrixXd measured;           // (branch, step) -> lambda_i(t_k); NaN when skipped
    Eigen::MatrixXd residuals;          // |measured - (base + t * slope)|
    std::vector<double> fitted_orders;  // per-branch log-log order of the residual
    std::vector<double> gap_over_t;     // (max branch - min branch)/t per step
};

SplitReport splitting_experiment(const Mesh& mesh, const MetricField& metric, int cluster_index,
                                 const PerturbationDirection& h, const std::vector<double>& steps,
                                 int eig_count, double gap_tol = 1e-6);

struct SamplerConfig {
    std::uint64_t seed_base = 1;
    int modes = 3;
    double amplitude = 0.1;
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    Eigen::VectorXd eigenvalues;  // leading window of the perturbed pencil
    std::vector<ClusterRange> clusters;
    bool all_simple = false;  // first m nonzero eigenvalues all in singleton clusters
    double min_rel_gap = 0.0;
    double sup_sigma = 0.0;  // max |sigma| over quadrature points
};

struct SimplicityStats {
    std::vector<TrialRecord> trials;
    double fraction_simple = 0.0;
    int m = 0;
    double gap_tol = 0.0;
    SamplerConfig sampler;
};

/// Fraction of seeded conformal perturbations of the base metric whose first
/// m nonzero eigenvalues are all simple at the given clustering tolerance.
/// Trials run independently (optionally in parallel) and are merged in seed
/// order, so the result does not depend on the thread count.
SimplicityStats simplicity_scan(const Mesh& mesh, const MetricField& base,
                                const SamplerConfig& sampler, int trials, int m, double gap_tol,
                                int threads = 1);

// --- boundary trace scans -----------------------------------------------------

/// Scales values/d1/d2 of all traces of one eigenfunction by 1/sup|values|
/// (joint over the loops); returns the factor applied.
double sup_normalize(std::vector<BoundaryTrace>& traces);

struct TraceZero {
    double s = 0.0;
    double abs_value = 0.0;
    double abs_d1 = 0.0;
    bool degenerate = false;
};

struct TraceCritical {
    double s = 0.0;
    double abs_d1 = 0.0;
    double abs_d2 = 0.0;
    bool degenerate = false;
};

struct TraceScanEntry {
    int trace = -1;  // index into the input list
    int eigen_index = -1;
    int loop = 0;
    double lambda = 0.0;
    std::vector<TraceZero> zeros;
    std::vector<TraceCritical> criticals;
    int flags = 0;
};

struct ScanReport {
    std::vector<TraceScanEntry> entries;
    double zero_tol = 0.0;
    double deriv_tol = 0.0;
    double second_deriv_tol = 0.0;
    int total_flags = 0;
    double min_abs_d1_at_zeros = 0.0;       // over all zeros found
    double min_abs_d2_at_criticals = 0.0;   // over all critical points found
};

/// Zeros of each trace located by sign change of the cubic Hermite interpolant
/// (plus tangential zeros found at critical points with |f| <= zero_tol);
/// flagged degenerate when |f'| < deriv_tol. Traces are expected
/// sup-normalized.
ScanReport nodal_regularity_scan(const std::vector<BoundaryTrace>& traces, double zero_tol,
                                 double deriv_tol);

/// Critical points located by sign change of the interpolated f'; flagged when
/// |f''| < second_deriv_tol.
ScanReport morse_scan(const std::vector<BoundaryTrace>& traces, double deriv_tol,
                      double second_deriv_tol);

struct WucpResult {
    bool flagged = false;
    double max_arc_length = 0.0;   // longest |f| < vanish_tol arc found
    double loop_length = 0.0;
    std::vector<std::pair<double, double>> flagged_arcs;  // (s_start, arc length)
};

/// Flags maximal boundary arcs longer than arc_fraction * loop length on which
/// |f| stays below vanish_tol.
WucpResult wucp_check(const BoundaryTrace& trace, double arc_fraction, double vanish_tol);

}  // namespace steklov
