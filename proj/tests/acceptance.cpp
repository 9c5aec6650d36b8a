// Acceptance suite: end-to-end checks of the oracle equivalences, exact
// discrete identities and statistical experiments, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "steklov/experiment.hpp"
#include "steklov/genericity.hpp"
#include "steklov/mesh_io.hpp"
#include "steklov/oracles.hpp"
#include "steklov/variation.hpp"

using namespace steklov;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPi = std::numbers::pi;
int g_failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd random_vec(std::mt19937_64& eng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = 2.0 * (static_cast<double>(eng() >> 11) * 0x1.0p-53) - 1.0;
    return v;
}

std::string fmtd(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// ---------------------------------------------------------------------------

void criterion_1_disk_spectrum() {
    const auto t0 = Clock::now();
    const std::vector<double> oracle = disk_steklov_oracle(1.0, 11);
    Mesh mesh = generate_disk_mesh(1.0, 0.08);
    std::vector<double> hs, errs;
    double worst_rel = 0.0;
    for (int level = 0; level < 3; ++level) {
        if (level > 0) mesh = refine(mesh);
        const SteklovSetup setup(mesh, MetricField::euclidean());
        const SteklovSpectrum spec = steklov_eigs(dtn_schur(setup.solver, setup.Mb, 2), 11);
        double sum = 0.0, worst = 0.0;
        for (int i = 1; i < 11; ++i) {
            const double rel = std::abs(spec.eigenvalues[i] - oracle[i]) / oracle[i];
            sum += rel;
            worst = std::max(worst, rel);
        }
        hs.push_back(std::log(mesh.h_max));
        errs.push_back(std::log(sum));
        worst_rel = worst;  // finest level wins
    }
    double mh = 0, me = 0;
    for (size_t i = 0; i < hs.size(); ++i) {
        mh += hs[i];
        me += errs[i];
    }
    mh /= hs.size();
    me /= errs.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < hs.size(); ++i) {
        num += (hs[i] - mh) * (errs[i] - me);
        den += (hs[i] - mh) * (hs[i] - mh);
    }
    const double order = num / den;
    const double elapsed = seconds_since(t0);
    const bool pass = worst_rel <= 0.01 && order >= 1.8 && order <= 2.2 && elapsed <= 60.0;
    report(pass, "C1 disk spectrum oracle",
           "worst rel err " + fmtd(worst_rel) + " (<=0.01), order " + fmtd(order) +
               " (in [1.8,2.2]), " + fmtd(elapsed) + "s (<=60)");
}

void criterion_2_annulus_oracle() {
    const std::vector<double> oracle = annulus_steklov_oracle(0.5, 1.0, 8);
    const Mesh mesh = generate_annulus_mesh(0.5, 1.0, 0.04);
    const SteklovSetup setup(mesh, MetricField::euclidean());
    const SteklovSpectrum spec = steklov_eigs(dtn_schur(setup.solver, setup.Mb, 2), 8);
    double worst = std::abs(spec.eigenvalues[0]);
    for (int i = 1; i < 8; ++i)
        worst = std::max(worst, std::abs(spec.eigenvalues[i] - oracle[i]) / oracle[i]);
    report(worst <= 0.01, "C2 annulus oracle",
           "worst rel err " + fmtd(worst) + " (<=0.01) over first 8 eigenvalues");
}

void criterion_3_conformal_closed_form() {
    const Mesh mesh = generate_disk_mesh(1.0, 0.05);
    const SteklovSetup setup(mesh, MetricField::euclidean());
    const SteklovSpectrum spec = steklov_eigs(dtn_schur(setup.solver, setup.Mb, 2), 12);
    auto mb_norm = [&](const Eigen::VectorXd& v) {
        return std::sqrt(std::max(0.0, v.dot(setup.Mb.M * v)));
    };
    double worst_rel = 0.0, worst_dk = 0.0;
    for (int s = 0; s < 10; ++s) {
        const PerturbationDirection dir = sample_random_conformal(1000 + s, 3, 0.5);
        const VariationWorkspace ws = make_variation_workspace(setup, dir);
        for (int col = 0; col < ws.DK.K.outerSize(); ++col)
            for (SparseMat::InnerIterator it(ws.DK.K, col); it; ++it)
                worst_dk = std::max(worst_dk, std::abs(it.value()));
        const BoundaryMassMatrix Mb_sigma =
            assemble_boundary_mass(mesh, setup.metric, dir.sigma);
        for (int k = 0; k < 12; ++k) {
            const double lambda = spec.eigenvalues[k];
            if (lambda <= spec.zero_threshold()) continue;
            const Eigen::VectorXd f = spec.eigenvectors.col(k);
            const VariationResult var = dtn_variation(setup, dir, f);
            const Eigen::VectorXd reference = -0.5 * lambda * setup.mb_solve(Mb_sigma.M * f);
            worst_rel = std::max(worst_rel, mb_norm(var.dLf - reference) / (lambda * mb_norm(f)));
        }
    }
    const bool pass = worst_rel <= 1e-10 && worst_dk <= 1e-14;
    report(pass, "C3 2d conformal closed form",
           "worst ||dLf + (sigma/2) lambda f||_Mb rel " + fmtd(worst_rel) +
               " (<=1e-10), DK entries <= " + fmtd(worst_dk) + " (<=1e-14)");
}

void criterion_4_fd_oracle() {
    const Mesh mesh = generate_disk_mesh(1.0, 0.05);
    const SteklovSetup setup(mesh, MetricField::euclidean());
    const SteklovSpectrum spec = steklov_eigs(dtn_schur(setup.solver, setup.Mb, 2), 4);
    const Eigen::VectorXd f = spec.eigenvectors.col(1);
    auto mb_norm = [&](const Eigen::VectorXd& v) {
        return std::sqrt(std::max(0.0, v.dot(setup.Mb.M * v)));
    };
    using SE = ScalarExpr;
    const std::vector<PerturbationDirection> dirs = {
        PerturbationDirection::general(SE::monomial(1.0, 1, 0), SE::zero(),
                                       SE::monomial(-1.0, 1, 0)),
        PerturbationDirection::general(SE::zero(), SE::monomial(1.5, 1, 1), SE::zero()),
        PerturbationDirection::general(SE::monomial(0.6, 0, 2), SE::monomial(0.3, 1, 0),
                                       SE::monomial(-0.2, 0, 1)),
        PerturbationDirection::general(SE::wave(0.5, 2.0, 0.0), SE::zero(),
                                       SE::wave(0.4, 0.0, 2.0, -kPi / 2.0)),
        PerturbationDirection::general(SE::monomial(0.5, 1, 0) + SE::constant(0.2),
                                       SE::constant(0.1), SE::monomial(-0.3, 0, 1))};
    const std::vector<double> steps = {1e-3, 5e-4, 2.5e-4};
    double worst_floor = 0.0, worst_order_dev = 0.0;
    for (const PerturbationDirection& h : dirs) {
        const VariationResult var = dtn_variation(setup, h, f);
        const double ref = mb_norm(var.dLf);
        std::vector<double> mm;
        for (double t : steps)
            mm.push_back(mb_norm(finite_difference_dtn(mesh, setup.metric, h, f, t) - var.dLf) /
                         ref);
        // least-squares order over the three spec steps
        const double order =
            std::log(mm[0] / mm[2]) / std::log(steps[0] / steps[2]);
        worst_order_dev = std::max(worst_order_dev, std::abs(order - 2.0));
        worst_floor = std::max(worst_floor, mm.back());
    }
    const bool pass = worst_order_dev <= 0.2 && worst_floor <= 1e-6;
    report(pass, "C4 general-direction FD oracle",
           "order 2 +/- " + fmtd(worst_order_dev) + " (<=0.2), floor " + fmtd(worst_floor) +
               " (<=1e-6) over 5 directions");
}

void criterion_5_density_identity() {
    const Mesh mesh = generate_disk_mesh(1.0, 0.05);
    const SteklovSetup setup(mesh, MetricField::euclidean());
    const SteklovSpectrum spec = steklov_eigs(dtn_schur(setup.solver, setup.Mb, 2), 8);
    std::mt19937_64 eng(2024);
    std::vector<int> eigen_indices;
    for (int k = 0; k < 8 && static_cast<int>(eigen_indices.size()) < 5; ++k)
        if (spec.eigenvalues[k] > spec.zero_threshold()) eigen_indices.push_back(k);
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        const Eigen::VectorXd psi = random_vec(eng, setup.n_boundary());
        const PerturbationDirection dir = sample_random_conformal(3000 + pair, 3, 1.0);
        for (int k : eigen_indices) {
            const DensityIdentityResult r = density_identity_residual(
                setup, spec.eigenvalues[k], spec.eigenvectors.col(k), psi, dir.sigma);
            worst = std::max(worst, r.residual / r.scale);
        }
    }

    // n = 3 coefficient algebra through the coordinate-formula evaluator.
    bool algebra_ok = true;
    {
        const int n = 3;
        const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
        const std::vector<Eigen::MatrixXd> dg(n, Eigen::MatrixXd::Zero(n, n));
        const Eigen::Vector3d p(0.3, -0.2, 0.5);
        const Eigen::Vector3d grad_sigma(1.0, 2.0, -1.0);
        const double sigma = p.x() + 2.0 * p.y() - p.z();
        const Eigen::Vector3d grad_u(2.0 * p.x(), 2.0 * p.y(), -4.0 * p.z());
        Eigen::MatrixXd hess_u = Eigen::MatrixXd::Zero(n, n);
        hess_u(0, 0) = 2.0;
        hess_u(1, 1) = 2.0;
        hess_u(2, 2) = -4.0;
        const Eigen::MatrixXd h = sigma * g;
        std::vector<Eigen::MatrixXd> dh(n);
        for (int i = 0; i < n; ++i) dh[i] = grad_sigma[i] * g;
        const double general = dg_laplacian_general(g, dg, h, dh, grad_u, hess_u);
        const double expected = 0.5 * grad_sigma.dot(grad_u);  // -(1 - 3/2) <grad s, grad u>
        algebra_ok = algebra_ok &&
                     std::abs(general - expected) <= 1e-12 * std::max(1.0, std::abs(expected));
    }
    {
        // n = 2, conformal, harmonic u: the (1 - n/2) coefficient vanishes.
        const MetricField g2 = MetricField::euclidean();
        const ScalarExpr u2 = ScalarExpr::monomial(1.0, 2, 0) + ScalarExpr::monomial(-1.0, 0, 2);
        const PerturbationDirection c2 = PerturbationDirection::conformal(
            ScalarExpr::monomial(0.7, 1, 0) + ScalarExpr::constant(0.4));
        algebra_ok =
            algebra_ok && std::abs(evaluate_dg_laplacian(g2, c2, u2, Vec2(0.3, -0.5))) <= 1e-13;
    }
    const bool pass = worst <= 1e-10 && algebra_ok;
    report(pass, "C5 density identity (n=2) + coefficient algebra (n=3)",
           "worst identity residual " + fmtd(worst) + " (<=1e-10), n=3 algebra " +
               (algebra_ok ? "ok" : "bad"));
}

void criterion_6_resolvent_identity() {
    const Mesh mesh = generate_disk_mesh(1.0, 0.08);
    const SteklovSetup setup(mesh, MetricField::euclidean());
    const DtnOperator dtn = dtn_schur(setup.solver, setup.Mb, 2);
    const int nb = setup.n_boundary();
    const SteklovSpectrum spec = steklov_eigs(dtn, nb);  // full pencil
    std::mt19937_64 eng(77);
    double worst = 0.0;
    std::vector<double> lambdas;
    for (int k = 0; k < nb && static_cast<int>(lambdas.size()) < 3; ++k)
        if (spec.eigenvalues[k] > spec.zero_threshold()) {
            if (lambdas.empty() || spec.eigenvalues[k] > lambdas.back() * (1.0 + 1e-9))
                lambdas.push_back(spec.eigenvalues[k]);
        }
    for (const double lambda : lambdas) {
        for (int rep = 0; rep < 10; ++rep) {
            Eigen::VectorXd w = random_vec(eng, nb);
            for (int k = 0; k < nb; ++k) {
                const bool zero_mode = spec.eigenvalues[k] <= spec.zero_threshold();
                const bool in_cluster = std::abs(spec.eigenvalues[k] - lambda) <=
                                        spec.gap_tol * std::max(1.0, lambda);
                if (zero_mode || in_cluster)
                    w -= spec.eigenvectors.col(k).dot(spec.Mb * w) * spec.eigenvectors.col(k);
            }
            const Eigen::VectorXd rw = resolvent_apply(spec, lambda, w);
            const Eigen::VectorXd lhs = dtn.S * rw - lambda * (spec.Mb * rw);
            const Eigen::VectorXd rhs = spec.Mb * w;
            worst = std::max(worst, (lhs - rhs).norm() / rhs.norm());
        }
    }
    report(worst <= 1e-10, "C6 resolvent identity",
           "worst ||(S - lambda M) R w - M w||/||M w|| = " + fmtd(worst) +
               " (<=1e-10) at the first 3 nonzero eigenvalues");
}

void criterion_7_splitting_slope() {
    const Mesh mesh = generate_disk_mesh(1.0, 0.02);
    const PerturbationDirection dir = PerturbationDirection::conformal(
        ScalarExpr::monomial(1.0, 2, 0) + ScalarExpr::monomial(-1.0, 0, 2));
    const SplitReport r = splitting_experiment(mesh, MetricField::euclidean(), 1, dir,
                                               {1e-2, 5e-3, 2.5e-3}, 8);
    const double gap_ratio = r.gap_over_t.back() / 0.5;
    bool orders_ok = true;
    double worst_order_dev = 0.0;
    for (double o : r.fitted_orders) {
        if (std::isnan(o)) continue;
        worst_order_dev = std::max(worst_order_dev, std::abs(o - 2.0));
        orders_ok = orders_ok && o >= 1.8 && o <= 2.2;
    }
    const bool slopes_ok = std::abs(r.predicted_slopes[0] + 0.25) <= 0.01 &&
                           std::abs(r.predicted_slopes[1] - 0.25) <= 0.01;
    const bool pass = std::abs(gap_ratio - 1.0) <= 0.02 && orders_ok && slopes_ok;
    report(pass, "C7 splitting slope of a double eigenvalue",
           "gap/t -> " + fmtd(r.gap_over_t.back()) + " (0.5 +/- 2%), slopes " +
               fmtd(r.predicted_slopes[0]) + "/" + fmtd(r.predicted_slopes[1]) +
               " (-1/4,+1/4), residual order dev " + fmtd(worst_order_dev) + " (<=0.2)");
}

// Shared batch for criteria 8, 9, 10.
struct BatchOutcome {
    int trials = 0;
    int simple = 0;
    int nodal_flags = 0;
    int morse_flags = 0;
    int wucp_flags = 0;
    double min_d1 = 1e300;
    double min_d2 = 1e300;
    double runtime = 0.0;
};

BatchOutcome run_batch(const Mesh& mesh, int trials, int m, int threads) {
    const auto t0 = Clock::now();
    BatchOutcome out;
    out.trials = trials;
    std::vector<int> simple(trials, 0), nflags(trials, 0), mflags(trials, 0), wflags(trials, 0);
    std::vector<double> mind1(trials, 1e300), mind2(trials, 1e300);

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) {
            const PerturbationDirection dir = sample_random_conformal(1 + i, 3, 0.1);
            const MetricField g = MetricField::euclidean().perturbed(dir, 1.0);
            const SteklovSetup setup(mesh, g);
            const SteklovSpectrum spec =
                steklov_eigs(dtn_schur(setup.solver, setup.Mb), m + 3, 1e-6);
            bool all_simple = true;
            for (const auto& [b, e] : spec.clusters)
                if (e - b > 1 && b <= m && e > 1) all_simple = false;
            simple[i] = all_simple ? 1 : 0;

            std::vector<BoundaryTrace> traces;
            int taken = 0;
            for (int k = 0; k < spec.eigenvalues.size() && taken < m; ++k) {
                if (spec.eigenvalues[k] <= spec.zero_threshold()) continue;
                std::vector<BoundaryTrace> group = extract_trace(spec, k, mesh, g);
                sup_normalize(group);
                for (BoundaryTrace& tr : group) traces.push_back(std::move(tr));
                ++taken;
            }
            const ScanReport nodal = nodal_regularity_scan(traces, 1e-6, 1e-3);
            const ScanReport morse = morse_scan(traces, 1e-3, 1e-3);
            nflags[i] = nodal.total_flags;
            mflags[i] = morse.total_flags;
            mind1[i] = nodal.min_abs_d1_at_zeros;
            mind2[i] = morse.min_abs_d2_at_criticals;
            for (const BoundaryTrace& tr : traces)
                if (wucp_check(tr, 0.05, 1e-8).flagged) wflags[i] += 1;
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    for (int i = 0; i < trials; ++i) {
        out.simple += simple[i];
        out.nodal_flags += nflags[i];
        out.morse_flags += mflags[i];
        out.wucp_flags += wflags[i];
        out.min_d1 = std::min(out.min_d1, mind1[i]);
        out.min_d2 = std::min(out.min_d2, mind2[i]);
    }
    out.runtime = seconds_since(t0);
    return out;
}

void criteria_8_9_10_batch() {
    const Mesh mesh = generate_disk_mesh(1.0, 0.04);
    const int threads = std::max(2u, std::thread::hardware_concurrency());
    const BatchOutcome batch = run_batch(mesh, 100, 10, threads);

    // C8: all trials fully simple within the runtime budget.
    {
        const bool pass = batch.simple == batch.trials && batch.runtime <= 600.0;
        report(pass, "C8 simplicity statistics over seeded perturbations",
               std::to_string(batch.simple) + "/" + std::to_string(batch.trials) +
                   " trials fully simple at gap_tol 1e-6, " + fmtd(batch.runtime) +
                   "s (<=600)");
    }

    // C9: no degeneracy flags in the batch; the unperturbed disk passes with
    // margin >= 100x; the two synthetic degenerate fixtures are flagged.
    {
        const SteklovSetup setup(mesh, MetricField::euclidean());
        const SteklovSpectrum spec = steklov_eigs(dtn_schur(setup.solver, setup.Mb), 13, 1e-6);
        std::vector<BoundaryTrace> traces;
        int taken = 0;
        for (int k = 0; k < spec.eigenvalues.size() && taken < 10; ++k) {
            if (spec.eigenvalues[k] <= spec.zero_threshold()) continue;
            std::vector<BoundaryTrace> group = extract_trace(spec, k, mesh, setup.metric);
            sup_normalize(group);
            for (BoundaryTrace& tr : group) traces.push_back(std::move(tr));
            ++taken;
        }
        const ScanReport nodal = nodal_regularity_scan(traces, 1e-6, 1e-3);
        const ScanReport morse = morse_scan(traces, 1e-3, 1e-3);
        const double margin1 = nodal.min_abs_d1_at_zeros / 1e-3;
        const double margin2 = morse.min_abs_d2_at_criticals / 1e-3;

        // synthetic degenerate fixtures
        auto fixture = [&](double (*f)(double), double (*d1)(double), double (*d2)(double)) {
            BoundaryTrace tr;
            const int n = 128;
            tr.loop_length = 2.0 * kPi;
            tr.s.resize(n);
            tr.values.resize(n);
            tr.d1.resize(n);
            tr.d2.resize(n);
            for (int i = 0; i < n; ++i) {
                const double s = 2.0 * kPi * i / n;
                tr.s[i] = s;
                tr.values[i] = f(s);
                tr.d1[i] = d1(s);
                tr.d2[i] = d2(s);
            }
            return tr;
        };
        std::vector<BoundaryTrace> tangential{fixture(
            [](double s) { return std::sin(s) * std::sin(s); },
            [](double s) { return std::sin(2.0 * s); },
            [](double s) { return 2.0 * std::cos(2.0 * s); })};
        std::vector<BoundaryTrace> cubic{fixture(
            [](double s) { return std::pow(std::sin(s), 3); },
            [](double s) { return 3.0 * std::sin(s) * std::sin(s) * std::cos(s); },
            [](double s) {
                return 6.0 * std::sin(s) * std::cos(s) * std::cos(s) -
                       3.0 * std::pow(std::sin(s), 3);
            })};
        const bool fixtures_flagged =
            nodal_regularity_scan(tangential, 1e-6, 1e-3).total_flags > 0 &&
            morse_scan(cubic, 1e-3, 1e-3).total_flags > 0;

        const bool pass = batch.nodal_flags == 0 && batch.morse_flags == 0 &&
                          nodal.total_flags == 0 && morse.total_flags == 0 && margin1 >= 100.0 &&
                          margin2 >= 100.0 && fixtures_flagged;
        report(pass, "C9 regular-value and Morse scans",
               "batch flags " + std::to_string(batch.nodal_flags) + "+" +
                   std::to_string(batch.morse_flags) + " (0), disk margins " + fmtd(margin1) +
                   "x/" + fmtd(margin2) + "x (>=100x), fixtures " +
                   (fixtures_flagged ? "flagged" : "missed"));
    }

    // C10: no vanishing arcs in the batch; constant-zero fixture flagged.
    {
        BoundaryTrace zero;
        const int n = 64;
        zero.loop_length = 2.0 * kPi;
        zero.s.resize(n);
        zero.values.assign(n, 0.0);
        zero.d1.assign(n, 0.0);
        zero.d2.assign(n, 0.0);
        for (int i = 0; i < n; ++i) zero.s[i] = 2.0 * kPi * i / n;
        const bool fixture_flagged = wucp_check(zero, 0.05, 1e-8).flagged;
        const bool pass = batch.wucp_flags == 0 && fixture_flagged;
        report(pass, "C10 weak unique continuation check",
               "batch vanishing-arc flags " + std::to_string(batch.wucp_flags) +
                   " (0), constant-zero fixture " + (fixture_flagged ? "flagged" : "missed"));
    }
}

void criterion_11_determinism() {
    const fs::path root = fs::temp_directory_path() / "steklov_acceptance_det";
    fs::remove_all(root);
    fs::create_directories(root);

    using nlohmann::json;
    auto config_for = [&](const std::string& kind) {
        json j;
        j["experiment"] = kind;
        j["domain"] = {{"kind", "disk"}, {"radius", 1.0}, {"target_h", 0.12}};
        j["metric"] = {{"kind", "euclidean"}, {"scale", 1.0}};
        j["eigen_count"] = 8;
        if (kind == "spectrum") j["refine_levels"] = 1;
        if (kind == "scan") {
            j["trials"] = 8;
            j["scan_m"] = 6;
            j["perturbation"] = {{"kind", "conformal-random"}, {"seed", 5}, {"modes", 3},
                                 {"amplitude", 0.1}};
        }
        if (kind == "split") {
            j["cluster_index"] = 1;
            j["steps"] = {1e-2, 5e-3};
            j["perturbation"] = {
                {"kind", "conformal"},
                {"sigma", json::array({{{"kind", "poly"}, {"c", 1.0}, {"px", 2}, {"py", 0}},
                                       {{"kind", "poly"}, {"c", -1.0}, {"px", 0}, {"py", 2}}})}};
        }
        return j;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };

    bool pass = true;
    std::string detail;
    for (const std::string kind : {"spectrum", "scan", "split"}) {
        const ExperimentConfig cfg = parse_config(config_for(kind));
        RunOptions a, b;
        a.out_override = (root / (kind + "_a")).string();
        a.threads = 1;
        b.out_override = (root / (kind + "_b")).string();
        b.threads = 3;
        run_experiment(cfg, a);
        run_experiment(cfg, b);
        for (const auto& entry : fs::directory_iterator(a.out_override)) {
            const fs::path name = entry.path().filename();
            const bool same = slurp(entry.path()) == slurp(fs::path(b.out_override) / name);
            if (!same) {
                pass = false;
                detail += name.string() + " differs; ";
            }
        }
    }
    fs::remove_all(root);
    report(pass, "C11 determinism",
           pass ? "spectrum/scan/split outputs byte-identical across reruns and thread counts"
                : detail);
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    criterion_1_disk_spectrum();
    criterion_2_annulus_oracle();
    criterion_3_conformal_closed_form();
    criterion_4_fd_oracle();
    criterion_5_density_identity();
    criterion_6_resolvent_identity();
    criterion_7_splitting_slope();
    criteria_8_9_10_batch();
    criterion_11_determinism();
    std::printf("%s: %d criterion failure(s), total %.1fs\n",
                g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED", g_failures,
                seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
