#include "steklov/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "steklov/errors.hpp"
#include "steklov/genericity.hpp"
#include "steklov/mesh_io.hpp"
#include "steklov/oracles.hpp"
#include "steklov/svg.hpp"
#include "steklov/variation.hpp"

namespace steklov {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

json expr_to_json(const ScalarExpr& e) {
    json out = json::array();
    for (const ExprTerm& t : e.terms()) {
        json jt;
        if (t.kind == ExprTerm::Kind::Poly) {
            jt["kind"] = "poly";
            jt["c"] = t.coeff;
            jt["px"] = t.px;
            jt["py"] = t.py;
        } else {
            jt["kind"] = "wave";
            jt["c"] = t.coeff;
            jt["kx"] = t.kx;
            jt["ky"] = t.ky;
            jt["phase"] = t.phase;
        }
        out.push_back(jt);
    }
    return out;
}

ScalarExpr expr_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of terms");
    ScalarExpr e;
    for (const json& jt : j) {
        const std::string kind = jt.value("kind", "");
        ExprTerm t;
        if (kind == "poly") {
            check_keys(jt, {"kind", "c", "px", "py"}, where);
            t.kind = ExprTerm::Kind::Poly;
            t.coeff = jt.at("c").get<double>();
            t.px = jt.at("px").get<int>();
            t.py = jt.at("py").get<int>();
        } else if (kind == "wave") {
            check_keys(jt, {"kind", "c", "kx", "ky", "phase"}, where);
            t.kind = ExprTerm::Kind::Wave;
            t.coeff = jt.at("c").get<double>();
            t.kx = jt.at("kx").get<double>();
            t.ky = jt.at("ky").get<double>();
            t.phase = jt.value("phase", 0.0);
        } else {
            throw ConfigError(where + ": term kind must be 'poly' or 'wave'");
        }
        e.add_term(t);
    }
    return e;
}

}  // namespace

Mesh DomainConfig::build() const {
    switch (kind) {
        case Kind::Disk: return generate_disk_mesh(radius, target_h);
        case Kind::Annulus: return generate_annulus_mesh(r_inner, r_outer, target_h);
        case Kind::MeshFile: {
            // Triangle-style pairs are recognized by the .node extension;
            // anything else is the native text format.
            if (path.size() > 5 && path.substr(path.size() - 5) == ".node") {
                const std::string stem = path.substr(0, path.size() - 5);
                return import_triangle_files(path, stem + ".ele");
            }
            return read_mesh_file(path);
        }
    }
    throw ConfigError("domain: unknown kind");
}

MetricField MetricConfig::build() const {
    switch (kind) {
        case Kind::Euclidean: return MetricField::euclidean(scale);
        case Kind::Conformal: return MetricField::conformal_euclidean(phi);
        case Kind::General: return MetricField::general(g11, g12, g22);
    }
    throw ConfigError("metric: unknown kind");
}

PerturbationDirection PerturbationConfig::build() const {
    switch (kind) {
        case Kind::Conformal: return PerturbationDirection::conformal(sigma);
        case Kind::General: return PerturbationDirection::general(h11, h12, h22);
        case Kind::ConformalRandom:
            return sample_random_conformal(seed, modes, amplitude);
    }
    throw ConfigError("perturbation: unknown kind");
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j,
               {"experiment", "domain", "metric", "refine_levels", "eigen_count", "quad_order",
                "trials", "scan_m", "steps", "cluster_index", "fd_step", "export_operators",
                "perturbation", "tolerances", "output"},
               "config");
    ExperimentConfig c;
    c.experiment = j.at("experiment").get<std::string>();
    const std::set<std::string> kinds{"spectrum", "variation-check", "split",
                                      "scan",     "wucp",            "oracle"};
    if (!kinds.count(c.experiment))
        throw ConfigError("config: unknown experiment '" + c.experiment + "'");

    {
        const json& jd = j.at("domain");
        const std::string kind = jd.value("kind", "");
        if (kind == "disk") {
            check_keys(jd, {"kind", "radius", "target_h"}, "domain");
            c.domain.kind = DomainConfig::Kind::Disk;
            c.domain.radius = jd.at("radius").get<double>();
            c.domain.target_h = jd.at("target_h").get<double>();
        } else if (kind == "annulus") {
            check_keys(jd, {"kind", "r_inner", "r_outer", "target_h"}, "domain");
            c.domain.kind = DomainConfig::Kind::Annulus;
            c.domain.r_inner = jd.at("r_inner").get<double>();
            c.domain.r_outer = jd.at("r_outer").get<double>();
            c.domain.target_h = jd.at("target_h").get<double>();
        } else if (kind == "mesh_file") {
            check_keys(jd, {"kind", "path"}, "domain");
            c.domain.kind = DomainConfig::Kind::MeshFile;
            c.domain.path = jd.at("path").get<std::string>();
        } else {
            throw ConfigError("domain: kind must be disk | annulus | mesh_file");
        }
    }

    if (j.contains("metric")) {
        const json& jm = j.at("metric");
        const std::string kind = jm.value("kind", "");
        if (kind == "euclidean") {
            check_keys(jm, {"kind", "scale"}, "metric");
            c.metric.kind = MetricConfig::Kind::Euclidean;
            c.metric.scale = jm.value("scale", 1.0);
        } else if (kind == "conformal") {
            check_keys(jm, {"kind", "phi"}, "metric");
            c.metric.kind = MetricConfig::Kind::Conformal;
            c.metric.phi = expr_from_json(jm.at("phi"), "metric.phi");
        } else if (kind == "general") {
            check_keys(jm, {"kind", "g11", "g12", "g22"}, "metric");
            c.metric.kind = MetricConfig::Kind::General;
            c.metric.g11 = expr_from_json(jm.at("g11"), "metric.g11");
            c.metric.g12 = expr_from_json(jm.at("g12"), "metric.g12");
            c.metric.g22 = expr_from_json(jm.at("g22"), "metric.g22");
        } else {
            throw ConfigError("metric: kind must be euclidean | conformal | general");
        }
    }

    c.refine_levels = j.value("refine_levels", 0);
    c.eigen_count = j.value("eigen_count", 12);
    c.quad_order = j.value("quad_order", 2);
    c.trials = j.value("trials", 1);
    c.scan_m = j.value("scan_m", 10);
    c.cluster_index = j.value("cluster_index", -1);
    c.fd_step = j.value("fd_step", 1e-4);
    c.export_operators = j.value("export_operators", false);
    c.output = j.value("output", "out");
    if (j.contains("steps")) c.steps = j.at("steps").get<std::vector<double>>();

    if (j.contains("perturbation")) {
        const json& jp = j.at("perturbation");
        const std::string kind = jp.value("kind", "");
        if (kind == "conformal-random") {
            check_keys(jp, {"kind", "seed", "modes", "amplitude"}, "perturbation");
            c.perturbation.kind = PerturbationConfig::Kind::ConformalRandom;
            c.perturbation.seed = jp.value("seed", std::uint64_t{1});
            c.perturbation.modes = jp.value("modes", 3);
            c.perturbation.amplitude = jp.value("amplitude", 0.1);
        } else if (kind == "conformal") {
            check_keys(jp, {"kind", "sigma"}, "perturbation");
            c.perturbation.kind = PerturbationConfig::Kind::Conformal;
            c.perturbation.sigma = expr_from_json(jp.at("sigma"), "perturbation.sigma");
        } else if (kind == "general") {
            check_keys(jp, {"kind", "h11", "h12", "h22"}, "perturbation");
            c.perturbation.kind = PerturbationConfig::Kind::General;
            c.perturbation.h11 = expr_from_json(jp.at("h11"), "perturbation.h11");
            c.perturbation.h12 = expr_from_json(jp.at("h12"), "perturbation.h12");
            c.perturbation.h22 = expr_from_json(jp.at("h22"), "perturbation.h22");
        } else {
            throw ConfigError("perturbation: kind must be conformal-random | conformal | general");
        }
    }

    if (j.contains("tolerances")) {
        const json& jt = j.at("tolerances");
        check_keys(jt,
                   {"gap_tol", "zero_tol", "deriv_tol", "second_deriv_tol", "vanish_tol",
                    "arc_fraction", "conformal_rel", "density_rel", "fd_rel"},
                   "tolerances");
        c.tol.gap_tol = jt.value("gap_tol", c.tol.gap_tol);
        c.tol.zero_tol = jt.value("zero_tol", c.tol.zero_tol);
        c.tol.deriv_tol = jt.value("deriv_tol", c.tol.deriv_tol);
        c.tol.second_deriv_tol = jt.value("second_deriv_tol", c.tol.second_deriv_tol);
        c.tol.vanish_tol = jt.value("vanish_tol", c.tol.vanish_tol);
        c.tol.arc_fraction = jt.value("arc_fraction", c.tol.arc_fraction);
        c.tol.conformal_rel = jt.value("conformal_rel", c.tol.conformal_rel);
        c.tol.density_rel = jt.value("density_rel", c.tol.density_rel);
        c.tol.fd_rel = jt.value("fd_rel", c.tol.fd_rel);
    }

    // Per-experiment requirements.
    if (c.experiment == "split") {
        if (c.steps.empty()) throw ConfigError("split: 'steps' is required");
        if (c.cluster_index < 0) throw ConfigError("split: 'cluster_index' is required");
        if (!j.contains("perturbation")) throw ConfigError("split: 'perturbation' is required");
    }
    if ((c.experiment == "scan" || c.experiment == "wucp") &&
        c.perturbation.kind != PerturbationConfig::Kind::ConformalRandom)
        throw ConfigError(c.experiment + ": perturbation kind must be conformal-random");
    if (c.trials < 1) throw ConfigError("config: trials must be >= 1");
    if (c.eigen_count < 1) throw ConfigError("config: eigen_count must be >= 1");
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    switch (c.domain.kind) {
        case DomainConfig::Kind::Disk:
            j["domain"] = {{"kind", "disk"}, {"radius", c.domain.radius},
                           {"target_h", c.domain.target_h}};
            break;
        case DomainConfig::Kind::Annulus:
            j["domain"] = {{"kind", "annulus"},
                           {"r_inner", c.domain.r_inner},
                           {"r_outer", c.domain.r_outer},
                           {"target_h", c.domain.target_h}};
            break;
        case DomainConfig::Kind::MeshFile:
            j["domain"] = {{"kind", "mesh_file"}, {"path", c.domain.path}};
            break;
    }
    switch (c.metric.kind) {
        case MetricConfig::Kind::Euclidean:
            j["metric"] = {{"kind", "euclidean"}, {"scale", c.metric.scale}};
            break;
        case MetricConfig::Kind::Conformal:
            j["metric"] = {{"kind", "conformal"}, {"phi", expr_to_json(c.metric.phi)}};
            break;
        case MetricConfig::Kind::General:
            j["metric"] = {{"kind", "general"},
                           {"g11", expr_to_json(c.metric.g11)},
                           {"g12", expr_to_json(c.metric.g12)},
                           {"g22", expr_to_json(c.metric.g22)}};
            break;
    }
    j["refine_levels"] = c.refine_levels;
    j["eigen_count"] = c.eigen_count;
    j["quad_order"] = c.quad_order;
    j["trials"] = c.trials;
    j["scan_m"] = c.scan_m;
    if (!c.steps.empty()) j["steps"] = c.steps;
    if (c.cluster_index >= 0) j["cluster_index"] = c.cluster_index;
    j["fd_step"] = c.fd_step;
    j["export_operators"] = c.export_operators;
    switch (c.perturbation.kind) {
        case PerturbationConfig::Kind::ConformalRandom:
            j["perturbation"] = {{"kind", "conformal-random"},
                                 {"seed", c.perturbation.seed},
                                 {"modes", c.perturbation.modes},
                                 {"amplitude", c.perturbation.amplitude}};
            break;
        case PerturbationConfig::Kind::Conformal:
            j["perturbation"] = {{"kind", "conformal"},
                                 {"sigma", expr_to_json(c.perturbation.sigma)}};
            break;
        case PerturbationConfig::Kind::General:
            j["perturbation"] = {{"kind", "general"},
                                 {"h11", expr_to_json(c.perturbation.h11)},
                                 {"h12", expr_to_json(c.perturbation.h12)},
                                 {"h22", expr_to_json(c.perturbation.h22)}};
            break;
    }
    j["tolerances"] = {{"gap_tol", c.tol.gap_tol},
                       {"zero_tol", c.tol.zero_tol},
                       {"deriv_tol", c.tol.deriv_tol},
                       {"second_deriv_tol", c.tol.second_deriv_tol},
                       {"vanish_tol", c.tol.vanish_tol},
                       {"arc_fraction", c.tol.arc_fraction},
                       {"conformal_rel", c.tol.conformal_rel},
                       {"density_rel", c.tol.density_rel},
                       {"fd_rel", c.tol.fd_rel}};
    j["output"] = c.output;
    return j;
}

// --- shared runner pieces -----------------------------------------------------

namespace {

struct RunContext {
    ExperimentConfig config;
    std::string out_dir;
    int threads = 1;
    bool verbose = false;

    void note(const std::string& msg) const {
        if (verbose) std::fprintf(stderr, "[steklov_lab] %s\n", msg.c_str());
    }
    std::string path(const std::string& name) const { return out_dir + "/" + name; }
};

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open output file: " + path);
    os << content;
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

json spectrum_to_json(const SteklovSpectrum& spec, const Mesh& mesh, const MetricField& metric,
                      std::uint64_t seed) {
    json j;
    std::vector<double> ev(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.eigenvalues.size());
    j["eigenvalues"] = ev;
    json clusters = json::array();
    for (const auto& [b, e] : spec.clusters) clusters.push_back({b, e});
    j["clusters"] = clusters;
    j["residuals"] = {{"max_pencil_residual", spec.max_pencil_residual}};
    j["mesh_h"] = mesh.h_max;
    j["n_boundary"] = static_cast<int>(spec.eigenvectors.rows());
    j["metric_descriptor"] = metric.describe();
    j["seed"] = seed;
    j["gap_tol"] = spec.gap_tol;
    return j;
}

/// Oracle eigenvalues for round Euclidean domains (with constant scaling);
/// empty when no closed form applies.
std::vector<double> oracle_for(const ExperimentConfig& c, int count) {
    if (c.metric.kind != MetricConfig::Kind::Euclidean) return {};
    const double factor = 1.0 / std::sqrt(c.metric.scale);
    std::vector<double> base;
    if (c.domain.kind == DomainConfig::Kind::Disk)
        base = disk_steklov_oracle(c.domain.radius, count);
    else if (c.domain.kind == DomainConfig::Kind::Annulus)
        base = annulus_steklov_oracle(c.domain.r_inner, c.domain.r_outer, count);
    else
        return {};
    for (double& v : base) v *= factor;
    return base;
}

struct LevelResult {
    double h_max = 0.0;
    int n_boundary = 0;
    Eigen::VectorXd eigenvalues;
    double max_pencil_residual = 0.0;
    double max_mean_zero = 0.0;
    double max_orthonormality_dev = 0.0;
    double lambda0_rel = 0.0;
    SteklovSpectrum spectrum;
};

LevelResult solve_level(const Mesh& mesh, const MetricField& metric, int count, double gap_tol,
                        int quad_order, int threads) {
    const SteklovSetup setup(mesh, metric, quad_order);
    const DtnOperator dtn = dtn_schur(setup.solver, setup.Mb, threads);
    const int nb = setup.n_boundary();
    const SteklovSpectrum spec = steklov_eigs(dtn, std::min(count, nb), gap_tol);

    LevelResult r;
    r.h_max = mesh.h_max;
    r.n_boundary = nb;
    r.eigenvalues = spec.eigenvalues;
    r.max_pencil_residual = spec.max_pencil_residual;
    r.spectrum = spec;

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(nb);
    const Eigen::VectorXd m_ones = spec.Mb * ones;
    for (int k = 0; k < spec.eigenvalues.size(); ++k)
        if (spec.eigenvalues[k] > spec.zero_threshold())
            r.max_mean_zero =
                std::max(r.max_mean_zero, std::abs(spec.eigenvectors.col(k).dot(m_ones)));
    const Eigen::MatrixXd gram =
        spec.eigenvectors.transpose() * spec.Mb * spec.eigenvectors;
    r.max_orthonormality_dev =
        (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (spec.eigenvalues.size() > 1 && spec.eigenvalues[1] > 0)
        r.lambda0_rel = std::abs(spec.eigenvalues[0]) / spec.eigenvalues[1];
    return r;
}

int run_spectrum(const RunContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    const MetricField metric = c.metric.build();
    Mesh mesh = c.domain.build();

    std::vector<LevelResult> levels;
    for (int level = 0; level <= c.refine_levels; ++level) {
        if (level > 0) mesh = refine(mesh);
        ctx.note("spectrum level " + std::to_string(level) + " h=" + fmt(mesh.h_max));
        levels.push_back(
            solve_level(mesh, metric, c.eigen_count, c.tol.gap_tol, c.quad_order, ctx.threads));
    }
    const LevelResult& finest = levels.back();
    const std::vector<double> oracle = oracle_for(c, c.eigen_count);

    // convergence.csv
    {
        std::string csv = "level,h_max,n_boundary";
        for (int i = 0; i < finest.eigenvalues.size(); ++i) csv += ",lambda_" + std::to_string(i);
        if (!oracle.empty())
            for (int i = 0; i < finest.eigenvalues.size(); ++i)
                csv += ",relerr_" + std::to_string(i);
        csv += "\n";
        for (size_t l = 0; l < levels.size(); ++l) {
            csv += std::to_string(l) + "," + fmt(levels[l].h_max) + "," +
                   std::to_string(levels[l].n_boundary);
            for (int i = 0; i < levels[l].eigenvalues.size(); ++i)
                csv += "," + fmt(levels[l].eigenvalues[i]);
            if (!oracle.empty()) {
                for (int i = 0; i < levels[l].eigenvalues.size(); ++i) {
                    const double ex = oracle[i];
                    const double err =
                        ex > 0 ? std::abs(levels[l].eigenvalues[i] - ex) / ex : 0.0;
                    csv += "," + fmt(err);
                }
            }
            csv += "\n";
        }
        write_text_file(ctx.path("convergence.csv"), csv);
    }

    // Observed convergence order from the aggregate relative error.
    double observed_order = 0.0;
    if (!oracle.empty() && levels.size() >= 2) {
        std::vector<double> lh, le;
        for (const LevelResult& lr : levels) {
            double sum = 0.0;
            for (int i = 0; i < lr.eigenvalues.size(); ++i)
                if (oracle[i] > 0) sum += std::abs(lr.eigenvalues[i] - oracle[i]) / oracle[i];
            if (sum > 0) {
                lh.push_back(std::log(lr.h_max));
                le.push_back(std::log(sum));
            }
        }
        if (lh.size() >= 2) {
            double mh = 0, me = 0;
            for (size_t i = 0; i < lh.size(); ++i) {
                mh += lh[i];
                me += le[i];
            }
            mh /= lh.size();
            me /= le.size();
            double num = 0, den = 0;
            for (size_t i = 0; i < lh.size(); ++i) {
                num += (lh[i] - mh) * (le[i] - me);
                den += (lh[i] - mh) * (lh[i] - mh);
            }
            observed_order = den > 0 ? num / den : 0.0;
        }
    }

    json j = spectrum_to_json(finest.spectrum, mesh, metric, c.perturbation.seed);
    if (c.export_operators) {
        // Triplet text format: header "rows cols nnz", then one "i j value"
        // line per stored entry (0-based indices).
        const StiffnessMatrix K = assemble_stiffness(mesh, metric, c.quad_order);
        std::string out;
        std::vector<std::string> lines;
        for (int col = 0; col < K.K.outerSize(); ++col)
            for (SparseMat::InnerIterator it(K.K, col); it; ++it)
                lines.push_back(std::to_string(it.row()) + " " + std::to_string(it.col()) + " " +
                                fmt(it.value()));
        out = std::to_string(K.K.rows()) + " " + std::to_string(K.K.cols()) + " " +
              std::to_string(lines.size()) + "\n";
        for (const std::string& l : lines) out += l + "\n";
        write_text_file(ctx.path("stiffness.triplets.txt"), out);

        const BoundaryMassMatrix Mb = assemble_boundary_mass(mesh, metric);
        std::string mout;
        std::vector<std::string> mlines;
        for (int i = 0; i < Mb.M.rows(); ++i)
            for (int jcol = 0; jcol < Mb.M.cols(); ++jcol)
                if (Mb.M(i, jcol) != 0.0)
                    mlines.push_back(std::to_string(i) + " " + std::to_string(jcol) + " " +
                                     fmt(Mb.M(i, jcol)));
        mout = std::to_string(Mb.M.rows()) + " " + std::to_string(Mb.M.cols()) + " " +
               std::to_string(mlines.size()) + "\n";
        for (const std::string& l : mlines) mout += l + "\n";
        write_text_file(ctx.path("boundary_mass.triplets.txt"), mout);
    }

    j["observed_order"] = observed_order;
    if (!oracle.empty()) j["oracle"] = oracle;
    j["residuals"]["max_mean_zero"] = finest.max_mean_zero;
    j["residuals"]["max_orthonormality_dev"] = finest.max_orthonormality_dev;
    j["residuals"]["lambda0_rel"] = finest.lambda0_rel;
    write_json_file(ctx.path("spectrum.json"), j);

    // eigenvalue ladder
    {
        LinePlot plot;
        plot.title = "Steklov eigenvalue ladder";
        plot.xlabel = "index";
        plot.ylabel = "lambda";
        PlotSeries computed;
        for (int i = 0; i < finest.eigenvalues.size(); ++i) {
            computed.x.push_back(i);
            computed.y.push_back(finest.eigenvalues[i]);
        }
        computed.markers = true;
        computed.line = false;
        computed.label = "computed";
        plot.series.push_back(computed);
        if (!oracle.empty()) {
            PlotSeries ex;
            for (size_t i = 0; i < oracle.size(); ++i) {
                ex.x.push_back(static_cast<double>(i));
                ex.y.push_back(oracle[i]);
            }
            ex.label = "oracle";
            ex.color = "#b2421f";
            plot.series.push_back(ex);
        }
        write_svg_file(ctx.path("spectrum.svg"), plot);
    }

    int exit_code = 0;
    if (finest.max_pencil_residual > 1e-9 || finest.max_mean_zero > 1e-9 ||
        finest.max_orthonormality_dev > 1e-10 || finest.lambda0_rel > 1e-9)
        exit_code = 1;
    return exit_code;
}

Eigen::VectorXd random_boundary_vector(std::mt19937_64& eng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v[i] = 2.0 * (static_cast<double>(eng() >> 11) * 0x1.0p-53) - 1.0;
    return v;
}

std::vector<PerturbationDirection> default_general_directions() {
    using SE = ScalarExpr;
    std::vector<PerturbationDirection> dirs;
    dirs.push_back(PerturbationDirection::general(SE::monomial(1.0, 1, 0), SE::zero(),
                                                  SE::monomial(-1.0, 1, 0)));
    dirs.push_back(PerturbationDirection::general(SE::zero(), SE::monomial(1.5, 1, 1), SE::zero()));
    dirs.push_back(PerturbationDirection::general(SE::monomial(0.6, 0, 2),
                                                  SE::monomial(0.3, 1, 0),
                                                  SE::monomial(-0.2, 0, 1)));
    dirs.push_back(PerturbationDirection::general(SE::wave(0.5, 2.0, 0.0), SE::zero(),
                                                  SE::wave(0.4, 0.0, 2.0, -1.5707963267948966)));
    dirs.push_back(PerturbationDirection::general(
        SE::monomial(0.5, 1, 0) + SE::constant(0.2), SE::constant(0.1), SE::monomial(-0.3, 0, 1)));
    return dirs;
}

int run_variation_check(const RunContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    const MetricField metric = c.metric.build();
    Mesh mesh = c.domain.build();
    for (int level = 0; level < c.refine_levels; ++level) mesh = refine(mesh);

    const SteklovSetup setup(mesh, metric, c.quad_order);
    const DtnOperator dtn = dtn_schur(setup.solver, setup.Mb, ctx.threads);
    const int count = std::min(c.eigen_count, setup.n_boundary());
    const SteklovSpectrum spec = steklov_eigs(dtn, count, c.tol.gap_tol);

    json report;
    bool ok = true;

    auto mb_norm = [&](const Eigen::VectorXd& x) {
        return std::sqrt(std::max(0.0, x.dot(setup.Mb.M * x)));
    };

    // (a) 2d conformal closed form against 10 seeded sigma fields.
    {
        json entries = json::array();
        double worst_rel = 0.0, worst_dk = 0.0;
        for (int s = 0; s < 10; ++s) {
            const PerturbationDirection dir =
                sample_random_conformal(c.perturbation.seed + 100 + s, 3, 0.5);
            const VariationWorkspace ws = make_variation_workspace(setup, dir);
            double dk_max = 0.0;
            for (int col = 0; col < ws.DK.K.outerSize(); ++col)
                for (SparseMat::InnerIterator it(ws.DK.K, col); it; ++it)
                    dk_max = std::max(dk_max, std::abs(it.value()));
            worst_dk = std::max(worst_dk, dk_max);

            const BoundaryMassMatrix Mb_sigma =
                assemble_boundary_mass(mesh, metric, dir.sigma);
            for (int k = 0; k < count; ++k) {
                const double lambda = spec.eigenvalues[k];
                if (lambda <= spec.zero_threshold()) continue;
                const Eigen::VectorXd f = spec.eigenvectors.col(k);
                const VariationResult var = dtn_variation(setup, dir, f);
                const Eigen::VectorXd reference =
                    -0.5 * lambda * setup.mb_solve(Mb_sigma.M * f);
                const double rel = mb_norm(var.dLf - reference) / (lambda * mb_norm(f));
                worst_rel = std::max(worst_rel, rel);
            }
            entries.push_back({{"seed", c.perturbation.seed + 100 + s}, {"dk_max", dk_max}});
        }
        report["conformal_identity"] = {{"entries", entries},
                                        {"worst_rel", worst_rel},
                                        {"worst_dk_entry", worst_dk},
                                        {"tolerance", c.tol.conformal_rel}};
        ok = ok && worst_rel <= c.tol.conformal_rel && worst_dk <= 1e-14;
    }

    // (b) general-direction FD convergence.
    {
        std::vector<double> steps = c.steps;
        if (steps.empty()) steps = {1e-3, 5e-4, 2.5e-4};
        const Eigen::VectorXd f = spec.eigenvectors.col(std::min(1, count - 1));
        json entries = json::array();
        double worst_floor = 0.0;
        double worst_order_dev = 0.0;
        for (const PerturbationDirection& dir : default_general_directions()) {
            const VariationResult var = dtn_variation(setup, dir, f);
            const double ref_norm = mb_norm(var.dLf);
            std::vector<double> mismatches;
            for (double t : steps) {
                const Eigen::VectorXd fd =
                    finite_difference_dtn(mesh, metric, dir, f, t, c.quad_order);
                mismatches.push_back(mb_norm(fd - var.dLf) / ref_norm);
            }
            // order fit
            double order = 0.0;
            {
                double mh = 0, me = 0;
                for (size_t i = 0; i < steps.size(); ++i) {
                    mh += std::log(steps[i]);
                    me += std::log(mismatches[i]);
                }
                mh /= steps.size();
                me /= steps.size();
                double num = 0, den = 0;
                for (size_t i = 0; i < steps.size(); ++i) {
                    num += (std::log(steps[i]) - mh) * (std::log(mismatches[i]) - me);
                    den += (std::log(steps[i]) - mh) * (std::log(steps[i]) - mh);
                }
                order = den > 0 ? num / den : 0.0;
            }
            worst_floor = std::max(worst_floor, mismatches.back());
            worst_order_dev = std::max(worst_order_dev, std::abs(order - 2.0));
            entries.push_back({{"direction", dir.describe()},
                               {"steps", steps},
                               {"mismatch", mismatches},
                               {"order", order},
                               {"decomposition_norms",
                                {{"stiffness", mb_norm(var.term_stiffness)},
                                 {"interior", mb_norm(var.term_interior)},
                                 {"measure", mb_norm(var.term_measure)}}}});
        }
        report["fd_convergence"] = {{"entries", entries},
                                    {"worst_floor", worst_floor},
                                    {"worst_order_dev", worst_order_dev},
                                    {"floor_tolerance", c.tol.fd_rel}};
        ok = ok && worst_floor <= c.tol.fd_rel && worst_order_dev <= 0.2;
    }

    // (c) conformal pairing identity, 20 (psi, sigma) pairs x 5 eigenpairs.
    {
        std::mt19937_64 eng(c.perturbation.seed ^ 0xD1B54A32D192ED03ULL);
        std::vector<int> eigen_indices;
        for (int k = 0; k < count && static_cast<int>(eigen_indices.size()) < 5; ++k)
            if (spec.eigenvalues[k] > spec.zero_threshold()) eigen_indices.push_back(k);
        double worst = 0.0;
        json entries = json::array();
        for (int pair = 0; pair < 20; ++pair) {
            const Eigen::VectorXd psi = random_boundary_vector(eng, setup.n_boundary());
            const PerturbationDirection dir =
                sample_random_conformal(c.perturbation.seed + 500 + pair, 3, 1.0);
            for (int k : eigen_indices) {
                const DensityIdentityResult r = density_identity_residual(
                    setup, spec.eigenvalues[k], spec.eigenvectors.col(k), psi, dir.sigma);
                const double rel = r.residual / std::max(r.scale, 1e-300);
                worst = std::max(worst, rel);
                if (pair < 3)
                    entries.push_back({{"pair", pair},
                                       {"eigen_index", k},
                                       {"lhs", r.lhs},
                                       {"rhs", r.rhs},
                                       {"residual", r.residual}});
            }
        }
        report["density_identity"] = {{"sample_entries", entries},
                                      {"worst_rel", worst},
                                      {"tolerance", c.tol.density_rel}};
        ok = ok && worst <= c.tol.density_rel;
    }

    // (d) zero direction sanity.
    {
        const VariationResult var =
            dtn_variation(setup, PerturbationDirection::zero(), spec.eigenvectors.col(count - 1));
        report["zero_direction_max"] = var.dLf.cwiseAbs().maxCoeff();
        ok = ok && report["zero_direction_max"].get<double>() <= 1e-12;
    }

    report["mesh_h"] = mesh.h_max;
    report["metric_descriptor"] = metric.describe();
    report["seed"] = c.perturbation.seed;
    report["pass"] = ok;
    write_json_file(ctx.path("variation_check.json"), report);
    return ok ? 0 : 1;
}

int run_split(const RunContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    const MetricField metric = c.metric.build();
    Mesh mesh = c.domain.build();
    for (int level = 0; level < c.refine_levels; ++level) mesh = refine(mesh);

    const PerturbationDirection h = c.perturbation.build();
    const SplitReport report = splitting_experiment(mesh, metric, c.cluster_index, h, c.steps,
                                                    c.eigen_count, c.tol.gap_tol);

    json j;
    j["cluster_index"] = report.cluster_index;
    j["cluster"] = {report.cluster.first, report.cluster.second};
    j["base_lambda"] = report.base_lambda;
    j["direction"] = report.direction;
    j["steps"] = report.steps;
    j["step_skipped"] = report.step_skipped;
    j["predicted_slopes"] = std::vector<double>(
        report.predicted_slopes.data(),
        report.predicted_slopes.data() + report.predicted_slopes.size());
    json measured = json::array(), residuals = json::array();
    for (int i = 0; i < report.measured.rows(); ++i) {
        std::vector<double> row(report.measured.cols()), rrow(report.residuals.cols());
        for (int k = 0; k < report.measured.cols(); ++k) {
            row[k] = report.measured(i, k);
            rrow[k] = report.residuals(i, k);
        }
        measured.push_back(row);
        residuals.push_back(rrow);
    }
    j["measured"] = measured;
    j["residuals"] = residuals;
    j["fitted_orders"] = report.fitted_orders;
    j["gap_over_t"] = report.gap_over_t;
    j["mesh_h"] = mesh.h_max;
    j["seed"] = c.perturbation.seed;
    write_json_file(ctx.path("split.json"), j);

    {
        std::string csv = "t";
        for (int i = 0; i < report.measured.rows(); ++i) csv += ",branch_" + std::to_string(i);
        for (int i = 0; i < report.measured.rows(); ++i) csv += ",predicted_" + std::to_string(i);
        csv += ",gap_over_t\n";
        for (size_t k = 0; k < report.steps.size(); ++k) {
            csv += fmt(report.steps[k]);
            for (int i = 0; i < report.measured.rows(); ++i)
                csv += "," + fmt(report.measured(i, k));
            for (int i = 0; i < report.measured.rows(); ++i)
                csv += "," +
                       fmt(report.base_lambda + report.steps[k] * report.predicted_slopes[i]);
            csv += "," + fmt(report.gap_over_t[k]) + "\n";
        }
        write_text_file(ctx.path("branches.csv"), csv);
    }

    {
        LinePlot plot;
        plot.title = "Eigenvalue branches under metric perturbation";
        plot.xlabel = "t";
        plot.ylabel = "lambda";
        for (int i = 0; i < report.measured.rows(); ++i) {
            PlotSeries meas;
            PlotSeries pred;
            meas.label = "measured " + std::to_string(i);
            pred.label = "first order " + std::to_string(i);
            pred.color = "#999999";
            meas.markers = true;
            meas.x.push_back(0.0);
            meas.y.push_back(report.base_lambda);
            pred.x.push_back(0.0);
            pred.y.push_back(report.base_lambda);
            for (size_t k = 0; k < report.steps.size(); ++k) {
                if (report.step_skipped[k]) continue;
                meas.x.push_back(report.steps[k]);
                meas.y.push_back(report.measured(i, k));
                pred.x.push_back(report.steps[k]);
                pred.y.push_back(report.base_lambda +
                                 report.steps[k] * report.predicted_slopes[i]);
            }
            plot.series.push_back(pred);
            plot.series.push_back(meas);
        }
        write_svg_file(ctx.path("branches.svg"), plot);
    }
    return 0;
}

struct ScanTrialResult {
    TrialRecord record;
    std::string sigma_descriptor;
    ScanReport nodal;
    ScanReport morse;
    std::vector<WucpResult> wucp;  // per trace
    bool wucp_flagged = false;
    std::vector<BoundaryTrace> traces;  // kept for the first trial's plot
};

ScanTrialResult run_scan_trial(const Mesh& mesh, const MetricField& base,
                               const ExperimentConfig& c, std::uint64_t seed_base, int trial,
                               bool with_wucp) {
    ScanTrialResult out;
    const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(trial);
    const PerturbationDirection dir =
        sample_random_conformal(seed, c.perturbation.modes, c.perturbation.amplitude);
    out.sigma_descriptor = dir.describe();
    const MetricField g = base.perturbed(dir, 1.0);

    const SteklovSetup setup(mesh, g, c.quad_order);
    const int m = c.scan_m;
    const int count = std::min(m + 3, setup.n_boundary());
    const DtnOperator dtn = dtn_schur(setup.solver, setup.Mb);
    const SteklovSpectrum spec = steklov_eigs(dtn, count, c.tol.gap_tol);

    TrialRecord& rec = out.record;
    rec.trial = trial;
    rec.seed = seed;
    rec.eigenvalues = spec.eigenvalues;
    rec.clusters = spec.clusters;
    rec.all_simple = true;
    for (const auto& [b, e] : spec.clusters)
        if (e - b > 1 && b <= m && e > 1) rec.all_simple = false;
    rec.min_rel_gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 <= m && i + 1 < spec.eigenvalues.size(); ++i)
        rec.min_rel_gap = std::min(rec.min_rel_gap,
                                   (spec.eigenvalues[i + 1] - spec.eigenvalues[i]) /
                                       std::max(1.0, spec.eigenvalues[i]));

    // Traces of the first m non-constant eigenfunctions, sup-normalized per
    // eigenfunction (jointly over loops).
    int taken = 0;
    for (int k = 0; k < spec.eigenvalues.size() && taken < m; ++k) {
        if (spec.eigenvalues[k] <= spec.zero_threshold()) continue;
        std::vector<BoundaryTrace> group = extract_trace(spec, k, mesh, g);
        sup_normalize(group);
        for (BoundaryTrace& tr : group) out.traces.push_back(std::move(tr));
        ++taken;
    }

    out.nodal = nodal_regularity_scan(out.traces, c.tol.zero_tol, c.tol.deriv_tol);
    out.morse = morse_scan(out.traces, c.tol.deriv_tol, c.tol.second_deriv_tol);
    if (with_wucp) {
        for (const BoundaryTrace& tr : out.traces) {
            out.wucp.push_back(wucp_check(tr, c.tol.arc_fraction, c.tol.vanish_tol));
            out.wucp_flagged = out.wucp_flagged || out.wucp.back().flagged;
        }
    }
    return out;
}

json scan_trial_to_json(const ScanTrialResult& r, bool with_wucp) {
    json j;
    j["trial"] = r.record.trial;
    j["seed"] = r.record.seed;
    j["sigma"] = r.sigma_descriptor;
    j["eigenvalues"] = std::vector<double>(
        r.record.eigenvalues.data(), r.record.eigenvalues.data() + r.record.eigenvalues.size());
    json clusters = json::array();
    for (const auto& [b, e] : r.record.clusters) clusters.push_back({b, e});
    j["clusters"] = clusters;
    j["all_simple"] = r.record.all_simple;
    j["min_rel_gap"] = r.record.min_rel_gap;
    j["nodal_flags"] = r.nodal.total_flags;
    j["morse_flags"] = r.morse.total_flags;
    j["min_abs_d1_at_zeros"] = r.nodal.min_abs_d1_at_zeros;
    j["min_abs_d2_at_criticals"] = r.morse.min_abs_d2_at_criticals;
    if (with_wucp) {
        j["wucp_flagged"] = r.wucp_flagged;
        double max_arc = 0.0;
        for (const WucpResult& w : r.wucp)
            max_arc = std::max(max_arc, w.max_arc_length / std::max(w.loop_length, 1e-300));
        j["max_vanishing_arc_fraction"] = max_arc;
    }
    return j;
}

int run_scan_like(const RunContext& ctx, bool with_wucp) {
    const ExperimentConfig& c = ctx.config;
    const MetricField base = c.metric.build();
    Mesh mesh = c.domain.build();
    for (int level = 0; level < c.refine_levels; ++level) mesh = refine(mesh);

    const std::uint64_t seed_base = c.perturbation.seed;
    std::vector<ScanTrialResult> results(c.trials);
    {
        const int threads = std::max(1, ctx.threads);
        if (threads == 1) {
            for (int i = 0; i < c.trials; ++i)
                results[i] = run_scan_trial(mesh, base, c, seed_base, i, with_wucp);
        } else {
            std::atomic<int> next{0};
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t)
                pool.emplace_back([&] {
                    for (int i = next.fetch_add(1); i < c.trials; i = next.fetch_add(1))
                        results[i] = run_scan_trial(mesh, base, c, seed_base, i, with_wucp);
                });
            for (auto& th : pool) th.join();
        }
    }

    // trials.jsonl (one record per trial, seed order)
    {
        std::string out;
        for (const ScanTrialResult& r : results)
            out += scan_trial_to_json(r, with_wucp).dump() + "\n";
        write_text_file(ctx.path(with_wucp ? "wucp.jsonl" : "trials.jsonl"), out);
    }

    // aggregate.csv: one row per (trial, eigenfunction)
    bool any_failure = false;
    {
        std::string csv =
            "trial,eigen_index,lambda,cluster_size,min_rel_gap,min_abs_d1_at_zeros,"
            "min_abs_d2_at_criticals,nodal_flags,morse_flags";
        if (with_wucp) csv += ",wucp_flagged";
        csv += "\n";
        for (const ScanTrialResult& r : results) {
            // per-eigenfunction rows follow the trace entries grouped by index
            std::set<int> eigen_indices;
            for (const auto& e : r.nodal.entries) eigen_indices.insert(e.eigen_index);
            for (int k : eigen_indices) {
                double min_d1 = std::numeric_limits<double>::infinity();
                double min_d2 = min_d1;
                int nodal_flags = 0, morse_flags = 0;
                double lambda = 0.0;
                for (const auto& e : r.nodal.entries)
                    if (e.eigen_index == k) {
                        lambda = e.lambda;
                        nodal_flags += e.flags;
                        for (const auto& z : e.zeros) min_d1 = std::min(min_d1, z.abs_d1);
                    }
                for (const auto& e : r.morse.entries)
                    if (e.eigen_index == k) {
                        morse_flags += e.flags;
                        for (const auto& cr : e.criticals) min_d2 = std::min(min_d2, cr.abs_d2);
                    }
                int cluster_size = 1;
                for (const auto& [b, e2] : r.record.clusters)
                    if (k >= b && k < e2) cluster_size = e2 - b;
                csv += std::to_string(r.record.trial) + "," + std::to_string(k) + "," +
                       fmt(lambda) + "," + std::to_string(cluster_size) + "," +
                       fmt(r.record.min_rel_gap) + "," + fmt(min_d1) + "," + fmt(min_d2) + "," +
                       std::to_string(nodal_flags) + "," + std::to_string(morse_flags);
                if (with_wucp) {
                    bool flagged = false;
                    for (size_t t2 = 0; t2 < r.traces.size(); ++t2)
                        if (r.traces[t2].eigen_index == k && t2 < r.wucp.size())
                            flagged = flagged || r.wucp[t2].flagged;
                    csv += flagged ? ",1" : ",0";
                }
                csv += "\n";
            }
            const bool fail = !r.record.all_simple || r.nodal.total_flags > 0 ||
                              r.morse.total_flags > 0 || (with_wucp && r.wucp_flagged);
            if (fail) {
                any_failure = true;
                write_json_file(ctx.path("dump_trial_" + std::to_string(r.record.trial) + ".json"),
                                scan_trial_to_json(r, with_wucp));
            }
        }
        write_text_file(ctx.path(with_wucp ? "wucp.csv" : "aggregate.csv"), csv);
    }

    // plot of the first trial's first eigenfunction trace with marked features
    if (!results.empty() && !results[0].traces.empty()) {
        const BoundaryTrace& tr = results[0].traces[0];
        LinePlot plot;
        plot.title = "Boundary trace (trial 0, first non-constant eigenfunction)";
        plot.xlabel = "arclength s";
        plot.ylabel = "f";
        PlotSeries f;
        f.x = tr.s;
        f.y = tr.values;
        f.label = "trace";
        plot.series.push_back(f);
        PlotSeries zeros, crits;
        zeros.line = false;
        zeros.markers = true;
        zeros.color = "#b2421f";
        zeros.label = "zeros";
        crits.line = false;
        crits.markers = true;
        crits.color = "#2e8540";
        crits.label = "critical points";
        for (const auto& e : results[0].nodal.entries)
            if (e.trace == 0)
                for (const auto& z : e.zeros) {
                    zeros.x.push_back(z.s);
                    zeros.y.push_back(0.0);
                }
        for (const auto& e : results[0].morse.entries)
            if (e.trace == 0)
                for (const auto& cr : e.criticals) {
                    crits.x.push_back(cr.s);
                    crits.y.push_back(0.0);
                }
        plot.series.push_back(zeros);
        plot.series.push_back(crits);
        write_svg_file(ctx.path("trace0.svg"), plot);
    }

    return any_failure ? 1 : 0;
}

int run_oracle(const RunContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    std::string csv;
    if (c.domain.kind == DomainConfig::Kind::Disk) {
        csv = "index,lambda,k,multiplicity\n";
        const std::vector<double> eig = disk_steklov_oracle(c.domain.radius, c.eigen_count);
        for (size_t i = 0; i < eig.size(); ++i) {
            const int k = static_cast<int>((i + 1) / 2);
            csv += std::to_string(i) + "," + fmt(eig[i]) + "," + std::to_string(k) + "," +
                   (k == 0 ? "1" : "2") + "\n";
        }
    } else if (c.domain.kind == DomainConfig::Kind::Annulus) {
        csv = "lambda,k,multiplicity\n";
        for (const AnnulusMode& m :
             annulus_steklov_modes(c.domain.r_inner, c.domain.r_outer, c.eigen_count))
            csv += fmt(m.lambda) + "," + std::to_string(m.k) + "," +
                   std::to_string(m.multiplicity) + "\n";
    } else {
        throw ConfigError("oracle: domain must be disk or annulus");
    }
    write_text_file(ctx.path("oracle.csv"), csv);
    return 0;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    RunContext ctx;
    ctx.config = config;
    if (options.seed_override) ctx.config.perturbation.seed = *options.seed_override;
    ctx.out_dir = options.out_override.empty() ? config.output : options.out_override;
    ctx.threads = std::max(1, options.threads);
    ctx.verbose = options.verbose;

    fs::create_directories(ctx.out_dir);
    // Echo the effective config next to the artifacts for provenance.
    write_json_file(ctx.path("config.json"), config_to_json(ctx.config));

    if (ctx.config.experiment == "spectrum") return run_spectrum(ctx);
    if (ctx.config.experiment == "variation-check") return run_variation_check(ctx);
    if (ctx.config.experiment == "split") return run_split(ctx);
    if (ctx.config.experiment == "scan") return run_scan_like(ctx, false);
    if (ctx.config.experiment == "wucp") return run_scan_like(ctx, true);
    if (ctx.config.experiment == "oracle") return run_oracle(ctx);
    throw ConfigError("unknown experiment: " + ctx.config.experiment);
}

}  // namespace steklov
