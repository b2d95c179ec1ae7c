#include "dsm/cli.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dsm/flow.hpp"
#include "dsm/integrate.hpp"
#include "dsm/problem.hpp"
#include "dsm/schedule.hpp"
#include "dsm/theory.hpp"

namespace dsm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Vec vec_from_json(const json& j) {
    if (j.is_number()) return Vec::Constant(1, j.get<double>());
    Vec v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

Mat mat_from_json(const json& j) {
    const size_t rows = j.size();
    const size_t cols = j.at(0).size();
    Mat m(rows, cols);
    for (size_t i = 0; i < rows; ++i)
        for (size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    return m;
}

// Named kernels and nonlinearities for integral problems configured in JSON.
std::function<double(double, double)> named_kernel(const std::string& name) {
    if (name == "exp_ts") return [](double t, double s) { return std::exp(t * s); };
    if (name == "constant") return [](double, double) { return 1.0; };
    if (name == "zero") return [](double, double) { return 0.0; };
    throw ConfigError("problem.kernel: unknown kernel '" + name + "'");
}

struct Nonlinearity {
    std::function<double(double, double)> g;
    std::function<double(double, double)> gu;
};

Nonlinearity named_nonlinearity(const std::string& name) {
    if (name == "cubic")  // g(s,u) = u + u^3/3, g_u = 1 + u^2
        return {[](double, double u) { return u + u * u * u / 3.0; },
                [](double, double u) { return 1.0 + u * u; }};
    if (name == "linear") return {[](double, double u) { return u; }, [](double, double) { return 1.0; }};
    throw ConfigError("problem.nonlinearity: unknown nonlinearity '" + name + "'");
}

struct BuiltProblem {
    Problem problem;
    Vec x0;
};

BuiltProblem build_problem(const json& cfg) {
    if (!cfg.contains("problem")) throw ConfigError("config: missing 'problem' section");
    const json& pj = cfg.at("problem");
    const std::string name = pj.value("name", "");

    BuiltProblem out;
    if (name == "linear") {
        const Mat a = mat_from_json(pj.at("matrix"));
        const Vec shift = pj.contains("shift") ? vec_from_json(pj.at("shift")) : Vec::Zero(a.rows());
        GramMetric m = GramMetric::identity(a.rows());
        out.problem = make_linear_problem(LinearMap(a, m, m), shift);
        out.x0 = vec_from_json(pj.at("x0"));
    } else if (name == "polynomial") {
        const double beta = pj.value("beta", 1.0);
        out.x0 = vec_from_json(pj.at("x0"));
        out.problem = make_polynomial_problem(beta, out.x0(0));
    } else if (name == "integral") {
        IntegralEquationSpec spec;
        spec.nodes = pj.value("nodes", 41);
        spec.kernel = named_kernel(pj.value("kernel", "exp_ts"));
        const auto nl = named_nonlinearity(pj.value("nonlinearity", "cubic"));
        spec.nonlinearity = nl.g;
        spec.nonlinearity_du = nl.gu;
        const std::string metric = pj.value("metric", "identity");
        if (metric == "identity")
            spec.domain_metric = IntegralEquationSpec::Metric::Identity;
        else if (metric == "l2")
            spec.domain_metric = IntegralEquationSpec::Metric::L2Trapezoid;
        else if (metric == "h1")
            spec.domain_metric = IntegralEquationSpec::Metric::H1;
        else
            throw ConfigError("problem.metric: unknown metric '" + metric + "'");

        // Manufactured solution x_hat(s) = solution_scale * s; y = psi(x_hat).
        const double sol_scale = pj.value("solution_scale", 1.0);
        Vec xhat(spec.nodes);
        for (Eigen::Index i = 0; i < spec.nodes; ++i)
            xhat(i) = sol_scale * static_cast<double>(i) / static_cast<double>(spec.nodes - 1);
        Problem base = build_integral_problem(spec);
        spec.target = base.evaluate(xhat) + *base.data;  // psi(x_hat)
        out.problem = build_integral_problem(spec);
        out.problem.known_solution = xhat;

        const double x0_scale = pj.value("x0_scale", 1.0);
        out.x0 = x0_scale * xhat;
        if (pj.contains("x0")) out.x0 = vec_from_json(pj.at("x0"));
    } else {
        throw ConfigError("problem.name: unknown problem '" + name + "'");
    }

    if (pj.value("symmetrize", false)) out.problem = symmetrize(out.problem, out.x0);
    return out;
}

std::optional<EpsilonSchedule> build_schedule(const json& fj) {
    if (!fj.contains("schedule")) return std::nullopt;
    const json& sj = fj.at("schedule");
    const std::string kind = sj.value("kind", "exponential");
    if (kind == "exponential")
        return EpsilonSchedule::exponential(sj.value("a", 1.0), sj.value("b", 0.1));
    if (kind == "rational") return EpsilonSchedule::rational(sj.value("a", 1.0), sj.value("p", 1.0));
    throw ConfigError("flow.schedule.kind: unknown kind '" + kind + "'");
}

Mat build_B0(const json& fj, const Problem& p, const Vec& x0) {
    if (!fj.contains("B0")) return Mat::Zero(p.n, p.n);
    const json& bj = fj.at("B0");
    if (bj.is_number()) return bj.get<double>() * Mat::Identity(p.n, p.n);
    if (bj.is_array()) return mat_from_json(bj);
    const std::string spec = bj.get<std::string>();
    if (spec == "zero") return Mat::Zero(p.n, p.n);
    if (spec == "inverse_jacobian")
        return solve_shifted(p.jacobian(x0), 0.0, Mat(Mat::Identity(p.n, p.n)), "B0 construction");
    if (spec == "diag_inverse") {
        const Mat j = p.jacobian_matrix(x0);
        Vec d = j.diagonal();
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            if (std::abs(d(i)) < 1e-14) throw ConfigError("B0 diag_inverse: zero diagonal entry");
            d(i) = 1.0 / d(i);
        }
        return Mat(d.asDiagonal());
    }
    throw ConfigError("flow.B0: unknown spec '" + spec + "'");
}

IntegratorConfig build_integrator(const json& cfg) {
    IntegratorConfig ic;
    if (!cfg.contains("integrator")) return ic;
    const json& ij = cfg.at("integrator");
    const std::string method = ij.value("method", "rk45_adaptive");
    if (method == "rk4_fixed")
        ic.method = IntegratorConfig::Method::Rk4Fixed;
    else if (method == "rk45_adaptive")
        ic.method = IntegratorConfig::Method::Rk45Adaptive;
    else
        throw ConfigError("integrator.method: unknown method '" + method + "'");
    ic.step = ij.value("step", ic.step);
    ic.abs_tol = ij.value("abs_tol", ic.abs_tol);
    ic.rel_tol = ij.value("rel_tol", ic.rel_tol);
    ic.t_max = ij.value("t_max", ic.t_max);
    ic.record_every = ij.value("record_every", ic.record_every);
    if (ij.contains("residual_below")) ic.residual_below = ij.at("residual_below").get<double>();
    if (ij.contains("ball_exit")) {
        BallExitCriterion b;
        b.radius = ij.at("ball_exit").at("radius").get<double>();
        b.center = vec_from_json(ij.at("ball_exit").at("center"));
        ic.ball_exit = b;
    }
    return ic;
}

struct RunContext {
    json cfg;
    BuiltProblem built;         // clean problem
    Problem active;             // possibly noise-perturbed
    FlowKind kind = FlowKind::ModifiedNewton;
    std::optional<EpsilonSchedule> schedule;
    Mat B0;
    IntegratorConfig integrator;
    std::optional<NoiseModel> noise;
    double cert_radius = 1.0;
    int cert_samples = 32;
    unsigned cert_seed = 1;
    std::optional<double> v_norm_override;
    std::optional<double> lemma_c1, lemma_c2;
    fs::path out_dir = "out";
    bool want_csv = true;
    bool want_report = true;
};

RunContext parse_config(const json& cfg, const GlobalOptions& opts) {
    RunContext ctx;
    ctx.cfg = cfg;
    ctx.built = build_problem(cfg);
    ctx.active = ctx.built.problem;

    if (!cfg.contains("flow")) throw ConfigError("config: missing 'flow' section");
    const json& fj = cfg.at("flow");
    const auto kind = flow_kind_from_name(fj.value("kind", ""));
    if (!kind) throw ConfigError("flow.kind: unknown kind '" + fj.value("kind", "") + "'");
    ctx.kind = *kind;
    ctx.schedule = build_schedule(fj);
    ctx.B0 = build_B0(fj, ctx.built.problem, ctx.built.x0);
    ctx.integrator = build_integrator(cfg);

    if (cfg.contains("noise")) {
        NoiseModel nm;
        nm.delta = cfg.at("noise").value("delta", 0.0);
        nm.seed = cfg.at("noise").value("seed", 0u);
        if (opts.seed) nm.seed = *opts.seed;
        ctx.noise = nm;
    }

    if (cfg.contains("certificate")) {
        const json& cj = cfg.at("certificate");
        ctx.cert_radius = cj.value("radius", ctx.cert_radius);
        ctx.cert_samples = cj.value("samples", ctx.cert_samples);
        ctx.cert_seed = cj.value("seed", ctx.cert_seed);
        if (cj.contains("v_norm")) ctx.v_norm_override = cj.at("v_norm").get<double>();
        if (cj.contains("c1")) ctx.lemma_c1 = cj.at("c1").get<double>();
        if (cj.contains("c2")) ctx.lemma_c2 = cj.at("c2").get<double>();
    }
    if (opts.seed) ctx.cert_seed = *opts.seed;

    if (cfg.contains("outputs")) {
        const json& oj = cfg.at("outputs");
        ctx.out_dir = oj.value("dir", std::string("out"));
        if (oj.contains("formats")) {
            ctx.want_csv = ctx.want_report = false;
            for (const auto& f : oj.at("formats")) {
                if (f == "csv") ctx.want_csv = true;
                if (f == "report") ctx.want_report = true;
            }
        }
    }
    if (opts.out_dir) ctx.out_dir = *opts.out_dir;
    return ctx;
}

// Certificate for the flow kind actually being run.  The gradient / simple /
// gauss_newton kinds carry no theorem here; a lemma-2.1 certificate is built
// only when the user supplies c1 and c2.
Certificate make_certificate(RunContext& ctx, const FlowField& flow) {
    const Problem& p = flow.problem();  // regularized kind may have symmetrized
    const Vec& x0 = ctx.built.x0;

    auto estimate = [&](double radius) {
        ConstantEstimates e = estimate_constants(p, x0, radius, ctx.cert_samples, ctx.cert_seed);
        if (ctx.v_norm_override) e.v_norm = *ctx.v_norm_override;
        return e;
    };

    switch (ctx.kind) {
        case FlowKind::ModifiedNewton: {
            // Estimate on U(r_tilde, x0): bootstrap the radius once.
            ConstantEstimates est = estimate(ctx.cert_radius);
            const double m1 = est.m1.value;
            if (est.M2.value > 0.0 && std::isfinite(m1)) {
                const double r_tilde = 1.0 / (2.0 * est.M2.value * m1);
                if (r_tilde > 0.0 && std::isfinite(r_tilde) &&
                    std::abs(r_tilde - ctx.cert_radius) > 1e-6 * ctx.cert_radius)
                    est = estimate(r_tilde);
            }
            return certify_modified_newton(p, x0, est);
        }
        case FlowKind::InverseFree:
            return certify_inverse_free(p, x0, ctx.B0, estimate(ctx.cert_radius), estimate);
        case FlowKind::RegularizedModifiedNewton: {
            ConstantEstimates est = estimate(ctx.cert_radius);
            if (ctx.noise && ctx.noise->delta > 0.0)
                return certify_noise(p, x0, *flow.schedule(), est, ctx.noise->delta);
            return certify_regularized(p, x0, *flow.schedule(), est);
        }
        default: {
            Certificate cert;
            cert.theorem = TheoremId::Lemma21;
            if (ctx.lemma_c1 && ctx.lemma_c2) {
                const double f0 = p.residual_norm(x0);
                cert.derived["c1"] = *ctx.lemma_c1;
                cert.derived["c2"] = *ctx.lemma_c2;
                cert.derived["F0"] = f0;
                cert.derived["r"] = *ctx.lemma_c2 * f0 / *ctx.lemma_c1;
                cert.conditions.push_back(Condition{"c1 > 0", 0.0, *ctx.lemma_c1, *ctx.lemma_c1 > 0});
                cert.overall = *ctx.lemma_c1 > 0 ? CertificateOutcome::Pass : CertificateOutcome::Fail;
                cert.notes.push_back("user-supplied c1/c2; conditions (ch2)-(ch3) not verified");
            } else {
                cert.overall = CertificateOutcome::Fail;
                cert.notes.push_back("no certificate available for flow kind '" +
                                     std::string(flow_kind_name(ctx.kind)) +
                                     "'; supply certificate.c1/c2 for a lemma-2.1 check");
            }
            return cert;
        }
    }
}

json certificate_json(const Certificate& cert) {
    json j;
    j["theorem"] = theorem_name(cert.theorem);
    j["overall"] = cert.overall == CertificateOutcome::Pass
                       ? "pass"
                       : cert.overall == CertificateOutcome::DegeneratePass ? "degenerate-pass"
                                                                           : "fail";
    j["derived"] = cert.derived;
    j["conditions"] = json::array();
    for (const auto& c : cert.conditions)
        j["conditions"].push_back(
            {{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}});
    j["notes"] = cert.notes;
    json consts;
    consts["M1"] = cert.constants.M1.value;
    consts["M2"] = cert.constants.M2.value;
    consts["m1"] = cert.constants.m1.value;
    consts["c"] = cert.constants.c.value;
    consts["CG"] = cert.constants.CG.value;
    if (cert.constants.v_norm) consts["v_norm"] = *cert.constants.v_norm;
    if (cert.constants.kappa_min) consts["kappa_min"] = *cert.constants.kappa_min;
    consts["radius"] = cert.constants.radius;
    consts["samples"] = cert.constants.samples;
    consts["seed"] = cert.constants.seed;
    j["constants"] = consts;
    return j;
}

struct SolveResult {
    int exit_code = 0;
    Certificate cert;
    Trajectory traj;
    double err_at_end = std::numeric_limits<double>::quiet_NaN();
};

SolveResult run_solve(RunContext& ctx, bool write_outputs) {
    // Noise perturbs the data before the flow is built; the certificate and
    // the error curve use the clean problem's solution.
    std::optional<double> tau;
    if (ctx.noise && ctx.noise->delta > 0.0) {
        ctx.active = perturb_data(ctx.built.problem, *ctx.noise);
        ctx.active.known_solution = ctx.built.problem.known_solution;  // for err_norm tracking
    }

    FlowOptions fopts;
    fopts.schedule = ctx.schedule;
    fopts.B0 = ctx.B0;
    FlowField flow(ctx.kind, ctx.active, ctx.built.x0, fopts);

    // Certificates are evaluated on the clean problem.
    FlowField clean_flow(ctx.kind, ctx.built.problem, ctx.built.x0, fopts);
    Certificate cert = make_certificate(ctx, clean_flow);

    if (ctx.noise && ctx.noise->delta > 0.0) {
        auto it = cert.derived.find("tau_delta");
        if (it != cert.derived.end()) {
            tau = it->second;
            ctx.integrator.t_max = std::max(1e-12, std::min(ctx.integrator.t_max, *tau));
        }
    }

    Trajectory traj;
    if (ctx.kind == FlowKind::InverseFree) {
        traj = integrate_coupled(flow, CoupledState{ctx.built.x0, ctx.B0}, ctx.integrator);
    } else {
        traj = integrate_flow(flow, ctx.built.x0, ctx.integrator);
    }

    BoundReport bounds = check_bounds(traj, cert);

    SolveResult res;
    res.cert = cert;
    if (!traj.samples.empty() && traj.samples.back().err_norm)
        res.err_at_end = *traj.samples.back().err_norm;

    if (write_outputs) {
        fs::create_directories(ctx.out_dir);
        if (ctx.want_csv) {
            std::ofstream csv(ctx.out_dir / "trajectory.csv", std::ios::binary);
            write_csv(traj, csv);
        }
        if (ctx.want_report) {
            std::ofstream rep(ctx.out_dir / "certificate.txt");
            rep << certificate_report(cert);
            std::ofstream brep(ctx.out_dir / "bounds.txt");
            brep << bound_report_text(bounds);
            std::ofstream jrep(ctx.out_dir / "certificate.json");
            jrep << certificate_json(cert).dump(2) << "\n";
        }
    }
    res.traj = std::move(traj);

    if (!cert.passed())
        res.exit_code = 2;
    else if (!bounds.all_pass())
        res.exit_code = 2;
    else
        res.exit_code = 0;
    return res;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

// Applies one sweep override: keys are dotted paths into the config.
json apply_override(json cfg, const json& override_obj) {
    for (auto it = override_obj.begin(); it != override_obj.end(); ++it) {
        json* node = &cfg;
        std::string key = it.key();
        size_t pos;
        while ((pos = key.find('.')) != std::string::npos) {
            node = &(*node)[key.substr(0, pos)];
            key = key.substr(pos + 1);
        }
        (*node)[key] = it.value();
    }
    return cfg;
}

}  // namespace

int cmd_solve(const std::string& config_path, const GlobalOptions& opts) {
    try {
        RunContext ctx = parse_config(load_config(config_path), opts);
        SolveResult res = run_solve(ctx, true);
        std::cout << certificate_report(res.cert);
        std::cout << "stop_reason: " << stop_reason_name(res.traj.stop_reason) << "\n";
        std::cout << "samples: " << res.traj.samples.size() << "\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_check(const std::string& config_path, const GlobalOptions& opts) {
    try {
        RunContext ctx = parse_config(load_config(config_path), opts);
        FlowOptions fopts;
        fopts.schedule = ctx.schedule;
        fopts.B0 = ctx.B0;
        FlowField flow(ctx.kind, ctx.built.problem, ctx.built.x0, fopts);
        Certificate cert = make_certificate(ctx, flow);
        std::cout << certificate_report(cert);
        switch (cert.overall) {
            case CertificateOutcome::Pass: return 0;
            case CertificateOutcome::Fail: return 2;
            case CertificateOutcome::DegeneratePass: return 3;
        }
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_sweep(const std::string& config_path, const GlobalOptions& opts) {
    try {
        const json base = load_config(config_path);
        if (!base.contains("sweep") || !base.at("sweep").is_array() || base.at("sweep").empty())
            throw ConfigError("sweep: config must contain a nonempty 'sweep' list");

        struct Row {
            double delta = 0.0, tau = 0.0, err = 0.0, bound = 0.0;
            bool certified = false, violated = false;
        };
        const auto& overrides = base.at("sweep");
        std::vector<std::future<Row>> futures;
        for (size_t i = 0; i < overrides.size(); ++i) {
            json cfg = apply_override(base, overrides[i]);
            cfg.erase("sweep");
            futures.push_back(std::async(std::launch::async, [cfg, opts, i]() {
                GlobalOptions run_opts = opts;
                RunContext ctx = parse_config(cfg, run_opts);
                ctx.out_dir /= ("run_" + std::to_string(i));
                SolveResult res = run_solve(ctx, true);
                Row row;
                row.delta = ctx.noise ? ctx.noise->delta : 0.0;
                auto tau_it = res.cert.derived.find("tau_delta");
                row.tau = tau_it != res.cert.derived.end() ? tau_it->second : 0.0;
                row.err = res.err_at_end;
                auto b_it = res.cert.derived.find("bound_c4");
                row.bound = b_it != res.cert.derived.end() ? b_it->second : 0.0;
                row.certified = res.cert.passed();
                row.violated = row.certified && res.exit_code != 0;
                if (row.certified && row.bound > 0.0 && row.err > row.bound * (1.0 + 1e-6))
                    row.violated = true;
                return row;
            }));
        }

        fs::path out_dir = base.contains("outputs") ? fs::path(base.at("outputs").value("dir", "out"))
                                                    : fs::path("out");
        if (opts.out_dir) out_dir = *opts.out_dir;
        fs::create_directories(out_dir);
        std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
        summary << "delta,tau,err_at_tau,bound_c4,certified,violated\n";
        bool any_violation = false;
        char buf[256];
        for (auto& fut : futures) {
            Row row = fut.get();
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d,%d\n", row.delta, row.tau,
                          row.err, row.bound, row.certified ? 1 : 0, row.violated ? 1 : 0);
            summary << buf;
            if (row.certified && row.violated) any_violation = true;
        }
        return any_violation ? 2 : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dsm::cli
