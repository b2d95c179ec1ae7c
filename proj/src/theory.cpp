#include "dsm/theory.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace dsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> first_primes(int count) {
    std::vector<int> primes;
    for (int cand = 2; static_cast<int>(primes.size()) < count; ++cand) {
        bool is_prime = true;
        for (int p : primes) {
            if (p * p > cand) break;
            if (cand % p == 0) {
                is_prime = false;
                break;
            }
        }
        if (is_prime) primes.push_back(cand);
    }
    return primes;
}

double radical_inverse(int base, long index) {
    double result = 0.0, frac = 1.0 / base;
    while (index > 0) {
        result += (index % base) * frac;
        index /= base;
        frac /= base;
    }
    return result;
}

// Halton points mapped into the ball: Box-Muller pairs give the direction,
// one extra coordinate gives the radius with the correct volume density.
std::vector<Vec> ball_points(const Vec& center, double radius, int count, unsigned seed) {
    const Eigen::Index n = center.size();
    const int pair_dims = static_cast<int>(2 * ((n + 1) / 2));
    const auto primes = first_primes(pair_dims + 1);
    std::vector<Vec> points;
    points.reserve(count);
    const long offset = 17 + static_cast<long>(seed % 100003);
    for (int k = 0; k < count; ++k) {
        const long idx = offset + k;
        Vec dir(n);
        for (Eigen::Index i = 0; i < n; i += 2) {
            const double u1 = std::max(radical_inverse(primes[i], idx), 1e-16);
            const double u2 = radical_inverse(primes[i + 1], idx);
            const double mag = std::sqrt(-2.0 * std::log(u1));
            dir(i) = mag * std::cos(2.0 * M_PI * u2);
            if (i + 1 < n) dir(i + 1) = mag * std::sin(2.0 * M_PI * u2);
        }
        if (dir.norm() == 0.0) dir(0) = 1.0;
        dir.normalize();
        const double u = radical_inverse(primes[pair_dims], idx);
        const double r = radius * std::pow(std::max(u, 1e-16), 1.0 / static_cast<double>(n));
        points.push_back(center + r * dir);
    }
    return points;
}

double op_norm(const Mat& m, const GramMetric& dom, const GramMetric& cod) {
    return LinearMap(m, dom, cod).operator_norm();
}

double min_symmetric_eigenvalue_in_metric(const Mat& j, const GramMetric& dom) {
    const Mat gj = dom.matrix() * j;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (gj + gj.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Condition make_condition(const std::string& name, double lhs, double rhs) {
    return Condition{name, lhs, rhs, lhs <= rhs};
}

CertificateOutcome combine(const std::vector<Condition>& conds, bool degenerate) {
    for (const auto& c : conds)
        if (!c.pass) return CertificateOutcome::Fail;
    return degenerate ? CertificateOutcome::DegeneratePass : CertificateOutcome::Pass;
}

}  // namespace

const char* theorem_name(TheoremId id) {
    switch (id) {
        case TheoremId::Lemma21: return "lemma21";
        case TheoremId::ModifiedNewton: return "thm_modified_newton";
        case TheoremId::InverseFree: return "thm_inverse_free";
        case TheoremId::Regularized: return "thm_regularized";
        case TheoremId::CorollaryNoise: return "corollary_noise";
    }
    return "unknown";
}

const Condition* Certificate::find(const std::string& name) const {
    for (const auto& c : conditions)
        if (c.name == name) return &c;
    return nullptr;
}

std::optional<double> source_v_norm(const Problem& p, const Vec& x0) {
    if (!p.known_solution) return std::nullopt;
    const Vec b = *p.known_solution - x0;
    const LinearMap j0 = p.jacobian(x0);
    // Minimum-norm solution in the domain metric: substitute v = L^{-T} u and
    // take the pseudo-inverse of the metric-weighted matrix.
    Mat a = j0.matrix();
    Vec bt = b;
    if (!p.codomain_metric.is_identity()) {
        a = p.codomain_metric.chol_lower().transpose() * a;
        bt = p.codomain_metric.chol_lower().transpose() * bt;
    }
    if (!p.domain_metric.is_identity())
        a = p.domain_metric.chol_lower()
                .transpose()
                .triangularView<Eigen::Upper>()
                .solve<Eigen::OnTheRight>(a);
    Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(bt).norm();
}

ConstantEstimates estimate_constants(const Problem& p, const Vec& center, double radius,
                                     int samples, unsigned seed) {
    if (!(radius > 0.0) || samples < 2)
        throw std::invalid_argument("estimate_constants: radius > 0 and samples >= 2 required");

    ConstantEstimates est;
    est.center = center;
    est.radius = radius;
    est.samples = samples;
    est.seed = seed;

    const LinearMap j0 = p.jacobian(center);
    const double sigma_min0 = j0.smallest_singular_value();
    est.m1.value = sigma_min0 > 0.0 ? 1.0 / sigma_min0 : kInf;
    est.m1.analytic = true;  // exact SVD of the frozen Jacobian

    auto points = ball_points(center, radius, samples, seed);
    points.push_back(center);

    std::vector<Mat> jacs;
    jacs.reserve(points.size());
    for (const auto& x : points) jacs.push_back(p.jacobian_matrix(x));

    double m1_max = 0.0, c_min = kInf, m2_max = 0.0, cg_max = 0.0;
    const bool j0_invertible = sigma_min0 > 0.0;
    Eigen::FullPivLU<Mat> lu0(j0.matrix());
    for (size_t i = 0; i < points.size(); ++i) {
        LinearMap ji(jacs[i], p.domain_metric, p.codomain_metric);
        m1_max = std::max(m1_max, ji.operator_norm());
        const double smin = ji.smallest_singular_value();
        c_min = std::min(c_min, smin * smin);
        for (size_t k = i + 1; k < points.size(); ++k) {
            const double dx = p.domain_metric.norm(points[i] - points[k]);
            if (dx < 1e-14) continue;
            m2_max = std::max(m2_max,
                              op_norm(jacs[i] - jacs[k], p.domain_metric, p.codomain_metric) / dx);
        }
        if (j0_invertible) {
            const double dx0 = p.domain_metric.norm(points[i] - center);
            if (dx0 > 1e-14) {
                const Mat g = lu0.solve(jacs[i]);
                const Mat gmi = g - Mat::Identity(g.rows(), g.cols());
                cg_max = std::max(cg_max, op_norm(gmi, p.domain_metric, p.domain_metric) / dx0);
            }
        }
    }
    if (!j0_invertible) est.notes.push_back("F'(x0) singular: CG estimation skipped");

    est.M1.value = m1_max;
    est.M2.value = m2_max;
    est.c.value = c_min;
    est.CG.value = cg_max;

    if (p.constants_hint) {
        const auto& h = *p.constants_hint;
        if (h.M1) {
            est.M1.sampled = est.M1.value;
            est.M1.value = *h.M1;
            est.M1.analytic = true;
        }
        if (h.M2) {
            est.M2.sampled = est.M2.value;
            est.M2.value = *h.M2;
            est.M2.analytic = true;
        }
        if (h.CG) {
            est.CG.sampled = est.CG.value;
            est.CG.value = *h.CG;
            est.CG.analytic = true;
        }
    }

    if (p.kappa_min) est.kappa_min = p.kappa_min(center);
    est.v_norm = source_v_norm(p, center);
    return est;
}

Certificate certify_modified_newton(const Problem& p, const Vec& x0, const ConstantEstimates& est) {
    Certificate cert;
    cert.theorem = TheoremId::ModifiedNewton;
    cert.constants = est;

    const double m1 = est.m1.value;
    const double M2 = est.M2.value;
    const double f0 = p.residual_norm(x0);
    bool degenerate = false;

    if (!std::isfinite(m1)) {
        cert.notes.push_back("SingularOperator: F'(x0) is singular");
        cert.conditions.push_back(Condition{"(t3) m1 finite", kInf, 0.0, false});
        cert.overall = CertificateOutcome::Fail;
        return cert;
    }

    const double r_tilde = M2 > 0.0 ? 1.0 / (2.0 * M2 * m1) : kInf;
    const double r = 2.0 * m1 * f0;
    cert.derived["m1"] = m1;
    cert.derived["M2"] = M2;
    cert.derived["F0"] = f0;
    cert.derived["r_tilde"] = r_tilde;
    cert.derived["r"] = r;
    cert.derived["c1"] = 0.5;
    cert.derived["c2"] = m1;

    cert.conditions.push_back(make_condition("(t2) 4 M2 m1^2 ||F(x0)|| <= 1",
                                             4.0 * M2 * m1 * m1 * f0, 1.0));
    cert.conditions.push_back(make_condition("r <= r_tilde", r, r_tilde));
    if (M2 <= kM2Floor) {
        degenerate = true;
        cert.notes.push_back("M2-degenerate: r_tilde = +inf, conditions trivially satisfied");
    }
    cert.overall = combine(cert.conditions, degenerate);
    return cert;
}

Certificate certify_inverse_free(const Problem& p, const Vec& x0, const Mat& B0,
                                 ConstantEstimates est,
                                 const std::function<ConstantEstimates(double)>& reestimate) {
    Certificate cert;
    cert.theorem = TheoremId::InverseFree;

    const double w0 = op_norm(p.jacobian_matrix(x0) * B0 - Mat::Identity(p.n, p.n),
                              p.codomain_metric, p.codomain_metric);
    const double b0_norm = op_norm(B0, p.codomain_metric, p.domain_metric);
    const double gamma = (1.0 - w0) / 2.0;
    const double f0 = p.residual_norm(x0);

    auto compute_R = [&](const ConstantEstimates& e) {
        const double sigma = e.M1.value / e.c.value + b0_norm;
        const double R = e.M2.value > 0.0
                             ? gamma * e.c.value / (2.0 * e.M1.value * e.M2.value * sigma * sigma)
                             : kInf;
        return std::pair<double, double>(sigma, R);
    };

    auto [sigma, R] = compute_R(est);
    if (reestimate && std::isfinite(R) && R > 0.0) {
        // Ball fixed point: constants live on U(R, x0) while R is defined from
        // them; iterate twice and report both radii.
        double r_prev = R;
        for (int it = 0; it < 2; ++it) {
            est = reestimate(R);
            std::tie(sigma, R) = compute_R(est);
            if (!std::isfinite(R) || R <= 0.0) break;
        }
        std::ostringstream os;
        os << "ball fixed point: R first pass " << r_prev << ", final " << R;
        cert.notes.push_back(os.str());
        if (std::isfinite(R) && std::isfinite(r_prev) &&
            std::abs(R - r_prev) > 0.5 * std::max(R, r_prev))
            cert.notes.push_back("certificate ball unstable");
    }
    cert.constants = est;

    const double M1 = est.M1.value, M2 = est.M2.value, c = est.c.value;
    cert.derived["gamma"] = gamma;
    cert.derived["sigma"] = sigma;
    cert.derived["R"] = R;
    cert.derived["c"] = c;
    cert.derived["M1"] = M1;
    cert.derived["M2"] = M2;
    cert.derived["W0_norm"] = w0;
    cert.derived["B0_norm"] = b0_norm;
    cert.derived["F0"] = f0;

    Condition gamma_pos{"gamma > 0", 0.0, gamma, gamma > 0.0};
    cert.conditions.push_back(gamma_pos);
    if (!(gamma > 0.0)) cert.notes.push_back("B0 too far from [F'(x0)]^{-1}");

    const double tt4_lhs = c > 0.0 ? std::sqrt(2.0 * M1 * M2 / c * sigma * sigma * sigma * f0) : kInf;
    cert.conditions.push_back(make_condition("(tt4) sqrt(2 M1 M2 sigma^3 ||F(x0)|| / c) <= gamma",
                                             tt4_lhs, gamma));

    bool degenerate = false;
    if (M2 <= kM2Floor) {
        degenerate = true;
        cert.notes.push_back("M2-degenerate: R = +inf");
    }
    cert.notes.push_back(std::abs(c - gamma) < 1e-12 ? "W-bound branch: (tt7), c = gamma"
                                                     : "W-bound branch: (tt7a), c != gamma");
    cert.overall = combine(cert.conditions, degenerate);
    return cert;
}

Certificate certify_regularized(const Problem& p, const Vec& x0, const EpsilonSchedule& s,
                                const ConstantEstimates& est) {
    Certificate cert;
    cert.theorem = TheoremId::Regularized;
    cert.constants = est;
    bool degenerate = false;

    double M2 = est.M2.value;
    const double CG = est.CG.value;
    if (M2 < kM2Floor) {
        M2 = kM2Floor;
        degenerate = true;
        cert.notes.push_back(
            "M2-degenerate; Theorem bound formally vacuous, regularized flow still runs");
    }

    const auto validity = validate(s);
    Condition sched{"schedule validity (assumption 1)", std::abs(s.deps(0.0)), s.eps(0.0),
                    validity.all_pass()};
    cert.conditions.push_back(sched);
    for (const auto& prop : validity.properties)
        if (!prop.pass) cert.notes.push_back("schedule fails: " + prop.name + " at " + prop.witness);

    const double min_eig = min_symmetric_eigenvalue_in_metric(p.jacobian_matrix(x0), p.domain_metric);
    cert.conditions.push_back(Condition{"(3.4) (F'(x0) h, h) >= 0", -min_eig, 1e-12,
                                        -min_eig <= 1e-12});
    if (p.name.find("symmetrized") != std::string::npos) cert.notes.push_back("symmetrized");

    const double e0 = s.eps(0.0);
    const double de0 = std::abs(s.deps(0.0));
    const double rho_val = (e0 - de0) / (M2 + CG * e0);
    cert.derived["rho"] = rho_val;
    cert.derived["eps0"] = e0;
    cert.derived["deps0"] = de0;
    cert.derived["bound_coeff"] = rho_val / e0;
    cert.derived["C2"] = M2 * (e0 - de0) / (e0 * (M2 + CG * e0));
    cert.derived["M2"] = M2;
    cert.derived["CG"] = CG;

    if (p.known_solution) {
        const double dist = p.domain_metric.norm(x0 - *p.known_solution);
        cert.conditions.push_back(Condition{"||x0 - x_hat|| < rho", dist, rho_val, dist < rho_val});
    }

    if (est.v_norm) {
        const auto c36 = check_condition_36(s, est.M2.value, CG, *est.v_norm);
        cert.conditions.push_back(Condition{"(3.6)", c36.rhs, c36.lhs, c36.pass});
        cert.derived["v_norm"] = *est.v_norm;
        if (c36.degenerate) degenerate = true;
    } else {
        cert.notes.push_back("v_norm unavailable: source condition (3.6) not checked");
        degenerate = true;
    }

    if (est.kappa_min) {
        cert.derived["kappa_min"] = *est.kappa_min;
        cert.conditions.push_back(
            Condition{"kappa_min >= 1e-8", 1e-8, *est.kappa_min, *est.kappa_min >= 1e-8});
        if (*est.kappa_min < 1e-8)
            cert.notes.push_back("kappa degenerates at some node; certificate refused");
    }

    cert.overall = combine(cert.conditions, degenerate);
    return cert;
}

Certificate certify_noise(const Problem& p, const Vec& x0, const EpsilonSchedule& s,
                          const ConstantEstimates& est, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("certify_noise: delta must be positive");
    Certificate cert = certify_regularized(p, x0, s, est);
    cert.theorem = TheoremId::CorollaryNoise;

    if (!est.v_norm || !(*est.v_norm > 0.0)) {
        cert.notes.push_back("v_norm unavailable or zero: stopping time undefined");
        cert.overall = CertificateOutcome::Fail;
        return cert;
    }
    const double v = *est.v_norm;
    const auto c36d = check_condition_36d(s, est.M2.value, est.CG.value, v);
    cert.conditions.push_back(Condition{"(3.6d)", c36d.rhs, c36d.lhs, c36d.pass});

    const auto st = stopping_time(s, delta, v);
    cert.derived["tau_delta"] = st.tau;
    cert.derived["delta"] = delta;
    cert.derived["bound_c4"] = cert.derived["rho"] * std::sqrt(delta) / (s.eps(0.0) * std::sqrt(v));
    if (st.noise_dominates) cert.notes.push_back("noise dominates: tau_delta = 0");

    bool degenerate = cert.overall == CertificateOutcome::DegeneratePass;
    cert.overall = combine(cert.conditions, degenerate);
    return cert;
}

namespace {

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                            double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0) throw std::runtime_error("gronwall_bound: quadrature did not converge");
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double gronwall_bound(const std::function<double(double)>& zeta,
                      const std::function<double(double)>& g_norm, double v0_norm, double t) {
    if (t < 0.0) throw std::invalid_argument("gronwall_bound: t must be >= 0");
    if (t == 0.0) return v0_norm;
    const double tol = 1e-10;
    auto integral_zeta = [&](double s) { return adaptive_simpson(zeta, 0.0, s, tol); };
    const double it = integral_zeta(t);
    // integrand g(s) e^{I(s) - I(t)} stays bounded by g for positive zeta.
    auto integrand = [&](double s) { return g_norm(s) * std::exp(integral_zeta(s) - it); };
    return adaptive_simpson(integrand, 0.0, t, tol) + v0_norm * std::exp(-it);
}

namespace {

struct BoundColumn {
    std::string name;
    std::function<double(const Sample&)> bound;     // theorem bound at the sample
    std::function<std::optional<double>(const Sample&)> observed;
    bool fills_res = false;
    bool fills_err = false;
};

}  // namespace

bool BoundReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

BoundReport check_bounds(Trajectory& traj, const Certificate& cert) {
    BoundReport rep;
    rep.certified = cert.passed();
    if (!rep.certified) rep.notes.push_back("uncertified; bounds informational");

    auto derived = [&](const std::string& key) -> std::optional<double> {
        auto it = cert.derived.find(key);
        if (it == cert.derived.end()) return std::nullopt;
        return it->second;
    };

    std::vector<BoundColumn> columns;
    const auto res_of = [](const Sample& s) { return std::optional<double>(s.res_norm); };
    const auto err_of = [](const Sample& s) { return s.err_norm; };
    const auto w_of = [](const Sample& s) { return s.w_norm; };

    switch (cert.theorem) {
        case TheoremId::Lemma21: {
            const double f0 = derived("F0").value_or(0.0);
            const double c1 = derived("c1").value_or(0.5);
            const double r = derived("r").value_or(0.0);
            columns.push_back({"(ch6) ||F(x(t))|| <= ||F(x0)|| e^{-c1 t}",
                               [f0, c1](const Sample& s) { return f0 * std::exp(-c1 * s.t); },
                               res_of, true, false});
            columns.push_back({"(ch5) ||x(t)-x_hat|| <= r e^{-c1 t}",
                               [r, c1](const Sample& s) { return r * std::exp(-c1 * s.t); },
                               err_of, false, true});
            break;
        }
        case TheoremId::ModifiedNewton: {
            const double f0 = derived("F0").value_or(0.0);
            const double m1 = derived("m1").value_or(0.0);
            columns.push_back({"(t6) ||F(x(t))|| <= ||F(x0)|| e^{-t/2}",
                               [f0](const Sample& s) { return f0 * std::exp(-0.5 * s.t); },
                               res_of, true, false});
            columns.push_back({"(t5) ||x(t)-x_hat|| <= 2 m1 ||F(x0)|| e^{-t/2}",
                               [f0, m1](const Sample& s) {
                                   return 2.0 * m1 * f0 * std::exp(-0.5 * s.t);
                               },
                               err_of, false, true});
            break;
        }
        case TheoremId::InverseFree: {
            const double f0 = derived("F0").value_or(0.0);
            const double gamma = derived("gamma").value_or(0.0);
            const double sigma = derived("sigma").value_or(0.0);
            const double c = derived("c").value_or(0.0);
            const double M2 = derived("M2").value_or(0.0);
            const double w0 = derived("W0_norm").value_or(0.0);
            columns.push_back({"(tt6) ||F(x(t))|| <= ||F(x0)|| e^{-gamma t}",
                               [f0, gamma](const Sample& s) { return f0 * std::exp(-gamma * s.t); },
                               res_of, true, false});
            columns.push_back({"(tt5) ||x(t)-x_hat|| <= sigma ||F(x0)||/gamma e^{-gamma t}",
                               [f0, gamma, sigma](const Sample& s) {
                                   return sigma * f0 / gamma * std::exp(-gamma * s.t);
                               },
                               err_of, false, true});
            if (std::abs(c - gamma) < 1e-12) {
                columns.push_back({"(tt7) ||W(t)|| bound, c = gamma",
                                   [M2, f0, sigma, w0, c](const Sample& s) {
                                       return (M2 * f0 * sigma * sigma * s.t + w0) *
                                              std::exp(-c * s.t);
                                   },
                                   w_of, false, false});
            } else {
                const double amp = M2 * f0 * sigma * sigma / std::abs(c - gamma) + w0;
                const double rate = std::min(gamma, c);
                columns.push_back({"(tt7a) ||W(t)|| bound, c != gamma",
                                   [amp, rate](const Sample& s) {
                                       return amp * std::exp(-rate * s.t);
                                   },
                                   w_of, false, false});
            }
            break;
        }
        case TheoremId::Regularized:
        case TheoremId::CorollaryNoise: {
            const double coeff = derived("bound_coeff").value_or(0.0);
            columns.push_back({"(3.6') ||x(t)-x_hat|| <= (rho/eps(0)) eps(t)",
                               [coeff](const Sample& s) {
                                   return s.eps ? coeff * *s.eps
                                                : std::numeric_limits<double>::quiet_NaN();
                               },
                               err_of, false, true});
            break;
        }
    }

    const double tol = 1.0 + 1e-6;
    for (const auto& col : columns) {
        BoundCheck chk;
        chk.name = col.name;
        bool any = false;
        for (auto& s : traj.samples) {
            const double bound = col.bound(s);
            if (!std::isfinite(bound)) continue;
            if (col.fills_res) s.bound_res = bound;
            if (col.fills_err) s.bound_err = bound;
            const auto obs = col.observed(s);
            if (!obs) continue;
            any = true;
            const double ratio = bound > 0.0 ? *obs / bound : (*obs > 0.0 ? kInf : 1.0);
            if (ratio > chk.max_ratio) {
                chk.max_ratio = ratio;
                chk.worst_time = s.t;
            }
        }
        if (!any) {
            chk.note = "missing column; partial report";
            chk.pass = true;
        } else {
            chk.pass = chk.max_ratio <= tol;
        }
        rep.checks.push_back(chk);
    }
    return rep;
}

DecayFit fit_decay(const Trajectory& traj, TrajectoryColumn column) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : traj.samples) {
        std::optional<double> v;
        switch (column) {
            case TrajectoryColumn::Residual: v = s.res_norm; break;
            case TrajectoryColumn::Error: v = s.err_norm; break;
            case TrajectoryColumn::BNorm: v = s.b_norm; break;
            case TrajectoryColumn::WNorm: v = s.w_norm; break;
        }
        if (v && *v > 0.0) pts.emplace_back(s.t, std::log(*v));
    }
    if (pts.size() < 5) throw std::runtime_error("fit_decay: fewer than 5 usable samples");

    const size_t begin = pts.size() / 2;  // final half of the usable samples
    const size_t m = pts.size() - begin;
    double st = 0, sv = 0, stt = 0, stv = 0;
    for (size_t i = begin; i < pts.size(); ++i) {
        st += pts[i].first;
        sv += pts[i].second;
        stt += pts[i].first * pts[i].first;
        stv += pts[i].first * pts[i].second;
    }
    const double denom = m * stt - st * st;
    DecayFit fit;
    fit.t_begin = pts[begin].first;
    fit.t_end = pts.back().first;
    if (std::abs(denom) < 1e-30) {
        fit.rate = 0.0;
        fit.amplitude = std::exp(sv / m);
        return fit;
    }
    const double slope = (m * stv - st * sv) / denom;
    const double intercept = (sv - slope * st) / m;
    fit.rate = -slope;
    fit.amplitude = std::exp(intercept);
    double ss = 0.0;
    for (size_t i = begin; i < pts.size(); ++i) {
        const double r = pts[i].second - (intercept + slope * pts[i].first);
        ss += r * r;
    }
    fit.rms = std::sqrt(ss / m);
    return fit;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::string certificate_report(const Certificate& cert) {
    std::ostringstream os;
    os << "theorem: " << theorem_name(cert.theorem) << "\n";
    os << "overall: "
       << (cert.overall == CertificateOutcome::Pass
               ? "PASS"
               : cert.overall == CertificateOutcome::DegeneratePass ? "DEGENERATE-PASS" : "FAIL")
       << "\n";
    for (const auto& [k, v] : cert.derived) os << k << ": " << fmt(v) << "\n";
    for (const auto& c : cert.conditions)
        os << c.name << ": LHS=" << fmt(c.lhs) << " RHS=" << fmt(c.rhs)
           << " slack=" << fmt(c.slack()) << (c.pass ? " [PASS]" : " [FAIL]") << "\n";
    for (const auto& n : cert.notes) os << "note: " << n << "\n";
    return os.str();
}

std::string bound_report_text(const BoundReport& rep) {
    std::ostringstream os;
    os << "certified: " << (rep.certified ? "yes" : "no") << "\n";
    for (const auto& c : rep.checks)
        os << c.name << ": max_ratio=" << fmt(c.max_ratio) << " worst_t=" << fmt(c.worst_time)
           << (c.pass ? " [PASS]" : " [FAIL]") << (c.note.empty() ? "" : " (" + c.note + ")")
           << "\n";
    for (const auto& n : rep.notes) os << "note: " << n << "\n";
    return os.str();
}

}  // namespace dsm
