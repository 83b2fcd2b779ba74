#include "nonsimplify/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "nonsimplify/errors.hpp"

namespace nonsimplify {

namespace {

constexpr double kGolden = 0.6180339887498949;

struct Grid {
    std::vector<double> nodes;
    std::vector<double> weights; // normalized to sum 1
};

std::vector<double> linspace(double lo, double hi, int m) {
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) v[i] = lo + (hi - lo) * i / (m - 1);
    return v;
}

// Trapezoid weights for arbitrary ordered nodes, normalized to sum 1.
std::vector<double> trap_weights(const std::vector<double>& nodes) {
    const std::size_t m = nodes.size();
    std::vector<double> w(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double half = 0.5 * (nodes[i + 1] - nodes[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return w;
}

// Gauss-Legendre rule on [0,1], weights normalized to sum 1.
Grid gauss_legendre01(int m) {
    Grid g;
    g.nodes.resize(m);
    g.weights.resize(m);
    for (int i = 0; i < m; ++i) {
        double x = std::cos(3.141592653589793 * (i + 0.75) / (m + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        g.nodes[m - 1 - i] = 0.5 * (x + 1.0);
        g.weights[m - 1 - i] = 1.0 / ((1.0 - x * x) * pp * pp);
    }
    double total = 0.0;
    for (double w : g.weights) total += w;
    for (double& w : g.weights) w /= total;
    return g;
}

Grid make_grid(double lo, double hi, int m, QuadRule quad) {
    Grid g;
    if (quad == QuadRule::GaussLegendre) {
        g = gauss_legendre01(m);
        for (double& t : g.nodes) t = lo + (hi - lo) * t;
    } else {
        g.nodes = linspace(lo, hi, m);
        g.weights = trap_weights(g.nodes);
    }
    return g;
}

// Golden-section maximization of f on [a, b]; returns best (x, f(x)) seen.
std::pair<double, double> golden_max(const std::function<double(double)>& f, double a, double b,
                                     int iters = 48) {
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    double bx = f1 >= f2 ? x1 : x2;
    double bf = std::max(f1, f2);
    for (int it = 0; it < iters && b - a > 1e-13; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = f(x1);
        }
        if (f1 > bf) { bf = f1; bx = x1; }
        if (f2 > bf) { bf = f2; bx = x2; }
    }
    return {bx, bf};
}

// Coordinate-wise golden-section passes around a grid maximizer.
double refine_sup(const std::function<double(const std::vector<double>&)>& g,
                  std::vector<double> point, const std::vector<double>& lo,
                  const std::vector<double>& hi, std::vector<double> delta,
                  const RefineSpec& refine) {
    double best = g(point);
    for (int pass = 0; pass < refine.passes; ++pass) {
        for (std::size_t c = 0; c < point.size(); ++c) {
            const double a = std::max(lo[c], point[c] - delta[c]);
            const double b = std::min(hi[c], point[c] + delta[c]);
            if (!(b > a)) continue;
            auto line = [&](double t) {
                std::vector<double> q = point;
                q[c] = t;
                return g(q);
            };
            const auto [x, fx] = golden_max(line, a, b);
            if (fx > best) {
                best = fx;
                point[c] = x;
            }
        }
        for (double& dl : delta) dl *= refine.shrink;
    }
    return best;
}

// Conditional copula values on (interior u) x (interior u) x (z nodes).
// Boundary u rows are handled analytically (difference integrands vanish).
struct Tensor {
    std::vector<double> u;        // interior u nodes
    std::vector<double> uw;       // matching weights (boundary weight dropped from the sum)
    Grid z;
    std::vector<double> c;        // u1-major: c[(i*nu + j)*nz + k]
    std::uint64_t evals = 0;

    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return c[(i * u.size() + j) * z.nodes.size() + k];
    }
};

Tensor eval_tensor(const ConditionalCopulaModel& model, const std::vector<double>& u_full,
                   const std::vector<double>& uw_full, const Grid& z) {
    Tensor t;
    for (std::size_t i = 0; i < u_full.size(); ++i) {
        if (u_full[i] <= 0.0 || u_full[i] >= 1.0) continue;
        t.u.push_back(u_full[i]);
        t.uw.push_back(uw_full[i]);
    }
    t.z = z;
    const std::size_t nu = t.u.size(), nz = z.nodes.size();
    t.c.resize(nu * nu * nz);
    for (std::size_t i = 0; i < nu; ++i)
        for (std::size_t j = 0; j < nu; ++j)
            for (std::size_t k = 0; k < nz; ++k)
                t.c[(i * nu + j) * nz + k] = model.cdf(t.u[i], t.u[j], z.nodes[k]);
    t.evals = nu * nu * nz;
    return t;
}

// CvM integrals from the tensor.
// psi1: sum_k zw_k sum_ij uw_i uw_j (C_ijk - Cave_ij)^2
// psi0: sum_ij uw_i uw_j * 2 (M2_ij - M1_ij^2), the exact expansion of the
//       (z, z') tensor-product quadrature of (C_z - C_z')^2.
double cvm_integral(const Tensor& t, bool pairwise) {
    const std::size_t nu = t.u.size(), nz = t.z.nodes.size();
    double total = 0.0;
    for (std::size_t i = 0; i < nu; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < nu; ++j) {
            const double* slice = &t.c[(i * nu + j) * nz];
            double m1 = 0.0;
            for (std::size_t k = 0; k < nz; ++k) m1 += t.z.weights[k] * slice[k];
            double var = 0.0;
            for (std::size_t k = 0; k < nz; ++k) {
                const double dd = slice[k] - m1;
                var += t.z.weights[k] * dd * dd;
            }
            const double inner = pairwise ? 2.0 * var : var;
            row += t.uw[j] * inner;
        }
        total += t.uw[i] * row;
    }
    return total;
}

Tensor coarse_tensor(const Tensor& fine) {
    Tensor c;
    std::vector<std::size_t> ui, zi;
    for (std::size_t i = 0; i < fine.u.size(); i += 2) ui.push_back(i);
    for (std::size_t k = 0; k < fine.z.nodes.size(); k += 2) zi.push_back(k);
    if ((fine.z.nodes.size() - 1) % 2 != 0) zi.push_back(fine.z.nodes.size() - 1);
    for (auto i : ui) c.u.push_back(fine.u[i]);
    for (auto k : zi) c.z.nodes.push_back(fine.z.nodes[k]);
    c.z.weights = trap_weights(c.z.nodes);
    // Interior-only trapezoid weights over the coarse u nodes, keeping the
    // analytic zero boundary: weights computed on {0, coarse u..., 1}.
    std::vector<double> padded;
    padded.push_back(0.0);
    for (double v : c.u) padded.push_back(v);
    padded.push_back(1.0);
    const auto wp = trap_weights(padded);
    for (std::size_t i = 0; i < c.u.size(); ++i) c.uw.push_back(wp[i + 1]);
    const std::size_t nu = c.u.size(), nz = c.z.nodes.size();
    c.c.resize(nu * nu * nz);
    for (std::size_t a = 0; a < nu; ++a)
        for (std::size_t b = 0; b < nu; ++b)
            for (std::size_t k = 0; k < nz; ++k)
                c.c[(a * nu + b) * nz + k] = fine.at(ui[a], ui[b], zi[k]);
    return c;
}

} // namespace

void OracleSpec::validate() const {
    if (u_grid < 3 || z_grid < 3) throw InvalidArgument("oracle: grid counts must be >= 3");
    if (refine.passes < 0) throw InvalidArgument("oracle: refinement passes must be >= 0");
    if (!(refine.shrink > 0.0 && refine.shrink <= 1.0))
        throw InvalidArgument("oracle: refinement shrink must lie in (0, 1]");
}

OracleMeasure parse_oracle_measure(const std::string& name) {
    if (name == "psi1_cvm") return OracleMeasure::Psi1CvM;
    if (name == "psi1_ks") return OracleMeasure::Psi1KS;
    if (name == "psi0_cvm") return OracleMeasure::Psi0TildeCvM;
    if (name == "psi0_ks") return OracleMeasure::Psi0TildeKS;
    if (name == "param_sup") return OracleMeasure::ParamSup;
    if (name == "param_int") return OracleMeasure::ParamInt;
    throw InvalidArgument("unknown oracle measure '" + name +
                          "' (psi1_cvm, psi1_ks, psi0_cvm, psi0_ks, param_sup, param_int)");
}

std::string oracle_measure_name(OracleMeasure m) {
    switch (m) {
        case OracleMeasure::Psi1CvM: return "psi1_cvm";
        case OracleMeasure::Psi1KS: return "psi1_ks";
        case OracleMeasure::Psi0TildeCvM: return "psi0_cvm";
        case OracleMeasure::Psi0TildeKS: return "psi0_ks";
        case OracleMeasure::ParamSup: return "param_sup";
        case OracleMeasure::ParamInt: return "param_int";
    }
    return "?";
}

std::vector<double> oracle_z_nodes(const ConditionalCopulaModel& model, const OracleSpec& spec) {
    return make_grid(model.z_lo(), model.z_hi(), spec.z_grid, spec.quad).nodes;
}

double average_copula(const ConditionalCopulaModel& model, double u1, double u2,
                      const OracleSpec& spec, const std::vector<double>* mu) {
    spec.validate();
    Grid z = make_grid(model.z_lo(), model.z_hi(), spec.z_grid, spec.quad);
    if (mu) {
        if (mu->size() != z.nodes.size())
            throw InvalidArgument("average_copula: mu must match the z node count");
        double total = 0.0;
        for (double w : *mu) {
            if (w < 0.0) throw InvalidArgument("average_copula: mu must be nonnegative");
            total += w;
        }
        if (total <= 0.0) throw InvalidArgument("average_copula: mu must not be all zero");
        z.weights = *mu;
        for (double& w : z.weights) w /= total;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < z.nodes.size(); ++k)
        acc += z.weights[k] * model.cdf(u1, u2, z.nodes[k]);
    return acc;
}

namespace {

MeasureValue cvm_measure(const ConditionalCopulaModel& model, const OracleSpec& spec,
                         bool pairwise) {
    spec.validate();
    Grid u;
    if (spec.quad == QuadRule::Trapezoid) {
        u.nodes = linspace(0.0, 1.0, spec.u_grid);
        u.weights = trap_weights(u.nodes);
    } else {
        u = gauss_legendre01(spec.u_grid);
    }
    const Grid z = make_grid(model.z_lo(), model.z_hi(), spec.z_grid, spec.quad);

    const Tensor fine = eval_tensor(model, u.nodes, u.weights, z);
    const double i_fine = cvm_integral(fine, pairwise);

    double i_coarse;
    std::uint64_t extra = 0;
    if (spec.quad == QuadRule::Trapezoid) {
        i_coarse = cvm_integral(coarse_tensor(fine), pairwise);
    } else {
        OracleSpec half = spec;
        half.u_grid = std::max(3, spec.u_grid / 2);
        half.z_grid = std::max(3, spec.z_grid / 2);
        const Grid uh = gauss_legendre01(half.u_grid);
        const Grid zh = make_grid(model.z_lo(), model.z_hi(), half.z_grid, spec.quad);
        const Tensor ct = eval_tensor(model, uh.nodes, uh.weights, zh);
        extra = ct.evals;
        i_coarse = cvm_integral(ct, pairwise);
    }

    MeasureValue out;
    out.value = std::sqrt(std::max(0.0, i_fine));
    out.abs_err_estimate = std::abs(out.value - std::sqrt(std::max(0.0, i_coarse)));
    out.evaluations = fine.evals + extra;
    if (!std::isfinite(out.value)) throw NumericError("oracle: non-finite CvM value");
    return out;
}

struct KsScanResult {
    double best = -1.0;
    std::size_t i = 0, j = 0, kmax = 0, kmin = 0;
};

// Scan for sup |C - Cave| (pairwise = false) or sup_z C - inf_z C (pairwise = true).
KsScanResult ks_scan(const Tensor& t, bool pairwise) {
    const std::size_t nu = t.u.size(), nz = t.z.nodes.size();
    KsScanResult r;
    for (std::size_t i = 0; i < nu; ++i)
        for (std::size_t j = 0; j < nu; ++j) {
            const double* slice = &t.c[(i * nu + j) * nz];
            if (pairwise) {
                std::size_t amax = 0, amin = 0;
                for (std::size_t k = 1; k < nz; ++k) {
                    if (slice[k] > slice[amax]) amax = k;
                    if (slice[k] < slice[amin]) amin = k;
                }
                const double v = slice[amax] - slice[amin];
                if (v > r.best) r = {v, i, j, amax, amin};
            } else {
                double ave = 0.0;
                for (std::size_t k = 0; k < nz; ++k) ave += t.z.weights[k] * slice[k];
                for (std::size_t k = 0; k < nz; ++k) {
                    const double v = std::abs(slice[k] - ave);
                    if (v > r.best) r = {v, i, j, k, k};
                }
            }
        }
    return r;
}

MeasureValue ks_measure(const ConditionalCopulaModel& model, const OracleSpec& spec,
                        bool pairwise) {
    spec.validate();
    // Interior shifted u scan grid; the |difference| vanishes on the boundary.
    std::vector<double> u(spec.u_grid), uw(spec.u_grid, 1.0);
    for (int i = 0; i < spec.u_grid; ++i) u[i] = (i + 0.5) / spec.u_grid;
    Grid z;
    z.nodes = linspace(model.z_lo(), model.z_hi(), spec.z_grid);
    z.weights = trap_weights(z.nodes);

    const Tensor fine = eval_tensor(model, u, uw, z);
    std::uint64_t evals = fine.evals;

    const double du = 1.0 / spec.u_grid;
    const double dz = (model.z_hi() - model.z_lo()) / (spec.z_grid - 1);
    const double zlo = model.z_lo(), zhi = model.z_hi();

    // Average copula under the same z quadrature, for off-grid refinement
    // evaluations (single-entry cache keyed by the u point).
    auto make_goal = [&](const Grid& zq) {
        auto cached_u = std::make_shared<std::pair<double, double>>(-1.0, -1.0);
        auto cached_ave = std::make_shared<double>(0.0);
        auto count = std::make_shared<std::uint64_t>(0);
        std::function<double(const std::vector<double>&)> goal;
        if (pairwise) {
            goal = [&model, count](const std::vector<double>& q) {
                *count += 2;
                return std::abs(model.cdf(q[0], q[1], q[2]) - model.cdf(q[0], q[1], q[3]));
            };
        } else {
            goal = [&model, zq, cached_u, cached_ave, count](const std::vector<double>& q) {
                if (q[0] != cached_u->first || q[1] != cached_u->second) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < zq.nodes.size(); ++k)
                        acc += zq.weights[k] * model.cdf(q[0], q[1], zq.nodes[k]);
                    *cached_u = {q[0], q[1]};
                    *cached_ave = acc;
                    *count += zq.nodes.size();
                }
                *count += 1;
                return std::abs(model.cdf(q[0], q[1], q[2]) - *cached_ave);
            };
        }
        return std::make_pair(goal, count);
    };

    auto run = [&](const Tensor& t, const Grid& zq, double ddu, double ddz) {
        const KsScanResult s = ks_scan(t, pairwise);
        auto [goal, count] = make_goal(zq);
        std::vector<double> point{t.u[s.i], t.u[s.j], t.z.nodes[s.kmax]};
        std::vector<double> lo{1e-9, 1e-9, zlo};
        std::vector<double> hi{1.0 - 1e-9, 1.0 - 1e-9, zhi};
        std::vector<double> delta{ddu, ddu, ddz};
        if (pairwise) {
            point.push_back(t.z.nodes[s.kmin]);
            lo.push_back(zlo);
            hi.push_back(zhi);
            delta.push_back(ddz);
        }
        const double refined = refine_sup(goal, point, lo, hi, delta, spec.refine);
        return std::make_pair(std::max(refined, s.best), *count);
    };

    auto [v_fine, n_fine] = run(fine, z, du, dz);
    evals += n_fine;

    const Tensor coarse = coarse_tensor(fine);
    auto [v_coarse, n_coarse] = run(coarse, coarse.z, 2 * du, 2 * dz);
    evals += n_coarse;

    MeasureValue out;
    out.value = v_fine;
    // floor covers the residual of the coordinate-descent refinement
    out.abs_err_estimate =
        std::max(std::abs(v_fine - v_coarse), 1e-7 * (1.0 + std::abs(v_fine)));
    out.evaluations = evals;
    if (!std::isfinite(out.value)) throw NumericError("oracle: non-finite KS value");
    return out;
}

} // namespace

MeasureValue true_psi1_cvm(const ConditionalCopulaModel& model, const OracleSpec& spec) {
    return cvm_measure(model, spec, false);
}

MeasureValue true_psi0_cvm(const ConditionalCopulaModel& model, const OracleSpec& spec) {
    return cvm_measure(model, spec, true);
}

MeasureValue true_psi1_ks(const ConditionalCopulaModel& model, const OracleSpec& spec) {
    return ks_measure(model, spec, false);
}

MeasureValue true_psi0_ks(const ConditionalCopulaModel& model, const OracleSpec& spec) {
    return ks_measure(model, spec, true);
}

MeasureValue true_param_measure(const ConditionalCopulaModel& model, ParamVariant variant,
                                const OracleSpec& spec) {
    spec.validate();
    const double zlo = model.z_lo(), zhi = model.z_hi();

    auto eval_on = [&](int m) {
        MeasureValue out;
        const auto zs = linspace(zlo, zhi, m);
        std::vector<double> th(zs.size());
        for (std::size_t k = 0; k < zs.size(); ++k) th[k] = model.theta(zs[k]);
        out.evaluations = zs.size();
        const double dz = (zhi - zlo) / (m - 1);
        const RefineSpec& rf = spec.refine;

        if (variant == ParamVariant::SupPairwise) {
            std::size_t amax = 0, amin = 0;
            for (std::size_t k = 1; k < zs.size(); ++k) {
                if (th[k] > th[amax]) amax = k;
                if (th[k] < th[amin]) amin = k;
            }
            auto goal = [&](const std::vector<double>& q) {
                out.evaluations += 2;
                return std::abs(model.theta(q[0]) - model.theta(q[1]));
            };
            out.value = refine_sup(goal, {zs[amax], zs[amin]}, {zlo, zlo}, {zhi, zhi},
                                   {dz, dz}, rf);
            out.value = std::max(out.value, th[amax] - th[amin]);
        } else {
            const Grid z = make_grid(zlo, zhi, m, spec.quad);
            double ave = 0.0;
            for (std::size_t k = 0; k < z.nodes.size(); ++k)
                ave += z.weights[k] * model.theta(z.nodes[k]);
            out.evaluations += z.nodes.size();
            std::size_t arg = 0;
            double best = -1.0;
            for (std::size_t k = 0; k < zs.size(); ++k) {
                const double v = std::abs(th[k] - ave);
                if (v > best) { best = v; arg = k; }
            }
            auto goal = [&](const std::vector<double>& q) {
                out.evaluations += 1;
                return std::abs(model.theta(q[0]) - ave);
            };
            out.value = std::max(best, refine_sup(goal, {zs[arg]}, {zlo}, {zhi}, {dz}, rf));
        }
        return out;
    };

    MeasureValue fine = eval_on(spec.z_grid);
    MeasureValue coarse = eval_on(std::max(3, (spec.z_grid + 1) / 2));
    fine.abs_err_estimate = std::abs(fine.value - coarse.value);
    fine.evaluations += coarse.evaluations;
    return fine;
}

MeasureValue compute_oracle(const ConditionalCopulaModel& model, OracleMeasure measure,
                            const OracleSpec& spec) {
    switch (measure) {
        case OracleMeasure::Psi1CvM: return true_psi1_cvm(model, spec);
        case OracleMeasure::Psi1KS: return true_psi1_ks(model, spec);
        case OracleMeasure::Psi0TildeCvM: return true_psi0_cvm(model, spec);
        case OracleMeasure::Psi0TildeKS: return true_psi0_ks(model, spec);
        case OracleMeasure::ParamSup:
            return true_param_measure(model, ParamVariant::SupPairwise, spec);
        case OracleMeasure::ParamInt:
            return true_param_measure(model, ParamVariant::DistToAverage, spec);
    }
    throw InvalidArgument("compute_oracle: unknown measure");
}

double symmetrize(const std::function<double(const ConditionalCopulaModel&)>& psi,
                  const ConditionalCopulaModel& model) {
    return 0.5 * (psi(model) + psi(model.swapped_x()));
}

} // namespace nonsimplify
