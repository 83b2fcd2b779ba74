#include "nonsimplify/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>

#include "nonsimplify/errors.hpp"
#include "nonsimplify/threading.hpp"

namespace nonsimplify {

namespace {

// Guard for the CKT denominator 1 - sum(w_i^2): the effective pair fraction.
constexpr double kDenomGuard = 1e-3;

struct Window {
    std::vector<double> x1, x2, kv; // kernel values rescaled by their maximum
    double total = 0.0;             // sum of kv
    double sumsq = 0.0;             // sum of kv^2
    std::size_t size() const { return kv.size(); }
};

class Fenwick {
public:
    explicit Fenwick(std::size_t n) : t_(n + 1, 0.0) {}
    void add(std::size_t i, double v) {
        for (++i; i < t_.size(); i += i & (~i + 1)) t_[i] += v;
    }
    // Sum over ranks strictly below i.
    double prefix(std::size_t i) const {
        double s = 0.0;
        for (; i > 0; i -= i & (~i + 1)) s += t_[i];
        return s;
    }

private:
    std::vector<double> t_;
};

// Shared state for all kernel estimators on one dataset: optional rank
// transform of the Z columns and raw-kernel evaluation.
class Engine {
public:
    Engine(const Dataset& data, const KernelSpec& k, bool ranks)
        : data_(data), k_(k), ranks_(ranks) {
        if (data.p == 0) throw InvalidArgument("estimator: dataset has no Z columns");
        k_.validate(data.p);
        if (ranks_) {
            sorted_z_.resize(data.p);
            zt_.resize(data.n * data.p);
            for (std::size_t j = 0; j < data.p; ++j) {
                sorted_z_[j] = data.z_column(j);
                std::sort(sorted_z_[j].begin(), sorted_z_[j].end());
                for (std::size_t i = 0; i < data.n; ++i)
                    zt_[i * data.p + j] = ecdf(sorted_z_[j], data.zv(i, j));
            }
        }
    }

    const Dataset& data() const { return data_; }
    const KernelSpec& kernel() const { return k_; }
    bool ranks() const { return ranks_; }

    // Window of observations with positive kernel weight around z (raw scale).
    Window window_at(const std::vector<double>& z) const {
        std::vector<double> q(z);
        if (ranks_)
            for (std::size_t j = 0; j < data_.p; ++j) q[j] = ecdf(sorted_z_[j], z[j]);
        Window w;
        double kmax = 0.0;
        std::vector<double> kv(data_.n);
        for (std::size_t i = 0; i < data_.n; ++i) {
            double v = 1.0;
            for (std::size_t j = 0; j < data_.p; ++j) {
                const double zi = ranks_ ? zt_[i * data_.p + j] : data_.zv(i, j);
                v *= kernel_value(k_.kernel, (zi - q[j]) / k_.bandwidth(j));
                if (v == 0.0) break;
            }
            kv[i] = v;
            kmax = std::max(kmax, v);
        }
        if (kmax <= 0.0)
            throw DegenerateNeighborhood(
                "estimator: no observation within bandwidth of the design point");
        for (std::size_t i = 0; i < data_.n; ++i) {
            if (kv[i] <= 0.0) continue;
            const double v = kv[i] / kmax;
            w.x1.push_back(data_.xv(i, 0));
            w.x2.push_back(data_.xv(i, 1));
            w.kv.push_back(v);
            w.total += v;
            w.sumsq += v * v;
        }
        return w;
    }

    Window window_at_row(std::size_t row) const {
        std::vector<double> z(data_.p);
        for (std::size_t j = 0; j < data_.p; ++j) z[j] = data_.zv(row, j);
        return window_at(z);
    }

    // Raw product-kernel values for every row at z; returns their sum
    // (zero means a degenerate window). kv is reused scratch of size n.
    double kernel_values_at(const std::vector<double>& z, std::vector<double>& kv) const {
        kv.resize(data_.n);
        std::vector<double> q(z);
        if (ranks_)
            for (std::size_t j = 0; j < data_.p; ++j) q[j] = ecdf(sorted_z_[j], z[j]);
        double total = 0.0;
        if (data_.p == 1) {
            const double h0 = k_.bandwidth(0);
            const Kernel shape = k_.kernel;
            for (std::size_t i = 0; i < data_.n; ++i) {
                const double zi = ranks_ ? zt_[i] : data_.z[i];
                total += kv[i] = kernel_value(shape, (zi - q[0]) / h0);
            }
        } else {
            for (std::size_t i = 0; i < data_.n; ++i) {
                double v = 1.0;
                for (std::size_t j = 0; j < data_.p; ++j) {
                    const double zi = ranks_ ? zt_[i * data_.p + j] : data_.zv(i, j);
                    v *= kernel_value(k_.kernel, (zi - q[j]) / k_.bandwidth(j));
                    if (v == 0.0) break;
                }
                total += kv[i] = v;
            }
        }
        return total;
    }

    // Row order sorted by the given X margin (built once, shared).
    const std::vector<std::size_t>& order_x(std::size_t margin) const {
        auto& ord = order_[margin];
        if (ord.empty()) {
            ord.resize(data_.n);
            std::iota(ord.begin(), ord.end(), std::size_t{0});
            std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
                return data_.xv(a, margin) < data_.xv(b, margin);
            });
        }
        return ord;
    }

private:
    static double ecdf(const std::vector<double>& sorted, double v) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), v);
        return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    }

    const Dataset& data_;
    KernelSpec k_;
    bool ranks_;
    std::vector<std::vector<double>> sorted_z_;
    std::vector<double> zt_;
    mutable std::vector<std::size_t> order_[2];
};

// Reused buffers for the gridded conditional-copula evaluations.
struct GridScratch {
    std::vector<double> kv, t1, t2, bins;
    std::vector<std::uint32_t> bcol;
};

// Conditional empirical copula on the levels grid, from per-row kernel
// values: marginal quantile thresholds, then the binned joint ECDF.
void copula_grid_from_kv(const Engine& eng, const std::vector<double>& kv, double total,
                         const std::vector<double>& levels, GridScratch& s,
                         std::vector<double>& out) {
    const Dataset& data = eng.data();
    const std::size_t g = levels.size();
    s.t1.resize(g);
    s.t2.resize(g);
    for (std::size_t margin = 0; margin < 2; ++margin) {
        const auto& order = eng.order_x(margin);
        auto& t = margin == 0 ? s.t1 : s.t2;
        double cum = 0.0, lastx = 0.0;
        std::size_t pos = 0;
        for (std::size_t l = 0; l < g; ++l) {
            const double target = levels[l] * total;
            while (pos < data.n && cum < target) {
                const std::size_t row = order[pos++];
                if (kv[row] > 0.0) {
                    cum += kv[row];
                    lastx = data.xv(row, margin);
                }
            }
            t[l] = lastx;
        }
    }
    s.bins.assign((g + 1) * (g + 1), 0.0);
    // cell indices by walking the presorted orders against the sorted thresholds
    s.bcol.resize(data.n);
    {
        const auto& order2 = eng.order_x(1);
        std::size_t b = 0;
        for (std::size_t pos = 0; pos < data.n; ++pos) {
            const std::size_t row = order2[pos];
            while (b < g && s.t2[b] < data.xv(row, 1)) ++b;
            s.bcol[row] = static_cast<std::uint32_t>(b);
        }
    }
    {
        const auto& order1 = eng.order_x(0);
        std::size_t a = 0;
        for (std::size_t pos = 0; pos < data.n; ++pos) {
            const std::size_t row = order1[pos];
            while (a < g && s.t1[a] < data.xv(row, 0)) ++a;
            if (kv[row] > 0.0) s.bins[a * (g + 1) + s.bcol[row]] += kv[row];
        }
    }
    for (std::size_t a = 0; a <= g; ++a)
        for (std::size_t b = 1; b <= g; ++b)
            s.bins[a * (g + 1) + b] += s.bins[a * (g + 1) + b - 1];
    for (std::size_t b = 0; b <= g; ++b)
        for (std::size_t a = 1; a <= g; ++a)
            s.bins[a * (g + 1) + b] += s.bins[(a - 1) * (g + 1) + b];
    out.resize(g * g);
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b) out[a * g + b] = s.bins[a * (g + 1) + b] / total;
}

// Weighted marginal quantiles of a window at ascending levels:
// t[l] = inf{x : F_hat(x) >= levels[l]}.
std::vector<double> window_quantiles(const std::vector<double>& xs, const std::vector<double>& kv,
                                     double total, const std::vector<double>& levels) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> out(levels.size());
    double cum = 0.0;
    std::size_t pos = 0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const double target = levels[l] * total;
        while (pos < order.size() && cum < target) {
            cum += kv[order[pos]];
            ++pos;
        }
        out[l] = xs[order[pos == 0 ? 0 : pos - 1]];
    }
    return out;
}

// Conditional empirical copula on a levels x levels grid, row-major
// [i1 * g + i2]: the weighted joint ECDF at the componentwise quantiles.
std::vector<double> copula_grid_from_window(const Window& w, const std::vector<double>& levels) {
    const std::size_t g = levels.size();
    const auto t1 = window_quantiles(w.x1, w.kv, w.total, levels);
    const auto t2 = window_quantiles(w.x2, w.kv, w.total, levels);
    std::vector<double> bins((g + 1) * (g + 1), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::size_t a = std::lower_bound(t1.begin(), t1.end(), w.x1[i]) - t1.begin();
        const std::size_t b = std::lower_bound(t2.begin(), t2.end(), w.x2[i]) - t2.begin();
        bins[a * (g + 1) + b] += w.kv[i];
    }
    // 2-D cumulative sum, then normalize.
    for (std::size_t a = 0; a <= g; ++a)
        for (std::size_t b = 1; b <= g; ++b) bins[a * (g + 1) + b] += bins[a * (g + 1) + b - 1];
    for (std::size_t b = 0; b <= g; ++b)
        for (std::size_t a = 1; a <= g; ++a) bins[a * (g + 1) + b] += bins[(a - 1) * (g + 1) + b];
    std::vector<double> out(g * g);
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b) out[a * g + b] = bins[a * (g + 1) + b] / w.total;
    return out;
}

double tau_from_window(const Window& w) {
    const double denom = w.total * w.total - w.sumsq;
    if (!(1.0 - w.sumsq / (w.total * w.total) > kDenomGuard))
        throw EffectiveSampleTooSmall("conditional Kendall tau: effective sample too small");

    const std::size_t m = w.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return w.x1[a] < w.x1[b]; });

    std::vector<double> x2s(w.x2);
    std::sort(x2s.begin(), x2s.end());
    x2s.erase(std::unique(x2s.begin(), x2s.end()), x2s.end());
    auto rank2 = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(x2s.begin(), x2s.end(), v) - x2s.begin());
    };

    Fenwick fw(x2s.size());
    double inserted = 0.0;
    double acc = 0.0; // sum over pairs of kv_i kv_j sign((x1_i-x1_j)(x2_i-x2_j))
    std::size_t a = 0;
    while (a < m) {
        std::size_t b = a;
        while (b < m && w.x1[order[b]] == w.x1[order[a]]) ++b;
        for (std::size_t t = a; t < b; ++t) {
            const std::size_t i = order[t];
            const std::size_t r = rank2(w.x2[i]);
            const double below = fw.prefix(r);
            const double above = inserted - fw.prefix(r + 1);
            acc += w.kv[i] * (below - above);
        }
        for (std::size_t t = a; t < b; ++t) {
            const std::size_t i = order[t];
            fw.add(rank2(w.x2[i]), w.kv[i]);
            inserted += w.kv[i];
        }
        a = b;
    }
    return std::clamp(2.0 * acc / denom, -1.0, 1.0);
}

std::vector<double> cell_levels(int g) {
    std::vector<double> levels(g);
    for (int l = 0; l < g; ++l) levels[l] = (l + 0.5) / g;
    return levels;
}

// Average conditional copula, Cs3 form: mean of the conditional copula grids
// at the observed Z_i (degenerate windows skipped, mean renormalized).
std::vector<double> cs3_grid(const Engine& eng, const std::vector<double>& levels) {
    const std::size_t g = levels.size();
    std::vector<double> acc(g * g, 0.0), grid;
    GridScratch scratch;
    std::vector<double> z(eng.data().p);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < eng.data().n; ++i) {
        for (std::size_t j = 0; j < eng.data().p; ++j) z[j] = eng.data().zv(i, j);
        const double total = eng.kernel_values_at(z, scratch.kv);
        if (total <= 0.0) continue;
        copula_grid_from_kv(eng, scratch.kv, total, levels, scratch, grid);
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += grid[c];
        ++kept;
    }
    if (kept == 0)
        throw DegenerateNeighborhood("cs3: every sample window is degenerate; widen h");
    for (double& v : acc) v /= static_cast<double>(kept);
    return acc;
}

// Average conditional copula, Cs4 form: ECDF of the conditional
// pseudo-observation vectors (F_hat(X_i1|Z_i), F_hat(X_i2|Z_i)).
std::vector<double> cs4_grid(const Engine& eng, const std::vector<double>& levels) {
    const std::size_t g = levels.size();
    const Dataset& data = eng.data();
    std::vector<double> bins((g + 1) * (g + 1), 0.0);
    GridScratch scratch;
    std::vector<double> z(data.p);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < data.n; ++i) {
        for (std::size_t j = 0; j < data.p; ++j) z[j] = data.zv(i, j);
        const double total = eng.kernel_values_at(z, scratch.kv);
        if (total <= 0.0) continue;
        const double xi1 = data.xv(i, 0), xi2 = data.xv(i, 1);
        double c1 = 0.0, c2 = 0.0;
        for (std::size_t r = 0; r < data.n; ++r) {
            if (scratch.kv[r] <= 0.0) continue;
            if (data.xv(r, 0) <= xi1) c1 += scratch.kv[r];
            if (data.xv(r, 1) <= xi2) c2 += scratch.kv[r];
        }
        const double u1 = c1 / total, u2 = c2 / total;
        const std::size_t a = std::lower_bound(levels.begin(), levels.end(), u1) - levels.begin();
        const std::size_t b = std::lower_bound(levels.begin(), levels.end(), u2) - levels.begin();
        bins[a * (g + 1) + b] += 1.0;
        ++kept;
    }
    if (kept == 0)
        throw DegenerateNeighborhood("cs4: every sample window is degenerate; widen h");
    for (std::size_t a = 0; a <= g; ++a)
        for (std::size_t b = 1; b <= g; ++b) bins[a * (g + 1) + b] += bins[a * (g + 1) + b - 1];
    for (std::size_t b = 0; b <= g; ++b)
        for (std::size_t a = 1; a <= g; ++a) bins[a * (g + 1) + b] += bins[(a - 1) * (g + 1) + b];
    std::vector<double> out(g * g);
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b)
            out[a * g + b] = bins[a * (g + 1) + b] / static_cast<double>(kept);
    return out;
}

} // namespace

EstMeasure parse_est_measure(const std::string& name) {
    if (name == "psi1_cvm") return EstMeasure::Psi1CvM;
    if (name == "psi1_ks") return EstMeasure::Psi1KS;
    if (name == "psi0_cvm") return EstMeasure::Psi0TildeCvM;
    if (name == "psi0_ks") return EstMeasure::Psi0TildeKS;
    if (name == "ckt_sup") return EstMeasure::CKTSupPairwise;
    if (name == "ckt_sum") return EstMeasure::CKTSumPairwise;
    if (name == "ckt_avg") return EstMeasure::CKTDistToAverage;
    throw InvalidArgument("unknown measure '" + name +
                          "' (psi1_cvm, psi1_ks, psi0_cvm, psi0_ks, ckt_sup, ckt_sum, ckt_avg)");
}

std::string est_measure_name(EstMeasure m) {
    switch (m) {
        case EstMeasure::Psi1CvM: return "psi1_cvm";
        case EstMeasure::Psi1KS: return "psi1_ks";
        case EstMeasure::Psi0TildeCvM: return "psi0_cvm";
        case EstMeasure::Psi0TildeKS: return "psi0_ks";
        case EstMeasure::CKTSupPairwise: return "ckt_sup";
        case EstMeasure::CKTSumPairwise: return "ckt_sum";
        case EstMeasure::CKTDistToAverage: return "ckt_avg";
    }
    return "?";
}

AveVariant parse_ave_variant(const std::string& name) {
    if (name == "cs3") return AveVariant::Cs3;
    if (name == "cs4") return AveVariant::Cs4;
    throw InvalidArgument("unknown average-copula variant '" + name + "' (cs3, cs4)");
}

std::string ave_variant_name(AveVariant v) {
    return v == AveVariant::Cs3 ? "cs3" : "cs4";
}

bool is_ckt_measure(EstMeasure m) {
    return m == EstMeasure::CKTSupPairwise || m == EstMeasure::CKTSumPairwise ||
           m == EstMeasure::CKTDistToAverage;
}

void EstimatorSpec::validate() const {
    if (u_grid < 3) throw InvalidArgument("estimator: u_grid must be >= 3");
    if (n_design < 2 && z_design.empty())
        throw InvalidArgument("estimator: need at least 2 design points");
    if (!z_design.empty() && z_design.size() < 2)
        throw InvalidArgument("estimator: need at least 2 design points");
}

bool EstimatorSpec::use_ranks() const {
    if (pseudo_z == PseudoZ::Raw) return false;
    if (pseudo_z == PseudoZ::RankTransformed) return true;
    return !is_ckt_measure(measure);
}

StepCdf::StepCdf(std::vector<double> xs, std::vector<double> cum_weights)
    : xs_(std::move(xs)), cum_(std::move(cum_weights)) {
    if (xs_.empty() || xs_.size() != cum_.size())
        throw InvalidArgument("StepCdf: empty or mismatched support");
}

double StepCdf::operator()(double x) const {
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.begin()) return 0.0;
    return cum_[it - xs_.begin() - 1];
}

double StepCdf::quantile(double u) const {
    if (u <= 0.0) return xs_.front();
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) return xs_.back();
    return xs_[it - cum_.begin()];
}

StepCdf cond_ecdf(const Dataset& data, const std::vector<double>& z, const KernelSpec& k,
                  std::size_t margin, bool pseudo_z) {
    if (margin >= data.d) throw InvalidArgument("cond_ecdf: margin out of range");
    const auto w = kernel_weights(data, z, k, pseudo_z);
    std::vector<std::pair<double, double>> pts;
    pts.reserve(data.n);
    for (std::size_t i = 0; i < data.n; ++i)
        if (w[i] > 0.0) pts.emplace_back(data.xv(i, margin), w[i]);
    std::sort(pts.begin(), pts.end());
    std::vector<double> xs, cum;
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        acc += pts[i].second;
        if (i + 1 < pts.size() && pts[i + 1].first == pts[i].first) continue;
        xs.push_back(pts[i].first);
        cum.push_back(acc);
    }
    cum.back() = 1.0; // exact upper limit
    return StepCdf(std::move(xs), std::move(cum));
}

double cond_quantile(const StepCdf& cdf, double u) {
    return cdf.quantile(u);
}

double cond_empirical_copula(const Dataset& data, const std::vector<double>& z,
                             const KernelSpec& k, double u1, double u2, bool pseudo_z) {
    if (data.d != 2) throw InvalidArgument("cond_empirical_copula: needs d = 2");
    if (!(u1 >= 0.0 && u1 <= 1.0 && u2 >= 0.0 && u2 <= 1.0))
        throw InvalidArgument("cond_empirical_copula: u must lie in [0, 1]^2");
    if (u1 == 0.0 || u2 == 0.0) return 0.0;
    Engine eng(data, k, pseudo_z);
    const Window w = eng.window_at(z);
    const auto t1 = window_quantiles(w.x1, w.kv, w.total, {u1});
    const auto t2 = window_quantiles(w.x2, w.kv, w.total, {u2});
    double c = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w.x1[i] <= t1[0] && w.x2[i] <= t2[0]) c += w.kv[i];
    return c / w.total;
}

double ave_copula_cs3(const Dataset& data, const KernelSpec& k, double u1, double u2,
                      bool pseudo_z) {
    if (data.d != 2) throw InvalidArgument("ave_copula_cs3: needs d = 2");
    if (u1 == 0.0 || u2 == 0.0) return 0.0;
    if (u1 == 1.0 && u2 == 1.0) return 1.0;
    Engine eng(data, k, pseudo_z);
    double acc = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < data.n; ++i) {
        Window w;
        try {
            w = eng.window_at_row(i);
        } catch (const DegenerateNeighborhood&) {
            continue;
        }
        const auto t1 = window_quantiles(w.x1, w.kv, w.total, {u1});
        const auto t2 = window_quantiles(w.x2, w.kv, w.total, {u2});
        double c = 0.0;
        for (std::size_t t = 0; t < w.size(); ++t)
            if (w.x1[t] <= t1[0] && w.x2[t] <= t2[0]) c += w.kv[t];
        acc += c / w.total;
        ++kept;
    }
    if (kept == 0) throw DegenerateNeighborhood("cs3: every sample window is degenerate");
    return acc / static_cast<double>(kept);
}

double ave_copula_cs4(const Dataset& data, const KernelSpec& k, double u1, double u2,
                      bool pseudo_z) {
    if (data.d != 2) throw InvalidArgument("ave_copula_cs4: needs d = 2");
    Engine eng(data, k, pseudo_z);
    double count = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < data.n; ++i) {
        Window w;
        try {
            w = eng.window_at_row(i);
        } catch (const DegenerateNeighborhood&) {
            continue;
        }
        double c1 = 0.0, c2 = 0.0;
        for (std::size_t t = 0; t < w.size(); ++t) {
            if (w.x1[t] <= data.xv(i, 0)) c1 += w.kv[t];
            if (w.x2[t] <= data.xv(i, 1)) c2 += w.kv[t];
        }
        if (c1 / w.total <= u1 && c2 / w.total <= u2) count += 1.0;
        ++kept;
    }
    if (kept == 0) throw DegenerateNeighborhood("cs4: every sample window is degenerate");
    return count / static_cast<double>(kept);
}

double cond_kendall_tau(const Dataset& data, const std::vector<double>& z, const KernelSpec& k,
                        bool pseudo_z) {
    if (data.d < 2) throw InvalidArgument("cond_kendall_tau: needs d >= 2");
    Engine eng(data, k, pseudo_z);
    return tau_from_window(eng.window_at(z));
}

std::vector<std::vector<double>> default_design_points(const Dataset& data,
                                                       std::size_t n_design) {
    if (data.p == 0) throw InvalidArgument("design points: dataset has no Z columns");
    std::vector<std::vector<double>> out(n_design);
    if (data.p == 1) {
        std::vector<double> sorted = data.z_column(0);
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n_design; ++i) {
            const double q = (i + 0.5) / static_cast<double>(n_design);
            const std::size_t idx = static_cast<std::size_t>(
                std::ceil(q * static_cast<double>(data.n) - 1e-9)) - 1;
            out[i] = {sorted[std::min(idx, data.n - 1)]};
        }
    } else {
        // Observed rows subsampled at quantile positions of the first coordinate.
        std::vector<std::size_t> order(data.n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return data.zv(a, 0) < data.zv(b, 0); });
        for (std::size_t i = 0; i < n_design; ++i) {
            const double q = (i + 0.5) / static_cast<double>(n_design);
            const std::size_t idx = std::min(
                static_cast<std::size_t>(q * static_cast<double>(data.n)), data.n - 1);
            std::vector<double> z(data.p);
            for (std::size_t j = 0; j < data.p; ++j) z[j] = data.zv(order[idx], j);
            out[i] = std::move(z);
        }
    }
    return out;
}

namespace {

std::vector<std::vector<double>> resolve_design(const Dataset& data, const EstimatorSpec& spec) {
    auto design = spec.z_design.empty() ? default_design_points(data, spec.n_design)
                                        : spec.z_design;
    std::vector<double> lo(data.p), hi(data.p);
    for (std::size_t j = 0; j < data.p; ++j) {
        auto col = data.z_column(j);
        lo[j] = *std::min_element(col.begin(), col.end());
        hi[j] = *std::max_element(col.begin(), col.end());
    }
    for (const auto& z : design) {
        if (z.size() != data.p)
            throw InvalidArgument("estimator: design point dimension mismatch");
        for (std::size_t j = 0; j < data.p; ++j)
            if (z[j] < lo[j] || z[j] > hi[j])
                throw InvalidArgument("estimator: design point outside the observed Z range");
    }
    return design;
}

struct DesignFailure {
    std::vector<std::size_t> points;
    std::string first_error;
    bool degenerate = true;
};

MeasureEstimate finish(const EstimatorSpec& spec, EstMeasure m, AveVariant v,
                       const KernelSpec& k, const Dataset& data,
                       std::size_t n_design, double value) {
    MeasureEstimate est;
    est.value = value;
    est.measure = m;
    est.ave_variant = v;
    est.h = k.h;
    est.kernel = k.kernel;
    EstimatorSpec probe = spec;
    probe.measure = m;
    est.ranks = probe.use_ranks();
    est.n = data.n;
    est.n_design = n_design;
    est.u_grid = spec.u_grid;
    return est;
}

} // namespace

std::vector<MeasureEstimate> estimate_measures(
    const Dataset& data, const EstimatorSpec& base,
    const std::vector<std::pair<EstMeasure, AveVariant>>& measures, const KernelSpec& k,
    std::size_t threads) {
    base.validate();
    k.validate(data.p);
    if (measures.empty()) throw InvalidArgument("estimate_measures: empty measure list");
    const auto design = resolve_design(data, base);
    const std::size_t nd = design.size();

    bool want_copula = false, want_ckt = false, want_cs3 = false, want_cs4 = false;
    for (const auto& [m, v] : measures) {
        if (is_ckt_measure(m)) {
            want_ckt = true;
        } else {
            want_copula = true;
            if (data.d != 2)
                throw InvalidArgument("estimator: conditional-copula measures need d = 2");
            if (m == EstMeasure::Psi1CvM || m == EstMeasure::Psi1KS) {
                (v == AveVariant::Cs3 ? want_cs3 : want_cs4) = true;
            }
        }
    }

    auto resolve_ranks = [&](bool ckt) {
        if (base.pseudo_z == PseudoZ::Raw) return false;
        if (base.pseudo_z == PseudoZ::RankTransformed) return true;
        return !ckt;
    };

    const auto levels = cell_levels(base.u_grid);
    const std::size_t g = levels.size();

    // Conditional-copula artifacts.
    std::vector<std::vector<double>> design_grids(nd);
    std::vector<double> ave3, ave4;
    DesignFailure cop_fail;
    if (want_copula) {
        Engine eng(data, k, resolve_ranks(false));
        std::vector<std::optional<std::string>> errs(nd);
        std::vector<char> degen(nd, 1);
        parallel_for(nd, threads, [&](std::size_t i) {
            try {
                GridScratch scratch;
                const double total = eng.kernel_values_at(design[i], scratch.kv);
                if (total <= 0.0)
                    throw DegenerateNeighborhood(
                        "estimator: no observation within bandwidth of the design point");
                copula_grid_from_kv(eng, scratch.kv, total, levels, scratch, design_grids[i]);
            } catch (const DegenerateNeighborhood& e) {
                errs[i] = e.what();
            } catch (const std::exception& e) {
                errs[i] = e.what();
                degen[i] = 0;
            }
        });
        for (std::size_t i = 0; i < nd; ++i)
            if (errs[i]) {
                cop_fail.points.push_back(i);
                if (cop_fail.first_error.empty()) cop_fail.first_error = *errs[i];
                if (!degen[i]) cop_fail.degenerate = false;
            }
        if (cop_fail.points.empty()) {
            if (want_cs3) ave3 = cs3_grid(eng, levels);
            if (want_cs4) ave4 = cs4_grid(eng, levels);
        }
    }

    // CKT artifacts.
    std::vector<double> taus(nd, 0.0);
    DesignFailure ckt_fail;
    if (want_ckt) {
        Engine eng(data, k, resolve_ranks(true));
        std::vector<std::optional<std::string>> errs(nd);
        std::vector<char> degen(nd, 1);
        parallel_for(nd, threads, [&](std::size_t i) {
            try {
                taus[i] = tau_from_window(eng.window_at(design[i]));
            } catch (const DegenerateNeighborhood& e) {
                errs[i] = e.what();
            } catch (const EffectiveSampleTooSmall& e) {
                errs[i] = e.what();
            } catch (const std::exception& e) {
                errs[i] = e.what();
                degen[i] = 0;
            }
        });
        for (std::size_t i = 0; i < nd; ++i)
            if (errs[i]) {
                ckt_fail.points.push_back(i);
                if (ckt_fail.first_error.empty()) ckt_fail.first_error = *errs[i];
                if (!degen[i]) ckt_fail.degenerate = false;
            }
    }

    auto fail_msg = [&](const DesignFailure& f) {
        std::string msg = f.first_error + " (failed design points:";
        for (auto i : f.points) msg += " " + std::to_string(i);
        msg += ")";
        return msg;
    };

    std::vector<MeasureEstimate> out;
    out.reserve(measures.size());
    for (const auto& [m, v] : measures) {
        if (is_ckt_measure(m)) {
            if (!ckt_fail.points.empty())
                throw EstimationError(fail_msg(ckt_fail), ckt_fail.points, ckt_fail.degenerate);
            double value = 0.0;
            if (m == EstMeasure::CKTSupPairwise) {
                const auto [mn, mx] = std::minmax_element(taus.begin(), taus.end());
                value = *mx - *mn;
            } else if (m == EstMeasure::CKTSumPairwise) {
                for (std::size_t i = 0; i < nd; ++i)
                    for (std::size_t j = 0; j < nd; ++j) value += std::abs(taus[i] - taus[j]);
            } else {
                double mean = 0.0;
                for (double t : taus) mean += t;
                mean /= static_cast<double>(nd);
                for (double t : taus) value = std::max(value, std::abs(t - mean));
            }
            out.push_back(finish(base, m, v, k, data, nd, value));
            continue;
        }

        if (!cop_fail.points.empty()) throw EstimationError(fail_msg(cop_fail), cop_fail.points, cop_fail.degenerate);
        double value = 0.0;
        if (m == EstMeasure::Psi1CvM || m == EstMeasure::Psi1KS) {
            const auto& ave = (v == AveVariant::Cs3) ? ave3 : ave4;
            if (m == EstMeasure::Psi1CvM) {
                double acc = 0.0;
                for (std::size_t i = 0; i < nd; ++i)
                    for (std::size_t c = 0; c < g * g; ++c) {
                        const double dd = design_grids[i][c] - ave[c];
                        acc += dd * dd;
                    }
                value = std::sqrt(acc / static_cast<double>(nd * g * g));
            } else {
                for (std::size_t i = 0; i < nd; ++i)
                    for (std::size_t c = 0; c < g * g; ++c)
                        value = std::max(value, std::abs(design_grids[i][c] - ave[c]));
            }
        } else {
            if (m == EstMeasure::Psi0TildeCvM) {
                double acc = 0.0;
                for (std::size_t c = 0; c < g * g; ++c) {
                    double m1 = 0.0, m2 = 0.0;
                    for (std::size_t i = 0; i < nd; ++i) {
                        m1 += design_grids[i][c];
                        m2 += design_grids[i][c] * design_grids[i][c];
                    }
                    m1 /= static_cast<double>(nd);
                    m2 /= static_cast<double>(nd);
                    acc += 2.0 * std::max(0.0, m2 - m1 * m1);
                }
                value = std::sqrt(acc / static_cast<double>(g * g));
            } else {
                for (std::size_t c = 0; c < g * g; ++c) {
                    double mn = design_grids[0][c], mx = mn;
                    for (std::size_t i = 1; i < nd; ++i) {
                        mn = std::min(mn, design_grids[i][c]);
                        mx = std::max(mx, design_grids[i][c]);
                    }
                    value = std::max(value, mx - mn);
                }
            }
        }
        out.push_back(finish(base, m, v, k, data, nd, value));
    }
    return out;
}

MeasureEstimate estimate_measure(const Dataset& data, const EstimatorSpec& espec,
                                 const KernelSpec& k, std::size_t threads) {
    return estimate_measures(data, espec, {{espec.measure, espec.ave_variant}}, k, threads)[0];
}

bool marginal_transform_check(const Dataset& data,
                              const std::vector<std::function<double(double)>>& transforms,
                              const KernelSpec& k) {
    if (data.d != 2 || data.p == 0)
        throw InvalidArgument("marginal_transform_check: needs d = 2 and p >= 1");
    if (transforms.size() != data.d)
        throw InvalidArgument("marginal_transform_check: one transform per X margin");

    Dataset tdata = data;
    for (std::size_t j = 0; j < data.d; ++j) {
        auto col = data.x_column(j);
        std::sort(col.begin(), col.end());
        for (std::size_t i = 0; i + 1 < col.size(); ++i)
            if (col[i] < col[i + 1] && !(transforms[j](col[i]) < transforms[j](col[i + 1])))
                throw InvalidArgument(
                    "marginal_transform_check: transform is not strictly increasing");
        for (std::size_t i = 0; i < data.n; ++i)
            tdata.x[i * data.d + j] = transforms[j](data.xv(i, j));
    }

    const std::vector<std::pair<EstMeasure, AveVariant>> probes = {
        {EstMeasure::Psi1CvM, AveVariant::Cs3}, {EstMeasure::Psi1KS, AveVariant::Cs4},
        {EstMeasure::Psi0TildeCvM, AveVariant::Cs3}, {EstMeasure::Psi0TildeKS, AveVariant::Cs3},
        {EstMeasure::CKTSupPairwise, AveVariant::Cs3},
        {EstMeasure::CKTDistToAverage, AveVariant::Cs3}};
    EstimatorSpec spec;
    spec.u_grid = 16;
    spec.n_design = std::min<std::size_t>(10, data.n);

    const auto a = estimate_measures(data, spec, probes, k);
    const auto b = estimate_measures(tdata, spec, probes, k);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i].value - b[i].value));

    const auto design = default_design_points(data, spec.n_design);
    for (const auto& z : design)
        worst = std::max(worst, std::abs(cond_kendall_tau(data, z, k) -
                                         cond_kendall_tau(tdata, z, k)));
    return worst <= 1e-12;
}

} // namespace nonsimplify
