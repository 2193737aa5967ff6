#include "mcgl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mcgl/errors.hpp"

namespace mcgl {

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (!(lo < hi)) std::swap(lo, hi);
    double fa = f(lo);
    double fb = f(hi);
    if (fa == 0.0) return lo;
    if (fb == 0.0) return hi;
    if (std::isnan(fa) || std::isnan(fb) || (fa > 0) == (fb > 0))
        throw BracketError("find_root: no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");

    double a = lo, b = hi;
    // coarse bisection phase
    for (int it = 0; it < 200 && (b - a) > 1e-3; ++it) {
        double m = a + 0.5 * (b - a);
        double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }

    // Brent (zeroin)
    const double eps = std::numeric_limits<double>::epsilon();
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < 300; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q;
            p = std::fabs(p);
            const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
            const double min2 = std::fabs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::fabs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
    }
    return b;
}

namespace {

// One positive abscissa s of the tanh-sinh map: comp = 1 - tanh(pi/2 sinh s),
// i.e. the distance to the right end of [-1, 1]; weight = dx/ds.
struct Node {
    double comp;
    double weight;
};

constexpr double kSMax = 4.5;

struct NodeTable {
    std::vector<std::vector<Node>> levels;  // levels[j] = nodes new at level j (s > 0)

    NodeTable() {
        levels.resize(kMaxQuadLevel + 1);
        for (int j = 0; j <= kMaxQuadLevel; ++j) {
            const double h = std::ldexp(1.0, -j);
            const long kmax = static_cast<long>(std::floor(kSMax / h));
            for (long k = 1; k <= kmax; ++k) {
                if (j > 0 && k % 2 == 0) continue;
                const double s = k * h;
                const double u = 0.5 * std::numbers::pi * std::sinh(s);
                const double ch = std::cosh(u);
                levels[j].push_back({2.0 / (1.0 + std::exp(2.0 * u)),
                                     0.5 * std::numbers::pi * std::cosh(s) / (ch * ch)});
            }
        }
    }
};

const NodeTable& node_table() {
    static const NodeTable table;
    return table;
}

}  // namespace

std::vector<QuadResult> integrate_singular_many(double z1, double z2, std::size_t count,
                                                const MultiCore& eval, double rel_tol,
                                                int max_levels) {
    std::vector<QuadResult> res(count);
    if (count == 0) return res;
    if (!(z1 < z2)) throw DomainError("integrate_singular: need z1 < z2");
    max_levels = std::clamp(max_levels, 1, kMaxQuadLevel);
    constexpr int kMinLevel = 4;

    const auto& table = node_table();
    const double m = 0.5 * (z2 - z1);
    const double c = z1 + m;

    std::vector<double> sum(count, 0.0), prev(count, 0.0), vals(count);
    std::vector<int> skipped(count, 0);

    auto add = [&](double z, double dl, double dr, double w) {
        eval(z, dl, dr, vals);
        for (std::size_t i = 0; i < count; ++i) {
            if (std::isfinite(vals[i]))
                sum[i] += w * vals[i];
            else
                ++skipped[i];
        }
    };
    auto add_pair = [&](const Node& nd) {
        const double near = m * nd.comp;
        const double far = m * (2.0 - nd.comp);
        const double off = m - near;
        add(c + off, far, near, nd.weight);
        add(c - off, near, far, nd.weight);
    };

    // level 0: step h = 1, includes the centre node
    add(c, m, m, 0.5 * std::numbers::pi);
    for (const auto& nd : table.levels[0]) add_pair(nd);
    std::vector<double> est(count);
    for (std::size_t i = 0; i < count; ++i) est[i] = m * sum[i];

    int level = 0;
    bool all_done = false;
    std::vector<double> diff(count, std::numeric_limits<double>::infinity());
    while (level < max_levels && !all_done) {
        ++level;
        const double h = std::ldexp(1.0, -level);
        prev = est;
        for (const auto& nd : table.levels[level]) add_pair(nd);
        all_done = true;
        for (std::size_t i = 0; i < count; ++i) {
            est[i] = m * h * sum[i];
            diff[i] = std::fabs(est[i] - prev[i]);
            if (!(level >= kMinLevel && diff[i] <= rel_tol * std::fabs(est[i])))
                all_done = false;
        }
    }
    for (std::size_t i = 0; i < count; ++i) {
        res[i].value = est[i];
        res[i].err_estimate = diff[i];
        res[i].levels_used = level;
        res[i].converged = level >= kMinLevel && diff[i] <= rel_tol * std::fabs(est[i]);
        res[i].skipped_nodes = skipped[i];
    }
    return res;
}

QuadResult integrate_singular(const SingularIntegrand& q, double rel_tol, int max_levels) {
    const auto& core = q.core;
    auto r = integrate_singular_many(
        q.z1, q.z2, 1,
        [&core](double z, double dl, double dr, std::span<double> out) { out[0] = core(z, dl, dr); },
        rel_tol, max_levels);
    return r[0];
}

}  // namespace mcgl
