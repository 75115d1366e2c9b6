#include "bwf/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bwf/errors.hpp"

namespace bwf::ot {

namespace {

void validate_marginals(std::span<const double> a, std::span<const double> b,
                        const Matrix& C) {
    if (std::int64_t(a.size()) != C.rows || std::int64_t(b.size()) != C.cols)
        fail(ErrorCode::ShapeMismatch, "marginal sizes must match the cost matrix");
    if (a.empty() || b.empty()) fail(ErrorCode::Degenerate, "empty marginals");
    for (double x : C.v)
        if (!std::isfinite(x)) fail(ErrorCode::NonFiniteData, "cost matrix must be finite");
    double sa = 0.0, sb = 0.0;
    for (double x : a) {
        if (!(x > 0.0)) fail(ErrorCode::Degenerate, "source marginal has a zero-mass entry");
        sa += x;
    }
    for (double x : b) {
        if (!(x > 0.0)) fail(ErrorCode::Degenerate, "target marginal has a zero-mass entry");
        sb += x;
    }
    if (std::abs(sa - 1.0) > 1e-12 || std::abs(sb - 1.0) > 1e-12)
        fail(ErrorCode::UnbalancedMarginals, "marginals must each sum to 1 within 1e-12");
}

double plan_violation(const Matrix& P, std::span<const double> a,
                      std::span<const double> b) {
    double worst = 0.0;
    std::vector<double> col(std::size_t(P.cols), 0.0);
    for (std::int64_t i = 0; i < P.rows; ++i) {
        double row = 0.0;
        for (std::int64_t j = 0; j < P.cols; ++j) {
            const double p = P.at(i, j);
            row += p;
            col[std::size_t(j)] += p;
        }
        worst = std::max(worst, std::abs(row - a[std::size_t(i)]));
    }
    for (std::int64_t j = 0; j < P.cols; ++j)
        worst = std::max(worst, std::abs(col[std::size_t(j)] - b[std::size_t(j)]));
    return worst;
}

} // namespace

void SinkhornConfig::validate() const {
    if (!(epsilon > 0.0)) fail(ErrorCode::BadConfig, "epsilon must be > 0");
    if (!(tol > 0.0)) fail(ErrorCode::BadConfig, "tol must be > 0");
    if (max_iter < 1) fail(ErrorCode::BadConfig, "max_iter must be >= 1");
}

Matrix cost_matrix(std::span<const Waveform> source, std::span<const Waveform> target) {
    const std::int64_t m = std::int64_t(source.size());
    const std::int64_t n = std::int64_t(target.size());
    std::size_t len = 0;
    bool have = false;
    auto check = [&](std::span<const Waveform> set) {
        for (const Waveform& w : set) {
            if (!have) {
                len = w.samples.size();
                have = true;
            } else if (w.samples.size() != len) {
                fail(ErrorCode::LengthMismatch, "waveforms must share one length");
            }
        }
    };
    check(source);
    check(target);
    Matrix C(m, n);
    for (std::int64_t i = 0; i < m; ++i) {
        const auto& s = source[std::size_t(i)].samples;
        for (std::int64_t j = 0; j < n; ++j) {
            const auto& t = target[std::size_t(j)].samples;
            double acc = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                const double d = double(s[k]) - double(t[k]);
                acc += d * d;
            }
            C.at(i, j) = acc;
        }
    }
    return C;
}

TransportPlan emd_transport(std::span<const double> a, std::span<const double> b,
                            const Matrix& C) {
    validate_marginals(a, b, C);
    const std::int64_t m = C.rows, n = C.cols;
    const std::int64_t N = m + n + 1, root = m + n;

    double cmax = 0.0;
    for (double x : C.v) cmax = std::max(cmax, std::abs(x));
    const double big_m = (cmax + 1.0) * double(N);
    const double enter_eps = 1e-12 * std::max(1.0, cmax);

    // Spanning-tree basis stored per non-root node: the arc to its parent.
    std::vector<std::int64_t> parent(std::size_t(N), -1);
    std::vector<std::int64_t> depth(std::size_t(N), 0);
    std::vector<char> toward(std::size_t(N), 0); // arc directed node -> parent
    std::vector<double> flow(std::size_t(N), 0.0);
    std::vector<double> pi(std::size_t(N), 0.0);
    std::vector<std::vector<std::int64_t>> kids(static_cast<std::size_t>(N));

    for (std::int64_t i = 0; i < m; ++i) { // artificial i -> root
        parent[std::size_t(i)] = root;
        toward[std::size_t(i)] = 1;
        flow[std::size_t(i)] = a[std::size_t(i)];
        pi[std::size_t(i)] = big_m;
    }
    for (std::int64_t j = 0; j < n; ++j) { // artificial root -> j
        const std::size_t x = std::size_t(m + j);
        parent[x] = root;
        toward[x] = 0;
        flow[x] = b[std::size_t(j)];
        pi[x] = -big_m;
    }

    auto rebuild = [&]() {
        for (auto& k : kids) k.clear();
        for (std::int64_t x = 0; x < N; ++x)
            if (parent[std::size_t(x)] >= 0)
                kids[std::size_t(parent[std::size_t(x)])].push_back(x);
        std::vector<std::int64_t> stack{root};
        depth[std::size_t(root)] = 0;
        while (!stack.empty()) {
            const std::int64_t x = stack.back();
            stack.pop_back();
            for (std::int64_t k : kids[std::size_t(x)]) {
                depth[std::size_t(k)] = depth[std::size_t(x)] + 1;
                stack.push_back(k);
            }
        }
    };
    rebuild();

    const std::int64_t pivot_cap = 1000 + 64 * N * N;
    std::vector<std::int64_t> us, vs, chain, stack;
    struct ArcData {
        char tw;
        double f;
    };
    std::vector<ArcData> saved;

    for (std::int64_t pivots = 0;; ++pivots) {
        if (pivots > pivot_cap) fail(ErrorCode::Degenerate, "pivot limit exceeded");

        // entering arc: most negative reduced cost, first in row-major order
        double best = -enter_eps;
        std::int64_t bu = -1, bv = -1;
        for (std::int64_t i = 0; i < m; ++i) {
            const double pi_i = pi[std::size_t(i)];
            for (std::int64_t j = 0; j < n; ++j) {
                const double rc = C.at(i, j) - pi_i + pi[std::size_t(m + j)];
                if (rc < best) {
                    best = rc;
                    bu = i;
                    bv = m + j;
                }
            }
        }
        if (bu < 0) break; // optimal
        const double rc_e = best;

        // apex = nearest common ancestor of bu and bv
        std::int64_t x = bu, y = bv;
        while (depth[std::size_t(x)] > depth[std::size_t(y)]) x = parent[std::size_t(x)];
        while (depth[std::size_t(y)] > depth[std::size_t(x)]) y = parent[std::size_t(y)];
        while (x != y) {
            x = parent[std::size_t(x)];
            y = parent[std::size_t(y)];
        }
        const std::int64_t apex = x;

        us.clear();
        vs.clear();
        for (std::int64_t t = bu; t != apex; t = parent[std::size_t(t)]) us.push_back(t);
        for (std::int64_t t = bv; t != apex; t = parent[std::size_t(t)]) vs.push_back(t);

        // Pushing theta around the cycle apex->..->bu->bv->..->apex decreases
        // flow on u-side arcs directed toward the root and on v-side arcs
        // directed away from it.
        double theta = std::numeric_limits<double>::infinity();
        for (std::int64_t t : us)
            if (toward[std::size_t(t)]) theta = std::min(theta, flow[std::size_t(t)]);
        for (std::int64_t t : vs)
            if (!toward[std::size_t(t)]) theta = std::min(theta, flow[std::size_t(t)]);
        if (!std::isfinite(theta)) fail(ErrorCode::Degenerate, "unbounded pivot direction");

        // Cunningham's anti-cycling rule: the last blocking arc around the
        // cycle, traversed from the apex in the entering arc's direction.
        std::int64_t leave = -1;
        bool leave_uside = false;
        for (std::int64_t idx = std::int64_t(us.size()) - 1; idx >= 0; --idx) {
            const std::int64_t t = us[std::size_t(idx)];
            if (toward[std::size_t(t)] && flow[std::size_t(t)] == theta) {
                leave = t;
                leave_uside = true;
            }
        }
        for (std::size_t idx = 0; idx < vs.size(); ++idx) {
            const std::int64_t t = vs[idx];
            if (!toward[std::size_t(t)] && flow[std::size_t(t)] == theta) {
                leave = t;
                leave_uside = false;
            }
        }
        if (leave < 0) fail(ErrorCode::Degenerate, "no blocking arc in pivot cycle");

        for (std::int64_t t : us)
            flow[std::size_t(t)] += toward[std::size_t(t)] ? -theta : theta;
        for (std::int64_t t : vs)
            flow[std::size_t(t)] += toward[std::size_t(t)] ? theta : -theta;

        // Re-root the detached subtree at the entering arc's endpoint inside
        // it, then hang it off the other endpoint.
        const std::int64_t w = leave_uside ? bu : bv;
        const std::int64_t attach = leave_uside ? bv : bu;
        chain.clear();
        for (std::int64_t t = w;; t = parent[std::size_t(t)]) {
            chain.push_back(t);
            if (t == leave) break;
        }
        saved.clear();
        for (std::int64_t t : chain)
            saved.push_back({toward[std::size_t(t)], flow[std::size_t(t)]});
        for (std::size_t q = 0; q + 1 < chain.size(); ++q) {
            const std::size_t px = std::size_t(chain[q + 1]);
            parent[px] = chain[q];
            toward[px] = saved[q].tw ? 0 : 1;
            flow[px] = saved[q].f;
        }
        parent[std::size_t(w)] = attach;
        toward[std::size_t(w)] = leave_uside ? 1 : 0;
        flow[std::size_t(w)] = theta;
        rebuild();

        // Potentials change by a constant on the re-rooted subtree so the
        // entering arc's reduced cost becomes zero.
        const double delta = leave_uside ? rc_e : -rc_e;
        stack.assign(1, w);
        while (!stack.empty()) {
            const std::int64_t t = stack.back();
            stack.pop_back();
            pi[std::size_t(t)] += delta;
            for (std::int64_t k : kids[std::size_t(t)]) stack.push_back(k);
        }
    }

    TransportPlan plan;
    plan.a.assign(a.begin(), a.end());
    plan.b.assign(b.begin(), b.end());
    plan.coupling = Matrix(m, n);
    for (std::int64_t node = 0; node < m + n; ++node) {
        const std::int64_t p = parent[std::size_t(node)];
        if (p < 0 || p == root) continue;
        if (node < m && p >= m)
            plan.coupling.at(node, p - m) = std::max(0.0, flow[std::size_t(node)]);
        else if (node >= m && p < m)
            plan.coupling.at(p, node - m) = std::max(0.0, flow[std::size_t(node)]);
    }
    return plan;
}

SinkhornResult sinkhorn_transport(std::span<const double> a, std::span<const double> b,
                                  const Matrix& C, const SinkhornConfig& cfg) {
    cfg.validate();
    validate_marginals(a, b, C);
    const std::int64_t m = C.rows, n = C.cols;

    Matrix K(m, n);
    for (std::size_t k = 0; k < C.v.size(); ++k) K.v[k] = std::exp(-C.v[k] / cfg.epsilon);

    std::vector<double> u(std::size_t(m), 1.0), v(std::size_t(n), 1.0);
    std::vector<double> kv(static_cast<std::size_t>(m));
    std::vector<double> ktu(static_cast<std::size_t>(n));
    SinkhornResult res;
    res.plan.a.assign(a.begin(), a.end());
    res.plan.b.assign(b.begin(), b.end());
    res.plan.coupling = Matrix(m, n);
    Matrix& P = res.plan.coupling;

    for (std::int64_t it = 1; it <= cfg.max_iter; ++it) {
        for (std::int64_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::int64_t j = 0; j < n; ++j) acc += K.at(i, j) * v[std::size_t(j)];
            kv[std::size_t(i)] = acc;
        }
        bool under = false;
        for (std::int64_t i = 0; i < m; ++i) {
            if (!(kv[std::size_t(i)] > 0.0) || !std::isfinite(kv[std::size_t(i)])) {
                under = true;
                break;
            }
            u[std::size_t(i)] = a[std::size_t(i)] / kv[std::size_t(i)];
        }
        if (!under) {
            for (std::int64_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::int64_t i = 0; i < m; ++i) acc += K.at(i, j) * u[std::size_t(i)];
                ktu[std::size_t(j)] = acc;
            }
            for (std::int64_t j = 0; j < n; ++j) {
                if (!(ktu[std::size_t(j)] > 0.0) || !std::isfinite(ktu[std::size_t(j)])) {
                    under = true;
                    break;
                }
                v[std::size_t(j)] = b[std::size_t(j)] / ktu[std::size_t(j)];
            }
        }
        if (under) return sinkhorn_transport_log(a, b, C, cfg);

        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < n; ++j)
                P.at(i, j) = u[std::size_t(i)] * K.at(i, j) * v[std::size_t(j)];
        res.iterations = it;
        res.violation = plan_violation(P, a, b);
        if (!std::isfinite(res.violation)) return sinkhorn_transport_log(a, b, C, cfg);
        if (res.violation < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

SinkhornResult sinkhorn_transport_log(std::span<const double> a,
                                      std::span<const double> b, const Matrix& C,
                                      const SinkhornConfig& cfg) {
    cfg.validate();
    validate_marginals(a, b, C);
    const std::int64_t m = C.rows, n = C.cols;
    const double eps = cfg.epsilon;

    std::vector<double> f(std::size_t(m), 0.0), g(std::size_t(n), 0.0);
    std::vector<double> loga(static_cast<std::size_t>(m));
    std::vector<double> logb(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < m; ++i) loga[std::size_t(i)] = std::log(a[std::size_t(i)]);
    for (std::int64_t j = 0; j < n; ++j) logb[std::size_t(j)] = std::log(b[std::size_t(j)]);

    SinkhornResult res;
    res.used_log_domain = true;
    res.plan.a.assign(a.begin(), a.end());
    res.plan.b.assign(b.begin(), b.end());
    res.plan.coupling = Matrix(m, n);
    Matrix& P = res.plan.coupling;
    std::vector<double> z;

    auto lse = [&](std::span<const double> vals) {
        double hi = -std::numeric_limits<double>::infinity();
        for (double x : vals) hi = std::max(hi, x);
        double acc = 0.0;
        for (double x : vals) acc += std::exp(x - hi);
        return hi + std::log(acc);
    };

    for (std::int64_t it = 1; it <= cfg.max_iter; ++it) {
        z.resize(std::size_t(n));
        for (std::int64_t i = 0; i < m; ++i) {
            for (std::int64_t j = 0; j < n; ++j)
                z[std::size_t(j)] = (g[std::size_t(j)] - C.at(i, j)) / eps;
            f[std::size_t(i)] = eps * (loga[std::size_t(i)] - lse(z));
        }
        z.resize(std::size_t(m));
        for (std::int64_t j = 0; j < n; ++j) {
            for (std::int64_t i = 0; i < m; ++i)
                z[std::size_t(i)] = (f[std::size_t(i)] - C.at(i, j)) / eps;
            g[std::size_t(j)] = eps * (logb[std::size_t(j)] - lse(z));
        }
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < n; ++j)
                P.at(i, j) =
                    std::exp((f[std::size_t(i)] + g[std::size_t(j)] - C.at(i, j)) / eps);
        res.iterations = it;
        res.violation = plan_violation(P, a, b);
        if (res.violation < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

std::vector<Waveform> barycentric_map(const TransportPlan& plan,
                                      std::span<const Waveform> source,
                                      std::span<const Waveform> target,
                                      MapDirection direction) {
    const Matrix& P = plan.coupling;
    if (P.rows != std::int64_t(source.size()) || P.cols != std::int64_t(target.size()))
        fail(ErrorCode::ShapeMismatch, "plan dimensions must match the waveform sets");

    const bool to_source = direction == MapDirection::TargetToSource;
    std::span<const Waveform> basis = to_source ? source : target;
    const std::int64_t n_out = to_source ? P.cols : P.rows;
    if (basis.empty()) fail(ErrorCode::Degenerate, "empty basis set");
    const std::size_t len = basis[0].samples.size();
    for (const Waveform& w : basis)
        if (w.samples.size() != len)
            fail(ErrorCode::LengthMismatch, "basis waveforms must share one length");

    std::vector<Waveform> mapped(static_cast<std::size_t>(n_out));
    std::vector<double> acc(len);
    for (std::int64_t k = 0; k < n_out; ++k) {
        double mass = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        const std::int64_t n_basis = std::int64_t(basis.size());
        for (std::int64_t r = 0; r < n_basis; ++r) {
            const double p = to_source ? P.at(r, k) : P.at(k, r);
            if (p == 0.0) continue;
            mass += p;
            const auto& s = basis[std::size_t(r)].samples;
            for (std::size_t t = 0; t < len; ++t) acc[t] += p * double(s[t]);
        }
        if (mass < 1e-15)
            fail(ErrorCode::ZeroColumnMass, "mapped sample has no plan mass");
        Waveform& out = mapped[std::size_t(k)];
        out.grid = basis[0].grid;
        out.samples.resize(len);
        for (std::size_t t = 0; t < len; ++t)
            out.samples[t] = float(acc[t] / mass);
    }
    return mapped;
}

double transport_cost(const TransportPlan& plan, const Matrix& C) {
    if (plan.coupling.rows != C.rows || plan.coupling.cols != C.cols)
        fail(ErrorCode::ShapeMismatch, "plan and cost matrix dimensions differ");
    double acc = 0.0;
    for (std::size_t k = 0; k < C.v.size(); ++k) acc += plan.coupling.v[k] * C.v[k];
    return acc;
}

double default_epsilon(const Matrix& C, double scale) {
    if (!(scale > 0.0)) fail(ErrorCode::BadConfig, "epsilon scale must be > 0");
    if (C.v.empty()) fail(ErrorCode::Degenerate, "empty cost matrix");
    std::vector<double> sorted = C.v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    double pivot = sorted.size() % 2 == 1 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    if (!(pivot > 0.0)) {
        double mean = 0.0;
        for (double x : sorted) mean += x;
        pivot = mean / double(sorted.size());
    }
    if (!(pivot > 0.0)) pivot = 1.0;
    return scale * pivot;
}

} // namespace bwf::ot
