#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bwf/core.hpp"

namespace bwf::ot {

/// Dense row-major matrix of 64-bit reals.
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c)
        : rows(r), cols(c), v(static_cast<std::size_t>(r * c), 0.0) {}

    double& at(std::int64_t i, std::int64_t j) {
        return v[static_cast<std::size_t>(i * cols + j)];
    }
    double at(std::int64_t i, std::int64_t j) const {
        return v[static_cast<std::size_t>(i * cols + j)];
    }
};

/// Coupling between a source population (rows) and a target population
/// (columns): nonnegative entries whose row sums match `a` and column sums
/// match `b` within the solver tolerance.
struct TransportPlan {
    Matrix coupling;
    std::vector<double> a; // source weights
    std::vector<double> b; // target weights
};

struct SinkhornConfig {
    double epsilon = 0.0; // regularization strength, > 0
    double tol = 1e-9;    // max marginal violation accepted as converged
    std::int64_t max_iter = 10000;

    void validate() const;
};

struct SinkhornResult {
    TransportPlan plan;
    std::int64_t iterations = 0;
    double violation = 0.0;  // final max marginal violation
    bool converged = false;  // violation < tol within max_iter
    bool used_log_domain = false;
};

/// Entry (i, j) = squared Euclidean distance between source waveform i and
/// target waveform j. All waveforms must share one length.
Matrix cost_matrix(std::span<const Waveform> source, std::span<const Waveform> target);

/// Exact minimizer of <plan, C> over the transportation polytope, computed
/// with a primal network simplex on the bipartite flow graph (big-M
/// artificial root basis, strongly feasible trees). Deterministic
/// tie-breaking: the entering arc is the most negative reduced cost, first in
/// row-major order on ties; the leaving arc follows Cunningham's rule (last
/// blocking arc around the cycle from the apex, which also rules out
/// cycling). Marginals must each sum to 1 within 1e-12 and contain no
/// zero-mass entries.
TransportPlan emd_transport(std::span<const double> a, std::span<const double> b,
                            const Matrix& C);

/// Entropic-regularized plan diag(u)·exp(-C/eps)·diag(v) by alternating
/// marginal scaling. Switches to a log-domain (log-sum-exp) sweep when the
/// standard iteration underflows; `sinkhorn_transport_log` runs that variant
/// directly. Non-convergence is reported in the result, not thrown.
SinkhornResult sinkhorn_transport(std::span<const double> a, std::span<const double> b,
                                  const Matrix& C, const SinkhornConfig& cfg);
SinkhornResult sinkhorn_transport_log(std::span<const double> a,
                                      std::span<const double> b, const Matrix& C,
                                      const SinkhornConfig& cfg);

enum class MapDirection {
    TargetToSource, // replace each target sample by its plan-weighted source mean
    SourceToTarget,
};

/// Barycentric projection through a transport plan. For target->source,
/// mapped_j = sum_i plan(i,j) * source_i / sum_i plan(i,j); the opposite
/// direction swaps the roles. Throws ZeroColumnMass when the dividing
/// marginal of some mapped sample is below 1e-15.
std::vector<Waveform> barycentric_map(const TransportPlan& plan,
                                      std::span<const Waveform> source,
                                      std::span<const Waveform> target,
                                      MapDirection direction);

/// <plan, C>: total transport cost of a plan under a cost matrix.
double transport_cost(const TransportPlan& plan, const Matrix& C);

/// Scale-aware default regularization: scale * median(C) (falls back to the
/// mean, then to scale itself, when the median is zero).
double default_epsilon(const Matrix& C, double scale = 0.01);

} // namespace bwf::ot
