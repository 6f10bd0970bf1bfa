#pragma once

#include <optional>
#include <string>
#include <vector>

#include "macdmt/rational.hpp"
#include "macdmt/types.hpp"

namespace macdmt {

/// Per-user average dimensions per channel use (D_1..D_K).
using DimTuple = std::vector<Rational>;
/// Per-user multiplexing gains (r_1..r_K).
using RateTuple = std::vector<Rational>;

Rational rate_max(const RateTuple& rates);

/// Checks 0 <= D_i <= M and sum D_i <= L (the feasible set of dimension
/// allocations).
bool dims_feasible(const MacConfig& cfg, const DimTuple& dims);

struct OptMethod {
    enum Value { ClosedForm, Grid };
};

struct OptResult {
    Rational value;            // exact objective at argmax
    DimTuple argmax;
    unsigned binding_subset;   // bitmask, bit i = user i+1, achieves the inner min
    OptMethod::Value method = OptMethod::ClosedForm;
    bool grid_disagreement = false;  // grid beat the analytic candidates by > tol
};

struct WitnessReport {
    Rational r0;
    Rational epsilon;
    RateTuple rates;
    Rational ic_value;
    Rational fc_value;
};

struct OptOptions {
    Rational grid_step{1, 24};
    int refine_rounds = 3;
    int subset_user_cap = 12;  // 2^K subset enumeration guard
    double tolerance = 1e-6;
    int threads = 0;  // 0 = hardware concurrency
};

/// Inner objective of the max-min bound: the minimum over all nonempty user
/// subsets A of d^{*,D_A}_{|A|M,N}(R_A), together with an argmin subset
/// (ties broken by smaller subset size, then lexicographically).
/// A subset with D_A = 0 contributes the limiting anchor |A|MN when R_A = 0
/// and 0 otherwise.
std::pair<Rational, unsigned> subset_objective(const MacConfig& cfg, const DimTuple& dims,
                                               const RateTuple& rates);

/// Maximizes subset_objective over the feasible dimension allocations by an
/// analytic candidate set (equal-dimension tuples at every anchor-interval
/// endpoint of every pooled size, the intermediate-regime D_l, N/K, and the
/// dimension attaining d^{*,(FC)}_{M,N}(r_max)) combined with a grid search
/// plus local refinement.
OptResult maximize_dim_allocation(const MacConfig& cfg, const RateTuple& rates,
                                  const OptOptions& opts = {});

/// Upper bound on the optimal IC DMT at an arbitrary rate tuple. Closed form
/// d^{*,(FC)}_{M,N}(r_max) when N >= (K+1)M - 1, numeric max-min otherwise.
OptResult ic_dmt_general_upper(const MacConfig& cfg, const RateTuple& rates,
                               const OptOptions& opts = {});

/// A concrete rate tuple at which the IC bound is strictly below the
/// finite-constellation DMT, when one exists (K >= 2 and N < (K+1)M - 1);
/// none in the user-limited regime and for K = 1 (where the bound meets the
/// finite-constellation curve). r0/epsilon override the defaults of the
/// two-user perturbed construction (M = s+1, N = 3s).
std::optional<WitnessReport> suboptimality_witness(const MacConfig& cfg,
                                                   const OptOptions& opts = {},
                                                   std::optional<Rational> r0 = std::nullopt,
                                                   std::optional<Rational> epsilon = std::nullopt);

struct LpResult {
    Rational value;
    bool clamped = false;  // target was negative (clamped to 0) or unreachable
};

/// Exact solution of the exponent-minimization LP:
///   min sum_{i=1}^{sM} (N-i+1) a_i
///   s.t. sum_{a,b} (N-b+1) a_{aM+b} = s(MN - l(l+1) - (N+M-1-2l) r_max),
///        0 <= a_i <= KMN.
/// Solved by the greedy closed form (fill coordinates in increasing
/// objective-per-constraint ratio).
LpResult exponent_min_lp(int s_size, int M, int N, int l, const Rational& r_max, int K);

/// The ratio s(N - (aM+b) + 1)/(N - b + 1); >= 1 whenever N >= (s+1)M - 1.
Rational ratio_bound(int s_size, int M, int N, int a, int b);

}  // namespace macdmt
