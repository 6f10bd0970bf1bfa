#pragma once

#include <utility>
#include <vector>

#include "macdmt/curve.hpp"
#include "macdmt/rational.hpp"
#include "macdmt/types.hpp"

namespace macdmt {

/// Optimal DMT of finite constellations in a point-to-point channel with m
/// transmit and n receive antennas: the piecewise-linear curve through the
/// anchor points (l, (m-l)(n-l)), l = 0..min(m,n).
PiecewiseLinearCurve fc_dmt_p2p(int m, int n);

/// Closed D-interval in which the IC upper-bound line d^{*,D}_{m,n} pivots
/// around the anchor (l, (m-l)(n-l)). Adjacent intervals share endpoints.
/// Valid for 0 <= l <= min(m,n)-1; the l = 0 interval starts at 0.
std::pair<Rational, Rational> ic_dim_interval(int m, int n, int l);

/// Upper bound on the DMT of any IC with D average dimensions per channel
/// use in an m-by-n point-to-point channel, evaluated at multiplexing gain r.
/// The line pivots on the anchor of the interval containing D and is clamped
/// at 0 for r >= D. Requires 0 < D <= min(m,n) and r >= 0.
Rational ic_dmt_upper_p2p(int m, int n, const Rational& D, const Rational& r);

/// Optimal DMT of finite constellations in the symmetric K-user MAC:
/// single-user curve up to min(N/(K+1), M), then the contracted pooled curve
/// d^{*,(FC)}_{KM,N}(Kr) up to min(M, N/K).
PiecewiseLinearCurve fc_dmt_mac_symmetric(const MacConfig& cfg);

/// Closed-form upper bound on the optimal DMT of ICs in the symmetric case,
/// together with the regime that selected it.
std::pair<Regime, PiecewiseLinearCurve> ic_dmt_mac_symmetric(const MacConfig& cfg);

/// Per-user average number of dimensions per channel use attaining the
/// symmetric IC optimum at multiplexing gain r. Requires 0 <= r <= L/K.
Rational optimal_dim_symmetric(const MacConfig& cfg, const Rational& r);

/// Optimal DMT of finite constellations at an arbitrary rate tuple:
/// min over nonempty user subsets A of d^{*,(FC)}_{|A|M,N}(sum of rates in A).
Rational fc_dmt_mac_general(const MacConfig& cfg, const std::vector<Rational>& rates);

enum class OrthogonalMode { TDMA, CDMA };

/// DMT of orthogonalizing transmission in the symmetric case: each user pays
/// the K-fold rate contraction, with per-antenna streams (M = 1 framing)
/// under CDMA.
Rational orthogonal_dmt(const MacConfig& cfg, const Rational& r, OrthogonalMode mode);

/// Dimension level D_l of the middle line in the intermediate regime,
/// N = (K-1)M + 1 + l.
Rational intermediate_dim(int M, int N, int l);

/// D attaining d^{*,(FC)}_{m,n}(r) among all single lines d^{*,D}_{m,n}:
/// the upper endpoint of the interval of l = floor(r) (clamped to the last
/// anchor).
Rational fc_optimal_dim(int m, int n, const Rational& r);

}  // namespace macdmt
