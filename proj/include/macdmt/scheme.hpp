#pragma once

#include <Eigen/Dense>
#include <vector>

#include "macdmt/rational.hpp"
#include "macdmt/types.hpp"

namespace macdmt {

using ComplexMatrix = Eigen::MatrixXcd;

/// Per-user transmission pattern G_l: which symbol (1-based index) each
/// antenna sends at each channel use; 0 marks an idle cell. The first
/// N-M+1 columns are fully populated; the remaining M-1-l column pairs
/// taper off symmetrically.
struct TransmissionPattern {
    int M = 0;
    int N = 0;
    int l = 0;
    int T = 0;                            // N + M - 1 - 2l channel uses
    std::vector<std::vector<int>> cells;  // M rows x T cols, 0 = empty

    int symbol_count() const { return M * N - l * (l + 1); }
    Rational dims_per_use() const { return Rational(symbol_count(), T); }
};

/// The first k users' patterns stacked row-wise; user i occupies rows
/// (i-1)M+1..iM and symbol indices offset by (i-1)(MN - l(l+1)).
struct StackedPattern {
    int M = 0;
    int N = 0;
    int l = 0;
    int k = 0;
    int T = 0;
    std::vector<std::vector<int>> cells;  // kM rows x T cols

    int symbol_count() const { return k * (M * N - l * (l + 1)); }
};

/// Column subsets of the pooled channel matrix H (N x kM) seen by each
/// channel use: block m holds the 1-based H-column indices whose pattern
/// rows are active in pattern column m.
struct EffectiveChannel {
    int T = 0;
    int pooled_cols = 0;                  // kM
    std::vector<std::vector<int>> blocks;
};

/// The taper pattern for one user. Requires 1 <= M <= N and 0 <= l <= M-1.
TransmissionPattern build_pattern(int M, int N, int l);

/// Stacks the first k users' patterns. Requires 1 <= k <= K.
StackedPattern stack_patterns(const MacConfig& cfg, int l, int k);

/// Derives the per-use column subsets by scanning the pattern, and checks
/// them against the closed-form deletion rules (first N-M+1 blocks full;
/// pair v drops the top rows of one column and the bottom rows of the
/// other, per user).
EffectiveChannel effective_channel(const StackedPattern& pattern);

/// Shape-checked variant: H must be N x kM.
EffectiveChannel effective_channel(const ComplexMatrix& H, const StackedPattern& pattern);

/// Number of effective-channel blocks containing pooled column aM+b
/// (user a, antenna b): N-M+1 + min(M-l-1, M-b) + min(M-l-1, b-1).
int occurrence_count(int M, int N, int l, int a, int b);

/// Product over blocks of det(block^H block), each via QR. Rank-deficient
/// blocks contribute 0. Equals the Gram determinant of the assembled
/// block-diagonal effective matrix.
double gram_determinant(const ComplexMatrix& H, const EffectiveChannel& eff);

/// The assembled NT x (sum of block widths) block-diagonal matrix, for
/// cross-checking gram_determinant against a dense computation.
ComplexMatrix assemble_effective(const ComplexMatrix& H, const EffectiveChannel& eff);

/// Per-pooled-column factor of the Gram determinant: column j contributes,
/// for every block containing it, the squared norm of its component
/// orthogonal to the block columns preceding it. The product over columns
/// equals gram_determinant.
std::vector<double> determinant_decomposition(const ComplexMatrix& H,
                                              const EffectiveChannel& eff);

}  // namespace macdmt
