#include "macdmt/scheme.hpp"

#include <algorithm>
#include <stdexcept>

namespace macdmt {

TransmissionPattern build_pattern(int M, int N, int l) {
    if (M < 1 || M > N) throw std::invalid_argument("build_pattern: requires 1 <= M <= N");
    if (l < 0 || l > M - 1) throw std::invalid_argument("build_pattern: l out of 0..M-1");

    TransmissionPattern p;
    p.M = M;
    p.N = N;
    p.l = l;
    p.T = N + M - 1 - 2 * l;
    p.cells.assign(M, std::vector<int>(p.T, 0));

    // Dense block: every antenna active for the first N-M+1 uses,
    // numbered column-major.
    int sym = 1;
    for (int col = 0; col < N - M + 1; ++col)
        for (int row = 0; row < M; ++row) p.cells[row][col] = sym++;

    // Column pairs, widest first: pair v sends M-v symbols on the top
    // antennas 1..M-v, then M-v symbols on the bottom antennas v+1..M.
    for (int v = 1; v <= M - 1 - l; ++v) {
        int c1 = (N - M + 1) + 2 * (v - 1);
        for (int row = 0; row < M - v; ++row) p.cells[row][c1] = sym++;
        for (int row = v; row < M; ++row) p.cells[row][c1 + 1] = sym++;
    }
    return p;
}

StackedPattern stack_patterns(const MacConfig& cfg, int l, int k) {
    if (k < 1 || k > cfg.K) throw std::invalid_argument("stack_patterns: k out of 1..K");
    TransmissionPattern base = build_pattern(cfg.M, cfg.N, l);

    StackedPattern s;
    s.M = cfg.M;
    s.N = cfg.N;
    s.l = l;
    s.k = k;
    s.T = base.T;
    s.cells.assign(k * cfg.M, std::vector<int>(base.T, 0));
    const int offset = base.symbol_count();
    for (int u = 0; u < k; ++u)
        for (int row = 0; row < cfg.M; ++row)
            for (int col = 0; col < base.T; ++col)
                if (base.cells[row][col] != 0)
                    s.cells[u * cfg.M + row][col] = base.cells[row][col] + u * offset;
    return s;
}

EffectiveChannel effective_channel(const StackedPattern& pattern) {
    const int M = pattern.M, N = pattern.N, l = pattern.l, k = pattern.k;
    EffectiveChannel eff;
    eff.T = pattern.T;
    eff.pooled_cols = k * M;
    eff.blocks.resize(pattern.T);
    for (int m = 0; m < pattern.T; ++m)
        for (int j = 0; j < k * M; ++j)
            if (pattern.cells[j][m] != 0) eff.blocks[m].push_back(j + 1);

    // Cross-check against the closed-form deletion rules.
    for (int m = 1; m <= N - M + 1; ++m)
        if ((int)eff.blocks[m - 1].size() != k * M)
            throw std::logic_error("effective_channel: dense block not full");
    for (int v = 1; v <= M - 1 - l; ++v) {
        std::vector<int> top, bottom;  // per user: antennas 1..M-v / v+1..M
        for (int u = 0; u < k; ++u) {
            for (int b = 1; b <= M - v; ++b) top.push_back(u * M + b);
            for (int b = v + 1; b <= M; ++b) bottom.push_back(u * M + b);
        }
        std::sort(top.begin(), top.end());
        std::sort(bottom.begin(), bottom.end());
        int c1 = (N - M + 1) + 2 * (v - 1);
        if (eff.blocks[c1] != top || eff.blocks[c1 + 1] != bottom)
            throw std::logic_error("effective_channel: pair block mismatch");
    }
    return eff;
}

EffectiveChannel effective_channel(const ComplexMatrix& H, const StackedPattern& pattern) {
    if (H.rows() != pattern.N || H.cols() != (Eigen::Index)pattern.k * pattern.M)
        throw std::invalid_argument("effective_channel: H must be N x kM");
    return effective_channel(pattern);
}

int occurrence_count(int M, int N, int l, int a, int b) {
    if (M < 1 || M > N || l < 0 || l > M - 1 || a < 0 || b < 1 || b > M)
        throw std::invalid_argument("occurrence_count: bad indices");
    (void)a;  // every user sees the same per-antenna count
    return (N - M + 1) + std::min(M - l - 1, M - b) + std::min(M - l - 1, b - 1);
}

double gram_determinant(const ComplexMatrix& H, const EffectiveChannel& eff) {
    double prod = 1.0;
    for (const auto& block : eff.blocks) {
        if (block.empty()) throw std::invalid_argument("gram_determinant: empty block");
        if (block.size() > (size_t)H.rows()) return 0.0;  // rank deficient by shape
        ComplexMatrix B(H.rows(), (Eigen::Index)block.size());
        for (size_t i = 0; i < block.size(); ++i) B.col(i) = H.col(block[i] - 1);
        Eigen::HouseholderQR<ComplexMatrix> qr(B);
        for (size_t i = 0; i < block.size(); ++i)
            prod *= std::norm(qr.matrixQR()((Eigen::Index)i, (Eigen::Index)i));
    }
    return prod;
}

ComplexMatrix assemble_effective(const ComplexMatrix& H, const EffectiveChannel& eff) {
    Eigen::Index total = 0;
    for (const auto& b : eff.blocks) total += (Eigen::Index)b.size();
    ComplexMatrix A = ComplexMatrix::Zero(H.rows() * eff.T, total);
    Eigen::Index col = 0;
    for (int m = 0; m < eff.T; ++m)
        for (int j : eff.blocks[m]) A.block(m * H.rows(), col++, H.rows(), 1) = H.col(j - 1);
    return A;
}

std::vector<double> determinant_decomposition(const ComplexMatrix& H,
                                              const EffectiveChannel& eff) {
    std::vector<double> contrib(eff.pooled_cols, 1.0);
    for (const auto& block : eff.blocks) {
        if (block.empty())
            throw std::invalid_argument("determinant_decomposition: empty block");
        // Gram-Schmidt within the block: the factor for block position i is
        // the squared residual norm of column i against positions 0..i-1.
        std::vector<Eigen::VectorXcd> basis;  // orthonormal
        for (size_t i = 0; i < block.size(); ++i) {
            Eigen::VectorXcd v = H.col(block[i] - 1);
            for (const auto& q : basis) v -= q.dot(v) * q;
            double n2 = v.squaredNorm();
            contrib[block[i] - 1] *= n2;
            if (n2 > 0) basis.push_back(v / std::sqrt(n2));
        }
    }
    return contrib;
}

}  // namespace macdmt
