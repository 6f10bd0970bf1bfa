#include "macdmt/dmt_core.hpp"

#include <algorithm>
#include <stdexcept>

namespace macdmt {

PiecewiseLinearCurve fc_dmt_p2p(int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("fc_dmt_p2p: m, n must be >= 1");
    PiecewiseLinearCurve c;
    for (int l = 0; l <= std::min(m, n); ++l)
        c.append(Rational(l), Rational((long long)(m - l) * (n - l)));
    return c;
}

std::pair<Rational, Rational> ic_dim_interval(int m, int n, int l) {
    if (l < 0 || l > std::min(m, n) - 1)
        throw std::out_of_range("ic_dim_interval: l out of range");
    long long mn = (long long)m * n;
    Rational lo = l == 0 ? Rational(0)
                         : Rational(mn - (long long)(l - 1) * l, n + m - 1 - 2 * (l - 1));
    Rational hi(mn - (long long)l * (l + 1), n + m - 1 - 2 * l);
    return {lo, hi};
}

Rational ic_dmt_upper_p2p(int m, int n, const Rational& D, const Rational& r) {
    int mi = std::min(m, n);
    if (D <= Rational(0) || D > Rational(mi))
        throw std::domain_error("ic_dmt_upper_p2p: D must be in (0, min(m,n)]");
    if (r.is_negative()) throw std::domain_error("ic_dmt_upper_p2p: r must be >= 0");
    if (r >= D) return Rational(0);

    // Pivot interval containing D; intervals share endpoints and the
    // two formulas agree there, so the first matching l is fine.
    int l = 0;
    while (D > ic_dim_interval(m, n, l).second) ++l;

    Rational anchor((long long)(m - l) * (n - l));
    Rational v = anchor * (D - r) / (D - Rational(l));
    return Rational::max(Rational(0), v);
}

Rational intermediate_dim(int M, int N, int l) {
    long long fl2 = l / 2;
    Rational frac(l % 2, 2);  // l/2 - floor(l/2)
    Rational num = Rational((long long)M * N) - Rational(fl2 * (fl2 + 1)) -
                   Rational(2) * Rational(fl2 + 1) * frac;
    return num / Rational(N + M - 1 - l);
}

Rational fc_optimal_dim(int m, int n, const Rational& r) {
    long long l = r.floor();
    long long cap = std::min(m, n) - 1;
    if (l > cap) l = cap;
    if (l < 0) throw std::domain_error("fc_optimal_dim: r must be >= 0");
    return ic_dim_interval(m, n, (int)l).second;
}

PiecewiseLinearCurve fc_dmt_mac_symmetric(const MacConfig& cfg) {
    const int K = cfg.K, M = cfg.M, N = cfg.N;
    PiecewiseLinearCurve single = fc_dmt_p2p(M, N);
    PiecewiseLinearCurve pooled = fc_dmt_p2p(K * M, N);
    Rational sw = Rational::min(Rational(N, K + 1), Rational(M));
    Rational end = Rational::min(Rational(M), Rational(N, K));

    PiecewiseLinearCurve c;
    for (const auto& [r, d] : single.breakpoints()) {
        if (r >= sw) break;
        c.append(r, d);
    }
    c.append(sw, single.eval(sw));
    // Contracted pooled piece d^{*,(FC)}_{KM,N}(Kr); breakpoints at integer
    // pooled gains.
    for (const auto& [pr, pd] : pooled.breakpoints()) {
        Rational r = pr / Rational(K);
        if (r <= sw) continue;
        if (r >= end) break;
        c.append(r, pd);
    }
    c.append(end, pooled.eval(end * Rational(K)));
    return c;
}

std::pair<Regime, PiecewiseLinearCurve> ic_dmt_mac_symmetric(const MacConfig& cfg) {
    const int K = cfg.K, M = cfg.M, N = cfg.N;
    Regime reg = Regime::classify(cfg);

    switch (reg.tag) {
        case Regime::Tag::UserLimited:
            return {reg, fc_dmt_p2p(M, N)};
        case Regime::Tag::HeavilyLoaded: {
            PiecewiseLinearCurve c;
            c.append(Rational(0), Rational((long long)M * N));
            c.append(Rational(N, K), Rational(0));
            return {reg, c};
        }
        case Regime::Tag::Intermediate:
            break;
    }

    const int l = reg.l;
    const long long fl2 = l / 2;
    Rational r1(fl2 + 1);
    Rational r2((K - 1) * (long long)M + (l + 1) / 2, K);
    Rational end(cfg.L(), K);
    PiecewiseLinearCurve single = fc_dmt_p2p(M, N);
    PiecewiseLinearCurve pooled = fc_dmt_p2p(K * M, N);

    // Middle line d*(r) = c0 - (N+M-1-l) r.
    Rational c0 = intermediate_dim(M, N, l) * Rational(N + M - 1 - l);
    auto dstar = [&](const Rational& r) { return c0 - Rational(N + M - 1 - l) * r; };

    PiecewiseLinearCurve c;
    for (const auto& [r, d] : single.breakpoints()) {
        if (r >= r1) break;
        c.append(r, d);
    }
    c.append(r1, single.eval(r1));
    if (r2 > r1) {
        if (dstar(r1) != single.eval(r1))
            throw std::logic_error("intermediate regime: middle line mismatch at r1");
        c.append(r2, dstar(r2));
    }
    for (const auto& [pr, pd] : pooled.breakpoints()) {
        Rational r = pr / Rational(K);
        if (r <= r2) continue;
        if (r >= end) break;
        c.append(r, pd);
    }
    c.append(end, pooled.eval(end * Rational(K)));
    return {reg, c};
}

Rational optimal_dim_symmetric(const MacConfig& cfg, const Rational& r) {
    const int K = cfg.K, M = cfg.M, N = cfg.N;
    if (r.is_negative() || r > Rational(cfg.L(), K))
        throw std::domain_error("optimal_dim_symmetric: r out of [0, L/K]");
    Regime reg = Regime::classify(cfg);

    switch (reg.tag) {
        case Regime::Tag::UserLimited:
            return fc_optimal_dim(M, N, r);
        case Regime::Tag::HeavilyLoaded:
            return Rational(N, K);
        case Regime::Tag::Intermediate:
            break;
    }

    const int l = reg.l;
    Rational r1(l / 2 + 1);
    Rational r2((K - 1) * (long long)M + (l + 1) / 2, K);
    if (r >= r1 && r <= r2) return intermediate_dim(M, N, l);
    if (r < r1) return fc_optimal_dim(M, N, r);
    // Contracted segment: per-user share of the pooled optimum.
    return fc_optimal_dim(K * M, N, r * Rational(K)) / Rational(K);
}

Rational fc_dmt_mac_general(const MacConfig& cfg, const std::vector<Rational>& rates) {
    const int K = cfg.K;
    if ((int)rates.size() != K)
        throw std::invalid_argument("fc_dmt_mac_general: need K rates");
    for (const auto& r : rates)
        if (r.is_negative()) throw std::domain_error("fc_dmt_mac_general: rates must be >= 0");
    if (K > 20) throw std::invalid_argument("fc_dmt_mac_general: K too large for enumeration");

    Rational best;
    bool first = true;
    for (unsigned mask = 1; mask < (1u << K); ++mask) {
        int size = __builtin_popcount(mask);
        Rational sum(0);
        for (int i = 0; i < K; ++i)
            if (mask & (1u << i)) sum += rates[i];
        PiecewiseLinearCurve curve = fc_dmt_p2p(size * cfg.M, cfg.N);
        Rational v = sum > curve.r_max() ? Rational(0) : curve.eval(sum);
        if (first || v < best) {
            best = v;
            first = false;
        }
    }
    return best;
}

Rational orthogonal_dmt(const MacConfig& cfg, const Rational& r, OrthogonalMode mode) {
    if (r.is_negative()) throw std::domain_error("orthogonal_dmt: r must be >= 0");
    int m = mode == OrthogonalMode::TDMA ? cfg.M : 1;
    PiecewiseLinearCurve curve = fc_dmt_p2p(m, cfg.N);
    Rational kr = r * Rational(cfg.K);
    return kr > curve.r_max() ? Rational(0) : curve.eval(kr);
}

}  // namespace macdmt
