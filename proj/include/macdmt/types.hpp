#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

namespace macdmt {

/// Network shape: K users, M transmit antennas per user, N receive antennas.
struct MacConfig {
    int K = 1;
    int M = 1;
    int N = 1;

    MacConfig() = default;
    MacConfig(int k, int m, int n) : K(k), M(m), N(n) {
        if (k < 1 || m < 1 || n < 1)
            throw std::invalid_argument("MacConfig: K, M, N must be >= 1");
    }

    /// L = min(N, K*M), the rank budget of the pooled channel.
    int L() const { return std::min(N, K * M); }
};

/// Receive-antenna regime that selects the closed-form symmetric IC bound.
///
/// UserLimited:   N >= (K+1)M - 1, single-user curve is binding everywhere.
/// HeavilyLoaded: N <  (K-1)M + 1, bound is the single line MN - KMr.
/// Intermediate:  N = (K-1)M + 1 + l with 0 <= l <= 2M - 3, three pieces.
struct Regime {
    enum class Tag { UserLimited, HeavilyLoaded, Intermediate };

    Tag tag = Tag::UserLimited;
    int l = 0;  // meaningful only for Intermediate

    static Regime classify(const MacConfig& cfg) {
        Regime r;
        if (cfg.N >= (cfg.K + 1) * cfg.M - 1) {
            r.tag = Tag::UserLimited;
        } else if (cfg.N < (cfg.K - 1) * cfg.M + 1) {
            r.tag = Tag::HeavilyLoaded;
        } else {
            r.tag = Tag::Intermediate;
            r.l = cfg.N - (cfg.K - 1) * cfg.M - 1;
        }
        return r;
    }

    std::string name() const {
        switch (tag) {
            case Tag::UserLimited: return "user_limited";
            case Tag::HeavilyLoaded: return "heavily_loaded";
            case Tag::Intermediate: return "intermediate";
        }
        return "?";
    }
};

}  // namespace macdmt
