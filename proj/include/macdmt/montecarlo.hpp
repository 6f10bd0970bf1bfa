#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "macdmt/optimizer.hpp"
#include "macdmt/scheme.hpp"
#include "macdmt/types.hpp"

namespace macdmt {

/// Counter-based generator: a stream is fully determined by its key, so
/// trials can run on any number of threads with identical results.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream_hi, std::uint64_t stream_lo);

    std::uint64_t next_u64();
    double uniform();                    // (0, 1)
    double normal();                     // standard normal (Box-Muller)
    std::complex<double> complex_normal();  // CN(0,1)

private:
    std::uint64_t state_;
    std::uint64_t counter_ = 0;
    double spare_ = 0;
    bool has_spare_ = false;
};

enum class SimMode { UnionBound, LatticeDecode };

struct SimConfig {
    MacConfig cfg;
    int l = 0;
    RateTuple rates;
    std::vector<double> snr_grid_db;
    long long trials_per_snr = 0;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::UnionBound;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
    Rational dims_per_use() const;  // D_l
    int block_length() const { return cfg.N + cfg.M - 1 - 2 * l; }  // T_l
};

struct SlopeEstimate {
    double slope = 0;      // estimated diversity order (positive)
    double intercept = 0;
    double stderr_ = 0;
    std::vector<std::pair<double, double>> points;  // (log10 rho, log10 pe), pe > 0
};

struct SnrCell {
    double snr_db = 0;
    long long trials = 0;
    double errors = 0;  // error count (lattice) or summed bound (union)
    double pe_hat = 0;
};

struct SimResult {
    std::vector<SnrCell> cells;
    SlopeEstimate slope;
};

/// N x KM matrix of i.i.d. CN(0,1) fades, fully determined by the seed.
ComplexMatrix sample_channel(const MacConfig& cfg, std::uint64_t trial_seed);

/// Union bound on the joint-ML error probability at SNR rho for a fixed
/// channel draw: min(1, sum over nonempty user subsets s of
/// rho^{-T_l(|s| D_l - R_s)} / det(H_eff^(s)+ H_eff^(s))), leading
/// constants set to 1. A singular subset Gram forces the bound to 1.
double pe_union_bound(const ComplexMatrix& H, const MacConfig& cfg, int l,
                      const RateTuple& rates, double rho);

/// Effective radius (squared) of the received joint lattice for the users
/// in subset_mask: (2n/(2 pi e)) rho^{-R_s/(|s| D_l)} gram^{1/n} with
/// n = |s| D_l T_l. Singular Gram gives 0.
double effective_radius(const ComplexMatrix& H, const MacConfig& cfg, int l,
                        const RateTuple& rates, double rho, unsigned subset_mask);

/// One zero-codeword transmission through random per-user lattices and the
/// effective channel, decoded by exhaustive nearest-point sphere search.
/// Returns true on a decoding error. Total real dimension 2K D_l T_l is
/// capped at 16.
bool lattice_decode_trial(const SimConfig& sim, std::uint64_t trial_seed, double rho);

/// Full sweep: per-SNR averages plus the diversity slope fitted on the top
/// half of the grid. Deterministic for a fixed seed at any thread count.
SimResult run_simulation(const SimConfig& sim);

SlopeEstimate estimate_diversity(const SimConfig& sim);

/// Least-squares diversity fit from (rho, pe) pairs; exposed for testing
/// against exact power laws. Uses points with pe > 0 in the top half of
/// the list; fewer than 3 usable points is an error.
SlopeEstimate fit_power_law(const std::vector<double>& rho, const std::vector<double>& pe);

}  // namespace macdmt
