#include "macdmt/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

namespace macdmt {

namespace {

constexpr double kTwoPiE = 2.0 * M_PI * M_E;

// splitmix64 finalizer; statistically solid for keying independent streams.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t trial_key(std::uint64_t seed, std::uint64_t snr_index, std::uint64_t trial) {
    return mix64(seed ^ mix64(0xA076'1D64'78BD'642FULL + snr_index) ^
                 mix64(0xE703'7ED1'A0B4'28DBULL + trial));
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream_hi, std::uint64_t stream_lo)
    : state_(mix64(seed) ^ mix64(stream_hi) ^ mix64(mix64(stream_lo))) {}

std::uint64_t CounterRng::next_u64() { return mix64(state_ + ++counter_); }

double CounterRng::uniform() {
    // 53-bit mantissa in (0,1); never exactly 0 (log() below needs that).
    return (double)((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = uniform(), v = uniform();
    double radius = std::sqrt(-2.0 * std::log(u));
    double angle = 2.0 * M_PI * v;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::complex<double> CounterRng::complex_normal() {
    return {normal() * M_SQRT1_2, normal() * M_SQRT1_2};
}

void SimConfig::validate() const {
    if (cfg.M > cfg.N) throw std::invalid_argument("sim: scheme requires M <= N");
    if (l < 0 || l > cfg.M - 1) throw std::invalid_argument("sim: l out of 0..M-1");
    if ((int)rates.size() != cfg.K) throw std::invalid_argument("sim: need K rates");
    Rational Dl = dims_per_use();
    for (const auto& r : rates)
        if (r.is_negative() || r > Dl)
            throw std::invalid_argument("sim: rates must lie in [0, D_l]");
    if (snr_grid_db.size() < 3) throw std::invalid_argument("sim: need >= 3 SNR points");
    for (size_t i = 1; i < snr_grid_db.size(); ++i)
        if (!(snr_grid_db[i] > snr_grid_db[i - 1]))
            throw std::invalid_argument("sim: SNR grid must strictly increase");
    if (trials_per_snr <= 0) throw std::invalid_argument("sim: trials must be positive");
}

Rational SimConfig::dims_per_use() const {
    return Rational((long long)cfg.M * cfg.N - (long long)l * (l + 1), block_length());
}

ComplexMatrix sample_channel(const MacConfig& cfg, std::uint64_t trial_seed) {
    CounterRng rng(trial_seed, 0x6368'616E'6E65'6CULL, 0);  // channel stream
    ComplexMatrix H(cfg.N, cfg.K * cfg.M);
    for (Eigen::Index c = 0; c < H.cols(); ++c)
        for (Eigen::Index r = 0; r < H.rows(); ++r) H(r, c) = rng.complex_normal();
    return H;
}

namespace {

// H columns of the users in mask, in user order.
ComplexMatrix subset_columns(const ComplexMatrix& H, int M, unsigned mask, int size) {
    ComplexMatrix Hs(H.rows(), (Eigen::Index)size * M);
    Eigen::Index c = 0;
    for (int u = 0; mask >> u; ++u)
        if (mask & (1u << u))
            for (int b = 0; b < M; ++b) Hs.col(c++) = H.col((Eigen::Index)u * M + b);
    return Hs;
}

}  // namespace

double pe_union_bound(const ComplexMatrix& H, const MacConfig& cfg, int l,
                      const RateTuple& rates, double rho) {
    if (rho <= 0) throw std::domain_error("pe_union_bound: rho must be positive");
    SimConfig shape{cfg, l, rates, {0, 1, 2}, 1, 0, SimMode::UnionBound};
    shape.validate();
    if (H.rows() != cfg.N || H.cols() != (Eigen::Index)cfg.K * cfg.M)
        throw std::invalid_argument("pe_union_bound: H must be N x KM");

    const int T = cfg.N + cfg.M - 1 - 2 * l;
    const double Dl = shape.dims_per_use().to_double();
    std::vector<EffectiveChannel> eff_by_size(cfg.K + 1);
    double sum = 0;
    for (unsigned mask = 1; mask < (1u << cfg.K); ++mask) {
        int size = __builtin_popcount(mask);
        if (eff_by_size[size].T == 0)
            eff_by_size[size] = effective_channel(stack_patterns(cfg, l, size));
        double gram = gram_determinant(subset_columns(H, cfg.M, mask, size),
                                       eff_by_size[size]);
        if (gram <= 0) return 1.0;
        double rate_sum = 0;
        for (int u = 0; u < cfg.K; ++u)
            if (mask & (1u << u)) rate_sum += rates[u].to_double();
        sum += std::pow(rho, -(double)T * (size * Dl - rate_sum)) / gram;
        if (sum >= 1.0) return 1.0;
    }
    return std::min(1.0, sum);
}

double effective_radius(const ComplexMatrix& H, const MacConfig& cfg, int l,
                        const RateTuple& rates, double rho, unsigned subset_mask) {
    if (rho <= 0) throw std::domain_error("effective_radius: rho must be positive");
    if (subset_mask == 0 || subset_mask >= (1u << cfg.K))
        throw std::invalid_argument("effective_radius: bad subset");
    SimConfig shape{cfg, l, rates, {0, 1, 2}, 1, 0, SimMode::UnionBound};
    shape.validate();

    const int T = cfg.N + cfg.M - 1 - 2 * l;
    const double Dl = shape.dims_per_use().to_double();
    int size = __builtin_popcount(subset_mask);
    double n = size * Dl * T;  // complex dimensions of the joint IC
    auto eff = effective_channel(stack_patterns(cfg, l, size));
    double gram = gram_determinant(subset_columns(H, cfg.M, subset_mask, size), eff);
    if (gram <= 0) return 0.0;
    double rate_sum = 0;
    for (int u = 0; u < cfg.K; ++u)
        if (subset_mask & (1u << u)) rate_sum += rates[u].to_double();
    return (2.0 * n / kTwoPiE) * std::pow(rho, -rate_sum / (size * Dl)) *
           std::pow(gram, 1.0 / n);
}

namespace {

// Fincke-Pohst enumeration of all integer points with
// c2 + ||yproj - R u||^2 <= radius2, tracking the best distance for u = 0
// and for u != 0 separately.
struct SphereSearch {
    const Eigen::MatrixXd& R;
    const Eigen::VectorXd& yproj;
    double c2;
    double radius2;
    int n;
    bool found_any = false;
    double best_zero = -1;     // distance^2 of u = 0, if inside
    double best_nonzero = -1;  // min distance^2 over u != 0 inside

    std::vector<long long> u;

    void run() {
        u.assign(n, 0);
        descend(n - 1, 0.0, true);
    }

    void descend(int level, double partial, bool all_zero_so_far) {
        if (level < 0) {
            double d2 = c2 + partial;
            found_any = true;
            if (all_zero_so_far) {
                best_zero = d2;
            } else if (best_nonzero < 0 || d2 < best_nonzero) {
                best_nonzero = d2;
            }
            return;
        }
        double rem = radius2 - c2 - partial;
        if (rem < 0) return;
        // Residual target for this level given the levels above.
        double t = yproj[level];
        for (int j = level + 1; j < n; ++j) t -= R(level, j) * (double)u[j];
        double diag = R(level, level);
        double center = t / diag;
        double half = std::sqrt(rem) / std::abs(diag);
        long long lo = (long long)std::ceil(center - half);
        long long hi = (long long)std::floor(center + half);
        for (long long k = lo; k <= hi; ++k) {
            double resid = t - diag * (double)k;
            u[level] = k;
            descend(level - 1, partial + resid * resid, all_zero_so_far && k == 0);
        }
        u[level] = 0;
    }
};

}  // namespace

bool lattice_decode_trial(const SimConfig& sim, std::uint64_t trial_seed, double rho) {
    sim.validate();
    if (rho <= 0) throw std::domain_error("lattice_decode_trial: rho must be positive");
    const int M = sim.cfg.M, N = sim.cfg.N, K = sim.cfg.K, T = sim.block_length();
    const int dsym = M * N - sim.l * (sim.l + 1);  // complex symbols per user
    const int nreal = 2 * K * dsym;
    if (nreal > 16)
        throw std::invalid_argument("lattice_decode_trial: real dimension exceeds 16");

    ComplexMatrix H = sample_channel(sim.cfg, trial_seed);
    StackedPattern pat = stack_patterns(sim.cfg, sim.l, K);
    CounterRng rng(trial_seed, 0x6C61'7474'6963'65ULL, 0);  // lattice + noise stream

    // Complex effective columns per stacked symbol: symbol s sits on pooled
    // antenna j at channel use m, so it sees H column j in block m.
    ComplexMatrix A = ComplexMatrix::Zero((Eigen::Index)N * T, (Eigen::Index)K * dsym);
    for (int j = 0; j < K * M; ++j)
        for (int m = 0; m < T; ++m)
            if (pat.cells[j][m] != 0)
                A.block((Eigen::Index)m * N, pat.cells[j][m] - 1, N, 1) = H.col(j);

    // Per-user random generator with Voronoi volume rho^{-r_i T}.
    Eigen::MatrixXd Meff(2 * N * T, nreal);
    for (int uu = 0; uu < K; ++uu) {
        Eigen::MatrixXd G(2 * dsym, 2 * dsym);
        for (int c = 0; c < 2 * dsym; ++c)
            for (int r = 0; r < 2 * dsym; ++r) G(r, c) = rng.normal();
        double det = std::abs(G.determinant());
        if (det < 1e-300) return true;  // degenerate draw; count as error
        double scale = std::pow(det, -1.0 / (2 * dsym)) *
                       std::pow(rho, -sim.rates[uu].to_double() * T / (2.0 * dsym));
        G *= scale;
        for (int c = 0; c < 2 * dsym; ++c) {
            Eigen::VectorXcd z(dsym);
            for (int i = 0; i < dsym; ++i) z(i) = {G(i, c), G(dsym + i, c)};
            Eigen::VectorXcd e = A.middleCols((Eigen::Index)uu * dsym, dsym) * z;
            Meff.col((Eigen::Index)uu * 2 * dsym + c)
                << e.real(), e.imag();
        }
    }

    // Zero codeword: the receiver sees pure noise.
    const double sigma = std::sqrt(1.0 / (kTwoPiE * rho));
    Eigen::VectorXd y(2 * N * T);
    for (int i = 0; i < 2 * N * T; ++i) y(i) = sigma * rng.normal();

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Meff);
    Eigen::MatrixXd R = qr.matrixQR().topRows(nreal).triangularView<Eigen::Upper>();
    double dmax = 0;
    for (int i = 0; i < nreal; ++i) dmax = std::max(dmax, std::abs(R(i, i)));
    for (int i = 0; i < nreal; ++i)
        if (std::abs(R(i, i)) < 1e-10 * dmax) return true;  // effectively singular

    Eigen::MatrixXd thinQ =
        qr.householderQ() * Eigen::MatrixXd::Identity(2 * N * T, nreal);
    Eigen::VectorXd yproj = thinQ.transpose() * y;
    double c2 = std::max(0.0, y.squaredNorm() - yproj.squaredNorm());
    double dist0 = y.squaredNorm();

    double radius = 1.5 * sigma * std::sqrt((double)2 * N * T);
    for (;;) {
        SphereSearch s{R, yproj, c2, radius * radius, nreal};
        s.run();
        if (s.found_any) {
            if (s.best_nonzero < 0) return false;  // only the zero point in sphere
            return s.best_nonzero < dist0;
        }
        radius *= 2;
    }
}

namespace {

// Least squares of y on x; fills slope (negated), intercept, stderr.
void regress(const std::vector<std::pair<double, double>>& pts, SlopeEstimate& est) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = (double)pts.size();
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = sxx - sx * sx / n;
    double b = (sxy - sx * sy / n) / denom;
    double a = (sy - b * sx) / n;
    double ss = 0;
    for (const auto& [x, y] : pts) {
        double r = y - (a + b * x);
        ss += r * r;
    }
    est.slope = -b;
    est.intercept = a;
    est.stderr_ = pts.size() > 2 ? std::sqrt(ss / (n - 2) / denom) : 0.0;
}

}  // namespace

SimResult run_simulation(const SimConfig& sim) {
    sim.validate();
    const size_t S = sim.snr_grid_db.size();
    const long long T = sim.trials_per_snr;
    int threads = sim.threads > 0 ? sim.threads : (int)std::thread::hardware_concurrency();
    if (threads < 1) threads = 1;

    SimResult out;
    for (size_t si = 0; si < S; ++si) {
        double rho = std::pow(10.0, sim.snr_grid_db[si] / 10.0);
        std::vector<double> vals((size_t)T);
        auto worker = [&](long long a, long long b) {
            for (long long t = a; t < b; ++t) {
                std::uint64_t key = trial_key(sim.seed, si, (std::uint64_t)t);
                if (sim.mode == SimMode::UnionBound) {
                    ComplexMatrix H = sample_channel(sim.cfg, key);
                    vals[(size_t)t] = pe_union_bound(H, sim.cfg, sim.l, sim.rates, rho);
                } else {
                    vals[(size_t)t] = lattice_decode_trial(sim, key, rho) ? 1.0 : 0.0;
                }
            }
        };
        std::vector<std::future<void>> futs;
        for (int w = 0; w < threads; ++w) {
            long long a = T * w / threads, b = T * (w + 1) / threads;
            if (a < b) futs.push_back(std::async(std::launch::async, worker, a, b));
        }
        for (auto& f : futs) f.get();
        // Per-trial values summed in trial order: the result is independent
        // of how trials were distributed over threads.
        double errors = 0;
        for (double v : vals) errors += v;
        out.cells.push_back({sim.snr_grid_db[si], T, errors, errors / (double)T});
    }

    // Diversity fit over the top half of the grid, skipping empty cells.
    // Short or sparse grids widen the window downward until 3 points fit.
    for (size_t si = 0; si < S; ++si) {
        if (out.cells[si].pe_hat <= 0) continue;
        out.slope.points.emplace_back(sim.snr_grid_db[si] / 10.0,  // log10 rho
                                      std::log10(out.cells[si].pe_hat));
    }
    std::vector<std::pair<double, double>> fit_pts;
    for (size_t start = S / 2 + 1; fit_pts.size() < 3 && start-- > 0;) {
        fit_pts.clear();
        for (size_t si = start; si < S; ++si)
            if (out.cells[si].pe_hat > 0)
                fit_pts.emplace_back(sim.snr_grid_db[si] / 10.0,
                                     std::log10(out.cells[si].pe_hat));
    }
    if (fit_pts.size() < 3)
        throw std::runtime_error("estimate_diversity: fewer than 3 usable SNR points");
    regress(fit_pts, out.slope);
    return out;
}

SlopeEstimate estimate_diversity(const SimConfig& sim) { return run_simulation(sim).slope; }

SlopeEstimate fit_power_law(const std::vector<double>& rho, const std::vector<double>& pe) {
    if (rho.size() != pe.size()) throw std::invalid_argument("fit_power_law: size mismatch");
    std::vector<std::pair<double, double>> fit_pts;
    SlopeEstimate est;
    for (size_t i = 0; i < rho.size(); ++i) {
        if (pe[i] <= 0) continue;
        double x = std::log10(rho[i]);
        double y = std::log10(pe[i]);
        est.points.emplace_back(x, y);
        if (i >= rho.size() / 2) fit_pts.emplace_back(x, y);
    }
    if (fit_pts.size() < 3)
        throw std::runtime_error("fit_power_law: fewer than 3 usable points");
    regress(fit_pts, est);
    return est;
}

}  // namespace macdmt
