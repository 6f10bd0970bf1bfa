#include "macdmt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "macdmt/dmt_core.hpp"

namespace macdmt {

namespace {

// Per-subset data precomputed for the double-precision grid objective.
struct SubsetInfo {
    unsigned mask;
    int size;
    double rate_sum;
    Rational rate_sum_exact;
    std::vector<double> anchor;     // (sM-l)(N-l), l = 0..min(sM,N)-1
    std::vector<double> upper_end;  // upper endpoint of the interval of l
};

std::vector<SubsetInfo> precompute_subsets(const MacConfig& cfg, const RateTuple& rates) {
    std::vector<SubsetInfo> out;
    out.reserve((1u << cfg.K) - 1);
    for (unsigned mask = 1; mask < (1u << cfg.K); ++mask) {
        SubsetInfo s;
        s.mask = mask;
        s.size = __builtin_popcount(mask);
        s.rate_sum_exact = Rational(0);
        for (int i = 0; i < cfg.K; ++i)
            if (mask & (1u << i)) s.rate_sum_exact += rates[i];
        s.rate_sum = s.rate_sum_exact.to_double();
        int m = s.size * cfg.M;
        for (int l = 0; l < std::min(m, cfg.N); ++l) {
            s.anchor.push_back((double)(m - l) * (cfg.N - l));
            s.upper_end.push_back(ic_dim_interval(m, cfg.N, l).second.to_double());
        }
        out.push_back(std::move(s));
    }
    return out;
}

// min over subsets of the per-subset upper-bound line, in doubles.
double objective_d(const MacConfig& cfg, const std::vector<SubsetInfo>& subsets,
                   const double* dims) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : subsets) {
        double D = 0;
        for (int i = 0; i < cfg.K; ++i)
            if (s.mask & (1u << i)) D += dims[i];
        double v;
        if (D <= 1e-12) {
            v = s.rate_sum > 1e-12 ? 0.0 : (double)s.size * cfg.M * cfg.N;
        } else if (s.rate_sum >= D) {
            v = 0.0;
        } else {
            size_t l = 0;
            while (l + 1 < s.upper_end.size() && D > s.upper_end[l] + 1e-12) ++l;
            v = s.anchor[l] * (D - s.rate_sum) / (D - (double)l);
            if (v < 0) v = 0;
        }
        best = std::min(best, v);
    }
    return best;
}

// Lexicographic order on tuples of grid indices.
bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct GridBest {
    double value = -1;
    std::vector<int> idx;  // empty = nothing found
};

void merge_best(GridBest& into, const GridBest& from) {
    if (from.idx.empty()) return;
    if (into.idx.empty() || from.value > into.value ||
        (from.value == into.value && lex_less(from.idx, into.idx)))
        into = from;
}

// Enumerates j_pos..j_K over [lo_i, hi_i] with sum(j) <= j_budget and keeps
// the best tuple (ties to the lexicographically smallest, which is the first
// one found since enumeration is ascending).
void grid_scan(const MacConfig& cfg, const std::vector<SubsetInfo>& subsets, double step_d,
               const std::vector<int>& lo, const std::vector<int>& hi, long long j_budget,
               int pos, std::vector<int>& idx, std::vector<double>& dims, long long j_sum,
               GridBest& best) {
    if (pos == cfg.K) {
        double v = objective_d(cfg, subsets, dims.data());
        if (best.idx.empty() || v > best.value) {
            best.value = v;
            best.idx = idx;
        }
        return;
    }
    for (int j = lo[pos]; j <= hi[pos]; ++j) {
        if (j_sum + j > j_budget) break;
        idx[pos] = j;
        dims[pos] = j * step_d;
        grid_scan(cfg, subsets, step_d, lo, hi, j_budget, pos + 1, idx, dims, j_sum + j, best);
    }
}

GridBest grid_search(const MacConfig& cfg, const std::vector<SubsetInfo>& subsets,
                     const Rational& step, const std::vector<int>& lo, const std::vector<int>& hi,
                     int threads) {
    double step_d = step.to_double();
    long long j_budget = (Rational(cfg.L()) / step).floor();

    if (threads <= 0) threads = (int)std::thread::hardware_concurrency();
    if (threads < 1) threads = 1;
    int span = hi[0] - lo[0] + 1;
    threads = std::min(threads, span);

    std::vector<std::future<GridBest>> futs;
    for (int t = 0; t < threads; ++t) {
        int a = lo[0] + (int)((long long)span * t / threads);
        int b = lo[0] + (int)((long long)span * (t + 1) / threads) - 1;
        futs.push_back(std::async(std::launch::async, [&, a, b] {
            GridBest local;
            std::vector<int> idx(cfg.K);
            std::vector<double> dims(cfg.K);
            std::vector<int> lo0 = lo, hi0 = hi;
            for (int j = a; j <= b; ++j) {
                if (j > j_budget) break;
                idx[0] = j;
                dims[0] = j * step_d;
                grid_scan(cfg, subsets, step_d, lo0, hi0, j_budget, 1, idx, dims, j, local);
            }
            return local;
        }));
    }
    GridBest best;
    // Merge in thread order so the result is independent of completion order.
    for (auto& f : futs) merge_best(best, f.get());
    return best;
}

}  // namespace

Rational rate_max(const RateTuple& rates) {
    if (rates.empty()) throw std::invalid_argument("rate_max: empty tuple");
    Rational m = rates[0];
    for (const auto& r : rates) m = Rational::max(m, r);
    return m;
}

bool dims_feasible(const MacConfig& cfg, const DimTuple& dims) {
    if ((int)dims.size() != cfg.K) return false;
    Rational sum(0);
    for (const auto& d : dims) {
        if (d.is_negative() || d > Rational(cfg.M)) return false;
        sum += d;
    }
    return sum <= Rational(cfg.L());
}

std::pair<Rational, unsigned> subset_objective(const MacConfig& cfg, const DimTuple& dims,
                                               const RateTuple& rates) {
    if ((int)rates.size() != cfg.K)
        throw std::invalid_argument("subset_objective: need K rates");
    for (const auto& r : rates)
        if (r.is_negative()) throw std::domain_error("subset_objective: rates must be >= 0");
    if (!dims_feasible(cfg, dims))
        throw std::domain_error("subset_objective: infeasible dimension allocation");
    if (cfg.K > 20) throw std::invalid_argument("subset_objective: K too large for enumeration");

    Rational best;
    unsigned best_mask = 0;
    for (unsigned mask = 1; mask < (1u << cfg.K); ++mask) {
        Rational D(0), R(0);
        for (int i = 0; i < cfg.K; ++i)
            if (mask & (1u << i)) {
                D += dims[i];
                R += rates[i];
            }
        int size = __builtin_popcount(mask);
        Rational v;
        if (D.is_zero()) {
            // Limit of the pivot line as D -> 0+.
            v = R.is_zero() ? Rational((long long)size * cfg.M * cfg.N) : Rational(0);
        } else {
            v = ic_dmt_upper_p2p(size * cfg.M, cfg.N, D, R);
        }
        bool take = best_mask == 0 || v < best;
        if (!take && v == best) {
            int cs = __builtin_popcount(best_mask);
            take = size < cs || (size == cs && mask < best_mask);
        }
        if (take) {
            best = v;
            best_mask = mask;
        }
    }
    return {best, best_mask};
}

OptResult maximize_dim_allocation(const MacConfig& cfg, const RateTuple& rates,
                                  const OptOptions& opts) {
    if ((int)rates.size() != cfg.K)
        throw std::invalid_argument("maximize_dim_allocation: need K rates");
    if (cfg.K > opts.subset_user_cap)
        throw std::invalid_argument("maximize_dim_allocation: K exceeds enumeration cap");
    const Rational rmax = rate_max(rates);

    // Analytic candidates: equal-dimension tuples at every interval endpoint
    // of every pooled size (scaled to a per-user share), plus the regime
    // levels and the per-user budget endpoints.
    std::set<Rational> levels;
    for (int i = 1; i <= cfg.K; ++i) {
        int m = i * cfg.M;
        for (int l = 0; l < std::min(m, cfg.N); ++l) {
            auto [lo, hi] = ic_dim_interval(m, cfg.N, l);
            if (lo > Rational(0)) levels.insert(lo / Rational(i));
            levels.insert(hi / Rational(i));
        }
    }
    Regime reg = Regime::classify(cfg);
    if (reg.tag == Regime::Tag::Intermediate)
        levels.insert(intermediate_dim(cfg.M, cfg.N, reg.l));
    levels.insert(Rational(cfg.N, cfg.K));
    levels.insert(Rational(cfg.M));
    levels.insert(fc_optimal_dim(cfg.M, cfg.N, Rational::min(rmax, Rational(std::min(cfg.M, cfg.N)))));

    Rational cap = Rational::min(Rational(cfg.M), Rational(cfg.L(), cfg.K));
    Rational cand_value;
    DimTuple cand_argmax;
    bool have_cand = false;
    for (const auto& D : levels) {
        if (D <= Rational(0) || D > cap) continue;
        DimTuple dims(cfg.K, D);
        Rational v = subset_objective(cfg, dims, rates).first;
        // Ties go to the larger level: it is the one the closed forms name
        // (upper interval endpoints, D_l).
        if (!have_cand || v >= cand_value) {
            cand_value = v;
            cand_argmax = dims;
            have_cand = true;
        }
    }
    if (!have_cand) {  // degenerate cap; fall back to the zero allocation
        cand_argmax.assign(cfg.K, Rational(0));
        cand_value = subset_objective(cfg, cand_argmax, rates).first;
    }

    // Grid search in doubles, then local refinement around the incumbent.
    auto subsets = precompute_subsets(cfg, rates);
    Rational step = opts.grid_step;
    if (step <= Rational(0)) throw std::invalid_argument("grid_step must be positive");
    int jmax = (int)(Rational(cfg.M) / step).floor();
    std::vector<int> lo(cfg.K, 0), hi(cfg.K, jmax);
    GridBest gb = grid_search(cfg, subsets, step, lo, hi, opts.threads);

    DimTuple grid_argmax(cfg.K);
    for (int i = 0; i < cfg.K; ++i) grid_argmax[i] = Rational(gb.idx[i]) * step;

    for (int round = 0; round < opts.refine_rounds; ++round) {
        Rational fine = step / Rational(4);
        // Window of +-step around the incumbent, rescaled to the fine grid.
        std::vector<int> flo(cfg.K), fhi(cfg.K);
        int fmax = (int)(Rational(cfg.M) / fine).floor();
        for (int i = 0; i < cfg.K; ++i) {
            long long c = (grid_argmax[i] / fine).floor();
            flo[i] = (int)std::max(0LL, c - 4);
            fhi[i] = (int)std::min((long long)fmax, c + 4);
        }
        GridBest fb = grid_search(cfg, subsets, fine, flo, fhi, opts.threads);
        if (!fb.idx.empty() && fb.value >= gb.value) {
            gb = fb;
            for (int i = 0; i < cfg.K; ++i) grid_argmax[i] = Rational(fb.idx[i]) * fine;
        }
        step = fine;
    }
    Rational grid_value = subset_objective(cfg, grid_argmax, rates).first;

    OptResult res;
    if (grid_value > cand_value) {
        res.value = grid_value;
        res.argmax = grid_argmax;
        res.method = OptMethod::Grid;
        res.grid_disagreement =
            grid_value.to_double() - cand_value.to_double() > opts.tolerance;
    } else {
        res.value = cand_value;
        res.argmax = cand_argmax;
        res.method = OptMethod::ClosedForm;
    }
    res.binding_subset = subset_objective(cfg, res.argmax, rates).second;
    return res;
}

OptResult ic_dmt_general_upper(const MacConfig& cfg, const RateTuple& rates,
                               const OptOptions& opts) {
    if ((int)rates.size() != cfg.K)
        throw std::invalid_argument("ic_dmt_general_upper: need K rates");
    Regime reg = Regime::classify(cfg);
    if (reg.tag != Regime::Tag::UserLimited) return maximize_dim_allocation(cfg, rates, opts);

    // With enough receive antennas the single-user curve is binding and the
    // optimum is attained by giving every user the same dimension level.
    Rational rmax = rate_max(rates);
    PiecewiseLinearCurve single = fc_dmt_p2p(cfg.M, cfg.N);
    OptResult res;
    res.value = rmax > single.r_max() ? Rational(0) : single.eval(rmax);
    Rational D = fc_optimal_dim(cfg.M, cfg.N,
                                Rational::min(rmax, Rational(std::min(cfg.M, cfg.N))));
    res.argmax.assign(cfg.K, D);
    res.method = OptMethod::ClosedForm;
    res.binding_subset = subset_objective(cfg, res.argmax, rates).second;
    return res;
}

std::optional<WitnessReport> suboptimality_witness(const MacConfig& cfg, const OptOptions& opts,
                                                   std::optional<Rational> r0,
                                                   std::optional<Rational> epsilon) {
    Regime reg = Regime::classify(cfg);
    if (reg.tag == Regime::Tag::UserLimited) return std::nullopt;
    // Single user: the bound lines through consecutive anchors reproduce the
    // finite-constellation curve exactly, so there is no gap to witness.
    if (cfg.K == 1) return std::nullopt;

    PiecewiseLinearCurve fc = fc_dmt_mac_symmetric(cfg);

    if (reg.tag == Regime::Tag::HeavilyLoaded) {
        // The bound is the single line MN - KMr; the gap is widest mid-range.
        Rational r = r0.value_or(Rational(cfg.N, 2 * cfg.K));
        if (r <= Rational(0) || r >= Rational(cfg.N, cfg.K))
            throw std::domain_error("suboptimality_witness: r0 outside (0, N/K)");
        auto [regime2, ic] = ic_dmt_mac_symmetric(cfg);
        (void)regime2;
        WitnessReport w;
        w.r0 = r;
        w.epsilon = Rational(0);
        w.rates.assign(cfg.K, r);
        w.ic_value = ic.eval(r);
        w.fc_value = fc.eval(r);
        if (!(w.ic_value < w.fc_value))
            throw std::logic_error("suboptimality_witness: expected a strict gap");
        return w;
    }

    // Intermediate regime: the middle line sits strictly below the
    // finite-constellation curve on the open interval (r1, r2).
    const int l = reg.l;
    Rational r1(l / 2 + 1);
    Rational r2((cfg.K - 1) * (long long)cfg.M + (l + 1) / 2, cfg.K);
    if (r2 > r1) {
        Rational r = r0.value_or((r1 + r2) / Rational(2));
        if (r <= r1 || r >= r2)
            throw std::domain_error("suboptimality_witness: r0 outside the strict interval");
        auto [regime2, ic] = ic_dmt_mac_symmetric(cfg);
        (void)regime2;
        WitnessReport w;
        w.r0 = r;
        w.epsilon = Rational(0);
        w.rates.assign(cfg.K, r);
        w.ic_value = ic.eval(r);
        w.fc_value = fc.eval(r);
        if (!(w.ic_value < w.fc_value))
            throw std::logic_error("suboptimality_witness: expected a strict gap");
        return w;
    }

    // Interval endpoints coincide: the symmetric bound equals the
    // finite-constellation curve and the gap only opens at asymmetric rates.
    // This happens for two users with M = s+1, N = 3s; perturb a rate point
    // r0 in (s, s+1/2) by +-epsilon.
    if (cfg.K != 2 || cfg.N != 3 * (cfg.M - 1))
        throw std::logic_error("suboptimality_witness: no construction for this shape");
    long long s = cfg.M - 1;
    Rational p = r0.value_or(Rational(s) + Rational(1, 4));
    if (p <= Rational(s) || p >= Rational(s) + Rational(1, 2))
        throw std::domain_error("suboptimality_witness: r0 outside (s, s + 1/2)");
    Rational eps_hi =
        Rational::min(p + p / Rational(s) - Rational(1), Rational(s) + Rational(1, 2)) - p;
    Rational eps = epsilon.value_or(eps_hi / Rational(2));
    if (eps <= Rational(0) || eps >= eps_hi)
        throw std::domain_error("suboptimality_witness: epsilon outside its open range");

    WitnessReport w;
    w.r0 = p;
    w.epsilon = eps;
    w.rates = {p + eps, p - eps};
    w.ic_value = maximize_dim_allocation(cfg, w.rates, opts).value;
    w.fc_value = fc_dmt_mac_general(cfg, w.rates);
    if (!(w.ic_value < w.fc_value))
        throw std::logic_error("suboptimality_witness: expected a strict gap");
    return w;
}

LpResult exponent_min_lp(int s_size, int M, int N, int l, const Rational& r_max, int K) {
    if (s_size < 1 || M < 1 || N < 1 || K < 1 || l < 0 || l > M - 1 || s_size > K)
        throw std::invalid_argument("exponent_min_lp: bad parameters");
    if (N < M) throw std::domain_error("exponent_min_lp: requires N >= M");

    Rational target = Rational(s_size) *
                      (Rational((long long)M * N) - Rational((long long)l * (l + 1)) -
                       Rational(N + M - 1 - 2 * l) * r_max);
    if (target.is_negative()) return {Rational(0), true};

    const int n = s_size * M;
    const Rational box((long long)K * M * N);

    // Coordinates sorted by objective-per-constraint ratio; the equality
    // constraint is then met greedily (fractional knapsack).
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 1);
    auto weight = [&](int i) { return Rational(N - i + 1); };
    auto coeff = [&](int i) { return Rational(N - ((i - 1) % M + 1) + 1); };
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        Rational ra = weight(a) / coeff(a), rb = weight(b) / coeff(b);
        if (ra != rb) return ra < rb;
        return a > b;
    });

    Rational value(0), rem = target;
    for (int i : order) {
        if (rem.is_zero()) break;
        Rational take = Rational::min(box, rem / coeff(i));
        value += weight(i) * take;
        rem -= coeff(i) * take;
    }
    return {value, !rem.is_zero()};
}

Rational ratio_bound(int s_size, int M, int N, int a, int b) {
    if (s_size < 1 || a < 0 || a > s_size - 1 || b < 1 || b > M)
        throw std::invalid_argument("ratio_bound: indices out of range");
    if (N - b + 1 <= 0) throw std::domain_error("ratio_bound: requires N >= b");
    return Rational((long long)s_size * (N - (a * M + b) + 1), N - b + 1);
}

}  // namespace macdmt
