#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "macdmt/dmt_core.hpp"
#include "macdmt/montecarlo.hpp"
#include "macdmt/optimizer.hpp"
#include "macdmt/scheme.hpp"

using nlohmann::json;
using namespace macdmt;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

Rational parse_rational(const std::string& s) {
    size_t slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(std::stoll(s));
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    } catch (const std::exception&) {
        throw std::invalid_argument("not a rational: '" + s + "' (use p or p/q)");
    }
}

RateTuple parse_rate_list(const std::string& s) {
    RateTuple out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_rational(item));
    return out;
}

json rat_json(const Rational& r) { return json::array({r.num(), r.den()}); }

Rational rat_from_json(const json& j) {
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_array() && j.size() == 2)
        return Rational(j[0].get<long long>(), j[1].get<long long>());
    throw std::invalid_argument("rational fields must be integers or [num, den]");
}

json tuple_json(const std::vector<Rational>& v) {
    json a = json::array();
    for (const auto& r : v) a.push_back(rat_json(r));
    return a;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

// ---------------------------------------------------------------- curve ----

int run_curve(int K, int M, int N, const std::string& kind, const std::string& dims,
              const std::string& step_str, const std::string& csv_path) {
    Rational step = parse_rational(step_str);
    if (step <= Rational(0)) throw std::invalid_argument("grid step must be positive");

    PiecewiseLinearCurve curve;
    json extra;
    if (kind == "fc_p2p") {
        curve = fc_dmt_p2p(M, N);
    } else if (kind == "fc_mac") {
        curve = fc_dmt_mac_symmetric(MacConfig(K, M, N));
    } else if (kind == "ic_mac") {
        auto [reg, c] = ic_dmt_mac_symmetric(MacConfig(K, M, N));
        curve = c;
        extra["regime"] = reg.name();
    } else if (kind == "ic_line") {
        if (dims.empty()) throw std::invalid_argument("ic_line needs --dims");
        Rational D = parse_rational(dims);
        curve.append(Rational(0), ic_dmt_upper_p2p(M, N, D, Rational(0)));
        curve.append(D, Rational(0));
        extra["dims"] = rat_json(D);
    } else {
        throw std::invalid_argument("unknown curve kind: " + kind);
    }

    json out = curve.to_json();
    out["kind"] = kind;
    out["K"] = K;
    out["M"] = M;
    out["N"] = N;
    for (auto& [k, v] : extra.items()) out[k] = v;
    std::cout << out.dump() << "\n";
    write_text(csv_path, curve.to_csv(step));
    return kExitSuccess;
}

// ------------------------------------------------------------- optimize ----

int run_optimize(const std::string& input_path, int K, int M, int N,
                 const std::string& rate_str, const OptOptions& opts) {
    MacConfig cfg(1, 1, 1);
    RateTuple rates;
    if (!input_path.empty()) {
        try {
            std::ifstream in(input_path);
            if (!in) throw std::invalid_argument("cannot read input file: " + input_path);
            json j = json::parse(in);
            cfg = MacConfig(j.at("K").get<int>(), j.at("M").get<int>(), j.at("N").get<int>());
            for (const auto& r : j.at("rates")) rates.push_back(rat_from_json(r));
        } catch (const json::exception& e) {
            throw std::invalid_argument(std::string("malformed input: ") + e.what());
        }
    } else {
        cfg = MacConfig(K, M, N);
        rates = parse_rate_list(rate_str);
    }

    OptResult res = maximize_dim_allocation(cfg, rates, opts);
    json out;
    out["value"] = rat_json(res.value);
    out["value_float"] = res.value.to_double();
    out["argmax"] = tuple_json(res.argmax);
    out["binding_subset"] = res.binding_subset;
    out["method"] = res.method == OptMethod::ClosedForm ? "closed_form" : "grid";
    out["grid_disagreement"] = res.grid_disagreement;
    std::cout << out.dump() << "\n";
    return kExitSuccess;
}

// -------------------------------------------------------------- witness ----

int run_witness(int K, int M, int N, const std::string& r0_str,
                const std::string& eps_str) {
    std::optional<Rational> r0, eps;
    if (!r0_str.empty()) r0 = parse_rational(r0_str);
    if (!eps_str.empty()) eps = parse_rational(eps_str);
    auto report = suboptimality_witness(MacConfig(K, M, N), {}, r0, eps);
    json out;
    if (!report) {
        out["found"] = false;
        out["reason"] = "bound meets the finite-constellation curve";
    } else {
        out["found"] = true;
        out["r0"] = rat_json(report->r0);
        out["epsilon"] = rat_json(report->epsilon);
        out["rates"] = tuple_json(report->rates);
        out["ic_value"] = rat_json(report->ic_value);
        out["fc_value"] = rat_json(report->fc_value);
    }
    std::cout << out.dump() << "\n";
    return kExitSuccess;
}

// --------------------------------------------------------------- scheme ----

int run_scheme(int M, int N, int l, int k) {
    StackedPattern pat = stack_patterns(MacConfig(k, M, N), l, k);
    EffectiveChannel eff = effective_channel(pat);

    // Human-readable grid: symbol index or "." per cell.
    for (int row = 0; row < k * M; ++row) {
        for (int col = 0; col < pat.T; ++col) {
            if (col) std::cout << ' ';
            if (pat.cells[row][col] == 0)
                std::cout << "  .";
            else
                std::cout << (pat.cells[row][col] < 10 ? " x" : "x") << pat.cells[row][col];
        }
        std::cout << "\n";
    }

    json out;
    out["M"] = M;
    out["N"] = N;
    out["l"] = l;
    out["k"] = k;
    out["T"] = pat.T;
    out["symbols"] = pat.symbol_count();
    json cells = json::array();
    for (int row = 0; row < k * M; ++row)
        for (int col = 0; col < pat.T; ++col)
            if (pat.cells[row][col] != 0)
                cells.push_back(json::array({row + 1, col + 1, pat.cells[row][col]}));
    out["cells"] = cells;
    out["blocks"] = eff.blocks;
    std::cout << out.dump() << "\n";
    return kExitSuccess;
}

// ------------------------------------------------------------- simulate ----

int run_simulate(const std::string& config_path, const std::string& mode_str,
                 const std::string& out_path, int threads) {
    SimConfig sim;
    try {
        std::ifstream in(config_path);
        if (!in) throw std::invalid_argument("cannot read config: " + config_path);
        json j = json::parse(in);
        sim.cfg = MacConfig(j.at("K").get<int>(), j.at("M").get<int>(), j.at("N").get<int>());
        sim.l = j.value("l", 0);
        for (const auto& r : j.at("rates")) sim.rates.push_back(rat_from_json(r));
        sim.snr_grid_db = j.at("snr_grid_db").get<std::vector<double>>();
        sim.trials_per_snr = j.at("trials_per_snr").get<long long>();
        sim.seed = j.value("seed", (std::uint64_t)0);
        std::string mode = !mode_str.empty() ? mode_str : j.value("mode", "union_bound");
        if (mode == "union_bound")
            sim.mode = SimMode::UnionBound;
        else if (mode == "lattice_decode")
            sim.mode = SimMode::LatticeDecode;
        else
            throw std::invalid_argument("unknown mode: " + mode);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
    if (const char* env = std::getenv("MACDMT_SEED")) sim.seed = std::strtoull(env, nullptr, 10);
    sim.threads = threads;

    SimResult res;
    try {
        res = run_simulation(sim);
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return kExitFailure;
    }

    std::ostringstream csv;
    csv << "snr_db,trials,errors,pe_hat\n";
    csv.precision(17);
    for (const auto& cell : res.cells)
        csv << cell.snr_db << "," << cell.trials << "," << cell.errors << ","
            << cell.pe_hat << "\n";
    write_text(out_path, csv.str());

    json out;
    out["slope"] = res.slope.slope;
    out["intercept"] = res.slope.intercept;
    out["stderr"] = res.slope.stderr_;
    out["points"] = res.slope.points;
    std::cout << out.dump() << "\n";
    return kExitSuccess;
}

// --------------------------------------------------------------- verify ----

struct Check {
    std::string name;
    bool passed = true;
    long long count = 0;
    std::string detail;

    void expect(bool ok, const std::string& what) {
        ++count;
        if (!ok && passed) {
            passed = false;
            detail = what;
        }
    }
};

std::vector<Rational> rat_grid(const Rational& lo, const Rational& hi, const Rational& step) {
    std::vector<Rational> g;
    for (Rational r = lo; r <= hi; r += step) g.push_back(r);
    return g;
}

// Fault injection: a perturbed check compares against a slightly shifted
// value, so it must report a failure.
Rational nudge(bool perturb) { return perturb ? Rational(1, 1000000) : Rational(0); }

Check check_pooled_lines(bool perturb) {
    Check c{"lemma2_3_pooled_lines"};
    for (int K = 2; K <= 3; ++K)
        for (int M = 1; M <= 3; ++M)
            for (int N = 1; N <= 8; ++N) {
                MacConfig cfg(K, M, N);
                bool user_limited = N >= (K + 1) * M - 1;
                Rational cap = user_limited
                                   ? Rational(M)
                                   : Rational::min(Rational(M), Rational(cfg.L(), K));
                int imax = user_limited ? K : K - 1;
                for (const auto& D : rat_grid(Rational(1, 12), cap, Rational(1, 12)))
                    for (const auto& r : rat_grid(Rational(0), D, Rational(1, 12)))
                        for (int i = 2; i <= imax; ++i) {
                            if (Rational(i) * D > Rational(std::min(i * M, N))) continue;
                            Rational single = ic_dmt_upper_p2p(M, N, D, r) + nudge(perturb);
                            Rational pooled =
                                ic_dmt_upper_p2p(i * M, N, Rational(i) * D, Rational(i) * r);
                            c.expect(single <= pooled,
                                     "single-user line above pooled line at K=" +
                                         std::to_string(K) + " M=" + std::to_string(M) +
                                         " N=" + std::to_string(N));
                        }
            }
    return c;
}

Check check_middle_line(bool perturb) {
    Check c{"lemma5_middle_line"};
    for (int K = 1; K <= 3; ++K)
        for (int M = 1; M <= 3; ++M)
            for (int N = 1; N <= 8; ++N) {
                MacConfig cfg(K, M, N);
                Regime reg = Regime::classify(cfg);
                if (reg.tag != Regime::Tag::Intermediate) continue;
                Rational Dl = intermediate_dim(M, N, reg.l);
                Rational slope(N + M - 1 - reg.l);
                for (const auto& r : rat_grid(Rational(0), Dl, Rational(1, 12))) {
                    Rational lhs = ic_dmt_upper_p2p(M, N, Dl, r) + nudge(perturb);
                    Rational rhs =
                        ic_dmt_upper_p2p(K * M, N, Rational(K) * Dl, Rational(K) * r);
                    Rational line = Rational::max(Rational(0), (Dl - r) * slope);
                    c.expect(lhs == rhs && lhs == line + nudge(perturb),
                             "middle-line identity broken at M=" + std::to_string(M) +
                                 " N=" + std::to_string(N));
                }
            }
    return c;
}

Check check_strict_gap(bool perturb) {
    Check c{"lemma6_strict_gap"};
    for (int K = 2; K <= 3; ++K)
        for (int M = 1; M <= 3; ++M)
            for (int N = 1; N <= 8; ++N) {
                MacConfig cfg(K, M, N);
                Regime reg = Regime::classify(cfg);
                auto fc = fc_dmt_mac_symmetric(cfg);
                auto [reg2, ic] = ic_dmt_mac_symmetric(cfg);
                (void)reg2;
                c.expect(ic.is_convex(), "symmetric bound not convex");
                Rational lo, hi;
                if (reg.tag == Regime::Tag::HeavilyLoaded) {
                    lo = Rational(0);
                    hi = Rational(N, K);
                } else if (reg.tag == Regime::Tag::Intermediate) {
                    lo = Rational(reg.l / 2 + 1);
                    hi = Rational((K - 1) * (long long)M + (reg.l + 1) / 2, K);
                } else {
                    continue;
                }
                for (const auto& r : rat_grid(lo, hi, Rational(1, 12)))
                    if (r > lo && r < hi) {
                        Rational gap = fc.eval(r) - ic.eval(r) - nudge(perturb) * Rational(100000000);
                        c.expect(gap > Rational(0),
                                 "bound not strictly below the finite-constellation curve");
                    }
            }
    return c;
}

Check check_ratio(bool perturb) {
    Check c{"lemma10_ratio"};
    for (int s = 1; s <= 3; ++s)
        for (int M = 1; M <= 3; ++M)
            for (int N = (s + 1) * M - 1; N <= 10; ++N) {
                if (N < M) continue;
                for (int a = 0; a < s; ++a)
                    for (int b = 1; b <= M; ++b)
                        c.expect(ratio_bound(s, M, N, a, b) + nudge(perturb) * Rational(-2) >=
                                     Rational(1) + nudge(perturb),
                                 "ratio below one at s=" + std::to_string(s) +
                                     " M=" + std::to_string(M) + " N=" + std::to_string(N));
            }
    return c;
}

Check check_lp(bool perturb) {
    Check c{"lp_inequality"};
    for (int K = 2; K <= 3; ++K)
        for (int M = 1; M <= 3; ++M)
            for (int N = M; N <= 8; ++N)
                for (int s = 1; s <= K; ++s) {
                    if (N < (s + 1) * M - 1) continue;
                    for (int l = 0; l <= M - 1; ++l) {
                        Rational Dl((long long)M * N - l * (l + 1), N + M - 1 - 2 * l);
                        for (const auto& r : rat_grid(Rational(0), Dl, Rational(1, 6))) {
                            LpResult lp = exponent_min_lp(s, M, N, l, r, K);
                            if (lp.clamped) continue;
                            Rational target =
                                Rational(s) * (Rational((long long)M * N - l * (l + 1)) -
                                               Rational(N + M - 1 - 2 * l) * r);
                            c.expect(Rational(s) * lp.value + nudge(perturb) * Rational(-2) >=
                                         target,
                                     "LP optimum below target/s at M=" + std::to_string(M) +
                                         " N=" + std::to_string(N));
                        }
                    }
                }
    return c;
}

Check check_symmetric_optimum(bool perturb) {
    Check c{"symmetric_vs_optimizer"};
    OptOptions opts;
    opts.grid_step = Rational(1, 8);
    opts.refine_rounds = 2;
    for (int K = 2; K <= 3; ++K)
        for (int M = 1; M <= 2; ++M)
            for (int N = 1; N <= 6; ++N) {
                MacConfig cfg(K, M, N);
                auto [reg, ic] = ic_dmt_mac_symmetric(cfg);
                (void)reg;
                for (const auto& r : rat_grid(Rational(0), ic.r_max(), Rational(1, 4))) {
                    OptResult res = maximize_dim_allocation(cfg, RateTuple(K, r), opts);
                    double diff = std::abs(res.value.to_double() - ic.eval(r).to_double()) +
                                  (perturb ? 1e-3 : 0.0);
                    c.expect(diff <= 1e-6, "optimizer disagrees with the closed form at K=" +
                                               std::to_string(K) + " M=" + std::to_string(M) +
                                               " N=" + std::to_string(N) + " r=" + r.str());
                }
            }
    return c;
}

Check check_scheme(bool perturb) {
    Check c{"scheme_counts"};
    for (int M = 1; M <= 4; ++M)
        for (int N = M; N <= 10; ++N)
            for (int l = 0; l <= M - 1; ++l) {
                TransmissionPattern p = build_pattern(M, N, l);
                int nonzero = 0;
                for (const auto& row : p.cells)
                    for (int v : row) nonzero += (v != 0);
                c.expect(nonzero + (perturb ? 1 : 0) == M * N - l * (l + 1),
                         "pattern cell count mismatch");
                auto eff = effective_channel(stack_patterns(MacConfig(2, M, N), l, 2));
                std::vector<int> count(2 * M, 0);
                for (const auto& block : eff.blocks)
                    for (int j : block) ++count[j - 1];
                for (int a = 0; a < 2; ++a)
                    for (int b = 1; b <= M; ++b)
                        c.expect(count[a * M + b - 1] == occurrence_count(M, N, l, a, b),
                                 "occurrence count mismatch at M=" + std::to_string(M) +
                                     " N=" + std::to_string(N));
            }
    return c;
}

Check check_determinant(bool perturb) {
    Check c{"determinant_identities"};
    std::mt19937_64 gen(1234567);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::tuple<int, int, int, int>> shapes{
        {2, 2, 5, 0}, {2, 2, 5, 1}, {1, 3, 5, 1}, {3, 1, 4, 0}, {2, 3, 7, 2}};
    for (int rep = 0; rep < 40; ++rep)
        for (auto [k, M, N, l] : shapes) {
            auto eff = effective_channel(stack_patterns(MacConfig(k, M, N), l, k));
            ComplexMatrix H(N, k * M);
            for (int col = 0; col < k * M; ++col)
                for (int row = 0; row < N; ++row)
                    H(row, col) = std::complex<double>(nd(gen), nd(gen)) / std::sqrt(2.0);
            double blocks = gram_determinant(H, eff) * (perturb ? 1.0 + 1e-6 : 1.0);
            ComplexMatrix A = assemble_effective(H, eff);
            double dense = (A.adjoint() * A).determinant().real();
            c.expect(std::abs(blocks - dense) <= 1e-8 * std::abs(dense),
                     "block product differs from the dense Gram determinant");
            double prod = 1.0;
            for (double f : determinant_decomposition(H, eff)) prod *= f;
            c.expect(std::abs(prod * (perturb ? 1.0 + 1e-6 : 1.0) - dense) <=
                         1e-8 * std::abs(dense),
                     "per-column decomposition differs from the dense Gram determinant");
        }
    return c;
}

int run_verify(const std::vector<std::string>& selection, const std::string& perturb) {
    using Runner = Check (*)(bool);
    std::vector<std::pair<std::string, Runner>> all{
        {"lemma2_3", &check_pooled_lines},   {"lemma5", &check_middle_line},
        {"lemma6", &check_strict_gap},       {"lemma10", &check_ratio},
        {"lp", &check_lp},                   {"symmetric", &check_symmetric_optimum},
        {"scheme", &check_scheme},           {"determinant", &check_determinant},
    };
    auto known = [&](const std::string& name) {
        for (const auto& [n, f] : all)
            if (n == name) return true;
        return false;
    };
    for (const auto& s : selection)
        if (!known(s)) {
            std::cerr << "verify: unknown check '" << s << "'\n";
            return kExitUsage;
        }
    if (!perturb.empty() && !known(perturb)) {
        std::cerr << "verify: unknown check '" << perturb << "'\n";
        return kExitUsage;
    }

    bool all_pass = true;
    for (const auto& [name, fn] : all) {
        if (!selection.empty() &&
            std::find(selection.begin(), selection.end(), name) == selection.end())
            continue;
        Check c = fn(perturb == name);
        all_pass &= c.passed;
        std::cout << name << ": " << (c.passed ? "pass" : "fail") << " (" << c.count
                  << " assertions" << (c.passed ? "" : "; " + c.detail) << ")\n";
    }
    return all_pass ? kExitSuccess : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diversity-multiplexing tradeoff toolkit for MIMO multiple-access channels"};
    app.require_subcommand(1);

    // curve
    int K = 1, M = 1, N = 1, l = 0, users = 1, threads = 0;
    std::string kind, dims, step = "1/24", csv_path, input_path, rate_str;
    std::string r0_str, eps_str, config_path, mode_str, out_path, perturb;
    std::vector<std::string> selection;
    OptOptions opts;
    std::string opt_step = "1/24";

    auto* curve = app.add_subcommand("curve", "Emit a DMT curve as JSON breakpoints + CSV samples");
    curve->add_option("-K", K, "number of users")->default_val(1);
    curve->add_option("-M", M, "transmit antennas per user")->required();
    curve->add_option("-N", N, "receive antennas")->required();
    curve->add_option("--kind", kind, "fc_p2p | fc_mac | ic_mac | ic_line")->required();
    curve->add_option("--dims", dims, "dimensions per channel use (for ic_line)");
    curve->add_option("--grid-step", step, "CSV sampling step (rational)");
    curve->add_option("--csv", csv_path, "CSV output path (default stdout)");

    auto* optimize = app.add_subcommand("optimize", "Maximize the subset bound over dimension allocations");
    optimize->add_option("--input", input_path, "JSON file {K,M,N,rates:[[num,den],...]}");
    optimize->add_option("-K", K, "number of users");
    optimize->add_option("-M", M, "transmit antennas per user");
    optimize->add_option("-N", N, "receive antennas");
    optimize->add_option("--rates", rate_str, "comma-separated rationals, e.g. 13/6,1/2");
    optimize->add_option("--grid-step", opt_step, "grid step (rational)");
    optimize->add_option("--refine", opts.refine_rounds, "refinement rounds");
    optimize->add_option("--threads", opts.threads, "worker threads (0 = auto)");

    auto* witness = app.add_subcommand("witness", "Rate tuple where the IC bound is strictly suboptimal");
    witness->add_option("-K", K, "number of users")->required();
    witness->add_option("-M", M, "transmit antennas per user")->required();
    witness->add_option("-N", N, "receive antennas")->required();
    witness->add_option("--r0", r0_str, "base multiplexing gain (rational)");
    witness->add_option("--epsilon", eps_str, "rate perturbation (rational)");

    auto* scheme = app.add_subcommand("scheme", "Print a transmission pattern and its effective-channel blocks");
    scheme->add_option("-M", M, "transmit antennas per user")->required();
    scheme->add_option("-N", N, "receive antennas")->required();
    scheme->add_option("-l", l, "taper level (0..M-1)")->default_val(0);
    scheme->add_option("--users", users, "stacked users")->default_val(1);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo error-probability sweep and slope fit");
    simulate->add_option("--config", config_path, "JSON simulation config")->required();
    simulate->add_option("--mode", mode_str, "union_bound | lattice_decode (overrides config)");
    simulate->add_option("--out", out_path, "CSV output path (default stdout)");
    simulate->add_option("--threads", threads, "worker threads (0 = auto)");

    auto* verify = app.add_subcommand("verify", "Run the invariant suites of all modules");
    verify->add_option("--select", selection, "subset of checks to run");
    verify->add_option("--perturb", perturb, "inject a fault into the named check (testing)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitUsage;
    }

    try {
        if (curve->parsed()) return run_curve(K, M, N, kind, dims, step, csv_path);
        if (optimize->parsed()) {
            opts.grid_step = parse_rational(opt_step);
            return run_optimize(input_path, K, M, N, rate_str, opts);
        }
        if (witness->parsed()) return run_witness(K, M, N, r0_str, eps_str);
        if (scheme->parsed()) return run_scheme(M, N, l, users);
        if (simulate->parsed()) return run_simulate(config_path, mode_str, out_path, threads);
        if (verify->parsed()) return run_verify(selection, perturb);
    } catch (const std::invalid_argument& e) {
        std::cerr << app.get_name() << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << app.get_name() << ": " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
