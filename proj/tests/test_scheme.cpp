#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>
#include <vector>

#include "macdmt/scheme.hpp"

using namespace macdmt;

namespace {

ComplexMatrix random_channel(int rows, int cols, std::mt19937_64& gen) {
    std::normal_distribution<double> nd(0.0, 1.0);
    ComplexMatrix H(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) H(r, c) = std::complex<double>(nd(gen), nd(gen)) / std::sqrt(2.0);
    return H;
}

int nonzero_cells(const std::vector<std::vector<int>>& cells) {
    int n = 0;
    for (const auto& row : cells)
        for (int v : row) n += (v != 0);
    return n;
}

}  // namespace

TEST_CASE("pattern for 2x5 with one-step taper is fully dense") {
    TransmissionPattern p = build_pattern(2, 5, 1);
    REQUIRE(p.T == 4);
    REQUIRE(p.cells.size() == 2);
    // Column-major numbering over a dense 2 x 4 block.
    int sym = 1;
    for (int col = 0; col < 4; ++col)
        for (int row = 0; row < 2; ++row) CHECK(p.cells[row][col] == sym++);
    CHECK(p.symbol_count() == 8);
}

TEST_CASE("pattern for 2x5 without taper appends one column pair") {
    TransmissionPattern p = build_pattern(2, 5, 0);
    REQUIRE(p.T == 6);
    int sym = 1;
    for (int col = 0; col < 4; ++col)
        for (int row = 0; row < 2; ++row) CHECK(p.cells[row][col] == sym++);
    // Pair v=1: top antenna only in column 5, bottom antenna only in column 6.
    CHECK(p.cells[0][4] == 9);
    CHECK(p.cells[1][4] == 0);
    CHECK(p.cells[0][5] == 0);
    CHECK(p.cells[1][5] == 10);
    CHECK(p.symbol_count() == 10);
}

TEST_CASE("two stacked users for 2x5, full taper: dense 4x4 grid") {
    StackedPattern s = stack_patterns(MacConfig(2, 2, 5), 1, 2);
    REQUIRE(s.T == 4);
    REQUIRE(s.cells.size() == 4);
    // User 1 fills rows 1-2 with symbols 1..8 column-major, user 2 fills
    // rows 3-4 with symbols 9..16.
    for (int col = 0; col < 4; ++col) {
        CHECK(s.cells[0][col] == 2 * col + 1);
        CHECK(s.cells[1][col] == 2 * col + 2);
        CHECK(s.cells[2][col] == 8 + 2 * col + 1);
        CHECK(s.cells[3][col] == 8 + 2 * col + 2);
    }
}

TEST_CASE("two stacked users for 2x5, no taper: tail pair interleaves users") {
    StackedPattern s = stack_patterns(MacConfig(2, 2, 5), 0, 2);
    REQUIRE(s.T == 6);
    REQUIRE(s.cells.size() == 4);
    for (int col = 0; col < 4; ++col) {
        CHECK(s.cells[0][col] == 2 * col + 1);
        CHECK(s.cells[1][col] == 2 * col + 2);
        CHECK(s.cells[2][col] == 10 + 2 * col + 1);
        CHECK(s.cells[3][col] == 10 + 2 * col + 2);
    }
    // The extra columns activate antennas (1,3) then (2,4); each user owns
    // its own pair of tail symbols.
    CHECK(s.cells[0][4] == 9);
    CHECK(s.cells[1][4] == 0);
    CHECK(s.cells[2][4] == 19);
    CHECK(s.cells[3][4] == 0);
    CHECK(s.cells[0][5] == 0);
    CHECK(s.cells[1][5] == 10);
    CHECK(s.cells[2][5] == 0);
    CHECK(s.cells[3][5] == 20);
    CHECK(s.symbol_count() == 20);
}

TEST_CASE("effective channel blocks for 2x5 stacks") {
    SUBCASE("k=2, no taper") {
        auto eff = effective_channel(stack_patterns(MacConfig(2, 2, 5), 0, 2));
        REQUIRE(eff.T == 6);
        std::vector<int> full{1, 2, 3, 4};
        for (int m = 0; m < 4; ++m) CHECK(eff.blocks[m] == full);
        CHECK(eff.blocks[4] == std::vector<int>{1, 3});
        CHECK(eff.blocks[5] == std::vector<int>{2, 4});
    }
    SUBCASE("k=1, no taper") {
        auto eff = effective_channel(stack_patterns(MacConfig(2, 2, 5), 0, 1));
        REQUIRE(eff.T == 6);
        std::vector<int> full{1, 2};
        for (int m = 0; m < 4; ++m) CHECK(eff.blocks[m] == full);
        CHECK(eff.blocks[4] == std::vector<int>{1});
        CHECK(eff.blocks[5] == std::vector<int>{2});
    }
    SUBCASE("k=2, one-step taper: every block full") {
        auto eff = effective_channel(stack_patterns(MacConfig(2, 2, 5), 1, 2));
        REQUIRE(eff.T == 4);
        std::vector<int> full{1, 2, 3, 4};
        for (int m = 0; m < 4; ++m) CHECK(eff.blocks[m] == full);
    }
}

TEST_CASE("pattern domain checks") {
    CHECK_THROWS_AS(build_pattern(3, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_pattern(2, 5, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_pattern(2, 5, -1), std::invalid_argument);
    CHECK_THROWS_AS(build_pattern(0, 5, 0), std::invalid_argument);
    CHECK_THROWS_AS(stack_patterns(MacConfig(2, 2, 5), 0, 3), std::invalid_argument);
    CHECK_THROWS_AS(stack_patterns(MacConfig(2, 2, 5), 0, 0), std::invalid_argument);
}

TEST_CASE("nonzero cell count and per-use dimension sweep") {
    for (int M = 1; M <= 4; ++M)
        for (int N = M; N <= 10; ++N)
            for (int l = 0; l <= M - 1; ++l) {
                TransmissionPattern p = build_pattern(M, N, l);
                CHECK(nonzero_cells(p.cells) == M * N - l * (l + 1));
                // Symbols are 1..count, each exactly once.
                std::vector<int> seen(p.symbol_count() + 1, 0);
                for (const auto& row : p.cells)
                    for (int v : row)
                        if (v != 0) ++seen[v];
                for (int s = 1; s <= p.symbol_count(); ++s) CHECK(seen[s] == 1);
            }
}

TEST_CASE("occurrence counts match the patterns exhaustively") {
    for (int M = 1; M <= 4; ++M)
        for (int N = M; N <= 10; ++N)
            for (int l = 0; l <= M - 1; ++l)
                for (int k = 1; k <= 3; ++k) {
                    auto eff = effective_channel(stack_patterns(MacConfig(k, M, N), l, k));
                    std::vector<int> count(k * M, 0);
                    for (const auto& block : eff.blocks)
                        for (int j : block) ++count[j - 1];
                    for (int a = 0; a < k; ++a)
                        for (int b = 1; b <= M; ++b)
                            CHECK(count[a * M + b - 1] == occurrence_count(M, N, l, a, b));
                }
}

TEST_CASE("block Gram product matches the dense assembled Gram") {
    std::mt19937_64 gen(20240817);
    int done = 0;
    std::vector<std::tuple<int, int, int, int>> shapes{
        {2, 2, 5, 0}, {2, 2, 5, 1}, {1, 2, 3, 0}, {2, 3, 7, 2}, {3, 1, 4, 0}, {2, 2, 4, 1}};
    while (done < 1000)
        for (auto [k, M, N, l] : shapes) {
            auto eff = effective_channel(stack_patterns(MacConfig(k, M, N), l, k));
            ComplexMatrix H = random_channel(N, k * M, gen);
            double via_blocks = gram_determinant(H, eff);
            ComplexMatrix A = assemble_effective(H, eff);
            double dense = (A.adjoint() * A).determinant().real();
            CHECK(via_blocks == doctest::Approx(dense).epsilon(1e-8));
            ++done;
        }
}

TEST_CASE("per-column decomposition multiplies back to the Gram determinant") {
    std::mt19937_64 gen(991);
    int done = 0;
    std::vector<std::tuple<int, int, int, int>> shapes{
        {2, 2, 5, 0}, {2, 2, 5, 1}, {1, 3, 5, 1}, {2, 1, 2, 0}, {3, 2, 8, 0}};
    while (done < 1000)
        for (auto [k, M, N, l] : shapes) {
            auto eff = effective_channel(stack_patterns(MacConfig(k, M, N), l, k));
            ComplexMatrix H = random_channel(N, k * M, gen);
            auto contrib = determinant_decomposition(H, eff);
            REQUIRE((int)contrib.size() == k * M);
            double prod = 1.0;
            for (double c : contrib) prod *= c;
            double gram = gram_determinant(H, eff);
            CHECK(prod == doctest::Approx(gram).epsilon(1e-8));
            ++done;
        }
}

TEST_CASE("orthonormal pooled columns give unit Gram determinant") {
    std::mt19937_64 gen(7);
    for (auto [k, M, N, l] : std::vector<std::tuple<int, int, int, int>>{
             {2, 2, 5, 0}, {2, 2, 5, 1}, {1, 3, 4, 0}, {3, 1, 3, 0}}) {
        ComplexMatrix G = random_channel(N, k * M, gen);
        Eigen::HouseholderQR<ComplexMatrix> qr(G);
        ComplexMatrix Q = qr.householderQ() * ComplexMatrix::Identity(N, k * M);
        auto eff = effective_channel(stack_patterns(MacConfig(k, M, N), l, k));
        CHECK(gram_determinant(Q, eff) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("scaling one pooled column scales the Gram by its occurrence count") {
    std::mt19937_64 gen(13);
    MacConfig cfg(2, 2, 5);
    for (int l = 0; l <= 1; ++l) {
        auto eff = effective_channel(stack_patterns(cfg, l, 2));
        ComplexMatrix H = random_channel(5, 4, gen);
        double base = gram_determinant(H, eff);
        for (int j = 0; j < 4; ++j) {
            ComplexMatrix Hs = H;
            Hs.col(j) *= 2.0;
            int occ = occurrence_count(2, 5, l, j / 2, j % 2 + 1);
            CHECK(gram_determinant(Hs, eff) ==
                  doctest::Approx(base * std::pow(4.0, occ)).epsilon(1e-8));
        }
    }
}

TEST_CASE("rank-deficient channels give a zero Gram determinant") {
    // More pooled columns than receive antennas in some block.
    auto eff = effective_channel(stack_patterns(MacConfig(3, 2, 5), 1, 3));
    ComplexMatrix H = ComplexMatrix::Random(5, 6);
    CHECK(gram_determinant(H, eff) == 0.0);

    // Duplicated columns inside a full block.
    auto eff2 = effective_channel(stack_patterns(MacConfig(2, 2, 5), 1, 2));
    ComplexMatrix H2 = ComplexMatrix::Random(5, 4);
    H2.col(1) = H2.col(0);
    CHECK(gram_determinant(H2, eff2) == doctest::Approx(0.0));
}
