#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ucfeas/problems.hpp"
#include "ucfeas/solvers.hpp"

using namespace ucfeas;

TEST_CASE("sparse recovery instances are deterministic per seed") {
    auto a = gen_safp(12, 6, 3, 42);
    auto b = gen_safp(12, 6, 3, 42);
    REQUIRE(a.A.data == b.A.data);
    REQUIRE(a.b == b.b);
    REQUIRE(a.ground_truth == b.ground_truth);
    auto c = gen_safp(12, 6, 3, 43);
    REQUIRE(a.A.data != c.A.data);
}

TEST_CASE("sparse recovery instances satisfy their construction law") {
    auto inst = gen_safp(20, 8, 4, 7);
    REQUIRE(inst.A.rows == 8);
    REQUIRE(inst.A.cols == 20);
    REQUIRE(inst.ground_truth.has_value());
    const Vec& w = *inst.ground_truth;
    REQUIRE(matvec(inst.A, w) == inst.b);  // b defined as A w*
    std::size_t nnz = 0;
    for (double v : w)
        if (v != 0.0) {
            ++nnz;
            REQUIRE(std::abs(v) >= 1.0);
            REQUIRE(std::abs(v) <= 1e5);
        }
    REQUIRE(nnz == inst.s);
    REQUIRE_THROWS_AS(gen_safp(5, 6, 2, 1), DimensionError);
    REQUIRE_THROWS_AS(gen_safp(5, 3, 0, 1), DimensionError);
}

TEST_CASE("fixed complementarity families match their definitions") {
    auto l1 = gen_lcp1(3);
    const double M1[3][3] = {{4, -1, 0}, {-1, 4, -1}, {0, -1, 4}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) REQUIRE(l1.M.at(i, j) == M1[i][j]);
    REQUIRE(l1.b == Vec(3, 1.0));

    auto l2 = gen_lcp2(3);
    const double M2[3][3] = {{1, 2, 2}, {0, 1, 2}, {0, 0, 1}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) REQUIRE(l2.M.at(i, j) == M2[i][j]);
}

TEST_CASE("random complementarity family yields P-matrices") {
    for (std::uint64_t seed : {1ULL, 2ULL, 9ULL}) {
        auto inst = gen_lcp3(6, seed);
        REQUIRE(is_p_matrix(inst.M));
        REQUIRE(inst.b.size() == 6);
        for (double v : inst.b) {
            REQUIRE(v > -500.0);
            REQUIRE(v < 500.0);
        }
    }
    auto again = gen_lcp3(6, 2);
    REQUIRE(again.M.data == gen_lcp3(6, 2).M.data);
}

TEST_CASE("stacked feasibility form always has full row rank") {
    for (const LcpInstance& inst :
         {gen_lcp1(5), gen_lcp2(5), gen_lcp3(5, 3), LcpInstance{DenseMatrix(4, 4), Vec(4, 0.0), {}, {}}}) {
        REQUIRE_NOTHROW(gram_cholesky(inst.stacked()));
    }
}

TEST_CASE("classification tags fill from principal minors") {
    auto l1 = gen_lcp1(3);
    classify_lcp(l1);
    REQUIRE(l1.p_matrix == true);
    REQUIRE(l1.nondegenerate == true);
    auto l2 = gen_lcp2(4);
    classify_lcp(l2);
    REQUIRE(l2.p_matrix == true);

    LcpInstance off;
    off.M = DenseMatrix(2, 2);
    off.M.at(0, 1) = 1.0;
    off.M.at(1, 0) = 1.0;
    off.b = Vec(2, 0.0);
    classify_lcp(off);
    REQUIRE(off.p_matrix == false);
    REQUIRE(off.nondegenerate == false);
}

TEST_CASE("normalization scales by root-n over the column norm") {
    LcpInstance id;
    id.M = DenseMatrix::identity(4);
    id.b = Vec{1.0, 2.0, 3.0, 4.0};
    auto out = normalize_lcp(id);
    for (std::size_t i = 0; i < 4; ++i) REQUIRE(out.M.at(i, i) == 2.0);
    REQUIRE(out.b == Vec{2.0, 4.0, 6.0, 8.0});

    auto l1 = gen_lcp1(3);
    REQUIRE(norm1_induced(l1.M) == 6.0);  // column sums 5, 6, 5
    auto n1 = normalize_lcp(l1);
    const double scale = std::sqrt(3.0) / 6.0;
    REQUIRE(std::abs(n1.M.at(1, 1) - 4.0 * scale) < 1e-15);
    REQUIRE(std::abs(norm1_induced(n1.M) - std::sqrt(3.0)) < 1e-12);
}

TEST_CASE("normalization preserves the complementarity solution set") {
    auto inst = gen_lcp1(4);
    auto norm = normalize_lcp(inst);
    auto sols_a = lcp_bruteforce_solve(inst.M, inst.b);
    auto sols_b = lcp_bruteforce_solve(norm.M, norm.b);
    REQUIRE(sols_a.size() == sols_b.size());
    for (std::size_t k = 0; k < sols_a.size(); ++k)
        for (std::size_t j = 0; j < 4; ++j)
            REQUIRE(std::abs(sols_a[k][j] - sols_b[k][j]) < 1e-8);
}

TEST_CASE("absolute value equation companion matrix") {
    // B = 0 gives the identity regardless of A.
    DenseMatrix A(3, 3);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : A.data) v = u(rng);
    A.at(0, 0) += 3.0;  // keep it comfortably nonsingular
    A.at(1, 1) += 3.0;
    A.at(2, 2) += 3.0;
    DenseMatrix zero(3, 3);
    auto M = gave_to_lcp_matrix(A, zero);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE(std::abs(M.at(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);

    DenseMatrix two = DenseMatrix::identity(3);
    for (auto& v : two.data) v *= 2.0;
    auto M3 = gave_to_lcp_matrix(two, DenseMatrix::identity(3));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE(std::abs(M3.at(i, j) - (i == j ? 3.0 : 0.0)) < 1e-12);

    REQUIRE_THROWS_AS(gave_to_lcp_matrix(A, A), SingularDifferenceError);
}

TEST_CASE("restricted eigenvalue floor on simple matrices") {
    auto I4 = DenseMatrix::identity(4);
    for (std::size_t s : {1u, 2u, 4u}) {
        auto est = estimate_nu_s(I4, s);
        REQUIRE(est.exact);
        REQUIRE(std::abs(est.value - 1.0) < 1e-12);
    }
    DenseMatrix D(2, 2);
    D.at(0, 0) = 1.0;
    D.at(1, 1) = 2.0;
    REQUIRE(std::abs(estimate_nu_s(D, 1).value - 1.0) < 1e-12);
}

TEST_CASE("restricted eigenvalue matches a closed-form support sweep") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix A(4, 8);
    for (auto& v : A.data) v = u(rng);
    auto est = estimate_nu_s(A, 2);
    REQUIRE(est.exact);

    // Independent oracle: all supports of size 2, 2x2 Gram eigenvalues by the
    // quadratic formula.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j) {
            double a = 0.0, c = 0.0, d = 0.0;
            for (std::size_t r = 0; r < 4; ++r) {
                a += A.at(r, i) * A.at(r, i);
                c += A.at(r, i) * A.at(r, j);
                d += A.at(r, j) * A.at(r, j);
            }
            const double mid = 0.5 * (a + d);
            const double rad = std::sqrt(0.25 * (a - d) * (a - d) + c * c);
            best = std::min(best, mid - rad);
        }
    REQUIRE(std::abs(est.value - best) < 1e-10);

    // The exact value lower-bounds every sampled restricted Rayleigh quotient.
    for (int trial = 0; trial < 100000; ++trial) {
        const std::size_t i = rng() % 8;
        std::size_t j = rng() % 8;
        while (j == i) j = rng() % 8;
        Vec w(8, 0.0);
        w[i] = u(rng);
        w[j] = u(rng);
        const double nsq = norm2_sq(w);
        if (nsq == 0.0) continue;
        REQUIRE(norm2_sq(matvec(A, w)) >= est.value * nsq - 1e-9);
    }
}

TEST_CASE("restricted eigenvalue vanishes iff a support is rank-deficient") {
    DenseMatrix A(3, 4);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : A.data) v = u(rng);
    for (std::size_t r = 0; r < 3; ++r) A.at(r, 3) = 2.0 * A.at(r, 1);  // duplicate ray
    auto dup = estimate_nu_s(A, 2);
    REQUIRE(dup.value < 1e-12);
    auto single = estimate_nu_s(A, 1);
    REQUIRE(single.value > 1e-8);
}

TEST_CASE("restricted eigenvalue beyond the exact cap is a sampled bound") {
    DenseMatrix A(6, 24);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : A.data) v = u(rng);
    auto est = estimate_nu_s(A, 2);
    REQUIRE(!est.exact);
    REQUIRE(est.value >= 0.0);
    REQUIRE_THROWS_AS(estimate_nu_s(A, 2, /*require_exact=*/true), TooLargeError);
}

TEST_CASE("brute-force enumeration finds complementarity solutions") {
    auto I3 = DenseMatrix::identity(3);
    Vec e1{1.0, 0.0, 0.0};
    auto sols = lcp_bruteforce_solve(I3, e1);
    REQUIRE(sols.size() == 1);
    REQUIRE(sols[0] == Vec{1.0, 0.0, 0.0, 0.0, 0.0, 0.0});

    Vec bneg{-1.0, -2.0};
    auto I2 = DenseMatrix::identity(2);
    auto neg = lcp_bruteforce_solve(I2, bneg);
    REQUIRE(neg.size() == 1);
    REQUIRE(neg[0] == Vec{0.0, 0.0, 1.0, 2.0});

    auto n1 = normalize_lcp(gen_lcp1(4));
    auto unique_sol = lcp_bruteforce_solve(n1.M, n1.b);
    REQUIRE(unique_sol.size() == 1);
    Vec x(unique_sol[0].begin(), unique_sol[0].begin() + 4);
    REQUIRE(residual_lcp(n1.M, n1.b, x) < 1e-10);

    REQUIRE_THROWS_AS(lcp_bruteforce_solve(DenseMatrix(13, 13), Vec(13, 0.0)),
                      TooLargeError);
}

TEST_CASE("feasibility residual for sparse recovery") {
    auto inst = gen_safp(10, 5, 2, 3);
    SparsitySet set{10, 2};
    REQUIRE(residual_safp(inst.A, inst.b, set, *inst.ground_truth) == 0.0);
    Vec zero(10, 0.0);
    REQUIRE(std::abs(residual_safp(inst.A, inst.b, set, zero) -
                     0.5 * norm2_sq(inst.b)) < 1e-12);

    auto m = QuadraticModel::make(inst.A, inst.b, QChoice::Identity);
    UnionSet u = set;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
        Vec w(10);
        for (auto& v : w) v = dist(rng);
        const double lhs = residual_safp(inst.A, inst.b, set, w);
        const double rhs = lyapunov_value(m, u, Reformulation::SumOfSquares, w);
        REQUIRE(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("complementarity residual measure") {
    DenseMatrix M1(1, 1);
    M1.at(0, 0) = 1.0;
    REQUIRE(residual_lcp(M1, Vec{1.0}, Vec{0.0}) == 1.0);
    REQUIRE(residual_lcp(M1, Vec{1.0}, Vec{1.0}) == 0.0);

    auto n1 = normalize_lcp(gen_lcp1(4));
    auto sol = lcp_bruteforce_solve(n1.M, n1.b);
    Vec x(sol[0].begin(), sol[0].begin() + 4);
    const double mn = operator_norm(n1.M);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        Vec d(4);
        for (auto& v : d) v = 1e-3 * u(rng);
        Vec xp = vadd(x, d);
        REQUIRE(residual_lcp(n1.M, n1.b, xp) <= (1.0 + mn) * norm2(d) + 1e-12);
    }
}

TEST_CASE("sparse dataset loader parses svm-style lines") {
    const char* path = "test_dataset_tmp.txt";
    {
        std::ofstream out(path);
        out << "1 3:0.5 7:-2\n";
        out << "-1 1:1.0\n";
    }
    auto S = load_sparse_dataset(path);
    REQUIRE(S.rows == 2);
    REQUIRE(S.cols == 7);
    REQUIRE(S.entries.size() == 3);
    REQUIRE(S.entries[0] == Triplet{0, 2, 0.5});
    REQUIRE(S.entries[1] == Triplet{0, 6, -2.0});
    REQUIRE(S.entries[2] == Triplet{1, 0, 1.0});

    // Round-trip: write the triplets back out, reload, compare exactly.
    {
        std::ofstream out(path);
        std::size_t at = 0;
        for (std::size_t r = 0; r < S.rows; ++r) {
            out << "0";
            while (at < S.entries.size() && S.entries[at].row == r) {
                char buf[64];
                std::snprintf(buf, sizeof buf, " %zu:%.17g", S.entries[at].col + 1,
                              S.entries[at].value);
                out << buf;
                ++at;
            }
            out << "\n";
        }
    }
    auto T = load_sparse_dataset(path);
    REQUIRE(T.entries == S.entries);

    {
        std::ofstream out(path);
    }
    REQUIRE_THROWS_AS(load_sparse_dataset(path), ParseError);
    {
        std::ofstream out(path);
        out << "1 nocolon\n";
    }
    REQUIRE_THROWS_AS(load_sparse_dataset(path), ParseError);
    {
        std::ofstream out(path);
        out << "abc 1:2\n";
    }
    REQUIRE_THROWS_AS(load_sparse_dataset(path), ParseError);
    {
        std::ofstream out(path);
        out << "1 0:2\n";
    }
    REQUIRE_THROWS_AS(load_sparse_dataset(path), ParseError);
    REQUIRE_THROWS_AS(load_sparse_dataset("no_such_file_anywhere.txt"), ParseError);
    std::remove(path);
}
