#pragma once

// Experiment instances: sparse affine feasibility and linear complementarity.
// Generators follow fixed per-seed stream layouts (see each function); the
// oracles here (nu estimate, brute-force LCP enumeration) back the test
// suites and the verification harness.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "sets.hpp"

namespace ucfeas {

struct SafpInstance {
    DenseMatrix A;
    Vec b;
    std::size_t s = 0;
    std::optional<Vec> ground_truth;
};

struct LcpInstance {
    DenseMatrix M;
    Vec b;
    std::optional<bool> p_matrix;      // filled by classify_lcp
    std::optional<bool> nondegenerate;

    // Stacked feasibility form [M, -I] w = b, w = (x, y); full row rank for
    // any M because of the identity block.
    DenseMatrix stacked() const {
        DenseMatrix A(M.rows, 2 * M.cols);
        for (std::size_t i = 0; i < M.rows; ++i) {
            for (std::size_t j = 0; j < M.cols; ++j) A.at(i, j) = M.at(i, j);
            A.at(i, M.cols + i) = -1.0;
        }
        return A;
    }
};

// Streams: 0 matrix entries (row-major), 1 support choice, 2 signs,
// 3 magnitude exponents.  Signal entries are eta1 * 10^(5 eta2), so the
// nonzero magnitudes span [1, 1e5].
inline SafpInstance gen_safp(std::size_t n, std::size_t m, std::size_t s,
                             std::uint64_t seed) {
    if (s == 0 || s > n || m == 0 || m > n)
        throw DimensionError("gen_safp: require 0 < s <= n and 0 < m <= n");
    SafpInstance inst;
    inst.s = s;
    inst.A = DenseMatrix(m, n);
    Rng ra = Rng::stream(seed, 0);
    for (auto& v : inst.A.data) v = ra.normal();

    Rng rs = Rng::stream(seed, 1);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = i + rs.below(n - i);
        std::swap(idx[i], idx[j]);
    }

    Rng rsign = Rng::stream(seed, 2);
    Rng rmag = Rng::stream(seed, 3);
    Vec w(n, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
        const double eta1 = rsign.coin() ? 1.0 : -1.0;
        const double eta2 = rmag.uniform01();
        w[idx[i]] = eta1 * std::pow(10.0, 5.0 * eta2);
    }
    inst.b = matvec(inst.A, w);
    inst.ground_truth = std::move(w);
    return inst;
}

// Tridiagonal stiffness-like matrix, all-ones right-hand side.
inline LcpInstance gen_lcp1(std::size_t n) {
    LcpInstance inst;
    inst.M = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        inst.M.at(i, i) = 4.0;
        if (i + 1 < n) {
            inst.M.at(i, i + 1) = -1.0;
            inst.M.at(i + 1, i) = -1.0;
        }
    }
    inst.b = Vec(n, 1.0);
    return inst;
}

// Unit upper triangular with 2s above the diagonal, all-ones right-hand side.
inline LcpInstance gen_lcp2(std::size_t n) {
    LcpInstance inst;
    inst.M = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        inst.M.at(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) inst.M.at(i, j) = 2.0;
    }
    inst.b = Vec(n, 1.0);
    return inst;
}

// M = A1^T A1 + A2 + diag(eta) with A2 skew-symmetric: positive definite
// symmetric part, hence a P-matrix.  Streams: 0 A1 (row-major), 1 A2 strict
// upper triangle (row-major), 2 diagonal shifts, 3 right-hand side.
inline LcpInstance gen_lcp3(std::size_t n, std::uint64_t seed) {
    LcpInstance inst;
    Rng r1 = Rng::stream(seed, 0);
    DenseMatrix A1(n, n);
    for (auto& v : A1.data) v = r1.uniform(-5.0, 5.0);

    Rng r2 = Rng::stream(seed, 1);
    DenseMatrix A2(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = r2.uniform(-5.0, 5.0);
            A2.at(i, j) = v;
            A2.at(j, i) = -v;
        }

    Rng reta = Rng::stream(seed, 2);
    inst.M = matmul(transpose(A1), A1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inst.M.at(i, j) += A2.at(i, j);
    for (std::size_t i = 0; i < n; ++i) inst.M.at(i, i) += reta.uniform(0.0, 0.3);

    Rng rb = Rng::stream(seed, 3);
    inst.b = Vec(n);
    for (auto& v : inst.b) v = rb.uniform(-500.0, 500.0);
    return inst;
}

// Scale M and b by sqrt(n)/|||M|||_1 (max absolute column sum); the solution
// set in x is unchanged.
inline LcpInstance normalize_lcp(const LcpInstance& inst) {
    const double nrm = norm1_induced(inst.M);
    if (nrm == 0.0) throw DimensionError("normalize_lcp: zero matrix");
    const double scale = std::sqrt(static_cast<double>(inst.M.rows)) / nrm;
    LcpInstance out;
    out.M = inst.M;
    for (auto& v : out.M.data) v *= scale;
    out.b = inst.b;
    for (auto& v : out.b) v *= scale;
    out.p_matrix = inst.p_matrix;
    out.nondegenerate = inst.nondegenerate;
    return out;
}

// Fill the class tags by exhaustive principal-minor checks (n <= 20).
inline void classify_lcp(LcpInstance& inst) {
    inst.p_matrix = is_p_matrix(inst.M);
    inst.nondegenerate = is_nondegenerate(inst.M);
}

// Companion matrix of the generalized absolute value equation Ax + B|x| = c:
// M = (A^T + B^T)(A^T - B^T)^{-1}.
inline DenseMatrix gave_to_lcp_matrix(const DenseMatrix& A, const DenseMatrix& B) {
    if (A.rows != A.cols || B.rows != B.cols || A.rows != B.rows)
        throw DimensionError("gave_to_lcp_matrix: square matrices of equal size required");
    const std::size_t n = A.rows;
    DenseMatrix D(n, n);  // A^T - B^T
    DenseMatrix S(n, n);  // A^T + B^T
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            D.at(i, j) = A.at(j, i) - B.at(j, i);
            S.at(i, j) = A.at(j, i) + B.at(j, i);
        }
    Vec sv = sym_eigenvalues(matmul(transpose(D), D));
    const double smin = std::sqrt(std::max(sv.front(), 0.0));
    const double smax = std::sqrt(std::max(sv.back(), 0.0));
    if (smin <= 1e-12 * std::max(smax, 1e-300))
        throw SingularDifferenceError("gave_to_lcp_matrix: A^T - B^T is singular");
    auto lu = lu_factor(D);
    if (!lu) throw SingularDifferenceError("gave_to_lcp_matrix: A^T - B^T is singular");
    // Columns of M solve D m_j = s_j.
    DenseMatrix M(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vec col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = S.at(i, j);
        Vec mj = lu->solve(col);
        for (std::size_t i = 0; i < n; ++i) M.at(i, j) = mj[i];
    }
    return M;
}

struct NuEstimate {
    double value = 0.0;
    bool exact = true;
};

// Smallest restricted eigenvalue over s-sparse supports: exact enumeration up
// to n = 20, sampled lower bound beyond (flagged approximate).
inline NuEstimate estimate_nu_s(const DenseMatrix& A, std::size_t s,
                                bool require_exact = false) {
    const std::size_t n = A.cols;
    if (s == 0 || s > n) throw DimensionError("estimate_nu_s: bad sparsity level");
    auto min_eig_for = [&](const std::vector<std::size_t>& cols) {
        DenseMatrix G(cols.size(), cols.size());
        for (std::size_t a = 0; a < cols.size(); ++a)
            for (std::size_t c = 0; c < cols.size(); ++c) {
                double acc = 0.0;
                for (std::size_t r = 0; r < A.rows; ++r)
                    acc += A.at(r, cols[a]) * A.at(r, cols[c]);
                G.at(a, c) = acc;
            }
        return sym_eig_min(G);
    };
    if (n <= 20) {
        std::vector<std::size_t> comb(s);
        for (std::size_t i = 0; i < s; ++i) comb[i] = i;
        double best = std::numeric_limits<double>::infinity();
        while (true) {
            best = std::min(best, min_eig_for(comb));
            if (!detail::next_combination(comb, n)) break;
        }
        return {best, true};
    }
    if (require_exact) throw TooLargeError("estimate_nu_s: exact mode capped at n = 20");
    Rng rng = Rng::stream(0xA5u, n);
    double best = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::vector<std::size_t> comb(s);
        for (std::size_t i = 0; i < s; ++i) {
            const std::size_t j = i + rng.below(n - i);
            std::swap(idx[i], idx[j]);
            comb[i] = idx[i];
        }
        best = std::min(best, min_eig_for(comb));
    }
    return {best, false};
}

// Enumerate all complementary bases; keep the ones with a nonnegative basic
// solution.  Returns stacked w = (x, y) vectors, lexicographically sorted.
inline std::vector<Vec> lcp_bruteforce_solve(const DenseMatrix& M, const Vec& b) {
    const std::size_t n = M.rows;
    if (M.cols != n || b.size() != n)
        throw DimensionError("lcp_bruteforce_solve: square system required");
    if (n > 12) throw TooLargeError("lcp_bruteforce_solve: capped at n = 12");
    std::vector<Vec> out;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        // Bit j set: x_j basic (column j of M); clear: y_j basic (column -e_j).
        DenseMatrix S(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            if (mask & (1ULL << j))
                for (std::size_t i = 0; i < n; ++i) S.at(i, j) = M.at(i, j);
            else
                S.at(j, j) = -1.0;
        }
        auto lu = lu_factor(S);
        if (!lu) continue;
        Vec u = lu->solve(b);
        bool ok = true;
        for (double v : u) ok = ok && v >= -1e-10;
        if (!ok) continue;
        Vec w(2 * n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (mask & (1ULL << j))
                w[j] = u[j];
            else
                w[n + j] = u[j];
        }
        bool dup = false;
        for (const auto& seen : out) {
            double d = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                d = std::max(d, std::abs(seen[i] - w[i]));
            dup = dup || d <= 1e-8;
        }
        if (!dup) out.push_back(std::move(w));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline double residual_safp(const DenseMatrix& A, const Vec& b, const SparsitySet& set,
                            const Vec& w) {
    UnionSet u = set;
    return 0.5 * norm2_sq(vsub(matvec(A, w), b)) + 0.5 * dist_sq(u, w);
}

inline double residual_lcp(const DenseMatrix& M, const Vec& b, const Vec& x) {
    Vec r = vsub(matvec(M, x), b);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = std::min(x[i], r[i]);
        acc += m * m;
    }
    return std::sqrt(acc);
}

// Text format: one sample per line, "label idx:val idx:val ...", feature
// indices 1-based.  The label is parsed and discarded.
inline SparseMatrix load_sparse_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_sparse_dataset: cannot open " + path);
    SparseMatrix out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank line
        try {
            (void)std::stod(tok);
        } catch (const std::exception&) {
            throw ParseError("load_sparse_dataset: bad label at line " +
                             std::to_string(lineno));
        }
        const std::size_t row = out.rows;
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw ParseError("load_sparse_dataset: missing ':' at line " +
                                 std::to_string(lineno));
            std::size_t idx = 0;
            double val = 0.0;
            try {
                idx = static_cast<std::size_t>(std::stoull(tok.substr(0, colon)));
                val = std::stod(tok.substr(colon + 1));
            } catch (const std::exception&) {
                throw ParseError("load_sparse_dataset: bad entry at line " +
                                 std::to_string(lineno));
            }
            if (idx == 0)
                throw ParseError("load_sparse_dataset: indices are 1-based, line " +
                                 std::to_string(lineno));
            out.entries.push_back({row, idx - 1, val});
            out.cols = std::max(out.cols, idx);
        }
        out.rows = row + 1;
    }
    if (out.rows == 0) throw ParseError("load_sparse_dataset: empty file " + path);
    std::sort(out.entries.begin(), out.entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    return out;
}

}  // namespace ucfeas
