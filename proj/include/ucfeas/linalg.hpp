#pragma once

// Dense/sparse matrix kernels used across the library.  Everything is
// deliberately dependency-free: problem sizes are desk scale (n in the
// hundreds), so hand-rolled O(n^3) routines are plenty.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"

namespace ucfeas {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_sq(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(norm2_sq(a)); }

inline double norm_inf(const Vec& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(const Vec& x, double alpha) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
    return y;
}

inline Vec vsub(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("vsub: length mismatch");
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

inline Vec vadd(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("vadd: length mismatch");
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

// Row-major dense matrix.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows*cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

inline Vec matvec(const DenseMatrix& A, const Vec& x) {
    if (x.size() != A.cols) throw DimensionError("matvec: shape mismatch");
    Vec y(A.rows, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* row = A.data.data() + i * A.cols;
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

// A^T x
inline Vec tmatvec(const DenseMatrix& A, const Vec& x) {
    if (x.size() != A.rows) throw DimensionError("tmatvec: shape mismatch");
    Vec y(A.cols, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* row = A.data.data() + i * A.cols;
        const double xi = x[i];
        for (std::size_t j = 0; j < A.cols; ++j) y[j] += row[j] * xi;
    }
    return y;
}

inline DenseMatrix transpose(const DenseMatrix& A) {
    DenseMatrix T(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) T.at(j, i) = A.at(i, j);
    return T;
}

inline DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
    if (A.cols != B.rows) throw DimensionError("matmul: shape mismatch");
    DenseMatrix C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double aik = A.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < B.cols; ++j)
                C.at(i, j) += aik * B.at(k, j);
        }
    return C;
}

// Induced 1-norm: max absolute column sum.
inline double norm1_induced(const DenseMatrix& A) {
    double best = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < A.rows; ++i) s += std::abs(A.at(i, j));
        best = std::max(best, s);
    }
    return best;
}

// Coordinate-format sparse matrix.  Row/col indices are 0-based internally;
// the text loader (see problems.hpp) converts from the 1-based on-disk form.
struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
    friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Triplet> entries;  // sorted by (row, col), no duplicates

    DenseMatrix to_dense() const {
        DenseMatrix D(rows, cols);
        for (const auto& t : entries) D.at(t.row, t.col) += t.value;
        return D;
    }
};

inline Vec matvec(const SparseMatrix& A, const Vec& x) {
    if (x.size() != A.cols) throw DimensionError("matvec: shape mismatch");
    Vec y(A.rows, 0.0);
    for (const auto& t : A.entries) y[t.row] += t.value * x[t.col];
    return y;
}

// ---------------------------------------------------------------------------
// Cholesky of A A^T (the Gram matrix of the rows of A).

struct GramFactor {
    std::size_t m = 0;          // order of the factor = rows of A
    DenseMatrix lower;          // L with A A^T = L L^T

    // Solve (A A^T) x = y by forward/backward substitution.
    Vec solve(const Vec& y) const {
        if (y.size() != m) throw DimensionError("GramFactor::solve: length mismatch");
        Vec z(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double s = y[i];
            for (std::size_t j = 0; j < i; ++j) s -= lower.at(i, j) * z[j];
            z[i] = s / lower.at(i, i);
        }
        Vec x(m, 0.0);
        for (std::size_t ii = m; ii-- > 0;) {
            double s = z[ii];
            for (std::size_t j = ii + 1; j < m; ++j) s -= lower.at(j, ii) * x[j];
            x[ii] = s / lower.at(ii, ii);
        }
        return x;
    }
};

// Cholesky of a symmetric positive definite matrix supplied explicitly.
// Pivot guard: fail once a pivot drops below rel_tol times the largest
// original diagonal entry.
inline DenseMatrix cholesky_lower(const DenseMatrix& G, double rel_tol = 1e-12) {
    if (G.rows != G.cols) throw DimensionError("cholesky_lower: not square");
    const std::size_t n = G.rows;
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(G.at(i, i)));
    const double floor_piv = rel_tol * std::max(max_diag, 1e-300);
    DenseMatrix L(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = G.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
            if (i == j) {
                if (s <= floor_piv)
                    throw RankDeficientError("cholesky: pivot below tolerance");
                L.at(i, i) = std::sqrt(s);
            } else {
                L.at(i, j) = s / L.at(j, j);
            }
        }
    }
    return L;
}

inline GramFactor gram_cholesky(const DenseMatrix& A) {
    const std::size_t m = A.rows;
    DenseMatrix G(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            const double* ri = A.data.data() + i * A.cols;
            const double* rj = A.data.data() + j * A.cols;
            for (std::size_t k = 0; k < A.cols; ++k) s += ri[k] * rj[k];
            G.at(i, j) = s;
            G.at(j, i) = s;
        }
    }
    GramFactor F;
    F.m = m;
    F.lower = cholesky_lower(G, 1e-12);
    return F;
}

// A^+ y = A^T (A A^T)^{-1} y for full-row-rank A.
inline Vec apply_pinv(const GramFactor& F, const DenseMatrix& A, const Vec& y) {
    if (F.m != A.rows) throw DimensionError("apply_pinv: factor/matrix mismatch");
    return tmatvec(A, F.solve(y));
}

// ---------------------------------------------------------------------------
// Spectral norm via power iteration on A^T A.  Deterministic all-ones start;
// relative Rayleigh-quotient stagnation test.
inline double operator_norm(const DenseMatrix& A, double tol = 1e-10,
                            std::size_t max_iters = 10000) {
    if (A.rows == 0 || A.cols == 0) return 0.0;
    // Tilted start: an equal-weight vector can be exactly orthogonal to the
    // dominant eigenvector (e.g. one-row matrices with entries summing to 0).
    Vec v(A.cols);
    for (std::size_t i = 0; i < A.cols; ++i)
        v[i] = 1.0 + static_cast<double>(i + 1) / static_cast<double>(A.cols + 3);
    const double nv = norm2(v);
    for (auto& x : v) x /= nv;
    std::size_t basis_next = 0;  // fallback starts if v lands in the null space
    double lam_prev = -1.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        Vec u = matvec(A, v);
        Vec w = tmatvec(A, u);
        const double lam = dot(v, w);  // = ||A v||^2
        const double nw = norm2(w);
        if (nw == 0.0) {
            if (basis_next == A.cols) return 0.0;  // annihilates every basis vector
            std::fill(v.begin(), v.end(), 0.0);
            v[basis_next++] = 1.0;
            lam_prev = -1.0;
            continue;
        }
        for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / nw;
        if (lam_prev >= 0.0 && std::abs(lam - lam_prev) <= tol * std::max(lam, 1e-300))
            return std::sqrt(lam);
        lam_prev = lam;
    }
    throw NoConvergenceError("operator_norm: power iteration stalled");
}

// ---------------------------------------------------------------------------
// Conjugate gradients for SPD operators given as a callback.
// max_iters == 0 means "use the problem dimension".
template <class Apply>
Vec conjugate_gradient(Apply&& apply, const Vec& rhs, double tol = 1e-12,
                       std::size_t max_iters = 0) {
    const std::size_t n = rhs.size();
    if (max_iters == 0) max_iters = n;
    Vec x(n, 0.0);
    const double nb = norm2(rhs);
    if (nb == 0.0) return x;
    Vec r = rhs;  // b - A*0
    Vec p = r;
    double rr = dot(r, r);
    for (std::size_t it = 0; it < max_iters; ++it) {
        Vec Ap = apply(p);
        const double pAp = dot(p, Ap);
        if (pAp <= 0.0) throw NoConvergenceError("conjugate_gradient: operator not positive definite");
        const double alpha = rr / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        const double rr_new = dot(r, r);
        if (std::sqrt(rr_new) <= tol * nb) return x;
        const double beta = rr_new / rr;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_new;
    }
    if (norm2(r) <= tol * nb) return x;
    throw NoConvergenceError("conjugate_gradient: iteration budget exhausted");
}

// ---------------------------------------------------------------------------
// LU with partial pivoting; used for square solves and determinants.

struct LuFactor {
    std::size_t n = 0;
    DenseMatrix lu;             // packed L (unit diag) and U
    std::vector<std::size_t> perm;
    int sign = 1;

    double det() const {
        double d = sign;
        for (std::size_t i = 0; i < n; ++i) d *= lu.at(i, i);
        return d;
    }

    Vec solve(const Vec& b) const {
        if (b.size() != n) throw DimensionError("LuFactor::solve: length mismatch");
        Vec y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[perm[i]];
            for (std::size_t j = 0; j < i; ++j) s -= lu.at(i, j) * y[j];
            y[i] = s;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t j = ii + 1; j < n; ++j) s -= lu.at(ii, j) * y[j];
            y[ii] = s / lu.at(ii, ii);
        }
        return y;
    }
};

// Returns nullopt when a pivot falls below rel_tol times the largest original
// entry magnitude (numerically singular).
inline std::optional<LuFactor> lu_factor(const DenseMatrix& M, double rel_tol = 1e-13) {
    if (M.rows != M.cols) throw DimensionError("lu_factor: not square");
    const std::size_t n = M.rows;
    LuFactor F;
    F.n = n;
    F.lu = M;
    F.perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) F.perm[i] = i;
    double scale = 0.0;
    for (double v : M.data) scale = std::max(scale, std::abs(v));
    const double floor_piv = rel_tol * std::max(scale, 1e-300);
    DenseMatrix& A = F.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(A.at(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(A.at(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best <= floor_piv) return std::nullopt;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A.at(piv, j), A.at(k, j));
            std::swap(F.perm[piv], F.perm[k]);
            F.sign = -F.sign;
        }
        const double d = A.at(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double l = A.at(i, k) / d;
            A.at(i, k) = l;
            if (l == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) A.at(i, j) -= l * A.at(k, j);
        }
    }
    return F;
}

inline Vec lu_solve(const DenseMatrix& M, const Vec& b, double rel_tol = 1e-13) {
    auto F = lu_factor(M, rel_tol);
    if (!F) throw RankDeficientError("lu_solve: matrix numerically singular");
    return F->solve(b);
}

// ---------------------------------------------------------------------------
// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.  Small-n
// oracle quality: deterministic, all eigenvalues, sorted ascending.
inline Vec sym_eigenvalues(const DenseMatrix& S) {
    if (S.rows != S.cols) throw DimensionError("sym_eigenvalues: not square");
    const std::size_t n = S.rows;
    DenseMatrix A = S;
    double fro = 0.0;
    for (double v : A.data) fro += v * v;
    fro = std::sqrt(fro);
    const double stop = 1e-14 * std::max(fro, 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * A.at(p, q) * A.at(p, q);
        if (std::sqrt(off) <= stop) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A.at(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double app = A.at(p, p);
                const double aqq = A.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A.at(k, p);
                    const double akq = A.at(k, q);
                    A.at(k, p) = c * akp - s * akq;
                    A.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A.at(p, k);
                    const double aqk = A.at(q, k);
                    A.at(p, k) = c * apk - s * aqk;
                    A.at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = A.at(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline double sym_eig_min(const DenseMatrix& S) {
    Vec ev = sym_eigenvalues(S);
    return ev.empty() ? 0.0 : ev.front();
}

// ---------------------------------------------------------------------------
// Principal-minor classifiers.  Exhaustive over all 2^n - 1 principal
// submatrices; oracle use only, hence the hard size cap.

namespace detail {

// Determinant of the principal submatrix indexed by the set bits of mask,
// together with a magnitude scale (product of row sup-norms) for the
// relative zero test.
inline void principal_minor(const DenseMatrix& M, unsigned mask, double& det_out,
                            double& scale_out) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < M.rows; ++i)
        if (mask & (1u << i)) idx.push_back(i);
    const std::size_t k = idx.size();
    DenseMatrix B(k, k);
    double scale = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        double rmax = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double v = M.at(idx[i], idx[j]);
            B.at(i, j) = v;
            rmax = std::max(rmax, std::abs(v));
        }
        scale *= rmax;
    }
    scale_out = scale;
    if (scale == 0.0) {
        det_out = 0.0;  // a zero row forces a zero determinant
        return;
    }
    auto F = lu_factor(B, 0.0);
    det_out = F ? F->det() : 0.0;
}

}  // namespace detail

// All principal minors strictly positive (tolerance relative to minor scale).
inline bool is_p_matrix(const DenseMatrix& M, double rel_tol = 1e-12) {
    if (M.rows != M.cols) throw DimensionError("is_p_matrix: not square");
    const std::size_t n = M.rows;
    if (n > 20) throw TooLargeError("is_p_matrix: exhaustive check capped at n = 20");
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        double det = 0.0, scale = 0.0;
        detail::principal_minor(M, mask, det, scale);
        if (det <= rel_tol * scale) return false;
    }
    return true;
}

// All principal minors nonzero.
inline bool is_nondegenerate(const DenseMatrix& M, double rel_tol = 1e-12) {
    if (M.rows != M.cols) throw DimensionError("is_nondegenerate: not square");
    const std::size_t n = M.rows;
    if (n > 20) throw TooLargeError("is_nondegenerate: exhaustive check capped at n = 20");
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        double det = 0.0, scale = 0.0;
        detail::principal_minor(M, mask, det, scale);
        if (std::abs(det) <= rel_tol * scale) return false;
    }
    return true;
}

}  // namespace ucfeas
