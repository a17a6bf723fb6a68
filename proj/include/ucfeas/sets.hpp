#pragma once

// Union-convex target sets: affine subspaces, sparsity level sets, and
// complementarity sets (stacked layout w = (x, y) in R^{2n}).  Projections
// return one representative plus the label of the convex piece it came from;
// the brute-force oracle enumerates every piece for verification.

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace ucfeas {

// Identifies one convex piece of a union set.  Supports are 0-based sorted
// index lists; complementarity labels store, per coordinate pair, whether the
// "x side" (first block) is the active one.
struct PieceLabel {
    enum class Kind { None, Support, Sides };
    Kind kind = Kind::None;
    std::vector<std::size_t> support;   // Kind::Support, size = sparsity level
    std::vector<std::uint8_t> x_side;   // Kind::Sides, size = half-dimension

    friend bool operator==(const PieceLabel&, const PieceLabel&) = default;

    std::string str() const {
        if (kind == Kind::None) return "-";
        std::string out;
        if (kind == Kind::Support) {
            out = "{";
            for (std::size_t i = 0; i < support.size(); ++i) {
                if (i) out += ",";
                out += std::to_string(support[i]);
            }
            out += "}";
        } else {
            for (auto v : x_side) out += v ? 'x' : 'y';
        }
        return out;
    }
};

// Selection policy for multivalued projections.  LowestIndex is fully
// deterministic; Seeded carries its own generator state, so each projection
// call advances an independent stream.
struct TieBreak {
    enum class Policy { LowestIndex, Seeded };
    Policy policy = Policy::LowestIndex;
    std::mt19937_64 rng{0};

    static TieBreak lowest_index() { return TieBreak{}; }
    static TieBreak seeded(std::uint64_t seed) {
        TieBreak tb;
        tb.policy = Policy::Seeded;
        tb.rng.seed(seed);
        return tb;
    }

    // Choose one of k options.
    std::size_t pick(std::size_t k) {
        if (policy == Policy::LowestIndex || k <= 1) return 0;
        return static_cast<std::size_t>(rng() % k);
    }
};

struct AffineSet {
    DenseMatrix A;
    Vec b;
    GramFactor gram;

    static AffineSet make(DenseMatrix A, Vec b) {
        if (b.size() != A.rows) throw DimensionError("AffineSet: rhs length mismatch");
        AffineSet s;
        s.gram = gram_cholesky(A);
        s.A = std::move(A);
        s.b = std::move(b);
        return s;
    }
};

struct SparsitySet {
    std::size_t n = 0;  // ambient dimension
    std::size_t s = 0;  // sparsity level, 0 < s <= n
};

struct ComplementaritySet {
    std::size_t n = 0;  // half-dimension; ambient dimension is 2n
};

using UnionSet = std::variant<SparsitySet, ComplementaritySet>;

inline Vec project_affine(const AffineSet& set, const Vec& w) {
    if (w.size() != set.A.cols) throw DimensionError("project_affine: dimension mismatch");
    Vec r = vsub(matvec(set.A, w), set.b);
    Vec corr = apply_pinv(set.gram, set.A, r);
    return vsub(w, corr);
}

inline std::pair<Vec, PieceLabel> project_sparsity(const SparsitySet& set, const Vec& w,
                                                   TieBreak& tb) {
    if (w.size() != set.n) throw DimensionError("project_sparsity: dimension mismatch");
    const std::size_t n = set.n, s = set.s;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(w[a]), mb = std::abs(w[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    });

    std::vector<std::size_t> chosen;
    chosen.reserve(s);
    if (tb.policy == TieBreak::Policy::LowestIndex || s == 0 || s == n) {
        chosen.assign(order.begin(), order.begin() + s);
    } else {
        // Entries strictly above the boundary magnitude are forced; the
        // remaining slots are filled from the tied group at random.
        const double thr = std::abs(w[order[s - 1]]);
        std::vector<std::size_t> forced, tied;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = std::abs(w[i]);
            if (m > thr)
                forced.push_back(i);
            else if (m == thr)
                tied.push_back(i);
        }
        const std::size_t need = s - forced.size();
        // Partial Fisher-Yates over the tied group.
        for (std::size_t i = 0; i < need; ++i) {
            const std::size_t j = i + tb.pick(tied.size() - i);
            std::swap(tied[i], tied[j]);
        }
        chosen = std::move(forced);
        chosen.insert(chosen.end(), tied.begin(), tied.begin() + need);
    }
    std::sort(chosen.begin(), chosen.end());

    Vec z(n, 0.0);
    for (std::size_t i : chosen) z[i] = w[i];
    PieceLabel label;
    label.kind = PieceLabel::Kind::Support;
    label.support = std::move(chosen);
    return {std::move(z), std::move(label)};
}

inline std::pair<Vec, PieceLabel> project_complementarity(const ComplementaritySet& set,
                                                          const Vec& w, TieBreak& tb) {
    if (w.size() != 2 * set.n) throw DimensionError("project_complementarity: dimension mismatch");
    const std::size_t n = set.n;
    Vec z(2 * n, 0.0);
    PieceLabel label;
    label.kind = PieceLabel::Kind::Sides;
    label.x_side.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double a = w[j], b = w[n + j];
        bool x_side;
        if (a > b)
            x_side = true;
        else if (a < b)
            x_side = false;
        else
            x_side = (tb.pick(2) == 0);  // LowestIndex prefers the x side
        if (x_side)
            z[j] = std::max(a, 0.0);
        else
            z[n + j] = std::max(b, 0.0);
        label.x_side[j] = x_side ? 1 : 0;
    }
    return {std::move(z), std::move(label)};
}

inline Vec project_piece(const PieceLabel& label, const Vec& w) {
    if (label.kind == PieceLabel::Kind::Support) {
        Vec z(w.size(), 0.0);
        for (std::size_t i : label.support) {
            if (i >= w.size()) throw LabelError("project_piece: support index out of range");
            z[i] = w[i];
        }
        return z;
    }
    if (label.kind == PieceLabel::Kind::Sides) {
        const std::size_t n = label.x_side.size();
        if (w.size() != 2 * n) throw LabelError("project_piece: label length mismatch");
        Vec z(2 * n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (label.x_side[j])
                z[j] = std::max(w[j], 0.0);
            else
                z[n + j] = std::max(w[n + j], 0.0);
        }
        return z;
    }
    throw LabelError("project_piece: empty label");
}

inline std::pair<Vec, PieceLabel> project_union(const UnionSet& set, const Vec& w,
                                                TieBreak& tb) {
    return std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SparsitySet>)
                return project_sparsity(s, w, tb);
            else
                return project_complementarity(s, w, tb);
        },
        set);
}

inline double dist_sq(const UnionSet& set, const Vec& w) {
    TieBreak tb;  // distance does not depend on tie resolution
    auto [z, label] = project_union(set, w, tb);
    (void)label;
    return norm2_sq(vsub(w, z));
}

// Membership test with an absolute tolerance.
inline bool member(const UnionSet& set, const Vec& w, double tol = 1e-12) {
    if (const auto* sp = std::get_if<SparsitySet>(&set)) {
        if (w.size() != sp->n) return false;
        std::size_t nnz = 0;
        for (double v : w)
            if (std::abs(v) > tol) ++nnz;
        return nnz <= sp->s;
    }
    const auto& cs = std::get<ComplementaritySet>(set);
    if (w.size() != 2 * cs.n) return false;
    for (std::size_t j = 0; j < cs.n; ++j) {
        const double a = w[j], b = w[cs.n + j];
        if (a < -tol || b < -tol) return false;
        if (a > tol && b > tol) return false;
    }
    return true;
}

// Structural test for whether two set members can activate a common piece.
inline bool pieces_compatible(const UnionSet& set, const Vec& w1, const Vec& w2,
                              double tol = 1e-12) {
    if (!member(set, w1, tol) || !member(set, w2, tol))
        throw NotInSetError("pieces_compatible: argument outside the set");
    if (const auto* sp = std::get_if<SparsitySet>(&set)) {
        std::vector<bool> in_union(sp->n, false);
        std::size_t count = 0;
        for (std::size_t i = 0; i < sp->n; ++i) {
            if (std::abs(w1[i]) > tol || std::abs(w2[i]) > tol) {
                in_union[i] = true;
                ++count;
            }
        }
        return count <= sp->s;
    }
    const auto& cs = std::get<ComplementaritySet>(set);
    for (std::size_t j = 0; j < cs.n; ++j) {
        // allowed side: x if the x-entry is positive, y if the y-entry is
        // positive, both when the pair is zero.
        const bool w1x = w1[j] > tol, w1y = w1[cs.n + j] > tol;
        const bool w2x = w2[j] > tol, w2y = w2[cs.n + j] > tol;
        const bool can_x = !w1y && !w2y;
        const bool can_y = !w1x && !w2x;
        if (!can_x && !can_y) return false;
    }
    return true;
}

struct UnionProjection {
    std::vector<Vec> minimizers;
    double dist_sq = 0.0;
};

namespace detail {

inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
    const std::size_t k = c.size();
    for (std::size_t i = k; i-- > 0;) {
        if (c[i] < n - k + i) {
            ++c[i];
            for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

inline void oracle_consider(UnionProjection& out, const Vec& w, const Vec& z) {
    const double d = norm2_sq(vsub(w, z));
    if (out.minimizers.empty() || d < out.dist_sq - 1e-12) {
        out.minimizers.clear();
        out.dist_sq = d;
        out.minimizers.push_back(z);
        return;
    }
    if (d <= out.dist_sq + 1e-12) {
        out.dist_sq = std::min(out.dist_sq, d);
        for (const Vec& m : out.minimizers) {
            bool same = true;
            for (std::size_t i = 0; i < z.size() && same; ++i)
                if (std::abs(m[i] - z[i]) > 1e-12) same = false;
            if (same) return;
        }
        out.minimizers.push_back(z);
    }
}

}  // namespace detail

// Brute force over every convex piece.  Small dimensions only.
inline UnionProjection oracle_project_union(const UnionSet& set, const Vec& w) {
    UnionProjection out;
    if (const auto* sp = std::get_if<SparsitySet>(&set)) {
        if (sp->n > 12) throw TooLargeError("oracle_project_union: sparsity cap n = 12");
        if (w.size() != sp->n) throw DimensionError("oracle_project_union: dimension mismatch");
        std::vector<std::size_t> comb(sp->s);
        for (std::size_t i = 0; i < sp->s; ++i) comb[i] = i;
        do {
            PieceLabel label;
            label.kind = PieceLabel::Kind::Support;
            label.support = comb;
            detail::oracle_consider(out, w, project_piece(label, w));
        } while (detail::next_combination(comb, sp->n));
        return out;
    }
    const auto& cs = std::get<ComplementaritySet>(set);
    if (cs.n > 10) throw TooLargeError("oracle_project_union: complementarity cap n = 10");
    if (w.size() != 2 * cs.n) throw DimensionError("oracle_project_union: dimension mismatch");
    for (std::uint32_t mask = 0; mask < (1u << cs.n); ++mask) {
        PieceLabel label;
        label.kind = PieceLabel::Kind::Sides;
        label.x_side.resize(cs.n);
        for (std::size_t j = 0; j < cs.n; ++j) label.x_side[j] = (mask >> j) & 1u;
        detail::oracle_consider(out, w, project_piece(label, w));
    }
    return out;
}

}  // namespace ucfeas
