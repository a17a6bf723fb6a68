#pragma once

// Concrete operators for the affine-plus-union-convex feasibility model
// min f_Q(w) + g(w), with f_Q(w) = 1/2 (Aw-b)^T Q (Aw-b) and g encoding the
// union target set either as 1/2 dist^2 (SumOfSquares) or as an indicator
// (Constrained).  Includes the extrapolated variant with its activity gate,
// component identification, and the baseline methods used for comparisons.

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>

#include "errors.hpp"
#include "fpi.hpp"
#include "linalg.hpp"
#include "sets.hpp"

namespace ucfeas {

enum class QChoice { Identity, GramInverse };
enum class Reformulation { SumOfSquares, Constrained };
enum class BaseAlgorithm { PDMC, FB, PS };

inline const char* to_string(QChoice q) {
    return q == QChoice::Identity ? "identity" : "gram_inverse";
}

struct QuadraticModel {
    DenseMatrix A;
    Vec b;
    QChoice q = QChoice::GramInverse;
    std::optional<GramFactor> gram;  // present iff q == GramInverse
    double L = 1.0;                  // Lipschitz constant of grad f_Q

    static QuadraticModel make(DenseMatrix A, Vec b, QChoice q) {
        if (b.size() != A.rows) throw DimensionError("QuadraticModel: rhs length mismatch");
        QuadraticModel m;
        m.q = q;
        if (q == QChoice::GramInverse) {
            m.gram = gram_cholesky(A);
            m.L = 1.0;
        } else {
            const double nrm = operator_norm(A);
            m.L = nrm * nrm;
        }
        m.A = std::move(A);
        m.b = std::move(b);
        return m;
    }

    Vec apply_Q(const Vec& r) const {
        if (q == QChoice::Identity) return r;
        return gram->solve(r);
    }
};

inline double f_Q(const QuadraticModel& m, const Vec& w) {
    Vec r = vsub(matvec(m.A, w), m.b);
    return 0.5 * dot(r, m.apply_Q(r));
}

inline Vec grad_f_Q(const QuadraticModel& m, const Vec& w) {
    Vec r = vsub(matvec(m.A, w), m.b);
    return tmatvec(m.A, m.apply_Q(r));
}

// Projection onto {w : Aw = b}; requires the Gram factor.
inline Vec project_affine(const QuadraticModel& m, const Vec& w) {
    if (!m.gram) throw ConfigError("project_affine: model carries no Gram factor");
    Vec r = vsub(matvec(m.A, w), m.b);
    return vsub(w, tmatvec(m.A, m.gram->solve(r)));
}

namespace detail {

inline void check_stepsize(double lambda, double L, bool allow_full) {
    if (!(lambda > 0.0)) throw StepsizeError("stepsize must be positive");
    const double cap = 1.0 / L;
    if (allow_full ? lambda > cap : lambda >= cap)
        throw StepsizeError("stepsize exceeds the admissible range");
}

}  // namespace detail

// (1/(1+lambda)) (w - lambda grad f_Q(w) + lambda P_{S2}(w))
inline std::pair<Vec, PieceLabel> step_pdmc(const QuadraticModel& m, const UnionSet& set,
                                            double lambda, const Vec& w, TieBreak& tb) {
    detail::check_stepsize(lambda, m.L, /*allow_full=*/true);
    Vec g = grad_f_Q(m, w);
    auto [p2, label] = project_union(set, w, tb);
    Vec out(w.size());
    const double inv = 1.0 / (1.0 + lambda);
    for (std::size_t i = 0; i < w.size(); ++i)
        out[i] = inv * (w[i] - lambda * g[i] + lambda * p2[i]);
    return {std::move(out), std::move(label)};
}

// y = w - lambda grad f_Q(w); (lambda/(1+lambda)) P_{S2}(y) + (1/(1+lambda)) y
inline std::pair<Vec, PieceLabel> step_fb(const QuadraticModel& m, const UnionSet& set,
                                          double lambda, const Vec& w, TieBreak& tb) {
    detail::check_stepsize(lambda, m.L, /*allow_full=*/false);
    Vec g = grad_f_Q(m, w);
    Vec y = w;
    axpy(-lambda, g, y);
    auto [p2, label] = project_union(set, y, tb);
    Vec out(w.size());
    const double inv = 1.0 / (1.0 + lambda);
    for (std::size_t i = 0; i < w.size(); ++i)
        out[i] = inv * (lambda * p2[i] + y[i]);
    return {std::move(out), std::move(label)};
}

// P_{S2}(w - lambda grad f_Q(w)).  lambda = 1/L_Q is admissible; its Lyapunov
// guarantee holds only in the P-matrix regime, which the config layer polices.
inline std::pair<Vec, PieceLabel> step_ps(const QuadraticModel& m, const UnionSet& set,
                                          double lambda, const Vec& w, TieBreak& tb) {
    detail::check_stepsize(lambda, m.L, /*allow_full=*/true);
    Vec g = grad_f_Q(m, w);
    Vec y = w;
    axpy(-lambda, g, y);
    return project_union(set, y, tb);
}

inline double lyapunov_value(const QuadraticModel& m, const UnionSet& set,
                             Reformulation reform, const Vec& w) {
    if (reform == Reformulation::SumOfSquares)
        return f_Q(m, w) + 0.5 * dist_sq(set, w);
    if (!member(set, w, 1e-12)) return std::numeric_limits<double>::infinity();
    return f_Q(m, w);
}

// Closed-form extrapolation stepsize along a piece-compatible direction:
// t1 = -2 grad^T p / ((Ap)^T Q (Ap) + sigma ||p||^2), capped for the
// complementarity case by the largest t keeping w + t p nonnegative.
inline double closed_form_t(const QuadraticModel& m, const UnionSet& set, const Vec& w,
                            const Vec& p, double sigma) {
    const double psq = norm2_sq(p);
    if (psq == 0.0) return 0.0;
    const double slope = dot(grad_f_Q(m, w), p);
    if (slope >= 0.0) return 0.0;
    Vec Ap = matvec(m.A, p);
    const double curv = dot(Ap, m.apply_Q(Ap));
    double t = -2.0 * slope / (curv + sigma * psq);
    if (std::holds_alternative<ComplementaritySet>(set)) {
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p[i] < 0.0) t = std::min(t, -w[i] / p[i]);
    }
    return std::max(0.0, t);
}

namespace detail {

// Activity gate: can consecutive iterates share a piece?  Constrained
// iterates live in the set, so the structural test applies directly; for
// SumOfSquares iterates the gate compares their nearest-piece
// representatives.
inline bool gate_compatible(const UnionSet& set, Reformulation reform, const Vec& w,
                            const Vec& w_prev) {
    if (reform == Reformulation::Constrained) return pieces_compatible(set, w, w_prev);
    TieBreak local;
    Vec pw = project_union(set, w, local).first;
    Vec pv = project_union(set, w_prev, local).first;
    return pieces_compatible(set, pw, pv);
}

}  // namespace detail

struct AccelPlan {
    double t = 0.0;
    Vec p;
};

// Momentum proposal for one iteration: zero when the gate closes, otherwise
// the closed-form t (Constrained) or a backtracked t (SumOfSquares).
inline AccelPlan plan_extrapolation(const QuadraticModel& m, const UnionSet& set,
                                    Reformulation reform, double sigma, const Vec& w,
                                    const Vec& w_prev) {
    AccelPlan plan;
    plan.p = vsub(w, w_prev);
    if (norm2_sq(plan.p) == 0.0) return plan;
    if (!detail::gate_compatible(set, reform, w, w_prev)) return plan;
    if (reform == Reformulation::Constrained) {
        plan.t = closed_form_t(m, set, w, plan.p, sigma);
    } else {
        auto lyap = [&](const Vec& z) { return lyapunov_value(m, set, reform, z); };
        plan.t = backtrack_t(lyap, w, plan.p, sigma);
    }
    return plan;
}

struct AccelStepResult {
    Vec point;
    PieceLabel label;
    double t = 0.0;
};

// One extrapolated step: gate, stepsize, z = w + t p, then the base step.
inline AccelStepResult step_accelerated(const QuadraticModel& m, const UnionSet& set,
                                        Reformulation reform, double lambda, double sigma,
                                        const Vec& w, const Vec& w_prev, TieBreak& tb) {
    AccelPlan plan = plan_extrapolation(m, set, reform, sigma, w, w_prev);
    Vec z = w;
    if (plan.t > 0.0) axpy(plan.t, plan.p, z);
    auto [next, label] = (reform == Reformulation::Constrained)
                             ? step_ps(m, set, lambda, z, tb)
                             : step_pdmc(m, set, lambda, z, tb);
    return {std::move(next), std::move(label), plan.t};
}

// The active piece of a set member, completed to a full label: supports are
// padded with free coordinates, zero pairs default to the x side (or a
// seeded coin).
inline PieceLabel active_piece_label(const UnionSet& set, const Vec& w, TieBreak& tb) {
    PieceLabel label;
    if (const auto* sp = std::get_if<SparsitySet>(&set)) {
        label.kind = PieceLabel::Kind::Support;
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < sp->n; ++i) {
            if (w[i] != 0.0)
                label.support.push_back(i);
            else
                free.push_back(i);
        }
        if (label.support.size() > sp->s)
            throw NotInSetError("active_piece_label: point is not s-sparse");
        while (label.support.size() < sp->s) {
            const std::size_t j = tb.pick(free.size());
            label.support.push_back(free[j]);
            free.erase(free.begin() + static_cast<std::ptrdiff_t>(j));
        }
        std::sort(label.support.begin(), label.support.end());
    } else {
        const auto& cs = std::get<ComplementaritySet>(set);
        label.kind = PieceLabel::Kind::Sides;
        label.x_side.resize(cs.n);
        for (std::size_t j = 0; j < cs.n; ++j) {
            if (w[j] > 0.0)
                label.x_side[j] = 1;
            else if (w[cs.n + j] > 0.0)
                label.x_side[j] = 0;
            else
                label.x_side[j] = (tb.pick(2) == 0) ? 1 : 0;
        }
    }
    return label;
}

// Restricted normal-equations solve on the active piece: find u minimizing
// ||A_cols u - b||, embed, and project back onto the piece.  Returns nullopt
// when CG fails to converge (caller falls back to an ordinary step).
inline std::optional<std::pair<Vec, PieceLabel>> component_identification_solve(
    const QuadraticModel& m, const UnionSet& set, const Vec& w, TieBreak& tb) {
    PieceLabel label = active_piece_label(set, w, tb);
    std::vector<std::size_t> cols;
    if (label.kind == PieceLabel::Kind::Support) {
        cols = label.support;
    } else {
        const std::size_t n = label.x_side.size();
        for (std::size_t j = 0; j < n; ++j)
            cols.push_back(label.x_side[j] ? j : n + j);
    }
    DenseMatrix Ar(m.A.rows, cols.size());
    for (std::size_t i = 0; i < m.A.rows; ++i)
        for (std::size_t c = 0; c < cols.size(); ++c) Ar.at(i, c) = m.A.at(i, cols[c]);
    Vec rhs = tmatvec(Ar, m.b);
    auto apply = [&](const Vec& z) { return tmatvec(Ar, matvec(Ar, z)); };
    Vec u;
    try {
        u = conjugate_gradient(apply, rhs, 1e-12, 4 * cols.size());
    } catch (const NoConvergenceError&) {
        return std::nullopt;
    }
    Vec next(m.A.cols, 0.0);
    for (std::size_t c = 0; c < cols.size(); ++c) next[cols[c]] = u[c];
    return std::make_pair(project_piece(label, next), std::move(label));
}

struct CiState {
    Vec w_prev;
    long long unchanged = 0;
    std::size_t trigger = 50;
};

struct CiStepResult {
    Vec point;
    PieceLabel label;
    bool event = false;
};

// One step of the component-identification scheme: count consecutive
// gate-compatible iterates; at the trigger, solve on the identified piece;
// otherwise take the ordinary step.
inline CiStepResult step_component_identification(const QuadraticModel& m,
                                                  const UnionSet& set, Reformulation reform,
                                                  double lambda, const Vec& w,
                                                  CiState& state, TieBreak& tb) {
    const bool chi =
        state.w_prev.empty() ? false : detail::gate_compatible(set, reform, w, state.w_prev);
    state.unchanged = chi ? state.unchanged + 1 : 0;
    if (state.unchanged == static_cast<long long>(state.trigger)) {
        state.unchanged = -1;
        if (auto solved = component_identification_solve(m, set, w, tb)) {
            state.w_prev = w;
            return {std::move(solved->first), std::move(solved->second), true};
        }
    }
    auto [next, label] = (reform == Reformulation::Constrained)
                             ? step_ps(m, set, lambda, w, tb)
                             : step_pdmc(m, set, lambda, w, tb);
    state.w_prev = w;
    return {std::move(next), std::move(label), false};
}

// ---------------------------------------------------------------------------
// Run driver.

struct SolverConfig {
    BaseAlgorithm algo = BaseAlgorithm::PS;
    QChoice q = QChoice::GramInverse;
    bool accelerate = false;
    bool component_id = false;
    double tau = 0.999;      // lambda = tau / L_Q
    double sigma = 1e-2;
    std::size_t ci_trigger = 0;  // 0: default 50 (GramInverse) / 100 (Identity)
    bool p_matrix_mode = false;  // permits tau = 1 for PS
    TieBreak tie = TieBreak::lowest_index();

    Reformulation reform() const {
        return algo == BaseAlgorithm::PS ? Reformulation::Constrained
                                         : Reformulation::SumOfSquares;
    }
};

inline double resolve_lambda(const SolverConfig& cfg, double L) {
    if (!(cfg.tau > 0.0 && cfg.tau <= 1.0))
        throw ConfigError("tau must lie in (0, 1]");
    if (cfg.algo == BaseAlgorithm::FB && cfg.tau >= 1.0)
        throw ConfigError("forward-backward requires tau < 1");
    if (cfg.algo == BaseAlgorithm::PS && cfg.tau >= 1.0 && !cfg.p_matrix_mode)
        throw ConfigError("projected-step tau = 1 requires p-matrix mode");
    return cfg.tau / L;
}

inline std::size_t resolve_ci_trigger(const SolverConfig& cfg) {
    std::size_t base = cfg.ci_trigger;
    if (base == 0) base = (cfg.q == QChoice::GramInverse) ? 50 : 100;
    if (cfg.accelerate && cfg.component_id) base = std::max<std::size_t>(1, base / 2);
    return base;
}

struct SolveReport {
    IterationTrace trace;
    std::size_t ci_events = 0;
    double ci_seconds = 0.0;
    double lambda = 0.0;
};

namespace detail {

struct ModelOp {
    const QuadraticModel& m;
    const UnionSet& set;
    BaseAlgorithm algo;
    Reformulation reform;
    double lambda;

    std::pair<Vec, PieceLabel> step(const Vec& w, TieBreak& tb) const {
        switch (algo) {
            case BaseAlgorithm::PDMC: return step_pdmc(m, set, lambda, w, tb);
            case BaseAlgorithm::FB: return step_fb(m, set, lambda, w, tb);
            case BaseAlgorithm::PS: return step_ps(m, set, lambda, w, tb);
        }
        throw ConfigError("unknown algorithm");
    }
    double lyapunov(const Vec& w) const { return lyapunov_value(m, set, reform, w); }
};

}  // namespace detail

// Runs the configured method from w0 under the given stop rule.  Non-CI
// configurations route through the generic engine; component identification
// adds its bookkeeping (and the exact fixed-point termination of its Step 3)
// in a dedicated loop.
inline SolveReport run_solver(const QuadraticModel& model, const UnionSet& set,
                              const SolverConfig& cfg, Vec w0, const StopRule& stop) {
    SolveReport report;
    const double lambda = resolve_lambda(cfg, model.L);
    report.lambda = lambda;
    const Reformulation reform = cfg.reform();
    detail::ModelOp op{model, set, cfg.algo, reform, lambda};
    TieBreak tb = cfg.tie;

    if (!cfg.component_id) {
        if (!cfg.accelerate) {
            report.trace = iterate(op, std::move(w0), stop, tb);
        } else {
            auto t_select = [&](const Vec& w, const Vec& w_prev, const Vec&) {
                return plan_extrapolation(model, set, reform, cfg.sigma, w, w_prev).t;
            };
            report.trace =
                iterate_accelerated(op, std::move(w0), cfg.sigma, t_select, stop, tb);
        }
        return report;
    }

    // Component-identification loop (optionally extrapolated).
    stop.validate();
    if (!(cfg.sigma > 0.0)) throw ConfigError("sigma must be positive");
    double V = op.lyapunov(w0);
    detail::require_finite_start(V);
    const std::size_t trigger = resolve_ci_trigger(cfg);
    IterationTrace& trace = report.trace;
    Vec w = w0;
    Vec w_prev = std::move(w0);
    long long unchanged = 0;
    detail::StallTracker stall;
    for (std::size_t k = 0; k < stop.max_iters; ++k) {
        const bool chi =
            k >= 1 ? detail::gate_compatible(set, reform, w, w_prev) : false;
        unchanged = chi ? unchanged + 1 : 0;

        bool event = false;
        double t = 0.0;
        Vec w_next;
        PieceLabel label;
        if (unchanged == static_cast<long long>(trigger)) {
            unchanged = -1;
            const auto t0 = std::chrono::steady_clock::now();
            auto solved = component_identification_solve(model, set, w, tb);
            report.ci_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            if (solved) {
                w_next = std::move(solved->first);
                label = std::move(solved->second);
                event = true;
                ++report.ci_events;
            }
        }
        if (!event) {
            Vec z = w;
            if (cfg.accelerate && k >= 1) {
                AccelPlan plan = plan_extrapolation(model, set, reform, cfg.sigma, w, w_prev);
                if (plan.t > 0.0) {
                    t = plan.t;
                    axpy(t, plan.p, z);
                    const double Vz = op.lyapunov(z);
                    if ((Vz - V) + 0.5 * cfg.sigma * t * t * norm2_sq(plan.p) > 1e-12)
                        throw StepsizeViolationError(
                            "run_solver: extrapolation violates descent condition");
                }
            }
            auto stepped = op.step(z, tb);
            w_next = std::move(stepped.first);
            label = std::move(stepped.second);
        }

        const double r = stop.eval(w, w_next);
        const double V_next = op.lyapunov(w_next);
        trace.records.push_back({k, r, V, std::move(label), t, event,
                                 norm2(vsub(w_next, w))});
        // The identification solve is a restart, not a descent step; the
        // Lyapunov guard applies to ordinary steps only.
        if (!event && V_next > V + 1e-9)
            throw DivergentLyapunovError("run_solver: Lyapunov value increased");
        V = V_next;
        const bool exact_fixed = (w_next == w);
        w_prev = std::move(w);
        w = std::move(w_next);
        if (exact_fixed || r <= stop.tol) {
            trace.status = TermStatus::Converged;
            break;
        }
        if (stall.update(r)) {
            trace.status = TermStatus::Stalled;
            break;
        }
    }
    trace.final_point = std::move(w);
    return report;
}

// ---------------------------------------------------------------------------
// Baselines.

// Projected gradient with a caller-chosen stepsize; identical in form to the
// Identity-Q projected step.  w0 should lie in the sparsity set.
inline IterationTrace baseline_pg_bt(const DenseMatrix& A, const Vec& b,
                                     const SparsitySet& set, double lambda, Vec w0,
                                     const StopRule& stop) {
    if (!(lambda > 0.0)) throw ConfigError("baseline_pg_bt: stepsize must be positive");
    struct Op {
        const DenseMatrix& A;
        const Vec& b;
        SparsitySet set;
        double lambda;

        std::pair<Vec, PieceLabel> step(const Vec& w, TieBreak& tb) const {
            Vec r = vsub(matvec(A, w), b);
            Vec y = w;
            axpy(-lambda, tmatvec(A, r), y);
            return project_sparsity(set, y, tb);
        }
        double lyapunov(const Vec& w) const {
            if (!member(UnionSet{set}, w, 1e-12))
                return std::numeric_limits<double>::infinity();
            return 0.5 * norm2_sq(vsub(matvec(A, w), b));
        }
    } op{A, b, set, lambda};
    TieBreak tb;
    return iterate(op, std::move(w0), stop, tb);
}

// x+ = (x - lambda (Mx - b))_+ ; requires M + M^T positive definite.
inline IterationTrace baseline_bpa(const DenseMatrix& M, const Vec& b, double lambda,
                                   Vec x0, const StopRule& stop) {
    if (!(lambda > 0.0)) throw ConfigError("baseline_bpa: stepsize must be positive");
    DenseMatrix S(M.rows, M.cols);
    for (std::size_t i = 0; i < M.rows; ++i)
        for (std::size_t j = 0; j < M.cols; ++j) S.at(i, j) = M.at(i, j) + M.at(j, i);
    Vec ev = sym_eigenvalues(S);
    const double scale = std::max(std::abs(ev.front()), std::abs(ev.back()));
    if (ev.front() <= 1e-12 * std::max(scale, 1.0))
        throw NotApplicableError("baseline_bpa: M + M^T is not positive definite");
    struct Op {
        const DenseMatrix& M;
        const Vec& b;
        double lambda;

        std::pair<Vec, PieceLabel> step(const Vec& x, TieBreak&) const {
            Vec r = vsub(matvec(M, x), b);
            Vec y = x;
            axpy(-lambda, r, y);
            for (auto& v : y) v = std::max(v, 0.0);
            return {std::move(y), {}};
        }
        double lyapunov(const Vec&) const { return 0.0; }
    } op{M, b, lambda};
    TieBreak tb;
    return iterate(op, std::move(x0), stop, tb);
}

// Extragradient: xbar = (x - lambda (Mx - b))_+, x+ = (x - lambda (M xbar - b))_+.
inline IterationTrace baseline_ega(const DenseMatrix& M, const Vec& b, double lambda,
                                   Vec x0, const StopRule& stop) {
    if (!(lambda > 0.0)) throw ConfigError("baseline_ega: stepsize must be positive");
    struct Op {
        const DenseMatrix& M;
        const Vec& b;
        double lambda;

        std::pair<Vec, PieceLabel> step(const Vec& x, TieBreak&) const {
            Vec xbar = x;
            axpy(-lambda, vsub(matvec(M, x), b), xbar);
            for (auto& v : xbar) v = std::max(v, 0.0);
            Vec y = x;
            axpy(-lambda, vsub(matvec(M, xbar), b), y);
            for (auto& v : y) v = std::max(v, 0.0);
            return {std::move(y), {}};
        }
        double lyapunov(const Vec&) const { return 0.0; }
    } op{M, b, lambda};
    TieBreak tb;
    return iterate(op, std::move(x0), stop, tb);
}

}  // namespace ucfeas
