#pragma once

// Generic fixed-point iteration engine.  An operator supplies a step map and
// a Lyapunov function; the engine runs the plain or extrapolated loop, guards
// the descent inequalities, and records a per-iteration trace.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "errors.hpp"
#include "linalg.hpp"
#include "sets.hpp"

namespace ucfeas {

enum class TermStatus { Converged, MaxIters, Stalled };

inline const char* to_string(TermStatus s) {
    switch (s) {
        case TermStatus::Converged: return "converged";
        case TermStatus::MaxIters: return "max_iters";
        case TermStatus::Stalled: return "stalled";
    }
    return "unknown";
}

// Residual callback sees the current iterate and its successor; the default
// is the step length.  Problem modules plug in their own merit functions.
struct StopRule {
    std::function<double(const Vec& current, const Vec& next)> residual;
    double tol = 1e-6;
    std::size_t max_iters = 1000;

    double eval(const Vec& current, const Vec& next) const {
        if (residual) return residual(current, next);
        return norm2(vsub(next, current));
    }

    void validate() const {
        if (!(tol > 0.0)) throw ConfigError("StopRule: tolerance must be positive");
        if (max_iters < 1) throw ConfigError("StopRule: need at least one iteration");
    }
};

struct TraceRecord {
    std::size_t k = 0;
    double residual = 0.0;
    double lyapunov = 0.0;   // V(w^k)
    PieceLabel label;        // piece activated by the step taken from w^k
    double t = 0.0;          // extrapolation stepsize
    bool ci_event = false;
    double step_norm = 0.0;  // ||w^{k+1} - w^k||
};

struct IterationTrace {
    std::vector<TraceRecord> records;
    TermStatus status = TermStatus::MaxIters;
    Vec final_point;

    std::size_t iterations() const { return records.size(); }
    double final_residual() const {
        return records.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : records.back().residual;
    }
};

namespace detail {

// Flags stagnation: residual failing to drop by 1e-16 for 100 consecutive
// iterations.
struct StallTracker {
    double last = std::numeric_limits<double>::infinity();
    int run = 0;

    bool update(double r) {
        if (last - r < 1e-16) {
            if (++run >= 100) return true;
        } else {
            run = 0;
        }
        last = r;
        return false;
    }
};

inline void require_finite_start(double V) {
    if (!std::isfinite(V))
        throw NotInSetError("iterate: initial point has non-finite Lyapunov value");
}

}  // namespace detail

// Plain loop: w^{k+1} = step(w^k) until the stop rule fires.
template <class Op>
IterationTrace iterate(const Op& op, Vec w0, const StopRule& stop, TieBreak& tb) {
    stop.validate();
    double V = op.lyapunov(w0);
    detail::require_finite_start(V);

    IterationTrace trace;
    Vec w = std::move(w0);
    detail::StallTracker stall;
    for (std::size_t k = 0; k < stop.max_iters; ++k) {
        auto [w_next, label] = op.step(w, tb);
        const double r = stop.eval(w, w_next);
        const double V_next = op.lyapunov(w_next);
        trace.records.push_back(
            {k, r, V, std::move(label), 0.0, false, norm2(vsub(w_next, w))});
        if (V_next > V + 1e-9)
            throw DivergentLyapunovError("iterate: Lyapunov value increased");
        V = V_next;
        w = std::move(w_next);
        if (r <= stop.tol) {
            trace.status = TermStatus::Converged;
            break;
        }
        if (stall.update(r)) {
            trace.status = TermStatus::Stalled;
            break;
        }
    }
    trace.final_point = std::move(w);
    return trace;
}

// Extrapolated loop: z^k = w^k + t_k (w^k - w^{k-1}), w^{k+1} = step(z^k).
// t_select(w, w_prev, p) proposes t_k; any positive proposal must satisfy the
// descent condition V(z) <= V(w) - (sigma/2) t^2 ||p||^2 (slack 1e-12).
template <class Op, class TSelect>
IterationTrace iterate_accelerated(const Op& op, Vec w0, double sigma, TSelect&& t_select,
                                   const StopRule& stop, TieBreak& tb) {
    stop.validate();
    if (!(sigma > 0.0)) throw ConfigError("iterate_accelerated: sigma must be positive");
    double V = op.lyapunov(w0);
    detail::require_finite_start(V);

    IterationTrace trace;
    Vec w = w0;
    Vec w_prev = std::move(w0);
    detail::StallTracker stall;
    for (std::size_t k = 0; k < stop.max_iters; ++k) {
        Vec p = vsub(w, w_prev);
        const double psq = norm2_sq(p);
        double t = 0.0;
        Vec z = w;
        if (k >= 1 && psq > 0.0) {
            t = t_select(w, w_prev, p);
            if (t < 0.0) t = 0.0;
            if (t > 0.0) {
                z = w;
                axpy(t, p, z);
                const double Vz = op.lyapunov(z);
                // Difference form so the required decrease is not absorbed
                // into V's rounding.
                if ((Vz - V) + 0.5 * sigma * t * t * psq > 1e-12)
                    throw StepsizeViolationError(
                        "iterate_accelerated: extrapolation violates descent condition");
            }
        }
        auto [w_next, label] = op.step(z, tb);
        const double r = stop.eval(w, w_next);
        const double V_next = op.lyapunov(w_next);
        trace.records.push_back(
            {k, r, V, std::move(label), t, false, norm2(vsub(w_next, w))});
        if (V_next > V + 1e-9)
            throw DivergentLyapunovError("iterate_accelerated: Lyapunov value increased");
        V = V_next;
        w_prev = std::move(w);
        w = std::move(w_next);
        if (r <= stop.tol) {
            trace.status = TermStatus::Converged;
            break;
        }
        if (stall.update(r)) {
            trace.status = TermStatus::Stalled;
            break;
        }
    }
    trace.final_point = std::move(w);
    return trace;
}

// Largest t in {t0, beta t0, beta^2 t0, ...} satisfying the descent
// condition; 0 after 30 shrinks.  With p = 0 the condition is vacuous.
template <class V>
double backtrack_t(V&& lyap, const Vec& w, const Vec& p, double sigma, double t0 = 1.0,
                   double beta = 0.5) {
    if (!(t0 > 0.0)) throw ConfigError("backtrack_t: t0 must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("backtrack_t: beta must be in (0,1)");
    const double psq = norm2_sq(p);
    if (psq == 0.0) return t0;
    const double Vw = lyap(w);
    double t = t0;
    for (int trial = 0; trial < 30; ++trial, t *= beta) {
        Vec z = w;
        axpy(t, p, z);
        // Difference form: keeps the required decrease out of V's rounding.
        if (lyap(z) - Vw <= -0.5 * sigma * t * t * psq) return t;
    }
    return 0.0;
}

// A function given as the pointwise minimum of finitely many pieces, each
// with a proximal map and a Moreau-envelope evaluator.  rho is the
// weak-convexity modulus of the pieces; the proximal maps are single-valued
// for stepsizes below lambda_bar.
struct ProxPiece {
    std::function<Vec(double lambda, const Vec& w)> prox;
    std::function<double(double lambda, const Vec& w)> moreau;
};

struct PiecewiseProxFunction {
    std::vector<ProxPiece> pieces;
    double rho = 0.0;

    double lambda_bar() const {
        return rho < 0.0 ? -1.0 / rho : std::numeric_limits<double>::infinity();
    }
};

// Prox of the min: evaluate every piece's Moreau envelope, pick a minimizing
// piece (ties broken by tb), return its prox point and index.
inline std::pair<Vec, std::size_t> prox_union(const PiecewiseProxFunction& g, double lambda,
                                              const Vec& w, TieBreak& tb) {
    if (!(lambda > 0.0) || lambda >= g.lambda_bar())
        throw StepsizeError("prox_union: lambda outside (0, lambda_bar)");
    if (g.pieces.empty()) throw ConfigError("prox_union: no pieces");
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> argmin;
    for (std::size_t j = 0; j < g.pieces.size(); ++j) {
        const double m = g.pieces[j].moreau(lambda, w);
        if (m < best) {
            best = m;
            argmin.clear();
            argmin.push_back(j);
        } else if (m == best) {
            argmin.push_back(j);
        }
    }
    const std::size_t idx = argmin[tb.pick(argmin.size())];
    return {g.pieces[idx].prox(lambda, w), idx};
}

}  // namespace ucfeas
