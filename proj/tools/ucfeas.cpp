// Benchmark harness: generate feasibility instances, run solvers and
// baselines with CSV/JSON outputs, aggregate over seeds, and verify the
// library's structural properties at oracle-checkable sizes.
//
// Exit codes: 0 success/converged, 1 unexpected error, 2 bad flags or
// configuration, 3 iteration budget exhausted, 4 solver not applicable to
// the instance, 5 property verification failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ucfeas/instance_io.hpp"
#include "ucfeas/problems.hpp"
#include "ucfeas/solvers.hpp"

using ojson = nlohmann::ordered_json;
using namespace ucfeas;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw Error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("cannot move " + tmp + " into place");
}

// ---------------------------------------------------------------------------
// Problem resolution: inline family flags or an instance file.

struct ProblemFlags {
    std::string family;    // safp | lcp1 | lcp2 | lcp3
    std::string instance;  // path, exclusive with family
    std::size_t n = 0, m = 0, s = 0;
    std::uint64_t seed = 0;
    bool normalize = true;  // LCP families only
};

struct Problem {
    bool is_safp = false;
    std::string family;
    std::uint64_t seed = 0;
    bool normalized = false;
    SafpInstance safp;
    LcpInstance lcp;

    std::size_t n() const { return is_safp ? safp.A.cols : lcp.M.rows; }
};

bool is_lcp_family(const std::string& f) {
    return f == "lcp1" || f == "lcp2" || f == "lcp3";
}

Problem resolve_problem(const ProblemFlags& pf) {
    Problem p;
    if (!pf.instance.empty()) {
        auto st = load_instance(pf.instance);
        p.is_safp = st.kind == StoredInstance::Kind::Safp;
        p.family = st.family;
        p.seed = st.seed.value_or(0);
        p.normalized = st.normalized;
        p.safp = std::move(st.safp);
        p.lcp = std::move(st.lcp);
        return p;
    }
    if (pf.family == "safp") {
        if (pf.n == 0 || pf.m == 0 || pf.s == 0)
            throw ConfigError("safp requires --n, --m and --s");
        p.is_safp = true;
        p.family = "safp";
        p.seed = pf.seed;
        p.safp = gen_safp(pf.n, pf.m, pf.s, pf.seed);
        return p;
    }
    if (is_lcp_family(pf.family)) {
        if (pf.n == 0) throw ConfigError(pf.family + " requires --n");
        p.family = pf.family;
        p.seed = pf.seed;
        if (pf.family == "lcp1")
            p.lcp = gen_lcp1(pf.n);
        else if (pf.family == "lcp2")
            p.lcp = gen_lcp2(pf.n);
        else
            p.lcp = gen_lcp3(pf.n, pf.seed);
        if (pf.normalize) {
            p.lcp = normalize_lcp(p.lcp);
            p.normalized = true;
        }
        return p;
    }
    throw ConfigError("unknown family '" + pf.family + "' (safp, lcp1, lcp2, lcp3)");
}

void add_problem_flags(CLI::App* cmd, ProblemFlags& pf, bool instance_allowed) {
    cmd->add_option("--family", pf.family, "Problem family: safp, lcp1, lcp2, lcp3");
    if (instance_allowed)
        cmd->add_option("--instance", pf.instance, "Instance file (overrides --family)");
    cmd->add_option("--n", pf.n, "Problem size");
    cmd->add_option("--m", pf.m, "Row count (safp)");
    cmd->add_option("--s", pf.s, "Sparsity level (safp)");
    cmd->add_option("--seed", pf.seed, "Instance seed");
    cmd->add_flag("--normalize,!--no-normalize", pf.normalize,
                  "Scale LCP data by sqrt(n)/column norm (default on)");
}

// ---------------------------------------------------------------------------
// Solver name table.

struct SolverSpec {
    BaseAlgorithm algo = BaseAlgorithm::PS;
    QChoice q = QChoice::GramInverse;
    bool accel = false;
    bool ci = false;
    double default_tau = 0.999;
    bool baseline = false;
};

const std::map<std::string, SolverSpec>& solver_table() {
    static const std::map<std::string, SolverSpec> table = {
        {"map", {BaseAlgorithm::PS, QChoice::GramInverse, false, false, 0.999, false}},
        {"amap", {BaseAlgorithm::PS, QChoice::GramInverse, true, false, 0.999, false}},
        {"map+", {BaseAlgorithm::PS, QChoice::GramInverse, false, true, 0.999, false}},
        {"amap+", {BaseAlgorithm::PS, QChoice::GramInverse, true, true, 0.999, false}},
        {"ps", {BaseAlgorithm::PS, QChoice::Identity, false, false, 0.999, false}},
        {"aps", {BaseAlgorithm::PS, QChoice::Identity, true, false, 0.999, false}},
        {"aps+", {BaseAlgorithm::PS, QChoice::Identity, true, true, 0.999, false}},
        {"mavep", {BaseAlgorithm::PDMC, QChoice::GramInverse, false, false, 1.0, false}},
        {"apdmc", {BaseAlgorithm::PDMC, QChoice::GramInverse, true, false, 1.0, false}},
        {"pdmc", {BaseAlgorithm::PDMC, QChoice::Identity, false, false, 0.999, false}},
        {"marp", {BaseAlgorithm::FB, QChoice::GramInverse, false, false, 0.999, false}},
        {"fb", {BaseAlgorithm::FB, QChoice::Identity, false, false, 0.999, false}},
        {"pg-bt", {}, },
        {"ega", {}, },
        {"bpa", {}, },
    };
    return table;
}

SolverSpec lookup_solver(const std::string& name) {
    auto it = solver_table().find(name);
    if (it == solver_table().end())
        throw ConfigError("unknown solver '" + name + "'");
    SolverSpec spec = it->second;
    spec.baseline = name == "pg-bt" || name == "ega" || name == "bpa";
    return spec;
}

// ---------------------------------------------------------------------------
// One solver run with timing and residual plumbing.

struct RunFlags {
    std::string solver;
    double tau = -1.0;     // < 0: solver default
    double sigma = 1e-2;
    double lambda = -1.0;  // baselines; < 0: default
    double tol = 1e-6;
    std::size_t max_iters = 10000;
    std::size_t ci_trigger = 0;
    bool p_matrix = false;       // in addition to auto-detection by family
    bool amortize_setup = false;
    std::uint64_t tie_seed = 0;
    bool tie_seeded = false;
};

struct RunOutcome {
    IterationTrace trace;
    std::size_t ci_events = 0;
    double ci_seconds = 0.0;
    double lambda = 0.0;
    double tau = 0.0;
    double setup_s = 0.0;
    double wall_s = 0.0;
    double final_residual = 0.0;
    std::string init;
    std::string q_name = "none";
};

StopRule make_stop(const Problem& p, double tol, std::size_t max_iters) {
    StopRule stop;
    stop.tol = tol;
    stop.max_iters = max_iters;
    if (p.is_safp) {
        const SparsitySet set{p.safp.A.cols, p.safp.s};
        const DenseMatrix& A = p.safp.A;
        const Vec& b = p.safp.b;
        stop.residual = [&A, &b, set](const Vec&, const Vec& next) {
            return residual_safp(A, b, set, next);
        };
    } else {
        const DenseMatrix& M = p.lcp.M;
        const Vec& b = p.lcp.b;
        stop.residual = [&M, &b](const Vec&, const Vec& next) {
            Vec x(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(M.rows));
            return residual_lcp(M, b, x);
        };
    }
    return stop;
}

RunOutcome run_baseline(const Problem& p, const RunFlags& rf) {
    RunOutcome out;
    StopRule stop = make_stop(p, rf.tol, rf.max_iters);
    const auto t0 = std::chrono::steady_clock::now();
    if (rf.solver == "pg-bt") {
        if (!p.is_safp) throw ConfigError("pg-bt applies to safp instances");
        const double nrm = operator_norm(p.safp.A);
        out.lambda = rf.lambda > 0.0 ? rf.lambda : 0.999 / (nrm * nrm);
        out.setup_s = seconds_since(t0);
        SparsitySet set{p.safp.A.cols, p.safp.s};
        TieBreak tb;
        Vec w0 = project_sparsity(set, tmatvec(p.safp.A, p.safp.b), tb).first;
        out.init = "project(At_b)";
        const auto t1 = std::chrono::steady_clock::now();
        out.trace = baseline_pg_bt(p.safp.A, p.safp.b, set, out.lambda, std::move(w0), stop);
        out.wall_s = seconds_since(t1);
    } else {
        if (p.is_safp) throw ConfigError(rf.solver + " applies to lcp instances");
        const double nrm = operator_norm(p.lcp.M);
        out.lambda = rf.lambda > 0.0 ? rf.lambda : 1.0 / nrm;
        out.setup_s = seconds_since(t0);
        Vec x0(p.lcp.M.rows);
        for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = std::max(p.lcp.b[i], 0.0);
        out.init = "b_plus";
        const auto t1 = std::chrono::steady_clock::now();
        if (rf.solver == "bpa")
            out.trace = baseline_bpa(p.lcp.M, p.lcp.b, out.lambda, std::move(x0), stop);
        else
            out.trace = baseline_ega(p.lcp.M, p.lcp.b, out.lambda, std::move(x0), stop);
        out.wall_s = seconds_since(t1);
    }
    if (!rf.amortize_setup) out.wall_s += out.setup_s;
    out.final_residual = out.trace.final_residual();
    return out;
}

RunOutcome run_solver_cmd(const Problem& p, const RunFlags& rf) {
    SolverSpec spec = lookup_solver(rf.solver);
    if (spec.baseline) return run_baseline(p, rf);

    RunOutcome out;
    SolverConfig cfg;
    cfg.algo = spec.algo;
    cfg.q = spec.q;
    cfg.accelerate = spec.accel;
    cfg.component_id = spec.ci;
    cfg.tau = rf.tau >= 0.0 ? rf.tau : spec.default_tau;
    cfg.sigma = rf.sigma;
    cfg.ci_trigger = rf.ci_trigger;
    cfg.p_matrix_mode = rf.p_matrix || (!p.is_safp && is_lcp_family(p.family));
    if (rf.tie_seeded) cfg.tie = TieBreak::seeded(rf.tie_seed);
    out.tau = cfg.tau;
    out.q_name = to_string(cfg.q);

    StopRule stop = make_stop(p, rf.tol, rf.max_iters);

    const auto t0 = std::chrono::steady_clock::now();
    UnionSet set = p.is_safp ? UnionSet{SparsitySet{p.safp.A.cols, p.safp.s}}
                             : UnionSet{ComplementaritySet{p.lcp.M.rows}};
    QuadraticModel model =
        p.is_safp ? QuadraticModel::make(p.safp.A, p.safp.b, cfg.q)
                  : QuadraticModel::make(p.lcp.stacked(), p.lcp.b, cfg.q);

    Vec w0;
    if (p.is_safp) {
        w0 = tmatvec(p.safp.A, p.safp.b);
        out.init = "At_b";
        if (cfg.reform() == Reformulation::Constrained) {
            TieBreak tb = cfg.tie;
            w0 = project_union(set, w0, tb).first;
            out.init = "project(At_b)";
        }
    } else {
        Vec start(2 * p.lcp.M.rows, 0.0);
        for (std::size_t i = 0; i < p.lcp.M.rows; ++i)
            start[i] = std::max(p.lcp.b[i], 0.0);
        TieBreak tb = cfg.tie;
        w0 = project_union(set, start, tb).first;
        out.init = "project(b_plus,0)";
    }
    out.setup_s = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    SolveReport rep = run_solver(model, set, cfg, std::move(w0), stop);
    out.wall_s = seconds_since(t1);
    if (!rf.amortize_setup) out.wall_s += out.setup_s;
    out.trace = std::move(rep.trace);
    out.ci_events = rep.ci_events;
    out.ci_seconds = rep.ci_seconds;
    out.lambda = rep.lambda;
    out.final_residual = out.trace.final_residual();
    return out;
}

std::string trace_csv(const IterationTrace& trace) {
    std::string out = "k,residual,lyapunov,t_k,piece_changed,ci_event\n";
    const PieceLabel* prev = nullptr;
    for (const auto& r : trace.records) {
        const int changed = prev != nullptr && !(*prev == r.label) ? 1 : 0;
        out += std::to_string(r.k) + ',' + fmt(r.residual) + ',' + fmt(r.lyapunov) + ',' +
               fmt(r.t) + ',' + std::to_string(changed) + ',' +
               std::to_string(r.ci_event ? 1 : 0) + '\n';
        prev = &r.label;
    }
    return out;
}

ojson summary_json(const Problem& p, const RunFlags& rf, const RunOutcome& out) {
    ojson j;
    j["solver"] = rf.solver;
    j["family"] = p.family;
    j["n"] = p.n();
    if (p.is_safp) {
        j["m"] = p.safp.A.rows;
        j["s"] = p.safp.s;
    }
    j["seed"] = p.seed;
    j["q"] = out.q_name;
    j["tau"] = out.tau;
    j["lambda"] = out.lambda;
    j["sigma"] = rf.sigma;
    j["ci_trigger"] = rf.ci_trigger;
    j["tol"] = rf.tol;
    j["max_iters"] = rf.max_iters;
    j["normalized"] = p.normalized;
    j["init"] = out.init;
    j["iterations"] = out.trace.iterations();
    j["status"] = to_string(out.trace.status);
    j["final_residual"] = out.final_residual;
    j["ci_iterations"] = out.ci_events;
    j["ave_ci_time_s"] =
        out.ci_events == 0 ? 0.0 : out.ci_seconds / static_cast<double>(out.ci_events);
    j["setup_time_s"] = out.setup_s;
    j["wall_time_s"] = out.wall_s;
    return j;
}

// ---------------------------------------------------------------------------
// Subcommand drivers.

int cmd_generate(const ProblemFlags& pf, const std::string& out_path) {
    Problem p = resolve_problem(pf);
    StoredInstance st;
    st.family = p.family;
    st.seed = p.seed;
    if (p.is_safp) {
        st.kind = StoredInstance::Kind::Safp;
        st.safp = std::move(p.safp);
    } else {
        st.kind = StoredInstance::Kind::Lcp;
        st.normalized = p.normalized;
        st.lcp = std::move(p.lcp);
    }
    std::string path = out_path;
    if (path.empty()) {
        path = p.family + "-n" + std::to_string(p.is_safp ? st.safp.A.cols : st.lcp.M.rows);
        if (p.family == "safp" || p.family == "lcp3")
            path += "-seed" + std::to_string(p.seed);
        path += ".instance.txt";
    }
    save_instance(path, st);
    std::cout << path << '\n';
    return 0;
}

int cmd_solve(const ProblemFlags& pf, const RunFlags& rf, const std::string& out_dir,
              std::string tag) {
    Problem p = resolve_problem(pf);
    RunOutcome out = run_solver_cmd(p, rf);
    if (tag.empty()) {
        tag = rf.solver + "-" + p.family + "-n" + std::to_string(p.n()) + "-seed" +
              std::to_string(p.seed);
    }
    const std::string base = out_dir.empty() ? tag : out_dir + "/" + tag;
    atomic_write(base + ".trace.csv", trace_csv(out.trace));
    ojson j = summary_json(p, rf, out);
    atomic_write(base + ".summary.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << std::endl;
    return out.trace.status == TermStatus::Converged ? 0 : 3;
}

int cmd_compare(const ProblemFlags& pf, const RunFlags& rf,
                const std::vector<std::string>& solvers, std::size_t trials,
                std::uint64_t first_seed, const std::string& out_path) {
    if (solvers.size() < 2) throw ConfigError("compare needs at least two --solvers");
    if (trials == 0) throw ConfigError("compare needs at least one trial");
    std::string csv =
        "solver,trials,converged,ave_iters,ave_time_s,std_time_s,ave_residual,"
        "std_residual,ave_ci_iters,ave_ci_time_s\n";
    for (const auto& name : solvers) {
        std::vector<double> iters, times, residuals, ci_iters, ci_times;
        std::size_t converged = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            ProblemFlags seeded = pf;
            seeded.seed = first_seed + t;
            Problem p = resolve_problem(seeded);
            RunFlags one = rf;
            one.solver = name;
            RunOutcome out = run_solver_cmd(p, one);
            iters.push_back(static_cast<double>(out.trace.iterations()));
            times.push_back(out.wall_s);
            residuals.push_back(out.final_residual);
            ci_iters.push_back(static_cast<double>(out.ci_events));
            ci_times.push_back(out.ci_seconds);
            if (out.trace.status == TermStatus::Converged) ++converged;
        }
        auto mean = [](const std::vector<double>& v) {
            double acc = 0.0;
            for (double x : v) acc += x;
            return acc / static_cast<double>(v.size());
        };
        auto stdev = [&](const std::vector<double>& v) {
            if (v.size() < 2) return 0.0;
            const double mu = mean(v);
            double acc = 0.0;
            for (double x : v) acc += (x - mu) * (x - mu);
            return std::sqrt(acc / static_cast<double>(v.size() - 1));
        };
        csv += name + ',' + std::to_string(trials) + ',' + std::to_string(converged) +
               ',' + fmt(mean(iters)) + ',' + fmt(mean(times)) + ',' + fmt(stdev(times)) +
               ',' + fmt(mean(residuals)) + ',' + fmt(stdev(residuals)) + ',' +
               fmt(mean(ci_iters)) + ',' + fmt(mean(ci_times)) + '\n';
    }
    if (!out_path.empty()) atomic_write(out_path, csv);
    std::cout << csv;
    return 0;
}

// ---------------------------------------------------------------------------
// Verification suites.

struct CheckResult {
    std::string name;
    std::size_t instances = 0;
    bool passed = true;
    double worst = 0.0;
};

CheckResult verify_projections(std::size_t n, std::size_t trials, std::uint64_t seed) {
    CheckResult res{"projections"};
    const std::size_t n_saf = std::min<std::size_t>(n, 12);
    const std::size_t n_lcp = std::min<std::size_t>(n, 10);
    std::vector<UnionSet> sets = {SparsitySet{n_saf, std::min<std::size_t>(3, n_saf)},
                                  ComplementaritySet{n_lcp}};
    Rng rng = Rng::stream(seed, 99);
    for (const auto& set : sets) {
        const std::size_t dim = std::holds_alternative<SparsitySet>(set)
                                    ? std::get<SparsitySet>(set).n
                                    : 2 * std::get<ComplementaritySet>(set).n;
        for (std::size_t t = 0; t < trials; ++t) {
            Vec w(dim);
            for (auto& v : w) v = rng.uniform(-3.0, 3.0);
            TieBreak tb;
            auto [z, label] = project_union(set, w, tb);
            auto oracle = oracle_project_union(set, w);
            ++res.instances;
            const double gap = std::abs(norm2_sq(vsub(w, z)) - oracle.dist_sq);
            res.worst = std::max(res.worst, gap);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& cand : oracle.minimizers)
                best = std::min(best, norm_inf(vsub(cand, z)));
            res.worst = std::max(res.worst, best);
        }
    }
    res.passed = res.worst <= 1e-12;
    return res;
}

CheckResult verify_identities(std::size_t trials, std::uint64_t seed) {
    CheckResult res{"identities"};
    struct Case {
        QuadraticModel m;
        UnionSet set;
    };
    std::vector<Case> cases;
    {
        auto inst = gen_safp(10, 4, 3, seed);
        cases.push_back({QuadraticModel::make(inst.A, inst.b, QChoice::GramInverse),
                         SparsitySet{10, 3}});
    }
    {
        auto inst = normalize_lcp(gen_lcp3(4, seed));
        cases.push_back(
            {QuadraticModel::make(inst.stacked(), inst.b, QChoice::GramInverse),
             ComplementaritySet{4}});
    }
    Rng rng = Rng::stream(seed, 98);
    for (auto& c : cases) {
        const std::size_t dim = c.m.A.cols;
        for (std::size_t t = 0; t < trials; ++t) {
            Vec w(dim);
            for (auto& v : w) v = rng.uniform(-3.0, 3.0);
            const double lambda = 0.25 + 0.5 * rng.uniform01();
            Vec p1 = project_affine(c.m, w);
            TieBreak tb;
            Vec p2 = project_union(c.set, w, tb).first;
            Vec y(dim);
            for (std::size_t i = 0; i < dim; ++i)
                y[i] = (1.0 - lambda) * w[i] + lambda * p1[i];

            TieBreak t1;
            Vec pd = step_pdmc(c.m, c.set, lambda, w, t1).first;
            TieBreak t2;
            Vec fb = step_fb(c.m, c.set, lambda, w, t2).first;
            TieBreak t3;
            Vec ps = step_ps(c.m, c.set, lambda, w, t3).first;
            TieBreak t4;
            Vec py = project_union(c.set, y, t4).first;
            ++res.instances;
            for (std::size_t i = 0; i < dim; ++i) {
                const double rhs_pd =
                    ((1.0 - lambda) * w[i] + lambda * (p1[i] + p2[i])) / (1.0 + lambda);
                const double rhs_fb = (lambda * py[i] + y[i]) / (1.0 + lambda);
                res.worst = std::max(res.worst, std::abs(pd[i] - rhs_pd));
                res.worst = std::max(res.worst, std::abs(fb[i] - rhs_fb));
                res.worst = std::max(res.worst, std::abs(ps[i] - py[i]));
            }
        }
    }
    res.passed = res.worst <= 1e-12;
    return res;
}

CheckResult verify_lyapunov(const std::string& family, std::size_t n, std::uint64_t seed) {
    CheckResult res{"lyapunov"};
    ProblemFlags pf;
    pf.family = family.empty() ? "safp" : family;
    pf.seed = seed;
    if (pf.family == "safp") {
        pf.n = n ? n : 24;
        pf.m = std::max<std::size_t>(2, pf.n / 3);
        pf.s = std::max<std::size_t>(1, pf.n / 6);
    } else {
        pf.n = n ? n : 20;
    }
    Problem p = resolve_problem(pf);
    double worst_margin = std::numeric_limits<double>::infinity();
    for (BaseAlgorithm algo :
         {BaseAlgorithm::PDMC, BaseAlgorithm::FB, BaseAlgorithm::PS}) {
        for (QChoice q : {QChoice::Identity, QChoice::GramInverse}) {
            RunFlags rf;
            rf.solver = "internal";
            SolverConfig cfg;
            cfg.algo = algo;
            cfg.q = q;
            cfg.tau = 0.999;
            UnionSet set = p.is_safp ? UnionSet{SparsitySet{p.safp.A.cols, p.safp.s}}
                                     : UnionSet{ComplementaritySet{p.lcp.M.rows}};
            QuadraticModel model =
                p.is_safp ? QuadraticModel::make(p.safp.A, p.safp.b, q)
                          : QuadraticModel::make(p.lcp.stacked(), p.lcp.b, q);
            Vec w0;
            if (p.is_safp)
                w0 = tmatvec(p.safp.A, p.safp.b);
            else {
                w0 = Vec(2 * p.lcp.M.rows, 0.0);
                for (std::size_t i = 0; i < p.lcp.M.rows; ++i)
                    w0[i] = std::max(p.lcp.b[i], 0.0);
            }
            if (cfg.reform() == Reformulation::Constrained) {
                TieBreak tb;
                w0 = project_union(set, w0, tb).first;
            }
            StopRule stop;
            stop.tol = 1e-14;
            stop.max_iters = 200;
            auto rep = run_solver(model, set, cfg, std::move(w0), stop);
            const double margin = (1.0 - rep.lambda * model.L) / (2.0 * rep.lambda);
            const auto& rec = rep.trace.records;
            for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
                const double drop = rec[i].lyapunov - rec[i + 1].lyapunov;
                const double bound = margin * rec[i].step_norm * rec[i].step_norm;
                worst_margin = std::min(worst_margin, drop - bound);
                ++res.instances;
            }
        }
    }
    res.worst = worst_margin >= 0.0 ? 0.0 : -worst_margin;
    res.passed = res.worst <= 1e-10;
    return res;
}

CheckResult verify_pmatrix_fixed_points(std::size_t n, std::size_t trials,
                                        std::uint64_t seed) {
    CheckResult res{"pmatrix-fixed-points"};
    n = std::min<std::size_t>(n ? n : 6, 8);
    for (std::size_t t = 0; t < trials; ++t) {
        auto inst = normalize_lcp(gen_lcp3(n, seed + t));
        auto sols = lcp_bruteforce_solve(inst.M, inst.b);
        if (sols.size() != 1) {
            res.passed = false;
            res.worst = std::numeric_limits<double>::infinity();
            continue;
        }
        UnionSet set = ComplementaritySet{n};
        for (BaseAlgorithm algo :
             {BaseAlgorithm::PDMC, BaseAlgorithm::FB, BaseAlgorithm::PS}) {
            SolverConfig cfg;
            cfg.algo = algo;
            cfg.tau = 0.999;
            cfg.p_matrix_mode = true;
            QuadraticModel model =
                QuadraticModel::make(inst.stacked(), inst.b, QChoice::GramInverse);
            Vec start(2 * n, 0.0);
            for (std::size_t i = 0; i < n; ++i) start[i] = std::max(inst.b[i], 0.0);
            TieBreak tb;
            Vec w0 = cfg.reform() == Reformulation::Constrained
                         ? project_union(set, start, tb).first
                         : start;
            StopRule stop;
            stop.residual = [&](const Vec&, const Vec& next) {
                Vec x(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(n));
                return residual_lcp(inst.M, inst.b, x);
            };
            stop.tol = 1e-10;
            stop.max_iters = 20000;
            auto rep = run_solver(model, set, cfg, std::move(w0), stop);
            ++res.instances;
            double dist = 0.0;
            for (std::size_t i = 0; i < 2 * n; ++i)
                dist = std::max(dist,
                                std::abs(rep.trace.final_point[i] - sols[0][i]));
            res.worst = std::max(res.worst, dist);
        }
    }
    res.passed = res.passed && res.worst <= 1e-6;
    return res;
}

CheckResult verify_rate(std::size_t n, std::size_t trials, std::uint64_t seed) {
    CheckResult res{"rate"};
    n = std::min<std::size_t>(n ? n : 6, 8);
    for (std::size_t t = 0; t < trials; ++t) {
        auto inst = normalize_lcp(gen_lcp3(n, seed + t));
        DenseMatrix A = inst.stacked();
        // Exact restricted constant over complementary pieces.
        double nu = std::numeric_limits<double>::infinity();
        for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
            DenseMatrix S(n, n);
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t col = (mask & (1ULL << j)) ? j : n + j;
                for (std::size_t i = 0; i < n; ++i) S.at(i, j) = A.at(i, col);
            }
            nu = std::min(nu, sym_eig_min(matmul(transpose(S), S)));
        }
        const double anorm = operator_norm(A);
        const double eta = anorm * anorm / nu;

        SolverConfig cfg;
        cfg.algo = BaseAlgorithm::PS;
        cfg.tau = 1.0;
        cfg.p_matrix_mode = true;
        QuadraticModel model = QuadraticModel::make(A, inst.b, QChoice::GramInverse);
        UnionSet set = ComplementaritySet{n};
        Vec start(2 * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) start[i] = std::max(inst.b[i], 0.0);
        TieBreak tb;
        Vec w0 = project_union(set, start, tb).first;
        StopRule stop;
        stop.residual = [&](const Vec&, const Vec& next) {
            Vec x(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(n));
            return residual_lcp(inst.M, inst.b, x);
        };
        stop.tol = 1e-10;
        stop.max_iters = 20000;
        auto rep = run_solver(model, set, cfg, std::move(w0), stop);
        const double bound = 1.0 - rep.lambda / (4.0 * eta) + 0.05;
        const auto& rec = rep.trace.records;
        const std::size_t lo = rec.size() > 21 ? rec.size() - 21 : 0;
        for (std::size_t i = lo; i + 1 < rec.size(); ++i) {
            if (rec[i].lyapunov <= 1e-30) continue;
            const double ratio = rec[i + 1].lyapunov / rec[i].lyapunov;
            ++res.instances;
            res.worst = std::max(res.worst, ratio - bound);
        }
    }
    res.passed = res.worst <= 0.0;
    res.worst = std::max(res.worst, 0.0);
    return res;
}

int cmd_verify(const std::string& suite, const std::string& family, std::size_t n,
               std::size_t trials, std::uint64_t seed) {
    std::vector<CheckResult> checks;
    auto want = [&](const char* name) { return suite == "all" || suite == name; };
    if (want("projections"))
        checks.push_back(verify_projections(n ? n : 8, trials ? trials : 1000, seed));
    if (want("identities")) checks.push_back(verify_identities(trials ? trials : 1000, seed));
    if (want("lyapunov")) checks.push_back(verify_lyapunov(family, n, seed));
    if (want("pmatrix-fixed-points"))
        checks.push_back(verify_pmatrix_fixed_points(n, trials ? trials : 20, seed));
    if (want("rate")) checks.push_back(verify_rate(n, trials ? trials : 5, seed));
    if (checks.empty()) throw ConfigError("unknown suite '" + suite + "'");

    ojson report;
    report["checks"] = ojson::array();
    bool all = true;
    for (const auto& c : checks) {
        ojson jc;
        jc["name"] = c.name;
        jc["instances"] = c.instances;
        jc["passed"] = c.passed;
        jc["worst_violation"] = c.worst;
        report["checks"].push_back(jc);
        all = all && c.passed;
    }
    report["all_passed"] = all;
    std::cout << report.dump(2) << std::endl;
    return all ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Union-convex feasibility benchmark harness"};
    app.require_subcommand(1);

    ProblemFlags gen_pf;
    std::string gen_out;
    auto* gen = app.add_subcommand("generate", "Write an instance file");
    add_problem_flags(gen, gen_pf, /*instance_allowed=*/false);
    gen->add_option("--out", gen_out, "Output path (default derived from family)");

    ProblemFlags solve_pf;
    RunFlags solve_rf;
    std::string solve_dir, solve_tag;
    auto* solve = app.add_subcommand("solve", "Run one solver, write trace and summary");
    add_problem_flags(solve, solve_pf, true);
    solve->add_option("--solver", solve_rf.solver, "Solver name")->required();
    solve->add_option("--tau", solve_rf.tau, "Stepsize factor lambda = tau/L");
    solve->add_option("--sigma", solve_rf.sigma, "Extrapolation descent constant");
    solve->add_option("--lambda", solve_rf.lambda, "Baseline stepsize");
    solve->add_option("--tol", solve_rf.tol, "Residual tolerance");
    solve->add_option("--max-iters", solve_rf.max_iters, "Iteration budget");
    solve->add_option("--ci-trigger", solve_rf.ci_trigger,
                      "Identification trigger count (0: default)");
    solve->add_flag("--p-matrix", solve_rf.p_matrix,
                    "Assume a P-matrix instance (permits tau = 1 projected steps)");
    solve->add_flag("--amortize-setup", solve_rf.amortize_setup,
                    "Exclude factorization setup from wall time");
    solve->add_option("--tie-seed", solve_rf.tie_seed, "Random tie-breaking seed")
        ->each([&](const std::string&) { solve_rf.tie_seeded = true; });
    solve->add_option("--output-dir", solve_dir, "Directory for trace/summary files");
    solve->add_option("--tag", solve_tag, "Basename for output files");

    ProblemFlags cmp_pf;
    RunFlags cmp_rf;
    std::vector<std::string> cmp_solvers;
    std::size_t cmp_trials = 1;
    std::uint64_t cmp_first_seed = 0;
    std::string cmp_out;
    auto* cmp = app.add_subcommand("compare", "Aggregate solvers across seeds");
    add_problem_flags(cmp, cmp_pf, false);
    cmp->add_option("--solvers", cmp_solvers, "Solver names")
        ->required()
        ->delimiter(',');
    cmp->add_option("--trials", cmp_trials, "Number of seeds");
    cmp->add_option("--first-seed", cmp_first_seed, "First seed");
    cmp->add_option("--tau", cmp_rf.tau, "Stepsize factor");
    cmp->add_option("--sigma", cmp_rf.sigma, "Extrapolation descent constant");
    cmp->add_option("--lambda", cmp_rf.lambda, "Baseline stepsize");
    cmp->add_option("--tol", cmp_rf.tol, "Residual tolerance");
    cmp->add_option("--max-iters", cmp_rf.max_iters, "Iteration budget");
    cmp->add_option("--ci-trigger", cmp_rf.ci_trigger, "Identification trigger count");
    cmp->add_flag("--p-matrix", cmp_rf.p_matrix, "Assume P-matrix instances");
    cmp->add_flag("--amortize-setup", cmp_rf.amortize_setup,
                  "Exclude factorization setup from wall time");
    cmp->add_option("--out", cmp_out, "CSV output path");

    std::string ver_suite = "all", ver_family;
    std::size_t ver_n = 0, ver_trials = 0;
    std::uint64_t ver_seed = 0;
    auto* ver = app.add_subcommand("verify", "Check structural properties");
    ver->add_option("--suite", ver_suite,
                    "projections | identities | lyapunov | pmatrix-fixed-points | rate | all");
    ver->add_option("--family", ver_family, "Family for the lyapunov suite");
    ver->add_option("--n", ver_n, "Problem size");
    ver->add_option("--trials", ver_trials, "Trials / points per check");
    ver->add_option("--seed", ver_seed, "Base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_pf, gen_out);
        if (solve->parsed()) return cmd_solve(solve_pf, solve_rf, solve_dir, solve_tag);
        if (cmp->parsed())
            return cmd_compare(cmp_pf, cmp_rf, cmp_solvers, cmp_trials, cmp_first_seed,
                               cmp_out);
        if (ver->parsed())
            return cmd_verify(ver_suite, ver_family, ver_n, ver_trials, ver_seed);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const StepsizeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NotApplicableError& e) {
        std::cerr << "not applicable: " << e.what() << '\n';
        return 4;
    } catch (const DivergentLyapunovError& e) {
        std::cerr << "property violation: " << e.what() << '\n';
        return 5;
    } catch (const StepsizeViolationError& e) {
        std::cerr << "property violation: " << e.what() << '\n';
        return 5;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
