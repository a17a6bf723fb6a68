#pragma once

// Plain-text instance container.  Layout:
//
//   ucfeas-instance v1
//   kind safp|lcp
//   family <name>
//   n <cols or lcp size>
//   m <rows>            (safp only)
//   s <sparsity>        (safp only)
//   seed <u64>          (optional)
//   normalized 0|1      (lcp only)
//   matrix <name> <rows> <cols>
//   ... one row per line, %.17g entries ...
//   vector <name> <len>
//   ... one line of entries ...
//   end
//
// All values are decimal text at full double precision, so write-then-read
// reproduces instances bit-exactly on any platform.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "problems.hpp"

namespace ucfeas {

struct StoredInstance {
    enum class Kind { Safp, Lcp } kind = Kind::Lcp;
    std::string family;
    std::optional<std::uint64_t> seed;
    bool normalized = false;
    SafpInstance safp;
    LcpInstance lcp;
};

namespace detail {

inline void write_value(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

inline void write_matrix(std::ostream& out, const std::string& name,
                         const DenseMatrix& M) {
    out << "matrix " << name << ' ' << M.rows << ' ' << M.cols << '\n';
    for (std::size_t i = 0; i < M.rows; ++i) {
        for (std::size_t j = 0; j < M.cols; ++j) {
            if (j) out << ' ';
            write_value(out, M.at(i, j));
        }
        out << '\n';
    }
}

inline void write_vector(std::ostream& out, const std::string& name, const Vec& v) {
    out << "vector " << name << ' ' << v.size() << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ' ';
        write_value(out, v[i]);
    }
    out << '\n';
}

}  // namespace detail

inline void save_instance(const std::string& path, const StoredInstance& inst) {
    std::ofstream out(path);
    if (!out) throw ParseError("save_instance: cannot open " + path + " for writing");
    out << "ucfeas-instance v1\n";
    if (inst.kind == StoredInstance::Kind::Safp) {
        out << "kind safp\n";
        out << "family " << inst.family << '\n';
        out << "n " << inst.safp.A.cols << '\n';
        out << "m " << inst.safp.A.rows << '\n';
        out << "s " << inst.safp.s << '\n';
        if (inst.seed) out << "seed " << *inst.seed << '\n';
        detail::write_matrix(out, "A", inst.safp.A);
        detail::write_vector(out, "b", inst.safp.b);
        if (inst.safp.ground_truth)
            detail::write_vector(out, "w_star", *inst.safp.ground_truth);
    } else {
        out << "kind lcp\n";
        out << "family " << inst.family << '\n';
        out << "n " << inst.lcp.M.rows << '\n';
        if (inst.seed) out << "seed " << *inst.seed << '\n';
        out << "normalized " << (inst.normalized ? 1 : 0) << '\n';
        detail::write_matrix(out, "M", inst.lcp.M);
        detail::write_vector(out, "b", inst.lcp.b);
    }
    out << "end\n";
    if (!out) throw ParseError("save_instance: write failed for " + path);
}

inline StoredInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_instance: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "ucfeas-instance v1")
        throw ParseError("load_instance: bad header in " + path);
    StoredInstance inst;
    bool saw_kind = false, saw_end = false;
    std::size_t n = 0, m = 0;
    DenseMatrix mat;
    Vec b, wstar;
    bool has_mat = false, has_b = false, has_wstar = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "end") {
            saw_end = true;
            break;
        }
        if (key == "kind") {
            std::string v;
            ls >> v;
            if (v == "safp")
                inst.kind = StoredInstance::Kind::Safp;
            else if (v == "lcp")
                inst.kind = StoredInstance::Kind::Lcp;
            else
                throw ParseError("load_instance: unknown kind '" + v + "'");
            saw_kind = true;
        } else if (key == "family") {
            ls >> inst.family;
        } else if (key == "n") {
            ls >> n;
        } else if (key == "m") {
            ls >> m;
        } else if (key == "s") {
            ls >> inst.safp.s;
        } else if (key == "seed") {
            std::uint64_t v = 0;
            ls >> v;
            inst.seed = v;
        } else if (key == "normalized") {
            int v = 0;
            ls >> v;
            inst.normalized = v != 0;
        } else if (key == "matrix") {
            std::string name;
            std::size_t r = 0, c = 0;
            if (!(ls >> name >> r >> c))
                throw ParseError("load_instance: malformed matrix header");
            mat = DenseMatrix(r, c);
            for (std::size_t i = 0; i < r; ++i) {
                if (!std::getline(in, line))
                    throw ParseError("load_instance: truncated matrix " + name);
                std::istringstream row(line);
                for (std::size_t j = 0; j < c; ++j) {
                    if (!(row >> mat.at(i, j)))
                        throw ParseError("load_instance: short row in matrix " + name);
                }
            }
            has_mat = true;
        } else if (key == "vector") {
            std::string name;
            std::size_t len = 0;
            if (!(ls >> name >> len))
                throw ParseError("load_instance: malformed vector header");
            if (!std::getline(in, line))
                throw ParseError("load_instance: truncated vector " + name);
            std::istringstream row(line);
            Vec v(len);
            for (std::size_t i = 0; i < len; ++i) {
                if (!(row >> v[i]))
                    throw ParseError("load_instance: short vector " + name);
            }
            if (name == "b") {
                b = std::move(v);
                has_b = true;
            } else if (name == "w_star") {
                wstar = std::move(v);
                has_wstar = true;
            } else {
                throw ParseError("load_instance: unknown vector '" + name + "'");
            }
        } else {
            throw ParseError("load_instance: unknown key '" + key + "'");
        }
    }
    if (!saw_end) throw ParseError("load_instance: missing end marker in " + path);
    if (!saw_kind || !has_mat || !has_b)
        throw ParseError("load_instance: incomplete instance in " + path);
    if (inst.kind == StoredInstance::Kind::Safp) {
        if (mat.cols != n || mat.rows != m)
            throw ParseError("load_instance: matrix shape disagrees with header");
        inst.safp.A = std::move(mat);
        inst.safp.b = std::move(b);
        if (has_wstar) inst.safp.ground_truth = std::move(wstar);
    } else {
        if (mat.rows != n || mat.cols != n)
            throw ParseError("load_instance: matrix shape disagrees with header");
        inst.lcp.M = std::move(mat);
        inst.lcp.b = std::move(b);
    }
    return inst;
}

}  // namespace ucfeas
