#include "rkpm/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rkpm/errors.hpp"

namespace rkpm {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path);
    return out;
}

} // namespace

void write_nodeset(const NodeSet& nodes, const std::string& path) {
    std::ofstream out = open_out(path);
    char buf[256];
    std::snprintf(buf, sizeof buf, "# NP=%d c_a=%.17g seed=%llu\n", nodes.size(),
                  nodes.c_a, static_cast<unsigned long long>(nodes.seed));
    out << buf;
    for (int i = 0; i < nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", nodes.coords[i].x,
                      nodes.coords[i].y, nodes.h.empty() ? 0.0 : nodes.h[i],
                      nodes.a.empty() ? 0.0 : nodes.a[i]);
        out << buf;
    }
}

NodeSet read_nodeset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read " + path);
    NodeSet nodes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line);
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("c_a=", 0) == 0) nodes.c_a = std::stod(tok.substr(4));
                if (tok.rfind("seed=", 0) == 0) nodes.seed = std::stoull(tok.substr(5));
            }
            continue;
        }
        std::istringstream ls(line);
        double x, y, h, a;
        if (!(ls >> x >> y >> h >> a)) throw InvalidArgument("bad node line: " + line);
        nodes.coords.push_back({x, y});
        nodes.h.push_back(h);
        nodes.a.push_back(a);
    }
    if (!nodes.h.empty()) {
        double s = 0;
        for (double v : nodes.h) s += v;
        nodes.avg_spacing = s / std::max(1, nodes.size());
    }
    return nodes;
}

void write_mesh(const Mesh& mesh, const std::string& path,
                const Eigen::VectorXd* solution) {
    std::ofstream out = open_out(path);
    char buf[256];
    out << "# intrkpm mesh\n";
    out << "vertices " << mesh.n_vertices() << "\n";
    for (const Vec2& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
        out << buf;
    }
    out << "cells " << mesh.n_cells() << "\n";
    for (const Cell& c : mesh.cells) {
        if (c.kind == CellKind::Quad)
            out << "quad " << c.v[0] << ' ' << c.v[1] << ' ' << c.v[2] << ' ' << c.v[3];
        else
            out << "tri " << c.v[0] << ' ' << c.v[1] << ' ' << c.v[2];
        out << ' ' << c.material << "\n";
    }
    out << "facets " << mesh.facets.size() << "\n";
    for (const Facet& f : mesh.facets) {
        const auto [a, b] = mesh.edge_vertices(f.cell, f.local_edge);
        out << a << ' ' << b << ' ' << f.tag << "\n";
    }
    if (solution) {
        out << "solution " << solution->size() << "\n";
        for (Eigen::Index i = 0; i < solution->size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g\n", (*solution)(i));
            out << buf;
        }
    }
}

void write_operator(const SpMat& m, const std::string& path) {
    std::ofstream out = open_out(path);
    out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << "\n";
    char buf[128];
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n",
                          static_cast<long>(it.row()), static_cast<long>(it.col()),
                          it.value());
            out << buf;
        }
}

} // namespace rkpm
