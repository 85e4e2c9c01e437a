#include "cascadelab/graph.hpp"

#include <cstdio>
#include <sstream>

#include "cascadelab/errors.hpp"
#include "cascadelab/report.hpp"

namespace cascadelab {

// TSV layout: header "# N=<count>", then one edge per line as
// "u<TAB>v<TAB>weight" with an optional fourth column ">" marking the edge as
// directed u -> v.
std::string weighted_graph::to_tsv() const {
    std::string out = "# N=" + std::to_string(n) + "\n";
    for (const auto& e : edges) {
        out += std::to_string(e.u);
        out += '\t';
        out += std::to_string(e.v);
        out += '\t';
        out += format_real(e.w);
        if (e.directed) out += "\t>";
        out += '\n';
    }
    return out;
}

weighted_graph weighted_graph::from_tsv(const std::string& text) {
    weighted_graph g;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            long long nn = 0;
            if (std::sscanf(line.c_str(), "# N=%lld", &nn) != 1 || nn < 0)
                throw DomainError("bad graph header: " + line);
            g.n = vertex(nn);
            have_header = true;
            continue;
        }
        if (!have_header) throw DomainError("graph edge before '# N=' header");
        std::istringstream ls(line);
        std::string fu, fv, fw, fd;
        if (!std::getline(ls, fu, '\t') || !std::getline(ls, fv, '\t') ||
            !std::getline(ls, fw, '\t'))
            throw DomainError("bad graph line: " + line);
        graph_edge e;
        try {
            e.u = std::stoi(fu);
            e.v = std::stoi(fv);
            e.w = std::stod(fw);
        } catch (const std::exception&) {
            throw DomainError("bad graph line: " + line);
        }
        if (std::getline(ls, fd, '\t')) {
            if (fd != ">") throw DomainError("bad edge direction marker: " + fd);
            e.directed = true;
        }
        if (e.u < 0 || e.u >= g.n || e.v < 0 || e.v >= g.n)
            throw UnknownVertex("edge endpoint out of range: " + line);
        if (e.u == e.v) throw DomainError("self-loop: " + line);
        if (!(e.w > 0.0)) throw DomainError("non-positive edge weight: " + line);
        g.edges.push_back(e);
    }
    if (!have_header) throw DomainError("graph file missing '# N=' header");
    return g;
}

std::string sampled_graph::to_tsv() const {
    std::string out = "# N=" + std::to_string(n) + "\n";
    for (const auto& [u, v] : edges) {
        out += std::to_string(u);
        out += '\t';
        out += std::to_string(v);
        out += "\t1\n";
    }
    return out;
}

weighted_graph sampled_graph::as_weighted() const {
    weighted_graph g;
    g.n = n;
    g.edges.reserve(edges.size());
    for (const auto& [u, v] : edges) g.edges.push_back({u, v, 1.0, false});
    return g;
}

}  // namespace cascadelab
