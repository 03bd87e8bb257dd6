#include "qgl/neumann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qgl/errors.hpp"

namespace qgl {

double first_neumann_phase(double f, double df, bool boundary_origin) {
    if (boundary_origin) return kPi;
    const double x = df / f;
    return x > 0.0 ? std::atan(x) : kPi + std::atan(x);
}

NeumannPartition partition(const Model& model, const Eigenpair& ep, const Thresholds& thr) {
    if (!ep.flags.generic) fail("NotGeneric", "eigenpair n=" + std::to_string(ep.n) + " is not generic");
    const MetricGraph& g = model.graph;
    const int V = g.vertices;
    NeumannPartition part;
    part.k = ep.k;
    part.star_regime = ep.k > kPi / model.topo.min_length;

    // Pieces of each edge between consecutive cuts; node ids: vertices first, then pieces.
    struct Piece {
        int edge;
        double length;
        int tail_vertex;  // -1 when bounded by a Neumann point
        int head_vertex;
    };
    std::vector<Piece> pieces;
    for (int e = 0; e < g.num_edges(); ++e) {
        const int d = 2 * e;
        const double phase = first_neumann_phase(ep.f(d), ep.df(d), model.topo.is_boundary(g.origin(d)));
        const int dr = 2 * e + 1;
        const int count = neumann_count_edge(ep.df(d), ep.df(dr), ep.kappa(e), model.topo.degree[g.origin(d)],
                                             model.topo.degree[g.origin(dr)], thr.eps_der);
        std::vector<double> cuts;
        for (int j = 0; j < count; ++j) cuts.push_back((phase + j * kPi) / ep.k);
        for (double c : cuts) part.points.push_back({e, c});
        double prev = 0.0;
        for (size_t i = 0; i <= cuts.size(); ++i) {
            const double next = i < cuts.size() ? cuts[i] : g.edges[e].length;
            pieces.push_back({e, next - prev, i == 0 ? g.edges[e].tail : -1,
                              i == cuts.size() ? g.edges[e].head : -1});
            prev = next;
        }
    }

    std::vector<int> parent(V + pieces.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
    for (size_t i = 0; i < pieces.size(); ++i) {
        if (pieces[i].tail_vertex >= 0) unite(V + static_cast<int>(i), pieces[i].tail_vertex);
        if (pieces[i].head_vertex >= 0) unite(V + static_cast<int>(i), pieces[i].head_vertex);
    }

    std::vector<int> root_index(parent.size(), -1);
    std::vector<std::vector<int>> comp_vertices, comp_pieces;
    auto slot = [&](int node) {
        const int r = find(node);
        if (root_index[r] < 0) {
            root_index[r] = static_cast<int>(comp_vertices.size());
            comp_vertices.emplace_back();
            comp_pieces.emplace_back();
        }
        return root_index[r];
    };
    for (int v = 0; v < V; ++v) comp_vertices[slot(v)].push_back(v);
    for (size_t i = 0; i < pieces.size(); ++i) comp_pieces[slot(V + static_cast<int>(i))].push_back(static_cast<int>(i));

    for (size_t c = 0; c < comp_vertices.size(); ++c) {
        NeumannDomain dom;
        for (int i : comp_pieces[c]) dom.length += pieces[i].length;
        dom.rho = ep.k * dom.length / kPi;
        const auto& vs = comp_vertices[c];
        bool bounded_arms = true;
        for (int i : comp_pieces[c])
            if (pieces[i].tail_vertex >= 0 && pieces[i].head_vertex >= 0) bounded_arms = false;
        if (vs.empty() || (vs.size() == 1 && model.topo.is_boundary(vs[0]) && comp_pieces[c].size() == 1)) {
            dom.kind = DomainKind::Segment;
            dom.N = 1;
        } else if (vs.size() == 1 && bounded_arms && part.star_regime) {
            dom.kind = DomainKind::Star;
            dom.vertex = vs[0];
            const StarObservables so = star_observables(model, ep, vs[0], thr);
            dom.N = so.N;
            dom.rho = so.rho;
        } else {
            dom.kind = DomainKind::General;
            dom.vertex = vs.empty() ? -1 : vs[0];
        }
        part.domains.push_back(dom);
    }
    return part;
}

StarObservables star_observables(const Model& model, const Eigenpair& ep, int vertex, const Thresholds& thr) {
    if (!ep.flags.generic) fail("NotGeneric", "eigenpair n=" + std::to_string(ep.n) + " is not generic");
    if (ep.k <= kPi / model.topo.min_length)
        fail("NotStarRegime", "k=" + std::to_string(ep.k) + " <= pi / L_min");
    if (model.topo.is_boundary(vertex)) fail("InvalidArgument", "vertex " + std::to_string(vertex) + " is a boundary vertex");
    const MetricGraph& g = model.graph;
    StarObservables so;
    so.vertex = vertex;
    int sign_sum = 0;
    double phase_sum = 0.0;
    for (int d = 0; d < g.num_directed(); ++d) {
        if (g.origin(d) != vertex) continue;
        if (std::abs(ep.f(d)) <= thr.eps_val || std::abs(ep.df(d)) <= thr.eps_der)
            fail("NotGeneric", "vanishing trace at vertex " + std::to_string(vertex));
        sign_sum += ep.f(d) * ep.df(d) > 0.0 ? 1 : -1;
        phase_sum += first_neumann_phase(ep.f(d), ep.df(d), false);
    }
    const int deg = model.topo.degree[vertex];
    so.N = (deg - sign_sum) / 2;
    so.rho = phase_sum / kPi;
    // rho is a sum of arctangents, so equality cases carry rounding of order 1e-13
    constexpr double tol = 1e-9;
    so.bounds_ok = so.N >= 1 && so.N <= deg - 1 && so.rho >= 0.5 * (so.N + 1) - tol &&
                   so.rho <= 0.5 * (so.N + deg - 1) + tol;
    return so;
}

IdentityReport local_global_check(const Model& model, const Eigenpair& ep, const NeumannPartition& part,
                                  const CountRecord& rec) {
    IdentityReport rep;
    for (const auto& d : part.domains) {
        if (d.kind != DomainKind::Star) continue;
        rep.sum_N += d.N;
        rep.sum_rho += d.rho;
    }
    const int E = model.E();
    const int bd = static_cast<int>(model.topo.boundary.size());
    rep.expected_sum_N = rec.phi - rec.mu + E - bd;
    rep.expected_sum_rho = model.L() * ep.k / kPi - rec.mu + E - bd;
    const double scale = std::max(1.0, std::abs(rep.expected_sum_rho));
    rep.ok = part.star_regime && rep.sum_N == rep.expected_sum_N &&
             std::abs(rep.sum_rho - rep.expected_sum_rho) <= 1e-8 * scale;
    if (!rep.ok)
        fail("IdentityViolated", "sum N_v=" + std::to_string(rep.sum_N) + " expected " +
                                     std::to_string(rep.expected_sum_N) + ", sum rho_v=" + std::to_string(rep.sum_rho) +
                                     " expected " + std::to_string(rep.expected_sum_rho));
    return rep;
}

}  // namespace qgl
