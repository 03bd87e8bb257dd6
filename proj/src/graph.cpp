#include "qgl/graph.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "qgl/errors.hpp"

namespace qgl {

double MetricGraph::total_length() const {
    double L = 0.0;
    for (const auto& e : edges) L += e.length;
    return L;
}

double MetricGraph::min_length() const {
    double m = edges.empty() ? 0.0 : edges[0].length;
    for (const auto& e : edges) m = std::min(m, e.length);
    return m;
}

double MetricGraph::max_length() const {
    double m = 0.0;
    for (const auto& e : edges) m = std::max(m, e.length);
    return m;
}

std::vector<double> MetricGraph::lengths() const {
    std::vector<double> out;
    out.reserve(edges.size());
    for (const auto& e : edges) out.push_back(e.length);
    return out;
}

std::vector<int> MetricGraph::degrees() const {
    std::vector<int> deg(vertices, 0);
    for (const auto& e : edges) {
        ++deg[e.tail];
        ++deg[e.head];
    }
    return deg;
}

std::vector<std::vector<int>> MetricGraph::outgoing() const {
    std::vector<std::vector<int>> out(vertices);
    for (int d = 0; d < num_directed(); ++d) out[origin(d)].push_back(d);
    return out;
}

MetricGraph with_lengths(const MetricGraph& g, const std::vector<double>& lengths) {
    if (lengths.size() != g.edges.size())
        fail("LengthMismatch", "expected " + std::to_string(g.edges.size()) + " lengths, got " +
                                   std::to_string(lengths.size()));
    MetricGraph h = g;
    for (size_t j = 0; j < lengths.size(); ++j) h.edges[j].length = lengths[j];
    return h;
}

namespace {

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[std::max(a, b)] = std::min(a, b);
        return true;
    }
};

std::vector<std::vector<std::pair<int, int>>> adjacency(const MetricGraph& g) {
    std::vector<std::vector<std::pair<int, int>>> adj(g.vertices);
    for (int j = 0; j < g.num_edges(); ++j) {
        const auto& e = g.edges[j];
        adj[e.tail].push_back({e.head, j});
        if (e.tail != e.head) adj[e.head].push_back({e.tail, j});
    }
    return adj;
}

}  // namespace

std::vector<int> components_without(const MetricGraph& g, int removed) {
    DisjointSet ds(g.vertices);
    for (int j = 0; j < g.num_edges(); ++j)
        if (j != removed) ds.unite(g.edges[j].tail, g.edges[j].head);
    std::vector<int> comp(g.vertices);
    for (int v = 0; v < g.vertices; ++v) comp[v] = ds.find(v);
    return comp;
}

// Tarjan low-link over edge ids so that parallel edges are handled.
std::vector<int> find_bridges(const MetricGraph& g) {
    const auto adj = adjacency(g);
    std::vector<int> tin(g.vertices, -1), low(g.vertices, 0);
    std::vector<int> bridges;
    int timer = 0;
    std::function<void(int, int)> dfs = [&](int v, int via) {
        tin[v] = low[v] = timer++;
        for (auto [u, id] : adj[v]) {
            if (id == via) continue;
            if (tin[u] >= 0) {
                low[v] = std::min(low[v], tin[u]);
            } else {
                dfs(u, id);
                low[v] = std::min(low[v], low[u]);
                if (low[u] > tin[v]) bridges.push_back(id);
            }
        }
    };
    for (int v = 0; v < g.vertices; ++v)
        if (tin[v] < 0) dfs(v, -1);
    std::sort(bridges.begin(), bridges.end());
    return bridges;
}

std::vector<Block> edge_separation(const MetricGraph& g) {
    const auto bridges = find_bridges(g);
    std::vector<char> is_bridge(g.num_edges(), 0);
    for (int b : bridges) is_bridge[b] = 1;

    DisjointSet ds(g.vertices);
    for (int j = 0; j < g.num_edges(); ++j)
        if (!is_bridge[j]) ds.unite(g.edges[j].tail, g.edges[j].head);

    std::vector<Block> blocks;
    std::vector<int> block_of_root(g.vertices, -1);
    for (int j = 0; j < g.num_edges(); ++j) {
        if (is_bridge[j]) continue;
        int r = ds.find(g.edges[j].tail);
        if (block_of_root[r] < 0) {
            block_of_root[r] = static_cast<int>(blocks.size());
            blocks.emplace_back();
        }
        blocks[block_of_root[r]].edges.push_back(j);
    }
    for (auto& b : blocks) {
        for (int j : b.edges) {
            b.vertices.push_back(g.edges[j].tail);
            b.vertices.push_back(g.edges[j].head);
        }
        std::sort(b.vertices.begin(), b.vertices.end());
        b.vertices.erase(std::unique(b.vertices.begin(), b.vertices.end()), b.vertices.end());
        b.betti = static_cast<int>(b.edges.size()) - static_cast<int>(b.vertices.size()) + 1;
    }
    return blocks;
}

std::vector<std::string> FamilyTags::names() const {
    std::vector<std::string> out;
    if (tree) out.push_back("tree");
    if (tree_of_cycles) out.push_back("tree-of-cycles");
    if (regular_31_tree) out.push_back("(3,1)-regular-tree");
    if (stower)
        out.push_back("stower(" + std::to_string(stower->first) + "," + std::to_string(stower->second) + ")");
    return out;
}

FamilyTags classify_family(const Topology& t) {
    FamilyTags tags;
    tags.tree = t.betti == 0;
    tags.tree_of_cycles = t.betti > 0 && !t.blocks.empty() &&
                          std::all_of(t.blocks.begin(), t.blocks.end(), [](const Block& b) { return b.betti == 1; });
    tags.regular_31_tree =
        tags.tree && std::all_of(t.interior.begin(), t.interior.end(), [&](int v) { return t.degree[v] == 3; });
    if (t.interior.size() == 1)
        tags.stower = std::make_pair(static_cast<int>(t.boundary.size()), static_cast<int>(t.loops.size()));
    return tags;
}

Topology validate(const MetricGraph& g) {
    if (g.vertices <= 0) fail("TooFewEdges", "graph has no vertices");
    for (int j = 0; j < g.num_edges(); ++j) {
        const auto& e = g.edges[j];
        if (e.tail < 0 || e.tail >= g.vertices || e.head < 0 || e.head >= g.vertices)
            fail("InvalidVertex", "edge " + std::to_string(j) + " references a vertex outside [0," +
                                      std::to_string(g.vertices) + ")");
        if (!(e.length > 0.0))
            fail("NonpositiveLength", "edge " + std::to_string(j) + " has length " + std::to_string(e.length));
    }
    if (g.num_edges() <= 1) fail("TooFewEdges", "graph has " + std::to_string(g.num_edges()) + " edge(s), need E > 1");

    const auto comp = components_without(g, -1);
    for (int v = 0; v < g.vertices; ++v)
        if (comp[v] != comp[0])
            fail("DisconnectedGraph", "vertex " + std::to_string(v) + " is not connected to vertex 0");

    Topology t;
    t.vertices = g.vertices;
    t.edges = g.num_edges();
    t.betti = t.edges - t.vertices + 1;
    t.total_length = g.total_length();
    t.min_length = g.min_length();
    t.max_length = g.max_length();
    t.degree = g.degrees();
    for (int v = 0; v < g.vertices; ++v) {
        if (t.degree[v] == 2) fail("DegreeTwoVertex", "vertex " + std::to_string(v) + " has degree 2");
        (t.degree[v] == 1 ? t.boundary : t.interior).push_back(v);
    }
    for (int j = 0; j < g.num_edges(); ++j)
        if (g.is_loop(j)) t.loops.push_back(j);
    t.bridges = find_bridges(g);
    t.blocks = edge_separation(g);
    t.family = classify_family(t);
    return t;
}

}  // namespace qgl
