#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qgl {

struct Edge {
    int tail = 0;
    int head = 0;
    double length = 1.0;
};

// Finite metric multigraph. Directed edge 2j runs tail->head along edge j,
// directed edge 2j+1 is its reversal.
struct MetricGraph {
    int vertices = 0;
    std::vector<Edge> edges;

    int num_edges() const { return static_cast<int>(edges.size()); }
    int num_directed() const { return 2 * num_edges(); }
    double total_length() const;
    double min_length() const;
    double max_length() const;
    std::vector<double> lengths() const;

    static int edge_of(int d) { return d >> 1; }
    static int reverse(int d) { return d ^ 1; }
    int origin(int d) const { return (d & 1) ? edges[d >> 1].head : edges[d >> 1].tail; }
    int terminus(int d) const { return (d & 1) ? edges[d >> 1].tail : edges[d >> 1].head; }
    bool is_loop(int e) const { return edges[e].tail == edges[e].head; }

    std::vector<int> degrees() const;
    // Directed edges leaving each vertex, in increasing index order.
    std::vector<std::vector<int>> outgoing() const;
};

MetricGraph with_lengths(const MetricGraph& g, const std::vector<double>& lengths);

struct Block {
    std::vector<int> edges;
    std::vector<int> vertices;
    int betti = 0;
};

struct FamilyTags {
    bool tree = false;
    bool tree_of_cycles = false;
    bool regular_31_tree = false;
    std::optional<std::pair<int, int>> stower;  // (tails, loops)

    std::vector<std::string> names() const;
};

struct Topology {
    int vertices = 0;
    int edges = 0;
    int betti = 0;
    double total_length = 0.0;
    double min_length = 0.0;
    double max_length = 0.0;
    std::vector<int> degree;
    std::vector<int> boundary;
    std::vector<int> interior;
    std::vector<int> loops;
    std::vector<int> bridges;
    std::vector<Block> blocks;
    FamilyTags family;

    bool is_boundary(int v) const { return degree[v] == 1; }
};

Topology validate(const MetricGraph& g);
std::vector<int> find_bridges(const MetricGraph& g);
std::vector<Block> edge_separation(const MetricGraph& g);
FamilyTags classify_family(const Topology& t);

// Connected components of g with edge `removed` deleted; returns component id per vertex.
std::vector<int> components_without(const MetricGraph& g, int removed);

}  // namespace qgl
