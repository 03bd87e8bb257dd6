#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qgl/graph.hpp"

namespace qgl {

MetricGraph parse_graph(const std::string& json_text);
MetricGraph load_graph(const std::string& path_or_name);
std::string graph_to_json(const MetricGraph& g);

// Resolves a bare catalog name like "dumbbell" to the shipped data file.
std::string resolve_graph_path(const std::string& path_or_name);

// Lengths drawn uniformly from [lo, hi] with a seeded 64-bit Mersenne twister.
std::vector<double> random_lengths(int edges, std::uint64_t seed, double lo = 1.0, double hi = 2.0);

// Comma-separated list of positive lengths.
std::vector<double> parse_lengths(const std::string& text);

}  // namespace qgl
