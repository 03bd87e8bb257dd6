#include "qgl/graph_io.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "qgl/errors.hpp"

namespace qgl {

using nlohmann::json;

MetricGraph parse_graph(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& ex) {
        fail("InvalidGraphFile", ex.what());
    }
    if (!j.is_object() || !j.contains("vertices") || !j.contains("edges"))
        fail("InvalidGraphFile", "expected {\"vertices\": N, \"edges\": [[u, v, length], ...]}");
    MetricGraph g;
    g.vertices = j.at("vertices").get<int>();
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 3) fail("InvalidGraphFile", "edge entries must be [u, v, length]");
        g.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    }
    return g;
}

std::string resolve_graph_path(const std::string& path_or_name) {
    namespace fs = std::filesystem;
    if (fs::exists(path_or_name)) return path_or_name;
    fs::path candidate = fs::path(QGL_DATA_DIR) / path_or_name;
    if (fs::exists(candidate)) return candidate.string();
    candidate += ".json";
    if (fs::exists(candidate)) return candidate.string();
    fail("InvalidGraphFile", "cannot open graph '" + path_or_name + "'");
}

MetricGraph load_graph(const std::string& path_or_name) {
    std::ifstream in(resolve_graph_path(path_or_name));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_graph(ss.str());
}

std::string graph_to_json(const MetricGraph& g) {
    json j;
    j["vertices"] = g.vertices;
    j["edges"] = json::array();
    for (const auto& e : g.edges) j["edges"].push_back({e.tail, e.head, e.length});
    return j.dump();
}

std::vector<double> random_lengths(int edges, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(edges);
    for (auto& x : out) x = dist(rng);
    return out;
}

std::vector<double> parse_lengths(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            fail("InvalidLengths", "cannot parse length '" + item + "'");
        }
    }
    return out;
}

}  // namespace qgl
