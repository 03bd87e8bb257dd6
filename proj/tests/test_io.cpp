#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <functional>
#include <fstream>

#include "qgl/errors.hpp"
#include "qgl/graph_io.hpp"
#include "qgl/spectrum.hpp"

using namespace qgl;

namespace {

std::string error_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST_CASE("graph JSON round trip is idempotent") {
    for (const char* name : {"star3", "flower3", "lasso", "dumbbell", "mandarin3", "k4", "k6", "tree31_5", "tree31_7",
                             "chain2", "chain4", "chain8"}) {
        CAPTURE(name);
        const MetricGraph g = load_graph(name);
        validate(g);
        const std::string once = graph_to_json(g);
        const MetricGraph h = parse_graph(once);
        validate(h);
        CHECK(graph_to_json(h) == once);
        REQUIRE(h.num_edges() == g.num_edges());
        for (int e = 0; e < g.num_edges(); ++e) {
            CHECK(h.edges[e].tail == g.edges[e].tail);
            CHECK(h.edges[e].head == g.edges[e].head);
            CHECK(h.edges[e].length == g.edges[e].length);
        }
    }
}

TEST_CASE("catalog names resolve with or without extension") {
    CHECK(graph_to_json(load_graph("dumbbell")) == graph_to_json(load_graph("dumbbell.json")));
    CHECK(error_code([] { load_graph("no_such_graph"); }) == "InvalidGraphFile");
}

TEST_CASE("malformed graph files") {
    CHECK(error_code([] { parse_graph("{"); }) == "InvalidGraphFile");
    CHECK(error_code([] { parse_graph("{\"vertices\": 2}"); }) == "InvalidGraphFile");
    CHECK(error_code([] { parse_graph("{\"vertices\": 2, \"edges\": [[0, 1]]}"); }) == "InvalidGraphFile");
    const auto tmp = std::filesystem::temp_directory_path() / "qgl_io_test.json";
    {
        std::ofstream f(tmp);
        f << "{\"vertices\": 2, \"edges\": [[0, 0, 1.0], [0, 1, 2.5]]}";
    }
    const MetricGraph g = load_graph(tmp.string());
    CHECK(g.vertices == 2);
    CHECK(g.edges[1].length == 2.5);
    std::filesystem::remove(tmp);
}

TEST_CASE("seeded random lengths") {
    const auto a = random_lengths(15, 42);
    const auto b = random_lengths(15, 42);
    const auto c = random_lengths(15, 43);
    CHECK(a == b);
    CHECK(a != c);
    for (double x : a) {
        CHECK(x >= 1.0);
        CHECK(x <= 2.0);
    }
}

TEST_CASE("length lists") {
    CHECK(parse_lengths("1,1.5,2") == std::vector<double>{1.0, 1.5, 2.0});
    CHECK(error_code([] { parse_lengths("1,x"); }) == "InvalidLengths");
}

TEST_CASE("threshold JSON") {
    const Thresholds d = Thresholds::from_json("");
    CHECK(d.eps_ker == 1e-8);
    CHECK(d.eps_val == 1e-6);
    const Thresholds t = Thresholds::from_json("{\"eps_val\": 1e-7}");
    CHECK(t.eps_val == 1e-7);
    CHECK(t.eps_der == 1e-6);
    const Thresholds r = Thresholds::from_json(t.to_json());
    CHECK(r.eps_val == t.eps_val);
    CHECK(r.eps_supp == t.eps_supp);
    CHECK(error_code([] { Thresholds::from_json("{oops"); }) == "InvalidThresholds");
}
