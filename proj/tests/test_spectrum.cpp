#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "oracles.hpp"
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

std::vector<double> stower_oracle(const std::vector<double>& tails, const std::vector<double>& loops, double kmax) {
    auto g = [&](double k) { return oracle::stower_relation(tails, loops, k); };
    return oracle::bracketed_roots(g, 1e-9, kmax, 1e-3);
}

}  // namespace

TEST_CASE("3-star spectrum matches the stower relation") {
    const Model m(load_graph("star3"));
    const auto stubs = locate_spectrum(m, {200, 0.0, 1});
    REQUIRE(stubs.size() == 200);
    const auto roots = stower_oracle({1.0, 1.3, 1.7}, {}, stubs.back().k + 0.5);
    REQUIRE(roots.size() >= 200);
    for (size_t i = 0; i < 200; ++i) {
        CAPTURE(i);
        CHECK(stubs[i].n == static_cast<long>(i + 1));
        CHECK(stubs[i].multiplicity == 1);
        CHECK(std::abs(stubs[i].k - roots[i]) < 1e-9);
    }
}

TEST_CASE("stower with loops: 1-tail 2-loop graph") {
    MetricGraph g;
    g.vertices = 2;
    g.edges = {{0, 1, 1.1}, {0, 0, 1.45}, {0, 0, 1.9}};
    const Model m(g);
    REQUIRE(m.topo.family.stower.has_value());
    CHECK(*m.topo.family.stower == std::make_pair(1, 2));
    const auto stubs = locate_spectrum(m, {120, 0.0, 1});
    const auto roots = stower_oracle({1.1}, {1.45, 1.9}, stubs.back().k + 1e-6);
    // Loop modes sit at k = 2 pi m / l; the rest must match the oracle one to one.
    std::vector<double> non_loop;
    for (const auto& s : stubs)
        for (int c = loop_modes_at(m, s.k); c < s.multiplicity; ++c) non_loop.push_back(s.k);
    REQUIRE(non_loop.size() <= roots.size());
    for (size_t i = 0; i < non_loop.size(); ++i) CHECK(std::abs(non_loop[i] - roots[i]) < 1e-9);
}

TEST_CASE("counting function steps by one across each simple eigenvalue") {
    for (const char* name : {"k4", "dumbbell", "tree31_7"}) {
        CAPTURE(name);
        const Model m(load_graph(name));
        const auto stubs = locate_spectrum(m, {150, 0.0, 1});
        CHECK(count_below(m, spectrum_start(m)) == 0);
        for (const auto& s : stubs) {
            if (s.multiplicity != 1) continue;
            CHECK(count_below(m, s.k * (1 - 1e-9)) == s.n - 1);
            CHECK(count_below(m, s.k * (1 + 1e-9)) == s.n);
        }
        const CountingFrame f = counting(m, 10.3);
        CHECK(std::abs(f.N - std::round(f.N)) < 1e-9);
    }
}

TEST_CASE("count and kmax localization agree and do not depend on workers") {
    const Model m(load_graph("mandarin3"));
    const auto a = locate_spectrum(m, {300, 0.0, 1});
    const auto b = locate_spectrum(m, {300, 0.0, 3});
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].k == b[i].k);
    const auto c = locate_spectrum(m, {0, a[99].k + 1e-6, 2});
    REQUIRE(c.size() >= 100);
    for (size_t i = 0; i < 100; ++i) CHECK(c[i].k == a[i].k);
}

TEST_CASE("eigenfunctions satisfy the vertex conditions") {
    const Thresholds thr;
    for (const char* name : {"k4", "lasso", "tree31_7", "mandarin3"}) {
        CAPTURE(name);
        const Model m(load_graph(name));
        const auto stubs = locate_spectrum(m, {80, 0.0, 1});
        for (const auto& s : stubs) {
            if (s.multiplicity != 1) continue;
            Eigenpair ep;
            try {
                ep = eigenfunction_at(m, s.k, thr, s.n);
            } catch (const Error& e) {
                CHECK(e.code() == "NonSimple");
                continue;
            }
            CHECK(ep.residual < 1e-9);
            CHECK(ep.sigma_min < thr.eps_ker);
            CHECK(std::abs(ep.trace_imag) < 1e-8);
            // Continuity and Kirchhoff at every vertex.
            const auto out = m.graph.outgoing();
            for (int v = 0; v < m.V(); ++v) {
                double sum = 0.0;
                for (int d : out[v]) {
                    CHECK(std::abs(ep.f(d) - ep.f(out[v][0])) < 1e-8);
                    sum += ep.df(d);
                }
                CHECK(std::abs(sum) < 1e-8);
            }
        }
    }
}

TEST_CASE("non-generic eigenfunctions on the 3-star") {
    const Model m(load_graph("star3"));
    const Thresholds thr;
    // k = pi makes the 1-edge vanish at the centre.
    const Eigenpair ep = eigenfunction_at(m, oracle::kPi, thr, 4);
    CHECK(ep.flags.simple);
    CHECK_FALSE(ep.flags.generic);
    CHECK(error_code([&] { eigenfunction_at(m, 1.2, thr); }) == "NoKernel");
}

TEST_CASE("tree eigenfunctions are almost all generic") {
    const Model m(load_graph("tree31_7"));
    const auto stubs = locate_spectrum(m, {10000, 0.0, 1});
    const auto recs = classify_spectrum(m, stubs, Thresholds{}, 1);
    long generic = 0;
    for (const auto& r : recs) generic += r.generic;
    CHECK(static_cast<double>(generic) / recs.size() >= 0.999);
}

TEST_CASE("lasso loop modes") {
    const Model m(load_graph("lasso"));
    CHECK(loop_modes_at(m, 2 * oracle::kPi) == 1);
    CHECK(loop_modes_at(m, 2.5) == 0);
    const auto stubs = locate_spectrum(m, {40, 0.0, 1});
    const auto recs = classify_spectrum(m, stubs, Thresholds{}, 1);
    long loops = 0;
    for (const auto& r : recs) {
        if (r.loop_supported) {
            ++loops;
            CHECK(std::abs(std::remainder(r.k, 2 * oracle::kPi)) < 1e-9);
        }
    }
    CHECK(loops >= 8);
}

TEST_CASE("K4 eigenvalues have no spurious clusters") {
    const Model m(load_graph("k4"));
    const auto stubs = locate_spectrum(m, {500, 0.0, 1});
    for (size_t i = 1; i < stubs.size(); ++i) CHECK(stubs[i].k > stubs[i - 1].k);
    CHECK(stubs.back().n == 500);
}
