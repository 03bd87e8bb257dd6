#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "oracles.hpp"
#include "qgl/errors.hpp"
#include "qgl/graph_io.hpp"
#include "qgl/neumann.hpp"

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

std::vector<Eigenpair> star_regime_eigenpairs(const Model& m, long count) {
    const Thresholds thr;
    std::vector<Eigenpair> out;
    for (const auto& s : locate_spectrum(m, {count, 0.0, 1})) {
        if (s.multiplicity != 1 || s.k <= oracle::kPi / m.topo.min_length) continue;
        try {
            Eigenpair ep = eigenfunction_at(m, s.k, thr, s.n);
            if (ep.flags.generic) out.push_back(ep);
        } catch (const Error&) {
        }
    }
    return out;
}

}  // namespace

TEST_CASE("first critical phase") {
    // psi(t) = f cos t + df sin t is critical where tan t = df / f.
    CHECK(first_neumann_phase(1.0, 1.0, false) == doctest::Approx(oracle::kPi / 4));
    CHECK(first_neumann_phase(1.0, -1.0, false) == doctest::Approx(3 * oracle::kPi / 4));
    CHECK(first_neumann_phase(-2.0, 1.0, false) == doctest::Approx(oracle::kPi - std::atan(0.5)));
    CHECK(first_neumann_phase(0.3, 0.7, true) == doctest::Approx(oracle::kPi));
}

TEST_CASE("N_v is the spectral position in the extracted star") {
    for (const char* name : {"star3", "k4", "tree31_7", "dumbbell"}) {
        CAPTURE(name);
        const Model m(load_graph(name));
        const Thresholds thr;
        int checked = 0;
        for (const auto& ep : star_regime_eigenpairs(m, 150)) {
            for (int v : m.topo.interior) {
                const StarObservables so = star_observables(m, ep, v, thr);
                std::vector<double> arms;
                for (int d = 0; d < m.graph.num_directed(); ++d)
                    if (m.graph.origin(d) == v) arms.push_back(first_neumann_phase(ep.f(d), ep.df(d), false) / ep.k);
                CAPTURE(ep.n);
                CHECK(so.N == oracle::star_spectral_position(arms, ep.k));
                double total = 0.0;
                for (double a : arms) total += a;
                CHECK(so.rho == doctest::Approx(ep.k * total / oracle::kPi).epsilon(1e-12));
                CHECK(so.bounds_ok);
                ++checked;
            }
        }
        CHECK(checked > 30);
    }
}

TEST_CASE("partition into stars and segments satisfies the local-global identities") {
    for (const char* name : {"star3", "k4", "tree31_7", "mandarin3", "lasso"}) {
        CAPTURE(name);
        const Model m(load_graph(name));
        const Thresholds thr;
        for (const auto& ep : star_regime_eigenpairs(m, 120)) {
            CAPTURE(ep.n);
            const CountRecord rec = counts(m, ep, thr);
            const NeumannPartition part = partition(m, ep, thr);
            CHECK(part.star_regime);
            CHECK(part.points.size() == static_cast<size_t>(rec.mu));
            int stars = 0;
            double length = 0.0;
            for (const auto& d : part.domains) {
                CHECK(d.kind != DomainKind::General);
                if (d.kind == DomainKind::Star) ++stars;
                if (d.kind == DomainKind::Segment) CHECK(d.rho == doctest::Approx(1.0).epsilon(1e-9));
                length += d.length;
            }
            CHECK(stars == static_cast<int>(m.topo.interior.size()));
            CHECK(length == doctest::Approx(m.L()).epsilon(1e-12));
            const IdentityReport rep = local_global_check(m, ep, part, rec);
            CHECK(rep.ok);
        }
    }
}

TEST_CASE("star observables outside their domain of definition") {
    const Model m(load_graph("k4"));
    const Thresholds thr;
    const auto stubs = locate_spectrum(m, {3, 0.0, 1});
    const Eigenpair low = eigenfunction_at(m, stubs[0].k, thr, 1);
    REQUIRE(low.k <= oracle::kPi / m.topo.min_length);
    if (low.flags.generic) CHECK(error_code([&] { star_observables(m, low, 0, thr); }) == "NotStarRegime");
    const Model star(load_graph("star3"));
    const auto eps = star_regime_eigenpairs(star, 20);
    REQUIRE_FALSE(eps.empty());
    CHECK(error_code([&] { star_observables(star, eps[0], 1, thr); }) == "InvalidArgument");
}
