#include "qgl/counts.hpp"

#include <cmath>

#include "qgl/errors.hpp"

namespace qgl {

namespace {

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

// floor(kappa / 2pi) and r_0(kappa); raises NotGeneric on the ambiguous half-turn branches.
std::pair<int, double> turns(double kappa) {
    const int q = static_cast<int>(std::floor(kappa / kTwoPi));
    double r = kappa - q * kTwoPi;
    if (r < 0.0) r = 0.0;
    return {q, r};
}

int half_turn_branch(double r, const char* what) {
    if (r == 0.0 || r == kPi) fail("NotGeneric", std::string(what) + ": r_0(kappa_e) on a branch point");
    return r < kPi ? 0 : 2;
}

}  // namespace

int nodal_count_edge(double f_v, double f_u, double kappa_e, double eps_val) {
    if (std::abs(f_v) <= eps_val || std::abs(f_u) <= eps_val)
        fail("NotGeneric", "vertex value within eps_val of zero");
    const auto [q, r] = turns(kappa_e);
    if (f_v * f_u < 0.0) return 2 * q + 1;
    return 2 * q + half_turn_branch(r, "nodal count");
}

int neumann_count_edge(double d_v, double d_u, double kappa_e, int deg_v, int deg_u, double eps_der) {
    if (deg_v == 1 || deg_u == 1) return static_cast<int>(std::floor(kappa_e / kPi));
    if (std::abs(d_v) <= eps_der || std::abs(d_u) <= eps_der)
        fail("NotGeneric", "interior derivative within eps_der of zero");
    const auto [q, r] = turns(kappa_e);
    if (d_v * d_u > 0.0) return 2 * q + 1;
    return 2 * q + half_turn_branch(r, "Neumann count");
}

bool surplus_bounds_hold(const Topology& t, int sigma, int omega) {
    const int b = t.betti;
    const int bd = static_cast<int>(t.boundary.size());
    return sigma >= 0 && sigma <= b && omega >= 1 - b - bd && omega <= 2 * b - 1 && sigma - omega >= 1 - b &&
           sigma - omega <= b - 1 + bd;
}

CountRecord counts(const Model& model, const Eigenpair& ep, const Thresholds& thr) {
    if (!ep.flags.generic) fail("NotGeneric", "eigenpair n=" + std::to_string(ep.n) + " is not generic");
    const MetricGraph& g = model.graph;
    const auto& deg = model.topo.degree;
    CountRecord rec;
    rec.n = ep.n;
    rec.k = ep.k;
    for (int e = 0; e < g.num_edges(); ++e) {
        const int d = 2 * e, dr = 2 * e + 1;
        const int v = g.origin(d), u = g.origin(dr);
        rec.phi += nodal_count_edge(ep.f(d), ep.f(dr), ep.kappa(e), thr.eps_val);
        rec.mu += neumann_count_edge(ep.df(d), ep.df(dr), ep.kappa(e), deg[v], deg[u], thr.eps_der);
    }
    for (int d = 0; d < g.num_directed(); ++d)
        if (!model.topo.is_boundary(g.origin(d))) rec.vertex_sign_sum += sign_of(ep.f(d) * ep.df(d));
    rec.sigma = rec.phi - static_cast<int>(ep.n);
    rec.omega = rec.mu - static_cast<int>(ep.n);
    rec.bounds_ok = surplus_bounds_hold(model.topo, rec.sigma, rec.omega);
    const int bd = static_cast<int>(model.topo.boundary.size());
    rec.vertex_identity_ok = 2 * (rec.phi - rec.mu) == bd - rec.vertex_sign_sum;
    return rec;
}

}  // namespace qgl
