#pragma once

#include "qgl/spectrum.hpp"

namespace qgl {

// Zeros of the eigenfunction inside edge e from the trace at both ends.
int nodal_count_edge(double f_v, double f_u, double kappa_e, double eps_val);

// Critical points inside edge e. d_v and d_u are the outgoing canonical derivatives
// at the two ends; a degree-one end makes the edge a tail.
int neumann_count_edge(double d_v, double d_u, double kappa_e, int deg_v, int deg_u, double eps_der);

struct CountRecord {
    long n = 0;
    double k = 0.0;
    int phi = 0;
    int mu = 0;
    int sigma = 0;
    int omega = 0;
    // Sum over interior (v, e) of sign(f(v) d_e f(v)).
    int vertex_sign_sum = 0;
    bool bounds_ok = true;
    bool vertex_identity_ok = true;
};

CountRecord counts(const Model& model, const Eigenpair& ep, const Thresholds& thr);

bool surplus_bounds_hold(const Topology& t, int sigma, int omega);

}  // namespace qgl
