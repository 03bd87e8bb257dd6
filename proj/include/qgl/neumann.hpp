#pragma once

#include <vector>

#include "qgl/counts.hpp"
#include "qgl/spectrum.hpp"

namespace qgl {

struct NeumannPoint {
    int edge = 0;
    double position = 0.0;  // arc length from the tail of the edge
};

enum class DomainKind { Star, Segment, General };

struct NeumannDomain {
    DomainKind kind = DomainKind::General;
    int vertex = -1;  // star centre
    double length = 0.0;
    int N = -1;       // spectral position, -1 when not available
    double rho = 0.0; // k * length / pi
};

struct NeumannPartition {
    double k = 0.0;
    bool star_regime = false;
    std::vector<NeumannPoint> points;
    std::vector<NeumannDomain> domains;
};

// First critical point along directed edge d, in canonical units, in (0, pi).
double first_neumann_phase(double f, double df, bool boundary_origin);

NeumannPartition partition(const Model& model, const Eigenpair& ep, const Thresholds& thr);

struct StarObservables {
    int vertex = -1;
    int N = 0;
    double rho = 0.0;
    bool bounds_ok = true;
};

StarObservables star_observables(const Model& model, const Eigenpair& ep, int vertex, const Thresholds& thr);

struct IdentityReport {
    int sum_N = 0;
    int expected_sum_N = 0;
    double sum_rho = 0.0;
    double expected_sum_rho = 0.0;
    bool ok = false;
};

IdentityReport local_global_check(const Model& model, const Eigenpair& ep, const NeumannPartition& part,
                                  const CountRecord& rec);

}  // namespace qgl
