#pragma once

#include <vector>

#include "qgl/spectrum.hpp"

namespace qgl {

struct SpanningTree {
    std::vector<int> tree_edges;
    std::vector<int> flux_edges;  // the beta non-tree edges, increasing index
};

// Kruskal in increasing edge order, or decreasing when max_index is set.
SpanningTree spanning_tree(const MetricGraph& g, bool max_index = false);

cplx magnetic_secular_complex(const Model& model, const std::vector<int>& flux_edges, const RVector& kappa,
                              const RVector& alpha);
double magnetic_secular(const Model& model, const std::vector<int>& flux_edges, const RVector& kappa,
                        const RVector& alpha);

struct MagneticFrame {
    SpanningTree tree;
    RMatrix H;
    RVector grad;
    double p = 0.0;
    double F0 = 0.0;
    RVector eigenvalues;  // of -H/p
    int sigma_mag = 0;
    std::vector<int> block_of_flux;
    double block_residual = 0.0;  // max off-block |H| over max |H|
    double fd_noise = 0.0;        // max |H(h) - H(h/2)| before extrapolation
};

int morse_index(const RMatrix& M);
double auxiliary_p(const Model& model, const RVector& kappa);

MagneticFrame hessian_alpha(const Model& model, const RVector& kappa, bool max_index_tree = false);
std::vector<int> local_indices(const Model& model, const MagneticFrame& frame);

}  // namespace qgl
