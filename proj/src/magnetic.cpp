#include "qgl/magnetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qgl/errors.hpp"

namespace qgl {

namespace {

constexpr double kStep = 1e-4;
constexpr double kCriticalTol = 1e-6;
// An eigenvalue of -H/p is resolved when it exceeds the finite-difference noise by this factor.
constexpr double kResolveFactor = 100.0;
constexpr double kDegenerateRel = 1e-12;
constexpr double kBlockTol = 1e-6;

int find_root(std::vector<int>& parent, int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
}

// Symmetric eigenvalues; degenerate when the smallest is not resolved above `floor`.
RVector checked_spectrum(const RMatrix& M, double floor, const char* where) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(M, Eigen::EigenvaluesOnly);
    const RVector ev = es.eigenvalues();
    const double big = ev.cwiseAbs().maxCoeff();
    const double small = ev.cwiseAbs().minCoeff();
    if (small <= std::max(floor, kDegenerateRel * big))
        fail("DegenerateHessian", std::string(where) + ": eigenvalue " + std::to_string(small) + " below " +
                                      std::to_string(std::max(floor, kDegenerateRel * big)));
    return ev;
}

}  // namespace

SpanningTree spanning_tree(const MetricGraph& g, bool max_index) {
    std::vector<int> parent(g.vertices);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<int> order(g.num_edges());
    std::iota(order.begin(), order.end(), 0);
    if (max_index) std::reverse(order.begin(), order.end());
    SpanningTree t;
    for (int e : order) {
        const int a = find_root(parent, g.edges[e].tail), b = find_root(parent, g.edges[e].head);
        if (a == b) {
            t.flux_edges.push_back(e);
        } else {
            parent[a] = b;
            t.tree_edges.push_back(e);
        }
    }
    std::sort(t.tree_edges.begin(), t.tree_edges.end());
    std::sort(t.flux_edges.begin(), t.flux_edges.end());
    return t;
}

cplx magnetic_secular_complex(const Model& model, const std::vector<int>& flux_edges, const RVector& kappa,
                              const RVector& alpha) {
    CMatrix U = evolution_matrix(model.graph, model.S, kappa);
    for (size_t j = 0; j < flux_edges.size(); ++j) {
        const int e = flux_edges[j];
        U.row(2 * e) *= std::polar(1.0, alpha(j));
        U.row(2 * e + 1) *= std::polar(1.0, -alpha(j));
    }
    const Eigen::Index n = U.rows();
    return det_root_inverse(model.betti(), kappa) * (CMatrix::Identity(n, n) - U).partialPivLu().determinant();
}

double magnetic_secular(const Model& model, const std::vector<int>& flux_edges, const RVector& kappa,
                        const RVector& alpha) {
    return magnetic_secular_complex(model, flux_edges, kappa, alpha).real();
}

int morse_index(const RMatrix& M) {
    if (M.rows() == 0) return 0;
    Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return static_cast<int>((es.eigenvalues().array() < 0.0).count());
}

double auxiliary_p(const Model& model, const RVector& kappa) {
    const CMatrix U = evolution_matrix(model.graph, model.S, kappa);
    const CMatrix adj = adjugate_one_minus_unitary(U);
    return (cplx(0.0, -1.0) * det_root_inverse(model.betti(), kappa) * adj.trace()).real();
}

MagneticFrame hessian_alpha(const Model& model, const RVector& kappa, bool max_index_tree) {
    MagneticFrame fr;
    fr.tree = spanning_tree(model.graph, max_index_tree);
    const int b = static_cast<int>(fr.tree.flux_edges.size());
    fr.H = RMatrix::Zero(b, b);
    fr.grad = RVector::Zero(b);
    fr.p = auxiliary_p(model, kappa);
    const RVector zero = RVector::Zero(b);
    fr.F0 = magnetic_secular(model, fr.tree.flux_edges, kappa, zero);
    if (b == 0) return fr;

    auto F = [&](const RVector& a) { return magnetic_secular(model, fr.tree.flux_edges, kappa, a); };
    auto unit = [&](int i, double s) {
        RVector a = RVector::Zero(b);
        a(i) = s;
        return a;
    };
    auto stencil = [&](double h, RMatrix& H, RVector& grad) {
        std::vector<double> plus(b), minus(b);
        for (int i = 0; i < b; ++i) {
            plus[i] = F(unit(i, h));
            minus[i] = F(unit(i, -h));
            H(i, i) = (plus[i] - 2.0 * fr.F0 + minus[i]) / (h * h);
            grad(i) = (plus[i] - minus[i]) / (2.0 * h);
        }
        for (int i = 0; i < b; ++i) {
            for (int j = i + 1; j < b; ++j) {
                RVector a = RVector::Zero(b);
                a(i) = h;
                a(j) = h;
                const double fpp = F(a);
                a(j) = -h;
                const double fpm = F(a);
                a(i) = -h;
                const double fmm = F(a);
                a(j) = h;
                const double fmp = F(a);
                H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            }
        }
    };
    RMatrix H1(b, b), H2(b, b);
    RVector g1(b), g2(b);
    stencil(kStep, H1, g1);
    stencil(0.5 * kStep, H2, g2);
    fr.H = (4.0 * H2 - H1) / 3.0;
    fr.H = 0.5 * (fr.H + fr.H.transpose()).eval();
    fr.grad = (4.0 * g2 - g1) / 3.0;
    fr.fd_noise = (H1 - H2).cwiseAbs().maxCoeff();

    const double scale = std::max(fr.H.cwiseAbs().maxCoeff(), std::abs(fr.p));
    if (fr.grad.norm() > kCriticalTol * scale)
        fail("CriticalPointViolated", "|grad_alpha F| = " + std::to_string(fr.grad.norm()) + " vs scale " +
                                          std::to_string(scale));
    if (fr.p == 0.0) fail("DegenerateHessian", "p vanishes");

    const RMatrix M = -fr.H / fr.p;
    fr.eigenvalues = checked_spectrum(M, kResolveFactor * fr.fd_noise / std::abs(fr.p), "hessian");
    fr.sigma_mag = static_cast<int>((fr.eigenvalues.array() < 0.0).count());

    fr.block_of_flux.assign(b, -1);
    for (size_t blk = 0; blk < model.topo.blocks.size(); ++blk)
        for (int e : model.topo.blocks[blk].edges)
            for (int j = 0; j < b; ++j)
                if (fr.tree.flux_edges[j] == e) fr.block_of_flux[j] = static_cast<int>(blk);
    double off = 0.0;
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < b; ++j)
            if (fr.block_of_flux[i] != fr.block_of_flux[j]) off = std::max(off, std::abs(fr.H(i, j)));
    const double hmax = fr.H.cwiseAbs().maxCoeff();
    fr.block_residual = hmax > 0.0 ? off / hmax : 0.0;
    return fr;
}

std::vector<int> local_indices(const Model& model, const MagneticFrame& frame) {
    // Off-block entries at the finite-difference noise level are accepted as zero.
    const double off = frame.block_residual * (frame.H.size() ? frame.H.cwiseAbs().maxCoeff() : 0.0);
    if (frame.block_residual > kBlockTol && off > kResolveFactor * frame.fd_noise)
        fail("BlockStructureViolated", "off-block Hessian ratio " + std::to_string(frame.block_residual));
    std::vector<int> iota;
    for (size_t blk = 0; blk < model.topo.blocks.size(); ++blk) {
        std::vector<int> idx;
        for (size_t j = 0; j < frame.block_of_flux.size(); ++j)
            if (frame.block_of_flux[j] == static_cast<int>(blk)) idx.push_back(static_cast<int>(j));
        RMatrix sub(idx.size(), idx.size());
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t c = 0; c < idx.size(); ++c) sub(a, c) = -frame.H(idx[a], idx[c]) / frame.p;
        const RVector ev = checked_spectrum(sub, kResolveFactor * frame.fd_noise / std::abs(frame.p), "block");
        iota.push_back(static_cast<int>((ev.array() < 0.0).count()));
    }
    return iota;
}

}  // namespace qgl
