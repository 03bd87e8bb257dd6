#include "qgl/secular.hpp"

#include <algorithm>
#include <cmath>

#include "qgl/errors.hpp"

namespace qgl {

namespace {

const cplx I1(0.0, 1.0);

// Products prod_{i != j} w_i for every j, without division.
CVector leave_one_out_products(const CVector& w) {
    const Eigen::Index n = w.size();
    CVector prefix(n + 1), out(n);
    prefix(0) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) * w(i);
    cplx suffix = 1.0;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        out(i) = prefix(i) * suffix;
        suffix *= w(i);
    }
    return out;
}

}  // namespace

double reduce_angle(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

RVector reduce(const RVector& kappa) { return kappa.unaryExpr([](double x) { return reduce_angle(x); }); }

RVector torus_point(const MetricGraph& g, double k) {
    RVector kappa(g.num_edges());
    for (int j = 0; j < g.num_edges(); ++j) kappa(j) = k * g.edges[j].length;
    return kappa;
}

RMatrix bond_scattering(const MetricGraph& g) {
    const int n = g.num_directed();
    const auto deg = g.degrees();
    RMatrix S = RMatrix::Zero(n, n);
    for (int d = 0; d < n; ++d) {
        const int v = g.origin(d);
        for (int din = 0; din < n; ++din) {
            if (g.terminus(din) != v) continue;
            S(d, din) = 2.0 / deg[v] - (din == MetricGraph::reverse(d) ? 1.0 : 0.0);
        }
    }
    return S;
}

CMatrix evolution_matrix(const MetricGraph& g, const RMatrix& S, const RVector& kappa) {
    const int n = g.num_directed();
    CMatrix U(n, n);
    for (int d = 0; d < n; ++d) {
        const cplx z = std::polar(1.0, kappa(MetricGraph::edge_of(d)));
        U.row(d) = z * S.row(d).cast<cplx>();
    }
    return U;
}

CMatrix evolution_matrix(const MetricGraph& g, const RVector& kappa) {
    return evolution_matrix(g, bond_scattering(g), kappa);
}

cplx det_root_inverse(int betti, const RVector& kappa) {
    return std::polar(1.0, 0.5 * kPi * (betti - 1) - kappa.sum());
}

cplx secular_complex(const MetricGraph& g, const RMatrix& S, int betti, const RVector& kappa) {
    const CMatrix U = evolution_matrix(g, S, kappa);
    const CMatrix A = CMatrix::Identity(U.rows(), U.cols()) - U;
    return det_root_inverse(betti, kappa) * A.partialPivLu().determinant();
}

double secular_value(const MetricGraph& g, const RMatrix& S, int betti, const RVector& kappa) {
    return secular_complex(g, S, betti, kappa).real();
}

CMatrix adjugate(const CMatrix& M) {
    const Eigen::Index n = M.rows();
    if (n != M.cols()) fail("InvalidArgument", "adjugate needs a square matrix");
    if (n == 0) return M;
    if (n == 1) return CMatrix::Ones(1, 1);
    Eigen::JacobiSVD<CMatrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const CVector sv = svd.singularValues().cast<cplx>();
    const CVector cof = leave_one_out_products(sv);
    const cplx du = svd.matrixU().partialPivLu().determinant();
    const cplx dv = svd.matrixV().adjoint().partialPivLu().determinant();
    return (du * dv) * svd.matrixV() * cof.asDiagonal() * svd.matrixU().adjoint();
}

CMatrix adjugate_one_minus_unitary(const CMatrix& U) {
    Eigen::ComplexSchur<CMatrix> schur(U);
    const CMatrix& Q = schur.matrixU();
    const CVector w = CVector::Ones(U.rows()) - schur.matrixT().diagonal();
    return Q * leave_one_out_products(w).asDiagonal() * Q.adjoint();
}

SecularEvaluation evaluate(const MetricGraph& g, int betti, const RVector& kappa, double eps_ker) {
    const int n = g.num_directed();
    const int E = g.num_edges();
    const CMatrix U = evolution_matrix(g, kappa);
    Eigen::ComplexSchur<CMatrix> schur(U);
    const CMatrix& Q = schur.matrixU();
    const CVector lambda = schur.matrixT().diagonal();
    const CVector w = CVector::Ones(n) - lambda;
    const CVector cof = leave_one_out_products(w);
    const CMatrix adj = Q * cof.asDiagonal() * Q.adjoint();

    cplx det = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) det *= w(i);
    const cplx phase = det_root_inverse(betti, kappa);

    SecularEvaluation out;
    out.F = (phase * det).real();
    out.F_imag = (phase * det).imag();
    out.p = (-I1 * phase * adj.trace()).real();

    const CMatrix UA = U * adj;
    out.gradF.resize(E);
    for (int e = 0; e < E; ++e) {
        const cplx tr = UA(2 * e, 2 * e) + UA(2 * e + 1, 2 * e + 1);
        out.gradF(e) = (phase * (-I1) * (tr + det)).real();
    }

    out.eigenphases.resize(n);
    Eigen::Index nearest = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        out.eigenphases(i) = reduce_angle(std::arg(lambda(i)));
        if (std::abs(w(i)) < eps_ker) ++out.kernel_dim;
        if (std::abs(w(i)) < std::abs(w(nearest))) nearest = i;
    }
    if (out.kernel_dim == 1) {
        const CVector a = Q.col(nearest).normalized();
        out.m.resize(E);
        for (int e = 0; e < E; ++e) out.m(e) = std::norm(a(2 * e)) + std::norm(a(2 * e + 1));
        out.has_weights = true;
    }
    return out;
}

RVector inversion(const RVector& kappa) { return reduce(-kappa); }

RVector bridge_extension(const RVector& kappa, int bridge) {
    RVector out = kappa;
    out(bridge) += kPi;
    return reduce(out);
}

BridgeFactorization bridge_factorization(const MetricGraph& g, int betti, int bridge, const RVector& kappa,
                                         int side_vertex) {
    const Edge& be = g.edges[bridge];
    if (side_vertex < 0) side_vertex = be.tail;
    if (side_vertex != be.tail && side_vertex != be.head)
        fail("InvalidArgument", "vertex " + std::to_string(side_vertex) + " is not an endpoint of edge " +
                                    std::to_string(bridge));
    const auto comp = components_without(g, bridge);
    if (comp[be.tail] == comp[be.head]) fail("NotABridge", "edge " + std::to_string(bridge) + " is not a bridge");
    const int c1 = comp[side_vertex];

    BridgeFactorization out;
    out.bridge = bridge;
    out.side_vertex = side_vertex;
    for (int j = 0; j < g.num_edges(); ++j) {
        if (j == bridge) continue;
        (comp[g.edges[j].tail] == c1 ? out.edges1 : out.edges2).push_back(j);
    }
    // Directed bridge e runs from Gamma_1 to Gamma_2.
    const int de = (side_vertex == be.tail) ? 2 * bridge : 2 * bridge + 1;
    const int dr = MetricGraph::reverse(de);

    std::vector<int> order;
    for (int j : out.edges1) order.insert(order.end(), {2 * j, 2 * j + 1});
    const int n1 = static_cast<int>(order.size());
    order.push_back(de);
    order.push_back(dr);
    for (int j : out.edges2) order.insert(order.end(), {2 * j, 2 * j + 1});
    const int n2 = static_cast<int>(order.size()) - n1 - 2;

    const RMatrix S = bond_scattering(g);
    RMatrix P(order.size(), order.size());
    for (size_t a = 0; a < order.size(); ++a)
        for (size_t b = 0; b < order.size(); ++b) P(a, b) = S(order[a], order[b]);

    auto side = [&](int offset, int size, int row_in, int col_in, double r, cplx& det_d, cplx& phase) {
        CVector z(size);
        for (int a = 0; a < size; ++a) z(a) = std::polar(1.0, kappa(MetricGraph::edge_of(order[offset + a])));
        const CMatrix Si = P.block(offset, offset, size, size).cast<cplx>();
        const CVector t = P.block(offset, col_in, size, 1).cast<cplx>();
        const Eigen::RowVectorXcd tp = P.block(row_in, offset, 1, size).cast<cplx>();
        const CMatrix D = z.asDiagonal() * Si - CMatrix::Identity(size, size);
        det_d = size == 0 ? cplx(1.0) : D.partialPivLu().determinant();
        if (size == 0) {
            phase = r;
            return;
        }
        const CMatrix Dp = D.completeOrthogonalDecomposition().pseudoInverse();
        phase = r - (tp * Dp * z.asDiagonal() * t)(0, 0);
    };
    // Gamma_1 feeds from the reversed bridge and emits into the bridge; Gamma_2 the opposite.
    side(0, n1, n1, n1 + 1, P(n1, n1 + 1), out.det_d1, out.phase1);
    side(n1 + 2, n2, n1 + 1, n1, P(n1 + 1, n1), out.det_d2, out.phase2);

    double sum1 = 0.0, sum2 = 0.0;
    for (int j : out.edges1) sum1 += kappa(j);
    for (int j : out.edges2) sum2 += kappa(j);
    out.g1 = std::polar(1.0, 0.5 * kPi * (betti - 1) - sum1) * out.det_d1;
    out.g2 = std::polar(1.0, -sum2) * out.det_d2;
    const double ke = kappa(bridge);
    const cplx f = out.g1 * out.g2 * std::polar(1.0, -ke) *
                   (1.0 - std::polar(1.0, 2.0 * ke) * out.phase1 * out.phase2);
    out.F = f.real();
    constexpr double kUndefined = 1e-12;
    if (std::abs(out.det_d1) < kUndefined) fail("UndefinedPhase", "g_1 vanishes at this torus point");
    if (std::abs(out.det_d2) < kUndefined) fail("UndefinedPhase", "g_2 vanishes at this torus point");
    return out;
}

RVector cut_flip(const MetricGraph& g, int betti, const RVector& kappa, int vertex, int bridge) {
    const BridgeFactorization bf = bridge_factorization(g, betti, bridge, kappa, vertex);
    RVector out = kappa;
    out(bridge) = kappa(bridge) + std::arg(bf.phase2);
    for (int j : bf.edges2) out(j) = -kappa(j);
    return reduce(out);
}

RMatrix loop_basis(const MetricGraph& g) {
    const int n = g.num_directed();
    std::vector<int> loops;
    for (int j = 0; j < g.num_edges(); ++j)
        if (g.is_loop(j)) loops.push_back(j);
    RMatrix O = RMatrix::Zero(n, n);
    const double h = 1.0 / std::sqrt(2.0);
    int row = 0;
    for (int j : loops) {
        O(row, 2 * j) = h;
        O(row++, 2 * j + 1) = -h;
    }
    for (int j : loops) {
        O(row, 2 * j) = h;
        O(row++, 2 * j + 1) = h;
    }
    for (int j = 0; j < g.num_edges(); ++j) {
        if (g.is_loop(j)) continue;
        O(row++, 2 * j) = 1.0;
        O(row++, 2 * j + 1) = 1.0;
    }
    return O;
}

cplx loop_reduced_determinant(const MetricGraph& g, const RVector& kappa) {
    int nl = 0;
    for (int j = 0; j < g.num_edges(); ++j) nl += g.is_loop(j) ? 1 : 0;
    if (nl == 0) fail("NoLoops", "graph has no loops");
    const RMatrix O = loop_basis(g);
    const CMatrix U = evolution_matrix(g, kappa);
    const CMatrix R = O.cast<cplx>() * U * O.transpose().cast<cplx>();
    const int n0 = g.num_directed() - nl;
    const CMatrix U0 = R.bottomRightCorner(n0, n0);
    return (CMatrix::Identity(n0, n0) - U0).partialPivLu().determinant();
}

namespace {

// Real function whose zero set is the main factor Z_0 (equals F when there are no loops).
struct MainFactor {
    const MetricGraph& g;
    RMatrix S;
    int betti;
    std::vector<int> loops;

    double operator()(const RVector& kappa) const {
        if (loops.empty()) return secular_value(g, S, betti, kappa);
        cplx phase = det_root_inverse(betti, kappa);
        for (int j : loops) phase *= -I1 * std::polar(1.0, 0.5 * kappa(j));
        return (phase * loop_reduced_determinant(g, kappa)).real();
    }
};

}  // namespace

std::vector<ManifoldPoint> sample_manifold(const MetricGraph& g, int betti, int resolution) {
    if (g.num_edges() != 3) fail("UnsupportedDimension", "manifold sampling needs E = 3, got " +
                                                              std::to_string(g.num_edges()));
    if (resolution < 2) fail("InvalidArgument", "resolution must be at least 2");
    MainFactor R{g, bond_scattering(g), betti, {}};
    for (int j = 0; j < 3; ++j)
        if (g.is_loop(j)) R.loops.push_back(j);

    const double h = kTwoPi / resolution;
    std::vector<ManifoldPoint> cloud;
    auto emit = [&](const RVector& x, const std::string& tag) {
        const RVector r = reduce(x);
        cloud.push_back({r(0), r(1), r(2), tag});
    };

    for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (int i = 0; i < resolution; ++i) {
            for (int j = 0; j < resolution; ++j) {
                RVector x(3);
                x(a1) = i * h;
                x(a2) = j * h;
                x(axis) = 0.0;
                double prev = R(x);
                for (int s = 0; s < resolution; ++s) {
                    RVector lo = x, hi = x;
                    lo(axis) = s * h;
                    hi(axis) = (s + 1) * h;
                    const double flo = prev;
                    const double fhi = R(hi);
                    prev = fhi;
                    if (flo == 0.0) {
                        emit(lo, "regular");
                        continue;
                    }
                    if ((flo < 0.0) == (fhi < 0.0) || fhi == 0.0) continue;
                    double a = lo(axis), b = hi(axis), fa = flo;
                    for (int it = 0; it < 80 && b - a > 1e-15; ++it) {
                        RVector mid = x;
                        mid(axis) = 0.5 * (a + b);
                        const double fm = R(mid);
                        if ((fm < 0.0) == (fa < 0.0)) {
                            a = mid(axis);
                            fa = fm;
                        } else {
                            b = mid(axis);
                        }
                    }
                    RVector root = x;
                    root(axis) = 0.5 * (a + b);
                    emit(root, "regular");
                }
            }
        }
    }

    for (int loop : R.loops) {
        const int a1 = (loop + 1) % 3, a2 = (loop + 2) % 3;
        for (int i = 0; i < resolution; ++i) {
            for (int j = 0; j < resolution; ++j) {
                RVector x(3);
                x(loop) = 0.0;
                x(a1) = i * h;
                x(a2) = j * h;
                if (std::abs(loop_reduced_determinant(g, x)) > 1e-6) emit(x, "loop:" + std::to_string(loop));
            }
        }
    }
    return cloud;
}

}  // namespace qgl
