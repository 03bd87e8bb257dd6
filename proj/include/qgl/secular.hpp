#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgl/graph.hpp"

namespace qgl {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.141592653589793238462643383279;

// r_0 embedding of R/2piZ into [0, 2pi).
double reduce_angle(double x);
RVector reduce(const RVector& kappa);
// kappa_e = k * l_e for every edge.
RVector torus_point(const MetricGraph& g, double k);

RMatrix bond_scattering(const MetricGraph& g);
CMatrix evolution_matrix(const MetricGraph& g, const RMatrix& S, const RVector& kappa);
CMatrix evolution_matrix(const MetricGraph& g, const RVector& kappa);

// Branch det(U)^(-1/2) = i^(beta-1) exp(-i sum kappa).
cplx det_root_inverse(int betti, const RVector& kappa);

// Phase-corrected det(1 - U), computed by LU; real up to rounding.
cplx secular_complex(const MetricGraph& g, const RMatrix& S, int betti, const RVector& kappa);
double secular_value(const MetricGraph& g, const RMatrix& S, int betti, const RVector& kappa);

struct SecularEvaluation {
    double F = 0.0;
    double F_imag = 0.0;
    RVector gradF;
    double p = 0.0;
    RVector m;
    bool has_weights = false;
    RVector eigenphases;
    int kernel_dim = 0;
};

SecularEvaluation evaluate(const MetricGraph& g, int betti, const RVector& kappa, double eps_ker = 1e-8);

// General adjugate through the singular value decomposition.
CMatrix adjugate(const CMatrix& M);
// adj(1 - U) for unitary U from its Schur (eigen) decomposition.
CMatrix adjugate_one_minus_unitary(const CMatrix& U);

RVector inversion(const RVector& kappa);
RVector bridge_extension(const RVector& kappa, int bridge);

struct BridgeFactorization {
    int bridge = -1;
    int side_vertex = -1;
    std::vector<int> edges1;
    std::vector<int> edges2;
    cplx g1;
    cplx g2;
    cplx phase1;  // exp(i Theta_1)
    cplx phase2;  // exp(i Theta_2)
    cplx det_d1;
    cplx det_d2;
    double F = 0.0;  // reconstructed secular function
};

// Gamma_1 is the side of the bridge containing side_vertex (default: the bridge tail).
BridgeFactorization bridge_factorization(const MetricGraph& g, int betti, int bridge, const RVector& kappa,
                                         int side_vertex = -1);
RVector cut_flip(const MetricGraph& g, int betti, const RVector& kappa, int vertex, int bridge);

// Orthogonal change of basis: loop antisymmetric vectors, loop symmetric vectors, other directed edges.
RMatrix loop_basis(const MetricGraph& g);
cplx loop_reduced_determinant(const MetricGraph& g, const RVector& kappa);

struct ManifoldPoint {
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
    std::string component;
};

std::vector<ManifoldPoint> sample_manifold(const MetricGraph& g, int betti, int resolution);

}  // namespace qgl
