#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qgl/spectrum.hpp"

namespace qgl {

struct ExperimentOptions {
    long K_target = 1000;
    std::uint64_t seed = 0;  // recorded only; lengths are fixed by the caller
    Thresholds thresholds;
    int workers = 0;
    bool neumann = true;
    bool magnetic = false;
    double exclusion_limit = 0.05;
};

struct EigenRecord {
    long n = 0;
    double k = 0.0;
    int phi = 0;
    int mu = 0;
    int sigma = 0;
    int omega = 0;
    bool star_regime = false;
    std::vector<int> N_v;        // per interior vertex, star regime only
    std::vector<double> rho_v;
    int sigma_mag = -1;          // -1 when not computed or excluded
    std::vector<int> iota;
};

struct ExclusionTally {
    long raw = 0;
    long generic = 0;
    long loop_supported = 0;
    long non_simple = 0;
    long not_generic = 0;
    long borderline = 0;
    long degenerate_hessian = 0;
    long non_loop_exclusions() const { return non_simple + not_generic + borderline; }
};

struct ViolationTally {
    long surplus_bounds = 0;
    long vertex_identity = 0;
    long star_bounds = 0;
    long local_global = 0;
    long magnetic_mismatch = 0;
    long iota_sum = 0;
    long friedlander = 0;
    long total() const {
        return surplus_bounds + vertex_identity + star_bounds + local_global + magnetic_mismatch + iota_sum +
               friedlander;
    }
};

struct SurplusDistribution {
    Topology topo;
    long K = 0;
    long N_raw = 0;
    std::vector<EigenRecord> records;
    ExclusionTally tally;
    ViolationTally violations;
    std::map<std::pair<int, int>, long> joint;
    std::map<int, long> sigma_hist;
    std::map<int, long> omega_hist;
    std::vector<std::map<int, long>> N_v_hist;   // indexed like topo.interior
    double rho_bin = 0.01;
    std::vector<std::map<long, long>> rho_v_hist;
    std::vector<std::map<int, long>> iota_hist;  // per block
    long star_samples = 0;
    double loop_density = 0.0;
    double mean_sigma = 0.0;
    double var_sigma = 0.0;
    double mean_omega = 0.0;
    double var_omega = 0.0;
};

SurplusDistribution run_experiment(const Model& model, const ExperimentOptions& opts);

struct CellResidual {
    int sigma = 0;
    int omega = 0;
    double p = 0.0;
    double p_mirror = 0.0;
    double tolerance = 0.0;
};

struct SymmetryReport {
    std::vector<CellResidual> cells;
    double max_excess = 0.0;  // max over cells of |p - p_mirror| - tolerance
    bool joint_ok = false;
    double mean_sigma = 0.0;
    double expected_sigma = 0.0;
    double sigma_tolerance = 0.0;
    bool mean_sigma_ok = false;
    double mean_omega = 0.0;
    double expected_omega = 0.0;
    double omega_tolerance = 0.0;
    bool mean_omega_ok = false;
    bool vertex_ok = true;
    bool ok() const { return joint_ok && mean_sigma_ok && mean_omega_ok && vertex_ok; }
};

SymmetryReport symmetry_test(const SurplusDistribution& dist, double slack = 0.005);

enum class BinomialKind { NodalSurplus, NeumannSurplus };

struct BinomialReport {
    BinomialKind kind = BinomialKind::NodalSurplus;
    int trials = 0;
    int shift = 0;  // observed value + shift ~ Bin(trials, 1/2)
    std::vector<double> observed;
    std::vector<double> expected;
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 0.0;
};

BinomialReport binomial_test(const SurplusDistribution& dist, BinomialKind kind);

double chi_square_sf(double x, int dof);
// Kolmogorov-Smirnov distance of the standardized sample to the standard normal.
double ks_normal_distance(const std::vector<int>& sample, double mean, double sd);

struct GaussianRow {
    int betti = 0;
    long K = 0;
    double var_sigma = 0.0;
    double var_expected = 0.0;
    double var_tolerance = 0.0;
    bool var_ok = false;
    double ks = 0.0;
};

std::vector<GaussianRow> gaussian_limit_scan(const std::vector<Model>& family, long K, int workers,
                                             const Thresholds& thr = {});
bool ks_strictly_decreasing(const std::vector<GaussianRow>& rows);

// Fraction of the first N_raw indices whose eigenspace holds a loop-supported mode.
double loop_index_density(const Model& model, long N_raw, const Thresholds& thr, int workers);

// Fraction of signatures from the first tenth of the sample that recur later.
double signature_recurrence(const SurplusDistribution& dist);

std::string summary_json(const SurplusDistribution& dist, const std::string& extra_json = "{}");

}  // namespace qgl
