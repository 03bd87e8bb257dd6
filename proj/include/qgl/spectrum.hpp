#pragma once

#include <string>
#include <vector>

#include "qgl/graph.hpp"
#include "qgl/secular.hpp"

namespace qgl {

struct Thresholds {
    double eps_ker = 1e-8;
    double eps_val = 1e-6;
    double eps_der = 1e-6;
    double eps_supp = 1e-8;

    static Thresholds from_json(const std::string& text);
    std::string to_json() const;
};

// Validated graph with its topology and bond-scattering matrix.
struct Model {
    MetricGraph graph;
    Topology topo;
    RMatrix S;

    explicit Model(const MetricGraph& g);
    int E() const { return topo.edges; }
    int V() const { return topo.vertices; }
    int betti() const { return topo.betti; }
    double L() const { return topo.total_length; }
};

struct CountingFrame {
    double k = 0.0;
    RVector eigenphases;
    double N = 0.0;
    double N_osc = 0.0;
    long count() const;
};

CountingFrame counting(const Model& model, double k);
long count_below(const Model& model, double k);

struct SpectrumStub {
    double k = 0.0;
    long n = 0;
    int multiplicity = 1;
};

struct LocateOptions {
    long count = 0;
    double kmax = 0.0;
    int workers = 1;
};

// Smallest k at which counting starts; N(k_start) must be zero.
double spectrum_start(const Model& model);
// Width of the fixed localization windows.
double window_width(const Model& model);

// Eigenvalues in (k_lo, k_hi] given the audited counts at both ends.
std::vector<SpectrumStub> locate_window(const Model& model, double k_lo, double k_hi, long n_lo, long n_hi);
std::vector<SpectrumStub> locate_spectrum(const Model& model, const LocateOptions& opts);

// Deterministic window-by-window enumeration of the spectrum in batches.
class SpectrumStream {
public:
    SpectrumStream(const Model& model, int workers, int windows_per_batch = 64);
    std::vector<SpectrumStub> next_batch();
    double position() const { return k_; }

private:
    const Model& model_;
    int workers_;
    int batch_;
    double k_;
    long n_;
    long window_index_ = 0;
};

struct Flags {
    bool simple = false;
    bool property_I = false;
    bool property_II = false;
    bool generic = false;
    bool morse = false;
    bool loop_supported = false;
    int loop_edge = -1;
    bool borderline = false;
};

struct Eigenpair {
    double k = 0.0;
    long n = 0;
    int multiplicity = 1;
    RVector kappa;
    CVector a;
    // Indexed by directed edge d: value at the origin of d and canonical outgoing derivative.
    RVector f;
    RVector df;
    double sigma_min = 0.0;
    double sigma_second = 0.0;
    double residual = 0.0;
    double trace_imag = 0.0;
    Flags flags;
};

Eigenpair eigenfunction_at(const Model& model, double k, const Thresholds& thr, long n = 0);
Flags classify(const Model& model, const Eigenpair& ep, const Thresholds& thr);

// Number of loops whose loop-supported mode is an eigenfunction at k (e^{i k l_e} = 1).
int loop_modes_at(const Model& model, double k);

struct SpectrumRecord {
    long n = 0;
    double k = 0.0;
    bool simple = false;
    bool generic = false;
    bool loop_supported = false;
};

// Classifies every located index; clusters split into loop modes first, then non-simple indices.
std::vector<SpectrumRecord> classify_spectrum(const Model& model, const std::vector<SpectrumStub>& stubs,
                                              const Thresholds& thr, int workers);

}  // namespace qgl
