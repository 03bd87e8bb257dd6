#include "qgl/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "qgl/errors.hpp"
#include "qgl/parallel.hpp"

namespace qgl {

Thresholds Thresholds::from_json(const std::string& text) {
    Thresholds t;
    if (text.empty()) return t;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        fail("InvalidThresholds", ex.what());
    }
    t.eps_ker = j.value("eps_ker", t.eps_ker);
    t.eps_val = j.value("eps_val", t.eps_val);
    t.eps_der = j.value("eps_der", t.eps_der);
    t.eps_supp = j.value("eps_supp", t.eps_supp);
    return t;
}

std::string Thresholds::to_json() const {
    nlohmann::json j;
    j["eps_ker"] = eps_ker;
    j["eps_val"] = eps_val;
    j["eps_der"] = eps_der;
    j["eps_supp"] = eps_supp;
    return j.dump();
}

Model::Model(const MetricGraph& g) : graph(g), topo(validate(g)), S(bond_scattering(g)) {}

long CountingFrame::count() const { return std::lround(N); }

CountingFrame counting(const Model& model, double k) {
    const RVector kappa = torus_point(model.graph, k);
    const CMatrix U = evolution_matrix(model.graph, model.S, kappa);
    Eigen::ComplexSchur<CMatrix> schur(U, false);
    const CVector lambda = schur.matrixT().diagonal();
    CountingFrame cf;
    cf.k = k;
    cf.eigenphases.resize(lambda.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        cf.eigenphases(i) = reduce_angle(std::arg(lambda(i)));
        sum += cf.eigenphases(i);
    }
    const double weyl = model.L() * k / kPi;
    cf.N = weyl + 0.5 * (model.E() + model.V()) - 1.0 - sum / kTwoPi;
    cf.N_osc = cf.N - weyl;
    return cf;
}

long count_below(const Model& model, double k) { return counting(model, k).count(); }

double spectrum_start(const Model& model) { return 1e-7 / std::max(1.0, model.topo.max_length); }

double window_width(const Model& model) { return 16.0 * kPi / model.L(); }

namespace {

double secular_at(const Model& model, double k) {
    return secular_value(model.graph, model.S, model.betti(), torus_point(model.graph, k));
}

double bracket_tolerance(double k) { return 1e-12 * std::max(1.0, k); }

double refine_simple(const Model& model, double a, double b, long n_a) {
    double fa = secular_at(model, a);
    double fb = secular_at(model, b);
    if (fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0)) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            const double fm = secular_at(model, mid);
            if (fm == 0.0) return mid;
            if ((fm < 0.0) == (fa < 0.0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        return 0.5 * (a + b);
    }
    // Sign information unusable: bisect on the counting function instead.
    while (b - a > bracket_tolerance(b)) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (count_below(model, mid) > n_a)
            b = mid;
        else
            a = mid;
    }
    return 0.5 * (a + b);
}

void locate_recursive(const Model& model, double a, double b, long na, long nb, std::vector<SpectrumStub>& out) {
    if (nb < na)
        fail("BracketAuditFailed", "counting decreased on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    if (nb == na) return;
    if (nb - na == 1) {
        out.push_back({refine_simple(model, a, b, na), na + 1, 1});
        return;
    }
    const double mid = 0.5 * (a + b);
    if (b - a <= bracket_tolerance(b) || mid <= a || mid >= b) {
        const int mult = static_cast<int>(nb - na);
        for (int j = 0; j < mult; ++j) out.push_back({mid, na + 1 + j, mult});
        return;
    }
    const long nm = count_below(model, mid);
    if (nm < na || nm > nb)
        fail("BracketAuditFailed", "count " + std::to_string(nm) + " at k=" + std::to_string(mid) +
                                       " outside [" + std::to_string(na) + ", " + std::to_string(nb) + "]");
    locate_recursive(model, a, mid, na, nm, out);
    locate_recursive(model, mid, b, nm, nb, out);
}

}  // namespace

std::vector<SpectrumStub> locate_window(const Model& model, double k_lo, double k_hi, long n_lo, long n_hi) {
    std::vector<SpectrumStub> out;
    locate_recursive(model, k_lo, k_hi, n_lo, n_hi, out);
    long expected = n_lo;
    for (const auto& s : out)
        if (s.n != ++expected) fail("BracketAuditFailed", "index gap in window");
    if (expected != n_hi) fail("BracketAuditFailed", "window lost eigenvalues");
    return out;
}

SpectrumStream::SpectrumStream(const Model& model, int workers, int windows_per_batch)
    : model_(model), workers_(workers), batch_(windows_per_batch), k_(spectrum_start(model)), n_(0) {
    const long n0 = count_below(model_, k_);
    if (n0 != 0) fail("BracketAuditFailed", "nonzero count " + std::to_string(n0) + " at spectrum start");
}

std::vector<SpectrumStub> SpectrumStream::next_batch() {
    const double w = window_width(model_);
    const double start = spectrum_start(model_);
    std::vector<double> ends(batch_ + 1);
    ends[0] = k_;
    for (int i = 1; i <= batch_; ++i) ends[i] = start + static_cast<double>(window_index_ + i) * w;
    std::vector<long> counts(batch_ + 1);
    counts[0] = n_;
    parallel_for(batch_, workers_, [&](std::size_t i) { counts[i + 1] = count_below(model_, ends[i + 1]); });
    std::vector<std::vector<SpectrumStub>> parts(batch_);
    parallel_for(batch_, workers_, [&](std::size_t i) {
        parts[i] = locate_window(model_, ends[i], ends[i + 1], counts[i], counts[i + 1]);
    });
    std::vector<SpectrumStub> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    k_ = ends[batch_];
    n_ = counts[batch_];
    window_index_ += batch_;
    return out;
}

std::vector<SpectrumStub> locate_spectrum(const Model& model, const LocateOptions& opts) {
    if (opts.count <= 0 && opts.kmax <= 0.0) fail("InvalidArgument", "need a positive count or kmax");
    const int workers = resolve_workers(opts.workers);
    std::vector<SpectrumStub> out;
    if (opts.count > 0) {
        const int windows = static_cast<int>(std::min<long>(64, opts.count / 16 + 2));
        SpectrumStream stream(model, workers, windows);
        while (out.empty() || out.back().n < opts.count) {
            auto part = stream.next_batch();
            out.insert(out.end(), part.begin(), part.end());
        }
        out.erase(std::remove_if(out.begin(), out.end(), [&](const SpectrumStub& s) { return s.n > opts.count; }),
                  out.end());
        return out;
    }
    const double start = spectrum_start(model);
    const double w = window_width(model);
    const long windows = std::max(1L, static_cast<long>(std::ceil((opts.kmax - start) / w)));
    std::vector<double> ends(windows + 1);
    for (long i = 0; i <= windows; ++i) ends[i] = std::min(opts.kmax, start + static_cast<double>(i) * w);
    std::vector<long> counts(windows + 1);
    parallel_for(windows + 1, workers, [&](std::size_t i) { counts[i] = count_below(model, ends[i]); });
    if (counts[0] != 0) fail("BracketAuditFailed", "nonzero count at spectrum start");
    std::vector<std::vector<SpectrumStub>> parts(windows);
    parallel_for(windows, workers, [&](std::size_t i) {
        parts[i] = locate_window(model, ends[i], ends[i + 1], counts[i], counts[i + 1]);
    });
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

Eigenpair eigenfunction_at(const Model& model, double k, const Thresholds& thr, long n) {
    const MetricGraph& g = model.graph;
    const int nd = g.num_directed();
    Eigenpair ep;
    ep.k = k;
    ep.n = n;
    ep.kappa = torus_point(g, k);
    const CMatrix U = evolution_matrix(g, model.S, ep.kappa);
    const CMatrix A = CMatrix::Identity(nd, nd) - U;
    Eigen::JacobiSVD<CMatrix> svd(A, Eigen::ComputeFullV);
    const RVector sv = svd.singularValues();
    ep.sigma_min = sv(nd - 1);
    ep.sigma_second = sv(nd - 2);
    if (ep.sigma_min > thr.eps_ker)
        fail("NoKernel", "smallest singular value " + std::to_string(ep.sigma_min) + " at k=" + std::to_string(k));
    if (ep.sigma_second < thr.eps_ker)
        fail("NonSimple", "second singular value " + std::to_string(ep.sigma_second) + " at k=" + std::to_string(k));
    CVector a = svd.matrixV().col(nd - 1).normalized();

    CVector f(nd), df(nd);
    const cplx I1(0.0, 1.0);
    auto fill_trace = [&] {
        for (int d = 0; d < nd; ++d) {
            const cplx out = a(d) * std::polar(1.0, -ep.kappa(MetricGraph::edge_of(d)));
            const cplx in = a(MetricGraph::reverse(d));
            f(d) = out + in;
            df(d) = I1 * (out - in);
        }
    };
    fill_trace();
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (int d = 0; d < nd; ++d) {
        if (std::abs(f(d)) > best_abs) {
            best_abs = std::abs(f(d));
            best = d;
        }
        if (std::abs(df(d)) > best_abs) {
            best_abs = std::abs(df(d));
            best = nd + d;
        }
    }
    const cplx pivot = best < nd ? f(best) : df(best - nd);
    a *= std::conj(pivot) / std::abs(pivot);
    fill_trace();

    ep.trace_imag = std::max(f.imag().cwiseAbs().maxCoeff(), df.imag().cwiseAbs().maxCoeff());
    ep.f = f.real();
    ep.df = df.real();
    for (int d = 0; d < nd; ++d) {
        double lead = 0.0;
        if (std::abs(ep.f(d)) > 1e-8)
            lead = ep.f(d);
        else if (std::abs(ep.df(d)) > 1e-8)
            lead = ep.df(d);
        if (lead == 0.0) continue;
        if (lead < 0.0) {
            a = -a;
            ep.f = -ep.f;
            ep.df = -ep.df;
        }
        break;
    }
    ep.a = a;
    ep.residual = (A * a).norm();
    ep.flags = classify(model, ep, thr);
    return ep;
}

namespace {

bool near_threshold(double x, double eps) { return x >= eps / 10.0 && x <= eps * 10.0; }

}  // namespace

Flags classify(const Model& model, const Eigenpair& ep, const Thresholds& thr) {
    const MetricGraph& g = model.graph;
    const int nd = g.num_directed();
    Flags fl;
    fl.simple = ep.multiplicity == 1 && ep.sigma_second > thr.eps_ker && ep.sigma_min <= thr.eps_ker;

    double min_val = std::numeric_limits<double>::infinity();
    double min_der = std::numeric_limits<double>::infinity();
    for (int d = 0; d < nd; ++d) {
        min_val = std::min(min_val, std::abs(ep.f(d)));
        if (!model.topo.is_boundary(g.origin(d))) min_der = std::min(min_der, std::abs(ep.df(d)));
    }
    fl.property_I = min_val > thr.eps_val;
    fl.property_II = min_der > thr.eps_der;

    double min_outside = std::numeric_limits<double>::infinity();
    for (int e : model.topo.loops) {
        const double on_loop = std::norm(ep.a(2 * e)) + std::norm(ep.a(2 * e + 1));
        const double outside = std::max(0.0, ep.a.squaredNorm() - on_loop);
        min_outside = std::min(min_outside, outside);
        const bool resonant = std::abs(1.0 - std::polar(1.0, ep.kappa(e))) < 1e-9 * std::max(1.0, ep.kappa(e));
        if (outside < thr.eps_supp && resonant) {
            fl.loop_supported = true;
            fl.loop_edge = e;
        }
    }

    fl.morse = true;
    for (int e = 0; e < g.num_edges(); ++e)
        if (std::norm(ep.a(2 * e)) < thr.eps_supp && std::norm(ep.a(2 * e + 1)) < thr.eps_supp) fl.morse = false;

    fl.generic = fl.simple && fl.property_I && fl.property_II && !fl.loop_supported;
    fl.borderline = near_threshold(ep.sigma_second, thr.eps_ker) || near_threshold(ep.sigma_min, thr.eps_ker) ||
                    near_threshold(min_val, thr.eps_val) ||
                    (std::isfinite(min_der) && near_threshold(min_der, thr.eps_der)) ||
                    (std::isfinite(min_outside) && near_threshold(min_outside, thr.eps_supp));
    return fl;
}

int loop_modes_at(const Model& model, double k) {
    int count = 0;
    for (int e : model.topo.loops) {
        const double kappa = k * model.graph.edges[e].length;
        if (std::abs(1.0 - std::polar(1.0, kappa)) < 1e-9 * std::max(1.0, kappa)) ++count;
    }
    return count;
}

std::vector<SpectrumRecord> classify_spectrum(const Model& model, const std::vector<SpectrumStub>& stubs,
                                              const Thresholds& thr, int workers) {
    std::vector<SpectrumRecord> out(stubs.size());
    parallel_for(stubs.size(), resolve_workers(workers), [&](std::size_t i) {
        const SpectrumStub& s = stubs[i];
        SpectrumRecord r;
        r.n = s.n;
        r.k = s.k;
        if (s.multiplicity > 1) {
            // Position of this index inside its cluster; loop modes take the leading slots.
            std::size_t first = i;
            while (first > 0 && stubs[first - 1].k == s.k) --first;
            const int slot = static_cast<int>(i - first);
            r.loop_supported = slot < loop_modes_at(model, s.k);
        } else {
            try {
                const Eigenpair ep = eigenfunction_at(model, s.k, thr, s.n);
                r.simple = ep.flags.simple;
                r.generic = ep.flags.generic && !ep.flags.borderline;
                r.loop_supported = ep.flags.loop_supported;
            } catch (const Error& ex) {
                if (ex.code() != "NonSimple" && ex.code() != "NoKernel") throw;
                r.loop_supported = loop_modes_at(model, s.k) > 0;
            }
        }
        out[i] = r;
    });
    return out;
}

}  // namespace qgl
