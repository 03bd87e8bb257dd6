#include "qgl/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "qgl/counts.hpp"
#include "qgl/errors.hpp"
#include "qgl/magnetic.hpp"
#include "qgl/neumann.hpp"
#include "qgl/parallel.hpp"

namespace qgl {

namespace {

enum class Status { Generic, Loop, NonSimple, NotGeneric, Borderline };

struct IndexResult {
    long n = 0;
    Status status = Status::NotGeneric;
    EigenRecord rec;
    bool degenerate_hessian = false;
    ViolationTally viol;
};

// Every this many generic eigenpairs the full Neumann partition is rebuilt and checked.
constexpr long kPartitionStride = 97;

void process_generic(const Model& model, const Eigenpair& ep, const ExperimentOptions& opts, IndexResult& out) {
    const Thresholds& thr = opts.thresholds;
    const CountRecord cr = counts(model, ep, thr);
    EigenRecord& r = out.rec;
    r.n = ep.n;
    r.k = ep.k;
    r.phi = cr.phi;
    r.mu = cr.mu;
    r.sigma = cr.sigma;
    r.omega = cr.omega;
    if (!cr.bounds_ok) ++out.viol.surplus_bounds;
    if (!cr.vertex_identity_ok) ++out.viol.vertex_identity;

    r.star_regime = ep.k > kPi / model.topo.min_length;
    if (opts.neumann && r.star_regime) {
        int sum_N = 0;
        double sum_rho = 0.0;
        for (int v : model.topo.interior) {
            const StarObservables so = star_observables(model, ep, v, thr);
            r.N_v.push_back(so.N);
            r.rho_v.push_back(so.rho);
            sum_N += so.N;
            sum_rho += so.rho;
            if (!so.bounds_ok) ++out.viol.star_bounds;
            if (so.rho < 0.5 * (so.N + 1) - 1e-9) ++out.viol.friedlander;
        }
        const int bd = static_cast<int>(model.topo.boundary.size());
        const int exp_N = cr.phi - cr.mu + model.E() - bd;
        const double exp_rho = model.L() * ep.k / kPi - cr.mu + model.E() - bd;
        if (sum_N != exp_N || std::abs(sum_rho - exp_rho) > 1e-8 * std::max(1.0, std::abs(exp_rho)))
            ++out.viol.local_global;
        if (ep.n % kPartitionStride == 0) {
            const NeumannPartition part = partition(model, ep, thr);
            try {
                local_global_check(model, ep, part, cr);
            } catch (const Error&) {
                ++out.viol.local_global;
            }
            for (const auto& d : part.domains) {
                if (d.kind == DomainKind::General) ++out.viol.local_global;
                if (d.N >= 0 && d.rho < 0.5 * (d.N + 1) - 1e-9) ++out.viol.friedlander;
            }
        }
    }

    if (opts.magnetic) {
        try {
            const MagneticFrame fr = hessian_alpha(model, ep.kappa);
            const std::vector<int> iota = local_indices(model, fr);
            r.sigma_mag = fr.sigma_mag;
            r.iota = iota;
            if (fr.sigma_mag != cr.sigma) ++out.viol.magnetic_mismatch;
            int s = 0;
            for (int x : iota) s += x;
            if (s != cr.sigma) ++out.viol.iota_sum;
        } catch (const Error& ex) {
            if (ex.code() == "DegenerateHessian")
                out.degenerate_hessian = true;
            else
                ++out.viol.magnetic_mismatch;
        }
    }
}

IndexResult process_index(const Model& model, const SpectrumStub& s, int cluster_slot, const ExperimentOptions& opts) {
    IndexResult out;
    out.n = s.n;
    if (s.multiplicity > 1) {
        out.status = cluster_slot < loop_modes_at(model, s.k) ? Status::Loop : Status::NonSimple;
        return out;
    }
    Eigenpair ep;
    try {
        ep = eigenfunction_at(model, s.k, opts.thresholds, s.n);
    } catch (const Error& ex) {
        if (ex.code() != "NonSimple" && ex.code() != "NoKernel") throw;
        out.status = loop_modes_at(model, s.k) > 0 ? Status::Loop : Status::NonSimple;
        return out;
    }
    if (ep.flags.loop_supported) {
        out.status = Status::Loop;
    } else if (ep.flags.borderline) {
        out.status = Status::Borderline;
    } else if (!ep.flags.generic) {
        out.status = ep.flags.simple ? Status::NotGeneric : Status::NonSimple;
    } else {
        out.status = Status::Generic;
        process_generic(model, ep, opts, out);
    }
    return out;
}

void add(ViolationTally& a, const ViolationTally& b) {
    a.surplus_bounds += b.surplus_bounds;
    a.vertex_identity += b.vertex_identity;
    a.star_bounds += b.star_bounds;
    a.local_global += b.local_global;
    a.magnetic_mismatch += b.magnetic_mismatch;
    a.iota_sum += b.iota_sum;
    a.friedlander += b.friedlander;
}

}  // namespace

SurplusDistribution run_experiment(const Model& model, const ExperimentOptions& opts) {
    if (opts.K_target < 1) fail("InvalidArgument", "K_target must be positive");
    const int workers = resolve_workers(opts.workers);
    SpectrumStream stream(model, workers);
    std::vector<IndexResult> results;
    long generic = 0;
    while (generic < opts.K_target) {
        const std::vector<SpectrumStub> batch = stream.next_batch();
        std::vector<int> slot(batch.size(), 0);
        for (size_t i = 1; i < batch.size(); ++i)
            if (batch[i].multiplicity > 1 && batch[i].k == batch[i - 1].k) slot[i] = slot[i - 1] + 1;
        std::vector<IndexResult> part(batch.size());
        parallel_for(batch.size(), workers,
                     [&](std::size_t i) { part[i] = process_index(model, batch[i], slot[i], opts); });
        for (auto& r : part) {
            if (generic >= opts.K_target) break;
            if (r.status == Status::Generic) ++generic;
            results.push_back(std::move(r));
        }
    }

    SurplusDistribution dist;
    dist.topo = model.topo;
    dist.K = generic;
    dist.N_raw = results.empty() ? 0 : results.back().n;
    dist.N_v_hist.resize(model.topo.interior.size());
    dist.rho_v_hist.resize(model.topo.interior.size());
    dist.iota_hist.resize(model.topo.blocks.size());
    for (auto& r : results) {
        ++dist.tally.raw;
        switch (r.status) {
            case Status::Generic: ++dist.tally.generic; break;
            case Status::Loop: ++dist.tally.loop_supported; break;
            case Status::NonSimple: ++dist.tally.non_simple; break;
            case Status::NotGeneric: ++dist.tally.not_generic; break;
            case Status::Borderline: ++dist.tally.borderline; break;
        }
        if (r.degenerate_hessian) ++dist.tally.degenerate_hessian;
        add(dist.violations, r.viol);
        if (r.status != Status::Generic) continue;
        const EigenRecord& e = r.rec;
        ++dist.joint[{e.sigma, e.omega}];
        ++dist.sigma_hist[e.sigma];
        ++dist.omega_hist[e.omega];
        if (!e.N_v.empty()) {
            ++dist.star_samples;
            for (size_t i = 0; i < e.N_v.size(); ++i) {
                ++dist.N_v_hist[i][e.N_v[i]];
                ++dist.rho_v_hist[i][static_cast<long>(std::floor(e.rho_v[i] / dist.rho_bin))];
            }
        }
        for (size_t b = 0; b < e.iota.size(); ++b) ++dist.iota_hist[b][e.iota[b]];
        dist.records.push_back(std::move(r.rec));
    }
    const double K = static_cast<double>(dist.K);
    for (const auto& e : dist.records) {
        dist.mean_sigma += e.sigma;
        dist.mean_omega += e.omega;
    }
    dist.mean_sigma /= K;
    dist.mean_omega /= K;
    for (const auto& e : dist.records) {
        dist.var_sigma += (e.sigma - dist.mean_sigma) * (e.sigma - dist.mean_sigma);
        dist.var_omega += (e.omega - dist.mean_omega) * (e.omega - dist.mean_omega);
    }
    dist.var_sigma /= std::max(1.0, K - 1.0);
    dist.var_omega /= std::max(1.0, K - 1.0);
    dist.loop_density = static_cast<double>(dist.tally.loop_supported) / static_cast<double>(dist.N_raw);

    const double excluded = static_cast<double>(dist.tally.non_loop_exclusions()) / static_cast<double>(dist.N_raw);
    if (excluded > opts.exclusion_limit)
        fail("ExcessiveExclusions", std::to_string(dist.tally.non_loop_exclusions()) + " of " +
                                        std::to_string(dist.N_raw) + " indices excluded for non-loop reasons");
    return dist;
}

SymmetryReport symmetry_test(const SurplusDistribution& dist, double slack) {
    SymmetryReport rep;
    const double K = static_cast<double>(dist.K);
    const int beta = dist.topo.betti;
    const int bd = static_cast<int>(dist.topo.boundary.size());
    auto prob = [&](int s, int w) {
        auto it = dist.joint.find({s, w});
        return it == dist.joint.end() ? 0.0 : static_cast<double>(it->second) / K;
    };
    std::set<std::pair<int, int>> cells;
    for (const auto& [c, n] : dist.joint) {
        cells.insert(c);
        cells.insert({beta - c.first, beta - bd - c.second});
    }
    rep.joint_ok = true;
    rep.max_excess = -1.0;
    for (const auto& [s, w] : cells) {
        CellResidual c{s, w, prob(s, w), prob(beta - s, beta - bd - w), 0.0};
        const double p = std::max(c.p, c.p_mirror);
        c.tolerance = 3.0 * std::sqrt(p * (1.0 - p) / K) + slack;
        rep.max_excess = std::max(rep.max_excess, std::abs(c.p - c.p_mirror) - c.tolerance);
        if (std::abs(c.p - c.p_mirror) > c.tolerance) rep.joint_ok = false;
        rep.cells.push_back(c);
    }
    rep.mean_sigma = dist.mean_sigma;
    rep.expected_sigma = 0.5 * beta;
    rep.sigma_tolerance = 3.0 * std::sqrt(dist.var_sigma / K) + 1e-12;
    rep.mean_sigma_ok = std::abs(rep.mean_sigma - rep.expected_sigma) <= rep.sigma_tolerance;
    rep.mean_omega = dist.mean_omega;
    rep.expected_omega = 0.5 * (beta - bd);
    rep.omega_tolerance = 3.0 * std::sqrt(dist.var_omega / K) + 1e-12;
    rep.mean_omega_ok = std::abs(rep.mean_omega - rep.expected_omega) <= rep.omega_tolerance;

    if (dist.star_samples > 0) {
        const double S = static_cast<double>(dist.star_samples);
        for (size_t i = 0; i < dist.N_v_hist.size(); ++i) {
            const int deg = dist.topo.degree[dist.topo.interior[i]];
            const auto& h = dist.N_v_hist[i];
            for (int j = 1; j < deg; ++j) {
                auto at = [&](int x) {
                    auto it = h.find(x);
                    return it == h.end() ? 0.0 : static_cast<double>(it->second) / S;
                };
                const double p = std::max(at(j), at(deg - j));
                if (std::abs(at(j) - at(deg - j)) > 3.0 * std::sqrt(p * (1.0 - p) / S) + slack) rep.vertex_ok = false;
            }
        }
    }
    return rep;
}

double chi_square_sf(double x, int dof) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

BinomialReport binomial_test(const SurplusDistribution& dist, BinomialKind kind) {
    BinomialReport rep;
    rep.kind = kind;
    const std::map<int, long>* hist = nullptr;
    if (kind == BinomialKind::NodalSurplus) {
        if (!dist.topo.family.tree_of_cycles) fail("WrongFamily", "nodal binomial law needs a tree of cycles");
        rep.trials = dist.topo.betti;
        rep.shift = 0;
        hist = &dist.sigma_hist;
    } else {
        if (!dist.topo.family.regular_31_tree) fail("WrongFamily", "Neumann binomial law needs a (3,1)-regular tree");
        rep.trials = static_cast<int>(dist.topo.interior.size());
        rep.shift = rep.trials + 1;
        hist = &dist.omega_hist;
    }
    const double K = static_cast<double>(dist.K);
    rep.observed.assign(rep.trials + 1, 0.0);
    rep.expected.assign(rep.trials + 1, 0.0);
    long outside = 0;
    for (const auto& [value, count] : *hist) {
        const int j = value + rep.shift;
        if (j < 0 || j > rep.trials)
            outside += count;
        else
            rep.observed[j] = static_cast<double>(count) / K;
    }
    double binom = 1.0;
    for (int j = 0; j <= rep.trials; ++j) {
        rep.expected[j] = binom * std::pow(0.5, rep.trials);
        binom = binom * (rep.trials - j) / (j + 1);
        const double e = rep.expected[j] * K;
        const double o = rep.observed[j] * K;
        rep.chi2 += (o - e) * (o - e) / e;
    }
    if (outside > 0) rep.chi2 = std::numeric_limits<double>::infinity();
    rep.dof = rep.trials;
    rep.p_value = std::isfinite(rep.chi2) ? chi_square_sf(rep.chi2, rep.dof) : 0.0;
    return rep;
}

double ks_normal_distance(const std::vector<int>& sample, double mean, double sd) {
    if (sample.empty() || !(sd > 0.0)) return 1.0;
    std::vector<int> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    size_t i = 0;
    while (i < sorted.size()) {
        size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double z = (sorted[i] - mean) / sd;
        const double phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
        d = std::max({d, std::abs(static_cast<double>(i) / n - phi), std::abs(static_cast<double>(j) / n - phi)});
        i = j;
    }
    return d;
}

std::vector<GaussianRow> gaussian_limit_scan(const std::vector<Model>& family, long K, int workers,
                                             const Thresholds& thr) {
    std::vector<GaussianRow> rows;
    for (const Model& m : family) {
        ExperimentOptions opts;
        opts.K_target = K;
        opts.workers = workers;
        opts.thresholds = thr;
        opts.neumann = false;
        const SurplusDistribution dist = run_experiment(m, opts);
        GaussianRow row;
        row.betti = m.betti();
        row.K = dist.K;
        row.var_sigma = dist.var_sigma;
        row.var_expected = 0.25 * row.betti;
        row.var_tolerance = 3.0 * std::sqrt(2.0 / static_cast<double>(dist.K)) * row.var_expected;
        row.var_ok = std::abs(row.var_sigma - row.var_expected) <= row.var_tolerance;
        std::vector<int> sample;
        sample.reserve(dist.records.size());
        for (const auto& e : dist.records) sample.push_back(e.sigma);
        row.ks = ks_normal_distance(sample, 0.5 * row.betti, std::sqrt(dist.var_sigma));
        rows.push_back(row);
    }
    return rows;
}

bool ks_strictly_decreasing(const std::vector<GaussianRow>& rows) {
    for (size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].ks < rows[i - 1].ks)) return false;
    return true;
}

double loop_index_density(const Model& model, long N_raw, const Thresholds& thr, int workers) {
    const auto stubs = locate_spectrum(model, {N_raw, 0.0, workers});
    const auto recs = classify_spectrum(model, stubs, thr, workers);
    long loops = 0;
    for (const auto& r : recs) loops += r.loop_supported ? 1 : 0;
    return static_cast<double>(loops) / static_cast<double>(recs.size());
}

double signature_recurrence(const SurplusDistribution& dist) {
    auto signature = [](const EigenRecord& e) {
        std::vector<int> s{e.sigma, e.omega};
        s.insert(s.end(), e.N_v.begin(), e.N_v.end());
        s.push_back(-1000);
        s.insert(s.end(), e.iota.begin(), e.iota.end());
        return s;
    };
    // Only records carrying the full set of observables are comparable.
    bool any_star = false, any_mag = false;
    for (const auto& e : dist.records) {
        any_star = any_star || !e.N_v.empty();
        any_mag = any_mag || e.sigma_mag >= 0;
    }
    std::vector<const EigenRecord*> full;
    for (const auto& e : dist.records)
        if ((!any_star || !e.N_v.empty()) && (!any_mag || e.sigma_mag >= 0)) full.push_back(&e);
    const size_t head = full.size() / 10;
    std::set<std::vector<int>> early, late;
    for (size_t i = 0; i < full.size(); ++i) (i < head ? early : late).insert(signature(*full[i]));
    if (early.empty()) return 1.0;
    size_t seen = 0;
    for (const auto& s : early) seen += late.count(s);
    return static_cast<double>(seen) / static_cast<double>(early.size());
}

std::string summary_json(const SurplusDistribution& dist, const std::string& extra_json) {
    using nlohmann::json;
    json j;
    j["betti"] = dist.topo.betti;
    j["boundary"] = dist.topo.boundary.size();
    j["K"] = dist.K;
    j["N_raw"] = dist.N_raw;
    j["exclusions"] = {{"loop_supported", dist.tally.loop_supported}, {"non_simple", dist.tally.non_simple},
                       {"not_generic", dist.tally.not_generic},       {"borderline", dist.tally.borderline},
                       {"degenerate_hessian", dist.tally.degenerate_hessian}};
    j["violations"] = {{"surplus_bounds", dist.violations.surplus_bounds},
                       {"vertex_identity", dist.violations.vertex_identity},
                       {"star_bounds", dist.violations.star_bounds},
                       {"local_global", dist.violations.local_global},
                       {"magnetic_mismatch", dist.violations.magnetic_mismatch},
                       {"iota_sum", dist.violations.iota_sum},
                       {"friedlander", dist.violations.friedlander}};
    j["mean_sigma"] = dist.mean_sigma;
    j["var_sigma"] = dist.var_sigma;
    j["mean_omega"] = dist.mean_omega;
    j["var_omega"] = dist.var_omega;
    j["loop_density"] = dist.loop_density;
    json sig = json::object(), om = json::object();
    for (const auto& [v, c] : dist.sigma_hist) sig[std::to_string(v)] = c;
    for (const auto& [v, c] : dist.omega_hist) om[std::to_string(v)] = c;
    j["sigma_hist"] = sig;
    j["omega_hist"] = om;
    j["tests"] = json::parse(extra_json);
    return j.dump(2);
}

}  // namespace qgl
