#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qgl/errors.hpp"
#include "qgl/graph_io.hpp"
#include "qgl/parallel.hpp"
#include "qgl/secular.hpp"
#include "qgl/spectrum.hpp"
#include "qgl/statistics.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;
constexpr int kExitAssert = 3;

struct RunConfig {
    std::string command;
    std::string graph;
    long K = 0;
    long count = 0;
    double kmax = 0.0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 0;
    std::string out;
    std::string format = "csv";
    std::string asserts;
    std::string thresholds;
    std::string lengths;
    int res = 80;
    bool magnetic = false;
};

bool is_validation_code(const std::string& code) {
    static const std::set<std::string> codes{
        "InvalidVertex",  "NonpositiveLength", "TooFewEdges",       "DisconnectedGraph", "DegreeTwoVertex",
        "InvalidGraphFile", "LengthMismatch",  "InvalidLengths",    "InvalidThresholds", "WrongFamily",
        "InvalidArgument", "NoLoops",          "UnsupportedDimension"};
    return codes.count(code) > 0;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
}

// Rows of json scalars rendered either as CSV or as a JSON array of objects.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<json>> rows;

    std::string csv() const {
        std::ostringstream os;
        for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
        os << '\n';
        for (const auto& r : rows) {
            for (size_t i = 0; i < r.size(); ++i) {
                if (i) os << ',';
                const json& v = r[i];
                if (v.is_number_float())
                    os << fmt(v.get<double>());
                else if (v.is_boolean())
                    os << (v.get<bool>() ? 1 : 0);
                else if (v.is_string())
                    os << v.get<std::string>();
                else
                    os << v.dump();
            }
            os << '\n';
        }
        return os.str();
    }

    std::string to_json() const {
        json arr = json::array();
        for (const auto& r : rows) {
            json o = json::object();
            for (size_t i = 0; i < header.size() && i < r.size(); ++i) o[header[i]] = r[i];
            arr.push_back(o);
        }
        return arr.dump(1) + "\n";
    }

    std::string render(const std::string& format) const { return format == "json" ? to_json() : csv(); }
};

std::ostream& summary_stream(const RunConfig& cfg) { return cfg.out.empty() ? std::cerr : std::cout; }

void write_file(const RunConfig& cfg, const std::string& name, const std::string& text) {
    fs::create_directories(cfg.out);
    std::ofstream f(fs::path(cfg.out) / name, std::ios::binary);
    f << text;
    if (!f) qgl::fail("InvalidArgument", "cannot write " + (fs::path(cfg.out) / name).string());
}

void emit(const RunConfig& cfg, const std::string& stem, const Table& t) {
    const std::string text = t.render(cfg.format);
    if (cfg.out.empty())
        std::cout << text;
    else
        write_file(cfg, stem + (cfg.format == "json" ? ".json" : ".csv"), text);
}

std::string read_thresholds(const std::string& arg) {
    if (arg.empty()) return {};
    if (fs::exists(arg)) {
        std::ifstream in(arg);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    return arg;
}

qgl::MetricGraph build_graph(const RunConfig& cfg) {
    qgl::MetricGraph g = qgl::load_graph(cfg.graph);
    if (!cfg.lengths.empty())
        return qgl::with_lengths(g, qgl::parse_lengths(cfg.lengths));
    if (cfg.command == "stats")
        return qgl::with_lengths(g, qgl::random_lengths(g.num_edges(), cfg.seed));
    return g;
}

void print_invariants(const RunConfig& cfg, const qgl::Model& m) {
    auto& os = summary_stream(cfg);
    os << "graph " << cfg.graph << ": V=" << m.V() << " E=" << m.E() << " beta=" << m.betti()
       << " |boundary|=" << m.topo.boundary.size() << " L=" << fmt(m.L()) << " blocks=" << m.topo.blocks.size();
    const auto names = m.topo.family.names();
    if (!names.empty()) {
        os << " family=";
        for (size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
    }
    os << '\n';
}

void print_tally(const RunConfig& cfg, const qgl::SurplusDistribution& d) {
    summary_stream(cfg) << "indices " << d.N_raw << ": generic " << d.tally.generic << ", loop-supported "
                        << d.tally.loop_supported << ", non-simple " << d.tally.non_simple << ", not generic "
                        << d.tally.not_generic << ", borderline " << d.tally.borderline
                        << ", degenerate Hessian " << d.tally.degenerate_hessian << "; violations "
                        << d.violations.total() << '\n';
}

long sample_size(const RunConfig& cfg, long fallback) {
    if (cfg.K > 0) return cfg.K;
    if (cfg.count > 0) return cfg.count;
    return fallback;
}

qgl::ExperimentOptions experiment_options(const RunConfig& cfg, const qgl::Thresholds& thr, long K) {
    qgl::ExperimentOptions o;
    o.K_target = K;
    o.seed = cfg.seed;
    o.thresholds = thr;
    o.workers = qgl::resolve_workers(cfg.workers);
    return o;
}

int cmd_spectrum(const RunConfig& cfg, const qgl::Model& m, const qgl::Thresholds& thr) {
    qgl::LocateOptions lo;
    lo.workers = qgl::resolve_workers(cfg.workers);
    if (cfg.kmax > 0.0)
        lo.kmax = cfg.kmax;
    else
        lo.count = sample_size(cfg, 100);
    const auto stubs = qgl::locate_spectrum(m, lo);
    const auto recs = qgl::classify_spectrum(m, stubs, thr, lo.workers);
    Table t{{"n", "k", "simple", "generic", "loop_supported"}, {}};
    long generic = 0, loops = 0;
    for (const auto& r : recs) {
        t.rows.push_back({r.n, r.k, r.simple, r.generic, r.loop_supported});
        generic += r.generic;
        loops += r.loop_supported;
    }
    emit(cfg, "spectrum", t);
    summary_stream(cfg) << recs.size() << " eigenvalues, " << generic << " generic, " << loops
                        << " loop-supported\n";
    return 0;
}

int cmd_counts(const RunConfig& cfg, const qgl::Model& m, const qgl::Thresholds& thr) {
    auto o = experiment_options(cfg, thr, sample_size(cfg, 100));
    o.neumann = false;
    const auto d = qgl::run_experiment(m, o);
    Table t{{"n", "k", "phi", "mu", "sigma", "omega"}, {}};
    for (const auto& e : d.records) t.rows.push_back({e.n, e.k, e.phi, e.mu, e.sigma, e.omega});
    emit(cfg, "counts", t);
    print_tally(cfg, d);
    return 0;
}

int cmd_domains(const RunConfig& cfg, const qgl::Model& m, const qgl::Thresholds& thr) {
    const auto d = qgl::run_experiment(m, experiment_options(cfg, thr, sample_size(cfg, 100)));
    Table t{{"n", "vertex", "N_v", "rho_v"}, {}};
    for (const auto& e : d.records)
        for (size_t i = 0; i < e.N_v.size(); ++i) t.rows.push_back({e.n, m.topo.interior[i], e.N_v[i], e.rho_v[i]});
    emit(cfg, "domains", t);
    print_tally(cfg, d);
    return 0;
}

int cmd_magnetic(const RunConfig& cfg, const qgl::Model& m, const qgl::Thresholds& thr) {
    auto o = experiment_options(cfg, thr, sample_size(cfg, 100));
    o.neumann = false;
    o.magnetic = true;
    const auto d = qgl::run_experiment(m, o);
    Table t{{"n", "k", "sigma_counting", "sigma_magnetic"}, {}};
    for (size_t j = 0; j < m.topo.blocks.size(); ++j) t.header.push_back("iota_" + std::to_string(j + 1));
    for (const auto& e : d.records) {
        std::vector<json> row{e.n, e.k, e.sigma, e.sigma_mag};
        for (size_t j = 0; j < m.topo.blocks.size(); ++j)
            row.push_back(j < e.iota.size() ? json(e.iota[j]) : json(""));
        t.rows.push_back(row);
    }
    emit(cfg, "magnetic", t);
    print_tally(cfg, d);
    return 0;
}

int cmd_manifold(const RunConfig& cfg, const qgl::Model& m) {
    const auto pts = qgl::sample_manifold(m.graph, m.betti(), cfg.res);
    Table t{{"k1", "k2", "k3", "component"}, {}};
    long loop_points = 0;
    for (const auto& p : pts) {
        t.rows.push_back({p.k1, p.k2, p.k3, p.component});
        loop_points += p.component != "regular";
    }
    emit(cfg, "manifold", t);
    summary_stream(cfg) << pts.size() << " points, " << loop_points << " on loop components\n";
    return 0;
}

Table histogram(const std::string& key, const std::map<int, long>& h, long total) {
    Table t{{key, "count", "fraction"}, {}};
    for (const auto& [v, c] : h) t.rows.push_back({v, c, static_cast<double>(c) / static_cast<double>(total)});
    return t;
}

int cmd_stats(const RunConfig& cfg, const qgl::Model& m, const qgl::Thresholds& thr) {
    std::set<std::string> wanted;
    {
        std::stringstream ss(cfg.asserts);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) wanted.insert(item);
    }
    static const std::set<std::string> known{"binomial", "symmetry", "bounds", "identities", "recurrence"};
    for (const auto& w : wanted)
        if (!known.count(w)) qgl::fail("InvalidArgument", "unknown test '" + w + "'");

    auto o = experiment_options(cfg, thr, sample_size(cfg, 10000));
    o.magnetic = cfg.magnetic;
    const auto d = qgl::run_experiment(m, o);

    json tests = json::object();
    const auto& v = d.violations;
    tests["bounds"] = {{"violations", v.surplus_bounds + v.star_bounds + v.friedlander},
                       {"pass", v.surplus_bounds + v.star_bounds + v.friedlander == 0}};
    tests["identities"] = {{"violations", v.vertex_identity + v.local_global + v.magnetic_mismatch + v.iota_sum},
                           {"pass", v.vertex_identity + v.local_global + v.magnetic_mismatch + v.iota_sum == 0}};
    const auto sym = qgl::symmetry_test(d);
    tests["symmetry"] = {{"max_excess", sym.max_excess},
                         {"mean_sigma", sym.mean_sigma},
                         {"expected_sigma", sym.expected_sigma},
                         {"sigma_tolerance", sym.sigma_tolerance},
                         {"mean_omega", sym.mean_omega},
                         {"expected_omega", sym.expected_omega},
                         {"omega_tolerance", sym.omega_tolerance},
                         {"vertex_ok", sym.vertex_ok},
                         {"pass", sym.ok()}};
    const double rec = qgl::signature_recurrence(d);
    tests["recurrence"] = {{"fraction", rec}, {"pass", rec == 1.0}};
    auto add_binomial = [&](qgl::BinomialKind kind, const std::string& name) {
        const auto b = qgl::binomial_test(d, kind);
        tests["binomial"][name] = {{"observed", b.observed}, {"expected", b.expected}, {"chi2", b.chi2},
                                   {"dof", b.dof},           {"p_value", b.p_value},   {"pass", b.p_value > 1e-3}};
        return b.p_value > 1e-3;
    };
    bool binomial_ran = false, binomial_pass = true;
    if (m.topo.family.tree_of_cycles) {
        binomial_ran = true;
        binomial_pass = add_binomial(qgl::BinomialKind::NodalSurplus, "sigma") && binomial_pass;
    }
    if (m.topo.family.regular_31_tree) {
        binomial_ran = true;
        binomial_pass = add_binomial(qgl::BinomialKind::NeumannSurplus, "omega") && binomial_pass;
    }
    if (binomial_ran) tests["binomial"]["pass"] = binomial_pass;
    if (wanted.count("binomial") && !binomial_ran)
        qgl::fail("WrongFamily", "binomial laws need a tree of cycles or a (3,1)-regular tree");

    json config{{"graph", cfg.graph},
                {"edges", json::parse(qgl::graph_to_json(m.graph))},
                {"K", o.K_target},
                {"seed", cfg.seed},
                {"magnetic", cfg.magnetic},
                {"thresholds", json::parse(thr.to_json())},
                {"tests", std::vector<std::string>(wanted.begin(), wanted.end())}};
    const std::string summary = qgl::summary_json(d, tests.dump());
    if (!cfg.out.empty()) {
        const std::string ext = cfg.format == "json" ? ".json" : ".csv";
        write_file(cfg, "config.json", config.dump(2) + "\n");
        write_file(cfg, "summary.json", summary + "\n");
        write_file(cfg, "sigma_hist" + ext, histogram("sigma", d.sigma_hist, d.K).render(cfg.format));
        write_file(cfg, "omega_hist" + ext, histogram("omega", d.omega_hist, d.K).render(cfg.format));
        Table joint{{"sigma", "omega", "count", "fraction"}, {}};
        for (const auto& [c, n] : d.joint)
            joint.rows.push_back({c.first, c.second, n, static_cast<double>(n) / static_cast<double>(d.K)});
        write_file(cfg, "joint_hist" + ext, joint.render(cfg.format));
        Table nv{{"vertex", "N_v", "count"}, {}};
        Table rho{{"vertex", "rho_lo", "rho_hi", "count"}, {}};
        for (size_t i = 0; i < d.N_v_hist.size(); ++i) {
            for (const auto& [x, n] : d.N_v_hist[i]) nv.rows.push_back({m.topo.interior[i], x, n});
            for (const auto& [b, n] : d.rho_v_hist[i])
                rho.rows.push_back({m.topo.interior[i], b * d.rho_bin, (b + 1) * d.rho_bin, n});
        }
        write_file(cfg, "nv_hist" + ext, nv.render(cfg.format));
        write_file(cfg, "rho_hist" + ext, rho.render(cfg.format));
        if (cfg.magnetic) {
            Table iota{{"block", "iota", "count"}, {}};
            for (size_t b = 0; b < d.iota_hist.size(); ++b)
                for (const auto& [x, n] : d.iota_hist[b]) iota.rows.push_back({static_cast<int>(b + 1), x, n});
            write_file(cfg, "iota_hist" + ext, iota.render(cfg.format));
        }
    } else {
        std::cout << summary << '\n';
    }

    print_tally(cfg, d);
    auto& os = summary_stream(cfg);
    os << "mean sigma " << fmt(d.mean_sigma) << " (var " << fmt(d.var_sigma) << "), mean omega "
       << fmt(d.mean_omega) << " (var " << fmt(d.var_omega) << ")\n";
    os << "P(sigma):";
    for (const auto& [s, c] : d.sigma_hist) os << ' ' << s << ':' << fmt(static_cast<double>(c) / d.K);
    os << '\n';
    bool failed = false;
    for (const auto& name : known) {
        if (!tests.contains(name)) continue;
        const bool pass = tests[name]["pass"].get<bool>();
        const bool asserted = wanted.count(name) > 0;
        os << "test " << name << ": " << (pass ? "PASS" : "FAIL") << (asserted ? " (asserted)" : "") << '\n';
        if (asserted && !pass) failed = true;
    }
    return failed ? kExitAssert : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qgl: spectra, nodal and Neumann counts, and surplus statistics of standard quantum graphs"};
    app.require_subcommand(1);
    RunConfig cfg;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"spectrum", "Locate eigenvalues and classify them"},
        {"counts", "Nodal and Neumann counts of generic eigenfunctions"},
        {"domains", "Neumann-domain star observables"},
        {"magnetic", "Magnetic Morse indices and local block indices"},
        {"stats", "Surplus statistics and distribution tests"},
        {"manifold", "Secular-manifold point cloud of a 3-edge graph"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--graph", cfg.graph, "Graph JSON file or catalog name")->required();
        sub->add_option("--K", cfg.K, "Number of generic eigenpairs");
        sub->add_option("--count", cfg.count, "Number of eigenvalues");
        sub->add_option("--kmax", cfg.kmax, "Upper end of the spectral window");
        sub->add_option("--seed", cfg.seed, "Seed for random edge lengths");
        sub->add_option("--workers", cfg.workers, "Worker threads (default QGL_WORKERS or all cores)");
        sub->add_option("--out", cfg.out, "Output directory");
        sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--assert", cfg.asserts, "Comma-separated tests that must pass");
        sub->add_option("--thresholds", cfg.thresholds, "Threshold JSON text or file");
        sub->add_option("--lengths", cfg.lengths, "Comma-separated edge lengths");
        sub->add_option("--res", cfg.res, "Grid resolution for the manifold");
        sub->add_flag("--magnetic", cfg.magnetic, "Also compute magnetic indices in stats");
        sub->callback([&cfg, name = name]() { cfg.command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        const qgl::Thresholds thr = qgl::Thresholds::from_json(read_thresholds(cfg.thresholds));
        const qgl::Model model(build_graph(cfg));
        print_invariants(cfg, model);
        if (cfg.command == "spectrum") return cmd_spectrum(cfg, model, thr);
        if (cfg.command == "counts") return cmd_counts(cfg, model, thr);
        if (cfg.command == "domains") return cmd_domains(cfg, model, thr);
        if (cfg.command == "magnetic") return cmd_magnetic(cfg, model, thr);
        if (cfg.command == "manifold") return cmd_manifold(cfg, model);
        return cmd_stats(cfg, model, thr);
    } catch (const qgl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_validation_code(e.code()) ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
