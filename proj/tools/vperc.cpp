// vperc: reproducible Voronoi percolation experiments.
//
// Every subcommand writes its results plus a manifest.json into a
// content-addressed output directory (override with --out). Identical flags
// produce byte-identical outputs; --threads only changes wall time.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vperc/estimators.hpp"
#include "vperc/events.hpp"
#include "vperc/exploration.hpp"
#include "vperc/io.hpp"
#include "vperc/osss.hpp"
#include "vperc/point_process.hpp"
#include "vperc/sharpness.hpp"
#include "vperc/tensor.hpp"

namespace fs = std::filesystem;
using namespace vperc;

namespace {

struct Common {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
    std::string out_base = "out";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "root seed; all randomness derives from it");
    cmd->add_option("--threads", c.threads, "worker pool size (0 = hardware)");
    cmd->add_option("--out", c.out, "output directory (default: content-addressed under ./out)");
    cmd->add_option("--out-base", c.out_base, "base directory for content-addressed outputs");
}

fs::path prepare_outdir(const Common& c, const json& manifest) {
    const fs::path dir = resolve_outdir(c.out, c.out_base, manifest);
    fs::create_directories(dir);
    write_json_file(dir / "manifest.json", manifest);
    return dir;
}

Engine parse_engine(const std::string& s) {
    if (s == "raster") return Engine::raster;
    if (s == "delaunay2d") return Engine::delaunay2d;
    throw parameter_error("engine must be raster or delaunay2d");
}

double resolve_L(double user_L, double needed) {
    if (user_L > 0) {
        require(user_L >= needed, "window half-width smaller than the largest event radius");
        return user_L;
    }
    return needed;
}

template <int D>
ExperimentGeom<D> make_geom(double L, double pitch, double h) {
    ExperimentGeom<D> g{Window<D>::with_auto_padding(L), pitch, h};
    return g;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
    Common c;
    int d = 2;
    double L = 8, p = 0.5, pitch = 1.0;
    bool pgm = false;
    bool components = false;
    double raster_h = 0.1;
};

template <int D>
int run_sample(const SampleArgs& a, const fs::path& dir) {
    const auto cfg = sample_configuration<D>(Window<D>::with_auto_padding(a.L), a.p, a.c.seed,
                                             a.pitch);
    std::ostringstream os;
    write_point_dump<D>(os, cfg);
    write_text_file(dir / "points.csv", os.str());
    if (a.pgm || a.components) {
        RasterEvaluator<D> ev(cfg, a.L, a.raster_h);
        if (a.pgm) {
            if constexpr (D == 2) {
                std::ostringstream pgm, own;
                write_pgm(pgm, ev.grid());
                write_owner_csv<2>(own, ev.grid());
                write_text_file(dir / "raster.pgm", pgm.str());
                write_text_file(dir / "owners.csv", own.str());
            } else {
                throw parameter_error("--pgm requires d = 2");
            }
        }
        if (a.components) {
            const auto [labels, count] = ev.black_components(a.L);
            std::ostringstream cs;
            for (int ax = 1; ax <= D; ++ax) cs << 'x' << ax << ',';
            cs << "component\n";
            for (std::int64_t s = 0; s < ev.grid().site_count(); ++s) {
                const Pt<D> z = ev.grid().site_pos(s);
                for (int ax = 0; ax < D; ++ax) cs << detail::fmt_double(z[ax]) << ',';
                cs << labels[s] << '\n';
            }
            write_text_file(dir / "components.csv", cs.str());
            std::cout << "components: " << count << "\n";
        }
    }
    std::cout << "sample: " << cfg.size() << " points -> " << (dir / "points.csv").string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct ThetaArgs {
    Common c;
    int d = 2;
    std::vector<double> ps{0.5};
    std::vector<double> ns{8};
    double L = 0, pitch = 1.0, h = 0.1;
    std::string engine = "raster";
    std::int64_t trials = 1000;
};

template <int D>
int run_theta(const ThetaArgs& a, const fs::path& dir) {
    double nmax = 0;
    for (double n : a.ns) nmax = std::max(nmax, n);
    const auto geom = make_geom<D>(resolve_L(a.L, nmax), a.pitch, a.h);
    const Engine eng = parse_engine(a.engine);
    std::vector<Estimate> rows;
    for (std::size_t i = 0; i < a.ps.size(); ++i) {
        auto batch = theta_ladder<D>(geom, a.ps[i], a.ns, a.trials, substream(a.c.seed, i),
                                     a.c.threads, eng);
        rows.insert(rows.end(), batch.begin(), batch.end());
    }
    std::ostringstream os;
    write_estimates_csv(os, rows);
    write_text_file(dir / "estimates.csv", os.str());
    if (a.ps.size() > 1) emit_theta_plot(dir, "estimates.csv");
    for (const auto& e : rows)
        std::cout << "theta(p=" << e.p << ", n=" << e.n << ") = " << e.mean << " +- " << e.se
                  << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct CrossingArgs {
    Common c;
    std::vector<double> ps{0.5};
    std::vector<double> ns{8};
    double L = 0, pitch = 1.0, h = 0.1;
    std::string engine = "raster";
    std::int64_t trials = 1000;
};

int run_crossing(const CrossingArgs& a, const fs::path& dir) {
    double nmax = 0;
    for (double n : a.ns) nmax = std::max(nmax, n);
    const auto geom = make_geom<2>(resolve_L(a.L, nmax), a.pitch, a.h);
    const Engine eng = parse_engine(a.engine);
    std::vector<Estimate> rows;
    std::size_t run = 0;
    for (const double p : a.ps)
        for (const double n : a.ns)
            rows.push_back(estimate_event<2>(geom, p, EventSpec::box_crossing(n, eng), a.trials,
                                             substream(a.c.seed, run++), a.c.threads));
    std::ostringstream os;
    write_estimates_csv(os, rows);
    write_text_file(dir / "estimates.csv", os.str());
    if (a.ps.size() > 1) emit_theta_plot(dir, "estimates.csv");
    for (const auto& e : rows)
        std::cout << "crossing(p=" << e.p << ", n=" << e.n << ") = " << e.mean << " +- " << e.se
                  << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct InfluenceArgs {
    Common c;
    int d = 2;
    double p = 0.5, n = 6, eps = 0.5, L = 0;
    std::int64_t trials = 200;
};

template <int D>
int run_influence(const InfluenceArgs& a, const fs::path& dir) {
    const double h = std::min(kDefaultRasterPitch, a.eps / 4.0);
    const auto geom = make_geom<D>(resolve_L(a.L, a.n), a.eps, h);
    const auto prof = influence_profile<D>(geom, a.p, EventSpec::origin_to_sphere(a.n), a.trials,
                                           a.c.seed, a.c.threads);
    const auto grid = box_partition(geom.window, a.eps);
    std::ostringstream os;
    os << "eps";
    for (int ax = 1; ax <= D; ++ax) os << ",x" << ax;
    os << ",mean,stderr\n";
    for (std::int64_t b = 0; b < grid.box_count(); ++b) {
        const Estimate e = prof.entry(b);
        const Pt<D> lo = grid.low_corner(b);
        os << detail::fmt_double(a.eps);
        for (int ax = 0; ax < D; ++ax) os << ',' << detail::fmt_double(lo[ax]);
        os << ',' << detail::fmt_double(e.mean) << ',' << detail::fmt_double(e.se) << '\n';
    }
    write_text_file(dir / "influence.csv", os.str());
    if constexpr (D == 2) emit_heatmap_plot(dir, "influence.csv", "mean", "influence.png");
    double total = 0;
    for (const std::int64_t f : prof.flips) total += double(f);
    std::cout << "influence profile: sum " << total / double(a.trials) << " over "
              << grid.box_count() << " boxes\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct ExploreArgs {
    Common c;
    int d = 2;
    double p = 0.5, k = 4, n = 8, eps = 0.5, L = 0;
    double h = 0.1;
    std::int64_t trials = 200;
};

template <int D>
int run_explore(const ExploreArgs& a, const fs::path& dir) {
    const auto geom = make_geom<D>(resolve_L(a.L, a.n), a.eps, a.h);
    // one full trace for inspection
    const auto cfg = sample_configuration<D>(geom.window, a.p, substream(a.c.seed, 0), a.eps);
    const auto tr = run_Tk<D>(cfg, a.k, a.n, a.h);
    json tj;
    tj["k"] = a.k;
    tj["n"] = a.n;
    tj["eps"] = a.eps;
    tj["h"] = a.h;
    tj["decision"] = tr.decision;
    tj["steps"] = tr.steps;
    tj["visit_order"] = tr.visit_order;
    tj["revealed"] = tr.revealed;
    tj["z_sizes"] = tr.z_sizes;
    write_json_file(dir / "trace.json", tj);

    const auto prof = revealment_profile<D>(geom, a.p, a.k, a.n, a.trials, a.c.seed, a.c.threads);
    const auto grid = box_partition(geom.window, a.eps);
    std::ostringstream os;
    os << "k,n,eps";
    for (int ax = 1; ax <= D; ++ax) os << ",x" << ax;
    os << ",delta_mean,delta_stderr,conn_mean,conn_stderr\n";
    for (std::int64_t b = 0; b < grid.box_count(); ++b) {
        const Estimate d_e = prof.revealment(b);
        const Estimate c_e = prof.connection(b);
        const Pt<D> lo = grid.low_corner(b);
        os << detail::fmt_double(a.k) << ',' << detail::fmt_double(a.n) << ','
           << detail::fmt_double(a.eps);
        for (int ax = 0; ax < D; ++ax) os << ',' << detail::fmt_double(lo[ax]);
        os << ',' << detail::fmt_double(d_e.mean) << ',' << detail::fmt_double(d_e.se) << ','
           << (prof.has_site[b] ? detail::fmt_double(c_e.mean) : "nan") << ','
           << (prof.has_site[b] ? detail::fmt_double(c_e.se) : "nan") << '\n';
    }
    write_text_file(dir / "revealment.csv", os.str());
    if constexpr (D == 2) emit_heatmap_plot(dir, "revealment.csv", "delta_mean", "revealment.png");
    std::cout << "explore: trace decision " << tr.decision << ", revealment profile over "
              << grid.box_count() << " boxes\n";
    return 0;
}

// ---------------------------------------------------------------------------

int run_osss_exact(const std::string& instance_path, const fs::path& dir) {
    std::ifstream is(instance_path);
    if (!is) throw parameter_error("cannot open instance file " + instance_path);
    json j = json::parse(is);
    FiniteProductSpace sp;
    sp.alphabet = j.at("alphabets").get<std::vector<int>>();
    sp.prob = j.at("probabilities").get<std::vector<std::vector<double>>>();
    for (const auto& v : j.at("truth")) sp.truth.push_back(v.get<int>() ? 1 : 0);
    for (const auto& nd : j.at("tree")) {
        FiniteProductSpace::Node node;
        if (nd.contains("coord")) {
            node.coord = nd.at("coord").get<int>();
            node.child = nd.at("children").get<std::vector<int>>();
        }
        sp.tree.push_back(node);
    }
    const auto rep = exact_osss(sp);
    json out;
    out["variance"] = rep.variance;
    out["revealment"] = rep.revealment;
    out["influence"] = rep.influence;
    out["rhs"] = rep.rhs;
    out["slack"] = rep.slack;
    write_json_file(dir / "osss_exact.json", out);
    std::cout << "osss-exact: var " << rep.variance << " rhs " << rep.rhs << " slack "
              << rep.slack << "\n";
    return rep.slack >= 0 ? 0 : 4;
}

// ---------------------------------------------------------------------------

struct OsssVoronoiArgs {
    Common c;
    double p = 0.5, n = 8, k = 4, eps = 0.5, L = 0;
    std::int64_t trials = 400;
};

int run_osss_voronoi(const OsssVoronoiArgs& a, const fs::path& dir) {
    const double h = std::min(kDefaultRasterPitch, a.eps / 4.0);
    const auto geom = make_geom<2>(resolve_L(a.L, a.n + 4.0), a.eps, h);
    const auto rep = osss_check_voronoi<2>(geom, a.p, a.n, a.k, a.trials, a.c.seed, a.c.threads);
    json out;
    out["theta"] = rep.theta;
    out["lhs"] = rep.lhs;
    out["lhs_stderr"] = rep.se_lhs;
    out["rhs_core"] = rep.rhs_core;
    out["rhs_tail"] = rep.rhs_tail;
    out["rhs_stderr"] = rep.se_rhs;
    out["slack"] = rep.slack;
    out["holds"] = rep.holds;
    write_json_file(dir / "osss_voronoi.json", out);
    std::cout << "osss-voronoi: lhs " << rep.lhs << " rhs " << rep.rhs_core + rep.rhs_tail
              << " slack " << rep.slack << (rep.holds ? " OK" : " VIOLATED") << "\n";
    return rep.holds ? 0 : 4;
}

// ---------------------------------------------------------------------------

struct PcArgs {
    Common c;
    int d = 2;
    double n1 = 8, n2 = 16;
    double h = 0.25;
    std::int64_t trials = 4000;
};

int run_pc(const PcArgs& a, const fs::path& dir) {
    PcResult res;
    if (a.d == 2)
        res = estimate_pc_2d(a.n1, a.n2, a.trials, a.c.seed, a.c.threads);
    else
        res = estimate_pc_3d(a.n1, a.n2, a.trials, a.c.seed, a.h, a.c.threads);
    json out;
    out["d"] = a.d;
    out["lo"] = res.lo;
    out["hi"] = res.hi;
    out["width"] = res.width();
    json evals = json::array();
    for (const auto& e : res.evals)
        evals.push_back({{"p", e.p}, {"n", e.n}, {"mean", e.mean}, {"stderr", e.se}});
    out["evals"] = evals;
    write_json_file(dir / "pc.json", out);
    std::cout << "pc(d=" << a.d << "): [" << res.lo << ", " << res.hi << "] width " << res.width()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct DecayArgs {
    Common c;
    std::vector<double> ps{0.35};
    double n_min = 4, n_max = 24, n_step = 1;
    double L = 0, h = 0.1;
    std::int64_t trials = 4000;
};

int run_decay(const DecayArgs& a, const fs::path& dir) {
    std::vector<double> radii;
    for (double n = a.n_min; n <= a.n_max + 1e-9; n += a.n_step) radii.push_back(n);
    const auto geom = make_geom<2>(resolve_L(a.L, a.n_max), 1.0, a.h);
    std::vector<Estimate> rows;
    json fits = json::array();
    for (std::size_t i = 0; i < a.ps.size(); ++i) {
        const auto batch =
            theta_ladder<2>(geom, a.ps[i], radii, a.trials, substream(a.c.seed, i), a.c.threads);
        rows.insert(rows.end(), batch.begin(), batch.end());
        const DecayFit fit = fit_decay(batch);
        fits.push_back({{"p", a.ps[i]},
                        {"log_slope", fit.log_slope},
                        {"stderr", fit.se_slope},
                        {"decay_rate", fit.decay_rate()},
                        {"intercept", fit.intercept},
                        {"n_min", fit.n_min},
                        {"n_max", fit.n_max},
                        {"resid_rms", fit.resid_rms},
                        {"points_used", fit.used.size()}});
        std::cout << "decay p=" << a.ps[i] << ": log-slope " << fit.log_slope << " +- "
                  << fit.se_slope << " over n in [" << fit.n_min << ", " << fit.n_max << "]\n";
    }
    std::ostringstream os;
    write_estimates_csv(os, rows);
    write_text_file(dir / "estimates.csv", os.str());
    write_json_file(dir / "decay_fit.json", fits);
    emit_decay_plot(dir, "estimates.csv", "decay_fit.json");
    return 0;
}

// ---------------------------------------------------------------------------

struct MlemArgs {
    Common c;
    double p_min = 0.3, p_max = 0.7, p_step = 0.02;
    int nmax = 16;
    double L = 0, h = 0.1;
    std::int64_t trials = 2000;
};

int run_mlem(const MlemArgs& a, const fs::path& dir) {
    std::vector<double> ps;
    for (double p = a.p_min; p <= a.p_max + 1e-9; p += a.p_step) ps.push_back(p);
    const auto geom = make_geom<2>(resolve_L(a.L, a.nmax), 1.0, a.h);
    const auto tab = measure_theta_table<2>(geom, ps, a.nmax, a.trials, a.c.seed, a.c.threads);
    const auto rep = mlem_check(tab);
    std::ostringstream os;
    os << "p,n,theta,dtheta,S,ratio,ratio_stderr\n";
    for (const auto& cell : rep.cells) {
        os << detail::fmt_double(cell.p) << ',' << cell.n << ',' << detail::fmt_double(cell.theta)
           << ',' << detail::fmt_double(cell.dtheta) << ',' << detail::fmt_double(cell.S) << ','
           << detail::fmt_double(cell.ratio) << ',' << detail::fmt_double(cell.se) << '\n';
    }
    write_text_file(dir / "mlem_cells.csv", os.str());
    json out;
    out["c_hat"] = rep.c_hat;
    out["stderr_at_argmin"] = rep.se_at_argmin;
    out["argmin_p"] = rep.argmin_p;
    out["argmin_n"] = rep.argmin_n;
    out["excluded_cells"] = rep.excluded;
    out["significant"] = rep.significant;
    write_json_file(dir / "mlem_report.json", out);
    std::cout << "mlem: c_hat " << rep.c_hat << " (se " << rep.se_at_argmin << ") at p="
              << rep.argmin_p << ", n=" << rep.argmin_n
              << (rep.significant ? " [>0 at 3se]" : " [NOT significant]") << "\n";
    return rep.significant ? 0 : 4;
}

// ---------------------------------------------------------------------------

struct LemmaArgs {
    Common c;
    double M = 1.0, alpha0 = 0.0, alpha1 = 1.0;
    int N = 64;
    double boundary0 = 0.5, boundary_rate = 0.2;
    double slack = 1.0;
    std::size_t grid_points = 201;
    double margin = 0.05, tol = 0.02;
};

int run_lemma(const LemmaArgs& a, const fs::path& dir) {
    std::vector<double> boundary;
    for (int n = 0; n <= a.N; ++n)
        boundary.push_back(std::max(1e-12, a.boundary0 * std::exp(-a.boundary_rate * n)));
    const auto fam = integrate_lemma_system(a.M, a.alpha0, a.alpha1, a.N, boundary, a.slack,
                                            a.grid_points);
    const auto b1 = beta1_estimate(fam);
    std::ostringstream os;
    os << "beta,n,f\n";
    for (int n = 0; n <= fam.N(); ++n)
        for (std::size_t gi = 0; gi < fam.grid.size(); ++gi)
            os << detail::fmt_double(fam.grid[gi]) << ',' << n << ','
               << detail::fmt_double(fam.f[n][gi]) << '\n';
    write_text_file(dir / "family.csv", os.str());
    json out;
    out["beta1"] = b1.beta1;
    out["beta1_found"] = b1.found;
    bool pass = true;
    if (b1.found && b1.beta1 - a.margin > fam.alpha0) {
        const auto rep = verify_lemma_dichotomy(fam, b1.beta1, a.margin, a.tol);
        out["below_ok"] = rep.below_ok;
        out["above_ok"] = rep.above_ok;
        out["worst_slope"] = rep.worst_slope;
        out["worst_gap"] = rep.worst_gap;
        pass = rep.below_ok && rep.above_ok;
    }
    write_json_file(dir / "lemma_report.json", out);
    std::cout << "lemma: beta1 " << b1.beta1 << (b1.found ? "" : " (threshold never reached)")
              << (pass ? " dichotomy OK" : " dichotomy FAILED") << "\n";
    return pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Voronoi percolation simulation and verification engine"};
    app.require_subcommand(1);
    app.set_config("--config");

    SampleArgs sa;
    auto* sample = app.add_subcommand("sample", "draw one configuration and dump it");
    add_common(sample, sa.c);
    sample->add_option("--d", sa.d, "dimension")->check(CLI::Range(2, 3));
    sample->add_option("--L", sa.L, "window half-width");
    sample->add_option("--p", sa.p, "black intensity")->check(CLI::Range(0.0, 1.0));
    sample->add_option("--pitch", sa.pitch, "sampling grid pitch");
    sample->add_flag("--pgm", sa.pgm, "also dump the raster as PGM + owner CSV (d=2)");
    sample->add_flag("--components", sa.components, "also dump the black component labels CSV");
    sample->add_option("--raster-h", sa.raster_h, "raster pitch for --pgm/--components");

    ThetaArgs ta;
    auto* theta = app.add_subcommand("theta", "estimate theta_n(p) = P[0 <-> S_n]");
    add_common(theta, ta.c);
    theta->add_option("--d", ta.d)->check(CLI::Range(2, 3));
    theta->add_option("--p", ta.ps, "parameter values");
    theta->add_option("--n", ta.ns, "radii");
    theta->add_option("--L", ta.L, "window half-width (default: max n)");
    theta->add_option("--h-pitch", ta.h, "raster pitch");
    theta->add_option("--engine", ta.engine, "raster | delaunay2d");
    theta->add_option("--trials", ta.trials)->check(CLI::PositiveNumber);

    CrossingArgs ca;
    auto* crossing = app.add_subcommand("crossing", "estimate P[A_n], d = 2");
    add_common(crossing, ca.c);
    crossing->add_option("--p", ca.ps);
    crossing->add_option("--n", ca.ns);
    crossing->add_option("--L", ca.L);
    crossing->add_option("--h-pitch", ca.h);
    crossing->add_option("--engine", ca.engine);
    crossing->add_option("--trials", ca.trials)->check(CLI::PositiveNumber);

    InfluenceArgs ia;
    auto* influence = app.add_subcommand("influence", "per-box influence profile");
    add_common(influence, ia.c);
    influence->add_option("--d", ia.d)->check(CLI::Range(2, 3));
    influence->add_option("--p", ia.p);
    influence->add_option("--n", ia.n, "event radius for origin_to_sphere");
    influence->add_option("--eps", ia.eps, "tensorization pitch");
    influence->add_option("--L", ia.L);
    influence->add_option("--trials", ia.trials)->check(CLI::PositiveNumber);

    ExploreArgs ea;
    auto* explore = app.add_subcommand("explore", "run T_k and measure revealments");
    add_common(explore, ea.c);
    explore->add_option("--d", ea.d)->check(CLI::Range(2, 3));
    explore->add_option("--p", ea.p);
    explore->add_option("--k", ea.k, "seed sphere radius");
    explore->add_option("--n", ea.n, "decision radius");
    explore->add_option("--eps", ea.eps);
    explore->add_option("--h-pitch", ea.h);
    explore->add_option("--L", ea.L);
    explore->add_option("--trials", ea.trials)->check(CLI::PositiveNumber);

    std::string instance_path;
    auto* osss_exact_cmd = app.add_subcommand("osss-exact", "exact OSSS oracle on an instance");
    Common oc;
    add_common(osss_exact_cmd, oc);
    osss_exact_cmd->add_option("--instance", instance_path, "instance JSON")->required();

    OsssVoronoiArgs ova;
    auto* osss_v = app.add_subcommand("osss-voronoi", "OSSS inequality for {0 <-> S_n} with T_k");
    add_common(osss_v, ova.c);
    osss_v->add_option("--p", ova.p);
    osss_v->add_option("--n", ova.n);
    osss_v->add_option("--k", ova.k);
    osss_v->add_option("--eps", ova.eps);
    osss_v->add_option("--L", ova.L);
    osss_v->add_option("--trials", ova.trials)->check(CLI::PositiveNumber);

    PcArgs pa;
    auto* pc = app.add_subcommand("pc", "bracket the critical point");
    add_common(pc, pa.c);
    pc->add_option("--d", pa.d)->check(CLI::Range(2, 3));
    pc->add_option("--n1", pa.n1);
    pc->add_option("--n2", pa.n2);
    pc->add_option("--h-pitch", pa.h, "raster pitch (d=3)");
    pc->add_option("--trials", pa.trials)->check(CLI::PositiveNumber);

    DecayArgs da;
    auto* decay = app.add_subcommand("decay", "theta_n decay fit over n");
    add_common(decay, da.c);
    decay->add_option("--p", da.ps);
    decay->add_option("--n-min", da.n_min);
    decay->add_option("--n-max", da.n_max);
    decay->add_option("--n-step", da.n_step);
    decay->add_option("--L", da.L);
    decay->add_option("--h-pitch", da.h);
    decay->add_option("--trials", da.trials)->check(CLI::PositiveNumber);

    MlemArgs ma;
    auto* mlem = app.add_subcommand("mlem", "differential inequality check on a measured table");
    add_common(mlem, ma.c);
    mlem->add_option("--p-min", ma.p_min);
    mlem->add_option("--p-max", ma.p_max);
    mlem->add_option("--p-step", ma.p_step);
    mlem->add_option("--nmax", ma.nmax);
    mlem->add_option("--L", ma.L);
    mlem->add_option("--h-pitch", ma.h);
    mlem->add_option("--trials", ma.trials)->check(CLI::PositiveNumber);

    LemmaArgs la;
    auto* lemma = app.add_subcommand("lemma", "integrate the saturated system and verify the dichotomy");
    add_common(lemma, la.c);
    lemma->add_option("--M", la.M);
    lemma->add_option("--alpha0", la.alpha0);
    lemma->add_option("--alpha1", la.alpha1);
    lemma->add_option("--N", la.N);
    lemma->add_option("--boundary0", la.boundary0, "f_n(alpha0) prefactor");
    lemma->add_option("--boundary-rate", la.boundary_rate, "f_n(alpha0) = boundary0 exp(-rate n)");
    lemma->add_option("--slack", la.slack);
    lemma->add_option("--grid", la.grid_points);
    lemma->add_option("--margin", la.margin);
    lemma->add_option("--tol", la.tol);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help() << "\n";
        return 2;
    }

    try {
        if (*sample) {
            json prm{{"d", sa.d},         {"L", sa.L},     {"p", sa.p},
                     {"pitch", sa.pitch}, {"pgm", sa.pgm}, {"components", sa.components},
                     {"raster_h", sa.raster_h}};
            const auto dir = prepare_outdir(sa.c, make_manifest("sample", prm, sa.c.seed));
            return sa.d == 2 ? run_sample<2>(sa, dir) : run_sample<3>(sa, dir);
        }
        if (*theta) {
            json prm{{"d", ta.d},       {"p", ta.ps},           {"n", ta.ns},
                     {"L", ta.L},       {"h", ta.h},            {"engine", ta.engine},
                     {"trials", ta.trials}};
            const auto dir = prepare_outdir(ta.c, make_manifest("theta", prm, ta.c.seed));
            return ta.d == 2 ? run_theta<2>(ta, dir) : run_theta<3>(ta, dir);
        }
        if (*crossing) {
            json prm{{"p", ca.ps},      {"n", ca.ns}, {"L", ca.L},
                     {"h", ca.h},       {"engine", ca.engine}, {"trials", ca.trials}};
            const auto dir = prepare_outdir(ca.c, make_manifest("crossing", prm, ca.c.seed));
            return run_crossing(ca, dir);
        }
        if (*influence) {
            json prm{{"d", ia.d},     {"p", ia.p}, {"n", ia.n},
                     {"eps", ia.eps}, {"L", ia.L}, {"trials", ia.trials}};
            const auto dir = prepare_outdir(ia.c, make_manifest("influence", prm, ia.c.seed));
            return ia.d == 2 ? run_influence<2>(ia, dir) : run_influence<3>(ia, dir);
        }
        if (*explore) {
            json prm{{"d", ea.d}, {"p", ea.p},     {"k", ea.k},
                     {"n", ea.n}, {"eps", ea.eps}, {"h", ea.h},
                     {"L", ea.L}, {"trials", ea.trials}};
            const auto dir = prepare_outdir(ea.c, make_manifest("explore", prm, ea.c.seed));
            return ea.d == 2 ? run_explore<2>(ea, dir) : run_explore<3>(ea, dir);
        }
        if (*osss_exact_cmd) {
            std::ifstream is(instance_path);
            if (!is) throw parameter_error("cannot open instance file " + instance_path);
            std::stringstream buf;
            buf << is.rdbuf();
            json prm{{"instance_content_hash", short_hash(buf.str())}};
            const auto dir = prepare_outdir(oc, make_manifest("osss-exact", prm, oc.seed));
            return run_osss_exact(instance_path, dir);
        }
        if (*osss_v) {
            json prm{{"p", ova.p},       {"n", ova.n}, {"k", ova.k},
                     {"eps", ova.eps},   {"L", ova.L}, {"trials", ova.trials}};
            const auto dir = prepare_outdir(ova.c, make_manifest("osss-voronoi", prm, ova.c.seed));
            return run_osss_voronoi(ova, dir);
        }
        if (*pc) {
            json prm{{"d", pa.d}, {"n1", pa.n1}, {"n2", pa.n2}, {"h", pa.h}, {"trials", pa.trials}};
            const auto dir = prepare_outdir(pa.c, make_manifest("pc", prm, pa.c.seed));
            return run_pc(pa, dir);
        }
        if (*decay) {
            json prm{{"p", da.ps},        {"n_min", da.n_min}, {"n_max", da.n_max},
                     {"n_step", da.n_step}, {"L", da.L},       {"h", da.h},
                     {"trials", da.trials}};
            const auto dir = prepare_outdir(da.c, make_manifest("decay", prm, da.c.seed));
            return run_decay(da, dir);
        }
        if (*mlem) {
            json prm{{"p_min", ma.p_min}, {"p_max", ma.p_max}, {"p_step", ma.p_step},
                     {"nmax", ma.nmax},   {"L", ma.L},         {"h", ma.h},
                     {"trials", ma.trials}};
            const auto dir = prepare_outdir(ma.c, make_manifest("mlem", prm, ma.c.seed));
            return run_mlem(ma, dir);
        }
        if (*lemma) {
            json prm{{"M", la.M},
                     {"alpha0", la.alpha0},
                     {"alpha1", la.alpha1},
                     {"N", la.N},
                     {"boundary0", la.boundary0},
                     {"boundary_rate", la.boundary_rate},
                     {"slack", la.slack},
                     {"grid", la.grid_points},
                     {"margin", la.margin},
                     {"tol", la.tol}};
            const auto dir = prepare_outdir(la.c, make_manifest("lemma", prm, la.c.seed));
            return run_lemma(la, dir);
        }
    } catch (const parameter_error& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const resource_error& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return 3;
    } catch (const fit_error& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return 3;
    } catch (const window_too_small_error& e) {
        std::cerr << "window error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
