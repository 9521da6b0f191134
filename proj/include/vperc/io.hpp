#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vperc/errors.hpp"
#include "vperc/estimate.hpp"
#include "vperc/point_process.hpp"

namespace vperc {

using json = nlohmann::ordered_json;

/// CSV schema shared by every estimate-producing subcommand.
inline void write_estimates_csv(std::ostream& os, const std::vector<Estimate>& rows) {
    os << "p,n,event,engine,h,eps,trials,mean,stderr,seed\n";
    for (const auto& e : rows) {
        os << detail::fmt_double(e.p) << ',' << detail::fmt_double(e.n) << ',' << e.event << ','
           << e.engine << ',' << detail::fmt_double(e.h) << ',' << detail::fmt_double(e.eps) << ','
           << e.trials << ',' << detail::fmt_double(e.mean) << ',' << detail::fmt_double(e.se)
           << ',' << e.seed << '\n';
    }
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string short_hash(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%012llx",
                  static_cast<unsigned long long>(fnv1a(s) & 0xffffffffffffull));
    return buf;
}

/// Experiment manifest. The manifest plus the binary version determine every
/// output byte; worker-pool width is deliberately not part of it because
/// results are thread-count independent.
inline json make_manifest(const std::string& subcommand, const json& params,
                          std::uint64_t seed) {
    json m;
    m["schema"] = 1;
    m["tool"] = "vperc";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["seed"] = seed;
    m["params"] = params;
    return m;
}

/// Content-addressed output directory: out_base/<subcommand>-<hash(manifest)>.
inline std::filesystem::path resolve_outdir(const std::string& explicit_out,
                                            const std::string& out_base, const json& manifest) {
    if (!explicit_out.empty()) return explicit_out;
    return std::filesystem::path(out_base) /
           (manifest.at("subcommand").get<std::string>() + "-" + short_hash(manifest.dump()));
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw resource_error("cannot open for writing: " + path.string());
    os << content;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// --- plot script emission ----------------------------------------------------

namespace detail {
inline void require_exists(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p))
        throw parameter_error("emit_plots: missing result file " + p.string());
}
}  // namespace detail

/// Log-linear decay curves with the fitted line overlaid.
inline std::filesystem::path emit_decay_plot(const std::filesystem::path& dir,
                                             const std::string& estimates_csv,
                                             const std::string& fit_json) {
    detail::require_exists(dir / estimates_csv);
    detail::require_exists(dir / fit_json);
    const std::string script =
        "#!/usr/bin/env python3\n"
        "import csv, json, math\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n"
        "rows = list(csv.DictReader(open('" + estimates_csv + "')))\n"
        "fits = json.load(open('" + fit_json + "'))\n"
        "ps = sorted({r['p'] for r in rows})\n"
        "for p in ps:\n"
        "    sel = [r for r in rows if r['p'] == p and float(r['mean']) > 0]\n"
        "    ns = [float(r['n']) for r in sel]\n"
        "    ms = [float(r['mean']) for r in sel]\n"
        "    es = [float(r['stderr']) for r in sel]\n"
        "    plt.errorbar(ns, ms, yerr=es, fmt='o', ms=3, label=f'p={p}')\n"
        "for fit in fits if isinstance(fits, list) else [fits]:\n"
        "    lo, hi = fit['n_min'], fit['n_max']\n"
        "    xs = [lo + (hi - lo) * i / 50 for i in range(51)]\n"
        "    ys = [math.exp(fit['intercept'] + fit['log_slope'] * x) for x in xs]\n"
        "    plt.plot(xs, ys, '-', lw=1)\n"
        "plt.yscale('log')\n"
        "plt.xlabel('n')\n"
        "plt.ylabel('theta_n')\n"
        "plt.legend()\n"
        "plt.savefig('decay.png', dpi=150, bbox_inches='tight')\n";
    const auto path = dir / "plot_decay.py";
    write_text_file(path, script);
    return path;
}

/// Heat map of a per-box CSV column over the plane (d = 2).
inline std::filesystem::path emit_heatmap_plot(const std::filesystem::path& dir,
                                               const std::string& csv_name,
                                               const std::string& value_column,
                                               const std::string& out_png) {
    detail::require_exists(dir / csv_name);
    const std::string script =
        "#!/usr/bin/env python3\n"
        "import csv\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n"
        "rows = list(csv.DictReader(open('" + csv_name + "')))\n"
        "xs = sorted({float(r['x1']) for r in rows})\n"
        "ys = sorted({float(r['x2']) for r in rows})\n"
        "ix = {v: i for i, v in enumerate(xs)}\n"
        "iy = {v: i for i, v in enumerate(ys)}\n"
        "grid = [[0.0] * len(xs) for _ in ys]\n"
        "for r in rows:\n"
        "    grid[iy[float(r['x2'])]][ix[float(r['x1'])]] = float(r['" + value_column + "'])\n"
        "plt.imshow(grid, origin='lower', extent=(xs[0], xs[-1], ys[0], ys[-1]), cmap='viridis')\n"
        "plt.colorbar(label='" + value_column + "')\n"
        "plt.savefig('" + out_png + "', dpi=150, bbox_inches='tight')\n";
    const auto path = dir / ("plot_" + value_column + ".py");
    write_text_file(path, script);
    return path;
}

/// theta(p) curves per n from the shared estimates CSV.
inline std::filesystem::path emit_theta_plot(const std::filesystem::path& dir,
                                             const std::string& estimates_csv) {
    detail::require_exists(dir / estimates_csv);
    const std::string script =
        "#!/usr/bin/env python3\n"
        "import csv\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n"
        "rows = list(csv.DictReader(open('" + estimates_csv + "')))\n"
        "ns = sorted({float(r['n']) for r in rows})\n"
        "for n in ns:\n"
        "    sel = sorted([r for r in rows if float(r['n']) == n], key=lambda r: float(r['p']))\n"
        "    plt.errorbar([float(r['p']) for r in sel], [float(r['mean']) for r in sel],\n"
        "                 yerr=[float(r['stderr']) for r in sel], fmt='o-', ms=3, label=f'n={n}')\n"
        "plt.xlabel('p')\n"
        "plt.ylabel('probability')\n"
        "plt.legend()\n"
        "plt.savefig('theta.png', dpi=150, bbox_inches='tight')\n";
    const auto path = dir / "plot_theta.py";
    write_text_file(path, script);
    return path;
}

/// Emit the standard plot scripts for a results directory, inferring what is
/// present from the file names. Errors out if none of the inputs exist.
inline std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> produced;
    namespace fs = std::filesystem;
    if (fs::exists(dir / "estimates.csv") && fs::exists(dir / "decay_fit.json"))
        produced.push_back(emit_decay_plot(dir, "estimates.csv", "decay_fit.json"));
    else if (fs::exists(dir / "estimates.csv"))
        produced.push_back(emit_theta_plot(dir, "estimates.csv"));
    if (fs::exists(dir / "influence.csv"))
        produced.push_back(emit_heatmap_plot(dir, "influence.csv", "mean", "influence.png"));
    if (fs::exists(dir / "revealment.csv"))
        produced.push_back(emit_heatmap_plot(dir, "revealment.csv", "delta_mean", "revealment.png"));
    if (produced.empty()) throw parameter_error("emit_plots: no result files in " + dir.string());
    return produced;
}

}  // namespace vperc
