// Command line front end: loads an ExperimentConfig, runs one of the
// drivers and writes the report in the requested format. Exit codes:
// 0 success, 2 bad configuration or unreadable input, 3 monitor breach
// (or failed replay verification) under --strict.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vclab/decomposition.hpp"
#include "vclab/harness.hpp"
#include "vclab/lepingle.hpp"

using namespace vclab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + path.string());
    out << content;
}

std::string render(const ExperimentReport& rep, const std::string& format) {
    if (format == "csv") return rep.to_csv();
    if (format == "svg") return rep.to_svg();
    return rep.to_json();
}

double slope_of(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(xs.size());
    my /= double(xs.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

ExperimentReport lepingle_report(const ExperimentConfig& cfg) {
    const Weight w = make_weight(cfg.weight, cfg.n);
    ExperimentReport rep;
    rep.kind = "lepingle";
    rep.config = config_digest(cfg);
    rep.seed = cfg.seed;
    rep.r_clears_threshold = clears_variation_threshold(cfg.p, cfg.q, cfg.r);
    for (int t = 0; t < cfg.trials; ++t) {
        Rng rng = Rng::stream(cfg.seed, std::uint64_t(t));
        const Signal f = family_member(cfg.family, cfg.n, rng);
        bool degenerate = false;
        const double ratio = lepingle_ratio(lp_family(f, 2.0), cfg.r, cfg.p, w, &degenerate);
        rep.ratios.push_back(degenerate ? 0.0 : ratio);
    }
    for (double v : rep.ratios) rep.max_ratio = std::max(rep.max_ratio, v);
    std::vector<double> sorted = rep.ratios;
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty())
        rep.median_ratio = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                             : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                                      sorted[sorted.size() / 2]);
    return rep;
}

ExperimentReport tree_report(const ExperimentConfig& cfg) {
    const std::vector<std::size_t> ns =
        cfg.n_grid.empty() ? std::vector<std::size_t>{cfg.n} : cfg.n_grid;
    ExperimentReport rep;
    rep.kind = "tree-estimate";
    rep.config = config_digest(cfg);
    rep.seed = cfg.seed;
    rep.r_clears_threshold = clears_variation_threshold(cfg.p, cfg.q, cfg.r);
    rep.n_grid = ns;
    SweepCell cell;
    cell.r = cfg.r;
    cell.a = cfg.weight.kind == "power" ? cfg.weight.a : 0.0;
    std::vector<double> xs, ys;
    for (std::size_t n : ns) {
        ExperimentConfig sub = cfg;
        sub.n = n;
        sub.n_grid.clear();
        const ExperimentReport one = run_decomposition_report(sub);
        if (!one.decomp.all_certified) rep.decomp.all_certified = false;
        if (!one.decomp.separation_ok) rep.decomp.separation_ok = false;
        const double v = one.decomp.max_tree_ratio;
        cell.max_ratios.push_back(v);
        rep.max_ratio = std::max(rep.max_ratio, v);
        if (v > 0.0) {
            xs.push_back(std::log2(double(n)));
            ys.push_back(std::log2(v));
        }
    }
    cell.slope = slope_of(xs, ys);
    rep.cells.push_back(std::move(cell));
    return rep;
}

int replay(const ExperimentConfig& cfg, const std::string& path, bool strict) {
    const std::string text = slurp(path);
    TileCollection parsed(cfg.n, AdmissibleConstants{}, {});
    const DecompositionResult res = result_from_json(text, parsed);
    Rng rng = Rng::stream(cfg.seed, 0);
    const DecompositionInstance inst = make_decomposition_instance(cfg, rng);
    const Weight w = make_weight(cfg.weight, cfg.n);
    std::string why;
    const bool ok = reverify(parsed, res, inst.f, &inst.g, w, &inst.lin, &why);
    if (ok) {
        std::cout << "replay " << path << ": verified, " << res.selections.size()
                  << " selections\n";
        return 0;
    }
    std::cout << "replay " << path << ": FAILED (" << why << ")\n";
    return strict ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seeded experiments with truncation operators, weights and tile"
                 " decompositions on the discrete torus"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", format = "json", replay_path;
    std::uint64_t seed = 0;
    bool strict = false;
    app.add_option("--config", config_path, "experiment config (JSON, strict keys)");
    CLI::Option* seed_opt = app.add_option("--seed", seed, "override the config seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--format", format, "report format")
        ->check(CLI::IsMember({"csv", "json", "svg"}));
    app.add_flag("--strict", strict, "exit 3 when a monitor breaches");

    CLI::App* variation =
        app.add_subcommand("variation", "variational truncation norm-ratio estimate");
    CLI::App* carleson =
        app.add_subcommand("carleson", "maximal truncation norm-ratio estimate");
    CLI::App* apconst =
        app.add_subcommand("apconst", "Muckenhoupt constant of the configured weight");
    CLI::App* decompose =
        app.add_subcommand("decompose", "certified size/density decomposition report");
    decompose->add_option("--replay", replay_path,
                          "re-verify a stored decomposition result against regenerated data");
    CLI::App* tree =
        app.add_subcommand("tree-estimate", "per-tree estimate ratios across the n grid");
    CLI::App* lepingle =
        app.add_subcommand("lepingle", "scale-decomposition comparison ratios");
    CLI::App* sweep = app.add_subcommand("sweep-r", "max-ratio growth over the (r, a, n) grids");
    CLI::App* full =
        app.add_subcommand("report", "norm-ratio, lepingle and decomposition in one pass");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = config_from_json(slurp(config_path));
        if (seed_opt->count() > 0) cfg.seed = seed;

        const std::filesystem::path out(out_dir);
        std::filesystem::create_directories(out);

        const auto emit = [&](const ExperimentReport& rep, const std::string& name) {
            const std::filesystem::path path = out / (name + "." + format);
            spill(path, render(rep, format));
            std::cout << "wrote " << path.string() << "\n";
        };

        bool breach = false;
        if (*variation || *carleson) {
            cfg.op = *variation ? "svar" : "carleson-sup";
            const ExperimentReport rep = estimate_norm_ratio(cfg);
            emit(rep, *variation ? "variation" : "carleson");
            breach = !rep.monitors_ok();
        } else if (*apconst) {
            const Weight w = make_weight(cfg.weight, cfg.n);
            const double ap = ap_constant(w, cfg.p);
            const double gamma = doubling_exponent(w);
            std::ostringstream body;
            if (format == "csv") {
                body << "metric,value\nap_constant," << ap << "\ndoubling_exponent," << gamma
                     << "\n";
            } else if (format == "svg") {
                body << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 80\">"
                     << "<text x=\"20\" y=\"40\">A_p = " << ap << ", doubling = " << gamma
                     << "</text></svg>\n";
            } else {
                nlohmann::json j;
                j["ap_constant"] = ap;
                j["doubling_exponent"] = gamma;
                j["kind"] = cfg.weight.kind;
                j["a"] = cfg.weight.a;
                j["n"] = cfg.n;
                j["p"] = cfg.p;
                body << j.dump() << "\n";
            }
            const std::filesystem::path path = out / ("apconst." + format);
            spill(path, body.str());
            std::cout << "wrote " << path.string() << " (A_p = " << ap << ")\n";
            breach = !std::isfinite(ap);
        } else if (*decompose) {
            if (!replay_path.empty()) return replay(cfg, replay_path, strict);
            const ExperimentReport rep = run_decomposition_report(cfg);
            emit(rep, "decompose");
            breach = !rep.monitors_ok();
            Rng rng = Rng::stream(cfg.seed, 0);
            const DecompositionInstance inst = make_decomposition_instance(cfg, rng);
            if (inst.coll.size() > 0) {
                const Weight w = make_weight(cfg.weight, cfg.n);
                const double sz = collection_size(inst.coll, inst.f, w);
                if (sz > 0.0) {
                    const auto res = size_decompose(inst.coll, inst.f, w, 0.6 * sz);
                    spill(out / "size_result.json", result_to_json(inst.coll, res));
                    std::cout << "wrote " << (out / "size_result.json").string() << "\n";
                }
                const double dn = collection_density(inst.coll, inst.g, w, inst.lin);
                if (dn > 0.0) {
                    const auto res = density_decompose(inst.coll, inst.g, w, inst.lin, 0.6 * dn);
                    spill(out / "density_result.json", result_to_json(inst.coll, res));
                    std::cout << "wrote " << (out / "density_result.json").string() << "\n";
                }
            }
        } else if (*tree) {
            const ExperimentReport rep = tree_report(cfg);
            emit(rep, "tree_estimate");
            breach = !rep.monitors_ok();
        } else if (*lepingle) {
            const ExperimentReport rep = lepingle_report(cfg);
            emit(rep, "lepingle");
            breach = !rep.monitors_ok();
        } else if (*sweep) {
            const ExperimentReport rep = sweep_r(cfg);
            emit(rep, "sweep");
            breach = !rep.monitors_ok();
        } else if (*full) {
            const ExperimentReport ratio = estimate_norm_ratio(cfg);
            const ExperimentReport lep = lepingle_report(cfg);
            const ExperimentReport dec = run_decomposition_report(cfg);
            emit(ratio, "norm_ratio");
            emit(lep, "lepingle");
            emit(dec, "decomposition");
            nlohmann::json index;
            index["config"] = config_digest(cfg);
            index["seed"] = cfg.seed;
            index["norm_ratio"] = ratio.digest();
            index["lepingle"] = lep.digest();
            index["decomposition"] = dec.digest();
            if (cfg.r_grid.size() >= 2 && cfg.n_grid.size() >= 2) {
                const ExperimentReport sw = sweep_r(cfg);
                emit(sw, "sweep");
                index["sweep"] = sw.digest();
                if (!sw.monitors_ok()) breach = true;
            }
            spill(out / "index.json", index.dump() + "\n");
            std::cout << "wrote " << (out / "index.json").string() << "\n";
            breach = breach || !ratio.monitors_ok() || !lep.monitors_ok() || !dec.monitors_ok();
        }
        return breach && strict ? 3 : 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
