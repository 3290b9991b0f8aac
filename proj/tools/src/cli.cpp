// SPDX-License-Identifier: Apache-2.0
#include "stylebal/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "stylebal/error.hpp"
#include "stylebal/io.hpp"
#include "stylebal/rng.hpp"
#include "stylebal/textures.hpp"

namespace stylebal {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

bool is_image(const fs::path& p) { return p.extension() == ".ppm" || p.extension() == ".pgm"; }

/// Images of a directory sorted by file name; the id is the stem.
std::vector<NamedImage> read_image_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: '" + dir + "'");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_image(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .ppm or .pgm images in '" + dir + "'");
    std::vector<NamedImage> out;
    for (const auto& f : files) out.push_back({f.stem().string(), read_image(f.string())});
    return out;
}

fs::path find_image(const fs::path& dir, const std::string& id) {
    for (const char* ext : {".ppm", ".pgm"}) {
        const fs::path p = dir / (id + ext);
        if (fs::exists(p)) return p;
    }
    throw DataError("no image '" + id + "' in '" + dir.string() + "'");
}

/// Sink that is either a named file or the output stream.
class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {
        if (!path_.empty()) {
            file_.open(path_, std::ios::binary);
            if (!file_) throw DataError("cannot write '" + path_ + "'");
        }
    }
    std::ostream& stream() { return path_.empty() ? fallback_ : file_; }
    void close() {
        if (path_.empty()) return;
        file_.close();
        if (!file_) throw DataError("write to '" + path_ + "' failed");
    }

private:
    std::string path_;
    std::ostream& fallback_;
    std::ofstream file_;
};

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

// Flags shared by every subcommand that runs the feature network.
struct NetFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string weights;

    void add(CLI::App& app) {
        app.add_option("--config", config, "JSON run configuration");
        app.add_option("--seed", seed, "seed for network initialization and optimization");
        app.add_option("--weights", weights, "FNW1 weights file");
    }

    RunConfig load() const {
        RunConfig rc = config.empty() ? RunConfig{} : load_run_config(config);
        if (!weights.empty()) rc.net.weights_file = weights;
        if (seed) {
            rc.net.seed = *seed;
            rc.optimize.seed = *seed;
        }
        rc.optimize.loss = rc.loss;
        rc.validate();
        return rc;
    }
};

struct OptimizeFlags {
    std::optional<std::size_t> steps;
    std::optional<double> step_size;
    std::optional<double> beta;
    std::optional<std::string> init;
    std::optional<std::string> loss_kind;
    bool auto_beta = false;

    void add(CLI::App& app) {
        app.add_option("--steps", steps, "optimizer steps");
        app.add_option("--step-size", step_size, "Adam step size");
        app.add_option("--beta", beta, "style weight");
        app.add_option("--init", init, "initial image")->check(CLI::IsMember({"content", "noise"}));
        app.add_option("--loss-kind", loss_kind, "objective")->check(CLI::IsMember({"classic", "balanced"}));
        app.add_flag("--auto-beta", auto_beta, "calibrate beta so both terms start equal");
    }

    OptimizeConfig apply(const RunConfig& rc) const {
        OptimizeConfig cfg = rc.optimize;
        cfg.loss = rc.loss;
        if (steps) cfg.steps = *steps;
        if (step_size) cfg.step_size = *step_size;
        if (beta) cfg.loss.beta = *beta;
        if (init) cfg.init = *init == "noise" ? InitKind::noise : InitKind::content;
        if (loss_kind) cfg.loss_kind = *loss_kind == "balanced" ? LossKind::balanced : LossKind::classic;
        if (auto_beta) cfg.auto_beta = true;
        cfg.validate();
        return cfg;
    }
};

std::string path_or(const RunConfig& rc, const std::string& flag, const char* key) {
    if (!flag.empty()) return flag;
    const auto it = rc.paths.find(key);
    return it == rc.paths.end() ? std::string{} : it->second;
}

std::string require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing ") + flag);
    return value;
}

// ---------------------------------------------------------------------------

struct LossCmd {
    NetFlags net;
    std::string content, style, pastiche, dir, out;

    void add(CLI::App& app) {
        net.add(app);
        app.add_option("--content", content, "content image");
        app.add_option("--style", style, "style image");
        app.add_option("--pastiche", pastiche, "stylized image");
        app.add_option("--dir", dir, "directory with content/, style/ and pastiche/<content>__<style> images");
        app.add_option("-o,--out", out, "report CSV (default: output stream)");
    }

    int run(std::ostream& os) const {
        const RunConfig rc = net.load();
        const FeatNet fn = FeatNet::build(rc.net);
        std::vector<ReportRow> rows;
        if (!dir.empty()) {
            if (!content.empty() || !style.empty() || !pastiche.empty())
                throw UsageError("--dir excludes --content/--style/--pastiche");
            const fs::path root(dir);
            for (const auto& p : read_image_dir((root / "pastiche").string())) {
                const auto cut = p.id.find("__");
                if (cut == std::string::npos)
                    throw DataError("pastiche '" + p.id + "' is not named <content>__<style>");
                const std::string cid = p.id.substr(0, cut), sid = p.id.substr(cut + 2);
                const Image c = read_image(find_image(root / "content", cid).string());
                const Image s = read_image(find_image(root / "style", sid).string());
                for (auto& r : report_rows(p.id, cid, sid, score_pastiche(fn, c, s, p.image, rc.loss)))
                    rows.push_back(std::move(r));
            }
        } else {
            const std::string c = require(path_or(rc, content, "content"), "--content");
            const std::string s = require(path_or(rc, style, "style"), "--style");
            const std::string p = require(path_or(rc, pastiche, "pastiche"), "--pastiche");
            const PairScore score = score_pastiche(fn, read_image(c), read_image(s), read_image(p), rc.loss);
            rows = report_rows(stem(p), stem(c), stem(s), score);
        }
        Output o(path_or(rc, out, "output"), os);
        write_report_csv(o.stream(), rows);
        o.close();
        return kExitOk;
    }
};

struct StylizeCmd {
    NetFlags net;
    OptimizeFlags opt;
    std::string content, style, out, trajectory;

    void add(CLI::App& app) {
        net.add(app);
        opt.add(app);
        app.add_option("--content", content, "content image");
        app.add_option("--style", style, "style image");
        app.add_option("-o,--out", out, "pastiche image to write");
        app.add_option("--trajectory", trajectory, "trajectory CSV to write");
    }

    int run(std::ostream& os) const {
        const RunConfig rc = net.load();
        const OptimizeConfig cfg = opt.apply(rc);
        const FeatNet fn = FeatNet::build(rc.net);
        const Image c = read_image(require(path_or(rc, content, "content"), "--content"));
        const Image s = read_image(require(path_or(rc, style, "style"), "--style"));
        const std::string out_path = require(path_or(rc, out, "pastiche"), "--out");
        const StylizeResult r = stylize(fn, c, s, cfg);
        write_image(r.pastiche, out_path);
        const std::string traj = path_or(rc, trajectory, "trajectory");
        if (!traj.empty()) {
            Output o(traj, os);
            write_trajectory_csv(o.stream(), r);
            o.close();
        }
        os << "beta " << format_double(r.beta) << "\n"
           << "initial " << format_double(r.trajectory.front()) << "\n"
           << "final " << format_double(r.trajectory.back()) << "\n"
           << "classic " << format_double(r.final_score.classic_total) << "\n"
           << "balanced " << format_double(r.final_score.balanced_total) << "\n"
           << "content " << format_double(r.final_score.content) << "\n";
        return kExitOk;
    }
};

struct SweepCmd {
    NetFlags net;
    OptimizeFlags opt;
    std::string contents, styles, out, pastiche_dir, pairing = "all";
    std::size_t threads = 1;

    void add(CLI::App& app) {
        net.add(app);
        opt.add(app);
        app.add_option("--contents", contents, "directory of content images")->required();
        app.add_option("--styles", styles, "directory of style images")->required();
        app.add_option("-o,--out", out, "sweep CSV (default: output stream)");
        app.add_option("--pastiche-dir", pastiche_dir, "write <content>__<style>.ppm here");
        app.add_option("--pairing", pairing, "all or zip")->check(CLI::IsMember({"all", "zip"}));
        app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }

    int run(std::ostream& os) const {
        const RunConfig rc = net.load();
        const OptimizeConfig cfg = opt.apply(rc);
        const FeatNet fn = FeatNet::build(rc.net);
        const SweepOptions so{pairing == "zip" ? Pairing::zipped : Pairing::all_pairs, threads};
        const SweepResult r = sweep(fn, read_image_dir(contents), read_image_dir(styles), cfg, so);
        if (!pastiche_dir.empty()) {
            fs::create_directories(pastiche_dir);
            for (std::size_t i = 0; i < r.rows.size(); ++i)
                write_image(r.pastiches[i],
                            (fs::path(pastiche_dir) / (r.rows[i].content_id + "__" + r.rows[i].style_id + ".ppm")).string());
        }
        Output o(out, os);
        write_sweep_csv(o.stream(), r);
        o.close();
        return kExitOk;
    }
};

std::vector<double> tap_column(const std::vector<ReportRow>& rows, const std::string& tap, Metric m) {
    std::vector<double> v;
    for (const auto& r : rows)
        if (r.tap == tap) v.push_back(metric_value(r, m));
    if (v.empty()) throw DataError("report has no rows for tap '" + tap + "'");
    return v;
}

std::vector<std::string> report_taps(const std::vector<ReportRow>& rows) {
    std::vector<std::string> taps;
    for (const auto& r : rows)
        if (r.tap != "total" && std::find(taps.begin(), taps.end(), r.tap) == taps.end()) taps.push_back(r.tap);
    return taps;
}

struct AnalyzeCmd {
    std::string mode, report, annotations, out, metric = "balanced", tap = "total", x = "sup", y = "classic";
    std::size_t bins = 20;
    std::optional<double> lo, hi;
    std::vector<std::string> weights;

    void add(CLI::App& app) {
        app.add_option("mode", mode, "corr, hist or fit")->required()->check(CLI::IsMember({"corr", "hist", "fit"}));
        app.add_option("--report", report, "report CSV")->required();
        app.add_option("--annotations", annotations, "annotation CSV (corr)");
        app.add_option("-o,--out", out, "statistics CSV (default: output stream)");
        app.add_option("--metric", metric, "classic, sup, inf or balanced (corr, hist)");
        app.add_option("--tap", tap, "tap or total (hist)");
        app.add_option("--bins", bins, "bin count (hist)")->check(CLI::PositiveNumber);
        app.add_option("--lo", lo, "histogram lower edge (default: min)");
        app.add_option("--hi", hi, "histogram upper edge (default: max)");
        app.add_option("--x", x, "fit regressor metric");
        app.add_option("--y", y, "fit response metric");
        app.add_option("--weight", weights, "tap=weight for the corr total, repeatable");
    }

    int run(std::ostream& os) const {
        auto in = open_in(report);
        const auto rows = read_report_csv(in);
        Output o(out, os);
        std::ostream& w = o.stream();
        if (mode == "corr") {
            if (annotations.empty()) throw UsageError("analyze corr needs --annotations");
            std::map<std::string, double> wmap;
            for (const auto& kv : weights) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw UsageError("--weight expects tap=value, got '" + kv + "'");
                wmap[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            }
            auto ain = open_in(annotations);
            const auto table = loss_table_from_report(rows, parse_metric(metric), wmap);
            w << "column,r\n";
            for (const auto& c : correlation_report(table, read_annotations_csv(ain)))
                w << c.column << "," << format_double(c.r) << "\n";
        } else if (mode == "hist") {
            const auto v = tap_column(rows, tap, parse_metric(metric));
            const double a = lo.value_or(*std::min_element(v.begin(), v.end()));
            const double b = hi.value_or(*std::max_element(v.begin(), v.end()));
            const Histogram h = histogram(v, bins, a, b);
            w << "lo,hi,count\n";
            for (std::size_t i = 0; i < bins; ++i)
                w << format_double(a + (b - a) * i / bins) << "," << format_double(a + (b - a) * (i + 1) / bins) << ","
                  << h.counts[i] << "\n";
            w << "-inf," << format_double(a) << "," << h.underflow << "\n";
            w << format_double(b) << ",inf," << h.overflow << "\n";
        } else {
            const Metric mx = parse_metric(x), my = parse_metric(y);
            w << "tap,slope,intercept,r\n";
            for (const auto& t : report_taps(rows)) {
                const LinearFit f = linear_fit(tap_column(rows, t, mx), tap_column(rows, t, my));
                w << t << "," << format_double(f.slope) << "," << format_double(f.intercept) << ","
                  << format_double(f.r) << "\n";
            }
        }
        o.close();
        return kExitOk;
    }
};

struct DeceptionCmd {
    std::string stylized, styles;

    void add(CLI::App& app) {
        app.add_option("--stylized", stylized, "feature bank of stylized images")->required();
        app.add_option("--styles", styles, "feature bank of style images")->required();
    }

    int run(std::ostream& os) const {
        auto a = open_in(stylized);
        auto b = open_in(styles);
        const FeatureBank sb = read_feature_bank_csv(a);
        os << format_double(deception_rate(sb, read_feature_bank_csv(b))) << "\n";
        return kExitOk;
    }
};

MomentSpec moment_spec(const json& j, const std::string& name) {
    if (!j.is_object()) throw DataError("moment spec '" + name + "' must be an object");
    if (j.contains("uniform")) {
        const auto& u = j.at("uniform");
        if (j.size() != 1 || !u.is_array() || u.size() != 2)
            throw DataError("'" + name + "': uniform expects [lo, hi]");
        return MomentSpec(UniformSampler{u[0].get<double>(), u[1].get<double>()});
    }
    if (j.contains("point")) {
        if (j.size() != 1) throw DataError("'" + name + "': point takes no other keys");
        return MomentSpec::point_mass(j.at("point").get<double>());
    }
    for (const auto& [k, v] : j.items())
        if (k != "values" && k != "probs") throw DataError("'" + name + "': unknown key '" + k + "'");
    DiscreteSampler d;
    d.values = j.at("values").get<std::vector<double>>();
    d.probs = j.contains("probs") ? j.at("probs").get<std::vector<double>>()
                                  : std::vector<double>(d.values.size(), 1.0 / static_cast<double>(d.values.size()));
    return MomentSpec(std::move(d));
}

struct McboundsCmd {
    std::string spec;
    std::size_t trials = 100000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::optional<double> k;

    void add(CLI::App& app) {
        app.add_option("--spec", spec, "JSON {\"a\": sampler, \"b\": sampler}")->required();
        app.add_option("--trials", trials, "Monte-Carlo trials");
        app.add_option("--seed", seed, "random seed");
        app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        app.add_option("--k", k, "also report the relaxed bounds with this constant");
    }

    int run(std::ostream& os) const {
        const auto bytes = read_file(spec);
        json j;
        try {
            j = json::parse(bytes.begin(), bytes.end());
        } catch (const json::exception& e) {
            throw DataError(spec + ": " + e.what());
        }
        McResult mc;
        BoundPair relaxed;
        try {
            for (const auto& [key, v] : j.items())
                if (key != "a" && key != "b") throw DataError("unknown key '" + key + "'");
            const MomentSpec a = moment_spec(j.at("a"), "a"), b = moment_spec(j.at("b"), "b");
            mc = mc_expectation_bounds(a, b, trials, seed, threads);
            if (k) relaxed = relaxed_bounds(a, b, *k);
        } catch (const json::exception& e) {
            throw DataError(spec + ": " + e.what());
        }
        json r = {{"estimate", mc.estimate},  {"standard_error", mc.standard_error},
                  {"lower", mc.lower},        {"upper", mc.upper},
                  {"within", mc.within},      {"trials", mc.trials}};
        if (k) r["relaxed"] = {{"k", *k}, {"lower", relaxed.lower}, {"upper", relaxed.upper}};
        os << r.dump(2) << "\n";
        return mc.within ? kExitOk : kExitCheckFailed;
    }
};

struct GradcheckCmd {
    std::uint64_t seed = 0;
    std::size_t instances = 100;
    bool network = false;
    double tol = 1e-6;
    double net_tol = 1e-4;

    void add(CLI::App& app) {
        app.add_option("--seed", seed, "random seed");
        app.add_option("--instances", instances, "random feature-level instances");
        app.add_flag("--network", network, "also check pixel gradients through the default net on 8x8 images");
        app.add_option("--tol", tol, "feature-level tolerance");
        app.add_option("--net-tol", net_tol, "network tolerance");
    }

    int run(std::ostream& os, std::ostream& es) const {
        const GradcheckReport r = run_gradcheck(seed, instances, network);
        os << "classic " << format_double(r.classic) << "\n"
           << "balanced " << format_double(r.balanced) << "\n"
           << "content " << format_double(r.content) << "\n";
        if (network) os << "network " << format_double(r.network) << "\n";
        os << "max_rel_error " << format_double(r.feature_max()) << "\n";
        bool ok = r.feature_max() <= tol;
        if (network) ok = ok && r.network <= net_tol;
        if (!ok) es << "gradcheck: tolerance exceeded\n";
        return ok ? kExitOk : kExitCheckFailed;
    }
};

struct SelftestCmd {
    std::string out;

    void add(CLI::App& app) { app.add_option("-o,--out", out, "fixture results CSV"); }

    int run(std::ostream& os, std::ostream& es) const {
        const auto results = run_selftest();
        if (!out.empty()) {
            Output o(out, os);
            o.stream() << "fixture,status,value\n";
            for (const auto& r : results) {
                const char* status = r.known ? (r.pass ? "xpass" : "xfail") : (r.pass ? "pass" : "fail");
                o.stream() << r.name << "," << status << "," << format_double(r.value) << "\n";
            }
            o.close();
        }
        std::size_t passed = 0, xfail = 0;
        for (const auto& r : results) {
            passed += r.pass;
            xfail += r.known && !r.pass;
        }
        for (const auto& r : results)
            if (r.known && !r.pass) es << "selftest: known failure " << r.name << ": " << r.detail << "\n";
        const auto bad =
            std::find_if(results.begin(), results.end(), [](const auto& r) { return !r.pass && !r.known; });
        if (bad != results.end()) {
            es << "selftest: first failing fixture " << bad->name << ": " << bad->detail << "\n";
            os << passed << "/" << results.size() << " fixtures passed, " << xfail << " known failures\n";
            return kExitCheckFailed;
        }
        os << passed << "/" << results.size() << " fixtures passed, " << xfail << " known failures\n";
        return kExitOk;
    }
};

struct GenTexturesCmd {
    std::string out, prefix = "t";
    std::size_t count = 1, size = 64;
    std::uint64_t seed = 0;

    void add(CLI::App& app) {
        app.add_option("-o,--out", out, "output directory")->required();
        app.add_option("--count", count, "number of textures")->check(CLI::PositiveNumber);
        app.add_option("--size", size, "edge length in pixels")->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "random seed");
        app.add_option("--prefix", prefix, "file name prefix");
    }

    int run(std::ostream& os) const {
        fs::create_directories(out);
        for (std::size_t i = 0; i < count; ++i) {
            std::ostringstream name;
            name << prefix << (i < 10 ? "0" : "") << i << ".ppm";
            const fs::path p = fs::path(out) / name.str();
            write_image(procedural_texture(size, size, derive_key(seed, i)), p.string());
            os << p.string() << "\n";
        }
        return kExitOk;
    }
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gram-matrix style losses, balanced style loss, stylization and evaluation", "stylebal"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "full help");

    LossCmd loss;
    StylizeCmd styl;
    SweepCmd swp;
    AnalyzeCmd ana;
    DeceptionCmd dec;
    McboundsCmd mcb;
    GradcheckCmd gc;
    SelftestCmd st;
    GenTexturesCmd gen;
    loss.add(*app.add_subcommand("loss", "score content/style/pastiche triples into a report CSV"));
    styl.add(*app.add_subcommand("stylize", "optimize one pastiche"));
    swp.add(*app.add_subcommand("sweep", "stylize every content/style pair of two directories"));
    ana.add(*app.add_subcommand("analyze", "statistics over a report CSV"));
    dec.add(*app.add_subcommand("deception", "nearest-neighbor artist agreement of two feature banks"));
    mcb.add(*app.add_subcommand("mcbounds", "Monte-Carlo check of the expectation bounds"));
    gc.add(*app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients"));
    st.add(*app.add_subcommand("selftest", "run the embedded fixture suite"));
    gen.add(*app.add_subcommand("gen-textures", "write procedural texture images"));

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return kExitOk;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return kExitOk;
        } catch (const CLI::ParseError& e) {
            err << "stylebal: " << e.what() << "\n";
            return kExitUsage;
        }
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "loss") return loss.run(out);
        if (name == "stylize") return styl.run(out);
        if (name == "sweep") return swp.run(out);
        if (name == "analyze") return ana.run(out);
        if (name == "deception") return dec.run(out);
        if (name == "mcbounds") return mcb.run(out);
        if (name == "gradcheck") return gc.run(out, err);
        if (name == "selftest") return st.run(out, err);
        return gen.run(out);
    } catch (const UsageError& e) {
        err << "stylebal: usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "stylebal: config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "stylebal: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        err << "stylebal: bad number: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "stylebal: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace stylebal
