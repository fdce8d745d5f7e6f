// mahler_lab: volume products, normalisation and the lower-bound chain from the command line.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mahler/body_json.hpp"
#include "mahler/bound2d.hpp"
#include "mahler/bound3d.hpp"
#include "mahler/normalize.hpp"
#include "mahler/quadrature.hpp"
#include "mahler/report.hpp"

using namespace mahler;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Options {
    std::string body;
    std::string grid = "128x256";
    int curve = 512;
    std::string out;
    std::uint64_t seed = 1;
    int threads = 0;
    bool timing = false;
    int samples = 256;
    int n = 5;
    int scan = 9;
    bool normalize_first = false;
};

std::pair<int, int> parse_grid(const std::string& s)
{
    const auto x = s.find('x');
    int a = 0, b = 0;
    if (x == std::string::npos)
        throw Error(ErrorKind::ParseError, "grid must look like 128x256");
    const auto r1 = std::from_chars(s.data(), s.data() + x, a);
    const auto r2 = std::from_chars(s.data() + x + 1, s.data() + s.size(), b);
    if (r1.ec != std::errc() || r1.ptr != s.data() + x || r2.ec != std::errc() || r2.ptr != s.data() + s.size())
        throw Error(ErrorKind::ParseError, "grid must look like 128x256");
    return {a, b};
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json mat_json(const Mat3& m)
{
    Json j = Json::array();
    for (int i = 0; i < 3; ++i)
        j.push_back(vec_json(m.row(i).transpose()));
    return j;
}

template <class A>
Json arr_json(const A& a)
{
    Json j = Json::array();
    for (const auto& x : a)
        j.push_back(x);
    return j;
}

class Runner {
public:
    Runner(std::string command, Options opt) : command_(std::move(command)), opt_(std::move(opt)) {}

    int run(const std::string& sub)
    {
        const auto start = std::chrono::steady_clock::now();
        if (opt_.threads > 0)
            set_thread_count(opt_.threads);
        const std::string text = read_text_file(opt_.body);
        input_digest_ = digest(text);
        file_ = parse_body_text(text);
        const auto [na, nb] = parse_grid(opt_.grid);
        grid_ = make_grid(na, nb);

        Json results;
        int status = 0;
        if (sub == "vp")
            status = vp(results);
        else if (sub == "polar")
            return polar_cmd();
        else if (sub == "normalize")
            status = normalize_cmd(results);
        else if (sub == "verify")
            status = verify_cmd(results);
        else if (sub == "winding")
            return winding_cmd();
        else if (sub == "sweep")
            return sweep_cmd();
        else if (sub == "verify2")
            status = verify2_cmd(results);

        Json report;
        report["tool"] = "mahler_lab";
        report["version"] = kVersion;
        report["command"] = command_;
        report["input_digest"] = input_digest_;
        report["grid"] = {{"n_alpha", grid_.n_alpha}, {"n_beta", grid_.n_beta}};
        report["curve"] = opt_.curve;
        report["results"] = results;
        if (opt_.timing)
            report["wall_time_s"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const std::string dumped = report.dump(2) + "\n";
        if (!opt_.out.empty())
            write_file(opt_.out, dumped);
        else if (sub == "normalize" || sub == "verify")
            std::cout << dumped;
        return status;
    }

private:
    const ConvexBody3& body3()
    {
        if (!file_.body)
            throw Error(ErrorKind::BadParameter, "this command needs a three-dimensional body");
        return *file_.body;
    }

    const Polygon2& body2()
    {
        if (!file_.polygon)
            throw Error(ErrorKind::BadParameter, "this command needs a planar body (\"dim\": 2)");
        return *file_.polygon;
    }

    int vp(Json& results)
    {
        double v, pv;
        double bound;
        if (file_.polygon) {
            v = file_.polygon->area();
            pv = polar2(*file_.polygon).area();
            bound = 8.0;
        } else {
            v = volume(*file_.body, grid_);
            pv = polar_volume(*file_.body, grid_);
            bound = 32.0 / 3.0;
        }
        const double p = v * pv;
        std::cout << "volume " << fmt(v) << "\npolar_volume " << fmt(pv) << "\nproduct " << fmt(p) << "\n";
        results = {{"volume", v}, {"polar_volume", pv}, {"product", p}, {"bound", bound}};
        return p >= bound * (1 - 1e-6) ? 0 : 4;
    }

    int polar_cmd()
    {
        const Json j = file_.polygon ? polygon_to_json(polar2(*file_.polygon)) : body_to_json(polar(body3()));
        const std::string s = j.dump(2) + "\n";
        if (opt_.out.empty())
            std::cout << s;
        else
            write_file(opt_.out, s);
        return 0;
    }

    int normalize_cmd(Json& results)
    {
        NormalizationOptions no;
        no.scan = opt_.scan;
        no.seed = opt_.seed;
        const NormalizationResult r = find_normalization(body3(), grid_, no);
        results["box"] = {{"s", r.box.s}, {"phi", r.box.phi}, {"psi", r.box.psi}};
        results["angles"] = {{"theta", r.angles[0]}, {"phi", r.angles[1]}, {"psi", r.angles[2]}};
        results["balance"] = {
            {"theta_cap", r.balance.theta_cap}, {"phi_cap", r.balance.phi_cap}, {"psi_cap", r.balance.psi_cap}};
        results["shear"] = mat_json(r.shear.matrix());
        results["pre_rotation"] = mat_json(r.pre_rotation);
        results["fgh"] = Json::array({r.field.f, r.field.g, r.field.h});
        results["fgh_norm"] = r.fgh_norm;
        results["volume"] = r.volume;
        results["residual22"] = arr_json(r.residuals.r22);
        results["residual23"] = arr_json(r.residuals.r23);
        results["evaluations"] = r.evaluations;
        results["normalized_body"] = body_to_json(*r.normalized_body);
        const double tol = 1e-6 * r.volume;
        const bool ok = r.residuals.max23() < tol && r.fgh_norm < tol;
        results["certified"] = ok;
        return ok ? 0 : 4;
    }

    int verify_cmd(Json& results)
    {
        ConvexBody3 k = body3();
        if (opt_.normalize_first) {
            NormalizationOptions no;
            no.scan = opt_.scan;
            no.seed = opt_.seed;
            k = *find_normalization(k, grid_, no).normalized_body;
        }
        const ChainReport r = verify_chain(k, grid_, opt_.curve);
        Json s = Json::array(), rr = Json::array();
        for (int i = 0; i < 4; ++i) {
            s.push_back(vec_json(r.points.s[i]));
            rr.push_back(vec_json(r.points.r[i]));
        }
        Json cb = Json::array(), cp = Json::array();
        for (int i = 0; i < 6; ++i) {
            cb.push_back(vec_json(r.curves.body[i]));
            cp.push_back(vec_json(r.curves.polar[i]));
        }
        results["pieces"] = arr_json(r.points.pieces);
        results["polar_pieces"] = arr_json(r.points.polar_pieces);
        results["S"] = s;
        results["R"] = rr;
        results["pairing"] = arr_json(r.points.pairing);
        results["gauge_S"] = arr_json(r.points.gauge_s);
        results["gauge_R"] = arr_json(r.points.gauge_r);
        results["empty_polar_piece"] = arr_json(r.points.empty_polar_piece);
        results["curve_vectors"] = {{"body", cb}, {"polar", cp}};
        results["section"] = arr_json(r.section);
        results["projection"] = arr_json(r.projection);
        results["planar_product"] = arr_json(r.planar_product);
        results["curve_projection"] = arr_json(r.curve_projection);
        results["chain_sum"] = r.chain_sum;
        results["volume"] = r.volume;
        results["polar_volume"] = r.polar_volume;
        results["product"] = r.product;
        results["slack"] = r.slack;
        results["condition_residual"] = r.condition_residual;
        results["chain_applicable"] = r.applicable;
        results["checks"] = {{"pairings", r.pairings_ok},
                             {"membership", r.membership_ok},
                             {"planar", r.planar_ok},
                             {"chain", r.chain_ok},
                             {"bound", r.bound_ok}};
        results["equality_class"] = equality_name(detect_equality(k));
        results["passed"] = r.passed();
        return r.passed() ? 0 : 4;
    }

    int winding_cmd()
    {
        const WindingTrace tr = winding(body3(), opt_.samples, grid_);
        std::string csv = "t,G,H,angle\n";
        for (const auto& s : tr.samples)
            csv += fmt(s.t) + "," + fmt(s.g) + "," + fmt(s.h) + "," + fmt(s.angle) + "\n";
        if (opt_.out.empty()) {
            std::cout << csv;
        } else {
            write_file(opt_.out, csv);
            std::cout << "winding " << tr.winding << "\nsamples " << tr.samples.size() << "\n";
        }
        return tr.winding % 2 != 0 ? 0 : 4;
    }

    int sweep_cmd()
    {
        const auto rows = sweep(body3(), opt_.n, grid_);
        std::string csv = "s,phi,psi,F,G,H\n";
        for (const auto& r : rows)
            csv += fmt(r.p.s) + "," + fmt(r.p.phi) + "," + fmt(r.p.psi) + "," + fmt(r.v.f) + "," + fmt(r.v.g) +
                   "," + fmt(r.v.h) + "\n";
        if (opt_.out.empty())
            std::cout << csv;
        else
            write_file(opt_.out, csv);
        return 0;
    }

    int verify2_cmd(Json& results)
    {
        const Normalized2 n = normalize2(body2());
        const Report2 r = verify2(n.polygon);
        std::cout << "area " << fmt(r.area) << "\npolar_area " << fmt(r.polar_area) << "\nproduct " << fmt(r.product)
                  << "\n";
        Json m = Json::array({Json::array({n.map(0, 0), n.map(0, 1)}), Json::array({n.map(1, 0), n.map(1, 1)})});
        results["map"] = m;
        results["normalized"] = polygon_to_json(n.polygon);
        results["area"] = r.area;
        results["polar_area"] = r.polar_area;
        results["product"] = r.product;
        results["diamond"] = r.diamond;
        if (!r.diamond) {
            results["b"] = r.b;
            results["c"] = r.c;
            results["polar_pieces"] = Json::array({r.polar_piece1, r.polar_piece2});
            results["S"] = Json::array({Json::array({r.s1.x(), r.s1.y()}), Json::array({r.s2.x(), r.s2.y()})});
            results["R"] = Json::array({Json::array({r.r1.x(), r.r1.y()}), Json::array({r.r2.x(), r.r2.y()})});
            results["pairing"] = Json::array({r.pairing1, r.pairing2});
        }
        results["bound_holds"] = r.bound_holds;
        return r.bound_holds ? 0 : 4;
    }

    std::string command_;
    Options opt_;
    std::string input_digest_;
    BodyFile file_;
    SphereGrid grid_;
};

} // namespace

int main(int argc, char** argv)
{
    static const std::set<std::string> commands{"vp", "polar", "normalize", "verify", "winding", "sweep", "verify2"};
    if (argc >= 2 && argv[1][0] != '-' && !commands.count(argv[1])) {
        std::cerr << "mahler_lab: unknown command '" << argv[1] << "'\n";
        return 1;
    }

    CLI::App app{"Volume products of symmetric convex bodies and the three-dimensional lower bound"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Options opt;
    const std::vector<std::pair<std::string, std::string>> subs{
        {"vp", "print |K|, |K°| and their product"},
        {"polar", "write the polar body"},
        {"normalize", "find the rotation and shear that balance the octants"},
        {"verify", "evaluate the test-point chain"},
        {"winding", "trace (G,H) around the theta = 0 face"},
        {"sweep", "tabulate (F,G,H) over the box"},
        {"verify2", "planar normalisation and bound"},
    };
    for (const auto& [name, help] : subs) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("--body", opt.body, "body file (JSON)")->required();
        s->add_option("--grid", opt.grid, "sphere grid NxM")->capture_default_str();
        s->add_option("--curve", opt.curve, "points per boundary curve")->capture_default_str();
        s->add_option("--out", opt.out, "output path");
        s->add_option("--seed", opt.seed, "random seed")->capture_default_str();
        s->add_option("--threads", opt.threads, "worker threads (default: MAHLER_LAB_THREADS or all cores)");
        s->add_flag("--timing", opt.timing, "include wall time in the report");
        if (name == "winding")
            s->add_option("--samples", opt.samples, "initial contour samples")->capture_default_str();
        if (name == "sweep")
            s->add_option("--n", opt.n, "points per box axis")->capture_default_str();
        if (name == "normalize" || name == "verify")
            s->add_option("--scan", opt.scan, "coarse scan points per axis")->capture_default_str();
        if (name == "verify")
            s->add_flag("--normalize", opt.normalize_first, "normalise the body before checking the chain");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string command;
    for (int i = 1; i < argc; ++i)
        command += (i > 1 ? " " : "") + std::string(argv[i]);

    try {
        Runner r(command, opt);
        return r.run(app.get_subcommands().front()->get_name());
    } catch (const Error& e) {
        std::cerr << "mahler_lab: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "mahler_lab: " << e.what() << "\n";
        return 4;
    }
}
