#include "fermi/session.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <sstream>

#include "fermi/errors.hpp"

namespace fermi {
namespace {

using nlohmann::json;
const cplx I{0.0, 1.0};

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += "''";
        else
            out += c;
    }
    out += '"';
    return out;
}

// Chains longer than the window depth are suppressed geometrically; the
// reported tail budget is the decay certificate at that chain length.
double tail_budget(const RunConfig& cfg) {
    const int m = std::max(
        1, static_cast<int>(cfg.params.window_radius / (2.0 * cfg.lattice.lambda)));
    return decay_certificate(m, 0.0, cfg.lattice);
}

class Csv {
public:
    Csv(const std::filesystem::path& path, const RunConfig& cfg,
        const std::string& columns) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw Error("cannot open output file " + path.string());
        out_ << "# config_hash=" << cfg.config_hash << "\n";
        out_ << "# window_radius=" << fmt(cfg.params.window_radius) << "\n";
        out_ << "# tail_budget=" << fmt(tail_budget(cfg)) << "\n";
        out_ << columns << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

double jnum(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return j[key].get<double>();
}

cplx jcplx(const json& v, const char* what) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(std::string(what) + " must be a [re, im] pair");
    return cplx{v[0].get<double>(), v[1].get<double>()};
}

DualPoint jdual(const json& v, const char* what) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
        !v[1].is_number_integer())
        throw ConfigError(std::string(what) + " must be an [m, n] integer pair");
    return DualPoint{v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
}

std::string dual_str(const DualPoint& b) {
    return "(" + std::to_string(b.m) + "," + std::to_string(b.n) + ")";
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read configuration file " + path);
    std::ostringstream raw;
    raw << in.rdbuf();
    const std::string bytes = raw.str();

    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }

    RunConfig cfg;
    cfg.config_hash = fnv1a_hex(bytes);

    Vec2 g1{2.0 * 3.14159265358979323846, 0.0};
    Vec2 g2{0.0, 2.0 * 3.14159265358979323846};
    if (j.contains("lattice")) {
        const json& jl = j["lattice"];
        if (jl.contains("gamma1")) {
            const cplx v = jcplx(jl["gamma1"], "lattice.gamma1");
            g1 = Vec2{v.real(), v.imag()};
        }
        if (jl.contains("gamma2")) {
            const cplx v = jcplx(jl["gamma2"], "lattice.gamma2");
            g2 = Vec2{v.real(), v.imag()};
        }
    }
    cfg.lattice = build_lattice(g1, g2);

    if (j.contains("A")) {
        for (const json& e : j["A"]) {
            const DualPoint b = jdual(e.at("b"), "A entry b");
            if (cfg.A.coeffs.count(b))
                throw ConfigError("duplicate support point b=" + dual_str(b) +
                                  " in A");
            cfg.A.set(b, CVec2{jcplx(e.at("ax"), "A entry ax"),
                               jcplx(e.at("ay"), "A entry ay")});
        }
    }
    if (j.contains("V")) {
        for (const json& e : j["V"]) {
            const DualPoint b = jdual(e.at("b"), "V entry b");
            if (cfg.V.coeffs.count(b))
                throw ConfigError("duplicate support point b=" + dual_str(b) +
                                  " in V");
            cfg.V.set(b, jcplx(e.at("v"), "V entry v"));
        }
    }
    cfg.q = q_field(cfg.lattice, cfg.A, cfg.V);

    ModelParams overrides;
    overrides.epsilon = jnum(j, "epsilon", 0.0);
    overrides.rho = jnum(j, "rho", 0.0);
    overrides.window_radius = jnum(j, "window_radius", 0.0);
    cfg.params = resolve_params(cfg.lattice, cfg.A, cfg.q, overrides);

    const double lam6 = cfg.lattice.lambda / 6.0;
    if (!(cfg.params.epsilon > 0.0) || cfg.params.epsilon >= lam6)
        throw ConfigError("violated constraint: epsilon < lambda/6 (epsilon = " +
                          fmt(cfg.params.epsilon) + ", lambda/6 = " + fmt(lam6) +
                          ")");
    if (cfg.params.rho < cfg.params.radius_R)
        throw ConfigError("violated constraint: rho >= R (rho = " +
                          fmt(cfg.params.rho) + ", R = " +
                          fmt(cfg.params.radius_R) + ")");

    cfg.tolerance = jnum(j, "tolerance", 1e-12);
    if (!(cfg.tolerance > 0.0))
        throw ConfigError("violated constraint: tolerance > 0");
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = std::max(1, j["threads"].get<int>());

    if (j.contains("trace")) {
        const json& jt = j["trace"];
        cfg.trace_nu = static_cast<int>(jnum(jt, "nu", 1.0));
        if (cfg.trace_nu != 1 && cfg.trace_nu != 2)
            throw ConfigError("trace.nu must be 1 or 2");
        if (jt.contains("y")) {
            for (const json& e : jt["y"]) cfg.trace_y.push_back(jcplx(e, "trace.y entry"));
        } else if (jt.contains("y_grid")) {
            const json& jg = jt["y_grid"];
            const double start = jnum(jg, "start", 2.1);
            const double stop = jnum(jg, "stop", 20.1);
            const int count = static_cast<int>(jnum(jg, "count", 10.0));
            const double im = jnum(jg, "imag", 0.0);
            if (count < 1) throw ConfigError("trace.y_grid.count must be >= 1");
            for (int i = 0; i < count; ++i) {
                const double t =
                    count == 1 ? start : start + (stop - start) * i / (count - 1);
                cfg.trace_y.push_back(cplx{t, im});
            }
        }
    }
    if (cfg.trace_y.empty())
        for (int i = 0; i < 10; ++i) cfg.trace_y.push_back(cplx{2.1 + 2.0 * i, 0.0});

    if (j.contains("handles")) {
        const json& jh = j["handles"];
        cfg.handle_nu = static_cast<int>(jnum(jh, "nu", 1.0));
        if (cfg.handle_nu != 1 && cfg.handle_nu != 2)
            throw ConfigError("handles.nu must be 1 or 2");
        cfg.curve_samples = static_cast<int>(jnum(jh, "curve_samples", 12.0));
        if (jh.contains("d"))
            for (const json& e : jh["d"]) cfg.handle_d.push_back(jdual(e, "handles.d entry"));
    }
    if (cfg.handle_d.empty()) cfg.handle_d.push_back(DualPoint{0, 4});

    if (j.contains("freecurve")) {
        const json& jf = j["freecurve"];
        cfg.k2_min = jnum(jf, "k2_min", -3.0);
        cfg.k2_max = jnum(jf, "k2_max", 3.0);
        cfg.k2_count = static_cast<int>(jnum(jf, "k2_count", 61.0));
        cfg.b_radius = jnum(jf, "b_radius", 3.0);
        if (cfg.k2_count < 1) throw ConfigError("freecurve.k2_count must be >= 1");
    }

    if (j.contains("spectrum")) {
        const json& js = j["spectrum"];
        if (!js.contains("k") || !js["k"].is_array() || js["k"].size() != 2)
            throw ConfigError("spectrum.k must be [[re,im],[re,im]]");
        cfg.spectrum_k = KPoint(jcplx(js["k"][0], "spectrum.k[0]"),
                                jcplx(js["k"][1], "spectrum.k[1]"));
    } else {
        const double t = cfg.params.rho + 2.3;
        cfg.spectrum_k = KPoint(cplx{0.0, t}, cplx{t, 0.0});
    }

    if (j.contains("verify")) {
        const json& jv = j["verify"];
        if (jv.contains("heights"))
            for (const json& e : jv["heights"]) {
                if (!e.is_number()) throw ConfigError("verify.heights entries must be numbers");
                cfg.verify_heights.push_back(e.get<double>());
            }
        cfg.verify_samples = static_cast<int>(jnum(jv, "samples", 20.0));
    }
    if (cfg.verify_heights.empty()) {
        const double base = std::max(16.9, cfg.params.radius_R + 4.3);
        cfg.verify_heights = {base, 2.5 * base, 6.4 * base};
    }
    for (double t : cfg.verify_heights)
        if (t <= cfg.params.radius_R)
            throw ConfigError("violated constraint: verify heights must exceed R = " +
                              fmt(cfg.params.radius_R));

    return cfg;
}

bool run_freecurve(const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    const Lattice& lat = cfg.lattice;
    const std::vector<DualPoint> points =
        cfg.b_radius < 0.0 ? std::vector<DualPoint>{}
                           : enumerate_dual(lat, cfg.b_radius);

    // real slice (i k1, k2 real): only lines whose center has vanishing
    // Cartesian x-component meet it; there k1 = i s, s = -(-1)^nu (k2 + b2)
    Csv slice(dir / "freecurve_slice.csv", cfg, "k2,s,b_m,b_n,nu");
    for (int i = 0; i < cfg.k2_count; ++i) {
        const double k2 = cfg.k2_count == 1
                              ? cfg.k2_min
                              : cfg.k2_min + (cfg.k2_max - cfg.k2_min) * i /
                                                 (cfg.k2_count - 1);
        for (const DualPoint& b : points) {
            const Vec2 bc = lat.cart(b);
            if (std::abs(bc.x) > 1e-12) continue;
            for (int nu : {1, 2}) {
                const double s = -nu_sign(nu) * (k2 + bc.y);
                slice.row({fmt(k2), fmt(s), fmt(b.m), fmt(b.n), fmt(nu)});
            }
        }
    }

    Csv lines(dir / "freecurve_lines.csv", cfg, "b_m,b_n,nu,theta_re,theta_im");
    for (const DualPoint& b : points)
        for (int nu : {1, 2}) {
            const cplx th = theta(lat, nu, b);
            lines.row({fmt(b.m), fmt(b.n), fmt(nu), fmt(th.real()), fmt(th.imag())});
        }

    Csv inter(dir / "freecurve_intersections.csv", cfg,
              "b_m,b_n,c_m,c_n,k1_re,k1_im,k2_re,k2_im");
    for (const DualPoint& b : points)
        for (const DualPoint& c : points) {
            const KPoint k = line_intersection(lat, b, c);
            inter.row({fmt(b.m), fmt(b.n), fmt(c.m), fmt(c.n), fmt(k.k1.real()),
                       fmt(k.k1.imag()), fmt(k.k2.real()), fmt(k.k2.imag())});
        }
    return true;
}

bool run_trace(const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    const Lattice& lat = cfg.lattice;

    const SheetTrace tr = trace_sheet(lat, cfg.A, cfg.V, cfg.trace_y, cfg.trace_nu,
                                      cfg.params, cfg.tolerance);

    Csv sheet(dir / "trace_sheet.csv", cfg,
              "y_re,y_im,eta_re,eta_im,residual,admissible,solved,newton_iters,"
              "containment,deriv_deviation,skip_reason");
    for (const SheetPoint& pt : tr.points)
        sheet.row({fmt(pt.y.real()), fmt(pt.y.imag()), fmt(pt.eta.real()),
                   fmt(pt.eta.imag()), fmt(pt.residual), fmt(int(pt.admissible)),
                   fmt(int(pt.solved)), fmt(pt.newton_iters), fmt(pt.containment),
                   fmt(pt.deriv_deviation), quoted(pt.skip_reason)});

    // bound report: r(y) = |eta + beta + i(-1)^nu y| against the certified
    // floor eps^3/(50 lambda^2) plus a fitted C/rho allowance
    const double lam = lat.lambda;
    const double eps = tr.epsilon;
    const double r_floor = eps * eps * eps / (50.0 * lam * lam);
    const double contain_bound = eps * eps / (40.0 * lam);
    double c_fit = 0.0;
    std::vector<std::pair<const SheetPoint*, double>> solved;
    for (const SheetPoint& pt : tr.points) {
        if (!pt.solved || std::abs(pt.y) <= tr.rho_used) continue;
        const double rmag =
            std::abs(pt.eta + tr.beta_constant + I * nu_sign(tr.nu) * pt.y);
        solved.push_back({&pt, rmag});
        c_fit = std::max(c_fit, (rmag - r_floor) * tr.rho_used);
    }
    c_fit = std::max(c_fit, 0.0);

    std::vector<std::string> failures;
    Csv bounds(dir / "trace_bounds.csv", cfg, "bound,region,measured,certified,margin");
    const double beta_bound = eps * eps / (100.0 * lam);
    const double beta_mag = std::abs(tr.beta_constant);
    bounds.row({"beta_constant", quoted("global"), fmt(beta_mag), fmt(beta_bound),
                fmt(beta_bound - beta_mag)});
    if (beta_mag >= beta_bound) failures.push_back("beta_constant");
    bounds.row({"fitted_constant", quoted("global"), fmt(c_fit), fmt(1.0),
                fmt(1.0 - c_fit)});
    if (c_fit >= 1.0) failures.push_back("fitted_constant");
    for (const auto& [pt, rmag] : solved) {
        const double cert = r_floor + c_fit / tr.rho_used;
        const std::string region = "y=" + fmt(pt->y.real());
        bounds.row({"sheet_remainder", quoted(region), fmt(rmag), fmt(cert),
                    fmt(cert - rmag)});
        bounds.row({"containment", quoted(region), fmt(pt->containment),
                    fmt(contain_bound), fmt(contain_bound - pt->containment)});
        if (pt->containment >= contain_bound)
            failures.push_back("containment at " + region);
    }

    for (const SheetPoint& pt : tr.points) {
        if (!pt.admissible) continue;
        const std::string region = "y=" + fmt(pt.y.real());
        if (pt.diverged) failures.push_back("diverged at " + region);
        if (pt.region_exit) failures.push_back("region_exit at " + region);
        if (pt.solved && pt.residual >= cfg.tolerance)
            failures.push_back("residual at " + region);
        if (!pt.solved && !pt.diverged && !pt.region_exit)
            failures.push_back("unsolved at " + region);
    }

    Csv fail(dir / "trace_failures.csv", cfg, "failure");
    for (const std::string& f : failures) fail.row({quoted(f)});
    return failures.empty();
}

bool run_handles(const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    const Lattice& lat = cfg.lattice;

    struct Slot {
        bool skipped = false;
        bool failed = false;
        std::string status;
        HandleRecord rec;
    };
    std::vector<Slot> slots(cfg.handle_d.size());

    auto analyze_one = [&](std::size_t i) {
        const DualPoint d = cfg.handle_d[i];
        Slot& s = slots[i];
        if (2.0 * lat.length(d) <= cfg.params.rho) {
            s.skipped = true;
            s.status = "below rho";
            return;
        }
        try {
            s.rec = analyze_handle(lat, cfg.A, cfg.V, d, cfg.handle_nu, cfg.params);
            s.status = "ok";
        } catch (const Error& e) {
            s.failed = true;
            s.status = e.what();
        }
    };

    // fixed-size batches keep the result order (and so the output bytes)
    // independent of the thread count
    for (std::size_t at = 0; at < slots.size();) {
        const std::size_t batch =
            std::min<std::size_t>(static_cast<std::size_t>(cfg.threads),
                                  slots.size() - at);
        std::vector<std::future<void>> running;
        for (std::size_t i = 1; i < batch; ++i)
            running.push_back(
                std::async(std::launch::async, analyze_one, at + i));
        analyze_one(at);
        for (auto& f : running) f.get();
        at += batch;
    }

    Csv summary(dir / "handles_summary.csv", cfg,
                "d_m,d_n,abs_d,abs_t,abs_t_d4,oracle_gap,symmetry_residual,status");
    bool ok = true;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const DualPoint d = cfg.handle_d[i];
        const Slot& s = slots[i];
        if (s.skipped || s.failed) {
            summary.row({fmt(d.m), fmt(d.n), fmt(lat.length(d)), "", "", "", "",
                         quoted(s.status)});
            ok = ok && !s.failed;
            continue;
        }
        const double dn = lat.length(d);
        const double tmag = std::abs(s.rec.t_d);
        summary.row({fmt(d.m), fmt(d.n), fmt(dn), fmt(tmag),
                     fmt(tmag * dn * dn * dn * dn), fmt(s.rec.oracle_gap),
                     fmt(s.rec.symmetry_residual), quoted(s.status)});

        nlohmann::json doc;
        doc["config_hash"] = cfg.config_hash;
        doc["d"] = {d.m, d.n};
        doc["nu"] = s.rec.nu;
        doc["t_d"] = {s.rec.t_d.real(), s.rec.t_d.imag()};
        doc["t_fit"] = {s.rec.t_fit.real(), s.rec.t_fit.imag()};
        doc["oracle_gap"] = s.rec.oracle_gap;
        doc["center1"] = {s.rec.center1.k1.real(), s.rec.center1.k1.imag(),
                          s.rec.center1.k2.real(), s.rec.center1.k2.imag()};
        doc["center2"] = {s.rec.center2.k1.real(), s.rec.center2.k1.imag(),
                          s.rec.center2.k2.real(), s.rec.center2.k2.imag()};
        doc["base1"] = {s.rec.base1.k1.real(), s.rec.base1.k1.imag(),
                        s.rec.base1.k2.real(), s.rec.base1.k2.imag()};
        doc["base2"] = {s.rec.base2.k1.real(), s.rec.base2.k1.imag(),
                        s.rec.base2.k2.real(), s.rec.base2.k2.imag()};
        doc["jac_deviation"] = s.rec.jac_deviation;
        doc["symmetry_residual"] = s.rec.symmetry_residual;
        doc["a_bound"] = s.rec.a_bound;
        doc["b_bound"] = s.rec.b_bound;
        doc["morse"] = {{"xi", {s.rec.morse.xi1.real(), s.rec.morse.xi1.imag(),
                                s.rec.morse.xi2.real(), s.rec.morse.xi2.imag()}},
                        {"c", {s.rec.morse.c.real(), s.rec.morse.c.imag()}},
                        {"comp_residual", s.rec.morse.comp_residual},
                        {"dphi_deviation", s.rec.morse.dphi_deviation},
                        {"map_radius", s.rec.morse.map_radius},
                        {"degree", s.rec.morse.degree}};
        doc["params"] = {{"epsilon", s.rec.params.epsilon},
                         {"rho", s.rec.params.rho},
                         {"radius_R", s.rec.params.radius_R},
                         {"window_radius", s.rec.params.window_radius}};

        std::vector<KPoint> pts =
            handle_curve_points(lat, cfg.A, cfg.V, s.rec, cfg.curve_samples);
        nlohmann::json jpts = nlohmann::json::array();
        for (const KPoint& k : pts)
            jpts.push_back({k.k1.real(), k.k1.imag(), k.k2.real(), k.k2.imag()});
        doc["curve_points"] = jpts;

        std::ofstream f(dir / ("handle_" + std::to_string(d.m) + "_" +
                               std::to_string(d.n) + ".json"),
                        std::ios::binary | std::ios::trunc);
        f << doc.dump(2) << "\n";
    }
    return ok;
}

bool run_verify(const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    const Lattice& lat = cfg.lattice;
    const double eps = cfg.params.epsilon;
    const double lam = lat.lambda;
    const double R = cfg.params.radius_R;

    const SmallnessReport small = check_smallness(lat, cfg.A, eps);
    if (!small.pass)
        throw SmallnessViolated("magnetic weighted norm " + fmt(small.measured) +
                                " >= bound " + fmt(small.bound));

    struct Row {
        std::string bound, region;
        double measured, certified;
    };
    std::vector<Row> rows;
    rows.push_back({"magnetic_smallness", "global", small.measured, small.bound});

    const cplx b210 = beta2_10(lat, cfg.A, R, 1);
    rows.push_back(
        {"beta2_constant", "global", std::abs(b210), eps * eps / (100.0 * lam)});

    const IndexWindow win =
        make_window(lat, {DualPoint{0, 0}}, cfg.params.window_radius);
    bool first_height = true;
    for (double t : cfg.verify_heights) {
        const std::string region = "t=" + fmt(t);
        const KPoint k{cplx{0.0, t}, cplx{t, 0.0}};

        const InverseResult inv = invert_rgg(lat, win, k, cfg.A, cfg.q, eps);
        rows.push_back({"rmi_vs_certified", region, inv.certificate.measured_rmi,
                        inv.certificate.bound});
        rows.push_back({"certified_vs_17_18", region, inv.certificate.bound,
                        17.0 / 18.0});
        rows.push_back({"inverse_vs_18rmi", region, inv.certificate.measured_inv,
                        18.0 * inv.certificate.measured_rmi + 1e-15});

        const EvalContext ctx = make_context(lat, win, k, cfg.A, cfg.q, eps);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < ctx.n_gprime.size(); ++i)
            worst = std::max(worst, eps * k.v.norm() / std::abs(ctx.n_gprime(i)));
        rows.push_back({"nb_lower", region, worst, 1.0});

        const SplitWindows splits = split_windows(ctx, {0, 0}, R);
        const XYPair xy = xy_matrices(ctx, splits, 1);
        rows.push_back({"x33_norm", region, schur_norm(xy.X33), 1.0 / 3.0});
        rows.push_back({"y33_norm", region, schur_norm(xy.Y33), 1.0 / 14.0});

        const CoordExpansion ce = coord_expansion(ctx, 1, {0, 0}, R, 1e-14);
        rows.push_back({"coordinate_vs_frame", region, std::abs(ce.x - ce.w),
                        eps / 8.0});

        if (first_height) {
            first_height = false;
            // derivative constants of the leading double-sum piece
            auto a1_at = [&](const KPoint& kk) {
                EvalContext c = make_context(lat, win, kk, cfg.A, cfg.q, eps);
                return alpha_split(c, cfg.q, cfg.q, 1, {0, 0}, R, 1e-14).a1;
            };
            const double fg = weighted_l1(lat, cfg.q, 0.0) * weighted_l1(lat, cfg.q, 0.0);
            const double z_reset = 2.0 * std::abs(n_line(lat, DualPoint{0, 0}, 2, k)) - R;
            const double h = 1e-3;
            const cplx d10 = fd_derivative(a1_at, k, 1, 0, h).value;
            const cplx d01 = fd_derivative(a1_at, k, 0, 1, h).value;
            const cplx d11 = fd_derivative(a1_at, k, 1, 1, h).value;
            rows.push_back({"deriv_k1", region, std::abs(d10) * z_reset,
                            13.0 / (lam * lam) * fg});
            rows.push_back({"deriv_k2", region, std::abs(d01) * z_reset,
                            13.0 / (lam * lam) * fg});
            rows.push_back({"deriv_mixed", region, std::abs(d11) * z_reset,
                            65.0 / (lam * lam * lam) * fg});

            // off-diagonal decay of powers of the contraction T = I - R
            const TruncatedOperator Rgg =
                r_matrix(lat, win.gprime, win.gprime, k, cfg.A, cfg.q);
            const Eigen::Index n = Rgg.entries.rows();
            const CMatrix T = CMatrix::Identity(n, n) - Rgg.entries;
            const double beta = 2.0;
            CMatrix Tm = T * T * T;
            double decay_worst = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index jj = 0; jj < n; ++jj) {
                    const double dist = lat.length(win.gprime[i] - win.gprime[jj]);
                    decay_worst = std::max(
                        decay_worst,
                        std::abs(Tm(i, jj)) * (1.0 + std::pow(dist, beta)));
                }
            rows.push_back({"power_decay_m3", region, decay_worst,
                            decay_certificate(3, beta, lat)});
        }
    }

    // weighted-norm algebra on random matrices over random point sets
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_int_distribution<int> coord(-4, 4);
    double sub_worst = 0.0, one_worst = 0.0, entry_worst = 0.0;
    for (int s = 0; s < std::max(1, cfg.verify_samples); ++s) {
        std::vector<DualPoint> pts;
        while (pts.size() < 10) {
            DualPoint b{coord(rng), coord(rng)};
            if (std::find(pts.begin(), pts.end(), b) == pts.end()) pts.push_back(b);
        }
        const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
        CMatrix Am(n, n), Bm(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index jj = 0; jj < n; ++jj) {
                Am(i, jj) = cplx{uni(rng), uni(rng)};
                Bm(i, jj) = cplx{uni(rng), uni(rng)};
            }
        const double beta = (s % 3 == 0) ? 0.0 : (s % 3 == 1 ? 1.0 : 2.0);
        TruncatedOperator opA{pts, pts, Am}, opB{pts, pts, Bm},
            opAB{pts, pts, Am * Bm};
        const double na = sigma_norm(lat, opA, beta);
        const double nb = sigma_norm(lat, opB, beta);
        const double nab = sigma_norm(lat, opAB, beta);
        sub_worst = std::max(sub_worst, nab / (na * nb));
        one_worst = std::max(one_worst, std::abs(sigma_norm(lat, opA, 0.0) -
                                                 schur_norm(opA)) /
                                            schur_norm(opA));
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index jj = 0; jj < n; ++jj) {
                const double sig =
                    std::pow(1.0 + lat.length(pts[i] - pts[jj]), beta);
                entry_worst =
                    std::max(entry_worst, std::abs(Am(i, jj)) * sig / na);
            }
    }
    rows.push_back({"sigma_submultiplicative", "random", sub_worst, 1.0 + 1e-12});
    rows.push_back({"sigma_beta0_vs_schur", "random", one_worst, 1e-12});
    rows.push_back({"sigma_entrywise", "random", entry_worst, 1.0 + 1e-12});

    Csv out(dir / "verify_bounds.csv", cfg,
            "bound,region,measured,certified,margin,pass");
    bool ok = true;
    for (const Row& r : rows) {
        const bool pass = r.measured <= r.certified;
        ok = ok && pass;
        out.row({r.bound, quoted(r.region), fmt(r.measured), fmt(r.certified),
                 fmt(r.certified - r.measured), fmt(int(pass))});
    }
    return ok;
}

bool run_spectrum(const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    const IndexWindow win =
        make_window(cfg.lattice, {DualPoint{0, 0}}, cfg.params.window_radius);
    const TruncatedOperator hk =
        hk_matrix(cfg.lattice, win, cfg.spectrum_k, cfg.A, cfg.V);

    Eigen::ComplexEigenSolver<CMatrix> es(hk.entries, false);
    if (es.info() != Eigen::Success)
        throw NumericallySingular("eigenvalue solve failed");
    std::vector<cplx> evs(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(evs.begin(), evs.end(), [](const cplx& a, const cplx& b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (ma != mb) return ma < mb;
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });

    Csv out(dir / "spectrum.csv", cfg, "index,lambda_re,lambda_im,modulus");
    for (std::size_t i = 0; i < evs.size(); ++i)
        out.row({fmt(i), fmt(evs[i].real()), fmt(evs[i].imag()),
                 fmt(std::abs(evs[i]))});
    return true;
}

} // namespace fermi
