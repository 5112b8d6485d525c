#include "dualbound/cli.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "dualbound/errors.hpp"
#include "dualbound/estimator.hpp"
#include "dualbound/primal.hpp"
#include "dualbound/reference.hpp"

namespace dualbound {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& where) {
    throw ConfigError("key '" + key + "': malformed value '" + value + "' (" + where + ")");
}

double parse_double(const std::string& key, const std::string& value, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') bad_value(key, value, where);
    return v;
}

int parse_int(const std::string& key, const std::string& value, const std::string& where) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') bad_value(key, value, where);
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value,
                        const std::string& where) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') bad_value(key, value, where);
    return static_cast<std::uint64_t>(v);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

struct ParseState {
    RunConfig cfg;
    std::string x0_raw, x0_where;
    std::string sweep_raw, sweep_where;
};

const char* const kKeys[] = {"problem", "d",       "x0",      "x0_sweep", "method",  "model",
                             "M",       "n",       "N_T",     "N_iter",   "N_opt",   "restarts",
                             "alpha",   "eta",     "eps",     "fd_step",  "seed",    "M_up",
                             "N_T_up",  "degree",  "M_reg",   "N_reg",    "dither",  "integrator",
                             "quadrature", "workers", "output_dir"};

void apply_kv(ParseState& st, const std::string& key, const std::string& value,
              const std::string& where) {
    RunConfig& c = st.cfg;
    if (key == "problem") {
        c.problem = value;
    } else if (key == "d") {
        c.d = parse_int(key, value, where);
    } else if (key == "x0") {
        st.x0_raw = value;
        st.x0_where = where;
    } else if (key == "x0_sweep") {
        st.sweep_raw = value;
        st.sweep_where = where;
    } else if (key == "method") {
        c.method = value;
    } else if (key == "model") {
        c.model = value;
    } else if (key == "M") {
        c.m_samples = parse_int(key, value, where);
    } else if (key == "n") {
        c.n_modes = parse_int(key, value, where);
    } else if (key == "N_T") {
        c.n_t = parse_int(key, value, where);
    } else if (key == "N_iter") {
        c.n_iter = parse_int(key, value, where);
    } else if (key == "N_opt") {
        c.n_opt = parse_int(key, value, where);
    } else if (key == "restarts") {
        c.restarts = parse_int(key, value, where);
    } else if (key == "alpha") {
        c.alpha = parse_double(key, value, where);
    } else if (key == "eta") {
        c.eta = parse_double(key, value, where);
    } else if (key == "eps") {
        c.eps = parse_double(key, value, where);
    } else if (key == "fd_step") {
        c.fd_step = parse_double(key, value, where);
    } else if (key == "seed") {
        c.seed = parse_u64(key, value, where);
    } else if (key == "M_up") {
        c.m_up = parse_int(key, value, where);
    } else if (key == "N_T_up") {
        c.n_t_up = parse_int(key, value, where);
    } else if (key == "degree") {
        c.degree = parse_int(key, value, where);
    } else if (key == "M_reg") {
        c.m_reg = parse_int(key, value, where);
    } else if (key == "N_reg") {
        c.n_reg = parse_int(key, value, where);
    } else if (key == "dither") {
        c.dither = parse_double(key, value, where);
    } else if (key == "integrator") {
        c.integrator = value;
    } else if (key == "quadrature") {
        c.quadrature = value;
    } else if (key == "workers") {
        c.workers = parse_int(key, value, where);
    } else if (key == "output_dir") {
        c.output_dir = value;
    } else {
        throw ConfigError("unknown key '" + key + "' (" + where + ")");
    }
}

Vec resolve_x0(const std::string& raw, const std::string& where, int d) {
    if (raw == "zeros") return Vec::Zero(d);
    if (raw == "ones") return Vec::Ones(d);
    const auto parts = split(raw, ',');
    Vec v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = parse_double("x0", trim(parts[i]), where);
    if (v.size() != d)
        throw ConfigError("key 'x0': expected " + std::to_string(d) + " coordinates, got " +
                          std::to_string(v.size()) + " (" + where + ")");
    return v;
}

void validate(RunConfig& c) {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (c.problem != "lq" && c.problem != "ou" && c.problem != "aiyagari" && c.problem != "zero")
        fail("unknown problem '" + c.problem + "'");
    if (c.d < 1) fail("d must be positive");
    if (c.problem == "aiyagari" && c.d != 2) fail("the aiyagari problem is 2-dimensional");
    if (c.method != "pontryagin" && c.method != "hopf" && c.method != "primal" &&
        c.method != "all")
        fail("unknown method '" + c.method + "'");

    std::string base = c.model;
    if (base.rfind("perturbed(", 0) == 0 && base.back() == ')') {
        const std::string inner = base.substr(10, base.size() - 11);
        c.perturb_amplitude = parse_double("model", inner, "perturbed amplitude");
        if (c.perturb_amplitude < 0) fail("perturbed amplitude must be >= 0");
        base = "perturbed";
    }
    if (base != "analytic" && base != "regression" && base != "zero" && base != "perturbed")
        fail("unknown model '" + c.model + "'");
    if ((base == "analytic" || base == "perturbed") && c.problem != "lq" && c.problem != "ou")
        fail("invalid combination: model '" + c.model + "' exists only for problems lq and ou");
    if (c.problem == "zero" && base != "zero")
        fail("invalid combination: the zero problem supports only model=zero");

    if (c.m_samples < 2) fail("M must be >= 2");
    if (c.n_modes < 1) fail("n must be >= 1");
    if (c.n_t < 1) fail("N_T must be >= 1");
    if (c.n_iter < 1) fail("N_iter must be >= 1");
    if (c.n_opt < 1) fail("N_opt must be >= 1");
    if (c.restarts < 1) fail("restarts must be >= 1");
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) fail("alpha must be in (0, 1]");
    if (!(c.eta > 0.0)) fail("eta must be positive");
    if (!(c.eps > 0.0)) fail("eps must be positive");
    if (!(c.fd_step > 0.0)) fail("fd_step must be positive");
    if (c.m_up < 2) fail("M_up must be >= 2");
    if (c.n_t_up < 1) fail("N_T_up must be >= 1");
    if (c.degree < 1) fail("degree must be >= 1");
    if (c.m_reg < 2) fail("M_reg must be >= 2");
    if (c.n_reg < 1) fail("N_reg must be >= 1");
    if (c.dither < 0.0) fail("dither must be >= 0");
    if (c.integrator != "default" && c.integrator != "euler" && c.integrator != "rk4")
        fail("integrator must be one of: default, euler, rk4");
    if (c.quadrature != "default" && c.quadrature != "right" && c.quadrature != "left")
        fail("quadrature must be one of: default, right, left");
    if (c.workers < 0) fail("workers must be >= 0");
    if (c.x0 && c.x0->size() != c.d) fail("x0 dimension does not match d");
    if (c.x0_sweep) {
        const auto& s = *c.x0_sweep;
        if (!(s[1] > 0.0)) throw ConfigError("x0_sweep step must be positive");
        if (s[0] > s[2]) throw ConfigError("x0_sweep start must be <= end");
    }
}

RunConfig finish_parse(ParseState& st) {
    // Environment overrides, applied on top of whatever the file set.
    for (const char* key : kKeys) {
        std::string env_name = "DUALBOUND_";
        for (const char* p = key; *p; ++p)
            env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
        if (const char* v = std::getenv(env_name.c_str()))
            apply_kv(st, key, v, "environment " + env_name);
    }
    if (!st.x0_raw.empty()) st.cfg.x0 = resolve_x0(st.x0_raw, st.x0_where, st.cfg.d);
    if (!st.sweep_raw.empty()) {
        const auto parts = split(st.sweep_raw, ':');
        if (parts.size() != 3)
            throw ConfigError("key 'x0_sweep': expected start:step:end (" + st.sweep_where + ")");
        st.cfg.x0_sweep = {{parse_double("x0_sweep", trim(parts[0]), st.sweep_where),
                            parse_double("x0_sweep", trim(parts[1]), st.sweep_where),
                            parse_double("x0_sweep", trim(parts[2]), st.sweep_where)}};
    }
    validate(st.cfg);
    return st.cfg;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string join_x0(const Vec& x) {
    std::string s;
    for (int i = 0; i < x.size(); ++i) {
        if (i) s += ';';
        s += fmt(x[i]);
    }
    return s;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    ParseState st;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
        apply_kv(st, key, value, "line " + std::to_string(lineno));
    }
    return finish_parse(st);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string describe_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "problem=" << cfg.problem << "\n";
    out << "d=" << cfg.d << "\n";
    out << "x0=" << (cfg.x0 ? join_x0(*cfg.x0) : std::string("default")) << "\n";
    if (cfg.x0_sweep)
        out << "x0_sweep=" << fmt((*cfg.x0_sweep)[0]) << ":" << fmt((*cfg.x0_sweep)[1]) << ":"
            << fmt((*cfg.x0_sweep)[2]) << "\n";
    out << "method=" << cfg.method << "\n";
    out << "model=" << cfg.model << "\n";
    out << "M=" << cfg.m_samples << "\n";
    out << "n=" << cfg.n_modes << "\n";
    out << "N_T=" << cfg.n_t << "\n";
    out << "N_iter=" << cfg.n_iter << "\n";
    out << "N_opt=" << cfg.n_opt << "\n";
    out << "restarts=" << cfg.restarts << "\n";
    out << "alpha=" << fmt(cfg.alpha) << "\n";
    out << "eta=" << fmt(cfg.eta) << "\n";
    out << "eps=" << fmt(cfg.eps) << "\n";
    out << "fd_step=" << fmt(cfg.fd_step) << "\n";
    out << "seed=" << cfg.seed << "\n";
    out << "M_up=" << cfg.m_up << "\n";
    out << "N_T_up=" << cfg.n_t_up << "\n";
    out << "degree=" << cfg.degree << "\n";
    out << "M_reg=" << cfg.m_reg << "\n";
    out << "N_reg=" << cfg.n_reg << "\n";
    out << "dither=" << fmt(cfg.dither) << "\n";
    out << "integrator=" << cfg.integrator << "\n";
    out << "quadrature=" << cfg.quadrature << "\n";
    out << "workers=" << cfg.workers << "\n";
    out << "output_dir=" << cfg.output_dir << "\n";
    return out.str();
}

namespace {

struct RowWriter {
    std::ofstream csv;
    const RunConfig* cfg = nullptr;

    void header() {
        csv << "problem,d,x0,method,model,M,n,N_T,seed,mean,half_width,excluded,wall_time_s\n";
        csv.flush();
    }
    void row(const Vec& x0, const BoundEstimate& e, const std::string& model_label, int n_modes,
             int n_t) {
        csv << cfg->problem << ',' << cfg->d << ',' << join_x0(x0) << ',' << e.method << ','
            << model_label << ',' << e.samples << ',' << n_modes << ',' << n_t << ',' << cfg->seed
            << ',' << fmt(e.mean) << ',' << fmt(e.half_width) << ',' << e.excluded << ','
            << fmt(e.wall_time_s) << "\n";
        csv.flush();
    }
};

void report_estimate(std::ostringstream& rep, const BoundEstimate& e) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-10s mean=% .6f  half_width=%.6f  excluded=%d  wall=%.2fs\n",
                  e.method.c_str(), e.mean, e.half_width, e.excluded, e.wall_time_s);
    rep << buf;
}

void report_gap(std::ostringstream& rep, const std::string& label, const GapReport& g) {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "  interval (%s): [% .6f, % .6f]  rel_gap=%.4f", label.c_str(),
                  g.interval_lo, g.interval_hi, g.relative_gap);
    rep << buf;
    if (g.reference)
        rep << (g.contains_reference ? "  contains reference" : "  MISSES reference");
    rep << "\n";
}

}  // namespace

int run_config(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);

    ControlProblem base = make_problem(cfg.problem, cfg.d);
    Vec x0_base = cfg.x0 ? *cfg.x0 : base.x0;
    std::vector<Vec> points;
    if (cfg.x0_sweep) {
        const auto& s = *cfg.x0_sweep;
        for (double v = s[0]; v <= s[2] + 1e-12 * std::max(1.0, std::abs(s[2])); v += s[1]) {
            Vec p = x0_base;
            p[0] = v;
            points.push_back(p);
        }
    } else {
        points.push_back(x0_base);
    }

    int workers = cfg.workers;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

    const bool want_pont = cfg.method == "pontryagin" || cfg.method == "all";
    const bool want_hopf = cfg.method == "hopf" || cfg.method == "all";
    const bool want_primal = cfg.method == "primal" || cfg.method == "all";

    SweepConfig sweep;
    sweep.n_t = cfg.n_t;
    sweep.max_iters = cfg.n_iter;
    sweep.alpha = cfg.alpha;
    sweep.eps = cfg.eps;
    sweep.integrator = cfg.integrator == "euler" ? Integrator::euler : Integrator::rk4;
    sweep.quadrature = cfg.quadrature == "right" ? Quadrature::right : Quadrature::left;

    HopfConfig hopf;
    hopf.n_t = cfg.n_t;
    hopf.max_iters = cfg.n_opt;
    hopf.eta = cfg.eta;
    hopf.fd_step = cfg.fd_step;
    hopf.restarts = cfg.restarts;
    hopf.integrator = cfg.integrator == "euler" ? Integrator::euler : Integrator::rk4;
    hopf.quadrature = cfg.quadrature == "left" ? Quadrature::left : Quadrature::right;

    DualRunConfig drc{sweep, hopf, workers};

    RowWriter out;
    out.cfg = &cfg;
    out.csv.open(fs::path(cfg.output_dir) / "results.csv");
    if (!out.csv) throw std::runtime_error("cannot write results.csv under " + cfg.output_dir);
    out.header();

    std::ostringstream rep;
    int exit_code = 0;

    for (std::size_t pi = 0; pi < points.size() && exit_code == 0; ++pi) {
        ControlProblem pb = base;
        pb.x0 = points[pi];

        MartingaleModel model;
        std::optional<FeedbackControl> control;
        if (cfg.model == "zero") {
            model = zero_model(pb.noise_dim);
            // No surrogate to derive a control from; u = 0 (clamped into the
            // admissible box) is still a valid feedback, so primal runs stay
            // well-defined upper bounds.
            const Vec u0 = clamp_to_box(Vec::Zero(pb.control_dim), pb.control_box);
            control = FeedbackControl{"zero", [u0](double, const Vec&) { return u0; }};
        } else if (cfg.model == "analytic") {
            AnalyticModel am = analytic_model(cfg.problem, cfg.d);
            model = am.model;
            control = am.control;
        } else if (cfg.model.rfind("perturbed(", 0) == 0) {
            AnalyticModel am = analytic_model(cfg.problem, cfg.d);
            model = perturbed_model(am.model, cfg.perturb_amplitude, pb.state_dim, pb.noise_dim);
            control = am.control;
        } else {  // regression
            RegressionModel rm = fit_regression_model(pb, pb.x0, cfg.degree, cfg.m_reg, cfg.n_reg,
                                                      cfg.seed, cfg.dither);
            save_regression(rm, (fs::path(cfg.output_dir) /
                                 ("surrogate_" + std::to_string(pi) + ".txt"))
                                    .string());
            model = regression_z(rm, pb);
            control = regression_control(rm, pb);
        }

        rep << "== problem=" << cfg.problem << " d=" << cfg.d << " x0=(" << join_x0(pb.x0)
            << ") model=" << cfg.model << " ==\n";
        std::optional<OracleValue> ref = reference_for(pb, pb.x0);
        if (ref) {
            char buf[120];
            std::snprintf(buf, sizeof(buf), "  reference: % .6f (%s, err<=%.1e)\n", ref->value,
                          ref->kind.c_str(), ref->error_estimate);
            rep << buf;
        }

        std::optional<BoundEstimate> ep, eh, eu;
        try {
            if (want_pont) {
                ep = dual_lower_bound(pb, model, DualMethod::pontryagin, cfg.m_samples,
                                      cfg.n_modes, cfg.seed, drc);
                out.row(pb.x0, *ep, cfg.model, cfg.n_modes, cfg.n_t);
                report_estimate(rep, *ep);
            }
            if (want_hopf) {
                eh = dual_lower_bound(pb, model, DualMethod::hopf, cfg.m_samples, cfg.n_modes,
                                      cfg.seed, drc);
                out.row(pb.x0, *eh, cfg.model, cfg.n_modes, cfg.n_t);
                report_estimate(rep, *eh);
            }
            if (want_primal) {
                eu = simulate_upper_bound(pb, *control, pb.x0, cfg.m_up, cfg.n_t_up, cfg.seed,
                                          workers);
                out.row(pb.x0, *eu, cfg.model, 0, cfg.n_t_up);
                report_estimate(rep, *eu);
            }
        } catch (const EstimatorFailure& e) {
            std::cerr << "error: " << e.what() << "\n";
            rep << "  ABORTED: " << e.what() << "\n";
            exit_code = 2;
        }

        std::optional<double> refv;
        if (ref) refv = ref->value;
        if (ep && eu) report_gap(rep, "pontryagin/primal", gap_report(*ep, *eu, refv));
        if (eh && eu) report_gap(rep, "hopf/primal", gap_report(*eh, *eu, refv));
        rep << "\n";
    }

    std::ofstream report(fs::path(cfg.output_dir) / "report.txt");
    report << rep.str();
    return exit_code;
}

}  // namespace dualbound
