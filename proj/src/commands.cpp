#include "lagvar/commands.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

#include "CLI11.hpp"
#include "lagvar/model_io.hpp"

namespace lagvar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 6.283185307179586;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double parse_number(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw UsageError(what + ": '" + s + "' is not a number");
    return v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
}

struct ModelSource {
    std::string builtin;
    std::vector<std::string> params;
    std::optional<double> pot_exp;
    std::string file;
    std::optional<double> omega;
    std::string nu;

    void add_options(CLI::App* app) {
        app->add_option("--builtin", builtin, "built-in model name");
        app->add_option("--param", params, "built-in parameter as key=value (repeatable)");
        app->add_option("--pot-exp", pot_exp, "potential exponent n for two_centers");
        app->add_option("--model", file, "model file (JSON)");
        app->add_option("--omega", omega, "period");
        app->add_option("--nu", nu, "winding vector of the angle coordinates, comma separated");
    }

    bool given() const { return !builtin.empty() || !file.empty(); }

    ModelSpec build(std::optional<double> omega_override = std::nullopt) const {
        if (builtin.empty() == file.empty()) throw UsageError("exactly one of --builtin or --model is required");
        const std::optional<double> w = omega_override ? omega_override : omega;
        ModelSpec model;
        if (!builtin.empty()) {
            ParamMap pm;
            for (const auto& kv : params) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + kv + "'");
                pm[kv.substr(0, eq)] = parse_number(kv.substr(eq + 1), "--param " + kv.substr(0, eq));
            }
            if (pot_exp) pm["n"] = *pot_exp;
            if (w) pm["omega"] = *w;
            model = lagvar::builtin(builtin, pm);
        } else {
            if (!params.empty() || pot_exp) throw UsageError("--param and --pot-exp apply to built-in models only");
            model = load_model_file(file);
            if (w) model.omega = *w;
        }
        if (!nu.empty()) {
            std::vector<int> v;
            for (const auto& s : split_list(nu)) {
                const double x = parse_number(s, "--nu");
                if (x != std::round(x)) throw UsageError("--nu entries must be integers");
                v.push_back(static_cast<int>(x));
            }
            model.nu = v;
        }
        normalize(model);
        return model;
    }
};

struct SolveFlags {
    std::optional<int> coils;
    int modes = 32;
    int nodes = 0;
    std::string seed_file;
    std::uint64_t rng_seed = 0;
    int restarts = 1;
    double residual_tol = 1e-5;
    int max_iters = 5000;
    double grad_tol = 1e-9;
    double guard_delta = 1e-3;
    bool history = false;

    void add_options(CLI::App* app) {
        app->add_option("--coils", coils, "coil count of the seed curve (planar two-point singular sets)")->check(CLI::PositiveNumber);
        app->add_option("--modes", modes, "sine modes N")->check(CLI::PositiveNumber);
        app->add_option("--nodes", nodes, "quadrature nodes M (default: power of two >= max(8N, 256))");
        app->add_option("--seed-file", seed_file, "coeffs.json to start from");
        app->add_option("--rng-seed", rng_seed, "seed for restart perturbations");
        app->add_option("--restarts", restarts, "number of scaled restarts")->check(CLI::PositiveNumber);
        app->add_option("--residual-tol", residual_tol, "EL sup-residual accepted for exit 0");
        app->add_option("--max-iters", max_iters, "iteration limit")->check(CLI::PositiveNumber);
        app->add_option("--grad-tol", grad_tol, "gradient-norm stopping tolerance");
        app->add_option("--guard-delta", guard_delta, "minimum distance to the singular set during line search");
        app->add_flag("--history", history, "write history.jsonl");
    }

    SolveOptions options() const {
        SolveOptions o;
        o.modes = modes;
        o.nodes = nodes > 0 ? nodes : default_nodes(modes);
        o.max_iters = max_iters;
        o.grad_tol = grad_tol;
        o.guard_delta = guard_delta;
        o.validate();
        return o;
    }
};

bool planar_pair(const ModelSpec& model) {
    return model.m == 2 && model.n == 0 && model.singular_set().points().size() == 2;
}

ClassSpec resolve_class(const ModelSpec& model, const SolveFlags& f) {
    ClassSpec cls;
    if (!f.seed_file.empty()) {
        if (f.coils) throw UsageError("--coils and --seed-file are mutually exclusive");
        cls.seed = coeffs_from_json(json::parse(read_file(f.seed_file)));
    } else if (f.coils) {
        if (!planar_pair(model)) throw UsageError("--coils needs a planar model with one singular pair");
        cls.coils = *f.coils;
    } else if (planar_pair(model)) {
        cls.coils = 1;
    }
    return cls;
}

struct SolveOutcome {
    SolveResult result;
    ResidualReport residual;
    bool residual_ok = false;
    int exit = exit_code::usage;
};

SolveOutcome solve_with_restarts(const ModelSpec& model, const SolveFlags& f, const SolveOptions& opts,
                                 const IterationCallback& cb) {
    const ClassSpec cls = resolve_class(model, f);
    FourierTrajectory base = cls.seed ? *cls.seed
                             : cls.coils ? seed_curve(*cls.coils, model.singular_set(), model.omega, opts.modes)
                                         : FourierTrajectory::zero_for(model, opts.modes);
    base = base.with_modes(opts.modes);
    std::mt19937_64 rng(f.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::optional<SolveOutcome> best;
    for (int r = 0; r < f.restarts; ++r) {
        ClassSpec attempt;
        FourierTrajectory seed = base;
        if (r > 0) {
            // Restart r: seed scaled by 2^r plus a small deterministic perturbation.
            seed.coeffs *= std::ldexp(1.0, r);
            for (int k = 0; k < seed.modes(); ++k)
                for (int d = 0; d < seed.dim(); ++d) seed.coeffs(k, d) += 1e-3 * normal(rng) / (k + 1);
        }
        attempt.seed = seed;
        SolveOutcome o;
        o.result = solve_in_class(model, attempt, opts, cb);
        o.residual = el_residual(model, o.result.trajectory, opts.nodes);
        o.residual_ok = o.residual.el_sup < f.residual_tol;
        o.exit = solve_exit_code(o.result.status, o.residual_ok);
        // Keep the lowest-action success; without one, the latest attempt.
        const bool ok = o.exit == exit_code::ok;
        if (!best || (ok && (best->exit != exit_code::ok || o.result.report.S < best->result.report.S)) ||
            (!ok && best->exit != exit_code::ok))
            best = std::move(o);
    }
    return std::move(*best);
}

json options_json(const SolveOptions& o) {
    return {{"modes", o.modes},         {"nodes", o.nodes},           {"max_iters", o.max_iters},
            {"grad_tol", o.grad_tol},   {"step_tol", o.step_tol},     {"guard_delta", o.guard_delta},
            {"penalty_mu0", o.penalty_mu0}, {"penalty_growth", o.penalty_growth}, {"penalty_max", o.penalty_max},
            {"diverge_factor", o.diverge_factor}, {"memory", o.memory}};
}

fs::path prepare_out(const std::string& dir) {
    fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (!fs::is_directory(p)) throw UsageError("output directory " + p.string() + " is not usable");
    return p;
}

std::string violations_text(const HypothesisReport& r) {
    std::string s;
    for (const auto& v : r.violated) s += (s.empty() ? "" : ", ") + v.condition + " (" + v.hypothesis + ")";
    return s;
}

int cmd_check(const ModelSource& src, int samples, double box, std::uint64_t seed, const std::string& out_dir,
              std::ostream& out) {
    const ModelSpec model = src.build();
    Sampler sp;
    sp.count = samples;
    sp.box = box;
    sp.seed = seed;
    const HypothesisReport rep = check_hypotheses(model, sp);
    const int code = rep.overall ? exit_code::ok : exit_code::hypothesis_failure;
    json j = {{"model", model.name}, {"omega", model.omega}, {"hypotheses", to_json(rep)}, {"exit_code", code}};
    write_json(prepare_out(out_dir) / "report.json", j);
    out << "model " << model.name << ", omega " << format_double(model.omega) << ": margin " << format_double(rep.margin)
        << "\n";
    if (rep.overall)
        out << "overall: pass (not falsified on " << rep.samples << " samples)\n";
    else
        out << "overall: fail; violated " << violations_text(rep) << "\n";
    for (const auto& w : rep.warnings) out << "warning: " << w << "\n";
    return code;
}

int cmd_solve(const ModelSource& src, const SolveFlags& f, const std::string& out_dir, std::ostream& out) {
    const ModelSpec model = src.build();
    const SolveOptions opts = f.options();
    const fs::path dir = prepare_out(out_dir);
    std::string history;
    IterationCallback cb;
    if (f.history) cb = [&](const IterationRecord& r) { history += to_json(r).dump() + "\n"; };
    const SolveOutcome o = solve_with_restarts(model, f, opts, cb);

    json j = {{"model", model_to_json(model)},
              {"options", options_json(opts)},
              {"solve", to_json(o.result)},
              {"residual", to_json(o.residual, true)},
              {"residual_tol", f.residual_tol},
              {"residual_ok", o.residual_ok},
              {"exit_code", o.exit}};
    write_json(dir / "result.json", j);
    write_json(dir / "coeffs.json", coeffs_to_json(o.result.trajectory));
    write_file(dir / "trajectory.csv", trajectory_csv(o.result.trajectory, opts.nodes));
    if (f.history) write_file(dir / "history.jsonl", history);

    out << "status " << to_string(o.result.status) << " after " << o.result.iterations << " iterations";
    if (!o.result.message.empty()) out << " (" << o.result.message << ")";
    out << "\nS " << format_double(o.result.report.S) << ", |grad| " << format_double(o.result.report.grad_norm)
        << ", h1 " << format_double(o.result.report.h1) << ", el_sup " << format_double(o.residual.el_sup) << "\n";
    if (o.result.signature.windings_defined) {
        out << "windings";
        for (const auto& [p, w] : o.result.signature.windings)
            out << " (" << format_double(p[0] + 0.0) << "," << format_double(p[1] + 0.0) << "):" << w;
        out << ", min distance " << format_double(o.result.signature.min_distance) << "\n";
    }
    return o.exit;
}

int cmd_sweep(const ModelSource& src, const SolveFlags& f, const std::string& omegas_text, int jobs,
              const std::string& out_dir, std::ostream& out) {
    std::vector<double> omegas;
    for (const auto& s : split_list(omegas_text)) {
        if (s.empty()) throw UsageError("--omegas has an empty entry");
        omegas.push_back(parse_number(s, "--omegas"));
    }
    if (omegas.empty()) throw UsageError("--omegas needs at least one value");
    if (!src.build().is_autonomous()) throw UsageError("sweep needs a time-independent model");
    const SolveOptions opts = f.options();
    const fs::path dir = prepare_out(out_dir);

    struct Row {
        std::string status;
        double S = NAN, h1 = NAN, el_sup = NAN, min_distance = NAN;
        bool success = false;
        std::string error;
    };
    std::vector<Row> rows(omegas.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < omegas.size();) {
            Row& row = rows[i];
            try {
                const ModelSpec model = src.build(omegas[i]);
                if (!(coercivity_margin(model.constants, model.omega) > 0.0)) {
                    row.status = "skipped-noncoercive";
                    continue;
                }
                SolveFlags rf = f;
                rf.history = false;
                const SolveOutcome o = solve_with_restarts(model, rf, opts, {});
                row.status = to_string(o.result.status);
                row.S = o.result.report.S;
                row.h1 = o.result.report.h1;
                row.el_sup = o.residual.el_sup;
                row.min_distance = o.result.signature.min_distance;
                row.success = o.exit == exit_code::ok;
                const fs::path rd = dir / ("row_" + std::to_string(i));
                fs::create_directories(rd);
                write_json(rd / "coeffs.json", coeffs_to_json(o.result.trajectory));
                write_json(rd / "result.json", {{"omega", model.omega},
                                                {"solve", to_json(o.result)},
                                                {"residual", to_json(o.residual, false)},
                                                {"exit_code", o.exit}});
            } catch (const std::exception& e) {
                row.status = "error";
                row.error = e.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(omegas.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    std::string csv = "omega,status,S,h1,el_sup,min_distance\n";
    bool any = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        csv += format_double(omegas[i]) + "," + r.status + "," + cell(r.S) + "," + cell(r.h1) + "," + cell(r.el_sup) + "," +
               cell(r.min_distance) + "\n";
        any = any || r.success;
        out << "omega " << format_double(omegas[i]) << ": " << r.status;
        if (!r.error.empty()) out << " (" << r.error << ")";
        out << "\n";
    }
    write_file(dir / "summary.csv", csv);
    return any ? exit_code::ok : exit_code::all_rows_failed;
}

int cmd_plotdata(const std::string& input, const ModelSource& src, int angles, const std::string& out_dir,
                 std::ostream& out) {
    const std::string text = read_file(input);
    int m = -1, n = angles;
    SingularSet sigma;
    if (src.given()) {
        const ModelSpec model = src.build();
        m = model.m;
        n = model.n;
        sigma = model.singular_set();
    }
    std::string csv;
    const bool blank = text.find_first_not_of(" \r\n\t") == std::string::npos;
    if (blank) {
        csv = plot_csv(CsvTable{}, std::max(m, 0), n, sigma);
    } else {
        const CsvTable table = parse_csv(text);
        if (table.header.size() < 3 || table.header.size() % 2 == 0 || table.header[0] != "t")
            throw FormatError("trajectory CSV must have columns t, z1..zD, dz1..dzD");
        const int dim = static_cast<int>(table.header.size() - 1) / 2;
        if (m < 0) m = dim - n;
        if (m < 0 || m + n != dim) throw FormatError("trajectory CSV width does not match the model dimension");
        csv = plot_csv(table, m, n, sigma);
    }
    const fs::path dir = prepare_out(out_dir);
    write_file(dir / "plot.csv", csv);
    out << "wrote " << (dir / "plot.csv").string() << "\n";
    return exit_code::ok;
}

}  // namespace

int default_nodes(int modes) {
    int m = 256;
    while (m < 8 * modes) m *= 2;
    return m;
}

int solve_exit_code(SolveStatus status, bool residual_ok) {
    switch (status) {
        case SolveStatus::Converged: return residual_ok ? exit_code::ok : exit_code::residual;
        case SolveStatus::Diverged: return exit_code::diverged;
        case SolveStatus::GuardTriggered:
        case SolveStatus::SignatureChanged: return exit_code::guard;
        case SolveStatus::MaxIter: return exit_code::max_iter;
    }
    return exit_code::usage;
}

std::string plot_csv(const CsvTable& table, int m, int n, const SingularSet& sigma) {
    std::string csv = "t,px,py,dist_sigma";
    for (int j = 1; j <= n; ++j) csv += ",phi" + std::to_string(j) + "_mod,phi" + std::to_string(j) + "_wrap";
    csv += '\n';
    const int dim = m + n;
    std::vector<double> prev_turn(n, 0.0);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (static_cast<int>(row.size()) < 1 + dim) throw FormatError("trajectory row is too short");
        Eigen::VectorXd z(dim);
        for (int d = 0; d < dim; ++d) z[d] = row[1 + d];
        double px = 0.0, py = 0.0;
        if (m >= 2) {
            px = z[0];
            py = z[1];
        } else if (m == 1 && n >= 1) {
            px = z[0] * std::cos(z[1]);
            py = z[0] * std::sin(z[1]);
        } else if (m == 1) {
            px = z[0];
        } else if (n >= 1) {
            px = std::cos(z[0]);
            py = std::sin(z[0]);
        }
        csv += format_double(row[0]) + "," + format_double(px) + "," + format_double(py) + ",";
        csv += sigma.empty() ? std::string("inf") : format_double(nearest_singular(sigma, z).distance);
        for (int j = 0; j < n; ++j) {
            const double phi = z[m + j];
            const double turn = std::floor(phi / kTwoPi);
            double mod = phi - kTwoPi * turn;
            if (mod >= kTwoPi) mod -= kTwoPi;
            const double wrap = r == 0 ? 0.0 : turn - prev_turn[j];
            prev_turn[j] = turn;
            csv += "," + format_double(mod) + "," + std::to_string(static_cast<long long>(wrap));
        }
        csv += '\n';
    }
    return csv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Periodic solutions of Lagrangian systems by action minimization", "lagvar"};
    app.require_subcommand(1);

    ModelSource check_src, solve_src, sweep_src, plot_src;
    SolveFlags solve_flags, sweep_flags;
    std::string check_out, solve_out, sweep_out, plot_out, omegas, plot_input;
    int samples = 2000, jobs = 1, angles = 0;
    double box = 10.0;
    std::uint64_t check_seed = 0;

    CLI::App* check = app.add_subcommand("check", "test the existence hypotheses on a model");
    check_src.add_options(check);
    check->add_option("--samples", samples, "sample count")->check(CLI::PositiveNumber);
    check->add_option("--box", box, "sampling box radius")->check(CLI::PositiveNumber);
    check->add_option("--rng-seed", check_seed, "sampler seed");
    check->add_option("--out", check_out, "output directory");

    CLI::App* solve = app.add_subcommand("solve", "minimize the action in a homotopy class");
    solve_src.add_options(solve);
    solve_flags.add_options(solve);
    solve->add_option("--out", solve_out, "output directory");

    CLI::App* sweep = app.add_subcommand("sweep", "solve for each period in a list");
    sweep_src.add_options(sweep);
    sweep_flags.add_options(sweep);
    sweep->add_option("--omegas", omegas, "comma-separated periods")->required();
    sweep->add_option("--jobs", jobs, "parallel rows")->check(CLI::PositiveNumber);
    sweep->add_option("--out", sweep_out, "output directory");

    CLI::App* plot = app.add_subcommand("plotdata", "derive plot columns from trajectory.csv");
    plot->add_option("input", plot_input, "trajectory.csv")->required();
    plot_src.add_options(plot);
    plot->add_option("--angles", angles, "trailing angle coordinates when no model is given")->check(CLI::NonNegativeNumber);
    plot->add_option("--out", plot_out, "output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_code::usage;
    }

    try {
        if (check->parsed()) return cmd_check(check_src, samples, box, check_seed, check_out, out);
        if (solve->parsed()) return cmd_solve(solve_src, solve_flags, solve_out, out);
        if (sweep->parsed()) return cmd_sweep(sweep_src, sweep_flags, omegas, jobs, sweep_out, out);
        if (plot->parsed()) return cmd_plotdata(plot_input, plot_src, angles, plot_out, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    }
    return exit_code::usage;
}

}  // namespace lagvar::cli
