#include "lagvar/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lagvar {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
    return out;
}

json witness_json(const std::optional<Witness>& w) {
    if (!w) return nullptr;
    return {{"t", num(w->t)}, {"z", vec(w->z)}, {"lhs", num(w->lhs)}, {"rhs", num(w->rhs)}, {"detail", w->detail}};
}

json check_json(const Check& c) {
    return {{"ok", c.ok}, {"skipped", c.skipped}, {"witness", witness_json(c.witness)}};
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json to_json(const ActionReport& r) {
    return {{"S", num(r.S)},
            {"grad_norm", num(r.grad_norm)},
            {"h1", num(r.h1)},
            {"min_distance", num(r.min_distance)},
            {"margin", num(r.margin)},
            {"lower_bound_at_h1", num(r.lower_bound_at_h1)}};
}

json to_json(const HomotopySignature& s) {
    json w = json::array();
    for (const auto& [p, n] : s.windings) w.push_back({{"point", vec(p)}, {"winding", n}});
    return {{"windings_defined", s.windings_defined},
            {"windings", w},
            {"min_distance", num(s.min_distance)},
            {"clearance_integral", num(s.clearance_integral)},
            {"nearest_point", s.nearest_point ? vec(*s.nearest_point) : json(nullptr)},
            {"nodes_used", s.nodes_used}};
}

json to_json(const HypothesisReport& r) {
    json parity = json::object();
    for (const auto& [name, c] : r.parity) parity[name] = check_json(c);
    json cparity = json::object();
    for (const auto& [name, c] : r.constraint_parity) cparity[name] = check_json(c);
    json violated = json::array();
    for (const auto& v : r.violated) violated.push_back({{"condition", v.condition}, {"hypothesis", v.hypothesis}});
    return {{"parity", parity},
            {"parity_ok", r.parity_ok},
            {"constraint_parity", cparity},
            {"bound_a", check_json(r.bound_a)},
            {"bound_g", check_json(r.bound_g)},
            {"bound_V", check_json(r.bound_V)},
            {"rank", check_json(r.rank)},
            {"min_singular_ratio", num(r.min_singular_ratio)},
            {"feasible_points", r.feasible_points},
            {"margin", num(r.margin)},
            {"samples", r.samples},
            {"violated", violated},
            {"warnings", r.warnings},
            {"overall", r.overall ? "pass" : "fail"},
            {"note", "sample-based: pass means not falsified"}};
}

json to_json(const ResidualReport& r, bool with_samples) {
    json j = {{"nodes", r.nodes},
              {"el_sup", num(r.el_sup)},
              {"el_l2", num(r.el_l2)},
              {"constraint_sup", num(r.constraint_sup)},
              {"constraint_rate_sup", num(r.constraint_rate_sup)},
              {"pseudo_inverse_nodes", r.pseudo_inverse_nodes},
              {"rank_deficient", r.rank_deficient},
              {"energy_drift", r.energy_drift ? num(*r.energy_drift) : json(nullptr)},
              {"min_distance", num(r.min_distance)},
              {"clearance_integral", num(r.clearance_integral)},
              {"holder_half", num(r.holder_half)}};
    if (r.multipliers.size() > 0) {
        json m = json::array();
        if (with_samples)
            for (Eigen::Index i = 0; i < r.multipliers.rows(); ++i) m.push_back(vec(r.multipliers.row(i).transpose()));
        j["multipliers"] = m;
    } else {
        j["multipliers"] = nullptr;
    }
    return j;
}

json to_json(const IterationRecord& r) {
    return {{"iteration", r.iteration},
            {"phase", r.phase},
            {"mu", num(r.mu)},
            {"objective", num(r.objective)},
            {"S", num(r.action)},
            {"grad_norm", num(r.grad_norm)},
            {"min_distance", num(r.min_distance)},
            {"constraint_sq", num(r.constraint_sq)},
            {"step", num(r.step)}};
}

json to_json(const SolveResult& r) {
    return {{"status", to_string(r.status)},
            {"message", r.message},
            {"iterations", r.iterations},
            {"final_mu", num(r.final_mu)},
            {"constraint_sq", num(r.constraint_sq)},
            {"seed_action", num(r.seed_action)},
            {"report", to_json(r.report)},
            {"signature", to_json(r.signature)},
            {"seed_signature", to_json(r.seed_signature)}};
}

json coeffs_to_json(const FourierTrajectory& traj) {
    json rows = json::array();
    for (int k = 0; k < traj.modes(); ++k) rows.push_back(vec(traj.coeffs.row(k).transpose()));
    return {{"omega", traj.omega}, {"m", traj.m}, {"nu", traj.nu}, {"N", traj.modes()}, {"coeffs", rows}};
}

FourierTrajectory coeffs_from_json(const json& j) {
    try {
        FourierTrajectory t;
        t.omega = j.at("omega").get<double>();
        t.m = j.at("m").get<int>();
        t.nu = j.value("nu", std::vector<int>{});
        const auto& rows = j.at("coeffs");
        const int n_modes = j.value("N", static_cast<int>(rows.size()));
        if (n_modes != static_cast<int>(rows.size())) throw FormatError("coeffs.json: N does not match the row count");
        const int dim = t.m + t.n();
        t.coeffs.resize(n_modes, dim);
        for (int k = 0; k < n_modes; ++k) {
            const auto row = rows[k].get<std::vector<double>>();
            if (static_cast<int>(row.size()) != dim) throw FormatError("coeffs.json: row width must be m + n");
            for (int d = 0; d < dim; ++d) t.coeffs(k, d) = row[d];
        }
        t.validate();
        return t;
    } catch (const json::exception& e) {
        throw FormatError(std::string("coeffs.json: ") + e.what());
    } catch (const TrajectoryError& e) {
        throw FormatError(std::string("coeffs.json: ") + e.what());
    }
}

std::string trajectory_csv(const FourierTrajectory& traj, int nodes) {
    const SampledPath p = sample(traj, nodes);
    const int dim = traj.dim();
    std::string out = "t";
    for (int d = 1; d <= dim; ++d) out += ",z" + std::to_string(d);
    for (int d = 1; d <= dim; ++d) out += ",dz" + std::to_string(d);
    out += '\n';
    for (int i = 0; i < nodes; ++i) {
        out += format_double(p.t[i]);
        for (int d = 0; d < dim; ++d) out += ',' + format_double(p.z(i, d));
        for (int d = 0; d < dim; ++d) out += ',' + format_double(p.zd(i, d));
        out += '\n';
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            throw FormatError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                              " fields, got " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            double v = 0.0;
            const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc() || res.ptr != c.data() + c.size())
                throw FormatError("CSV line " + std::to_string(lineno) + ": '" + c + "' is not a number");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw FormatError("CSV input has no header row");
    return table;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write " + tmp.string());
        out << content;
        if (!out) throw FormatError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

}  // namespace lagvar
