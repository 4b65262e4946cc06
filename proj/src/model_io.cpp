#include "lagvar/model_io.hpp"

#include <fstream>

namespace lagvar {

namespace {

Expr expression_field(const nlohmann::json& j, const std::string& where, int dim) {
    if (j.is_number()) return Expr::constant(j.get<double>());
    if (!j.is_string()) throw ModelError(where + " must be an expression string");
    try {
        return parse(j.get<std::string>(), dim);
    } catch (const ParseError& e) {
        throw ModelError(where + ": " + e.what());
    }
}

template <class T>
T required(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ModelError(std::string("model file is missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("model field '") + key + "': " + e.what());
    }
}

}  // namespace

ModelSpec model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ModelError("model file must hold a JSON object");
    ModelSpec model;
    model.name = j.value("name", std::string("model"));
    model.m = required<int>(j, "m");
    model.n = required<int>(j, "n");
    model.omega = required<double>(j, "omega");
    model.nu = j.value("nu", std::vector<int>{});
    const int dim = model.m + model.n;
    if (dim < 1) throw ModelError("model needs m + n >= 1");

    const auto& metric = j.at("metric");
    if (!metric.is_array() || static_cast<int>(metric.size()) != dim) throw ModelError("metric must have m+n rows");
    model.metric.assign(dim, std::vector<Expr>(dim));
    for (int i = 0; i < dim; ++i) {
        if (!metric[i].is_array() || static_cast<int>(metric[i].size()) != dim)
            throw ModelError("metric row " + std::to_string(i) + " must have m+n entries");
        for (int k = 0; k < dim; ++k)
            model.metric[i][k] = expression_field(metric[i][k], "metric[" + std::to_string(i) + "][" + std::to_string(k) + "]", dim);
    }
    if (j.contains("gyro")) {
        const auto& gyro = j.at("gyro");
        if (!gyro.is_array() || static_cast<int>(gyro.size()) != dim) throw ModelError("gyro must have m+n entries");
        for (int i = 0; i < dim; ++i) model.gyro.push_back(expression_field(gyro[i], "gyro[" + std::to_string(i) + "]", dim));
    }
    model.potential = j.contains("potential") ? expression_field(j.at("potential"), "potential", dim) : Expr::constant(0.0);
    if (j.contains("constraints")) {
        for (const auto& c : j.at("constraints")) {
            Constraint con;
            con.f = expression_field(c.at("f"), "constraint", dim);
            con.parity = parse_parity(c.value("parity", std::string("odd")));
            model.constraints.push_back(con);
        }
    }
    if (j.contains("constants")) {
        const auto& k = j.at("constants");
        model.constants.C = k.value("C", 0.0);
        model.constants.M = k.value("M", 0.0);
        model.constants.A = k.value("A", 0.0);
        model.constants.K = k.value("K", 0.5);
        model.constants.P = k.value("P", 0.0);
        model.constants.C1 = k.value("C1", 0.0);
    }
    if (j.contains("sigma")) {
        for (const auto& p : j.at("sigma")) {
            const auto v = p.get<std::vector<double>>();
            if (static_cast<int>(v.size()) != dim) throw ModelError("sigma points must have m+n coordinates");
            model.sigma_base.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), dim));
        }
    }
    normalize(model);
    return model;
}

nlohmann::json model_to_json(const ModelSpec& model) {
    nlohmann::json j;
    j["name"] = model.name;
    j["m"] = model.m;
    j["n"] = model.n;
    j["omega"] = model.omega;
    j["nu"] = model.nu;
    nlohmann::json metric = nlohmann::json::array();
    for (const auto& row : model.metric) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& e : row) r.push_back(e.str());
        metric.push_back(r);
    }
    j["metric"] = metric;
    nlohmann::json gyro = nlohmann::json::array();
    for (const auto& e : model.gyro) gyro.push_back(e.str());
    j["gyro"] = gyro;
    j["potential"] = model.potential.str();
    nlohmann::json cons = nlohmann::json::array();
    for (const auto& c : model.constraints) cons.push_back({{"f", c.f.str()}, {"parity", std::string(to_string(c.parity))}});
    j["constraints"] = cons;
    const auto& k = model.constants;
    j["constants"] = {{"C", k.C}, {"M", k.M}, {"A", k.A}, {"K", k.K}, {"P", k.P}, {"C1", k.C1}};
    nlohmann::json sigma = nlohmann::json::array();
    for (const auto& p : model.sigma_base) sigma.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    j["sigma"] = sigma;
    return j;
}

ModelSpec load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace lagvar
