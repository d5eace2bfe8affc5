#include "robust_mdp/mdp_io.hpp"

#include "robust_mdp/errors.hpp"

#include <fstream>
#include <string>

namespace robust_mdp {

using nlohmann::json;

json mdp_to_json(const TabularMdp& mdp) {
    const std::size_t ns = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    json cost = json::array();
    json kernel = json::array();
    for (std::size_t s = 0; s < ns; ++s) {
        json cost_row = json::array();
        json kernel_block = json::array();
        for (std::size_t a = 0; a < na; ++a) {
            cost_row.push_back(mdp.cost(s, a));
            auto row = mdp.row(s, a);
            kernel_block.push_back(json(std::vector<double>(row.begin(), row.end())));
        }
        cost.push_back(std::move(cost_row));
        kernel.push_back(std::move(kernel_block));
    }
    return json{{"num_states", ns}, {"num_actions", na},  {"gamma", mdp.gamma()},
                {"radius", mdp.radius()}, {"cost", std::move(cost)}, {"kernel", std::move(kernel)}};
}

namespace {

const json& field(const json& doc, const char* name) {
    if (!doc.is_object()) throw LoadError("document: expected a JSON object");
    auto it = doc.find(name);
    if (it == doc.end()) throw LoadError(std::string(name) + ": missing field");
    return *it;
}

std::size_t positive_int(const json& doc, const char* name) {
    const json& v = field(doc, name);
    if (!v.is_number_integer() || v.get<long long>() <= 0)
        throw LoadError(std::string(name) + ": expected a positive integer");
    return v.get<std::size_t>();
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw LoadError(where + ": expected a number");
    return v.get<double>();
}

const json& sized_array(const json& v, std::size_t n, const std::string& where) {
    if (!v.is_array()) throw LoadError(where + ": expected an array");
    if (v.size() != n)
        throw LoadError(where + ": expected " + std::to_string(n) + " entries, got " +
                        std::to_string(v.size()));
    return v;
}

} // namespace

TabularMdp mdp_from_json(const json& doc) {
    const std::size_t ns = positive_int(doc, "num_states");
    const std::size_t na = positive_int(doc, "num_actions");
    const double gamma = number(field(doc, "gamma"), "gamma");
    const double radius = number(field(doc, "radius"), "radius");

    std::vector<double> cost;
    cost.reserve(ns * na);
    const json& cost_doc = sized_array(field(doc, "cost"), ns, "cost");
    for (std::size_t s = 0; s < ns; ++s) {
        const std::string where = "cost[" + std::to_string(s) + "]";
        const json& row = sized_array(cost_doc[s], na, where);
        for (std::size_t a = 0; a < na; ++a)
            cost.push_back(number(row[a], where + "[" + std::to_string(a) + "]"));
    }

    std::vector<double> kernel;
    kernel.reserve(ns * na * ns);
    const json& kernel_doc = sized_array(field(doc, "kernel"), ns, "kernel");
    for (std::size_t s = 0; s < ns; ++s) {
        const std::string ws = "kernel[" + std::to_string(s) + "]";
        const json& block = sized_array(kernel_doc[s], na, ws);
        for (std::size_t a = 0; a < na; ++a) {
            const std::string wa = ws + "[" + std::to_string(a) + "]";
            const json& row = sized_array(block[a], ns, wa);
            for (std::size_t t = 0; t < ns; ++t)
                kernel.push_back(number(row[t], wa + "[" + std::to_string(t) + "]"));
        }
    }

    try {
        return TabularMdp(ns, na, std::move(kernel), std::move(cost), gamma, radius);
    } catch (const ParameterError& e) {
        throw LoadError(e.what());
    }
}

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << mdp_to_json(mdp).dump(2) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

TabularMdp load_mdp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    return mdp_from_json(doc);
}

} // namespace robust_mdp
