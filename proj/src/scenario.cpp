#include "zipgrid/scenario.hpp"

#include <fstream>

#include "zipgrid/steady_state.hpp"

namespace zipgrid {

namespace {

using nlohmann::json;

[[noreturn]] void bad_schema(const std::string& path, const std::string& why) {
    throw SchemaViolation(path + ": " + why);
}

const json& field(const json& j, const std::string& key,
                  const std::string& path) {
    if (!j.is_object()) bad_schema(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) bad_schema(path + "." + key, "missing field");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) bad_schema(path, "expected a number");
    return j.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback,
                 const std::string& path) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return number(j.at(key), path + "." + key);
}

// A scalar broadcasts to all n entries; an array must have exactly n.
VectorXd node_vector(const json& j, int n, const std::string& path) {
    if (j.is_number()) return VectorXd::Constant(n, j.get<double>());
    if (!j.is_array()) bad_schema(path, "expected a number or an array");
    if (static_cast<int>(j.size()) != n)
        bad_schema(path, "expected " + std::to_string(n) + " entries, got " +
                             std::to_string(j.size()));
    VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v[i] = number(j.at(i), path + "[" + std::to_string(i) + "]");
    return v;
}

json vector_to_json(const VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Network parse_network(const json& j) {
    const json& nodes = field(j, "nodes", "network");
    const json& edges = field(j, "edges", "network");
    if (!nodes.is_array() || nodes.empty())
        bad_schema("network.nodes", "expected a non-empty array");
    if (!edges.is_array()) bad_schema("network.edges", "expected an array");

    std::vector<DguParams> dgus;
    std::vector<ZipLoad> loads;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string path = "network.nodes[" + std::to_string(i) + "]";
        const json& node = nodes.at(i);
        DguParams d;
        d.R_s = number(field(node, "R_s", path), path + ".R_s");
        d.L_s = number(field(node, "L_s", path), path + ".L_s");
        d.C_s = number(field(node, "C_s", path), path + ".C_s");
        dgus.push_back(d);
        ZipLoad l;
        if (node.contains("load")) {
            const json& lj = node.at("load");
            l.Z_inv = number_or(lj, "Z_inv", 0.0, path + ".load");
            l.I_const = number_or(lj, "I_const", 0.0, path + ".load");
            l.P_const = number_or(lj, "P_const", 0.0, path + ".load");
        }
        loads.push_back(l);
    }

    const int n = static_cast<int>(nodes.size());
    std::vector<LineParams> lines;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const std::string path = "network.edges[" + std::to_string(k) + "]";
        const json& edge = edges.at(k);
        LineParams l;
        l.R_t = number(field(edge, "R_t", path), path + ".R_t");
        l.L_t = number(field(edge, "L_t", path), path + ".L_t");
        const double from = number(field(edge, "from", path), path + ".from");
        const double to = number(field(edge, "to", path), path + ".to");
        if (from < 1 || from > n || to < 1 || to > n)
            bad_schema(path, "node numbers must lie in 1.." + std::to_string(n));
        l.from = static_cast<int>(from) - 1;
        l.to = static_cast<int>(to) - 1;
        lines.push_back(l);
    }
    return Network::build(std::move(dgus), std::move(lines), std::move(loads));
}

} // namespace

NetworkState Scenario::initial_state() const {
    if (!x0_is_equilibrium) return x0_explicit;
    const Equilibrium eq = equilibrium_from_vstar(network, controller.V_star);
    return eq.state();
}

Scenario scenario_from_json(const json& j) {
    Scenario s(parse_network(field(j, "network", "")));
    const int n = s.network.n();

    const json& ctrl = field(j, "controller", "");
    s.controller.K1 = node_vector(field(ctrl, "K1", "controller"), n,
                                  "controller.K1");
    s.controller.K2 = node_vector(field(ctrl, "K2", "controller"), n,
                                  "controller.K2");
    s.controller.Pi = node_vector(field(ctrl, "Pi", "controller"), n,
                                  "controller.Pi");
    s.controller.V_star = node_vector(field(ctrl, "V_star", "controller"), n,
                                      "controller.V_star");
    const std::string mode =
        ctrl.contains("derivative_mode") ? ctrl.at("derivative_mode").get<std::string>()
                                         : "oracle";
    if (mode == "oracle") {
        s.controller.derivative_mode = DerivativeMode::oracle;
    } else if (mode == "levant") {
        s.controller.derivative_mode = DerivativeMode::levant;
    } else {
        bad_schema("controller.derivative_mode", "expected oracle or levant");
    }
    if (ctrl.contains("levant")) {
        const json& lv = ctrl.at("levant");
        s.controller.levant.lambda0 =
            number_or(lv, "lambda0", 1.5, "controller.levant");
        s.controller.levant.lambda1 =
            number_or(lv, "lambda1", 1.1, "controller.levant");
        if (lv.contains("L"))
            s.controller.levant.L =
                node_vector(lv.at("L"), n, "controller.levant.L");
    }
    if (s.controller.derivative_mode == DerivativeMode::levant &&
        s.controller.levant.L.size() == 0)
        bad_schema("controller.levant.L", "required in levant mode");
    const std::string law =
        ctrl.contains("law") ? ctrl.at("law").get<std::string>() : "full";
    if (law == "full") {
        s.law = ControlLawKind::proposed;
    } else if (law == "comparison") {
        s.law = ControlLawKind::comparison;
    } else {
        bad_schema("controller.law", "expected full or comparison");
    }
    s.controller.validate();

    const json& sim = field(j, "simulation", "");
    s.sim.t_end = number(field(sim, "t_end", "simulation"), "simulation.t_end");
    s.sim.dt = number(field(sim, "dt", "simulation"), "simulation.dt");
    const std::string method =
        sim.contains("method") ? sim.at("method").get<std::string>() : "rk4";
    if (method == "rk4") {
        s.sim.method = IntegrationMethod::rk4;
    } else if (method == "rk45-adaptive") {
        s.sim.method = IntegrationMethod::rk45_adaptive;
    } else {
        bad_schema("simulation.method", "expected rk4 or rk45-adaptive");
    }
    s.sim.rel_tol = number_or(sim, "rel_tol", 1e-8, "simulation");
    s.sim.abs_tol = number_or(sim, "abs_tol", 1e-8, "simulation");
    s.sim.record_stride = static_cast<int>(
        number_or(sim, "record_stride", 1.0, "simulation"));
    s.sim.validate();

    if (sim.contains("x0") && !sim.at("x0").is_string()) {
        const json& x0 = sim.at("x0");
        s.x0_is_equilibrium = false;
        s.x0_explicit.I_s =
            node_vector(field(x0, "I_s", "simulation.x0"), n, "simulation.x0.I_s");
        s.x0_explicit.V =
            node_vector(field(x0, "V", "simulation.x0"), n, "simulation.x0.V");
        const json& it = field(x0, "I_t", "simulation.x0");
        if (!it.is_array() || static_cast<int>(it.size()) != s.network.m())
            bad_schema("simulation.x0.I_t",
                       "expected " + std::to_string(s.network.m()) + " entries");
        s.x0_explicit.I_t.resize(s.network.m());
        for (int k = 0; k < s.network.m(); ++k)
            s.x0_explicit.I_t[k] = number(it.at(k), "simulation.x0.I_t");
    } else if (sim.contains("x0") &&
               sim.at("x0").get<std::string>() != "equilibrium") {
        bad_schema("simulation.x0", "expected \"equilibrium\" or a state object");
    }

    if (j.contains("events")) {
        const json& evs = j.at("events");
        if (!evs.is_array()) bad_schema("events", "expected an array");
        for (std::size_t k = 0; k < evs.size(); ++k) {
            const std::string path = "events[" + std::to_string(k) + "]";
            const json& ej = evs.at(k);
            Event e;
            e.time = number(field(ej, "time", path), path + ".time");
            if (!(e.time > 0.0) || !(e.time < s.sim.t_end))
                throw InvariantViolation(path +
                                         ".time must lie inside (0, t_end)");
            if (ej.contains("dZ_inv"))
                e.dZ_inv = node_vector(ej.at("dZ_inv"), n, path + ".dZ_inv");
            if (ej.contains("dI_const"))
                e.dI_const = node_vector(ej.at("dI_const"), n, path + ".dI_const");
            if (ej.contains("dP_const"))
                e.dP_const = node_vector(ej.at("dP_const"), n, path + ".dP_const");
            s.events.push_back(std::move(e));
        }
    }

    if (j.contains("outputs")) {
        const json& out = j.at("outputs");
        if (out.contains("dir")) s.outputs.dir = out.at("dir").get<std::string>();
        if (out.contains("svg")) s.outputs.svg = out.at("svg").get<bool>();
        if (out.contains("vector_field")) {
            const json& vf = out.at("vector_field");
            if (vf.contains("is_range")) {
                s.outputs.window.is_min = number(vf.at("is_range").at(0),
                                                 "outputs.vector_field.is_range");
                s.outputs.window.is_max = number(vf.at("is_range").at(1),
                                                 "outputs.vector_field.is_range");
            }
            if (vf.contains("v_range")) {
                s.outputs.window.v_min = number(vf.at("v_range").at(0),
                                                "outputs.vector_field.v_range");
                s.outputs.window.v_max = number(vf.at("v_range").at(1),
                                                "outputs.vector_field.v_range");
            }
            s.outputs.window.resolution = static_cast<int>(
                number_or(vf, "resolution", 41.0, "outputs.vector_field"));
        }
    }
    return s;
}

json scenario_to_json(const Scenario& s) {
    json j;
    json nodes = json::array();
    for (int i = 0; i < s.network.n(); ++i) {
        const DguParams& d = s.network.dgus()[i];
        const ZipLoad& l = s.network.loads()[i];
        nodes.push_back({{"R_s", d.R_s},
                         {"L_s", d.L_s},
                         {"C_s", d.C_s},
                         {"load",
                          {{"Z_inv", l.Z_inv},
                           {"I_const", l.I_const},
                           {"P_const", l.P_const}}}});
    }
    json edges = json::array();
    for (const LineParams& l : s.network.lines())
        edges.push_back({{"from", l.from + 1},
                         {"to", l.to + 1},
                         {"R_t", l.R_t},
                         {"L_t", l.L_t}});
    j["network"] = {{"nodes", nodes}, {"edges", edges}};

    json ctrl = {{"K1", vector_to_json(s.controller.K1)},
                 {"K2", vector_to_json(s.controller.K2)},
                 {"Pi", vector_to_json(s.controller.Pi)},
                 {"V_star", vector_to_json(s.controller.V_star)},
                 {"derivative_mode",
                  s.controller.derivative_mode == DerivativeMode::oracle
                      ? "oracle"
                      : "levant"},
                 {"law", s.law == ControlLawKind::proposed ? "full"
                                                           : "comparison"}};
    if (s.controller.levant.L.size() > 0)
        ctrl["levant"] = {{"lambda0", s.controller.levant.lambda0},
                          {"lambda1", s.controller.levant.lambda1},
                          {"L", vector_to_json(s.controller.levant.L)}};
    j["controller"] = ctrl;

    json sim = {{"t_end", s.sim.t_end},
                {"dt", s.sim.dt},
                {"method", s.sim.method == IntegrationMethod::rk4
                               ? "rk4"
                               : "rk45-adaptive"},
                {"rel_tol", s.sim.rel_tol},
                {"abs_tol", s.sim.abs_tol},
                {"record_stride", s.sim.record_stride}};
    if (s.x0_is_equilibrium) {
        sim["x0"] = "equilibrium";
    } else {
        sim["x0"] = {{"I_s", vector_to_json(s.x0_explicit.I_s)},
                     {"I_t", vector_to_json(s.x0_explicit.I_t)},
                     {"V", vector_to_json(s.x0_explicit.V)}};
    }
    j["simulation"] = sim;

    json evs = json::array();
    for (const Event& e : s.events) {
        json ej = {{"time", e.time}};
        if (e.dZ_inv.size() > 0) ej["dZ_inv"] = vector_to_json(e.dZ_inv);
        if (e.dI_const.size() > 0) ej["dI_const"] = vector_to_json(e.dI_const);
        if (e.dP_const.size() > 0) ej["dP_const"] = vector_to_json(e.dP_const);
        evs.push_back(ej);
    }
    j["events"] = evs;

    j["outputs"] = {{"dir", s.outputs.dir},
                    {"svg", s.outputs.svg},
                    {"vector_field",
                     {{"is_range",
                       {s.outputs.window.is_min, s.outputs.window.is_max}},
                      {"v_range",
                       {s.outputs.window.v_min, s.outputs.window.v_max}},
                      {"resolution", s.outputs.window.resolution}}}};
    return j;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const json::exception& e) {
        throw SchemaViolation(path + ": " + e.what());
    }
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scenario file " + path);
    out << scenario_to_json(s).dump(2) << "\n";
}

} // namespace zipgrid
