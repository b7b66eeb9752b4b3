#ifndef ZIPGRID_SCENARIO_HPP
#define ZIPGRID_SCENARIO_HPP

#include <string>

#include <json.hpp>

#include "zipgrid/control.hpp"
#include "zipgrid/network.hpp"
#include "zipgrid/simulate.hpp"

namespace zipgrid {

struct OutputConfig {
    std::string dir = "out";
    bool svg = false;
    VectorFieldWindow window;
};

// Fully validated contents of a scenario file.
struct Scenario {
    explicit Scenario(Network net) : network(std::move(net)) {}

    Network network;
    ControllerConfig controller;
    ControlLawKind law = ControlLawKind::proposed;
    SimConfig sim;
    std::vector<Event> events;
    OutputConfig outputs;

    // Initial condition: the closed-loop equilibrium (I_s(V*), I_t(V*), V*)
    // for the initial loads, or an explicit state.
    bool x0_is_equilibrium = true;
    NetworkState x0_explicit;

    NetworkState initial_state() const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

} // namespace zipgrid

#endif
