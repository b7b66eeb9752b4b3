#ifndef ZIPGRID_SIMULATE_HPP
#define ZIPGRID_SIMULATE_HPP

#include <variant>
#include <vector>

#include "zipgrid/control.hpp"
#include "zipgrid/network.hpp"

namespace zipgrid {

enum class IntegrationMethod { rk4, rk45_adaptive };

struct SimConfig {
    double t_end = 1.0;
    double dt = 1e-5;      // fixed step; initial step for the adaptive method
    IntegrationMethod method = IntegrationMethod::rk4;
    double rel_tol = 1e-8; // adaptive only
    double abs_tol = 1e-8; // adaptive only
    int record_stride = 1; // record every record_stride-th step

    void validate() const;
};

// Timed load change: at `time` the per-node load components are shifted by
// the deltas. Post-mutation loads must stay nonnegative.
struct Event {
    double time = 0.0;
    VectorXd dZ_inv;
    VectorXd dI_const;
    VectorXd dP_const;
};

enum class TerminationReason { completed, domain_exit, non_finite_state };

struct Trajectory {
    std::vector<double> times;
    std::vector<NetworkState> states;
    std::vector<VectorXd> inputs;
    std::vector<VectorXd> v_dot_used;
    std::vector<Event> events; // events applied during the run, in order
    TerminationReason reason = TerminationReason::completed;
    double end_time = 0.0; // exit time when the run did not complete
    int n = 0;
    int m = 0;

    bool completed() const { return reason == TerminationReason::completed; }
    std::size_t size() const { return times.size(); }
};

// Constant open-loop input.
struct ConstantInput {
    VectorXd u;
};

// Closed loop under the decentralized controller. The simulator hands the
// controller the measured derivative C_s^{-1}(I_s + B I_t - I_l(V)); the
// controller never sees the loads themselves.
enum class ControlLawKind { proposed, comparison };
struct ControlledInput {
    Controller controller;
    ControlLawKind law = ControlLawKind::proposed;
    VectorXd mu; // empty means zero
};

using InputSpec = std::variant<ConstantInput, ControlledInput>;

Trajectory simulate(const Network& net, const InputSpec& input,
                    const NetworkState& x0, const SimConfig& sim,
                    std::vector<Event> events = {});

// Closed-loop vector field (dI_s, dV) of a single-node network on a
// rectangular (I_s, V) window, controller in oracle mode.
struct VectorFieldWindow {
    double is_min = 0.0;
    double is_max = 80.0;
    double v_min = 300.0;
    double v_max = 460.0;
    int resolution = 41;
};

struct VectorFieldGrid {
    VectorXd is_axis;
    VectorXd v_axis;
    MatrixXd dIs; // dIs(i, j) at (v_axis[i], is_axis[j])
    MatrixXd dV;
};

VectorFieldGrid vector_field_grid(const Network& net, const Controller& ctrl,
                                  const VectorFieldWindow& window);

} // namespace zipgrid

#endif
