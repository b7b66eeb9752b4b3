#include "zipgrid/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace zipgrid {

namespace {

// Internal control-flow signals: a state evaluation left the admissible
// voltage domain, or stopped being finite. Converted into trajectory
// results.
struct DomainExitSignal {
    double t;
};
struct NonFiniteSignal {
    double t;
};

struct Derivative {
    VectorXd dI_s;
    VectorXd dI_t;
    VectorXd dV;
};

VectorXd load_currents_or_exit(const Network& net, const VectorXd& V,
                               double t) {
    if (!V.allFinite()) throw NonFiniteSignal{t};
    if (!(V.minCoeff() > kMinVoltage)) throw DomainExitSignal{t};
    return net.Z_inv().cwiseProduct(V) + net.I_const() +
           net.P_const().cwiseQuotient(V);
}

// Right-hand side of the (open- or closed-loop) network ODE. `u_frozen`
// overrides the control law for the duration of a step (levant mode).
class RhsEvaluator {
public:
    RhsEvaluator(const Network* net, const InputSpec* input)
        : net_(net), input_(input) {}

    void freeze_input(const VectorXd& u) { u_frozen_ = u; frozen_ = true; }
    void unfreeze() { frozen_ = false; }

    VectorXd input_for(const NetworkState& s, const VectorXd& v_dot) const {
        if (frozen_) return u_frozen_;
        if (const auto* c = std::get_if<ConstantInput>(input_)) return c->u;
        const auto& ctrl = std::get<ControlledInput>(*input_);
        if (ctrl.law == ControlLawKind::comparison)
            return ctrl.controller.comparison_law(s.I_s, s.V);
        VectorXd u = ctrl.controller.u_pbc(s.I_s, s.V, v_dot) +
                     ctrl.controller.u_stab(s.V, v_dot);
        if (ctrl.mu.size() > 0)
            u += ctrl.controller.filter().L_s.cwiseProduct(ctrl.mu);
        return u;
    }

    Derivative operator()(double t, const NetworkState& s) const {
        const VectorXd I_l = load_currents_or_exit(*net_, s.V, t);
        Derivative d;
        d.dV = (s.I_s + net_->incidence() * s.I_t - I_l)
                   .cwiseQuotient(net_->C_s());
        const VectorXd u = input_for(s, d.dV);
        d.dI_s = (-net_->R_s().cwiseProduct(s.I_s) - s.V + u)
                     .cwiseQuotient(net_->L_s());
        d.dI_t = (-net_->R_t().cwiseProduct(s.I_t) -
                  net_->incidence().transpose() * s.V)
                     .cwiseQuotient(net_->L_t());
        return d;
    }

private:
    const Network* net_;
    const InputSpec* input_;
    VectorXd u_frozen_;
    bool frozen_ = false;
};

NetworkState axpy(const NetworkState& s, double h, const Derivative& d) {
    return NetworkState{s.I_s + h * d.dI_s, s.I_t + h * d.dI_t,
                        s.V + h * d.dV};
}

NetworkState rk4_step(const RhsEvaluator& rhs, double t,
                      const NetworkState& s, double h) {
    const Derivative k1 = rhs(t, s);
    const Derivative k2 = rhs(t + 0.5 * h, axpy(s, 0.5 * h, k1));
    const Derivative k3 = rhs(t + 0.5 * h, axpy(s, 0.5 * h, k2));
    const Derivative k4 = rhs(t + h, axpy(s, h, k3));
    NetworkState out;
    out.I_s = s.I_s + (h / 6.0) * (k1.dI_s + 2.0 * (k2.dI_s + k3.dI_s) + k4.dI_s);
    out.I_t = s.I_t + (h / 6.0) * (k1.dI_t + 2.0 * (k2.dI_t + k3.dI_t) + k4.dI_t);
    out.V = s.V + (h / 6.0) * (k1.dV + 2.0 * (k2.dV + k3.dV) + k4.dV);
    return out;
}

// Dormand-Prince 5(4) embedded pair.
constexpr double kDpC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kDpA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kDpB5[7] = {35.0 / 384,      0.0,  500.0 / 1113, 125.0 / 192,
                             -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kDpB4[7] = {5179.0 / 57600,  0.0,     7571.0 / 16695,
                             393.0 / 640,     -92097.0 / 339200,
                             187.0 / 2100,    1.0 / 40};

struct Rk45Result {
    NetworkState y5;
    double error; // scaled error norm
};

Rk45Result rk45_step(const RhsEvaluator& rhs, double t, const NetworkState& s,
                     double h, double rel_tol, double abs_tol) {
    const int n = static_cast<int>(s.I_s.size());
    const int m = static_cast<int>(s.I_t.size());
    const VectorXd x0 = s.pack();
    std::vector<VectorXd> k(7);
    for (int i = 0; i < 7; ++i) {
        VectorXd xi = x0;
        for (int j = 0; j < i; ++j)
            if (kDpA[i][j] != 0.0) xi += h * kDpA[i][j] * k[j];
        const Derivative d =
            rhs(t + kDpC[i] * h, NetworkState::unpack(xi, n, m));
        VectorXd ki(x0.size());
        ki << d.dI_s, d.dI_t, d.dV;
        k[i] = ki;
    }
    VectorXd x5 = x0, x4 = x0;
    for (int i = 0; i < 7; ++i) {
        if (kDpB5[i] != 0.0) x5 += h * kDpB5[i] * k[i];
        if (kDpB4[i] != 0.0) x4 += h * kDpB4[i] * k[i];
    }
    double err = 0.0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        const double scale =
            abs_tol + rel_tol * std::max(std::abs(x0[i]), std::abs(x5[i]));
        const double e = (x5[i] - x4[i]) / scale;
        err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(x0.size()));
    return {NetworkState::unpack(x5, n, m), err};
}

class Recorder {
public:
    Recorder(Trajectory* traj, const RhsEvaluator* rhs) : traj_(traj), rhs_(rhs) {}

    // Records state plus the input/derivative pair in effect at `t`.
    void operator()(double t, const NetworkState& s, const VectorXd* u_step,
                    const VectorXd* v_dot_step) const {
        traj_->times.push_back(t);
        traj_->states.push_back(s);
        if (u_step != nullptr && v_dot_step != nullptr) {
            traj_->inputs.push_back(*u_step);
            traj_->v_dot_used.push_back(*v_dot_step);
        } else {
            const Derivative d = (*rhs_)(t, s);
            traj_->inputs.push_back(rhs_->input_for(s, d.dV));
            traj_->v_dot_used.push_back(d.dV);
        }
    }

private:
    Trajectory* traj_;
    const RhsEvaluator* rhs_;
};

} // namespace

void SimConfig::validate() const {
    if (!(t_end > 0.0)) throw InvariantViolation("t_end must be > 0");
    if (!(dt > 0.0)) throw InvariantViolation("dt must be > 0");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw InvariantViolation("tolerances must be > 0");
    if (record_stride < 1)
        throw InvariantViolation("record_stride must be >= 1");
}

Trajectory simulate(const Network& net, const InputSpec& input,
                    const NetworkState& x0, const SimConfig& sim,
                    std::vector<Event> events) {
    sim.validate();
    if (!x0.in_domain())
        throw NonPositiveVoltage("initial state must have positive voltages");
    if (x0.I_s.size() != net.n() || x0.I_t.size() != net.m() ||
        x0.V.size() != net.n())
        throw InvariantViolation("initial state dimensions do not match network");

    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.time < b.time; });
    const double time_tol = sim.dt * 1e-9;
    for (const Event& e : events)
        if (!(e.time > 0.0))
            throw InvariantViolation("event time must be positive");
    // Events beyond the horizon are never reached; drop them.
    while (!events.empty() && events.back().time >= sim.t_end - time_tol)
        events.pop_back();

    Network current = net;
    const bool levant_driven =
        std::holds_alternative<ControlledInput>(input) &&
        std::get<ControlledInput>(input).law == ControlLawKind::proposed &&
        std::get<ControlledInput>(input).controller.config().derivative_mode ==
            DerivativeMode::levant;
    const Controller* controller =
        std::holds_alternative<ControlledInput>(input)
            ? &std::get<ControlledInput>(input).controller
            : nullptr;
    LevantState levant =
        controller ? LevantState::zero(controller->n()) : LevantState{};

    Trajectory traj;
    traj.n = net.n();
    traj.m = net.m();

    RhsEvaluator rhs(&current, &input);
    Recorder record(&traj, &rhs);

    auto apply_event = [&](const Event& e) {
        std::vector<ZipLoad> loads = current.loads();
        for (int i = 0; i < current.n(); ++i) {
            if (e.dZ_inv.size() > 0) loads[i].Z_inv += e.dZ_inv[i];
            if (e.dI_const.size() > 0) loads[i].I_const += e.dI_const[i];
            if (e.dP_const.size() > 0) loads[i].P_const += e.dP_const[i];
        }
        current = current.with_loads(loads); // validates nonnegativity
        traj.events.push_back(e);
    };

    NetworkState state = x0;
    std::size_t next_event = 0;
    long step = 0;
    double t_now = 0.0;

    const bool adaptive = sim.method == IntegrationMethod::rk45_adaptive;
    double h_adaptive = sim.dt;

    try {
        while (true) {
            // Events landing exactly on this instant switch the parameters
            // before anything at time t_now is recorded or integrated, so
            // recorded inputs at an event time reflect post-event loads.
            while (next_event < events.size() &&
                   std::abs(events[next_event].time - t_now) <= time_tol) {
                apply_event(events[next_event]);
                ++next_event;
            }

            const bool at_end = t_now >= sim.t_end - time_tol;

            // Input for the step ahead. In levant mode the differentiator
            // advances once per step and the resulting input is held across
            // the step's stages.
            VectorXd u_step, v_dot_step;
            bool have_step_input = false;
            if (levant_driven) {
                const auto& ctrl = std::get<ControlledInput>(input);
                if (at_end) {
                    // No further step: report the law with the current
                    // derivative estimate, without advancing the observer.
                    v_dot_step = levant.z1;
                    u_step = controller->u_pbc(state.I_s, state.V, v_dot_step) +
                             controller->u_stab(state.V, v_dot_step);
                    if (ctrl.mu.size() > 0)
                        u_step +=
                            controller->filter().L_s.cwiseProduct(ctrl.mu);
                } else {
                    const VectorXd I_l =
                        load_currents_or_exit(current, state.V, t_now);
                    const VectorXd v_dot_oracle =
                        (state.I_s + current.incidence() * state.I_t - I_l)
                            .cwiseQuotient(current.C_s());
                    // With the adaptive method the observer advances by the
                    // proposed step; a later rejection shrinks the plant
                    // step but the sampled controller has already acted.
                    const double h_lev = adaptive ? h_adaptive : sim.dt;
                    ControlOutput out = controller->control_law(
                        state.I_s, state.V, v_dot_oracle, levant, h_lev,
                        ctrl.mu.size() > 0 ? &ctrl.mu : nullptr);
                    levant = out.levant;
                    u_step = out.u;
                    v_dot_step = out.v_dot_used;
                }
                have_step_input = true;
            }

            if (at_end || step % sim.record_stride == 0)
                record(t_now, state, have_step_input ? &u_step : nullptr,
                       have_step_input ? &v_dot_step : nullptr);

            if (at_end) {
                traj.reason = TerminationReason::completed;
                traj.end_time = t_now;
                break;
            }

            if (have_step_input) rhs.freeze_input(u_step);

            double t_target =
                adaptive ? std::min(sim.t_end, t_now + h_adaptive)
                         : std::min(sim.t_end,
                                    static_cast<double>(step + 1) * sim.dt);
            if (adaptive && next_event < events.size() &&
                events[next_event].time > t_now + time_tol)
                t_target = std::min(t_target, events[next_event].time);

            if (adaptive) {
                double h = t_target - t_now;
                while (true) {
                    Rk45Result r;
                    try {
                        r = rk45_step(rhs, t_now, state, h, sim.rel_tol,
                                      sim.abs_tol);
                    } catch (const DomainExitSignal&) {
                        h *= 0.5;
                        if (h < 1e-12) throw DomainExitSignal{t_now};
                        continue;
                    }
                    if (r.error <= 1.0 || h <= 1e-12) {
                        state = r.y5;
                        t_now += h;
                        const double grow = r.error > 0.0
                                                ? 0.9 * std::pow(r.error, -0.2)
                                                : 5.0;
                        h_adaptive = h * std::clamp(grow, 0.2, 5.0);
                        break;
                    }
                    h *= std::max(0.2, 0.9 * std::pow(r.error, -0.2));
                }
            } else {
                // Fixed step on the grid t_k = k*dt, split exactly at
                // interior event times so no stage straddles a load change.
                double seg_start = t_now;
                while (next_event < events.size() &&
                       events[next_event].time > t_now + time_tol &&
                       events[next_event].time < t_target - time_tol) {
                    const double te = events[next_event].time;
                    state = rk4_step(rhs, seg_start, state, te - seg_start);
                    apply_event(events[next_event]);
                    ++next_event;
                    seg_start = te;
                }
                state = rk4_step(rhs, seg_start, state, t_target - seg_start);
                t_now = t_target;
            }

            if (have_step_input) rhs.unfreeze();

            if (!state.pack().allFinite()) {
                traj.reason = TerminationReason::non_finite_state;
                traj.end_time = t_now;
                return traj;
            }
            if (!(state.V.minCoeff() > kMinVoltage))
                throw DomainExitSignal{t_now};

            ++step;
        }
    } catch (const DomainExitSignal& sig) {
        traj.reason = TerminationReason::domain_exit;
        traj.end_time = sig.t;
    } catch (const NonFiniteSignal& sig) {
        traj.reason = TerminationReason::non_finite_state;
        traj.end_time = sig.t;
    }
    return traj;
}

VectorFieldGrid vector_field_grid(const Network& net, const Controller& ctrl,
                                  const VectorFieldWindow& window) {
    if (net.n() != 1 || net.m() != 0)
        throw NetworkNotScalar("vector_field_grid needs a single-node network");
    if (window.resolution < 2)
        throw InvariantViolation("vector-field resolution must be >= 2");
    if (!(window.v_min > kMinVoltage))
        throw NonPositiveVoltage("vector-field voltage window must be positive");

    VectorFieldGrid grid;
    grid.is_axis = VectorXd::LinSpaced(window.resolution, window.is_min,
                                       window.is_max);
    grid.v_axis =
        VectorXd::LinSpaced(window.resolution, window.v_min, window.v_max);
    grid.dIs.resize(window.resolution, window.resolution);
    grid.dV.resize(window.resolution, window.resolution);

    const ZipLoad& load = net.loads()[0];
    const DguParams& dgu = net.dgus()[0];
    for (int i = 0; i < window.resolution; ++i) {
        const double v = grid.v_axis[i];
        const double i_l = zip_current(load, v);
        for (int j = 0; j < window.resolution; ++j) {
            const double i_s = grid.is_axis[j];
            const double v_dot = (i_s - i_l) / dgu.C_s;
            VectorXd I_s1(1), V1(1), vd1(1);
            I_s1 << i_s;
            V1 << v;
            vd1 << v_dot;
            const VectorXd u = ctrl.u_pbc(I_s1, V1, vd1) + ctrl.u_stab(V1, vd1);
            grid.dV(i, j) = v_dot;
            grid.dIs(i, j) = (-dgu.R_s * i_s - v + u[0]) / dgu.L_s;
        }
    }
    return grid;
}

} // namespace zipgrid
