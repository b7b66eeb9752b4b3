#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "test_support.hpp"
#include "zipgrid/simulate.hpp"
#include "zipgrid/steady_state.hpp"

using namespace zipgrid;
namespace ts = zipgrid::testing;

namespace {

Controller controller_for(const Scenario& sc) {
    VectorXd R_s(sc.network.n()), L_s(sc.network.n());
    for (int i = 0; i < sc.network.n(); ++i) {
        R_s[i] = sc.network.dgus()[i].R_s;
        L_s[i] = sc.network.dgus()[i].L_s;
    }
    return Controller(FilterParams{R_s, L_s}, sc.controller);
}

} // namespace

TEST_CASE("the closed-loop equilibrium is a fixed point of the integrator") {
    Scenario sc = ts::load_bundled("scenario1.json");
    sc.events.clear();
    const NetworkState x0 = sc.initial_state();
    const Trajectory traj =
        simulate(sc.network, ControlledInput{controller_for(sc)}, x0, sc.sim);
    REQUIRE(traj.completed());
    const NetworkState& last = traj.states.back();
    const double scale = x0.pack().lpNorm<Eigen::Infinity>();
    CHECK((last.pack() - x0.pack()).lpNorm<Eigen::Infinity>() <
          1e-6 * scale);
}

TEST_CASE("fixed-step integrator is fourth-order on a linear circuit") {
    // Z-load only: the network is linear and the flow has a closed form
    // through the matrix exponential.
    const double R = 1.0, L = 1e-2, C = 1e-2, g = 0.5, u_val = 10.0;
    const Network net = ts::single_node(R, L, C, ZipLoad{g, 0.0, 0.0});
    Eigen::Matrix2d A;
    A << -R / L, -1.0 / L, 1.0 / C, -g / C;
    Eigen::Vector2d b(u_val / L, 0.0);
    const Eigen::Vector2d x_inf = -A.lu().solve(b);

    NetworkState x0;
    x0.I_s = VectorXd::Constant(1, 2.0);
    x0.I_t = VectorXd(0);
    x0.V = VectorXd::Constant(1, 15.0);
    const Eigen::Vector2d dev0(x0.I_s[0] - x_inf[0], x0.V[0] - x_inf[1]);

    const double T = 0.05;
    auto global_error = [&](double dt) {
        SimConfig sim;
        sim.t_end = T;
        sim.dt = dt;
        sim.record_stride = 1 << 20; // only endpoints
        const Trajectory traj =
            simulate(net, ConstantInput{VectorXd::Constant(1, u_val)}, x0, sim);
        const Eigen::Vector2d exact =
            x_inf + (A * T).exp() * dev0;
        const NetworkState& last = traj.states.back();
        return std::hypot(last.I_s[0] - exact[0], last.V[0] - exact[1]);
    };

    const double e1 = global_error(1e-4);
    const double e2 = global_error(5e-5);
    CHECK(e1 > 1e-13); // above roundoff, so the ratio is meaningful
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 22.0);
}

TEST_CASE("step refinement on the network leaves the endpoint unchanged") {
    Scenario sc = ts::load_bundled("scenario1.json");
    sc.events.clear();
    sc.sim.t_end = 0.1;
    sc.sim.record_stride = 1 << 20;
    NetworkState x0 = sc.initial_state();
    x0.V.array() += 2.0;

    const ControlledInput input{controller_for(sc)};
    const Trajectory a = simulate(sc.network, input, x0, sc.sim);
    SimConfig halved = sc.sim;
    halved.dt = 0.5 * sc.sim.dt;
    const Trajectory b = simulate(sc.network, input, x0, halved);
    REQUIRE(a.completed());
    REQUIRE(b.completed());
    CHECK((a.states.back().V - b.states.back().V).lpNorm<Eigen::Infinity>() <
          1e-8);
}

TEST_CASE("events split the step exactly") {
    const Network net = ts::slow_two_node();
    const VectorXd u = VectorXd::Constant(2, 1.5);
    NetworkState x0;
    x0.I_s = VectorXd::Constant(2, 0.4);
    x0.I_t = VectorXd::Constant(1, 0.0);
    x0.V = VectorXd::Constant(2, 1.0);

    Event ev;
    ev.time = 0.2505; // strictly inside a step of the 1e-3 grid
    ev.dP_const = VectorXd::Constant(2, 0.25);

    SimConfig sim;
    sim.t_end = 0.5;
    sim.dt = 1e-3;
    sim.record_stride = 1 << 20;
    const Trajectory whole = simulate(net, ConstantInput{u}, x0, sim, {ev});
    REQUIRE(whole.completed());
    REQUIRE(whole.events.size() == 1);

    // Same run glued from three pieces with the event applied in between.
    SimConfig part1 = sim;
    part1.t_end = 0.2505;
    const Trajectory p1 = simulate(net, ConstantInput{u}, x0, part1);
    std::vector<ZipLoad> loads = net.loads();
    for (int i = 0; i < 2; ++i) loads[i].P_const += 0.25;
    const Network net2 = net.with_loads(loads);
    SimConfig part2 = sim;
    part2.t_end = 0.0005; // realign to the grid
    const Trajectory p2 =
        simulate(net2, ConstantInput{u}, p1.states.back(), part2);
    SimConfig part3 = sim;
    part3.t_end = 0.249;
    const Trajectory p3 =
        simulate(net2, ConstantInput{u}, p2.states.back(), part3);

    CHECK((whole.states.back().pack() - p3.states.back().pack())
              .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("domain exit is a result, not a crash") {
    const Scenario sc = ts::load_bundled("witness.json");
    REQUIRE(sc.law == ControlLawKind::comparison);
    const Trajectory unstable =
        simulate(sc.network, ControlledInput{controller_for(sc), sc.law},
                 sc.initial_state(), sc.sim);
    CHECK(unstable.reason == TerminationReason::domain_exit);
    CHECK(unstable.end_time > 0.0);
    CHECK(unstable.end_time < sc.sim.t_end);

    const Trajectory stable = simulate(
        sc.network, ControlledInput{controller_for(sc), ControlLawKind::proposed},
        sc.initial_state(), sc.sim);
    CHECK(stable.completed());
    CHECK(std::abs(stable.states.back().V[0] - 380.0) < 0.1);
}

TEST_CASE("identical configuration gives a bit-identical trajectory") {
    Scenario sc = ts::load_bundled("scenario1.json");
    sc.sim.t_end = 0.05;
    sc.sim.record_stride = 10;
    const NetworkState x0 = sc.initial_state();
    const ControlledInput input{controller_for(sc)};
    const Trajectory a = simulate(sc.network, input, x0, sc.sim, sc.events);
    const Trajectory b = simulate(sc.network, input, x0, sc.sim, sc.events);
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(a.times[j] == b.times[j]);
        CHECK((a.states[j].pack().array() == b.states[j].pack().array()).all());
        CHECK((a.inputs[j].array() == b.inputs[j].array()).all());
    }
}

TEST_CASE("adaptive integrator agrees with the fixed-step one") {
    Scenario sc = ts::load_bundled("scenario1.json");
    sc.events.clear();
    sc.sim.t_end = 0.05;
    sc.sim.record_stride = 1 << 20;
    NetworkState x0 = sc.initial_state();
    x0.V.array() += 1.0;
    const ControlledInput input{controller_for(sc)};
    const Trajectory fixed = simulate(sc.network, input, x0, sc.sim);

    SimConfig adaptive = sc.sim;
    adaptive.method = IntegrationMethod::rk45_adaptive;
    adaptive.rel_tol = 1e-9;
    adaptive.abs_tol = 1e-9;
    adaptive.dt = 1e-6;
    const Trajectory adapt = simulate(sc.network, input, x0, adaptive);
    REQUIRE(adapt.completed());
    CHECK(std::abs(adapt.end_time - sc.sim.t_end) < 1e-9);
    CHECK((fixed.states.back().V - adapt.states.back().V)
              .lpNorm<Eigen::Infinity>() < 1e-5);
    // The step controller should have stretched the step well beyond the
    // initial guess on this smooth interval.
    CHECK(adapt.size() < 20000);
}

TEST_CASE("adaptive integrator reports domain exit on the unstable run") {
    Scenario sc = ts::load_bundled("witness.json");
    sc.sim.method = IntegrationMethod::rk45_adaptive;
    sc.sim.rel_tol = 1e-7;
    sc.sim.abs_tol = 1e-7;
    const Trajectory traj =
        simulate(sc.network, ControlledInput{controller_for(sc), sc.law},
                 sc.initial_state(), sc.sim);
    CHECK(traj.reason == TerminationReason::domain_exit);
}

TEST_CASE("adaptive integrator lands on events exactly") {
    const Network net = ts::slow_two_node();
    const Equilibrium eq =
        equilibrium_from_vstar(net, VectorXd::Constant(2, 1.2));
    NetworkState x0 = eq.state();
    x0.V.array() += 0.05;
    Event ev;
    ev.time = 0.73;
    ev.dP_const = VectorXd::Constant(2, 0.1);

    SimConfig fixed;
    fixed.t_end = 2.0;
    fixed.dt = 1e-4;
    fixed.record_stride = 1 << 20;
    const Trajectory a = simulate(net, ConstantInput{eq.u_bar}, x0, fixed, {ev});

    SimConfig adaptive = fixed;
    adaptive.method = IntegrationMethod::rk45_adaptive;
    adaptive.dt = 1e-3;
    adaptive.rel_tol = 1e-10;
    adaptive.abs_tol = 1e-10;
    const Trajectory b =
        simulate(net, ConstantInput{eq.u_bar}, x0, adaptive, {ev});
    REQUIRE(a.completed());
    REQUIRE(b.completed());
    REQUIRE(b.events.size() == 1);
    CHECK((a.states.back().pack() - b.states.back().pack())
              .lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("non-finite states are reported as such") {
    const Network net = ts::illustrative_node(5000.0);
    NetworkState x0;
    x0.I_s = VectorXd::Constant(1, 38.0);
    x0.I_t = VectorXd(0);
    x0.V = VectorXd::Constant(1, 380.0);
    SimConfig sim;
    sim.t_end = 0.01;
    sim.dt = 1e-5;
    // An input at the top of the double range overflows the first stage.
    const Trajectory traj =
        simulate(net, ConstantInput{VectorXd::Constant(1, 1e308)}, x0, sim);
    CHECK(traj.reason == TerminationReason::non_finite_state);
}

TEST_CASE("events may not drive loads negative") {
    Scenario sc = ts::load_bundled("scenario1.json");
    sc.sim.t_end = 1.0;
    Event ev;
    ev.time = 0.5;
    ev.dP_const = -2.0 * sc.network.P_const();
    CHECK_THROWS_AS(simulate(sc.network, ControlledInput{controller_for(sc)},
                             sc.initial_state(), sc.sim, {ev}),
                    NonPositiveParameter);
}

TEST_CASE("recording stride and endpoints") {
    Scenario sc = ts::load_bundled("scenario1.json");
    sc.events.clear();
    sc.sim.t_end = 0.01;
    sc.sim.record_stride = 100;
    const Trajectory traj = simulate(
        sc.network, ControlledInput{controller_for(sc)}, sc.initial_state(),
        sc.sim);
    REQUIRE(traj.size() == 11);
    for (std::size_t j = 0; j < traj.size(); ++j)
        CHECK(traj.times[j] == doctest::Approx(j * 1e-3).epsilon(1e-12));
    CHECK(traj.inputs.size() == traj.size());
    CHECK(traj.v_dot_used.size() == traj.size());
}

TEST_CASE("initial state must lie in the admissible domain") {
    const Scenario sc = ts::load_bundled("scenario1.json");
    NetworkState x0 = sc.initial_state();
    x0.V[2] = -1.0;
    CHECK_THROWS_AS(simulate(sc.network, ControlledInput{controller_for(sc)},
                             x0, sc.sim),
                    NonPositiveVoltage);
}

TEST_CASE("closed-loop vector field of the worked example") {
    const Scenario sc = ts::load_bundled("illustrative.json");
    const Controller ctrl = controller_for(sc);

    SUBCASE("field vanishes at the equilibrium") {
        const Equilibrium eq =
            equilibrium_from_vstar(sc.network, sc.controller.V_star);
        VectorFieldWindow w;
        w.is_min = w.is_max = eq.I_s_bar[0];
        w.v_min = w.v_max = 380.0;
        w.resolution = 2;
        const VectorFieldGrid grid = vector_field_grid(sc.network, ctrl, w);
        CHECK(std::abs(grid.dIs(0, 0)) < 1e-9);
        CHECK(std::abs(grid.dV(0, 0)) < 1e-9);
    }

    SUBCASE("grid covers the window") {
        const VectorFieldGrid grid =
            vector_field_grid(sc.network, ctrl, sc.outputs.window);
        CHECK(grid.is_axis.size() == sc.outputs.window.resolution);
        CHECK(grid.is_axis[0] == 0.0);
        CHECK(grid.is_axis[grid.is_axis.size() - 1] == 80.0);
        CHECK(grid.v_axis[0] == 300.0);
        CHECK(grid.v_axis[grid.v_axis.size() - 1] == 460.0);
    }

    SUBCASE("multi-node networks are rejected") {
        const Scenario s1 = ts::load_bundled("scenario1.json");
        CHECK_THROWS_AS(
            vector_field_grid(s1.network, controller_for(s1), VectorFieldWindow{}),
            NetworkNotScalar);
    }

    SUBCASE("trajectory from (40 A, 450 V) reaches the equilibrium") {
        const Trajectory traj =
            simulate(sc.network, ControlledInput{ctrl}, sc.initial_state(),
                     sc.sim);
        REQUIRE(traj.completed());
        CHECK(std::abs(traj.states.back().V[0] - 380.0) < 0.1);
        CHECK(std::abs(traj.states.back().I_s[0] - 38.36) < 0.01);
    }

    SUBCASE("heavier P component from (40 A, 310 V)") {
        std::vector<ZipLoad> loads = sc.network.loads();
        loads[0].P_const = 6500.0;
        const Network net2 = sc.network.with_loads(loads);
        NetworkState x0;
        x0.I_s = VectorXd::Constant(1, 40.0);
        x0.I_t = VectorXd(0);
        x0.V = VectorXd::Constant(1, 310.0);
        const Trajectory traj =
            simulate(net2, ControlledInput{ctrl}, x0, sc.sim);
        REQUIRE(traj.completed());
        CHECK(std::abs(traj.states.back().V[0] - 380.0) < 0.1);
        CHECK(std::abs(traj.states.back().I_s[0] - 42.31) < 0.01);
    }
}
