#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "zipgrid/brayton_moser.hpp"
#include "zipgrid/csvio.hpp"
#include "zipgrid/passivity.hpp"
#include "zipgrid/scenario.hpp"
#include "zipgrid/simulate.hpp"
#include "zipgrid/steady_state.hpp"
#include "zipgrid/svgplot.hpp"

namespace {

using namespace zipgrid;

std::string resolve_out_dir(const std::string& flag, const Scenario& s) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("ZIPGRID_OUT"); env && *env) return env;
    return s.outputs.dir;
}

Controller make_controller(const Scenario& s) {
    VectorXd R_s(s.network.n()), L_s(s.network.n());
    for (int i = 0; i < s.network.n(); ++i) {
        R_s[i] = s.network.dgus()[i].R_s;
        L_s[i] = s.network.dgus()[i].L_s;
    }
    return Controller(FilterParams{R_s, L_s}, s.controller);
}

void apply_overrides(Scenario& s, const std::string& law,
                     const std::string& mode) {
    if (law == "full") s.law = ControlLawKind::proposed;
    if (law == "comparison") s.law = ControlLawKind::comparison;
    if (mode == "oracle") s.controller.derivative_mode = DerivativeMode::oracle;
    if (mode == "levant") {
        s.controller.derivative_mode = DerivativeMode::levant;
        s.controller.validate(); // levant gains must be present
    }
}

void write_trajectory_plots(const Trajectory& traj, const Scenario& s,
                            const std::filesystem::path& dir) {
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                             "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
    auto color = [&](int i) { return std::string(palette[i % 8]); };

    std::vector<PlotSeries> is_series, it_series, v_series;
    for (int i = 0; i < traj.n; ++i) {
        PlotSeries ps;
        ps.x = traj.times;
        ps.y.reserve(traj.size());
        for (const NetworkState& st : traj.states) ps.y.push_back(st.I_s[i]);
        ps.color = color(i);
        ps.label = "Is_" + std::to_string(i + 1);
        is_series.push_back(std::move(ps));
    }
    for (int k = 0; k < traj.m; ++k) {
        PlotSeries ps;
        ps.x = traj.times;
        for (const NetworkState& st : traj.states) ps.y.push_back(st.I_t[k]);
        ps.color = color(k);
        ps.label = "It_" + std::to_string(k + 1);
        it_series.push_back(std::move(ps));
    }
    for (int i = 0; i < traj.n; ++i) {
        PlotSeries ps;
        ps.x = traj.times;
        for (const NetworkState& st : traj.states) ps.y.push_back(st.V[i]);
        ps.color = color(i);
        ps.label = "V_" + std::to_string(i + 1);
        v_series.push_back(std::move(ps));
        PlotSeries ref;
        ref.x = {traj.times.front(), traj.times.back()};
        ref.y = {s.controller.V_star[i], s.controller.V_star[i]};
        ref.color = color(i);
        ref.dashed = true;
        v_series.push_back(std::move(ref));
    }
    write_line_plot_svg((dir / "currents.svg").string(), "Generated currents",
                        "t (s)", "I_s (A)", is_series);
    write_line_plot_svg((dir / "line_currents.svg").string(), "Line currents",
                        "t (s)", "I_t (A)", it_series);
    write_line_plot_svg((dir / "voltages.svg").string(),
                        "Voltages and references", "t (s)", "V (V)", v_series);
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_flag,
                 const std::string& law, const std::string& mode, bool svg) {
    Scenario s = load_scenario(scenario_path);
    apply_overrides(s, law, mode);

    const std::filesystem::path dir = resolve_out_dir(out_flag, s);
    std::filesystem::create_directories(dir);

    ControlledInput input{make_controller(s), s.law, VectorXd()};
    const Trajectory traj =
        simulate(s.network, input, s.initial_state(), s.sim, s.events);

    write_trajectory_csv(traj, (dir / "trajectory.csv").string());
    const auto series = storage_series(s.network, traj, s.controller);
    write_diagnostics_csv(series, (dir / "diagnostics.csv").string());
    if (svg || s.outputs.svg) write_trajectory_plots(traj, s, dir);

    if (traj.reason == TerminationReason::domain_exit) {
        std::cout << "domain-exit at t = " << traj.end_time
                  << " s (voltage left the positive domain)\n";
        return 2;
    }
    if (traj.reason == TerminationReason::non_finite_state) {
        std::cerr << "error: NonFiniteState: integration produced a non-finite "
                     "state at t = "
                  << traj.end_time << "\n";
        return 1;
    }
    const NetworkState& final_state = traj.states.back();
    std::cout << "completed t = " << traj.end_time << " s; |V - V*|_inf = "
              << (final_state.V - s.controller.V_star)
                     .lpNorm<Eigen::Infinity>()
              << " V; outputs in " << dir.string() << "\n";
    return 0;
}

int cmd_steady_state(const std::string& scenario_path) {
    const Scenario s = load_scenario(scenario_path);
    const Equilibrium eq = equilibrium_from_vstar(s.network, s.controller.V_star);
    std::cout << "node,V_bar,Is_bar,u_bar\n";
    for (int i = 0; i < s.network.n(); ++i)
        std::cout << (i + 1) << ',' << format_double(eq.V_bar[i]) << ','
                  << format_double(eq.I_s_bar[i]) << ','
                  << format_double(eq.u_bar[i]) << "\n";
    std::cout << "line,It_bar\n";
    for (int k = 0; k < s.network.m(); ++k)
        std::cout << (k + 1) << ',' << format_double(eq.I_t_bar[k]) << "\n";
    std::cout << "residual," << format_double(eq.residual) << "\n";
    return 0;
}

int cmd_certify(const std::string& scenario_path, int samples, unsigned seed) {
    const Scenario s = load_scenario(scenario_path);
    const Network& net = s.network;

    const BmStability stab = bm_stability_condition(net);
    std::printf("bm-stability-norm,%s,satisfied,%s,margin,%s\n",
                format_double(stab.norm_value).c_str(),
                stab.satisfied ? "yes" : "no",
                format_double(stab.delta_margin).c_str());

    // Equivalent conductance at the reference voltage per event epoch.
    std::printf("equivalent-conductance G_B(V*) = Z_inv - P* / V*^2 (S)\n");
    Network current = net;
    double epoch_start = 0.0;
    std::vector<Event> events = s.events;
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.time < b.time; });
    for (std::size_t e = 0; e <= events.size(); ++e) {
        const ConductanceMatrices g = conductance_matrices(
            current, s.controller.V_star, s.controller.Pi, s.controller.V_star);
        std::printf("epoch t>=%g:", epoch_start);
        for (int i = 0; i < current.n(); ++i) std::printf(" %.3f", g.G_B[i]);
        std::printf("\n");
        if (e == events.size()) break;
        std::vector<ZipLoad> loads = current.loads();
        for (int i = 0; i < current.n(); ++i) {
            if (events[e].dZ_inv.size() > 0) loads[i].Z_inv += events[e].dZ_inv[i];
            if (events[e].dI_const.size() > 0)
                loads[i].I_const += events[e].dI_const[i];
            if (events[e].dP_const.size() > 0)
                loads[i].P_const += events[e].dP_const[i];
        }
        current = current.with_loads(loads);
        epoch_start = events[e].time;
    }

    // Certificate audit at random states: the transformed description must
    // have a negative semidefinite symmetric part and nonnegative storage.
    const MixedPotential mp(net, PotentialVariant::reduced);
    const BmPair pair = certificate_pair(net, s.controller.Pi);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> v_dist(1.0, 1e4);
    std::uniform_real_distribution<double> i_dist(-100.0, 100.0);
    double max_eig = -1e300;
    double min_pa = 1e300;
    for (int k = 0; k < samples; ++k) {
        NetworkState st;
        st.I_s.resize(net.n());
        st.I_t.resize(net.m());
        st.V.resize(net.n());
        for (int i = 0; i < net.n(); ++i) st.I_s[i] = i_dist(rng);
        for (int i = 0; i < net.m(); ++i) st.I_t[i] = i_dist(rng);
        for (int i = 0; i < net.n(); ++i) st.V[i] = v_dist(rng);
        const GeneralizedPair gp = generalized_pair(mp, pair, st);
        const MatrixXd sym = gp.Q_A + gp.Q_A.transpose();
        const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym);
        max_eig = std::max(max_eig, eig.eigenvalues().maxCoeff());
        min_pa = std::min(min_pa, gp.P_A);
    }
    std::printf("QA-symmetric-max-eigenvalue,%s,samples,%d\n",
                format_double(max_eig).c_str(), samples);
    std::printf("PA-min,%s\n", format_double(min_pa).c_str());
    const bool pass = max_eig <= 1e-9 && min_pa >= 0.0;
    std::printf("certificate,%s\n", pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

int cmd_vector_field(const std::string& scenario_path,
                     const std::string& out_flag) {
    const Scenario s = load_scenario(scenario_path);
    const std::filesystem::path dir = resolve_out_dir(out_flag, s);
    std::filesystem::create_directories(dir);

    const VectorFieldGrid grid =
        vector_field_grid(s.network, make_controller(s), s.outputs.window);
    write_vector_field_csv(grid, (dir / "field.csv").string());
    write_region_boundaries_csv(
        scalar_region_boundaries(s.network, s.controller.V_star[0]),
        (dir / "boundaries.csv").string());
    std::cout << "vector field written to " << dir.string() << "\n";
    return 0;
}

int cmd_audit(const std::string& traj_path, const std::string& scenario_path,
              const std::string& storage, const std::string& out_flag) {
    const Scenario s = load_scenario(scenario_path);
    Trajectory traj = read_trajectory_csv(traj_path);
    if (traj.n != s.network.n() || traj.m != s.network.m())
        throw InvariantViolation(
            "trajectory dimensions do not match the scenario network");
    for (const Event& e : s.events)
        if (e.time <= traj.times.back()) traj.events.push_back(e);

    StorageId which;
    if (storage == "sd") {
        which = StorageId::s_d;
    } else if (storage == "energy") {
        which = StorageId::energy;
    } else if (storage == "kras") {
        which = StorageId::krasovskii;
    } else if (storage == "bregman") {
        which = StorageId::bregman;
    } else {
        throw SchemaViolation("--storage must be sd|energy|kras|bregman");
    }

    const auto samples =
        dissipation_audit(s.network, traj, which, &s.controller);
    const std::filesystem::path dir = resolve_out_dir(out_flag, s);
    std::filesystem::create_directories(dir);
    write_audit_csv(samples, (dir / "audit.csv").string());

    double max_resid = 0.0;
    double max_pred = -1e300;
    for (const DissipationSample& d : samples) {
        max_resid = std::max(max_resid, std::abs(d.residual));
        max_pred = std::max(max_pred, d.dS_dt_predicted);
    }
    std::cout << "audited " << samples.size() << " samples; max |residual| = "
              << format_double(max_resid)
              << "; max predicted rate = " << format_double(max_pred)
              << "; audit.csv in " << dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DC network voltage-control simulator and certificate toolkit"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, law, mode, storage = "sd", traj_path;
    bool svg = false;
    int samples = 2000;
    unsigned seed = 12345;

    auto* sim = app.add_subcommand("simulate", "integrate a scenario");
    sim->add_option("scenario", scenario_path)->required();
    sim->add_option("--out", out_dir, "output directory");
    sim->add_option("--law", law)->check(CLI::IsMember({"full", "comparison"}));
    sim->add_option("--mode", mode)->check(CLI::IsMember({"oracle", "levant"}));
    sim->add_flag("--svg", svg, "also write SVG line plots");

    auto* ss = app.add_subcommand("steady-state", "print the equilibrium");
    ss->add_option("scenario", scenario_path)->required();

    auto* cert = app.add_subcommand(
        "certify", "conductance tables, stability norm, certificate audit");
    cert->add_option("scenario", scenario_path)->required();
    cert->add_option("--samples", samples);
    cert->add_option("--seed", seed);

    auto* vf = app.add_subcommand("vector-field",
                                  "closed-loop field on an (Is, V) window");
    vf->add_option("scenario", scenario_path)->required();
    vf->add_option("--out", out_dir);

    auto* audit = app.add_subcommand("audit",
                                     "dissipation audit of a trajectory CSV");
    audit->add_option("trajectory", traj_path)->required();
    audit->add_option("--scenario", scenario_path)->required();
    audit->add_option("--storage", storage)
        ->check(CLI::IsMember({"sd", "energy", "kras", "bregman"}));
    audit->add_option("--out", out_dir);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(scenario_path, out_dir, law, mode, svg);
        if (ss->parsed()) return cmd_steady_state(scenario_path);
        if (cert->parsed()) return cmd_certify(scenario_path, samples, seed);
        if (vf->parsed()) return cmd_vector_field(scenario_path, out_dir);
        if (audit->parsed())
            return cmd_audit(traj_path, scenario_path, storage, out_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Unhandled: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
