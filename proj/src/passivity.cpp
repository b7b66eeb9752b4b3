#include "zipgrid/passivity.hpp"

#include <algorithm>
#include <cmath>

namespace zipgrid {

namespace {

double weighted_sq(const VectorXd& x, const VectorXd& w) {
    return x.dot(w.cwiseProduct(x));
}

double energy_storage(const Network& net, const NetworkState& s) {
    return 0.5 * (weighted_sq(s.I_s, net.L_s()) + weighted_sq(s.I_t, net.L_t()) +
                  weighted_sq(s.V, net.C_s()));
}

double bregman_storage(const Network& net, const NetworkState& s,
                       const Equilibrium& eq) {
    return 0.5 * (weighted_sq(s.I_s - eq.I_s_bar, net.L_s()) +
                  weighted_sq(s.I_t - eq.I_t_bar, net.L_t()) +
                  weighted_sq(s.V - eq.V_bar, net.C_s()));
}

double krasovskii_storage(const Network& net, const NetworkState& s,
                          const VectorXd& u) {
    const NetworkState d = open_loop_rhs(net, s, u);
    return 0.5 * (weighted_sq(d.I_s, net.L_s()) + weighted_sq(d.I_t, net.L_t()) +
                  weighted_sq(d.V, net.C_s()));
}

// Certificate storage in its explicit three-norm form.
double certificate_storage(const Network& net, const NetworkState& s) {
    const VectorXd line_drop =
        net.R_t().cwiseProduct(s.I_t) + net.incidence().transpose() * s.V;
    const VectorXd cap_current =
        s.I_s + net.incidence() * s.I_t - zip_currents(net, s.V);
    return 0.5 * (weighted_sq(s.V, net.L_s().cwiseInverse()) +
                  weighted_sq(line_drop, net.L_t().cwiseInverse()) +
                  weighted_sq(cap_current, net.C_s().cwiseInverse()));
}

double shaping_storage(const Network& net, const NetworkState& s,
                       const ControllerConfig& cfg) {
    const VectorXd li = net.L_s().cwiseInverse();
    return 0.5 * weighted_sq(s.V - cfg.V_star, cfg.K1) -
           s.V.dot(li.cwiseProduct(cfg.V_star)) +
           0.5 * weighted_sq(cfg.V_star, li);
}

// Closed-loop storage in the cancellation-free form
// 1/2 |V - V*|^2_{L_s^{-1} + K1} + line and capacitor terms.
double closed_loop_storage(const Network& net, const NetworkState& s,
                           const ControllerConfig& cfg) {
    const VectorXd line_drop =
        net.R_t().cwiseProduct(s.I_t) + net.incidence().transpose() * s.V;
    const VectorXd cap_current =
        s.I_s + net.incidence() * s.I_t - zip_currents(net, s.V);
    return 0.5 * (weighted_sq(s.V - cfg.V_star,
                              net.L_s().cwiseInverse() + cfg.K1) +
                  weighted_sq(line_drop, net.L_t().cwiseInverse()) +
                  weighted_sq(cap_current, net.C_s().cwiseInverse()));
}

double storage_value(const Network& net, const NetworkState& s,
                     const VectorXd& u, StorageId which,
                     const ControllerConfig* cfg, const Equilibrium* anchor) {
    switch (which) {
    case StorageId::energy:
        return energy_storage(net, s);
    case StorageId::bregman:
        return bregman_storage(net, s, *anchor);
    case StorageId::krasovskii:
        return krasovskii_storage(net, s, u);
    case StorageId::s_d:
        return closed_loop_storage(net, s, *cfg);
    }
    throw InvariantViolation("unknown storage id");
}

struct RatePrediction {
    double rate;
    double supply;
};

RatePrediction predicted_rate(const Network& net, const NetworkState& s,
                              const VectorXd& u, const VectorXd* u_dot,
                              StorageId which, const ControllerConfig* cfg,
                              const Equilibrium* anchor) {
    RatePrediction out{0.0, 0.0};
    switch (which) {
    case StorageId::energy: {
        out.supply = u.dot(s.I_s);
        out.rate = -weighted_sq(s.I_t, net.R_t()) -
                   weighted_sq(s.I_s, net.R_s()) -
                   weighted_sq(s.V, net.Z_inv()) - net.P_const().sum() -
                   s.V.dot(net.I_const()) + out.supply;
        return out;
    }
    case StorageId::bregman: {
        const VectorXd g_b =
            net.Z_inv().array() -
            net.P_const().array() / (s.V.array() * anchor->V_bar.array());
        out.supply = (u - anchor->u_bar).dot(s.I_s - anchor->I_s_bar);
        out.rate = -weighted_sq(s.I_t - anchor->I_t_bar, net.R_t()) -
                   weighted_sq(s.I_s - anchor->I_s_bar, net.R_s()) -
                   weighted_sq(s.V - anchor->V_bar, g_b) + out.supply;
        return out;
    }
    case StorageId::krasovskii: {
        const NetworkState d = open_loop_rhs(net, s, u);
        const VectorXd g_k = net.Z_inv().array() -
                             net.P_const().array() / s.V.array().square();
        out.supply = u_dot != nullptr ? u_dot->dot(d.I_s) : 0.0;
        out.rate = -weighted_sq(d.I_t, net.R_t()) -
                   weighted_sq(d.I_s, net.R_s()) - weighted_sq(d.V, g_k) +
                   out.supply;
        return out;
    }
    case StorageId::s_d: {
        out.rate = predicted_sd_rate(net, s, u, *cfg);
        out.supply = 0.0; // mu = 0
        return out;
    }
    }
    throw InvariantViolation("unknown storage id");
}

} // namespace

double predicted_sd_rate(const Network& net, const NetworkState& state,
                         const VectorXd& u, const ControllerConfig& cfg) {
    const NetworkState d = open_loop_rhs(net, state, u);
    const VectorXd g_pi =
        net.Z_inv().array() +
        (cfg.Pi.array() - net.P_const().array()) / state.V.array().square();
    return -weighted_sq(d.I_t, net.R_t()) -
           weighted_sq(d.V, g_pi + cfg.K2);
}

StorageReport storage_report(const Network& net, const NetworkState& state,
                             const Equilibrium& eq,
                             const ControllerConfig& cfg, const VectorXd& u) {
    StorageReport r;
    r.S_energy = energy_storage(net, state);
    r.S_bregman = bregman_storage(net, state, eq);
    r.S_krasovskii = krasovskii_storage(net, state, u);
    r.P_A = certificate_storage(net, state);
    r.S_a = shaping_storage(net, state, cfg);
    r.S_d = closed_loop_storage(net, state, cfg);

    const ConductanceMatrices g =
        conductance_matrices(net, state.V, cfg.Pi, cfg.V_star);
    r.min_eig_G_B = g.G_B.minCoeff();
    r.min_eig_G_K = g.G_K.minCoeff();
    r.min_eig_G_Pi = g.G_Pi.minCoeff();
    r.in_X = state.V.minCoeff() > 0.0;
    r.in_X_B = r.in_X && r.min_eig_G_B >= 0.0;
    r.in_X_K = r.in_X && r.min_eig_G_K >= 0.0;
    return r;
}

std::vector<DissipationSample> dissipation_audit(const Network& base_net,
                                                 const Trajectory& traj,
                                                 StorageId which,
                                                 const ControllerConfig* cfg) {
    if (traj.size() < 3)
        throw InsufficientSamples("dissipation audit needs at least 3 samples");
    if (which == StorageId::s_d && cfg == nullptr)
        throw InvariantViolation("the closed-loop storage audit needs the "
                                 "controller configuration");

    // Segment boundaries: event instants partition the run; the sample at
    // an event time itself is differenced on neither side.
    std::vector<Event> events = traj.events;
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.time < b.time; });
    std::vector<double> cuts;
    for (const Event& e : events) cuts.push_back(e.time);
    const double tol = 1e-9 * std::max(1.0, traj.times.back());

    std::vector<std::vector<std::size_t>> seg_indices(cuts.size() + 1);
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const double t = traj.times[j];
        bool at_cut = false;
        std::size_t seg = 0;
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            if (std::abs(t - cuts[k]) <= tol) {
                at_cut = true;
                break;
            }
            if (t > cuts[k]) seg = k + 1;
        }
        if (!at_cut) seg_indices[seg].push_back(j);
    }

    std::vector<DissipationSample> out;
    Network net = base_net;
    for (std::size_t seg = 0; seg <= cuts.size(); ++seg) {
        if (seg > 0) {
            // Apply the event opening this segment.
            const Event& e = events[seg - 1];
            std::vector<ZipLoad> loads = net.loads();
            for (int i = 0; i < net.n(); ++i) {
                if (e.dZ_inv.size() > 0) loads[i].Z_inv += e.dZ_inv[i];
                if (e.dI_const.size() > 0) loads[i].I_const += e.dI_const[i];
                if (e.dP_const.size() > 0) loads[i].P_const += e.dP_const[i];
            }
            net = net.with_loads(loads);
        }

        const std::vector<std::size_t>& idx = seg_indices[seg];
        if (idx.size() < 5) continue;

        const double h = traj.times[idx[1]] - traj.times[idx[0]];
        for (std::size_t a = 1; a + 1 < idx.size(); ++a) {
            const double step = traj.times[idx[a + 1]] - traj.times[idx[a]];
            if (std::abs(step - h) > 1e-9 * std::max(1.0, h))
                throw InvariantViolation(
                    "dissipation audit needs uniform sample spacing");
        }

        // Bregman (and s_d) re-anchor at this segment's equilibrium.
        Equilibrium anchor;
        if (which == StorageId::bregman) {
            anchor = cfg != nullptr
                         ? equilibrium_from_vstar(net, cfg->V_star)
                         : equilibrium_from_ustar(net, traj.inputs[idx[0]]);
        }

        std::vector<double> S(idx.size());
        for (std::size_t a = 0; a < idx.size(); ++a)
            S[a] = storage_value(net, traj.states[idx[a]], traj.inputs[idx[a]],
                                 which, cfg, &anchor);

        for (std::size_t a = 2; a + 2 < idx.size(); ++a) {
            const std::size_t j = idx[a];
            const double numeric =
                (-S[a + 2] + 8.0 * S[a + 1] - 8.0 * S[a - 1] + S[a - 2]) /
                (12.0 * h);
            VectorXd u_dot;
            const VectorXd* u_dot_ptr = nullptr;
            if (which == StorageId::krasovskii) {
                u_dot = (-traj.inputs[idx[a + 2]] + 8.0 * traj.inputs[idx[a + 1]] -
                         8.0 * traj.inputs[idx[a - 1]] + traj.inputs[idx[a - 2]]) /
                        (12.0 * h);
                u_dot_ptr = &u_dot;
            }
            const RatePrediction p =
                predicted_rate(net, traj.states[j], traj.inputs[j], u_dot_ptr,
                               which, cfg, &anchor);
            DissipationSample sample;
            sample.t = traj.times[j];
            sample.dS_dt_numeric = numeric;
            sample.dS_dt_predicted = p.rate;
            sample.supply = p.supply;
            sample.residual = numeric - p.rate;
            out.push_back(sample);
        }
    }
    return out;
}

std::vector<RegionSample> set_membership_region(
    const Network& net, const ControllerConfig& cfg,
    const std::vector<double>& v_grid) {
    std::vector<RegionSample> out;
    out.reserve(v_grid.size());
    for (double v : v_grid) {
        const VectorXd V = VectorXd::Constant(net.n(), v);
        const ConductanceMatrices g =
            conductance_matrices(net, V, cfg.Pi, cfg.V_star);
        out.push_back(RegionSample{v, g.G_B.minCoeff() >= 0.0,
                                   g.G_K.minCoeff() >= 0.0,
                                   g.G_Pi.minCoeff() >= 0.0});
    }
    return out;
}

ScalarRegionBoundaries scalar_region_boundaries(const Network& net,
                                                double V_star) {
    if (net.n() != 1)
        throw NetworkNotScalar("scalar_region_boundaries needs n = 1");
    const ZipLoad& load = net.loads()[0];
    ScalarRegionBoundaries b{};
    if (load.Z_inv <= 0.0) {
        b.has_boundaries = load.P_const <= 0.0;
        b.v_bregman = 0.0;
        b.v_krasovskii = 0.0;
        return b;
    }
    b.has_boundaries = true;
    b.v_bregman = load.P_const / (load.Z_inv * V_star);
    b.v_krasovskii = std::sqrt(load.P_const / load.Z_inv);
    return b;
}

} // namespace zipgrid
