#include "zipgrid/control.hpp"

#include <cmath>

namespace zipgrid {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_voltages(const VectorXd& V) {
    for (Eigen::Index i = 0; i < V.size(); ++i)
        if (!(V[i] > kMinVoltage))
            throw NonPositiveVoltage("controller evaluated at V_" +
                                     std::to_string(i + 1) + " = " +
                                     std::to_string(V[i]));
}

} // namespace

LevantState levant_step(const LevantState& state, const VectorXd& measured,
                        double dt, const LevantGains& gains) {
    if (!(dt > 0.0)) throw InvariantViolation("levant_step needs dt > 0");
    if (gains.L.size() != measured.size())
        throw InvariantViolation("levant gains need one L entry per signal");
    LevantState s = state;
    if (!s.initialized) {
        s.z0 = measured;
        s.z1 = VectorXd::Zero(measured.size());
        s.initialized = true;
        return s;
    }
    for (Eigen::Index i = 0; i < measured.size(); ++i) {
        const double L = gains.L[i];
        const double e = s.z0[i] - measured[i];
        const double v =
            s.z1[i] - gains.lambda0 * std::sqrt(L * std::abs(e)) * sign(e);
        s.z0[i] += dt * v;
        s.z1[i] += dt * (-gains.lambda1 * L * sign(e));
    }
    return s;
}

void ControllerConfig::validate() const {
    const Eigen::Index n = V_star.size();
    if (K1.size() != n || K2.size() != n || Pi.size() != n)
        throw InvariantViolation("controller gain vectors must share the node count");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (K1[i] < 0.0)
            throw InvariantViolation("K1 must be >= 0 elementwise");
        if (!(K2[i] > 0.0))
            throw InvariantViolation("K2 must be > 0 elementwise");
        if (Pi[i] < 0.0)
            throw InvariantViolation("Pi must be >= 0 elementwise");
        if (!(V_star[i] > kMinVoltage))
            throw NonPositiveVoltage("V_star must be positive elementwise");
    }
    if (derivative_mode == DerivativeMode::levant) {
        if (levant.L.size() != n)
            throw InvariantViolation("levant.L must have one entry per node");
        if (!(levant.lambda0 > 0.0) || !(levant.lambda1 > 0.0) ||
            levant.L.minCoeff() <= 0.0)
            throw InvariantViolation("levant gains must be positive");
    }
}

Controller::Controller(FilterParams filter, ControllerConfig config)
    : filt_(std::move(filter)), cfg_(std::move(config)) {
    if (filt_.R_s.size() != filt_.L_s.size() ||
        filt_.R_s.size() != cfg_.V_star.size())
        throw InvariantViolation("filter parameter sizes must match the config");
    for (Eigen::Index i = 0; i < filt_.R_s.size(); ++i)
        if (!(filt_.R_s[i] > 0.0) || !(filt_.L_s[i] > 0.0))
            throw InvariantViolation("filter R_s and L_s must be positive");
    cfg_.validate();
}

VectorXd Controller::u_pbc(const VectorXd& I_s, const VectorXd& V,
                           const VectorXd& v_dot) const {
    check_voltages(V);
    return filt_.R_s.cwiseProduct(I_s) -
           (filt_.L_s.array() * cfg_.Pi.array() * v_dot.array() /
            V.array().square())
               .matrix();
}

VectorXd Controller::u_stab(const VectorXd& V, const VectorXd& v_dot) const {
    return cfg_.V_star -
           filt_.L_s.cwiseProduct(cfg_.K1.cwiseProduct(V - cfg_.V_star)) -
           filt_.L_s.cwiseProduct(cfg_.K2.cwiseProduct(v_dot));
}

ControlOutput Controller::control_law(const VectorXd& I_s, const VectorXd& V,
                                      const VectorXd& v_dot_oracle,
                                      const LevantState& levant, double dt,
                                      const VectorXd* mu) const {
    check_voltages(V);
    ControlOutput out;
    out.levant = levant;
    if (cfg_.derivative_mode == DerivativeMode::levant) {
        out.levant = levant_step(levant, V, dt, cfg_.levant);
        out.v_dot_used = out.levant.z1;
    } else {
        out.v_dot_used = v_dot_oracle;
    }
    out.u = u_pbc(I_s, V, out.v_dot_used) + u_stab(V, out.v_dot_used);
    if (mu != nullptr) out.u += filt_.L_s.cwiseProduct(*mu);
    return out;
}

VectorXd Controller::comparison_law(const VectorXd& I_s,
                                    const VectorXd& V) const {
    return filt_.R_s.cwiseProduct(I_s) + cfg_.V_star -
           filt_.L_s.cwiseProduct(cfg_.K1.cwiseProduct(V - cfg_.V_star));
}

} // namespace zipgrid
