#ifndef ZIPGRID_CONTROL_HPP
#define ZIPGRID_CONTROL_HPP

#include <Eigen/Dense>

#include "zipgrid/domain.hpp"
#include "zipgrid/errors.hpp"

// This header deliberately knows nothing about the network model: the
// controller is built from the locally known filter parameters and gains
// only, and consumes per-node measurements (I_si, V_i and a voltage
// derivative). Load parameters have no way in.

namespace zipgrid {

using Eigen::VectorXd;

enum class DerivativeMode { oracle, levant };

// Gains of the first-order robust exact differentiator. L is the per-node
// Lipschitz bound on the second derivative of the measured voltage and
// needs scenario-specific sizing; lambda0/lambda1 are the classical
// recommended values.
struct LevantGains {
    double lambda0 = 1.5;
    double lambda1 = 1.1;
    VectorXd L;
};

// Internal states of the differentiator: z0 tracks the measurement, z1 the
// derivative estimate.
struct LevantState {
    VectorXd z0;
    VectorXd z1;
    bool initialized = false;

    static LevantState zero(int n) {
        return LevantState{VectorXd::Zero(n), VectorXd::Zero(n), false};
    }
};

// One explicit-Euler step of the differentiator driven by the measured
// signal. Returns the updated state; the derivative estimate is z1.
LevantState levant_step(const LevantState& state, const VectorXd& measured,
                        double dt, const LevantGains& gains);

// Per-node controller configuration. Pi only has to dominate the true
// P-load bound for the closed-loop guarantees; the controller itself never
// sees the loads, so that inequality is checked by tests, not here.
struct ControllerConfig {
    VectorXd K1;     // >= 0
    VectorXd K2;     // > 0
    VectorXd Pi;     // >= 0, W
    VectorXd V_star; // > 0, V
    DerivativeMode derivative_mode = DerivativeMode::oracle;
    LevantGains levant;

    void validate() const;
};

// Locally known filter constants of each node (available information).
struct FilterParams {
    VectorXd R_s;
    VectorXd L_s;
};

struct ControlOutput {
    VectorXd u;
    LevantState levant;
    VectorXd v_dot_used;
};

// Decentralized voltage controller: node i's output depends only on
// (I_si, V_i, a V_i derivative signal, local constants).
class Controller {
public:
    Controller(FilterParams filter, ControllerConfig config);

    const ControllerConfig& config() const { return cfg_; }
    const FilterParams& filter() const { return filt_; }
    int n() const { return static_cast<int>(filt_.R_s.size()); }

    // Passifying input u_PBC = R_s I_s - L_s Pi [V]^{-2} v_dot.
    VectorXd u_pbc(const VectorXd& I_s, const VectorXd& V,
                   const VectorXd& v_dot) const;

    // Stabilizing input u_Stab = -L_s K1 (V - V*) - L_s K2 v_dot + V*.
    VectorXd u_stab(const VectorXd& V, const VectorXd& v_dot) const;

    // Combined law u = R_s I_s + V* - L_s K1 (V - V*)
    //                - L_s (Pi [V]^{-2} + K2) v_dot  (+ L_s mu).
    // In oracle mode v_dot_oracle is the externally measured derivative
    // (capacitor current over C_s); in levant mode it is ignored and the
    // differentiator state supplies the estimate. dt > 0 required in levant
    // mode.
    ControlOutput control_law(const VectorXd& I_s, const VectorXd& V,
                              const VectorXd& v_dot_oracle,
                              const LevantState& levant, double dt,
                              const VectorXd* mu = nullptr) const;

    // Baseline without the derivative action: u = R_s I_s + V* - L_s K1 (V - V*).
    // Equals control_law with Pi = 0, K2 = 0.
    VectorXd comparison_law(const VectorXd& I_s, const VectorXd& V) const;

private:
    FilterParams filt_;
    ControllerConfig cfg_;
};

} // namespace zipgrid

#endif
