#include "zipgrid/brayton_moser.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace zipgrid {

namespace {

using MatrixXl = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXl = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

constexpr double kRankTol = 1e-9;

MatrixXd transform_matrix(const MixedPotential& mp, const BmPair& pair,
                          const NetworkState& state) {
    const int dim = 2 * mp.network().n() + mp.network().m();
    MatrixXd T = pair.lambda * MatrixXd::Identity(dim, dim);
    if (pair.M.size() > 0 && !pair.M.isZero(0.0))
        T += mp.hessian(state) * pair.M;
    Eigen::JacobiSVD<MatrixXd> svd(T);
    if (svd.singularValues().minCoeff() <= kRankTol)
        throw RankDeficientTransform(
            "lambda*I + Hess(P)*M is numerically rank deficient (min sv = " +
            std::to_string(svd.singularValues().minCoeff()) + ")");
    return T;
}

} // namespace

MixedPotential::MixedPotential(Network net, PotentialVariant variant)
    : net_(std::move(net)), variant_(variant) {}

MatrixXd MixedPotential::gamma() const {
    const int n = net_.n();
    const int m = net_.m();
    MatrixXd g(n + m, n);
    g.topRows(n) = MatrixXd::Identity(n, n);
    g.bottomRows(m) = net_.incidence().transpose();
    return g;
}

double MixedPotential::resistive_content(const VectorXd& I_s,
                                         const VectorXd& I_t) const {
    double f = 0.5 * I_t.dot(net_.R_t().cwiseProduct(I_t));
    if (variant_ == PotentialVariant::full)
        f += 0.5 * I_s.dot(net_.R_s().cwiseProduct(I_s));
    return f;
}

double MixedPotential::resistive_cocontent(const VectorXd& V) const {
    for (Eigen::Index i = 0; i < V.size(); ++i)
        if (!(V[i] > kMinVoltage))
            throw NonPositiveVoltage("co-content needs positive voltages");
    return 0.5 * V.dot(net_.Z_inv().cwiseProduct(V)) +
           net_.P_const().dot(V.array().log().matrix()) + net_.I_const().dot(V);
}

double MixedPotential::value(const NetworkState& state) const {
    const double coupling = state.I_s.dot(state.V) +
                            state.I_t.dot(net_.incidence().transpose() * state.V);
    return coupling + resistive_content(state.I_s, state.I_t) -
           resistive_cocontent(state.V);
}

VectorXd MixedPotential::gradient(const NetworkState& state) const {
    const int n = net_.n();
    const int m = net_.m();
    VectorXd g(2 * n + m);
    g.segment(0, n) = state.V;
    if (variant_ == PotentialVariant::full)
        g.segment(0, n) += net_.R_s().cwiseProduct(state.I_s);
    g.segment(n, m) = net_.R_t().cwiseProduct(state.I_t) +
                      net_.incidence().transpose() * state.V;
    g.segment(n + m, n) = state.I_s + net_.incidence() * state.I_t -
                          zip_currents(net_, state.V);
    return g;
}

MatrixXd MixedPotential::hessian(const NetworkState& state) const {
    const int n = net_.n();
    const int m = net_.m();
    for (Eigen::Index i = 0; i < state.V.size(); ++i)
        if (!(state.V[i] > kMinVoltage))
            throw NonPositiveVoltage("Hessian needs positive voltages");

    MatrixXd h = MatrixXd::Zero(2 * n + m, 2 * n + m);
    if (variant_ == PotentialVariant::full)
        h.block(0, 0, n, n) = net_.R_s().asDiagonal();
    h.block(0, n + m, n, n) = MatrixXd::Identity(n, n);
    h.block(n + m, 0, n, n) = MatrixXd::Identity(n, n);
    h.block(n, n, m, m) = net_.R_t().asDiagonal();
    h.block(n, n + m, m, n) = net_.incidence().transpose();
    h.block(n + m, n, n, m) = net_.incidence();
    h.block(n + m, n + m, n, n) =
        (-net_.Z_inv().array() +
         net_.P_const().array() / state.V.array().square())
            .matrix()
            .asDiagonal();
    return h;
}

BmPair identity_pair(int n, int m) {
    const int dim = 2 * n + m;
    BmPair pair;
    pair.lambda = 1.0;
    pair.M = MatrixXd::Zero(dim, dim);
    pair.Q0 = [n, dim](const NetworkState&) { return MatrixXd::Zero(n, dim); };
    pair.D = MatrixXd::Identity(n, n);
    return pair;
}

BmPair certificate_pair(const Network& net, const VectorXd& Pi) {
    const int n = net.n();
    const int m = net.m();
    const int dim = 2 * n + m;
    BmPair pair;
    pair.lambda = 0.0;
    VectorXd mdiag(dim);
    mdiag << net.L_s().cwiseInverse(), net.L_t().cwiseInverse(),
        net.C_s().cwiseInverse();
    pair.M = mdiag.asDiagonal();
    const VectorXd Ls = net.L_s();
    pair.Q0 = [n, m, Ls, Pi](const NetworkState& state) {
        MatrixXd q0 = MatrixXd::Zero(n, 2 * n + m);
        q0.block(0, n + m, n, n) =
            (-Ls.array() * Pi.array() / state.V.array().square())
                .matrix()
                .asDiagonal();
        return q0;
    };
    pair.D = net.L_s().asDiagonal();
    return pair;
}

MatrixXd bm_q_matrix(const Network& net) {
    const int n = net.n();
    const int m = net.m();
    VectorXd qdiag(2 * n + m);
    qdiag << -net.L_s(), -net.L_t(), net.C_s();
    return qdiag.asDiagonal();
}

MatrixXd bm_input_matrix(const Network& net) {
    const int n = net.n();
    const int m = net.m();
    MatrixXd b = MatrixXd::Zero(2 * n + m, n);
    b.topRows(n) = -MatrixXd::Identity(n, n);
    return b;
}

GeneralizedPair generalized_pair(const MixedPotential& mp, const BmPair& pair,
                                 const NetworkState& state) {
    const Network& net = mp.network();
    const MatrixXd T = transform_matrix(mp, pair, state);
    const MatrixXd Q = bm_q_matrix(net);
    const MatrixXd B = bm_input_matrix(net);
    const VectorXd grad = mp.gradient(state);

    GeneralizedPair out;
    out.Q_A = T * (Q - B * pair.Q0(state));
    out.grad_P_A = T * grad;
    out.B_A = T * B * pair.D;
    out.P_A = pair.lambda * mp.value(state) + 0.5 * grad.dot(pair.M * grad);
    return out;
}

double solution_equivalence_check(const MixedPotential& mp, const BmPair& pair,
                                  const NetworkState& state,
                                  const VectorXd& u) {
    const Network& net = mp.network();
    if (u.size() != net.n())
        throw InvariantViolation("input vector size must equal node count");

    // Primitives are exact inputs to both routes; the composite algebra runs
    // in extended precision so cancellation between the two solve paths does
    // not mask the identity being checked.
    const MatrixXl T = transform_matrix(mp, pair, state).cast<long double>();
    const MatrixXl Q = bm_q_matrix(net).cast<long double>();
    const MatrixXl B = bm_input_matrix(net).cast<long double>();
    const MatrixXl Q0 = pair.Q0(state).cast<long double>();
    const MatrixXl D = pair.D.cast<long double>();
    const VectorXl grad = mp.gradient(state).cast<long double>();
    const VectorXl ul = u.cast<long double>();

    const VectorXl lhs = Q.fullPivLu().solve(grad + B * ul);

    const MatrixXl DinvQ0 = D.fullPivLu().solve(Q0);
    const MatrixXl B_A = T * B * D;
    const MatrixXl A = T * (Q - B * Q0) + B_A * DinvQ0;
    Eigen::FullPivLU<MatrixXl> lu(A);
    if (!lu.isInvertible())
        throw RankDeficientTransform(
            "Q_A + B_A D^{-1} Q0 is singular at the evaluated state");
    const VectorXl rhs = lu.solve(T * grad + B_A * (D.fullPivLu().solve(ul)));
    return static_cast<double>((lhs - rhs).norm());
}

BmStability bm_stability_condition(const Network& net) {
    const int n = net.n();
    const int m = net.m();
    MatrixXd A(n + m, n);
    const VectorXd cinv_sqrt = net.C_s().cwiseSqrt().cwiseInverse();
    A.topRows(n) =
        (net.L_s().cwiseSqrt().cwiseQuotient(net.R_s())).asDiagonal() *
        MatrixXd(cinv_sqrt.asDiagonal());
    A.bottomRows(m) =
        (net.L_t().cwiseSqrt().cwiseQuotient(net.R_t())).asDiagonal() *
        net.incidence().transpose() * cinv_sqrt.asDiagonal();

    Eigen::JacobiSVD<MatrixXd> svd(A);
    BmStability out;
    out.norm_value = svd.singularValues().size() > 0
                         ? svd.singularValues().maxCoeff()
                         : 0.0;
    out.satisfied = out.norm_value < 1.0;
    out.delta_margin = 1.0 - out.norm_value;
    return out;
}

} // namespace zipgrid
