#include "zipgrid/network.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace zipgrid {

namespace {

void require_positive(double value, const std::string& what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << what << " must be > 0, got " << value;
        throw NonPositiveParameter(os.str());
    }
}

void require_nonnegative(double value, const std::string& what) {
    if (value < 0.0 || !std::isfinite(value)) {
        std::ostringstream os;
        os << what << " must be >= 0, got " << value;
        throw NonPositiveParameter(os.str());
    }
}

void check_domain(const VectorXd& V) {
    for (Eigen::Index i = 0; i < V.size(); ++i) {
        if (!(V[i] > kMinVoltage)) {
            std::ostringstream os;
            os << "V_" << (i + 1) << " = " << V[i] << " is at or below the "
               << kMinVoltage << " V floor";
            throw NonPositiveVoltage(os.str());
        }
    }
}

void validate_loads(const std::vector<ZipLoad>& loads) {
    for (std::size_t i = 0; i < loads.size(); ++i) {
        const std::string node = "load " + std::to_string(i + 1);
        require_nonnegative(loads[i].Z_inv, node + " Z_inv");
        require_nonnegative(loads[i].I_const, node + " I_const");
        require_nonnegative(loads[i].P_const, node + " P_const");
    }
}

} // namespace

VectorXd NetworkState::pack() const {
    VectorXd x(I_s.size() + I_t.size() + V.size());
    x << I_s, I_t, V;
    return x;
}

NetworkState NetworkState::unpack(const VectorXd& x, int n, int m) {
    NetworkState s;
    s.I_s = x.segment(0, n);
    s.I_t = x.segment(n, m);
    s.V = x.segment(n + m, n);
    return s;
}

Network Network::build(std::vector<DguParams> dgus,
                       std::vector<LineParams> lines,
                       std::vector<ZipLoad> loads) {
    const int n = static_cast<int>(dgus.size());
    const int m = static_cast<int>(lines.size());
    if (n == 0) throw InvariantViolation("network needs at least one node");
    if (loads.size() != dgus.size())
        throw InvariantViolation("one ZIP load per node required");

    for (int i = 0; i < n; ++i) {
        const std::string node = "node " + std::to_string(i + 1);
        require_positive(dgus[i].R_s, node + " R_s");
        require_positive(dgus[i].L_s, node + " L_s");
        require_positive(dgus[i].C_s, node + " C_s");
    }
    validate_loads(loads);

    MatrixXd incidence = MatrixXd::Zero(n, m);
    for (int k = 0; k < m; ++k) {
        const std::string line = "line " + std::to_string(k + 1);
        require_positive(lines[k].R_t, line + " R_t");
        require_positive(lines[k].L_t, line + " L_t");
        const int a = lines[k].from;
        const int b = lines[k].to;
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw InvariantViolation(line + " references a nonexistent node");
        if (a == b) throw SelfLoop(line + " connects a node to itself");
        incidence(a, k) = 1.0;  // edge orientation follows list order
        incidence(b, k) = -1.0;
    }

    // Connectivity by breadth-first search over the undirected graph.
    std::vector<char> seen(n, 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        for (const LineParams& l : lines) {
            const int other = l.from == v ? l.to : (l.to == v ? l.from : -1);
            if (other >= 0 && !seen[other]) {
                seen[other] = 1;
                ++reached;
                frontier.push(other);
            }
        }
    }
    if (reached != n)
        throw DisconnectedGraph("network graph is not connected (" +
                                std::to_string(reached) + " of " +
                                std::to_string(n) + " nodes reachable)");

    Network net;
    net.n_ = n;
    net.m_ = m;
    net.dgus_ = std::move(dgus);
    net.lines_ = std::move(lines);
    net.loads_ = std::move(loads);
    net.incidence_ = std::move(incidence);
    net.cache_vectors();
    return net;
}

void Network::cache_vectors() {
    R_s_.resize(n_);
    L_s_.resize(n_);
    C_s_.resize(n_);
    Z_inv_.resize(n_);
    I_const_.resize(n_);
    P_const_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        R_s_[i] = dgus_[i].R_s;
        L_s_[i] = dgus_[i].L_s;
        C_s_[i] = dgus_[i].C_s;
        Z_inv_[i] = loads_[i].Z_inv;
        I_const_[i] = loads_[i].I_const;
        P_const_[i] = loads_[i].P_const;
    }
    R_t_.resize(m_);
    L_t_.resize(m_);
    for (int k = 0; k < m_; ++k) {
        R_t_[k] = lines_[k].R_t;
        L_t_[k] = lines_[k].L_t;
    }
}

Network Network::with_loads(std::vector<ZipLoad> loads) const {
    if (loads.size() != static_cast<std::size_t>(n_))
        throw InvariantViolation("one ZIP load per node required");
    validate_loads(loads);
    Network net = *this;
    net.loads_ = std::move(loads);
    net.cache_vectors();
    return net;
}

double zip_current(const ZipLoad& load, double v) {
    if (!(v > kMinVoltage))
        throw NonPositiveVoltage("zip_current evaluated at v = " +
                                 std::to_string(v));
    return load.Z_inv * v + load.I_const + load.P_const / v;
}

VectorXd zip_currents(const Network& net, const VectorXd& V) {
    check_domain(V);
    return net.Z_inv().cwiseProduct(V) + net.I_const() +
           net.P_const().cwiseQuotient(V);
}

NetworkState open_loop_rhs(const Network& net, const NetworkState& state,
                           const VectorXd& u) {
    if (state.I_s.size() != net.n() || state.I_t.size() != net.m() ||
        state.V.size() != net.n() || u.size() != net.n())
        throw InvariantViolation("state/input sizes do not match the network");
    const VectorXd I_l = zip_currents(net, state.V); // domain guard
    NetworkState d;
    d.I_s = (-net.R_s().cwiseProduct(state.I_s) - state.V + u)
                .cwiseQuotient(net.L_s());
    d.I_t = (-net.R_t().cwiseProduct(state.I_t) -
             net.incidence().transpose() * state.V)
                .cwiseQuotient(net.L_t());
    d.V = (state.I_s + net.incidence() * state.I_t - I_l)
              .cwiseQuotient(net.C_s());
    return d;
}

ConductanceMatrices conductance_matrices(const Network& net, const VectorXd& V,
                                         const VectorXd& Pi,
                                         const VectorXd& V_star) {
    if (V.size() != net.n() || Pi.size() != net.n() ||
        V_star.size() != net.n())
        throw InvariantViolation("V, Pi and V_star must have one entry per node");
    check_domain(V);
    check_domain(V_star);
    for (Eigen::Index i = 0; i < Pi.size(); ++i)
        require_nonnegative(Pi[i], "Pi_" + std::to_string(i + 1));

    const VectorXd& P = net.P_const();
    ConductanceMatrices g;
    g.G_B = net.Z_inv().array() - P.array() / (V.array() * V_star.array());
    g.G_K = net.Z_inv().array() - P.array() / V.array().square();
    g.G_Pi = net.Z_inv().array() + (Pi.array() - P.array()) / V.array().square();
    return g;
}

} // namespace zipgrid
