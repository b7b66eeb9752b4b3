#include "zipgrid/csvio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "zipgrid/steady_state.hpp"

namespace zipgrid {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary); // "\n" endings on all platforms
    if (!out) throw IoError("cannot write " + path);
    return out;
}

double parse_double(std::string_view text, const std::string& where) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(where + ": bad number '" + std::string(text) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw IoError("number formatting failed");
    return std::string(buf, ptr);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "t";
    for (int i = 1; i <= traj.n; ++i) out << ",Is_" << i;
    for (int k = 1; k <= traj.m; ++k) out << ",It_" << k;
    for (int i = 1; i <= traj.n; ++i) out << ",V_" << i;
    for (int i = 1; i <= traj.n; ++i) out << ",u_" << i;
    out << "\n";
    for (std::size_t j = 0; j < traj.size(); ++j) {
        out << format_double(traj.times[j]);
        const NetworkState& s = traj.states[j];
        for (int i = 0; i < traj.n; ++i) out << ',' << format_double(s.I_s[i]);
        for (int k = 0; k < traj.m; ++k) out << ',' << format_double(s.I_t[k]);
        for (int i = 0; i < traj.n; ++i) out << ',' << format_double(s.V[i]);
        const VectorXd& u = traj.inputs[j];
        for (int i = 0; i < traj.n; ++i) out << ',' << format_double(u[i]);
        out << "\n";
    }
}

Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string_view> header = split(line);
    int n = 0, m = 0;
    for (const auto& h : header) {
        if (h.rfind("Is_", 0) == 0) ++n;
        if (h.rfind("It_", 0) == 0) ++m;
    }
    if (header.empty() || header[0] != "t" ||
        header.size() != static_cast<std::size_t>(1 + 3 * n + m))
        throw ParseError(path + ": unexpected trajectory header");

    Trajectory traj;
    traj.n = n;
    traj.m = m;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string_view> cells = split(line);
        if (cells.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(row) +
                             " has wrong column count");
        const std::string where = path + ":" + std::to_string(row);
        std::size_t c = 0;
        traj.times.push_back(parse_double(cells[c++], where));
        NetworkState s;
        s.I_s.resize(n);
        s.I_t.resize(m);
        s.V.resize(n);
        for (int i = 0; i < n; ++i) s.I_s[i] = parse_double(cells[c++], where);
        for (int k = 0; k < m; ++k) s.I_t[k] = parse_double(cells[c++], where);
        for (int i = 0; i < n; ++i) s.V[i] = parse_double(cells[c++], where);
        VectorXd u(n);
        for (int i = 0; i < n; ++i) u[i] = parse_double(cells[c++], where);
        traj.states.push_back(std::move(s));
        traj.inputs.push_back(std::move(u));
    }
    if (traj.times.empty()) throw ParseError(path + ": no samples");
    traj.end_time = traj.times.back();
    return traj;
}

std::vector<StorageSeriesSample> storage_series(const Network& base_net,
                                                const Trajectory& traj,
                                                const ControllerConfig& cfg) {
    std::vector<StorageSeriesSample> out;
    out.reserve(traj.size());
    Network net = base_net;
    Equilibrium anchor = equilibrium_from_vstar(net, cfg.V_star);
    std::vector<Event> events = traj.events;
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.time < b.time; });
    std::size_t next_event = 0;
    const double tol = 1e-9 * std::max(1.0, traj.times.empty()
                                                ? 1.0
                                                : traj.times.back());
    for (std::size_t j = 0; j < traj.size(); ++j) {
        while (next_event < events.size() &&
               events[next_event].time <= traj.times[j] + tol) {
            const Event& e = events[next_event];
            std::vector<ZipLoad> loads = net.loads();
            for (int i = 0; i < net.n(); ++i) {
                if (e.dZ_inv.size() > 0) loads[i].Z_inv += e.dZ_inv[i];
                if (e.dI_const.size() > 0) loads[i].I_const += e.dI_const[i];
                if (e.dP_const.size() > 0) loads[i].P_const += e.dP_const[i];
            }
            net = net.with_loads(loads);
            anchor = equilibrium_from_vstar(net, cfg.V_star);
            ++next_event;
        }
        StorageSeriesSample sample;
        sample.t = traj.times[j];
        sample.report =
            storage_report(net, traj.states[j], anchor, cfg, traj.inputs[j]);
        sample.sd_rate_predicted =
            predicted_sd_rate(net, traj.states[j], traj.inputs[j], cfg);
        out.push_back(sample);
    }
    return out;
}

void write_diagnostics_csv(const std::vector<StorageSeriesSample>& series,
                           const std::string& path) {
    std::ofstream out = open_out(path);
    out << "t,S_energy,S_bregman,S_krasovskii,P_A,S_a,S_d,"
           "min_G_B,min_G_K,min_G_Pi,in_X,in_X_B,in_X_K,dSd_dt_predicted\n";
    for (const StorageSeriesSample& s : series) {
        const StorageReport& r = s.report;
        out << format_double(s.t) << ',' << format_double(r.S_energy) << ','
            << format_double(r.S_bregman) << ','
            << format_double(r.S_krasovskii) << ',' << format_double(r.P_A)
            << ',' << format_double(r.S_a) << ',' << format_double(r.S_d)
            << ',' << format_double(r.min_eig_G_B) << ','
            << format_double(r.min_eig_G_K) << ','
            << format_double(r.min_eig_G_Pi) << ',' << (r.in_X ? 1 : 0) << ','
            << (r.in_X_B ? 1 : 0) << ',' << (r.in_X_K ? 1 : 0) << ','
            << format_double(s.sd_rate_predicted) << "\n";
    }
}

void write_audit_csv(const std::vector<DissipationSample>& samples,
                     const std::string& path) {
    std::ofstream out = open_out(path);
    out << "t,dS_dt_numeric,dS_dt_predicted,supply,residual\n";
    for (const DissipationSample& s : samples)
        out << format_double(s.t) << ',' << format_double(s.dS_dt_numeric)
            << ',' << format_double(s.dS_dt_predicted) << ','
            << format_double(s.supply) << ',' << format_double(s.residual)
            << "\n";
}

void write_vector_field_csv(const VectorFieldGrid& grid,
                            const std::string& path) {
    std::ofstream out = open_out(path);
    out << "Is,V,dIs,dV\n";
    for (Eigen::Index i = 0; i < grid.v_axis.size(); ++i)
        for (Eigen::Index j = 0; j < grid.is_axis.size(); ++j)
            out << format_double(grid.is_axis[j]) << ','
                << format_double(grid.v_axis[i]) << ','
                << format_double(grid.dIs(i, j)) << ','
                << format_double(grid.dV(i, j)) << "\n";
}

void write_region_boundaries_csv(const ScalarRegionBoundaries& b,
                                 const std::string& path) {
    std::ofstream out = open_out(path);
    out << "set,V\n";
    if (b.has_boundaries) {
        out << "X_B," << format_double(b.v_bregman) << "\n";
        out << "X_K," << format_double(b.v_krasovskii) << "\n";
    }
}

} // namespace zipgrid
