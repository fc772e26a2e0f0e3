#include "rom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace rom::metrics {

using Eigen::VectorXd;

double relative_error(const VectorXd& rom_field, const VectorXd& fom_field,
                      const InnerProduct& ip) {
    const double ref = ip.norm(fom_field);
    if (ref == 0.0)
        throw std::domain_error("relative_error: zero-norm reference field");
    return ip.norm(rom_field - fom_field) / ref;
}

namespace {
double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}
}  // namespace

double gain(const std::vector<std::vector<double>>& errors_baseline,
            const std::vector<std::vector<double>>& errors_dd, GainKind kind,
            int* skipped) {
    if (errors_baseline.size() != errors_dd.size())
        throw std::invalid_argument("gain: sample sets must match");
    if (errors_baseline.empty()) throw std::invalid_argument("gain: empty sample set");
    int skip = 0;
    double acc = 0.0;
    int used = 0;
    for (std::size_t s = 0; s < errors_baseline.size(); ++s) {
        double eb, ed;
        if (kind == GainKind::Unsteady) {
            if (errors_baseline[s].empty() || errors_dd[s].empty())
                throw std::invalid_argument("gain: empty error series");
            eb = mean(errors_baseline[s]);
            ed = mean(errors_dd[s]);
        } else {
            if (errors_baseline[s].size() != 1 || errors_dd[s].size() != 1)
                throw std::invalid_argument("gain: steady kind expects one entry per sample");
            eb = errors_baseline[s][0];
            ed = errors_dd[s][0];
        }
        if (eb == 0.0) {
            ++skip;
            continue;
        }
        acc += (eb - ed) / eb;
        ++used;
    }
    if (skipped != nullptr) *skipped = skip;
    if (used == 0) throw std::domain_error("gain: every sample had zero baseline error");
    return acc / static_cast<double>(used);
}

Stats statistics_summary(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("statistics_summary: empty input");
    std::sort(values.begin(), values.end());
    Stats s;
    s.min = values.front();
    s.max = values.back();
    const std::size_t n = values.size();
    s.median = (n % 2 == 1) ? values[n / 2]
                            : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return s;
}

namespace {

bool in_window(double t, const std::optional<std::pair<double, double>>& window) {
    if (!window) return true;
    return t >= window->first - 1e-12 && t <= window->second + 1e-12;
}

}  // namespace

SeriesErrors trajectory_errors(const RomTrajectory& traj, const SnapshotSet& snaps,
                               int param, const PodBasis& ubasis, const PodBasis& pbasis,
                               const PodBasis& nutbasis, const net::ModelBundle* models,
                               std::optional<std::pair<double, double>> window) {
    SeriesErrors out;
    const int n = snaps.grid.cells();
    const double match_tol = 0.5 * traj.cfg.dt;
    for (std::size_t f = 0; f < snaps.frames.size(); ++f) {
        if (snaps.frame_param[f] != param) continue;
        const FieldFrame& frame = snaps.frames[f];
        if (!in_window(frame.t, window)) continue;
        const TrajectoryPoint* pt = nullptr;
        for (const auto& p : traj.points) {
            if (std::abs(p.t - frame.t) <= match_tol) {
                pt = &p;
                break;
            }
        }
        if (pt == nullptr) continue;

        VectorXd ufield = Eigen::Map<const VectorXd>(frame.u.data(), 2 * n);
        VectorXd pfield = Eigen::Map<const VectorXd>(frame.p.data(), n);
        VectorXd nutfield = Eigen::Map<const VectorXd>(frame.nut.data(), n);

        out.t.push_back(frame.t);
        out.u.push_back(relative_error(reconstruct(pt->a, ubasis), ufield, ubasis.ip));
        out.p.push_back(relative_error(reconstruct(pt->b, pbasis), pfield, pbasis.ip));
        if (models != nullptr) {
            VectorXd mu_full(1 + traj.mu_phys.size());
            mu_full[0] = pt->t;
            mu_full.tail(traj.mu_phys.size()) = traj.mu_phys;
            // Steady archives carry no time entry in mu.
            VectorXd mu_used = snaps.kind == SnapshotKind::Unsteady
                                   ? mu_full
                                   : VectorXd(traj.mu_phys);
            net::DeepOnetG::Workspace ws = models->g.make_workspace();
            const VectorXd az = models->norm_a.normalize(pt->a);
            const VectorXd mz = models->norm_mu.normalize(mu_used);
            VectorXd gz(models->g.n_out());
            models->g.forward(az.data(), mz.data(), ws, gz.data());
            const VectorXd g = models->norm_g.denormalize(gz);
            out.nut.push_back(
                relative_error(reconstruct(g, nutbasis), nutfield, nutbasis.ip));
        }
    }
    return out;
}

SeriesErrors projection_errors(const SnapshotSet& snaps, int param,
                               const PodBasis& ubasis, const PodBasis& pbasis,
                               const PodBasis& nutbasis, const OpDims& dims,
                               std::optional<std::pair<double, double>> window) {
    SeriesErrors out;
    const int n = snaps.grid.cells();
    for (std::size_t f = 0; f < snaps.frames.size(); ++f) {
        if (snaps.frame_param[f] != param) continue;
        const FieldFrame& frame = snaps.frames[f];
        if (!in_window(frame.t, window)) continue;
        VectorXd ufield = Eigen::Map<const VectorXd>(frame.u.data(), 2 * n);
        VectorXd pfield = Eigen::Map<const VectorXd>(frame.p.data(), n);
        VectorXd nutfield = Eigen::Map<const VectorXd>(frame.nut.data(), n);
        out.t.push_back(frame.t);
        out.u.push_back(relative_error(
            reconstruct(project(ufield, ubasis, dims.nu), ubasis), ufield, ubasis.ip));
        out.p.push_back(relative_error(
            reconstruct(project(pfield, pbasis, dims.np), pbasis), pfield, pbasis.ip));
        out.nut.push_back(relative_error(
            reconstruct(project(nutfield, nutbasis, dims.nnut), nutbasis), nutfield,
            nutbasis.ip));
    }
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string gains_csv(const std::vector<GainEntry>& entries) {
    std::string out = "regime,field,split,method,value\n";
    for (const auto& e : entries) {
        out += e.regime + "," + e.field + "," + e.split + "," + e.method + "," +
               format_double(e.value) + "\n";
    }
    return out;
}

std::vector<GainEntry> parse_gains_csv(const std::string& text) {
    std::vector<GainEntry> entries;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        GainEntry e;
        std::istringstream ls(line);
        std::string value;
        std::getline(ls, e.regime, ',');
        std::getline(ls, e.field, ',');
        std::getline(ls, e.split, ',');
        std::getline(ls, e.method, ',');
        std::getline(ls, value, ',');
        e.value = std::stod(value);
        entries.push_back(e);
    }
    return entries;
}

}  // namespace rom::metrics
