#include "rom/pod.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rom/io.hpp"

namespace rom {

using nlohmann::json;

std::string field_kind_name(FieldKind k) {
    switch (k) {
        case FieldKind::Velocity: return "u";
        case FieldKind::Pressure: return "p";
        case FieldKind::EddyViscosity: return "nut";
    }
    return "u";
}

FieldKind field_kind_from_name(const std::string& s) {
    if (s == "u") return FieldKind::Velocity;
    if (s == "p") return FieldKind::Pressure;
    if (s == "nut") return FieldKind::EddyViscosity;
    throw std::invalid_argument("unknown field kind: " + s);
}

std::uint64_t InnerProduct::checksum() const {
    return io::fnv1a64(weights.data(), weights.size() * sizeof(double));
}

double InnerProduct::dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    if (a.size() != b.size() || a.size() != static_cast<Eigen::Index>(weights.size()))
        throw std::invalid_argument("InnerProduct::dot: size mismatch");
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += a[i] * weights[i] * b[i];
    return s;
}

double InnerProduct::norm(const Eigen::VectorXd& a) const { return std::sqrt(dot(a, a)); }

InnerProduct mass_inner_product(const GridSpec& grid, FieldKind kind) {
    InnerProduct ip;
    const int n = grid.cells();
    if (kind == FieldKind::Velocity) {
        ip.weights.resize(2 * n);
        for (int c = 0; c < n; ++c) {
            ip.weights[c] = grid.cell_areas[c];
            ip.weights[n + c] = grid.cell_areas[c];
        }
    } else {
        ip.weights = grid.cell_areas;
    }
    return ip;
}

std::vector<double> mid_configuration(const std::vector<std::vector<double>>& params) {
    if (params.empty()) throw std::invalid_argument("mid_configuration: no parameters");
    std::vector<double> mid(params[0].size(), 0.0);
    for (const auto& p : params) {
        if (p.size() != mid.size())
            throw std::invalid_argument("mid_configuration: inconsistent parameter sizes");
        for (std::size_t k = 0; k < p.size(); ++k) mid[k] += p[k];
    }
    for (double& v : mid) v /= static_cast<double>(params.size());
    return mid;
}

InnerProduct snapshot_inner_product(const SnapshotSet& set, FieldKind kind) {
    if (set.kind == SnapshotKind::SteadyWithIntermediates ||
        set.kind == SnapshotKind::Steady) {
        const std::vector<double> mid = mid_configuration(set.params);
        const GridSpec mid_grid =
            build_grid(set.grid.nx, set.grid.ny, set.grid.lx, set.grid.ly, mid);
        return mass_inner_product(mid_grid, kind);
    }
    return mass_inner_product(set.grid, kind);
}

Eigen::MatrixXd snapshot_matrix(const SnapshotSet& set, FieldKind kind) {
    const int n = set.grid.cells();
    const int dof = (kind == FieldKind::Velocity) ? 2 * n : n;
    Eigen::MatrixXd s(dof, set.frames.size());
    for (std::size_t f = 0; f < set.frames.size(); ++f) {
        const std::vector<double>& src = (kind == FieldKind::Velocity) ? set.frames[f].u
                                         : (kind == FieldKind::Pressure)
                                             ? set.frames[f].p
                                             : set.frames[f].nut;
        for (int d = 0; d < dof; ++d) s(d, f) = src[d];
    }
    return s;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& snapshots,
                                   const InnerProduct& ip) {
    if (snapshots.rows() != static_cast<Eigen::Index>(ip.weights.size()))
        throw std::invalid_argument("correlation_matrix: dof/weight size mismatch");
    Eigen::MatrixXd weighted = snapshots;
    for (Eigen::Index r = 0; r < weighted.rows(); ++r) weighted.row(r) *= ip.weights[r];
    Eigen::MatrixXd k = snapshots.transpose() * weighted;
    // Symmetrize away the last-ulp asymmetry of the triple product.
    k = 0.5 * (k + k.transpose()).eval();
    return k;
}

PodBasis compute_basis(const Eigen::MatrixXd& correlation,
                       const Eigen::MatrixXd& snapshots, const InnerProduct& ip,
                       int rank, FieldKind kind) {
    const Eigen::Index m = correlation.rows();
    if (correlation.cols() != m)
        throw std::invalid_argument("compute_basis: correlation matrix not square");
    if (snapshots.cols() != m)
        throw std::invalid_argument("compute_basis: snapshot count mismatch");
    if (rank < 1 || rank > m)
        throw std::invalid_argument("compute_basis: rank out of range");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("compute_basis: eigendecomposition failed");

    // Ascending from Eigen; reorder to non-increasing.
    std::vector<double> lambda(m);
    Eigen::MatrixXd vecs(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        lambda[i] = eig.eigenvalues()[m - 1 - i];
        vecs.col(i) = eig.eigenvectors().col(m - 1 - i);
    }

    const double lmax = std::max(lambda.empty() ? 0.0 : lambda[0], 0.0);
    int numerical_rank = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (lambda[i] > 1e-13 * lmax && lambda[i] > 0.0) ++numerical_rank;
    }
    if (rank > numerical_rank) {
        std::ostringstream os;
        os << "compute_basis: requested rank " << rank
           << " exceeds numerical rank; achievable rank is " << numerical_rank;
        throw std::runtime_error(os.str());
    }

    PodBasis basis;
    basis.kind = kind;
    basis.ip = ip;
    basis.eigenvalues.assign(lambda.begin(), lambda.begin() + numerical_rank);
    basis.modes.resize(snapshots.rows(), rank);
    for (int i = 0; i < rank; ++i) {
        Eigen::VectorXd mode = snapshots * vecs.col(i);
        const double nrm = ip.norm(mode);
        if (nrm <= 0.0) throw std::runtime_error("compute_basis: zero mode norm");
        mode /= nrm;
        // Sign convention: largest-magnitude entry positive.
        Eigen::Index imax = 0;
        double vmax = 0.0;
        for (Eigen::Index d = 0; d < mode.size(); ++d) {
            if (std::abs(mode[d]) > vmax) {
                vmax = std::abs(mode[d]);
                imax = d;
            }
        }
        if (mode[imax] < 0.0) mode = -mode;
        basis.modes.col(i) = mode;
    }
    return basis;
}

EnergySpectrum energy_spectrum(const std::vector<double>& eigenvalues) {
    EnergySpectrum sp;
    double total = 0.0;
    for (double l : eigenvalues) total += std::max(l, 0.0);
    if (total <= 0.0) throw std::invalid_argument("energy_spectrum: zero total energy");
    double run = 0.0;
    sp.cumulative.reserve(eigenvalues.size());
    for (double l : eigenvalues) {
        run += std::max(l, 0.0);
        sp.cumulative.push_back(run / total);
    }
    sp.cumulative.back() = 1.0;
    return sp;
}

int select_modes_by_energy(const EnergySpectrum& spectrum, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw std::invalid_argument("select_modes_by_energy: threshold must be in (0,1]");
    for (std::size_t i = 0; i < spectrum.cumulative.size(); ++i) {
        if (spectrum.cumulative[i] >= threshold) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(spectrum.cumulative.size());
}

Eigen::VectorXd project(const Eigen::VectorXd& field, const PodBasis& basis, int n) {
    if (n < 0 || n > basis.rank())
        throw std::invalid_argument("project: n exceeds basis rank");
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a[i] = basis.ip.dot(field, basis.modes.col(i));
    return a;
}

Eigen::VectorXd reconstruct(const Eigen::VectorXd& coeffs, const PodBasis& basis) {
    if (coeffs.size() > basis.rank())
        throw std::invalid_argument("reconstruct: coefficient count exceeds basis rank");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(basis.modes.rows());
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) f += coeffs[i] * basis.modes.col(i);
    return f;
}

void save_basis(const PodBasis& basis, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json m;
    m["format_version"] = "1";
    m["field_kind"] = field_kind_name(basis.kind);
    m["rank"] = basis.rank();
    m["dof"] = basis.modes.rows();
    m["eigenvalues"] = basis.eigenvalues;
    m["inner_product_checksum"] = basis.ip.checksum();
    m["mean_subtracted"] = false;
    io::write_file(dir / "manifest.json", m.dump(2) + "\n");

    std::string buf;
    io::append_f64_le(buf, basis.ip.weights.data(), basis.ip.weights.size());
    io::write_file(dir / "weights.bin", buf);

    std::string modes;
    for (int i = 0; i < basis.rank(); ++i) {
        Eigen::VectorXd col = basis.modes.col(i);
        io::append_f64_le(modes, col.data(), col.size());
    }
    io::write_file(dir / "modes.bin", modes);
}

PodBasis load_basis(const std::filesystem::path& dir) {
    const json m = json::parse(io::read_file(dir / "manifest.json"));
    PodBasis basis;
    basis.kind = field_kind_from_name(m.at("field_kind").get<std::string>());
    const int rank = m.at("rank").get<int>();
    const Eigen::Index dof = m.at("dof").get<Eigen::Index>();
    basis.eigenvalues = m.at("eigenvalues").get<std::vector<double>>();

    const std::string wbuf = io::read_file(dir / "weights.bin");
    std::size_t off = 0;
    basis.ip.weights = io::read_f64_le(wbuf, off, static_cast<std::size_t>(dof));
    if (basis.ip.checksum() != m.at("inner_product_checksum").get<std::uint64_t>())
        throw std::runtime_error("load_basis: inner product checksum mismatch");

    const std::string mbuf = io::read_file(dir / "modes.bin");
    off = 0;
    basis.modes.resize(dof, rank);
    for (int i = 0; i < rank; ++i) {
        std::vector<double> col = io::read_f64_le(mbuf, off, static_cast<std::size_t>(dof));
        for (Eigen::Index d = 0; d < dof; ++d) basis.modes(d, i) = col[d];
    }
    return basis;
}

}  // namespace rom
