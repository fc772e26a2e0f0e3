#include "rom/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rom::io {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + p.string());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw std::runtime_error("write failed: " + p.string());
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + p.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

namespace {
inline std::uint64_t to_le_bits(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    return bits;
}
inline double from_le_bits(std::uint64_t bits) {
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}
}  // namespace

void append_f64_le(std::string& buf, const double* v, std::size_t n) {
    const std::size_t base = buf.size();
    buf.resize(base + 8 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bits = to_le_bits(v[i]);
        std::memcpy(buf.data() + base + 8 * i, &bits, 8);
    }
}

std::vector<double> read_f64_le(const std::string& buf, std::size_t& offset, std::size_t n) {
    if (offset + 8 * n > buf.size())
        throw std::runtime_error("binary archive truncated");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, buf.data() + offset + 8 * i, 8);
        out[i] = from_le_bits(bits);
    }
    offset += 8 * n;
    return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const fs::path& p) {
    const std::string bytes = read_file(p);
    return fnv1a64(bytes.data(), bytes.size());
}

std::uint64_t fnv1a64_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::vector<std::string> rels;
    rels.reserve(files.size());
    for (const auto& f : files) rels.push_back(fs::relative(f, dir).generic_string());
    std::sort(rels.begin(), rels.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& r : rels) {
        const std::uint64_t hp = fnv1a64(r.data(), r.size());
        const std::uint64_t hf = fnv1a64_file(dir / r);
        h ^= hp;
        h *= 0x100000001b3ull;
        h ^= hf;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

const char kFrameMagic[4] = {'R', 'O', 'M', 'S'};

std::string kind_name(SnapshotKind k) {
    switch (k) {
        case SnapshotKind::Unsteady: return "unsteady";
        case SnapshotKind::Steady: return "steady";
        case SnapshotKind::SteadyWithIntermediates: return "steady-with-intermediates";
    }
    return "unsteady";
}

SnapshotKind kind_from_name(const std::string& s) {
    if (s == "unsteady") return SnapshotKind::Unsteady;
    if (s == "steady") return SnapshotKind::Steady;
    if (s == "steady-with-intermediates") return SnapshotKind::SteadyWithIntermediates;
    throw std::runtime_error("unknown snapshot kind: " + s);
}

std::string frame_name(std::size_t i) {
    std::ostringstream os;
    os << "frame_" << std::setw(6) << std::setfill('0') << i << ".bin";
    return os.str();
}

}  // namespace

void save_snapshots(const SnapshotSet& set, const fs::path& dir) {
    fs::create_directories(dir);
    json m;
    m["format_version"] = "1";
    m["kind"] = kind_name(set.kind);
    m["grid"] = {{"nx", set.grid.nx}, {"ny", set.grid.ny},
                 {"lx", set.grid.lx}, {"ly", set.grid.ly},
                 {"deformation", set.grid.deformation}};
    m["params"] = set.params;
    m["frame_param"] = set.frame_param;
    m["stride"] = set.stride;
    m["seed"] = set.seed;
    m["frame_count"] = set.frames.size();
    write_file(dir / "manifest.json", m.dump(2) + "\n");

    for (std::size_t i = 0; i < set.frames.size(); ++i) {
        const FieldFrame& f = set.frames[i];
        std::string buf;
        buf.append(kFrameMagic, 4);
        append_f64_le(buf, f.u.data(), f.u.size());
        append_f64_le(buf, f.p.data(), f.p.size());
        append_f64_le(buf, f.nut.data(), f.nut.size());
        append_f64_le(buf, &f.t, 1);
        append_f64_le(buf, f.mu.data(), f.mu.size());
        write_file(dir / frame_name(i), buf);
    }
}

SnapshotSet load_snapshots(const fs::path& dir) {
    const json m = json::parse(read_file(dir / "manifest.json"));
    if (m.at("format_version").get<std::string>() != "1")
        throw std::runtime_error("snapshot archive: unsupported format version");

    SnapshotSet set;
    set.kind = kind_from_name(m.at("kind").get<std::string>());
    const auto& g = m.at("grid");
    set.grid = build_grid(g.at("nx").get<int>(), g.at("ny").get<int>(),
                          g.at("lx").get<double>(), g.at("ly").get<double>(),
                          g.at("deformation").get<std::vector<double>>());
    set.params = m.at("params").get<std::vector<std::vector<double>>>();
    set.frame_param = m.at("frame_param").get<std::vector<int>>();
    set.stride = m.at("stride").get<int>();
    set.seed = m.at("seed").get<unsigned long long>();

    const std::size_t count = m.at("frame_count").get<std::size_t>();
    if (count != set.frame_param.size())
        throw std::runtime_error("snapshot archive: frame_param/frame_count mismatch");
    const std::size_t n = static_cast<std::size_t>(set.grid.cells());
    set.frames.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string buf = read_file(dir / frame_name(i));
        if (buf.size() < 4 || std::memcmp(buf.data(), kFrameMagic, 4) != 0)
            throw std::runtime_error("snapshot frame: bad magic bytes");
        std::size_t off = 4;
        FieldFrame f;
        f.u = read_f64_le(buf, off, 2 * n);
        f.p = read_f64_le(buf, off, n);
        f.nut = read_f64_le(buf, off, n);
        f.t = read_f64_le(buf, off, 1)[0];
        const int pi = set.frame_param[i];
        const std::size_t np = set.params.at(pi).size();
        f.mu = read_f64_le(buf, off, np);
        set.frames.push_back(std::move(f));
    }
    return set;
}

}  // namespace rom::io
