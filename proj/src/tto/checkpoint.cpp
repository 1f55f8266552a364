#include "ttosim/tto/checkpoint.hpp"

#include <cstring>
#include <istream>
#include <ostream>

namespace ttosim::tto {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'O', 'S'};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CheckpointError("checkpoint: unexpected end of data");
    return v;
}

} // namespace

void write_state(std::ostream& out, const TTOState& s) {
    out.write(kMagic, 4);
    put(out, kCheckpointVersion);
    put(out, static_cast<std::int32_t>(s.n_sites()));
    put(out, static_cast<std::int32_t>(s.local_dim()));
    put(out, static_cast<std::int32_t>(s.topology().n_nodes()));
    put(out, static_cast<std::int32_t>(s.gauge_center()));
    put(out, s.cumulative_truncation());
    for (int n = 0; n < s.topology().n_nodes(); ++n) {
        const DenseTensor& t = s.tensor(n);
        put(out, static_cast<std::uint32_t>(t.rank()));
        for (const auto& l : t.legs()) {
            put(out, static_cast<std::uint32_t>(l.label.size()));
            out.write(l.label.data(), static_cast<std::streamsize>(l.label.size()));
            put(out, static_cast<std::int64_t>(l.dim));
        }
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.data().size() * sizeof(cplx)));
    }
    if (!out) throw CheckpointError("checkpoint: write failed");
}

TTOState read_state(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("checkpoint: not a TTO state file");
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    const int sites = get<std::int32_t>(in);
    const int d = get<std::int32_t>(in);
    const int nodes = get<std::int32_t>(in);
    const int center = get<std::int32_t>(in);
    const double trunc = get<double>(in);
    if (sites < 1 || sites > 64 || d < 1) throw CheckpointError("checkpoint: corrupt header");
    TreeTopology topo(sites);
    if (nodes != topo.n_nodes()) throw CheckpointError("checkpoint: node count does not match the tree");
    std::vector<DenseTensor> tensors;
    for (int n = 0; n < nodes; ++n) {
        const auto rank = get<std::uint32_t>(in);
        if (rank > 8) throw CheckpointError("checkpoint: corrupt tensor rank");
        std::vector<linalg::Leg> legs;
        std::size_t size = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const auto len = get<std::uint32_t>(in);
            if (len > 256) throw CheckpointError("checkpoint: corrupt leg label");
            std::string label(len, '\0');
            in.read(label.data(), len);
            const auto dim = get<std::int64_t>(in);
            if (dim < 1 || dim > (std::int64_t{1} << 32)) throw CheckpointError("checkpoint: corrupt leg dimension");
            size *= static_cast<std::size_t>(dim);
            legs.push_back({std::move(label), static_cast<Index>(dim)});
        }
        std::vector<cplx> data(size);
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size * sizeof(cplx)));
        if (!in) throw CheckpointError("checkpoint: truncated tensor data");
        tensors.emplace_back(std::move(legs), std::move(data));
    }
    TTOState s(std::move(topo), d, std::move(tensors), center);
    s.set_cumulative_truncation(trunc);
    return s;
}

} // namespace ttosim::tto
