#include "moyal/snapshot.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace moyal {

namespace {
constexpr char kMagic[8] = {'M', 'S', 'Q', 'S', 'N', 'A', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("snapshot: truncated file");
    return v;
}
} // namespace

void write_snapshot(const std::string& path, const Snapshot& snap, const ModelParams& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("snapshot: cannot open '" + path + "' for writing");
    f.write(kMagic, sizeof(kMagic));
    put(f, kVersion);
    put(f, static_cast<std::uint32_t>(snap.cutoff));
    put(f, snap.t);
    put(f, static_cast<std::uint32_t>(snap.fields.size()));
    const int dim = snap.cutoff + 1;
    for (const auto& [name, mat] : snap.fields) {
        char tag[16] = {};
        std::strncpy(tag, name.c_str(), sizeof(tag) - 1);
        f.write(tag, sizeof(tag));
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) {
                float re = static_cast<float>(mat(m, n).real());
                float im = static_cast<float>(mat(m, n).imag());
                put(f, re);
                put(f, im);
            }
    }

    nlohmann::json j;
    j["format"] = "msqsnap";
    j["version"] = kVersion;
    j["t"] = snap.t;
    j["cutoff"] = snap.cutoff;
    j["entry_type"] = "complex64";
    for (const auto& [name, mat] : snap.fields) j["fields"].push_back(name);
    j["params"] = {{"theta", params.theta}, {"mass_sq", params.mass_sq},
                   {"lambda", params.lambda}, {"cutoff", params.cutoff},
                   {"eps", params.eps}, {"eps_prime", params.eps_prime},
                   {"dt", params.dt}, {"seed", params.seed}};
    std::ofstream sf(path + ".json");
    sf << j.dump(2) << "\n";
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("snapshot: cannot open '" + path + "'");
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("snapshot: bad magic in '" + path + "'");
    auto version = get<std::uint32_t>(f);
    if (version != kVersion) throw std::runtime_error("snapshot: unsupported version");
    Snapshot snap;
    snap.cutoff = static_cast<int>(get<std::uint32_t>(f));
    snap.t = get<double>(f);
    auto n_fields = get<std::uint32_t>(f);
    const int dim = snap.cutoff + 1;
    for (std::uint32_t i = 0; i < n_fields; ++i) {
        char tag[17] = {};
        f.read(tag, 16);
        CMatrix mat(dim, dim);
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) {
                float re = get<float>(f);
                float im = get<float>(f);
                mat(m, n) = Complex(re, im);
            }
        snap.fields.emplace_back(tag, std::move(mat));
    }
    return snap;
}

} // namespace moyal
