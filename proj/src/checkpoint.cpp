#include "gmvae/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace gmvae {

namespace {

constexpr char kMagic[8] = {'G', 'M', 'V', 'A', 'E', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct Reader {
    std::ifstream in;
    std::string path;

    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw CheckpointError("cannot open checkpoint: " + p);
    }

    void bytes(char* dst, std::size_t n) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n)) {
            throw CheckpointError(path + ": truncated checkpoint");
        }
    }

    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        bytes(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const GMVAE& model) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw CheckpointError("cannot write checkpoint: " + tmp);
        const auto& cfg = model.config();

        out.write(kMagic, 8);
        put_u32(out, kVersion);
        put_u32(out, static_cast<std::uint32_t>(cfg.k));
        put_u32(out, static_cast<std::uint32_t>(cfg.x_dim));
        put_u32(out, static_cast<std::uint32_t>(cfg.z_dim));
        put_u32(out, static_cast<std::uint32_t>(cfg.hidden_shared));
        put_u32(out, static_cast<std::uint32_t>(cfg.hidden_y[0]));
        put_u32(out, static_cast<std::uint32_t>(cfg.hidden_y[1]));
        put_u32(out, static_cast<std::uint32_t>(cfg.hidden_z[0]));
        put_u32(out, static_cast<std::uint32_t>(cfg.hidden_z[1]));
        put_u32(out, static_cast<std::uint32_t>(cfg.hidden_decoder.size()));
        for (auto w : cfg.hidden_decoder) put_u32(out, static_cast<std::uint32_t>(w));
        out.put(cfg.likelihood == Likelihood::bernoulli ? 0 : 1);
        out.put(cfg.decoder_concat_y ? 1 : 0);
        put_f64(out, cfg.temperature);

        put_u32(out, static_cast<std::uint32_t>(model.parameters().size()));
        for (const auto& p : model.parameters()) {
            put_u32(out, static_cast<std::uint32_t>(p.name.size()));
            out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
            put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
            for (auto e : p.value.shape()) put_u64(out, e);
            for (double v : p.value.data()) put_f64(out, v);
        }
        if (!out) throw CheckpointError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

GMVAE load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw CheckpointError(path + ": not a checkpoint file");
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw CheckpointError(path + ": unsupported checkpoint version " + std::to_string(version));
    }

    GMVAEConfig cfg;
    cfg.k = r.u32();
    cfg.x_dim = r.u32();
    cfg.z_dim = r.u32();
    cfg.hidden_shared = r.u32();
    cfg.hidden_y = {r.u32(), r.u32()};
    cfg.hidden_z = {r.u32(), r.u32()};
    cfg.hidden_decoder.clear();
    const std::uint32_t n_dec = r.u32();
    for (std::uint32_t i = 0; i < n_dec; ++i) cfg.hidden_decoder.push_back(r.u32());
    char flags[2];
    r.bytes(flags, 2);
    cfg.likelihood = flags[0] == 0 ? Likelihood::bernoulli : Likelihood::diag_gaussian;
    cfg.decoder_concat_y = flags[1] != 0;
    cfg.temperature = r.f64();

    GMVAE model(cfg, 0);
    const std::uint32_t n_params = r.u32();
    if (n_params != model.parameters().size()) {
        throw CheckpointError(path + ": parameter count mismatch (" + std::to_string(n_params) + " stored, " +
                              std::to_string(model.parameters().size()) + " expected)");
    }
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name(name_len, '\0');
        r.bytes(name.data(), name_len);
        const std::uint32_t rank = r.u32();
        Shape shape;
        for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.u64());
        Parameter* p = model.find_parameter(name);
        if (!p) throw CheckpointError(path + ": unknown parameter '" + name + "'");
        if (p->value.shape() != shape) {
            throw CheckpointError(path + ": shape mismatch for '" + name + "': stored " + shape_str(shape) +
                                  ", expected " + shape_str(p->value.shape()));
        }
        for (auto& v : p->value.data()) v = r.f64();
    }
    return model;
}

}  // namespace gmvae
