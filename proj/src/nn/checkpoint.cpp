#include "pamrecon/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "pamrecon/errors.hpp"

namespace pam::nn {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw FormatError("checkpoint truncated");
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
           (std::uint32_t{b[3]} << 24);
}

std::uint64_t get_u64(std::istream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

} // namespace

void write_checkpoint(std::ostream& out, const Model<float>& model) {
    const ModelConfig& cfg = model.config();
    out.write(kCheckpointMagic, 8);
    put_u32(out, kCheckpointVersion);
    put_u32(out, cfg.architecture == Architecture::fd_unet ? 0u : 1u);
    put_u32(out, static_cast<std::uint32_t>(cfg.depth));
    put_u32(out, static_cast<std::uint32_t>(cfg.base_filters));
    put_u32(out, static_cast<std::uint32_t>(cfg.dense_layers));
    put_u64(out, std::bit_cast<std::uint64_t>(cfg.bn_momentum));
    put_u64(out, std::bit_cast<std::uint64_t>(cfg.bn_epsilon));

    const auto& params = model.parameters();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const Param<float>* p : params) {
        put_u32(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        put_u32(out, static_cast<std::uint32_t>(p->dims.size()));
        for (int d : p->dims)
            put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : p->value)
            put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out)
        throw FormatError("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot write checkpoint " + path.string());
    write_checkpoint(out, model);
}

Model<float> read_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw FormatError("not a checkpoint: bad magic (expected PAMCKPT1)");
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));

    ModelConfig cfg;
    const std::uint32_t arch = get_u32(in);
    if (arch > 1)
        throw FormatError("checkpoint: unknown architecture code " + std::to_string(arch));
    cfg.architecture = arch == 0 ? Architecture::fd_unet : Architecture::unet;
    cfg.depth = static_cast<int>(get_u32(in));
    cfg.base_filters = static_cast<int>(get_u32(in));
    cfg.dense_layers = static_cast<int>(get_u32(in));
    cfg.bn_momentum = std::bit_cast<double>(get_u64(in));
    cfg.bn_epsilon = std::bit_cast<double>(get_u64(in));
    try {
        validate(cfg);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: invalid model config: ") + e.what());
    }

    Model<float> model(cfg, 0);
    std::map<std::string, Param<float>*> by_name;
    for (Param<float>* p : model.parameters())
        by_name[p->name] = p;

    const std::uint32_t count = get_u32(in);
    if (count != by_name.size())
        throw FormatError("checkpoint: " + std::to_string(count) + " records, architecture needs " +
                          std::to_string(by_name.size()));
    for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint32_t len = get_u32(in);
        if (len > 4096)
            throw FormatError("checkpoint: implausible record name length");
        std::string name(len, '\0');
        if (!in.read(name.data(), len))
            throw FormatError("checkpoint truncated");
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw FormatError("checkpoint: unexpected record '" + name + "'");
        Param<float>& p = *it->second;
        const std::uint32_t ndims = get_u32(in);
        std::vector<int> dims(ndims);
        for (auto& d : dims)
            d = static_cast<int>(get_u32(in));
        if (dims != p.dims)
            throw FormatError("checkpoint: shape mismatch for '" + name + "'");
        for (auto& v : p.value)
            v = std::bit_cast<float>(get_u32(in));
        by_name.erase(it);
    }
    return model;
}

Model<float> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

} // namespace pam::nn
