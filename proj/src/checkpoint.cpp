#include "semcom/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace semcom::ckpt {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'U', 'T'};

void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    if (!is) throw std::runtime_error("checkpoint truncated");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    put_u32(os, kFormatVersion);
    put_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.name.size() > 0xFFFF) throw std::runtime_error("tensor name too long: " + t.name);
        if (t.dims.size() > 0xFF) throw std::runtime_error("tensor rank too large: " + t.name);
        std::size_t n = 1;
        for (auto d : t.dims) n *= d;
        if (n != t.data.size())
            throw std::runtime_error("tensor '" + t.name + "' dims do not match payload size");
        put_u16(os, static_cast<std::uint16_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        os.put(static_cast<char>(t.dims.size()));
        for (auto d : t.dims) put_u32(os, d);
        // float32 little-endian payload; this build targets little-endian hosts.
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("write failure on checkpoint: " + path);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);
    const std::uint32_t version = get_u32(is);
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t count = get_u32(is);
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const std::uint16_t name_len = get_u16(is);
        t.name.resize(name_len);
        is.read(t.name.data(), name_len);
        const int rank = is.get();
        if (rank < 0) throw std::runtime_error("checkpoint truncated");
        t.dims.resize(static_cast<std::size_t>(rank));
        std::size_t n = 1;
        for (auto& d : t.dims) {
            d = get_u32(is);
            n *= d;
        }
        t.data.resize(n);
        is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(n * sizeof(float)));
        if (!is) throw std::runtime_error("checkpoint truncated while reading tensor '" + t.name + "'");
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace semcom::ckpt
