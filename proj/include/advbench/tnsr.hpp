#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "advbench/tensor.hpp"

namespace advbench {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// TNSR tensor file, bit-exact layout:
//   magic "TNSR" | u8 version=1 | u8 dtype (1=f32, 2=f64) | u8 rank
//   | rank x u32 little-endian dims | payload little-endian row-major

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline std::string tnsr_encode(const Tensor& t, bool as_f32 = false) {
    require(t.rank() <= 255, "tnsr: rank too large");
    std::string out;
    out.reserve(7 + 4 * t.rank() + t.numel() * (as_f32 ? 4 : 8));
    out += "TNSR";
    out.push_back(1);                    // version
    out.push_back(as_f32 ? 1 : 2);       // dtype
    out.push_back(static_cast<char>(t.rank()));
    for (std::size_t d : t.shape) {
        require(d <= UINT32_MAX, "tnsr: dimension too large");
        detail::put_u32_le(out, static_cast<std::uint32_t>(d));
    }
    for (double v : t.data) {
        if (as_f32) {
            float f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            detail::put_u32_le(out, bits);
        } else {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            detail::put_u64_le(out, bits);
        }
    }
    return out;
}

inline Tensor tnsr_decode(const std::string& bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    require(bytes.size() >= 7, "tnsr: truncated header");
    require(std::memcmp(p, "TNSR", 4) == 0, "tnsr: bad magic");
    require(p[4] == 1, "tnsr: unsupported version " + std::to_string(p[4]));
    int dtype = p[5];
    require(dtype == 1 || dtype == 2, "tnsr: unknown dtype " + std::to_string(dtype));
    std::size_t rank = p[6];
    require(bytes.size() >= 7 + 4 * rank, "tnsr: truncated dims");
    Shape shape(rank);
    std::size_t n = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        shape[i] = detail::get_u32_le(p + 7 + 4 * i);
        n *= shape[i];
    }
    std::size_t payload = 7 + 4 * rank;
    std::size_t elem = dtype == 1 ? 4 : 8;
    require(bytes.size() == payload + elem * n,
            "tnsr: payload size mismatch (" + std::to_string(bytes.size() - payload) + " bytes for " +
                std::to_string(n) + " elements)");
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (dtype == 1) {
            std::uint32_t bits = detail::get_u32_le(p + payload + 4 * i);
            float f;
            std::memcpy(&f, &bits, 4);
            data[i] = f;
        } else {
            std::uint64_t bits = detail::get_u64_le(p + payload + 8 * i);
            double d;
            std::memcpy(&d, &bits, 8);
            data[i] = d;
        }
    }
    return Tensor(std::move(shape), std::move(data));
}

inline void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(out.good(), "write failed: " + path.string());
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_tnsr(const fs::path& path, const Tensor& t, bool as_f32 = false) {
    write_file(path, tnsr_encode(t, as_f32));
}

inline Tensor read_tnsr(const fs::path& path) { return tnsr_decode(read_file(path)); }

/// Container: a directory of .tnsr files plus a manifest.json index with
/// free-form metadata.
inline void save_container(const fs::path& dir, const std::map<std::string, Tensor>& tensors,
                           const ordered_json& meta) {
    fs::create_directories(dir);
    ordered_json index;
    index["format"] = "tnsr-container";
    index["version"] = 1;
    ordered_json files = ordered_json::object();
    for (const auto& [name, t] : tensors) {
        std::string fname = name + ".tnsr";
        for (char& c : fname)
            if (c == '/' || c == '\\') c = '_';
        write_tnsr(dir / fname, t);
        files[name] = fname;
    }
    index["tensors"] = files;
    index["meta"] = meta;
    write_file(dir / "manifest.json", index.dump(2) + "\n");
}

struct Container {
    std::map<std::string, Tensor> tensors;
    ordered_json meta;
};

inline Container load_container(const fs::path& dir) {
    ordered_json index = ordered_json::parse(read_file(dir / "manifest.json"));
    require(index.value("format", "") == "tnsr-container", "container: bad manifest format field");
    Container c;
    for (const auto& [name, fname] : index.at("tensors").items())
        c.tensors.emplace(name, read_tnsr(dir / fname.get<std::string>()));
    c.meta = index.value("meta", ordered_json::object());
    return c;
}

}  // namespace advbench
