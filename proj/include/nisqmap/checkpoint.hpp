#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "nisqmap/errors.hpp"
#include "nisqmap/tensor.hpp"

namespace nisqmap {

/// Versioned binary container of named arrays and strings. Load fails
/// loudly on magic, version, name, or shape mismatches.
class Checkpoint {
public:
    static constexpr uint32_t kVersion = 1;

    std::map<std::string, ad::Tensor> arrays;
    std::map<std::string, std::string> strings;

    void put(const std::string& name, const ad::Tensor& t) { arrays[name] = t; }
    void put(const std::string& name, const std::string& s) { strings[name] = s; }

    bool has_array(const std::string& name) const { return arrays.count(name) > 0; }

    const ad::Tensor& array(const std::string& name, int rows, int cols) const {
        auto it = arrays.find(name);
        if (it == arrays.end()) throw ShapeError("checkpoint: missing array '" + name + "'");
        if (it->second.r != rows || it->second.c != cols)
            throw ShapeError("checkpoint: array '" + name + "' is " +
                             std::to_string(it->second.r) + "x" + std::to_string(it->second.c) +
                             ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
        return it->second;
    }

    const std::string& text(const std::string& name) const {
        auto it = strings.find(name);
        if (it == strings.end()) throw ShapeError("checkpoint: missing string '" + name + "'");
        return it->second;
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open checkpoint for write: " + path);
        f.write("NMC1", 4);
        write_u32(f, kVersion);
        write_u64(f, arrays.size() + strings.size());
        for (const auto& [name, t] : arrays) {
            write_name(f, name);
            f.put(0);
            write_u64(f, static_cast<uint64_t>(t.r));
            write_u64(f, static_cast<uint64_t>(t.c));
            f.write(reinterpret_cast<const char*>(t.d.data()),
                    static_cast<std::streamsize>(t.d.size() * sizeof(double)));
        }
        for (const auto& [name, s] : strings) {
            write_name(f, name);
            f.put(1);
            write_u64(f, s.size());
            f.write(s.data(), static_cast<std::streamsize>(s.size()));
        }
        if (!f) throw IoError("failed writing checkpoint: " + path);
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open checkpoint for read: " + path);
        char magic[4];
        f.read(magic, 4);
        if (!f || std::memcmp(magic, "NMC1", 4) != 0)
            throw IoError("not a checkpoint file: " + path);
        uint32_t version = read_u32(f);
        if (version != kVersion)
            throw IoError("unsupported checkpoint version " + std::to_string(version));
        uint64_t count = read_u64(f);
        Checkpoint ck;
        for (uint64_t i = 0; i < count; ++i) {
            std::string name = read_name(f);
            int kind = f.get();
            if (kind == 0) {
                uint64_t rows = read_u64(f), cols = read_u64(f);
                ad::Tensor t(static_cast<int>(rows), static_cast<int>(cols));
                f.read(reinterpret_cast<char*>(t.d.data()),
                       static_cast<std::streamsize>(t.d.size() * sizeof(double)));
                ck.arrays.emplace(std::move(name), std::move(t));
            } else if (kind == 1) {
                uint64_t len = read_u64(f);
                std::string s(len, '\0');
                f.read(s.data(), static_cast<std::streamsize>(len));
                ck.strings.emplace(std::move(name), std::move(s));
            } else {
                throw IoError("corrupt checkpoint entry kind");
            }
            if (!f) throw IoError("truncated checkpoint: " + path);
        }
        return ck;
    }

    /// Store parameter values plus Adam moments under a section prefix.
    void put_params(const std::string& prefix, const std::vector<ad::Param*>& params) {
        for (const ad::Param* p : params) {
            put(prefix + "/" + p->name, p->value);
            put(prefix + "/opt/" + p->name + "/m", p->m);
            put(prefix + "/opt/" + p->name + "/v", p->v);
        }
    }

    void load_params(const std::string& prefix, const std::vector<ad::Param*>& params) const {
        for (ad::Param* p : params) {
            p->value = array(prefix + "/" + p->name, p->value.r, p->value.c);
            p->m = array(prefix + "/opt/" + p->name + "/m", p->m.r, p->m.c);
            p->v = array(prefix + "/opt/" + p->name + "/v", p->v.r, p->v.c);
        }
    }

private:
    static void write_u32(std::ofstream& f, uint32_t v) {
        f.write(reinterpret_cast<const char*>(&v), 4);
    }
    static void write_u64(std::ofstream& f, uint64_t v) {
        f.write(reinterpret_cast<const char*>(&v), 8);
    }
    static void write_name(std::ofstream& f, const std::string& name) {
        write_u32(f, static_cast<uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    static uint32_t read_u32(std::ifstream& f) {
        uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    }
    static uint64_t read_u64(std::ifstream& f) {
        uint64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    }
    static std::string read_name(std::ifstream& f) {
        uint32_t len = read_u32(f);
        std::string s(len, '\0');
        f.read(s.data(), len);
        return s;
    }
};

}  // namespace nisqmap
