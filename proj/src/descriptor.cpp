#include "descriptor.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "splat6d/error.hpp"

namespace splat6d::detail {

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_reals(const std::string& key, const std::string& value, std::size_t n) {
    std::istringstream in(value);
    std::vector<double> out;
    double x;
    while (in >> x) out.push_back(x);
    if (!in.eof() || out.size() != n) {
        throw Error(ErrorCode::MalformedFile, "descriptor key '" + key + "' expects " +
                                                  std::to_string(n) + " numbers");
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

fs::path base_of(const fs::path& p) {
    if (p.extension() == ".meta" || p.extension() == ".raw") {
        fs::path b = p;
        b.replace_extension();
        return b;
    }
    return p;
}

fs::path meta_path(const fs::path& base) {
    fs::path p = base_of(base);
    p += ".meta";
    return p;
}

fs::path raw_path(const fs::path& base) {
    fs::path p = base_of(base);
    p += ".raw";
    return p;
}

Descriptor read_descriptor(const fs::path& path) {
    std::ifstream meta(meta_path(path));
    if (!meta) throw Error(ErrorCode::Io, "cannot open " + meta_path(path).string());

    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(meta, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::MalformedFile, "descriptor line without '=': " + line);
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    Descriptor out;
    auto take = [&](const char* key, std::size_t n) {
        auto it = kv.find(key);
        if (it == kv.end()) throw Error(ErrorCode::MalformedFile, std::string("missing key ") + key);
        auto v = parse_reals(key, it->second, n);
        kv.erase(it);
        return v;
    };
    const auto dims = take("dims", 3);
    const auto spacing = take("spacing", 3);
    const auto origin = take("origin", 3);
    const auto dir = take("direction", 9);
    for (int a = 0; a < 3; ++a) {
        if (dims[a] != std::floor(dims[a]) || dims[a] < 1 || dims[a] > (1 << 20)) {
            throw Error(ErrorCode::MalformedFile, "dims must be positive integers");
        }
        out.geometry.dims[a] = static_cast<int>(dims[a]);
        out.geometry.spacing[a] = spacing[a];
        out.geometry.origin[a] = origin[a];
    }
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.geometry.direction(r, c) = dir[3 * r + c];
    try {
        out.geometry.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedFile, e.what());
    }
    out.extra = std::move(kv);
    return out;
}

void write_descriptor(const fs::path& path, const Descriptor& d) {
    const auto& g = d.geometry;
    std::ofstream meta(meta_path(path));
    if (!meta) throw Error(ErrorCode::Io, "cannot write " + meta_path(path).string());
    meta.precision(17);
    meta << "dims = " << g.dims[0] << ' ' << g.dims[1] << ' ' << g.dims[2] << '\n';
    meta << "spacing = " << g.spacing[0] << ' ' << g.spacing[1] << ' ' << g.spacing[2] << '\n';
    meta << "origin = " << g.origin[0] << ' ' << g.origin[1] << ' ' << g.origin[2] << '\n';
    meta << "direction =";
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) meta << ' ' << g.direction(r, c);
    meta << '\n';
    for (const auto& [k, v] : d.extra) meta << k << " = " << v << '\n';
    if (!meta) throw Error(ErrorCode::Io, "write failed on " + meta_path(path).string());
}

std::vector<char> read_payload(const fs::path& path, std::size_t expected_bytes) {
    const fs::path p = raw_path(path);
    std::ifstream raw(p, std::ios::binary);
    if (!raw) throw Error(ErrorCode::Io, "cannot open " + p.string());
    raw.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(raw.tellg());
    raw.seekg(0);
    if (bytes != expected_bytes) {
        throw Error(ErrorCode::SizeMismatch, "payload has " + std::to_string(bytes) +
                                                 " bytes, descriptor implies " +
                                                 std::to_string(expected_bytes));
    }
    std::vector<char> buf(bytes);
    raw.read(buf.data(), static_cast<std::streamsize>(bytes));
    if (!raw) throw Error(ErrorCode::Io, "short read on " + p.string());
    return buf;
}

void write_payload(const fs::path& path, const void* data, std::size_t bytes) {
    const fs::path p = raw_path(path);
    std::ofstream raw(p, std::ios::binary);
    if (!raw) throw Error(ErrorCode::Io, "cannot write " + p.string());
    raw.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!raw) throw Error(ErrorCode::Io, "write failed on " + p.string());
}

}  // namespace splat6d::detail
