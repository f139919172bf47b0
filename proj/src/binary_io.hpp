#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "splat6d/error.hpp"

namespace splat6d::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    }
    template <typename T>
    void put(const T& value) {
        static_assert(std::is_trivially_copyable_v<T>);
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }
    void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
    void finish(const std::string& path) {
        out_.flush();
        if (!out_) throw Error(ErrorCode::Io, "write failed: " + path);
    }

private:
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
        buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        T value;
        bytes(&value, sizeof(T));
        return value;
    }
    void bytes(void* dst, std::size_t n) {
        if (remaining() < n) throw Error(ErrorCode::MalformedFile, "truncated file: " + path_);
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    std::string path_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

}  // namespace splat6d::detail
