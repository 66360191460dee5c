// Byte-level helpers shared by the index writer and reader.
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

namespace mathfind::storage {

inline void put_varint(std::string& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<char>((v & 0x7F) | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<char>(v));
}

template <typename T>
void put_fixed(std::string& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));  // little-endian hosts only
    out.append(buf, sizeof(T));
}

inline void put_bytes(std::string& out, std::string_view s) {
    put_varint(out, s.size());
    out.append(s);
}

/// Bounds-checked reader over a byte range. Every decode error throws
/// IndexCorrupt with `context`.
class Cursor {
public:
    Cursor(std::string_view data, const char* context) : data_(data), context_(context) {}

    std::uint64_t varint();
    template <typename T>
    T fixed() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::string_view prefixed_bytes() { return bytes(static_cast<std::size_t>(varint())); }
    void skip(std::size_t n) { bytes(n); }
    bool at_end() const { return pos_ >= data_.size(); }
    std::size_t position() const { return pos_; }

    [[noreturn]] void corrupt(const std::string& what) const;

private:
    void need(std::size_t n) const {
        if (n > data_.size() - pos_) corrupt("truncated data");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    const char* context_;
};

std::uint32_t crc32(std::string_view data);

/// Read-only memory map of a whole file.
class MappedFile {
public:
    MappedFile() = default;
    explicit MappedFile(const std::filesystem::path& path);
    MappedFile(MappedFile&& other) noexcept { swap(other); }
    MappedFile& operator=(MappedFile&& other) noexcept {
        MappedFile tmp(std::move(other));
        swap(tmp);
        return *this;
    }
    MappedFile(const MappedFile&) = delete;
    MappedFile& operator=(const MappedFile&) = delete;
    ~MappedFile();

    std::string_view view() const { return {data_, size_}; }

private:
    void swap(MappedFile& o) noexcept {
        std::swap(data_, o.data_);
        std::swap(size_, o.size_);
    }
    const char* data_ = nullptr;
    std::size_t size_ = 0;
};

/// Reads a whole file. Throws IoFailure.
std::string read_file(const std::filesystem::path& path);

}  // namespace mathfind::storage
