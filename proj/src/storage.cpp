#include "storage.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <fstream>
#include <sstream>

#include "mathfind/error.hpp"

namespace mathfind::storage {

std::uint64_t Cursor::varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        need(1);
        auto byte = static_cast<unsigned char>(data_[pos_++]);
        v |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
        if (!(byte & 0x80)) return v;
    }
    corrupt("varint too long");
}

void Cursor::corrupt(const std::string& what) const {
    throw IndexCorrupt(std::string(context_) + ": " + what + " at byte " + std::to_string(pos_));
}

std::uint32_t crc32(std::string_view data) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large inputs in chunks.
    constexpr std::size_t kChunk = 1u << 30;
    for (std::size_t off = 0; off < data.size(); off += kChunk) {
        auto n = static_cast<uInt>(std::min(kChunk, data.size() - off));
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data() + off), n);
    }
    return static_cast<std::uint32_t>(crc);
}

MappedFile::MappedFile(const std::filesystem::path& path) {
    int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) throw IoFailure("cannot open " + path.string() + ": " + std::strerror(errno));
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
        ::close(fd);
        throw IoFailure("cannot stat " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
        void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd, 0);
        if (p == MAP_FAILED) {
            ::close(fd);
            throw IoFailure("cannot map " + path.string());
        }
        data_ = static_cast<const char*>(p);
    }
    ::close(fd);
}

MappedFile::~MappedFile() {
    if (data_) ::munmap(const_cast<char*>(data_), size_);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

}  // namespace mathfind::storage
