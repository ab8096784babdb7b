#include "affectreg/serialize.hpp"

#include "affectreg/digest.hpp"
#include "affectreg/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace affectreg {

namespace {

void append_le(std::string& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

std::uint64_t read_le(std::string_view bytes, std::size_t pos, int count) {
    std::uint64_t v = 0;
    for (int i = 0; i < count; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    return v;
}

} // namespace

void ByteWriter::u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
void ByteWriter::u32(std::uint32_t v) { append_le(buffer_, v, 4); }
void ByteWriter::u64(std::uint64_t v) { append_le(buffer_, v, 8); }

void ByteWriter::f64(double v) {
    static_assert(sizeof(double) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    append_le(buffer_, bits, 8);
}

void ByteWriter::f64_array(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
}

void ByteWriter::str(std::string_view v) {
    u32(static_cast<std::uint32_t>(v.size()));
    buffer_.append(v);
}

void ByteReader::need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
        throw ModelIoError("model payload truncated");
    }
}

std::uint8_t ByteReader::u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::uint32_t ByteReader::u32() {
    need(4);
    auto v = static_cast<std::uint32_t>(read_le(bytes_, pos_, 4));
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    auto v = read_le(bytes_, pos_, 8);
    pos_ += 8;
    return v;
}

double ByteReader::f64() {
    std::uint64_t bits = u64();
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::vector<double> ByteReader::f64_array() {
    std::uint64_t n = u64();
    need(8 * n);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
}

std::string ByteReader::str() {
    std::uint32_t n = u32();
    need(n);
    std::string v(bytes_.substr(pos_, n));
    pos_ += n;
    return v;
}

void write_container(const std::string& path, std::uint32_t type_tag, std::string_view payload) {
    std::string body;
    body.append(kContainerMagic, 4);
    append_le(body, kContainerVersion, 4);
    append_le(body, type_tag, 4);
    body.append(payload);
    std::uint64_t checksum = fnv1a64(body);
    append_le(body, checksum, 8);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelIoError("cannot open model file for writing: " + path);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw ModelIoError("write failed: " + path);
}

namespace {

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelIoError("cannot open model file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void check_header(std::string_view bytes, const std::string& path) {
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
        throw ModelIoError("not a model container: " + path);
    }
    std::uint32_t version = static_cast<std::uint32_t>(read_le(bytes, 4, 4));
    if (version != kContainerVersion) {
        throw ModelIoError("unsupported model format version " + std::to_string(version) + ": " + path);
    }
}

} // namespace

std::string read_container(const std::string& path, std::uint32_t expected_tag) {
    std::string bytes = read_file_bytes(path);
    check_header(bytes, path);
    std::uint64_t stored = read_le(bytes, bytes.size() - 8, 8);
    std::uint64_t actual = fnv1a64(bytes.data(), bytes.size() - 8);
    if (stored != actual) {
        throw ModelIoError("model checksum mismatch (corrupt file): " + path);
    }
    std::uint32_t tag = static_cast<std::uint32_t>(read_le(bytes, 8, 4));
    if (tag != expected_tag) {
        throw ModelIoError("unexpected model type tag " + std::to_string(tag) + " in " + path);
    }
    return bytes.substr(12, bytes.size() - 20);
}

std::uint32_t peek_container_tag(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    check_header(bytes, path);
    return static_cast<std::uint32_t>(read_le(bytes, 8, 4));
}

} // namespace affectreg
