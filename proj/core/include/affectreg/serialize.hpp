#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace affectreg {

// Versioned binary container shared by all model files.
// Layout: 4 magic bytes "AFMF", u32 format version, u32 payload type tag,
// payload bytes, then a trailing FNV-1a 64 checksum over everything before
// it. All integers and doubles are little-endian; doubles are IEEE-754
// binary64.

inline constexpr char kContainerMagic[4] = {'A', 'F', 'M', 'F'};
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::uint32_t kFfnModelTag = 1;
inline constexpr std::uint32_t kSvrModelTag = 2;

class ByteWriter {
public:
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_array(const std::vector<double>& v); // length-prefixed
    void str(std::string_view v);                 // length-prefixed UTF-8

    const std::string& bytes() const { return buffer_; }

private:
    std::string buffer_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::vector<double> f64_array();
    std::string str();

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const;

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

// Wraps payload in the container and writes it to path.
void write_container(const std::string& path, std::uint32_t type_tag, std::string_view payload);

// Verifies magic, version, and checksum; returns the payload.
// Throws ModelIoError when the expected tag does not match.
std::string read_container(const std::string& path, std::uint32_t expected_tag);

// Reads only the type tag, for dispatching mixed model directories.
std::uint32_t peek_container_tag(const std::string& path);

} // namespace affectreg
