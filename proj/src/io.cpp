#include "bcn/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace bcn {

namespace {

constexpr char kMagic[8] = {'B', 'C', 'N', 'F', 'I', 'L', 'E', '1'};

static_assert(std::endian::native == std::endian::little,
              "artifact files are little-endian; big-endian hosts need byte swaps");

void put_u64(std::ostream& os, std::uint64_t v)
{
    os.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint64_t get_u64(std::istream& is, const std::string& path)
{
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) {
        throw Error(ErrorKind::ParseError, path + ": truncated header");
    }
    return v;
}

} // namespace

void write_container(const std::string& path, const Container& c)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw Error(ErrorKind::InvalidInput, "cannot open for writing: " + path);
    }
    os.write(kMagic, 8);
    put_u64(os, c.text.size());
    os.write(c.text.data(), static_cast<std::streamsize>(c.text.size()));
    put_u64(os, c.blob.size());
    os.write(reinterpret_cast<const char*>(c.blob.data()),
             static_cast<std::streamsize>(c.blob.size()));
    if (!os) {
        throw Error(ErrorKind::InvalidInput, "write failed: " + path);
    }
}

Container read_container(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw Error(ErrorKind::ParseError, "cannot open: " + path);
    }
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw Error(ErrorKind::ParseError, path + ": bad magic (byte 0)");
    }
    Container c;
    const std::uint64_t text_len = get_u64(is, path);
    c.text.resize(text_len);
    if (!is.read(c.text.data(), static_cast<std::streamsize>(text_len))) {
        throw Error(ErrorKind::ParseError, path + ": truncated text section at byte 16");
    }
    const std::uint64_t blob_len = get_u64(is, path);
    c.blob.resize(blob_len);
    if (!is.read(reinterpret_cast<char*>(c.blob.data()),
                 static_cast<std::streamsize>(blob_len))) {
        throw Error(ErrorKind::ParseError,
                    path + ": truncated blob section at byte " +
                        std::to_string(24 + text_len));
    }
    return c;
}

void append_doubles(std::vector<std::uint8_t>& blob, const double* p, std::size_t n)
{
    const std::size_t old = blob.size();
    blob.resize(old + n * sizeof(double));
    std::memcpy(blob.data() + old, p, n * sizeof(double));
}

void append_doubles(std::vector<std::uint8_t>& blob, const Vec& v)
{
    append_doubles(blob, v.data(), v.size());
}

Vec read_doubles(const std::vector<std::uint8_t>& blob, std::size_t& offset, std::size_t n)
{
    if (offset + n * sizeof(double) > blob.size()) {
        throw Error(ErrorKind::ParseError,
                    "blob overrun at offset " + std::to_string(offset));
    }
    Vec out(n);
    std::memcpy(out.data(), blob.data() + offset, n * sizeof(double));
    offset += n * sizeof(double);
    return out;
}

} // namespace bcn
