#pragma once

#include "bcn/error.hpp"
#include "bcn/numerics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bcn {

// On-disk container shared by all binary artifacts (corpus, vocabulary,
// supervision cache, checkpoints):
//
//   bytes 0..7   magic "BCNFILE1"
//   bytes 8..15  text section length, u64 little-endian
//   ...          text section (JSON or JSONL, UTF-8)
//   8 bytes      blob length, u64 little-endian
//   ...          blob (payload-defined, doubles are f64 little-endian)
struct Container {
    std::string text;
    std::vector<std::uint8_t> blob;
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

// f64 little-endian packing for the blob section.
void append_doubles(std::vector<std::uint8_t>& blob, const double* p, std::size_t n);
void append_doubles(std::vector<std::uint8_t>& blob, const Vec& v);
// Reads n doubles starting at byte offset, advancing it. ParseError on overrun.
Vec read_doubles(const std::vector<std::uint8_t>& blob, std::size_t& offset, std::size_t n);

} // namespace bcn
