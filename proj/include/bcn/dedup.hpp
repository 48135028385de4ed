#pragma once

#include "bcn/numerics.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bcn {

struct Frame {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels; // row-major grayscale
};

struct Clip {
    std::string id;
    std::vector<Frame> frames;
};

struct FrameHash {
    std::uint64_t code = 0;
};

// 8-neighborhood census mask per interior pixel, bit order clockwise from
// top-left (TL bit 7 ... L bit 0), concatenated row-major.
std::vector<std::uint8_t> census_transform(const Frame& frame);

// 64 Gaussian hyperplanes per descriptor bit length, generated lazily so
// clips of different sizes can share one seeded set.
class LshPlaneSet {
public:
    explicit LshPlaneSet(std::uint64_t seed) : seed_(seed) {}
    const DenseMatrix& for_dim(std::size_t bit_len);

private:
    std::uint64_t seed_;
    std::map<std::size_t, DenseMatrix> cache_;
};

// Descriptor bits map to +-1 before projection; bit b set iff dot >= 0.
FrameHash lsh_hash(const std::vector<std::uint8_t>& census_masks, const DenseMatrix& planes);

int hamming_distance(FrameHash a, FrameHash b);

// Mean hamming distance over all frame pairs.
double clip_distance(const Clip& a, const Clip& b, LshPlaneSet& planes);

struct DedupReport {
    std::vector<std::string> retained_ids;
    std::vector<std::pair<std::string, double>> dropped; // id, min distance
};

DedupReport dedup_filter(const std::vector<Clip>& corpus, const std::vector<Clip>& downstream,
                         double threshold, LshPlaneSet& planes, std::size_t threads = 1);

Frame read_pgm(const std::string& path);
void write_pgm(const Frame& frame, const std::string& path);

} // namespace bcn
