#include "bcn/dedup.hpp"

#include "bcn/error.hpp"
#include "bcn/rng.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

namespace bcn {

std::vector<std::uint8_t> census_transform(const Frame& frame)
{
    if (frame.height < 3 || frame.width < 3) {
        throw Error(ErrorKind::InvalidInput, "census_transform: frame smaller than 3x3");
    }
    if (frame.pixels.size() != frame.height * frame.width) {
        throw Error(ErrorKind::InvalidInput, "census_transform: pixel buffer size mismatch");
    }
    // clockwise from top-left
    static constexpr int dr[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
    static constexpr int dc[8] = {-1, 0, 1, 1, 1, 0, -1, -1};

    std::vector<std::uint8_t> out;
    out.reserve((frame.height - 2) * (frame.width - 2));
    for (std::size_t r = 1; r + 1 < frame.height; ++r) {
        for (std::size_t c = 1; c + 1 < frame.width; ++c) {
            const std::uint8_t center = frame.pixels[r * frame.width + c];
            std::uint8_t mask = 0;
            for (int b = 0; b < 8; ++b) {
                const std::size_t rr = r + static_cast<std::size_t>(dr[b]);
                const std::size_t cc = c + static_cast<std::size_t>(dc[b]);
                if (frame.pixels[rr * frame.width + cc] < center) {
                    mask |= static_cast<std::uint8_t>(1u << (7 - b));
                }
            }
            out.push_back(mask);
        }
    }
    return out;
}

const DenseMatrix& LshPlaneSet::for_dim(std::size_t bit_len)
{
    auto it = cache_.find(bit_len);
    if (it == cache_.end()) {
        std::mt19937_64 rng(mix_seed(seed_, bit_len));
        std::normal_distribution<double> dist(0.0, 1.0);
        DenseMatrix planes = DenseMatrix::zeros(64, bit_len);
        for (double& v : planes.data) {
            v = dist(rng);
        }
        it = cache_.emplace(bit_len, std::move(planes)).first;
    }
    return it->second;
}

FrameHash lsh_hash(const std::vector<std::uint8_t>& census_masks, const DenseMatrix& planes)
{
    const std::size_t bit_len = census_masks.size() * 8;
    if (planes.cols != bit_len || planes.rows != 64) {
        throw Error(ErrorKind::InvalidInput, "lsh_hash: plane dimension mismatch");
    }
    FrameHash h;
    for (std::size_t b = 0; b < 64; ++b) {
        const double* plane = planes.row(b);
        double dot = 0.0;
        for (std::size_t m = 0; m < census_masks.size(); ++m) {
            const std::uint8_t mask = census_masks[m];
            for (int bit = 0; bit < 8; ++bit) {
                const double v = (mask & (1u << (7 - bit))) ? 1.0 : -1.0;
                dot += v * plane[m * 8 + static_cast<std::size_t>(bit)];
            }
        }
        if (dot >= 0.0) {
            h.code |= (1ULL << b);
        }
    }
    return h;
}

int hamming_distance(FrameHash a, FrameHash b)
{
    return std::popcount(a.code ^ b.code);
}

namespace {

std::vector<FrameHash> clip_codes(const Clip& clip, LshPlaneSet& planes)
{
    if (clip.frames.empty()) {
        throw Error(ErrorKind::InvalidInput, "clip has no frames: " + clip.id);
    }
    std::vector<FrameHash> codes;
    codes.reserve(clip.frames.size());
    for (const Frame& f : clip.frames) {
        const auto masks = census_transform(f);
        codes.push_back(lsh_hash(masks, planes.for_dim(masks.size() * 8)));
    }
    return codes;
}

double mean_pair_distance(const std::vector<FrameHash>& a, const std::vector<FrameHash>& b)
{
    double acc = 0.0;
    for (FrameHash ha : a) {
        for (FrameHash hb : b) {
            acc += hamming_distance(ha, hb);
        }
    }
    return acc / static_cast<double>(a.size() * b.size());
}

} // namespace

double clip_distance(const Clip& a, const Clip& b, LshPlaneSet& planes)
{
    return mean_pair_distance(clip_codes(a, planes), clip_codes(b, planes));
}

DedupReport dedup_filter(const std::vector<Clip>& corpus, const std::vector<Clip>& downstream,
                         double threshold, LshPlaneSet& planes, std::size_t threads)
{
    DedupReport report;
    if (downstream.empty()) {
        for (const Clip& c : corpus) {
            report.retained_ids.push_back(c.id);
        }
        return report;
    }

    std::vector<std::vector<FrameHash>> down_codes;
    down_codes.reserve(downstream.size());
    for (const Clip& c : downstream) {
        down_codes.push_back(clip_codes(c, planes));
    }

    // hash codes for every corpus clip first (touches the shared plane
    // cache), then the all-pairs sweep which is read-only and parallel
    std::vector<std::vector<FrameHash>> corpus_codes;
    corpus_codes.reserve(corpus.size());
    for (const Clip& c : corpus) {
        corpus_codes.push_back(clip_codes(c, planes));
    }

    std::vector<double> min_dist(corpus.size(), std::numeric_limits<double>::infinity());
    auto sweep = [&](std::size_t i) {
        for (const auto& dc : down_codes) {
            min_dist[i] = std::min(min_dist[i], mean_pair_distance(corpus_codes[i], dc));
        }
    };
    if (threads <= 1) {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            sweep(i);
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t t = 0; t < std::min(threads, corpus.size()); ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < corpus.size();
                     i = next.fetch_add(1)) {
                    sweep(i);
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (min_dist[i] < threshold) {
            report.dropped.emplace_back(corpus[i].id, min_dist[i]);
        } else {
            report.retained_ids.push_back(corpus[i].id);
        }
    }
    return report;
}

Frame read_pgm(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw Error(ErrorKind::ParseError, "cannot open: " + path);
    }
    std::string magic;
    is >> magic;
    if (magic != "P5") {
        throw Error(ErrorKind::ParseError, path + ": expected binary PGM (P5)");
    }
    auto next_token = [&]() -> long {
        // skip whitespace and '#' comment lines
        while (true) {
            const int ch = is.peek();
            if (ch == '#') {
                std::string line;
                std::getline(is, line);
            } else if (std::isspace(ch)) {
                is.get();
            } else {
                break;
            }
        }
        long v = -1;
        is >> v;
        return v;
    };
    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    if (!is || w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw Error(ErrorKind::ParseError, path + ": bad PGM header");
    }
    is.get(); // single whitespace after maxval
    Frame f;
    f.width = static_cast<std::size_t>(w);
    f.height = static_cast<std::size_t>(h);
    f.pixels.resize(f.width * f.height);
    if (!is.read(reinterpret_cast<char*>(f.pixels.data()),
                 static_cast<std::streamsize>(f.pixels.size()))) {
        throw Error(ErrorKind::ParseError, path + ": truncated pixel data");
    }
    return f;
}

void write_pgm(const Frame& frame, const std::string& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw Error(ErrorKind::InvalidInput, "cannot open for writing: " + path);
    }
    os << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(frame.pixels.data()),
             static_cast<std::streamsize>(frame.pixels.size()));
}

} // namespace bcn
