#include "bcn/synth.hpp"

#include "bcn/error.hpp"
#include "bcn/io.hpp"
#include "bcn/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <random>
#include <sstream>

namespace bcn {

namespace {

using json = nlohmann::json;

Vec gaussian_vec(std::mt19937_64& rng, std::size_t dim, double sigma)
{
    std::normal_distribution<double> dist(0.0, sigma);
    Vec v(dim);
    for (double& x : v) {
        x = dist(rng);
    }
    return v;
}

struct Mode {
    std::size_t query;
    Vec video_center;
    Vec title_center;
    int latent_class;
};

} // namespace

Corpus generate(const SynthConfig& config)
{
    if (config.n_queries < 1 || config.samples_per_mode < 1) {
        throw Error(ErrorKind::InvalidInput, "generate: counts must be >= 1");
    }
    if (config.modes_min < 1 || config.modes_min > config.modes_max) {
        throw Error(ErrorKind::InvalidInput, "generate: bad modes range");
    }
    if (config.feature_dim < 2 || config.title_dim < 2) {
        throw Error(ErrorKind::InvalidInput, "generate: dims must be >= 2");
    }
    if (config.isomorphism_rate < 0.0 || config.isomorphism_rate > 1.0) {
        throw Error(ErrorKind::InvalidInput, "generate: isomorphism_rate outside [0,1]");
    }

    // Center spread chosen so the expected distance between two mode
    // centers is ~polysemy_separation.
    const double sigma_v =
        config.polysemy_separation / std::sqrt(2.0 * static_cast<double>(config.feature_dim));
    const double sigma_t =
        config.polysemy_separation / std::sqrt(2.0 * static_cast<double>(config.title_dim));

    // Pass 1: latent (query, mode) structure.
    std::vector<Mode> modes;
    std::vector<std::size_t> modes_of_query(config.n_queries);
    int next_class = 0;
    for (std::size_t k = 0; k < config.n_queries; ++k) {
        std::mt19937_64 rng(mix_seed(config.seed, 2 * k));
        std::uniform_int_distribution<std::size_t> mdist(config.modes_min, config.modes_max);
        const std::size_t m = mdist(rng);
        modes_of_query[k] = m;
        for (std::size_t j = 0; j < m; ++j) {
            Mode mode;
            mode.query = k;
            mode.video_center = gaussian_vec(rng, config.feature_dim, sigma_v);
            mode.title_center = gaussian_vec(rng, config.title_dim, sigma_t);
            mode.latent_class = next_class++;
            modes.push_back(std::move(mode));
        }
    }

    // Pass 2: samples. Isomorphic titles reuse the title template of a
    // mode from a different query.
    Corpus corpus;
    std::size_t global_index = 0;
    for (std::size_t k = 0; k < config.n_queries; ++k) {
        std::mt19937_64 rng(mix_seed(config.seed, 2 * k + 1));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, modes.size() - 1);
        for (const Mode& mode : modes) {
            if (mode.query != k) {
                continue;
            }
            for (std::size_t s = 0; s < config.samples_per_mode; ++s) {
                CorpusSample sample;
                std::ostringstream id;
                id << "s" << global_index++;
                sample.sample_id = id.str();
                sample.query = "q" + std::to_string(k);
                sample.latent_class = mode.latent_class;

                const Vec* title_center = &mode.title_center;
                if (modes.size() > modes_of_query[k] && unit(rng) < config.isomorphism_rate) {
                    std::size_t other = pick(rng);
                    while (modes[other].query == k) {
                        other = pick(rng);
                    }
                    title_center = &modes[other].title_center;
                }

                sample.video_feature = gaussian_vec(rng, config.feature_dim, config.noise_sigma);
                for (std::size_t d = 0; d < config.feature_dim; ++d) {
                    sample.video_feature[d] += mode.video_center[d];
                }
                sample.title_feature = gaussian_vec(rng, config.title_dim, config.noise_sigma);
                for (std::size_t d = 0; d < config.title_dim; ++d) {
                    sample.title_feature[d] += (*title_center)[d];
                }
                corpus.push_back(std::move(sample));
            }
        }
    }
    return corpus;
}

void export_corpus(const Corpus& corpus, const std::string& path)
{
    Container c;
    std::ostringstream text;
    const std::size_t fdim = corpus.empty() ? 0 : corpus.front().video_feature.size();
    const std::size_t tdim = corpus.empty() ? 0 : corpus.front().title_feature.size();
    json header = {{"format", "bcn-corpus"},
                   {"version", 1},
                   {"n", corpus.size()},
                   {"feature_dim", fdim},
                   {"title_dim", tdim}};
    text << header.dump() << "\n";
    for (const CorpusSample& s : corpus) {
        json row = {{"sample_id", s.sample_id},
                    {"query", s.query},
                    {"latent_class", s.latent_class}};
        text << row.dump() << "\n";
    }
    c.text = text.str();
    for (const CorpusSample& s : corpus) {
        append_doubles(c.blob, s.video_feature);
    }
    for (const CorpusSample& s : corpus) {
        append_doubles(c.blob, s.title_feature);
    }
    write_container(path, c);
}

Corpus import_corpus(const std::string& path)
{
    const Container c = read_container(path);
    std::istringstream text(c.text);
    std::string line;
    std::size_t line_no = 0;

    auto parse_line = [&](const std::string& l) -> json {
        json j = json::parse(l, nullptr, false);
        if (j.is_discarded()) {
            throw Error(ErrorKind::ParseError,
                        path + ": bad JSON at line " + std::to_string(line_no));
        }
        return j;
    };

    if (!std::getline(text, line)) {
        throw Error(ErrorKind::ParseError, path + ": missing header line");
    }
    ++line_no;
    const json header = parse_line(line);
    if (header.value("format", "") != "bcn-corpus") {
        throw Error(ErrorKind::ParseError, path + ": not a corpus file");
    }
    const std::size_t n = header.at("n").get<std::size_t>();
    const std::size_t fdim = header.at("feature_dim").get<std::size_t>();
    const std::size_t tdim = header.at("title_dim").get<std::size_t>();

    Corpus corpus;
    corpus.reserve(n);
    while (std::getline(text, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const json row = parse_line(line);
        CorpusSample s;
        s.sample_id = row.at("sample_id").get<std::string>();
        s.query = row.at("query").get<std::string>();
        s.latent_class = row.at("latent_class").get<int>();
        corpus.push_back(std::move(s));
    }
    if (corpus.size() != n) {
        throw Error(ErrorKind::ParseError,
                    path + ": manifest declares " + std::to_string(n) + " samples, found " +
                        std::to_string(corpus.size()) + " at line " + std::to_string(line_no));
    }
    if (c.blob.size() != n * (fdim + tdim) * sizeof(double)) {
        throw Error(ErrorKind::ParseError,
                    path + ": blob size " + std::to_string(c.blob.size()) +
                        " does not match manifest");
    }
    std::size_t offset = 0;
    for (CorpusSample& s : corpus) {
        s.video_feature = read_doubles(c.blob, offset, fdim);
    }
    for (CorpusSample& s : corpus) {
        s.title_feature = read_doubles(c.blob, offset, tdim);
    }
    return corpus;
}

} // namespace bcn
