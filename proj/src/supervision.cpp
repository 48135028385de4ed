#include "bcn/supervision.hpp"

#include "bcn/error.hpp"
#include "bcn/io.hpp"

#include <json.hpp>

#include <sstream>

namespace bcn {

using json = nlohmann::json;

ProbVec primary_query_supervision(const CorpusSample& sample, const QueryVocabulary& qvocab)
{
    auto it = qvocab.index_of.find(sample.query);
    if (it == qvocab.index_of.end()) {
        throw Error(ErrorKind::UnknownQuery, "unknown query: " + sample.query);
    }
    Vec v(qvocab.size(), 0.0);
    v[it->second] = 1.0;
    return ProbVec::unchecked(std::move(v));
}

ProbVec primary_text_supervision(const Vec& title_feature, const TextVocabulary& tvocab,
                                 bool sharpen)
{
    if (tvocab.size() == 0) {
        throw Error(ErrorKind::InvalidInput, "primary_text_supervision: empty vocabulary");
    }
    if (title_feature.size() != tvocab.dim()) {
        throw Error(ErrorKind::InvalidInput,
                    "primary_text_supervision: dimension mismatch");
    }
    Vec logits(tvocab.size());
    for (std::size_t i = 0; i < tvocab.size(); ++i) {
        logits[i] = cosine_similarity(title_feature, tvocab.prototypes[i]);
    }
    const double m = static_cast<double>(tvocab.size());
    const double temperature = sharpen ? 1.0 / m : m;
    return softmax_with_temperature(logits, temperature);
}

ProbVec SupervisionCache::y_q(std::size_t row, std::size_t K) const
{
    Vec v(K, 0.0);
    v[query_index[row]] = 1.0;
    return ProbVec::unchecked(std::move(v));
}

ProbVec SupervisionCache::y_t_row(std::size_t row) const
{
    return ProbVec::unchecked(Vec(y_t.row(row), y_t.row(row) + y_t.cols));
}

SupervisionCache build_supervision_cache(const Corpus& corpus, const QueryVocabulary& qvocab,
                                         const TextVocabulary& tvocab, bool sharpen)
{
    SupervisionCache cache;
    cache.y_t = DenseMatrix::zeros(corpus.size(), tvocab.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const CorpusSample& s = corpus[i];
        auto it = qvocab.index_of.find(s.query);
        if (it == qvocab.index_of.end()) {
            throw Error(ErrorKind::UnknownQuery, "unknown query: " + s.query);
        }
        cache.sample_ids.push_back(s.sample_id);
        cache.query_index.push_back(it->second);
        const ProbVec yt = primary_text_supervision(s.title_feature, tvocab, sharpen);
        for (std::size_t j = 0; j < yt.size(); ++j) {
            cache.y_t.at(i, j) = yt[j];
        }
    }
    return cache;
}

void save_supervision_cache(const SupervisionCache& cache, const std::string& path)
{
    Container c;
    std::ostringstream text;
    json header = {{"format", "bcn-supervision"},
                   {"version", 1},
                   {"n", cache.sample_ids.size()},
                   {"M", cache.y_t.cols}};
    text << header.dump() << "\n";
    for (std::size_t i = 0; i < cache.sample_ids.size(); ++i) {
        json row = {{"sample_id", cache.sample_ids[i]}, {"query_index", cache.query_index[i]}};
        text << row.dump() << "\n";
    }
    c.text = text.str();
    append_doubles(c.blob, cache.y_t.data);
    write_container(path, c);
}

SupervisionCache load_supervision_cache(const std::string& path)
{
    const Container c = read_container(path);
    std::istringstream text(c.text);
    std::string line;
    if (!std::getline(text, line)) {
        throw Error(ErrorKind::ParseError, path + ": missing header line");
    }
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "bcn-supervision") {
        throw Error(ErrorKind::ParseError, path + ": not a supervision cache");
    }
    const std::size_t n = header.at("n").get<std::size_t>();
    const std::size_t M = header.at("M").get<std::size_t>();

    SupervisionCache cache;
    std::size_t line_no = 1;
    while (std::getline(text, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            throw Error(ErrorKind::ParseError,
                        path + ": bad JSON at line " + std::to_string(line_no));
        }
        cache.sample_ids.push_back(row.at("sample_id").get<std::string>());
        cache.query_index.push_back(row.at("query_index").get<std::size_t>());
    }
    if (cache.sample_ids.size() != n || c.blob.size() != n * M * sizeof(double)) {
        throw Error(ErrorKind::ParseError, path + ": record/blob count mismatch");
    }
    cache.y_t.rows = n;
    cache.y_t.cols = M;
    std::size_t offset = 0;
    cache.y_t.data = read_doubles(c.blob, offset, n * M);
    return cache;
}

} // namespace bcn
