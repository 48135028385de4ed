#include <CLI11.hpp>
#include <json.hpp>

#include "bcn/dedup.hpp"
#include "bcn/model.hpp"
#include "bcn/probe.hpp"
#include "bcn/rng.hpp"
#include "bcn/supervision.hpp"
#include "bcn/synth.hpp"
#include "bcn/trainer.hpp"
#include "bcn/vocab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bcn;

namespace {

constexpr const char* kVersion = "bcn 1.0.0";

struct GlobalOpts {
    std::size_t threads = 1;
    bool deterministic = false;
};

std::string timestamp(const GlobalOpts& g)
{
    if (g.deterministic) {
        return "deterministic";
    }
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Every artifact write is followed by a manifest naming it, so the manifest
// only ever references paths that exist.
void write_manifest(const std::string& out_path, const std::string& subcommand,
                    const json& config, const std::vector<std::string>& artifacts,
                    const GlobalOpts& g)
{
    for (const std::string& a : artifacts) {
        if (!fs::exists(a)) {
            throw Error(ErrorKind::InvalidState, "manifest artifact missing: " + a);
        }
    }
    json m;
    m["tool"] = kVersion;
    m["subcommand"] = subcommand;
    m["config"] = config;
    m["config_hash"] = std::hash<std::string>{}(config.dump());
    m["artifacts"] = artifacts;
    m["timestamp"] = timestamp(g);
    std::ofstream os(out_path, std::ios::binary);
    os << m.dump(2) << "\n";
    if (!os) {
        throw Error(ErrorKind::InvalidState, "cannot write manifest: " + out_path);
    }
}

std::vector<std::size_t> parse_hidden(const std::string& spec)
{
    std::vector<std::size_t> dims;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            const long v = std::stol(part);
            if (v <= 0) {
                throw std::invalid_argument("non-positive");
            }
            dims.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw Error(ErrorKind::ConfigError, "bad hidden layer spec: " + spec);
        }
    }
    if (dims.empty()) {
        throw Error(ErrorKind::ConfigError, "empty hidden layer spec");
    }
    return dims;
}

// Deterministic train/eval split on corpus rows.
void split_indices(std::size_t n, double split, std::uint64_t seed,
                   std::vector<std::size_t>& train, std::vector<std::size_t>& eval)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, 0x5917));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto cut = static_cast<std::size_t>(std::llround(split * static_cast<double>(n)));
    train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
    eval.assign(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
}

ProbeResult probe_on_corpus(const ModelParams& params, const Corpus& corpus, double split,
                            double reg, std::uint64_t seed)
{
    const DenseMatrix all = extract_features(params, corpus);
    std::vector<std::size_t> tr, ev;
    split_indices(corpus.size(), split, seed, tr, ev);
    if (tr.empty() || ev.empty()) {
        throw Error(ErrorKind::InvalidInput, "split leaves an empty train or eval set");
    }
    const auto gather = [&](const std::vector<std::size_t>& rows, DenseMatrix& x,
                            std::vector<int>& y) {
        x = DenseMatrix::zeros(rows.size(), all.cols);
        y.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::copy(all.row(rows[i]), all.row(rows[i]) + all.cols, x.row(i));
            y[i] = corpus[rows[i]].latent_class;
        }
    };
    DenseMatrix xtr, xev;
    std::vector<int> ytr, yev;
    gather(tr, xtr, ytr);
    gather(ev, xev, yev);
    const LinearClassifier clf = train_linear_probe(xtr, ytr, reg, seed);
    ProbeResult r = evaluate(clf, xev, yev);
    r.n_train = tr.size();
    r.reg = reg;
    r.seed = seed;
    return r;
}

// ---- gen ----

struct GenOpts {
    SynthConfig cfg;
    std::string out = "corpus.bin";
};

void run_gen(const GenOpts& o, const GlobalOpts& g)
{
    const Corpus corpus = generate(o.cfg);
    export_corpus(corpus, o.out);
    json cfg;
    cfg["queries"] = o.cfg.n_queries;
    cfg["modes_min"] = o.cfg.modes_min;
    cfg["modes_max"] = o.cfg.modes_max;
    cfg["samples_per_mode"] = o.cfg.samples_per_mode;
    cfg["dim"] = o.cfg.feature_dim;
    cfg["title_dim"] = o.cfg.title_dim;
    cfg["iso"] = o.cfg.isomorphism_rate;
    cfg["separation"] = o.cfg.polysemy_separation;
    cfg["noise"] = o.cfg.noise_sigma;
    cfg["seed"] = o.cfg.seed;
    write_manifest(o.out + ".manifest.json", "gen", cfg, {o.out}, g);
    std::cout << "wrote " << o.out << " (" << corpus.size() << " samples)\n";
}

// ---- vocab ----

struct VocabOpts {
    std::string corpus = "corpus.bin";
    std::string out = "vocab.bin";
    std::size_t k_max = 8;
    std::size_t n_refs = 10;
    std::uint64_t seed = 0;
};

void run_vocab(const VocabOpts& o, const GlobalOpts& g)
{
    const Corpus corpus = import_corpus(o.corpus);
    const QueryVocabulary qvocab = build_query_vocabulary(corpus);
    const TextVocabulary tvocab =
        build_text_vocabulary(corpus, qvocab, o.k_max, o.n_refs, o.seed, g.threads);
    save_vocabulary(qvocab, tvocab, o.out);
    json cfg;
    cfg["corpus"] = o.corpus;
    cfg["k_max"] = o.k_max;
    cfg["refs"] = o.n_refs;
    cfg["seed"] = o.seed;
    write_manifest(o.out + ".manifest.json", "vocab", cfg, {o.out}, g);
    std::cout << "wrote " << o.out << " (K=" << qvocab.size() << ", M=" << tvocab.size()
              << ")\n";
}

// ---- train ----

struct TrainOpts {
    std::string corpus = "corpus.bin";
    std::string vocab = "vocab.bin";
    std::string out = "model.bin";
    std::string log_path;
    std::string hidden = "32,32";
    TrainConfig cfg;
    bool flatten = false;
};

void run_train(const TrainOpts& o, const GlobalOpts& g)
{
    const Corpus corpus = import_corpus(o.corpus);
    QueryVocabulary qvocab;
    TextVocabulary tvocab;
    load_vocabulary(o.vocab, qvocab, tvocab);
    const SupervisionCache cache = build_supervision_cache(corpus, qvocab, tvocab, !o.flatten);

    const std::vector<std::size_t> hidden = parse_hidden(o.hidden);
    const std::size_t input_dim = corpus.front().video_feature.size();
    ModelParams params = init_model(input_dim, hidden, qvocab.size(), tvocab.size(), o.cfg.seed);

    std::vector<TrainLogRow> log;
    params = train_stage1(corpus, cache, std::move(params), o.cfg, &log);
    Stage2Result s2 = train_stage2(std::move(params), corpus, cache, tvocab, o.cfg);
    log.insert(log.end(), s2.log.begin(), s2.log.end());

    std::vector<std::pair<std::string, Vec>> table(s2.state.running_r_t.begin(),
                                                   s2.state.running_r_t.end());
    const std::size_t total_steps = log.empty() ? 0 : log.back().step + 1;
    save_checkpoint(s2.params, o.out, total_steps, "", &table);

    std::vector<std::string> artifacts{o.out};
    if (!o.log_path.empty()) {
        write_train_log_csv(log, o.log_path);
        artifacts.push_back(o.log_path);
    }
    json cfg;
    cfg["corpus"] = o.corpus;
    cfg["vocab"] = o.vocab;
    cfg["hidden"] = o.hidden;
    cfg["stage1_epochs"] = o.cfg.stage1_epochs;
    cfg["stage2_epochs"] = o.cfg.stage2_epochs;
    cfg["batch_size"] = o.cfg.batch_size;
    cfg["stage1_lr"] = o.cfg.stage1_lr.initial;
    cfg["stage2_lr"] = o.cfg.stage2_lr.initial;
    cfg["lr_factor"] = o.cfg.stage1_lr.factor;
    cfg["lr_interval"] = o.cfg.stage1_lr.interval;
    cfg["momentum"] = o.cfg.momentum;
    cfg["weight_decay"] = o.cfg.weight_decay;
    cfg["eps_q"] = o.cfg.eps_q;
    cfg["eps_t"] = o.cfg.eps_t;
    cfg["alpha"] = o.cfg.alpha;
    cfg["w_q"] = o.cfg.w_q;
    cfg["w_t"] = o.cfg.w_t;
    cfg["allow_t2q"] = o.cfg.allow_t2q;
    cfg["allow_q2t"] = o.cfg.allow_q2t;
    cfg["flatten"] = o.flatten;
    cfg["seed"] = o.cfg.seed;
    write_manifest(o.out + ".manifest.json", "train", cfg, artifacts, g);
    std::cout << "wrote " << o.out << " (" << total_steps << " steps)\n";
}

// ---- probe ----

struct ProbeOpts {
    std::string checkpoint = "model.bin";
    std::string corpus = "corpus.bin";
    std::string out = "result.json";
    double split = 0.8;
    double reg = 1e-3;
    std::uint64_t seed = 0;
};

void run_probe(const ProbeOpts& o, const GlobalOpts& g)
{
    const Checkpoint ckpt = load_checkpoint(o.checkpoint);
    const Corpus corpus = import_corpus(o.corpus);
    const ProbeResult r = probe_on_corpus(ckpt.params, corpus, o.split, o.reg, o.seed);
    json out;
    out["top1"] = r.top1;
    out["top5"] = r.top5;
    out["n_train"] = r.n_train;
    out["n_eval"] = r.n_eval;
    out["reg"] = r.reg;
    out["seed"] = r.seed;
    std::ofstream os(o.out, std::ios::binary);
    os << out.dump(2) << "\n";
    os.close();
    json cfg;
    cfg["checkpoint"] = o.checkpoint;
    cfg["corpus"] = o.corpus;
    cfg["split"] = o.split;
    cfg["reg"] = o.reg;
    cfg["seed"] = o.seed;
    write_manifest(o.out + ".manifest.json", "probe", cfg, {o.out}, g);
    std::cout << "top1=" << r.top1 << " top5=" << r.top5 << "\n";
}

// ---- ablate ----

struct AblateOpts {
    SynthConfig gen;
    std::string hidden = "32,32";
    TrainConfig train;
    std::size_t n_seeds = 5;
    double split = 0.8;
    double reg = 1e-3;
    std::string out = "ablation.json";
};

struct VariantSpec {
    std::string name;
    bool stage2 = true;
    double w_q = 1.0;
    double w_t = 1.0;
    bool allow_t2q = true;
    bool allow_q2t = true;
};

const std::vector<VariantSpec>& variant_grid()
{
    static const std::vector<VariantSpec> grid{
        {"QS", false, 1.0, 0.0, true, true},
        {"TS", false, 0.0, 1.0, true, true},
        {"QS+TS", false, 1.0, 1.0, true, true},
        {"BCN_Q", true, 1.0, 1.0, true, false},
        {"BCN_T", true, 1.0, 1.0, false, true},
        {"BCN", true, 1.0, 1.0, true, true},
    };
    return grid;
}

struct AblationRun {
    // per variant name: top-1 per seed
    std::map<std::string, std::vector<double>> top1;
    // stage-2 logs of the full BCN variant, per seed
    std::vector<std::vector<TrainLogRow>> bcn_logs;
};

AblationRun run_ablation(const AblateOpts& o, const GlobalOpts& g)
{
    const Corpus corpus = generate(o.gen);
    const QueryVocabulary qvocab = build_query_vocabulary(corpus);
    const TextVocabulary tvocab =
        build_text_vocabulary(corpus, qvocab, 8, 10, o.gen.seed, g.threads);
    const SupervisionCache cache = build_supervision_cache(corpus, qvocab, tvocab);
    const std::vector<std::size_t> hidden = parse_hidden(o.hidden);
    const std::size_t input_dim = corpus.front().video_feature.size();

    AblationRun run;
    for (std::size_t s = 0; s < o.n_seeds; ++s) {
        const std::uint64_t seed = o.train.seed + s;
        const ModelParams init =
            init_model(input_dim, hidden, qvocab.size(), tvocab.size(), seed);

        // the three stage-2 variants share one joint stage-1 warm start
        TrainConfig joint = o.train;
        joint.seed = seed;
        const ModelParams warm = train_stage1(corpus, cache, init, joint);

        for (const VariantSpec& v : variant_grid()) {
            TrainConfig cfg = joint;
            cfg.w_q = v.w_q;
            cfg.w_t = v.w_t;
            cfg.allow_t2q = v.allow_t2q;
            cfg.allow_q2t = v.allow_q2t;
            ModelParams trained;
            if (!v.stage2) {
                trained = (v.w_q == 1.0 && v.w_t == 1.0)
                              ? warm
                              : train_stage1(corpus, cache, init, cfg);
            } else {
                Stage2Result s2 = train_stage2(warm, corpus, cache, tvocab, cfg);
                trained = std::move(s2.params);
                if (v.name == "BCN") {
                    run.bcn_logs.push_back(std::move(s2.log));
                }
            }
            const ProbeResult r = probe_on_corpus(trained, corpus, o.split, o.reg, seed);
            run.top1[v.name].push_back(r.top1);
            std::cout << "seed " << seed << "  " << v.name << "  top1=" << r.top1 << "\n";
        }
    }
    return run;
}

void mean_sd(const std::vector<double>& xs, double& mean, double& sd)
{
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) {
        var += (x - mean) * (x - mean);
    }
    sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
}

void run_ablate(const AblateOpts& o, const GlobalOpts& g)
{
    const AblationRun run = run_ablation(o, g);

    json out;
    std::ostringstream table;
    table << "variant      mean     sd\n";
    for (const VariantSpec& v : variant_grid()) {
        const std::vector<double>& xs = run.top1.at(v.name);
        double mean = 0.0, sd = 0.0;
        mean_sd(xs, mean, sd);
        out[v.name] = {{"mean", mean}, {"sd", sd}, {"per_seed", xs}};
        char line[64];
        std::snprintf(line, sizeof line, "%-10s %7.4f %6.4f\n", v.name.c_str(), mean, sd);
        table << line;
    }
    std::ofstream os(o.out, std::ios::binary);
    os << out.dump(2) << "\n";
    os.close();
    const std::string table_path = o.out + ".txt";
    std::ofstream ts(table_path, std::ios::binary);
    ts << table.str();
    ts.close();

    json cfg;
    cfg["seeds"] = o.n_seeds;
    cfg["queries"] = o.gen.n_queries;
    cfg["samples_per_mode"] = o.gen.samples_per_mode;
    cfg["iso"] = o.gen.isomorphism_rate;
    cfg["seed"] = o.train.seed;
    write_manifest(o.out + ".manifest.json", "ablate", cfg, {o.out, table_path}, g);
    std::cout << table.str();
}

// ---- dedup ----

struct DedupOpts {
    std::string corpus_dir;
    std::string downstream_dir;
    double threshold = 2.0;
    std::uint64_t seed = 0;
    std::string report = "dedup.json";
};

// A clip is either a subdirectory of PGM frames (sorted by filename) or a
// bare PGM file acting as a one-frame clip.
std::vector<Clip> load_clips(const std::string& dir)
{
    if (!fs::is_directory(dir)) {
        throw Error(ErrorKind::InvalidInput, "not a directory: " + dir);
    }
    std::vector<Clip> clips;
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(dir)) {
        entries.push_back(e.path());
    }
    std::sort(entries.begin(), entries.end());
    for (const fs::path& p : entries) {
        if (fs::is_directory(p)) {
            std::vector<fs::path> frames;
            for (const auto& f : fs::directory_iterator(p)) {
                if (f.path().extension() == ".pgm") {
                    frames.push_back(f.path());
                }
            }
            std::sort(frames.begin(), frames.end());
            if (frames.empty()) {
                continue;
            }
            Clip c;
            c.id = p.filename().string();
            for (const fs::path& f : frames) {
                c.frames.push_back(read_pgm(f.string()));
            }
            clips.push_back(std::move(c));
        } else if (p.extension() == ".pgm") {
            clips.push_back({p.stem().string(), {read_pgm(p.string())}});
        }
    }
    if (clips.empty()) {
        throw Error(ErrorKind::InvalidInput, "no clips found in " + dir);
    }
    return clips;
}

void run_dedup(const DedupOpts& o, const GlobalOpts& g)
{
    const std::vector<Clip> corpus = load_clips(o.corpus_dir);
    std::vector<Clip> downstream;
    if (!o.downstream_dir.empty()) {
        downstream = load_clips(o.downstream_dir);
    }
    LshPlaneSet planes(o.seed);
    const DedupReport r = dedup_filter(corpus, downstream, o.threshold, planes, g.threads);
    json out;
    out["retained"] = r.retained_ids;
    out["dropped"] = json::array();
    for (const auto& [id, dist] : r.dropped) {
        out["dropped"].push_back({{"id", id}, {"min_distance", dist}});
    }
    std::ofstream os(o.report, std::ios::binary);
    os << out.dump(2) << "\n";
    os.close();
    json cfg;
    cfg["corpus"] = o.corpus_dir;
    cfg["downstream"] = o.downstream_dir;
    cfg["threshold"] = o.threshold;
    cfg["seed"] = o.seed;
    write_manifest(o.report + ".manifest.json", "dedup", cfg, {o.report}, g);
    std::cout << "retained " << r.retained_ids.size() << ", dropped " << r.dropped.size()
              << "\n";
}


// key=value config file; command-line flags override file values, unknown
// keys are rejected.
void apply_config(CLI::App* sub, const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw Error(ErrorKind::ConfigError, "cannot read config file: " + path);
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ConfigError,
                        path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") {
            throw Error(ErrorKind::ConfigError, "unknown config key: " + key);
        }
        if (opt->count() > 0) {
            continue;
        }
        opt->add_result(value);
        opt->run_callback();
    }
}

void add_config_option(CLI::App* sub, std::map<CLI::App*, std::string>& paths)
{
    sub->add_option("--config", paths[sub], "key=value config file; flags override it");
}

void add_gen_options(CLI::App* sub, GenOpts& o)
{
    sub->add_option("--queries", o.cfg.n_queries, "number of distinct queries");
    sub->add_option("--modes-min", o.cfg.modes_min, "minimum polysemy modes per query");
    sub->add_option("--modes-max", o.cfg.modes_max, "maximum polysemy modes per query");
    sub->add_option("--samples-per-mode", o.cfg.samples_per_mode, "samples per (query, mode)");
    sub->add_option("--dim", o.cfg.feature_dim, "video feature dimension");
    sub->add_option("--title-dim", o.cfg.title_dim, "title feature dimension");
    sub->add_option("--iso", o.cfg.isomorphism_rate, "title isomorphism rate");
    sub->add_option("--separation", o.cfg.polysemy_separation, "mode center separation");
    sub->add_option("--noise", o.cfg.noise_sigma, "per-sample noise sigma");
    sub->add_option("--seed", o.cfg.seed, "generation seed");
}

void add_train_options(CLI::App* sub, TrainOpts& o)
{
    sub->add_option("--hidden", o.hidden, "encoder hidden widths, comma separated");
    sub->add_option("--stage1-epochs", o.cfg.stage1_epochs, "stage-1 epochs");
    sub->add_option("--stage2-epochs", o.cfg.stage2_epochs, "stage-2 epochs");
    sub->add_option("--batch-size", o.cfg.batch_size, "minibatch size");
    sub->add_option("--stage1-lr", o.cfg.stage1_lr.initial, "stage-1 initial lr");
    sub->add_option("--stage2-lr", o.cfg.stage2_lr.initial, "stage-2 initial lr");
    sub->add_option("--lr-factor", o.cfg.stage1_lr.factor, "lr decay factor")
        ->each([&o](const std::string& v) { o.cfg.stage2_lr.factor = std::stod(v); });
    sub->add_option("--lr-interval", o.cfg.stage1_lr.interval, "steps between lr decays")
        ->each([&o](const std::string& v) {
            o.cfg.stage2_lr.interval = static_cast<std::size_t>(std::stoul(v));
        });
    sub->add_option("--momentum", o.cfg.momentum, "SGD momentum");
    sub->add_option("--weight-decay", o.cfg.weight_decay, "L2 weight decay");
    sub->add_option("--eps-q", o.cfg.eps_q, "query branch threshold");
    sub->add_option("--eps-t", o.cfg.eps_t, "text branch threshold");
    sub->add_option("--alpha", o.cfg.alpha, "text supervision momentum");
    sub->add_option("--w-q", o.cfg.w_q, "query loss weight");
    sub->add_option("--w-t", o.cfg.w_t, "text loss weight");
    sub->add_option("--seed", o.cfg.seed, "training seed");
    sub->add_flag("!--no-t2q", o.cfg.allow_t2q, "disable the t2q branch");
    sub->add_flag("!--no-q2t", o.cfg.allow_q2t, "disable the q2t branch");
    sub->add_flag("--flatten", o.flatten, "use the flattening temperature reading");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"bi-calibration network pipeline"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--threads", g.threads, "worker threads for parallel sections")
        ->check(CLI::PositiveNumber);
    app.add_flag("--deterministic", g.deterministic,
                 "suppress wall-clock fields in manifests");

    std::map<CLI::App*, std::string> config_paths;

    GenOpts gen_o;
    CLI::App* gen_sub = app.add_subcommand("gen", "generate a synthetic corpus");
    gen_sub->fallthrough();
    add_config_option(gen_sub, config_paths);
    add_gen_options(gen_sub, gen_o);
    gen_sub->add_option("--out", gen_o.out, "corpus output path");

    VocabOpts vocab_o;
    CLI::App* vocab_sub = app.add_subcommand("vocab", "build query and text vocabularies");
    vocab_sub->fallthrough();
    add_config_option(vocab_sub, config_paths);
    vocab_sub->add_option("--corpus", vocab_o.corpus, "corpus path");
    vocab_sub->add_option("--out", vocab_o.out, "vocabulary output path");
    vocab_sub->add_option("--k-max", vocab_o.k_max, "max clusters per query");
    vocab_sub->add_option("--refs", vocab_o.n_refs, "gap statistic reference draws");
    vocab_sub->add_option("--seed", vocab_o.seed, "clustering seed");

    TrainOpts train_o;
    CLI::App* train_sub = app.add_subcommand("train", "two-stage training");
    train_sub->fallthrough();
    add_config_option(train_sub, config_paths);
    train_sub->add_option("--corpus", train_o.corpus, "corpus path");
    train_sub->add_option("--vocab", train_o.vocab, "vocabulary path");
    train_sub->add_option("--out", train_o.out, "checkpoint output path");
    train_sub->add_option("--log", train_o.log_path, "training log CSV path");
    add_train_options(train_sub, train_o);

    ProbeOpts probe_o;
    CLI::App* probe_sub = app.add_subcommand("probe", "linear probe evaluation");
    probe_sub->fallthrough();
    add_config_option(probe_sub, config_paths);
    probe_sub->add_option("--checkpoint", probe_o.checkpoint, "trained checkpoint");
    probe_sub->add_option("--corpus", probe_o.corpus, "corpus path");
    probe_sub->add_option("--split", probe_o.split, "train fraction");
    probe_sub->add_option("--reg", probe_o.reg, "probe L2 regularization");
    probe_sub->add_option("--seed", probe_o.seed, "split seed");
    probe_sub->add_option("--out", probe_o.out, "result JSON path");

    AblateOpts ablate_o;
    ablate_o.gen.modes_min = 2;
    ablate_o.gen.modes_max = 2;
    ablate_o.gen.samples_per_mode = 100;
    CLI::App* ablate_sub = app.add_subcommand("ablate", "method-variant comparison grid");
    ablate_sub->fallthrough();
    add_config_option(ablate_sub, config_paths);
    ablate_sub->add_option("--seeds", ablate_o.n_seeds, "number of training seeds");
    ablate_sub->add_option("--queries", ablate_o.gen.n_queries, "number of queries");
    ablate_sub->add_option("--modes-min", ablate_o.gen.modes_min, "min modes per query");
    ablate_sub->add_option("--modes-max", ablate_o.gen.modes_max, "max modes per query");
    ablate_sub->add_option("--samples-per-mode", ablate_o.gen.samples_per_mode,
                           "samples per (query, mode)");
    ablate_sub->add_option("--dim", ablate_o.gen.feature_dim, "video feature dimension");
    ablate_sub->add_option("--title-dim", ablate_o.gen.title_dim, "title feature dimension");
    ablate_sub->add_option("--iso", ablate_o.gen.isomorphism_rate, "title isomorphism rate");
    ablate_sub->add_option("--separation", ablate_o.gen.polysemy_separation,
                           "mode center separation");
    ablate_sub->add_option("--noise", ablate_o.gen.noise_sigma, "per-sample noise sigma");
    ablate_sub->add_option("--hidden", ablate_o.hidden, "encoder hidden widths");
    ablate_sub->add_option("--stage1-epochs", ablate_o.train.stage1_epochs, "stage-1 epochs");
    ablate_sub->add_option("--stage2-epochs", ablate_o.train.stage2_epochs, "stage-2 epochs");
    ablate_sub->add_option("--batch-size", ablate_o.train.batch_size, "minibatch size");
    ablate_sub->add_option("--stage1-lr", ablate_o.train.stage1_lr.initial, "stage-1 lr");
    ablate_sub->add_option("--stage2-lr", ablate_o.train.stage2_lr.initial, "stage-2 lr");
    ablate_sub->add_option("--eps-q", ablate_o.train.eps_q, "query branch threshold");
    ablate_sub->add_option("--eps-t", ablate_o.train.eps_t, "text branch threshold");
    ablate_sub->add_option("--alpha", ablate_o.train.alpha, "text supervision momentum");
    ablate_sub->add_option("--split", ablate_o.split, "probe train fraction");
    ablate_sub->add_option("--reg", ablate_o.reg, "probe L2 regularization");
    ablate_sub->add_option("--seed", ablate_o.train.seed, "base seed (corpus and training)")
        ->each([&ablate_o](const std::string& v) {
            ablate_o.gen.seed = static_cast<std::uint64_t>(std::stoull(v));
        });
    ablate_sub->add_option("--out", ablate_o.out, "comparison JSON path");

    DedupOpts dedup_o;
    CLI::App* dedup_sub = app.add_subcommand("dedup", "near-duplicate clip filtering");
    dedup_sub->fallthrough();
    add_config_option(dedup_sub, config_paths);
    dedup_sub->add_option("--corpus", dedup_o.corpus_dir, "corpus clip directory")
        ->required();
    dedup_sub->add_option("--downstream", dedup_o.downstream_dir,
                          "downstream clip directory");
    dedup_sub->add_option("--threshold", dedup_o.threshold, "drop distance threshold");
    dedup_sub->add_option("--seed", dedup_o.seed, "hyperplane seed");
    dedup_sub->add_option("--report", dedup_o.report, "report JSON path");

    try {
        app.parse(argc, argv);
        for (CLI::App* sub : app.get_subcommands()) {
            if (!config_paths[sub].empty()) {
                apply_config(sub, config_paths[sub]);
            }
        }
        if (g.deterministic) {
            g.threads = 1;
        }
        ablate_o.gen.seed = ablate_o.gen.seed == 0 ? ablate_o.train.seed : ablate_o.gen.seed;
        if (gen_sub->parsed()) {
            run_gen(gen_o, g);
        } else if (vocab_sub->parsed()) {
            run_vocab(vocab_o, g);
        } else if (train_sub->parsed()) {
            run_train(train_o, g);
        } else if (probe_sub->parsed()) {
            run_probe(probe_o, g);
        } else if (ablate_sub->parsed()) {
            run_ablate(ablate_o, g);
        } else if (dedup_sub->parsed()) {
            run_dedup(dedup_o, g);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
