// Command-line front end: data preparation, training, evaluation, experiment
// sweeps, classical baselines, and plot emission.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "semcom/classic/pipeline.hpp"
#include "semcom/config.hpp"
#include "semcom/model.hpp"
#include "semcom/sweep.hpp"
#include "semcom/text.hpp"
#include "semcom/train.hpp"

namespace fs = std::filesystem;
using namespace semcom;

namespace {

// Accepts "0,2,4" and the arithmetic shorthand "0,2,...,12".
std::vector<double> parse_snr_list(const std::string& spec) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(spec);
    while (std::getline(is, cur, ',')) parts.push_back(cur);
    std::vector<double> out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i] == "..." || parts[i] == "..") {
            if (out.size() < 2 || i + 1 != parts.size() - 1)
                throw std::invalid_argument("ellipsis form is a,b,...,z");
            const double step = out[out.size() - 1] - out[out.size() - 2];
            const double last = std::stod(parts[i + 1]);
            if (step <= 0) throw std::invalid_argument("ellipsis needs an increasing prefix");
            for (double v = out.back() + step; v <= last + 1e-9; v += step) out.push_back(v);
            return out;
        }
        out.push_back(std::stod(parts[i]));
    }
    if (out.empty()) throw std::invalid_argument("empty SNR list");
    return out;
}

struct CorpusData {
    std::vector<text::TokenizedSentence> train, val;
    text::Vocabulary vocab;
    std::vector<metrics::Sentence> val_words;
};

// `path` may be a prepare-data output directory (train.txt/val.txt/vocab.txt)
// or a raw one-sentence-per-line text file.
CorpusData load_corpus_arg(const std::string& path, std::size_t vocab_size, double val_fraction,
                           std::uint64_t seed) {
    if (fs::is_directory(path)) {
        auto vocab = text::Vocabulary::load((fs::path(path) / "vocab.txt").string());
        auto tr = text::load_corpus((fs::path(path) / "train.txt").string());
        auto va = text::load_corpus((fs::path(path) / "val.txt").string());
        CorpusData d{.train = {}, .val = {}, .vocab = std::move(vocab), .val_words = {}};
        for (const auto& s : tr.sentences) d.train.push_back(text::encode_sentence(d.vocab, s));
        for (const auto& s : va.sentences) {
            d.val.push_back(text::encode_sentence(d.vocab, s));
            d.val_words.push_back(s);
        }
        return d;
    }
    auto corpus = text::load_corpus(path);
    if (corpus.sentences.empty()) throw std::runtime_error("corpus has no usable sentences: " + path);
    auto vocab = text::Vocabulary::build(corpus.sentences, vocab_size);
    std::vector<text::TokenizedSentence> all;
    for (const auto& s : corpus.sentences) all.push_back(text::encode_sentence(vocab, s));
    CorpusData d{.train = {}, .val = {}, .vocab = std::move(vocab), .val_words = {}};
    train::split_train_val(all, val_fraction, seed, d.train, d.val);
    for (const auto& s : d.val) d.val_words.push_back(text::decode_tokens(d.vocab, s.ids));
    return d;
}

std::vector<sweep::SystemSpec> parse_checkpoint_args(const std::vector<std::string>& args,
                                                     const std::string& prefix = "") {
    std::vector<sweep::SystemSpec> systems;
    for (const auto& a : args) {
        const auto eq = a.find('=');
        sweep::SystemSpec s;
        s.type = sweep::SystemSpec::Type::checkpoint;
        if (eq == std::string::npos) {
            s.name = prefix.empty() ? "ut" : prefix;
            s.checkpoint_path = a;
        } else {
            s.name = prefix + a.substr(0, eq);
            s.checkpoint_path = a.substr(eq + 1);
        }
        systems.push_back(std::move(s));
    }
    return systems;
}

int run_prepare_data(const std::string& in, const std::string& out_dir, std::size_t vocab_size,
                     std::uint64_t seed, double val_fraction) {
    auto corpus = text::load_corpus(in);
    if (corpus.sentences.empty()) throw std::runtime_error("no sentences survived filtering");
    fs::create_directories(out_dir);
    auto vocab = text::Vocabulary::build(corpus.sentences, vocab_size);
    vocab.save((fs::path(out_dir) / "vocab.txt").string());

    std::vector<text::TokenizedSentence> all, train_set, val_set;
    for (const auto& s : corpus.sentences) all.push_back(text::encode_sentence(vocab, s));
    train::split_train_val(all, val_fraction, seed, train_set, val_set);

    auto dump = [&](const std::string& name, const std::vector<text::TokenizedSentence>& set) {
        std::ofstream os((fs::path(out_dir) / name).string());
        for (const auto& s : set) {
            const auto words = text::decode_tokens(vocab, s.ids);
            for (std::size_t i = 0; i < words.size(); ++i) os << (i ? " " : "") << words[i];
            os << "\n";
        }
    };
    dump("train.txt", train_set);
    dump("val.txt", val_set);
    std::cout << "kept=" << corpus.kept << " dropped=" << corpus.dropped
              << " vocab=" << vocab.size() << " train=" << train_set.size()
              << " val=" << val_set.size() << std::endl;
    return 0;
}

int run_train(const std::string& config_path, const std::string& corpus_path,
              const std::string& out_ckpt) {
    auto conf = cfg::Config::load(config_path);
    auto tc = train::TrainConfig::from_config(conf);
    const auto vocab_cap = static_cast<std::size_t>(conf.get_int("data.vocab_size", 4000));
    auto data = load_corpus_arg(corpus_path, vocab_cap, tc.val_fraction, tc.seed);

    auto mc = model::UTConfig::from_config(conf);
    mc.vocab_size = static_cast<int>(data.vocab.size());
    auto m = model::SemanticModel::init(mc, tc.seed);
    std::cout << "model=" << (mc.kind == model::UTConfig::Kind::adaptive ? "adaptive" : "fixed_depth")
              << " params=" << m.param_count() << " train=" << data.train.size()
              << " val=" << data.val.size() << " vocab=" << data.vocab.size() << std::endl;

    data.vocab.save(out_ckpt + ".vocab");
    const auto res = train::train_model(m, data.train, data.val, data.vocab, tc, out_ckpt, &std::cout);
    std::cout << "steps=" << res.steps << " first100_avg=" << res.first_steps_avg
              << " final_epoch_avg=" << res.final_epoch_avg << " best_val_bleu1=" << res.best_val_bleu1
              << " checkpoint=" << out_ckpt << std::endl;
    return 0;
}

int run_eval(const std::string& ckpt, const std::string& corpus_path, const std::string& snr_spec,
             const std::string& channel_name, const std::string& out_csv, std::uint64_t seed,
             std::size_t max_sentences, const std::string& system_name) {
    auto m = train::load_model(ckpt);
    auto vocab = text::Vocabulary::load(ckpt + ".vocab");
    auto corpus = fs::is_directory(corpus_path)
                      ? text::load_corpus((fs::path(corpus_path) / "val.txt").string())
                      : text::load_corpus(corpus_path);
    if (corpus.sentences.empty()) throw std::runtime_error("no evaluation sentences");
    if (corpus.sentences.size() > max_sentences) corpus.sentences.resize(max_sentences);
    std::vector<text::TokenizedSentence> tokens;
    for (const auto& s : corpus.sentences) tokens.push_back(text::encode_sentence(vocab, s));

    const auto snrs = parse_snr_list(snr_spec);
    const auto kind = channel::kind_from_string(channel_name);
    std::vector<sweep::SweepRow> rows;
    for (std::size_t i = 0; i < snrs.size(); ++i) {
        const auto recs = train::evaluate_model(m, tokens, vocab, {snrs[i]}, kind, derive_seed(seed, i));
        sweep::SweepRow r;
        r.system = system_name;
        r.channel = channel::kind_name(kind);
        r.snr_db = snrs[i];
        r.k_symbols = m.cfg.symbols_per_word;
        r.bleu1 = recs[0].bleu1;
        r.bleu2 = recs[0].bleu2;
        r.bleu3 = recs[0].bleu3;
        r.bleu4 = recs[0].bleu4;
        r.ser = recs[0].ser;
        r.mean_cycles = recs[0].mean_cycles;
        r.n_sentences = recs[0].n_sentences;
        r.seed = derive_seed(seed, i);
        rows.push_back(r);
        std::cout << sweep::format_row(r) << std::endl;
    }
    if (!out_csv.empty()) sweep::write_rows_csv(out_csv, rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic-communication simulator: adaptive-depth transformer codec vs classical chains"};
    app.require_subcommand(1);

    std::string stage = "startup";
    try {
        // ---- prepare-data ----
        auto* prep = app.add_subcommand("prepare-data", "filter a corpus, build the vocabulary, split train/val");
        std::string prep_in, prep_out;
        std::size_t prep_vocab = 4000;
        std::uint64_t prep_seed = 0;
        double prep_val = 0.1;
        prep->add_option("--in", prep_in, "input text file, one sentence per line")->required();
        prep->add_option("--out", prep_out, "output directory")->required();
        prep->add_option("--vocab-size", prep_vocab, "vocabulary cap including reserved tokens");
        prep->add_option("--seed", prep_seed, "split shuffle seed");
        prep->add_option("--val-fraction", prep_val, "validation fraction");

        // ---- make-corpus ----
        auto* mk = app.add_subcommand("make-corpus", "emit a deterministic synthetic corpus");
        std::size_t mk_n = 5000, mk_words = 900;
        std::uint64_t mk_seed = 0;
        std::string mk_out;
        mk->add_option("--sentences", mk_n, "sentence count");
        mk->add_option("--seed", mk_seed, "generator seed");
        mk->add_option("--max-words", mk_words, "distinct word budget");
        mk->add_option("--out", mk_out, "output text file")->required();

        // ---- train ----
        auto* tr = app.add_subcommand("train", "train a model from a config and corpus");
        std::string tr_cfg, tr_corpus, tr_out;
        tr->add_option("--config", tr_cfg, "flat key=value config file")->required();
        tr->add_option("--corpus", tr_corpus, "corpus file or prepare-data directory")->required();
        tr->add_option("--out", tr_out, "checkpoint output path")->required();

        // ---- eval ----
        auto* ev = app.add_subcommand("eval", "evaluate a checkpoint over an SNR list");
        std::string ev_ckpt, ev_corpus, ev_snrs = "0,2,...,12", ev_channel = "awgn", ev_out, ev_name = "ut";
        std::uint64_t ev_seed = 0;
        std::size_t ev_max = 500;
        ev->add_option("--checkpoint", ev_ckpt)->required();
        ev->add_option("--corpus", ev_corpus, "corpus file or prepare-data directory")->required();
        ev->add_option("--snr-list", ev_snrs);
        ev->add_option("--channel", ev_channel)->check(CLI::IsMember({"awgn", "rayleigh"}));
        ev->add_option("--out", ev_out, "CSV output path");
        ev->add_option("--seed", ev_seed);
        ev->add_option("--sentences", ev_max, "evaluation sentence cap");
        ev->add_option("--system-name", ev_name);

        // ---- sweep-snr ----
        auto* sw = app.add_subcommand("sweep-snr", "BLEU/SER sweep for checkpoints and baselines");
        std::vector<std::string> sw_ckpts;
        std::string sw_baselines, sw_corpus, sw_snrs = "0,2,...,12", sw_channel = "awgn", sw_out;
        std::uint64_t sw_seed = 0;
        std::size_t sw_n = 500;
        int sw_jobs = 1;
        sw->add_option("--checkpoint", sw_ckpts, "name=path (repeatable)");
        sw->add_option("--baseline", sw_baselines, "comma list from {turbo,rs}");
        sw->add_option("--corpus", sw_corpus, "evaluation corpus (empty: synthetic)");
        sw->add_option("--snr-list", sw_snrs);
        sw->add_option("--channel", sw_channel)->check(CLI::IsMember({"awgn", "rayleigh"}));
        sw->add_option("--sentences", sw_n);
        sw->add_option("--seed", sw_seed);
        sw->add_option("--jobs", sw_jobs, "concurrent grid points");
        sw->add_option("--out", sw_out)->required();

        // ---- sweep-symbols ----
        auto* sy = app.add_subcommand("sweep-symbols", "BLEU versus symbols-per-word sweep");
        std::vector<std::string> sy_ckpts;
        std::string sy_corpus, sy_snrs = "6", sy_channel = "awgn", sy_out;
        std::uint64_t sy_seed = 0;
        std::size_t sy_n = 500;
        sy->add_option("--checkpoint", sy_ckpts, "K=path (repeatable), e.g. 4=k4.ckpt")->required();
        sy->add_option("--corpus", sy_corpus);
        sy->add_option("--snr-list", sy_snrs);
        sy->add_option("--channel", sy_channel)->check(CLI::IsMember({"awgn", "rayleigh"}));
        sy->add_option("--sentences", sy_n);
        sy->add_option("--seed", sy_seed);
        sy->add_option("--out", sy_out)->required();

        // ---- probe-cycles ----
        auto* pc = app.add_subcommand("probe-cycles", "halting-cycle statistics versus SNR");
        std::string pc_ckpt, pc_corpus, pc_snrs = "0,2,...,12", pc_channel = "awgn", pc_out;
        std::uint64_t pc_seed = 0;
        std::size_t pc_n = 500;
        pc->add_option("--checkpoint", pc_ckpt)->required();
        pc->add_option("--corpus", pc_corpus);
        pc->add_option("--snr-list", pc_snrs);
        pc->add_option("--channel", pc_channel)->check(CLI::IsMember({"awgn", "rayleigh"}));
        pc->add_option("--sentences", pc_n);
        pc->add_option("--seed", pc_seed);
        pc->add_option("--out", pc_out)->required();

        // ---- depth-compare ----
        auto* dc = app.add_subcommand("depth-compare", "adaptive versus fixed-depth stacks, with parameter counts");
        std::vector<std::string> dc_ckpts;
        std::string dc_corpus, dc_snrs = "0,2,...,12", dc_channel = "awgn", dc_out;
        std::uint64_t dc_seed = 0;
        std::size_t dc_n = 500;
        dc->add_option("--checkpoint", dc_ckpts, "name=path (repeatable)")->required();
        dc->add_option("--corpus", dc_corpus);
        dc->add_option("--snr-list", dc_snrs);
        dc->add_option("--channel", dc_channel)->check(CLI::IsMember({"awgn", "rayleigh"}));
        dc->add_option("--sentences", dc_n);
        dc->add_option("--seed", dc_seed);
        dc->add_option("--out", dc_out)->required();

        // ---- baseline ----
        auto* bl = app.add_subcommand("baseline", "classical chain sweep");
        std::string bl_codec = "turbo", bl_channel = "awgn", bl_snrs = "0,2,...,12", bl_out, bl_corpus;
        std::size_t bl_n = 1000;
        std::uint64_t bl_seed = 0;
        bl->add_option("--codec", bl_codec)->check(CLI::IsMember({"turbo", "rs"}));
        bl->add_option("--channel", bl_channel)->check(CLI::IsMember({"awgn", "rayleigh"}));
        bl->add_option("--snr-list", bl_snrs);
        bl->add_option("--sentences", bl_n);
        bl->add_option("--seed", bl_seed);
        bl->add_option("--corpus", bl_corpus, "evaluation corpus (empty: synthetic)");
        bl->add_option("--out", bl_out)->required();

        // ---- plot ----
        auto* pl = app.add_subcommand("plot", "render a sweep CSV as an SVG line plot");
        std::string pl_in, pl_out, pl_metric = "bleu1";
        pl->add_option("--in", pl_in)->required();
        pl->add_option("--metric", pl_metric)
            ->check(CLI::IsMember({"bleu1", "bleu2", "bleu3", "bleu4", "ser", "mean_cycles"}));
        pl->add_option("--out", pl_out)->required();

        CLI11_PARSE(app, argc, argv);

        if (prep->parsed()) {
            stage = "prepare-data";
            return run_prepare_data(prep_in, prep_out, prep_vocab, prep_seed, prep_val);
        }
        if (mk->parsed()) {
            stage = "make-corpus";
            const auto lines = text::synth_corpus(mk_n, mk_seed, mk_words);
            std::ofstream os(mk_out);
            if (!os) throw std::runtime_error("cannot write corpus: " + mk_out);
            for (const auto& l : lines) os << l << "\n";
            std::cout << "wrote " << lines.size() << " sentences to " << mk_out << std::endl;
            return 0;
        }
        if (tr->parsed()) {
            stage = "train";
            return run_train(tr_cfg, tr_corpus, tr_out);
        }
        if (ev->parsed()) {
            stage = "eval";
            return run_eval(ev_ckpt, ev_corpus, ev_snrs, ev_channel, ev_out, ev_seed, ev_max, ev_name);
        }
        if (sw->parsed()) {
            stage = "sweep-snr";
            sweep::SweepSpec spec;
            spec.systems = parse_checkpoint_args(sw_ckpts);
            if (!sw_baselines.empty()) {
                std::istringstream is(sw_baselines);
                std::string item;
                while (std::getline(is, item, ',')) {
                    sweep::SystemSpec s;
                    s.name = item;
                    s.type = item == "turbo" ? sweep::SystemSpec::Type::baseline_turbo
                                             : sweep::SystemSpec::Type::baseline_rs;
                    spec.systems.push_back(s);
                }
            }
            spec.snr_list = parse_snr_list(sw_snrs);
            spec.channel = channel::kind_from_string(sw_channel);
            spec.seed = sw_seed;
            spec.n_sentences = sw_n;
            spec.corpus_path = sw_corpus;
            spec.jobs = sw_jobs;
            sweep::write_rows_csv(sw_out, sweep::run_snr_sweep(spec));
            std::cout << "wrote " << sw_out << std::endl;
            return 0;
        }
        if (sy->parsed()) {
            stage = "sweep-symbols";
            sweep::SweepSpec spec;
            spec.systems = parse_checkpoint_args(sy_ckpts, "ut_k");
            std::vector<int> ks;
            for (const auto& a : sy_ckpts) ks.push_back(std::stoi(a.substr(0, a.find('='))));
            spec.snr_list = parse_snr_list(sy_snrs);
            spec.channel = channel::kind_from_string(sy_channel);
            spec.seed = sy_seed;
            spec.n_sentences = sy_n;
            spec.corpus_path = sy_corpus;
            sweep::write_rows_csv(sy_out, sweep::run_symbols_sweep(spec, ks));
            std::cout << "wrote " << sy_out << std::endl;
            return 0;
        }
        if (pc->parsed()) {
            stage = "probe-cycles";
            sweep::SweepSpec spec;
            sweep::SystemSpec s;
            s.name = "ut";
            s.type = sweep::SystemSpec::Type::checkpoint;
            s.checkpoint_path = pc_ckpt;
            spec.systems = {s};
            spec.snr_list = parse_snr_list(pc_snrs);
            spec.channel = channel::kind_from_string(pc_channel);
            spec.seed = pc_seed;
            spec.n_sentences = pc_n;
            spec.corpus_path = pc_corpus;
            const auto probe = sweep::run_cycles_probe(spec);
            sweep::write_rows_csv(pc_out, probe.rows);
            sweep::write_cycle_sidecars(pc_out, probe);
            std::cout << "wrote " << pc_out << " (+ .hist.csv, .lengths.csv)" << std::endl;
            return 0;
        }
        if (dc->parsed()) {
            stage = "depth-compare";
            sweep::SweepSpec spec;
            spec.systems = parse_checkpoint_args(dc_ckpts);
            spec.snr_list = parse_snr_list(dc_snrs);
            spec.channel = channel::kind_from_string(dc_channel);
            spec.seed = dc_seed;
            spec.n_sentences = dc_n;
            spec.corpus_path = dc_corpus;
            const auto res = sweep::run_depth_compare(spec);
            sweep::write_rows_csv(dc_out, res.rows);
            sweep::write_param_sidecar(dc_out, res.param_counts);
            for (const auto& [name, count] : res.param_counts)
                std::cout << name << " params=" << count << std::endl;
            std::cout << "wrote " << dc_out << " (+ .params.csv)" << std::endl;
            return 0;
        }
        if (bl->parsed()) {
            stage = "baseline";
            sweep::SweepSpec spec;
            sweep::SystemSpec s;
            s.name = bl_codec;
            s.type = bl_codec == "turbo" ? sweep::SystemSpec::Type::baseline_turbo
                                         : sweep::SystemSpec::Type::baseline_rs;
            spec.systems = {s};
            spec.snr_list = parse_snr_list(bl_snrs);
            spec.channel = channel::kind_from_string(bl_channel);
            spec.seed = bl_seed;
            spec.n_sentences = bl_n;
            spec.corpus_path = bl_corpus;
            sweep::write_rows_csv(bl_out, sweep::run_snr_sweep(spec));
            std::cout << "wrote " << bl_out << std::endl;
            return 0;
        }
        if (pl->parsed()) {
            stage = "plot";
            sweep::emit_plot(pl_in, pl_metric, pl_out);
            std::cout << "wrote " << pl_out << std::endl;
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "semcom " << stage << ": error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
