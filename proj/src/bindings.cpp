// Python bindings for the main operations: text pipeline, metrics, channel
// math, classical codecs, the adaptive halting loop, and train/eval entry
// points.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "semcom/channel.hpp"
#include "semcom/checkpoint.hpp"
#include "semcom/classic/fixed_length.hpp"
#include "semcom/classic/pipeline.hpp"
#include "semcom/classic/qam.hpp"
#include "semcom/classic/rs.hpp"
#include "semcom/classic/turbo.hpp"
#include "semcom/config.hpp"
#include "semcom/metrics.hpp"
#include "semcom/model.hpp"
#include "semcom/text.hpp"
#include "semcom/train.hpp"

namespace py = pybind11;
using namespace semcom;

namespace {

std::vector<int> bits_of(const classic::BitStream& s) { return s.to_bits(); }

py::dict act_trace(const std::vector<std::vector<double>>& halt_scores, double threshold,
                   int max_cycles) {
    if (halt_scores.empty()) throw std::invalid_argument("need at least one step of halt scores");
    const std::size_t rows = halt_scores[0].size();
    auto x = core::TensorT<double>::full({rows, 1}, 1.0);
    auto res = model::act_run<double>(
        nullptr, x,
        [](core::TapeT<double>*, const core::TensorT<double>& s, int) { return s; },
        [&](core::TapeT<double>*, const core::TensorT<double>&, int t) {
            const auto& step = halt_scores[std::min<std::size_t>(static_cast<std::size_t>(t),
                                                                 halt_scores.size() - 1)];
            if (step.size() != rows) throw std::invalid_argument("ragged halt score rows");
            auto p = core::TensorT<double>::zeros({rows, 1});
            for (std::size_t i = 0; i < rows; ++i) p.value()[i] = step[i];
            return p;
        },
        threshold, max_cycles, /*want_trace=*/true);

    py::dict out;
    out["cycles"] = res.cycles;
    out["remainder"] = res.remainder;
    out["ponder"] = res.ponder.value();
    std::vector<std::vector<double>> weights;
    for (const auto& tr : res.trace) weights.push_back(tr.weight);
    out["weights"] = weights;
    out["steps_run"] = res.steps_run;
    return out;
}

cfg::Config config_from_dict(const py::dict& d) {
    std::map<std::string, std::string> kv;
    for (const auto& item : d)
        kv[py::cast<std::string>(item.first)] = py::cast<std::string>(py::str(item.second));
    return cfg::Config(std::move(kv));
}

py::dict train_from_lines(const py::dict& config, const std::vector<std::string>& corpus_lines,
                          const std::string& out_ckpt) {
    const auto conf = config_from_dict(config);
    auto tc = train::TrainConfig::from_config(conf);
    auto corpus = text::filter_corpus(corpus_lines);
    if (corpus.sentences.empty()) throw std::runtime_error("corpus has no usable sentences");
    const auto vocab_cap = static_cast<std::size_t>(conf.get_int("data.vocab_size", 4000));
    auto vocab = text::Vocabulary::build(corpus.sentences, vocab_cap);
    std::vector<text::TokenizedSentence> all, train_set, val_set;
    for (const auto& s : corpus.sentences) all.push_back(text::encode_sentence(vocab, s));
    train::split_train_val(all, tc.val_fraction, tc.seed, train_set, val_set);

    auto mc = model::UTConfig::from_config(conf);
    mc.vocab_size = static_cast<int>(vocab.size());
    auto m = model::SemanticModel::init(mc, tc.seed);
    if (!out_ckpt.empty()) vocab.save(out_ckpt + ".vocab");
    const auto res = train::train_model(m, train_set, val_set, vocab, tc, out_ckpt, nullptr);

    py::dict out;
    out["steps"] = res.steps;
    out["first_steps_avg"] = res.first_steps_avg;
    out["final_epoch_avg"] = res.final_epoch_avg;
    out["best_val_bleu1"] = res.best_val_bleu1;
    out["param_count"] = m.param_count();
    return out;
}

std::vector<py::dict> evaluate_checkpoint(const std::string& ckpt,
                                          const std::vector<std::string>& corpus_lines,
                                          const std::vector<double>& snrs,
                                          const std::string& channel_name, std::uint64_t seed) {
    auto m = train::load_model(ckpt);
    auto vocab = text::Vocabulary::load(ckpt + ".vocab");
    auto corpus = text::filter_corpus(corpus_lines);
    if (corpus.sentences.empty()) throw std::runtime_error("no evaluation sentences");
    std::vector<text::TokenizedSentence> tokens;
    for (const auto& s : corpus.sentences) tokens.push_back(text::encode_sentence(vocab, s));
    const auto recs = train::evaluate_model(m, tokens, vocab, snrs, channel::kind_from_string(channel_name), seed);
    std::vector<py::dict> out;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        py::dict d;
        d["snr_db"] = snrs[i];
        d["bleu1"] = recs[i].bleu1;
        d["bleu2"] = recs[i].bleu2;
        d["bleu3"] = recs[i].bleu3;
        d["bleu4"] = recs[i].bleu4;
        d["ser"] = recs[i].ser;
        d["mean_cycles"] = recs[i].mean_cycles;
        d["n_sentences"] = recs[i].n_sentences;
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_semcom, m) {
    m.doc() = "semantic-communication simulator core";

    // ---- text pipeline ----
    m.def("tokenize", &text::tokenize, py::arg("line"));
    m.def("synth_corpus", &text::synth_corpus, py::arg("n"), py::arg("seed"),
          py::arg("max_distinct_words") = 900);

    py::class_<text::Vocabulary>(m, "Vocabulary")
        .def_static("build", &text::Vocabulary::build, py::arg("corpus"), py::arg("max_size"))
        .def_static("load", &text::Vocabulary::load, py::arg("path"))
        .def("save", &text::Vocabulary::save, py::arg("path"))
        .def("id", &text::Vocabulary::id, py::arg("token"))
        .def("token", &text::Vocabulary::token, py::arg("id"))
        .def("__len__", &text::Vocabulary::size)
        .def("encode",
             [](const text::Vocabulary& v, const std::vector<std::string>& words) {
                 return text::encode_sentence(v, words).ids;
             })
        .def("decode", [](const text::Vocabulary& v, const std::vector<int>& ids) {
            return text::decode_tokens(v, ids);
        });

    // ---- metrics ----
    m.def("bleu", &metrics::bleu, py::arg("candidates"), py::arg("references"), py::arg("max_n") = 4);
    m.def("symbol_error_ratio", &metrics::symbol_error_ratio, py::arg("candidates"),
          py::arg("references"));

    // ---- channel ----
    m.def("snr_to_noise_var", &channel::snr_to_noise_var, py::arg("snr_db"));
    m.def(
        "awgn",
        [](const std::vector<std::complex<double>>& x, double snr_db, std::uint64_t seed) {
            auto y = x;
            Rng rng(seed);
            channel::add_awgn(y, channel::snr_to_noise_var(snr_db), rng);
            return y;
        },
        py::arg("symbols"), py::arg("snr_db"), py::arg("seed") = 0);
    m.def(
        "rayleigh_equalized",
        [](const std::vector<std::complex<double>>& x, double snr_db, std::uint64_t seed) {
            auto y = x;
            Rng rng(seed);
            const auto h = channel::fade_and_equalize(y, channel::snr_to_noise_var(snr_db), rng);
            return py::make_tuple(y, h);
        },
        py::arg("symbols"), py::arg("snr_db"), py::arg("seed") = 0);

    // ---- classical chain ----
    m.def("fixed_length_encode", [](const std::string& s) {
        const auto r = classic::fixed_length_encode(s);
        return py::make_tuple(bits_of(r.bits), r.substituted);
    });
    m.def("fixed_length_decode", [](const std::vector<int>& bits) {
        return classic::fixed_length_decode(classic::BitStream::from_bits(bits));
    });
    m.def(
        "turbo_encode",
        [](const std::vector<int>& info) {
            return bits_of(classic::turbo_encode(classic::BitStream::from_bits(info)));
        },
        py::arg("info_bits"));
    m.def(
        "turbo_decode",
        [](const std::vector<double>& llrs, std::size_t k) {
            return bits_of(classic::turbo_decode(llrs, k));
        },
        py::arg("llrs"), py::arg("k"));
    m.def(
        "rs_encode",
        [](const std::vector<std::uint8_t>& data) { return classic::rs_encode(data); },
        py::arg("data_223_bytes"));
    m.def(
        "rs_decode",
        [](const std::vector<std::uint8_t>& received) {
            const auto r = classic::rs_decode(received);
            return py::make_tuple(r.data, r.ok, r.corrected);
        },
        py::arg("received_255_bytes"));
    m.def("qam64_modulate", [](const std::vector<int>& bits) {
        return classic::qam64_modulate(classic::BitStream::from_bits(bits));
    });
    m.def("qam64_demodulate", &classic::qam64_demodulate, py::arg("symbols"), py::arg("noise_var"));
    m.def("uncoded_qam_ber", &classic::uncoded_qam_ber, py::arg("nbits"), py::arg("snr_db"),
          py::arg("seed") = 0);
    m.def(
        "run_classic_pipeline",
        [](const std::vector<std::vector<std::string>>& sentences, const std::string& codec,
           const std::string& channel_name, double snr_db, std::uint64_t seed) {
            classic::ClassicConfig cc;
            cc.codec = classic::codec_from_string(codec);
            cc.channel = channel::kind_from_string(channel_name);
            cc.snr_db = snr_db;
            cc.seed = seed;
            const auto r = classic::run_classic_pipeline(sentences, cc);
            py::dict stats;
            stats["sentences"] = r.stats.sentences;
            stats["rs_block_failures"] = r.stats.rs_block_failures;
            stats["substituted_chars"] = r.stats.substituted_chars;
            return py::make_tuple(r.decoded, stats);
        },
        py::arg("sentences"), py::arg("codec") = "turbo", py::arg("channel") = "awgn",
        py::arg("snr_db") = 8.0, py::arg("seed") = 0);

    // ---- adaptive halting ----
    m.def("act_trace", &act_trace, py::arg("halt_scores"), py::arg("threshold") = 0.9,
          py::arg("max_cycles") = 5,
          "Scripted halting trace: per-step weights, cycle counts, remainders, ponder costs");

    // ---- training / evaluation ----
    m.def("train", &train_from_lines, py::arg("config"), py::arg("corpus_lines"),
          py::arg("out_checkpoint"));
    m.def("evaluate", &evaluate_checkpoint, py::arg("checkpoint"), py::arg("corpus_lines"),
          py::arg("snr_list"), py::arg("channel") = "awgn", py::arg("seed") = 0);
    m.def("checkpoint_tensors", [](const std::string& path) {
        std::vector<py::tuple> out;
        for (const auto& t : ckpt::load_tensors(path)) out.push_back(py::make_tuple(t.name, t.dims));
        return out;
    });
}
