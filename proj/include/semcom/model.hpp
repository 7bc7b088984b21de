#pragma once

// The learned codec: recurrent weight-tied transformer encoder/decoder with
// adaptive per-position halting, dense channel encoder/decoder, prediction
// head, and the combined cross-entropy + ponder loss. A fixed-depth mode with
// untied per-layer weights serves as the conventional-transformer baseline.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semcom/channel.hpp"
#include "semcom/config.hpp"
#include "semcom/rng.hpp"
#include "semcom/tensor.hpp"
#include "semcom/text.hpp"

namespace semcom::model {

struct UTConfig {
    int vocab_size = 0;
    int d_model = 128;
    int heads = 8;
    int ffn_inner = 512;
    int chan_hidden = 256;
    int max_cycles = 5;          // m
    double act_threshold = 0.9;  // T
    int symbols_per_word = 8;    // K complex symbols per word; real layer width is 2K
    double dropout = 0.1;
    double ponder_tau = 1.0;
    bool ponder_sum = false;  // false: average ponder over positions
    bool binary_ce = false;   // word-wise binary CE variant of the loss
    bool normalize_per_sentence = false;
    enum class Kind { adaptive, fixed_depth };
    Kind kind = Kind::adaptive;
    int depth = 3;     // layers per side in fixed_depth mode
    int max_len = 31;  // longest supported sequence (content words + start)
    double halt_bias_init = 1.0;  // starting halting-sigmoid bias

    void validate() const {
        if (vocab_size < text::kNumReserved) throw std::invalid_argument("vocab_size too small");
        if (d_model <= 0 || heads <= 0 || d_model % heads != 0)
            throw std::invalid_argument("d_model must be a positive multiple of heads");
        if (act_threshold < 0.0 || act_threshold > 1.0)
            throw std::invalid_argument("act_threshold must be in [0,1]");
        if (max_cycles < 1) throw std::invalid_argument("max_cycles must be >= 1");
        if (symbols_per_word < 1) throw std::invalid_argument("symbols_per_word must be >= 1");
        if (kind == Kind::fixed_depth && depth < 1)
            throw std::invalid_argument("depth must be >= 1");
    }

    static UTConfig from_config(const cfg::Config& c) {
        UTConfig u;
        u.vocab_size = static_cast<int>(c.get_int("model.vocab_size", u.vocab_size));
        u.d_model = static_cast<int>(c.get_int("model.d_model", u.d_model));
        u.heads = static_cast<int>(c.get_int("model.heads", u.heads));
        u.ffn_inner = static_cast<int>(c.get_int("model.ffn_inner", u.ffn_inner));
        u.chan_hidden = static_cast<int>(c.get_int("model.chan_hidden", u.chan_hidden));
        u.max_cycles = static_cast<int>(c.get_int("model.max_cycles", u.max_cycles));
        u.act_threshold = c.get_double("model.act_threshold", u.act_threshold);
        u.symbols_per_word = static_cast<int>(c.get_int("model.symbols_per_word", u.symbols_per_word));
        u.dropout = c.get_double("model.dropout", u.dropout);
        u.ponder_tau = c.get_double("model.ponder_tau", u.ponder_tau);
        u.ponder_sum = c.get_bool("model.ponder_sum", u.ponder_sum);
        u.binary_ce = c.get_bool("model.binary_ce", u.binary_ce);
        u.normalize_per_sentence = c.get_bool("model.normalize_per_sentence", u.normalize_per_sentence);
        u.kind = c.get_str("model.kind", "adaptive") == "fixed_depth" ? Kind::fixed_depth : Kind::adaptive;
        u.depth = static_cast<int>(c.get_int("model.depth", u.depth));
        u.max_len = static_cast<int>(c.get_int("model.max_len", u.max_len));
        u.halt_bias_init = c.get_double("model.halt_bias_init", u.halt_bias_init);
        return u;
    }

    void to_config(cfg::Config& c) const {
        c.set("model.vocab_size", std::to_string(vocab_size));
        c.set("model.d_model", std::to_string(d_model));
        c.set("model.heads", std::to_string(heads));
        c.set("model.ffn_inner", std::to_string(ffn_inner));
        c.set("model.chan_hidden", std::to_string(chan_hidden));
        c.set("model.max_cycles", std::to_string(max_cycles));
        c.set("model.act_threshold", std::to_string(act_threshold));
        c.set("model.symbols_per_word", std::to_string(symbols_per_word));
        c.set("model.dropout", std::to_string(dropout));
        c.set("model.ponder_tau", std::to_string(ponder_tau));
        c.set("model.ponder_sum", ponder_sum ? "true" : "false");
        c.set("model.binary_ce", binary_ce ? "true" : "false");
        c.set("model.normalize_per_sentence", normalize_per_sentence ? "true" : "false");
        c.set("model.kind", kind == Kind::fixed_depth ? "fixed_depth" : "adaptive");
        c.set("model.depth", std::to_string(depth));
        c.set("model.max_len", std::to_string(max_len));
        c.set("model.halt_bias_init", std::to_string(halt_bias_init));
    }
};

// Sentence boundaries inside a packed row matrix: sentence i owns rows
// [offsets[i], offsets[i+1]).
struct Spans {
    std::vector<std::size_t> offsets{0};

    std::size_t count() const { return offsets.size() - 1; }
    std::size_t rows() const { return offsets.back(); }
    std::size_t begin(std::size_t i) const { return offsets[i]; }
    std::size_t end(std::size_t i) const { return offsets[i + 1]; }
    std::size_t length(std::size_t i) const { return offsets[i + 1] - offsets[i]; }

    static Spans from_lengths(const std::vector<int>& lengths) {
        Spans s;
        for (int l : lengths) s.offsets.push_back(s.offsets.back() + static_cast<std::size_t>(l));
        return s;
    }
};

// ---------------------------------------------------------------------------
// Sinusoidal coordinate signals (position within sentence + cycle index)
// ---------------------------------------------------------------------------

template <class S>
void write_sinusoid_row(S* row, int index, int d) {
    for (int j = 0; j < d; j += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(d));
        row[j] = static_cast<S>(std::sin(index * freq));
        if (j + 1 < d) row[j + 1] = static_cast<S>(std::cos(index * freq));
    }
}

// Constant [rows x d] position-in-sentence sinusoids.
template <class S>
core::TensorT<S> position_signal(const Spans& spans, int d) {
    auto out = core::TensorT<S>::zeros({spans.rows(), static_cast<std::size_t>(d)});
    std::vector<S> pos_row(static_cast<std::size_t>(d));
    for (std::size_t s = 0; s < spans.count(); ++s) {
        for (std::size_t r = spans.begin(s); r < spans.end(s); ++r) {
            write_sinusoid_row(pos_row.data(), static_cast<int>(r - spans.begin(s)), d);
            std::copy(pos_row.begin(), pos_row.end(),
                      out.value().begin() + r * static_cast<std::size_t>(d));
        }
    }
    return out;
}

// Constant [rows x d] tensor carrying position-in-sentence plus cycle-index
// sinusoids; added to the residual stream at every cycle.
template <class S>
core::TensorT<S> coordinate_signal(const Spans& spans, int cycle, int d) {
    auto out = core::TensorT<S>::zeros({spans.rows(), static_cast<std::size_t>(d)});
    std::vector<S> time_row(static_cast<std::size_t>(d));
    write_sinusoid_row(time_row.data(), cycle, d);
    std::vector<S> pos_row(static_cast<std::size_t>(d));
    for (std::size_t s = 0; s < spans.count(); ++s) {
        for (std::size_t r = spans.begin(s); r < spans.end(s); ++r) {
            write_sinusoid_row(pos_row.data(), static_cast<int>(r - spans.begin(s)), d);
            S* dst = out.value().data() + r * static_cast<std::size_t>(d);
            for (int j = 0; j < d; ++j) dst[j] = pos_row[j] + time_row[j];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

template <class S>
struct DenseT {
    core::TensorT<S> w, b;

    static DenseT make(std::size_t in, std::size_t out, Rng& rng) {
        DenseT d;
        d.w = core::TensorT<S>::zeros({in, out});
        core::init_uniform_fan_in(d.w, in, rng);
        d.b = core::TensorT<S>::zeros({out});
        d.w.set_requires_grad(true);
        d.b.set_requires_grad(true);
        return d;
    }

    core::TensorT<S> forward(core::TapeT<S>* tape, const core::TensorT<S>& x) const {
        return core::add_rowwise(tape, core::matmul(tape, x, w), b);
    }
};

template <class S>
struct LayerNormT {
    core::TensorT<S> gain, bias;

    static LayerNormT make(std::size_t d) {
        LayerNormT n;
        n.gain = core::TensorT<S>::full({d}, S(1));
        n.bias = core::TensorT<S>::zeros({d});
        n.gain.set_requires_grad(true);
        n.bias.set_requires_grad(true);
        return n;
    }

    core::TensorT<S> forward(core::TapeT<S>* tape, const core::TensorT<S>& x) const {
        return core::layer_norm(tape, x, gain, bias, S(1e-6));
    }
};

template <class S>
core::TensorT<S> make_causal_mask(std::size_t n) {
    auto m = core::TensorT<S>::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m.value()[i * n + j] = S(-1e9);
    return m;
}

// Additive mask hiding key positions where keep[j] == 0.
template <class S>
core::TensorT<S> make_key_padding_mask(std::size_t query_len, const std::vector<char>& keep) {
    auto m = core::TensorT<S>::zeros({query_len, keep.size()});
    for (std::size_t i = 0; i < query_len; ++i)
        for (std::size_t j = 0; j < keep.size(); ++j)
            if (!keep[j]) m.value()[i * keep.size() + j] = S(-1e9);
    return m;
}

template <class S>
struct MhaT {
    DenseT<S> wq, wk, wv, wo;
    int heads = 1;

    static MhaT make(int d, int heads, Rng& rng) {
        MhaT m;
        m.heads = heads;
        const auto du = static_cast<std::size_t>(d);
        m.wq = DenseT<S>::make(du, du, rng);
        m.wk = DenseT<S>::make(du, du, rng);
        m.wv = DenseT<S>::make(du, du, rng);
        m.wo = DenseT<S>::make(du, du, rng);
        return m;
    }

    // Scaled dot-product attention over already-projected q/k/v of one
    // sentence; `mask` is an optional additive [Lq x Lk] tensor.
    core::TensorT<S> attend(core::TapeT<S>* tape, const core::TensorT<S>& q,
                            const core::TensorT<S>& k, const core::TensorT<S>& v,
                            const core::TensorT<S>* mask) const {
        const std::size_t d = q.cols();
        const std::size_t dh = d / static_cast<std::size_t>(heads);
        const S inv_scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));
        std::vector<core::TensorT<S>> head_outs;
        head_outs.reserve(static_cast<std::size_t>(heads));
        for (int h = 0; h < heads; ++h) {
            const std::size_t c0 = static_cast<std::size_t>(h) * dh;
            auto qh = core::slice_cols(tape, q, c0, c0 + dh);
            auto kh = core::slice_cols(tape, k, c0, c0 + dh);
            auto vh = core::slice_cols(tape, v, c0, c0 + dh);
            auto scores = core::scale(tape, core::matmul(tape, qh, core::transpose(tape, kh)), inv_scale);
            if (mask) {
                if (mask->rows() != scores.rows() || mask->cols() != scores.cols())
                    throw std::invalid_argument("attention mask shape " + core::shape_str(mask->shape()) +
                                                " does not match scores " +
                                                core::shape_str(scores.shape()));
                scores = core::add(tape, scores, *mask);
            }
            auto attn = core::softmax_rows(tape, scores);
            head_outs.push_back(core::matmul(tape, attn, vh));
        }
        return core::concat_cols(tape, head_outs);
    }

    // Full attention for one sentence including the projections.
    core::TensorT<S> forward(core::TapeT<S>* tape, const core::TensorT<S>& q_in,
                             const core::TensorT<S>& k_in, const core::TensorT<S>& v_in,
                             const core::TensorT<S>* mask) const {
        auto q = wq.forward(tape, q_in);
        auto k = wk.forward(tape, k_in);
        auto v = wv.forward(tape, v_in);
        return wo.forward(tape, attend(tape, q, k, v, mask));
    }

    // Packed multi-sentence attention: projections run once on the packed
    // rows, attention runs per sentence.
    core::TensorT<S> forward_packed(core::TapeT<S>* tape, const core::TensorT<S>& q_in,
                                    const core::TensorT<S>& kv_in, const Spans& q_spans,
                                    const Spans& kv_spans, bool causal) const {
        auto q = wq.forward(tape, q_in);
        auto k = wk.forward(tape, kv_in);
        auto v = wv.forward(tape, kv_in);
        std::vector<core::TensorT<S>> outs;
        outs.reserve(q_spans.count());
        for (std::size_t s = 0; s < q_spans.count(); ++s) {
            auto qs = core::slice_rows(tape, q, q_spans.begin(s), q_spans.end(s));
            auto ks = core::slice_rows(tape, k, kv_spans.begin(s), kv_spans.end(s));
            auto vs = core::slice_rows(tape, v, kv_spans.begin(s), kv_spans.end(s));
            core::TensorT<S> mask;
            if (causal) mask = make_causal_mask<S>(qs.rows());
            outs.push_back(attend(tape, qs, ks, vs, causal ? &mask : nullptr));
        }
        return wo.forward(tape, core::concat_rows(tape, outs));
    }
};

// Single-call attention surface.
template <class S>
core::TensorT<S> multi_head_attention(core::TapeT<S>* tape, const MhaT<S>& params,
                                      const core::TensorT<S>& q, const core::TensorT<S>& k,
                                      const core::TensorT<S>& v,
                                      const core::TensorT<S>* mask = nullptr) {
    return params.forward(tape, q, k, v, mask);
}

// ---------------------------------------------------------------------------
// Adaptive halting loop
// ---------------------------------------------------------------------------

template <class S>
struct ActStepTrace {
    std::vector<S> halt_score;       // p
    std::vector<char> running_mask;  // A (still running after this step)
    std::vector<char> halted_mask;   // B (halted at this step)
    std::vector<S> weight;           // W applied to this step's output
    std::vector<S> halt_accum;       // cumulative halting score after update
};

template <class S>
struct ActResult {
    core::TensorT<S> output;    // sum over steps of W_t (.) block_t(x)
    core::TensorT<S> ponder;    // [rows x 1], remainder + cycle count (differentiable)
    std::vector<int> cycles;    // per-position N
    std::vector<S> remainder;   // per-position R
    int steps_run = 0;
    std::vector<ActStepTrace<S>> trace;
};

template <class S>
using StepFn = std::function<core::TensorT<S>(core::TapeT<S>*, const core::TensorT<S>&, int)>;

// Runs `block` recurrently with per-position halting. Per step the halting
// score p = halt_score(state) is accumulated for running positions; a
// position halts once accumulation would cross `threshold`, taking weight
// equal to its remainder; positions still running at the cycle cap halt with
// remainder weight. Masks are constants in backward; p and the remainders
// carry the gradient of the ponder cost.
template <class S>
ActResult<S> act_run(core::TapeT<S>* tape, const core::TensorT<S>& x, const StepFn<S>& block,
                     const StepFn<S>& halt_score, double threshold, int max_cycles,
                     bool want_trace = false) {
    if (threshold < 0.0 || threshold > 1.0)
        throw std::invalid_argument("act threshold must be in [0,1]");
    if (max_cycles < 1) throw std::invalid_argument("act max_cycles must be >= 1");

    const std::size_t rows = x.rows();
    const auto ones = core::TensorT<S>::full({rows, 1}, S(1));

    auto state = x;
    core::TensorT<S> halt_accum = core::TensorT<S>::zeros({rows, 1});
    core::TensorT<S> remainders;  // defined after the first halting event
    core::TensorT<S> output;
    std::vector<int> cycles(rows, 0);
    std::vector<char> halted(rows, 0);

    ActResult<S> res;
    int t = 0;
    for (; t < max_cycles; ++t) {
        auto p = halt_score(tape, state, t);
        if (p.rows() != rows || p.cols() != 1)
            throw std::invalid_argument("halt score must be [rows x 1], got " +
                                        core::shape_str(p.shape()));

        const bool last = (t == max_cycles - 1);
        auto run_mask = core::TensorT<S>::zeros({rows, 1});   // A: keeps running
        auto halt_mask = core::TensorT<S>::zeros({rows, 1});  // B: halts this step
        for (std::size_t i = 0; i < rows; ++i) {
            if (halted[i]) continue;
            const bool stops =
                last || (halt_accum.value()[i] + p.value()[i] > static_cast<S>(threshold));
            (stops ? halt_mask : run_mask).value()[i] = S(1);
            ++cycles[i];
        }

        // halt_accum += p (.) A ; only positions that keep running accumulate.
        halt_accum = core::add(tape, halt_accum, core::mul(tape, p, run_mask));
        // R_step = B (.) (1 - halt_accum); halting positions take their remainder.
        auto r_step = core::mul(tape, core::sub(tape, ones, halt_accum), halt_mask);
        remainders = remainders.defined() ? core::add(tape, remainders, r_step) : r_step;
        halt_accum = core::add(tape, halt_accum, r_step);
        // W = p (.) A + R (.) B
        auto weight = core::add(tape, core::mul(tape, p, run_mask), r_step);

        state = block(tape, state, t);
        auto contribution = core::mul_colvec(tape, state, weight);
        output = output.defined() ? core::add(tape, output, contribution) : contribution;

        if (want_trace) {
            ActStepTrace<S> tr;
            tr.halt_score = p.value();
            tr.running_mask.resize(rows);
            tr.halted_mask.resize(rows);
            for (std::size_t i = 0; i < rows; ++i) {
                tr.running_mask[i] = run_mask.value()[i] != S(0);
                tr.halted_mask[i] = halt_mask.value()[i] != S(0);
            }
            tr.weight = weight.value();
            tr.halt_accum = halt_accum.value();
            res.trace.push_back(std::move(tr));
        }

        bool all_halted = true;
        for (std::size_t i = 0; i < rows; ++i) {
            if (halt_mask.value()[i] != S(0)) halted[i] = 1;
            all_halted = all_halted && halted[i];
        }
        if (all_halted) {
            ++t;
            break;
        }
    }

    auto n_const = core::TensorT<S>::zeros({rows, 1});
    for (std::size_t i = 0; i < rows; ++i) n_const.value()[i] = static_cast<S>(cycles[i]);
    res.output = output;
    res.ponder = core::add(tape, remainders, n_const);
    res.cycles = std::move(cycles);
    res.remainder = remainders.value();
    res.steps_run = t;
    return res;
}

// ---------------------------------------------------------------------------
// Transformer blocks
// ---------------------------------------------------------------------------

template <class S>
struct EncBlockT {
    MhaT<S> attn;
    LayerNormT<S> ln1;
    DenseT<S> ffn1, ffn2;
    LayerNormT<S> ln2;

    static EncBlockT make(const UTConfig& cfg, Rng& rng) {
        EncBlockT b;
        b.attn = MhaT<S>::make(cfg.d_model, cfg.heads, rng);
        b.ln1 = LayerNormT<S>::make(static_cast<std::size_t>(cfg.d_model));
        b.ffn1 = DenseT<S>::make(static_cast<std::size_t>(cfg.d_model),
                                 static_cast<std::size_t>(cfg.ffn_inner), rng);
        b.ffn2 = DenseT<S>::make(static_cast<std::size_t>(cfg.ffn_inner),
                                 static_cast<std::size_t>(cfg.d_model), rng);
        b.ln2 = LayerNormT<S>::make(static_cast<std::size_t>(cfg.d_model));
        return b;
    }

    // One recurrent step: coordinate signal, self-attention sublayer, then
    // feed-forward sublayer, each with residual + layer norm.
    core::TensorT<S> step(core::TapeT<S>* tape, const core::TensorT<S>& x, int cycle,
                          const Spans& spans, double drop_rate, Rng* drop_rng) const {
        auto u = core::add(tape, x, coordinate_signal<S>(spans, cycle, static_cast<int>(x.cols())));
        auto a = attn.forward_packed(tape, u, u, spans, spans, /*causal=*/false);
        if (drop_rng) a = core::dropout(tape, a, drop_rate, *drop_rng, true);
        auto h = ln1.forward(tape, core::add(tape, u, a));
        auto f = ffn2.forward(tape, core::relu(tape, ffn1.forward(tape, h)));
        if (drop_rng) f = core::dropout(tape, f, drop_rate, *drop_rng, true);
        return ln2.forward(tape, core::add(tape, h, f));
    }
};

template <class S>
struct DecBlockT {
    MhaT<S> self_attn;
    LayerNormT<S> ln1;
    MhaT<S> cross_attn;
    LayerNormT<S> ln2;
    DenseT<S> ffn1, ffn2;
    LayerNormT<S> ln3;

    static DecBlockT make(const UTConfig& cfg, Rng& rng) {
        DecBlockT b;
        b.self_attn = MhaT<S>::make(cfg.d_model, cfg.heads, rng);
        b.ln1 = LayerNormT<S>::make(static_cast<std::size_t>(cfg.d_model));
        b.cross_attn = MhaT<S>::make(cfg.d_model, cfg.heads, rng);
        b.ln2 = LayerNormT<S>::make(static_cast<std::size_t>(cfg.d_model));
        b.ffn1 = DenseT<S>::make(static_cast<std::size_t>(cfg.d_model),
                                 static_cast<std::size_t>(cfg.ffn_inner), rng);
        b.ffn2 = DenseT<S>::make(static_cast<std::size_t>(cfg.ffn_inner),
                                 static_cast<std::size_t>(cfg.d_model), rng);
        b.ln3 = LayerNormT<S>::make(static_cast<std::size_t>(cfg.d_model));
        return b;
    }

    // Causal self-attention, cross-attention to the received features, then
    // feed-forward; residual + layer norm around each. The channel strips the
    // transmit-side position signal from the received features, so the
    // receiver re-stamps them before they serve as cross-attention keys.
    core::TensorT<S> step(core::TapeT<S>* tape, const core::TensorT<S>& x, int cycle,
                          const Spans& spans, const core::TensorT<S>& memory,
                          const Spans& mem_spans, double drop_rate, Rng* drop_rng) const {
        auto u = core::add(tape, x, coordinate_signal<S>(spans, cycle, static_cast<int>(x.cols())));
        auto a = self_attn.forward_packed(tape, u, u, spans, spans, /*causal=*/true);
        if (drop_rng) a = core::dropout(tape, a, drop_rate, *drop_rng, true);
        auto h = ln1.forward(tape, core::add(tape, u, a));
        auto stamped =
            core::add(tape, memory, position_signal<S>(mem_spans, static_cast<int>(memory.cols())));
        auto c = cross_attn.forward_packed(tape, h, stamped, spans, mem_spans, /*causal=*/false);
        if (drop_rng) c = core::dropout(tape, c, drop_rate, *drop_rng, true);
        auto g = ln2.forward(tape, core::add(tape, h, c));
        auto f = ffn2.forward(tape, core::relu(tape, ffn1.forward(tape, g)));
        if (drop_rng) f = core::dropout(tape, f, drop_rate, *drop_rng, true);
        return ln3.forward(tape, core::add(tape, g, f));
    }
};

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

template <class S>
struct LossParts {
    core::TensorT<S> total;   // scalar
    core::TensorT<S> ce;      // scalar
    core::TensorT<S> ponder;  // scalar, pre-tau
};

// Categorical cross-entropy over the target positions plus the scaled ponder
// cost. Targets never contain <PAD>: packed rows carry content words only.
template <class S>
LossParts<S> total_loss(core::TapeT<S>* tape, const core::TensorT<S>& logits,
                        const std::vector<int>& targets, const core::TensorT<S>& enc_ponder,
                        const core::TensorT<S>& dec_ponder, const UTConfig& cfg) {
    if (targets.empty()) throw std::invalid_argument("total_loss on empty target");
    auto per_pos = cfg.binary_ce ? core::binary_cross_entropy_rows(tape, logits, targets)
                                 : core::cross_entropy_rows(tape, logits, targets);
    auto ce = core::mean(tape, per_pos);
    core::TensorT<S> ponder_term;
    if (cfg.ponder_sum)
        ponder_term = core::add(tape, core::sum(tape, enc_ponder), core::sum(tape, dec_ponder));
    else
        ponder_term = core::add(tape, core::mean(tape, enc_ponder), core::mean(tape, dec_ponder));
    auto total = core::add(tape, ce, core::scale(tape, ponder_term, static_cast<S>(cfg.ponder_tau)));
    return {total, ce, ponder_term};
}

// ---------------------------------------------------------------------------
// Full model
// ---------------------------------------------------------------------------

template <class S>
struct ForwardStatsT {
    core::TensorT<S> loss;  // scalar, on tape
    double loss_total = 0;
    double loss_ce = 0;
    double ponder = 0;  // aggregated ponder term (pre-tau)
    double mean_cycles_enc = 0;
    double mean_cycles_dec = 0;

    double mean_cycles() const { return 0.5 * (mean_cycles_enc + mean_cycles_dec); }
};

template <class S>
class SemanticModelT {
public:
    UTConfig cfg;

    static SemanticModelT init(const UTConfig& config, std::uint64_t seed) {
        config.validate();
        SemanticModelT m;
        m.cfg = config;
        Rng rng(derive_seed(seed, 0xC0DE));
        const auto d = static_cast<std::size_t>(config.d_model);
        const auto v = static_cast<std::size_t>(config.vocab_size);
        const auto twok = static_cast<std::size_t>(2 * config.symbols_per_word);
        const auto hidden = static_cast<std::size_t>(config.chan_hidden);

        m.enc_embed_ = core::TensorT<S>::zeros({v, d});
        core::init_uniform_fan_in(m.enc_embed_, d, rng);
        m.enc_embed_.set_requires_grad(true);
        m.dec_embed_ = core::TensorT<S>::zeros({v, d});
        core::init_uniform_fan_in(m.dec_embed_, d, rng);
        m.dec_embed_.set_requires_grad(true);

        const int blocks = config.kind == UTConfig::Kind::adaptive ? 1 : config.depth;
        for (int i = 0; i < blocks; ++i) m.enc_blocks_.push_back(EncBlockT<S>::make(config, rng));
        for (int i = 0; i < blocks; ++i) m.dec_blocks_.push_back(DecBlockT<S>::make(config, rng));

        if (config.kind == UTConfig::Kind::adaptive) {
            m.enc_halt_ = DenseT<S>::make(d, 1, rng);
            m.dec_halt_ = DenseT<S>::make(d, 1, rng);
            m.enc_halt_.b.value()[0] = static_cast<S>(config.halt_bias_init);
            m.dec_halt_.b.value()[0] = static_cast<S>(config.halt_bias_init);
        }

        m.chan_enc1_ = DenseT<S>::make(d, hidden, rng);
        m.chan_enc2_ = DenseT<S>::make(hidden, twok, rng);
        // Keep the ReLU symbol layer alive at initialization; an all-dead
        // layer emits a zero block whose power cannot be normalized.
        for (auto& b : m.chan_enc2_.b.value()) b = S(0.05);
        m.chan_dec1_ = DenseT<S>::make(twok, hidden, rng);
        m.chan_dec2_ = DenseT<S>::make(hidden, d, rng);
        m.predict_ = DenseT<S>::make(d, v, rng);
        m.register_params();
        return m;
    }

    // --- parameter access -------------------------------------------------

    const std::vector<std::pair<std::string, core::TensorT<S>>>& named_params() const {
        return named_;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& [name, t] : named_) n += t.size();
        return n;
    }

    // Two learning-rate groups: the halting dense layers ("act") and
    // everything else ("main").
    std::vector<core::ParamGroupT<S>> param_groups(S lr_main, S lr_act) const {
        core::ParamGroupT<S> main{"main", lr_main, {}};
        core::ParamGroupT<S> act{"act", lr_act, {}};
        for (const auto& [name, t] : named_) {
            if (name.find(".halt.") != std::string::npos)
                act.params.push_back(t);
            else
                main.params.push_back(t);
        }
        std::vector<core::ParamGroupT<S>> out;
        out.push_back(std::move(main));
        if (!act.params.empty()) out.push_back(std::move(act));
        return out;
    }

    const DenseT<S>& encoder_halt() const { return enc_halt_; }
    const DenseT<S>& decoder_halt() const { return dec_halt_; }
    const std::vector<EncBlockT<S>>& encoder_blocks() const { return enc_blocks_; }
    const std::vector<DecBlockT<S>>& decoder_blocks() const { return dec_blocks_; }
    const DenseT<S>& channel_encoder_hidden() const { return chan_enc1_; }
    const DenseT<S>& channel_encoder_out() const { return chan_enc2_; }

    // --- forward pieces ----------------------------------------------------

    struct EncodeOut {
        core::TensorT<S> features;  // [rows x d]
        core::TensorT<S> ponder;    // [rows x 1] (adaptive mode only; else zeros)
        std::vector<int> cycles;
    };

    EncodeOut encode(core::TapeT<S>* tape, const std::vector<int>& flat_ids, const Spans& spans,
                     Rng* drop_rng) const {
        check_lengths(spans, "encoder input");
        auto x = embed(tape, enc_embed_, flat_ids);
        if (cfg.kind == UTConfig::Kind::adaptive) {
            auto res = act_run<S>(
                tape, x,
                [&](core::TapeT<S>* tp, const core::TensorT<S>& s, int t) {
                    return enc_blocks_[0].step(tp, s, t, spans, cfg.dropout, drop_rng);
                },
                [&](core::TapeT<S>* tp, const core::TensorT<S>& s, int) {
                    return core::sigmoid(tp, enc_halt_.forward(tp, s));
                },
                cfg.act_threshold, cfg.max_cycles);
            return {res.output, res.ponder, res.cycles};
        }
        for (int i = 0; i < cfg.depth; ++i)
            x = enc_blocks_[static_cast<std::size_t>(i)].step(tape, x, i, spans, cfg.dropout, drop_rng);
        return {x, core::TensorT<S>::zeros({spans.rows(), 1}),
                std::vector<int>(spans.rows(), cfg.depth)};
    }

    // Dense channel encoder: d -> hidden -> 2K, ReLU activations.
    core::TensorT<S> channel_encode(core::TapeT<S>* tape, const core::TensorT<S>& features) const {
        auto h = core::relu(tape, chan_enc1_.forward(tape, features));
        return core::relu(tape, chan_enc2_.forward(tape, h));
    }

    // Dense channel decoder: 2K -> hidden -> d, ReLU activations.
    core::TensorT<S> channel_decode(core::TapeT<S>* tape, const core::TensorT<S>& y_real) const {
        auto h = core::relu(tape, chan_dec1_.forward(tape, y_real));
        return core::relu(tape, chan_dec2_.forward(tape, h));
    }

    struct DecodeOut {
        core::TensorT<S> logits;  // [rows x V]
        core::TensorT<S> ponder;
        std::vector<int> cycles;
    };

    DecodeOut decode(core::TapeT<S>* tape, const core::TensorT<S>& memory, const Spans& mem_spans,
                     const std::vector<int>& prefix_flat, const Spans& prefix_spans,
                     Rng* drop_rng) const {
        check_lengths(prefix_spans, "decoder target");
        auto x = embed(tape, dec_embed_, prefix_flat);
        core::TensorT<S> hid;
        core::TensorT<S> ponder;
        std::vector<int> cycles;
        if (cfg.kind == UTConfig::Kind::adaptive) {
            auto res = act_run<S>(
                tape, x,
                [&](core::TapeT<S>* tp, const core::TensorT<S>& s, int t) {
                    return dec_blocks_[0].step(tp, s, t, prefix_spans, memory, mem_spans,
                                               cfg.dropout, drop_rng);
                },
                [&](core::TapeT<S>* tp, const core::TensorT<S>& s, int) {
                    return core::sigmoid(tp, dec_halt_.forward(tp, s));
                },
                cfg.act_threshold, cfg.max_cycles);
            hid = res.output;
            ponder = res.ponder;
            cycles = res.cycles;
        } else {
            hid = x;
            for (int i = 0; i < cfg.depth; ++i)
                hid = dec_blocks_[static_cast<std::size_t>(i)].step(tape, hid, i, prefix_spans,
                                                                    memory, mem_spans, cfg.dropout,
                                                                    drop_rng);
            ponder = core::TensorT<S>::zeros({prefix_spans.rows(), 1});
            cycles.assign(prefix_spans.rows(), cfg.depth);
        }
        return {predict_.forward(tape, hid), ponder, cycles};
    }

    // --- full training-mode forward -----------------------------------------

    ForwardStatsT<S> forward_batch(core::TapeT<S>* tape, const text::Batch& batch,
                                   channel::Kind chan_kind, double snr_db, Rng& chan_rng,
                                   Rng* drop_rng) const {
        std::vector<int> src_flat;
        Spans spans = pack_batch(batch, src_flat);

        auto enc = encode(tape, src_flat, spans, drop_rng);
        auto x_real = channel_encode(tape, enc.features);

        auto block = channel::complex_from_real(tape, x_real);
        auto normalized = cfg.normalize_per_sentence
                              ? channel::power_normalize_per_sentence(tape, block, spans.offsets)
                              : channel::power_normalize(tape, block);
        channel::ChannelConfig ch{chan_kind, snr_db, 0};
        auto received = channel::transmit(tape, normalized, ch, chan_rng, spans.offsets);
        auto y_real = channel::real_from_complex(tape, received);

        auto features_hat = channel_decode(tape, y_real);

        std::vector<int> prefix_flat;
        Spans prefix_spans = make_teacher_prefix(batch, prefix_flat);
        auto dec = decode(tape, features_hat, spans, prefix_flat, prefix_spans, drop_rng);

        auto loss = total_loss(tape, dec.logits, src_flat, enc.ponder, dec.ponder, cfg);

        ForwardStatsT<S> st;
        st.loss = loss.total;
        st.loss_total = static_cast<double>(loss.total.scalar_value());
        st.loss_ce = static_cast<double>(loss.ce.scalar_value());
        st.ponder = static_cast<double>(loss.ponder.scalar_value());
        st.mean_cycles_enc = mean_of(enc.cycles);
        st.mean_cycles_dec = mean_of(dec.cycles);
        return st;
    }

    // --- greedy inference ----------------------------------------------------

    struct GreedyOut {
        std::vector<std::vector<int>> ids;  // decoded word ids per sentence
        double mean_cycles = 0;             // encoder + final decoder run pooled
    };

    GreedyOut greedy_decode(const text::Batch& batch, channel::Kind chan_kind, double snr_db,
                            Rng& chan_rng) const {
        std::vector<int> src_flat;
        Spans spans = pack_batch(batch, src_flat);

        auto enc = encode(nullptr, src_flat, spans, nullptr);
        auto x_real = channel_encode(nullptr, enc.features);
        auto block = channel::complex_from_real<S>(nullptr, x_real);
        auto normalized = cfg.normalize_per_sentence
                              ? channel::power_normalize_per_sentence<S>(nullptr, block, spans.offsets)
                              : channel::power_normalize<S>(nullptr, block);
        channel::ChannelConfig ch{chan_kind, snr_db, 0};
        auto received = channel::transmit<S>(nullptr, normalized, ch, chan_rng, spans.offsets);
        auto features_hat = channel_decode(nullptr, channel::real_from_complex<S>(nullptr, received));

        const std::size_t n = spans.count();
        GreedyOut out;
        out.ids.assign(n, {});
        std::size_t max_steps = 0;
        for (std::size_t s = 0; s < n; ++s) max_steps = std::max(max_steps, spans.length(s));

        std::vector<int> dec_cycles;
        for (std::size_t step = 1; step <= max_steps; ++step) {
            std::vector<int> prefix_flat;
            Spans prefix_spans;
            std::vector<std::size_t> active;
            for (std::size_t s = 0; s < n; ++s) {
                if (spans.length(s) < step) continue;
                active.push_back(s);
                prefix_flat.push_back(text::kStart);
                for (int id : out.ids[s]) prefix_flat.push_back(id);
                prefix_spans.offsets.push_back(prefix_spans.offsets.back() + step);
            }
            Spans mem_spans;
            core::TensorT<S> memory = sub_memory(features_hat, spans, active, mem_spans);
            auto dec = decode(nullptr, memory, mem_spans, prefix_flat, prefix_spans, nullptr);
            for (std::size_t a = 0; a < active.size(); ++a) {
                const std::size_t row = prefix_spans.end(a) - 1;
                out.ids[active[a]].push_back(argmax_row(dec.logits, row));
            }
            if (step == max_steps) dec_cycles = dec.cycles;
        }

        double cyc = 0;
        std::size_t cnt = 0;
        for (int c : enc.cycles) {
            cyc += c;
            ++cnt;
        }
        for (int c : dec_cycles) {
            cyc += c;
            ++cnt;
        }
        out.mean_cycles = cnt ? cyc / static_cast<double>(cnt) : 0.0;
        return out;
    }

    // Teacher-forced cycle probe: runs the full train-mode forward without
    // dropout at the given SNR and reports per-position cycle counts.
    struct CycleProbe {
        std::vector<int> enc_cycles, dec_cycles;
        std::vector<std::size_t> enc_lengths;  // sentence length per enc position
    };

    CycleProbe probe_cycles(const text::Batch& batch, channel::Kind chan_kind, double snr_db,
                            Rng& chan_rng) const {
        std::vector<int> src_flat;
        Spans spans = pack_batch(batch, src_flat);
        auto enc = encode(nullptr, src_flat, spans, nullptr);
        auto x_real = channel_encode(nullptr, enc.features);
        auto block = channel::complex_from_real<S>(nullptr, x_real);
        auto normalized = cfg.normalize_per_sentence
                              ? channel::power_normalize_per_sentence<S>(nullptr, block, spans.offsets)
                              : channel::power_normalize<S>(nullptr, block);
        channel::ChannelConfig ch{chan_kind, snr_db, 0};
        auto received = channel::transmit<S>(nullptr, normalized, ch, chan_rng, spans.offsets);
        auto features_hat = channel_decode(nullptr, channel::real_from_complex<S>(nullptr, received));
        std::vector<int> prefix_flat;
        Spans prefix_spans = make_teacher_prefix(batch, prefix_flat);
        auto dec = decode(nullptr, features_hat, spans, prefix_flat, prefix_spans, nullptr);

        CycleProbe probe;
        probe.enc_cycles = enc.cycles;
        probe.dec_cycles = dec.cycles;
        for (std::size_t s = 0; s < spans.count(); ++s)
            for (std::size_t r = spans.begin(s); r < spans.end(s); ++r)
                probe.enc_lengths.push_back(spans.length(s));
        return probe;
    }

    // --- helpers -------------------------------------------------------------

    static Spans pack_batch(const text::Batch& batch, std::vector<int>& flat) {
        Spans spans = Spans::from_lengths(batch.lengths);
        flat.clear();
        flat.reserve(spans.rows());
        for (std::size_t b = 0; b < batch.batch_size; ++b)
            for (int j = 0; j < batch.lengths[b]; ++j)
                flat.push_back(batch.id_at(b, static_cast<std::size_t>(j)));
        return spans;
    }

    core::TensorT<S> embed(core::TapeT<S>* tape, const core::TensorT<S>& table,
                           const std::vector<int>& ids) const {
        auto x = core::embedding_lookup(tape, table, ids);
        return core::scale(tape, x, static_cast<S>(std::sqrt(static_cast<double>(cfg.d_model))));
    }

    static Spans make_teacher_prefix(const text::Batch& batch, std::vector<int>& flat) {
        Spans spans = Spans::from_lengths(batch.lengths);
        flat.clear();
        flat.reserve(spans.rows());
        for (std::size_t b = 0; b < batch.batch_size; ++b) {
            flat.push_back(text::kStart);
            for (int j = 0; j + 1 < batch.lengths[b]; ++j)
                flat.push_back(batch.id_at(b, static_cast<std::size_t>(j)));
        }
        return spans;
    }

    void load_named(const std::string& name, const std::vector<std::uint32_t>& dims,
                    const std::vector<float>& data) {
        auto it = by_name_.find(name);
        if (it == by_name_.end())
            throw std::runtime_error("checkpoint tensor '" + name + "' is unknown to this model");
        auto& t = it->second;
        std::vector<std::size_t> shape(dims.begin(), dims.end());
        if (shape != t.shape())
            throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                                     core::shape_str(shape) + " but model expects " +
                                     core::shape_str(t.shape()));
        for (std::size_t i = 0; i < data.size(); ++i) t.value()[i] = static_cast<S>(data[i]);
    }

private:
    void check_lengths(const Spans& spans, const char* what) const {
        for (std::size_t s = 0; s < spans.count(); ++s)
            if (spans.length(s) > static_cast<std::size_t>(cfg.max_len))
                throw std::invalid_argument(std::string(what) + " length " +
                                            std::to_string(spans.length(s)) +
                                            " exceeds the supported maximum " +
                                            std::to_string(cfg.max_len));
    }

    static double mean_of(const std::vector<int>& v) {
        if (v.empty()) return 0;
        double acc = 0;
        for (int x : v) acc += x;
        return acc / static_cast<double>(v.size());
    }

    static int argmax_row(const core::TensorT<S>& m, std::size_t row) {
        const std::size_t c = m.cols();
        const S* p = m.value().data() + row * c;
        int best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (p[j] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
        return best;
    }

    static core::TensorT<S> sub_memory(const core::TensorT<S>& memory, const Spans& spans,
                                       const std::vector<std::size_t>& active, Spans& out_spans) {
        out_spans = Spans{};
        std::vector<core::TensorT<S>> parts;
        for (std::size_t s : active) {
            parts.push_back(core::slice_rows<S>(nullptr, memory, spans.begin(s), spans.end(s)));
            out_spans.offsets.push_back(out_spans.offsets.back() + spans.length(s));
        }
        return core::concat_rows<S>(nullptr, parts);
    }

    void add_param(const std::string& name, core::TensorT<S> t) {
        t.set_name(name);
        named_.emplace_back(name, t);
        by_name_.emplace(name, t);
    }

    void add_dense(const std::string& prefix, DenseT<S>& d) {
        add_param(prefix + ".w", d.w);
        add_param(prefix + ".b", d.b);
    }

    void add_norm(const std::string& prefix, LayerNormT<S>& n) {
        add_param(prefix + ".gain", n.gain);
        add_param(prefix + ".bias", n.bias);
    }

    void add_mha(const std::string& prefix, MhaT<S>& m) {
        add_dense(prefix + ".wq", m.wq);
        add_dense(prefix + ".wk", m.wk);
        add_dense(prefix + ".wv", m.wv);
        add_dense(prefix + ".wo", m.wo);
    }

    void register_params() {
        add_param("enc.embed", enc_embed_);
        for (std::size_t i = 0; i < enc_blocks_.size(); ++i) {
            const std::string p = "enc.block" + std::to_string(i);
            add_mha(p + ".attn", enc_blocks_[i].attn);
            add_norm(p + ".ln1", enc_blocks_[i].ln1);
            add_dense(p + ".ffn1", enc_blocks_[i].ffn1);
            add_dense(p + ".ffn2", enc_blocks_[i].ffn2);
            add_norm(p + ".ln2", enc_blocks_[i].ln2);
        }
        if (cfg.kind == UTConfig::Kind::adaptive) add_dense("enc.halt.dense", enc_halt_);
        add_dense("chan.enc1", chan_enc1_);
        add_dense("chan.enc2", chan_enc2_);
        add_dense("chan.dec1", chan_dec1_);
        add_dense("chan.dec2", chan_dec2_);
        add_param("dec.embed", dec_embed_);
        for (std::size_t i = 0; i < dec_blocks_.size(); ++i) {
            const std::string p = "dec.block" + std::to_string(i);
            add_mha(p + ".self", dec_blocks_[i].self_attn);
            add_norm(p + ".ln1", dec_blocks_[i].ln1);
            add_mha(p + ".cross", dec_blocks_[i].cross_attn);
            add_norm(p + ".ln2", dec_blocks_[i].ln2);
            add_dense(p + ".ffn1", dec_blocks_[i].ffn1);
            add_dense(p + ".ffn2", dec_blocks_[i].ffn2);
            add_norm(p + ".ln3", dec_blocks_[i].ln3);
        }
        if (cfg.kind == UTConfig::Kind::adaptive) add_dense("dec.halt.dense", dec_halt_);
        add_dense("predict", predict_);
    }

    core::TensorT<S> enc_embed_, dec_embed_;
    std::vector<EncBlockT<S>> enc_blocks_;
    std::vector<DecBlockT<S>> dec_blocks_;
    DenseT<S> enc_halt_, dec_halt_;
    DenseT<S> chan_enc1_, chan_enc2_, chan_dec1_, chan_dec2_;
    DenseT<S> predict_;
    std::vector<std::pair<std::string, core::TensorT<S>>> named_;
    std::map<std::string, core::TensorT<S>> by_name_;
};

using SemanticModel = SemanticModelT<float>;

}  // namespace semcom::model
