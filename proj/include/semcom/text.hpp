#pragma once

// Corpus ingestion, vocabulary construction, tokenization, and batching.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace semcom::text {

// Reserved ids shared by every vocabulary.
constexpr int kPad = 0;
constexpr int kStart = 1;
constexpr int kEnd = 2;
constexpr int kUnk = 3;
constexpr int kNumReserved = 4;

// Lowercase, split on whitespace, strip the punctuation set {. , ; : ! ? ' "}.
// Tokens emptied by stripping disappear; the result contains content words only.
std::vector<std::string> tokenize(const std::string& line);

struct CorpusLoadResult {
    std::vector<std::vector<std::string>> sentences;
    std::size_t kept = 0;
    std::size_t dropped = 0;
};

// One sentence per UTF-8 line; sentences outside [min_len, max_len] words are dropped.
CorpusLoadResult load_corpus(const std::string& path, std::size_t min_len = 4,
                             std::size_t max_len = 30);
CorpusLoadResult filter_corpus(const std::vector<std::string>& lines, std::size_t min_len = 4,
                               std::size_t max_len = 30);

class Vocabulary {
public:
    // Keeps the most frequent (max_size - 4) tokens; ties break lexicographically.
    static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                            std::size_t max_size);

    // File format: one token per line, line number = id, first four lines reserved.
    static Vocabulary load(const std::string& path);
    void save(const std::string& path) const;

    int id(const std::string& token) const;
    const std::string& token(int id) const;
    std::size_t size() const { return id2tok_.size(); }
    bool contains(const std::string& token) const { return tok2id_.count(token) > 0; }

private:
    Vocabulary() = default;
    void push(const std::string& token);

    std::unordered_map<std::string, int> tok2id_;
    std::vector<std::string> id2tok_;
};

struct TokenizedSentence {
    std::vector<int> ids;  // content-word ids only (no specials)
    std::size_t length() const { return ids.size(); }
};

TokenizedSentence encode_sentence(const Vocabulary& v, const std::vector<std::string>& words);
// Stops at the first <END>; skips <PAD>/<START>.
std::vector<std::string> decode_tokens(const Vocabulary& v, const std::vector<int>& ids);

struct Batch {
    std::vector<int> ids;      // row-major [B x max_len], padded with <PAD>
    std::vector<char> mask;    // 1 exactly on non-<PAD> positions
    std::vector<int> lengths;  // per-sentence content length
    std::size_t batch_size = 0;
    std::size_t max_len = 0;

    int id_at(std::size_t b, std::size_t pos) const { return ids[b * max_len + pos]; }
    double pad_fraction() const;
};

// Length-bucketed shuffling: sentences are ordered by length, chunked into
// batches, and the batch order is shuffled deterministically under `seed`.
// Every sentence appears exactly once.
std::vector<Batch> make_batches(const std::vector<TokenizedSentence>& sentences,
                                std::size_t batch_size, std::uint64_t seed);

// Plain chunking of a shuffled sentence order; kept as the comparison point
// for the bucketing pad-waste measurements.
std::vector<Batch> make_batches_unbucketed(const std::vector<TokenizedSentence>& sentences,
                                           std::size_t batch_size, std::uint64_t seed);

// Deterministic English-like template corpus for desk-scale experiments.
// Produces `n` sentences of 4..30 words drawn from a pool of at most
// `max_distinct_words` distinct words.
std::vector<std::string> synth_corpus(std::size_t n, std::uint64_t seed,
                                      std::size_t max_distinct_words = 900);

}  // namespace semcom::text
