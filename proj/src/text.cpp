#include "semcom/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "semcom/rng.hpp"

namespace semcom::text {

namespace {

bool is_stripped_punct(char c) {
    switch (c) {
        case '.':
        case ',':
        case ';':
        case ':':
        case '!':
        case '?':
        case '\'':
        case '"':
            return true;
        default:
            return false;
    }
}

}  // namespace

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> words;
    std::string cur;
    for (char raw : line) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
            continue;
        }
        if (is_stripped_punct(raw)) continue;
        cur.push_back(static_cast<char>(std::tolower(c)));
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

CorpusLoadResult filter_corpus(const std::vector<std::string>& lines, std::size_t min_len,
                               std::size_t max_len) {
    CorpusLoadResult res;
    for (const auto& line : lines) {
        auto words = tokenize(line);
        if (words.size() < min_len || words.size() > max_len) {
            ++res.dropped;
            continue;
        }
        ++res.kept;
        res.sentences.push_back(std::move(words));
    }
    return res;
}

CorpusLoadResult load_corpus(const std::string& path, std::size_t min_len, std::size_t max_len) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open corpus file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) {
        for (char c : line) {
            // Reject bytes that cannot start or continue well-formed UTF-8.
            const auto u = static_cast<unsigned char>(c);
            if (u == 0xC0 || u == 0xC1 || u >= 0xF5)
                throw std::runtime_error("invalid UTF-8 byte in corpus file: " + path);
        }
        lines.push_back(line);
    }
    if (is.bad()) throw std::runtime_error("read failure on corpus file: " + path);
    return filter_corpus(lines, min_len, max_len);
}

void Vocabulary::push(const std::string& token) {
    tok2id_[token] = static_cast<int>(id2tok_.size());
    id2tok_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus,
                             std::size_t max_size) {
    if (max_size < 5) throw std::invalid_argument("vocabulary max_size must be at least 5");
    if (corpus.empty()) throw std::invalid_argument("vocabulary build on empty corpus");
    std::map<std::string, std::size_t> counts;
    for (const auto& s : corpus)
        for (const auto& w : s) ++counts[w];

    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.push("<PAD>");
    v.push("<START>");
    v.push("<END>");
    v.push("<UNK>");
    const std::size_t keep = std::min(items.size(), max_size - kNumReserved);
    for (std::size_t i = 0; i < keep; ++i) v.push(items[i].first);
    return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open vocabulary file: " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        v.push(line);
    }
    if (v.size() < kNumReserved) throw std::runtime_error("vocabulary file too short: " + path);
    if (v.id2tok_[0] != "<PAD>" || v.id2tok_[1] != "<START>" || v.id2tok_[2] != "<END>" ||
        v.id2tok_[3] != "<UNK>")
        throw std::runtime_error("vocabulary file missing reserved tokens: " + path);
    return v;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write vocabulary file: " + path);
    for (const auto& t : id2tok_) os << t << "\n";
}

int Vocabulary::id(const std::string& token) const {
    auto it = tok2id_.find(token);
    return it == tok2id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id2tok_.size())
        throw std::out_of_range("token id out of range: " + std::to_string(id));
    return id2tok_[static_cast<std::size_t>(id)];
}

TokenizedSentence encode_sentence(const Vocabulary& v, const std::vector<std::string>& words) {
    TokenizedSentence s;
    s.ids.reserve(words.size());
    for (const auto& w : words) s.ids.push_back(v.id(w));
    return s;
}

std::vector<std::string> decode_tokens(const Vocabulary& v, const std::vector<int>& ids) {
    std::vector<std::string> words;
    for (int id : ids) {
        if (id == kEnd) break;
        if (id == kPad || id == kStart) continue;
        words.push_back(v.token(id));
    }
    return words;
}

double Batch::pad_fraction() const {
    if (ids.empty()) return 0.0;
    std::size_t pads = 0;
    for (char m : mask)
        if (!m) ++pads;
    return static_cast<double>(pads) / static_cast<double>(ids.size());
}

namespace {

Batch batch_from_range(const std::vector<TokenizedSentence>& sentences,
                       const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    Batch b;
    b.batch_size = end - begin;
    for (std::size_t i = begin; i < end; ++i)
        b.max_len = std::max(b.max_len, sentences[order[i]].length());
    b.ids.assign(b.batch_size * b.max_len, kPad);
    b.mask.assign(b.batch_size * b.max_len, 0);
    for (std::size_t i = begin; i < end; ++i) {
        const auto& s = sentences[order[i]];
        const std::size_t row = i - begin;
        b.lengths.push_back(static_cast<int>(s.length()));
        for (std::size_t j = 0; j < s.length(); ++j) {
            b.ids[row * b.max_len + j] = s.ids[j];
            b.mask[row * b.max_len + j] = 1;
        }
    }
    return b;
}

template <class T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

std::vector<Batch> make_batches(const std::vector<TokenizedSentence>& sentences,
                                std::size_t batch_size, std::uint64_t seed) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    Rng rng(seed);
    std::vector<std::size_t> order(sentences.size());
    std::iota(order.begin(), order.end(), 0);
    // Shuffle first so equal-length sentences mix across epoch seeds, then
    // stable-sort by length so each chunk spans a narrow length range.
    shuffle_vec(order, rng);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sentences[a].length() < sentences[b].length();
    });
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t i = 0; i < order.size(); i += batch_size)
        ranges.emplace_back(i, std::min(i + batch_size, order.size()));
    shuffle_vec(ranges, rng);
    std::vector<Batch> out;
    out.reserve(ranges.size());
    for (auto [a, b] : ranges) out.push_back(batch_from_range(sentences, order, a, b));
    return out;
}

std::vector<Batch> make_batches_unbucketed(const std::vector<TokenizedSentence>& sentences,
                                           std::size_t batch_size, std::uint64_t seed) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    Rng rng(seed);
    std::vector<std::size_t> order(sentences.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_vec(order, rng);
    std::vector<Batch> out;
    for (std::size_t i = 0; i < order.size(); i += batch_size)
        out.push_back(batch_from_range(sentences, order, i, std::min(i + batch_size, order.size())));
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

namespace {

const char* kDeterminers[] = {"the", "a", "every", "this", "that", "each", "some", "one"};

const char* kAdjectives[] = {
    "quick",  "lazy",    "bright",   "dark",    "quiet",   "loud",     "small",   "large",
    "old",    "young",   "red",      "blue",    "green",   "yellow",   "heavy",   "light",
    "warm",   "cold",    "clean",    "dirty",   "smooth",  "rough",    "sharp",   "dull",
    "early",  "late",    "happy",    "sad",     "calm",    "wild",     "strong",  "weak",
    "narrow", "wide",    "deep",     "shallow", "empty",   "full",     "open",    "closed",
    "fresh",  "stale",   "simple",   "complex", "cheap",   "fine",     "plain",   "fancy",
    "brave",  "careful", "curious",  "gentle",  "honest",  "patient",  "proud",   "silent",
    "steady", "strange", "sturdy",   "swift",   "tall",    "short",    "tidy",    "vivid",
    "pale",   "distant", "familiar", "foreign", "ancient", "modern",   "wooden",  "golden",
    "silver", "iron",    "round",    "square",  "hollow",  "solid",    "tender",  "bitter",
    "sweet",  "sour",    "gray",     "brown",   "crimson", "slender",  "humble",  "noble",
    "rapid",  "slow",    "eager",    "weary",   "serious", "cheerful", "careless"};

const char* kNouns[] = {
    "fox",      "dog",      "cat",      "bird",    "horse",    "river",   "mountain", "forest",
    "village",  "city",     "road",     "bridge",  "house",    "garden",  "window",   "door",
    "table",    "chair",    "book",     "letter",  "story",    "song",    "voice",    "light",
    "shadow",   "morning",  "evening",  "night",   "winter",   "summer",  "spring",   "autumn",
    "rain",     "snow",     "wind",     "storm",   "cloud",    "star",    "moon",     "sun",
    "teacher",  "student",  "farmer",   "sailor",  "doctor",   "writer",  "painter",  "soldier",
    "child",    "friend",   "neighbor", "stranger","brother",  "sister",  "mother",   "father",
    "king",     "queen",    "market",   "school",  "church",   "castle",  "tower",    "harbor",
    "island",   "valley",   "meadow",   "field",   "stone",    "tree",    "flower",   "grass",
    "leaf",     "branch",   "root",     "seed",    "apple",    "bread",   "water",    "fire",
    "coat",     "hat",      "shoe",     "basket",  "bottle",   "lamp",    "clock",    "mirror",
    "key",      "coin",     "rope",     "wheel",   "boat",     "train",   "wagon",    "journey",
    "question", "answer",   "problem",  "reason",  "secret",   "promise", "dream",    "memory",
    "idea",     "plan",     "word",     "sentence","language", "music",   "silence",  "distance",
    "machine",  "engine",   "signal",   "message", "paper",    "pencil",  "picture",  "map"};

const char* kVerbsTrans[] = {
    "sees",     "finds",    "takes",   "brings",  "carries", "holds",    "opens",   "closes",
    "builds",   "breaks",   "paints",  "writes",  "reads",   "sings",    "teaches", "learns",
    "follows",  "leads",    "watches", "hears",   "knows",   "remembers","forgets", "loves",
    "fears",    "helps",    "thanks",  "greets",  "visits",  "leaves",   "catches", "throws",
    "pushes",   "pulls",    "lifts",   "drops",   "keeps",   "loses",    "wins",    "shares",
    "shows",    "hides",    "sells",   "buys",    "borrows", "returns",  "repairs", "cleans",
    "crosses",  "climbs",   "enters",  "guards",  "answers", "asks",     "calls",   "draws"};

const char* kVerbsIntrans[] = {
    "sleeps", "waits",  "walks",   "runs",    "jumps",  "swims",   "flies",   "falls",
    "rises",  "stands", "sits",    "rests",   "works",  "plays",   "laughs",  "cries",
    "sings",  "dances", "arrives", "departs", "stays",  "returns", "listens", "dreams",
    "smiles", "nods",   "shivers", "wanders", "pauses", "hurries", "stumbles","whispers"};

const char* kAdverbs[] = {
    "quickly", "slowly",   "quietly",  "loudly",   "gently",  "bravely",  "carefully", "eagerly",
    "early",   "late",     "often",    "rarely",   "always",  "never",    "soon",      "again",
    "together","alone",    "outside",  "inside",   "nearby",  "far",      "suddenly",  "finally",
    "almost",  "already",  "calmly",   "proudly",  "sadly",   "happily",  "secretly",  "barely"};

const char* kPreps[] = {"in",   "on",    "under", "over",   "near",   "beside",
                        "behind","beyond","across", "through","against", "toward"};

const char* kConjs[] = {"and", "but", "while", "because", "although", "so"};

template <std::size_t N>
const char* pick(const char* const (&pool)[N], Rng& rng, std::size_t limit) {
    const std::size_t n = std::min(N, limit == 0 ? N : limit);
    return pool[rng.below(n)];
}

struct PoolLimits {
    std::size_t adj, noun, vt, vi, adv;
};

void append_noun_phrase(std::vector<std::string>& w, Rng& rng, const PoolLimits& lim) {
    w.push_back(pick(kDeterminers, rng, 0));
    if (rng.uniform() < 0.55) w.push_back(pick(kAdjectives, rng, lim.adj));
    w.push_back(pick(kNouns, rng, lim.noun));
    if (rng.uniform() < 0.25) {
        w.push_back("of");
        w.push_back(pick(kDeterminers, rng, 0));
        w.push_back(pick(kNouns, rng, lim.noun));
    }
}

void append_clause(std::vector<std::string>& w, Rng& rng, const PoolLimits& lim) {
    append_noun_phrase(w, rng, lim);
    if (rng.uniform() < 0.6) {
        w.push_back(pick(kVerbsTrans, rng, lim.vt));
        append_noun_phrase(w, rng, lim);
    } else {
        w.push_back(pick(kVerbsIntrans, rng, lim.vi));
    }
    if (rng.uniform() < 0.4) w.push_back(pick(kAdverbs, rng, lim.adv));
    if (rng.uniform() < 0.35) {
        w.push_back(pick(kPreps, rng, 0));
        append_noun_phrase(w, rng, lim);
    }
}

}  // namespace

std::vector<std::string> synth_corpus(std::size_t n, std::uint64_t seed,
                                      std::size_t max_distinct_words) {
    Rng rng(seed);
    // Shrink the open word classes proportionally when a smaller vocabulary
    // is requested; the closed classes stay intact.
    const std::size_t full = std::size(kAdjectives) + std::size(kNouns) + std::size(kVerbsTrans) +
                             std::size(kVerbsIntrans) + std::size(kAdverbs);
    const std::size_t closed = std::size(kDeterminers) + std::size(kPreps) + std::size(kConjs) + 1;
    double frac = 1.0;
    if (max_distinct_words > closed && max_distinct_words < full + closed)
        frac = static_cast<double>(max_distinct_words - closed) / static_cast<double>(full);
    frac = std::min(1.0, std::max(0.05, frac));
    const PoolLimits lim{
        std::max<std::size_t>(4, static_cast<std::size_t>(frac * std::size(kAdjectives))),
        std::max<std::size_t>(8, static_cast<std::size_t>(frac * std::size(kNouns))),
        std::max<std::size_t>(4, static_cast<std::size_t>(frac * std::size(kVerbsTrans))),
        std::max<std::size_t>(4, static_cast<std::size_t>(frac * std::size(kVerbsIntrans))),
        std::max<std::size_t>(4, static_cast<std::size_t>(frac * std::size(kAdverbs)))};

    std::vector<std::string> lines;
    lines.reserve(n);
    while (lines.size() < n) {
        std::vector<std::string> w;
        append_clause(w, rng, lim);
        while (w.size() < 26 && rng.uniform() < 0.35) {
            w.push_back(pick(kConjs, rng, 0));
            append_clause(w, rng, lim);
        }
        if (w.size() < 4 || w.size() > 30) continue;
        std::string line;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i) line += ' ';
            line += w[i];
        }
        line += '.';
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace semcom::text
