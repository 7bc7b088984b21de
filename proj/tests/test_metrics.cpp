#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semcom/metrics.hpp"

using namespace semcom;
using metrics::Sentence;

namespace {
std::vector<Sentence> corpus(std::initializer_list<Sentence> s) { return {s}; }
}  // namespace

TEST_CASE("bleu identity and disjoint corner cases") {
    const auto ref = corpus({{"the", "cat", "sat", "down"}});
    CHECK(metrics::bleu(ref, ref, 4) == doctest::Approx(1.0));
    CHECK(metrics::bleu(corpus({{"a", "b", "c", "d"}}), ref, 4) == doctest::Approx(0.0));
}

TEST_CASE("bleu clipped counts match the hand computation") {
    const auto cand = corpus({{"the", "the", "the", "the"}});
    const auto ref = corpus({{"the", "cat", "sat", "down"}});
    // "the" appears 4 times but is clipped to its single reference occurrence.
    CHECK(metrics::bleu(cand, ref, 1) == doctest::Approx(0.25));
}

TEST_CASE("bleu brevity penalty punishes short candidates") {
    const auto cand = corpus({{"the", "cat"}});
    const auto ref = corpus({{"the", "cat", "sat", "down"}});
    // Unigram precision 1, BP = exp(1 - 4/2).
    CHECK(metrics::bleu(cand, ref, 1) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("bleu stays within [0,1] and is 1 only for exact matches") {
    const auto ref = corpus({{"a", "b", "c", "d", "e"}});
    const auto close = corpus({{"a", "b", "c", "d", "f"}});
    const double b = metrics::bleu(close, ref, 2);
    CHECK(b > 0.0);
    CHECK(b < 1.0);
}

TEST_CASE("bleu input validation") {
    CHECK_THROWS_AS(metrics::bleu({}, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(metrics::bleu(corpus({{"a"}}), {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(metrics::bleu(corpus({{"a"}}), corpus({{"a"}}), 5), std::invalid_argument);
}

TEST_CASE("symbol error ratio counts word-position mismatches") {
    const auto ref = corpus({{"a", "b", "c", "d", "e"}});
    CHECK(metrics::symbol_error_ratio(ref, ref) == doctest::Approx(0.0));

    const auto disjoint = corpus({{"x", "y", "z", "w", "v"}});
    CHECK(metrics::symbol_error_ratio(disjoint, ref) == doctest::Approx(1.0));

    const auto one_sub = corpus({{"a", "b", "X", "d", "e"}});
    CHECK(metrics::symbol_error_ratio(one_sub, ref) == doctest::Approx(0.2));
}

TEST_CASE("length mismatches count as errors over the longer length") {
    const auto ref = corpus({{"a", "b", "c", "d"}});
    const auto shorter = corpus({{"a", "b"}});
    CHECK(metrics::symbol_error_ratio(shorter, ref) == doctest::Approx(0.5));
    const auto longer = corpus({{"a", "b", "c", "d", "e", "f"}});
    CHECK(metrics::symbol_error_ratio(longer, ref) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("ser is invariant to consistent word renaming") {
    const auto cand = corpus({{"a", "b", "q", "d"}});
    const auto ref = corpus({{"a", "b", "c", "d"}});
    // Rename every word w -> w + "_42" on both sides.
    auto rename = [](std::vector<Sentence> v) {
        for (auto& s : v)
            for (auto& w : s) w += "_42";
        return v;
    };
    CHECK(metrics::symbol_error_ratio(cand, ref) ==
          metrics::symbol_error_ratio(rename(cand), rename(ref)));
}

TEST_CASE("corrupting one more word never decreases ser") {
    Sentence ref_s{"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7"};
    Sentence cand_s = ref_s;
    double prev = 0.0;
    for (std::size_t i = 0; i < ref_s.size(); ++i) {
        cand_s[i] = "corrupted";
        const double ser = metrics::symbol_error_ratio({cand_s}, {ref_s});
        CHECK(ser >= prev);
        prev = ser;
    }
    CHECK(prev == doctest::Approx(1.0));
}

TEST_CASE("corpus-level aggregation weights sentences by length") {
    const std::vector<Sentence> refs{{"a", "b"}, {"c", "d", "e", "f"}};
    const std::vector<Sentence> cands{{"a", "x"}, {"c", "d", "e", "f"}};
    // 1 error over 6 positions.
    CHECK(metrics::symbol_error_ratio(cands, refs) == doctest::Approx(1.0 / 6.0));
}
