#pragma once

// Text-level evaluation: corpus BLEU and word-position symbol error ratio.

#include <string>
#include <vector>

namespace semcom::metrics {

using Sentence = std::vector<std::string>;

struct EvalRecord {
    double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
    double ser = 0;
    double mean_cycles = 0;
    std::size_t n_sentences = 0;

    double bleu(int n) const {
        switch (n) {
            case 1: return bleu1;
            case 2: return bleu2;
            case 3: return bleu3;
            case 4: return bleu4;
            default: return 0;
        }
    }
};

// Corpus-level BLEU: clipped modified n-gram precisions up to max_n with
// uniform 1/max_n weights, brevity penalty exp(1 - r/c) when c < r, and no
// smoothing (any zero precision gives score 0).
double bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references,
            int max_n);

// Word-position error ratio: positions compared from index 0, length
// mismatches count as errors, denominator max(len(cand), len(ref)) summed
// over the corpus.
double symbol_error_ratio(const std::vector<Sentence>& candidates,
                          const std::vector<Sentence>& references);

inline double word_accuracy(const std::vector<Sentence>& candidates,
                            const std::vector<Sentence>& references) {
    return 1.0 - symbol_error_ratio(candidates, references);
}

}  // namespace semcom::metrics
