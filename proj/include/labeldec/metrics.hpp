#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "labeldec/common.hpp"
#include "labeldec/lexicon.hpp"

namespace labeldec {

struct WerBreakdown {
    std::size_t substitutions = 0;
    std::size_t insertions = 0;
    std::size_t deletions = 0;
    std::size_t reference_length = 0;
    double wer = 0.0;

    std::size_t errors() const { return substitutions + insertions + deletions; }
};

/// Levenshtein alignment with unit costs. The traceback is deterministic:
/// diagonal (match/substitution) over deletion over insertion wherever several
/// moves achieve the minimum.
inline WerBreakdown wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp)
{
    if (ref.empty() && !hyp.empty())
        throw ValidationError("WER is undefined for an empty reference");
    const std::size_t r = ref.size(), h = hyp.size();
    std::vector<std::vector<std::size_t>> dp(r + 1, std::vector<std::size_t>(h + 1, 0));
    for (std::size_t i = 1; i <= r; ++i) dp[i][0] = i;
    for (std::size_t j = 1; j <= h; ++j) dp[0][j] = j;
    for (std::size_t i = 1; i <= r; ++i)
        for (std::size_t j = 1; j <= h; ++j) {
            const std::size_t sub = dp[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            const std::size_t del = dp[i - 1][j] + 1;
            const std::size_t ins = dp[i][j - 1] + 1;
            dp[i][j] = std::min(sub, std::min(del, ins));
        }

    WerBreakdown out;
    out.reference_length = r;
    std::size_t i = r, j = h;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 &&
            dp[i][j] == dp[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
            if (ref[i - 1] != hyp[j - 1]) ++out.substitutions;
            --i;
            --j;
        } else if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
            ++out.deletions;
            --i;
        } else {
            ++out.insertions;
            --j;
        }
    }
    out.wer = r == 0 ? 0.0 : static_cast<double>(out.errors()) / static_cast<double>(r);
    return out;
}

/// Pooled corpus WER: sum error counts over utterances, divide by the summed
/// reference length (not a per-utterance average).
inline WerBreakdown pool_wer(const std::vector<WerBreakdown>& per_utt)
{
    WerBreakdown out;
    for (const auto& b : per_utt) {
        out.substitutions += b.substitutions;
        out.insertions += b.insertions;
        out.deletions += b.deletions;
        out.reference_length += b.reference_length;
    }
    out.wer = out.reference_length == 0
                  ? 0.0
                  : static_cast<double>(out.errors()) / static_cast<double>(out.reference_length);
    return out;
}

/// Fraction of running word tokens absent from the lexicon.
inline double oov_rate(const std::vector<std::string>& tokens, const Lexicon& lex)
{
    if (tokens.empty()) throw ValidationError("OOV rate is undefined for an empty corpus");
    std::size_t oov = 0;
    for (const auto& t : tokens)
        if (!lex.contains(t)) ++oov;
    return static_cast<double>(oov) / static_cast<double>(tokens.size());
}

}  // namespace labeldec
