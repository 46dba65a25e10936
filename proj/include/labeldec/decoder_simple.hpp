#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "labeldec/common.hpp"
#include "labeldec/scorer.hpp"

namespace labeldec {

struct NBestEntry {
    std::vector<LabelId> labels;  // ends in EOS exactly once
    double score = 0.0;           // accumulated natural-log score, no length adjustment
};

struct SimpleDecodeOptions {
    std::size_t beam_size = 12;
    std::size_t max_len = 0;
    std::optional<double> length_exponent;  // rank final list by score / len^e
};

/// Unrestricted label-synchronous beam search. Every live hypothesis expands
/// by all labels each step; ended hypotheses stay in the beam and compete by
/// raw score; at max_len only EOS expansions are allowed, so no sequence
/// (including its EOS) exceeds max_len. Ties break toward the
/// lexicographically smaller label sequence. Returns the ended hypotheses of
/// the final beam, best first.
inline std::vector<NBestEntry> decode_simple(const LabelScorer& scorer, LabelId eos_id,
                                             const SimpleDecodeOptions& opts)
{
    if (opts.beam_size < 1) throw ValidationError("beam size must be at least 1");
    if (opts.max_len < 1) throw ValidationError("max_len must be at least 1");
    const std::size_t v = scorer.vocab_size();
    if (eos_id >= v) throw ValidationError("EOS id outside vocabulary");

    struct Hyp {
        std::vector<LabelId> labels;
        double score = 0.0;
        ScorerStatePtr state;
        bool ended = false;
    };
    std::vector<Hyp> beam;
    beam.push_back({{}, 0.0, scorer.start(), false});

    for (std::size_t t = 1; t <= opts.max_len; ++t) {
        bool any_live = false;
        for (const auto& h : beam)
            if (!h.ended) any_live = true;
        if (!any_live) break;

        struct Cand {
            std::vector<LabelId> labels;
            double score;
            const Hyp* parent;     // null for carried ended hypotheses
            LabelId label = 0;
        };
        std::vector<Cand> cands;
        for (const auto& h : beam) {
            if (h.ended) {
                cands.push_back({h.labels, h.score, nullptr, 0});
                continue;
            }
            const std::vector<double> d = scorer.log_dist(h.state);
            const LabelId lo = t == opts.max_len ? eos_id : 0;
            const LabelId hi = t == opts.max_len ? eos_id : static_cast<LabelId>(v - 1);
            for (LabelId label = lo; label <= hi; ++label) {
                if (std::isinf(d[label]) && d[label] < 0) continue;
                Cand c{h.labels, h.score + d[label], &h, label};
                c.labels.push_back(label);
                cands.push_back(std::move(c));
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
            if (x.score != y.score) return x.score > y.score;
            return x.labels < y.labels;
        });
        if (cands.size() > opts.beam_size) cands.resize(opts.beam_size);

        std::vector<Hyp> next;
        next.reserve(cands.size());
        for (auto& c : cands) {
            if (!c.parent || c.label == eos_id) {
                next.push_back({std::move(c.labels), c.score, nullptr, true});
            } else {
                next.push_back({std::move(c.labels), c.score,
                                scorer.step(c.parent->state, c.label), false});
            }
        }
        beam = std::move(next);
        if (beam.empty()) break;
    }

    std::vector<NBestEntry> out;
    for (auto& h : beam)
        if (h.ended) out.push_back({std::move(h.labels), h.score});
    std::sort(out.begin(), out.end(), [&](const NBestEntry& x, const NBestEntry& y) {
        const auto rank = [&](const NBestEntry& e) {
            if (!opts.length_exponent) return e.score;
            return e.score / std::pow(static_cast<double>(e.labels.size()), *opts.length_exponent);
        };
        const double rx = rank(x), ry = rank(y);
        if (rx != ry) return rx > ry;
        return x.labels < y.labels;
    });
    return out;
}

}  // namespace labeldec
