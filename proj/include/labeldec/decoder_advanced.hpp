#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "labeldec/common.hpp"
#include "labeldec/lm.hpp"
#include "labeldec/scorer.hpp"
#include "labeldec/target_encoding.hpp"

namespace labeldec {

/// Trie over per-word label sequences. Root-to-word-end paths are exactly the
/// lexicon's encodings under the codec's scheme; homophones that encode
/// identically share a node and stack up in word_ends.
struct PrefixTree {
    struct Node {
        std::map<LabelId, std::uint32_t> children;
        std::vector<std::string> word_ends;
    };

    std::vector<Node> nodes;  // [0] = root; a child's index always exceeds its parent's

    std::size_t num_words() const
    {
        std::size_t n = 0;
        for (const auto& node : nodes) n += node.word_ends.size();
        return n;
    }
};

inline PrefixTree build_prefix_tree(const Codec& codec)
{
    PrefixTree tree;
    tree.nodes.emplace_back();
    std::vector<std::string> words = codec.lexicon_words();
    std::sort(words.begin(), words.end());  // word_ends come out sorted per node
    for (const auto& w : words) {
        const std::vector<LabelId> labels = codec.word_labels(w);
        if (labels.empty()) throw ValidationError("word encodes to an empty label path: " + w);
        std::uint32_t cur = 0;
        for (LabelId l : labels) {
            auto it = tree.nodes[cur].children.find(l);
            if (it == tree.nodes[cur].children.end()) {
                tree.nodes.emplace_back();
                it = tree.nodes[cur]
                         .children.emplace(l, static_cast<std::uint32_t>(tree.nodes.size() - 1))
                         .first;
            }
            cur = it->second;
        }
        tree.nodes[cur].word_ends.push_back(w);
    }
    return tree;
}

struct TreeDecodeOptions {
    double lambda = 0.3;  // LM scale; no canonical value, tune per task
    std::size_t beam_size = 12;
    std::size_t max_len = 0;
    bool lookahead = false;
};

struct TreeDecodeResult {
    bool found = false;
    std::vector<std::string> words;
    double score = -std::numeric_limits<double>::infinity();
    std::vector<LabelId> labels;  // includes the final EOS

    // Best live hypothesis when nothing ended within max_len.
    std::vector<std::string> partial_words;
    std::vector<LabelId> partial_labels;
    double partial_score = -std::numeric_limits<double>::infinity();
};

/// Lexical prefix-tree beam search. Expansions follow child labels of the
/// current node; a label arriving at a node with word_ends additionally spawns
/// one word-end transition per candidate word in the same step (score +=
/// lambda * LM(word | history), hypothesis re-enters at root). EOS is allowed
/// only at root and adds lambda * LM(sentence-end). With lookahead on,
/// lambda * lookahead(node) rides on every hypothesis and is replaced on each
/// transition (by the next node's value, or the true LM score at word ends),
/// so completed scores telescope to the lookahead-free value. LM scores are
/// log10 and converted to natural log here at the combination boundary.
inline TreeDecodeResult decode_tree(const LabelScorer& scorer, const PrefixTree& tree,
                                    const NGramLM& word_lm, LabelId eos_id,
                                    const TreeDecodeOptions& opts)
{
    if (opts.beam_size < 1) throw ValidationError("beam size must be at least 1");
    if (opts.max_len < 1) throw ValidationError("max_len must be at least 1");
    if (opts.lambda < 0.0) throw ValidationError("LM weight must be non-negative");
    const std::size_t v = scorer.vocab_size();
    if (eos_id >= v) throw ValidationError("EOS id outside vocabulary");
    for (const auto& node : tree.nodes)
        for (const auto& [label, child] : node.children)
            if (label >= v || label == eos_id)
                throw ValidationError("tree label outside scorer vocabulary");

    const double lm_scale = opts.lambda * std::numbers::ln10;
    std::vector<double> la;
    if (opts.lookahead) la = lookahead_table(tree, word_lm);
    const auto la_at = [&](std::uint32_t node) {
        return opts.lookahead ? lm_scale * la[node] : 0.0;
    };

    struct Hyp {
        std::uint32_t node = 0;
        std::vector<std::string> words;
        std::vector<LabelId> labels;
        double score = 0.0;
        ScorerStatePtr sstate;
        LMState lm;
        double la_applied = 0.0;
    };

    Hyp init;
    init.sstate = scorer.start();
    init.lm = begin_state(word_lm);
    init.la_applied = la_at(0);
    init.score = init.la_applied;
    std::vector<Hyp> beam{std::move(init)};

    TreeDecodeResult result;
    const auto offer_completed = [&](std::vector<std::string> words, std::vector<LabelId> labels,
                                     double score) {
        if (result.found &&
            (score < result.score ||
             (score == result.score &&
              std::tie(words, labels) >= std::tie(result.words, result.labels))))
            return;
        result.found = true;
        result.words = std::move(words);
        result.labels = std::move(labels);
        result.score = score;
    };

    struct Cand {
        Hyp h;                    // sstate unset until after pruning
        const ScorerStatePtr* parent_state;
        LabelId label;
    };
    const auto better = [](const Cand& x, const Cand& y) {
        if (x.h.score != y.h.score) return x.h.score > y.h.score;
        return std::tie(x.h.words, x.h.labels) < std::tie(y.h.words, y.h.labels);
    };

    for (std::size_t t = 1; t <= opts.max_len && !beam.empty(); ++t) {
        std::vector<Cand> cands;
        for (const auto& h : beam) {
            const std::vector<double> d = scorer.log_dist(h.sstate);
            if (h.node == 0) {
                const double eos_lp = d[eos_id];
                if (!(std::isinf(eos_lp) && eos_lp < 0)) {
                    auto [lp10, lm_next] = score(word_lm, h.lm, std::string(kSentEnd));
                    std::vector<LabelId> labels = h.labels;
                    labels.push_back(eos_id);
                    offer_completed(h.words, std::move(labels),
                                    h.score + eos_lp - h.la_applied + lm_scale * lp10);
                }
            }
            if (t == opts.max_len) continue;  // last slot is reserved for EOS
            for (const auto& [label, child] : tree.nodes[h.node].children) {
                const double lp = d[label];
                if (std::isinf(lp) && lp < 0) continue;
                const double base = h.score + lp - h.la_applied;
                if (!tree.nodes[child].children.empty()) {
                    Cand c{h, &h.sstate, label};
                    c.h.node = child;
                    c.h.labels.push_back(label);
                    c.h.la_applied = la_at(child);
                    c.h.score = base + c.h.la_applied;
                    c.h.sstate.reset();
                    cands.push_back(std::move(c));
                }
                for (const auto& w : tree.nodes[child].word_ends) {
                    auto [lp10, lm_next] = score(word_lm, h.lm, w);
                    Cand c{h, &h.sstate, label};
                    c.h.node = 0;
                    c.h.words.push_back(w);
                    c.h.labels.push_back(label);
                    c.h.lm = std::move(lm_next);
                    c.h.la_applied = la_at(0);
                    c.h.score = base + lm_scale * lp10 + c.h.la_applied;
                    c.h.sstate.reset();
                    cands.push_back(std::move(c));
                }
            }
        }
        std::sort(cands.begin(), cands.end(), better);
        if (cands.size() > opts.beam_size) cands.resize(opts.beam_size);
        if (cands.empty()) break;  // keep the last live beam for diagnostics

        std::vector<Hyp> next;
        next.reserve(cands.size());
        for (auto& c : cands) {
            c.h.sstate = scorer.step(*c.parent_state, c.label);
            next.push_back(std::move(c.h));
        }
        beam = std::move(next);
    }

    if (!result.found) {
        const Hyp* best = nullptr;
        for (const auto& h : beam)
            if (!best || h.score > best->score ||
                (h.score == best->score &&
                 std::tie(h.words, h.labels) < std::tie(best->words, best->labels)))
                best = &h;
        if (best) {
            result.partial_words = best->words;
            result.partial_labels = best->labels;
            result.partial_score = best->score;
        }
    }
    return result;
}

}  // namespace labeldec
