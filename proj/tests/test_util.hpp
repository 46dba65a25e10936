#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "labeldec/labeldec.hpp"

namespace testutil {

using namespace labeldec;

inline const std::vector<std::string>& phone_pool()
{
    static const std::vector<std::string> pool = {"aa", "ae", "ah", "ay", "b",  "ch", "d",
                                                  "eh", "f",  "g",  "hh", "ih", "k",  "l",
                                                  "m",  "n",  "p",  "r",  "s",  "t"};
    return pool;
}

inline std::string random_word(std::mt19937& rng, std::set<std::string>& used)
{
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_int_distribution<int> ch(0, 25);
    while (true) {
        std::string w;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) w.push_back(static_cast<char>('a' + ch(rng)));
        if (used.insert(w).second) return w;
    }
}

inline std::vector<std::string> random_phones(std::mt19937& rng, int min_len = 1, int max_len = 5)
{
    std::uniform_int_distribution<int> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, phone_pool().size() - 1);
    std::vector<std::string> p;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) p.push_back(phone_pool()[pick(rng)]);
    return p;
}

// Single-pronunciation lexicon with optional planted homophone classes of
// size 2..4. Words are distinct; homophone classes use distinct pronunciations.
inline Lexicon random_lexicon(std::mt19937& rng, std::size_t max_words,
                              bool plant_homophones = true)
{
    Lexicon lex;
    std::set<std::string> used_words;
    std::set<std::vector<std::string>> used_prons;
    std::uniform_int_distribution<std::size_t> nw(2, std::max<std::size_t>(2, max_words));
    std::size_t n_words = nw(rng);

    std::size_t produced = 0;
    if (plant_homophones && n_words >= 4) {
        std::uniform_int_distribution<std::size_t> nc(1, std::max<std::size_t>(1, n_words / 8));
        std::size_t classes = nc(rng);
        std::uniform_int_distribution<int> cs(2, 4);
        for (std::size_t c = 0; c < classes && produced + 4 < n_words; ++c) {
            std::vector<std::string> pron;
            do {
                pron = random_phones(rng);
            } while (!used_prons.insert(pron).second);
            const int size = cs(rng);
            for (int i = 0; i < size; ++i) {
                lex.add(random_word(rng, used_words), {pron, 1.0});
                ++produced;
            }
        }
    }
    while (produced < n_words) {
        std::vector<std::string> pron;
        do {
            pron = random_phones(rng);
        } while (!used_prons.insert(pron).second);
        lex.add(random_word(rng, used_words), {pron, 1.0});
        ++produced;
    }
    return lex;
}

// Memoized recursive edit distance, the reference implementation for wer().
inline std::size_t edit_distance_oracle(const std::vector<std::string>& a,
                                        const std::vector<std::string>& b)
{
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t best = self(self, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
        best = std::min(best, self(self, i + 1, j) + 1);
        best = std::min(best, self(self, i, j + 1) + 1);
        memo[key] = best;
        return best;
    };
    return rec(rec, 0, 0);
}

// History-dependent pseudo-random scorer: the distribution at each state is a
// deterministic function of (seed, label history), so replays are identical.
class RandomScorer final : public LabelScorer {
public:
    RandomScorer(std::uint64_t seed, std::size_t vocab_size)
        : seed_(seed), vocab_(vocab_size)
    {
    }

    std::size_t vocab_size() const override { return vocab_; }

    ScorerStatePtr start() const override { return std::make_shared<State>(); }

    ScorerStatePtr step(const ScorerStatePtr& state, LabelId label) const override
    {
        auto next = std::make_shared<State>(history(state));
        next->h.push_back(label);
        return next;
    }

    std::vector<double> log_dist(const ScorerStatePtr& state) const override
    {
        const auto& h = history(state);
        std::string key = std::to_string(seed_);
        for (LabelId l : h) {
            key += ',';
            key += std::to_string(l);
        }
        std::mt19937 rng(static_cast<std::uint32_t>(fnv1a64(key)));
        std::uniform_real_distribution<double> u(0.05, 1.0);
        std::vector<double> p(vocab_);
        double sum = 0.0;
        for (auto& x : p) {
            x = u(rng);
            sum += x;
        }
        for (auto& x : p) x = std::log(x / sum);
        return p;
    }

private:
    struct State final : ScorerState {
        State() = default;
        explicit State(std::vector<LabelId> h) : h(std::move(h)) {}
        std::vector<LabelId> h;
    };

    static const std::vector<LabelId>& history(const ScorerStatePtr& s)
    {
        return dynamic_cast<const State&>(*s).h;
    }

    std::uint64_t seed_;
    std::size_t vocab_;
};

// Exhaustive search over every label sequence of length <= max_len (EOS
// included), with decode_simple's tie order: higher score, then
// lexicographically smaller sequence.
inline std::pair<std::vector<LabelId>, double> exhaustive_best(const LabelScorer& scorer,
                                                               LabelId eos, std::size_t max_len)
{
    std::vector<LabelId> best_seq;
    double best_score = -std::numeric_limits<double>::infinity();
    bool found = false;

    std::vector<LabelId> prefix;
    auto consider = [&](const std::vector<LabelId>& seq, double score) {
        if (!found || score > best_score || (score == best_score && seq < best_seq)) {
            found = true;
            best_seq = seq;
            best_score = score;
        }
    };
    auto rec = [&](auto&& self, const ScorerStatePtr& st, double score) -> void {
        const std::vector<double> d = scorer.log_dist(st);
        if (!(std::isinf(d[eos]) && d[eos] < 0)) {
            std::vector<LabelId> seq = prefix;
            seq.push_back(eos);
            consider(seq, score + d[eos]);
        }
        if (prefix.size() + 1 >= max_len) return;
        for (LabelId l = 0; l < scorer.vocab_size(); ++l) {
            if (l == eos) continue;
            if (std::isinf(d[l]) && d[l] < 0) continue;
            prefix.push_back(l);
            self(self, scorer.step(st, l), score + d[l]);
            prefix.pop_back();
        }
    };
    rec(rec, scorer.start(), 0.0);
    return {best_seq, best_score};
}

// Brute-force reachable-word sets per tree node, the lookahead oracle.
inline std::vector<std::vector<std::string>> reachable_words(const PrefixTree& tree)
{
    std::vector<std::vector<std::string>> words(tree.nodes.size());
    auto rec = [&](auto&& self, std::uint32_t node) -> void {
        for (const auto& w : tree.nodes[node].word_ends) words[node].push_back(w);
        for (const auto& [label, child] : tree.nodes[node].children) {
            self(self, child);
            words[node].insert(words[node].end(), words[child].begin(), words[child].end());
        }
    };
    rec(rec, 0);
    return words;
}

}  // namespace testutil
