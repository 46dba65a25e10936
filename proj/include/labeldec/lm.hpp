#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "labeldec/common.hpp"

namespace labeldec {

/// Backoff n-gram model, log10 internally (ARPA convention). Tokens are plain
/// strings; sentence markers are ordinary tokens supplied by the caller.
struct NGramLM {
    struct Entry {
        double logprob = 0.0;
        double backoff = 0.0;  // log10; meaningful only when has_backoff
        bool has_backoff = false;
    };

    std::size_t order = 1;
    std::vector<std::string> vocab;  // id -> token, lexicographic
    std::unordered_map<std::string, int> token_ids;
    std::map<std::vector<int>, Entry> grams;  // key length 1..order
    std::optional<int> unk_id;

    std::optional<int> find_token(const std::string& tok) const
    {
        auto it = token_ids.find(tok);
        if (it == token_ids.end()) return std::nullopt;
        return it->second;
    }

    int token_or_unk(const std::string& tok) const
    {
        if (auto id = find_token(tok)) return *id;
        if (unk_id) return *unk_id;
        throw ValidationError("token not in LM vocabulary and LM has no <unk>: " + tok);
    }
};

struct LMState {
    std::vector<int> history;  // most recent last, length <= order-1
    bool operator==(const LMState&) const = default;
};

namespace detail {

inline void assign_vocab(NGramLM& lm, const std::set<std::string>& tokens)
{
    lm.vocab.assign(tokens.begin(), tokens.end());
    for (std::size_t i = 0; i < lm.vocab.size(); ++i)
        lm.token_ids[lm.vocab[i]] = static_cast<int>(i);
    if (auto it = lm.token_ids.find(std::string(kUnkLabel)); it != lm.token_ids.end())
        lm.unk_id = it->second;
}

}  // namespace detail

/// Add-k smoothing with standard backoff construction: for every seen history
/// h, p(w|h) = (c(h,w)+k)/(c(h)+k|V|) for seen successors, and the held-out
/// mass is spread over the lower order via a backoff weight. All vocabulary
/// tokens get a unigram entry, so every token is scorable.
inline NGramLM train_ngram(const std::vector<std::vector<std::string>>& sentences,
                           std::size_t order, double add_k,
                           const std::vector<std::string>& extra_vocab = {})
{
    if (order < 1) throw ValidationError("LM order must be at least 1");
    if (!(add_k > 0.0)) throw ValidationError("add_k must be positive");

    std::set<std::string> tokens(extra_vocab.begin(), extra_vocab.end());
    std::size_t total = 0;
    for (const auto& sent : sentences) {
        total += sent.size();
        tokens.insert(sent.begin(), sent.end());
    }
    if (total == 0) throw ValidationError("LM training corpus is empty");

    NGramLM lm;
    lm.order = order;
    detail::assign_vocab(lm, tokens);
    const double v = static_cast<double>(lm.vocab.size());

    std::vector<std::map<std::vector<int>, std::uint64_t>> counts(order + 1);
    for (const auto& sent : sentences) {
        std::vector<int> ids;
        ids.reserve(sent.size());
        for (const auto& t : sent) ids.push_back(*lm.find_token(t));
        for (std::size_t o = 1; o <= order; ++o)
            for (std::size_t i = 0; i + o <= ids.size(); ++i)
                ++counts[o][std::vector<int>(ids.begin() + i, ids.begin() + i + o)];
    }

    // Unigrams cover the whole vocabulary; unseen tokens carry pure smoothing mass.
    for (int w = 0; w < static_cast<int>(lm.vocab.size()); ++w) {
        std::uint64_t c = 0;
        if (auto it = counts[1].find({w}); it != counts[1].end()) c = it->second;
        lm.grams[{w}].logprob =
            std::log10((static_cast<double>(c) + add_k) / (static_cast<double>(total) + add_k * v));
    }

    for (std::size_t o = 2; o <= order; ++o) {
        std::map<std::vector<int>, std::uint64_t> context_totals;
        for (const auto& [gram, c] : counts[o])
            context_totals[std::vector<int>(gram.begin(), gram.end() - 1)] += c;
        // Seen histories may be shorter than their own counts suggest (the last
        // o-1 positions of a sentence start o-grams that never complete), so the
        // context total is the sum over completed o-grams, keeping Σ p = 1 exact.
        for (const auto& [gram, c] : counts[o]) {
            const double ctx =
                static_cast<double>(context_totals[std::vector<int>(gram.begin(), gram.end() - 1)]);
            lm.grams[gram].logprob =
                std::log10((static_cast<double>(c) + add_k) / (ctx + add_k * v));
        }
        // Backoff weight per context: leftover mass here over leftover mass one
        // order down, summed across this context's seen successors.
        std::map<std::vector<int>, std::pair<double, double>> leftover;  // ctx -> (hi, lo)
        for (const auto& [gram, c] : counts[o]) {
            std::vector<int> ctx(gram.begin(), gram.end() - 1);
            std::vector<int> lower(gram.begin() + 1, gram.end());
            auto& [hi, lo] = leftover[ctx];
            hi += std::pow(10.0, lm.grams.at(gram).logprob);
            lo += std::pow(10.0, lm.grams.at(lower).logprob);
        }
        for (const auto& [ctx, sums] : leftover) {
            const double num = 1.0 - sums.first;
            const double den = 1.0 - sums.second;
            // num and den vanish together (all successors seen); otherwise both
            // are bounded away from zero by the smoothing mass.
            const double bow = den <= 1e-12 ? 1.0 : std::max(num, 0.0) / den;
            auto& e = lm.grams.at(ctx);
            e.backoff = std::log10(bow);
            e.has_backoff = true;
        }
    }
    return lm;
}

inline LMState begin_state(const NGramLM& lm)
{
    LMState s;
    if (auto id = lm.find_token(std::string(kSentBegin)); id && lm.order > 1)
        s.history.push_back(*id);
    return s;
}

/// Backoff query: longest stored suffix of (history ++ token) wins; each
/// shortening adds the abandoned context's backoff weight (absent contexts
/// contribute nothing). Returns log10 and the advanced state.
inline std::pair<double, LMState> score(const NGramLM& lm, const LMState& state,
                                        const std::string& token)
{
    const int tid = lm.token_or_unk(token);
    std::vector<int> full = state.history;
    full.push_back(tid);

    LMState next;
    if (lm.order > 1) {
        std::size_t keep = std::min(full.size(), lm.order - 1);
        next.history.assign(full.end() - keep, full.end());
    }

    double acc = 0.0;
    for (std::size_t len = std::min(full.size(), lm.order); len >= 1; --len) {
        std::vector<int> key(full.end() - len, full.end());
        if (auto it = lm.grams.find(key); it != lm.grams.end())
            return {it->second.logprob + acc, std::move(next)};
        if (len >= 2) {
            std::vector<int> ctx(full.end() - len, full.end() - 1);
            if (auto it = lm.grams.find(ctx); it != lm.grams.end() && it->second.has_backoff)
                acc += it->second.backoff;
        }
    }
    return {-std::numeric_limits<double>::infinity(), std::move(next)};
}

inline double sequence_logprob(const NGramLM& lm, const std::vector<std::string>& tokens)
{
    LMState s = begin_state(lm);
    double sum = 0.0;
    for (const auto& t : tokens) {
        auto [lp, nxt] = score(lm, s, t);
        sum += lp;
        s = std::move(nxt);
    }
    return sum;
}

inline double unigram_logprob(const NGramLM& lm, const std::string& token)
{
    const int tid = lm.token_or_unk(token);
    if (auto it = lm.grams.find({tid}); it != lm.grams.end()) return it->second.logprob;
    return -std::numeric_limits<double>::infinity();
}

/// Static LM lookahead: per tree node, the best unigram score over every word
/// ending at or below it. One reverse pass suffices because arena children
/// always carry larger indices than their parent.
template <class PrefixTreeT>
inline std::vector<double> lookahead_table(const PrefixTreeT& tree, const NGramLM& lm)
{
    std::vector<double> la(tree.nodes.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = tree.nodes.size(); i-- > 0;) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& w : tree.nodes[i].word_ends)
            best = std::max(best, unigram_logprob(lm, w));
        for (const auto& [label, child] : tree.nodes[i].children)
            best = std::max(best, la[child]);
        la[i] = best;
    }
    return la;
}

namespace detail {

inline double parse_double_field(std::string_view tok, std::size_t line_no)
{
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(line_no) + ": malformed probability field `" +
                         std::string(tok) + "`");
    return v;
}

inline std::string format_double(double v)
{
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

}  // namespace detail

inline std::string write_arpa(const NGramLM& lm)
{
    std::vector<std::size_t> counts(lm.order + 1, 0);
    for (const auto& [gram, e] : lm.grams) ++counts[gram.size()];

    std::string out = "\\data\\\n";
    for (std::size_t o = 1; o <= lm.order; ++o)
        out += "ngram " + std::to_string(o) + "=" + std::to_string(counts[o]) + "\n";
    for (std::size_t o = 1; o <= lm.order; ++o) {
        out += "\n\\" + std::to_string(o) + "-grams:\n";
        for (const auto& [gram, e] : lm.grams) {
            if (gram.size() != o) continue;
            out += detail::format_double(e.logprob);
            out += '\t';
            for (std::size_t i = 0; i < gram.size(); ++i) {
                if (i) out += ' ';
                out += lm.vocab[gram[i]];
            }
            if (e.has_backoff) {
                out += '\t';
                out += detail::format_double(e.backoff);
            }
            out += '\n';
        }
    }
    out += "\n\\end\\\n";
    return out;
}

inline NGramLM parse_arpa(std::string_view text)
{
    struct RawEntry {
        double logprob;
        std::vector<std::string> tokens;
        std::optional<double> backoff;
    };
    std::map<std::size_t, std::size_t> declared;
    std::map<std::size_t, std::vector<RawEntry>> sections;

    enum class St { pre, data, section } st = St::pre;
    std::size_t cur_order = 0;
    bool ended = false;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size() && !ended) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (st == St::pre) {
            if (line != "\\data\\")
                throw ParseError("line " + std::to_string(line_no) + ": expected \\data\\");
            st = St::data;
            continue;
        }
        if (line == "\\end\\") {
            ended = true;
            continue;
        }
        if (line.size() >= 9 && line.front() == '\\' && line.substr(line.size() - 7) == "-grams:") {
            std::size_t o = 0;
            std::string_view num = line.substr(1, line.size() - 8);
            auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), o);
            if (ec != std::errc() || p != num.data() + num.size() || o == 0)
                throw ParseError("line " + std::to_string(line_no) + ": bad section header");
            if (!declared.count(o))
                throw ParseError("line " + std::to_string(line_no) +
                                 ": section order not declared in \\data\\");
            st = St::section;
            cur_order = o;
            continue;
        }
        if (st == St::data) {
            if (line.substr(0, 6) != "ngram ")
                throw ParseError("line " + std::to_string(line_no) + ": expected `ngram N=C`");
            std::string_view rest = line.substr(6);
            std::size_t eq = rest.find('=');
            if (eq == std::string_view::npos)
                throw ParseError("line " + std::to_string(line_no) + ": expected `ngram N=C`");
            std::size_t o = 0, c = 0;
            auto lhs = rest.substr(0, eq), rhs = rest.substr(eq + 1);
            auto [p1, e1] = std::from_chars(lhs.data(), lhs.data() + lhs.size(), o);
            auto [p2, e2] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), c);
            if (e1 != std::errc() || p1 != lhs.data() + lhs.size() || e2 != std::errc() ||
                p2 != rhs.data() + rhs.size() || o == 0)
                throw ParseError("line " + std::to_string(line_no) + ": expected `ngram N=C`");
            declared[o] = c;
            continue;
        }
        // gram entry
        auto fields = split_ws(line);
        if (fields.size() != cur_order + 1 && fields.size() != cur_order + 2)
            throw ParseError("line " + std::to_string(line_no) + ": expected logprob, " +
                             std::to_string(cur_order) + " tokens, optional backoff");
        RawEntry e;
        e.logprob = detail::parse_double_field(fields[0], line_no);
        e.tokens.assign(fields.begin() + 1, fields.begin() + 1 + cur_order);
        if (fields.size() == cur_order + 2)
            e.backoff = detail::parse_double_field(fields.back(), line_no);
        sections[cur_order].push_back(std::move(e));
    }
    if (!ended) throw ParseError("missing \\end\\");
    if (declared.empty()) throw ParseError("\\data\\ declares no ngram orders");

    std::size_t order = declared.rbegin()->first;
    for (std::size_t o = 1; o <= order; ++o)
        if (!declared.count(o))
            throw ParseError("\\data\\ is missing the order-" + std::to_string(o) + " count");
    for (const auto& [o, c] : declared) {
        std::size_t actual = sections.count(o) ? sections[o].size() : 0;
        if (actual != c)
            throw ParseError("order " + std::to_string(o) + ": declared " + std::to_string(c) +
                             " entries, found " + std::to_string(actual));
    }

    NGramLM lm;
    lm.order = order;
    std::set<std::string> tokens;
    for (const auto& e : sections[1]) tokens.insert(e.tokens[0]);
    detail::assign_vocab(lm, tokens);

    for (std::size_t o = 1; o <= order; ++o) {
        for (const auto& e : sections[o]) {
            if (o == order && e.backoff)
                throw ParseError("highest-order entries cannot carry a backoff weight");
            std::vector<int> key;
            for (const auto& t : e.tokens) {
                auto id = lm.find_token(t);
                if (!id) throw ParseError("token not in unigram section: " + t);
                key.push_back(*id);
            }
            auto [it, inserted] = lm.grams.emplace(std::move(key), NGramLM::Entry{});
            if (!inserted) throw ParseError("duplicate " + std::to_string(o) + "-gram entry");
            it->second.logprob = e.logprob;
            if (e.backoff) {
                it->second.backoff = *e.backoff;
                it->second.has_backoff = true;
            }
        }
    }
    return lm;
}

}  // namespace labeldec
