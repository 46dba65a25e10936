#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labeldec/common.hpp"
#include "labeldec/label_units.hpp"
#include "labeldec/lexicon.hpp"

namespace labeldec {

struct Utterance {
    std::string id;
    std::vector<std::string> words;
};

/// `utt_id<TAB>word word ...`, `#` comments, unique ids.
inline std::vector<Utterance> parse_corpus(std::string_view text)
{
    std::vector<Utterance> utts;
    std::set<std::string> seen;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected `utt_id<TAB>transcript`");
        std::string id(line.substr(0, tab));
        if (id.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty utterance id");
        if (!seen.insert(id).second)
            throw ParseError("line " + std::to_string(line_no) + ": duplicate utterance id " + id);
        utts.push_back({std::move(id), split_ws(line.substr(tab + 1))});
    }
    return utts;
}

inline std::string write_corpus(const std::vector<Utterance>& utts)
{
    std::string out;
    for (const auto& u : utts) {
        out += u.id;
        out += '\t';
        out += join(u.words);
        out += '\n';
    }
    return out;
}

inline std::map<std::string, std::uint64_t> corpus_word_counts(const std::vector<Utterance>& utts)
{
    std::map<std::string, std::uint64_t> counts;
    for (const auto& u : utts)
        for (const auto& w : u.words) ++counts[w];
    return counts;
}

enum class OovMode { strict, lenient };

/// Word sequence <-> label id sequence for one unit scheme. Encoding never
/// appends EOS; that is the decoder's business. Decoding is total: spans that
/// match no lexicon word come back as <UNK>.
class Codec {
public:
    Codec(UnitScheme scheme, LabelVocab vocab, std::optional<DisambiguatedLexicon> dlex = {},
          std::optional<BpeModel> bpe = {})
        : scheme_(scheme), vocab_(std::move(vocab)), dlex_(std::move(dlex)), bpe_(std::move(bpe))
    {
        scheme_.validate();
        if (scheme_.is_phone() && !dlex_) throw ValidationError("phone scheme requires a lexicon");
        if (scheme_.is_bpe() && !bpe_) throw ValidationError("BPE scheme requires a merge model");
        if (scheme_.is_phone()) {
            std::vector<std::string> words(dlex_->base.words());
            std::sort(words.begin(), words.end());
            for (const auto& w : words)
                aug_to_word_.emplace(dlex_->augmented_sequence(w), w);  // ties keep smallest word
        }
    }

    const UnitScheme& scheme() const { return scheme_; }
    const LabelVocab& vocab() const { return vocab_; }
    const DisambiguatedLexicon& lexicon() const
    {
        if (!dlex_) throw ValidationError("codec has no lexicon");
        return *dlex_;
    }
    const std::vector<std::string>& lexicon_words() const { return lexicon().base.words(); }

    // Unit strings of one word, before id lookup.
    std::vector<std::string> word_unit_strings(const std::string& word) const
    {
        switch (scheme_.kind) {
            case UnitKind::single_phone: return lexicon().augmented_sequence(word);
            case UnitKind::phone_bpe:
                return apply_bpe(*bpe_, lexicon().augmented_sequence(word));
            case UnitKind::single_char: return utf8_chars(word);
            case UnitKind::char_bpe: {
                auto chars = utf8_chars(word);
                chars.back() += kEowSymbol;
                return apply_bpe(*bpe_, std::move(chars));
            }
            case UnitKind::whole_word: return {word};
        }
        throw ValidationError("unknown unit kind");
    }

    std::vector<LabelId> word_labels(const std::string& word) const
    {
        auto enc = try_word_labels(word);
        if (!enc) throw ValidationError("cannot encode word: " + word);
        return *enc;
    }

    std::vector<LabelId> encode_words(const std::vector<std::string>& words, OovMode mode) const
    {
        std::vector<LabelId> out;
        bool first = true;
        for (const auto& w : words) {
            if (scheme_.kind == UnitKind::single_char && !first)
                out.push_back(vocab_.id(std::string(kWhitespaceLabel)));
            first = false;
            auto enc = try_word_labels(w);
            if (enc) {
                out.insert(out.end(), enc->begin(), enc->end());
                continue;
            }
            if (mode == OovMode::strict)
                throw ValidationError("out-of-vocabulary word: " + w);
            auto unk = vocab_.unk_id();
            if (!unk)
                throw ValidationError("out-of-vocabulary word and no <unk> label: " + w);
            out.push_back(*unk);
        }
        return out;
    }

    std::vector<std::string> decode_to_words(const std::vector<LabelId>& labels) const
    {
        for (LabelId l : labels)
            if (l == vocab_.eos_id())
                throw ValidationError("unexpected <eos> inside a label sequence");

        switch (scheme_.kind) {
            case UnitKind::whole_word: {
                std::vector<std::string> words;
                for (LabelId l : labels)
                    words.push_back(vocab_.unk_id() == l ? std::string(kUnkWord)
                                                         : vocab_.label(l));
                return words;
            }
            case UnitKind::single_char: {
                std::vector<std::string> words;
                std::string cur;
                const LabelId sp = vocab_.id(std::string(kWhitespaceLabel));
                for (LabelId l : labels) {
                    if (l == sp) {
                        if (!cur.empty()) words.push_back(std::move(cur));
                        cur.clear();
                    } else {
                        cur += vocab_.label(l);
                    }
                }
                if (!cur.empty()) words.push_back(std::move(cur));
                return words;
            }
            case UnitKind::char_bpe: {
                std::string all;
                for (LabelId l : labels) all += vocab_.label(l);
                std::vector<std::string> words;
                std::size_t start = 0;
                while (start < all.size()) {
                    std::size_t end = all.find(kEowSymbol, start);
                    if (end == std::string::npos) {
                        words.push_back(all.substr(start));  // unterminated tail
                        break;
                    }
                    if (end > start) words.push_back(all.substr(start, end - start));
                    start = end + kEowSymbol.size();
                }
                return words;
            }
            case UnitKind::single_phone:
            case UnitKind::phone_bpe: return decode_phone_stream(labels);
        }
        throw ValidationError("unknown unit kind");
    }

private:
    std::optional<std::vector<LabelId>> try_word_labels(const std::string& word) const
    {
        if (scheme_.is_phone() && !dlex_->base.contains(word)) return std::nullopt;
        std::vector<LabelId> out;
        for (const auto& s : word_unit_strings(word)) {
            auto id = vocab_.find(s);
            if (!id) return std::nullopt;
            out.push_back(*id);
        }
        return out;
    }

    std::vector<std::string> decode_phone_stream(const std::vector<LabelId>& labels) const
    {
        std::vector<std::string> stream;
        for (LabelId l : labels) {
            const std::string& s = vocab_.label(l);
            if (scheme_.kind == UnitKind::phone_bpe) {
                auto base = bpe_->decompose(s);
                stream.insert(stream.end(), base.begin(), base.end());
            } else {
                stream.push_back(s);
            }
        }

        std::vector<std::string> words;
        std::vector<std::string> cur;
        auto flush = [&] {
            if (cur.empty()) return;
            auto it = aug_to_word_.find(cur);
            words.push_back(it != aug_to_word_.end() ? it->second : std::string(kUnkWord));
            cur.clear();
        };
        for (std::size_t i = 0; i < stream.size(); ++i) {
            cur.push_back(stream[i]);
            bool boundary = false;
            switch (scheme_.eow_variant) {
                case WordEndVariant::eow: boundary = stream[i] == kEowSymbol; break;
                case WordEndVariant::word_end_phone:
                    boundary = has_word_end_marker(stream[i]);
                    break;
                case WordEndVariant::none:
                    boundary = scheme_.disambig && is_disambig_symbol(stream[i]);
                    break;
            }
            if (!boundary) continue;
            if (scheme_.eow_variant != WordEndVariant::none && i + 1 < stream.size() &&
                is_disambig_symbol(stream[i + 1]))
                cur.push_back(stream[++i]);  // the homophone suffix belongs to this word
            flush();
        }
        flush();
        return words;
    }

    UnitScheme scheme_;
    LabelVocab vocab_;
    std::optional<DisambiguatedLexicon> dlex_;
    std::optional<BpeModel> bpe_;
    std::map<std::vector<std::string>, std::string> aug_to_word_;
};

/// Smallest integer threshold t such that dropping every sequence longer than
/// t removes at most drop_fraction of them.
inline std::size_t length_filter_threshold(std::vector<std::size_t> lengths, double drop_fraction)
{
    if (lengths.empty()) throw ValidationError("length filter needs at least one length");
    if (drop_fraction < 0.0 || drop_fraction >= 1.0)
        throw ValidationError("drop fraction must lie in [0, 1)");
    std::sort(lengths.begin(), lengths.end());
    const double budget = drop_fraction * static_cast<double>(lengths.size());
    std::size_t lo = 0, hi = lengths.back();
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        auto over = lengths.end() - std::upper_bound(lengths.begin(), lengths.end(), mid);
        if (static_cast<double>(over) <= budget)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

using TargetRow = std::pair<std::string, std::vector<LabelId>>;

inline std::string write_targets(const std::vector<TargetRow>& rows)
{
    std::string out;
    for (const auto& [id, labels] : rows) {
        out += id;
        out += '\t';
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (i) out += ' ';
            out += std::to_string(labels[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<TargetRow> parse_targets(std::string_view text)
{
    std::vector<TargetRow> rows;
    std::set<std::string> seen;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected `utt_id<TAB>ids`");
        std::string id(line.substr(0, tab));
        if (id.empty() || !seen.insert(id).second)
            throw ParseError("line " + std::to_string(line_no) + ": bad or duplicate utterance id");
        std::vector<LabelId> labels;
        for (const auto& tok : split_ws(line.substr(tab + 1))) {
            LabelId v = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || p != tok.data() + tok.size())
                throw ParseError("line " + std::to_string(line_no) + ": bad label id " + tok);
            labels.push_back(v);
        }
        rows.emplace_back(std::move(id), std::move(labels));
    }
    return rows;
}

}  // namespace labeldec
