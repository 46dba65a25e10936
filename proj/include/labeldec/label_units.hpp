#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "labeldec/common.hpp"
#include "labeldec/lexicon.hpp"

namespace labeldec {

enum class UnitKind { single_phone, phone_bpe, single_char, char_bpe, whole_word };

inline std::string to_string(UnitKind k)
{
    switch (k) {
        case UnitKind::single_phone: return "single-phone";
        case UnitKind::phone_bpe: return "phone-bpe";
        case UnitKind::single_char: return "single-char";
        case UnitKind::char_bpe: return "char-bpe";
        case UnitKind::whole_word: return "whole-word";
    }
    return "?";
}

struct UnitScheme {
    UnitKind kind = UnitKind::single_phone;
    WordEndVariant eow_variant = WordEndVariant::none;  // phone kinds only
    bool disambig = false;                              // phone kinds only
    std::size_t bpe_merges = 0;                         // bpe kinds only

    bool is_phone() const { return kind == UnitKind::single_phone || kind == UnitKind::phone_bpe; }
    bool is_char() const { return kind == UnitKind::single_char || kind == UnitKind::char_bpe; }
    bool is_bpe() const { return kind == UnitKind::phone_bpe || kind == UnitKind::char_bpe; }

    void validate() const
    {
        if (!is_phone() && eow_variant != WordEndVariant::none)
            throw ValidationError("word-end variant applies to phone schemes only");
        if (!is_phone() && disambig)
            throw ValidationError("disambiguation symbols apply to phone schemes only");
        if (!is_bpe() && bpe_merges != 0)
            throw ValidationError("bpe_merges applies to BPE schemes only");
    }
};

/// Label inventory with stable ids: specials first (EOS, then UNK when
/// present), remaining labels in lexicographic order.
class LabelVocab {
public:
    static LabelVocab build(const std::set<std::string>& regular, bool with_unk)
    {
        LabelVocab v;
        v.push(std::string(kEosLabel));
        if (with_unk) v.push(std::string(kUnkLabel));
        for (const auto& l : regular) {
            if (l == kEosLabel || l == kUnkLabel)
                throw ValidationError("label collides with reserved spelling: " + l);
            v.push(l);
        }
        return v;
    }

    LabelId id(const std::string& label) const
    {
        auto it = ids_.find(label);
        if (it == ids_.end()) throw ValidationError("label not in vocabulary: " + label);
        return it->second;
    }

    std::optional<LabelId> find(const std::string& label) const
    {
        auto it = ids_.find(label);
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& label(LabelId id) const { return labels_.at(id); }
    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t size() const { return labels_.size(); }
    LabelId eos_id() const { return eos_id_; }
    std::optional<LabelId> unk_id() const { return unk_id_; }

    // One label per line, line number = id.
    std::string to_text() const
    {
        std::string out;
        for (const auto& l : labels_) {
            out += l;
            out += '\n';
        }
        return out;
    }

    static LabelVocab parse(std::string_view text)
    {
        LabelVocab v;
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string_view::npos) eol = text.size();
            std::string_view line = text.substr(pos, eol - pos);
            pos = eol + 1;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line.empty()) continue;
            v.push(std::string(line));
        }
        if (!v.has_eos_)
            throw ParseError("vocabulary has no <eos> label");
        return v;
    }

private:
    void push(const std::string& label)
    {
        if (!ids_.emplace(label, static_cast<LabelId>(labels_.size())).second)
            throw ParseError("duplicate label: " + label);
        if (label == kEosLabel) {
            eos_id_ = static_cast<LabelId>(labels_.size());
            has_eos_ = true;
        }
        if (label == kUnkLabel) unk_id_ = static_cast<LabelId>(labels_.size());
        labels_.push_back(label);
    }

    std::vector<std::string> labels_;
    std::unordered_map<std::string, LabelId> ids_;
    LabelId eos_id_ = 0;
    bool has_eos_ = false;
    std::optional<LabelId> unk_id_;
};

/// Ordered merge list. Merged symbol strings concatenate operands directly in
/// char mode and join them with '_' in phone mode (multi-character phone
/// symbols would otherwise collide).
struct BpeModel {
    struct Merge {
        std::string left, right, result;
    };

    std::vector<Merge> merges;
    std::set<std::string> base_symbols;
    bool char_mode = false;

    std::string join_symbols(const std::string& a, const std::string& b) const
    {
        return char_mode ? a + b : a + kBpeJoin + b;
    }

    // Base-symbol sequence a (possibly merged) symbol stands for.
    std::vector<std::string> decompose(const std::string& symbol) const
    {
        auto it = decomp_.find(symbol);
        if (it == decomp_.end()) return {symbol};
        return it->second;
    }

    void record_merge(const std::string& left, const std::string& right)
    {
        Merge m{left, right, join_symbols(left, right)};
        auto d = decompose(left);
        auto r = decompose(right);
        d.insert(d.end(), r.begin(), r.end());
        decomp_[m.result] = std::move(d);
        merges.push_back(std::move(m));
    }

private:
    std::unordered_map<std::string, std::vector<std::string>> decomp_;
};

// A weighted word unit: the symbol sequence of one word and its corpus count.
using WordUnit = std::pair<std::vector<std::string>, std::uint64_t>;

namespace detail {

// One left-to-right pass; exhaustive for a single rule because a merge result
// never equals an operand.
inline void apply_merge(std::vector<std::string>& seq, const BpeModel::Merge& m)
{
    std::vector<std::string> out;
    out.reserve(seq.size());
    std::size_t i = 0;
    while (i < seq.size()) {
        if (i + 1 < seq.size() && seq[i] == m.left && seq[i + 1] == m.right) {
            out.push_back(m.result);
            i += 2;
        } else {
            out.push_back(seq[i]);
            ++i;
        }
    }
    seq = std::move(out);
}

}  // namespace detail

/// Iteratively merges the most frequent adjacent pair within word units, up to
/// num_merges times or until no pairs remain. Count ties break to the
/// lexicographically smallest pair, making training deterministic.
inline BpeModel train_bpe(const std::vector<WordUnit>& word_units, std::size_t num_merges,
                          bool char_mode)
{
    BpeModel model;
    model.char_mode = char_mode;
    std::vector<WordUnit> units;
    for (const auto& [seq, freq] : word_units) {
        if (seq.empty()) throw ValidationError("empty word unit in BPE training input");
        for (const auto& s : seq) model.base_symbols.insert(s);
        if (freq > 0) units.emplace_back(seq, freq);
    }

    for (std::size_t iter = 0; iter < num_merges; ++iter) {
        std::map<std::pair<std::string, std::string>, std::uint64_t> pair_counts;
        for (const auto& [seq, freq] : units)
            for (std::size_t i = 0; i + 1 < seq.size(); ++i)
                pair_counts[{seq[i], seq[i + 1]}] += freq;
        if (pair_counts.empty()) break;

        auto best = pair_counts.begin();
        for (auto it = std::next(best); it != pair_counts.end(); ++it)
            if (it->second > best->second) best = it;  // ascending key order keeps ties lexicographic

        model.record_merge(best->first.first, best->first.second);
        for (auto& [seq, freq] : units) detail::apply_merge(seq, model.merges.back());
    }
    return model;
}

/// The unique greedy split: merges are applied in training order, each
/// exhaustively left-to-right within the word unit. Symbols outside the model
/// pass through unmerged.
inline std::vector<std::string> apply_bpe(const BpeModel& model, std::vector<std::string> seq)
{
    for (const auto& m : model.merges) detail::apply_merge(seq, m);
    return seq;
}

inline std::string write_bpe_model(const BpeModel& model)
{
    std::string out = "#bpe-v1\n";
    for (const auto& m : model.merges) {
        out += m.left;
        out += ' ';
        out += m.right;
        out += '\n';
    }
    return out;
}

/// Reads the merge list back. Base symbols are reconstructed only partially
/// (operands that are not merge results); that is sufficient for applying the
/// model, whose pass-through semantics never consult base_symbols.
inline BpeModel parse_bpe_model(std::string_view text, bool char_mode)
{
    BpeModel model;
    model.char_mode = char_mode;
    std::size_t pos = 0, line_no = 0;
    bool saw_header = false;
    std::set<std::string> produced;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "#bpe-v1")
                throw ParseError("BPE model file must start with `#bpe-v1`");
            saw_header = true;
            continue;
        }
        auto fields = split_ws(line);
        if (fields.size() != 2)
            throw ParseError("line " + std::to_string(line_no) + ": expected `left right`");
        model.record_merge(fields[0], fields[1]);
        produced.insert(model.merges.back().result);
        for (const auto& op : {fields[0], fields[1]})
            if (!produced.count(op)) model.base_symbols.insert(op);
    }
    if (!saw_header) throw ParseError("BPE model file must start with `#bpe-v1`");
    return model;
}

/// The per-word symbol sequences BPE trains on, weighted by corpus counts.
/// Phone BPE uses the augmented pronunciation of each in-lexicon corpus word;
/// char BPE uses the character sequence with "</w>" fused onto the last one.
inline std::vector<WordUnit> bpe_word_units(const UnitScheme& scheme,
                                            const DisambiguatedLexicon* dlex,
                                            const std::map<std::string, std::uint64_t>& corpus_counts)
{
    std::vector<WordUnit> units;
    for (const auto& [word, count] : corpus_counts) {
        if (count == 0) continue;
        if (scheme.kind == UnitKind::phone_bpe) {
            if (!dlex || !dlex->base.contains(word)) continue;  // OOV transcript word
            units.emplace_back(dlex->augmented_sequence(word), count);
        } else {
            auto chars = utf8_chars(word);
            chars.back() += kEowSymbol;
            units.emplace_back(std::move(chars), count);
        }
    }
    return units;
}

struct VocabBuild {
    LabelVocab vocab;
    std::optional<BpeModel> bpe;
};

/// Builds the label vocabulary for a unit scheme. Phone schemes take their
/// symbols from the prepared (variant-applied, optionally disambiguated)
/// lexicon; char and word schemes derive them from the transcript corpus. For
/// BPE schemes a pretrained model can be supplied, otherwise one is trained
/// with scheme.bpe_merges merges.
inline VocabBuild build_vocab(const UnitScheme& scheme, const DisambiguatedLexicon* dlex,
                              const std::map<std::string, std::uint64_t>& corpus_counts,
                              const BpeModel* pretrained = nullptr)
{
    scheme.validate();
    if (scheme.is_phone() && dlex == nullptr)
        throw ValidationError("phone scheme requires a lexicon");
    if (!scheme.is_phone() && corpus_counts.empty())
        throw ValidationError(to_string(scheme.kind) + " scheme requires a transcript corpus");

    std::set<std::string> regular;
    const bool with_unk = scheme.disambig || scheme.kind == UnitKind::whole_word;

    auto add_disambig_labels = [&] {
        if (!scheme.disambig) return;
        for (std::size_t k = 1; k <= dlex->n_symbols; ++k)
            regular.insert("$" + std::to_string(k));
    };

    switch (scheme.kind) {
        case UnitKind::single_phone: {
            regular = dlex->base.phone_inventory();
            add_disambig_labels();
            return {LabelVocab::build(regular, with_unk), std::nullopt};
        }
        case UnitKind::phone_bpe:
        case UnitKind::char_bpe: {
            BpeModel model =
                pretrained ? *pretrained
                           : train_bpe(bpe_word_units(scheme, dlex, corpus_counts),
                                       scheme.bpe_merges, scheme.kind == UnitKind::char_bpe);
            if (scheme.kind == UnitKind::phone_bpe) {
                regular = dlex->base.phone_inventory();
                add_disambig_labels();
            } else {
                for (const auto& [word, count] : corpus_counts) {
                    auto chars = utf8_chars(word);
                    chars.back() += kEowSymbol;
                    regular.insert(chars.begin(), chars.end());
                }
            }
            for (const auto& m : model.merges) regular.insert(m.result);
            return {LabelVocab::build(regular, with_unk), std::move(model)};
        }
        case UnitKind::single_char: {
            for (const auto& [word, count] : corpus_counts) {
                auto chars = utf8_chars(word);
                regular.insert(chars.begin(), chars.end());
            }
            regular.insert(std::string(kWhitespaceLabel));
            return {LabelVocab::build(regular, with_unk), std::nullopt};
        }
        case UnitKind::whole_word: {
            for (const auto& [word, count] : corpus_counts) regular.insert(word);
            return {LabelVocab::build(regular, with_unk), std::nullopt};
        }
    }
    throw ValidationError("unknown unit kind");
}

/// reduce -> word-end variant -> disambiguation, per the scheme's flags.
inline DisambiguatedLexicon prepare_lexicon(const Lexicon& raw, const UnitScheme& scheme)
{
    scheme.validate();
    Lexicon lex = apply_word_end_variant(reduce_single_pronunciation(raw), scheme.eow_variant);
    return scheme.disambig ? add_disambiguation_symbols(lex) : without_disambiguation(lex);
}

}  // namespace labeldec
