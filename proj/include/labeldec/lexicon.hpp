#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "labeldec/common.hpp"

namespace labeldec {

struct Pronunciation {
    std::vector<std::string> phones;  // len >= 1
    double prob = 1.0;                // in (0, 1]
};

/// Pronunciation lexicon: word -> ordered pronunciation list, plus the phone
/// inventory (a superset of the phones occurring in pronunciations; word-end
/// augmentation keeps superseded phones so vocabulary-size bookkeeping stays
/// additive).
class Lexicon {
public:
    void add(const std::string& word, Pronunciation pron)
    {
        auto it = index_.find(word);
        if (it == index_.end()) {
            index_.emplace(word, words_.size());
            words_.push_back(word);
            prons_.emplace_back();
            it = index_.find(word);
        }
        for (const auto& ph : pron.phones) inventory_.insert(ph);
        prons_[it->second].push_back(std::move(pron));
    }

    bool contains(const std::string& word) const { return index_.count(word) != 0; }

    const std::vector<Pronunciation>& pronunciations(const std::string& word) const
    {
        auto it = index_.find(word);
        if (it == index_.end()) throw ValidationError("unknown word: " + word);
        return prons_[it->second];
    }

    // Words in file/insertion order.
    const std::vector<std::string>& words() const { return words_; }

    const std::set<std::string>& phone_inventory() const { return inventory_; }
    void add_inventory_symbol(const std::string& s) { inventory_.insert(s); }

    bool single_pronunciation() const
    {
        for (const auto& ps : prons_)
            if (ps.size() != 1) return false;
        return true;
    }

private:
    std::vector<std::string> words_;
    std::vector<std::vector<Pronunciation>> prons_;
    std::unordered_map<std::string, std::size_t> index_;
    std::set<std::string> inventory_;
};

enum class WordEndVariant { none, eow, word_end_phone };

inline std::string to_string(WordEndVariant v)
{
    switch (v) {
        case WordEndVariant::none: return "none";
        case WordEndVariant::eow: return "eow";
        case WordEndVariant::word_end_phone: return "word-end-phone";
    }
    return "?";
}

namespace detail {

inline void check_phone(const std::string& ph, bool allow_augmented, std::size_t line_no)
{
    auto fail = [&](const std::string& why) {
        throw ParseError("line " + std::to_string(line_no) + ": bad phone \"" + ph + "\": " + why);
    };
    if (ph.empty()) fail("empty");
    if (ph == kEosLabel || ph == kUnkLabel || ph == kWhitespaceLabel) fail("reserved spelling");
    if (ph.find(kBpeJoin) != std::string::npos) fail("'_' is reserved for BPE subword joining");
    if (allow_augmented) {
        if (ph[0] == '$' && !is_disambig_symbol(ph)) fail("'$' prefix reserved for disambiguators");
        return;
    }
    if (ph == kEowSymbol) fail("reserved spelling");
    if (ph[0] == '$') fail("'$' prefix reserved for disambiguators");
    if (has_word_end_marker(ph)) fail("'#' suffix reserved for word-end phones");
}

}  // namespace detail

/// Parses the lexicon TSV: `word <TAB> prob <TAB> phone phone ...`.
/// Lines starting with '#' are comments. Repeated words accumulate
/// pronunciations in line order. With allow_augmented, symbols produced by
/// augmentation ("</w>", "x#", "$k") are accepted as phones.
inline Lexicon parse_lexicon(std::string_view text, bool allow_augmented = false)
{
    Lexicon lex;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line[0] == '#') continue;

        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string_view::npos ? std::string_view::npos : line.find('\t', t1 + 1);
        if (t1 == std::string_view::npos || t2 == std::string_view::npos)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected `word<TAB>prob<TAB>phones`");
        std::string word(line.substr(0, t1));
        std::string_view prob_field = line.substr(t1 + 1, t2 - t1 - 1);
        std::string_view phones_field = line.substr(t2 + 1);
        if (word.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty word");

        double prob = 0.0;
        auto [p, ec] = std::from_chars(prob_field.data(), prob_field.data() + prob_field.size(), prob);
        if (ec != std::errc{} || p != prob_field.data() + prob_field.size())
            throw ParseError("line " + std::to_string(line_no) + ": malformed probability \"" +
                             std::string(prob_field) + "\"");
        if (!(prob > 0.0 && prob <= 1.0))
            throw ParseError("line " + std::to_string(line_no) + ": probability " +
                             std::string(prob_field) + " outside (0,1]");

        Pronunciation pron;
        pron.prob = prob;
        pron.phones = split_ws(phones_field);
        if (pron.phones.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty phone sequence");
        for (const auto& ph : pron.phones) detail::check_phone(ph, allow_augmented, line_no);
        lex.add(word, std::move(pron));
    }
    return lex;
}

inline std::string write_lexicon(const Lexicon& lex)
{
    std::string out;
    for (const auto& w : lex.words()) {
        for (const auto& pron : lex.pronunciations(w)) {
            out += w;
            out += '\t';
            char buf[32];
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, pron.prob);
            out.append(buf, p);
            out += '\t';
            out += join(pron.phones);
            out += '\n';
        }
    }
    return out;
}

/// Keeps exactly one pronunciation per word: the most probable, ties broken by
/// the lexicographically smallest phone string.
inline Lexicon reduce_single_pronunciation(const Lexicon& lex)
{
    Lexicon out;
    for (const auto& w : lex.words()) {
        const auto& prons = lex.pronunciations(w);
        const Pronunciation* best = &prons.front();
        std::string best_key = join(best->phones);
        for (std::size_t i = 1; i < prons.size(); ++i) {
            std::string key = join(prons[i].phones);
            if (prons[i].prob > best->prob ||
                (prons[i].prob == best->prob && key < best_key)) {
                best = &prons[i];
                best_key = std::move(key);
            }
        }
        out.add(w, *best);
    }
    // Inventory is carried over unchanged, including phones that only occurred
    // in dropped pronunciations.
    for (const auto& ph : lex.phone_inventory()) out.add_inventory_symbol(ph);
    return out;
}

struct HomophoneClass {
    std::vector<std::string> phones;  // the shared pronunciation
    std::vector<std::string> words;   // >= 2, sorted
};

/// Groups words that share one pronunciation. Classes are sorted by phone
/// sequence, words within a class sorted lexicographically (case-sensitive).
inline std::vector<HomophoneClass> find_homophone_classes(const Lexicon& lex)
{
    if (!lex.single_pronunciation())
        throw ValidationError("find_homophone_classes requires a single-pronunciation lexicon");
    std::map<std::vector<std::string>, std::vector<std::string>> by_phones;
    for (const auto& w : lex.words())
        by_phones[lex.pronunciations(w).front().phones].push_back(w);
    std::vector<HomophoneClass> classes;
    for (auto& [phones, words] : by_phones) {
        if (words.size() < 2) continue;
        std::sort(words.begin(), words.end());
        classes.push_back({phones, std::move(words)});
    }
    return classes;
}

/// Single-pronunciation lexicon plus the "$k" suffix assignment that makes the
/// (pronunciation ++ suffix) -> word map injective.
struct DisambiguatedLexicon {
    Lexicon base;
    std::unordered_map<std::string, std::string> suffix;  // word -> "$k", homophones only
    std::size_t n_symbols = 0;

    std::optional<std::string> disambig_suffix(const std::string& word) const
    {
        auto it = suffix.find(word);
        if (it == suffix.end()) return std::nullopt;
        return it->second;
    }

    // Pronunciation with the disambiguation suffix appended (when assigned).
    std::vector<std::string> augmented_sequence(const std::string& word) const
    {
        std::vector<std::string> seq = base.pronunciations(word).front().phones;
        if (auto s = disambig_suffix(word)) seq.push_back(*s);
        return seq;
    }
};

/// Assigns $1..$N over (class, word) pairs in find_homophone_classes order,
/// one global counter, no reuse across classes.
inline DisambiguatedLexicon add_disambiguation_symbols(const Lexicon& lex)
{
    DisambiguatedLexicon out;
    out.base = lex;
    std::size_t k = 0;
    for (const auto& cls : find_homophone_classes(lex))
        for (const auto& w : cls.words)
            out.suffix[w] = "$" + std::to_string(++k);
    out.n_symbols = k;
    return out;
}

/// A trivially empty suffix assignment, for schemes without disambiguation.
inline DisambiguatedLexicon without_disambiguation(const Lexicon& lex)
{
    if (!lex.single_pronunciation())
        throw ValidationError("expected a single-pronunciation lexicon");
    DisambiguatedLexicon out;
    out.base = lex;
    return out;
}

/// eow: appends "</w>" to every pronunciation. word_end_phone: replaces the
/// final phone x by "x#" and adds "x#" to the inventory (x itself stays in the
/// inventory). none: identity.
inline Lexicon apply_word_end_variant(const Lexicon& lex, WordEndVariant variant)
{
    if (!lex.single_pronunciation())
        throw ValidationError("apply_word_end_variant requires a single-pronunciation lexicon");
    if (variant == WordEndVariant::none) return lex;
    Lexicon out;
    for (const auto& w : lex.words()) {
        Pronunciation pron = lex.pronunciations(w).front();
        if (variant == WordEndVariant::eow) {
            pron.phones.emplace_back(kEowSymbol);
        } else {
            pron.phones.back() += kWordEndMarker;
        }
        out.add(w, std::move(pron));
    }
    for (const auto& ph : lex.phone_inventory()) out.add_inventory_symbol(ph);
    return out;
}

/// Reconstructs a DisambiguatedLexicon from an augmented TSV (the output of
/// lexicon-prep): trailing "$k" phones are recognized as suffixes.
inline DisambiguatedLexicon disambiguated_from_augmented(const Lexicon& lex)
{
    if (!lex.single_pronunciation())
        throw ValidationError("augmented lexicon must be single-pronunciation");
    DisambiguatedLexicon out;
    std::size_t max_k = 0;
    for (const auto& w : lex.words()) {
        Pronunciation pron = lex.pronunciations(w).front();
        if (pron.phones.size() > 1 && is_disambig_symbol(pron.phones.back())) {
            const std::string sym = pron.phones.back();
            pron.phones.pop_back();
            out.suffix[w] = sym;
            max_k = std::max(max_k, static_cast<std::size_t>(std::stoul(sym.substr(1))));
        }
        out.base.add(w, std::move(pron));
    }
    for (const auto& ph : lex.phone_inventory())
        if (!is_disambig_symbol(ph)) out.base.add_inventory_symbol(ph);
    out.n_symbols = max_k;
    return out;
}

/// Distinct phones occurring pronunciation-finally (before any augmentation).
inline std::set<std::string> word_final_phones(const Lexicon& lex)
{
    std::set<std::string> finals;
    for (const auto& w : lex.words())
        for (const auto& pron : lex.pronunciations(w)) finals.insert(pron.phones.back());
    return finals;
}

}  // namespace labeldec
