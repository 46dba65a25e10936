#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "labeldec/labeldec.hpp"

namespace {

using namespace labeldec;

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
    if (!out) throw std::runtime_error("short write: " + path);
}

std::string fmt(double v) { return detail::format_double(v); }

struct SchemeArgs {
    std::string units = "phone";
    std::string variant = "none";
    bool disambig = false;
    std::size_t merges = 0;

    UnitScheme to_scheme() const
    {
        UnitScheme s;
        if (units == "phone")
            s.kind = UnitKind::single_phone;
        else if (units == "phone-bpe")
            s.kind = UnitKind::phone_bpe;
        else if (units == "char")
            s.kind = UnitKind::single_char;
        else if (units == "char-bpe")
            s.kind = UnitKind::char_bpe;
        else if (units == "word")
            s.kind = UnitKind::whole_word;
        else
            throw ValidationError("unknown unit kind: " + units);
        if (variant == "none")
            s.eow_variant = WordEndVariant::none;
        else if (variant == "eow")
            s.eow_variant = WordEndVariant::eow;
        else if (variant == "word-end-phone")
            s.eow_variant = WordEndVariant::word_end_phone;
        else
            throw ValidationError("unknown word-end variant: " + variant);
        s.disambig = disambig;
        s.bpe_merges = merges;
        s.validate();
        return s;
    }
};

void add_scheme_options(CLI::App* cmd, SchemeArgs& args)
{
    cmd->add_option("--units", args.units, "label units: phone, phone-bpe, char, char-bpe, word");
    cmd->add_option("--variant", args.variant,
                    "word-end variant for phone units: none, eow, word-end-phone");
    cmd->add_flag("--disambig", args.disambig, "append homophone disambiguation symbols");
    cmd->add_option("--merges", args.merges, "number of BPE merges");
}

DisambiguatedLexicon load_dlex(const std::string& path, bool prepared, const UnitScheme& scheme)
{
    if (prepared) return disambiguated_from_augmented(parse_lexicon(read_file(path), true));
    return prepare_lexicon(parse_lexicon(read_file(path)), scheme);
}

Codec make_codec(const UnitScheme& scheme, const std::string& vocab_path,
                 const std::string& lexicon_path, bool lexicon_prepared,
                 const std::string& bpe_path)
{
    LabelVocab vocab = LabelVocab::parse(read_file(vocab_path));
    std::optional<DisambiguatedLexicon> dlex;
    if (!lexicon_path.empty()) dlex = load_dlex(lexicon_path, lexicon_prepared, scheme);
    std::optional<BpeModel> bpe;
    if (!bpe_path.empty()) bpe = parse_bpe_model(read_file(bpe_path), scheme.is_char());
    return Codec(scheme, std::move(vocab), std::move(dlex), std::move(bpe));
}

std::map<std::string, std::uint64_t> load_counts(const std::string& corpus_path)
{
    if (corpus_path.empty()) return {};
    return corpus_word_counts(parse_corpus(read_file(corpus_path)));
}

// ---------------------------------------------------------------- commands

struct LexiconPrepArgs {
    SchemeArgs scheme;
    std::string lexicon, out;
};

void run_lexicon_prep(const LexiconPrepArgs& a)
{
    const UnitScheme scheme = a.scheme.to_scheme();
    DisambiguatedLexicon d = prepare_lexicon(parse_lexicon(read_file(a.lexicon)), scheme);
    Lexicon augmented;
    for (const auto& w : d.base.words()) augmented.add(w, {d.augmented_sequence(w), 1.0});
    for (const auto& ph : d.base.phone_inventory()) augmented.add_inventory_symbol(ph);
    write_file(a.out, write_lexicon(augmented));
}

struct TrainBpeArgs {
    SchemeArgs scheme;
    std::string lexicon, corpus, out;
    bool lexicon_prepared = false;
};

void run_train_bpe(const TrainBpeArgs& a)
{
    const UnitScheme scheme = a.scheme.to_scheme();
    if (!scheme.is_bpe()) throw ValidationError("train-bpe requires --units phone-bpe or char-bpe");
    std::optional<DisambiguatedLexicon> dlex;
    if (scheme.is_phone()) {
        if (a.lexicon.empty()) throw ValidationError("phone-bpe training requires --lexicon");
        dlex = load_dlex(a.lexicon, a.lexicon_prepared, scheme);
    }
    if (a.corpus.empty()) throw ValidationError("train-bpe requires --corpus for frequencies");
    auto units = bpe_word_units(scheme, dlex ? &*dlex : nullptr, load_counts(a.corpus));
    BpeModel model = train_bpe(units, scheme.bpe_merges, scheme.is_char());
    write_file(a.out, write_bpe_model(model));
}

struct BuildVocabArgs {
    SchemeArgs scheme;
    std::string lexicon, corpus, bpe_model, out, bpe_out;
    bool lexicon_prepared = false;
};

void run_build_vocab(const BuildVocabArgs& a)
{
    const UnitScheme scheme = a.scheme.to_scheme();
    std::optional<DisambiguatedLexicon> dlex;
    if (!a.lexicon.empty()) dlex = load_dlex(a.lexicon, a.lexicon_prepared, scheme);
    std::optional<BpeModel> pretrained;
    if (!a.bpe_model.empty()) pretrained = parse_bpe_model(read_file(a.bpe_model), scheme.is_char());
    VocabBuild built = build_vocab(scheme, dlex ? &*dlex : nullptr, load_counts(a.corpus),
                                   pretrained ? &*pretrained : nullptr);
    write_file(a.out, built.vocab.to_text());
    if (!a.bpe_out.empty()) {
        if (!built.bpe) throw ValidationError("--bpe-out given but the scheme trains no BPE model");
        write_file(a.bpe_out, write_bpe_model(*built.bpe));
    }
}

struct EncodeArgs {
    SchemeArgs scheme;
    std::string vocab, lexicon, bpe_model, corpus, out;
    std::string oov = "strict";
    bool lexicon_prepared = false;
};

void run_encode(const EncodeArgs& a)
{
    const UnitScheme scheme = a.scheme.to_scheme();
    if (a.oov != "strict" && a.oov != "lenient")
        throw ValidationError("--oov must be strict or lenient");
    const OovMode mode = a.oov == "strict" ? OovMode::strict : OovMode::lenient;
    Codec codec = make_codec(scheme, a.vocab, a.lexicon, a.lexicon_prepared, a.bpe_model);
    std::vector<TargetRow> rows;
    for (const auto& utt : parse_corpus(read_file(a.corpus)))
        rows.emplace_back(utt.id, codec.encode_words(utt.words, mode));
    write_file(a.out, write_targets(rows));
}

struct FilterLengthsArgs {
    std::string targets, out;
    double drop_fraction = 0.0;
};

void run_filter_lengths(const FilterLengthsArgs& a)
{
    std::vector<TargetRow> rows = parse_targets(read_file(a.targets));
    std::vector<std::size_t> lengths;
    for (const auto& [id, ids] : rows) lengths.push_back(ids.size());
    const std::size_t threshold = length_filter_threshold(lengths, a.drop_fraction);
    std::vector<TargetRow> kept;
    for (auto& row : rows)
        if (row.second.size() <= threshold) kept.push_back(std::move(row));
    write_file(a.out, write_targets(kept));
    std::cout << "threshold\t" << threshold << "\n"
              << "kept\t" << kept.size() << "\n"
              << "dropped\t" << rows.size() - kept.size() << "\n";
}

struct TrainLmArgs {
    std::string level = "word";
    std::string corpus, targets, vocab, out;
    std::size_t order = 3;
    double add_k = 1.0;
};

void run_train_lm(const TrainLmArgs& a)
{
    std::vector<std::vector<std::string>> sentences;
    std::vector<std::string> extra_vocab;
    if (a.level == "word") {
        if (a.corpus.empty()) throw ValidationError("word-level LM requires --corpus");
        for (const auto& utt : parse_corpus(read_file(a.corpus))) {
            std::vector<std::string> sent;
            sent.emplace_back(kSentBegin);
            sent.insert(sent.end(), utt.words.begin(), utt.words.end());
            sent.emplace_back(kSentEnd);
            sentences.push_back(std::move(sent));
        }
    } else if (a.level == "label") {
        if (a.targets.empty() || a.vocab.empty())
            throw ValidationError("label-level LM requires --targets and --vocab");
        LabelVocab vocab = LabelVocab::parse(read_file(a.vocab));
        // cover the whole label set so fusion never meets an unknown label
        for (std::size_t i = 0; i < vocab.size(); ++i)
            if (i != vocab.eos_id()) extra_vocab.push_back(vocab.label(static_cast<LabelId>(i)));
        for (const auto& [id, ids] : parse_targets(read_file(a.targets))) {
            std::vector<std::string> sent;
            sent.emplace_back(kSentBegin);
            for (LabelId l : ids) {
                if (l >= vocab.size() || l == vocab.eos_id())
                    throw ValidationError(id + ": label id outside encodable range");
                sent.push_back(vocab.label(l));
            }
            sent.emplace_back(kSentEnd);
            sentences.push_back(std::move(sent));
        }
    } else {
        throw ValidationError("--level must be word or label");
    }
    write_file(a.out, write_arpa(train_ngram(sentences, a.order, a.add_k, extra_vocab)));
}

struct ConvertArpaArgs {
    std::string in, out;
};

void run_convert_arpa(const ConvertArpaArgs& a)
{
    write_file(a.out, write_arpa(parse_arpa(read_file(a.in))));
}

struct DecodeArgs {
    SchemeArgs scheme;
    std::string decoder;  // simple | advanced
    std::string vocab, lexicon, bpe_model;
    std::string dump, oracle_targets;
    double oracle_peak = 1.0;
    std::string label_lm, lm;
    double lambda = -1.0;  // <0 means per-decoder default
    bool lookahead = false;
    bool trace = false;
    std::size_t beam = 12;
    std::size_t max_len = 0;  // 0 = derive per utterance
    std::optional<double> length_exponent;
    std::size_t nbest = 1;
    std::string out, out_words;
    bool lexicon_prepared = false;
};

struct UttScorer {
    std::string id;
    std::shared_ptr<const LabelScorer> scorer;
    std::size_t auto_max_len = 0;
};

std::vector<UttScorer> make_scorers(const DecodeArgs& a, const LabelVocab& vocab,
                                    const std::string& vocab_text)
{
    if (a.dump.empty() == a.oracle_targets.empty())
        throw ValidationError("decode needs exactly one of --dump or --oracle-targets");
    std::vector<UttScorer> out;
    if (!a.dump.empty()) {
        auto dump = std::make_shared<PosteriorDump>(parse_dump(read_file(a.dump)));
        if (dump->vocab_size != vocab.size())
            throw ValidationError("posterior dump vocabulary size does not match --vocab");
        if (dump->vocab_hash != 0 && dump->vocab_hash != fnv1a64(vocab_text))
            throw ValidationError("posterior dump vocabulary hash does not match --vocab");
        for (const auto& [id, utt] : dump->utts) {
            auto scorer = std::make_shared<ReplayScorer>(dump, id);
            const std::size_t auto_len = scorer->history_keyed()
                                             ? scorer->max_history_length() + 1
                                             : scorer->num_time_rows();
            out.push_back({id, std::move(scorer), auto_len});
        }
    } else {
        if (!(a.oracle_peak > 0.0) || a.oracle_peak > 1.0)
            throw ValidationError("--oracle-peak must lie in (0, 1]");
        for (const auto& [id, ids] : parse_targets(read_file(a.oracle_targets))) {
            auto scorer = std::make_shared<OracleScorer>(ids, a.oracle_peak, vocab.eos_id(),
                                                         vocab.size());
            out.push_back({id, std::move(scorer), 3 + 2 * ids.size()});
        }
    }
    return out;
}

void run_decode(const DecodeArgs& a)
{
    const UnitScheme scheme = a.scheme.to_scheme();
    if (a.decoder != "simple" && a.decoder != "advanced")
        throw ValidationError("--decoder must be simple or advanced");
    const bool advanced = a.decoder == "advanced";
    if (a.lookahead && !advanced) throw ValidationError("--lookahead requires --decoder advanced");
    if (!a.label_lm.empty() && advanced)
        throw ValidationError("--label-lm applies to the simple decoder only");
    if (!a.lm.empty() && !advanced) throw ValidationError("--lm applies to the advanced decoder only");
    if (advanced && a.lm.empty()) throw ValidationError("advanced decoding requires --lm");
    if (advanced && a.lexicon.empty()) throw ValidationError("advanced decoding requires --lexicon");
    if (!a.out_words.empty() && scheme.is_phone() && a.lexicon.empty())
        throw ValidationError("--out-words with a phone scheme requires --lexicon");

    const std::string vocab_text = read_file(a.vocab);
    std::optional<Codec> codec;
    const bool need_codec = advanced || !a.out_words.empty();
    if (need_codec)
        codec = make_codec(scheme, a.vocab, a.lexicon, a.lexicon_prepared, a.bpe_model);
    const LabelVocab vocab = need_codec ? codec->vocab() : LabelVocab::parse(vocab_text);

    std::vector<UttScorer> utts = make_scorers(a, vocab, vocab_text);
    std::string main_out, words_out;

    if (advanced) {
        PrefixTree tree = build_prefix_tree(*codec);
        NGramLM word_lm = parse_arpa(read_file(a.lm));
        TreeDecodeOptions o;
        o.lambda = a.lambda < 0 ? 0.3 : a.lambda;
        o.beam_size = a.beam;
        o.lookahead = a.lookahead;
        for (const auto& u : utts) {
            o.max_len = a.max_len > 0 ? a.max_len : u.auto_max_len;
            TreeDecodeResult r = decode_tree(*u.scorer, tree, word_lm, vocab.eos_id(), o);
            const auto& words = r.found ? r.words : r.partial_words;
            main_out += u.id;
            main_out += '\t';
            main_out += fmt(r.found ? r.score : r.partial_score);
            main_out += '\t';
            main_out += join(words, " ");
            main_out += '\n';
            if (a.trace)
                for (std::size_t k = 0; k < words.size(); ++k) {
                    main_out += "#\t" + u.id + "\t" + std::to_string(k) + "\t" + words[k];
                    main_out += '\n';
                }
            if (!a.out_words.empty()) words_out += u.id + "\t" + join(words, " ") + "\n";
        }
    } else {
        std::shared_ptr<const LabelScorer> label_lm;
        double lambda = a.lambda < 0 ? 0.0 : a.lambda;
        std::optional<NGramLM> lm;
        if (!a.label_lm.empty()) lm = parse_arpa(read_file(a.label_lm));
        SimpleDecodeOptions o;
        o.beam_size = a.beam;
        o.length_exponent = a.length_exponent;
        for (const auto& u : utts) {
            std::shared_ptr<const LabelScorer> scorer = u.scorer;
            if (lm)
                scorer = combine_scorers(scorer, std::make_shared<NGramLabelScorer>(*lm, vocab),
                                         lambda, /*renormalize=*/false);
            SimpleDecodeOptions uo = o;
            uo.max_len = a.max_len > 0 ? a.max_len : u.auto_max_len;
            std::vector<NBestEntry> nbest = decode_simple(*scorer, vocab.eos_id(), uo);
            for (std::size_t r = 0; r < nbest.size() && r < a.nbest; ++r) {
                main_out += u.id + "\t" + std::to_string(r + 1) + "\t" + fmt(nbest[r].score);
                for (LabelId l : nbest[r].labels) main_out += "\t" + std::to_string(l);
                main_out += '\n';
            }
            if (!a.out_words.empty()) {
                std::vector<LabelId> labels;
                if (!nbest.empty()) {
                    labels = nbest[0].labels;
                    labels.pop_back();  // EOS
                }
                words_out += u.id + "\t" + join(codec->decode_to_words(labels), " ") + "\n";
            }
        }
    }

    write_file(a.out, main_out);
    if (!a.out_words.empty()) write_file(a.out_words, words_out);
}

struct ScoreArgs {
    std::string ref, hyp, out;
};

void run_score(const ScoreArgs& a)
{
    std::vector<Utterance> refs = parse_corpus(read_file(a.ref));
    std::map<std::string, std::vector<std::string>> hyps;
    for (const auto& utt : parse_corpus(read_file(a.hyp))) hyps.emplace(utt.id, utt.words);

    std::string report;
    std::vector<WerBreakdown> parts;
    for (const auto& r : refs) {
        auto it = hyps.find(r.id);
        if (it == hyps.end()) throw ValidationError("hypothesis file lacks utterance " + r.id);
        WerBreakdown b = wer(r.words, it->second);
        parts.push_back(b);
        report += r.id + "\t" + std::to_string(b.substitutions) + "\t" +
                  std::to_string(b.insertions) + "\t" + std::to_string(b.deletions) + "\t" +
                  std::to_string(b.reference_length) + "\t" + fmt(b.wer) + "\n";
    }
    WerBreakdown pooled = pool_wer(parts);
    report += "#pooled\tsubstitutions\t" + std::to_string(pooled.substitutions) + "\n";
    report += "#pooled\tinsertions\t" + std::to_string(pooled.insertions) + "\n";
    report += "#pooled\tdeletions\t" + std::to_string(pooled.deletions) + "\n";
    report += "#pooled\treference_length\t" + std::to_string(pooled.reference_length) + "\n";
    report += "#pooled\twer\t" + fmt(pooled.wer) + "\n";
    write_file(a.out, report);
    std::cout << "wer\t" << fmt(pooled.wer) << "\n";
}

struct StatsArgs {
    SchemeArgs scheme;
    std::string lexicon, corpus, out;
    bool lexicon_prepared = false;
};

void run_stats(const StatsArgs& a)
{
    const UnitScheme scheme = a.scheme.to_scheme();
    std::string text;
    std::optional<DisambiguatedLexicon> dlex;
    if (!a.lexicon.empty()) {
        dlex = load_dlex(a.lexicon, a.lexicon_prepared, scheme);
        const Lexicon raw = a.lexicon_prepared
                                ? dlex->base
                                : reduce_single_pronunciation(parse_lexicon(read_file(a.lexicon)));
        text += "words\t" + std::to_string(raw.words().size()) + "\n";
        text += "phones\t" + std::to_string(raw.phone_inventory().size()) + "\n";
        text += "homophone_classes\t" + std::to_string(find_homophone_classes(raw).size()) + "\n";
        text += "disambig_symbols\t" + std::to_string(dlex->n_symbols) + "\n";
    }
    VocabBuild built = build_vocab(scheme, dlex ? &*dlex : nullptr, load_counts(a.corpus));
    text += "vocab_size\t" + std::to_string(built.vocab.size()) + "\n";
    if (!a.corpus.empty() && dlex) {
        std::vector<std::string> tokens;
        for (const auto& utt : parse_corpus(read_file(a.corpus)))
            tokens.insert(tokens.end(), utt.words.begin(), utt.words.end());
        if (!tokens.empty()) text += "oov_rate\t" + fmt(oov_rate(tokens, dlex->base)) + "\n";
    }
    std::cout << text;
    if (!a.out.empty()) write_file(a.out, text);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"label unit and decoding toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("labeldec ") + kVersion);
    app.set_config("--config", "", "read options from a config file");

    LexiconPrepArgs lex_args;
    auto* lex_cmd = app.add_subcommand("lexicon-prep",
                                       "reduce pronunciations, apply word-end variant, disambiguate");
    add_scheme_options(lex_cmd, lex_args.scheme);
    lex_cmd->add_option("--lexicon", lex_args.lexicon, "input lexicon TSV")->required();
    lex_cmd->add_option("--out", lex_args.out, "output augmented lexicon TSV")->required();
    lex_cmd->callback([&] { run_lexicon_prep(lex_args); });

    TrainBpeArgs bpe_args;
    auto* bpe_cmd = app.add_subcommand("train-bpe", "train BPE merges on word frequencies");
    add_scheme_options(bpe_cmd, bpe_args.scheme);
    bpe_cmd->add_option("--lexicon", bpe_args.lexicon, "lexicon TSV (phone-bpe)");
    bpe_cmd->add_flag("--lexicon-prepared", bpe_args.lexicon_prepared,
                      "lexicon file is already augmented");
    bpe_cmd->add_option("--corpus", bpe_args.corpus, "corpus TSV for word frequencies")->required();
    bpe_cmd->add_option("--out", bpe_args.out, "output merge file")->required();
    bpe_cmd->callback([&] { run_train_bpe(bpe_args); });

    BuildVocabArgs vocab_args;
    auto* vocab_cmd = app.add_subcommand("build-vocab", "build the label vocabulary");
    add_scheme_options(vocab_cmd, vocab_args.scheme);
    vocab_cmd->add_option("--lexicon", vocab_args.lexicon, "lexicon TSV (phone schemes)");
    vocab_cmd->add_flag("--lexicon-prepared", vocab_args.lexicon_prepared,
                        "lexicon file is already augmented");
    vocab_cmd->add_option("--corpus", vocab_args.corpus, "corpus TSV (char/word schemes, BPE)");
    vocab_cmd->add_option("--bpe-model", vocab_args.bpe_model, "pretrained BPE merge file");
    vocab_cmd->add_option("--out", vocab_args.out, "output vocabulary file")->required();
    vocab_cmd->add_option("--bpe-out", vocab_args.bpe_out, "write the inline-trained BPE model");
    vocab_cmd->callback([&] { run_build_vocab(vocab_args); });

    EncodeArgs enc_args;
    auto* enc_cmd = app.add_subcommand("encode", "encode transcripts to label id targets");
    add_scheme_options(enc_cmd, enc_args.scheme);
    enc_cmd->add_option("--vocab", enc_args.vocab, "vocabulary file")->required();
    enc_cmd->add_option("--lexicon", enc_args.lexicon, "lexicon TSV (phone schemes)");
    enc_cmd->add_flag("--lexicon-prepared", enc_args.lexicon_prepared,
                      "lexicon file is already augmented");
    enc_cmd->add_option("--bpe-model", enc_args.bpe_model, "BPE merge file (BPE schemes)");
    enc_cmd->add_option("--corpus", enc_args.corpus, "corpus TSV")->required();
    enc_cmd->add_option("--oov", enc_args.oov, "OOV handling: strict or lenient");
    enc_cmd->add_option("--out", enc_args.out, "output targets TSV")->required();
    enc_cmd->callback([&] { run_encode(enc_args); });

    FilterLengthsArgs filt_args;
    auto* filt_cmd = app.add_subcommand("filter-lengths", "drop over-long target rows");
    filt_cmd->add_option("--targets", filt_args.targets, "targets TSV")->required();
    filt_cmd->add_option("--drop-fraction", filt_args.drop_fraction,
                         "largest fraction allowed to be dropped")
        ->required();
    filt_cmd->add_option("--out", filt_args.out, "output kept targets TSV")->required();
    filt_cmd->callback([&] { run_filter_lengths(filt_args); });

    TrainLmArgs lm_args;
    auto* lm_cmd = app.add_subcommand("train-lm", "train a backoff n-gram LM, write ARPA");
    lm_cmd->add_option("--level", lm_args.level, "word or label");
    lm_cmd->add_option("--corpus", lm_args.corpus, "corpus TSV (word level)");
    lm_cmd->add_option("--targets", lm_args.targets, "targets TSV (label level)");
    lm_cmd->add_option("--vocab", lm_args.vocab, "vocabulary file (label level)");
    lm_cmd->add_option("--order", lm_args.order, "n-gram order");
    lm_cmd->add_option("--add-k", lm_args.add_k, "smoothing constant, > 0");
    lm_cmd->add_option("--out", lm_args.out, "output ARPA file")->required();
    lm_cmd->callback([&] { run_train_lm(lm_args); });

    ConvertArpaArgs arpa_args;
    auto* arpa_cmd = app.add_subcommand("convert-arpa", "validate and canonicalize an ARPA file");
    arpa_cmd->add_option("--in", arpa_args.in, "input ARPA file")->required();
    arpa_cmd->add_option("--out", arpa_args.out, "output ARPA file")->required();
    arpa_cmd->callback([&] { run_convert_arpa(arpa_args); });

    DecodeArgs dec_args;
    auto* dec_cmd = app.add_subcommand("decode", "decode posterior dumps or oracle targets");
    add_scheme_options(dec_cmd, dec_args.scheme);
    dec_cmd->add_option("--decoder", dec_args.decoder, "simple or advanced")->required();
    dec_cmd->add_option("--vocab", dec_args.vocab, "vocabulary file")->required();
    dec_cmd->add_option("--lexicon", dec_args.lexicon, "lexicon TSV");
    dec_cmd->add_flag("--lexicon-prepared", dec_args.lexicon_prepared,
                      "lexicon file is already augmented");
    dec_cmd->add_option("--bpe-model", dec_args.bpe_model, "BPE merge file (BPE schemes)");
    dec_cmd->add_option("--dump", dec_args.dump, "posterior dump file");
    dec_cmd->add_option("--oracle-targets", dec_args.oracle_targets,
                        "targets TSV driving an oracle scorer");
    dec_cmd->add_option("--oracle-peak", dec_args.oracle_peak, "oracle peak probability");
    dec_cmd->add_option("--label-lm", dec_args.label_lm, "label-level ARPA LM (simple)");
    dec_cmd->add_option("--lm", dec_args.lm, "word-level ARPA LM (advanced)");
    dec_cmd->add_option("--lambda", dec_args.lambda, "LM weight");
    dec_cmd->add_flag("--lookahead", dec_args.lookahead, "enable LM lookahead (advanced)");
    dec_cmd->add_flag("--trace", dec_args.trace, "emit per-word trace lines (advanced)");
    dec_cmd->add_option("--beam", dec_args.beam, "beam size");
    dec_cmd->add_option("--max-len", dec_args.max_len, "maximum sequence length, 0 = derive");
    double length_exp = 0.0;
    auto* exp_opt = dec_cmd->add_option("--length-exponent", length_exp,
                                        "rank by score / length^e (simple)");
    dec_cmd->add_option("--nbest", dec_args.nbest, "n-best size to write (simple)");
    dec_cmd->add_option("--out", dec_args.out, "output file")->required();
    dec_cmd->add_option("--out-words", dec_args.out_words, "word transcripts output");
    dec_cmd->callback([&] {
        if (*exp_opt) dec_args.length_exponent = length_exp;
        run_decode(dec_args);
    });

    ScoreArgs score_args;
    auto* score_cmd = app.add_subcommand("score", "word error rate report");
    score_cmd->add_option("--ref", score_args.ref, "reference corpus TSV")->required();
    score_cmd->add_option("--hyp", score_args.hyp, "hypothesis corpus TSV")->required();
    score_cmd->add_option("--out", score_args.out, "output report TSV")->required();
    score_cmd->callback([&] { run_score(score_args); });

    StatsArgs stats_args;
    auto* stats_cmd = app.add_subcommand("stats", "lexicon, vocabulary, and OOV statistics");
    add_scheme_options(stats_cmd, stats_args.scheme);
    stats_cmd->add_option("--lexicon", stats_args.lexicon, "lexicon TSV");
    stats_cmd->add_flag("--lexicon-prepared", stats_args.lexicon_prepared,
                        "lexicon file is already augmented");
    stats_cmd->add_option("--corpus", stats_args.corpus, "corpus TSV");
    stats_cmd->add_option("--out", stats_args.out, "also write the report to a file");
    stats_cmd->callback([&] { run_stats(stats_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ParseError& e) {
        std::cerr << "error\tvalidation\t" << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error\tvalidation\t" << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error\truntime\t" << e.what() << "\n";
        return 2;
    }
    return 0;
}
