#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace labeldec;

namespace {

// constant distribution, ignores history
class FixedScorer final : public LabelScorer {
public:
    explicit FixedScorer(std::vector<double> log_probs) : d_(std::move(log_probs)) {}

    std::size_t vocab_size() const override { return d_.size(); }
    ScorerStatePtr start() const override { return std::make_shared<ScorerState>(); }
    ScorerStatePtr step(const ScorerStatePtr& state, LabelId) const override { return state; }
    std::vector<double> log_dist(const ScorerStatePtr&) const override { return d_; }

private:
    std::vector<double> d_;
};

std::vector<float> normalized_row(std::mt19937& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::vector<double> w(n);
    double total = 0.0;
    for (double& x : w) total += (x = u(rng));
    std::vector<float> row;
    for (double x : w) row.push_back(static_cast<float>(std::log(x / total)));
    return row;
}

// interface contract: row length, normalization, deterministic replay of a path
void check_contract(const LabelScorer& scorer, const std::vector<std::vector<LabelId>>& paths)
{
    for (const auto& path : paths) {
        std::vector<std::vector<double>> first;
        for (int repeat = 0; repeat < 2; ++repeat) {
            ScorerStatePtr state = scorer.start();
            std::vector<std::vector<double>> rows;
            rows.push_back(scorer.log_dist(state));
            for (LabelId l : path) {
                state = scorer.step(state, l);
                rows.push_back(scorer.log_dist(state));
            }
            for (const auto& row : rows) {
                ASSERT_EQ(row.size(), scorer.vocab_size());
                EXPECT_NEAR(detail::logsumexp(row), 0.0, 1e-5);
            }
            if (repeat == 0)
                first = std::move(rows);
            else
                EXPECT_EQ(first, rows);
        }
    }
}

}  // namespace

TEST(OracleScorer, PeakOneGreedyReproducesReference)
{
    const std::vector<LabelId> ref{3, 1, 2, 1};
    OracleScorer scorer(ref, 1.0, 0, 5);
    ScorerStatePtr state = scorer.start();
    std::vector<LabelId> out;
    for (;;) {
        std::vector<double> d = scorer.log_dist(state);
        LabelId best = 0;
        for (std::size_t i = 1; i < d.size(); ++i)
            if (d[i] > d[best]) best = static_cast<LabelId>(i);
        if (best == 0) break;
        out.push_back(best);
        state = scorer.step(state, best);
    }
    EXPECT_EQ(out, ref);
}

TEST(OracleScorer, OffReferenceMassSplitsUniformly)
{
    OracleScorer scorer({4}, 0.9, 0, 10);
    std::vector<double> d = scorer.log_dist(scorer.start());
    EXPECT_NEAR(std::exp(d[4]), 0.9, 1e-12);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i == 4) continue;
        EXPECT_NEAR(std::exp(d[i]), 0.1 / 9.0, 1e-12);
    }
}

TEST(OracleScorer, PeaksOnEosAtAndBeyondReferenceEnd)
{
    OracleScorer scorer({2, 3}, 0.8, 0, 4);
    ScorerStatePtr state = scorer.start();
    state = scorer.step(state, 2);
    state = scorer.step(state, 3);
    for (int extra = 0; extra < 3; ++extra) {
        std::vector<double> d = scorer.log_dist(state);
        EXPECT_NEAR(std::exp(d[0]), 0.8, 1e-12);
        state = scorer.step(state, 1);
    }
}

TEST(OracleScorer, Validation)
{
    EXPECT_THROW(OracleScorer({1}, 0.25, 0, 4), ValidationError);  // peak == 1/|V|
    EXPECT_THROW(OracleScorer({1}, 1.1, 0, 4), ValidationError);
    EXPECT_THROW(OracleScorer({0}, 0.9, 0, 4), ValidationError);  // EOS in reference
    EXPECT_THROW(OracleScorer({9}, 0.9, 0, 4), ValidationError);  // out of range
    EXPECT_THROW(OracleScorer({}, 0.9, 0, 1), ValidationError);   // vocab too small
}

TEST(NGramLabelScorer, MatchesConditionalsWhenVocabsAlign)
{
    LabelVocab vocab = LabelVocab::build({"a", "b"}, false);
    NGramLM lm = train_ngram({{"a", "b", "</s>"}, {"a", "</s>"}}, 2, 1.0);
    NGramLabelScorer scorer(lm, vocab);
    std::vector<double> d = scorer.log_dist(scorer.start());
    auto p = [&](const std::vector<std::string>& h, const std::string& tok) {
        LMState s;
        for (const auto& t : h) s = score(lm, s, t).second;
        return std::pow(10.0, score(lm, s, tok).first);
    };
    EXPECT_NEAR(std::exp(d[vocab.eos_id()]), p({}, "</s>"), 1e-12);
    EXPECT_NEAR(std::exp(d[vocab.id("a")]), p({}, "a"), 1e-12);
    EXPECT_NEAR(std::exp(d[vocab.id("b")]), p({}, "b"), 1e-12);

    ScorerStatePtr after_a = scorer.step(scorer.start(), vocab.id("a"));
    std::vector<double> d2 = scorer.log_dist(after_a);
    EXPECT_NEAR(std::exp(d2[vocab.id("b")]), p({"a"}, "b"), 1e-12);
}

TEST(NGramLabelScorer, RenormalizesOverLabelSubset)
{
    // LM vocab has <s> which the label vocab lacks; ratios must survive
    LabelVocab vocab = LabelVocab::build({"a", "b"}, false);
    NGramLM lm = train_ngram({{"<s>", "a", "b", "</s>"}}, 1, 0.5);
    NGramLabelScorer scorer(lm, vocab);
    std::vector<double> d = scorer.log_dist(scorer.start());
    double total = 0.0;
    for (double x : d) total += std::exp(x);
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(d[vocab.id("a")] - d[vocab.id("b")],
                std::numbers::ln10 * (unigram_logprob(lm, "a") - unigram_logprob(lm, "b")),
                1e-12);
}

TEST(NGramLabelScorer, RejectsLabelsOutsideLmVocab)
{
    LabelVocab vocab = LabelVocab::build({"a", "zzz"}, false);
    NGramLM lm = train_ngram({{"a", "</s>"}}, 1, 1.0);
    EXPECT_THROW(NGramLabelScorer(lm, vocab), ValidationError);
    NGramLM with_unk = train_ngram({{"a", "</s>"}}, 1, 1.0, {"<unk>"});
    EXPECT_NO_THROW(NGramLabelScorer(with_unk, vocab));
}

TEST(PosteriorDump, TimeMajorRoundTrip)
{
    std::mt19937 rng(3);
    PosteriorDump dump;
    dump.vocab_file = "labels.txt";
    dump.vocab_hash = 0x0123456789abcdefULL;
    dump.vocab_size = 4;
    for (int t = 0; t < 3; ++t) dump.add_time_row("u1", normalized_row(rng, 4));
    dump.add_time_row("u2", normalized_row(rng, 4));

    const std::string bytes = write_dump(dump);
    PosteriorDump back = parse_dump(bytes);
    EXPECT_EQ(back.vocab_file, dump.vocab_file);
    EXPECT_EQ(back.vocab_hash, dump.vocab_hash);
    EXPECT_EQ(back.vocab_size, dump.vocab_size);
    ASSERT_EQ(back.utts.size(), 2u);
    EXPECT_EQ(back.utts.at("u1").time_rows, dump.utts.at("u1").time_rows);
    EXPECT_EQ(back.utts.at("u2").time_rows, dump.utts.at("u2").time_rows);
}

TEST(PosteriorDump, HistoryKeyedRoundTrip)
{
    std::mt19937 rng(5);
    PosteriorDump dump;
    dump.vocab_size = 3;
    dump.add_history_row("u1", {}, normalized_row(rng, 3));
    dump.add_history_row("u1", {1}, normalized_row(rng, 3));
    dump.add_history_row("u1", {1, 2}, normalized_row(rng, 3));

    PosteriorDump back = parse_dump(write_dump(dump));
    ASSERT_TRUE(back.utts.at("u1").history_keyed);
    EXPECT_EQ(back.utts.at("u1").history_rows, dump.utts.at("u1").history_rows);
}

TEST(PosteriorDump, WriteIsDeterministicAndOrderInvariant)
{
    std::mt19937 rng(7);
    const auto r1 = normalized_row(rng, 2);
    const auto r2 = normalized_row(rng, 2);
    PosteriorDump a;
    a.vocab_size = 2;
    a.add_time_row("u1", r1);
    a.add_time_row("u2", r2);
    PosteriorDump b;
    b.vocab_size = 2;
    b.add_time_row("u2", r2);
    b.add_time_row("u1", r1);
    EXPECT_EQ(write_dump(a), write_dump(a));
    EXPECT_EQ(write_dump(a), write_dump(b));
}

TEST(PosteriorDump, RowValidation)
{
    std::mt19937 rng(9);
    PosteriorDump dump;
    dump.vocab_size = 3;
    EXPECT_THROW(dump.add_time_row("u", normalized_row(rng, 2)), ValidationError);
    EXPECT_THROW(dump.add_time_row("u", {-0.1f, -0.1f, -0.1f}), ValidationError);
    dump.add_time_row("u", normalized_row(rng, 3));
    EXPECT_THROW(dump.add_history_row("u", {}, normalized_row(rng, 3)), ValidationError);
    PosteriorDump hist;
    hist.vocab_size = 3;
    hist.add_history_row("u", {1}, normalized_row(rng, 3));
    EXPECT_THROW(hist.add_history_row("u", {1}, normalized_row(rng, 3)), ValidationError);
    EXPECT_THROW(hist.add_time_row("u", normalized_row(rng, 3)), ValidationError);
}

TEST(PosteriorDump, CorruptBytesFail)
{
    std::mt19937 rng(11);
    PosteriorDump dump;
    dump.vocab_size = 2;
    dump.add_time_row("u1", normalized_row(rng, 2));
    const std::string bytes = write_dump(dump);

    EXPECT_THROW(parse_dump(bytes.substr(0, bytes.size() - 3)), ParseError);
    EXPECT_THROW(parse_dump(bytes.substr(0, 10)), ParseError);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    EXPECT_THROW(parse_dump(wrong_magic), ParseError);
    EXPECT_THROW(parse_dump(""), ParseError);
}

TEST(ReplayScorer, TimeMajorReplaysRowsBitExactly)
{
    std::mt19937 rng(13);
    auto dump = std::make_shared<PosteriorDump>();
    dump->vocab_size = 3;
    std::vector<std::vector<float>> rows;
    for (int t = 0; t < 3; ++t) {
        rows.push_back(normalized_row(rng, 3));
        dump->add_time_row("u1", rows.back());
    }
    ReplayScorer scorer(dump, "u1");
    EXPECT_EQ(scorer.num_time_rows(), 3u);
    EXPECT_FALSE(scorer.history_keyed());

    ScorerStatePtr state = scorer.start();
    for (std::size_t t = 0; t < rows.size(); ++t) {
        std::vector<double> d = scorer.log_dist(state);
        ASSERT_EQ(d.size(), rows[t].size());
        for (std::size_t i = 0; i < d.size(); ++i)
            EXPECT_EQ(d[i], static_cast<double>(rows[t][i]));
        state = scorer.step(state, 1);
    }
    EXPECT_THROW(scorer.log_dist(state), std::out_of_range);
}

TEST(ReplayScorer, HistoryKeyedFollowsEmittedPath)
{
    std::mt19937 rng(17);
    auto dump = std::make_shared<PosteriorDump>();
    dump->vocab_size = 3;
    std::map<std::vector<LabelId>, std::vector<float>> rows;
    for (const auto& h : std::vector<std::vector<LabelId>>{{}, {1}, {2}, {1, 2}})
        dump->add_history_row("u1", h, rows[h] = normalized_row(rng, 3));

    ReplayScorer scorer(dump, "u1");
    EXPECT_TRUE(scorer.history_keyed());
    EXPECT_EQ(scorer.max_history_length(), 2u);

    ScorerStatePtr state = scorer.start();
    auto expect_row = [&](const std::vector<LabelId>& h) {
        std::vector<double> d = scorer.log_dist(state);
        for (std::size_t i = 0; i < d.size(); ++i)
            EXPECT_EQ(d[i], static_cast<double>(rows.at(h)[i]));
    };
    expect_row({});
    state = scorer.step(state, 1);
    expect_row({1});
    state = scorer.step(state, 2);
    expect_row({1, 2});
    state = scorer.step(state, 2);
    EXPECT_THROW(scorer.log_dist(state), std::out_of_range);
}

TEST(ReplayScorer, UnknownUtteranceFails)
{
    auto dump = std::make_shared<PosteriorDump>();
    dump->vocab_size = 2;
    EXPECT_THROW(ReplayScorer(dump, "missing"), ValidationError);
}

TEST(Combined, LambdaZeroMatchesPrimary)
{
    auto primary = std::make_shared<testutil::RandomScorer>(21, 4);
    auto lm = std::make_shared<testutil::RandomScorer>(22, 4);
    LabelScorerPtr combined = combine_scorers(primary, lm, 0.0);
    ScorerStatePtr cs = combined->start();
    ScorerStatePtr ps = primary->start();
    for (LabelId l : {1u, 3u, 2u}) {
        std::vector<double> dc = combined->log_dist(cs);
        std::vector<double> dp = primary->log_dist(ps);
        for (std::size_t i = 0; i < dc.size(); ++i) EXPECT_NEAR(dc[i], dp[i], 1e-12);
        cs = combined->step(cs, l);
        ps = primary->step(ps, l);
    }
}

TEST(Combined, UniformPlusUniformStaysUniform)
{
    const double u = std::log(1.0 / 3.0);
    auto a = std::make_shared<FixedScorer>(std::vector<double>{u, u, u});
    auto b = std::make_shared<FixedScorer>(std::vector<double>{u, u, u});
    LabelScorerPtr combined = combine_scorers(a, b, 1.0);
    std::vector<double> d = combined->log_dist(combined->start());
    for (double x : d) EXPECT_NEAR(x, u, 1e-12);
}

TEST(Combined, UniformLmLeavesPrimaryUnchanged)
{
    auto a = std::make_shared<FixedScorer>(
        std::vector<double>{std::log(0.8), std::log(0.2)});
    auto b = std::make_shared<FixedScorer>(
        std::vector<double>{std::log(0.5), std::log(0.5)});
    LabelScorerPtr combined = combine_scorers(a, b, 1.0);
    std::vector<double> d = combined->log_dist(combined->start());
    EXPECT_NEAR(d[0], std::log(0.8), 1e-12);
    EXPECT_NEAR(d[1], std::log(0.2), 1e-12);
}

TEST(Combined, UnnormalizedVariantAddsRawScores)
{
    auto a = std::make_shared<FixedScorer>(
        std::vector<double>{std::log(0.7), std::log(0.3)});
    auto b = std::make_shared<FixedScorer>(
        std::vector<double>{std::log(0.1), std::log(0.9)});
    LabelScorerPtr combined = combine_scorers(a, b, 2.0, false);
    std::vector<double> d = combined->log_dist(combined->start());
    EXPECT_NEAR(d[0], std::log(0.7) + 2.0 * std::log(0.1), 1e-12);
    EXPECT_NEAR(d[1], std::log(0.3) + 2.0 * std::log(0.9), 1e-12);
}

TEST(Combined, Validation)
{
    auto a = std::make_shared<testutil::RandomScorer>(31, 3);
    auto b = std::make_shared<testutil::RandomScorer>(32, 4);
    EXPECT_THROW(combine_scorers(a, b, 1.0), ValidationError);
    auto c = std::make_shared<testutil::RandomScorer>(33, 3);
    EXPECT_THROW(combine_scorers(a, c, -0.1), ValidationError);
    EXPECT_THROW(combine_scorers(nullptr, c, 1.0), ValidationError);
}

TEST(Contract, AllImplementationsNormalizedAndDeterministic)
{
    std::vector<std::vector<LabelId>> paths{{}, {1}, {2, 1}, {1, 1, 2}};

    check_contract(OracleScorer({2, 1}, 0.9, 0, 3), paths);
    check_contract(OracleScorer({1}, 1.0, 0, 3), paths);
    check_contract(testutil::RandomScorer(41, 3), paths);

    LabelVocab vocab = LabelVocab::build({"a", "b"}, false);
    NGramLM lm = train_ngram({{"a", "b", "</s>"}, {"b", "a", "</s>"}}, 2, 0.5);
    check_contract(NGramLabelScorer(lm, vocab), paths);

    std::mt19937 rng(43);
    auto dump = std::make_shared<PosteriorDump>();
    dump->vocab_size = 3;
    for (int t = 0; t < 4; ++t) dump->add_time_row("u", normalized_row(rng, 3));
    check_contract(ReplayScorer(dump, "u"), {{}, {1}, {2, 1}, {1, 1, 2}});

    auto a = std::make_shared<testutil::RandomScorer>(47, 3);
    auto b = std::make_shared<NGramLabelScorer>(lm, vocab);
    check_contract(*combine_scorers(a, b, 0.7), paths);
}
