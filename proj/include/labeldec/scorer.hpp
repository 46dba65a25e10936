#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labeldec/common.hpp"
#include "labeldec/label_units.hpp"
#include "labeldec/lm.hpp"

namespace labeldec {

namespace detail {

inline double logsumexp(const std::vector<double>& xs)
{
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (std::isinf(m) && m < 0) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace detail

class ScorerState {
public:
    virtual ~ScorerState() = default;
};

using ScorerStatePtr = std::shared_ptr<const ScorerState>;

/// Per-step label posterior p(y_n | y_1..n-1, x). Natural log; every
/// distribution covers the full label vocabulary and sums to one.
class LabelScorer {
public:
    virtual ~LabelScorer() = default;
    virtual std::size_t vocab_size() const = 0;
    virtual ScorerStatePtr start() const = 0;
    virtual ScorerStatePtr step(const ScorerStatePtr& state, LabelId label) const = 0;
    virtual std::vector<double> log_dist(const ScorerStatePtr& state) const = 0;
};

using LabelScorerPtr = std::shared_ptr<const LabelScorer>;

/// Test double standing in for the neural model: at step n it puts mass `peak`
/// on reference[n] (EOS once the reference is exhausted) and spreads the rest
/// uniformly. The distribution depends on the position only, not the history.
class OracleScorer final : public LabelScorer {
public:
    OracleScorer(std::vector<LabelId> reference, double peak, LabelId eos_id,
                 std::size_t vocab_size)
        : ref_(std::move(reference)), peak_(peak), eos_(eos_id), vocab_(vocab_size)
    {
        if (vocab_ < 2) throw ValidationError("oracle scorer needs at least two labels");
        if (eos_ >= vocab_) throw ValidationError("EOS id outside vocabulary");
        for (LabelId l : ref_)
            if (l >= vocab_ || l == eos_)
                throw ValidationError("reference label outside vocabulary or equal to EOS");
        if (!(peak_ > 1.0 / static_cast<double>(vocab_)) || peak_ > 1.0)
            throw ValidationError("peak probability must lie in (1/|V|, 1]");
    }

    std::size_t vocab_size() const override { return vocab_; }

    ScorerStatePtr start() const override { return std::make_shared<State>(0); }

    ScorerStatePtr step(const ScorerStatePtr& state, LabelId) const override
    {
        return std::make_shared<State>(pos(state) + 1);
    }

    std::vector<double> log_dist(const ScorerStatePtr& state) const override
    {
        const std::size_t n = pos(state);
        const LabelId target = n < ref_.size() ? ref_[n] : eos_;
        const double off =
            peak_ >= 1.0 ? -std::numeric_limits<double>::infinity()
                         : std::log((1.0 - peak_) / static_cast<double>(vocab_ - 1));
        std::vector<double> d(vocab_, off);
        d[target] = std::log(peak_);
        return d;
    }

private:
    struct State final : ScorerState {
        explicit State(std::size_t n) : n(n) {}
        std::size_t n;
    };

    static std::size_t pos(const ScorerStatePtr& state)
    {
        return dynamic_cast<const State&>(*state).n;
    }

    std::vector<LabelId> ref_;
    double peak_;
    LabelId eos_;
    std::size_t vocab_;
};

/// An n-gram LM over label strings exposed through the scorer interface. The
/// <eos> label queries the LM's </s> token; scores are renormalized over the
/// label vocabulary so the interface invariant holds.
class NGramLabelScorer final : public LabelScorer {
public:
    NGramLabelScorer(NGramLM lm, const LabelVocab& vocab)
        : lm_(std::move(lm)), labels_(vocab.labels()), eos_(vocab.eos_id())
    {
        tokens_.reserve(labels_.size());
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            std::string tok = i == eos_ ? std::string(kSentEnd) : labels_[i];
            lm_.token_or_unk(tok);  // fail at construction, not mid-decode
            tokens_.push_back(std::move(tok));
        }
    }

    std::size_t vocab_size() const override { return labels_.size(); }

    ScorerStatePtr start() const override
    {
        return std::make_shared<State>(begin_state(lm_));
    }

    ScorerStatePtr step(const ScorerStatePtr& state, LabelId label) const override
    {
        return std::make_shared<State>(score(lm_, lm_state(state), tokens_.at(label)).second);
    }

    std::vector<double> log_dist(const ScorerStatePtr& state) const override
    {
        const LMState& s = lm_state(state);
        std::vector<double> d(labels_.size());
        for (std::size_t i = 0; i < labels_.size(); ++i)
            d[i] = score(lm_, s, tokens_[i]).first * std::numbers::ln10;
        const double z = detail::logsumexp(d);
        if (std::isfinite(z))
            for (double& x : d) x -= z;
        return d;
    }

private:
    struct State final : ScorerState {
        explicit State(LMState s) : s(std::move(s)) {}
        LMState s;
    };

    static const LMState& lm_state(const ScorerStatePtr& state)
    {
        return dynamic_cast<const State&>(*state).s;
    }

    NGramLM lm_;
    std::vector<std::string> labels_;
    std::vector<std::string> tokens_;
    LabelId eos_;
};

/// Posteriors exported by an external training stack, replayed during
/// decoding. Time-major dumps give one row per output position
/// (history-independent); history-keyed dumps map full label prefixes to rows.
struct PosteriorDump {
    struct Utt {
        bool history_keyed = false;
        std::vector<std::vector<float>> time_rows;
        std::map<std::vector<LabelId>, std::vector<float>> history_rows;
    };

    std::string vocab_file;
    std::uint64_t vocab_hash = 0;
    std::uint32_t vocab_size = 0;
    std::map<std::string, Utt> utts;

    void add_time_row(const std::string& utt_id, std::vector<float> row)
    {
        check_row(row);
        Utt& u = utts[utt_id];
        if (u.history_keyed && !u.history_rows.empty())
            throw ValidationError(utt_id + ": cannot mix time-major and history-keyed rows");
        u.history_keyed = false;
        u.time_rows.push_back(std::move(row));
    }

    void add_history_row(const std::string& utt_id, std::vector<LabelId> history,
                         std::vector<float> row)
    {
        check_row(row);
        Utt& u = utts[utt_id];
        if (!u.time_rows.empty())
            throw ValidationError(utt_id + ": cannot mix time-major and history-keyed rows");
        u.history_keyed = true;
        if (!u.history_rows.emplace(std::move(history), std::move(row)).second)
            throw ValidationError(utt_id + ": duplicate history row");
    }

private:
    void check_row(const std::vector<float>& row) const
    {
        if (row.size() != vocab_size)
            throw ValidationError("posterior row length does not match vocabulary size");
        std::vector<double> d(row.begin(), row.end());
        if (std::abs(detail::logsumexp(d)) > 1e-4)
            throw ValidationError("posterior row is not normalized");
    }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f)
{
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class DumpReader {
public:
    explicit DumpReader(std::string_view data) : data_(data) {}

    bool eof() const { return pos_ == data_.size(); }

    std::uint8_t u8()
    {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    std::string bytes(std::size_t n)
    {
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > data_.size()) throw ParseError("truncated posterior dump");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::string_view kDumpMagic = "LDDUMP01";

inline std::string write_dump(const PosteriorDump& dump)
{
    std::string out(kDumpMagic);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(dump.vocab_hash));
    std::string header =
        dump.vocab_file + "\n" + hex + "\n" + std::to_string(dump.vocab_size) + "\n";
    detail::put_u32(out, static_cast<std::uint32_t>(header.size()));
    out += header;

    auto put_row = [&](const std::vector<float>& row) {
        detail::put_u32(out, static_cast<std::uint32_t>(row.size()));
        for (float f : row) detail::put_f32(out, f);
    };
    for (const auto& [utt_id, u] : dump.utts) {
        if (!u.history_keyed) {
            for (std::size_t t = 0; t < u.time_rows.size(); ++t) {
                out.push_back('\0');
                detail::put_u32(out, static_cast<std::uint32_t>(utt_id.size()));
                out += utt_id;
                detail::put_u32(out, static_cast<std::uint32_t>(t));
                put_row(u.time_rows[t]);
            }
        } else {
            for (const auto& [hist, row] : u.history_rows) {
                out.push_back('\1');
                detail::put_u32(out, static_cast<std::uint32_t>(utt_id.size()));
                out += utt_id;
                detail::put_u32(out, static_cast<std::uint32_t>(hist.size()));
                for (LabelId l : hist) detail::put_u32(out, l);
                put_row(row);
            }
        }
    }
    return out;
}

inline PosteriorDump parse_dump(std::string_view data)
{
    detail::DumpReader r(data);
    if (r.bytes(kDumpMagic.size()) != kDumpMagic)
        throw ParseError("not a posterior dump (bad magic)");
    PosteriorDump dump;
    std::string header = r.bytes(r.u32());
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < header.size()) {
        std::size_t eol = header.find('\n', pos);
        if (eol == std::string::npos) break;
        lines.push_back(header.substr(pos, eol - pos));
        pos = eol + 1;
    }
    if (lines.size() != 3) throw ParseError("posterior dump header must have three lines");
    dump.vocab_file = lines[0];
    dump.vocab_hash = std::stoull(lines[1], nullptr, 16);
    dump.vocab_size = static_cast<std::uint32_t>(std::stoul(lines[2]));

    while (!r.eof()) {
        std::uint8_t kind = r.u8();
        if (kind > 1) throw ParseError("unknown posterior dump record kind");
        std::string utt_id = r.bytes(r.u32());
        if (kind == 0) {
            std::uint32_t step = r.u32();
            std::uint32_t n = r.u32();
            std::vector<float> row(n);
            for (auto& f : row) f = r.f32();
            if (step != dump.utts[utt_id].time_rows.size())
                throw ParseError(utt_id + ": time-major steps must be contiguous from 0");
            dump.add_time_row(utt_id, std::move(row));
        } else {
            std::uint32_t hlen = r.u32();
            std::vector<LabelId> hist(hlen);
            for (auto& l : hist) l = r.u32();
            std::uint32_t n = r.u32();
            std::vector<float> row(n);
            for (auto& f : row) f = r.f32();
            dump.add_history_row(utt_id, std::move(hist), std::move(row));
        }
    }
    return dump;
}

/// Replays one utterance of a dump. Queries beyond the stored rows throw
/// std::out_of_range; callers bound max_len accordingly.
class ReplayScorer final : public LabelScorer {
public:
    ReplayScorer(std::shared_ptr<const PosteriorDump> dump, const std::string& utt_id)
        : dump_(std::move(dump)), utt_id_(utt_id)
    {
        auto it = dump_->utts.find(utt_id);
        if (it == dump_->utts.end())
            throw ValidationError("posterior dump has no utterance " + utt_id);
        utt_ = &it->second;
    }

    std::size_t vocab_size() const override { return dump_->vocab_size; }

    std::size_t num_time_rows() const
    {
        return utt_->history_keyed ? 0 : utt_->time_rows.size();
    }

    bool history_keyed() const { return utt_->history_keyed; }

    std::size_t max_history_length() const
    {
        std::size_t m = 0;
        for (const auto& [h, row] : utt_->history_rows) m = std::max(m, h.size());
        return m;
    }

    ScorerStatePtr start() const override { return std::make_shared<State>(); }

    ScorerStatePtr step(const ScorerStatePtr& state, LabelId label) const override
    {
        auto next = std::make_shared<State>(history(state));
        next->h.push_back(label);
        return next;
    }

    std::vector<double> log_dist(const ScorerStatePtr& state) const override
    {
        const std::vector<LabelId>& h = history(state);
        const std::vector<float>* row = nullptr;
        if (!utt_->history_keyed) {
            if (h.size() >= utt_->time_rows.size())
                throw std::out_of_range(utt_id_ + ": no posterior row for step " +
                                        std::to_string(h.size()));
            row = &utt_->time_rows[h.size()];
        } else {
            auto it = utt_->history_rows.find(h);
            if (it == utt_->history_rows.end())
                throw std::out_of_range(utt_id_ + ": no posterior row for this label history");
            row = &it->second;
        }
        return std::vector<double>(row->begin(), row->end());
    }

private:
    struct State final : ScorerState {
        State() = default;
        explicit State(std::vector<LabelId> h) : h(std::move(h)) {}
        std::vector<LabelId> h;
    };

    static const std::vector<LabelId>& history(const ScorerStatePtr& state)
    {
        return dynamic_cast<const State&>(*state).h;
    }

    std::shared_ptr<const PosteriorDump> dump_;
    std::string utt_id_;
    const PosteriorDump::Utt* utt_;
};

/// Shallow fusion: primary + lambda * lm, elementwise on log-distributions.
/// With renormalize the result satisfies the scorer contract; without it the
/// raw sum is returned, the standard choice inside beam search.
class CombinedScorer final : public LabelScorer {
public:
    CombinedScorer(LabelScorerPtr primary, LabelScorerPtr lm, double lambda, bool renormalize)
        : a_(std::move(primary)), b_(std::move(lm)), lambda_(lambda), renorm_(renormalize)
    {
        if (!a_ || !b_) throw ValidationError("combine_scorers requires two scorers");
        if (lambda_ < 0.0) throw ValidationError("LM weight must be non-negative");
        if (a_->vocab_size() != b_->vocab_size())
            throw ValidationError("combined scorers must share one vocabulary");
    }

    std::size_t vocab_size() const override { return a_->vocab_size(); }

    ScorerStatePtr start() const override
    {
        return std::make_shared<State>(a_->start(), b_->start());
    }

    ScorerStatePtr step(const ScorerStatePtr& state, LabelId label) const override
    {
        const State& s = cast(state);
        return std::make_shared<State>(a_->step(s.a, label), b_->step(s.b, label));
    }

    std::vector<double> log_dist(const ScorerStatePtr& state) const override
    {
        const State& s = cast(state);
        std::vector<double> d = a_->log_dist(s.a);
        std::vector<double> l = b_->log_dist(s.b);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += lambda_ * l[i];
        if (renorm_) {
            const double z = detail::logsumexp(d);
            if (std::isfinite(z))
                for (double& x : d) x -= z;
        }
        return d;
    }

private:
    struct State final : ScorerState {
        State(ScorerStatePtr a, ScorerStatePtr b) : a(std::move(a)), b(std::move(b)) {}
        ScorerStatePtr a, b;
    };

    static const State& cast(const ScorerStatePtr& state)
    {
        return dynamic_cast<const State&>(*state);
    }

    LabelScorerPtr a_, b_;
    double lambda_;
    bool renorm_;
};

inline LabelScorerPtr combine_scorers(LabelScorerPtr primary, LabelScorerPtr lm, double lambda,
                                      bool renormalize = true)
{
    return std::make_shared<CombinedScorer>(std::move(primary), std::move(lm), lambda,
                                            renormalize);
}

}  // namespace labeldec
