#pragma once

#include <string>
#include <vector>

#include "omnisonic/params.hpp"
#include "omnisonic/rng.hpp"
#include "omnisonic/tensor.hpp"

namespace omnisonic {

struct CondDims {
    int d_env = 32;
    int d_sp = 32;
    int d_vis = 16;
};

struct EnvEmbedding {
    Tensor tokens;  // L x d_env
};

struct VisualFeatures {
    Tensor frames;  // N x d_vis
    double fps = 4.0;
};

enum class OnScreenKind { environment, speech };

// Condition state for one sample: raw text plus drop flags. Encoders map it
// to tensors inside each forward; a dropped condition encodes exactly like
// the empty ("" / null-label) one, which is the learned null.
struct ConditionSet {
    std::string on_env_caption;
    std::string off_env_caption;
    std::string transcription;
    OnScreenKind kind = OnScreenKind::environment;
    std::string visual_label;
    uint64_t visual_seed = 0;
    int visual_frames = 4;
    bool drop_on = false, drop_off = false, drop_sp = false, drop_vis = false;
};

// Enforces the biconditional: on-screen kind is speech exactly when the
// on-screen env caption is empty.
ConditionSet make_condition_set(std::string on_env_caption, std::string off_env_caption,
                                std::string transcription, OnScreenKind kind,
                                std::string visual_label, uint64_t visual_seed,
                                int visual_frames);

inline const std::string kNullVisualLabel = "\x01null";

// Frozen (non-trainable) encoders: hash-bucket caption table and synthetic
// visual features. Everything is a pure function of (seed, input).
class FrozenEncoders {
  public:
    static constexpr int kVocab = 4096;

    FrozenEncoders(const CondDims& dims, uint64_t seed);

    // lowercase whitespace tokens -> hashed bucket rows; "" -> 1 EMPTY row.
    EnvEmbedding encode_env_caption(const std::string& text) const;

    // class embedding for the kind label plus small per-frame drift.
    VisualFeatures synth_visual_features(uint64_t scenario_seed, int n,
                                         const std::string& kind_label) const;

    static std::vector<std::string> tokenize(const std::string& text);

    const CondDims& dims() const { return dims_; }

  private:
    Tensor class_embedding(const std::string& kind_label) const;

    CondDims dims_;
    uint64_t seed_;
    Tensor env_table_;  // (kVocab+1) x d_env, last row = EMPTY
};

// Differentiable length regulator: rescales durations to sum to
// target_frames, places Gaussian kernels at the token centers, and mixes the
// hidden rows. sigma = max(mean duration, 1) is treated as a constant.
template <class S>
NodePtr<S> durator(const NodePtr<S>& hidden, const NodePtr<S>& durations, int target_frames) {
    const int L = hidden->value.rows();
    if (L < 1) fail("durator: no tokens");
    if (durations->value.rows() != L || durations->value.cols() != 1)
        fail("durator: durations must be L x 1");
    if (target_frames < 1) fail("durator: target_frames must be >= 1");
    for (S d : durations->value.data)
        if (!(d > S(0))) fail("durator: durations must be positive");

    // L x 1 -> 1 x L
    auto dur_row = [&] {
        auto idx = std::make_shared<std::vector<size_t>>(L);
        for (int i = 0; i < L; ++i) (*idx)[i] = static_cast<size_t>(i);
        return gather_elements(durations, idx, {1, L});
    }();
    auto total = sum_all(dur_row);
    auto rescale = scale(rcp(total), S(target_frames));
    auto d_resc = scale_node(dur_row, rescale);
    auto cum = cumsum_vec(d_resc);
    auto centers = sub(cum, scale(d_resc, S(0.5)));  // 1 x L

    const double sigma = std::max(double(target_frames) / L, 1.0);
    auto centers_mat = gather_rows(centers, std::vector<int>(target_frames, 0));  // T x L
    TensorT<S> tgrid({target_frames, L});
    for (int t = 0; t < target_frames; ++t)
        for (int l = 0; l < L; ++l) tgrid.at(t, l) = S(t + 0.5);
    auto diff = sub(constant(std::move(tgrid)), centers_mat);
    auto sq = mul(diff, diff);
    auto attn = softmax_rows(scale(sq, S(-1.0 / (sigma * sigma))));
    return matmul(attn, hidden);
}

// Trainable character-level transcription encoder feeding the durator.
template <class S>
class SpeechEncoder {
  public:
    static constexpr int kChars = 95;  // printable ascii 32..126
    static constexpr int kEmptyRow = kChars;
    static constexpr int kUnkRow = kChars + 1;

    SpeechEncoder(ParamStore<S>& params, const CondDims& dims, int max_len, Rng& rng)
        : d_sp_(dims.d_sp), max_len_(max_len) {
        const double sd = 1.0 / std::sqrt(double(dims.d_sp));
        char_table_ = params.add("sp.char_table", init_normal<S>({kChars + 2, dims.d_sp}, rng, sd));
        pos_table_ = params.add("sp.pos_table", init_normal<S>({max_len, dims.d_sp}, rng, 0.02));
        dur_w1_ = params.add("sp.dur.w1", init_normal<S>({dims.d_sp, dims.d_sp}, rng, sd));
        dur_b1_ = params.add("sp.dur.b1", TensorT<S>({1, dims.d_sp}));
        dur_w2_ = params.add("sp.dur.w2", init_normal<S>({dims.d_sp, 1}, rng, sd));
        dur_b2_ = params.add("sp.dur.b2", TensorT<S>({1, 1}));
    }

    // token rows = char embedding + positional offset
    NodePtr<S> token_rows(const std::string& text) const {
        std::vector<int> rows;
        if (text.empty()) {
            rows.push_back(kEmptyRow);
        } else {
            for (char c : text) {
                const int v = static_cast<unsigned char>(c);
                rows.push_back(v >= 32 && v <= 126 ? v - 32 : kUnkRow);
            }
        }
        if (static_cast<int>(rows.size()) > max_len_) rows.resize(max_len_);
        std::vector<int> pos(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) pos[i] = static_cast<int>(i);
        return add(gather_rows(char_table_, rows), gather_rows(pos_table_, pos));
    }

    NodePtr<S> predict_durations(const NodePtr<S>& tokens) const {
        auto h = silu(add_rowvec(matmul(tokens, dur_w1_), dur_b1_));
        return softplus(add_rowvec(matmul(h, dur_w2_), dur_b2_));  // L x 1, > 0
    }

    // target_frames <= 0 selects the predicted-total length:
    // round(sum durations), clamped to >= 1.
    NodePtr<S> encode(const std::string& text, int target_frames) const {
        auto tokens = token_rows(text);
        auto durs = predict_durations(tokens);
        if (target_frames <= 0) {
            double total = 0.0;
            for (S d : durs->value.data) total += double(d);
            target_frames = std::max(1, static_cast<int>(std::lround(total)));
        }
        return durator(tokens, durs, target_frames);
    }

  private:
    int d_sp_, max_len_;
    NodePtr<S> char_table_, pos_table_, dur_w1_, dur_b1_, dur_w2_, dur_b2_;
};

}  // namespace omnisonic
