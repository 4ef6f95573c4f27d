#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "omnisonic/autodiff.hpp"
#include "omnisonic/conditioners.hpp"
#include "omnisonic/params.hpp"

namespace omnisonic {

struct ModelConfig {
    int patch = 2;
    int hidden = 64;
    int depth = 2;
    int heads = 4;
    int mlp_ratio = 4;
    CondDims dims;
    int latent_c = 16, latent_t = 50, latent_f = 8;
    int visual_frames = 4;
    bool self_attention = false;  // optional latent self-attention sublayer
    bool share_ca_env = true;     // on/off streams share cross-attn weights
    bool gate_frozen = false;     // ablation: gate pinned at 1/3
    int max_text_len = 256;
    double rope_base = 10000.0;
    uint64_t init_seed = 1;
    uint64_t frozen_seed = 99;

    int t_tok() const { return latent_t / patch; }
    int f_tok() const { return latent_f / patch; }
    int n_tokens() const { return t_tok() * f_tok(); }
    int d_in() const { return latent_c * patch * patch; }

    void validate() const {
        if (latent_t % patch != 0 || latent_f % patch != 0)
            fail("model: latent dims not divisible by patch");
        if (hidden % heads != 0) fail("model: hidden not divisible by heads");
        if ((hidden / heads) % 2 != 0) fail("model: head dim must be even");
        if (depth < 1 || heads < 1 || hidden < 2) fail("model: bad dims");
    }
};

// Nearest-neighbor time upsampling map: output row i reads input row
// floor(i*n/t_out).
inline std::vector<int> frame_align_indices(int n, int t_out) {
    if (n < 1 || t_out < 1) fail("frame_align_indices: sizes must be positive");
    std::vector<int> idx(t_out);
    for (int i = 0; i < t_out; ++i)
        idx[i] = static_cast<int>((static_cast<int64_t>(i) * n) / t_out);
    return idx;
}

// Encoded per-forward condition tensors. Text embeddings are L x d graphs
// (speech carries gradients to the transcription encoder); visual is frozen.
template <class S>
struct EncodedConditions {
    NodePtr<S> on_env, off_env;  // L x d_env
    NodePtr<S> speech;           // L_sp x d_sp
    NodePtr<S> visual;           // N x d_vis
    OnScreenKind kind = OnScreenKind::environment;
};

template <class S>
struct ConditionStreams {
    NodePtr<S> on, off, sp;  // (L+N) x d_env / d_env / d_sp
    int n_visual = 0;        // appended row count (same for all three)
    std::vector<int> on_pos, off_pos, sp_pos;  // RoPE key positions (-1 = text)
};

template <class S>
class Model {
  public:
    Model(const ModelConfig& cfg)
        : cfg_(cfg),
          frozen_(cfg.dims, cfg.frozen_seed),
          init_rng_(cfg.init_seed) {
        cfg_.validate();
        build_params();
        build_patch_maps();
    }

    const ModelConfig& config() const { return cfg_; }
    ParamStore<S>& params() { return params_; }
    const ParamStore<S>& params() const { return params_; }
    const FrozenEncoders& frozen() const { return frozen_; }

    // ---- condition encoding ----

    EncodedConditions<S> encode_conditions(const ConditionSet& c) const {
        EncodedConditions<S> e;
        e.kind = c.kind;
        e.on_env = env_constant(c.drop_on ? "" : c.on_env_caption);
        e.off_env = env_constant(c.drop_off ? "" : c.off_env_caption);
        e.speech = speech_->encode(c.drop_sp ? "" : c.transcription, cfg_.t_tok());
        const std::string& label = c.drop_vis ? kNullVisualLabel : c.visual_label;
        const uint64_t vseed = c.drop_vis ? 0 : c.visual_seed;
        VisualFeatures vf = frozen_.synth_visual_features(vseed, c.visual_frames, label);
        e.visual = constant(vf.frames.template cast<S>());
        return e;
    }

    // ---- forward pieces ----

    NodePtr<S> time_embed(double t) const {
        if (t < 0.0 || t > 1.0) fail("time_embed: t outside [0,1]");
        const int d = cfg_.hidden;
        TensorT<S> sin_feat({1, d});
        for (int i = 0; i < d / 2; ++i) {
            const double freq = std::exp(-std::log(10000.0) * (2.0 * i) / d);
            sin_feat.data[2 * i] = S(std::sin(t * 1000.0 * freq));
            sin_feat.data[2 * i + 1] = S(std::cos(t * 1000.0 * freq));
        }
        auto h = silu(add_rowvec(matmul(constant(std::move(sin_feat)), p("time.w1")), p("time.b1")));
        return add_rowvec(matmul(h, p("time.w2")), p("time.b2"));
    }

    // c_vt = visual projection + time embedding broadcast over frames
    NodePtr<S> fuse_visual_time(const NodePtr<S>& visual, const NodePtr<S>& t_emb) const {
        return add_rowvec(matmul(visual, p("vt.w")), t_emb);
    }

    ConditionStreams<S> assemble_condition_streams(const EncodedConditions<S>& e) const {
        const int n = e.visual->value.rows();
        ConditionStreams<S> s;
        s.n_visual = n;
        auto zero_env = constant(TensorT<S>({n, cfg_.dims.d_env}));
        auto zero_sp = constant(TensorT<S>({n, cfg_.dims.d_sp}));
        if (e.kind == OnScreenKind::environment) {
            s.on = concat_rows(e.on_env, matmul(e.visual, p("streams.env.w")));
            s.sp = concat_rows(e.speech, zero_sp);
        } else {
            s.on = concat_rows(e.on_env, zero_env);
            s.sp = concat_rows(e.speech, matmul(e.visual, p("streams.sp.w")));
        }
        // off-screen sources are never visible: always placeholder rows
        s.off = concat_rows(e.off_env, zero_env);

        const std::vector<int> vis_pos = frame_align_positions(n);
        auto key_positions = [&](int text_rows) {
            std::vector<int> pos(text_rows, -1);
            pos.insert(pos.end(), vis_pos.begin(), vis_pos.end());
            return pos;
        };
        s.on_pos = key_positions(e.on_env->value.rows());
        s.off_pos = key_positions(e.off_env->value.rows());
        s.sp_pos = key_positions(e.speech->value.rows());
        return s;
    }

    // (omega_sp, omega_on, omega_off) from mean-pooled text embeddings only
    NodePtr<S> moe_gate(const EncodedConditions<S>& e) const {
        if (cfg_.gate_frozen) {
            TensorT<S> w({1, 3});
            w.fill(S(1) / S(3));
            return constant(std::move(w));
        }
        auto pooled = concat_cols(concat_cols(mean_rows(e.speech), mean_rows(e.on_env)),
                                  mean_rows(e.off_env));
        auto h = silu(add_rowvec(matmul(pooled, p("gate.w1")), p("gate.b1")));
        return softmax_rows(add_rowvec(matmul(h, p("gate.w2")), p("gate.b2")));
    }

    struct AdaLN {
        NodePtr<S> a1, b1, g1, a2, b2, g2;  // each T_tok x hidden
    };

    AdaLN frame_aligned_adaln(const NodePtr<S>& c_vt, int block) const {
        const std::string pre = "blk" + std::to_string(block) + ".ada.";
        auto six = add_rowvec(matmul(c_vt, p(pre + "w")), p(pre + "b"));  // N x 6d
        const int d = cfg_.hidden;
        const std::vector<int> up = frame_align_indices(c_vt->value.rows(), cfg_.t_tok());
        auto piece = [&](int i) { return gather_rows(slice_cols(six, i * d, (i + 1) * d), up); };
        return {piece(0), piece(1), piece(2), piece(3), piece(4), piece(5)};
    }

    NodePtr<S> velocity_forward(const NodePtr<S>& x_latent, double t,
                                const EncodedConditions<S>& e) const {
        if (x_latent->value.shape !=
            std::vector<int>{cfg_.latent_c, cfg_.latent_t, cfg_.latent_f})
            fail("velocity_forward: latent shape mismatch");
        auto tokens = gather_elements(x_latent, patchify_map_, {cfg_.n_tokens(), cfg_.d_in()});
        auto x = add_rowvec(matmul(tokens, p("in.w")), p("in.b"));
        auto t_emb = time_embed(t);
        auto c_vt = fuse_visual_time(e.visual, t_emb);
        auto gate = moe_gate(e);
        auto streams = assemble_condition_streams(e);
        for (int b = 0; b < cfg_.depth; ++b)
            x = block_forward(x, streams, frame_aligned_adaln(c_vt, b), gate, b);
        auto v_tok = add_rowvec(matmul(layer_norm_rows(x, S(1e-6)), p("head.w")), p("head.b"));
        return gather_elements(v_tok, unpatchify_map_,
                               {cfg_.latent_c, cfg_.latent_t, cfg_.latent_f});
    }

    NodePtr<S> velocity_forward(const NodePtr<S>& x_latent, double t,
                                const ConditionSet& cond) const {
        return velocity_forward(x_latent, t, encode_conditions(cond));
    }

    // Inference convenience: plain tensor in/out, no backward pass.
    TensorT<S> velocity(const TensorT<S>& x_latent, double t, const ConditionSet& cond) const {
        return velocity_forward(constant(x_latent), t, cond)->value;
    }

    NodePtr<S> block_forward(const NodePtr<S>& x_in, const ConditionStreams<S>& streams,
                             const AdaLN& ada, const NodePtr<S>& gate, int block) const {
        const std::string pre = "blk" + std::to_string(block) + ".";
        auto x = x_in;
        auto y = modulate(layer_norm_rows(x, S(1e-6)), ada.a1, ada.b1);
        auto x_on = cross_attention(y, streams.on, pre + "env.", streams.on_pos);
        auto x_off = cross_attention(y, streams.off,
                                     cfg_.share_ca_env ? pre + "env." : pre + "off.",
                                     streams.off_pos);
        auto x_sp = cross_attention(y, streams.sp, pre + "sp.", streams.sp_pos);
        auto w_sp = slice_cols(gate, 0, 1);
        auto w_on = slice_cols(gate, 1, 2);
        auto w_off = slice_cols(gate, 2, 3);
        auto fused = add(add(scale_node(x_sp, w_sp), scale_node(x_on, w_on)),
                         scale_node(x_off, w_off));
        x = add(x, mul(expand_time(ada.g1), fused));
        if (cfg_.self_attention)
            x = add(x, self_attention(layer_norm_rows(x, S(1e-6)), pre + "self."));
        auto y2 = modulate(layer_norm_rows(x, S(1e-6)), ada.a2, ada.b2);
        auto h = silu(add_rowvec(matmul(y2, p(pre + "mlp.w1")), p(pre + "mlp.b1")));
        auto out = add_rowvec(matmul(h, p(pre + "mlp.w2")), p(pre + "mlp.b2"));
        return add(x, mul(expand_time(ada.g2), out));
    }

    // query positions: frequency tokens of a frame share its temporal index
    std::vector<int> query_positions() const {
        std::vector<int> pos(cfg_.n_tokens());
        for (int t = 0; t < cfg_.t_tok(); ++t)
            for (int f = 0; f < cfg_.f_tok(); ++f) pos[t * cfg_.f_tok() + f] = t;
        return pos;
    }

    // visual frame j sits at latent-time position floor(j*T_tok/N)
    std::vector<int> frame_align_positions(int n) const {
        std::vector<int> pos(n);
        for (int j = 0; j < n; ++j)
            pos[j] = static_cast<int>((static_cast<int64_t>(j) * cfg_.t_tok()) / n);
        return pos;
    }

    NodePtr<S> multi_head_attention(const NodePtr<S>& q_src, const NodePtr<S>& kv,
                                    const std::string& pre, const std::vector<int>& q_pos,
                                    const std::vector<int>& k_pos) const {
        auto q = matmul(q_src, p(pre + "wq"));
        auto k = matmul(kv, p(pre + "wk"));
        auto v = matmul(kv, p(pre + "wv"));
        const int hd = cfg_.hidden / cfg_.heads;
        NodePtr<S> heads_out;
        for (int h = 0; h < cfg_.heads; ++h) {
            auto qh = rope_rows(slice_cols(q, h * hd, (h + 1) * hd), q_pos, cfg_.rope_base);
            auto kh = rope_rows(slice_cols(k, h * hd, (h + 1) * hd), k_pos, cfg_.rope_base);
            auto vh = slice_cols(v, h * hd, (h + 1) * hd);
            auto scores = scale(matmul_nt(qh, kh), S(1.0 / std::sqrt(double(hd))));
            auto oh = matmul(softmax_rows(scores), vh);
            heads_out = h == 0 ? oh : concat_cols(heads_out, oh);
        }
        return matmul(heads_out, p(pre + "wo"));
    }

  private:
    NodePtr<S> p(const std::string& name) const { return params_.get(name); }

    NodePtr<S> env_constant(const std::string& caption) const {
        return constant(frozen_.encode_env_caption(caption).tokens.template cast<S>());
    }

    NodePtr<S> modulate(const NodePtr<S>& ln, const NodePtr<S>& a, const NodePtr<S>& b) const {
        auto a_tok = expand_time(a);
        auto b_tok = expand_time(b);
        return add(add(ln, mul(ln, a_tok)), b_tok);
    }

    // broadcast a T_tok x d map over the frequency tokens of each frame
    NodePtr<S> expand_time(const NodePtr<S>& per_frame) const {
        std::vector<int> idx(cfg_.n_tokens());
        for (int t = 0; t < cfg_.t_tok(); ++t)
            for (int f = 0; f < cfg_.f_tok(); ++f) idx[t * cfg_.f_tok() + f] = t;
        return gather_rows(per_frame, idx);
    }

    NodePtr<S> cross_attention(const NodePtr<S>& q_src, const NodePtr<S>& kv,
                               const std::string& pre, const std::vector<int>& k_pos) const {
        return multi_head_attention(q_src, kv, pre, query_positions(), k_pos);
    }

    NodePtr<S> self_attention(const NodePtr<S>& x, const std::string& pre) const {
        const std::vector<int> pos = query_positions();
        return multi_head_attention(x, x, pre, pos, pos);
    }

    void build_params() {
        const int d = cfg_.hidden;
        Rng& r = init_rng_;
        auto zeros = [](std::vector<int> shp) { return TensorT<S>(std::move(shp)); };
        const double sd = 0.02;

        params_.add("in.w", init_normal<S>({cfg_.d_in(), d}, r, sd));
        params_.add("in.b", zeros({1, d}));
        params_.add("time.w1", init_normal<S>({d, d}, r, sd));
        params_.add("time.b1", zeros({1, d}));
        params_.add("time.w2", init_normal<S>({d, d}, r, sd));
        params_.add("time.b2", zeros({1, d}));
        params_.add("vt.w", init_normal<S>({cfg_.dims.d_vis, d}, r, sd));
        params_.add("streams.env.w", init_normal<S>({cfg_.dims.d_vis, cfg_.dims.d_env}, r, sd));
        params_.add("streams.sp.w", init_normal<S>({cfg_.dims.d_vis, cfg_.dims.d_sp}, r, sd));

        for (int b = 0; b < cfg_.depth; ++b) {
            const std::string pre = "blk" + std::to_string(b) + ".";
            params_.add(pre + "ada.w", zeros({d, 6 * d}));
            params_.add(pre + "ada.b", zeros({1, 6 * d}));
            auto attn = [&](const std::string& name, int d_kv) {
                params_.add(pre + name + ".wq", init_normal<S>({d, d}, r, sd));
                params_.add(pre + name + ".wk", init_normal<S>({d_kv, d}, r, sd));
                params_.add(pre + name + ".wv", init_normal<S>({d_kv, d}, r, sd));
                params_.add(pre + name + ".wo", init_normal<S>({d, d}, r, sd));
            };
            attn("env", cfg_.dims.d_env);
            if (!cfg_.share_ca_env) attn("off", cfg_.dims.d_env);
            attn("sp", cfg_.dims.d_sp);
            if (cfg_.self_attention) attn("self", d);
            params_.add(pre + "mlp.w1", init_normal<S>({d, cfg_.mlp_ratio * d}, r, sd));
            params_.add(pre + "mlp.b1", zeros({1, cfg_.mlp_ratio * d}));
            params_.add(pre + "mlp.w2", init_normal<S>({cfg_.mlp_ratio * d, d}, r, sd));
            params_.add(pre + "mlp.b2", zeros({1, d}));
        }

        const int gate_in = cfg_.dims.d_sp + 2 * cfg_.dims.d_env;
        params_.add("gate.w1", init_normal<S>({gate_in, d}, r, sd));
        params_.add("gate.b1", zeros({1, d}));
        params_.add("gate.w2", zeros({d, 3}));  // zero: 1/3 weights at init
        params_.add("gate.b2", zeros({1, 3}));

        params_.add("head.w", zeros({d, cfg_.d_in()}));  // zero: velocity 0 at init
        params_.add("head.b", zeros({1, cfg_.d_in()}));

        speech_ = std::make_unique<SpeechEncoder<S>>(params_, cfg_.dims, cfg_.max_text_len, r);
    }

    void build_patch_maps() {
        const int p2 = cfg_.patch;
        const int Tt = cfg_.t_tok(), Ft = cfg_.f_tok();
        const int C = cfg_.latent_c, Tl = cfg_.latent_t, Fl = cfg_.latent_f;
        auto fwd = std::make_shared<std::vector<size_t>>(
            static_cast<size_t>(cfg_.n_tokens()) * cfg_.d_in());
        auto inv = std::make_shared<std::vector<size_t>>(fwd->size());
        for (int t = 0; t < Tt; ++t) {
            for (int f = 0; f < Ft; ++f) {
                const size_t row = static_cast<size_t>(t) * Ft + f;
                for (int c = 0; c < C; ++c) {
                    for (int dt = 0; dt < p2; ++dt) {
                        for (int df = 0; df < p2; ++df) {
                            const size_t col = (static_cast<size_t>(c) * p2 + dt) * p2 + df;
                            const size_t tok_i = row * cfg_.d_in() + col;
                            const size_t lat_i =
                                (static_cast<size_t>(c) * Tl + (t * p2 + dt)) * Fl + (f * p2 + df);
                            (*fwd)[tok_i] = lat_i;
                            (*inv)[lat_i] = tok_i;
                        }
                    }
                }
            }
        }
        patchify_map_ = fwd;
        unpatchify_map_ = inv;
    }

    ModelConfig cfg_;
    FrozenEncoders frozen_;
    Rng init_rng_;
    ParamStore<S> params_;
    std::unique_ptr<SpeechEncoder<S>> speech_;
    std::shared_ptr<const std::vector<size_t>> patchify_map_, unpatchify_map_;
};

// Standalone patchify/unpatchify over plain tensors (testing and tooling).
template <class S>
TensorT<S> patchify(const TensorT<S>& latent, int patch) {
    if (latent.rank() != 3) fail("patchify: latent must be rank 3");
    const int C = latent.shape[0], Tl = latent.shape[1], Fl = latent.shape[2];
    if (Tl % patch != 0 || Fl % patch != 0) fail("patchify: dims not divisible by patch");
    const int Tt = Tl / patch, Ft = Fl / patch, d_in = C * patch * patch;
    TensorT<S> out({Tt * Ft, d_in});
    for (int t = 0; t < Tt; ++t)
        for (int f = 0; f < Ft; ++f)
            for (int c = 0; c < C; ++c)
                for (int dt = 0; dt < patch; ++dt)
                    for (int df = 0; df < patch; ++df)
                        out.at(t * Ft + f, (c * patch + dt) * patch + df) =
                            latent.data[(static_cast<size_t>(c) * Tl + (t * patch + dt)) * Fl +
                                        (f * patch + df)];
    return out;
}

template <class S>
TensorT<S> unpatchify(const TensorT<S>& tokens, int patch, int C, int Tl, int Fl) {
    const int Tt = Tl / patch, Ft = Fl / patch;
    if (tokens.rows() != Tt * Ft || tokens.cols() != C * patch * patch)
        fail("unpatchify: token shape mismatch");
    TensorT<S> out({C, Tl, Fl});
    for (int t = 0; t < Tt; ++t)
        for (int f = 0; f < Ft; ++f)
            for (int c = 0; c < C; ++c)
                for (int dt = 0; dt < patch; ++dt)
                    for (int df = 0; df < patch; ++df)
                        out.data[(static_cast<size_t>(c) * Tl + (t * patch + dt)) * Fl +
                                 (f * patch + df)] =
                            tokens.at(t * Ft + f, (c * patch + dt) * patch + df);
    return out;
}

}  // namespace omnisonic
