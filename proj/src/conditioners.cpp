#include "omnisonic/conditioners.hpp"

#include <algorithm>
#include <cctype>

namespace omnisonic {

ConditionSet make_condition_set(std::string on_env_caption, std::string off_env_caption,
                                std::string transcription, OnScreenKind kind,
                                std::string visual_label, uint64_t visual_seed,
                                int visual_frames) {
    const bool empty_on = on_env_caption.empty();
    if ((kind == OnScreenKind::speech) != empty_on)
        fail("condition set: on-screen kind is speech iff the on-screen env caption is empty");
    if (visual_frames < 1) fail("condition set: need at least one visual frame");
    ConditionSet c;
    c.on_env_caption = std::move(on_env_caption);
    c.off_env_caption = std::move(off_env_caption);
    c.transcription = std::move(transcription);
    c.kind = kind;
    c.visual_label = std::move(visual_label);
    c.visual_seed = visual_seed;
    c.visual_frames = visual_frames;
    return c;
}

FrozenEncoders::FrozenEncoders(const CondDims& dims, uint64_t seed) : dims_(dims), seed_(seed) {
    Rng rng(Rng::mix64(seed ^ 0xE17Aull));
    const double sd = 1.0 / std::sqrt(double(dims.d_env));
    env_table_ = TensorT<double>::randn({kVocab + 1, dims.d_env}, rng, sd).cast<float>();
}

std::vector<std::string> FrozenEncoders::tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

EnvEmbedding FrozenEncoders::encode_env_caption(const std::string& text) const {
    const std::vector<std::string> toks = tokenize(text);
    EnvEmbedding e;
    if (toks.empty()) {
        e.tokens = Tensor({1, dims_.d_env});
        std::copy_n(&env_table_.data[static_cast<size_t>(kVocab) * dims_.d_env], dims_.d_env,
                    e.tokens.data.begin());
        return e;
    }
    e.tokens = Tensor({static_cast<int>(toks.size()), dims_.d_env});
    for (size_t i = 0; i < toks.size(); ++i) {
        const int bucket = static_cast<int>(Rng::fnv1a64(toks[i]) % kVocab);
        std::copy_n(&env_table_.data[static_cast<size_t>(bucket) * dims_.d_env], dims_.d_env,
                    &e.tokens.data[i * dims_.d_env]);
    }
    return e;
}

Tensor FrozenEncoders::class_embedding(const std::string& kind_label) const {
    Rng rng(Rng::mix64(seed_ ^ Rng::fnv1a64(kind_label)));
    return TensorT<double>::randn({1, dims_.d_vis}, rng, 1.0 / std::sqrt(double(dims_.d_vis)))
        .cast<float>();
}

VisualFeatures FrozenEncoders::synth_visual_features(uint64_t scenario_seed, int n,
                                                     const std::string& kind_label) const {
    if (n < 1) fail("synth_visual_features: n must be >= 1");
    const Tensor cls = class_embedding(kind_label);
    Rng drift(Rng::mix64(scenario_seed + 0x9E37ull) ^ Rng::fnv1a64(kind_label));
    VisualFeatures v;
    v.frames = Tensor({n, dims_.d_vis});
    // frames stay near the class embedding: consecutive-frame variation is
    // deliberately small
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < dims_.d_vis; ++d)
            v.frames.at(i, d) = cls.data[d] + static_cast<float>(0.02 * drift.normal());
    return v;
}

}  // namespace omnisonic
