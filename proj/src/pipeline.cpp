#include "omnisonic/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "../vendor/json.hpp"
#include "omnisonic/evalmetrics.hpp"
#include "omnisonic/gradcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace omnisonic {

int thread_budget() {
    if (const char* env = std::getenv("OMNISONIC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 1 && v <= 256) return static_cast<int>(v);
        throw config_error("OMNISONIC_THREADS must be an integer in [1,256]");
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(thread_budget(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr first_err;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!first_err) first_err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_err) std::rethrow_exception(first_err);
}

// ---------------------------------------------------------------------------
// dataset

namespace {

std::vector<int> latent_shape(const RunConfig& cfg) {
    return {cfg.model.latent_c, cfg.model.latent_t, cfg.model.latent_f};
}

void build_split(const RunConfig& cfg, const SourceLibrary& lib, const std::string& dir,
                 const std::string& split, char prefix, int count) {
    fs::create_directories(fs::path(dir) / "wav");
    const Rng base = Rng(cfg.library_seed).fork("mix." + split);
    std::vector<SampleManifest> list(count);
    parallel_for(count, [&](int i) {
        Rng item = base.fork(static_cast<uint64_t>(i));
        BuiltSample b = build_training_sample(i % 4, lib, item, cfg.mix_params());
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%c%04d", prefix, i);
        b.manifest.id = buf;
        b.manifest.wav_path = std::string("wav/") + buf + ".wav";
        write_wav(dir + "/" + b.manifest.wav_path, fix_length(b.mix, cfg.clip_samples));
        list[i] = std::move(b.manifest);
    });
    write_manifest_list(dir + "/manifest.json", list);
}

}  // namespace

void build_mix_dataset(const RunConfig& cfg, const std::string& out_dir) {
    const SourceLibrary lib = cfg.make_library().train_split();
    build_split(cfg, lib, out_dir + "/train", "train", 't', cfg.mix_train_count);
    build_split(cfg, lib, out_dir + "/val", "val", 'v', cfg.mix_val_count);
}

Dataset load_dataset(const RunConfig& cfg, const std::string& split_dir) {
    if (!fs::exists(split_dir + "/manifest.json"))
        throw config_error("dataset: missing " + split_dir + "/manifest.json (run mix first)");
    Dataset ds;
    try {
        ds.items = read_manifest_list(split_dir + "/manifest.json");
    } catch (const std::exception& e) {
        throw config_error("dataset: " + std::string(e.what()));
    }
    if (ds.items.empty()) throw config_error("dataset: empty manifest in " + split_dir);
    ds.mels.resize(ds.items.size());
    parallel_for(static_cast<int>(ds.items.size()), [&](int i) {
        const std::string path = split_dir + "/" + ds.items[i].wav_path;
        if (!fs::exists(path)) throw config_error("dataset: missing clip " + path);
        ds.mels[i] = mel_spectrogram(fix_length(read_wav(path), cfg.clip_samples), cfg.stft);
    });
    return ds;
}

// ---------------------------------------------------------------------------
// optimizer

void AdamW::step(ParamStore<float>& params) {
    const size_t np = params.names.size();
    if (m_.empty()) {
        m_.resize(np);
        v_.resize(np);
        for (size_t i = 0; i < np; ++i) {
            const size_t n = params.get(params.names[i])->value.numel();
            m_[i].assign(n, 0.0);
            v_[i].assign(n, 0.0);
        }
    }
    if (m_.size() != np) fail("adamw: parameter set changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(tp_.beta1, t_);
    const double bc2 = 1.0 - std::pow(tp_.beta2, t_);
    for (size_t i = 0; i < np; ++i) {
        auto& node = *params.get(params.names[i]);
        node.ensure_grad();
        auto& w = node.value.data;
        const auto& g = node.grad.data;
        if (m_[i].size() != w.size()) fail("adamw: shape changed for " + params.names[i]);
        for (size_t k = 0; k < w.size(); ++k) {
            const double gk = g[k];
            m_[i][k] = tp_.beta1 * m_[i][k] + (1.0 - tp_.beta1) * gk;
            v_[i][k] = tp_.beta2 * v_[i][k] + (1.0 - tp_.beta2) * gk * gk;
            double p = w[k];
            p *= 1.0 - tp_.lr * tp_.wd;  // decoupled decay
            p -= tp_.lr * (m_[i][k] / bc1) / (std::sqrt(v_[i][k] / bc2) + tp_.eps);
            w[k] = static_cast<float>(p);
        }
        check_finite(node.value, ("adamw " + params.names[i]).c_str());
    }
}

// ---------------------------------------------------------------------------
// training

namespace {

std::vector<int> stage_indices(const Dataset& ds, int stage) {
    std::vector<int> idx;
    for (size_t i = 0; i < ds.items.size(); ++i) {
        const int s = ds.items[i].scenario;
        if ((stage == 1 && s == 0) || (stage == 2 && s >= 1)) idx.push_back(static_cast<int>(i));
    }
    return idx;
}

void assert_speech_only(const Dataset& ds, const std::vector<int>& idx) {
    for (int i : idx) {
        const SampleManifest& m = ds.items[i];
        if (!m.on_env_caption.empty() || !m.off_env_caption.empty() || m.on_kind != "speech")
            fail("stage 1 stream contains a non-speech sample: " + m.id);
    }
}

double zero_model_loss(const std::vector<FlowSample<float>>& pairs) {
    double total = 0.0;
    for (const auto& s : pairs) {
        double acc = 0.0;
        for (size_t i = 0; i < s.x1.data.size(); ++i) {
            const double d = double(s.x1.data[i]) - double(s.x0.data[i]);
            acc += d * d;
        }
        total += acc / double(s.x1.data.size());
    }
    return total / double(pairs.size());
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

TrainResult train_stage(const RunConfig& cfg, int stage, const std::string& data_dir,
                        const std::string& out_dir, const std::string& init_checkpoint) {
    if (stage != 1 && stage != 2) throw config_error("train: stage must be 1 or 2");
    const Dataset train_ds = load_dataset(cfg, data_dir + "/train");
    const Dataset val_ds = load_dataset(cfg, data_dir + "/val");
    const std::vector<int> tr_idx = stage_indices(train_ds, stage);
    const std::vector<int> va_idx = stage_indices(val_ds, stage);
    if (tr_idx.empty() || va_idx.empty())
        throw config_error("train: dataset has no samples for stage " + std::to_string(stage));
    if (stage == 1) {
        assert_speech_only(train_ds, tr_idx);
        assert_speech_only(val_ds, va_idx);
    }

    Model<float> model(cfg.model);
    LatentCodec codec(cfg.codec);
    if (!init_checkpoint.empty()) {
        const LoadedCheckpoint lc = load_checkpoint(init_checkpoint, model.params(), cfg);
        codec.set_stats(lc.codec_means, lc.codec_stds);
    } else {
        codec.calibrate(train_ds.mels);
    }

    std::vector<Tensor> tr_lat(tr_idx.size());
    parallel_for(static_cast<int>(tr_idx.size()),
                 [&](int i) { tr_lat[i] = codec.encode(train_ds.mels[tr_idx[i]]).data; });

    // fixed validation pairs: same (x0, t) at every evaluation point
    Rng val_rng = Rng(cfg.train.seed).fork("val-pairs");
    std::vector<FlowSample<float>> val_pairs(va_idx.size());
    for (size_t j = 0; j < va_idx.size(); ++j) {
        val_pairs[j].x0 = Tensor::randn(latent_shape(cfg), val_rng);
        val_pairs[j].x1 = codec.encode(val_ds.mels[va_idx[j]]).data;
        val_pairs[j].t = val_rng.uniform();
        val_pairs[j].cond = condition_set_from_manifest(val_ds.items[va_idx[j]]);
    }
    const double baseline = zero_model_loss(val_pairs);

    fs::create_directories(out_dir);
    std::ofstream train_csv(out_dir + "/loss_train.csv");
    std::ofstream val_csv(out_dir + "/loss_val.csv");
    if (!train_csv || !val_csv) throw config_error("train: cannot write logs in " + out_dir);
    train_csv << "step,stage,loss\n";
    val_csv << "step,stage,loss\n";

    auto val_loss = [&] {
        const auto l = fm_loss(model, val_pairs);
        return double(l->value.data[0]);
    };

    AdamW opt(cfg.train);
    Rng rng = Rng(cfg.train.seed).fork(stage == 1 ? "train-stage1" : "train-stage2");
    const int steps = stage == 1 ? cfg.train.stage1_steps : cfg.train.stage2_steps;
    std::deque<double> recent;
    TrainResult res;
    res.stage = stage;
    res.steps = steps;
    for (int k = 1; k <= steps; ++k) {
        std::vector<FlowSample<float>> batch(cfg.train.batch);
        for (int b = 0; b < cfg.train.batch; ++b) {
            const int i = static_cast<int>(rng.below(tr_idx.size()));
            batch[b].x0 = Tensor::randn(latent_shape(cfg), rng);
            batch[b].x1 = tr_lat[i];
            batch[b].t = rng.uniform();
            batch[b].cond = dropout_conditions(
                condition_set_from_manifest(train_ds.items[tr_idx[i]]), cfg.train.dropout_p, rng);
        }
        double lv = 0.0;
        try {
            model.params().zero_grads();
            auto loss = fm_loss(model, batch);
            lv = double(loss->value.data[0]);
            if (!std::isfinite(lv)) fail("non-finite loss");
            backward(loss);
            opt.step(model.params());
        } catch (const std::exception& e) {
            std::ostringstream diag;
            diag << "training aborted at stage " << stage << " step " << k << ": " << e.what()
                 << "; recent losses:";
            for (double r : recent) diag << " " << r;
            throw std::runtime_error(diag.str());
        }
        recent.push_back(lv);
        if (recent.size() > 8) recent.pop_front();
        train_csv << k << "," << stage << "," << lv << "\n";
        res.final_train_loss = lv;
        if (k % cfg.train.val_every == 0 || k == steps) {
            res.final_val_loss = val_loss();
            val_csv << k << "," << stage << "," << res.final_val_loss << "\n";
        }
    }

    res.baseline_val_loss = baseline;
    res.checkpoint_dir = out_dir + "/checkpoint";
    save_checkpoint(res.checkpoint_dir, model.params(), cfg, codec.means(), codec.stds());
    res.content_hash = params_content_hash(model.params());

    json report;
    report["stage"] = stage;
    report["steps"] = steps;
    report["final_train_loss"] = res.final_train_loss;
    report["final_val_loss"] = res.final_val_loss;
    report["baseline_val_loss"] = res.baseline_val_loss;
    report["config_hash"] = hex64(config_hash(cfg));
    report["content_hash"] = hex64(res.content_hash);
    std::ofstream rep(out_dir + "/train_report.json");
    rep << report.dump(2) << "\n";
    return res;
}

// ---------------------------------------------------------------------------
// generation

Sampler Sampler::load(const RunConfig& cfg, const std::string& checkpoint_dir) {
    Sampler s;
    s.cfg = cfg;
    s.model = std::make_shared<Model<float>>(cfg.model);
    s.codec = std::make_shared<LatentCodec>(cfg.codec);
    const LoadedCheckpoint lc = load_checkpoint(checkpoint_dir, s.model->params(), cfg);
    s.codec->set_stats(lc.codec_means, lc.codec_stds);
    s.content_hash = lc.content_hash;
    return s;
}

GenEntry Sampler::generate_one(const SampleManifest& m, const GenOptions& opt, int index) const {
    GenEntry e;
    e.id = m.id;
    Rng rng = Rng(opt.seed).fork("gen").fork(static_cast<uint64_t>(index));
    e.seed = rng.seed();
    const ConditionSet cond = condition_set_from_manifest(m);
    const Model<float>& net = *model;
    VelocityFn<float> fn = [&net](const Tensor& x, double t, const ConditionSet& c) {
        return net.velocity(x, t, c);
    };
    Latent lat;
    lat.data = euler_sample(fn, latent_shape(cfg), cond, opt.scales, opt.steps, rng);
    e.mel = codec->decode(lat);
    e.wav = fix_length(griffin_lim(e.mel, cfg.stft, 32, cfg.sample_rate), cfg.clip_samples);
    return e;
}

void generate_from_manifests(const Sampler& sampler, const std::vector<SampleManifest>& entries,
                             const GenOptions& opt, const std::string& out_dir) {
    if (entries.empty()) throw config_error("sample: no manifest entries");
    fs::create_directories(fs::path(out_dir) / "wav");
    fs::create_directories(fs::path(out_dir) / "mel");
    std::vector<GenEntry> results(entries.size());
    parallel_for(static_cast<int>(entries.size()),
                 [&](int i) { results[i] = sampler.generate_one(entries[i], opt, i); });
    json rep;
    rep["config_hash"] = hex64(config_hash(sampler.cfg));
    rep["checkpoint_content_hash"] = hex64(sampler.content_hash);
    rep["steps"] = opt.steps;
    rep["scales"] = {{"on", opt.scales.on}, {"off", opt.scales.off}, {"sp", opt.scales.sp}};
    json jentries = json::array();
    for (const GenEntry& e : results) {
        const std::string wav_rel = "wav/" + e.id + ".wav";
        const std::string mel_rel = "mel/" + e.id + ".csv";
        write_wav(out_dir + "/" + wav_rel, e.wav);
        write_csv_grid(out_dir + "/" + mel_rel, e.mel.grid);
        jentries.push_back({{"id", e.id}, {"seed", e.seed}, {"wav", wav_rel}, {"mel", mel_rel}});
    }
    rep["entries"] = std::move(jentries);
    std::ofstream out(out_dir + "/report.json");
    if (!out) throw config_error("sample: cannot write " + out_dir + "/report.json");
    out << rep.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// evaluation

std::vector<std::string> list_wavs(const std::string& dir) {
    if (!fs::is_directory(dir)) throw eval_error("eval: not a directory: " + dir);
    auto scan = [](const std::string& d) {
        std::vector<std::string> out;
        for (const auto& e : fs::directory_iterator(d))
            if (e.is_regular_file() && e.path().extension() == ".wav")
                out.push_back(e.path().string());
        std::sort(out.begin(), out.end());
        return out;
    };
    std::vector<std::string> found = scan(dir);
    if (found.empty() && fs::is_directory(dir + "/wav")) found = scan(dir + "/wav");
    if (found.empty()) throw eval_error("eval: no .wav files under " + dir);
    return found;
}

EvalResult evaluate_pairs(const RunConfig& cfg, const std::vector<Waveform>& gen,
                          const std::vector<Waveform>& ref) {
    if (gen.size() != ref.size())
        throw eval_error("eval: entry count mismatch (" + std::to_string(gen.size()) + " vs " +
                         std::to_string(ref.size()) + ")");
    const int n = static_cast<int>(gen.size());
    if (n < 2) throw eval_error("eval: need at least 2 pairs for distribution metrics");

    const int d = cfg.stft.n_mels;
    TensorT<double> feat_g({n, d}), feat_r({n, d});
    TensorT<double> post_g({n, d}), post_r({n, d});
    std::vector<std::string> txt_g(n), txt_r(n);
    parallel_for(n, [&](int i) {
        const Waveform wg = fix_length(gen[i], cfg.clip_samples);
        const Waveform wr = fix_length(ref[i], cfg.clip_samples);
        const MelSpec mg = mel_spectrogram(wg, cfg.stft);
        const MelSpec mr = mel_spectrogram(wr, cfg.stft);
        const auto fg = toy_features(mg), fr = toy_features(mr);
        const auto pg = toy_posterior(mg), pr = toy_posterior(mr);
        for (int k = 0; k < d; ++k) {
            feat_g.at(i, k) = fg[k];
            feat_r.at(i, k) = fr[k];
            post_g.at(i, k) = pg[k];
            post_r.at(i, k) = pr[k];
        }
        txt_g[i] = decode_transcript(wg);
        txt_r[i] = decode_transcript(wr);
    });

    EvalResult r;
    r.n = n;
    r.fad = frechet_distance(feat_r, feat_g);
    r.mkl = mean_kl(post_r, post_g);
    r.align_mean = cosine_alignment_score(feat_g, feat_r);
    auto corpus_rate = [&](auto tokenize) {
        long edits = 0, ref_len = 0, hyp_len = 0;
        for (int i = 0; i < n; ++i) {
            const auto tr = tokenize(txt_r[i]);
            const auto th = tokenize(txt_g[i]);
            edits += levenshtein(tr, th);
            ref_len += static_cast<long>(tr.size());
            hyp_len += static_cast<long>(th.size());
        }
        if (ref_len == 0) return hyp_len == 0 ? 0.0 : 1.0;
        return double(edits) / double(ref_len);
    };
    r.wer = corpus_rate(tokenize_words);
    r.cer = corpus_rate(tokenize_chars);
    r.per = corpus_rate(tokenize_phonemes);
    return r;
}

EvalResult evaluate_dirs(const RunConfig& cfg, const std::string& gen_dir,
                         const std::string& ref_dir) {
    const std::vector<std::string> gp = list_wavs(gen_dir);
    const std::vector<std::string> rp = list_wavs(ref_dir);
    if (gp.size() != rp.size())
        throw eval_error("eval: entry count mismatch (" + std::to_string(gp.size()) + " vs " +
                         std::to_string(rp.size()) + ")");
    std::vector<Waveform> gen(gp.size()), ref(rp.size());
    parallel_for(static_cast<int>(gp.size()), [&](int i) {
        gen[i] = read_wav(gp[i]);
        ref[i] = read_wav(rp[i]);
    });
    return evaluate_pairs(cfg, gen, ref);
}

void write_eval_csv(const std::string& path, const EvalResult& r) {
    std::ofstream f(path);
    if (!f) throw eval_error("eval: cannot write " + path);
    f << "metric,value,n\n";
    f << "fad," << r.fad << "," << r.n << "\n";
    f << "mkl," << r.mkl << "," << r.n << "\n";
    f << "wer," << r.wer << "," << r.n << "\n";
    f << "cer," << r.cer << "," << r.n << "\n";
    f << "per," << r.per << "," << r.n << "\n";
    f << "align_mean," << r.align_mean << "," << r.n << "\n";
}

// ---------------------------------------------------------------------------
// CFG sweep

std::vector<SweepRow> run_sweep(const Sampler& sampler, const std::string& bench_dir,
                                const std::vector<CfgScales>& grid, int steps, uint64_t seed,
                                int limit) {
    if (grid.empty()) throw config_error("sweep: empty scale grid");
    if (!fs::exists(bench_dir + "/manifest.json"))
        throw config_error("sweep: missing " + bench_dir + "/manifest.json");
    std::vector<SampleManifest> entries = read_manifest_list(bench_dir + "/manifest.json");
    if (limit > 0 && static_cast<int>(entries.size()) > limit) entries.resize(limit);
    if (entries.size() < 2) throw config_error("sweep: need at least 2 benchmark entries");

    std::vector<Waveform> ref(entries.size());
    parallel_for(static_cast<int>(entries.size()), [&](int i) {
        const std::string path = bench_dir + "/" + entries[i].wav_path;
        if (!fs::exists(path))
            throw config_error("sweep: missing reference clip " + path +
                               " (regenerate the benchmark with audio)");
        ref[i] = read_wav(path);
    });

    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (const CfgScales& scales : grid) {
        std::vector<Waveform> gen(entries.size());
        parallel_for(static_cast<int>(entries.size()), [&](int i) {
            gen[i] = sampler.generate_one(entries[i], {scales, steps, seed}, i).wav;
        });
        const EvalResult er = evaluate_pairs(sampler.cfg, gen, ref);
        rows.push_back({scales, er.fad, er.align_mean, er.wer});
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream f(path);
    if (!f) throw config_error("sweep: cannot write " + path);
    f << "lambda_on,lambda_off,lambda_sp,fad,align_mean,wer\n";
    for (const SweepRow& r : rows)
        f << r.scales.on << "," << r.scales.off << "," << r.scales.sp << "," << r.fad << ","
          << r.align_mean << "," << r.wer << "\n";
}

// ---------------------------------------------------------------------------
// gradient checking

namespace {

std::string grad_group(const std::string& name) {
    if (name.rfind("sp.", 0) == 0) return "durator";
    if (name.find(".ada.") != std::string::npos) return "adaln";
    if (name.rfind("gate.", 0) == 0) return "moe_gate";
    if (name.rfind("blk", 0) == 0 &&
        (name.find(".env.") != std::string::npos || name.find(".off.") != std::string::npos ||
         name.find(".sp.") != std::string::npos || name.find(".self.") != std::string::npos))
        return "rope_attention";
    return "backbone";
}

}  // namespace

GradCheckReport run_gradcheck(bool corrupt_gradients) {
    ModelConfig mc;
    mc.patch = 2;
    mc.hidden = 16;
    mc.depth = 2;
    mc.heads = 2;
    mc.mlp_ratio = 2;
    mc.dims = {8, 8, 6};
    mc.latent_c = 4;
    mc.latent_t = 8;
    mc.latent_f = 4;
    mc.visual_frames = 2;
    mc.max_text_len = 12;
    mc.init_seed = 7;
    mc.frozen_seed = 3;
    Model<double> model(mc);

    // nudge every parameter off its init point so the zero-initialized heads
    // and gates stop blocking gradient flow to earlier layers
    Rng perturb(Rng::mix64(0xF00D));
    for (const auto& name : model.params().names)
        for (auto& v : model.params().get(name)->value.data) v += 0.05 * perturb.normal();

    ConditionSet cond = make_condition_set("low hum of rain", "soft wind", "ba da",
                                           OnScreenKind::environment, "env:rain", 42, 2);
    Rng data_rng(123);
    std::vector<FlowSample<double>> batch(1);
    batch[0].x0 = TensorT<double>::randn({mc.latent_c, mc.latent_t, mc.latent_f}, data_rng);
    batch[0].x1 = TensorT<double>::randn({mc.latent_c, mc.latent_t, mc.latent_f}, data_rng);
    batch[0].t = 0.37;
    batch[0].cond = cond;

    auto loss_value = [&] { return fm_loss(model, batch)->value.data[0]; };

    model.params().zero_grads();
    backward(fm_loss(model, batch));
    std::unordered_map<std::string, std::vector<double>> analytic;
    for (const auto& name : model.params().names)
        analytic[name] = model.params().get(name)->grad.data;
    if (corrupt_gradients) analytic["in.w"][0] += 1.0;

    std::vector<std::string> order = {"durator", "adaln", "rope_attention", "moe_gate",
                                      "backbone"};
    std::unordered_map<std::string, GradGroup> groups;
    for (const auto& g : order) groups[g] = {g, 0.0, 0};

    const double h = 1e-4;
    const double floor = 1e-3;
    for (const auto& name : model.params().names) {
        auto& w = model.params().get(name)->value.data;
        const auto& a = analytic.at(name);
        GradGroup& grp = groups.at(grad_group(name));
        for (size_t i = 0; i < w.size(); ++i) {
            const double orig = w[i];
            w[i] = orig + h;
            const double lp = loss_value();
            w[i] = orig - h;
            const double lm = loss_value();
            w[i] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double rel = std::abs(a[i] - fd) /
                               std::max(std::max(std::abs(a[i]), std::abs(fd)), floor);
            grp.worst_rel_err = std::max(grp.worst_rel_err, rel);
            ++grp.coords;
        }
    }

    GradCheckReport rep;
    GradGroup full{"full_model", 0.0, 0};
    for (const auto& g : order) {
        rep.groups.push_back(groups.at(g));
        full.worst_rel_err = std::max(full.worst_rel_err, groups.at(g).worst_rel_err);
        full.coords += groups.at(g).coords;
    }
    rep.groups.push_back(full);
    rep.worst = full.worst_rel_err;
    rep.pass = rep.worst <= rep.tolerance;
    return rep;
}

}  // namespace omnisonic
