// omnisonic: train / sample / mix / bench / eval / sweep / gradcheck tooling
// over the toy holistic-audio stack. Exit codes: 0 ok, 2 config or data
// error, 3 checkpoint mismatch, 4 evaluation input error.
#include <cstdio>
#include <iostream>

#include "../vendor/CLI11.hpp"
#include "omnisonic/pipeline.hpp"

using namespace omnisonic;

namespace {

RunConfig load_config(const std::string& path) {
    if (path.empty()) {
        RunConfig cfg;
        cfg.finalize();
        return cfg;
    }
    return parse_config_file(path);
}

CfgScales parse_scales(const std::string& text) {
    CfgScales s;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &s.on, &s.off, &s.sp) != 3)
        throw config_error("bad --scales triple (want on,off,sp): " + text);
    return s;
}

CfgScales resolve_scales(const std::string& preset, const std::string& scales) {
    if (!scales.empty()) return parse_scales(scales);
    if (preset == "s1") return CfgScales::s1();
    if (preset == "s2") return CfgScales::s2();
    if (preset == "s3") return CfgScales::s3();
    if (preset.empty()) return {};
    throw config_error("unknown preset '" + preset + "' (want s1|s2|s3)");
}

std::vector<CfgScales> parse_grid(const std::string& text) {
    std::vector<CfgScales> grid;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find(';', start);
        if (end == std::string::npos) end = text.size();
        const std::string part = text.substr(start, end - start);
        if (!part.empty()) grid.push_back(parse_scales(part));
        start = end + 1;
    }
    if (grid.empty()) throw config_error("empty --grid");
    return grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"omnisonic: flow-matching audio generation toolbox"};
    app.require_subcommand(1);

    std::string config_path, data_dir = "data", out_dir, init_ckpt, checkpoint_dir;
    std::string manifest_path, preset, scales_text, grid_text, gen_dir, ref_dir, bench_dir;
    int stage = 1, steps = 0, limit = 0;
    uint64_t seed = 1;
    bool cold_start = false, full_scale_counts = false, no_audio = false, corrupt = false;

    auto* mix = app.add_subcommand("mix", "build the train/val mixture dataset");
    mix->add_option("--config", config_path);
    mix->add_option("--out", data_dir, "dataset root")->capture_default_str();

    auto* train = app.add_subcommand("train", "run one training stage");
    train->add_option("--config", config_path);
    train->add_option("--stage", stage, "1 or 2")->capture_default_str();
    train->add_option("--data", data_dir)->capture_default_str();
    train->add_option("--out", out_dir, "run directory (default runs/stage<k>)");
    train->add_option("--init", init_ckpt, "checkpoint to start from");
    train->add_flag("--cold-start", cold_start, "allow stage 2 without --init");

    auto* sample = app.add_subcommand("sample", "generate audio for manifest entries");
    sample->add_option("--config", config_path);
    sample->add_option("--checkpoint", checkpoint_dir)->required();
    sample->add_option("--manifest", manifest_path, "manifest.json of condition entries")
        ->required();
    sample->add_option("--out", out_dir)->required();
    sample->add_option("--preset", preset, "scale preset s1|s2|s3");
    sample->add_option("--scales", scales_text, "on,off,sp override");
    sample->add_option("--steps", steps, "Euler steps (default from config)");
    sample->add_option("--seed", seed)->capture_default_str();
    sample->add_option("--limit", limit, "cap entry count (0 = all)");

    auto* bench = app.add_subcommand("bench", "emit the benchmark directory");
    bench->add_option("--config", config_path);
    bench->add_option("--out", out_dir)->required();
    bench->add_flag("--full-scale", full_scale_counts, "reference scenario counts 300/401/302");
    bench->add_flag("--no-audio", no_audio, "manifests only");

    auto* eval = app.add_subcommand("eval", "score generated audio against references");
    eval->add_option("--config", config_path);
    eval->add_option("gen_dir", gen_dir)->required();
    eval->add_option("ref_dir", ref_dir)->required();
    eval->add_option("--out", out_dir, "metrics CSV path (default <gen_dir>/metrics.csv)");

    auto* sweep = app.add_subcommand("sweep", "CFG scale study on the benchmark");
    sweep->add_option("--config", config_path);
    sweep->add_option("--checkpoint", checkpoint_dir)->required();
    sweep->add_option("--bench", bench_dir)->required();
    sweep->add_option("--grid", grid_text, "semicolon-separated on,off,sp triples")->required();
    sweep->add_option("--steps", steps);
    sweep->add_option("--seed", seed)->capture_default_str();
    sweep->add_option("--limit", limit, "cap benchmark entries (0 = all)");
    sweep->add_option("--out", out_dir, "CSV path (default sweep.csv)");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suites");
    gradcheck->add_flag("--corrupt-gradients", corrupt, "negative control: must fail");

    auto* dump = app.add_subcommand("config-dump", "print the resolved configuration");
    dump->add_option("--config", config_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (mix->parsed()) {
            const RunConfig cfg = load_config(config_path);
            build_mix_dataset(cfg, data_dir);
            std::cout << "dataset written to " << data_dir << " (" << cfg.mix_train_count
                      << " train / " << cfg.mix_val_count << " val)\n";
        } else if (train->parsed()) {
            const RunConfig cfg = load_config(config_path);
            if (stage == 2 && init_ckpt.empty() && !cold_start)
                throw config_error("stage 2 needs --init <stage1-checkpoint> or --cold-start");
            if (out_dir.empty()) out_dir = "runs/stage" + std::to_string(stage);
            const TrainResult r = train_stage(cfg, stage, data_dir, out_dir, init_ckpt);
            std::cout << "stage " << r.stage << " done: train " << r.final_train_loss << ", val "
                      << r.final_val_loss << " (zero-model baseline " << r.baseline_val_loss
                      << ")\ncheckpoint " << r.checkpoint_dir << "\n";
        } else if (sample->parsed()) {
            const RunConfig cfg = load_config(config_path);
            Sampler s = Sampler::load(cfg, checkpoint_dir);
            std::vector<SampleManifest> entries = read_manifest_list(manifest_path);
            if (limit > 0 && static_cast<int>(entries.size()) > limit) entries.resize(limit);
            GenOptions opt;
            opt.scales = resolve_scales(preset, scales_text);
            opt.steps = steps > 0 ? steps : cfg.sample_steps;
            opt.seed = seed;
            generate_from_manifests(s, entries, opt, out_dir);
            std::cout << entries.size() << " clips written to " << out_dir << "\n";
        } else if (bench->parsed()) {
            const RunConfig cfg = load_config(config_path);
            const BenchCounts counts = full_scale_counts ? BenchCounts::full_scale() : cfg.bench;
            const auto list = build_bench(cfg.make_library().bench_split(), counts,
                                          cfg.library_seed, out_dir, cfg.mix_params(), !no_audio);
            std::cout << "benchmark with " << list.size() << " entries written to " << out_dir
                      << "\n";
        } else if (eval->parsed()) {
            const RunConfig cfg = load_config(config_path);
            const EvalResult r = evaluate_dirs(cfg, gen_dir, ref_dir);
            if (out_dir.empty()) out_dir = gen_dir + "/metrics.csv";
            write_eval_csv(out_dir, r);
            std::cout << "n=" << r.n << " fad=" << r.fad << " mkl=" << r.mkl << " wer=" << r.wer
                      << " cer=" << r.cer << " per=" << r.per << " align=" << r.align_mean
                      << "\nwritten to " << out_dir << "\n";
        } else if (sweep->parsed()) {
            const RunConfig cfg = load_config(config_path);
            Sampler s = Sampler::load(cfg, checkpoint_dir);
            const auto rows = run_sweep(s, bench_dir, parse_grid(grid_text),
                                        steps > 0 ? steps : cfg.sample_steps, seed, limit);
            if (out_dir.empty()) out_dir = "sweep.csv";
            write_sweep_csv(out_dir, rows);
            std::cout << rows.size() << " rows written to " << out_dir << "\n";
        } else if (gradcheck->parsed()) {
            const GradCheckReport rep = run_gradcheck(corrupt);
            for (const GradGroup& g : rep.groups)
                std::printf("%-16s coords %7zu  worst rel err %.3e\n", g.name.c_str(), g.coords,
                            g.worst_rel_err);
            std::printf("tolerance %.1e -> %s\n", rep.tolerance, rep.pass ? "PASS" : "FAIL");
            if (!rep.pass) return 1;
        } else if (dump->parsed()) {
            const RunConfig cfg = load_config(config_path);
            std::cout << config_dump(cfg);
        }
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const checkpoint_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const eval_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
