// querysum CLI: dataset tooling, the two-phase training pipeline, and
// summary evaluation over precomputed feature bundles.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "querysum/checkpoint.hpp"
#include "querysum/evaluate.hpp"
#include "querysum/pseudo_label.hpp"
#include "querysum/synthetic.hpp"
#include "querysum/training.hpp"

using namespace querysum;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

TrainConfig read_config(const std::string& path, std::optional<uint64_t> seed_override) {
    TrainConfig config;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config " + path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        config = train_config_from_json(text);
    }
    if (seed_override) config.seed = *seed_override;
    return config;
}

Split resolve_split(const Dataset& dataset, const TrainConfig& config) {
    const SplitCounts& counts = config.split;
    if (counts.train + counts.val + counts.test == 0) {
        throw std::runtime_error("config must set split counts, e.g. \"split\": {\"train\": 40, \"val\": 5, \"test\": 5}");
    }
    return split_dataset(dataset, counts, config.seed);
}

json split_json(const Split& split) {
    return {{"train", split.train}, {"val", split.val}, {"test", split.test}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

void save_run(const fs::path& out_dir, const std::string& phase, TrainResult& result, const TrainConfig& config,
              const Split& split) {
    fs::create_directories(out_dir);
    const fs::path ckpt = out_dir / (phase + ".ckpt");
    json extra;
    extra["seed"] = config.seed;
    extra["config_hash"] = train_config_hash(config);
    extra["train_config"] = json::parse(train_config_to_json(config));
    extra["splits"] = split_json(split);
    save_checkpoint(ckpt, result.model, extra.dump());
    result.report.checkpoint_path = ckpt.string();
    write_text(out_dir / (phase + "_report.json"), result.report.to_json());
    std::cout << "wrote " << ckpt.string() << "\n";
    std::cout << "final train loss " << result.report.train_loss.back();
    if (!result.report.val_loss.empty()) std::cout << ", val loss " << result.report.val_loss.back();
    std::cout << " (" << result.report.param_count << " parameters)\n";
}

int run_pseudo_labels(const std::string& manifest, const std::string& out_dir) {
    Dataset ds = load_dataset(manifest);
    const fs::path dir = fs::path(out_dir) / "pseudo";
    fs::create_directories(dir);
    for (const VideoData& video : ds.videos) {
        const std::vector<double> mean = aggregate_annotators(video.annotations);
        const SegmentPseudoLabels labels =
            generate_pseudo_labels(mean, ds.manifest.fps, ds.manifest.num_classes, ds.manifest.score_kind);
        json segments = json::array();
        for (const SegmentLabel& label : labels) {
            segments.push_back({{"start", label.bounds.start},
                                {"end", label.bounds.end},
                                {"mean", label.mean_score},
                                {"class", label.class_id}});
        }
        write_text(dir / (video.meta.video_id + ".json"), json{{"segments", segments}}.dump(2));
    }
    std::cout << "wrote pseudo labels for " << ds.videos.size() << " videos under " << dir.string() << "\n";
    return 0;
}

int run_train(const std::string& manifest, const std::string& config_path, std::optional<uint64_t> seed,
              const std::string& out_dir, Phase phase, const std::string& init_path) {
    Dataset ds = load_dataset(manifest);
    TrainConfig config = read_config(config_path, seed);
    Split split = resolve_split(ds, config);

    if (phase == Phase::pretrain) {
        TrainResult result = pretrain(ds, split, config);
        save_run(out_dir, "pretrain", result, config, split);
        return 0;
    }

    std::optional<LoadedCheckpoint> init;
    if (config.use_pretraining && init_path.empty()) {
        throw std::runtime_error("config has use_pretraining=true: pass --init <pretrain checkpoint> "
                                 "or set the flag to false");
    }
    if (!config.use_pretraining && !init_path.empty()) {
        throw std::runtime_error("config has use_pretraining=false but --init was given");
    }
    if (!init_path.empty()) init = load_checkpoint(init_path);
    TrainResult result = finetune(ds, split, config, init ? &init->params : nullptr);
    save_run(out_dir, "finetune", result, config, split);
    return 0;
}

int run_evaluate(const std::string& manifest, const std::string& checkpoint_path, const std::string& split_name,
                 double budget, double beta, const std::string& gt_mode, const std::string& report_path) {
    Dataset ds = load_dataset(manifest);
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
    json header = json::parse(ckpt.header_json);
    if (!header.contains("splits")) {
        throw std::runtime_error("checkpoint carries no split lists; re-train with this CLI");
    }
    const std::vector<std::string> ids = header["splits"].at(split_name).get<std::vector<std::string>>();

    const GroundTruthMode mode =
        gt_mode == "consensus" ? GroundTruthMode::consensus : GroundTruthMode::per_annotator;
    EvalReport report = evaluate(ckpt.params, ds, ids, budget, beta, mode);
    report.split = split_name;
    report.config_hash = header.value("config_hash", "");
    report.checkpoint_hash = file_fnv1a_hex(checkpoint_path);

    if (report_path.empty()) {
        std::cout << report.to_json() << "\n";
    } else {
        write_text(report_path, report.to_json());
        std::cout << "wrote " << report_path << "\n";
    }
    std::cout << "mean F_" << beta << " over " << ids.size() << " videos: " << report.mean_f_beta << "\n";
    return 0;
}

int run_summarize(const std::string& manifest, const std::string& checkpoint_path, const std::string& video_id,
                  const std::string& query, const std::string& vocab_path, double budget,
                  const std::string& csv_path, const std::string& out_path) {
    Dataset ds = load_dataset(manifest);
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);

    std::vector<int> tokens = ds.video(video_id).meta.query_tokens;
    if (!query.empty()) {
        if (vocab_path.empty()) throw std::runtime_error("--query needs --vocab <vocab.json>");
        tokens = tokenize(query, load_vocab(vocab_path));
    }

    VideoSummary summary = summarize_video(ckpt.params, ds, video_id, tokens, budget);
    const SummarySelection& sel = summary.selection;

    json out;
    out["video_id"] = video_id;
    out["budget"] = budget;
    out["query_tokens"] = tokens;
    out["mask"] = sel.mask;
    out["expected_scores"] = sel.expected_scores;
    json selected = json::array();
    for (size_t i = 0; i < sel.mask.size(); ++i) {
        if (sel.mask[i]) selected.push_back(i);
    }
    out["selected_frames"] = selected;

    if (out_path.empty()) {
        std::cout << out.dump(2) << "\n";
    } else {
        write_text(out_path, out.dump(2));
        std::cout << "wrote " << out_path << "\n";
    }
    if (!csv_path.empty()) {
        std::ostringstream csv;
        csv << "frame,expected_score,selected\n";
        for (size_t i = 0; i < sel.mask.size(); ++i) {
            csv << i << "," << sel.expected_scores[i] << "," << static_cast<int>(sel.mask[i]) << "\n";
        }
        write_text(csv_path, csv.str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"query-based video summarization over precomputed features"};
    app.require_subcommand(1);

    // pseudo-labels
    std::string pl_manifest, pl_out;
    CLI::App* pl = app.add_subcommand("pseudo-labels", "emit two-second segment pseudo labels per video");
    pl->add_option("--manifest", pl_manifest, "dataset manifest.json")->required();
    pl->add_option("--out", pl_out, "output directory")->required();

    // pretrain / finetune
    std::string tr_manifest, tr_config, tr_out, tr_init;
    std::optional<uint64_t> tr_seed;
    CLI::App* pre = app.add_subcommand("pretrain", "train on segment-level pseudo labels");
    pre->add_option("--manifest", tr_manifest, "dataset manifest.json")->required();
    pre->add_option("--config", tr_config, "training config JSON");
    pre->add_option("--seed", tr_seed, "seed override");
    pre->add_option("--out", tr_out, "output directory")->required();

    CLI::App* fine = app.add_subcommand("finetune", "train on frame-level labels");
    fine->add_option("--manifest", tr_manifest, "dataset manifest.json")->required();
    fine->add_option("--config", tr_config, "training config JSON");
    fine->add_option("--seed", tr_seed, "seed override");
    fine->add_option("--out", tr_out, "output directory")->required();
    fine->add_option("--init", tr_init, "pretrained checkpoint to start from");

    // evaluate
    std::string ev_manifest, ev_checkpoint, ev_split = "test", ev_gt = "per-annotator", ev_report;
    double ev_budget = 0.15, ev_beta = 1.0;
    CLI::App* ev = app.add_subcommand("evaluate", "score a checkpoint with the F-measure");
    ev->add_option("--manifest", ev_manifest, "dataset manifest.json")->required();
    ev->add_option("--checkpoint", ev_checkpoint, "trained checkpoint")->required();
    ev->add_option("--split", ev_split, "train, val, or test (default test)");
    ev->add_option("--budget", ev_budget, "summary length fraction (default 0.15)");
    ev->add_option("--beta", ev_beta, "F-measure beta (default 1)");
    ev->add_option("--gt-mode", ev_gt, "per-annotator or consensus ground truth");
    ev->add_option("--report", ev_report, "write the report JSON here");

    // summarize
    std::string su_manifest, su_checkpoint, su_video, su_query, su_vocab, su_csv, su_out;
    double su_budget = 0.15;
    CLI::App* su = app.add_subcommand("summarize", "select summary frames for one video");
    su->add_option("--manifest", su_manifest, "dataset manifest.json")->required();
    su->add_option("--checkpoint", su_checkpoint, "trained checkpoint")->required();
    su->add_option("--video", su_video, "video id")->required();
    su->add_option("--query", su_query, "free-text query (defaults to the dataset's tokens)");
    su->add_option("--vocab", su_vocab, "vocab.json for --query");
    su->add_option("--budget", su_budget, "summary length fraction (default 0.15)");
    su->add_option("--csv", su_csv, "write plot data CSV (frame, expected score, selected)");
    su->add_option("--out", su_out, "write the summary JSON here instead of stdout");

    // make-synth
    std::string ms_out;
    SyntheticSpec ms_spec;
    CLI::App* ms = app.add_subcommand("make-synth", "write a synthetic feature bundle for smoke tests");
    ms->add_option("--out", ms_out, "output directory")->required();
    ms->add_option("--videos", ms_spec.num_videos, "number of videos (default 4)");
    ms->add_option("--min-frames", ms_spec.min_frames, "minimum frames per video (default 24)");
    ms->add_option("--max-frames", ms_spec.max_frames, "maximum frames per video (default 32)");
    ms->add_option("--fps", ms_spec.fps, "frames per second (default 2)");
    ms->add_option("--classes", ms_spec.num_classes, "number of score classes (default 5)");
    ms->add_option("--feature-dim", ms_spec.feature_dim, "feature width (default 32)");
    ms->add_option("--annotators", ms_spec.annotators, "annotators per video (default 1)");
    ms->add_option("--seed", ms_spec.seed, "generator seed (default 1)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pl->parsed()) return run_pseudo_labels(pl_manifest, pl_out);
        if (pre->parsed()) return run_train(tr_manifest, tr_config, tr_seed, tr_out, Phase::pretrain, "");
        if (fine->parsed()) return run_train(tr_manifest, tr_config, tr_seed, tr_out, Phase::finetune, tr_init);
        if (ev->parsed()) {
            return run_evaluate(ev_manifest, ev_checkpoint, ev_split, ev_budget, ev_beta, ev_gt, ev_report);
        }
        if (su->parsed()) {
            return run_summarize(su_manifest, su_checkpoint, su_video, su_query, su_vocab, su_budget, su_csv,
                                 su_out);
        }
        if (ms->parsed()) {
            const fs::path manifest = write_synthetic_dataset(ms_out, ms_spec);
            std::cout << "wrote " << manifest.string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
