#include "ttvrs/cli.hpp"

#include "ttvrs/metrics.hpp"
#include "ttvrs/pipeline.hpp"
#include "ttvrs/trainer.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace ttvrs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<ConfigKey> train_keys()
{
    TrainConfig t;
    LossWeights w;
    return {
        {"train_split", "train", "manifest split used for training"},
        {"lr", t.learning_rate, "peak learning rate of plain gradient descent"},
        {"iterations", t.iterations, "training steps, one clip per step"},
        {"warmup", t.warmup, "linear warmup steps"},
        {"clip_min_frames", t.min_frames, "fewest frames drawn per training clip"},
        {"clip_max_frames", t.max_frames, "most frames drawn per training clip"},
        {"seed", t.seed, "seed for initialization and clip sampling"},
        {"grad_clip", t.grad_clip, "global gradient-norm clip, 0 disables"},
        {"alpha", t.alpha, "fusion coefficient for training and inference"},
        {"query_augmentation", t.query_augmentation, "probability of training a clip on another object's colour query"},
        {"static_augmentation", t.static_augmentation, "probability of freezing a training clip on one frame"},
        {"strategy", "MT", "training decode strategy: MT (propagate to adjacent frames) or ST (keyframe only)"},
        {"lambda_txt", w.lambda_txt, "text loss weight"},
        {"lambda_mask", w.lambda_mask, "mask loss weight"},
        {"lambda_bce", w.lambda_bce, "BCE weight inside the mask loss"},
        {"lambda_dice", w.lambda_dice, "Dice weight inside the mask loss"},
        {"lambda_occ", w.lambda_occ, "occlusion loss weight"},
        {"init", "fan_in", "weight initialization: fan_in or uniform"},
        {"init_range", 0.1, "half-width of the uniform initialization"},
    };
}

std::vector<ConfigKey> inference_keys()
{
    InferenceConfig c;
    return {
        {"alpha", c.alpha, "fusion coefficient"},
        {"max_frames", c.sampling.max_frames, "frames sampled per video for token encoding"},
        {"sampling", "anchor", "frame sampling: random, uniform or anchor"},
        {"sampling_seed", c.sampling.seed, "seed of random sampling"},
        {"combo", c.combo.label(), "keyframe score combination over S1, S2, S3"},
        {"inference", "MI", "MI (memory propagation) or SI (independent frames)"},
        {"capacity", c.capacity, "memory bank capacity"},
    };
}

std::vector<ConfigKey> metric_keys()
{
    return {
        {"tolerance", 1, "contour tolerance in pixels"},
        {"epsilon", kDefaultHallucinationEpsilon, "foreground fraction above which a negative video counts as hallucinated"},
    };
}

std::vector<ConfigKey> concat(std::initializer_list<std::vector<ConfigKey>> parts)
{
    std::vector<ConfigKey> out;
    for (const auto& part : parts)
        for (const auto& k : part)
            if (std::ranges::none_of(out, [&](const ConfigKey& e) { return e.name == k.name; })) out.push_back(k);
    return out;
}

const std::map<std::string, std::vector<ConfigKey>>& registry()
{
    static const std::map<std::string, std::vector<ConfigKey>> keys = [] {
        DatasetConfig d;
        std::map<std::string, std::vector<ConfigKey>> m;
        m["gen-data"] = {
            {"out", "", "output directory; its parent must exist"},
            {"videos", d.videos, "training videos"},
            {"negatives", d.negatives, "fraction of training videos with an absent target"},
            {"test_videos", 10, "held-out videos"},
            {"test_negatives", d.test_negatives, "fraction of held-out videos with an absent target"},
            {"seed", d.seed, "dataset seed"},
            {"width", d.width, "frame width"},
            {"height", d.height, "frame height"},
            {"frames", d.frames, "frames per video"},
            {"attribute_weight", d.attribute_weight, "relative weight of colour queries"},
            {"spatial_weight", d.spatial_weight, "relative weight of spatial-order queries"},
            {"motion_weight", d.motion_weight, "relative weight of motion-rank queries"},
            {"window_fraction", d.window_fraction, "fraction of colour queries whose target shows in a window only"},
        };
        m["train"] = concat({{{"data", "", "dataset manifest.json"},
                              {"out", "model.bin", "checkpoint file"},
                              {"loss_csv", "", "loss trace; empty puts it next to the checkpoint"}},
                             train_keys()});
        m["eval"] = concat({{{"data", "", "dataset manifest.json"},
                             {"checkpoint", "model.bin", "checkpoint file"},
                             {"split", "test", "manifest split to evaluate"},
                             {"out", "eval", "report directory"},
                             {"mode", "model", "prediction source: model, oracle or zero"},
                             {"save_masks", false, "also write predicted masks as PGM"}},
                            inference_keys(), metric_keys()});
        m["ablate"] = concat({{{"grid", "", "alpha, tks, decode or sampling"},
                               {"data", "", "dataset manifest.json"},
                               {"checkpoint", "", "checkpoint for the tks and sampling grids"},
                               {"out", "ablation.csv", "grid CSV"},
                               {"work_dir", "ablation", "directory for checkpoints trained per cell"},
                               {"alphas", json::array({0.0, 0.1, 0.25, 0.5}), "alpha grid values"},
                               {"split", "test", "manifest split to evaluate"}},
                              train_keys(), inference_keys(), metric_keys()});
        m["visualize"] = concat({{{"data", "", "dataset manifest.json"},
                                  {"checkpoint", "model.bin", "checkpoint file"},
                                  {"split", "test", "manifest split"},
                                  {"video", "", "single video id; empty renders the whole split"},
                                  {"out", "vis", "output directory"},
                                  {"mode", "pca", "pca (mask-embedding projection) or mask (binarized prediction)"},
                                  {"unfused", false, "use the temporal token before aggregation (alpha 0)"}},
                                 inference_keys()});
        return m;
    }();
    return keys;
}

const ConfigKey* find_key(const std::vector<ConfigKey>& keys, const std::string& name)
{
    for (const auto& k : keys)
        if (k.name == name) return &k;
    return nullptr;
}

json coerce_json(const ConfigKey& key, const json& v)
{
    const auto& d = key.default_value;
    auto fail = [&] { throw ConfigError("key '" + key.name + "' expects " + d.type_name() + ", got " + v.dump()); };
    if (d.is_boolean()) {
        if (!v.is_boolean()) fail();
    } else if (d.is_number_integer()) {
        if (v.is_number_integer()) return v;
        if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return json(v.get<long long>());
        fail();
    } else if (d.is_number()) {
        if (!v.is_number()) fail();
        return json(v.get<double>());
    } else if (d.is_string()) {
        if (!v.is_string()) fail();
    } else if (d.is_array()) {
        if (!v.is_array()) fail();
        for (const auto& x : v)
            if (!x.is_number()) fail();
    }
    return v;
}

json parse_flag(const ConfigKey& key, const std::string& raw)
{
    const auto& d = key.default_value;
    auto fail = [&] { throw ConfigError("invalid value '" + raw + "' for --" + key.name); };
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &used);
        } catch (const std::exception&) {
            fail();
        }
        if (used != s.size()) fail();
        return x;
    };
    if (d.is_boolean()) {
        if (raw.empty() || raw == "true" || raw == "1") return true;
        if (raw == "false" || raw == "0") return false;
        fail();
    }
    if (d.is_number_integer()) {
        std::size_t used = 0;
        long long x = 0;
        try {
            x = std::stoll(raw, &used);
        } catch (const std::exception&) {
            fail();
        }
        if (used != raw.size()) fail();
        if (d.is_number_unsigned() && x < 0) fail();
        return x;
    }
    if (d.is_number()) return number(raw);
    if (d.is_array()) {
        json out = json::array();
        std::stringstream ss(raw);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(number(item));
        if (out.empty()) fail();
        return out;
    }
    return raw;
}

std::string flag_name(const std::string& key)
{
    std::string out = key;
    std::ranges::replace(out, '_', '-');
    return out;
}

// ---- config to library structs -------------------------------------------

std::string need_path(const json& c, const std::string& key)
{
    auto s = c.at(key).get<std::string>();
    if (s.empty()) throw ConfigError("--" + flag_name(key) + " is required");
    return s;
}

TrainConfig train_config(const json& c)
{
    TrainConfig t;
    t.learning_rate = c.at("lr").get<double>();
    t.iterations = c.at("iterations").get<int>();
    t.warmup = c.at("warmup").get<int>();
    t.min_frames = c.at("clip_min_frames").get<int>();
    t.max_frames = c.at("clip_max_frames").get<int>();
    t.seed = c.at("seed").get<std::uint64_t>();
    t.grad_clip = c.at("grad_clip").get<double>();
    t.alpha = c.at("alpha").get<double>();
    const auto strategy = c.at("strategy").get<std::string>();
    if (strategy != "MT" && strategy != "ST") throw ConfigError("strategy must be MT or ST");
    t.multi_frame = strategy == "MT";
    t.query_augmentation = c.at("query_augmentation").get<double>();
    t.static_augmentation = c.at("static_augmentation").get<double>();
    t.weights = {c.at("lambda_txt").get<double>(), c.at("lambda_mask").get<double>(), c.at("lambda_bce").get<double>(),
                 c.at("lambda_dice").get<double>(), c.at("lambda_occ").get<double>()};
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return t;
}

Model initial_model(const json& c)
{
    const auto init = c.at("init").get<std::string>();
    double range = 0.0;
    if (init == "uniform") {
        range = c.at("init_range").get<double>();
        if (!(range > 0.0)) throw ConfigError("init_range must be positive");
    } else if (init != "fan_in") {
        throw ConfigError("init must be fan_in or uniform");
    }
    return init_model(ModelDims{}, c.at("seed").get<std::uint64_t>(), range);
}

InferenceConfig inference_config(const json& c)
{
    InferenceConfig cfg;
    try {
        cfg.alpha = c.at("alpha").get<double>();
        if (cfg.alpha < 0.0) throw ConfigError("alpha must be non-negative");
        cfg.sampling.max_frames = c.at("max_frames").get<int>();
        if (cfg.sampling.max_frames < 1) throw ConfigError("max_frames must be at least 1");
        cfg.sampling.strategy = sampling_strategy_from_string(c.at("sampling").get<std::string>());
        cfg.sampling.seed = c.at("sampling_seed").get<std::uint64_t>();
        cfg.combo = ScoreCombo::parse(c.at("combo").get<std::string>());
        const auto inference = c.at("inference").get<std::string>();
        if (inference != "MI" && inference != "SI") throw ConfigError("inference must be MI or SI");
        cfg.use_memory = inference == "MI";
        cfg.capacity = c.at("capacity").get<int>();
        if (cfg.capacity < 1) throw ConfigError("capacity must be at least 1");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

int env_threads()
{
    const char* v = std::getenv("TTVRS_THREADS");
    if (!v || !*v) return 0;
    try {
        const int n = std::stoi(v);
        if (n < 1) throw ConfigError("TTVRS_THREADS must be a positive integer");
        return n;
    } catch (const std::logic_error&) {
        throw ConfigError("TTVRS_THREADS must be a positive integer");
    }
}

EvalOptions eval_options(const json& c)
{
    EvalOptions o;
    o.inference = inference_config(c);
    o.tolerance = c.at("tolerance").get<int>();
    o.epsilon = c.at("epsilon").get<double>();
    if (o.tolerance < 0) throw ConfigError("tolerance must be non-negative");
    if (o.epsilon < 0.0) throw ConfigError("epsilon must be non-negative");
    o.threads = env_threads();
    return o;
}

DatasetManifest load_manifest(const json& c)
{
    const fs::path file = need_path(c, "data");
    if (!fs::exists(file)) throw IoError("manifest " + file.string() + " not found");
    return DatasetManifest::load(file);
}

Model load_model(const fs::path& file)
{
    if (!fs::exists(file)) throw IoError("checkpoint " + file.string() + " not found");
    return load_checkpoint(file);
}

void write_text(const fs::path& file, const std::string& text)
{
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << text;
}

// ---- commands --------------------------------------------------------------

int cmd_gen_data(const json& c)
{
    DatasetConfig d;
    d.out_dir = need_path(c, "out");
    const auto parent = d.out_dir.parent_path();
    if (!parent.empty() && !fs::is_directory(parent))
        throw ConfigError("parent directory of " + d.out_dir.string() + " does not exist");
    d.videos = c.at("videos").get<int>();
    d.negatives = c.at("negatives").get<double>();
    d.test_videos = c.at("test_videos").get<int>();
    d.test_negatives = c.at("test_negatives").get<double>();
    d.seed = c.at("seed").get<std::uint64_t>();
    d.width = c.at("width").get<int>();
    d.height = c.at("height").get<int>();
    d.frames = c.at("frames").get<int>();
    d.attribute_weight = c.at("attribute_weight").get<double>();
    d.spatial_weight = c.at("spatial_weight").get<double>();
    d.motion_weight = c.at("motion_weight").get<double>();
    d.window_fraction = c.at("window_fraction").get<double>();
    DatasetManifest m;
    try {
        m = make_dataset(d);
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    int negatives = 0;
    for (const auto& e : m.entries) negatives += e.query.is_negative() ? 1 : 0;
    std::cout << "wrote " << m.entries.size() << " videos (" << negatives << " negative) to "
              << (d.out_dir / "manifest.json").string() << "\n";
    return ok;
}

struct TrainOutcome {
    Model model;
    TrainResult result;
};

TrainOutcome train_model(const json& c, const DatasetManifest& manifest, bool verbose)
{
    const auto cfg = train_config(c);
    auto model = initial_model(c);
    const auto samples = load_samples(manifest, c.at("train_split").get<std::string>());
    if (samples.empty()) throw ConfigError("split '" + c.at("train_split").get<std::string>() + "' is empty");
    auto report = [&](const LossRecord& r) {
        if (verbose && ((r.iteration + 1) % 100 == 0 || r.iteration + 1 == cfg.iterations))
            std::cerr << "iter " << r.iteration + 1 << "/" << cfg.iterations << " loss " << r.loss << "\n";
    };
    auto result = train(model, samples, cfg, report);
    return {std::move(model), std::move(result)};
}

int cmd_train(const json& c)
{
    const auto manifest = load_manifest(c);
    const fs::path out = need_path(c, "out");
    fs::path csv = c.at("loss_csv").get<std::string>();
    if (csv.empty()) csv = fs::path(out).replace_extension(".loss.csv");
    auto t = train_model(c, manifest, true);
    save_checkpoint(out, t.model);
    write_loss_csv(csv, t.result.trace);
    if (!t.result.trace.empty()) {
        const auto s = smoothed(t.result.trace, 20);
        std::cout << "smoothed loss " << s.front() << " -> " << s.back() << "\n";
    }
    std::cout << "checkpoint " << out.string() << ", loss trace " << csv.string() << "\n";
    return ok;
}

int cmd_eval(const json& c)
{
    const auto manifest = load_manifest(c);
    auto opts = eval_options(c);
    try {
        opts.source = prediction_source_from_string(c.at("mode").get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    std::optional<Model> model;
    if (opts.source == PredictionSource::model) model = load_model(need_path(c, "checkpoint"));
    const fs::path out = need_path(c, "out");
    fs::create_directories(out);
    const auto split = c.at("split").get<std::string>();
    const auto result = evaluate_split(manifest, split, model ? &*model : nullptr, opts);
    result.report.write(out / "metrics.json", out / "metrics.csv");
    if (c.at("save_masks").get<bool>())
        for (std::size_t i = 0; i < result.ids.size(); ++i)
            save_masklet(out / "masks" / result.ids[i], result.predictions[i]);
    const auto& r = result.report;
    std::printf("videos %zu  J %.4f  F %.4f  J&F %.4f  R (local definition) %s\n", r.videos.size(), r.positive.J,
                r.positive.F, r.positive.JF, r.R ? std::to_string(*r.R).c_str() : "n/a");
    return ok;
}

std::string grid_header()
{
    return "cell,ref_J,ref_F,ref_JF,rea_J,rea_F,rea_JF\n";
}

std::string grid_row(const std::string& cell, const MetricsReport& r)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", cell.c_str(), r.referring.J, r.referring.F,
                  r.referring.JF, r.reasoning.J, r.reasoning.F, r.reasoning.JF);
    return buf;
}

std::string number_label(double v)
{
    std::ostringstream s;
    s << v;
    return s.str();
}

int cmd_ablate(const json& c)
{
    const auto grid = c.at("grid").get<std::string>();
    if (grid != "alpha" && grid != "tks" && grid != "decode" && grid != "sampling")
        throw ConfigError("grid must be alpha, tks, decode or sampling");
    const auto manifest = load_manifest(c);
    const auto split = c.at("split").get<std::string>();
    const auto base = eval_options(c);
    const fs::path out = need_path(c, "out");
    std::string csv = grid_header();
    auto emit = [&](const std::string& cell, const Model& model, const EvalOptions& opts) {
        const auto r = evaluate_split(manifest, split, &model, opts).report;
        csv += grid_row(cell, r);
        std::cerr << cell << ": referring J&F " << r.referring.JF << ", reasoning J&F " << r.reasoning.JF << "\n";
    };
    auto retrain = [&](json cfg, const std::string& name) {
        const fs::path dir = need_path(c, "work_dir");
        fs::create_directories(dir);
        auto t = train_model(cfg, manifest, false);
        save_checkpoint(dir / (name + ".bin"), t.model);
        write_loss_csv(dir / (name + ".loss.csv"), t.result.trace);
        return std::move(t.model);
    };

    if (grid == "alpha") {
        for (const auto& a : c.at("alphas")) {
            const double alpha = a.get<double>();
            if (alpha < 0.0) throw ConfigError("alphas must be non-negative");
            json cfg = c;
            cfg["alpha"] = alpha;
            const auto label = "alpha=" + number_label(alpha);
            auto model = retrain(cfg, label);
            auto opts = base;
            opts.inference.alpha = alpha;
            emit(label, model, opts);
        }
    } else if (grid == "decode") {
        for (const std::string train_strategy : {"ST", "MT"}) {
            json cfg = c;
            cfg["strategy"] = train_strategy;
            auto model = retrain(cfg, train_strategy);
            for (const bool memory : {false, true}) {
                auto opts = base;
                opts.inference.use_memory = memory;
                emit(train_strategy + (memory ? "+MI" : "+SI"), model, opts);
            }
        }
    } else {
        const auto checkpoint = c.at("checkpoint").get<std::string>();
        if (checkpoint.empty()) throw IoError("the " + grid + " grid needs --checkpoint");
        const auto model = load_model(checkpoint);
        if (grid == "tks") {
            for (const char* combo : {"S1+S2+S3", "S1+S2", "S1+S3", "S2+S3"}) {
                auto opts = base;
                opts.inference.combo = ScoreCombo::parse(combo);
                emit(combo, model, opts);
            }
        } else {
            for (auto s : {SamplingStrategy::random, SamplingStrategy::uniform, SamplingStrategy::anchor}) {
                auto opts = base;
                opts.inference.sampling.strategy = s;
                emit(to_string(s), model, opts);
            }
        }
    }
    write_text(out, csv);
    std::cout << "wrote " << out.string() << "\n";
    return ok;
}

std::string vis_name(const std::string& video, int frame)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%04d.ppm", frame);
    return "vis_" + video + buf;
}

int cmd_visualize(const json& c)
{
    const auto manifest = load_manifest(c);
    auto cfg = inference_config(c);
    if (c.at("unfused").get<bool>()) cfg.alpha = 0.0;
    const auto mode = c.at("mode").get<std::string>();
    if (mode != "pca" && mode != "mask") throw ConfigError("mode must be pca or mask");
    const auto model = frozen_copy(load_model(need_path(c, "checkpoint")));
    const fs::path out = need_path(c, "out");
    fs::create_directories(out);
    const auto only = c.at("video").get<std::string>();
    int written = 0;
    for (const auto* e : manifest.split(c.at("split").get<std::string>())) {
        if (!only.empty() && e->id != only) continue;
        const auto clip = manifest.load_clip(*e);
        const auto r = infer_video(clip, e->query, model, cfg);
        for (int t = 0; t < clip.num_frames; ++t) {
            const auto frame = frame_image(clip, t);
            const auto image = mode == "pca" ? pca_visualize(r.propagation.mask_embeddings[t], frame)
                                             : mask_overlay(r.masklet.frame(t), frame);
            write_ppm(out / vis_name(e->id, t), image);
            ++written;
        }
    }
    if (!only.empty() && written == 0) throw IoError("video '" + only + "' not found in the split");
    std::cout << "wrote " << written << " overlays to " << out.string() << "\n";
    return ok;
}

int dispatch(const std::string& command, const json& config)
{
    if (command == "gen-data") return cmd_gen_data(config);
    if (command == "train") return cmd_train(config);
    if (command == "eval") return cmd_eval(config);
    if (command == "ablate") return cmd_ablate(config);
    return cmd_visualize(config);
}

} // namespace

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"gen-data", "train", "eval", "ablate", "visualize"};
    return names;
}

const std::vector<ConfigKey>& command_keys(const std::string& command)
{
    const auto it = registry().find(command);
    if (it == registry().end()) throw ConfigError("unknown command '" + command + "'");
    return it->second;
}

json resolve_config(const std::string& command, const json* file,
                    const std::vector<std::pair<std::string, std::string>>& flags)
{
    const auto& keys = command_keys(command);
    json out = json::object();
    for (const auto& k : keys) out[k.name] = k.default_value;
    if (file) {
        if (!file->is_object()) throw ConfigError("config file must hold a JSON object");
        for (const auto& [name, value] : file->items()) {
            const auto* k = find_key(keys, name);
            if (!k) throw ConfigError("unknown config key '" + name + "' for " + command);
            out[name] = coerce_json(*k, value);
        }
    }
    for (const auto& [name, raw] : flags) {
        const auto* k = find_key(keys, name);
        if (!k) throw ConfigError("unknown config key '" + name + "' for " + command);
        out[name] = parse_flag(*k, raw);
    }
    return out;
}

int run(int argc, const char* const* argv)
{
    CLI::App app{"Temporal-token video reasoning segmentation at desk scale"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 success, 2 config error, 3 missing artifact, 4 numeric failure.\n"
               "TTVRS_THREADS caps evaluation parallelism.");

    struct Bound {
        CLI::App* sub = nullptr;
        std::string config_file;
        std::vector<std::pair<std::string, CLI::Option*>> options;
        std::map<std::string, std::string> raw;
    };
    std::map<std::string, Bound> bound;
    for (const auto& name : command_names()) {
        auto& b = bound[name];
        static const std::map<std::string, std::string> about{
            {"gen-data", "render a synthetic dataset and its manifest"},
            {"train", "train a model from scratch and write a checkpoint"},
            {"eval", "score a checkpoint (or an oracle/zero baseline) on a split"},
            {"ablate", "run an ablation grid and write one CSV row per cell"},
            {"visualize", "write PPM overlays of features or masks for one video"},
        };
        b.sub = app.add_subcommand(name, about.at(name));
        b.sub->add_option("--config", b.config_file, "JSON config file; flags override its values");
        for (const auto& k : command_keys(name)) {
            const auto& d = k.default_value;
            const std::string shown = d.is_string() ? d.get<std::string>() : d.dump();
            auto* opt = b.sub->add_option("--" + flag_name(k.name), b.raw[k.name], k.help + " [default: " +
                                                                                       (shown.empty() ? "\"\"" : shown) + "]");
            opt->type_name(d.is_boolean()   ? "BOOL"
                           : d.is_number_integer() ? "INT"
                           : d.is_number()  ? "FLOAT"
                           : d.is_array()   ? "LIST"
                                            : "TEXT");
            if (d.is_boolean()) opt->expected(0, 1);
            b.options.emplace_back(k.name, opt);
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    for (auto& [name, b] : bound) {
        if (!b.sub->parsed()) continue;
        try {
            if (const int threads = env_threads(); threads > 0) omp_set_num_threads(threads);
            std::optional<json> file;
            if (!b.config_file.empty()) {
                std::ifstream in(b.config_file);
                if (!in) throw ConfigError("cannot read config " + b.config_file);
                try {
                    file = json::parse(in);
                } catch (const json::parse_error& e) {
                    throw ConfigError("config " + b.config_file + ": " + e.what());
                }
            }
            std::vector<std::pair<std::string, std::string>> flags;
            for (const auto& [key, opt] : b.options)
                if (opt->count() > 0) flags.emplace_back(key, b.raw[key]);
            return dispatch(name, resolve_config(name, file ? &*file : nullptr, flags));
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return config_error;
        } catch (const NumericError& e) {
            std::cerr << "numeric failure: " << e.what() << "\n";
            return numeric_failure;
        } catch (const IoError& e) {
            std::cerr << "missing artifact: " << e.what() << "\n";
            return missing_artifact;
        } catch (const CheckpointError& e) {
            std::cerr << "missing artifact: " << e.what() << "\n";
            return missing_artifact;
        } catch (const std::invalid_argument& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return config_error;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return failure;
        }
    }
    return failure;
}

} // namespace ttvrs::cli
