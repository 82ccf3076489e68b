#include "gsu/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "gsu/degrade.hpp"
#include "gsu/denoiser.hpp"
#include "gsu/diffcore.hpp"
#include "gsu/evalkit.hpp"
#include "gsu/gaitgeom.hpp"
#include "gsu/gsu1.hpp"
#include "gsu/png_io.hpp"
#include "gsu/pointseq.hpp"
#include "gsu/prng.hpp"
#include "gsu/synthgait.hpp"
#include "gsu/trainkit.hpp"

namespace fs = std::filesystem;

namespace gsu::cli {

namespace {

std::vector<std::string> list_files(const std::string& dir, const std::string& ext) {
    check(fs::is_directory(dir), "not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    check(!out.empty(), "no " + ext + " files in " + dir);
    return out;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// Every command echoes its resolved configuration next to its outputs.
void write_sidecar(CLI::App* sub, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "config_used.cfg");
    f << sub->config_to_str(true, false);
}

ten::Tensor<float> video_tensor(const geom::DepthVideo& v) {
    return ten::Tensor<float>::from({v.frames, 1, v.height, v.width},
                                    std::vector<float>(v.data.begin(), v.data.end()));
}

ten::Tensor<float> mask_tensor(const degrade::MaskVideo& m) {
    std::vector<float> data(m.data.size());
    for (size_t i = 0; i < m.data.size(); ++i) data[i] = static_cast<float>(m.data[i]);
    return ten::Tensor<float>::from({m.frames, 1, m.height, m.width}, std::move(data));
}

geom::DepthVideo video_from_tensor(const ten::Tensor<float>& t, const geom::DepthVideo& like) {
    geom::DepthVideo v = like;
    std::copy(t.data().begin(), t.data().end(), v.data.begin());
    return v;
}

struct SimdOpt {
    std::string mode = "auto";
    void apply() const {
        if (mode == "scalar")
            kern::set_simd_mode(kern::SimdMode::Scalar);
        else if (mode == "avx2")
            kern::set_simd_mode(kern::SimdMode::Avx2);
        else
            kern::set_simd_mode(kern::SimdMode::Auto);
    }
};

void add_common(CLI::App* sub, SimdOpt& simd, int& threads, std::string& config_doc) {
    sub->add_option("--simd", simd.mode, "kernel selection: auto|scalar|avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
        ->capture_default_str();
    sub->add_option("--threads", threads, "worker pool cap")->capture_default_str();
    // Handled before parsing (see run()); registered here for --help and the
    // sidecar echo.
    sub->add_option("--config", config_doc, "key = value config file (flags win over config)");
    // Config-derived tokens precede explicit flags, so last-wins gives the
    // documented precedence: defaults < config < flags.
    for (auto* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

// Parses a `key = value` config file into --key=value tokens.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream f(path);
    check(static_cast<bool>(f), "cannot open config file: " + path);
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::vector<std::string> out;
    std::string line;
    while (std::getline(f, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        check(eq != std::string::npos, "config line without '=': " + line);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        check(!key.empty(), "config line with empty key: " + line);
        out.push_back("--" + key + "=" + value);
    }
    return out;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
    std::string out;
    int subjects = 4, seqs = 1, frames = 16;
    uint64_t seed = 0;
};

void cmd_synth(const SynthArgs& a, CLI::App* sub) {
    synth::make_dataset(a.out, a.subjects, a.seqs, a.frames, a.seed);
    write_sidecar(sub, a.out);
}

// ---- project ---------------------------------------------------------------

struct ProjectArgs {
    std::string in, out;
    int64_t size = 64;
    double box = 2.6;
    double depth_floor = 1.0 / 255.0;
    uint64_t seed = 0;
};

void cmd_project(const ProjectArgs& a, CLI::App* sub) {
    geom::ProjectionConfig cfg = geom::ProjectionConfig::square(a.size);
    cfg.l_z = cfg.l_y = cfg.l_x = a.box;
    cfg.r_z = cfg.l_z / static_cast<double>(a.size);
    cfg.r_y = cfg.l_y / static_cast<double>(a.size);
    cfg.depth_floor = a.depth_floor;
    cfg.validate();

    fs::create_directories(a.out);
    auto manifest = synth::read_manifest(a.in);
    for (const auto& item : manifest.items) {
        auto seq = io::read_pointseq((fs::path(a.in) / item.file).string());
        seq.subject_id = item.subject_id;
        seq.sequence_id = item.sequence_id;
        auto video = geom::project(geom::canonicalize(seq), cfg);
        io::Container c;
        geom::add_depth_entries(c, video, cfg);
        c.write((fs::path(a.out) / (item.sequence_id + ".gsu1")).string());
    }
    write_sidecar(sub, a.out);
}

// ---- degrade ---------------------------------------------------------------

struct DegradeArgs {
    std::string in, out;
    int64_t vmask = 2;
    double pmask = 1.0 / 6.0;
    uint64_t seed = 0;
};

void cmd_degrade(const DegradeArgs& a, CLI::App* sub) {
    fs::create_directories(a.out);
    for (const auto& path : list_files(a.in, ".gsu1")) {
        auto loaded = geom::depth_from_container(io::Container::read(path));
        degrade::MaskRecipe recipe{a.vmask, a.pmask, a.seed};
        auto degraded = degrade::compose_and_apply(loaded.video, recipe, stem_of(path));
        io::Container c;
        geom::add_depth_entries(c, degraded.y, loaded.config);
        c.add(io::Entry::u8("mask", {degraded.applied.frames, 1, degraded.applied.height,
                                     degraded.applied.width},
                            degraded.applied.data.data()));
        c.add(io::Entry::text("recipe", recipe.label()));
        c.write((fs::path(a.out) / (stem_of(path) + ".gsu1")).string());
    }
    write_sidecar(sub, a.out);
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string data, out, resume;
    train::TrainConfig cfg;
    int base_channels = 32;
    std::string mults = "1,2";
    int heads = 2;
};

std::vector<int> parse_mults(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    check(!out.empty(), "empty channel multiplier list");
    return out;
}

void cmd_train(const TrainArgs& a, CLI::App* sub) {
    std::vector<geom::DepthVideo> dataset;
    for (const auto& path : list_files(a.data, ".gsu1"))
        dataset.push_back(geom::depth_from_container(io::Container::read(path)).video);

    train::TrainerState state;
    if (!a.resume.empty()) {
        state = train::load_checkpoint(a.resume);
    } else {
        net::DenoiserSpec spec;
        spec.base_channels = a.base_channels;
        spec.channel_mults = parse_mults(a.mults);
        spec.heads = a.heads;
        spec.max_frames = a.cfg.frames;
        state = train::init_trainer(spec, a.cfg.seed);
    }
    write_sidecar(sub, a.out);
    train::train(state, dataset, a.cfg, a.out);
}

// ---- sample ----------------------------------------------------------------

struct SampleArgs {
    std::string ckpt, in, out;
    int steps = 32;
    bool stochastic = true;
    bool ablate_frames = false;
    bool use_live = false;
    uint64_t seed = 0;
};

void cmd_sample(const SampleArgs& a, CLI::App* sub) {
    auto state = train::load_checkpoint(a.ckpt);
    diff::DenoiserFn fn = a.use_live ? train::live_denoiser(state) : train::ema_denoiser(state);

    fs::create_directories(a.out);
    for (const auto& path : list_files(a.in, ".gsu1")) {
        auto c = io::Container::read(path);
        auto loaded = geom::depth_from_container(c);
        auto mask_entry = c.at("mask").as_u8();
        degrade::MaskVideo mask{loaded.video.frames, loaded.video.height, loaded.video.width,
                                mask_entry};

        diff::SamplerConfig cfg;
        cfg.steps = a.steps;
        cfg.stochastic = a.stochastic;

        geom::DepthVideo result = loaded.video;
        std::string name = stem_of(path);
        if (a.ablate_frames) {
            // Image-mode ablation: each frame denoised independently.
            for (int64_t f = 0; f < loaded.video.frames; ++f) {
                geom::DepthVideo yf;
                yf.frames = 1;
                yf.height = loaded.video.height;
                yf.width = loaded.video.width;
                int64_t plane = yf.height * yf.width;
                yf.data.assign(loaded.video.data.begin() + f * plane,
                               loaded.video.data.begin() + (f + 1) * plane);
                yf.meta = {loaded.video.meta[f]};
                yf.z_min = loaded.video.z_min;
                degrade::MaskVideo mf{1, yf.height, yf.width,
                                      {mask.data.begin() + f * plane,
                                       mask.data.begin() + (f + 1) * plane}};
                cfg.seed = rng::Stream::of(a.seed, name, f).next_u64();
                auto out_t = diff::sample(video_tensor(yf), mask_tensor(mf), cfg, fn);
                std::copy(out_t.data().begin(), out_t.data().end(),
                          result.data.begin() + f * plane);
            }
        } else {
            cfg.seed = rng::Stream::of(a.seed, name).next_u64();
            auto out_t = diff::sample(video_tensor(loaded.video), mask_tensor(mask), cfg, fn);
            result = video_from_tensor(out_t, loaded.video);
        }

        io::Container oc;
        geom::add_depth_entries(oc, result, loaded.config);
        if (c.has("recipe")) oc.add(io::Entry::text("recipe", c.at("recipe").as_text()));
        oc.write((fs::path(a.out) / (name + ".gsu1")).string());
    }
    write_sidecar(sub, a.out);
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string ref, pred, degraded, out_csv, png_dir;
    std::string baseline = "none";
    uint64_t seed = 0;
    int threads = 1;
};

void cmd_eval(const EvalArgs& a, CLI::App* sub) {
    struct Item {
        std::string name, recipe;
        geom::DepthVideo pred, ref;
    };
    std::vector<Item> items;

    auto ref_files = list_files(a.ref, ".gsu1");
    for (const auto& ref_path : ref_files) {
        Item item;
        item.name = stem_of(ref_path);
        item.ref = geom::depth_from_container(io::Container::read(ref_path)).video;
        if (a.baseline == "none") {
            check(!a.pred.empty(), "eval: --pred is required when --baseline none");
            auto c = io::Container::read((fs::path(a.pred) / (item.name + ".gsu1")).string());
            item.pred = geom::depth_from_container(c).video;
            item.recipe = c.has("recipe") ? c.at("recipe").as_text() : "-";
        } else {
            check(!a.degraded.empty(), "eval: --degraded is required for interpolation baselines");
            auto c = io::Container::read((fs::path(a.degraded) / (item.name + ".gsu1")).string());
            auto loaded = geom::depth_from_container(c);
            auto mask_bytes = c.at("mask").as_u8();
            degrade::MaskVideo mask{loaded.video.frames, loaded.video.height, loaded.video.width,
                                    mask_bytes};
            // Baselines fill from observed pixels, not the applied mask.
            auto obs = degrade::observation_mask(loaded.video);
            item.pred = eval::interpolate_baseline(loaded.video, obs,
                                                   eval::interp_from_name(a.baseline));
            item.recipe = c.has("recipe") ? c.at("recipe").as_text() : "-";
        }
        items.push_back(std::move(item));
    }

    eval::MetricReport report;
    report.rows.resize(items.size());
    int threads = std::max(1, a.threads);
    auto worker = [&](size_t begin, size_t step) {
        for (size_t i = begin; i < items.size(); i += step) {
            const auto& it = items[i];
            eval::SequenceMetrics m;
            m.sequence_id = it.name;
            m.recipe = it.recipe;
            m.psnr_db = eval::psnr(it.pred, it.ref);
            m.ssim = eval::ssim(it.pred, it.ref);
            m.consistency = it.pred.frames >= 2 ? eval::consistency(it.pred, it.ref) : 0.0;
            report.rows[i] = m;
        }
    };
    if (threads == 1 || items.size() <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
        for (auto& th : pool) th.join();
    }

    fs::create_directories(fs::path(a.out_csv).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(a.out_csv).parent_path());
    std::ofstream f(a.out_csv);
    check(static_cast<bool>(f), "eval: cannot write " + a.out_csv);
    f << report.to_csv();

    if (!a.png_dir.empty()) {
        fs::create_directories(a.png_dir);
        for (const auto& it : items)
            for (int64_t fr = 0; fr < it.pred.frames; ++fr) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "_f%03lld.png", static_cast<long long>(fr));
                io::write_depth_frame_png((fs::path(a.png_dir) / (it.name + buf)).string(),
                                          it.pred, fr);
            }
    }
    write_sidecar(sub, fs::path(a.out_csv).parent_path().string().empty()
                           ? "."
                           : fs::path(a.out_csv).parent_path().string());
}

}  // namespace

int run(int argc, const char* const* argv) {
    // Extract --config up front and splice its tokens in after the
    // subcommand name, before the explicit flags.
    std::vector<std::string> tokens;
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        std::string t = argv[i];
        if (t == "--config" && i + 1 < argc) {
            config_path = argv[++i];
            continue;
        }
        if (t.rfind("--config=", 0) == 0) {
            config_path = t.substr(9);
            continue;
        }
        tokens.push_back(std::move(t));
    }
    if (!config_path.empty() && !tokens.empty()) {
        try {
            auto extra = config_tokens(config_path);
            tokens.insert(tokens.begin() + 1, extra.begin(), extra.end());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }

    CLI::App app{"LiDAR gait sequence upsampling pipeline"};
    app.require_subcommand(1);

    SimdOpt simd;
    int threads = 1;
    std::string config_doc = config_path;

    SynthArgs synth_args;
    auto* s_synth = app.add_subcommand("synth", "generate a synthetic walker dataset");
    s_synth->add_option("--out", synth_args.out, "output dataset directory")->required();
    s_synth->add_option("--subjects", synth_args.subjects)->capture_default_str();
    s_synth->add_option("--seqs-per-subject", synth_args.seqs)->capture_default_str();
    s_synth->add_option("--frames", synth_args.frames)->capture_default_str();
    s_synth->add_option("--seed", synth_args.seed)->capture_default_str();
    add_common(s_synth, simd, threads, config_doc);

    ProjectArgs project_args;
    auto* s_project = app.add_subcommand("project", "project point sequences to depth videos");
    s_project->add_option("--in", project_args.in, "dataset directory (with manifest.json)")
        ->required();
    s_project->add_option("--out", project_args.out)->required();
    s_project->add_option("--size", project_args.size, "grid size (H = W)")->capture_default_str();
    s_project->add_option("--box", project_args.box, "box extent in meters")
        ->capture_default_str();
    s_project->add_option("--depth-floor", project_args.depth_floor)->capture_default_str();
    s_project->add_option("--seed", project_args.seed)->capture_default_str();
    add_common(s_project, simd, threads, config_doc);

    DegradeArgs degrade_args;
    auto* s_degrade = app.add_subcommand("degrade", "apply vertical + pepper masks");
    s_degrade->add_option("--in", degrade_args.in)->required();
    s_degrade->add_option("--out", degrade_args.out)->required();
    s_degrade->add_option("--vmask", degrade_args.vmask, "keep every k-th row")
        ->capture_default_str();
    s_degrade->add_option("--pmask", degrade_args.pmask, "pepper drop probability")
        ->capture_default_str();
    s_degrade->add_option("--seed", degrade_args.seed)->capture_default_str();
    add_common(s_degrade, simd, threads, config_doc);

    TrainArgs train_args;
    auto* s_train = app.add_subcommand("train", "train the denoiser");
    s_train->add_option("--data", train_args.data, "clean depth video directory")->required();
    s_train->add_option("--out", train_args.out, "run directory")->required();
    s_train->add_option("--iters", train_args.cfg.iterations)->capture_default_str();
    s_train->add_option("--batch", train_args.cfg.batch_size)->capture_default_str();
    s_train->add_option("--frames", train_args.cfg.frames)->capture_default_str();
    s_train->add_option("--lr", train_args.cfg.learning_rate)->capture_default_str();
    s_train->add_option("--ema-decay", train_args.cfg.ema_decay)->capture_default_str();
    s_train->add_option("--ema-interval", train_args.cfg.ema_interval)->capture_default_str();
    s_train->add_option("--ckpt-interval", train_args.cfg.checkpoint_interval)
        ->capture_default_str();
    s_train->add_option("--base-channels", train_args.base_channels)->capture_default_str();
    s_train->add_option("--mults", train_args.mults, "channel multipliers, comma separated")
        ->capture_default_str();
    s_train->add_option("--heads", train_args.heads)->capture_default_str();
    s_train->add_option("--seed", train_args.cfg.seed)->capture_default_str();
    s_train->add_option("--resume", train_args.resume, "checkpoint to resume from");
    add_common(s_train, simd, threads, config_doc);

    SampleArgs sample_args;
    auto* s_sample = app.add_subcommand("sample", "upsample degraded videos");
    s_sample->add_option("--ckpt", sample_args.ckpt)->required();
    s_sample->add_option("--in", sample_args.in, "degraded video directory")->required();
    s_sample->add_option("--out", sample_args.out)->required();
    s_sample->add_option("--steps", sample_args.steps, "sampler step count T")
        ->capture_default_str();
    s_sample->add_flag("--stochastic,!--no-stochastic", sample_args.stochastic,
                       "posterior noise on/off")
        ->capture_default_str();
    s_sample->add_flag("--ablate-frames", sample_args.ablate_frames,
                       "sample each frame independently (image-mode ablation)");
    s_sample->add_flag("--use-live", sample_args.use_live, "use live weights instead of EMA");
    s_sample->add_option("--seed", sample_args.seed)->capture_default_str();
    add_common(s_sample, simd, threads, config_doc);

    EvalArgs eval_args;
    auto* s_eval = app.add_subcommand("eval", "metric report (CSV)");
    s_eval->add_option("--ref", eval_args.ref, "clean reference directory")->required();
    s_eval->add_option("--pred", eval_args.pred, "prediction directory");
    s_eval->add_option("--degraded", eval_args.degraded, "degraded directory (for baselines)");
    s_eval->add_option("--baseline", eval_args.baseline, "none|nearest|bilinear|bicubic")
        ->check(CLI::IsMember({"none", "nearest", "bilinear", "bicubic"}))
        ->capture_default_str();
    s_eval->add_option("--out", eval_args.out_csv, "CSV output path")->required();
    s_eval->add_option("--png-dir", eval_args.png_dir, "optional per-frame PNG dump directory");
    s_eval->add_option("--seed", eval_args.seed)->capture_default_str();
    add_common(s_eval, simd, threads, config_doc);

    std::vector<const char*> cargv = {"gsu"};
    for (const auto& t : tokens) cargv.push_back(t.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        simd.apply();
        if (s_synth->parsed()) cmd_synth(synth_args, s_synth);
        if (s_project->parsed()) cmd_project(project_args, s_project);
        if (s_degrade->parsed()) cmd_degrade(degrade_args, s_degrade);
        if (s_train->parsed()) cmd_train(train_args, s_train);
        if (s_sample->parsed()) cmd_sample(sample_args, s_sample);
        if (s_eval->parsed()) {
            eval_args.threads = threads;
            cmd_eval(eval_args, s_eval);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace gsu::cli
