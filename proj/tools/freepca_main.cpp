// freepca command-line tool: synthetic videos, noise initialization, PCA
// decomposition, progressive-fusion runs, and the analysis reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freepca/freepca.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes: 0 ok, 1 unexpected/replay mismatch, 2 usage,
// 3 shape, 4 domain, 5 value, 6 format, 7 plan/config/consistency, 8 io
constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitShape = 3;
constexpr int kExitDomain = 4;
constexpr int kExitValue = 5;
constexpr int kExitFormat = 6;
constexpr int kExitConfig = 7;
constexpr int kExitIo = 8;

std::vector<std::string> g_argv;

void write_run_manifest(const fs::path& path, const std::string& kind,
                        const std::map<std::string, std::string>& artifacts,
                        const json& extra = json::object()) {
    json manifest{{"tool", "freepca"},
                  {"kind", kind},
                  {"version", 1},
                  {"command", g_argv},
                  {"artifacts", artifacts}};
    for (const auto& [key, value] : extra.items()) manifest[key] = value;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw freepca::IoError("cannot open manifest " + path.string());
    out << manifest.dump(2) << "\n";
}

std::map<std::string, std::string> hash_artifacts(const std::vector<fs::path>& paths) {
    std::map<std::string, std::string> hashes;
    for (const fs::path& p : paths) hashes[p.filename().string()] = freepca::hash_file(p);
    return hashes;
}

freepca::FeatureTensor load_feature_block(const std::string& path, const std::string& layout) {
    if (layout == "site") {
        return reshape_for_pca(
            freepca::read_features(path, freepca::FeatureLayout::SiteMajor));
    }
    return freepca::read_features(path);
}

// accept either a 3-d feature block or a 4-d video as a frame-major block
freepca::FeatureTensor load_any_features(const std::string& path, const std::string& layout) {
    const freepca::TensorData t = freepca::read_tensor(path);
    if (t.dims.size() == 4) {
        freepca::VideoTensor v(t.dims[0], t.dims[1], t.dims[2], t.dims[3]);
        v.data = t.values;
        return freepca::features_from_video(v);
    }
    return load_feature_block(path, layout);
}

freepca::Mover parse_mover(const std::string& text) {
    // shape:size:vy:vx:intensity, e.g. dot:3:0:1:0.4
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 5) {
        throw freepca::ConfigError("mover '" + text + "' is not shape:size:vy:vx:intensity");
    }
    freepca::Mover m;
    if (parts[0] == "square") {
        m.shape = freepca::MoverShape::Square;
    } else if (parts[0] == "dot") {
        m.shape = freepca::MoverShape::Dot;
    } else {
        throw freepca::ConfigError("mover shape '" + parts[0] + "' is not square|dot");
    }
    try {
        m.size = std::stoul(parts[1]);
        m.velocity_y = std::stod(parts[2]);
        m.velocity_x = std::stod(parts[3]);
        m.intensity = std::stod(parts[4]);
    } catch (const std::exception&) {
        throw freepca::ConfigError("mover '" + text + "' has non-numeric fields");
    }
    return m;
}

void add_synth(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Render a deterministic synthetic video");
    struct Opts1 {
        std::string out;
        std::size_t frames = 32, height = 32, width = 32, channels = 1;
        std::string background = "gradient";
        std::vector<std::string> movers;
        double noise_sigma = 0.0;
        std::uint64_t seed = 0;
    };
    auto opt = std::make_shared<Opts1>();
    cmd->add_option("--out", opt->out, ".ften output path")->required();
    cmd->add_option("--frames", opt->frames);
    cmd->add_option("--height", opt->height);
    cmd->add_option("--width", opt->width);
    cmd->add_option("--channels", opt->channels);
    cmd->add_option("--background", opt->background, "constant|gradient|texture");
    cmd->add_option("--mover", opt->movers, "shape:size:vy:vx:intensity (repeatable)");
    cmd->add_option("--noise-sigma", opt->noise_sigma);
    cmd->add_option("--seed", opt->seed);
    cmd->callback([opt] {
        freepca::SynthSpec spec;
        spec.frames = opt->frames;
        spec.height = opt->height;
        spec.width = opt->width;
        spec.channels = opt->channels;
        if (opt->background == "constant") {
            spec.background = freepca::BackgroundKind::Constant;
        } else if (opt->background == "gradient") {
            spec.background = freepca::BackgroundKind::Gradient;
        } else if (opt->background == "texture") {
            spec.background = freepca::BackgroundKind::SeededTexture;
        } else {
            throw freepca::ConfigError("background must be constant|gradient|texture");
        }
        for (const std::string& text : opt->movers) spec.movers.push_back(parse_mover(text));
        spec.noise_sigma = opt->noise_sigma;
        spec.seed = opt->seed;

        freepca::write_video(freepca::synth_video(spec), opt->out);
        write_run_manifest(opt->out + ".manifest.json", "synth",
                           hash_artifacts({fs::path(opt->out)}));
        std::cout << "wrote " << opt->out << "\n";
    });
}

void add_noise_init(CLI::App& app) {
    auto* cmd = app.add_subcommand("noise-init", "Sample mean-reused, shuffled initial noise");
    struct Opts2 {
        std::string out;
        std::size_t frames = 64, height = 8, width = 8, channels = 4, block = 16;
        std::uint64_t seed = 0;
        bool scalar_mean = false, direct_reuse = false, no_shuffle = false;
    };
    auto opt = std::make_shared<Opts2>();
    cmd->add_option("--out", opt->out, ".ften output path")->required();
    cmd->add_option("--frames", opt->frames);
    cmd->add_option("--height", opt->height);
    cmd->add_option("--width", opt->width);
    cmd->add_option("--channels", opt->channels);
    cmd->add_option("--block", opt->block, "reuse block size f");
    cmd->add_option("--seed", opt->seed);
    cmd->add_flag("--scalar-mean", opt->scalar_mean, "reuse one scalar per block");
    cmd->add_flag("--direct-reuse", opt->direct_reuse, "copy block 0 instead of mean reuse");
    cmd->add_flag("--no-shuffle", opt->no_shuffle);
    cmd->callback([opt] {
        freepca::RunConfig cfg;
        cfg.frames = opt->frames;
        cfg.height = opt->height;
        cfg.width = opt->width;
        cfg.channels = opt->channels;
        cfg.noise_block = opt->block;
        cfg.noise_seed = opt->seed;
        cfg.scalar_mean = opt->scalar_mean;
        cfg.direct_reuse = opt->direct_reuse;
        cfg.shuffle = !opt->no_shuffle;
        if (cfg.noise_block < 1 || cfg.noise_block > cfg.frames) {
            throw freepca::ConfigError("need 1 <= block <= frames");
        }

        const freepca::NoiseSequence noise = freepca::prepare_noise(cfg);
        freepca::write_video(noise.frames, opt->out);
        write_run_manifest(opt->out + ".manifest.json", "noise-init",
                           hash_artifacts({fs::path(opt->out)}),
                           json{{"seed", opt->seed},
                                {"block", opt->block},
                                {"shuffle_perms", noise.shuffle_perms}});
        std::cout << "wrote " << opt->out << "\n";
    });
}

void add_pca(CLI::App& app) {
    auto* cmd = app.add_subcommand("pca", "Fit, project, or compare feature blocks");
    cmd->require_subcommand(1);

    struct Opts3 {
        std::string in, out, layout = "frame";
        bool whiten = false;
    };
    auto fit = std::make_shared<Opts3>();
    auto* fit_cmd = cmd->add_subcommand("fit", "Fit a temporal basis on a feature block");
    fit_cmd->add_option("--in", fit->in, "feature .ften")->required();
    fit_cmd->add_option("--out", fit->out, "packed basis .ften")->required();
    fit_cmd->add_option("--layout", fit->layout, "frame|site storage order of --in");
    fit_cmd->add_flag("--whiten", fit->whiten, "standardize per-frame variance");
    fit_cmd->callback([fit] {
        const freepca::FeatureTensor x = load_any_features(fit->in, fit->layout);
        const freepca::PcaBasis basis =
            freepca::fit_basis(x, freepca::FitOptions{.whiten = fit->whiten});
        freepca::write_basis(basis, fit->out);
        write_run_manifest(fit->out + ".manifest.json", "pca-fit",
                           hash_artifacts({fs::path(fit->out)}));
        std::cout << "wrote " << fit->out << " (f=" << basis.frames << ")\n";
    });

    struct Opts4 {
        std::string basis, in, out, layout = "frame";
        bool inverse = false;
    };
    auto proj = std::make_shared<Opts4>();
    auto* proj_cmd = cmd->add_subcommand("project", "Project (or reconstruct with --inverse)");
    proj_cmd->add_option("--basis", proj->basis, "packed basis .ften")->required();
    proj_cmd->add_option("--in", proj->in)->required();
    proj_cmd->add_option("--out", proj->out)->required();
    proj_cmd->add_option("--layout", proj->layout, "frame|site storage order of --in");
    proj_cmd->add_flag("--inverse", proj->inverse, "apply P^T instead of P");
    proj_cmd->callback([proj] {
        const freepca::PcaBasis basis = freepca::read_basis(proj->basis);
        const freepca::FeatureTensor x = load_any_features(proj->in, proj->layout);
        freepca::FeatureTensor out;
        if (proj->inverse) {
            freepca::ComponentSpace space;
            space.z = x;
            space.basis_id = basis.id;
            out = freepca::reconstruct(basis, space);
        } else {
            out = freepca::project(basis, x).z;
        }
        freepca::write_features(out, proj->out);
        write_run_manifest(proj->out + ".manifest.json", "pca-project",
                           hash_artifacts({fs::path(proj->out)}));
        std::cout << "wrote " << proj->out << "\n";
    });

    struct Opts5 {
        std::string a, b, out, layout = "frame";
    };
    auto cos = std::make_shared<Opts5>();
    auto* cos_cmd = cmd->add_subcommand("cosine", "Rank components by cosine similarity");
    cos_cmd->add_option("--a", cos->a, "projected features (global)")->required();
    cos_cmd->add_option("--b", cos->b, "projected features (local)")->required();
    cos_cmd->add_option("--out", cos->out, "ranking CSV")->required();
    cos_cmd->add_option("--layout", cos->layout, "frame|site storage order of inputs");
    cos_cmd->callback([cos] {
        freepca::ComponentSpace a, b;
        a.z = load_any_features(cos->a, cos->layout);
        b.z = load_any_features(cos->b, cos->layout);
        const freepca::SimilarityRanking ranking = freepca::component_cosine(a, b);
        freepca::write_ranking_csv(ranking, cos->out);
        write_run_manifest(cos->out + ".manifest.json", "pca-cosine",
                           hash_artifacts({fs::path(cos->out)}));
        std::cout << "wrote " << cos->out << "\n";
    });
}

void add_decompose(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "decompose", "Per-window consistency/motion decomposition of a sequence");
    struct Opts6 {
        std::string in, out_dir, layout = "frame";
        std::size_t frames = 0, window = 16, stride = 4, k = 3;
        std::uint64_t seed = 0;
    };
    auto opt = std::make_shared<Opts6>();
    cmd->add_option("--in", opt->in, "3-d features or 4-d video .ften")->required();
    cmd->add_option("--out-dir", opt->out_dir)->required();
    cmd->add_option("--frames", opt->frames, "expected F (validation only)");
    cmd->add_option("--window", opt->window, "window frames f");
    cmd->add_option("--stride", opt->stride);
    cmd->add_option("--k", opt->k, "consistency components per window");
    cmd->add_option("--seed", opt->seed, "attention seed");
    cmd->add_option("--layout", opt->layout, "frame|site storage order of 3-d input");
    cmd->callback([opt] {
        const freepca::FeatureTensor x = load_any_features(opt->in, opt->layout);
        if (opt->frames != 0 && opt->frames != x.frames) {
            throw freepca::ShapeError("--frames " + std::to_string(opt->frames) +
                                      " does not match input frames " +
                                      std::to_string(x.frames));
        }
        if (opt->k > opt->window) throw freepca::ConfigError("need k <= window");
        const freepca::WindowPlan plan =
            freepca::WindowPlan::make(x.frames, opt->window, opt->stride);
        const freepca::AttentionParams params{opt->seed, x.channels, 1.0};

        fs::create_directories(opt->out_dir);
        const auto pathways = freepca::global_local_features(x, plan, params);
        std::vector<std::pair<freepca::WindowSpec, freepca::FeatureTensor>> fused;
        std::vector<fs::path> artifacts;
        for (const auto& p : pathways) {
            const freepca::WindowDecomposition d =
                freepca::decompose_window(p.global, p.local, opt->k);
            char name[48];
            std::snprintf(name, sizeof name, "window_%03zu_similarity.csv", p.window.index);
            const fs::path csv = fs::path(opt->out_dir) / name;
            freepca::write_ranking_csv(d.ranking, csv.string());
            artifacts.push_back(csv);
            fused.emplace_back(p.window,
                               freepca::reconstruct(d.basis, freepca::fuse_components(d.split)));
        }
        const freepca::FeatureTensor sequence = freepca::accumulate_windows(fused, plan);
        const fs::path out_ften = fs::path(opt->out_dir) / "fused_sequence.ften";
        freepca::write_features(sequence, out_ften.string());
        artifacts.push_back(out_ften);

        write_run_manifest(fs::path(opt->out_dir) / "manifest.json", "decompose",
                           hash_artifacts(artifacts),
                           json{{"window", opt->window},
                                {"stride", opt->stride},
                                {"k", opt->k},
                                {"seed", opt->seed}});
        std::cout << "wrote " << artifacts.size() << " artifacts to " << opt->out_dir << "\n";
    });
}

void add_fuse(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "fuse", "Run the pseudo-denoiser with progressive fusion on initialized noise");
    struct Opts7 {
        std::string in, out;
        std::size_t window = 16, stride = 4, kmax = 3, steps = 50, switch_step = 25;
        std::uint64_t seed = 1001;
    };
    auto opt = std::make_shared<Opts7>();
    cmd->add_option("--in", opt->in, "4-d noise video .ften")->required();
    cmd->add_option("--out", opt->out, "final video .ften")->required();
    cmd->add_option("--window", opt->window);
    cmd->add_option("--stride", opt->stride);
    cmd->add_option("--kmax", opt->kmax);
    cmd->add_option("--steps", opt->steps);
    cmd->add_option("--switch-step", opt->switch_step);
    cmd->add_option("--seed", opt->seed, "attention seed");
    cmd->callback([opt] {
        freepca::NoiseSequence noise;
        noise.frames = freepca::read_video(opt->in);
        noise.block_size = opt->window;
        noise.shuffle_perms = {};

        const freepca::WindowPlan plan =
            freepca::WindowPlan::make(noise.frames.frames, opt->window, opt->stride);
        const freepca::FusionSchedule schedule{opt->kmax, opt->switch_step, opt->steps};
        if (schedule.mode_switch_step > schedule.total_steps) {
            throw freepca::ConfigError("need switch-step <= steps");
        }
        if (schedule.k_max > opt->window) throw freepca::ConfigError("need kmax <= window");
        const freepca::AttentionParams params{opt->seed, noise.frames.channels, 1.0};

        const freepca::VideoTensor out =
            freepca::run_pseudo_denoiser(noise, plan, schedule, params);
        freepca::write_video(out, opt->out);
        write_run_manifest(opt->out + ".manifest.json", "fuse",
                           hash_artifacts({fs::path(opt->out)}),
                           json{{"window", opt->window},
                                {"stride", opt->stride},
                                {"kmax", opt->kmax},
                                {"steps", opt->steps},
                                {"switch_step", opt->switch_step},
                                {"seed", opt->seed},
                                {"input", opt->in}});
        std::cout << "wrote " << opt->out << "\n";
    });
}

void add_demo(CLI::App& app) {
    auto* cmd = app.add_subcommand("demo", "End-to-end pipeline with manifest and reports");
    struct Opts8 {
        std::string config, out_dir, mode, replay;
        std::size_t frames = 0, height = 0, width = 0, channels = 0;
        std::size_t window = 0, stride = 0, kmax = 0, steps = 0;
        std::uint64_t seed = 0, attention_seed = 0, noise_seed = 0;
        long long switch_step = -1;
        bool scalar_mean = false, direct_reuse = false, no_shuffle = false;
    };
    auto opt = std::make_shared<Opts8>();
    cmd->add_option("--config", opt->config, "JSON config file");
    cmd->add_option("--out-dir", opt->out_dir)->required();
    cmd->add_option("--mode", opt->mode, "freepca|local|global");
    cmd->add_option("--replay", opt->replay, "re-run from a manifest and verify hashes");
    cmd->add_option("--frames", opt->frames);
    cmd->add_option("--height", opt->height);
    cmd->add_option("--width", opt->width);
    cmd->add_option("--channels", opt->channels);
    cmd->add_option("--window", opt->window);
    cmd->add_option("--stride", opt->stride);
    cmd->add_option("--kmax", opt->kmax);
    cmd->add_option("--steps", opt->steps);
    cmd->add_option("--switch-step", opt->switch_step);
    cmd->add_option("--seed", opt->seed, "derives both attention and noise seeds");
    cmd->add_option("--attention-seed", opt->attention_seed);
    cmd->add_option("--noise-seed", opt->noise_seed);
    cmd->add_flag("--scalar-mean", opt->scalar_mean);
    cmd->add_flag("--direct-reuse", opt->direct_reuse);
    cmd->add_flag("--no-shuffle", opt->no_shuffle);
    cmd->callback([opt, cmd] {
        if (!opt->replay.empty()) {
            const freepca::ReplayResult result =
                freepca::replay_manifest(opt->replay, opt->out_dir);
            if (result.ok) {
                std::cout << "replay ok: all artifact hashes match\n";
                return;
            }
            for (const std::string& m : result.mismatches) {
                std::cerr << "replay mismatch: " << m << "\n";
            }
            throw freepca::ConsistencyError("replay did not reproduce the manifest hashes");
        }

        freepca::RunConfig cfg;
        if (!opt->config.empty()) cfg = freepca::load_config(opt->config);
        auto passed = [cmd](const std::string& name) { return cmd->count(name) > 0; };
        if (passed("--frames")) cfg.frames = opt->frames;
        if (passed("--height")) cfg.height = opt->height;
        if (passed("--width")) cfg.width = opt->width;
        if (passed("--channels")) cfg.channels = opt->channels;
        if (passed("--window")) {
            cfg.window = opt->window;
            cfg.noise_block = opt->window;
        }
        if (passed("--stride")) cfg.stride = opt->stride;
        if (passed("--kmax")) cfg.schedule.k_max = opt->kmax;
        if (passed("--steps")) cfg.schedule.total_steps = opt->steps;
        if (passed("--switch-step")) {
            cfg.schedule.mode_switch_step = static_cast<std::size_t>(opt->switch_step);
        }
        if (passed("--seed")) {
            cfg.attention_seed = freepca::derive_seed(opt->seed, 1);
            cfg.noise_seed = freepca::derive_seed(opt->seed, 2);
        }
        if (passed("--attention-seed")) cfg.attention_seed = opt->attention_seed;
        if (passed("--noise-seed")) cfg.noise_seed = opt->noise_seed;
        if (passed("--scalar-mean")) cfg.scalar_mean = true;
        if (passed("--direct-reuse")) cfg.direct_reuse = true;
        if (passed("--no-shuffle")) cfg.shuffle = false;
        if (passed("--mode")) cfg.mode = freepca::run_mode_from_string(opt->mode);

        const freepca::DemoArtifacts artifacts = freepca::demo_pipeline(cfg, opt->out_dir);
        std::cout << "wrote " << artifacts.hashes.size() << " artifacts to " << opt->out_dir
                  << "\n";
        if (cfg.mode == freepca::RunMode::FreePca && cfg.schedule.mode_switch_step > 0) {
            std::cout << "motion-set temporal diff (step 0): local="
                      << artifacts.stats.motion_diff_local_mean
                      << " global=" << artifacts.stats.motion_diff_global_mean << "\n";
        }
    });
}

void add_analyze(CLI::App& app) {
    auto* cmd = app.add_subcommand("analyze", "Consistency reports, edge overlays, diff maps");
    cmd->require_subcommand(1);

    struct Opts9 {
        std::string in, out, peak = "range";
        double threshold = freepca::kDefaultConsistencyThresholdDb;
    };
    auto cls = std::make_shared<Opts9>();
    auto* cls_cmd = cmd->add_subcommand("classify", "Per-component PSNR consistency report");
    cls_cmd->add_option("--in", cls->in, "video .ften")->required();
    cls_cmd->add_option("--out", cls->out, "report CSV")->required();
    cls_cmd->add_option("--threshold", cls->threshold, "dB threshold");
    cls_cmd->add_option("--peak", cls->peak, "range|one");
    cls_cmd->callback([cls] {
        const freepca::PeakMode peak = cls->peak == "one" ? freepca::PeakMode::One
                                                          : freepca::PeakMode::Range;
        const freepca::ConsistencyReport report =
            freepca::classify_components(freepca::read_video(cls->in), cls->threshold, peak);
        freepca::write_consistency_csv(report, cls->out);
        write_run_manifest(cls->out + ".manifest.json", "analyze-classify",
                           hash_artifacts({fs::path(cls->out)}));
        std::cout << freepca::to_string(report.video_class) << " ("
                  << report.consistent_count() << " consistent of "
                  << report.per_component.size() << ")\n";
    });

    struct Opts10 {
        std::string dir, out, peak = "range";
        double threshold = freepca::kDefaultConsistencyThresholdDb;
    };
    auto batch = std::make_shared<Opts10>();
    auto* batch_cmd = cmd->add_subcommand("classify-batch", "Classify every .ften in a directory");
    batch_cmd->add_option("--dir", batch->dir)->required();
    batch_cmd->add_option("--out", batch->out, "batch CSV")->required();
    batch_cmd->add_option("--threshold", batch->threshold);
    batch_cmd->add_option("--peak", batch->peak, "range|one");
    batch_cmd->callback([batch] {
        std::vector<fs::path> inputs;
        for (const auto& entry : fs::directory_iterator(batch->dir)) {
            if (entry.path().extension() == ".ften") inputs.push_back(entry.path());
        }
        std::sort(inputs.begin(), inputs.end());
        const freepca::PeakMode peak = batch->peak == "one" ? freepca::PeakMode::One
                                                            : freepca::PeakMode::Range;
        std::ofstream out(batch->out, std::ios::trunc);
        if (!out) throw freepca::IoError("cannot open " + batch->out);
        out << "video,class,n_consistent\n";
        for (const fs::path& p : inputs) {
            const freepca::ConsistencyReport report =
                freepca::classify_components(freepca::read_video(p.string()), batch->threshold,
                                             peak);
            out << p.filename().string() << ',' << freepca::to_string(report.video_class) << ','
                << report.consistent_count() << '\n';
        }
        out.close();
        write_run_manifest(batch->out + ".manifest.json", "analyze-classify-batch",
                           hash_artifacts({fs::path(batch->out)}));
        std::cout << "classified " << inputs.size() << " videos\n";
    });

    struct Opts11 {
        std::string in, out;
        double sigma = 1.4, low = 0.1, high = 0.2;
    };
    auto edges = std::make_shared<Opts11>();
    auto* edges_cmd = cmd->add_subcommand("edges", "Edge overlay across frames (PGM)");
    edges_cmd->add_option("--in", edges->in, "video .ften")->required();
    edges_cmd->add_option("--out", edges->out, "PGM path")->required();
    edges_cmd->add_option("--sigma", edges->sigma, "Gaussian blur sigma");
    edges_cmd->add_option("--low", edges->low, "low hysteresis ratio");
    edges_cmd->add_option("--high", edges->high, "high hysteresis ratio");
    edges_cmd->callback([edges] {
        const freepca::EdgeParams params{edges->sigma, edges->low, edges->high};
        const freepca::GrayImage overlay =
            freepca::edge_overlay(freepca::read_video(edges->in), params);
        freepca::write_pgm(overlay, edges->out);
        write_run_manifest(edges->out + ".manifest.json", "analyze-edges",
                           hash_artifacts({fs::path(edges->out)}));
        std::cout << "edge pixels: " << freepca::nonzero_pixels(overlay) << "\n";
    });

    struct Opts12 {
        std::string in, out_dir;
    };
    auto tdiff = std::make_shared<Opts12>();
    auto* tdiff_cmd = cmd->add_subcommand("tdiff", "Adjacent-frame intensity maps (PGM + CSV)");
    tdiff_cmd->add_option("--in", tdiff->in, "video .ften")->required();
    tdiff_cmd->add_option("--out-dir", tdiff->out_dir)->required();
    tdiff_cmd->callback([tdiff] {
        const freepca::VideoTensor video = freepca::read_video(tdiff->in);
        const freepca::VideoTensor diffs = freepca::temporal_diff(video);
        fs::create_directories(tdiff->out_dir);

        double max_value = 0.0;
        for (double v : diffs.data) max_value = std::max(max_value, v);
        const double scale = max_value > 0.0 ? 1.0 / max_value : 1.0;

        std::vector<fs::path> artifacts;
        const fs::path stats_path = fs::path(tdiff->out_dir) / "stats.csv";
        std::ofstream stats(stats_path, std::ios::trunc);
        stats << "slice,mean_abs\n";
        stats.precision(17);
        for (std::size_t t = 0; t < diffs.frames; ++t) {
            freepca::GrayImage img{diffs.height, diffs.width,
                                   std::vector<double>(diffs.height * diffs.width, 0.0)};
            double slice_sum = 0.0;
            for (std::size_t y = 0; y < diffs.height; ++y)
                for (std::size_t x = 0; x < diffs.width; ++x) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < diffs.channels; ++c)
                        acc += diffs.at(t, y, x, c);
                    acc /= static_cast<double>(diffs.channels);
                    img.at(y, x) = acc * scale;
                    slice_sum += acc;
                }
            char name[32];
            std::snprintf(name, sizeof name, "diff_%03zu.pgm", t);
            const fs::path p = fs::path(tdiff->out_dir) / name;
            freepca::write_pgm(img, p.string());
            artifacts.push_back(p);
            stats << t << ','
                  << slice_sum / static_cast<double>(diffs.height * diffs.width) << '\n';
        }
        stats.close();
        artifacts.push_back(stats_path);
        write_run_manifest(fs::path(tdiff->out_dir) / "manifest.json", "analyze-tdiff",
                           hash_artifacts(artifacts));
        std::cout << "mean |diff| = " << freepca::mean_abs(diffs.data) << "\n";
    });

    struct Opts13 {
        std::string in, out;
        std::size_t component = 0;
    };
    auto comp = std::make_shared<Opts13>();
    auto* comp_cmd = cmd->add_subcommand("component", "Single-component reconstruction video");
    comp_cmd->add_option("--in", comp->in, "video .ften")->required();
    comp_cmd->add_option("--out", comp->out, "video .ften")->required();
    comp_cmd->add_option("--component", comp->component)->required();
    comp_cmd->callback([comp] {
        const freepca::VideoTensor video = freepca::read_video(comp->in);
        freepca::write_video(freepca::per_component_video(video, comp->component), comp->out);
        write_run_manifest(comp->out + ".manifest.json", "analyze-component",
                           hash_artifacts({fs::path(comp->out)}));
        std::cout << "wrote " << comp->out << "\n";
    });
}

}  // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);

    CLI::App app{"PCA-based temporal feature decoupling for long video sequences"};
    app.require_subcommand(1);
    add_synth(app);
    add_noise_init(app);
    add_pca(app);
    add_decompose(app);
    add_fuse(app);
    add_demo(app);
    add_analyze(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // usage errors and --help
    } catch (const freepca::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return kExitShape;
    } catch (const freepca::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const freepca::ValueError& e) {
        std::cerr << "value error: " << e.what() << "\n";
        return kExitValue;
    } catch (const freepca::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const freepca::PlanError& e) {
        std::cerr << "plan error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const freepca::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const freepca::ConsistencyError& e) {
        std::cerr << "consistency error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const freepca::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnexpected;
    }
    return kExitOk;
}
