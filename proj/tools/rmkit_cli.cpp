// Command-line front end: gen, perturb, trace, encode, export, baseline, eval, pipeline.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "rmkit/rmkit.hpp"

namespace {

using namespace rmkit;

void log_line(const std::string& s) { std::cerr << s << '\n'; }

json load_config(const std::string& path) { return path.empty() ? json::object() : read_json_file(path); }

/// A dataset root (containing scenes/) or a plain scene directory.
fs::path scene_dir(const fs::path& p) { return fs::is_directory(p / layout::kScenes) ? p / layout::kScenes : p; }

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

void write_text(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::trunc);
    f << s;
}

/// Clean samples straight from a maps directory; the transmitter comes from each
/// map's sidecar and no environment is attached.
std::vector<EvalSample> samples_from_maps(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".rmtf") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<EvalSample> out;
    for (const auto& f : files) {
        const json meta = read_json_file(sidecar_path(f));
        EvalSample s;
        s.ground_truth = read_radio_map(f);
        s.sample_id = s.ground_truth.id;
        s.base_scene_id = meta.value("scene_id", "");
        s.tx_index = 0;
        s.scene.id = s.base_scene_id;
        Transmitter tx;
        tx.position = vec3_from_json(meta.at("tx").at("position"));
        tx.frequency_hz = meta.at("tx").value("frequency_hz", tx.frequency_hz);
        s.scene.transmitters.push_back(tx);
        out.push_back(std::move(s));
    }
    return out;
}

DatasetManifest checked_manifest(const fs::path& root) {
    DatasetManifest m = read_manifest(root);
    const auto v = verify_manifest(m, root);
    if (!v.empty()) {
        for (const auto& x : v) log_line("manifest: " + x.rule + " " + x.path + " " + x.message);
        throw ManifestError("manifest has " + std::to_string(v.size()) + " violation(s); run export --check");
    }
    return m;
}

void export_observations(const std::vector<EvalSample>& samples, const EvalConfig& cfg, const fs::path& dir) {
    for (const auto& s : samples) {
        for (double f : cfg.fractions) {
            for (int d = 0; d < cfg.draws_per_sample; ++d) {
                const ObservationSet obs = cell_observations(s, f, d, cfg.master_seed);
                json entries = json::array();
                for (const auto& o : obs.entries) entries.push_back({o.row, o.col, o.path_loss_db});
                write_json_file(dir / (cell_stem(s.sample_id, f, d) + ".json"),
                                {{"sample_id", s.sample_id},
                                 {"fraction", f},
                                 {"draw", d},
                                 {"source_map_id", obs.source_map_id},
                                 {"entries", entries}});
            }
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Indoor radio-map dataset synthesis and evaluation"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate furnished rooms");
    std::string gen_config, gen_out;
    int gen_count = 20;
    gen->add_option("--config", gen_config, "generator config JSON");
    gen->add_option("--count", gen_count, "number of scenes")->check(CLI::PositiveNumber);
    gen->add_option("--out-dir", gen_out, "dataset root")->required();

    // perturb
    auto* per = app.add_subcommand("perturb", "write noisy copies of clean scenes");
    std::string per_config, per_in, per_out, per_targets, per_warn;
    double per_offset = -1.0;
    int per_copies = -1;
    per->add_option("--config", per_config, "perturbation config JSON");
    per->add_option("--in-dir", per_in, "scene directory or dataset root")->required();
    per->add_option("--out-dir", per_out, "output scene directory or dataset root")->required();
    per->add_option("--mean-offset", per_offset, "mean planar offset, meters");
    per->add_option("--targets", per_targets, "subset of tx,objects,materials");
    per->add_option("--copies", per_copies, "copies per scene");
    per->add_option("--warnings", per_warn, "JSON-lines sidecar for fallback warnings");

    // trace
    auto* tr = app.add_subcommand("trace", "trace ground-truth radio maps");
    std::string tr_scenes, tr_config, tr_out;
    bool tr_dump = false;
    int tr_threads = -1;
    tr->add_option("--scenes", tr_scenes, "scene directory or dataset root")->required();
    tr->add_option("--config", tr_config, "trace config JSON");
    tr->add_option("--out-dir", tr_out, "map output directory")->required();
    tr->add_flag("--dump-paths", tr_dump, "write propagation paths as JSON lines");
    tr->add_option("--threads", tr_threads, "worker threads (0 = all cores)");

    // encode
    auto* enc = app.add_subcommand("encode", "rasterize environments and transmitters");
    std::string enc_dataset, enc_config, enc_encoding;
    enc->add_option("--dataset", enc_dataset, "dataset root")->required();
    enc->add_option("--config", enc_config, "encode config JSON");
    enc->add_option("--encoding", enc_encoding, "binary | classes | material_properties | no_env");

    // export
    auto* exp = app.add_subcommand("export", "build and check the dataset manifest");
    std::string exp_dataset;
    bool exp_check = false;
    std::uint64_t exp_seed = 2024;
    exp->add_option("--dataset", exp_dataset, "dataset root")->required();
    exp->add_flag("--check", exp_check, "verify and exit non-zero on violations");
    exp->add_option("--split-seed", exp_seed, "seed for the grouped 80/10/10 split");

    // baseline
    auto* base = app.add_subcommand("baseline", "evaluate a classical baseline on traced maps");
    std::string base_method = "grbf", base_maps, base_fractions = "0,0.01,0.02,0.04,0.08,0.16", base_out,
                base_rbf;
    int base_seeds = 10;
    std::uint64_t base_master = 2024;
    base->add_option("--method", base_method, "fspl | grbf | tps")->check(CLI::IsMember({"fspl", "grbf", "tps"}));
    base->add_option("--maps", base_maps, "maps directory or dataset root")->required();
    base->add_option("--fractions", base_fractions, "comma-separated observation fractions");
    base->add_option("--seeds", base_seeds, "observation draws per map")->check(CLI::PositiveNumber);
    base->add_option("--master-seed", base_master, "master seed of the observation streams");
    base->add_option("--rbf-config", base_rbf, "RBF config JSON");
    base->add_option("--out", base_out, "report JSON")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "observation-fraction curves and sensitivity sweeps");
    std::string ev_pred, ev_dataset, ev_config, ev_out, ev_export, ev_rbf;
    bool ev_sweep = false;
    ev->add_option("--predictor", ev_pred, "fspl | grbf | tps | rt | cnn:PATH | noenv-cnn:PATH")->required();
    ev->add_option("--dataset", ev_dataset, "dataset root")->required();
    ev->add_option("--config", ev_config, "eval config JSON");
    ev->add_option("--rbf-config", ev_rbf, "RBF config JSON");
    ev->add_option("--out", ev_out, "report directory")->required();
    ev->add_flag("--sweep", ev_sweep, "also run the perturbation-severity sweep");
    ev->add_option("--export-inputs", ev_export, "write the observation set of every cell as JSON");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "gen -> perturb -> trace -> encode -> manifest");
    std::string pipe_out, pipe_gen, pipe_per, pipe_tr, pipe_enc;
    int pipe_scenes = 20;
    bool pipe_no_encode = false;
    pipe->add_option("--out-dir", pipe_out, "dataset root")->required();
    pipe->add_option("--scenes", pipe_scenes, "number of base scenes")->check(CLI::PositiveNumber);
    pipe->add_option("--gen-config", pipe_gen);
    pipe->add_option("--perturb-config", pipe_per);
    pipe->add_option("--trace-config", pipe_tr);
    pipe->add_option("--encode-config", pipe_enc);
    pipe->add_flag("--no-encode", pipe_no_encode);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const GenConfig c = gen_config_from_json(load_config(gen_config));
            const auto ids = gen_stage(gen_out, c, gen_count);
            const DatasetManifest m = build_manifest(gen_out);
            write_manifest(gen_out, m);
            std::cout << "generated " << ids.size() << " scenes, " << m.samples.size() << " samples\n";
        } else if (*per) {
            PerturbConfig c = perturb_config_from_json(load_config(per_config));
            if (per_offset >= 0.0) c.mean_offset_m = per_offset;
            if (!per_targets.empty()) c.targets = PerturbTargets::parse(per_targets);
            if (per_copies > 0) c.copies_per_scene = per_copies;
            const fs::path out_dir = fs::exists(per_out) ? scene_dir(per_out) : fs::path(per_out);
            const fs::path warn = per_warn.empty() ? out_dir / "perturb_warnings.jsonl" : fs::path(per_warn);
            const auto r = perturb_stage(scene_dir(per_in), out_dir, c, warn);
            if (fs::is_directory(fs::path(per_out) / layout::kScenes)) {
                write_json_file(fs::path(per_out) / layout::kConfig / "perturb.json", to_json(c));
            }
            std::cout << "wrote " << r.copies << " noisy scenes; " << r.warnings.size() << " fallback warnings over "
                      << r.draws << " offset draws\n";
        } else if (*tr) {
            TraceConfig c = trace_config_from_json(load_config(tr_config));
            if (tr_threads >= 0) c.threads = tr_threads;
            const auto n = trace_stage(scene_dir(tr_scenes), tr_out, c, tr_dump, log_line);
            if (fs::is_directory(fs::path(tr_scenes) / layout::kScenes)) {
                write_json_file(fs::path(tr_scenes) / layout::kConfig / "trace.json", to_json(c));
            }
            std::cout << "traced " << n << " maps\n";
        } else if (*enc) {
            EncodeConfig c = encode_config_from_json(load_config(enc_config));
            if (!enc_encoding.empty()) c.encoding = encoding_from_string(enc_encoding);
            std::cout << "encoded " << encode_stage(enc_dataset, c) << " samples\n";
        } else if (*exp) {
            const DatasetManifest m = build_manifest(exp_dataset, {{}, exp_seed});
            write_manifest(exp_dataset, m);
            std::cout << "manifest: " << m.samples.size() << " samples\n";
            if (exp_check) {
                const auto v = verify_manifest(m, exp_dataset);
                for (const auto& x : v) std::cout << x.rule << '\t' << x.path << '\t' << x.message << '\n';
                std::cout << (v.empty() ? "check passed\n" : "check failed\n");
                if (!v.empty()) return 1;
            }
        } else if (*base) {
            EvalConfig cfg;
            cfg.fractions = parse_list(base_fractions);
            cfg.draws_per_sample = base_seeds;
            cfg.split.reset();
            cfg.master_seed = base_master;
            std::vector<EvalSample> samples;
            if (fs::exists(fs::path(base_maps) / layout::kManifest)) {
                samples = load_eval_samples(checked_manifest(base_maps), base_maps, cfg);
            } else {
                samples = samples_from_maps(base_maps);
            }
            PredictorContext ctx;
            if (!base_rbf.empty()) ctx.rbf = rbf_config_from_json(read_json_file(base_rbf));
            const CurveTable t = curve_eval(make_predictor(base_method, ctx), samples, cfg, base_method);
            json report = to_json(t);
            report["samples"] = samples.size();
            report["config"] = to_json(cfg);
            write_json_file(base_out, report);
            std::cout << to_csv(t);
        } else if (*ev) {
            const EvalConfig cfg = eval_config_from_json(load_config(ev_config));
            const DatasetManifest m = checked_manifest(ev_dataset);
            PredictorContext ctx;
            if (m.config.contains("trace")) ctx.trace = trace_config_from_json(m.config.at("trace"));
            if (!ev_rbf.empty()) ctx.rbf = rbf_config_from_json(read_json_file(ev_rbf));
            const auto samples = load_eval_samples(m, ev_dataset, cfg);
            if (!ev_export.empty()) export_observations(samples, cfg, ev_export);
            const Predictor p = make_predictor(ev_pred, ctx);
            const fs::path out(ev_out);
            const CurveTable t = curve_eval(p, samples, cfg, ev_pred);
            json report = to_json(t);
            report["samples"] = samples.size();
            report["input_condition"] = to_string(cfg.input_condition);
            report["config"] = to_json(cfg);
            write_json_file(out / "curve.json", report);
            write_text(out / "curve.csv", to_csv(t));
            std::cout << to_csv(t);
            if (ev_sweep) {
                EvalConfig clean = cfg;
                clean.input_condition = InputCondition::clean;
                PerturbConfig base_pc;
                if (m.config.contains("perturb")) base_pc = perturb_config_from_json(m.config.at("perturb"));
                const SweepTable s =
                    sensitivity_sweep(p, load_eval_samples(m, ev_dataset, clean), clean, base_pc, ev_pred);
                write_json_file(out / "sweep.json", to_json(s));
                write_text(out / "sweep.csv", to_csv(s));
                std::cout << to_csv(s);
            }
        } else if (*pipe) {
            PipelineConfig c;
            c.scenes = pipe_scenes;
            c.gen = gen_config_from_json(load_config(pipe_gen));
            c.perturb = perturb_config_from_json(load_config(pipe_per));
            c.trace = trace_config_from_json(load_config(pipe_tr));
            c.encode = encode_config_from_json(load_config(pipe_enc));
            if (!c.encode.slice_top_m) c.encode.slice_top_m = c.gen.room_height.hi;
            c.run_encode = !pipe_no_encode;
            const PipelineReport r = run_pipeline(pipe_out, c, log_line);
            std::cout << "scenes " << r.scenes << ", noisy " << r.noisy_scenes << ", maps " << r.maps << ", samples "
                      << r.manifest.samples.size() << ", violations " << r.violations.size() << '\n';
            if (!r.violations.empty()) return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
