// racig: retrieval-augmented multi-subject generation pipeline, desk scale.
//
// Exit codes:
//   0   success
//   64  usage error (bad flags or arguments)
//   65  validation error (schema, shape, range, or stage failure)
//   66  missing or unreadable input file
//   70  internal error
//   74  file format error (bad magic, truncation, dimension mismatch)
// Failures print {"error":{"kind":...,"message":...}} to stderr.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "racig/racig.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 64;
constexpr int kExitValidation = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitInternal = 70;
constexpr int kExitFormat = 74;

void emit_error(const char* kind, const std::string& message, const std::string& stage = "") {
    racig::JsonWriter w;
    w.begin_object();
    w.key("error").begin_object();
    w.key("kind").value(kind);
    if (!stage.empty()) {
        w.key("stage").value(stage);
    }
    w.key("message").value(message);
    w.end_object();
    w.end_object();
    std::fprintf(stderr, "%s\n", w.str().c_str());
}

void write_output(const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) {
        std::fputs(payload.c_str(), stdout);
        std::fputc('\n', stdout);
        return;
    }
    std::ofstream os(out_path, std::ios::binary);
    if (!os) {
        throw racig::IoError("cannot open " + out_path + " for writing");
    }
    os << payload << "\n";
}

racig::RetrievalIndex load_index_dir(const std::string& dir) {
    return racig::build_index(dir + "/manifest.jsonl", dir + "/features.bin");
}

std::unique_ptr<racig::RegionScorer> make_scorer(const std::string& name, uint64_t seed,
                                                 size_t dim) {
    if (name == "oracle") {
        return std::make_unique<racig::OracleScorer>();
    }
    if (name == "stub") {
        return std::make_unique<racig::StubScorer>(seed, dim);
    }
    throw racig::ValidationError("unknown scorer \"" + name + "\" (expected oracle or stub)");
}

std::string hex64(uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct CommonArgs {
    std::string index_dir = ".";
    std::string out_path;
};

int cmd_index_build(const CommonArgs& common, const std::string& manifest,
                    const std::string& features) {
    racig::RetrievalIndex index = racig::build_index(manifest, features);
    racig::JsonWriter w;
    w.begin_object();
    w.key("count").value(static_cast<uint64_t>(index.count()));
    w.key("dim").value(static_cast<uint64_t>(index.dim));
    w.key("feature_checksum").value(hex64(racig::fnv1a64_file(features)));
    w.end_object();
    write_output(common.out_path, w.str());
    return kExitOk;
}

int cmd_index_query(const CommonArgs& common, const std::string& prompt, size_t top_m,
                    uint64_t seed, bool choose) {
    racig::RetrievalIndex index = load_index_dir(common.index_dir);
    racig::TextEncoder enc{seed ^ racig::kStageTextEmbed, index.dim};
    std::vector<double> query = enc.encode(prompt);
    std::vector<racig::ScoredId> hits = racig::mult_and_rank(query, index, top_m);
    racig::JsonWriter w;
    w.begin_object();
    w.key("shortlist").begin_array();
    for (const racig::ScoredId& hit : hits) {
        w.begin_object();
        w.key("id").value(hit.id);
        w.key("score").value(hit.score);
        w.end_object();
    }
    w.end_array();
    if (choose) {
        std::vector<std::string> ids;
        for (const racig::ScoredId& hit : hits) ids.push_back(hit.id);
        w.key("chosen").value(racig::random_choose(ids, seed ^ racig::kStageShortlistChoose));
    }
    w.end_object();
    write_output(common.out_path, w.str());
    return kExitOk;
}

int cmd_fixtures_gen(const std::string& out_dir, const racig::FixtureParams& params) {
    racig::RetrievalIndex index = racig::fixtures_gen(params, out_dir);
    racig::JsonWriter w;
    w.begin_object();
    w.key("out").value(out_dir);
    w.key("count").value(static_cast<uint64_t>(index.count()));
    w.key("dim").value(static_cast<uint64_t>(index.dim));
    w.end_object();
    std::fputs(w.str().c_str(), stdout);
    std::fputc('\n', stdout);
    return kExitOk;
}

int cmd_assign(const CommonArgs& common, const std::string& prompt, const std::string& record_id,
               const std::string& scorer_name, uint64_t seed) {
    racig::RetrievalIndex index = load_index_dir(common.index_dir);
    const racig::MsdbRecord& record = index.find_record(record_id);
    std::unique_ptr<racig::RegionScorer> scorer = make_scorer(scorer_name, seed, 64);
    racig::Assignment assignment = racig::assign(prompt, record, *scorer);
    racig::JsonWriter w;
    w.begin_object();
    w.key("perm").begin_array();
    for (size_t v : assignment.perm) w.value(static_cast<uint64_t>(v));
    w.end_array();
    w.key("scores").begin_array();
    for (size_t r = 0; r < assignment.scores.rows(); r++) {
        w.begin_array();
        for (size_t c = 0; c < assignment.scores.cols(); c++) {
            w.value(assignment.scores.at(r, c));
        }
        w.end_array();
    }
    w.end_array();
    w.end_object();
    write_output(common.out_path, w.str());
    return kExitOk;
}

struct RunOverrides {
    std::string config_path;
    std::string scorer_name = "oracle";
    std::string emit_dir;
    std::vector<std::string> ref_faces;
    std::vector<std::string> ref_bodies;
    // CLI11 marks these present; values land in the config afterwards.
    uint64_t seed = 0;
    size_t steps = 0;
    double cfg_scale = 0.0;
    size_t shortlist_m = 0;
    size_t d_model = 0;
    size_t grid_h = 0;
    size_t grid_w = 0;
    size_t max_characters = 0;
    double control_lambda = 0.0;
    std::string merge_mode;
    std::string preserve_mode;
};

int cmd_run(const CommonArgs& common, const std::string& prompt, const RunOverrides& ov,
            const CLI::App* cmd) {
    racig::PipelineConfig cfg;
    if (!ov.config_path.empty()) {
        cfg = racig::load_pipeline_config(ov.config_path);
    }
    if (cmd->count("--seed")) cfg.seed = ov.seed;
    if (cmd->count("--steps")) cfg.steps = ov.steps;
    if (cmd->count("--cfg-scale")) cfg.cfg_scale = ov.cfg_scale;
    if (cmd->count("--shortlist-m")) cfg.shortlist_m = ov.shortlist_m;
    if (cmd->count("--d-model")) cfg.d_model = ov.d_model;
    if (cmd->count("--grid-h")) cfg.grid_h = ov.grid_h;
    if (cmd->count("--grid-w")) cfg.grid_w = ov.grid_w;
    if (cmd->count("--max-characters")) cfg.max_characters = ov.max_characters;
    if (cmd->count("--control-lambda")) cfg.control_lambda = ov.control_lambda;
    if (cmd->count("--merge-mode")) {
        cfg.merge_mode = racig::detail::merge_mode_from_string(ov.merge_mode);
    }
    if (cmd->count("--preserve-mode")) {
        cfg.preserve_mode = racig::detail::control_mode_from_string(ov.preserve_mode);
    }
    cfg.validate();

    if (ov.ref_faces.size() != ov.ref_bodies.size()) {
        throw racig::ValidationError("--ref-face and --ref-body must be given in pairs");
    }
    std::vector<racig::CharacterRefs> refs;
    for (size_t i = 0; i < ov.ref_faces.size(); i++) {
        racig::CharacterRefs r;
        r.face = racig::load_pgm(ov.ref_faces[i]);
        r.body = racig::load_pgm(ov.ref_bodies[i]);
        refs.push_back(std::move(r));
    }

    racig::RetrievalIndex index = load_index_dir(common.index_dir);
    std::unique_ptr<racig::RegionScorer> scorer =
        make_scorer(ov.scorer_name, cfg.seed, cfg.d_model);
    if (!ov.emit_dir.empty()) {
        std::filesystem::create_directories(ov.emit_dir);
    }
    racig::RunReport report =
        racig::run_pipeline(cfg, index, prompt, refs, *scorer, ov.emit_dir);
    std::string payload = report.to_json();
    racig::validate_report(payload);
    write_output(common.out_path, payload);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "racig: deterministic retrieval-augmented multi-subject generation pipeline.\n"
        "Exit codes: 0 ok, 64 usage, 65 validation, 66 missing input, 70 internal, 74 format."};
    app.require_subcommand(1);

    CommonArgs common;

    // index build / index query
    CLI::App* index_cmd = app.add_subcommand("index", "Build or query a retrieval index");
    index_cmd->require_subcommand(1);
    CLI::App* build_cmd = index_cmd->add_subcommand("build", "Validate a manifest + feature bank");
    std::string manifest_path, features_path;
    build_cmd->add_option("--manifest", manifest_path, "Manifest (JSON lines) path")->required();
    build_cmd->add_option("--features", features_path, "Feature bank path")->required();
    build_cmd->add_option("--out", common.out_path, "Write summary JSON here instead of stdout");

    CLI::App* query_cmd = index_cmd->add_subcommand("query", "Rank records against a prompt");
    std::string prompt;
    size_t top_m = 5;
    uint64_t seed = 0;
    bool choose = false;
    query_cmd->add_option("--index", common.index_dir,
                          "Index directory (manifest.jsonl + features.bin)");
    query_cmd->add_option("--prompt", prompt, "Query prompt")->required();
    query_cmd->add_option("--top-m", top_m, "Shortlist size");
    query_cmd->add_option("--seed", seed, "Seed for embedding and choice");
    query_cmd->add_flag("--choose", choose, "Also pick one shortlist entry at random");
    query_cmd->add_option("--out", common.out_path, "Write JSON here instead of stdout");

    // fixtures gen
    CLI::App* fixtures_cmd = app.add_subcommand("fixtures", "Synthetic corpus generation");
    fixtures_cmd->require_subcommand(1);
    CLI::App* gen_cmd = fixtures_cmd->add_subcommand("gen", "Generate a deterministic corpus");
    std::string fixtures_out;
    racig::FixtureParams fixture_params;
    gen_cmd->add_option("--out", fixtures_out, "Output directory")->required();
    gen_cmd->add_option("--count", fixture_params.count, "Number of records");
    gen_cmd->add_option("--seed", fixture_params.seed, "Generator seed");
    gen_cmd->add_option("--num-chars", fixture_params.num_chars, "Characters per record (1 or 2)");
    gen_cmd->add_option("--dim", fixture_params.dim, "Feature dimension");
    gen_cmd->add_option("--image-width", fixture_params.image_width, "Fixture image width");
    gen_cmd->add_option("--image-height", fixture_params.image_height, "Fixture image height");

    // assign
    CLI::App* assign_cmd = app.add_subcommand("assign", "Assign prompt characters to regions");
    std::string record_id, scorer_name = "oracle";
    assign_cmd->add_option("--index", common.index_dir, "Index directory");
    assign_cmd->add_option("--prompt", prompt, "Prompt text")->required();
    assign_cmd->add_option("--record", record_id, "Record id to assign against")->required();
    assign_cmd->add_option("--scorer", scorer_name, "oracle | stub");
    assign_cmd->add_option("--seed", seed, "Stub scorer seed");
    assign_cmd->add_option("--out", common.out_path, "Write JSON here instead of stdout");

    // run
    CLI::App* run_cmd = app.add_subcommand("run", "Full pipeline: retrieve, assign, inject loop");
    RunOverrides ov;
    run_cmd->add_option("--index", common.index_dir, "Index directory");
    run_cmd->add_option("--prompt", prompt, "Prompt text")->required();
    run_cmd->add_option("--config", ov.config_path, "Pipeline config JSON")
        ->envname("RACIG_CONFIG");
    run_cmd->add_option("--seed", ov.seed, "Run seed");
    run_cmd->add_option("--steps", ov.steps, "Denoising steps");
    run_cmd->add_option("--cfg-scale", ov.cfg_scale, "Classifier-free guidance scale");
    run_cmd->add_option("--shortlist-m", ov.shortlist_m, "Retrieval shortlist size");
    run_cmd->add_option("--d-model", ov.d_model, "Latent channel width");
    run_cmd->add_option("--grid-h", ov.grid_h, "Latent grid height");
    run_cmd->add_option("--grid-w", ov.grid_w, "Latent grid width");
    run_cmd->add_option("--max-characters", ov.max_characters, "Assignment arity cap");
    run_cmd->add_option("--control-lambda", ov.control_lambda, "Skeleton conditioning strength");
    run_cmd->add_option("--merge-mode", ov.merge_mode, "normalized | paper_literal");
    run_cmd->add_option("--preserve-mode", ov.preserve_mode, "strict | paper_literal");
    run_cmd->add_option("--scorer", ov.scorer_name, "oracle | stub");
    run_cmd->add_option("--emit-latents", ov.emit_dir, "Dump per-step latent tensors here");
    run_cmd->add_option("--ref-face", ov.ref_faces, "Reference face crop (repeat per character)");
    run_cmd->add_option("--ref-body", ov.ref_bodies, "Reference body crop (repeat per character)");
    run_cmd->add_option("--out", common.out_path, "Write report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return kExitUsage;
    }

    try {
        if (build_cmd->parsed()) {
            return cmd_index_build(common, manifest_path, features_path);
        }
        if (query_cmd->parsed()) {
            return cmd_index_query(common, prompt, top_m, seed, choose);
        }
        if (gen_cmd->parsed()) {
            return cmd_fixtures_gen(fixtures_out, fixture_params);
        }
        if (assign_cmd->parsed()) {
            return cmd_assign(common, prompt, record_id, scorer_name, seed);
        }
        if (run_cmd->parsed()) {
            return cmd_run(common, prompt, ov, run_cmd);
        }
        emit_error("usage", "no subcommand given");
        return kExitUsage;
    } catch (const racig::StageError& e) {
        emit_error("stage", e.what(), e.stage);
        return kExitValidation;
    } catch (const racig::FormatError& e) {
        emit_error("format", e.what());
        return kExitFormat;
    } catch (const racig::IoError& e) {
        emit_error("io", e.what());
        return kExitNoInput;
    } catch (const racig::ValidationError& e) {
        emit_error("validation", e.what());
        return kExitValidation;
    } catch (const racig::ShapeError& e) {
        emit_error("validation", e.what());
        return kExitValidation;
    } catch (const racig::RangeError& e) {
        emit_error("validation", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return kExitInternal;
    }
}
