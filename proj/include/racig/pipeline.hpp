#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "racig/assign.hpp"
#include "racig/control.hpp"
#include "racig/encoders.hpp"
#include "racig/index.hpp"
#include "racig/inject.hpp"
#include "racig/json_out.hpp"
#include "racig/schedule.hpp"

namespace racig {

// Every random stream is SplitMix64(seed ^ stage constant), so each stage
// reproduces on its own. Constants are "RCIG" in the high half plus a
// stage ordinal.
inline constexpr uint64_t kStageTextEmbed = UINT64_C(0x5243494700000001);
inline constexpr uint64_t kStageShortlistChoose = UINT64_C(0x5243494700000002);
inline constexpr uint64_t kStageWeights = UINT64_C(0x5243494700000003);
inline constexpr uint64_t kStageIdentity = UINT64_C(0x5243494700000004);
inline constexpr uint64_t kStageCondText = UINT64_C(0x5243494700000005);
inline constexpr uint64_t kStageInitLatent = UINT64_C(0x5243494700000006);
inline constexpr uint64_t kStageStepNoise = UINT64_C(0x5243494700000007);

inline constexpr uint32_t kReportVersion = 1;

struct PipelineConfig {
    size_t steps = kDefaultSteps;
    double cfg_scale = 2.5;
    size_t grid_h = 96;
    size_t grid_w = 56;
    size_t d_model = 64;
    size_t shortlist_m = 5;
    uint64_t seed = 0;
    MergeMode merge_mode = MergeMode::normalized;
    ControlMode preserve_mode = ControlMode::paper_literal;
    double control_lambda = 1.0;
    size_t max_characters = 2;
    std::vector<double> alpha_bar;  // empty: linear default over `steps`

    void validate() const {
        if (steps < 1) {
            throw ValidationError("steps must be at least 1");
        }
        if (!(cfg_scale >= 0.0)) {
            throw ValidationError("cfg_scale must be nonnegative");
        }
        if (grid_h < 8 || grid_w < 8) {
            throw ValidationError("latent grid dimensions must be at least 8");
        }
        if (d_model < 1 || shortlist_m < 1 || max_characters < 1) {
            throw ValidationError("d_model, shortlist_m and max_characters must be positive");
        }
        if (!alpha_bar.empty() && alpha_bar.size() != steps) {
            throw ValidationError("alpha_bar overrides " + std::to_string(alpha_bar.size()) +
                                  " steps, config declares " + std::to_string(steps));
        }
    }

    Schedule schedule() const {
        if (!alpha_bar.empty()) {
            return Schedule(alpha_bar);
        }
        return Schedule::linear(steps, kDefaultAlphaBarHigh, kDefaultAlphaBarLow);
    }
};

namespace detail {

inline MergeMode merge_mode_from_string(const std::string& s) {
    if (s == "normalized") return MergeMode::normalized;
    if (s == "paper_literal") return MergeMode::paper_literal;
    throw ValidationError("unknown merge_mode \"" + s + "\"");
}

inline ControlMode control_mode_from_string(const std::string& s) {
    if (s == "strict") return ControlMode::strict_preserve;
    if (s == "paper_literal") return ControlMode::paper_literal;
    throw ValidationError("unknown preserve_mode \"" + s + "\"");
}

}  // namespace detail

// Strict parse: unknown keys are schema violations, not typo traps.
inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
    static const char* kKnown[] = {"steps",      "cfg_scale",     "latent_grid", "d_model",
                                   "shortlist_m", "seed",          "merge_mode",  "preserve_mode",
                                   "control_lambda", "max_characters", "alpha_bar"};
    if (!j.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : kKnown) {
            if (item.key() == k) known = true;
        }
        if (!known) {
            throw ValidationError("unknown config key \"" + item.key() + "\"");
        }
    }
    PipelineConfig cfg;
    try {
        if (j.contains("steps")) cfg.steps = j.at("steps").get<size_t>();
        if (j.contains("cfg_scale")) cfg.cfg_scale = j.at("cfg_scale").get<double>();
        if (j.contains("latent_grid")) {
            const auto& grid = j.at("latent_grid");
            if (!grid.is_array() || grid.size() != 2) {
                throw ValidationError("latent_grid must be [h, w]");
            }
            cfg.grid_h = grid.at(0).get<size_t>();
            cfg.grid_w = grid.at(1).get<size_t>();
        }
        if (j.contains("d_model")) cfg.d_model = j.at("d_model").get<size_t>();
        if (j.contains("shortlist_m")) cfg.shortlist_m = j.at("shortlist_m").get<size_t>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
        if (j.contains("merge_mode")) {
            cfg.merge_mode = detail::merge_mode_from_string(j.at("merge_mode").get<std::string>());
        }
        if (j.contains("preserve_mode")) {
            cfg.preserve_mode =
                detail::control_mode_from_string(j.at("preserve_mode").get<std::string>());
        }
        if (j.contains("control_lambda")) cfg.control_lambda = j.at("control_lambda").get<double>();
        if (j.contains("max_characters")) cfg.max_characters = j.at("max_characters").get<size_t>();
        if (j.contains("alpha_bar")) cfg.alpha_bar = j.at("alpha_bar").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open config " + path);
    }
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return parse_pipeline_config(j);
}

inline void write_config_json(JsonWriter& w, const PipelineConfig& cfg) {
    w.begin_object();
    w.key("steps").value(static_cast<uint64_t>(cfg.steps));
    w.key("cfg_scale").value(cfg.cfg_scale);
    w.key("latent_grid")
        .begin_array()
        .value(static_cast<uint64_t>(cfg.grid_h))
        .value(static_cast<uint64_t>(cfg.grid_w))
        .end_array();
    w.key("d_model").value(static_cast<uint64_t>(cfg.d_model));
    w.key("shortlist_m").value(static_cast<uint64_t>(cfg.shortlist_m));
    w.key("seed").value(cfg.seed);
    w.key("merge_mode").value(to_string(cfg.merge_mode));
    w.key("preserve_mode").value(to_string(cfg.preserve_mode));
    w.key("control_lambda").value(cfg.control_lambda);
    w.key("max_characters").value(static_cast<uint64_t>(cfg.max_characters));
    if (!cfg.alpha_bar.empty()) {
        w.key("alpha_bar").begin_array();
        for (double ab : cfg.alpha_bar) w.value(ab);
        w.end_array();
    }
    w.end_object();
}

// Reference crops for one prompt character. Empty rasters mean "use the
// crops of the region this character was assigned to".
struct CharacterRefs {
    Raster face;
    Raster body;
};

struct StepDiag {
    size_t step = 0;
    std::vector<BranchDiag> branches;
    double latent_l2 = 0.0;
};

struct FinalChecksum {
    double sum = 0.0;
    double l2 = 0.0;
    std::vector<double> region_means;
};

struct RunReport {
    uint32_t version = kReportVersion;
    std::string prompt;
    uint64_t seed = 0;
    PipelineConfig config;
    std::vector<ScoredId> shortlist;
    std::string retrieved_id;
    Assignment assignment;
    std::vector<StepDiag> steps;
    FinalChecksum final;

    std::string to_json() const {
        JsonWriter w;
        w.begin_object();
        w.key("report_version").value(static_cast<uint64_t>(version));
        w.key("prompt").value(prompt);
        w.key("seed").value(seed);
        w.key("config");
        write_config_json(w, config);
        w.key("retrieval").begin_object();
        w.key("shortlist").begin_array();
        for (const ScoredId& hit : shortlist) {
            w.begin_object();
            w.key("id").value(hit.id);
            w.key("score").value(hit.score);
            w.end_object();
        }
        w.end_array();
        w.key("retrieved_id").value(retrieved_id);
        w.end_object();
        w.key("assignment").begin_object();
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
        w.key("steps").begin_array();
        for (const StepDiag& sd : steps) {
            w.begin_object();
            w.key("step").value(static_cast<uint64_t>(sd.step));
            w.key("branches").begin_array();
            for (const BranchDiag& bd : sd.branches) {
                w.begin_object();
                w.key("l2").value(bd.l2);
                w.key("coverage").value(bd.coverage);
                w.end_object();
            }
            w.end_array();
            w.key("latent_l2").value(sd.latent_l2);
            w.end_object();
        }
        w.end_array();
        w.key("final").begin_object();
        w.key("sum").value(final.sum);
        w.key("l2").value(final.l2);
        w.key("region_means").begin_array();
        for (double m : final.region_means) w.value(m);
        w.end_array();
        w.end_object();
        w.end_object();
        return w.str();
    }
};

// Structural check against the shipped report schema: required keys,
// types, and cross-field arities.
inline void validate_report(const std::string& report_json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(report_json);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report is not valid JSON: ") + e.what());
    }
    auto need = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
        if (!obj.is_object() || !obj.contains(key)) {
            throw ValidationError(std::string("report missing key \"") + key + "\"");
        }
        return obj.at(key);
    };
    if (need(j, "report_version").get<uint64_t>() != kReportVersion) {
        throw ValidationError("unsupported report_version");
    }
    need(j, "prompt");
    need(j, "seed");
    need(j, "config");
    const nlohmann::json& retrieval = need(j, "retrieval");
    need(retrieval, "shortlist");
    need(retrieval, "retrieved_id");
    const nlohmann::json& assignment = need(j, "assignment");
    const nlohmann::json& perm = need(assignment, "perm");
    const nlohmann::json& scores = need(assignment, "scores");
    if (!perm.is_array() || !scores.is_array() || perm.size() != scores.size()) {
        throw ValidationError("assignment perm and scores disagree");
    }
    const nlohmann::json& steps = need(j, "steps");
    if (!steps.is_array() || steps.empty()) {
        throw ValidationError("report has no steps");
    }
    for (const auto& sd : steps) {
        need(sd, "step");
        need(sd, "branches");
        need(sd, "latent_l2");
    }
    const nlohmann::json& final_sum = need(j, "final");
    need(final_sum, "sum");
    need(final_sum, "l2");
    const nlohmann::json& means = need(final_sum, "region_means");
    if (!means.is_array() || means.size() != perm.size()) {
        throw ValidationError("region_means arity does not match assignment");
    }
}

namespace detail {

inline Tensor gaussian_tensor(std::vector<size_t> shape, uint64_t seed) {
    Tensor t = Tensor::zeros(std::move(shape));
    SplitMix64 rng(seed);
    for (double& v : t.data) v = rng.next_gaussian();
    return t;
}

template <typename F>
auto run_stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace detail

// Full pipeline: embed -> rank -> choose -> assign -> extract identities ->
// conditioning loop -> report. Pure function of (index, config, prompt,
// refs, scorer); every failure surfaces as a StageError naming the stage.
inline RunReport run_pipeline(const PipelineConfig& cfg, const RetrievalIndex& index,
                              const std::string& prompt, const std::vector<CharacterRefs>& refs,
                              const RegionScorer& scorer, const std::string& emit_dir = "") {
    cfg.validate();
    RunReport report;
    report.prompt = prompt;
    report.seed = cfg.seed;
    report.config = cfg;

    std::vector<double> query = detail::run_stage("embed_text", [&] {
        TextEncoder enc{cfg.seed ^ kStageTextEmbed, index.dim};
        return enc.encode(prompt);
    });

    report.shortlist = detail::run_stage("mult_and_rank", [&] {
        return mult_and_rank(query, index, cfg.shortlist_m);
    });

    const MsdbRecord* record = detail::run_stage("random_choose", [&] {
        std::vector<std::string> ids;
        ids.reserve(report.shortlist.size());
        for (const ScoredId& hit : report.shortlist) ids.push_back(hit.id);
        report.retrieved_id = random_choose(ids, cfg.seed ^ kStageShortlistChoose);
        return &index.find_record(report.retrieved_id);
    });

    report.assignment = detail::run_stage("assign", [&] {
        return assign(prompt, *record, scorer, cfg.max_characters);
    });

    const size_t n_chars = report.assignment.perm.size();
    if (!refs.empty() && refs.size() != n_chars) {
        throw StageError("extract_identity",
                         "got " + std::to_string(refs.size()) + " reference crop pairs for " +
                             std::to_string(n_chars) + " prompt characters");
    }
    std::vector<CharacterFeatures> feats = detail::run_stage("extract_identity", [&] {
        std::vector<CharacterFeatures> out;
        for (size_t k = 0; k < n_chars; k++) {
            ImageEncoder enc{(cfg.seed ^ kStageIdentity) + 2 * k, 4, cfg.d_model};
            const Raster* face = &record->characters[report.assignment.perm[k]].ref_face;
            const Raster* body = &record->characters[report.assignment.perm[k]].ref_body;
            if (!refs.empty() && !refs[k].face.empty()) face = &refs[k].face;
            if (!refs.empty() && !refs[k].body.empty()) body = &refs[k].body;
            CharacterFeatures cf = extract_disentangled(*face, *body, enc);
            cf.source_char = k;
            out.push_back(std::move(cf));
        }
        return out;
    });

    HmsiConfig hmsi;
    Tensor c_text;
    Schedule sched;
    detail::run_stage("conditioning", [&] {
        hmsi.grid_h = cfg.grid_h;
        hmsi.grid_w = cfg.grid_w;
        hmsi.weights = AttentionWeights::from_seed(cfg.seed ^ kStageWeights, cfg.d_model,
                                                   cfg.d_model);
        hmsi.control = ControlConfig::make(cfg.control_lambda, cfg.d_model);
        hmsi.preserve_mode = cfg.preserve_mode;
        hmsi.merge_mode = cfg.merge_mode;
        TextEncoder enc{cfg.seed ^ kStageCondText, cfg.d_model};
        c_text = Tensor({1, cfg.d_model}, enc.encode(prompt));
        sched = cfg.schedule();
        return 0;
    });

    Tensor z = detail::run_stage("denoise_loop", [&] {
        const size_t cells = cfg.grid_h * cfg.grid_w;
        Tensor latent =
            detail::gaussian_tensor({cells, cfg.d_model}, cfg.seed ^ kStageInitLatent);
        Tensor zero_text = Tensor::zeros(c_text.shape);
        std::vector<CharacterFeatures> zero_feats = feats;
        for (CharacterFeatures& cf : zero_feats) {
            cf.f_face = Tensor::zeros(cf.f_face.shape);
            cf.f_body = Tensor::zeros(cf.f_body.shape);
        }
        for (size_t s = cfg.steps; s-- > 0;) {
            HmsiResult cond = hmsi_step(hmsi, *record, report.assignment, feats, latent, c_text);
            HmsiResult uncond =
                hmsi_step(hmsi, *record, report.assignment, zero_feats, latent, zero_text);
            Tensor mixed = cfg_mix(uncond.latent, cond.latent, cfg.cfg_scale);
            Tensor eps = detail::gaussian_tensor(mixed.shape, (cfg.seed ^ kStageStepNoise) + s);
            latent = forward_noise(mixed, s, sched, eps);

            StepDiag diag;
            diag.step = s;
            diag.branches = cond.branches;
            diag.latent_l2 = l2_norm(latent);
            report.steps.push_back(std::move(diag));

            if (!emit_dir.empty()) {
                char name[32];
                std::snprintf(name, sizeof(name), "step_%02zu.rct", s);
                save_tensor((std::filesystem::path(emit_dir) / name).string(), latent);
            }
        }
        return latent;
    });

    detail::run_stage("checksum", [&] {
        report.final.sum = sum(z);
        report.final.l2 = l2_norm(z);
        for (size_t k = 0; k < n_chars; k++) {
            SubjectMasks masks =
                make_subject_masks(record->characters[report.assignment.perm[k]], cfg.grid_h,
                                   cfg.grid_w);
            double total = 0.0;
            size_t covered = 0;
            for (size_t r = 0; r < z.rows(); r++) {
                if (masks.union_mask.data[r] == 0.0) continue;
                covered++;
                for (size_t c = 0; c < z.cols(); c++) total += z.at(r, c);
            }
            report.final.region_means.push_back(
                covered == 0 ? 0.0 : total / (static_cast<double>(covered * z.cols())));
        }
        return 0;
    });

    return report;
}

}  // namespace racig
