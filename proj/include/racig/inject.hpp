#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "racig/assign.hpp"
#include "racig/attention.hpp"
#include "racig/control.hpp"
#include "racig/encoders.hpp"
#include "racig/msdb.hpp"
#include "racig/raster.hpp"
#include "racig/tensor.hpp"

namespace racig {

// Seed offset between the face-path and body-path identity encoders; the
// two paths are distinct adapters, never the same stream.
inline constexpr uint64_t kFaceBodySeedOffset = 0x1000;

struct CharacterFeatures {
    Tensor f_face;
    Tensor f_body;
    size_t source_char = 0;
};

// Per-subject masks on the latent grid, values in {0,1} after majority
// downsampling. union is a keyword; the field is union_mask.
struct SubjectMasks {
    Tensor face;
    Tensor body;
    Tensor union_mask;

    void validate() const {
        if (!face.same_shape(body) || !face.same_shape(union_mask)) {
            throw ShapeError("subject mask shapes differ");
        }
        for (size_t i = 0; i < face.data.size(); i++) {
            double f = face.data[i];
            double b = body.data[i];
            double u = union_mask.data[i];
            if (f < 0.0 || f > 1.0 || b < 0.0 || b > 1.0) {
                throw RangeError("mask value outside [0, 1]");
            }
            if (f * b != 0.0) {
                throw ValidationError("face and body masks overlap at cell " + std::to_string(i));
            }
            double expect = std::min(f + b, 1.0);
            if (u != expect) {
                throw ValidationError("union mask is not face + body at cell " + std::to_string(i));
            }
        }
    }
};

// Shared per-step conditioning: the same z_t, global c_text, skeleton term
// and weights feed every subject's branch.
struct BranchInputs {
    Tensor z_t;
    Tensor c_text;
    Tensor skel_feature;
    AttentionWeights weights;
};

enum class MergeMode {
    normalized,
    paper_literal,
};

inline const char* to_string(MergeMode m) {
    return m == MergeMode::normalized ? "normalized" : "paper_literal";
}

// Face and body crops go through independently seeded encoder stubs; the
// body path reuses the face path's geometry with the seed shifted by
// kFaceBodySeedOffset.
inline CharacterFeatures extract_disentangled(const Raster& ref_face, const Raster& ref_body,
                                              const ImageEncoder& encoder) {
    ImageEncoder body_path = encoder;
    body_path.seed = encoder.seed + kFaceBodySeedOffset;
    CharacterFeatures feats;
    feats.f_face = encoder.encode(ref_face);
    feats.f_body = body_path.encode(ref_body);
    return feats;
}

// Majority-vote downsample of a character's pixel masks onto the latent
// grid. Cells where downsampling maps face and body together keep the face
// bit, so disjointness survives the resolution change.
inline SubjectMasks make_subject_masks(const CharacterRegion& region, size_t grid_h,
                                       size_t grid_w) {
    SubjectMasks masks;
    masks.face = downsample_majority(region.face_mask, grid_h, grid_w);
    masks.body = downsample_majority(region.body_mask, grid_h, grid_w);
    masks.union_mask = Tensor::zeros({grid_h, grid_w});
    for (size_t i = 0; i < masks.face.data.size(); i++) {
        if (masks.face.data[i] != 0.0 && masks.body.data[i] != 0.0) {
            masks.body.data[i] = 0.0;
        }
        masks.union_mask.data[i] = masks.face.data[i] != 0.0 || masks.body.data[i] != 0.0 ? 1.0 : 0.0;
    }
    return masks;
}

// f'_face = Attention(z, f_face, f_face), f'_body likewise (z through w_q,
// features through the image-branch keys/values), blended per latent cell
// as face*f'_face + body*f'_body.
inline Tensor fuse_face_body(const Tensor& z, const CharacterFeatures& feats,
                             const SubjectMasks& masks, const AttentionWeights& w) {
    masks.validate();
    if (masks.face.data.size() != z.rows()) {
        throw ShapeError("mask grid has " + std::to_string(masks.face.data.size()) +
                         " cells but latent has " + std::to_string(z.rows()) + " rows");
    }
    const size_t d = w.inner_dim();
    Tensor q = matmul(z, w.w_q);
    Tensor f_face = attention(q, matmul(feats.f_face, w.w_k_prime),
                              matmul(feats.f_face, w.w_v_prime), d);
    Tensor f_body = attention(q, matmul(feats.f_body, w.w_k_prime),
                              matmul(feats.f_body, w.w_v_prime), d);
    Tensor out = Tensor::zeros(z.shape);
    for (size_t r = 0; r < z.rows(); r++) {
        double mf = masks.face.data[r];
        double mb = masks.body.data[r];
        for (size_t c = 0; c < z.cols(); c++) {
            out.at(r, c) = mf * f_face.at(r, c) + mb * f_body.at(r, c);
        }
    }
    return out;
}

// One subject's branch: z_t plus the text cross-attention term, the masked
// identity term, and the skeleton control term, in that order.
inline Tensor build_branch(const BranchInputs& inputs, const CharacterFeatures& feats,
                           const SubjectMasks& masks) {
    const AttentionWeights& w = inputs.weights;
    const size_t d = w.inner_dim();
    Tensor q = matmul(inputs.z_t, w.w_q);
    Tensor text_term = attention(q, matmul(inputs.c_text, w.w_k),
                                 matmul(inputs.c_text, w.w_v), d);
    Tensor fused = fuse_face_body(inputs.z_t, feats, masks, w);
    return add(add(add(inputs.z_t, text_term), fused), inputs.skel_feature);
}

// Mask-weighted merge. normalized: per cell, the weight-averaged blend of
// covering branches, uncovered cells fall back to base. paper_literal: the
// raw masked sum, which zeroes the background and double-counts overlaps.
inline Tensor merge_branches(const std::vector<Tensor>& branches, const std::vector<Tensor>& unions,
                             const Tensor& base, MergeMode mode = MergeMode::normalized) {
    if (branches.empty()) {
        throw ValidationError("no branches to merge");
    }
    if (branches.size() != unions.size()) {
        throw ShapeError("branch count " + std::to_string(branches.size()) +
                         " does not match mask count " + std::to_string(unions.size()));
    }
    const size_t n = base.rows();
    const size_t dm = base.cols();
    for (size_t i = 0; i < branches.size(); i++) {
        if (!branches[i].same_shape(base)) {
            throw ShapeError("branch " + std::to_string(i) + " shape differs from base");
        }
        if (unions[i].data.size() != n) {
            throw ShapeError("union mask " + std::to_string(i) + " has " +
                             std::to_string(unions[i].data.size()) + " cells, latent has " +
                             std::to_string(n) + " rows");
        }
    }
    Tensor out = Tensor::zeros(base.shape);
    for (size_t r = 0; r < n; r++) {
        double weight = 0.0;
        for (const Tensor& m : unions) weight += m.data[r];
        for (size_t c = 0; c < dm; c++) {
            double acc = 0.0;
            for (size_t i = 0; i < branches.size(); i++) {
                acc += unions[i].data[r] * branches[i].at(r, c);
            }
            if (mode == MergeMode::paper_literal) {
                out.at(r, c) = acc;
            } else {
                out.at(r, c) = weight > 0.0 ? acc / weight : base.at(r, c);
            }
        }
    }
    return out;
}

// Max-confidence splat of every person's keypoints onto the latent grid.
inline Tensor rasterize_skeleton(const std::vector<Skeleton>& skeletons, size_t image_w,
                                 size_t image_h, size_t grid_h, size_t grid_w) {
    if (image_w == 0 || image_h == 0) {
        throw ShapeError("rasterize_skeleton: image dimensions must be positive");
    }
    Tensor out = Tensor::zeros({grid_h, grid_w});
    for (const Skeleton& person : skeletons) {
        for (const Keypoint& kp : person) {
            if (kp.confidence <= 0.0) continue;
            double fx = std::min(std::max(kp.x, 0.0), static_cast<double>(image_w) - 1.0);
            double fy = std::min(std::max(kp.y, 0.0), static_cast<double>(image_h) - 1.0);
            size_t cx = static_cast<size_t>(fx) * grid_w / image_w;
            size_t cy = static_cast<size_t>(fy) * grid_h / image_h;
            double& cell = out.at(cy, cx);
            cell = std::max(cell, kp.confidence);
        }
    }
    return out;
}

// Cell value replicated across channels so the control term is
// latent-shaped.
inline Tensor lift_to_channels(const Tensor& grid, size_t d_model) {
    Tensor out = Tensor::zeros({grid.data.size(), d_model});
    for (size_t r = 0; r < grid.data.size(); r++) {
        for (size_t c = 0; c < d_model; c++) {
            out.at(r, c) = grid.data[r];
        }
    }
    return out;
}

struct HmsiConfig {
    size_t grid_h = 0;
    size_t grid_w = 0;
    AttentionWeights weights;
    ControlConfig control;
    ControlMode preserve_mode = ControlMode::paper_literal;
    MergeMode merge_mode = MergeMode::normalized;
};

struct BranchDiag {
    double l2 = 0.0;
    double coverage = 0.0;
};

struct HmsiResult {
    Tensor latent;
    std::vector<BranchDiag> branches;
};

// The skeleton control term shared by every branch of a step: all persons
// rasterized together, lifted to channels, through control_combine against
// a zero original.
inline Tensor skeleton_term(const MsdbRecord& record, const HmsiConfig& cfg, size_t d_model) {
    Tensor raster =
        rasterize_skeleton(record.skeleton, record.image_width, record.image_height, cfg.grid_h,
                           cfg.grid_w);
    Tensor lifted = lift_to_channels(raster, d_model);
    return control_combine(Tensor::zeros(lifted.shape), lifted, cfg.control, cfg.preserve_mode);
}

// One HMSI step: a branch per subject, character k's identity routed to
// region perm[k], all branches sharing z_t, c_text and the skeleton term,
// merged under the subjects' union masks. Uncovered cells come from the
// text-plus-skeleton-only base branch.
inline HmsiResult hmsi_step(const HmsiConfig& cfg, const MsdbRecord& record,
                            const Assignment& assignment,
                            const std::vector<CharacterFeatures>& all_feats, const Tensor& z_t,
                            const Tensor& c_text) {
    const size_t n_subjects = assignment.perm.size();
    if (n_subjects == 0) {
        throw ValidationError("assignment has no subjects");
    }
    if (n_subjects != all_feats.size() || n_subjects != record.characters.size()) {
        throw ValidationError("arity mismatch: " + std::to_string(n_subjects) +
                              " assigned characters, " + std::to_string(all_feats.size()) +
                              " feature sets, " + std::to_string(record.characters.size()) +
                              " regions");
    }
    const size_t cells = cfg.grid_h * cfg.grid_w;
    if (z_t.rows() != cells) {
        throw ShapeError("latent has " + std::to_string(z_t.rows()) + " rows, grid has " +
                         std::to_string(cells) + " cells");
    }
    const size_t d_model = z_t.cols();

    BranchInputs inputs;
    inputs.z_t = z_t;
    inputs.c_text = c_text;
    inputs.skel_feature = skeleton_term(record, cfg, d_model);
    inputs.weights = cfg.weights;

    std::vector<SubjectMasks> region_masks;
    region_masks.reserve(record.characters.size());
    for (const CharacterRegion& region : record.characters) {
        region_masks.push_back(make_subject_masks(region, cfg.grid_h, cfg.grid_w));
    }

    HmsiResult result;
    std::vector<Tensor> branches;
    std::vector<Tensor> unions;
    for (size_t k = 0; k < n_subjects; k++) {
        if (assignment.perm[k] >= region_masks.size()) {
            throw RangeError("assignment routes character " + std::to_string(k) +
                             " to region " + std::to_string(assignment.perm[k]) +
                             ", record has " + std::to_string(region_masks.size()));
        }
        const SubjectMasks& masks = region_masks[assignment.perm[k]];
        Tensor branch = build_branch(inputs, all_feats[k], masks);
        BranchDiag diag;
        diag.l2 = l2_norm(branch);
        diag.coverage = sum(masks.union_mask) / static_cast<double>(cells);
        result.branches.push_back(diag);
        unions.push_back(masks.union_mask);
        branches.push_back(std::move(branch));
    }

    SubjectMasks zero_masks;
    zero_masks.face = Tensor::zeros({cfg.grid_h, cfg.grid_w});
    zero_masks.body = zero_masks.face;
    zero_masks.union_mask = zero_masks.face;
    Tensor base = build_branch(inputs, all_feats[0], zero_masks);

    result.latent = merge_branches(branches, unions, base, cfg.merge_mode);
    return result;
}

}  // namespace racig
