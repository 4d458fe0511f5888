#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "racig/index.hpp"
#include "racig/msdb.hpp"
#include "racig/raster.hpp"
#include "racig/rng.hpp"

namespace racig {

struct FixtureParams {
    uint64_t seed = 1;
    size_t count = 20;
    size_t num_chars = 2;
    size_t image_width = 96;
    size_t image_height = 64;
    size_t dim = 64;
};

namespace detail {

// Pixel-space slot for one character. Slots never touch, so union masks
// stay disjoint after any even-width latent downsample.
struct CharSlot {
    size_t x0, x1, y0, y1;
};

inline std::vector<CharSlot> char_slots(size_t w, size_t h, size_t num_chars) {
    size_t margin_y = h / 16 + 1;
    std::vector<CharSlot> slots;
    if (num_chars == 1) {
        slots.push_back({w / 8, w - w / 8, margin_y, h - margin_y});
    } else {
        size_t margin_x = w / 24 + 1;
        slots.push_back({margin_x, w / 2 - margin_x, margin_y, h - margin_y});
        slots.push_back({w / 2 + margin_x, w - margin_x, margin_y, h - margin_y});
    }
    return slots;
}

inline void fill_rect(Raster& r, size_t x0, size_t x1, size_t y0, size_t y1) {
    for (size_t y = y0; y < y1; y++) {
        for (size_t x = x0; x < x1; x++) {
            r.at(x, y) = 255;
        }
    }
}

inline Raster noise_crop(size_t w, size_t h, uint8_t base, SplitMix64& rng) {
    Raster crop(w, h);
    for (uint8_t& p : crop.pixels) {
        p = static_cast<uint8_t>(base + rng.next_below(64));
    }
    return crop;
}

inline Skeleton slot_skeleton(const CharSlot& slot, SplitMix64& rng) {
    Skeleton sk;
    double w = static_cast<double>(slot.x1 - slot.x0);
    double h = static_cast<double>(slot.y1 - slot.y0);
    for (Keypoint& kp : sk) {
        kp.x = static_cast<double>(slot.x0) + rng.next_double() * w;
        kp.y = static_cast<double>(slot.y0) + rng.next_double() * h;
        kp.confidence = 0.5 + 0.5 * rng.next_double();
    }
    return sk;
}

inline std::string fixture_caption(size_t record, size_t num_chars) {
    static const char* kPairVerbs[] = {"hugs",  "waves at",    "argues with",
                                       "lifts", "runs beside", "greets"};
    static const char* kSoloVerbs[] = {"dances", "jumps", "stretches", "waves", "kneels", "spins"};
    if (num_chars == 1) {
        return std::string("Character 1 ") + kSoloVerbs[record % 6] + ".";
    }
    return std::string("Character 1 ") + kPairVerbs[record % 6] + " Character 2.";
}

}  // namespace detail

// Builds one deterministic synthetic record. Characters occupy disjoint
// slots; the caption's character k lives in region gt_perm[k], so gt_perm is
// the planted assignment truth.
inline MsdbRecord make_fixture_record(const FixtureParams& p, size_t record_index) {
    if (p.count < 1) {
        throw ValidationError("fixture count must be at least 1");
    }
    if (p.num_chars != 1 && p.num_chars != 2) {
        throw ValidationError("unsupported num_chars " + std::to_string(p.num_chars) +
                              ": the assignment head is a 2-class classifier");
    }
    if (p.image_width < 48 || p.image_height < 32) {
        throw ValidationError("fixture image size too small for character slots");
    }

    SplitMix64 rng(p.seed ^ (UINT64_C(0x9E3779B97F4A7C15) * (record_index + 1)));
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "r%05zu", record_index);

    MsdbRecord rec;
    rec.id = idbuf;
    rec.caption = detail::fixture_caption(record_index, p.num_chars);
    rec.image_width = p.image_width;
    rec.image_height = p.image_height;

    rec.gt_perm.resize(p.num_chars);
    for (size_t k = 0; k < p.num_chars; k++) rec.gt_perm[k] = k;
    if (p.num_chars == 2 && rng.next_below(2) == 1) {
        std::swap(rec.gt_perm[0], rec.gt_perm[1]);
    }

    std::vector<detail::CharSlot> slots =
        detail::char_slots(p.image_width, p.image_height, p.num_chars);
    rec.characters.resize(p.num_chars);
    rec.skeleton.resize(p.num_chars);
    for (size_t k = 0; k < p.num_chars; k++) {
        // Caption character k sits in region index gt_perm[k]; the region
        // list is ordered by slot, left to right.
        size_t region = rec.gt_perm[k];
        const detail::CharSlot& slot = slots[region];
        CharacterRegion& cr = rec.characters[region];

        size_t face_h = (slot.y1 - slot.y0) / 3;
        cr.face_mask = Raster(p.image_width, p.image_height);
        cr.body_mask = Raster(p.image_width, p.image_height);
        detail::fill_rect(cr.face_mask, slot.x0, slot.x1, slot.y0, slot.y0 + face_h);
        detail::fill_rect(cr.body_mask, slot.x0, slot.x1, slot.y0 + face_h + 1, slot.y1);

        uint8_t base = static_cast<uint8_t>(32 + 96 * k);
        cr.ref_face = detail::noise_crop(32, 32, base, rng);
        cr.ref_body = detail::noise_crop(32, 48, base, rng);

        rec.skeleton[region] = detail::slot_skeleton(slot, rng);
    }

    rec.feature.resize(p.dim);
    double norm = 0.0;
    for (double& v : rec.feature) {
        v = rng.next_gaussian();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : rec.feature) v /= norm;
    return rec;
}

// Writes manifest.jsonl, features.bin and rasters/ under out_dir. Output is
// a pure function of params, bitwise identical across runs.
inline RetrievalIndex fixtures_gen(const FixtureParams& p, const std::string& out_dir) {
    RetrievalIndex index;
    index.dim = p.dim;
    for (size_t i = 0; i < p.count; i++) {
        MsdbRecord rec = make_fixture_record(p, i);
        for (double v : rec.feature) {
            index.bank.push_back(static_cast<float>(v));
        }
        // In-memory features mirror what build_index reconstructs from the
        // f32 bank, so save -> load round-trips bitwise.
        const float* row = &index.bank[i * p.dim];
        double norm = 0.0;
        for (size_t k = 0; k < p.dim; k++) {
            rec.feature[k] = static_cast<double>(row[k]);
            norm += rec.feature[k] * rec.feature[k];
        }
        norm = std::sqrt(norm);
        for (double& v : rec.feature) v /= norm;
        validate_record(rec);
        index.records.push_back(std::move(rec));
    }
    save_index(index, out_dir);
    return index;
}

}  // namespace racig
