#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "racig/json_out.hpp"
#include "racig/msdb.hpp"
#include "racig/rng.hpp"
#include "racig/tensor.hpp"

namespace racig {

// Feature bank format:
//   magic   8 bytes  "MSDBFTR\0"
//   version u32 LE   (1)
//   count   u64 LE
//   dim     u32 LE
//   rows    count x dim f32 LE, row-major; row i starts at 24 + 4*dim*i
inline constexpr char kBankMagic[8] = {'M', 'S', 'D', 'B', 'F', 'T', 'R', '\0'};
inline constexpr uint32_t kBankVersion = 1;
inline constexpr size_t kBankHeaderSize = 24;

// f32 storage cannot hold unit norm to 1e-9; bank rows are accepted within
// this pre-normalization tolerance and renormalized in f64 on load.
inline constexpr double kBankUnitTolerance = 1e-6;

// Immutable after build: records plus the raw f32 bank rows they came from
// (kept verbatim so save round-trips bitwise). records[i].feature is the
// f64 renormalization of bank row i.
struct RetrievalIndex {
    std::vector<MsdbRecord> records;
    std::vector<float> bank;
    size_t dim = 0;

    size_t count() const { return records.size(); }

    Tensor feature_matrix() const {
        std::vector<double> data;
        data.reserve(records.size() * dim);
        for (const MsdbRecord& rec : records) {
            data.insert(data.end(), rec.feature.begin(), rec.feature.end());
        }
        return Tensor({records.size(), dim}, std::move(data));
    }

    const MsdbRecord& find_record(const std::string& id) const {
        for (const MsdbRecord& rec : records) {
            if (rec.id == id) return rec;
        }
        throw ValidationError("no record with id " + id);
    }
};

struct ScoredId {
    std::string id;
    double score = 0.0;
};

inline uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    uint64_t h = UINT64_C(14695981039346656037);
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); i++) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= UINT64_C(1099511628211);
        }
        if (!is) break;
    }
    return h;
}

inline void write_feature_bank(const std::string& path, size_t count, size_t dim,
                               const float* rows) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open " + path + " for writing");
    }
    os.write(kBankMagic, 8);
    detail::put_u32(os, kBankVersion);
    detail::put_u64(os, count);
    detail::put_u32(os, static_cast<uint32_t>(dim));
    for (size_t i = 0; i < count * dim; i++) {
        uint32_t bits;
        std::memcpy(&bits, &rows[i], 4);
        detail::put_u32(os, bits);
    }
}

struct FeatureBank {
    std::vector<float> rows;
    size_t count = 0;
    size_t dim = 0;
};

inline FeatureBank read_feature_bank(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kBankMagic, 8) != 0) {
        throw FormatError("bad magic in " + path + ": not a feature bank");
    }
    uint32_t version = detail::get_u32(is, path);
    if (version != kBankVersion) {
        throw FormatError("unsupported feature bank version " + std::to_string(version) + " in " +
                          path);
    }
    uint64_t count = detail::get_u64(is, path);
    uint32_t dim = detail::get_u32(is, path);
    uint64_t file_size = std::filesystem::file_size(path);
    uint64_t expected = kBankHeaderSize + 4 * count * dim;
    if (file_size != expected) {
        throw FormatError("dimension mismatch in " + path + ": header declares count=" +
                          std::to_string(count) + " dim=" + std::to_string(dim) + " (" +
                          std::to_string(expected) + " bytes) but file has " +
                          std::to_string(file_size) + " bytes; payload starts at offset " +
                          std::to_string(kBankHeaderSize));
    }
    if (dim == 0 && count > 0) {
        throw FormatError("dimension mismatch in " + path + ": zero dim with nonzero count");
    }
    FeatureBank bank;
    bank.count = count;
    bank.dim = dim;
    bank.rows.resize(count * dim);
    for (size_t i = 0; i < bank.rows.size(); i++) {
        uint32_t bits = detail::get_u32(is, path + ": truncated payload");
        std::memcpy(&bank.rows[i], &bits, 4);
    }
    return bank;
}

namespace detail {

inline Keypoint keypoint_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw FormatError("keypoint must be an [x, y, confidence] triple");
    }
    Keypoint kp;
    kp.x = j[0].get<double>();
    kp.y = j[1].get<double>();
    kp.confidence = j[2].get<double>();
    return kp;
}

inline std::string raster_name(const std::string& id, size_t region, const char* part) {
    return "rasters/" + id + "_c" + std::to_string(region) + "_" + part + ".pgm";
}

}  // namespace detail

// One manifest line per record; raster files referenced by path relative to
// the manifest's directory. gt_perm is optional.
inline void write_manifest_line(JsonWriter& w, const MsdbRecord& rec) {
    w.begin_object();
    w.key("id").value(rec.id);
    w.key("caption").value(rec.caption);
    w.key("image_size").begin_array().value(rec.image_width).value(rec.image_height).end_array();
    w.key("skeleton").begin_array();
    for (const Skeleton& person : rec.skeleton) {
        w.begin_array();
        for (const Keypoint& kp : person) {
            w.begin_array().value(kp.x).value(kp.y).value(kp.confidence).end_array();
        }
        w.end_array();
    }
    w.end_array();
    w.key("characters").begin_array();
    for (size_t i = 0; i < rec.characters.size(); i++) {
        w.begin_object();
        w.key("face_mask").value(detail::raster_name(rec.id, i, "face_mask"));
        w.key("body_mask").value(detail::raster_name(rec.id, i, "body_mask"));
        w.key("ref_face").value(detail::raster_name(rec.id, i, "ref_face"));
        w.key("ref_body").value(detail::raster_name(rec.id, i, "ref_body"));
        w.end_object();
    }
    w.end_array();
    if (!rec.gt_perm.empty()) {
        w.key("gt_perm").begin_array();
        for (size_t v : rec.gt_perm) w.value(v);
        w.end_array();
    }
    w.end_object();
}

inline RetrievalIndex build_index(const std::string& manifest_path, const std::string& bank_path) {
    FeatureBank bank = read_feature_bank(bank_path);
    std::ifstream is(manifest_path);
    if (!is) {
        throw IoError("cannot open " + manifest_path);
    }
    const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

    RetrievalIndex index;
    index.dim = bank.dim;
    index.bank = bank.rows;

    std::set<std::string> ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        line_no++;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(manifest_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        MsdbRecord rec;
        try {
            rec.id = j.at("id").get<std::string>();
            rec.caption = j.at("caption").get<std::string>();
            rec.image_width = j.at("image_size").at(0).get<size_t>();
            rec.image_height = j.at("image_size").at(1).get<size_t>();
            for (const auto& person : j.at("skeleton")) {
                if (person.size() != kCocoKeypointCount) {
                    throw ValidationError("skeleton must have " +
                                          std::to_string(kCocoKeypointCount) + " keypoints");
                }
                Skeleton sk;
                for (size_t k = 0; k < kCocoKeypointCount; k++) {
                    sk[k] = detail::keypoint_from_json(person[k]);
                }
                rec.skeleton.push_back(sk);
            }
            for (const auto& ch : j.at("characters")) {
                CharacterRegion region;
                region.face_mask = load_pgm((base / ch.at("face_mask").get<std::string>()).string());
                region.body_mask = load_pgm((base / ch.at("body_mask").get<std::string>()).string());
                region.ref_face = load_pgm((base / ch.at("ref_face").get<std::string>()).string());
                region.ref_body = load_pgm((base / ch.at("ref_body").get<std::string>()).string());
                rec.characters.push_back(std::move(region));
            }
            if (j.contains("gt_perm")) {
                rec.gt_perm = j.at("gt_perm").get<std::vector<size_t>>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(manifest_path + ":" + std::to_string(line_no) +
                              ": bad record schema: " + e.what());
        }
        if (!ids.insert(rec.id).second) {
            throw ValidationError("duplicate record id " + rec.id + " in " + manifest_path);
        }
        index.records.push_back(std::move(rec));
    }

    if (index.records.size() != bank.count) {
        throw ValidationError("count mismatch: manifest has " +
                              std::to_string(index.records.size()) + " records but " + bank_path +
                              " declares " + std::to_string(bank.count));
    }

    for (size_t i = 0; i < index.records.size(); i++) {
        MsdbRecord& rec = index.records[i];
        const float* row = &bank.rows[i * bank.dim];
        double norm = 0.0;
        rec.feature.resize(bank.dim);
        for (size_t k = 0; k < bank.dim; k++) {
            rec.feature[k] = static_cast<double>(row[k]);
            norm += rec.feature[k] * rec.feature[k];
        }
        norm = std::sqrt(norm);
        if (std::abs(norm - 1.0) > kBankUnitTolerance) {
            throw ValidationError("non-unit feature row for record " + rec.id + " (norm " +
                                  fmt_double17(norm) + ")");
        }
        for (double& v : rec.feature) v /= norm;
        validate_record(rec);
    }
    return index;
}

// Writes manifest.jsonl, features.bin and rasters/ under out_dir using
// canonical raster names. Loading the result reproduces the index bitwise.
inline void save_index(const RetrievalIndex& index, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "rasters");

    std::ofstream manifest(fs::path(out_dir) / "manifest.jsonl");
    if (!manifest) {
        throw IoError("cannot open manifest in " + out_dir + " for writing");
    }
    for (const MsdbRecord& rec : index.records) {
        JsonWriter w;
        write_manifest_line(w, rec);
        manifest << w.str() << "\n";
        for (size_t i = 0; i < rec.characters.size(); i++) {
            const CharacterRegion& region = rec.characters[i];
            const fs::path root(out_dir);
            save_pgm((root / detail::raster_name(rec.id, i, "face_mask")).string(), region.face_mask);
            save_pgm((root / detail::raster_name(rec.id, i, "body_mask")).string(), region.body_mask);
            save_pgm((root / detail::raster_name(rec.id, i, "ref_face")).string(), region.ref_face);
            save_pgm((root / detail::raster_name(rec.id, i, "ref_body")).string(), region.ref_body);
        }
    }
    write_feature_bank((fs::path(out_dir) / "features.bin").string(), index.count(), index.dim,
                       index.bank.data());
}

// Exact top-m by dot product, descending score, ties broken by ascending
// record id. m >= count returns all records sorted.
inline std::vector<ScoredId> mult_and_rank(const std::vector<double>& query,
                                           const RetrievalIndex& index, size_t m) {
    if (index.count() == 0) {
        throw ValidationError("empty index");
    }
    if (m == 0) {
        throw ValidationError("shortlist size m must be positive");
    }
    if (query.size() != index.dim) {
        throw ShapeError("query dimension " + std::to_string(query.size()) +
                         " does not match index dimension " + std::to_string(index.dim));
    }
    std::vector<ScoredId> hits;
    hits.reserve(index.count());
    for (const MsdbRecord& rec : index.records) {
        double dot = 0.0;
        for (size_t k = 0; k < index.dim; k++) {
            dot += query[k] * rec.feature[k];
        }
        hits.push_back({rec.id, dot});
    }
    std::sort(hits.begin(), hits.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (hits.size() > m) {
        hits.resize(m);
    }
    return hits;
}

// Uniform pick from the shortlist via SplitMix64(seed) rejection sampling.
inline std::string random_choose(const std::vector<std::string>& shortlist, uint64_t seed) {
    if (shortlist.empty()) {
        throw ValidationError("empty shortlist");
    }
    SplitMix64 rng(seed);
    return shortlist[rng.next_below(shortlist.size())];
}

}  // namespace racig
