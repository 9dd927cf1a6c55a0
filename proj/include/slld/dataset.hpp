#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "slld/errors.hpp"
#include "slld/geometry.hpp"
#include "slld/random.hpp"

namespace slld {

struct Label {
    int id = 0;
    std::string name;

    bool operator==(const Label&) const = default;
};

/// Ordered label set with ids contiguous from 1.
struct LabelSchema {
    std::vector<Label> labels;

    std::size_t size() const { return labels.size(); }

    bool contains_id(int id) const {
        return id >= 1 && id <= static_cast<int>(labels.size());
    }

    const std::string& name_of(int id) const {
        if (!contains_id(id))
            throw InvalidArgumentError("schema: unknown label id " + std::to_string(id));
        return labels[static_cast<std::size_t>(id) - 1].name;
    }

    std::optional<int> id_of(const std::string& name) const {
        for (const auto& l : labels)
            if (l.name == name) return l.id;
        return std::nullopt;
    }

    void validate() const {
        std::set<std::string> names;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i].id != static_cast<int>(i) + 1)
                throw InvalidArgumentError("schema: ids must be contiguous from 1");
            if (!names.insert(labels[i].name).second)
                throw InvalidArgumentError("schema: duplicate label name " + labels[i].name);
        }
    }

    bool operator==(const LabelSchema&) const = default;
};

/// The 10-label scientific-literature layout schema.
inline LabelSchema canonical_schema() {
    LabelSchema s;
    const char* names[] = {"title",  "authors", "address", "abstract", "keyword",
                           "body",   "figure",  "table",   "caption",  "reference"};
    int id = 1;
    for (const char* n : names) s.labels.push_back({id++, n});
    return s;
}

struct ImageRecord {
    std::int64_t image_id = 0;
    std::string file_name;
    double width = 0.0;
    double height = 0.0;
    std::string source_corpus; ///< e.g. soto | icdar2013 | grotoap

    bool operator==(const ImageRecord&) const = default;
};

struct GroundTruthInstance {
    std::int64_t ann_id = 0;
    std::int64_t image_id = 0;
    int label_id = 0;
    BBox box;
    bool iscrowd = false;

    bool operator==(const GroundTruthInstance&) const = default;
};

enum class Split { train, test };

inline const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

/// Images + ground-truth instances + label schema, with optional
/// per-image train/test assignments.
struct LayoutDataset {
    LabelSchema schema;
    std::vector<ImageRecord> images;
    std::vector<GroundTruthInstance> instances;
    std::map<std::int64_t, Split> split_assignments;

    const ImageRecord* find_image(std::int64_t image_id) const {
        for (const auto& im : images)
            if (im.image_id == image_id) return &im;
        return nullptr;
    }

    /// image_id -> index into images, for bulk lookups.
    std::unordered_map<std::int64_t, std::size_t> image_index() const {
        std::unordered_map<std::int64_t, std::size_t> idx;
        idx.reserve(images.size());
        for (std::size_t i = 0; i < images.size(); ++i)
            idx.emplace(images[i].image_id, i);
        return idx;
    }

    /// Referential integrity: unique image ids, resolvable instances,
    /// schema-valid labels, positive boxes.
    void validate() const {
        schema.validate();
        auto idx = image_index();
        if (idx.size() != images.size())
            throw InvalidArgumentError("dataset: duplicate image ids");
        std::set<std::int64_t> ann_ids;
        for (const auto& inst : instances) {
            if (!idx.count(inst.image_id))
                throw UnknownIdError("dataset: instance references missing image",
                                     {std::to_string(inst.image_id)});
            if (!schema.contains_id(inst.label_id))
                throw UnknownIdError("dataset: instance label not in schema",
                                     {std::to_string(inst.label_id)});
            if (!inst.box.valid())
                throw DegenerateBoxError("dataset: degenerate box on annotation " +
                                             std::to_string(inst.ann_id),
                                         inst.ann_id);
            if (!ann_ids.insert(inst.ann_id).second)
                throw InvalidArgumentError("dataset: duplicate annotation id " +
                                           std::to_string(inst.ann_id));
        }
        for (const auto& [image_id, split] : split_assignments) {
            (void)split;
            if (!idx.count(image_id))
                throw UnknownIdError("dataset: split references missing image",
                                     {std::to_string(image_id)});
        }
    }

    std::vector<std::int64_t> image_ids_in_split(Split which) const {
        std::vector<std::int64_t> out;
        for (const auto& [id, s] : split_assignments)
            if (s == which) out.push_back(id);
        return out;
    }
};

/// Source-label-name -> target-label-name map; kDrop removes instances.
struct LabelRemap {
    static constexpr const char* kDrop = "DROP";

    std::map<std::string, std::string> mapping;

    static LabelRemap identity(const LabelSchema& schema) {
        LabelRemap r;
        for (const auto& l : schema.labels) r.mapping[l.name] = l.name;
        return r;
    }
};

/// Relabels every instance through `remap` onto `target`. The remap must be
/// total over ds.schema; kDrop targets remove the instance. Images unchanged.
inline LayoutDataset remap_labels(const LayoutDataset& ds, const LabelRemap& remap,
                                  const LabelSchema& target) {
    target.validate();
    std::vector<std::string> uncovered;
    for (const auto& l : ds.schema.labels)
        if (!remap.mapping.count(l.name)) uncovered.push_back(l.name);
    if (!uncovered.empty())
        throw PartialRemapError("remap does not cover source labels", uncovered);

    std::vector<std::string> bad_targets;
    // source label id -> target label id, or nullopt for dropped
    std::vector<std::optional<int>> id_map(ds.schema.size() + 1);
    for (const auto& l : ds.schema.labels) {
        const std::string& tgt = remap.mapping.at(l.name);
        if (tgt == LabelRemap::kDrop) continue;
        auto tid = target.id_of(tgt);
        if (!tid) {
            bad_targets.push_back(tgt);
            continue;
        }
        id_map[static_cast<std::size_t>(l.id)] = *tid;
    }
    if (!bad_targets.empty())
        throw SchemaMismatchError("remap targets not in destination schema", bad_targets);

    LayoutDataset out;
    out.schema = target;
    out.images = ds.images;
    out.split_assignments = ds.split_assignments;
    for (const auto& inst : ds.instances) {
        auto tid = id_map[static_cast<std::size_t>(inst.label_id)];
        if (!tid) continue;
        GroundTruthInstance copy = inst;
        copy.label_id = *tid;
        out.instances.push_back(copy);
    }
    return out;
}

/// Concatenates parts (all already on `target` schema) into one dataset,
/// re-issuing image and annotation ids to be globally unique. source_corpus
/// tags are preserved, so duplicate file names across corpora stay distinct.
inline LayoutDataset merge_datasets(const std::vector<LayoutDataset>& parts,
                                    const LabelSchema& target) {
    target.validate();
    for (std::size_t p = 0; p < parts.size(); ++p) {
        if (!(parts[p].schema == target)) {
            std::vector<std::string> names;
            for (const auto& l : parts[p].schema.labels) names.push_back(l.name);
            throw SchemaMismatchError(
                "merge part " + std::to_string(p) + " schema differs from target", names);
        }
    }

    LayoutDataset out;
    out.schema = target;
    std::int64_t next_image = 1;
    std::int64_t next_ann = 1;
    for (const auto& part : parts) {
        std::unordered_map<std::int64_t, std::int64_t> image_id_map;
        image_id_map.reserve(part.images.size());
        for (const auto& im : part.images) {
            ImageRecord copy = im;
            image_id_map.emplace(im.image_id, next_image);
            copy.image_id = next_image++;
            out.images.push_back(std::move(copy));
        }
        for (const auto& inst : part.instances) {
            GroundTruthInstance copy = inst;
            copy.ann_id = next_ann++;
            copy.image_id = image_id_map.at(inst.image_id);
            out.instances.push_back(std::move(copy));
        }
        for (const auto& [old_id, split] : part.split_assignments)
            out.split_assignments.emplace(image_id_map.at(old_id), split);
    }
    return out;
}

/// Per-label instance counts in schema order, zero-filled.
struct InstanceStats {
    std::vector<std::pair<std::string, std::size_t>> counts;
    std::size_t total = 0;

    /// max/min count over labels with at least one instance; nullopt when
    /// fewer than one non-empty label exists.
    std::optional<double> imbalance_ratio() const {
        std::size_t lo = 0, hi = 0;
        for (const auto& [name, c] : counts) {
            if (c == 0) continue;
            if (lo == 0 || c < lo) lo = c;
            if (c > hi) hi = c;
        }
        if (lo == 0) return std::nullopt;
        return static_cast<double>(hi) / static_cast<double>(lo);
    }
};

inline InstanceStats instance_stats(const LayoutDataset& ds) {
    InstanceStats st;
    std::vector<std::size_t> counts(ds.schema.size(), 0);
    for (const auto& inst : ds.instances)
        ++counts[static_cast<std::size_t>(inst.label_id) - 1];
    for (std::size_t i = 0; i < ds.schema.size(); ++i) {
        st.counts.emplace_back(ds.schema.labels[i].name, counts[i]);
        st.total += counts[i];
    }
    return st;
}

/// Random by-image split: |test| = round(test_fraction * |images|),
/// deterministic under the seed. All instances of an image stay together.
inline LayoutDataset split(const LayoutDataset& ds, double test_fraction,
                           std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw InvalidArgumentError("split: test_fraction must be in (0, 1)");

    std::vector<std::int64_t> ids;
    ids.reserve(ds.images.size());
    for (const auto& im : ds.images) ids.push_back(im.image_id);
    std::sort(ids.begin(), ids.end());

    std::mt19937_64 rng(seed);
    deterministic_shuffle(ids, rng);

    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(ids.size())));

    LayoutDataset out = ds;
    out.split_assignments.clear();
    for (std::size_t i = 0; i < ids.size(); ++i)
        out.split_assignments[ids[i]] = i < n_test ? Split::test : Split::train;
    return out;
}

/// Rescales every image to (target_w, target_h), scaling boxes per image.
inline LayoutDataset rescale_dataset(const LayoutDataset& ds, double target_w,
                                     double target_h) {
    if (target_w <= 0.0 || target_h <= 0.0)
        throw InvalidArgumentError("rescale: target size must be positive");

    LayoutDataset out = ds;
    auto idx = ds.image_index();
    std::unordered_map<std::int64_t, std::pair<double, double>> factors;
    factors.reserve(ds.images.size());
    for (auto& im : out.images) {
        factors.emplace(im.image_id,
                        std::make_pair(target_w / im.width, target_h / im.height));
        im.width = target_w;
        im.height = target_h;
    }
    for (auto& inst : out.instances) {
        auto [fx, fy] = factors.at(inst.image_id);
        inst.box = BBox(inst.box.x * fx, inst.box.y * fy, inst.box.w * fx,
                        inst.box.h * fy);
    }
    return out;
}

/// Page number from the file-name convention "<stem>_p<N>.<ext>".
inline std::optional<int> page_number(const std::string& file_name) {
    auto dot = file_name.find_last_of('.');
    std::string stem = dot == std::string::npos ? file_name : file_name.substr(0, dot);
    auto us = stem.rfind("_p");
    if (us == std::string::npos || us + 2 >= stem.size()) return std::nullopt;
    int n = 0;
    for (std::size_t i = us + 2; i < stem.size(); ++i) {
        char c = stem[i];
        if (c < '0' || c > '9') return std::nullopt;
        n = n * 10 + (c - '0');
    }
    return n;
}

/// Keeps, for images tagged `corpus`, only those whose file names mark page 1.
/// Images of other corpora, or without a parsable page suffix, are untouched.
inline LayoutDataset filter_first_pages(const LayoutDataset& ds,
                                        const std::string& corpus) {
    LayoutDataset out;
    out.schema = ds.schema;
    std::set<std::int64_t> kept;
    for (const auto& im : ds.images) {
        auto page = page_number(im.file_name);
        if (im.source_corpus == corpus && page && *page != 1) continue;
        kept.insert(im.image_id);
        out.images.push_back(im);
    }
    for (const auto& inst : ds.instances)
        if (kept.count(inst.image_id)) out.instances.push_back(inst);
    for (const auto& [id, s] : ds.split_assignments)
        if (kept.count(id)) out.split_assignments.emplace(id, s);
    return out;
}

} // namespace slld
