#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "slld/dataset.hpp"
#include "slld/detection_ops.hpp"
#include "slld/errors.hpp"

namespace slld {

namespace detail {

inline nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void write_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

template <typename T>
T require(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key))
        throw ParseError(where + ": missing key \"" + key + "\"");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": bad value for \"" + key + "\": " + e.what());
    }
}

} // namespace detail

/// Reads a COCO-style annotation file (images / annotations / categories),
/// matching category names onto `schema`. Boxes are clamped to image bounds;
/// a box whose clamped area is zero is rejected with its annotation id.
/// Images without a source_corpus field receive `default_corpus`.
inline LayoutDataset load_coco(const std::string& path, const LabelSchema& schema,
                               const std::string& default_corpus = "") {
    schema.validate();
    nlohmann::json j = detail::parse_file(path);
    for (const char* key : {"images", "annotations", "categories"})
        if (!j.contains(key) || !j.at(key).is_array())
            throw ParseError(path + ": missing array \"" + std::string(key) + "\"");

    // File category id -> schema id, matched by name.
    std::map<int, int> cat_map;
    std::vector<std::string> unmapped;
    for (const auto& c : j.at("categories")) {
        int id = detail::require<int>(c, "id", path + " categories");
        std::string name = detail::require<std::string>(c, "name", path + " categories");
        if (auto sid = schema.id_of(name))
            cat_map[id] = *sid;
        else
            unmapped.push_back(name);
    }
    if (!unmapped.empty())
        throw SchemaMismatchError(path + ": categories not in schema", unmapped);

    LayoutDataset ds;
    ds.schema = schema;
    for (const auto& im : j.at("images")) {
        ImageRecord rec;
        rec.image_id = detail::require<std::int64_t>(im, "id", path + " images");
        rec.file_name = detail::require<std::string>(im, "file_name", path + " images");
        rec.width = detail::require<double>(im, "width", path + " images");
        rec.height = detail::require<double>(im, "height", path + " images");
        rec.source_corpus = im.value("source_corpus", default_corpus);
        if (rec.width <= 0.0 || rec.height <= 0.0)
            throw ParseError(path + ": non-positive size on image " +
                             std::to_string(rec.image_id));
        ds.images.push_back(std::move(rec));
    }

    auto index = ds.image_index();
    for (const auto& a : j.at("annotations")) {
        GroundTruthInstance inst;
        inst.ann_id = detail::require<std::int64_t>(a, "id", path + " annotations");
        inst.image_id = detail::require<std::int64_t>(a, "image_id", path + " annotations");
        auto bbox = detail::require<std::vector<double>>(a, "bbox", path + " annotations");
        if (bbox.size() != 4)
            throw ParseError(path + ": bbox must have 4 entries on annotation " +
                             std::to_string(inst.ann_id));
        int file_cat = detail::require<int>(a, "category_id", path + " annotations");
        auto mapped = cat_map.find(file_cat);
        if (mapped == cat_map.end())
            throw UnknownIdError(path + ": annotation category not in file categories",
                                 {std::to_string(file_cat)});
        inst.label_id = mapped->second;
        inst.iscrowd = a.value("iscrowd", 0) != 0;

        auto img = index.find(inst.image_id);
        if (img == index.end())
            throw UnknownIdError(path + ": annotation references unknown image",
                                 {std::to_string(inst.image_id)});
        const ImageRecord& rec = ds.images[img->second];
        inst.box = BBox(bbox[0], bbox[1], bbox[2], bbox[3]).clamped(rec.width, rec.height);
        if (inst.box.area() <= 0.0)
            throw DegenerateBoxError(path + ": degenerate box on annotation " +
                                         std::to_string(inst.ann_id),
                                     inst.ann_id);
        ds.instances.push_back(std::move(inst));
    }

    ds.validate();
    return ds;
}

/// Reads a label remap file: a JSON object of source name -> target name,
/// where the target "DROP" removes instances of that label.
inline LabelRemap load_remap(const std::string& path) {
    nlohmann::json j = detail::parse_file(path);
    if (!j.is_object()) throw ParseError(path + ": remap must be a JSON object");
    LabelRemap remap;
    for (const auto& [src, tgt] : j.items()) {
        if (!tgt.is_string())
            throw ParseError(path + ": remap target for \"" + src + "\" must be a string");
        remap.mapping[src] = tgt.get<std::string>();
    }
    return remap;
}

/// Builds a schema from the file's own category list. Ids must form 1..K
/// after sorting; anything else is a parse error.
inline LabelSchema schema_from_coco(const std::string& path) {
    nlohmann::json j = detail::parse_file(path);
    if (!j.contains("categories") || !j.at("categories").is_array())
        throw ParseError(path + ": missing array \"categories\"");
    LabelSchema schema;
    for (const auto& c : j.at("categories")) {
        int id = detail::require<int>(c, "id", path + " categories");
        std::string name = detail::require<std::string>(c, "name", path + " categories");
        schema.labels.push_back({id, std::move(name)});
    }
    std::sort(schema.labels.begin(), schema.labels.end(),
              [](const Label& a, const Label& b) { return a.id < b.id; });
    try {
        schema.validate();
    } catch (const Error& e) {
        throw ParseError(path + ": unusable category list: " + e.what());
    }
    return schema;
}

/// Loads against the file's own categories instead of a caller schema.
inline LayoutDataset load_coco(const std::string& path,
                               const std::string& default_corpus = "") {
    return load_coco(path, schema_from_coco(path), default_corpus);
}

/// Writes the COCO-compatible form load_coco reads back; save-then-load
/// reproduces an equal dataset.
inline void save_coco(const LayoutDataset& ds, const std::string& path) {
    nlohmann::json j;
    j["images"] = nlohmann::json::array();
    for (const auto& im : ds.images) {
        nlohmann::json o{{"id", im.image_id},
                         {"file_name", im.file_name},
                         {"width", im.width},
                         {"height", im.height}};
        if (!im.source_corpus.empty()) o["source_corpus"] = im.source_corpus;
        j["images"].push_back(std::move(o));
    }
    j["annotations"] = nlohmann::json::array();
    for (const auto& inst : ds.instances) {
        j["annotations"].push_back(
            {{"id", inst.ann_id},
             {"image_id", inst.image_id},
             {"category_id", inst.label_id},
             {"bbox", {inst.box.x, inst.box.y, inst.box.w, inst.box.h}},
             {"iscrowd", inst.iscrowd ? 1 : 0},
             {"area", inst.box.area()}});
    }
    j["categories"] = nlohmann::json::array();
    for (const auto& l : ds.schema.labels)
        j["categories"].push_back({{"id", l.id}, {"name", l.name}});
    detail::write_file(path, j);
}

/// Split file: JSON object image_id -> "train" | "test".
inline std::map<std::int64_t, Split> load_split(const std::string& path) {
    nlohmann::json j = detail::parse_file(path);
    if (!j.is_object()) throw ParseError(path + ": split file must be a JSON object");
    std::map<std::int64_t, Split> out;
    for (const auto& [key, value] : j.items()) {
        std::int64_t id = 0;
        try {
            id = std::stoll(key);
        } catch (const std::exception&) {
            throw ParseError(path + ": non-numeric image id \"" + key + "\"");
        }
        std::string v = value.get<std::string>();
        if (v == "train")
            out[id] = Split::train;
        else if (v == "test")
            out[id] = Split::test;
        else
            throw ParseError(path + ": split value must be train or test, got \"" + v + "\"");
    }
    return out;
}

inline void save_split(const std::map<std::int64_t, Split>& assignments,
                       const std::string& path) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, s] : assignments) j[std::to_string(id)] = to_string(s);
    detail::write_file(path, j);
}

/// COCO results file: array of {image_id, category_id, bbox, score}.
inline DetectionSet load_detections(const std::string& path,
                                    const std::string& detector_name = "") {
    nlohmann::json j = detail::parse_file(path);
    if (!j.is_array()) throw ParseError(path + ": results file must be a JSON array");
    DetectionSet out;
    out.detector = detector_name;
    for (const auto& r : j) {
        Detection d;
        d.image_id = detail::require<std::int64_t>(r, "image_id", path);
        d.label_id = detail::require<int>(r, "category_id", path);
        d.score = detail::require<double>(r, "score", path);
        auto bbox = detail::require<std::vector<double>>(r, "bbox", path);
        if (bbox.size() != 4) throw ParseError(path + ": bbox must have 4 entries");
        if (!(d.score >= 0.0 && d.score <= 1.0))
            throw ParseError(path + ": score outside [0, 1]: " + std::to_string(d.score));
        d.box = BBox(bbox[0], bbox[1], bbox[2], bbox[3]);
        if (!d.box.valid())
            throw DegenerateBoxError(path + ": degenerate detection box");
        out.add(d);
    }
    return out;
}

inline void save_detections(const DetectionSet& ds, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [image_id, dets] : ds.by_image)
        for (const auto& d : dets)
            j.push_back({{"image_id", d.image_id},
                         {"category_id", d.label_id},
                         {"bbox", {d.box.x, d.box.y, d.box.w, d.box.h}},
                         {"score", d.score}});
    detail::write_file(path, j);
}

} // namespace slld
