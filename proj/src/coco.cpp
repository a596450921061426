#include "zsdbench/coco.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "json.hpp"

namespace zsd {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::MissingField, fmt::format("{} is missing \"{}\"", where, key));
  }
  return *it;
}

std::int64_t require_id(const json& obj, const char* key, std::string_view where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::MalformedDocument,
                fmt::format("{} field \"{}\" must be an integer", where, key));
  }
  return v.get<std::int64_t>();
}

double require_number(const json& obj, const char* key, std::string_view where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) {
    throw Error(ErrorCode::MalformedDocument,
                fmt::format("{} field \"{}\" must be a number", where, key));
  }
  return v.get<double>();
}

std::string require_string(const json& obj, const char* key, std::string_view where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) {
    throw Error(ErrorCode::MalformedDocument,
                fmt::format("{} field \"{}\" must be a string", where, key));
  }
  return v.get<std::string>();
}

const json& require_array(const json& obj, const char* key, std::string_view where) {
  const json& v = require(obj, key, where);
  if (!v.is_array()) {
    throw Error(ErrorCode::MalformedDocument,
                fmt::format("{} field \"{}\" must be an array", where, key));
  }
  return v;
}

BoundingBox parse_bbox(const json& obj, std::string_view where) {
  const json& v = require(obj, "bbox", where);
  if (!v.is_array() || v.size() != 4) {
    throw Error(ErrorCode::MalformedDocument,
                fmt::format("{} bbox must be an array of 4 numbers", where));
  }
  for (const auto& c : v) {
    if (!c.is_number()) {
      throw Error(ErrorCode::MalformedDocument,
                  fmt::format("{} bbox must be an array of 4 numbers", where));
    }
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

json parse_document(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::MalformedDocument, "not valid JSON");
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::MalformedDocument, "top-level value must be an object");
  }
  return doc;
}

std::string_view box_error_text(BoxError e) {
  return e == BoxError::NonPositiveExtent ? "NonPositiveExtent" : "NonFiniteField";
}

}  // namespace

GroundTruthDataset::GroundTruthDataset(std::vector<ImageInfo> images,
                                       std::vector<Annotation> annotations,
                                       std::vector<Category> categories)
    : images_(std::move(images)),
      annotations_(std::move(annotations)),
      categories_(std::move(categories)) {
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (!image_index_.emplace(images_[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, fmt::format("image id {}", images_[i].id));
    }
  }
  std::unordered_set<std::int64_t> category_ids;
  for (const auto& c : categories_) {
    if (!category_ids.insert(c.id).second) {
      throw Error(ErrorCode::DuplicateId, fmt::format("category id {}", c.id));
    }
  }
  std::unordered_set<std::int64_t> annotation_ids;
  for (const auto& a : annotations_) {
    if (!annotation_ids.insert(a.id).second) {
      throw Error(ErrorCode::DuplicateId, fmt::format("annotation id {}", a.id));
    }
    if (!image_index_.count(a.image_id)) {
      throw Error(ErrorCode::DanglingReference,
                  fmt::format("annotation {} references image_id {}", a.id, a.image_id));
    }
    if (!category_ids.count(a.category_id)) {
      throw Error(ErrorCode::DanglingReference,
                  fmt::format("annotation {} references category_id {}", a.id, a.category_id));
    }
  }
}

const ImageInfo* GroundTruthDataset::find_image(std::int64_t image_id) const {
  auto it = image_index_.find(image_id);
  return it == image_index_.end() ? nullptr : &images_[it->second];
}

std::vector<Annotation> GroundTruthDataset::annotations_for(std::int64_t image_id) const {
  std::vector<Annotation> out;
  for (const auto& a : annotations_) {
    if (a.image_id == image_id) out.push_back(a);
  }
  return out;
}

GroundTruthDataset GroundTruthDataset::restricted_to(
    const std::vector<std::int64_t>& image_ids) const {
  std::unordered_set<std::int64_t> keep(image_ids.begin(), image_ids.end());
  std::vector<ImageInfo> images;
  for (const auto& im : images_) {
    if (keep.count(im.id)) images.push_back(im);
  }
  std::vector<Annotation> annotations;
  for (const auto& a : annotations_) {
    if (keep.count(a.image_id)) annotations.push_back(a);
  }
  return GroundTruthDataset(std::move(images), std::move(annotations), categories_);
}

IngestResult ingest_ground_truth_text(std::string_view json_text, const IngestOptions& opts) {
  const json doc = parse_document(json_text);
  const json& images_json = require_array(doc, "images", "document");
  const json& annotations_json = require_array(doc, "annotations", "document");
  const json& categories_json = require_array(doc, "categories", "document");

  IngestResult result;
  result.source_images = images_json.size();
  result.source_annotations = annotations_json.size();

  std::vector<ImageInfo> images;
  std::unordered_map<std::int64_t, std::size_t> image_index;
  for (const auto& j : images_json) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedDocument, "image entry must be an object");
    ImageInfo im;
    im.id = require_id(j, "id", "image");
    const std::string where = fmt::format("image {}", im.id);
    im.file_name = require_string(j, "file_name", where);
    im.width = require_number(j, "width", where);
    im.height = require_number(j, "height", where);
    if (!(im.width > 0.0) || !(im.height > 0.0) || !std::isfinite(im.width) ||
        !std::isfinite(im.height)) {
      throw Error(ErrorCode::MalformedDocument, fmt::format("{} has non-positive size", where));
    }
    if (!image_index.emplace(im.id, images.size()).second) {
      throw Error(ErrorCode::DuplicateId, fmt::format("image id {}", im.id));
    }
    images.push_back(std::move(im));
  }

  std::vector<Category> categories;
  std::unordered_set<std::int64_t> category_ids;
  for (const auto& j : categories_json) {
    if (!j.is_object()) {
      throw Error(ErrorCode::MalformedDocument, "category entry must be an object");
    }
    Category c;
    c.id = require_id(j, "id", "category");
    c.name = require_string(j, "name", fmt::format("category {}", c.id));
    if (!category_ids.insert(c.id).second) {
      throw Error(ErrorCode::DuplicateId, fmt::format("category id {}", c.id));
    }
    categories.push_back(std::move(c));
  }
  if (opts.strict_single_category && categories.size() > 1) {
    throw Error(ErrorCode::MultipleCategories,
                fmt::format("{} categories present in single-category mode", categories.size()));
  }

  std::vector<Annotation> annotations;
  std::unordered_set<std::int64_t> annotation_ids;
  for (const auto& j : annotations_json) {
    if (!j.is_object()) {
      throw Error(ErrorCode::MalformedDocument, "annotation entry must be an object");
    }
    Annotation a;
    a.id = require_id(j, "id", "annotation");
    const std::string where = fmt::format("annotation {}", a.id);
    a.image_id = require_id(j, "image_id", where);
    a.category_id = require_id(j, "category_id", where);
    a.bbox = parse_bbox(j, where);
    if (!annotation_ids.insert(a.id).second) {
      throw Error(ErrorCode::DuplicateId, fmt::format("annotation id {}", a.id));
    }

    auto fail = [&](ErrorCode code, std::string message) {
      if (!opts.reject_invalid) throw Error(code, message);
      result.rejections.push_back({"annotation", a.id, code, std::move(message)});
    };

    auto img = image_index.find(a.image_id);
    if (img == image_index.end()) {
      fail(ErrorCode::DanglingReference,
           fmt::format("{} references image_id {}", where, a.image_id));
      continue;
    }
    if (!category_ids.count(a.category_id)) {
      fail(ErrorCode::DanglingReference,
           fmt::format("{} references category_id {}", where, a.category_id));
      continue;
    }
    const ImageInfo& im = images[img->second];
    const ValidationResult v = validate_box(a.bbox, im.width, im.height);
    if (!v.accepted()) {
      fail(ErrorCode::InvalidBox, fmt::format("{} bbox {}", where, box_error_text(*v.error)));
      continue;
    }
    if (v.out_of_bounds) {
      ++result.out_of_bounds;
      if (opts.clip_out_of_bounds) {
        a.bbox = clip_box(a.bbox, im.width, im.height);
        if (!validate_box(a.bbox, im.width, im.height).accepted()) {
          fail(ErrorCode::InvalidBox, fmt::format("{} bbox lies outside its image", where));
          continue;
        }
      }
    }
    annotations.push_back(a);
  }

  result.dataset =
      GroundTruthDataset(std::move(images), std::move(annotations), std::move(categories));
  return result;
}

IngestResult ingest_ground_truth(const std::filesystem::path& path, const IngestOptions& opts) {
  return ingest_ground_truth_text(read_text_file(path), opts);
}

GroundTruthDataset parse_ground_truth(const std::filesystem::path& path,
                                      const IngestOptions& opts) {
  return ingest_ground_truth(path, opts).dataset;
}

DetectionSet parse_detections_text(std::string_view json_text) {
  const json doc = parse_document(json_text);
  const json& prov = require(doc, "provenance", "document");
  if (!prov.is_object()) throw Error(ErrorCode::MalformedDocument, "provenance must be an object");

  DetectionSet out;
  out.provenance.backend = require_string(prov, "backend", "provenance");
  out.provenance.prompt = require_string(prov, "prompt", "provenance");
  const json& seed = require(prov, "seed", "provenance");
  if (!seed.is_number_unsigned()) {
    throw Error(ErrorCode::MalformedDocument, "provenance seed must be a non-negative integer");
  }
  out.provenance.seed = seed.get<std::uint64_t>();
  out.provenance.timestamp = require_string(prov, "timestamp", "provenance");
  if (prov.contains("box_threshold")) {
    out.provenance.box_threshold = require_number(prov, "box_threshold", "provenance");
  }
  if (prov.contains("text_threshold")) {
    out.provenance.text_threshold = require_number(prov, "text_threshold", "provenance");
  }

  const json& entries = require_array(doc, "detections", "document");
  out.entries.reserve(entries.size());
  std::size_t index = 0;
  for (const auto& j : entries) {
    const std::string where = fmt::format("detection #{}", index++);
    if (!j.is_object()) throw Error(ErrorCode::MalformedDocument, where + " must be an object");
    Detection d;
    d.image_id = require_id(j, "image_id", where);
    d.bbox = parse_bbox(j, where);
    d.score = require_number(j, "score", where);
    if (j.contains("phrase")) d.phrase = require_string(j, "phrase", where);
    const auto inf = std::numeric_limits<double>::infinity();
    const ValidationResult v = validate_box(d.bbox, inf, inf);
    if (!v.accepted()) {
      throw Error(ErrorCode::InvalidBox, fmt::format("{} bbox {}", where, box_error_text(*v.error)));
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(ErrorCode::ScoreOutOfRange, fmt::format("{} score {}", where, d.score));
    }
    out.entries.push_back(std::move(d));
  }
  return out;
}

DetectionSet parse_detections(const std::filesystem::path& path) {
  return parse_detections_text(read_text_file(path));
}

std::string serialize_detections(const DetectionSet& d) {
  json prov = {{"backend", d.provenance.backend},
               {"prompt", d.provenance.prompt},
               {"seed", d.provenance.seed},
               {"timestamp", d.provenance.timestamp}};
  if (d.provenance.box_threshold) prov["box_threshold"] = *d.provenance.box_threshold;
  if (d.provenance.text_threshold) prov["text_threshold"] = *d.provenance.text_threshold;

  json entries = json::array();
  for (const auto& e : d.entries) {
    entries.push_back({{"image_id", e.image_id},
                       {"bbox", {e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h}},
                       {"score", e.score},
                       {"phrase", e.phrase}});
  }
  // nlohmann writes doubles with max_digits10, so the round trip is exact.
  json doc = {{"provenance", std::move(prov)}, {"detections", std::move(entries)}};
  return doc.dump(1) + "\n";
}

void write_detections(const DetectionSet& d, const std::filesystem::path& path) {
  write_text_file(path, serialize_detections(d));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, fmt::format("cannot read {}", path.string()));
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot open {} for writing", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
}

}  // namespace zsd
