#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zsdbench/error.hpp"
#include "zsdbench/geometry.hpp"

namespace zsd {

struct ImageInfo {
  std::int64_t id = 0;
  std::string file_name;
  double width = 0.0;
  double height = 0.0;
};

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  BoundingBox bbox;
};

struct Category {
  std::int64_t id = 0;
  std::string name;
};

// Images, annotations and categories with referential integrity checked at
// construction. Immutable afterwards.
class GroundTruthDataset {
 public:
  GroundTruthDataset() = default;
  GroundTruthDataset(std::vector<ImageInfo> images, std::vector<Annotation> annotations,
                     std::vector<Category> categories);

  const std::vector<ImageInfo>& images() const { return images_; }
  const std::vector<Annotation>& annotations() const { return annotations_; }
  const std::vector<Category>& categories() const { return categories_; }

  const ImageInfo* find_image(std::int64_t image_id) const;
  bool has_image(std::int64_t image_id) const { return find_image(image_id) != nullptr; }

  // Annotations of one image, in document order.
  std::vector<Annotation> annotations_for(std::int64_t image_id) const;

  // Restriction to a subset of images (annotations follow their image).
  GroundTruthDataset restricted_to(const std::vector<std::int64_t>& image_ids) const;

 private:
  std::vector<ImageInfo> images_;
  std::vector<Annotation> annotations_;
  std::vector<Category> categories_;
  std::unordered_map<std::int64_t, std::size_t> image_index_;
};

struct IngestOptions {
  bool clip_out_of_bounds = true;
  bool strict_single_category = true;
  // When set, per-annotation failures are dropped into the rejection report
  // instead of aborting the parse.
  bool reject_invalid = false;
};

struct Rejection {
  std::string element;  // "annotation"
  std::int64_t id = 0;
  ErrorCode code = ErrorCode::InvalidBox;
  std::string message;
};

struct IngestResult {
  GroundTruthDataset dataset;
  std::vector<Rejection> rejections;
  std::size_t out_of_bounds = 0;  // boxes flagged; clipped unless kept raw
  std::size_t source_images = 0;
  std::size_t source_annotations = 0;
};

IngestResult ingest_ground_truth_text(std::string_view json_text, const IngestOptions& opts = {});
IngestResult ingest_ground_truth(const std::filesystem::path& path, const IngestOptions& opts = {});
GroundTruthDataset parse_ground_truth(const std::filesystem::path& path,
                                      const IngestOptions& opts = {});

struct Detection {
  std::int64_t image_id = 0;
  BoundingBox bbox;
  double score = 0.0;
  std::string phrase;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct Provenance {
  std::string backend;
  std::string prompt;
  std::uint64_t seed = 0;
  std::string timestamp;
  std::optional<double> box_threshold;
  std::optional<double> text_threshold;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct DetectionSet {
  Provenance provenance;
  std::vector<Detection> entries;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

DetectionSet parse_detections_text(std::string_view json_text);
DetectionSet parse_detections(const std::filesystem::path& path);
std::string serialize_detections(const DetectionSet& d);
void write_detections(const DetectionSet& d, const std::filesystem::path& path);

// Shared file helpers; both throw Error{Io}.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace zsd
