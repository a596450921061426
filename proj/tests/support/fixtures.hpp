#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "oracle.hpp"
#include "zsdbench/coco.hpp"

namespace fixtures {

// Removed with its contents on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("zsdbench-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline nlohmann::json coco_json(const zsd::GroundTruthDataset& gt) {
  nlohmann::json j;
  j["images"] = nlohmann::json::array();
  for (const auto& im : gt.images()) {
    j["images"].push_back(
        {{"id", im.id}, {"file_name", im.file_name}, {"width", im.width}, {"height", im.height}});
  }
  j["annotations"] = nlohmann::json::array();
  for (const auto& a : gt.annotations()) {
    j["annotations"].push_back({{"id", a.id},
                                {"image_id", a.image_id},
                                {"category_id", a.category_id},
                                {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                                {"iscrowd", 0}});
  }
  j["categories"] = nlohmann::json::array();
  for (const auto& c : gt.categories()) j["categories"].push_back({{"id", c.id}, {"name", c.name}});
  return j;
}

inline void write_coco(const zsd::GroundTruthDataset& gt, const std::filesystem::path& path) {
  zsd::write_text_file(path, coco_json(gt).dump(1));
}

// Random single-category dataset of `n_images` 640x480 images with up to
// `max_gt` boxes each.
inline zsd::GroundTruthDataset random_dataset(std::mt19937_64& rng, int n_images, int max_gt) {
  std::vector<zsd::ImageInfo> images;
  std::vector<zsd::Annotation> anns;
  std::int64_t next_ann = 1;
  for (int i = 0; i < n_images; ++i) {
    const std::int64_t id = 100 + i;
    images.push_back({id, "img_" + std::to_string(id) + ".jpg", 640, 480});
    const int n = std::uniform_int_distribution<int>(0, max_gt)(rng);
    for (int k = 0; k < n; ++k) {
      const double w = std::uniform_real_distribution<double>(20, 200)(rng);
      const double h = std::uniform_real_distribution<double>(20, 200)(rng);
      const double x = std::uniform_real_distribution<double>(0, 640 - w)(rng);
      const double y = std::uniform_real_distribution<double>(0, 480 - h)(rng);
      anns.push_back({next_ann++, id, 1, {x, y, w, h}});
    }
  }
  return zsd::GroundTruthDataset(std::move(images), std::move(anns), {{1, "muzzle"}});
}

// A small evaluation instance expressed both ways: library types and oracle
// types. Coordinates sit on a coarse grid and scores come from a short list
// so that equal IoUs and equal scores are common.
struct Instance {
  zsd::GroundTruthDataset gt;
  zsd::DetectionSet det;
  std::vector<oracle::Gt> oracle_gt;
  std::vector<oracle::Det> oracle_det;
};

inline Instance random_instance(std::mt19937_64& rng, int max_images = 6, int max_gt = 5,
                                int max_det = 8) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Instance inst;
  std::vector<zsd::ImageInfo> images;
  std::vector<zsd::Annotation> anns;
  const int n_images = pick(1, max_images);
  std::vector<std::int64_t> ids;
  for (int i = 0; i < n_images; ++i) ids.push_back(pick(0, 3) * 10 + i);  // not sorted
  std::int64_t next_ann = 1;
  auto random_box = [&] {
    const double x = pick(0, 8) * 5.0, y = pick(0, 8) * 5.0;
    const double w = pick(1, 6) * 5.0, h = pick(1, 6) * 5.0;
    return zsd::BoundingBox{x, y, w, h};
  };
  for (std::int64_t id : ids) {
    images.push_back({id, std::to_string(id) + ".png", 100, 100});
    const int n_gt = pick(0, max_gt);
    std::vector<zsd::BoundingBox> placed;
    for (int k = 0; k < n_gt; ++k) {
      zsd::BoundingBox b = random_box();
      placed.push_back(b);
      anns.push_back({next_ann++, id, 7, b});
      inst.oracle_gt.push_back({id, {b.x, b.y, b.w, b.h}});
    }
    const int n_det = pick(0, max_det);
    static const double kScores[] = {0.2, 0.5, 0.5, 0.7, 0.9, 0.9, 1.0};
    for (int k = 0; k < n_det; ++k) {
      zsd::BoundingBox b;
      if (!placed.empty() && pick(0, 2) > 0) {
        // near a GT box
        b = placed[pick(0, static_cast<int>(placed.size()) - 1)];
        b.x += pick(-2, 2) * 2.5;
        b.y += pick(-2, 2) * 2.5;
        b.w = std::max(2.5, b.w + pick(-2, 2) * 2.5);
        b.h = std::max(2.5, b.h + pick(-2, 2) * 2.5);
        b.x = std::max(0.0, b.x);
        b.y = std::max(0.0, b.y);
      } else {
        b = random_box();
      }
      const double s = kScores[pick(0, 6)];
      inst.det.entries.push_back({id, b, s, "muzzle"});
      inst.oracle_det.push_back({id, {b.x, b.y, b.w, b.h}, s});
    }
  }
  inst.det.provenance.backend = "test";
  inst.gt = zsd::GroundTruthDataset(std::move(images), std::move(anns), {{7, "muzzle"}});
  return inst;
}

inline std::string data_dir() { return ZSD_DATA_DIR; }
inline std::string fake_adapter() { return ZSD_FAKE_ADAPTER; }

}  // namespace fixtures
