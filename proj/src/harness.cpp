#include "zsdbench/harness.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <unordered_map>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "zsdbench/mock_detector.hpp"

namespace zsd {

using nlohmann::json;

namespace {

constexpr const char* kRecordFile = "record.json";
constexpr const char* kDetectionsFile = "detections.json";

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// "2026-10-16T10:32:00.123456Z" -> "20261016T103200.123456Z"
std::string compact_timestamp(std::string_view iso) {
  std::string out;
  for (char c : iso) {
    if (c != '-' && c != ':') out.push_back(c);
  }
  return out;
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
  const auto micros =
      std::chrono::duration_cast<std::chrono::microseconds>(now - secs).count();
  const std::time_t t = std::chrono::system_clock::to_time_t(secs);
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:06d}Z", fmt::gmtime(t), micros);
}

json to_json(const RunRecord& r) {
  return {
      {"created", r.created},
      {"spec", to_json(r.spec)},
      {"detections", r.detections_path.filename().string()},
      {"report", r.report ? json::parse(report_to_json(*r.report)) : json(nullptr)},
      {"wall_time", r.wall_time_s},
      {"status",
       {{"ok", r.status.ok},
        {"code", r.status.code ? json(std::string(to_string(*r.status.code))) : json(nullptr)},
        {"reason", r.status.reason}}},
      {"failed_images", r.failed_images},
  };
}

RunRecord record_from_json(const json& j) {
  static const std::unordered_map<std::string, ErrorCode> codes = [] {
    std::unordered_map<std::string, ErrorCode> m;
    for (int c = 0; c <= static_cast<int>(ErrorCode::PartialRun); ++c) {
      m.emplace(std::string(to_string(static_cast<ErrorCode>(c))), static_cast<ErrorCode>(c));
    }
    return m;
  }();
  try {
    RunRecord r;
    r.created = j.at("created").get<std::string>();
    r.spec = spec_from_json(j.at("spec"));
    r.detections_path = j.at("detections").get<std::string>();
    if (!j.at("report").is_null()) r.report = report_from_json(j.at("report").dump());
    r.wall_time_s = j.at("wall_time").get<double>();
    const auto& st = j.at("status");
    r.status.ok = st.at("ok").get<bool>();
    if (!st.at("code").is_null()) {
      auto it = codes.find(st.at("code").get<std::string>());
      if (it == codes.end()) throw Error(ErrorCode::MalformedDocument, "unknown status code");
      r.status.code = it->second;
    }
    r.status.reason = st.at("reason").get<std::string>();
    r.failed_images = j.at("failed_images").get<std::vector<std::int64_t>>();
    if (r.status.ok != r.report.has_value()) {
      throw Error(ErrorCode::MalformedDocument, "run record report must be present iff status ok");
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, fmt::format("run record: {}", e.what()));
  }
}

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) {
    throw Error(ErrorCode::Io, fmt::format("cannot create run store {}: {}", root_.string(),
                                           ec.message()));
  }
}

std::filesystem::path RunStore::append(RunRecord& record, const DetectionSet& detections) {
  const std::string stamp = compact_timestamp(record.created);
  const std::string spec_text = to_json(record.spec).dump();
  std::filesystem::path dir;
  for (std::uint64_t nonce = 0;; ++nonce) {
    const auto hash = fnv1a(fmt::format("{}|{}|{}", spec_text, record.created, nonce));
    dir = root_ / fmt::format("{}-{:08x}", stamp, static_cast<std::uint32_t>(hash));
    std::error_code ec;
    if (std::filesystem::create_directory(dir, ec)) break;
    if (ec) throw Error(ErrorCode::Io, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  }
  record.record_dir = dir;
  record.detections_path = dir / kDetectionsFile;
  write_detections(detections, record.detections_path);
  // record.json last: its presence marks a complete entry.
  write_text_file(dir / kRecordFile, to_json(record).dump(2) + "\n");
  return dir;
}

std::vector<RunRecord> RunStore::load_all() const {
  std::vector<std::filesystem::path> dirs;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(root_, ec)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / kRecordFile)) {
      dirs.push_back(entry.path());
    }
  }
  if (ec) throw Error(ErrorCode::Io, fmt::format("cannot list {}: {}", root_.string(), ec.message()));
  std::sort(dirs.begin(), dirs.end());

  std::vector<RunRecord> out;
  for (const auto& dir : dirs) {
    const auto doc = json::parse(read_text_file(dir / kRecordFile), nullptr, false);
    if (doc.is_discarded()) {
      throw Error(ErrorCode::MalformedDocument, fmt::format("{} is not JSON", dir.string()));
    }
    RunRecord r = record_from_json(doc);
    r.record_dir = dir;
    r.detections_path = dir / r.detections_path;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::int64_t> subsample_images(const GroundTruthDataset& gt, const Subsample& s) {
  const std::size_t n = gt.images().size();
  if (n == 0) return {};
  auto k = static_cast<std::size_t>(std::llround(s.fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 engine(s.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(idx[i], idx[engine() % (i + 1)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<std::int64_t> ids;
  for (auto i : idx) ids.push_back(gt.images()[i].id);
  return ids;
}

DetectionSet keep_top1(const DetectionSet& d) {
  DetectionSet out;
  out.provenance = d.provenance;
  std::unordered_map<std::int64_t, std::size_t> best;  // image -> index in out
  for (const auto& e : d.entries) {
    auto it = best.find(e.image_id);
    if (it == best.end()) {
      best.emplace(e.image_id, out.entries.size());
      out.entries.push_back(e);
    } else if (e.score > out.entries[it->second].score) {
      out.entries[it->second] = e;
    }
  }
  return out;
}

RunOutcome run_experiment_with_detections(const ExperimentSpec& spec, const RunOptions& opts) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();

  GroundTruthDataset gt = parse_ground_truth(spec.dataset_ref, opts.ingest);
  if (spec.subsample) gt = gt.restricted_to(subsample_images(gt, *spec.subsample));

  RunOutcome out;
  RunRecord& record = out.record;
  record.spec = spec;
  record.spec.mock.seed = spec.seed;
  record.created = utc_timestamp();

  DetectionSet& dets = out.detections;
  dets.provenance = {spec.backend.name,
                     spec.prompt,
                     spec.seed,
                     record.created,
                     spec.detector_params.box_threshold,
                     spec.detector_params.text_threshold};

  try {
    if (spec.backend.is_mock()) {
      MockParams mp = spec.mock;
      mp.seed = spec.seed;
      for (const auto& image : gt.images()) {
        auto d = mock_detect_image(image, gt.annotations_for(image.id), mp, spec.prompt);
        dets.entries.insert(dets.entries.end(), d.begin(), d.end());
      }
    } else {
      const std::filesystem::path root =
          spec.image_root ? *spec.image_root : spec.dataset_ref.parent_path();
      std::vector<AdapterRequest> requests;
      std::int64_t next_id = 1;
      for (const auto& image : gt.images()) {
        requests.push_back({next_id++, image.id, (root / image.file_name).string(), spec.prompt,
                            spec.detector_params.box_threshold,
                            spec.detector_params.text_threshold, spec.seed});
      }
      const auto responses = run_adapter(spec.backend.command, requests, opts.adapter);
      // Request-id order, so arrival order never shows in the result.
      for (const auto& req : requests) {
        const AdapterResponse& resp = responses.at(req.id);
        if (resp.error) {
          record.failed_images.push_back(req.image_id);
          continue;
        }
        const ImageInfo& im = *gt.find_image(req.image_id);
        for (const auto& w : resp.detections) {
          BoundingBox b = w.bbox;
          if (opts.ingest.clip_out_of_bounds &&
              validate_box(b, im.width, im.height).out_of_bounds) {
            b = clip_box(b, im.width, im.height);
            if (!validate_box(b, im.width, im.height).accepted()) continue;  // fully outside
          }
          dets.entries.push_back({req.image_id, b, w.score, w.phrase});
        }
      }
    }
  } catch (const Error& e) {
    if (!is_adapter_error(e.code())) throw;
    record.status = {false, e.code(), e.detail()};
  }

  if (opts.top1) dets = keep_top1(dets);

  if (record.status.ok && !record.failed_images.empty() && !opts.allow_partial) {
    record.status = {false, ErrorCode::PartialRun,
                     fmt::format("{} of {} images failed in the adapter",
                                 record.failed_images.size(), gt.images().size())};
  }

  if (record.status.ok) {
    if (record.failed_images.empty()) {
      record.report = evaluate(gt, dets, spec.thresholds, opts.eval);
    } else {
      std::vector<std::int64_t> good;
      for (const auto& im : gt.images()) {
        if (std::find(record.failed_images.begin(), record.failed_images.end(), im.id) ==
            record.failed_images.end()) {
          good.push_back(im.id);
        }
      }
      record.report = evaluate(gt.restricted_to(good), dets, spec.thresholds, opts.eval);
      record.report->partial = true;
      record.report->warnings.push_back(fmt::format(
          "partial run: {} image(s) excluded after adapter errors", record.failed_images.size()));
    }
  }

  record.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (opts.store) opts.store->append(record, dets);
  return out;
}

RunRecord run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
  return run_experiment_with_detections(spec, opts).record;
}

}  // namespace zsd
