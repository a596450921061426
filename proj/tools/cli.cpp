#include "cli.hpp"

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "zsdbench/coco.hpp"
#include "zsdbench/harness.hpp"
#include "zsdbench/learning_curve.hpp"
#include "zsdbench/metrics.hpp"
#include "zsdbench/mock_detector.hpp"
#include "zsdbench/prompt_cascade.hpp"
#include "zsdbench/report.hpp"

namespace zsd::cli {

namespace {

enum class Format { Text, Csv, Json };

const std::map<std::string, Format> kFormats = {
    {"text", Format::Text}, {"csv", Format::Csv}, {"json", Format::Json}};

void add_format(CLI::App* app, Format& f) {
  app->add_option("--format", f, "Output format")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
}

struct IngestFlags {
  bool keep_oob = false;
  bool multi_category = false;

  IngestOptions options() const {
    IngestOptions o;
    o.clip_out_of_bounds = !keep_oob;
    o.strict_single_category = !multi_category;
    return o;
  }
};

void add_ingest_flags(CLI::App* app, IngestFlags& f) {
  app->add_flag("--keep-oob", f.keep_oob, "Keep boxes that extend past the image instead of clipping");
  app->add_flag("--multi-category", f.multi_category, "Allow more than one category in the file");
}

void add_mock_flags(CLI::App* app, MockParams& m) {
  app->add_option("--jitter", m.jitter_frac, "Mock: per-coordinate jitter as a fraction of box size")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--drop", m.drop_rate, "Mock: probability of dropping a GT box")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--spurious", m.spurious_rate, "Mock: expected spurious boxes per image")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--score-noise", m.score_noise, "Mock: width of score noise below 1.0")
      ->check(CLI::Range(0.0, 1.0));
}

struct RunFlags {
  std::string gt;
  std::string backend = kMockBackend;
  std::string adapter_cmd;
  std::uint64_t seed = 0;
  double box_threshold = DetectorParams{}.box_threshold;
  double text_threshold = DetectorParams{}.text_threshold;
  std::string iou;
  std::optional<double> subsample;
  std::uint64_t subsample_seed = 0;
  std::string image_root;
  std::string runs_dir = "runs";
  bool allow_partial = false;
  bool top1 = false;
  std::size_t max_in_flight = 4;
  long timeout_ms = 60000;
  long startup_timeout_ms = 120000;
  MockParams mock;
  IngestFlags ingest;
  Format format = Format::Text;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--gt", f.gt, "COCO ground-truth file")->required();
  app->add_option("--backend", f.backend, "Backend name; \"mock\" runs the built-in synthetic detector");
  app->add_option("--adapter-cmd", f.adapter_cmd, "Adapter launch command")->envname("ZSD_ADAPTER_CMD");
  app->add_option("--box-threshold", f.box_threshold, "Detector box threshold")->check(CLI::Range(0.0, 1.0));
  app->add_option("--text-threshold", f.text_threshold, "Detector text threshold")->check(CLI::Range(0.0, 1.0));
  app->add_option("--iou", f.iou, "Extra IoU thresholds, comma separated");
  app->add_option("--subsample", f.subsample, "Evaluate a seeded random fraction of the images")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--subsample-seed", f.subsample_seed, "Seed for --subsample");
  app->add_option("--image-root", f.image_root, "Directory image file names are resolved against");
  app->add_option("--runs-dir", f.runs_dir, "Run store directory");
  app->add_flag("--allow-partial", f.allow_partial, "Evaluate runs where some images failed");
  app->add_flag("--top1", f.top1, "Keep only the highest-scoring detection per image");
  app->add_option("--max-in-flight", f.max_in_flight, "Adapter requests in flight")->check(CLI::PositiveNumber);
  app->add_option("--timeout-ms", f.timeout_ms, "Adapter response timeout")->check(CLI::PositiveNumber);
  app->add_option("--startup-timeout-ms", f.startup_timeout_ms, "Adapter handshake timeout")
      ->check(CLI::PositiveNumber);
  add_mock_flags(app, f.mock);
  add_ingest_flags(app, f.ingest);
  add_format(app, f.format);
}

ExperimentSpec base_spec(const RunFlags& f) {
  ExperimentSpec s;
  s.dataset_ref = f.gt;
  s.backend.name = f.backend;
  if (!s.backend.is_mock()) s.backend.command = f.adapter_cmd;
  s.seed = f.seed;
  s.detector_params = {f.box_threshold, f.text_threshold};
  if (!f.iou.empty()) s.thresholds = ThresholdGrid::parse(f.iou);
  if (f.subsample) s.subsample = Subsample{*f.subsample, f.subsample_seed};
  if (!f.image_root.empty()) s.image_root = f.image_root;
  s.mock = f.mock;
  s.mock.seed = f.seed;
  return s;
}

RunOptions run_options(const RunFlags& f, RunStore* store) {
  RunOptions o;
  o.allow_partial = f.allow_partial;
  o.top1 = f.top1;
  o.adapter.max_in_flight = f.max_in_flight;
  o.adapter.request_timeout = std::chrono::milliseconds(f.timeout_ms);
  o.adapter.startup_timeout = std::chrono::milliseconds(f.startup_timeout_ms);
  o.ingest = f.ingest.options();
  o.store = store;
  return o;
}

void print_eval(std::ostream& out, const EvalReport& r, Format format) {
  switch (format) {
    case Format::Json:
      out << report_to_json(r) << "\n";
      return;
    case Format::Csv:
      out << report_csv_header() << "\n" << report_csv_row(r) << "\n";
      return;
    case Format::Text:
      break;
  }
  fmt::print(out, "images {}  gts {}  detections {}\n", r.counts.images, r.counts.gts,
             r.counts.detections);
  fmt::print(out, "map50 = {:.3f}\nmap75 = {:.3f}\nmap5095 = {:.3f}\n", r.map50, r.map75, r.map5095);
  for (const auto& [t, ap] : r.ap_by_threshold) fmt::print(out, "  AP@{:.2f} = {:.4f}\n", t, ap);
  if (r.partial) fmt::print(out, "PARTIAL: evaluated without all images\n");
  for (const auto& w : r.warnings) fmt::print(out, "warning: {}\n", w);
}

void print_record(std::ostream& out, const RunRecord& r, Format format) {
  if (format == Format::Json) {
    out << to_json(r).dump(2) << "\n";
    return;
  }
  if (format == Format::Csv) {
    out << "record_dir,prompt_number,backend,seed,status," << report_csv_header() << "\n";
    fmt::print(out, "{},{},{},{},{},{}\n", r.record_dir.string(),
               r.spec.prompt_number ? std::to_string(*r.spec.prompt_number) : "",
               r.spec.backend.name, r.spec.seed,
               r.status.ok ? "ok" : std::string(to_string(*r.status.code)),
               r.report ? report_csv_row(*r.report) : ",,,,,,");
    return;
  }
  fmt::print(out, "run {} [{}] seed {}: ", r.record_dir.filename().string(), r.spec.backend.name,
             r.spec.seed);
  if (r.status.ok) {
    fmt::print(out, "map50 = {:.3f}  map75 = {:.3f}  map5095 = {:.3f}{}\n", r.report->map50,
               r.report->map75, r.report->map5095, r.report->partial ? "  (partial)" : "");
  } else {
    fmt::print(out, "failed: {}: {}\n", to_string(*r.status.code), r.status.reason);
  }
}

void print_table(std::ostream& out, const ReportTable& t, Format format, int decimals) {
  switch (format) {
    case Format::Json: out << render_json(t); break;
    case Format::Csv: out << render_csv(t); break;
    case Format::Text: out << render_text(t, decimals); break;
  }
}

int exit_code_for(const RunRecord& r) {
  if (r.status.ok) return kExitOk;
  return r.status.code && is_adapter_error(*r.status.code) ? kExitAdapter : kExitValidation;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Benchmark harness for prompt-guided zero-shot object detection", "zsdbench"};
  app.set_config("--config", "", "TOML config file; explicit flags take precedence");
  app.require_subcommand(1);

  // ingest
  std::string ingest_gt;
  IngestFlags ingest_flags;
  bool ingest_reject = false;
  Format ingest_format = Format::Text;
  auto* ingest = app.add_subcommand("ingest", "Validate a COCO file and report counts and rejections");
  ingest->add_option("--gt", ingest_gt, "COCO ground-truth file")->required();
  add_ingest_flags(ingest, ingest_flags);
  ingest->add_flag("--reject-invalid", ingest_reject,
                   "List invalid annotations instead of stopping at the first");
  add_format(ingest, ingest_format);

  // evaluate
  std::string eval_gt, eval_det, eval_iou;
  bool eval_top1 = false, eval_strict = false;
  std::optional<std::int64_t> eval_category;
  IngestFlags eval_ingest;
  Format eval_format = Format::Text;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a detections file against ground truth");
  evaluate_cmd->add_option("--gt", eval_gt, "COCO ground-truth file")->required();
  evaluate_cmd->add_option("--det", eval_det, "Detections file")->required();
  evaluate_cmd->add_option("--iou", eval_iou, "Extra IoU thresholds, comma separated");
  evaluate_cmd->add_flag("--top1", eval_top1, "Keep only the highest-scoring detection per image");
  evaluate_cmd->add_flag("--strict-no-gt", eval_strict, "Fail instead of reporting 0 when there is no GT");
  evaluate_cmd->add_option("--category", eval_category, "Category id to evaluate");
  add_ingest_flags(evaluate_cmd, eval_ingest);
  add_format(evaluate_cmd, eval_format);

  // mock-detect
  std::string mock_gt, mock_out = "-", mock_prompt;
  MockParams mock_params;
  IngestFlags mock_ingest;
  auto* mock_cmd = app.add_subcommand("mock-detect", "Write synthetic detections derived from ground truth");
  mock_cmd->add_option("--gt", mock_gt, "COCO ground-truth file")->required();
  mock_cmd->add_option("--out", mock_out, "Output detections file, - for stdout");
  mock_cmd->add_option("--prompt", mock_prompt, "Prompt recorded in provenance");
  mock_cmd->add_option("--seed", mock_params.seed, "Random seed");
  add_mock_flags(mock_cmd, mock_params);
  add_ingest_flags(mock_cmd, mock_ingest);

  // run
  RunFlags run_flags;
  std::string run_prompt;
  std::optional<int> run_prompt_number;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment and append it to the run store");
  add_run_flags(run_cmd, run_flags);
  run_cmd->add_option("--prompt", run_prompt, "Text prompt")->required();
  run_cmd->add_option("--prompt-number", run_prompt_number, "Prompt number for reports");
  run_cmd->add_option("--seed", run_flags.seed, "Run seed");

  // sweep
  RunFlags sweep_flags;
  std::string sweep_cascade, sweep_separator{kCascadeSeparator};
  std::size_t sweep_runs = 1;
  std::uint64_t sweep_seed_base = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every cascade prompt several times and report");
  add_run_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--cascade", sweep_cascade, "Cascade file, one fragment per line")->required();
  sweep_cmd->add_option("--runs", sweep_runs, "Runs per prompt")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed-base", sweep_seed_base, "Seed of run 0; run r uses seed-base + r");
  sweep_cmd->add_option("--separator", sweep_separator, "Override the \", \" fragment separator");

  // report
  std::string report_dir = "runs", report_group = "prompt", report_ci = "t";
  int report_decimals = 3;
  Format report_format = Format::Text;
  auto* report_cmd = app.add_subcommand("report", "Aggregate a run store into prompt or backend tables");
  report_cmd->add_option("--runs-dir", report_dir, "Run store directory");
  report_cmd->add_option("--group-by", report_group, "prompt or backend")
      ->check(CLI::IsMember({"prompt", "backend"}));
  report_cmd->add_option("--ci", report_ci, "Interval: t (Student) or normal")
      ->check(CLI::IsMember({"t", "normal"}));
  report_cmd->add_option("--decimals", report_decimals, "Digits after the decimal point")
      ->check(CLI::Range(0, 9));
  add_format(report_cmd, report_format);

  // crossover
  std::string cross_curves, cross_targets, cross_plot_dir;
  Format cross_format = Format::Text;
  auto* cross_cmd = app.add_subcommand("crossover", "Find where fine-tuned curves reach zero-shot scores");
  cross_cmd->add_option("--curves", cross_curves, "CSV with model,dataset,samples,map50")->required();
  cross_cmd->add_option("--zero-shot", cross_targets, "DATASET=MAP50 pairs, comma separated")->required();
  cross_cmd->add_option("--plot-dir", cross_plot_dir, "Write one SVG chart per dataset here");
  add_format(cross_cmd, cross_format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*ingest) {
      IngestOptions opts = ingest_flags.options();
      opts.reject_invalid = ingest_reject;
      const IngestResult r = ingest_ground_truth(ingest_gt, opts);
      if (ingest_format == Format::Json) {
        nlohmann::json rej = nlohmann::json::array();
        for (const auto& x : r.rejections) {
          rej.push_back({{"element", x.element},
                         {"id", x.id},
                         {"error", std::string(to_string(x.code))},
                         {"message", x.message}});
        }
        out << nlohmann::json{{"images", r.dataset.images().size()},
                              {"annotations", r.dataset.annotations().size()},
                              {"categories", r.dataset.categories().size()},
                              {"source_images", r.source_images},
                              {"source_annotations", r.source_annotations},
                              {"out_of_bounds", r.out_of_bounds},
                              {"rejections", rej}}
                   .dump(2)
            << "\n";
      } else if (ingest_format == Format::Csv) {
        out << "element,id,error,message\n";
        for (const auto& x : r.rejections) {
          fmt::print(out, "{},{},{},\"{}\"\n", x.element, x.id, to_string(x.code), x.message);
        }
      } else {
        fmt::print(out, "images: {} (source {})\n", r.dataset.images().size(), r.source_images);
        fmt::print(out, "annotations: {} (source {})\n", r.dataset.annotations().size(),
                   r.source_annotations);
        fmt::print(out, "categories: {}\n", r.dataset.categories().size());
        fmt::print(out, "out of bounds: {} ({})\n", r.out_of_bounds,
                   ingest_flags.keep_oob ? "kept" : "clipped");
        fmt::print(out, "rejected: {}\n", r.rejections.size());
        for (const auto& x : r.rejections) {
          fmt::print(out, "  {} {}: {}: {}\n", x.element, x.id, to_string(x.code), x.message);
        }
      }
      return r.rejections.empty() ? kExitOk : kExitValidation;
    }

    if (*evaluate_cmd) {
      const GroundTruthDataset gt = parse_ground_truth(eval_gt, eval_ingest.options());
      DetectionSet det = parse_detections(eval_det);
      if (eval_top1) det = keep_top1(det);
      EvalOptions opts;
      opts.strict_no_ground_truth = eval_strict;
      opts.category_id = eval_category;
      const auto grid = eval_iou.empty() ? ThresholdGrid::coco_default() : ThresholdGrid::parse(eval_iou);
      print_eval(out, evaluate(gt, det, grid, opts), eval_format);
      return kExitOk;
    }

    if (*mock_cmd) {
      const GroundTruthDataset gt = parse_ground_truth(mock_gt, mock_ingest.options());
      const DetectionSet d = mock_detect(gt, mock_params, mock_prompt);
      if (mock_out == "-") {
        out << serialize_detections(d);
      } else {
        write_detections(d, mock_out);
      }
      return kExitOk;
    }

    if (*run_cmd) {
      ExperimentSpec spec = base_spec(run_flags);
      spec.prompt = run_prompt;
      spec.prompt_number = run_prompt_number;
      RunStore store(run_flags.runs_dir);
      const RunRecord r = run_experiment(spec, run_options(run_flags, &store));
      print_record(out, r, run_flags.format);
      if (!r.status.ok) fmt::print(err, "error: {}: {}\n", to_string(*r.status.code), r.status.reason);
      return exit_code_for(r);
    }

    if (*sweep_cmd) {
      const PromptCascade cascade = read_cascade_file(sweep_cascade, sweep_separator);
      const auto plan = sweep_plan(cascade, base_spec(sweep_flags), sweep_runs, sweep_seed_base);
      RunStore store(sweep_flags.runs_dir);
      const RunOptions opts = run_options(sweep_flags, &store);
      std::vector<RunRecord> records;
      int code = kExitOk;
      for (const auto& spec : plan) {
        records.push_back(run_experiment(spec, opts));
        const RunRecord& r = records.back();
        if (!r.status.ok) {
          fmt::print(err, "prompt {} seed {}: {}: {}\n", *spec.prompt_number, spec.seed,
                     to_string(*r.status.code), r.status.reason);
          code = std::max(code, exit_code_for(r));
        }
      }
      fmt::print(err, "{} run records written to {}\n", records.size(), store.root().string());
      print_table(out, table_report(records, GroupBy::Prompt), sweep_flags.format, 3);
      return code;
    }

    if (*report_cmd) {
      RunStore store(report_dir);
      const auto records = store.load_all();
      const ReportTable t =
          table_report(records, report_group == "backend" ? GroupBy::Backend : GroupBy::Prompt,
                       report_ci == "normal" ? CiMethod::Normal : CiMethod::StudentT);
      print_table(out, t, report_format, report_decimals);
      return kExitOk;
    }

    if (*cross_cmd) {
      const auto curves = import_learning_curves(cross_curves);
      const auto targets = parse_zero_shot_targets(cross_targets);
      const auto rows = crossover_table(curves, targets);
      switch (cross_format) {
        case Format::Json: out << render_crossover_json(rows); break;
        case Format::Csv: out << render_crossover_csv(rows); break;
        case Format::Text: out << render_crossover_text(rows); break;
      }
      if (!cross_plot_dir.empty()) {
        std::filesystem::create_directories(cross_plot_dir);
        for (const auto& [dataset, value] : targets) {
          write_text_file(std::filesystem::path(cross_plot_dir) / (dataset + ".svg"),
                          render_crossover_svg(curves, dataset, value));
        }
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return is_adapter_error(e.code()) ? kExitAdapter : kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace zsd::cli
