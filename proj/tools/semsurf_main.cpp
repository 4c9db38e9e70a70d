#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "semsurf/dataset.hpp"
#include "semsurf/eval.hpp"
#include "semsurf/manifest.hpp"
#include "semsurf/mesher.hpp"
#include "semsurf/parallel.hpp"
#include "semsurf/sha1.hpp"
#include "semsurf/trainer.hpp"

namespace fs = std::filesystem;
using namespace semsurf;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

/// Accepts both trainer checkpoints and bare field checkpoints.
FieldBundle<float> load_bundle(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw io_error("cannot open " + path);
  char magic[8] = {};
  probe.read(magic, 8);
  probe.close();
  if (std::string(magic, 8) == std::string(Trainer::kMagic, 8)) {
    BlobReader r(path, Trainer::kMagic);
    return FieldBundle<float>::load_params(r);
  }
  return FieldBundle<float>::load(path);
}

RunManifest make_manifest(const CLI::App& cmd, std::uint64_t seed) {
  RunManifest m;
  m.command = cmd.get_name();
  m.seed = seed;
  m.created_utc = utc_timestamp();
  for (const CLI::Option* opt : cmd.get_options()) {
    const std::string name = opt->get_name();
    if (name.empty() || name == "--help") continue;
    if (opt->count() > 0 || !opt->get_default_str().empty())
      m.config[name] = opt->count() > 0 ? opt->results().front() : opt->get_default_str();
  }
  return m;
}

struct GenerateArgs {
  std::string scene = "room-1";
  std::string out;
  int views = 20;
  int size = 64;
  std::uint64_t seed = 1;
  bool force = false;
  NoiseSpec noise;
  std::string segment_source = "gt-regions";
};

void run_generate(const GenerateArgs& a, const CLI::App& cmd) {
  if (fs::exists(a.out) && !fs::is_empty(a.out) && !a.force)
    throw io_error("output directory exists and is not empty (use --force): " + a.out);
  NoiseSpec noise = a.noise;
  if (a.segment_source == "gt-regions")
    noise.segment_source = SegmentSource::GtRegions;
  else if (a.segment_source == "grid")
    noise.segment_source = SegmentSource::Grid;
  else
    throw CLI::ValidationError("--segment-source must be gt-regions or grid");
  const AnalyticScene scene = make_scene(a.scene);
  make_dataset(scene, a.views, a.size, noise, a.seed, a.out);
  RunManifest m = make_manifest(cmd, a.seed);
  m.dataset_hash = sha1_directory(a.out);
  m.outputs = {a.out};
  m.save(a.out + "/manifest.json");
  std::printf("dataset written to %s (%d views, %dx%d)\n", a.out.c_str(), a.views, a.size,
              a.size);
}

struct TrainArgs {
  std::string dataset;
  std::string out = "run";
  std::string preset;
  std::string resume;
  TrainConfig cfg;
  int threads = 0;
};

void run_train(const TrainArgs& a, const CLI::App& cmd) {
  set_thread_count(a.threads);
  Dataset dataset = Dataset::load(a.dataset);
  TrainConfig cfg = a.cfg;
  if (!a.preset.empty()) apply_preset(cfg, a.preset);
  cfg.out_dir = a.out;
  fs::create_directories(a.out);

  Trainer trainer(dataset, cfg);
  if (!a.resume.empty()) trainer.load_checkpoint(a.resume);
  const auto history = trainer.fit();

  RunManifest m = make_manifest(cmd, cfg.seed);
  m.dataset_hash = sha1_directory(a.dataset);
  m.outputs = {a.out + "/checkpoint.bin", a.out + "/losses.csv"};
  m.save(a.out + "/manifest.json");
  if (!history.empty())
    std::printf("trained %zu iterations, final total loss %.6f\n", history.size(),
                history.back().total);
  std::printf("checkpoint: %s/checkpoint.bin\n", a.out.c_str());
}

struct ExtractArgs {
  std::string checkpoint;
  std::string out = "mesh.ply";
  int resolution = 128;
  bool ascii = false;
  int threads = 0;
};

void run_extract(const ExtractArgs& a, const CLI::App& cmd) {
  set_thread_count(a.threads);
  FieldBundle<float> bundle = load_bundle(a.checkpoint);
  const SdfSampler sdf = make_sdf_sampler(bundle);
  const LabelSampler labeler = make_label_sampler(bundle);
  LabeledMesh mesh = extract_mesh(sdf, bundle.cfg.bbox, a.resolution, &labeler);
  write_ply(a.out, mesh, !a.ascii);
  if (const auto dir = fs::path(a.out).parent_path(); !dir.empty()) {
    RunManifest m = make_manifest(cmd, 0);
    m.outputs = {a.out};
    m.save((dir / "manifest.json").string());
  }
  std::printf("mesh: %zu vertices, %zu triangles -> %s\n", mesh.vertices.size(),
              mesh.triangles.size(), a.out.c_str());
}

struct EvalArgs {
  std::string checkpoint;
  std::string dataset;
  std::string out = "eval";
  EvalConfig cfg;
  int threads = 0;
};

void run_eval(const EvalArgs& a, const CLI::App& cmd) {
  set_thread_count(a.threads);
  FieldBundle<float> bundle = load_bundle(a.checkpoint);
  Dataset dataset = Dataset::load(a.dataset);
  fs::create_directories(a.out);
  LabeledMesh mesh;
  const MetricsReport report = evaluate_run(bundle, dataset, a.cfg, &mesh);
  write_report(a.out + "/report.txt", a.out + "/report.csv", report);
  write_ply(a.out + "/mesh.ply", mesh, true);
  RunManifest m = make_manifest(cmd, a.cfg.seed);
  m.dataset_hash = sha1_directory(a.dataset);
  m.outputs = {a.out + "/report.txt", a.out + "/report.csv", a.out + "/mesh.ply"};
  m.save(a.out + "/manifest.json");
  std::printf("2d acc/macc/miou: %.4f %.4f %.4f\n", report.semantic2d.acc, report.semantic2d.macc,
              report.semantic2d.miou);
  std::printf("3d acc/macc/miou: %.4f %.4f %.4f\n", report.semantic3d.acc, report.semantic3d.macc,
              report.semantic3d.miou);
  std::printf("geometry acc/comp: %.4f %.4f  prec/recall/f: %.4f %.4f %.4f  chamfer: %.6f\n",
              report.geometry.accuracy, report.geometry.completeness, report.geometry.precision,
              report.geometry.recall, report.geometry.fscore, report.geometry.chamfer);
}

struct RenderArgs {
  std::string checkpoint;
  std::string dataset;
  std::string out = "render";
  int view = 0;
  RenderOptions opts;
  int threads = 0;
};

void run_render(const RenderArgs& a, const CLI::App& cmd) {
  set_thread_count(a.threads);
  FieldBundle<float> bundle = load_bundle(a.checkpoint);
  Dataset dataset = Dataset::load(a.dataset);
  if (a.view < 0 || a.view >= int(dataset.frames.size()))
    throw io_error("view id out of range: " + std::to_string(a.view));
  RenderOptions opts = a.opts;
  opts.want_rgb = true;
  opts.want_normal = true;
  const Frame& frame = dataset.frames[std::size_t(a.view)];
  const RenderedView view = render_view(bundle, dataset.intrinsics, frame.pose, opts);
  fs::create_directories(a.out);
  char sfx[16];
  std::snprintf(sfx, sizeof(sfx), "%04d", a.view);
  write_ppm(a.out + "/render_rgb_" + sfx + ".ppm", view.rgb);
  write_pgm(a.out + "/render_label_" + sfx + ".pgm", view.label);
  Image<std::uint8_t> ones(view.normal.width, view.normal.height, 1);
  write_normal_map(a.out + "/render_normal_" + sfx + ".bin", view.normal, ones);
  RunManifest m = make_manifest(cmd, 0);
  m.dataset_hash = sha1_directory(a.dataset);
  m.outputs = {a.out};
  m.save(a.out + "/manifest.json");
  std::printf("rendered view %d -> %s\n", a.view, a.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic surface reconstruction from posed images and noisy priors"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file (key = value, [sections] per subcommand)");

  GenerateArgs gen;
  CLI::App* cmd_generate = app.add_subcommand("generate", "Write a synthetic dataset");
  cmd_generate->add_option("--scene", gen.scene, "Scene name")->capture_default_str();
  cmd_generate->add_option("--out", gen.out, "Output directory")->required();
  cmd_generate->add_option("--views", gen.views)->capture_default_str();
  cmd_generate->add_option("--size", gen.size, "Image side length")->capture_default_str();
  cmd_generate->add_option("--seed", gen.seed)->capture_default_str();
  cmd_generate->add_flag("--force", gen.force, "Overwrite a non-empty output directory");
  cmd_generate->add_option("--flip-rate", gen.noise.label_region_flip_rate)
      ->capture_default_str();
  cmd_generate->add_option("--label-jitter", gen.noise.label_boundary_jitter)
      ->capture_default_str();
  cmd_generate->add_option("--normal-sigma", gen.noise.normal_angle_sigma)
      ->capture_default_str();
  cmd_generate->add_option("--normal-invalid-rate", gen.noise.normal_invalid_rate)
      ->capture_default_str();
  cmd_generate->add_option("--segment-source", gen.segment_source, "gt-regions | grid")
      ->capture_default_str();
  cmd_generate->add_option("--segment-jitter", gen.noise.segment_boundary_jitter)
      ->capture_default_str();
  cmd_generate->add_option("--min-segment-pixels", gen.noise.min_segment_pixels,
                           "Minimum segment size (-1: 4000 scaled by image area)")
      ->capture_default_str();

  TrainArgs tr;
  CLI::App* cmd_train = app.add_subcommand("train", "Optimize the fields on a dataset");
  cmd_train->add_option("dataset", tr.dataset, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd_train->add_option("--out", tr.out, "Run directory")->capture_default_str();
  cmd_train->add_option("--preset", tr.preset, "model-a|model-b|model-c|model-d|ours");
  cmd_train->add_option("--resume", tr.resume, "Checkpoint to resume from");
  cmd_train->add_option("--iters", tr.cfg.iterations)->capture_default_str();
  cmd_train->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
  cmd_train->add_option("--rays-per-batch", tr.cfg.rays_per_batch)->capture_default_str();
  cmd_train->add_option("--samples-per-ray", tr.cfg.samples_per_ray)->capture_default_str();
  cmd_train->add_option("--seed", tr.cfg.seed)->capture_default_str();
  cmd_train->add_option("--threads", tr.threads, "0 = all cores (or MOSE_LITE_THREADS)")
      ->capture_default_str();
  cmd_train->add_option("--checkpoint-every", tr.cfg.checkpoint_every)->capture_default_str();
  cmd_train->add_flag("--stop-gradient,!--no-stop-gradient", tr.cfg.stop_gradient)
      ->capture_default_str();
  cmd_train->add_flag("--lcf,!--no-lcf", tr.cfg.lcf)->capture_default_str();
  cmd_train->add_flag("--sgr,!--no-sgr", tr.cfg.sgr)->capture_default_str();
  cmd_train->add_flag("--jitter,!--no-jitter", tr.cfg.jitter)->capture_default_str();
  cmd_train->add_option("--w-c", tr.cfg.weights.w_c)->capture_default_str();
  cmd_train->add_option("--w-n", tr.cfg.weights.w_n)->capture_default_str();
  cmd_train->add_option("--w-s", tr.cfg.weights.w_s)->capture_default_str();
  cmd_train->add_option("--w-con", tr.cfg.weights.w_con)->capture_default_str();
  cmd_train->add_option("--w-sgr", tr.cfg.weights.w_sgr)->capture_default_str();
  cmd_train->add_option("--min-group-size", tr.cfg.min_group_size)->capture_default_str();
  cmd_train->add_option("--eikonal-points", tr.cfg.eikonal_points)->capture_default_str();
  cmd_train->add_option("--sgr-warmup", tr.cfg.sgr_warmup)->capture_default_str();
  cmd_train
      ->add_flag("--sgr-per-point,!--sgr-ray-broadcast", tr.cfg.sgr_per_point,
                 "Per-point semantic weighting (default) vs ray-broadcast")
      ->capture_default_str();
  bool vote_labels = false;
  cmd_train->add_flag("--vote-input-labels", vote_labels,
                      "Vote group classes from input labels instead of rendered predictions");
  cmd_train->add_option("--sdf-width", tr.cfg.field.sdf_width)->capture_default_str();
  cmd_train->add_option("--sdf-hidden", tr.cfg.field.sdf_hidden)->capture_default_str();
  cmd_train->add_option("--feature-dim", tr.cfg.field.feature_dim)->capture_default_str();

  ExtractArgs ex;
  CLI::App* cmd_extract = app.add_subcommand("extract", "Extract the labeled surface mesh");
  cmd_extract->add_option("checkpoint", ex.checkpoint)->required()->check(CLI::ExistingFile);
  cmd_extract->add_option("--out", ex.out)->capture_default_str();
  cmd_extract->add_option("--resolution", ex.resolution)->capture_default_str();
  cmd_extract->add_flag("--ascii", ex.ascii, "Write ASCII PLY instead of binary");
  cmd_extract->add_option("--threads", ex.threads)->capture_default_str();

  EvalArgs ev;
  CLI::App* cmd_eval = app.add_subcommand("eval", "Score a checkpoint against a dataset");
  cmd_eval->add_option("checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  cmd_eval->add_option("dataset", ev.dataset)->required()->check(CLI::ExistingDirectory);
  cmd_eval->add_option("--out", ev.out)->capture_default_str();
  cmd_eval->add_option("--resolution", ev.cfg.mesh_resolution)->capture_default_str();
  cmd_eval->add_option("--n-samples", ev.cfg.n_samples)->capture_default_str();
  cmd_eval->add_option("--threshold", ev.cfg.threshold)->capture_default_str();
  cmd_eval->add_option("--samples-per-ray", ev.cfg.samples_per_ray)->capture_default_str();
  cmd_eval->add_option("--seed", ev.cfg.seed)->capture_default_str();
  cmd_eval->add_option("--threads", ev.threads)->capture_default_str();

  RenderArgs rd;
  CLI::App* cmd_render = app.add_subcommand("render", "Render RGB/normal/label images");
  cmd_render->add_option("checkpoint", rd.checkpoint)->required()->check(CLI::ExistingFile);
  cmd_render->add_option("dataset", rd.dataset)->required()->check(CLI::ExistingDirectory);
  cmd_render->add_option("--view", rd.view)->capture_default_str();
  cmd_render->add_option("--out", rd.out)->capture_default_str();
  cmd_render->add_option("--samples-per-ray", rd.opts.samples_per_ray)->capture_default_str();
  cmd_render->add_option("--threads", rd.threads)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (cmd_train->parsed() && vote_labels) tr.cfg.vote_source = VoteSource::InputLabels;
    if (cmd_generate->parsed()) run_generate(gen, *cmd_generate);
    if (cmd_train->parsed()) run_train(tr, *cmd_train);
    if (cmd_extract->parsed()) run_extract(ex, *cmd_extract);
    if (cmd_eval->parsed()) run_eval(ev, *cmd_eval);
    if (cmd_render->parsed()) run_render(rd, *cmd_render);
  } catch (const input_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numerical fault: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
