// SPDX-License-Identifier: Apache-2.0
//
// nerfgan: train a conditional NeRF GAN on single-view images and run
// novel-view synthesis, sampling, interpolation, latent refinement,
// evaluation, and synthetic dataset generation.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "nerfgan/checkpoint.hpp"
#include "nerfgan/evaluate.hpp"
#include "nerfgan/inference.hpp"
#include "nerfgan/manifest.hpp"
#include "nerfgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace nerfgan;

namespace {

struct GlobalOptions {
  std::string out;
  std::optional<std::uint64_t> seed;
  bool deterministic = true;
  std::string precision = "f32";
};

std::string default_out_root() {
  if (const char* env = std::getenv("NERFGAN_OUT")) return env;
  return "runs";
}

std::vector<Pose> parse_pose_list(const std::string& text, const PosePrior& prior) {
  std::vector<Pose> poses;
  if (text.rfind("turntable:", 0) == 0) {
    const int k = std::stoi(text.substr(10));
    if (k < 1) throw ConfigError("poses: turntable count must be >= 1");
    const double pitch = prior.mean_pose().pitch;
    for (int i = 0; i < k; ++i) poses.push_back(Pose{pitch, 2 * kPi * i / k});
    return poses;
  }
  std::stringstream ss(text);
  std::string pair;
  while (std::getline(ss, pair, ',')) {
    const auto slash = pair.find('/');
    if (slash == std::string::npos)
      throw ConfigError("poses: expected pitch/yaw pairs or turntable:k, got '" + pair + "'");
    poses.push_back(Pose{std::stod(pair.substr(0, slash)), std::stod(pair.substr(slash + 1))});
  }
  if (poses.empty()) throw ConfigError("poses: empty list");
  return poses;
}

RunManifest begin_manifest(const std::string& command, const std::vector<std::string>& argv,
                           std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.argv = argv;
  m.seed = seed;
  m.version = artifact_version();
  m.started_at = current_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& dir) {
  m.finished_at = current_timestamp();
  write_run_manifest(m, dir);
}

// Loads manifest + weights and builds a ready model. The checkpoint's own
// dtype decides the parameter precision.
template <class Real>
Trainer<Real> load_model(const std::string& checkpoint_dir) {
  const TrainingConfig cfg = config_from_manifest(read_manifest(checkpoint_dir));
  Trainer<Real> model(cfg);
  model.restore(load_checkpoint<Real>(checkpoint_dir, cfg));
  return model;
}

std::string checkpoint_dtype(const std::string& checkpoint_dir) {
  return read_manifest(checkpoint_dir).field("dtype");
}

template <class Real>
int run_train(const GlobalOptions& g, const std::string& config_path,
              const std::vector<std::string>& overrides, char ablation,
              const std::string& dataset_dir, int synthetic_scenes, std::int64_t iters,
              const std::string& resume_dir, const std::string& init_checkpoint,
              std::int64_t checkpoint_every, const std::vector<std::string>& argv) {
  TrainingConfig cfg =
      config_path.empty() ? parse_config_text("", overrides) : parse_config(config_path, overrides);
  if (g.seed) cfg.seed = *g.seed;
  cfg.deterministic = g.deterministic;
  if (iters > 0) {
    cfg.total_iterations = iters;
    cfg.validate();
  }
  if (ablation) cfg = ablation_config(ablation, cfg);

  const std::string run_dir = g.out;
  fs::create_directories(run_dir);
  RunManifest manifest = begin_manifest("train", argv, cfg.seed);
  manifest.ablation_tag = ablation;
  manifest.config_text = config_to_text(cfg);
  {
    std::ofstream cfg_out(fs::path(run_dir) / "resolved_config.cfg");
    cfg_out << manifest.config_text;
  }

  Dataset dataset;
  if (!dataset_dir.empty()) {
    dataset = load_image_folder(dataset_dir, false, stage_config(0, cfg.stages).resolution);
  } else {
    SyntheticOptions opt;
    opt.camera_radius = cfg.camera_radius;
    opt.camera_fov = cfg.camera_fov;
    dataset = make_synthetic_dataset(synthetic_scenes, 1, cfg.prior,
                                     stage_config(0, cfg.stages).resolution, cfg.seed ^ 0xda7aULL,
                                     opt);
  }
  std::cout << "training on " << dataset.size() << " images for " << cfg.total_iterations
            << " iterations\n";

  Trainer<Real> trainer(cfg);
  if (!resume_dir.empty()) trainer.restore(load_checkpoint<Real>(resume_dir, cfg));
  if (!init_checkpoint.empty()) {
    // Warm-start weights (e.g. a pretrained GAN for the frozen-GAN study)
    // without adopting the source iteration counter or optimizer state.
    TrainState<Real> init = load_checkpoint<Real>(init_checkpoint, cfg);
    for (const auto& [name, t] : init.params.all()) trainer.state().params.get(name).data = t.data;
  }
  if (ablation == 'A' && init_checkpoint.empty() && resume_dir.empty())
    std::cerr << "warning: ablation A trains an encoder against a frozen untrained GAN; "
                 "pass --init-checkpoint with a pretrained model\n";

  std::ofstream csv(fs::path(run_dir) / "train_log.csv",
                    resume_dir.empty() ? std::ios::trunc : std::ios::app);
  const std::int64_t remaining = cfg.total_iterations - trainer.state().iteration;
  std::int64_t done = 0;
  const std::int64_t chunk = checkpoint_every > 0 ? checkpoint_every : remaining;
  while (done < remaining) {
    const std::int64_t n = std::min(chunk, remaining - done);
    trainer.train(dataset.images(), n, &csv);
    done += n;
    csv.flush();
    save_checkpoint(fs::path(run_dir) / "checkpoint", trainer.state(), cfg);
    std::cout << "iteration " << trainer.state().iteration << "/" << cfg.total_iterations
              << " checkpoint saved\n";
  }

  manifest.outputs = {"checkpoint", "train_log.csv", "resolved_config.cfg"};
  finish_manifest(manifest, run_dir);
  return 0;
}

template <class Real>
int run_render(const GlobalOptions& g, const std::string& checkpoint, const std::string& input,
               const std::string& poses_text, std::optional<int> resolution,
               const std::vector<std::string>& argv) {
  Trainer<Real> model = load_model<Real>(checkpoint);
  RunManifest manifest = begin_manifest("render", argv, g.seed.value_or(model.config().seed));
  manifest.config_text = config_to_text(model.config());
  const ImageTensor img = read_png(input);
  ViewRequest req;
  req.poses = parse_pose_list(poses_text, model.config().prior);
  req.resolution = resolution;
  const auto views = novel_views(model, img, req);
  fs::create_directories(g.out);
  for (std::size_t i = 0; i < views.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03zu.png", i);
    write_png((fs::path(g.out) / name).string(), views[i]);
    manifest.outputs.push_back(name);
  }
  finish_manifest(manifest, g.out);
  std::cout << "wrote " << views.size() << " views to " << g.out << "\n";
  return 0;
}

template <class Real>
int run_sample(const GlobalOptions& g, const std::string& checkpoint, int n,
               std::optional<int> resolution, const std::vector<std::string>& argv) {
  Trainer<Real> model = load_model<Real>(checkpoint);
  const std::uint64_t seed = g.seed.value_or(model.config().seed);
  RunManifest manifest = begin_manifest("sample", argv, seed);
  manifest.config_text = config_to_text(model.config());
  const auto samples = sample_unconditional(model, n, seed, resolution);
  fs::create_directories(g.out);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03zu.png", i);
    write_png((fs::path(g.out) / name).string(), samples[i]);
    manifest.outputs.push_back(name);
  }
  finish_manifest(manifest, g.out);
  std::cout << "wrote " << samples.size() << " samples to " << g.out << "\n";
  return 0;
}

template <class Real>
int run_interpolate(const GlobalOptions& g, const std::string& checkpoint, const std::string& a,
                    const std::string& b, int steps, const std::string& pose_mode,
                    const std::vector<std::string>& argv) {
  Trainer<Real> model = load_model<Real>(checkpoint);
  RunManifest manifest = begin_manifest("interpolate", argv, g.seed.value_or(model.config().seed));
  manifest.config_text = config_to_text(model.config());
  const PoseMode mode = pose_mode == "fixed" ? PoseMode::kFixed : PoseMode::kInterpolate;
  const auto frames = interpolate_images(model, read_png(a), read_png(b), steps, mode);
  fs::create_directories(g.out);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03zu.png", i);
    write_png((fs::path(g.out) / name).string(), frames[i]);
    manifest.outputs.push_back(name);
  }
  finish_manifest(manifest, g.out);
  std::cout << "wrote " << frames.size() << " frames to " << g.out << "\n";
  return 0;
}

template <class Real>
int run_refine(const GlobalOptions& g, const std::string& checkpoint, const std::string& input,
               int iterations, double step_size, const std::string& init, bool z_only,
               const std::vector<std::string>& argv) {
  Trainer<Real> model = load_model<Real>(checkpoint);
  const std::uint64_t seed = g.seed.value_or(model.config().seed);
  RunManifest manifest = begin_manifest("refine", argv, seed);
  manifest.config_text = config_to_text(model.config());
  RefineOptions opt;
  opt.iterations = iterations;
  opt.step_size = step_size;
  opt.init = init == "random" ? RefineOptions::Init::kRandom : RefineOptions::Init::kEncoder;
  opt.optimize_pose = !z_only;
  opt.seed = seed;
  const ImageTensor img = read_png(input);
  const RefineResult<Real> result = refine_latent(model, img, opt);
  fs::create_directories(g.out);
  write_png((fs::path(g.out) / "refined.png").string(), result.reconstruction);
  {
    std::ofstream out(fs::path(g.out) / "refined.json");
    out.precision(17);
    out << "{\n  \"initial_loss\": " << result.initial_loss
        << ",\n  \"final_loss\": " << result.final_loss << ",\n  \"pitch\": " << result.pose.pitch
        << ",\n  \"yaw\": " << result.pose.yaw << ",\n  \"z\": [";
    for (std::int64_t i = 0; i < result.z.numel(); ++i)
      out << (i ? ", " : "") << static_cast<double>(result.z.data[i]);
    out << "]\n}\n";
  }
  manifest.outputs = {"refined.png", "refined.json"};
  finish_manifest(manifest, g.out);
  std::cout << "refined loss " << result.initial_loss << " -> " << result.final_loss << "\n";
  return 0;
}

template <class Real>
int run_evaluate(const GlobalOptions& g, const std::string& checkpoint,
                 const std::string& dataset_dir, const std::string& mode, int n_samples,
                 const std::vector<std::string>& argv) {
  Trainer<Real> model = load_model<Real>(checkpoint);
  const std::uint64_t seed = g.seed.value_or(1234);
  RunManifest manifest = begin_manifest("evaluate", argv, seed);
  manifest.config_text = config_to_text(model.config());

  const Dataset dataset = load_image_folder(dataset_dir, false, model.config().base_resolution);
  EvaluateOptions opt;
  opt.mode = mode == "unconditional" ? EvalMode::kUnconditional : EvalMode::kConditional;
  opt.n_samples = n_samples;
  opt.seed = seed;
  const auto report = evaluate(model, dataset, opt);

  fs::create_directories(g.out);
  {
    std::ofstream out(fs::path(g.out) / "metrics.json");
    out.precision(17);
    out << "{\n  \"mode\": \"" << mode << "\",\n  \"metrics\": [\n";
    for (std::size_t i = 0; i < report.size(); ++i) {
      const auto& e = report[i];
      out << "    {\"name\": \"" << e.name << "\", \"value\": " << e.value
          << ", \"n_real\": " << e.n_real << ", \"n_gen\": " << e.n_gen << ", \"extractor\": \""
          << e.extractor << "\", \"seed\": " << e.seed
          << ", \"warning\": " << (e.warning ? "true" : "false") << "}"
          << (i + 1 < report.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
  }
  {
    const fs::path summary = fs::path(g.out) / "metrics_summary.csv";
    const bool fresh = !fs::exists(summary);
    std::ofstream out(summary, std::ios::app);
    out.precision(17);
    if (fresh) out << "mode,name,value,n_real,n_gen,extractor,seed,warning\n";
    for (const auto& e : report)
      out << mode << "," << e.name << "," << e.value << "," << e.n_real << "," << e.n_gen << ","
          << e.extractor << "," << e.seed << "," << (e.warning ? 1 : 0) << "\n";
  }
  for (const auto& e : report) std::cout << e.name << " = " << e.value << "\n";
  manifest.outputs = {"metrics.json", "metrics_summary.csv"};
  finish_manifest(manifest, g.out);
  return 0;
}

int run_make_dataset(const GlobalOptions& g, const std::string& config_path,
                     const std::vector<std::string>& overrides, int n_scenes, int views_per_scene,
                     int resolution, const std::vector<std::string>& argv) {
  TrainingConfig cfg =
      config_path.empty() ? parse_config_text("", overrides) : parse_config(config_path, overrides);
  const std::uint64_t seed = g.seed.value_or(cfg.seed);
  RunManifest manifest = begin_manifest("make-dataset", argv, seed);
  manifest.config_text = config_to_text(cfg);
  SyntheticOptions opt;
  opt.camera_radius = cfg.camera_radius;
  opt.camera_fov = cfg.camera_fov;
  const Dataset dataset =
      make_synthetic_dataset(n_scenes, views_per_scene, cfg.prior, resolution, seed, opt);
  save_dataset(dataset, g.out);
  manifest.outputs = {"ground_truth.txt"};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05zu.png", i);
    manifest.outputs.push_back(name);
  }
  finish_manifest(manifest, g.out);
  std::cout << "wrote " << dataset.size() << " images to " << g.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditional NeRF GAN: single-image novel view synthesis"};
  app.require_subcommand(1);

  GlobalOptions g;
  g.out = default_out_root();
  app.add_option("--out", g.out, "output directory for this run");
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed_value, "seed override");
  app.add_flag("--deterministic,!--no-deterministic", g.deterministic,
               "fixed reduction order and thread counts (default on)");
  app.add_option("--precision", g.precision,
                 "f32 or f64 for train/make-dataset; inference follows the checkpoint");

  std::vector<std::string> args(argv, argv + argc);

  auto* train = app.add_subcommand("train", "optimize a model on single-view images");
  std::string config_path, dataset_dir, resume_dir, init_checkpoint, ablation_str;
  std::vector<std::string> overrides;
  std::int64_t iters = 0, checkpoint_every = 0;
  int synthetic_scenes = 256;
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--override", overrides, "config overrides key=value")->take_all();
  train->add_option("--dataset", dataset_dir, "training image folder (PNG)");
  train->add_option("--synthetic-scenes", synthetic_scenes,
                    "generate a synthetic training set of this many scenes when no --dataset");
  train->add_option("--iters", iters, "override total_iterations");
  train->add_option("--ablation", ablation_str, "study tag A..J");
  train->add_option("--resume", resume_dir, "resume from a checkpoint directory");
  train->add_option("--init-checkpoint", init_checkpoint, "warm-start weights from a checkpoint");
  train->add_option("--checkpoint-every", checkpoint_every, "periodic checkpoint interval");

  auto* render = app.add_subcommand("render", "novel views of one input image");
  std::string checkpoint, input_path, poses_text = "turntable:8";
  int resolution = 0;
  render->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  render->add_option("--input", input_path, "input PNG")->required();
  render->add_option("--poses", poses_text, "pitch/yaw pairs 'p/y,p/y' or turntable:k");
  render->add_option("--resolution", resolution, "render resolution override");

  auto* sample = app.add_subcommand("sample", "unconditional samples from the priors");
  int n_samples = 8;
  sample->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  sample->add_option("--n", n_samples, "number of samples");
  sample->add_option("--resolution", resolution, "render resolution override");

  auto* interp = app.add_subcommand("interpolate", "walk the latent line between two images");
  std::string input_a, input_b, pose_mode = "interpolate";
  int steps = 8;
  interp->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  interp->add_option("--a", input_a, "first input PNG")->required();
  interp->add_option("--b", input_b, "second input PNG")->required();
  interp->add_option("--steps", steps, "number of frames (includes endpoints)");
  interp->add_option("--pose-mode", pose_mode, "interpolate | fixed");

  auto* refine = app.add_subcommand("refine", "latent optimization against one image");
  int refine_iters = 200;
  double step_size = 5e-3;
  std::string refine_init = "encoder";
  bool z_only = false;
  refine->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  refine->add_option("--input", input_path, "input PNG")->required();
  refine->add_option("--iters", refine_iters, "optimization iterations");
  refine->add_option("--step-size", step_size, "Adam step size");
  refine->add_option("--init", refine_init, "encoder | random");
  refine->add_flag("--z-only", z_only, "optimize the latent code only, keep the pose");

  auto* eval_cmd = app.add_subcommand("evaluate", "generative and reconstruction metrics");
  std::string eval_mode = "conditional";
  int eval_samples = 128;
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  eval_cmd->add_option("--dataset", dataset_dir, "real image folder")->required();
  eval_cmd->add_option("--mode", eval_mode, "conditional | unconditional");
  eval_cmd->add_option("--n-samples", eval_samples, "samples per side");

  auto* make_ds = app.add_subcommand("make-dataset", "procedural toy dataset with ground truth");
  int ds_scenes = 256, ds_views = 1, ds_resolution = 32;
  make_ds->add_option("--config", config_path, "config file for prior/camera settings");
  make_ds->add_option("--override", overrides, "config overrides key=value")->take_all();
  make_ds->add_option("--n-scenes", ds_scenes, "number of scenes");
  make_ds->add_option("--views-per-scene", ds_views, "views per scene");
  make_ds->add_option("--resolution", ds_resolution, "image resolution");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0; usage problems exit 2
  }

  if (*seed_opt) g.seed = seed_value;
  const std::optional<int> res_opt = resolution > 0 ? std::optional<int>(resolution) : std::nullopt;

  try {
    if (*train) {
      char tag = 0;
      if (!ablation_str.empty()) {
        if (ablation_str.size() != 1) throw ConfigError("--ablation expects a single tag A..J");
        tag = ablation_str[0];
      }
      if (g.precision == "f64")
        return run_train<double>(g, config_path, overrides, tag, dataset_dir, synthetic_scenes,
                                 iters, resume_dir, init_checkpoint, checkpoint_every, args);
      if (g.precision != "f32")
        throw ConfigError("precision must be f32 or f64, got '" + g.precision + "'");
      return run_train<float>(g, config_path, overrides, tag, dataset_dir, synthetic_scenes, iters,
                              resume_dir, init_checkpoint, checkpoint_every, args);
    }
    if (*render || *sample || *interp || *refine || *eval_cmd) {
      const bool f64 = checkpoint_dtype(checkpoint) == "f64";
      auto dispatch = [&](auto real_tag) -> int {
        using Real = decltype(real_tag);
        if (*render) return run_render<Real>(g, checkpoint, input_path, poses_text, res_opt, args);
        if (*sample) return run_sample<Real>(g, checkpoint, n_samples, res_opt, args);
        if (*interp)
          return run_interpolate<Real>(g, checkpoint, input_a, input_b, steps, pose_mode, args);
        if (*refine)
          return run_refine<Real>(g, checkpoint, input_path, refine_iters, step_size, refine_init,
                                  z_only, args);
        return run_evaluate<Real>(g, checkpoint, dataset_dir, eval_mode, eval_samples, args);
      };
      return f64 ? dispatch(double{}) : dispatch(float{});
    }
    if (*make_ds)
      return run_make_dataset(g, config_path, overrides, ds_scenes, ds_views, ds_resolution, args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
