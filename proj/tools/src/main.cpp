#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adaconv/data.hpp"
#include "adaconv/image.hpp"
#include "adaconv/infer.hpp"
#include "adaconv/inspect.hpp"
#include "adaconv/metrics.hpp"
#include "adaconv/net.hpp"
#include "adaconv/train.hpp"

namespace fs = std::filesystem;
using namespace adaconv;

namespace {

struct SynthDataArgs {
  std::string out;
  int clips = 16;
  double max_shift = 8.0;
  uint64_t seed = 1;
  int size = 96;
};

int run_synth_data(const SynthDataArgs& args) {
  MotionSpec spec;
  spec.width = args.size;
  spec.height = args.size;
  spec.max_shift = static_cast<float>(args.max_shift);
  Rng rng(args.seed);
  for (int i = 0; i < args.clips; ++i) {
    SyntheticClip clip = generate_synthetic_sequence(spec, rng.next_u64());
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%03d", i);
    fs::path dir = fs::path(args.out) / name;
    fs::create_directories(dir);
    save_png(clip.triple.f1, (dir / "000.png").string());
    save_png(clip.triple.f2, (dir / "001.png").string());
    save_png(clip.triple.f3, (dir / "002.png").string());
  }
  std::cout << "wrote " << args.clips << " clips to " << args.out << "\n";
  return 0;
}

struct ExtractArgs {
  std::string frames, out;
  int n_weighted = 2000;
  int n_final = 1000;
  uint64_t seed = 1;
  int per_group = 64;
  int patch_size = 29;
};

int run_extract(const ExtractArgs& args) {
  std::vector<TripleGroup> triples = load_triples_from_dir(args.frames);
  DatasetParams params;
  params.n_weighted = args.n_weighted;
  params.n_final = args.n_final;
  params.seed = args.seed;
  params.candidates_per_group = args.per_group;
  params.stored_patch = args.patch_size;
  fs::create_directories(args.out);
  DatasetManifest manifest = build_dataset(triples, params, args.out);
  std::cout << "wrote " << manifest.records.size() << " samples to " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data, out;
  std::string config = "desk";
  int steps = 1000;
  int batch = 128;
  double lambda = 1.0;
  uint64_t seed = 1;
  int threads = 1;
};

int run_train(const TrainArgs& args) {
  NetworkConfig config;
  if (args.config == "desk")
    config = NetworkConfig::desk();
  else if (args.config == "paper")
    config = NetworkConfig::paper_scale();
  else
    throw ArgumentError("unknown config '" + args.config + "' (expected desk or paper)");

  std::vector<SampleRecord> dataset = load_dataset(args.data);
  KernelNet net = init_network<float>(config, args.seed);
  TrainConfig train_config;
  train_config.batch_size = args.batch;
  train_config.steps = args.steps;
  train_config.seed = args.seed;
  train_config.lambda = static_cast<float>(args.lambda);
  train_config.threads = args.threads;
  train_config.checkpoint_path = args.out;
  train_config.log = &std::cout;
  train_loop(net, dataset, train_config);

  auto [train_set, val_set] = split_validation(dataset, train_config.validation_fraction);
  if (!val_set.empty()) {
    ValidationStats v = validate(net, val_set, train_config.lambda, args.threads);
    std::cout << "validation color " << v.mean_color_loss << " total " << v.mean_total_loss
              << "\n";
  }
  return 0;
}

struct InterpolateArgs {
  std::string model, frame1, frame2, out;
  int recursive = 0;
  bool pixelwise = false;
  int threads = 1;
};

int run_interpolate(const InterpolateArgs& args) {
  KernelNet net = load_checkpoint(args.model);
  Frame i1 = load_png(args.frame1);
  Frame i2 = load_png(args.frame2);
  if (args.recursive <= 0) {
    Frame mid = args.pixelwise ? interpolate_pixelwise(net, i1, i2, args.threads)
                               : interpolate_shift_stitch(net, i1, i2, args.threads);
    save_png(mid, args.out);
    std::cout << "wrote " << args.out << "\n";
    return 0;
  }
  std::vector<Frame> frames =
      interpolate_recursive(net, i1, i2, args.recursive, args.pixelwise, args.threads);
  fs::path out(args.out);
  std::string stem = (out.parent_path() / out.stem()).string();
  std::string ext = out.extension().string();
  if (ext.empty()) ext = ".png";
  int denom = 1 << args.recursive;
  for (size_t i = 0; i < frames.size(); ++i) {
    double percent = 100.0 * static_cast<double>(i + 1) / denom;
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_t%g", percent);
    std::string path = stem + suffix + ext;
    save_png(frames[i], path);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

struct EvaluateArgs {
  std::string pred, truth;
};

int run_evaluate(const EvaluateArgs& args) {
  Frame pred = load_png(args.pred);
  Frame truth = load_png(args.truth);
  std::printf("ie %.6g psnr %.6g\n", interpolation_error(pred, truth), psnr(pred, truth));
  return 0;
}

struct InspectArgs {
  std::string model, frame1, frame2, pixels, out;
};

std::vector<std::pair<int, int>> parse_pixels(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find(';', pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    int x = 0, y = 0;
    if (std::sscanf(item.c_str(), "%d,%d", &x, &y) != 2)
      throw ArgumentError("bad pixel '" + item + "' (expected x,y)");
    out.emplace_back(x, y);
    pos = end + 1;
  }
  if (out.empty()) throw ArgumentError("no pixels given");
  return out;
}

int run_inspect(const InspectArgs& args) {
  KernelNet net = load_checkpoint(args.model);
  Frame i1 = load_png(args.frame1);
  Frame i2 = load_png(args.frame2);
  dump_kernel_heatmaps(net, i1, i2, parse_pixels(args.pixels), args.out);
  std::cout << "wrote kernel dumps to " << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive-convolution video frame interpolation"};
  app.require_subcommand(1);

  SynthDataArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth-data", "generate synthetic training clips");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--clips", synth_args.clips, "number of clips");
  synth->add_option("--max-shift", synth_args.max_shift, "per-axis shift cap in pixels");
  synth->add_option("--seed", synth_args.seed, "random seed");
  synth->add_option("--size", synth_args.size, "frame width/height");

  ExtractArgs extract_args;
  CLI::App* extract = app.add_subcommand("extract", "build a training dataset from frame dirs");
  extract->add_option("--frames", extract_args.frames, "directory of clip directories")
      ->required();
  extract->add_option("--out", extract_args.out, "output dataset directory")->required();
  extract->add_option("--n-weighted", extract_args.n_weighted, "flow-weighted sample count");
  extract->add_option("--n-final", extract_args.n_final, "entropy-selected sample count");
  extract->add_option("--seed", extract_args.seed, "random seed");
  extract->add_option("--per-group", extract_args.per_group, "candidates per triple group");
  extract->add_option("--patch-size", extract_args.patch_size, "stored patch size");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a kernel-estimation model");
  train->add_option("--data", train_args.data, "dataset directory")->required();
  train->add_option("--out", train_args.out, "model output path")->required();
  train->add_option("--config", train_args.config, "desk or paper");
  train->add_option("--steps", train_args.steps, "optimizer steps");
  train->add_option("--batch", train_args.batch, "mini-batch size");
  train->add_option("--lambda", train_args.lambda, "gradient-loss weight");
  train->add_option("--seed", train_args.seed, "random seed");
  train->add_option("--threads", train_args.threads, "worker threads (1 = deterministic order)");

  InterpolateArgs interp_args;
  CLI::App* interp = app.add_subcommand("interpolate", "synthesize the middle frame");
  interp->add_option("--model", interp_args.model, "model checkpoint")->required();
  interp->add_option("--frame1", interp_args.frame1, "first input frame")->required();
  interp->add_option("--frame2", interp_args.frame2, "second input frame")->required();
  interp->add_option("--out", interp_args.out, "output image")->required();
  interp->add_option("--recursive", interp_args.recursive, "recursion depth (2^d - 1 frames)");
  interp->add_flag("--pixelwise", interp_args.pixelwise, "use the per-pixel reference path");
  interp->add_option("--threads", interp_args.threads, "worker threads");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "interpolation error and PSNR");
  evaluate->add_option("--pred", eval_args.pred, "predicted frame")->required();
  evaluate->add_option("--truth", eval_args.truth, "ground-truth frame")->required();

  InspectArgs inspect_args;
  CLI::App* inspect = app.add_subcommand("inspect", "dump per-pixel kernel heatmaps");
  inspect->add_option("--model", inspect_args.model, "model checkpoint")->required();
  inspect->add_option("--frame1", inspect_args.frame1, "first input frame")->required();
  inspect->add_option("--frame2", inspect_args.frame2, "second input frame")->required();
  inspect->add_option("--pixels", inspect_args.pixels, "probe pixels x,y[;x,y...]")->required();
  inspect->add_option("--out", inspect_args.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (app.got_subcommand(synth)) return run_synth_data(synth_args);
    if (app.got_subcommand(extract)) return run_extract(extract_args);
    if (app.got_subcommand(train)) return run_train(train_args);
    if (app.got_subcommand(interp)) return run_interpolate(interp_args);
    if (app.got_subcommand(evaluate)) return run_evaluate(eval_args);
    if (app.got_subcommand(inspect)) return run_inspect(inspect_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
