#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adaconv/image.hpp"
#include "adaconv/net.hpp"
#include "adaconv/rng.hpp"
#include "adaconv/synth.hpp"

namespace adaconv {

// Three consecutive frames; the middle one is the supervision target.
struct TripleGroup {
  Frame f1, f2, f3;
  std::string source_id;
  int frame_index = 0;
};

// Per-pixel truth for a synthetic middle frame: the full displacement of the
// content between the outer frames, and whether that content is visible in
// the first / second input frame.
struct MotionTruth {
  int width = 0, height = 0;
  std::vector<std::array<float, 2>> flow;
  std::vector<uint8_t> visible_first, visible_second;
  std::vector<uint8_t> on_occluder;

  size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

// Scene controls for the synthetic generator. By default every scene is a
// textured blob field under a global translation; occluders, letterbox bands
// and brightness ramps are mixed in per clip unless disabled. Explicit motion
// overrides make single scenes reproducible in tests.
struct MotionSpec {
  int width = 96;
  int height = 96;
  float max_shift = 8.f;  // per-axis cap on the first-to-last displacement
  int background_blobs = 130;
  bool allow_occluder = true;
  bool allow_letterbox = true;
  bool allow_brightness_ramp = true;
  // per-clip draw probabilities (applied where the feature is allowed)
  double occluder_probability = 0.35;
  double margin_probability = 0.2;      // wide static border, >= receptive reach
  double letterbox_probability = 0.1;   // thin bands on one or two sides
  double ramp_probability = 0.1;
  std::optional<std::array<float, 2>> forced_shift;
  std::optional<std::array<float, 2>> forced_occluder_shift;
  bool force_occluder = false;
  bool force_static = false;
};

struct SyntheticClip {
  TripleGroup triple;
  MotionTruth truth;
};

SyntheticClip generate_synthetic_sequence(const MotionSpec& spec, uint64_t seed);

std::vector<SyntheticClip> generate_synthetic_corpus(const MotionSpec& spec, int clips,
                                                     uint64_t seed);

struct FlowVector {
  int x, y;    // grid point
  int dx, dy;  // integer displacement minimizing the block SAD
};

struct FlowField {
  std::vector<FlowVector> vectors;
  float mean_magnitude = 0.f;
};

// Exhaustive block matching on grayscale blocks: per grid point the integer
// displacement in [-window, window]^2 minimizing the sum of absolute
// differences, ties broken by smaller magnitude then row-major search order.
FlowField block_matching_flow(const Frame& f1, const Frame& f3, int grid_step, int window,
                              int block);

// Shannon entropy in bits of the 256-bin grayscale histogram of a [3, s, s]
// patch (8-bit quantized). Range [0, 8].
double patch_entropy(const Tensor& patch);

// l1 distance between per-channel 32-bin normalized color histograms.
double histogram_distance(const Tensor& a, const Tensor& b);

bool shot_boundary(const Tensor& a, const Tensor& b, double threshold = 0.5);

// Sequential weighted sampling without replacement, weight proportional to
// magnitude + epsilon_weight. Deterministic for a given seed.
std::vector<int> weighted_sample(const std::vector<float>& magnitudes, int n, uint64_t seed,
                                 float epsilon_weight = 0.1f);

struct DatasetParams {
  int n_weighted = 2000;
  int n_final = 1000;
  int candidates_per_group = 1;
  int stored_patch = 29;  // s; must be >= receptive_field + 2 of the target net
  // The boundary detector itself defaults to 0.5; at desk-scale patch sizes a
  // few pixels of honest motion already move a sizeable histogram fraction, so
  // the pipeline cut sits higher (scene cuts measure well above 2).
  double shot_threshold = 2.0;
  float epsilon_weight = 0.1f;
  int flow_grid_step = 4;
  int flow_window = 8;
  int flow_block = 5;
  uint64_t seed = 1;
};

// One scored candidate: the stored triple patches plus the sampling features.
struct CandidatePatch {
  Tensor p1, p2, p3;
  float flow_magnitude = 0.f;
  float entropy = 0.f;
};

struct CandidateStats {
  size_t groups = 0;
  size_t skipped_small = 0;
  size_t shot_rejected = 0;
};

// Extraction stage of the pipeline: random centers, shot-boundary rejection,
// flow and entropy scoring. Deterministic for a given seed.
std::vector<CandidatePatch> collect_candidates(const std::vector<TripleGroup>& triples,
                                               const DatasetParams& params,
                                               CandidateStats* stats = nullptr);

struct ManifestRecord {
  std::string path;  // relative to the manifest directory
  float flow_magnitude = 0.f;
  float entropy = 0.f;
  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  bool operator==(const DatasetManifest&) const = default;
};

// Candidate extraction, shot-boundary rejection, flow-weighted sampling and
// entropy selection; writes sample files plus "manifest.txt" into out_dir.
DatasetManifest build_dataset(const std::vector<TripleGroup>& triples,
                              const DatasetParams& params, const std::string& out_dir);

// UTF-8 text: line 1 "ADMF 1 <count>", then "<path> <flow> <entropy>" lines.
void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// One stored sample: three co-centered [3, s, s] patches.
struct SampleRecord {
  Tensor p1, p2, p3;
  float flow_magnitude = 0.f;
  float entropy = 0.f;
};

void save_sample(const SampleRecord& record, const std::string& path);
SampleRecord load_sample(const std::string& path);

// Manifest plus sample payloads, in manifest order.
std::vector<SampleRecord> load_dataset(const std::string& dir);

// Reads one clip directory of numbered PNG frames and partitions it into
// disjoint consecutive triples.
std::vector<TripleGroup> load_triples_from_dir(const std::string& frames_dir);

struct TrainingSample {
  Tensor r1, r2;            // receptive patches [3, R, R]
  ApronPatchPair patches;   // [3, k+2, k+2] each
  GroundTruth truth;
};

struct AugmentOps {
  int crop_x = 0, crop_y = 0;  // top-left of the (R+2) window inside the stored patch
  bool flip_h = false, flip_v = false, swap_temporal = false;
};

// Derives the network inputs and supervision from a stored sample under the
// given crop/flip/swap. Ground truth is computed from the augmented middle
// window, so gradient directions stay consistent under flips by construction.
TrainingSample make_training_sample(const SampleRecord& record, const NetworkConfig& config,
                                    const AugmentOps& ops);

// Random crop, independent horizontal/vertical flips, temporal swap with
// probability 0.5.
TrainingSample augment_sample(const SampleRecord& record, const NetworkConfig& config, Rng& rng);

// Deterministic center crop without flips (validation path).
TrainingSample center_sample(const SampleRecord& record, const NetworkConfig& config);

}  // namespace adaconv
