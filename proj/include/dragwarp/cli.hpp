#pragma once

// Batch front end: `warp`, `edit` and `bench` over case files, plus `serve`.
//
// A case file is JSON with paths relative to the file itself:
//   {"image": "a.png", "mask": "a_mask.png", "points": "a_points.json",
//    "options": {"r1": 10, "r2": 5, "epsilon": 1e-6, "neighbors": 4,
//                "backend": "harmonic", "resize": 0}}
//
// Exit codes: 0 success, 1 invalid input, 2 internal failure.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dragwarp/config.hpp"
#include "dragwarp/refine.hpp"
#include "dragwarp/warp.hpp"

namespace dragwarp {

struct CaseSpec {
  std::filesystem::path image;
  std::filesystem::path mask;
  std::filesystem::path points;
  std::optional<int> r1;
  std::optional<int> r2;
  std::optional<double> epsilon;
  std::optional<int> neighbors;
  std::optional<std::string> backend;
  /// Long-edge resize; 0 or unset keeps the native size.
  std::optional<int> resize;
};

/// Parses a case file; relative paths resolve against its directory.
CaseSpec load_case_file(const std::filesystem::path& path);

/// A case with every file decoded, resized and validated.
struct LoadedCase {
  ImageBuffer image;
  BinaryMask mask;
  std::vector<ControlPair> pairs;
  WarpConfig warp;
  RefineConfig refine;
  std::string backend = "harmonic";
};

/// Throws InvalidInput naming the offending file or field.
LoadedCase load_case(const CaseSpec& spec);

/// Maps a point through a resize from (w0, h0) to (w1, h1), pixel centers to pixel centers.
Point2 rescale_point(const Point2& p, int w0, int h0, int w1, int h1);

struct BenchRow {
  std::string name;
  int width = 0;
  int height = 0;
  std::size_t pairs = 0;
  std::vector<double> warp_ms;
  std::vector<double> inpaint_ms;
  double warp_median_ms = 0.0;
  double inpaint_median_ms = 0.0;
  double coverage_pct = 0.0;
  /// Unset when no pixel lies outside M and the inpaint mask.
  std::optional<double> outside_psnr;
  bool outside_bit_equal = false;
  std::string backend_used;
};

/// Runs every *.json case in cases_dir `repetitions` times. Throws InvalidInput
/// when the directory holds no cases.
std::vector<BenchRow> cmd_bench(const std::filesystem::path& cases_dir, int repetitions,
                                const ServiceConfig& config, const std::optional<std::string>& backend = std::nullopt);

struct SynthOptions {
  int width = 512;
  int height = 512;
  int pairs = 8;
  /// Target fraction of the image covered by the mask.
  double mask_fraction = 0.25;
  /// Largest handle-to-target offset per axis.
  int max_displacement = 16;
  std::uint64_t seed = 1;
};

/// Writes <name>.png, <name>_mask.png, <name>_points.json and <name>.json (the
/// case file) into dir. The mask is one ellipse, handles lie inside it.
std::filesystem::path write_synthetic_case(const std::filesystem::path& dir, const std::string& name,
                                           const SynthOptions& options);

std::string bench_table(const std::vector<BenchRow>& rows);
std::string bench_json(const std::vector<BenchRow>& rows);

int run_cli(int argc, char** argv);

}  // namespace dragwarp
