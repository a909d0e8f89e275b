#include "dragwarp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "dragwarp/errors.hpp"
#include "dragwarp/image_io.hpp"
#include "dragwarp/inpaint.hpp"
#include "dragwarp/wire.hpp"
// Eigen-dependent headers first: httplib pulls in <resolv.h>.
#include "dragwarp/http_service.hpp"

namespace dragwarp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Re-throws InvalidInput with the offending file prefixed.
template <typename F>
auto with_context(const fs::path& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

json read_json_file(const fs::path& path) {
  return with_context(path, [&] {
    const Bytes raw = read_file(path);
    try {
      return json::parse(raw.begin(), raw.end());
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("not valid JSON: ") + e.what());
    }
  });
}

template <typename T>
std::optional<T> case_option(const json& options, const char* key, const fs::path& path) {
  if (!options.contains(key) || options[key].is_null()) return std::nullopt;
  try {
    return options[key].get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(path.string() + ": options." + key + " has the wrong type");
  }
}

fs::path case_path(const json& doc, const char* key, const fs::path& file) {
  if (!doc.contains(key) || !doc[key].is_string()) {
    throw InvalidInput(file.string() + ": field '" + key + "' must be a path string");
  }
  fs::path p = doc[key].get<std::string>();
  return p.is_absolute() ? p : file.parent_path() / p;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

/// Refines the mask when a segmenter is configured.
void maybe_refine(LoadedCase& c, const ServiceConfig& config, bool r1_requested) {
  if (config.segmenter_url.empty()) {
    if (r1_requested) std::cerr << "warning: no segmenter_url configured; mask used as given\n";
    return;
  }
  RemoteSegmenter segmenter(config.segmenter_url, config.segmenter_deadline);
  auto result = refine(c.image, c.mask, &segmenter, c.refine);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  c.mask = std::move(result.mask);
}

InpaintOptions inpaint_options(const ServiceConfig& config) {
  InpaintOptions options;
  options.deadline = config.inpaint_deadline;
  options.drift_threshold = config.drift_threshold;
  return options;
}

/// Outside-mask PSNR; unset when no pixel qualifies, infinity when bit-equal.
std::optional<double> outside_psnr(const ImageBuffer& a, const ImageBuffer& b, const BinaryMask& excluded) {
  double sse = 0.0;
  std::size_t samples = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (excluded(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = double(a.channel(x, y, c)) - double(b.channel(x, y, c));
        sse += d * d;
      }
      samples += 3;
    }
  }
  if (samples == 0) return std::nullopt;
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / (sse / double(samples)));
}

fs::path prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidInput("cannot create output directory " + dir.string());
  return dir;
}

void write_artifacts(const fs::path& dir, const WarpArtifacts& a) {
  write_file_atomic(dir / "warped.png", a.warped_png);
  write_file_atomic(dir / "warped_mask.png", a.warped_mask_png);
  write_file_atomic(dir / "inpaint_mask.png", a.inpaint_mask_png);
  write_file_atomic(dir / "map.json", std::string_view(a.map_json));
}

std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string psnr_text(const BenchRow& r) {
  if (!r.outside_psnr) return "n/a";
  if (std::isinf(*r.outside_psnr)) return "inf";
  return format_number(*r.outside_psnr, 2);
}

ServiceConfig resolve_config(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (path.empty()) return ServiceConfig{};
  return with_context(path, [&] { return load_config(path); });
}

/// Flags shared by warp and edit.
struct CaseFlags {
  std::string case_file;
  std::string image, mask, points, out_dir, backend;
  std::optional<int> r1, r2, neighbors, resize;
  std::optional<double> epsilon;

  void attach(CLI::App& cmd, bool with_backend) {
    cmd.add_option("case", case_file, "Case file; the flags below override its fields");
    cmd.add_option("--image", image, "Source image PNG");
    cmd.add_option("--mask", mask, "Mask PNG, >127 is inside");
    cmd.add_option("--points", points, "Control points JSON");
    cmd.add_option("--out-dir", out_dir, "Output directory")->required();
    cmd.add_option("--r1", r1, "Refinement radius (needs a configured segmenter)");
    cmd.add_option("--r2", r2, "Inpaint-mask dilation radius");
    cmd.add_option("--epsilon", epsilon, "Inverse-distance weight regulariser");
    cmd.add_option("--neighbors", neighbors, "Neighbours for backward mapping");
    cmd.add_option("--resize", resize, "Resize to this long edge first; 0 keeps the native size");
    if (with_backend) cmd.add_option("--backend", backend, "Inpainting backend (default harmonic)");
  }

  CaseSpec spec() const {
    CaseSpec s = case_file.empty() ? CaseSpec{} : load_case_file(case_file);
    if (!image.empty()) s.image = image;
    if (!mask.empty()) s.mask = mask;
    if (!points.empty()) s.points = points;
    if (r1) s.r1 = r1;
    if (r2) s.r2 = r2;
    if (epsilon) s.epsilon = epsilon;
    if (neighbors) s.neighbors = neighbors;
    if (resize) s.resize = resize;
    if (!backend.empty()) s.backend = backend;
    if (s.image.empty()) throw InvalidInput("--image is required (or a case file)");
    if (s.mask.empty()) throw InvalidInput("--mask is required (or a case file)");
    if (s.points.empty()) throw InvalidInput("--points is required (or a case file)");
    return s;
  }
};

int cmd_warp_or_edit(const CaseFlags& flags, const ServiceConfig& config, bool edit) {
  const CaseSpec spec = flags.spec();
  LoadedCase c = load_case(spec);
  const fs::path out = prepare_out_dir(flags.out_dir);
  const BackendRegistry registry = make_registry(config);
  const BackendDescriptor* descriptor = edit ? &registry.select(c.backend) : nullptr;
  maybe_refine(c, config, spec.r1.has_value());

  const WarpOutput output = render_warp(c.image, c.mask, c.pairs, c.warp);
  for (int i : output.rejected_pair_indices) {
    std::cerr << "warning: pairs[" << i << "] has its handle outside every mask region and moves nothing\n";
  }
  write_artifacts(out, make_artifacts(output));
  const double coverage =
      output.stats.target_pixels ? 100.0 * double(output.stats.mapped_pixels) / double(output.stats.target_pixels) : 100.0;
  std::cout << "warp: " << c.image.width() << "x" << c.image.height() << ", " << c.pairs.size()
            << " pairs, coverage " << format_number(coverage, 2) << "%\n";

  if (edit) {
    const auto outcome =
        run_inpaint(InpaintRequest{output.warped, output.inpaint_mask, std::nullopt}, *descriptor, inpaint_options(config));
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
    write_file_atomic(out / "edited.png", encode_png(outcome.image));
    std::cout << "edit: backend " << outcome.backend_used << (outcome.fallback ? " (fallback)" : "") << "\n";
  }
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

CaseSpec load_case_file(const fs::path& path) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw InvalidInput(path.string() + ": case file must be a JSON object");
  CaseSpec spec;
  spec.image = case_path(doc, "image", path);
  spec.mask = case_path(doc, "mask", path);
  spec.points = case_path(doc, "points", path);
  if (doc.contains("options")) {
    const json& o = doc["options"];
    if (!o.is_object()) throw InvalidInput(path.string() + ": options must be an object");
    spec.r1 = case_option<int>(o, "r1", path);
    spec.r2 = case_option<int>(o, "r2", path);
    spec.epsilon = case_option<double>(o, "epsilon", path);
    spec.neighbors = case_option<int>(o, "neighbors", path);
    spec.backend = case_option<std::string>(o, "backend", path);
    spec.resize = case_option<int>(o, "resize", path);
  }
  return spec;
}

Point2 rescale_point(const Point2& p, int w0, int h0, int w1, int h1) {
  return {(p.x() + 0.5) * double(w1) / double(w0) - 0.5, (p.y() + 0.5) * double(h1) / double(h0) - 0.5};
}

LoadedCase load_case(const CaseSpec& spec) {
  LoadedCase c{with_context(spec.image, [&] { return decode_png_image(read_file(spec.image)); }),
               with_context(spec.mask, [&] { return decode_png_mask(read_file(spec.mask)); }),
               {}, {}, {}};
  if (c.mask.width() != c.image.width() || c.mask.height() != c.image.height()) {
    throw InvalidInput(spec.mask.string() + ": mask is " + std::to_string(c.mask.width()) + "x" +
                       std::to_string(c.mask.height()) + " but the image is " + std::to_string(c.image.width()) +
                       "x" + std::to_string(c.image.height()));
  }
  c.pairs = with_context(spec.points, [&] { return pairs_from_json(read_json_file(spec.points)); });
  const auto issues = validate_pairs(c.pairs, c.image.width(), c.image.height());
  if (!issues.empty()) {
    throw InvalidInput(spec.points.string() + ": pairs[" + std::to_string(issues.front().index) + "] " +
                       issues.front().reason);
  }

  if (spec.r1) c.refine.r1 = *spec.r1;
  if (spec.r2) c.warp.r2 = *spec.r2;
  if (spec.epsilon) c.warp.epsilon = *spec.epsilon;
  if (spec.neighbors) c.warp.neighbors = *spec.neighbors;
  if (spec.backend) c.backend = *spec.backend;
  if (c.refine.r1 < 0) throw InvalidInput("r1 must be >= 0");
  if (c.warp.r2 < 0) throw InvalidInput("r2 must be >= 0");
  if (!(c.warp.epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
  if (c.warp.neighbors < 1) throw InvalidInput("neighbors must be >= 1");

  const int resize = spec.resize.value_or(0);
  if (resize < 0) throw InvalidInput("resize must be >= 0");
  if (resize > 0) {
    const int w0 = c.image.width(), h0 = c.image.height();
    c.image = resize_long_edge(c.image, resize);
    const int w1 = c.image.width(), h1 = c.image.height();
    c.mask = resize_mask(c.mask, w1, h1);
    for (auto& p : c.pairs) {
      p.handle = rescale_point(p.handle, w0, h0, w1, h1);
      p.target = rescale_point(p.target, w0, h0, w1, h1);
    }
  }
  return c;
}

std::vector<BenchRow> cmd_bench(const fs::path& cases_dir, int repetitions, const ServiceConfig& config,
                                const std::optional<std::string>& backend) {
  if (repetitions < 1) throw InvalidInput("--reps must be >= 1");
  if (!fs::is_directory(cases_dir)) throw InvalidInput(cases_dir.string() + ": not a directory");

  // Any *.json object with an "image" field is a case; points files are skipped.
  std::vector<fs::path> cases;
  for (const auto& entry : fs::directory_iterator(cases_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    const json doc = read_json_file(entry.path());
    if (doc.is_object() && doc.contains("image")) cases.push_back(entry.path());
  }
  if (cases.empty()) throw InvalidInput(cases_dir.string() + ": no case files");
  std::sort(cases.begin(), cases.end());

  const BackendRegistry registry = make_registry(config);
  std::vector<BenchRow> rows;
  for (const auto& file : cases) {
    CaseSpec spec = load_case_file(file);
    if (backend) spec.backend = backend;
    LoadedCase c = load_case(spec);
    const BackendDescriptor& descriptor = registry.select(c.backend);
    maybe_refine(c, config, false);

    BenchRow row;
    row.name = file.filename().string();
    row.width = c.image.width();
    row.height = c.image.height();
    row.pairs = c.pairs.size();
    for (int rep = 0; rep < repetitions; ++rep) {
      auto start = std::chrono::steady_clock::now();
      const WarpOutput output = render_warp(c.image, c.mask, c.pairs, c.warp);
      row.warp_ms.push_back(elapsed_ms(start));

      start = std::chrono::steady_clock::now();
      const auto outcome = run_inpaint(InpaintRequest{output.warped, output.inpaint_mask, std::nullopt}, descriptor,
                                       inpaint_options(config));
      row.inpaint_ms.push_back(elapsed_ms(start));

      if (rep + 1 == repetitions) {
        const auto& s = output.stats;
        row.coverage_pct = s.target_pixels ? 100.0 * double(s.mapped_pixels) / double(s.target_pixels) : 100.0;
        row.outside_psnr = outside_psnr(c.image, outcome.image, c.mask | output.inpaint_mask);
        row.outside_bit_equal = row.outside_psnr && std::isinf(*row.outside_psnr);
        row.backend_used = outcome.backend_used;
        for (const auto& w : outcome.warnings) std::cerr << row.name << ": warning: " << w << "\n";
      }
    }
    row.warp_median_ms = median(row.warp_ms);
    row.inpaint_median_ms = median(row.inpaint_ms);
    rows.push_back(std::move(row));
  }
  return rows;
}

fs::path write_synthetic_case(const fs::path& dir, const std::string& name, const SynthOptions& o) {
  if (o.width < 8 || o.height < 8) throw InvalidInput("synthetic cases need at least 8x8 pixels");
  if (o.pairs < 0) throw InvalidInput("pairs must be >= 0");
  if (!(o.mask_fraction > 0.0 && o.mask_fraction < 0.75)) throw InvalidInput("mask fraction must be in (0, 0.75)");
  if (o.max_displacement < 0) throw InvalidInput("displacement must be >= 0");
  std::mt19937_64 rng(o.seed);

  // Smooth colour ramps under a soft checkerboard, so warps are visible.
  ImageBuffer image(o.width, o.height);
  for (int y = 0; y < o.height; ++y) {
    for (int x = 0; x < o.width; ++x) {
      const int check = ((x / 16 + y / 16) % 2) * 40;
      image.set(x, y, Rgb(std::uint8_t(40 + 150 * x / o.width + check / 2), std::uint8_t(60 + 120 * y / o.height),
                          std::uint8_t(90 + check)));
    }
  }

  // Ellipse with the image's aspect ratio and the requested area.
  const double cx = (o.width - 1) / 2.0, cy = (o.height - 1) / 2.0;
  const double scale = std::sqrt(o.mask_fraction / std::numbers::pi);
  const double ax = scale * o.width, ay = scale * o.height;
  BinaryMask mask(o.width, o.height);
  std::vector<Pixel> inside;
  for (int y = 0; y < o.height; ++y) {
    for (int x = 0; x < o.width; ++x) {
      const double u = (x - cx) / ax, v = (y - cy) / ay;
      if (u * u + v * v <= 1.0) {
        mask.set(x, y, true);
        inside.emplace_back(x, y);
      }
    }
  }
  if (inside.empty()) throw InvalidInput("mask fraction too small for this image");

  std::vector<ControlPair> pairs;
  std::uniform_int_distribution<std::size_t> pick(0, inside.size() - 1);
  std::uniform_int_distribution<int> offset(-o.max_displacement, o.max_displacement);
  for (int i = 0; i < o.pairs; ++i) {
    const Pixel h = inside[pick(rng)];
    const int tx = std::clamp(h.x() + offset(rng), 0, o.width - 1);
    const int ty = std::clamp(h.y() + offset(rng), 0, o.height - 1);
    pairs.push_back({h.cast<double>(), Point2(tx, ty)});
  }

  prepare_out_dir(dir);
  write_file_atomic(dir / (name + ".png"), encode_png(image));
  write_file_atomic(dir / (name + "_mask.png"), encode_png(mask));
  write_file_atomic(dir / (name + "_points.json"), std::string_view(pairs_to_json(pairs).dump(2) + "\n"));
  const json case_doc{{"image", name + ".png"}, {"mask", name + "_mask.png"}, {"points", name + "_points.json"}};
  const fs::path case_file = dir / (name + ".json");
  write_file_atomic(case_file, std::string_view(case_doc.dump(2) + "\n"));
  return case_file;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %11s %5s %5s %12s %12s %10s %10s\n", "case", "size", "pairs", "reps",
                "warp_ms", "inpaint_ms", "coverage%", "psnr_out");
  out << line;
  for (const auto& r : rows) {
    const std::string size = std::to_string(r.width) + "x" + std::to_string(r.height);
    std::snprintf(line, sizeof line, "%-28s %11s %5zu %5zu %12.2f %12.2f %10.2f %10s\n", r.name.c_str(),
                  size.c_str(), r.pairs, r.warp_ms.size(), r.warp_median_ms, r.inpaint_median_ms, r.coverage_pct,
                  psnr_text(r).c_str());
    out << line;
  }
  return out.str();
}

std::string bench_json(const std::vector<BenchRow>& rows) {
  json cases = json::array();
  for (const auto& r : rows) {
    json psnr = nullptr;
    if (r.outside_psnr) psnr = std::isinf(*r.outside_psnr) ? json("inf") : json(*r.outside_psnr);
    cases.push_back({{"case", r.name},
                     {"width", r.width},
                     {"height", r.height},
                     {"pairs", r.pairs},
                     {"repetitions", r.warp_ms.size()},
                     {"warp_ms_median", r.warp_median_ms},
                     {"inpaint_ms_median", r.inpaint_median_ms},
                     {"warp_ms", r.warp_ms},
                     {"inpaint_ms", r.inpaint_ms},
                     {"coverage_pct", r.coverage_pct},
                     {"outside_psnr", psnr},
                     {"backend", r.backend_used}});
  }
  return json{{"cases", cases}}.dump(2) + "\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"dragwarp: drag-based image deformation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, std::string("Service config file (default: $") + kConfigEnvVar + ")");

  CaseFlags warp_flags, edit_flags;
  auto* warp = app.add_subcommand("warp", "Warp one case and write warped.png, warped_mask.png, inpaint_mask.png, map.json");
  warp_flags.attach(*warp, false);
  auto* edit = app.add_subcommand("edit", "Warp one case, inpaint it, and also write edited.png");
  edit_flags.attach(*edit, true);

  std::string cases_dir, bench_out, bench_backend;
  int reps = 10;
  auto* bench = app.add_subcommand("bench", "Time every case file in a directory");
  bench->add_option("cases", cases_dir, "Directory of case files")->required();
  bench->add_option("--reps", reps, "Repetitions per case")->capture_default_str();
  bench->add_option("--out-dir", bench_out, "Also write bench.json here");
  bench->add_option("--backend", bench_backend, "Override every case's inpainting backend");

  auto* serve = app.add_subcommand("serve", "Run the HTTP editing service");

  std::string synth_dir, synth_name = "case";
  SynthOptions synth_options;
  int synth_count = 1;
  auto* synth = app.add_subcommand("synth", "Write synthetic cases for bench");
  synth->add_option("--out-dir", synth_dir, "Directory for the case files")->required();
  synth->add_option("--name", synth_name, "File name prefix")->capture_default_str();
  synth->add_option("--count", synth_count, "Number of cases")->capture_default_str();
  synth->add_option("--width", synth_options.width)->capture_default_str();
  synth->add_option("--height", synth_options.height)->capture_default_str();
  synth->add_option("--pairs", synth_options.pairs)->capture_default_str();
  synth->add_option("--mask-fraction", synth_options.mask_fraction)->capture_default_str();
  synth->add_option("--max-displacement", synth_options.max_displacement)->capture_default_str();
  synth->add_option("--seed", synth_options.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ServiceConfig config = resolve_config(config_path);
    if (warp->parsed()) return cmd_warp_or_edit(warp_flags, config, false);
    if (edit->parsed()) return cmd_warp_or_edit(edit_flags, config, true);
    if (bench->parsed()) {
      const auto rows = cmd_bench(cases_dir, reps, config,
                                  bench_backend.empty() ? std::nullopt : std::optional<std::string>(bench_backend));
      std::cout << bench_table(rows);
      if (!bench_out.empty()) {
        const fs::path out = prepare_out_dir(bench_out);
        write_file_atomic(out / "bench.json", std::string_view(bench_json(rows)));
      }
      return 0;
    }
    if (synth->parsed()) {
      if (synth_count < 1) throw InvalidInput("--count must be >= 1");
      for (int i = 0; i < synth_count; ++i) {
        SynthOptions o = synth_options;
        o.seed = synth_options.seed + std::uint64_t(i);
        const std::string name = synth_count == 1 ? synth_name : synth_name + "_" + std::to_string(i);
        std::cout << write_synthetic_case(synth_dir, name, o).string() << "\n";
      }
      return 0;
    }
    if (serve->parsed()) return run_server(config) == 0 ? 0 : 2;
    return 1;
  } catch (const NotFound& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace dragwarp
