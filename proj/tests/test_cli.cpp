#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "support.hpp"
#include "dragwarp/cli.hpp"
#include "dragwarp/http_service.hpp"
#include "mock_server.hpp"

using namespace dragwarp;
using namespace dragwarp::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("dragwarp_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

/// Runs the CLI binary; stdout and stderr go to files under dir.
int run(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(DRAGWARP_CLI) + " " + args + " >" +
                          (dir / "stdout.txt").string() + " 2>" + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  const auto b = read_file(p);
  return {b.begin(), b.end()};
}

/// Writes image.png, mask.png, points.json and case.json; returns the case file.
fs::path write_case(const fs::path& dir, const ImageBuffer& image, const BinaryMask& mask,
                    const std::vector<ControlPair>& pairs, const json& options = json::object()) {
  write_file_atomic(dir / "image.png", encode_png(image));
  write_file_atomic(dir / "mask.png", encode_png(mask));
  write_file_atomic(dir / "points.json", std::string_view(pairs_to_json(pairs).dump()));
  json doc{{"image", "image.png"}, {"mask", "mask.png"}, {"points", "points.json"}};
  if (!options.empty()) doc["options"] = options;
  write_file_atomic(dir / "case.json", std::string_view(doc.dump()));
  return dir / "case.json";
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("warp on identity and translation cases") {
  TempDir tmp("warp");
  Rng rng(301);
  const auto image = smooth_image(rng, 40, 30);
  const auto mask = rect_mask(40, 30, 8, 6, 10, 8);

  const auto identity = write_case(tmp.path, image, mask, {{Point2(10, 8), Point2(10, 8)}});
  REQUIRE(run(tmp.path, "warp " + q(identity) + " --out-dir " + q(tmp.path / "id")) == 0);
  CHECK(decode_png_image(read_file(tmp.path / "id" / "warped.png")) == image);
  CHECK(decode_png_mask(read_file(tmp.path / "id" / "warped_mask.png")) == mask);
  CHECK(decode_png_mask(read_file(tmp.path / "id" / "inpaint_mask.png")) == dilate(boundary(mask), WarpConfig{}.r2));

  const auto moved = write_case(tmp.path, image, mask, {{Point2(10, 8), Point2(17, 11)}});
  REQUIRE(run(tmp.path, "warp " + q(moved) + " --out-dir " + q(tmp.path / "tr")) == 0);
  CHECK(decode_png_mask(read_file(tmp.path / "tr" / "warped_mask.png")) == shifted(mask, 7, 3));
  const auto map = json::parse(slurp(tmp.path / "tr" / "map.json"));
  CHECK(map["width"] == 40);
  CHECK(map["entries"].size() == std::size_t(mask.count()));
  for (const auto& e : map["entries"]) {
    CHECK(e["target"][0].get<int>() == e["source"][0].get<double>() + 7);
    CHECK(e["origin"] == "forward");
  }
  CHECK(slurp(tmp.path / "stdout.txt").find("coverage 100.00%") != std::string::npos);
}

TEST_CASE("flags override the case file") {
  TempDir tmp("flags");
  Rng rng(302);
  const auto image = smooth_image(rng, 32, 32);
  const auto mask = rect_mask(32, 32, 6, 6, 12, 12);
  const std::vector<ControlPair> pairs{{Point2(8, 8), Point2(12, 9)}, {Point2(14, 14), Point2(16, 18)}};
  const auto file = write_case(tmp.path, image, mask, pairs, {{"r2", 9}});
  REQUIRE(run(tmp.path, "warp " + q(file) + " --r2 2 --neighbors 3 --epsilon 0.5 --out-dir " + q(tmp.path / "o")) == 0);
  WarpConfig config;
  config.r2 = 2;
  config.neighbors = 3;
  config.epsilon = 0.5;
  const auto expected = make_artifacts(render_warp(image, mask, pairs, config));
  CHECK(read_file(tmp.path / "o" / "inpaint_mask.png") == expected.inpaint_mask_png);
  CHECK(slurp(tmp.path / "o" / "map.json") == expected.map_json);

  // Without a case file every path must be given.
  REQUIRE(run(tmp.path, "warp --image " + q(tmp.path / "image.png") + " --mask " + q(tmp.path / "mask.png") +
                            " --points " + q(tmp.path / "points.json") + " --out-dir " + q(tmp.path / "p")) == 0);
  CHECK(read_file(tmp.path / "p" / "warped.png") == make_artifacts(render_warp(image, mask, pairs, {})).warped_png);
  CHECK(run(tmp.path, "warp --image " + q(tmp.path / "image.png") + " --out-dir " + q(tmp.path / "p")) == 1);
  CHECK(slurp(tmp.path / "stderr.txt").find("--mask") != std::string::npos);
}

TEST_CASE("resize scales image, mask and points together") {
  TempDir tmp("resize");
  Rng rng(303);
  const auto image = smooth_image(rng, 64, 32);
  const auto mask = rect_mask(64, 32, 10, 8, 20, 12);
  const std::vector<ControlPair> pairs{{Point2(15, 11), Point2(25, 13)}};
  const auto file = write_case(tmp.path, image, mask, pairs);
  REQUIRE(run(tmp.path, "warp " + q(file) + " --resize 32 --out-dir " + q(tmp.path / "o")) == 0);

  const auto small = resize_long_edge(image, 32);
  const auto small_mask = resize_mask(mask, 32, 16);
  const std::vector<ControlPair> scaled{{rescale_point(pairs[0].handle, 64, 32, 32, 16),
                                         rescale_point(pairs[0].target, 64, 32, 32, 16)}};
  CHECK(scaled[0].handle.isApprox(Point2(7.25, 5.25)));
  CHECK(read_file(tmp.path / "o" / "warped.png") == make_artifacts(render_warp(small, small_mask, scaled, {})).warped_png);
  CHECK(rescale_point(Point2(0, 0), 10, 10, 10, 10) == Point2(0, 0));
  CHECK(rescale_point(Point2(9, 9), 10, 10, 20, 20) == Point2(18.5, 18.5));
}

TEST_CASE("edit runs the inpainting backend") {
  TempDir tmp("edit");
  // Constant background, a textured square translated right.
  ImageBuffer image(48, 32, Rgb(90, 120, 150));
  const auto mask = rect_mask(48, 32, 8, 8, 12, 12);
  for (int y = 8; y < 20; ++y)
    for (int x = 8; x < 20; ++x) image.set(x, y, Rgb(std::uint8_t(10 * (x % 3)), 200, std::uint8_t(8 * y)));
  const auto file = write_case(tmp.path, image, mask, {{Point2(12, 12), Point2(24, 14)}});
  REQUIRE(run(tmp.path, "edit " + q(file) + " --out-dir " + q(tmp.path / "o")) == 0);
  const auto edited = decode_png_image(read_file(tmp.path / "o" / "edited.png"));
  const auto warped = decode_png_image(read_file(tmp.path / "o" / "warped.png"));
  const auto hole = decode_png_mask(read_file(tmp.path / "o" / "inpaint_mask.png"));
  const auto moved = decode_png_mask(read_file(tmp.path / "o" / "warped_mask.png"));
  REQUIRE(hole.count() > 0);
  int worst = 0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 48; ++x) {
      if (hole(x, y) && !moved(x, y)) {
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(int(edited.channel(x, y, c)) - int(image.channel(0, 0, c))));
      }
      if (!hole(x, y)) CHECK((edited.at(x, y) == warped.at(x, y)).all());
    }
  }
  CHECK(worst <= 1);

  // Handle outside the mask: no region moves, nothing to fill, edited equals warped.
  const auto still = write_case(tmp.path, image, mask, {{Point2(30, 25), Point2(34, 25)}});
  REQUIRE(run(tmp.path, "edit " + q(still) + " --out-dir " + q(tmp.path / "s")) == 0);
  CHECK_FALSE(decode_png_mask(read_file(tmp.path / "s" / "inpaint_mask.png")).any());
  CHECK(read_file(tmp.path / "s" / "edited.png") == read_file(tmp.path / "s" / "warped.png"));
  CHECK(slurp(tmp.path / "stderr.txt").find("pairs[0]") != std::string::npos);
}

TEST_CASE("edit with remote backends") {
  TempDir tmp("remote");
  MockServer mock;
  mock.server().Post("/inpaint", [](const httplib::Request& req, httplib::Response& res) {
    auto request = inpaint_request_from_json(json::parse(req.body));
    for (int y = 0; y < request.warped.height(); ++y)
      for (int x = 0; x < request.warped.width(); ++x)
        if (request.mask(x, y)) request.warped.set(x, y, Rgb(1, 2, 3));
    res.set_content(inpaint_response_to_json(request.warped).dump(), "application/json");
  });
  mock.start();
  write_file_atomic(tmp.path / "dragwarp.conf",
                    std::string_view("backend.mock = " + mock.url("/inpaint") + "\nbackend.gone = http://127.0.0.1:" +
                                     std::to_string(closed_port()) + "/inpaint\ninpaint_deadline_ms = 2000\n"));

  Rng rng(304);
  const auto image = smooth_image(rng, 32, 24);
  const auto mask = rect_mask(32, 24, 4, 4, 8, 8);
  const auto file = write_case(tmp.path, image, mask, {{Point2(6, 6), Point2(14, 8)}});
  const auto warp = render_warp(image, mask, {{Point2(6, 6), Point2(14, 8)}}, {});
  ImageBuffer expected = warp.warped;
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x)
      if (warp.inpaint_mask(x, y)) expected.set(x, y, Rgb(1, 2, 3));

  REQUIRE(run(tmp.path, "edit " + q(file) + " --backend mock --config " + q(tmp.path / "dragwarp.conf") +
                            " --out-dir " + q(tmp.path / "m")) == 0);
  CHECK(decode_png_image(read_file(tmp.path / "m" / "edited.png")) == expected);

  // Config from the environment; an unreachable backend falls back to harmonic.
  const std::string env = std::string(kConfigEnvVar) + "=" + q(tmp.path / "dragwarp.conf");
  REQUIRE(run(tmp.path, "edit " + q(file) + " --backend gone --out-dir " + q(tmp.path / "g"), env) == 0);
  CHECK(slurp(tmp.path / "stderr.txt").find("warning") != std::string::npos);
  CHECK(slurp(tmp.path / "stdout.txt").find("fallback") != std::string::npos);
  const auto harmonic =
      run_inpaint(InpaintRequest{warp.warped, warp.inpaint_mask, std::nullopt}, BackendRegistry().select("harmonic"));
  CHECK(decode_png_image(read_file(tmp.path / "g" / "edited.png")) == harmonic.image);
}

TEST_CASE("invalid inputs exit 1 with a diagnostic") {
  TempDir tmp("errors");
  Rng rng(305);
  const auto image = smooth_image(rng, 20, 20);
  const auto file = write_case(tmp.path, image, rect_mask(20, 20, 2, 2, 6, 6), {{Point2(3, 3), Point2(30, 3)}});
  const std::string out = " --out-dir " + q(tmp.path / "o");

  CHECK(run(tmp.path, "warp " + q(file) + out) == 1);
  CHECK(slurp(tmp.path / "stderr.txt").find("points.json: pairs[0]") != std::string::npos);

  write_file_atomic(tmp.path / "points.json", std::string_view(R"({"pairs": [{"handle": [3, 3]}]})"));
  CHECK(run(tmp.path, "warp " + q(file) + out) == 1);
  CHECK(slurp(tmp.path / "stderr.txt").find("points.json") != std::string::npos);

  write_file_atomic(tmp.path / "points.json", std::string_view(R"({"pairs": []})"));
  write_file_atomic(tmp.path / "mask.png", encode_png(BinaryMask(21, 20)));
  CHECK(run(tmp.path, "warp " + q(file) + out) == 1);
  CHECK(slurp(tmp.path / "stderr.txt").find("mask.png") != std::string::npos);

  write_file_atomic(tmp.path / "mask.png", std::string_view("nope"));
  CHECK(run(tmp.path, "warp " + q(file) + out) == 1);
  CHECK(slurp(tmp.path / "stderr.txt").find("mask.png") != std::string::npos);

  write_file_atomic(tmp.path / "mask.png", encode_png(BinaryMask(20, 20)));
  CHECK(run(tmp.path, "warp " + q(file) + out) == 0);
  CHECK(run(tmp.path, "edit " + q(file) + " --backend nope" + out) == 1);
  CHECK(slurp(tmp.path / "stderr.txt").find("harmonic") != std::string::npos);
  CHECK(run(tmp.path, "warp " + q(file) + " --neighbors 0" + out) == 1);
  CHECK(run(tmp.path, "warp " + q(file) + " --resize -3" + out) == 1);
  CHECK(run(tmp.path, "warp " + q(tmp.path / "missing.json") + out) == 1);
  CHECK(slurp(tmp.path / "stderr.txt").find("missing.json") != std::string::npos);

  write_file_atomic(tmp.path / "bad.conf", std::string_view("colour = blue\n"));
  CHECK(run(tmp.path, "warp " + q(file) + out, std::string(kConfigEnvVar) + "=" + q(tmp.path / "bad.conf")) == 1);
  CHECK(slurp(tmp.path / "stderr.txt").find("bad.conf") != std::string::npos);

  CHECK(run(tmp.path, "") == 1);
  CHECK(run(tmp.path, "frobnicate") == 1);
  CHECK(run(tmp.path, "warp " + q(file)) == 1);
  CHECK(run(tmp.path, "--help") == 0);
  fs::create_directories(tmp.path / "empty");
  CHECK(run(tmp.path, "bench " + q(tmp.path / "empty")) == 1);
}

TEST_CASE("bench reports medians, coverage and psnr") {
  TempDir tmp("bench");
  Rng rng(306);
  const auto image = smooth_image(rng, 32, 32);
  const auto mask = rect_mask(32, 32, 8, 8, 10, 10);
  write_case(tmp.path, image, mask, {{Point2(10, 10), Point2(10, 10)}});
  SynthOptions synth;
  synth.width = 64;
  synth.height = 48;
  synth.pairs = 3;
  write_synthetic_case(tmp.path, "synthetic", synth);

  REQUIRE(run(tmp.path, "bench " + q(tmp.path) + " --reps 10 --out-dir " + q(tmp.path / "report")) == 0);
  const auto report = json::parse(slurp(tmp.path / "report" / "bench.json"));
  REQUIRE(report["cases"].size() == 2);
  const auto& identity = report["cases"][0];
  CHECK(identity["case"] == "case.json");
  CHECK(identity["warp_ms"].size() == 10);
  CHECK(identity["inpaint_ms"].size() == 10);
  CHECK(identity["coverage_pct"] == 100.0);
  CHECK(identity["outside_psnr"] == "inf");
  const auto& synthetic = report["cases"][1];
  CHECK(synthetic["width"] == 64);
  CHECK(synthetic["pairs"] == 3);
  CHECK(synthetic["coverage_pct"] == 100.0);
  std::vector<double> samples = synthetic["warp_ms"];
  std::sort(samples.begin(), samples.end());
  CHECK(synthetic["warp_ms_median"].get<double>() == doctest::Approx(0.5 * (samples[4] + samples[5])));
  const std::string table = slurp(tmp.path / "stdout.txt");
  CHECK(table.find("coverage%") != std::string::npos);
  CHECK(table.find("inf") != std::string::npos);

  CHECK(run(tmp.path, "bench " + q(tmp.path) + " --reps 0") == 1);
}

TEST_CASE("cli and service agree byte for byte") {
  TempDir tmp("equiv");
  EditService service{ServiceConfig{}};
  Rng rng(307);
  for (int trial = 0; trial < 4; ++trial) {
    const auto image = smooth_image(rng, 40, 36);
    BinaryMask mask(40, 36);
    while (!mask.any()) mask = random_blobs(rng, 40, 36, 2, 3.0);
    std::vector<ControlPair> pairs;
    std::uniform_int_distribution<int> d(-8, 8);
    for (int i = 0; i < 3; ++i) {
      const Point2 h = random_pixel_in(rng, mask);
      pairs.push_back({h, Point2(std::clamp(h.x() + d(rng), 0.0, 39.0), std::clamp(h.y() + d(rng), 0.0, 35.0))});
    }
    const auto dir = tmp.path / std::to_string(trial);
    fs::create_directories(dir);
    const auto file = write_case(dir, image, mask, pairs);
    REQUIRE(run(dir, "edit " + q(file) + " --out-dir " + q(dir / "o")) == 0);

    SessionOptions native;
    native.resize_long_edge = 0;
    const auto id = service.create_session(encode_png(image), native).id;
    service.set_mask(id, encode_png(mask));
    service.set_points(id, pairs);
    const auto preview = service.preview(id);
    CHECK(read_file(dir / "o" / "warped.png") == preview->artifacts.warped_png);
    CHECK(read_file(dir / "o" / "warped_mask.png") == preview->artifacts.warped_mask_png);
    CHECK(read_file(dir / "o" / "inpaint_mask.png") == preview->artifacts.inpaint_mask_png);
    CHECK(slurp(dir / "o" / "map.json") == preview->artifacts.map_json);
    CHECK(read_file(dir / "o" / "edited.png") == service.inpaint(id).image_png);
  }
}
