#include <chrono>

#include "doctest.h"
#include "dragwarp/errors.hpp"
#include "dragwarp/image_io.hpp"
#include "dragwarp/inpaint.hpp"
#include "dragwarp/wire.hpp"
#include "mock_server.hpp"
#include "support.hpp"

using namespace dragwarp;
using namespace dragwarp::testing;

namespace {

bool outside_identical(const ImageBuffer& a, const ImageBuffer& b, const BinaryMask& mask) {
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (!mask(x, y) && !(a.at(x, y) == b.at(x, y)).all()) return false;
  return true;
}

ImageBuffer gradient(int w, int h) {
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, Rgb(std::uint8_t(8 * x), std::uint8_t(255 - 6 * x), 77));
  return img;
}

BackendDescriptor remote(const std::string& name, const std::string& url) {
  return BackendDescriptor{name, BackendKind::remote, "slow", url};
}

}  // namespace

TEST_CASE("harmonic: empty mask is identity") {
  Rng rng(51);
  const auto img = random_image(rng, 20, 10);
  const auto out = harmonic_inpaint({img, BinaryMask(20, 10), {}});
  CHECK(out.image == img);
  CHECK(out.iterations == 0);
}

TEST_CASE("harmonic: constant image stays constant") {
  Rng rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> v(0, 255);
    const Rgb c(std::uint8_t(v(rng)), std::uint8_t(v(rng)), std::uint8_t(v(rng)));
    ImageBuffer img(30, 24, c);
    const auto mask = random_blobs(rng, 30, 24);
    if ((~mask).count() == 0) continue;
    // Scribble inside the hole so the fill has to overwrite it.
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 30; ++x)
        if (mask(x, y)) img.set(x, y, Rgb(std::uint8_t(x * 7), 3, 200));
    const auto out = harmonic_inpaint({img, mask, {}});
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 30; ++x)
        for (int ch = 0; ch < 3; ++ch)
          if (mask(x, y)) CHECK(std::abs(int(out.image.channel(x, y, ch)) - int(c[ch])) <= 1);
    CHECK(outside_identical(out.image, img, mask));
  }
}

TEST_CASE("harmonic: linear gradient hole is reproduced") {
  const auto img = gradient(32, 32);
  const auto mask = rect_mask(32, 32, 12, 12, 8, 8);
  auto damaged = img;
  for (int y = 12; y < 20; ++y)
    for (int x = 12; x < 20; ++x) damaged.set(x, y, Rgb(0, 0, 0));
  const auto out = harmonic_inpaint({damaged, mask, {}});
  for (int y = 12; y < 20; ++y)
    for (int x = 12; x < 20; ++x)
      for (int ch = 0; ch < 3; ++ch)
        CHECK(std::abs(int(out.image.channel(x, y, ch)) - int(img.channel(x, y, ch))) <= 2);
  CHECK(outside_identical(out.image, damaged, mask));
}

TEST_CASE("harmonic: maximum principle, monotone updates, determinism") {
  Rng rng(53);
  for (int trial = 0; trial < 25; ++trial) {
    const auto img = random_image(rng, 28, 22);
    const auto mask = random_blobs(rng, 28, 22);
    if ((~mask).count() == 0 || !mask.any()) continue;
    const auto out = harmonic_inpaint({img, mask, {}}, 400, 1e-3);
    const auto again = harmonic_inpaint({img, mask, {}}, 400, 1e-3);
    CHECK(out.image == again.image);
    CHECK(outside_identical(out.image, img, mask));
    // Ring: known pixels 4-adjacent to the hole.
    Eigen::Array3i lo = Eigen::Array3i::Constant(255), hi = Eigen::Array3i::Zero();
    for (int y = 0; y < 22; ++y)
      for (int x = 0; x < 28; ++x) {
        if (mask(x, y)) continue;
        if (mask.contains(x + 1, y) || mask.contains(x - 1, y) || mask.contains(x, y + 1) || mask.contains(x, y - 1)) {
          lo = lo.min(img.at(x, y).cast<int>());
          hi = hi.max(img.at(x, y).cast<int>());
        }
      }
    for (int y = 0; y < 22; ++y)
      for (int x = 0; x < 28; ++x)
        if (mask(x, y)) {
          const Eigen::Array3i v = out.image.at(x, y).cast<int>();
          CHECK((v >= lo).all());
          CHECK((v <= hi).all());
        }
    for (std::size_t i = 1; i < out.updates.size(); ++i)
      CHECK((out.updates[i] <= out.updates[i - 1] + 1e-12).all());
  }
}

TEST_CASE("harmonic: degenerate and invalid requests") {
  const auto all = harmonic_inpaint({ImageBuffer(6, 5, Rgb(1, 2, 3)), BinaryMask(6, 5, true), {}});
  CHECK(all.image == ImageBuffer(6, 5, Rgb(128, 128, 128)));
  CHECK(all.warnings.size() == 1);
  CHECK_THROWS_AS(harmonic_inpaint({ImageBuffer(6, 5), BinaryMask(5, 5), {}}), InvalidInput);
  CHECK_THROWS_AS(harmonic_inpaint({ImageBuffer(6, 5), BinaryMask(6, 5), {}}, 0), InvalidInput);
  CHECK_THROWS_AS(harmonic_inpaint({ImageBuffer(6, 5), BinaryMask(6, 5), {}}, 10, 0.0), InvalidInput);
}

TEST_CASE("backend registry") {
  BackendRegistry reg;
  CHECK(reg.select("harmonic").kind == BackendKind::builtin);
  reg.add(remote("sd15", "http://127.0.0.1:9/x"));
  CHECK(reg.select("sd15").endpoint == "http://127.0.0.1:9/x");
  CHECK_THROWS_AS(reg.add(remote("sd15", "http://a/b")), InvalidInput);
  CHECK_THROWS_AS(reg.add(remote("empty", "")), InvalidInput);
  try {
    reg.select("foo");
    FAIL("expected NotFound");
  } catch (const NotFound& e) {
    CHECK(e.available() == std::vector<std::string>{"harmonic", "sd15"});
    CHECK(std::string(e.what()).find("harmonic") != std::string::npos);
  }
  CHECK(to_string(BackendKind::remote) == "remote");
}

TEST_CASE("remote inpaint over HTTP") {
  Rng rng(54);
  const auto img = random_image(rng, 24, 18);
  const auto mask = random_blobs(rng, 24, 18);
  const InpaintRequest request{img, mask, std::string("a cat")};

  MockServer mock;
  std::string seen_prompt;
  mock.server().Post("/echo", [&](const httplib::Request& req, httplib::Response& res) {
    const auto r = inpaint_request_from_json(nlohmann::json::parse(req.body));
    seen_prompt = r.hints.value_or("");
    res.set_content(inpaint_response_to_json(r.warped).dump(), "application/json");
  });
  mock.server().Post("/harmonic", [&](const httplib::Request& req, httplib::Response& res) {
    const auto r = inpaint_request_from_json(nlohmann::json::parse(req.body));
    res.set_content(inpaint_response_to_json(harmonic_inpaint(r).image).dump(), "application/json");
  });
  mock.server().Post("/small", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(inpaint_response_to_json(ImageBuffer(5, 5)).dump(), "application/json");
  });
  mock.server().Post("/drift", [&](const httplib::Request& req, httplib::Response& res) {
    auto r = inpaint_request_from_json(nlohmann::json::parse(req.body));
    r.warped.pixels() = (r.warped.pixels().cast<int>() / 2).cast<std::uint8_t>();
    res.set_content(inpaint_response_to_json(r.warped).dump(), "application/json");
  });
  mock.server().Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    res.set_content("{}", "application/json");
  });
  mock.start();
  const auto deadline = std::chrono::milliseconds(2000);

  const auto echo = remote_inpaint(request, remote("echo", mock.url("/echo")), deadline);
  CHECK(echo.image == img);
  CHECK(echo.outside_drift == 0.0);
  CHECK(echo.warnings.empty());
  CHECK(seen_prompt == "a cat");

  const auto wire = remote_inpaint(request, remote("h", mock.url("/harmonic")), deadline);
  CHECK(wire.image == harmonic_inpaint(request).image);

  CHECK_THROWS_AS(remote_inpaint(request, remote("s", mock.url("/small")), deadline), ProtocolError);

  const auto drift = remote_inpaint(request, remote("d", mock.url("/drift")), deadline);
  CHECK(drift.outside_drift > 2.0);
  CHECK(drift.warnings.size() == 1);

  CHECK_THROWS_AS(remote_inpaint(request, remote("t", mock.url("/slow")), std::chrono::milliseconds(200)),
                  BackendUnavailable);
  CHECK_THROWS_AS(remote_inpaint(request, BackendDescriptor{"harmonic", BackendKind::builtin, "", ""}, deadline),
                  InvalidInput);

  SUBCASE("run_inpaint falls back to harmonic") {
    InpaintOptions opts;
    opts.deadline = std::chrono::milliseconds(500);
    const auto down = run_inpaint(
        request, remote("gone", "http://127.0.0.1:" + std::to_string(closed_port()) + "/x"), opts);
    CHECK(down.fallback);
    CHECK(down.backend_used == "harmonic");
    CHECK(down.image == harmonic_inpaint(request).image);
    CHECK(down.warnings.size() == 1);

    const auto bad = run_inpaint(request, remote("s", mock.url("/small")), opts);
    CHECK(bad.fallback);

    const auto ok = run_inpaint(request, remote("echo", mock.url("/echo")), opts);
    CHECK_FALSE(ok.fallback);
    CHECK(ok.backend_used == "echo");

    const auto empty = run_inpaint({img, BinaryMask(24, 18), {}}, remote("echo", mock.url("/echo")), opts);
    CHECK(empty.image == img);
  }
}
