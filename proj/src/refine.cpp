#include "dragwarp/refine.hpp"

#include <algorithm>

#include "httplib.h"

#include "dragwarp/errors.hpp"
#include "dragwarp/wire.hpp"

namespace dragwarp {

RemoteSegmenter::RemoteSegmenter(std::string url, std::chrono::milliseconds deadline)
    : url_(std::move(url)), deadline_(deadline) {}

BinaryMask RemoteSegmenter::predict(const ImageBuffer& image, std::span<const Point2> points) {
  const UrlParts url = split_url(url_);
  httplib::Client client(url.origin);
  client.set_connection_timeout(deadline_);
  client.set_read_timeout(deadline_);
  client.set_write_timeout(deadline_);

  const std::string body = segment_request_to_json(image, points).dump();
  auto response = client.Post(url.path, body, "application/json");
  if (!response) {
    throw BackendUnavailable("segmenter at " + url_ + " unreachable: " + httplib::to_string(response.error()));
  }
  if (response->status != 200) {
    throw BackendUnavailable("segmenter at " + url_ + " answered HTTP " + std::to_string(response->status));
  }
  nlohmann::json doc = nlohmann::json::parse(response->body, nullptr, false);
  if (doc.is_discarded()) throw ProtocolError("segmenter response is not JSON");
  return segment_response_from_json(doc);
}

std::vector<Point2> sample_grid_points(const BinaryMask& mask, int cap) {
  if (cap < 1) throw InvalidInput("point cap must be >= 1");
  const int w = mask.width();
  const int h = mask.height();
  int x0 = w, y0 = h, x1 = -1, y1 = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return {};

  auto collect = [&](int pitch, std::vector<Point2>* out) {
    long kept = 0;
    for (int y = y0; y <= y1; y += pitch) {
      for (int x = x0; x <= x1; x += pitch) {
        if (!mask(x, y)) continue;
        ++kept;
        if (out) out->emplace_back(x, y);
      }
    }
    return kept;
  };

  // Past the larger bounding-box side only the anchor node remains, so the search ends.
  int pitch = 1;
  while (collect(pitch, nullptr) > cap) ++pitch;

  std::vector<Point2> points;
  collect(pitch, &points);
  if (points.empty()) {
    for (int y = y0; y <= y1 && points.empty(); ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (mask(x, y)) {
          points.emplace_back(x, y);
          break;
        }
      }
    }
  }
  return points;
}

BinaryMask refine_mask(const BinaryMask& user_mask, const BinaryMask& predicted_mask, int r1) {
  if (!user_mask.same_shape(predicted_mask)) {
    throw InvalidInput("predicted mask is " + std::to_string(predicted_mask.width()) + "x" +
                       std::to_string(predicted_mask.height()) + ", user mask is " +
                       std::to_string(user_mask.width()) + "x" + std::to_string(user_mask.height()));
  }
  if (r1 < 0) throw InvalidInput("r1 must be >= 0");
  return (predicted_mask & dilate(user_mask, r1)) | erode(user_mask, r1);
}

RefineResult refine(const ImageBuffer& image, const BinaryMask& user_mask, Segmenter* segmenter,
                    const RefineConfig& config) {
  RefineResult result{user_mask, false, {}};
  if (!segmenter) {
    result.warnings.push_back("no segmenter configured; mask returned unrefined");
    return result;
  }
  const auto points = sample_grid_points(user_mask, config.point_cap);
  if (points.empty()) return result;

  try {
    const BinaryMask predicted = segmenter->predict(image, points);
    if (!predicted.same_shape(user_mask)) {
      result.warnings.push_back("segmenter returned a " + std::to_string(predicted.width()) + "x" +
                                std::to_string(predicted.height()) + " mask; refinement skipped");
      return result;
    }
    result.mask = refine_mask(user_mask, predicted, config.r1);
    result.refined = true;
  } catch (const std::exception& e) {
    result.warnings.push_back(std::string("segmenter failed: ") + e.what() + "; mask returned unrefined");
  }
  return result;
}

}  // namespace dragwarp
