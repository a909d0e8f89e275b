#pragma once

// JSON payloads shared by the service, the CLI and the remote backends.
// Binary images travel as base64-encoded PNG.
//
//   points:              {"pairs": [{"handle": [x, y], "target": [x, y]}, ...]}
//   segmenter request:   {"image": <png>, "points": [[x, y], ...]}
//   segmenter response:  {"mask": <png, single channel, > 127 = foreground>}
//   inpaint request:     {"image": <png>, "mask": <png, > 127 = inpaint>, "prompt": "..."?}
//   inpaint response:    {"image": <png>}

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dragwarp/image_io.hpp"
#include "dragwarp/inpaint.hpp"
#include "dragwarp/raster.hpp"
#include "dragwarp/warp.hpp"

namespace dragwarp {

/// Throws InvalidInput naming the offending pair index or field.
std::vector<ControlPair> pairs_from_json(const nlohmann::json& doc);
nlohmann::json pairs_to_json(std::span<const ControlPair> pairs);

struct PairIssue {
  int index;
  std::string reason;
};

/// Both endpoints must lie in [0, W) x [0, H).
std::vector<PairIssue> validate_pairs(std::span<const ControlPair> pairs, int width, int height);
nlohmann::json issues_to_json(std::span<const PairIssue> issues);

nlohmann::json pixel_map_to_json(const PixelMap& map);

/// The four warp files, serialized once so every front end emits the same bytes.
struct WarpArtifacts {
  Bytes warped_png;
  Bytes warped_mask_png;
  Bytes inpaint_mask_png;
  std::string map_json;
};
WarpArtifacts make_artifacts(const WarpOutput& output);

nlohmann::json segment_request_to_json(const ImageBuffer& image, std::span<const Point2> points);
struct SegmentRequest {
  ImageBuffer image;
  std::vector<Point2> points;
};
SegmentRequest segment_request_from_json(const nlohmann::json& doc);
nlohmann::json segment_response_to_json(const BinaryMask& mask);
/// Throws ProtocolError on a malformed payload.
BinaryMask segment_response_from_json(const nlohmann::json& doc);

nlohmann::json inpaint_request_to_json(const InpaintRequest& request);
InpaintRequest inpaint_request_from_json(const nlohmann::json& doc);
nlohmann::json inpaint_response_to_json(const ImageBuffer& image);
/// Throws ProtocolError on a malformed payload.
ImageBuffer inpaint_response_from_json(const nlohmann::json& doc);

struct UrlParts {
  std::string origin;  // http://host[:port]
  std::string path;    // starts with '/'
};
/// Throws InvalidInput unless the URL is http://host[:port][/path].
UrlParts split_url(const std::string& url);

}  // namespace dragwarp
