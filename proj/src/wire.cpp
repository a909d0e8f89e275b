#include "dragwarp/wire.hpp"

#include <cmath>

#include "dragwarp/errors.hpp"
#include "dragwarp/image_io.hpp"

namespace dragwarp {

namespace {

using nlohmann::json;

Point2 point_from_json(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw InvalidInput(where + " must be [x, y]");
  }
  const Point2 p(v[0].get<double>(), v[1].get<double>());
  if (!std::isfinite(p.x()) || !std::isfinite(p.y())) throw InvalidInput(where + " is not finite");
  return p;
}

json point_to_json(const Point2& p) { return json::array({p.x(), p.y()}); }

Bytes png_field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key) || !doc[key].is_string()) {
    throw ProtocolError(std::string("missing base64 field '") + key + "'");
  }
  try {
    return base64_decode(doc[key].get_ref<const std::string&>());
  } catch (const InvalidInput& e) {
    throw ProtocolError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::vector<ControlPair> pairs_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("pairs") || !doc["pairs"].is_array()) {
    throw InvalidInput("points document needs a \"pairs\" array");
  }
  std::vector<ControlPair> pairs;
  const auto& list = doc["pairs"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "pairs[" + std::to_string(i) + "]";
    const auto& item = list[i];
    if (!item.is_object() || !item.contains("handle") || !item.contains("target")) {
      throw InvalidInput(where + " needs handle and target");
    }
    pairs.push_back({point_from_json(item["handle"], where + ".handle"),
                     point_from_json(item["target"], where + ".target")});
  }
  return pairs;
}

json pairs_to_json(std::span<const ControlPair> pairs) {
  json list = json::array();
  for (const auto& p : pairs) {
    list.push_back({{"handle", point_to_json(p.handle)}, {"target", point_to_json(p.target)}});
  }
  return json{{"pairs", list}};
}

std::vector<PairIssue> validate_pairs(std::span<const ControlPair> pairs, int width, int height) {
  std::vector<PairIssue> issues;
  auto inside = [&](const Point2& p) {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < double(width) && p.y() < double(height);
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!inside(pairs[i].handle)) {
      issues.push_back({int(i), "handle outside image bounds"});
    } else if (!inside(pairs[i].target)) {
      issues.push_back({int(i), "target outside image bounds"});
    }
  }
  return issues;
}

json issues_to_json(std::span<const PairIssue> issues) {
  json list = json::array();
  for (const auto& issue : issues) list.push_back({{"index", issue.index}, {"reason", issue.reason}});
  return list;
}

json pixel_map_to_json(const PixelMap& map) {
  json entries = json::array();
  for (const auto& e : map.entries) {
    entries.push_back({{"source", point_to_json(e.source)},
                       {"target", json::array({e.target.x(), e.target.y()})},
                       {"origin", e.origin == MapOrigin::forward ? "forward" : "backward"}});
  }
  return json{{"width", map.width}, {"height", map.height}, {"entries", entries}};
}

WarpArtifacts make_artifacts(const WarpOutput& output) {
  return {encode_png(output.warped), encode_png(output.warped_mask), encode_png(output.inpaint_mask),
          pixel_map_to_json(output.map).dump()};
}

json segment_request_to_json(const ImageBuffer& image, std::span<const Point2> points) {
  json list = json::array();
  for (const auto& p : points) list.push_back(point_to_json(p));
  return json{{"image", base64_encode(encode_png(image))}, {"points", list}};
}

SegmentRequest segment_request_from_json(const json& doc) {
  ImageBuffer image = decode_png_image(png_field(doc, "image"));
  std::vector<Point2> points;
  if (!doc.contains("points") || !doc["points"].is_array()) throw ProtocolError("missing points");
  for (const auto& p : doc["points"]) points.push_back(point_from_json(p, "points[]"));
  return {std::move(image), std::move(points)};
}

json segment_response_to_json(const BinaryMask& mask) {
  return json{{"mask", base64_encode(encode_png(mask))}};
}

BinaryMask segment_response_from_json(const json& doc) {
  try {
    return decode_png_mask(png_field(doc, "mask"));
  } catch (const InvalidInput& e) {
    throw ProtocolError(std::string("segmenter mask: ") + e.what());
  }
}

json inpaint_request_to_json(const InpaintRequest& request) {
  json doc{{"image", base64_encode(encode_png(request.warped))},
           {"mask", base64_encode(encode_png(request.mask))}};
  if (request.hints) doc["prompt"] = *request.hints;
  return doc;
}

InpaintRequest inpaint_request_from_json(const json& doc) {
  InpaintRequest request{decode_png_image(png_field(doc, "image")), decode_png_mask(png_field(doc, "mask")),
                         std::nullopt};
  if (doc.contains("prompt") && doc["prompt"].is_string()) request.hints = doc["prompt"].get<std::string>();
  return request;
}

json inpaint_response_to_json(const ImageBuffer& image) {
  return json{{"image", base64_encode(encode_png(image))}};
}

ImageBuffer inpaint_response_from_json(const json& doc) {
  try {
    return decode_png_image(png_field(doc, "image"));
  } catch (const InvalidInput& e) {
    throw ProtocolError(std::string("inpaint image: ") + e.what());
  }
}

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidInput("URL without scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http") throw InvalidInput("unsupported URL scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  if (origin.size() == scheme_end + 3) throw InvalidInput("URL without host: " + url);
  return {origin, path_start == std::string::npos ? "/" : url.substr(path_start)};
}

}  // namespace dragwarp
