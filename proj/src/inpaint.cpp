#include "dragwarp/inpaint.hpp"

#include <algorithm>
#include <cmath>

#include "httplib.h"

#include "dragwarp/errors.hpp"
#include "dragwarp/wire.hpp"

namespace dragwarp {

namespace {

constexpr std::array<std::array<int, 2>, 4> kNeighbors4 = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

std::uint8_t quantize(double v) { return std::uint8_t(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); }

}  // namespace

HarmonicResult harmonic_inpaint(const InpaintRequest& request, int max_iters, double tol) {
  const ImageBuffer& image = request.warped;
  const BinaryMask& mask = request.mask;
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw InvalidInput("inpaint mask and image dimensions differ");
  }
  if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidInput("tol must be > 0");

  const int w = image.width();
  const int h = image.height();
  HarmonicResult result{image, 0, {}, {}};

  // Unknowns in row-major order.
  std::vector<int> unknown_of(std::size_t(w) * h, -1);
  std::vector<Pixel> unknowns;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      unknown_of[std::size_t(y) * w + x] = int(unknowns.size());
      unknowns.emplace_back(x, y);
    }
  }
  const auto n = Eigen::Index(unknowns.size());
  if (n == 0) return result;

  // Degree counts in-bounds 4-neighbors; known neighbors fold into a constant term.
  Eigen::ArrayXd degree(n);
  Eigen::ArrayX3d known_sum = Eigen::ArrayX3d::Zero(n, 3);
  std::vector<int> neighbor_start(std::size_t(n) + 1, 0);
  std::vector<int> neighbors;
  std::vector<std::uint8_t> in_ring(std::size_t(w) * h, 0);
  Eigen::Array3d ring_sum = Eigen::Array3d::Zero();
  long ring_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Pixel& p = unknowns[std::size_t(i)];
    int deg = 0;
    for (const auto& d : kNeighbors4) {
      const int nx = p.x() + d[0];
      const int ny = p.y() + d[1];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      ++deg;
      const int j = unknown_of[std::size_t(ny) * w + nx];
      if (j >= 0) {
        neighbors.push_back(j);
        continue;
      }
      const Eigen::Array3d value = image.at(nx, ny).cast<double>();
      known_sum.row(i) += value.transpose();
      auto& seen = in_ring[std::size_t(ny) * w + nx];
      if (!seen) {
        seen = 1;
        ring_sum += value;
        ++ring_count;
      }
    }
    degree(i) = deg;
    neighbor_start[std::size_t(i) + 1] = int(neighbors.size());
  }

  if (ring_count == 0) {
    result.warnings.push_back("inpaint mask covers the whole image; filled with mid-gray");
    result.image.pixels().setConstant(128);
    return result;
  }

  Eigen::ArrayX3d current(n, 3);
  current.rowwise() = (ring_sum / double(ring_count)).transpose();
  Eigen::ArrayX3d next(n, 3);
  const double degree_total = degree.sum();

  for (int iter = 0; iter < max_iters; ++iter) {
    next = known_sum;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = neighbor_start[std::size_t(i)]; k < neighbor_start[std::size_t(i) + 1]; ++k) {
        next.row(i) += current.row(neighbors[std::size_t(k)]);
      }
    }
    next.colwise() /= degree;

    const Eigen::Array3d update =
        ((next - current).abs().colwise() * degree).colwise().sum().transpose() / degree_total;
    current.swap(next);
    result.updates.push_back(update);
    result.iterations = iter + 1;
    if (update.maxCoeff() <= tol) break;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const Pixel& p = unknowns[std::size_t(i)];
    Rgb value;
    for (int c = 0; c < 3; ++c) value[c] = quantize(current(i, c));
    result.image.set(p.x(), p.y(), value);
  }
  return result;
}

std::string to_string(BackendKind kind) { return kind == BackendKind::builtin ? "builtin" : "remote"; }

BackendRegistry::BackendRegistry() {
  backends_.push_back({"harmonic", BackendKind::builtin, "interactive", ""});
}

void BackendRegistry::add(BackendDescriptor descriptor) {
  for (const auto& b : backends_) {
    if (b.name == descriptor.name) throw InvalidInput("duplicate backend name: " + descriptor.name);
  }
  if (descriptor.kind == BackendKind::remote && descriptor.endpoint.empty()) {
    throw InvalidInput("remote backend " + descriptor.name + " has no endpoint");
  }
  backends_.push_back(std::move(descriptor));
}

const BackendDescriptor& BackendRegistry::select(const std::string& name) const {
  for (const auto& b : backends_) {
    if (b.name == name) return b;
  }
  std::string listing;
  for (const auto& b : backends_) listing += (listing.empty() ? "" : ", ") + b.name;
  throw NotFound("unknown backend '" + name + "'; available: " + listing, names());
}

std::vector<std::string> BackendRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& b : backends_) out.push_back(b.name);
  return out;
}

RemoteInpaintResult remote_inpaint(const InpaintRequest& request, const BackendDescriptor& descriptor,
                                   std::chrono::milliseconds deadline, double drift_threshold) {
  if (descriptor.kind != BackendKind::remote || descriptor.endpoint.empty()) {
    throw InvalidInput("backend " + descriptor.name + " is not a remote backend");
  }
  if (request.warped.width() != request.mask.width() || request.warped.height() != request.mask.height()) {
    throw InvalidInput("inpaint mask and image dimensions differ");
  }
  const UrlParts url = split_url(descriptor.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(deadline);
  client.set_read_timeout(deadline);
  client.set_write_timeout(deadline);

  auto response = client.Post(url.path, inpaint_request_to_json(request).dump(), "application/json");
  if (!response) {
    throw BackendUnavailable("backend " + descriptor.name + " unreachable: " +
                             httplib::to_string(response.error()));
  }
  if (response->status != 200) {
    throw BackendUnavailable("backend " + descriptor.name + " answered HTTP " + std::to_string(response->status));
  }
  const nlohmann::json doc = nlohmann::json::parse(response->body, nullptr, false);
  if (doc.is_discarded()) throw ProtocolError("backend " + descriptor.name + " answered non-JSON");

  RemoteInpaintResult result{inpaint_response_from_json(doc), 0.0, {}};
  const ImageBuffer& got = result.image;
  if (got.width() != request.warped.width() || got.height() != request.warped.height()) {
    throw ProtocolError("backend " + descriptor.name + " returned " + std::to_string(got.width()) + "x" +
                        std::to_string(got.height()) + " for a " + std::to_string(request.warped.width()) +
                        "x" + std::to_string(request.warped.height()) + " request");
  }

  double diff = 0.0;
  long samples = 0;
  for (int y = 0; y < got.height(); ++y) {
    for (int x = 0; x < got.width(); ++x) {
      if (request.mask(x, y)) continue;
      diff += (got.at(x, y).cast<double>() - request.warped.at(x, y).cast<double>()).abs().sum();
      samples += 3;
    }
  }
  result.outside_drift = samples ? diff / double(samples) : 0.0;
  if (result.outside_drift > drift_threshold) {
    result.warnings.push_back("backend " + descriptor.name + " changed pixels outside the mask (mean drift " +
                              std::to_string(result.outside_drift) + ")");
  }
  return result;
}

InpaintOutcome run_inpaint(const InpaintRequest& request, const BackendDescriptor& descriptor,
                           const InpaintOptions& options) {
  auto builtin = [&](InpaintOutcome outcome) {
    HarmonicResult h = harmonic_inpaint(request, options.max_iters, options.tol);
    outcome.image = std::move(h.image);
    outcome.warnings.insert(outcome.warnings.end(), h.warnings.begin(), h.warnings.end());
    return outcome;
  };

  if (!request.mask.any()) return InpaintOutcome{request.warped, descriptor.name, false, {}};
  if (descriptor.kind == BackendKind::builtin) {
    return builtin(InpaintOutcome{request.warped, descriptor.name, false, {}});
  }
  try {
    RemoteInpaintResult r = remote_inpaint(request, descriptor, options.deadline, options.drift_threshold);
    return InpaintOutcome{std::move(r.image), descriptor.name, false, std::move(r.warnings)};
  } catch (const BackendUnavailable& e) {
    return builtin(InpaintOutcome{request.warped, "harmonic", true,
                                  {std::string(e.what()) + "; fell back to harmonic"}});
  } catch (const ProtocolError& e) {
    return builtin(InpaintOutcome{request.warped, "harmonic", true,
                                  {std::string("protocol error: ") + e.what() + "; fell back to harmonic"}});
  }
}

}  // namespace dragwarp
