#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dragwarp/raster.hpp"

namespace dragwarp {

struct InpaintRequest {
  ImageBuffer warped;
  BinaryMask mask;
  std::optional<std::string> hints;
};

struct HarmonicResult {
  ImageBuffer image;
  int iterations = 0;
  /// Per-iteration, per-channel degree-weighted mean absolute Jacobi update.
  std::vector<Eigen::Array3d> updates;
  std::vector<std::string> warnings;
};

/// Laplace fill of the masked pixels, known pixels as Dirichlet data.
HarmonicResult harmonic_inpaint(const InpaintRequest& request, int max_iters = 2000, double tol = 1e-3);

enum class BackendKind { builtin, remote };

struct BackendDescriptor {
  std::string name;
  BackendKind kind = BackendKind::builtin;
  std::string latency_class;
  std::string endpoint;
};

std::string to_string(BackendKind kind);

class BackendRegistry {
 public:
  /// Starts with the builtin "harmonic" backend.
  BackendRegistry();

  /// Throws InvalidInput on a duplicate name.
  void add(BackendDescriptor descriptor);
  /// Throws NotFound listing the registered names.
  const BackendDescriptor& select(const std::string& name) const;
  const std::vector<BackendDescriptor>& list() const { return backends_; }
  std::vector<std::string> names() const;

 private:
  std::vector<BackendDescriptor> backends_;
};

struct RemoteInpaintResult {
  ImageBuffer image;
  /// Mean absolute per-channel difference from the request outside the mask.
  double outside_drift = 0.0;
  std::vector<std::string> warnings;
};

/// Throws BackendUnavailable on transport failure or timeout, ProtocolError on
/// a malformed or mis-sized answer.
RemoteInpaintResult remote_inpaint(const InpaintRequest& request, const BackendDescriptor& descriptor,
                                   std::chrono::milliseconds deadline, double drift_threshold = 2.0);

struct InpaintOutcome {
  ImageBuffer image;
  std::string backend_used;
  bool fallback = false;
  std::vector<std::string> warnings;
};

struct InpaintOptions {
  std::chrono::milliseconds deadline{30000};
  double drift_threshold = 2.0;
  int max_iters = 2000;
  double tol = 1e-3;
};

/// Runs the backend; a remote that is unavailable falls back to harmonic.
InpaintOutcome run_inpaint(const InpaintRequest& request, const BackendDescriptor& descriptor,
                           const InpaintOptions& options = {});

}  // namespace dragwarp
