#pragma once

// Multi-round editing sessions: upload, mask, refine, drag, preview, inpaint,
// commit. Transport-free; http_service.hpp exposes it over HTTP.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "dragwarp/config.hpp"
#include "dragwarp/errors.hpp"
#include "dragwarp/image_io.hpp"
#include "dragwarp/inpaint.hpp"
#include "dragwarp/refine.hpp"
#include "dragwarp/warp.hpp"
#include "dragwarp/wire.hpp"

namespace dragwarp {

/// set_points refused as a whole; issues name each offending pair.
class RejectedPairs : public InvalidInput {
 public:
  explicit RejectedPairs(std::vector<PairIssue> issues);
  const std::vector<PairIssue>& issues() const { return issues_; }

 private:
  std::vector<PairIssue> issues_;
};

struct SessionOptions {
  /// Long-edge resize on upload; 0 keeps the native size. Unset uses the service default.
  std::optional<int> resize_long_edge;
  WarpConfig warp;
  RefineConfig refine;
};

struct SessionCreated {
  std::string id;
  int width = 0;
  int height = 0;
};

struct PointsAck {
  /// Pairs whose handle lies in no mask region (kept, but they move nothing).
  std::vector<int> unbound;
};

struct RefineReply {
  Bytes mask_png;
  bool refined = false;
  std::vector<std::string> warnings;
};

/// Immutable preview snapshot; repeated previews share it until state changes.
struct Preview {
  WarpOutput output;
  WarpArtifacts artifacts;
  std::vector<ControlPair> rejected_pairs;
  double timing_ms = 0.0;
};

struct InpaintReply {
  Bytes image_png;
  std::string backend_used;
  bool fallback = false;
  std::vector<std::string> warnings;
};

struct CommitReply {
  int round = 0;
  std::size_t history = 0;
};

/// Read-only copy of a session's state for inspection and export.
struct SessionState {
  ImageBuffer base;
  BinaryMask mask;
  std::vector<ControlPair> pairs;
  std::vector<ImageBuffer> history;
  int round = 0;
  bool has_pending = false;
  SessionOptions options;
};

class EditService {
 public:
  using Clock = std::chrono::steady_clock;

  /// segmenter overrides the one built from config.segmenter_url (tests inject mocks).
  explicit EditService(ServiceConfig config, std::unique_ptr<Segmenter> segmenter = nullptr);

  SessionCreated create_session(std::span<const std::uint8_t> png, const SessionOptions& options = {});
  /// Returns warnings (e.g. an empty mask).
  std::vector<std::string> set_mask(const std::string& id, std::span<const std::uint8_t> png);
  PointsAck set_points(const std::string& id, const std::vector<ControlPair>& pairs);
  RefineReply refine(const std::string& id, std::optional<int> r1 = std::nullopt);
  std::shared_ptr<const Preview> preview(const std::string& id);
  InpaintReply inpaint(const std::string& id, const std::optional<std::string>& backend = std::nullopt,
                       const std::optional<std::string>& prompt = std::nullopt);
  CommitReply commit(const std::string& id);

  SessionState state(const std::string& id);
  nlohmann::json export_session(const std::string& id);
  SessionCreated import_session(const nlohmann::json& archive);

  const BackendRegistry& backends() const { return registry_; }
  const ServiceConfig& config() const { return config_; }

  /// Drops sessions idle for longer than the configured TTL; returns how many.
  std::size_t evict_idle(Clock::time_point now = Clock::now());
  std::size_t session_count() const;

 private:
  struct Pending {
    ImageBuffer image;
    std::uint64_t version;
  };

  struct Session {
    std::mutex state_mutex;
    std::mutex inpaint_mutex;
    std::mutex segmenter_mutex;
    ImageBuffer base;
    BinaryMask mask;
    std::vector<ControlPair> pairs;
    std::deque<ImageBuffer> history;
    int round = 0;
    std::uint64_t version = 0;
    std::shared_ptr<const Preview> preview;
    std::uint64_t preview_version = 0;
    std::optional<Pending> pending;
    SessionOptions options;
    std::atomic<Clock::rep> last_used{0};

    explicit Session(ImageBuffer image) : base(std::move(image)), mask(base.width(), base.height()) {}
    void mutated();
  };

  std::shared_ptr<Session> find(const std::string& id);
  std::string add(std::shared_ptr<Session> session);
  /// Returns a preview matching the session's state when it returns; may
  /// release the lock while rendering.
  std::shared_ptr<const Preview> preview_locked(Session& s, std::unique_lock<std::mutex>& lock);

  ServiceConfig config_;
  BackendRegistry registry_;
  std::unique_ptr<Segmenter> segmenter_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace dragwarp
