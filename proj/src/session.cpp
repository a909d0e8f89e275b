#include "dragwarp/session.hpp"

#include <iomanip>
#include <random>
#include <sstream>

namespace dragwarp {

namespace {

std::string describe(const std::vector<PairIssue>& issues) {
  std::string out = "control pairs rejected:";
  for (const auto& i : issues) out += " pairs[" + std::to_string(i.index) + "] " + i.reason + ";";
  out.pop_back();
  return out;
}

std::string random_id() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex);
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << rng() << std::setw(16) << rng();
  return out.str();
}

void check_options(const SessionOptions& o) {
  if (o.resize_long_edge && *o.resize_long_edge < 0) throw InvalidInput("resize_long_edge must be >= 0");
  if (!(o.warp.epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
  if (o.warp.neighbors < 1) throw InvalidInput("neighbors must be >= 1");
  if (o.warp.r2 < 0) throw InvalidInput("r2 must be >= 0");
  if (o.refine.r1 < 0) throw InvalidInput("r1 must be >= 0");
  if (o.refine.point_cap < 1) throw InvalidInput("point_cap must be >= 1");
}

std::vector<int> unbound_pairs(const BinaryMask& mask, const std::vector<ControlPair>& pairs) {
  if (pairs.empty()) return {};
  return associate_control_points(find_contours(mask), pairs, mask.width(), mask.height()).rejected_indices;
}

nlohmann::json options_to_json(const SessionOptions& o) {
  return {{"resize_long_edge", o.resize_long_edge.value_or(0)},
          {"epsilon", o.warp.epsilon},
          {"neighbors", o.warp.neighbors},
          {"r2", o.warp.r2},
          {"r1", o.refine.r1},
          {"point_cap", o.refine.point_cap}};
}

}  // namespace

RejectedPairs::RejectedPairs(std::vector<PairIssue> issues)
    : InvalidInput(describe(issues)), issues_(std::move(issues)) {}

void EditService::Session::mutated() {
  ++version;
  preview.reset();
  pending.reset();
}

EditService::EditService(ServiceConfig config, std::unique_ptr<Segmenter> segmenter)
    : config_(std::move(config)), registry_(make_registry(config_)), segmenter_(std::move(segmenter)) {
  if (!segmenter_ && !config_.segmenter_url.empty()) {
    split_url(config_.segmenter_url);
    segmenter_ = std::make_unique<RemoteSegmenter>(config_.segmenter_url, config_.segmenter_deadline);
  }
}

std::shared_ptr<EditService::Session> EditService::find(const std::string& id) {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
  it->second->last_used = Clock::now().time_since_epoch().count();
  return it->second;
}

std::string EditService::add(std::shared_ptr<Session> session) {
  evict_idle();
  session->last_used = Clock::now().time_since_epoch().count();
  std::unique_lock lock(sessions_mutex_);
  std::string id;
  do id = random_id(); while (sessions_.count(id));
  sessions_.emplace(id, std::move(session));
  return id;
}

SessionCreated EditService::create_session(std::span<const std::uint8_t> png, const SessionOptions& options) {
  check_options(options);
  ImageBuffer image = decode_png_image(png);
  const int long_edge = options.resize_long_edge.value_or(config_.resize_long_edge);
  if (long_edge > 0) image = resize_long_edge(image, long_edge);

  auto session = std::make_shared<Session>(std::move(image));
  session->options = options;
  session->options.resize_long_edge = long_edge;
  const int w = session->base.width();
  const int h = session->base.height();
  return {add(std::move(session)), w, h};
}

std::vector<std::string> EditService::set_mask(const std::string& id, std::span<const std::uint8_t> png) {
  BinaryMask mask = decode_png_mask(png);
  const auto s = find(id);
  std::lock_guard lock(s->state_mutex);
  if (!mask.same_shape(s->mask)) {
    throw InvalidInput("mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                       " but the session image is " + std::to_string(s->base.width()) + "x" +
                       std::to_string(s->base.height()));
  }
  std::vector<std::string> warnings;
  if (!mask.any()) warnings.push_back("mask is empty; previews will not move anything");
  if (mask == s->mask) return warnings;
  s->mask = std::move(mask);
  s->mutated();
  return warnings;
}

PointsAck EditService::set_points(const std::string& id, const std::vector<ControlPair>& pairs) {
  const auto s = find(id);
  std::lock_guard lock(s->state_mutex);
  auto issues = validate_pairs(pairs, s->base.width(), s->base.height());
  if (!issues.empty()) throw RejectedPairs(std::move(issues));
  s->pairs = pairs;
  s->mutated();
  return {unbound_pairs(s->mask, s->pairs)};
}

RefineReply EditService::refine(const std::string& id, std::optional<int> r1) {
  const auto s = find(id);
  std::lock_guard segmenter_lock(s->segmenter_mutex);

  std::unique_lock lock(s->state_mutex);
  if (!s->mask.any()) throw InvalidInput("session has no mask to refine");
  RefineConfig config = s->options.refine;
  if (r1) config.r1 = *r1;
  if (config.r1 < 0) throw InvalidInput("r1 must be >= 0");
  const ImageBuffer image = s->base;
  const BinaryMask mask = s->mask;
  const std::uint64_t version = s->version;
  lock.unlock();

  RefineResult result = dragwarp::refine(image, mask, segmenter_.get(), config);

  lock.lock();
  if (s->version != version) throw Conflict("session changed while refinement was running");
  if (result.refined && !(result.mask == s->mask)) {
    s->mask = result.mask;
    s->mutated();
  }
  return {encode_png(result.mask), result.refined, std::move(result.warnings)};
}

std::shared_ptr<const Preview> EditService::preview_locked(Session& s, std::unique_lock<std::mutex>& lock) {
  while (!s.preview || s.preview_version != s.version) {
    const ImageBuffer image = s.base;
    const BinaryMask mask = s.mask;
    const std::vector<ControlPair> pairs = s.pairs;
    const WarpConfig config = s.options.warp;
    const std::uint64_t version = s.version;
    lock.unlock();

    const auto start = Clock::now();
    WarpOutput output = render_warp(image, mask, pairs, config);
    const auto stop = Clock::now();

    WarpArtifacts artifacts = make_artifacts(output);
    std::vector<ControlPair> rejected;
    for (int i : output.rejected_pair_indices) rejected.push_back(pairs[std::size_t(i)]);
    auto preview = std::make_shared<Preview>(Preview{std::move(output), std::move(artifacts), std::move(rejected),
                                                     std::chrono::duration<double, std::milli>(stop - start).count()});

    lock.lock();
    if (s.version == version) {
      s.preview = std::move(preview);
      s.preview_version = version;
    }
  }
  return s.preview;
}

std::shared_ptr<const Preview> EditService::preview(const std::string& id) {
  const auto s = find(id);
  std::unique_lock lock(s->state_mutex);
  return preview_locked(*s, lock);
}

InpaintReply EditService::inpaint(const std::string& id, const std::optional<std::string>& backend,
                                  const std::optional<std::string>& prompt) {
  const BackendDescriptor& descriptor = registry_.select(backend.value_or("harmonic"));
  const auto s = find(id);
  std::lock_guard inpaint_lock(s->inpaint_mutex);

  std::unique_lock lock(s->state_mutex);
  const auto preview = preview_locked(*s, lock);
  const std::uint64_t version = s->version;
  lock.unlock();

  InpaintOptions options;
  options.deadline = config_.inpaint_deadline;
  options.drift_threshold = config_.drift_threshold;
  InpaintOutcome outcome =
      run_inpaint(InpaintRequest{preview->output.warped, preview->output.inpaint_mask, prompt}, descriptor, options);

  lock.lock();
  if (s->version != version) throw Conflict("session changed while inpainting was running");
  s->pending = Pending{outcome.image, version};
  return {encode_png(outcome.image), outcome.backend_used, outcome.fallback, std::move(outcome.warnings)};
}

CommitReply EditService::commit(const std::string& id) {
  const auto s = find(id);
  std::lock_guard lock(s->state_mutex);
  if (!s->pending || s->pending->version != s->version) {
    throw InvalidInput("nothing to commit; run inpaint first");
  }
  s->history.push_back(std::move(s->base));
  while (int(s->history.size()) > config_.history_bound) s->history.pop_front();
  s->base = std::move(s->pending->image);
  s->mask = BinaryMask(s->base.width(), s->base.height());
  s->pairs.clear();
  ++s->round;
  s->mutated();
  return {s->round, s->history.size()};
}

SessionState EditService::state(const std::string& id) {
  const auto s = find(id);
  std::lock_guard lock(s->state_mutex);
  return {s->base,
          s->mask,
          s->pairs,
          std::vector<ImageBuffer>(s->history.begin(), s->history.end()),
          s->round,
          s->pending && s->pending->version == s->version,
          s->options};
}

nlohmann::json EditService::export_session(const std::string& id) {
  const SessionState st = state(id);
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : st.history) history.push_back(base64_encode(encode_png(h)));
  return {{"format", "dragwarp-session"},
          {"version", 1},
          {"image", base64_encode(encode_png(st.base))},
          {"mask", base64_encode(encode_png(st.mask))},
          {"points", pairs_to_json(st.pairs)},
          {"history", history},
          {"round", st.round},
          {"options", options_to_json(st.options)}};
}

SessionCreated EditService::import_session(const nlohmann::json& archive) {
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!archive.is_object() || !archive.contains(key)) throw InvalidInput(std::string("archive lacks '") + key + "'");
    return archive[key];
  };
  auto png = [&](const nlohmann::json& v, const std::string& where) {
    if (!v.is_string()) throw InvalidInput(where + " must be a base64 PNG string");
    return base64_decode(v.get<std::string>());
  };
  if (field("format") != "dragwarp-session" || field("version") != 1) {
    throw InvalidInput("not a dragwarp session archive (format/version)");
  }

  auto session = std::make_shared<Session>(decode_png_image(png(field("image"), "image")));
  const int w = session->base.width();
  const int h = session->base.height();
  BinaryMask mask = decode_png_mask(png(field("mask"), "mask"));
  if (mask.width() != w || mask.height() != h) throw InvalidInput("archive mask does not match its image");
  session->mask = std::move(mask);
  session->pairs = pairs_from_json(field("points"));
  if (auto issues = validate_pairs(session->pairs, w, h); !issues.empty()) throw RejectedPairs(std::move(issues));

  const auto& history = field("history");
  if (!history.is_array()) throw InvalidInput("archive history must be an array");
  for (std::size_t i = 0; i < history.size(); ++i) {
    session->history.push_back(decode_png_image(png(history[i], "history[" + std::to_string(i) + "]")));
  }
  while (int(session->history.size()) > config_.history_bound) session->history.pop_front();
  if (!field("round").is_number_integer()) throw InvalidInput("archive round must be an integer");
  session->round = field("round").get<int>();

  const auto& o = field("options");
  try {
    SessionOptions options;
    options.resize_long_edge = o.at("resize_long_edge").get<int>();
    options.warp.epsilon = o.at("epsilon").get<double>();
    options.warp.neighbors = o.at("neighbors").get<int>();
    options.warp.r2 = o.at("r2").get<int>();
    options.refine.r1 = o.at("r1").get<int>();
    options.refine.point_cap = o.at("point_cap").get<int>();
    check_options(options);
    session->options = options;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("archive options: ") + e.what());
  }
  return {add(std::move(session)), w, h};
}

std::size_t EditService::evict_idle(Clock::time_point now) {
  const auto ttl = std::chrono::duration_cast<Clock::duration>(config_.session_ttl).count();
  const auto cutoff = now.time_since_epoch().count() - ttl;
  std::unique_lock lock(sessions_mutex_);
  return std::erase_if(sessions_, [&](const auto& item) { return item.second->last_used.load() < cutoff; });
}

std::size_t EditService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

}  // namespace dragwarp
