#pragma once

// Service configuration: one `key = value` per line, '#' starts a comment.
//
//   listen              = 127.0.0.1:8080
//   segmenter_url       = http://127.0.0.1:9000/segment
//   resize_long_edge    = 512
//   session_ttl_s       = 1800
//   history_bound       = 8
//   segmenter_deadline_ms = 5000
//   inpaint_deadline_ms = 30000
//   drift_threshold     = 2.0
//   backend.sd15        = http://127.0.0.1:9100/inpaint
//   backend.sd15.latency = slow

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dragwarp/inpaint.hpp"

namespace dragwarp {

inline constexpr const char* kConfigEnvVar = "DRAGWARP_CONFIG";

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string segmenter_url;
  std::vector<BackendDescriptor> backends;
  int resize_long_edge = 512;
  std::chrono::seconds session_ttl{1800};
  int history_bound = 8;
  std::chrono::milliseconds segmenter_deadline{5000};
  std::chrono::milliseconds inpaint_deadline{30000};
  double drift_threshold = 2.0;
};

/// Throws InvalidInput naming the line of any unknown key or bad value.
ServiceConfig parse_config(std::string_view text);
ServiceConfig load_config(const std::filesystem::path& path);

/// Registry with the builtin backend plus every configured remote.
BackendRegistry make_registry(const ServiceConfig& config);

}  // namespace dragwarp
