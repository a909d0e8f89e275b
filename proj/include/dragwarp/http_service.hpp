#pragma once

// HTTP front end for EditService.
//
//   POST /v1/sessions                  PNG body or {"image", "resize_long_edge"?, "options"?} -> {id, width, height}
//   PUT  /v1/sessions/{id}/mask        PNG body or {"mask"}       -> {ok, warnings}
//   POST /v1/sessions/{id}/refine      {"r1"?}                    -> PNG, X-Warning header on passthrough
//   PUT  /v1/sessions/{id}/points      {"pairs": [...]}           -> {ok, rejected}
//   GET  /v1/sessions/{id}/preview     [?artifacts=full]          -> {warped, inpaint_mask, rejected_pairs, timing_ms}
//   POST /v1/sessions/{id}/inpaint     {"backend"?, "prompt"?}    -> {image, backend_used, fallback, warnings}
//   POST /v1/sessions/{id}/commit                                 -> {ok, round, history}
//   GET  /v1/sessions/{id}/export                                 -> session archive
//   POST /v1/sessions/import           session archive            -> {id, width, height}
//   GET  /v1/backends                                             -> [{name, kind, latency_class}]
//   GET  /v1/healthz                                              -> {ok}
//
// Errors are {"error": message, ...}: 400 invalid input, 404 unknown session or
// backend, 409 state conflict, 502/503 backend trouble, 500 otherwise.

// Eigen first: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include "dragwarp/config.hpp"
#include "dragwarp/session.hpp"

#include "httplib.h"

namespace dragwarp {

/// Registers every route on server; service must outlive it.
void mount_routes(httplib::Server& server, EditService& service);

/// Serves until the process is stopped. Returns nonzero if binding fails.
int run_server(const ServiceConfig& config);

}  // namespace dragwarp
