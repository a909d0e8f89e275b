#include "dragwarp/http_service.hpp"

#include <atomic>
#include <condition_variable>
#include <iostream>
#include <thread>

namespace dragwarp {

namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

json pair_list(const std::vector<ControlPair>& pairs) { return pairs_to_json(pairs)["pairs"]; }

/// Runs handler, mapping library errors onto HTTP statuses.
template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const RejectedPairs& e) {
      reply(res, 400, {{"error", e.what()}, {"rejected", issues_to_json(e.issues())}});
    } catch (const InvalidInput& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const NotFound& e) {
      reply(res, 404, {{"error", e.what()}, {"available", e.available()}});
    } catch (const Conflict& e) {
      reply(res, 409, {{"error", e.what()}});
    } catch (const ProtocolError& e) {
      reply(res, 502, {{"error", e.what()}});
    } catch (const BackendUnavailable& e) {
      reply(res, 503, {{"error", e.what()}});
    } catch (const json::exception& e) {
      reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  };
}

bool is_json(const httplib::Request& req) {
  return req.get_header_value("Content-Type").rfind(kJson, 0) == 0;
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json doc = json::parse(req.body);
  if (!doc.is_object()) throw InvalidInput("request body must be a JSON object");
  return doc;
}

/// PNG from a raw body, or from a base64 field of a JSON body.
Bytes png_payload(const httplib::Request& req, const char* field) {
  if (!is_json(req)) return Bytes(req.body.begin(), req.body.end());
  const json doc = body_json(req);
  if (!doc.contains(field) || !doc[field].is_string()) {
    throw InvalidInput(std::string("JSON body needs a base64 PNG field '") + field + "'");
  }
  return base64_decode(doc[field].get<std::string>());
}

template <typename T>
std::optional<T> optional_field(const json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
  try {
    return doc[key].get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string("field '") + key + "' has the wrong type");
  }
}

SessionOptions session_options(const httplib::Request& req, const json& doc) {
  SessionOptions options;
  if (req.has_param("resize")) {
    try {
      options.resize_long_edge = std::stoi(req.get_param_value("resize"));
    } catch (const std::exception&) {
      throw InvalidInput("resize must be an integer");
    }
  }
  if (auto v = optional_field<int>(doc, "resize_long_edge")) options.resize_long_edge = v;
  if (doc.contains("options")) {
    const json& o = doc["options"];
    if (!o.is_object()) throw InvalidInput("options must be an object");
    if (auto v = optional_field<double>(o, "epsilon")) options.warp.epsilon = *v;
    if (auto v = optional_field<int>(o, "neighbors")) options.warp.neighbors = *v;
    if (auto v = optional_field<int>(o, "r2")) options.warp.r2 = *v;
    if (auto v = optional_field<int>(o, "r1")) options.refine.r1 = *v;
  }
  return options;
}

json created(const SessionCreated& c) { return {{"id", c.id}, {"width", c.width}, {"height", c.height}}; }

}  // namespace

void mount_routes(httplib::Server& server, EditService& service) {
  server.Get("/v1/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"ok", true}});
  }));

  server.Get("/v1/backends", guarded([&service](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& b : service.backends().list()) {
      list.push_back({{"name", b.name}, {"kind", to_string(b.kind)}, {"latency_class", b.latency_class}});
    }
    reply(res, 200, list);
  }));

  server.Post("/v1/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
    const json doc = is_json(req) ? body_json(req) : json::object();
    reply(res, 201, created(service.create_session(png_payload(req, "image"), session_options(req, doc))));
  }));

  server.Post("/v1/sessions/import", guarded([&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, 201, created(service.import_session(body_json(req))));
  }));

  server.Put(R"(/v1/sessions/([0-9a-f]+)/mask)", guarded([&service](const httplib::Request& req,
                                                                     httplib::Response& res) {
    const auto warnings = service.set_mask(req.matches[1], png_payload(req, "mask"));
    reply(res, 200, {{"ok", true}, {"warnings", warnings}});
  }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/refine)", guarded([&service](const httplib::Request& req,
                                                                       httplib::Response& res) {
    const json doc = body_json(req);
    const auto result = service.refine(req.matches[1], optional_field<int>(doc, "r1"));
    std::string warning;
    for (const auto& w : result.warnings) warning += (warning.empty() ? "" : "; ") + w;
    if (!warning.empty()) res.set_header("X-Warning", warning);
    res.set_header("X-Refined", result.refined ? "true" : "false");
    res.status = 200;
    res.set_content(std::string(result.mask_png.begin(), result.mask_png.end()), "image/png");
  }));

  server.Put(R"(/v1/sessions/([0-9a-f]+)/points)", guarded([&service](const httplib::Request& req,
                                                                       httplib::Response& res) {
    const auto ack = service.set_points(req.matches[1], pairs_from_json(body_json(req)));
    reply(res, 200, {{"ok", true}, {"rejected", ack.unbound}});
  }));

  server.Get(R"(/v1/sessions/([0-9a-f]+)/preview)", guarded([&service](const httplib::Request& req,
                                                                       httplib::Response& res) {
    const auto p = service.preview(req.matches[1]);
    json body{{"warped", base64_encode(p->artifacts.warped_png)},
              {"inpaint_mask", base64_encode(p->artifacts.inpaint_mask_png)},
              {"rejected_pairs", pair_list(p->rejected_pairs)},
              {"timing_ms", p->timing_ms}};
    if (req.get_param_value("artifacts") == "full") {
      body["warped_mask"] = base64_encode(p->artifacts.warped_mask_png);
      body["map"] = p->artifacts.map_json;
    }
    reply(res, 200, body);
  }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/inpaint)", guarded([&service](const httplib::Request& req,
                                                                        httplib::Response& res) {
    const json doc = body_json(req);
    const auto r = service.inpaint(req.matches[1], optional_field<std::string>(doc, "backend"),
                                   optional_field<std::string>(doc, "prompt"));
    reply(res, 200, {{"image", base64_encode(r.image_png)},
                     {"backend_used", r.backend_used},
                     {"fallback", r.fallback},
                     {"warnings", r.warnings}});
  }));

  server.Post(R"(/v1/sessions/([0-9a-f]+)/commit)", guarded([&service](const httplib::Request& req,
                                                                       httplib::Response& res) {
    const auto r = service.commit(req.matches[1]);
    reply(res, 200, {{"ok", true}, {"round", r.round}, {"history", r.history}});
  }));

  server.Get(R"(/v1/sessions/([0-9a-f]+)/export)", guarded([&service](const httplib::Request& req,
                                                                       httplib::Response& res) {
    reply(res, 200, service.export_session(req.matches[1]));
  }));
}

int run_server(const ServiceConfig& config) {
  EditService service(config);
  httplib::Server server;
  server.set_payload_max_length(std::size_t(256) << 20);
  mount_routes(server, service);

  std::atomic<bool> running{true};
  std::mutex mutex;
  std::condition_variable wake;
  std::thread sweeper([&] {
    std::unique_lock lock(mutex);
    while (running) {
      wake.wait_for(lock, std::chrono::seconds(30));
      service.evict_idle();
    }
  });

  std::cerr << "dragwarp: listening on " << config.listen_host << ":" << config.listen_port << "\n";
  const bool ok = server.listen(config.listen_host, config.listen_port);
  {
    std::lock_guard lock(mutex);
    running = false;
  }
  wake.notify_all();
  sweeper.join();
  if (!ok) {
    std::cerr << "dragwarp: cannot listen on " << config.listen_host << ":" << config.listen_port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace dragwarp
