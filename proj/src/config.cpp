#include "dragwarp/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "dragwarp/errors.hpp"

namespace dragwarp {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

template <typename T>
T parse_number(const std::string& value, int line) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InvalidInput("config line " + std::to_string(line) + ": '" + value + "' is not a number");
  }
  return out;
}

double parse_double(const std::string& value, int line) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used == value.size()) return out;
  } catch (const std::exception&) {
  }
  throw InvalidInput("config line " + std::to_string(line) + ": '" + value + "' is not a number");
}

}  // namespace

ServiceConfig parse_config(std::string_view text) {
  ServiceConfig config;
  std::map<std::string, BackendDescriptor> remotes;
  std::vector<std::string> order;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(std::string_view(raw).substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));

    if (key == "listen") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) {
        throw InvalidInput("config line " + std::to_string(line) + ": listen needs host:port");
      }
      config.listen_host = value.substr(0, colon);
      config.listen_port = parse_number<int>(value.substr(colon + 1), line);
    } else if (key == "segmenter_url") {
      config.segmenter_url = value;
    } else if (key == "resize_long_edge") {
      config.resize_long_edge = parse_number<int>(value, line);
    } else if (key == "session_ttl_s") {
      config.session_ttl = std::chrono::seconds(parse_number<long>(value, line));
    } else if (key == "history_bound") {
      config.history_bound = parse_number<int>(value, line);
    } else if (key == "segmenter_deadline_ms") {
      config.segmenter_deadline = std::chrono::milliseconds(parse_number<long>(value, line));
    } else if (key == "inpaint_deadline_ms") {
      config.inpaint_deadline = std::chrono::milliseconds(parse_number<long>(value, line));
    } else if (key == "drift_threshold") {
      config.drift_threshold = parse_double(value, line);
    } else if (key.rfind("backend.", 0) == 0) {
      std::string name = key.substr(8);
      std::string field = "endpoint";
      if (const auto dot = name.find('.'); dot != std::string::npos) {
        field = name.substr(dot + 1);
        name = name.substr(0, dot);
      }
      if (name.empty()) throw InvalidInput("config line " + std::to_string(line) + ": empty backend name");
      if (!remotes.count(name)) {
        remotes[name] = BackendDescriptor{name, BackendKind::remote, "remote", ""};
        order.push_back(name);
      }
      if (field == "endpoint") {
        remotes[name].endpoint = value;
      } else if (field == "latency") {
        remotes[name].latency_class = value;
      } else {
        throw InvalidInput("config line " + std::to_string(line) + ": unknown backend field '" + field + "'");
      }
    } else {
      throw InvalidInput("config line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }

  if (config.resize_long_edge < 0) throw InvalidInput("resize_long_edge must be >= 0");
  if (config.history_bound < 1) throw InvalidInput("history_bound must be >= 1");
  for (const auto& name : order) {
    if (remotes[name].endpoint.empty()) throw InvalidInput("backend " + name + " has no endpoint");
    config.backends.push_back(remotes[name]);
  }
  return config;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

BackendRegistry make_registry(const ServiceConfig& config) {
  BackendRegistry registry;
  for (const auto& b : config.backends) registry.add(b);
  return registry;
}

}  // namespace dragwarp
