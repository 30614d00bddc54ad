#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <httplib.h>

#include "agora/service.hpp"

namespace agora::service {

namespace fs = std::filesystem;

Config apply_env_overrides(Config cfg) {
  if (const char* listen = std::getenv("AGORA_LISTEN")) {
    const std::string s(listen);
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::BadRequest, "AGORA_LISTEN must be host:port");
    cfg.host = s.substr(0, colon);
    try {
      cfg.port = std::stoi(s.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadRequest, "AGORA_LISTEN port is not a number");
    }
  }
  if (const char* key = std::getenv("AGORA_SECRET_KEY")) cfg.secret_key = key;
  if (const char* dir = std::getenv("AGORA_DATA_DIR")) cfg.data_dir = dir;
  if (const char* tok = std::getenv("AGORA_DESIGNER_TOKEN")) cfg.designer_tokens = {tok};
  return cfg;
}

Config load_config(const std::string& path) {
  Config cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open config " + path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::Syntax, std::string("config: ") + e.what(), path);
    }
    cfg.host = j.value("host", cfg.host);
    cfg.port = j.value("port", cfg.port);
    cfg.secret_key = j.value("secret_key", cfg.secret_key);
    cfg.data_dir = j.value("data_dir", cfg.data_dir);
    if (j.contains("designer_tokens")) cfg.designer_tokens = j["designer_tokens"].get<std::vector<std::string>>();
    cfg.snapshot_every = j.value("snapshot_every", cfg.snapshot_every);
  }
  return apply_env_overrides(std::move(cfg));
}

FileEventLog::FileEventLog(std::string data_dir, std::uint64_t snapshot_every)
    : dir_(std::move(data_dir)), snapshot_every_(snapshot_every) {
  fs::create_directories(dir_);
}

std::vector<EventRecord> FileEventLog::load(std::uintmax_t* valid_bytes) const {
  std::vector<EventRecord> out;
  std::ifstream in(fs::path(dir_) / "events.ndjson", std::ios::binary);
  std::string line;
  std::uintmax_t good = 0;
  while (std::getline(in, line)) {
    const bool terminated = !in.eof();
    if (!line.empty()) {
      // A torn final line from a crash mid-append is dropped; anything
      // earlier is corruption.
      if (!terminated) break;
      try {
        out.push_back(event_from_json(Json::parse(line)));
      } catch (const nlohmann::json::exception&) {
        if (in.peek() == EOF) break;
        throw Error(ErrorCode::DivergenceDetected, "corrupt event log at sequence " + std::to_string(out.size() + 1),
                    std::to_string(out.size() + 1));
      }
    }
    good += line.size() + (terminated ? 1 : 0);
  }
  if (valid_bytes) *valid_bytes = good;
  return out;
}

std::vector<EventRecord> FileEventLog::recover() {
  std::uintmax_t good = 0;
  auto events = load(&good);
  const auto path = fs::path(dir_) / "events.ndjson";
  if (fs::exists(path) && fs::file_size(path) != good) fs::resize_file(path, good);
  return events;
}

void FileEventLog::append(const EventRecord& record) {
  {
    std::ofstream out(fs::path(dir_) / "events.ndjson", std::ios::app);
    out << to_json(record).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::Conflict, "failed to append to event log");
  }
  if (snapshot_every_ > 0 && record.seq % snapshot_every_ == 0) {
    const auto tmp = fs::path(dir_) / "snapshot.json.tmp";
    {
      std::ofstream out(tmp);
      out << Json{{"seq", record.seq}, {"digest", record.digest}}.dump() << '\n';
    }
    fs::rename(tmp, fs::path(dir_) / "snapshot.json");
  }
}

void FileEventLog::verify_checkpoint(std::span<const EventRecord> events) const {
  std::ifstream in(fs::path(dir_) / "snapshot.json");
  if (!in) return;
  const Json snap = Json::parse(in);
  const auto seq = snap.at("seq").get<std::uint64_t>();
  const auto digest = snap.at("digest").get<std::string>();
  if (seq == 0 || seq > events.size() || events[seq - 1].digest != digest) {
    throw Error(ErrorCode::DivergenceDetected, "checkpoint at sequence " + std::to_string(seq) + " does not match log",
                std::to_string(seq));
  }
}

std::unique_ptr<Service> open_persistent(const Config& config, Clock clock) {
  if (config.data_dir.empty()) return std::make_unique<Service>(config, std::move(clock));
  auto log = std::make_shared<FileEventLog>(config.data_dir, config.snapshot_every);
  const auto events = log->recover();
  log->verify_checkpoint(events);
  auto svc = std::make_unique<Service>(config, std::move(clock));
  for (const auto& e : events) svc->apply_logged(e);
  svc->set_event_sink([log](const EventRecord& e) { log->append(e); });
  return svc;
}

int serve_http(Service& service, const Config& config) {
  httplib::Server server;
  const auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.body = req.body;
    const auto auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) r.bearer = auth.substr(7);
    const Response out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  const std::string any = R"(/v1/.*)";
  server.Get(any, dispatch);
  server.Post(any, dispatch);
  server.Put(any, dispatch);
  std::cerr << "listening on " << config.host << ':' << config.port << '\n';
  if (!server.listen(config.host, config.port)) {
    std::cerr << "failed to bind " << config.host << ':' << config.port << '\n';
    return 1;
  }
  return 0;
}

}  // namespace agora::service
