#include "timberflow/service.hpp"

#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "timberflow/error.hpp"
#include "timberflow/report.hpp"

namespace timberflow {

using nlohmann::json;

namespace {

struct RegisteredDataset {
  std::string id;
  std::string name;
  DatasetFiles files;
  std::shared_ptr<const Dataset> loaded;  // default load options
};

struct Job {
  std::string id;
  std::string dataset_id;
  ScenarioConfig config;
  std::string state = "queued";  // queued running done failed canceled
  std::string stage;
  std::string submitted_at;
  std::string completed_at;
  bool cached = false;
  std::shared_ptr<const std::string> report;
  json error;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json problem(int status, const std::string& code, const std::string& title, const std::string& detail) {
  return {{"type", "about:blank"}, {"status", status}, {"code", code}, {"title", title}, {"detail", detail}};
}

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", status >= 400 ? "application/problem+json" : "application/json");
}

void send_problem(httplib::Response& res, const json& p) { send(res, p.at("status").get<int>(), p); }

// "config: supply_scale: must be ..." -> field name, when one is named.
std::string error_field(std::string message) {
  const std::string prefix = "config: ";
  if (message.rfind(prefix, 0) == 0) message = message.substr(prefix.size());
  const auto q = message.find("unknown field '");
  if (q != std::string::npos) {
    const auto start = q + 15;
    return message.substr(start, message.find('\'', start) - start);
  }
  const auto colon = message.find(':');
  if (colon == std::string::npos) return "";
  const std::string head = message.substr(0, colon);
  return head.find(' ') == std::string::npos ? head : "";
}

json domain_problem(const DomainError& e) {
  json p = problem(422, e.code(), "scenario cannot be solved", e.what());
  if (const auto* inf = dynamic_cast<const InfeasibleError*>(&e)) {
    p["required"] = inf->required();
    p["available"] = inf->available();
  }
  return p;
}

}  // namespace

struct ScenarioService::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::thread listener;

  std::shared_mutex mu;  // guards everything below
  std::map<std::string, std::shared_ptr<RegisteredDataset>> datasets;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::map<std::string, std::shared_ptr<const std::string>> results;  // fingerprint:config hash
  std::int64_t next_job = 1;

  std::mutex queue_mu;
  std::condition_variable queue_cv;
  std::deque<std::shared_ptr<Job>> queue;
  bool stopping = false;
  std::vector<std::thread> workers;

  explicit Impl(ServiceOptions o) : options(std::move(o)) {
    if (options.workers < 1) throw InputError("workers: must be >= 1");
    for (int i = 0; i < options.workers; ++i) workers.emplace_back([this] { work(); });
    routes();
  }

  ~Impl() {
    {
      std::lock_guard lock(queue_mu);
      stopping = true;
    }
    queue_cv.notify_all();
    for (auto& w : workers) w.join();
  }

  LoadOptions default_load() const {
    LoadOptions lo;
    lo.threads = options.od_threads;
    lo.cache_dir = default_cache_dir();
    return lo;
  }

  static std::string result_key(const std::string& fingerprint, const ScenarioConfig& cfg) {
    return fingerprint + ":" + sha256_hex(scenario_config_json(cfg));
  }

  json status_json(const Job& job) {
    json j{{"id", job.id},
           {"dataset", job.dataset_id},
           {"state", job.state},
           {"config", json::parse(scenario_config_json(job.config))},
           {"submitted_at", job.submitted_at},
           {"cached", job.cached}};
    j["stage"] = job.stage.empty() ? json(nullptr) : json(job.stage);
    j["completed_at"] = job.completed_at.empty() ? json(nullptr) : json(job.completed_at);
    if (job.state == "done") j["report"] = json::parse(*job.report);
    if (job.state == "failed") j["error"] = job.error;
    return j;
  }

  void set_stage(Job& job, std::string_view stage) {
    std::unique_lock lock(mu);
    job.stage = stage;
  }

  void execute(const std::shared_ptr<Job>& job) {
    std::shared_ptr<RegisteredDataset> entry;
    {
      std::unique_lock lock(mu);
      if (job->state != "queued") return;
      job->state = "running";
      job->stage = "od-matrix";
      entry = datasets.at(job->dataset_id);
    }
    std::shared_ptr<const std::string> report;
    json error;
    try {
      const ScenarioConfig& cfg = job->config;
      std::shared_ptr<const Dataset> ds = entry->loaded;
      const LoadOptions base = default_load();
      if (cfg.include_snap_offsets != base.include_snap_offsets || cfg.merge_tolerance_m != base.merge_tolerance_m) {
        ds = std::make_shared<const Dataset>(parse_dataset(entry->files, entry->name, load_options(cfg, options.od_threads)));
      }
      const ScenarioResult result = run_scenario(*ds, cfg, [&](std::string_view s) { set_stage(*job, s); });
      report = std::make_shared<const std::string>(report_json(make_report(ds->fingerprint, cfg, result)));
    } catch (const DomainError& e) {
      error = domain_problem(e);
    } catch (const InputError& e) {
      error = problem(422, "invalid_input", "scenario input rejected", e.what());
    } catch (const std::exception& e) {
      error = problem(500, "internal", "scenario failed", e.what());
    }
    std::unique_lock lock(mu);
    job->completed_at = utc_now();
    if (report) {
      job->state = "done";
      job->report = report;
      results[result_key(entry->loaded->fingerprint, job->config)] = report;
    } else {
      job->state = "failed";
      job->error = error;
    }
  }

  void work() {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(queue_mu);
        queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        job = queue.front();
        queue.pop_front();
      }
      execute(job);
    }
  }

  void register_dataset(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      return send_problem(res, problem(400, "invalid_json", "request body is not JSON", e.what()));
    }
    DatasetFiles files;
    std::string name;
    try {
      if (body.contains("path")) {
        std::filesystem::path dir = body.at("path").get<std::string>();
        if (dir.is_relative() && options.root) dir = *options.root / dir;
        if (!std::filesystem::is_directory(dir)) throw InputError("no such dataset directory: " + dir.string());
        files = read_dataset_files(dir);
        name = body.value("name", dir.filename().string());
      } else if (body.contains("files")) {
        for (const auto& [file, content] : body.at("files").items()) {
          const auto& known = recognised_dataset_files();
          if (std::find(known.begin(), known.end(), file) == known.end()) {
            throw InputError("unrecognised dataset file '" + file + "'");
          }
          files[file] = content.get<std::string>();
        }
        name = body.value("name", std::string("upload"));
      } else {
        throw InputError("expected \"path\" or \"files\"");
      }
    } catch (const json::exception& e) {
      return send_problem(res, problem(400, "invalid_request", "malformed dataset request", e.what()));
    } catch (const InputError& e) {
      return send_problem(res, problem(422, "invalid_dataset", "dataset rejected", e.what()));
    }

    const std::string fingerprint = dataset_fingerprint(files);
    const std::string id = "ds-" + fingerprint.substr(0, 16);
    {
      std::shared_lock lock(mu);
      if (auto it = datasets.find(id); it != datasets.end()) return send(res, 200, dataset_json(*it->second));
    }
    std::shared_ptr<RegisteredDataset> entry = std::make_shared<RegisteredDataset>();
    entry->id = id;
    entry->name = name;
    try {
      entry->loaded = std::make_shared<const Dataset>(parse_dataset(files, name, default_load()));
    } catch (const InputError& e) {
      return send_problem(res, problem(422, "invalid_dataset", "dataset rejected", e.what()));
    } catch (const DomainError& e) {
      return send_problem(res, problem(422, e.code(), "dataset rejected", e.what()));
    }
    entry->files = std::move(files);
    std::unique_lock lock(mu);
    const auto [it, inserted] = datasets.emplace(id, entry);
    send(res, inserted ? 201 : 200, dataset_json(*it->second));
  }

  static json dataset_json(const RegisteredDataset& d) {
    const MarketInstance& inst = d.loaded->instance;
    return {{"id", d.id},
            {"name", d.name},
            {"fingerprint", d.loaded->fingerprint},
            {"villages", inst.villages.size()},
            {"traders", inst.traders.size()},
            {"farms", inst.farms.size()},
            {"transactions", inst.transactions.size()},
            {"od_source", d.loaded->od_source},
            {"unreachable_pairs", d.loaded->unreachable.size()},
            {"warnings", d.loaded->warnings}};
  }

  void submit(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      return send_problem(res, problem(400, "invalid_json", "request body is not JSON", e.what()));
    }
    if (!body.is_object() || !body.contains("dataset") || !body["dataset"].is_string()) {
      return send_problem(res, problem(400, "invalid_request", "malformed scenario request", "expected \"dataset\": id"));
    }
    ScenarioConfig cfg;
    try {
      cfg = parse_scenario_config(body.value("config", json::object()).dump(), "config");
      cfg.dataset.clear();
    } catch (const InputError& e) {
      json p = problem(422, "invalid_config", "config rejected", e.what());
      p["errors"] = json::array({{{"field", error_field(e.what())}, {"message", e.what()}}});
      return send_problem(res, p);
    }
    auto job = std::make_shared<Job>();
    job->config = cfg;
    job->submitted_at = utc_now();
    bool run_inline = false;
    {
      std::unique_lock lock(mu);
      const auto it = datasets.find(body["dataset"].get<std::string>());
      if (it == datasets.end()) {
        return send_problem(res, problem(404, "unknown_dataset", "dataset not found", body["dataset"].get<std::string>()));
      }
      job->dataset_id = it->first;
      job->id = "job-" + std::to_string(next_job++);
      const Dataset& ds = *it->second->loaded;
      if (auto hit = results.find(result_key(ds.fingerprint, cfg)); hit != results.end()) {
        job->state = "done";
        job->cached = true;
        job->report = hit->second;
        job->completed_at = job->submitted_at;
      } else {
        run_inline = static_cast<std::int64_t>(ds.instance.villages.size() * ds.instance.traders.size()) <=
                     options.inline_pairs;
      }
      jobs[job->id] = job;
    }
    if (job->state == "queued") {
      if (run_inline) {
        execute(job);
      } else {
        {
          std::lock_guard lock(queue_mu);
          queue.push_back(job);
        }
        queue_cv.notify_one();
      }
    }
    std::shared_lock lock(mu);
    res.set_header("Location", "/scenarios/" + job->id);
    send(res, job->state == "queued" || job->state == "running" ? 202 : 201, status_json(*job));
  }

  std::shared_ptr<Job> find_job(const std::string& id, httplib::Response& res) {
    auto it = jobs.find(id);
    if (it == jobs.end()) {
      send_problem(res, problem(404, "unknown_job", "scenario not found", id));
      return nullptr;
    }
    return it->second;
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(mu);
      int queued = 0, running = 0;
      for (const auto& [id, j] : jobs) {
        queued += j->state == "queued";
        running += j->state == "running";
      }
      send(res, 200,
           {{"status", "ok"},
            {"workers", options.workers},
            {"datasets", datasets.size()},
            {"queued", queued},
            {"running", running},
            {"report_schema_version", kReportSchemaVersion}});
    });
    server.Post("/datasets", [this](const httplib::Request& req, httplib::Response& res) { register_dataset(req, res); });
    server.Get("/datasets", [this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(mu);
      json list = json::array();
      for (const auto& [id, d] : datasets) list.push_back(dataset_json(*d));
      send(res, 200, {{"datasets", list}});
    });
    server.Post("/scenarios", [this](const httplib::Request& req, httplib::Response& res) { submit(req, res); });
    server.Get(R"(/scenarios/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock lock(mu);
      if (auto job = find_job(req.matches[1], res)) send(res, 200, status_json(*job));
    });
    server.Get(R"(/scenarios/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock lock(mu);
      auto job = find_job(req.matches[1], res);
      if (!job) return;
      if (job->state == "done") {
        res.status = 200;
        res.set_content(*job->report, "application/json");
      } else if (job->state == "failed") {
        send_problem(res, job->error);
      } else {
        json p = problem(409, "not_ready", "report not available", "scenario is " + job->state);
        p["state"] = job->state;
        p["stage"] = job->stage.empty() ? json(nullptr) : json(job->stage);
        send_problem(res, p);
      }
    });
    server.Delete(R"(/scenarios/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::unique_lock lock(mu);
      auto job = find_job(req.matches[1], res);
      if (!job) return;
      if (job->state != "queued") {
        return send_problem(res, problem(409, "not_cancelable", "scenario cannot be canceled",
                                         "only queued scenarios can be canceled; this one is " + job->state));
      }
      job->state = "canceled";
      job->completed_at = utc_now();
      {
        std::lock_guard qlock(queue_mu);
        std::erase(queue, job);
      }
      send(res, 200, status_json(*job));
    });
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.body.empty()) {
        send_problem(res, problem(res.status, res.status == 404 ? "not_found" : "http_error", "request failed",
                                  req.method + " " + req.path));
      }
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "unknown error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_problem(res, problem(500, "internal", "request failed", what));
    });
  }
};

ScenarioService::ScenarioService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

ScenarioService::~ScenarioService() { stop(); }

int ScenarioService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw InputError("cannot bind " + host + ":" + std::to_string(port));
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ScenarioService::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw InputError("cannot listen on " + host + ":" + std::to_string(port));
}

void ScenarioService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

}  // namespace timberflow
