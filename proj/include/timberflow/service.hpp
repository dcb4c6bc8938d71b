#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace timberflow {

struct ServiceOptions {
  int workers = 2;               // concurrent solves
  std::int64_t inline_pairs = 2500;  // villages x traders at or below this run inside the request
  int od_threads = 1;
  std::optional<std::filesystem::path> root;  // relative dataset paths resolve here
};

// HTTP facade over the scenario engine.
//
//   POST   /datasets               {"path": dir} or {"name": n, "files": {"villages.csv": "...", ...}}
//   GET    /datasets
//   POST   /scenarios              {"dataset": id, "config": {...}}
//   GET    /scenarios/{id}         status; embeds the report once done
//   GET    /scenarios/{id}/report  canonical report bytes
//   DELETE /scenarios/{id}         cancel while queued
//   GET    /health
//
// Errors are application/problem+json with a machine-readable "code".
class ScenarioService {
 public:
  explicit ScenarioService(ServiceOptions options = {});
  ~ScenarioService();
  ScenarioService(const ScenarioService&) = delete;
  ScenarioService& operator=(const ScenarioService&) = delete;

  // Binds (port 0 picks a free one) and serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks serving on the calling thread.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace timberflow
