#include "timberflow/cli.hpp"

#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "timberflow/csv.hpp"
#include "timberflow/error.hpp"
#include "timberflow/report.hpp"
#include "timberflow/service.hpp"

namespace timberflow {

namespace {

struct ConfigFlags {
  std::optional<std::string> config_path;
  std::optional<double> supply_scale;
  std::optional<Units> trader_floor;
  std::optional<std::string> solver;
  std::optional<std::string> supply_mode;
  std::optional<std::string> feature;
  bool clustering = false;
  bool snap_offsets = false;
  std::optional<double> merge_tolerance;
  std::optional<std::int64_t> max_unreachable;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--supply-scale", f.supply_scale, "Remaining share of village supply, in (0, 1]");
  cmd->add_option("--trader-floor", f.trader_floor, "Minimum trees per trader");
  cmd->add_option("--solver", f.solver, "cycle-canceling | successive-shortest-paths");
  cmd->add_option("--supply-mode", f.supply_mode, "potential | historical");
  cmd->add_option("--feature", f.feature, "Clustering feature: trees | volume");
  cmd->add_flag("--snap-offsets", f.snap_offsets, "Add site-to-road offsets to distances");
  cmd->add_option("--merge-tolerance", f.merge_tolerance, "Coarse/fine road merge tolerance in metres");
  cmd->add_option("--max-unreachable", f.max_unreachable, "Fail when more pairs are unreachable");
}

// Command-line values override the config file; every value goes through the
// same parser and validation as a config file.
ScenarioConfig build_config(const ConfigFlags& f, std::string base_json, const std::string& source) {
  nlohmann::json j = base_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(base_json, nullptr, false);
  if (j.is_discarded()) {
    parse_scenario_config(base_json, source);  // throws with the parser message
  }
  if (!j.is_object()) throw InputError(source + ": config must be a JSON object");
  if (f.supply_scale) j["supply_scale"] = *f.supply_scale;
  if (f.trader_floor) j["trader_floor"] = *f.trader_floor;
  if (f.solver) j["solver"] = *f.solver;
  if (f.supply_mode) j["supply_mode"] = *f.supply_mode;
  if (f.feature) j["cluster_feature"] = *f.feature;
  if (f.clustering) j["clustering"] = true;
  if (f.snap_offsets) j["include_snap_offsets"] = true;
  if (f.merge_tolerance) j["merge_tolerance_m"] = *f.merge_tolerance;
  if (f.max_unreachable) j["max_unreachable_pairs"] = *f.max_unreachable;
  return parse_scenario_config(j.dump(), source);
}

void emit(const ReportDocument& doc, const std::optional<std::string>& out_dir, const std::string& format,
          std::ostream& out, std::ostream& err) {
  if (out_dir) {
    write_report(*out_dir, doc);
    err << "report written to " << *out_dir << "\n";
    return;
  }
  if (format == "json") {
    out << report_json(doc);
  } else if (format == "text") {
    out << report_text(doc);
  } else {
    const auto tables = report_tables(doc);
    const auto it = tables.find(format);
    if (it == tables.end()) throw InputError("--format: no table '" + format + "' in this report");
    out << it->second;
  }
}

}  // namespace

int cli_main(int argc, const char* const argv[], std::ostream& out, std::ostream& err) {
  CLI::App app{"Timber market flow optimisation", "timberflow"};
  app.require_subcommand(1);

  std::string data_dir;
  std::optional<std::string> out_path;
  std::string format = "json";
  int threads = 1;
  ConfigFlags flags;

  auto* validate = app.add_subcommand("validate", "Check a dataset and print a summary");
  validate->add_option("--data", data_dir, "Dataset directory")->required();
  bool quick = false;
  validate->add_flag("--quick", quick, "Skip road loading and shortest paths");
  validate->add_option("--threads", threads);

  auto* odmatrix = app.add_subcommand("odmatrix", "Compute the village-trader road distance matrix");
  odmatrix->add_option("--data", data_dir, "Dataset directory")->required();
  odmatrix->add_option("--out", out_path, "Output file (default stdout)");
  odmatrix->add_option("--threads", threads);
  odmatrix->add_flag("--snap-offsets", flags.snap_offsets);
  odmatrix->add_option("--merge-tolerance", flags.merge_tolerance);

  auto add_solve = [&](const char* name, const char* help, bool needs_data) {
    auto* cmd = app.add_subcommand(name, help);
    auto* d = cmd->add_option("--data", data_dir, "Dataset directory");
    if (needs_data) d->required();
    cmd->add_option("--out", out_path, "Write report.json, report.txt and tables into this directory");
    cmd->add_option("--format", format, "stdout format: json | text | <table>.csv");
    cmd->add_option("--threads", threads);
    add_config_flags(cmd, flags);
    return cmd;
  };
  auto* optimize = add_solve("optimize", "Optimal flows, permits and priority villages", true);
  optimize->add_flag("--clustering", flags.clustering, "Moderate demands by trader class");
  auto* cluster = add_solve("cluster", "Cluster traders and optimise with moderated permits", true);
  auto* scenario = add_solve("scenario", "Run a what-if described by a config file", false);
  scenario->add_option("--config", flags.config_path, "Scenario config (JSON)")->required();
  scenario->add_flag("--clustering", flags.clustering);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  SynthParams sp;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", sp.seed);
  synth->add_option("--villages", sp.villages);
  synth->add_option("--traders", sp.traders);
  synth->add_option("--farms", sp.farms);
  synth->add_option("--transactions", sp.transactions);
  synth->add_option("--extent-m", sp.extent_m);
  synth->add_option("--grid-spacing-m", sp.grid_spacing_m);
  synth->add_option("--external-share", sp.external_share);
  synth->add_option("--decay-m", sp.decay_m);
  synth->add_option("--noise", sp.noise);

  auto* serve = app.add_subcommand("serve", "Serve the scenario HTTP API");
  std::string host = "127.0.0.1";
  int port = 8080;
  ServiceOptions so;
  std::optional<std::string> root;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--workers", so.workers, "Concurrent solves");
  serve->add_option("--inline-pairs", so.inline_pairs, "Solve inline when villages x traders is at most this");
  serve->add_option("--threads", so.od_threads, "Threads per OD matrix");
  serve->add_option("--root", root, "Directory that relative dataset paths resolve against");

  auto* report = app.add_subcommand("report", "Re-render a saved report");
  std::string report_in;
  report->add_option("--in", report_in, "report.json")->required();
  report->add_option("--out", out_path, "Write report.json, report.txt and tables into this directory");
  report->add_option("--format", format, "stdout format: json | text | <table>.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*validate) {
      LoadOptions lo;
      lo.threads = threads;
      lo.compute_od = !quick;
      lo.cache_dir = default_cache_dir();
      out << dataset_summary(load_dataset(data_dir, lo));
      return 0;
    }
    if (*odmatrix) {
      ScenarioConfig cfg = build_config(flags, "", "flags");
      const Dataset ds = load_dataset(data_dir, load_options(cfg, threads));
      const std::string text = format_od_matrix(ds.instance.od);
      if (out_path) {
        write_file(*out_path, text);
      } else {
        out << text;
      }
      return 0;
    }
    if (*optimize || *cluster || *scenario) {
      std::string base;
      std::string source = "flags";
      std::filesystem::path dir = data_dir;
      if (flags.config_path) {
        source = *flags.config_path;
        if (!std::filesystem::is_regular_file(*flags.config_path)) {
          throw InputError("config file not found: " + *flags.config_path);
        }
        base = read_file(*flags.config_path);
      }
      if (*cluster) flags.clustering = true;
      ScenarioConfig cfg = build_config(flags, base, source);
      if (dir.empty()) {
        if (cfg.dataset.empty()) throw InputError("no dataset: pass --data or set \"dataset\" in the config");
        dir = cfg.dataset;
        if (dir.is_relative()) dir = std::filesystem::path(*flags.config_path).parent_path() / dir;
      }
      if (!std::filesystem::is_directory(dir)) throw InputError("dataset directory not found: " + dir.string());
      const Dataset ds = load_dataset(dir, load_options(cfg, threads));
      const ScenarioResult result = run_scenario(ds, cfg);
      emit(make_report(ds.fingerprint, cfg, result), out_path, format, out, err);
      return 0;
    }
    if (*synth) {
      write_synth(synth_out, synth_instance(sp));
      err << "synthetic dataset written to " << synth_out << "\n";
      return 0;
    }
    if (*serve) {
      if (root) so.root = *root;
      ScenarioService service(so);
      err << "listening on http://" << host << ":" << port << "\n";
      service.run(host, port);
      return 0;
    }
    if (*report) {
      if (!std::filesystem::is_regular_file(report_in)) throw InputError("report not found: " + report_in);
      emit(parse_report(read_file(report_in), report_in), out_path, format, out, err);
      return 0;
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace timberflow
