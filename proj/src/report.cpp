#include "timberflow/report.hpp"

#include <sstream>

#include "json.hpp"
#include "timberflow/csv.hpp"
#include "timberflow/error.hpp"

namespace timberflow {

using nlohmann::json;

namespace {

json flow_rows(const std::vector<FlowRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"village", r.village}, {"trader", r.trader}, {"trees", r.trees}, {"distance_m", r.distance_m}});
  }
  return out;
}

json result_json(const ScenarioResult& r) {
  json j;
  j["actual_cost"] = r.actual_cost ? json(*r.actual_cost) : json(nullptr);
  j["optimized_cost"] = r.optimized_cost;
  j["total_supply"] = r.total_supply;
  j["total_demand"] = r.total_demand;
  j["shipped"] = r.shipped;
  j["historical_pairs"] = r.historical_pairs;
  j["optimized_pairs"] = r.optimized_pairs;
  j["flows"] = flow_rows(r.flows);
  j["historical_flows"] = flow_rows(r.historical_flows);
  j["sites"] = json::array();
  for (const auto& s : r.sites) j["sites"].push_back({{"id", s.id}, {"kind", s.kind}, {"x", s.x}, {"y", s.y}});
  j["permits"] = json::array();
  for (const auto& p : r.permits) {
    j["permits"].push_back({{"trader", p.trader}, {"village", p.village}, {"trees", p.trees}});
  }
  j["priorities"] = json::array();
  for (const auto& p : r.priorities) {
    j["priorities"].push_back({{"village", p.village},
                               {"optimal", p.optimal},
                               {"actual", p.actual},
                               {"delta", p.delta},
                               {"plant_priority", p.plant_priority}});
  }
  j["traders"] = json::array();
  for (const auto& t : r.traders) {
    j["traders"].push_back({{"trader", t.trader},
                            {"demand", t.demand},
                            {"permit", t.permit},
                            {"floor", t.floor},
                            {"received", t.received}});
  }
  if (r.clustering) {
    json c;
    c["feature"] = to_string(r.clustering->feature);
    c["unclustered_cost"] = r.clustering->unclustered_cost;
    c["merge_heights"] = r.clustering->merge_heights;
    c["classes"] = json::array();
    for (const auto& cl : r.clustering->classes) {
      c["classes"].push_back({{"label", cl.label},
                              {"traders", cl.traders},
                              {"feature_total", cl.feature_total},
                              {"demand_total", cl.demand_total}});
    }
    j["clustering"] = c;
  } else {
    j["clustering"] = nullptr;
  }
  j["curves"] = json::array();
  for (const auto& c : r.curves) {
    json points = json::array();
    for (const auto& p : c.points) points.push_back({p.value, p.at_least});
    j["curves"].push_back({{"name", c.name}, {"observations", c.observations}, {"points", points}});
  }
  j["stats"] = {{"solver", r.stats.solver},
                {"augmentations", r.stats.augmentations},
                {"cycles_canceled", r.stats.cycles_canceled},
                {"flow_value", r.stats.flow_value},
                {"cost", r.stats.cost},
                {"certified", r.stats.certified}};
  j["warnings"] = json::array();
  for (const auto& w : r.warnings) j["warnings"].push_back({{"code", w.code}, {"message", w.message}});
  return j;
}

// Field access that turns any JSON shape error into an InputError.
struct Reader {
  std::string source;

  const json& at(const json& j, const char* key) const {
    if (!j.is_object() || !j.contains(key)) throw InputError(source + ": missing field '" + key + "'");
    return j.at(key);
  }
  template <typename T>
  T get(const json& j, const char* key) const {
    const json& v = at(j, key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw InputError(source + ": field '" + key + "' has the wrong type");
    }
  }
  const json& array(const json& j, const char* key) const {
    const json& v = at(j, key);
    if (!v.is_array()) throw InputError(source + ": field '" + key + "' must be an array");
    return v;
  }
};

std::vector<FlowRow> read_flows(const Reader& rd, const json& j, const char* key) {
  std::vector<FlowRow> out;
  for (const json& f : rd.array(j, key)) {
    out.push_back({rd.get<std::string>(f, "village"), rd.get<std::string>(f, "trader"), rd.get<Units>(f, "trees"),
                   rd.get<std::int64_t>(f, "distance_m")});
  }
  return out;
}

ScenarioResult read_result(const Reader& rd, const json& j) {
  ScenarioResult r;
  if (!rd.at(j, "actual_cost").is_null()) r.actual_cost = rd.get<Cost>(j, "actual_cost");
  r.optimized_cost = rd.get<Cost>(j, "optimized_cost");
  r.total_supply = rd.get<Units>(j, "total_supply");
  r.total_demand = rd.get<Units>(j, "total_demand");
  r.shipped = rd.get<Units>(j, "shipped");
  r.historical_pairs = rd.get<std::int64_t>(j, "historical_pairs");
  r.optimized_pairs = rd.get<std::int64_t>(j, "optimized_pairs");
  r.flows = read_flows(rd, j, "flows");
  r.historical_flows = read_flows(rd, j, "historical_flows");
  for (const json& s : rd.array(j, "sites")) {
    r.sites.push_back(
        {rd.get<std::string>(s, "id"), rd.get<std::string>(s, "kind"), rd.get<double>(s, "x"), rd.get<double>(s, "y")});
  }
  for (const json& p : rd.array(j, "permits")) {
    r.permits.push_back({rd.get<std::string>(p, "trader"), rd.get<std::string>(p, "village"), rd.get<Units>(p, "trees")});
  }
  for (const json& p : rd.array(j, "priorities")) {
    r.priorities.push_back({rd.get<std::string>(p, "village"), rd.get<Units>(p, "optimal"), rd.get<Units>(p, "actual"),
                            rd.get<Units>(p, "delta"), rd.get<bool>(p, "plant_priority")});
  }
  for (const json& t : rd.array(j, "traders")) {
    r.traders.push_back({rd.get<std::string>(t, "trader"), rd.get<Units>(t, "demand"), rd.get<Units>(t, "permit"),
                         rd.get<Units>(t, "floor"), rd.get<Units>(t, "received")});
  }
  const json& c = rd.at(j, "clustering");
  if (!c.is_null()) {
    ClusterSummary cs;
    const auto feature = rd.get<std::string>(c, "feature");
    if (feature != "trees" && feature != "volume") throw InputError(rd.source + ": unknown cluster feature '" + feature + "'");
    cs.feature = feature == "trees" ? ClusterFeature::trees : ClusterFeature::volume;
    cs.unclustered_cost = rd.get<Cost>(c, "unclustered_cost");
    cs.merge_heights = rd.get<std::vector<double>>(c, "merge_heights");
    for (const json& cl : rd.array(c, "classes")) {
      cs.classes.push_back({rd.get<std::string>(cl, "label"), rd.get<std::vector<std::string>>(cl, "traders"),
                            rd.get<Units>(cl, "feature_total"), rd.get<Units>(cl, "demand_total")});
    }
    r.clustering = std::move(cs);
  }
  for (const json& cv : rd.array(j, "curves")) {
    SurvivalCurve curve;
    curve.name = rd.get<std::string>(cv, "name");
    curve.observations = rd.get<Units>(cv, "observations");
    for (const auto& [value, at_least] : rd.get<std::vector<std::pair<Units, Units>>>(cv, "points")) {
      curve.points.push_back({value, at_least});
    }
    r.curves.push_back(std::move(curve));
  }
  const json& s = rd.at(j, "stats");
  r.stats = {rd.get<std::string>(s, "solver"),    rd.get<std::int64_t>(s, "augmentations"),
             rd.get<std::int64_t>(s, "cycles_canceled"), rd.get<Units>(s, "flow_value"),
             rd.get<Cost>(s, "cost"),               rd.get<bool>(s, "certified")};
  for (const json& w : rd.array(j, "warnings")) {
    r.warnings.push_back({rd.get<std::string>(w, "code"), rd.get<std::string>(w, "message")});
  }
  return r;
}

std::string percent(double share) { return format_fixed(100.0 * share, 1) + "%"; }

std::string tree_km(Cost cost) { return format_milli(cost) + " tree-km"; }

}  // namespace

ReportDocument make_report(const std::string& fingerprint, const ScenarioConfig& cfg, ScenarioResult result) {
  ReportDocument doc;
  doc.dataset_fingerprint = fingerprint;
  doc.config = cfg;
  doc.config.dataset.clear();
  doc.result = std::move(result);
  return doc;
}

std::string report_json(const ReportDocument& doc) {
  json j;
  j["schema_version"] = doc.schema_version;
  j["dataset_fingerprint"] = doc.dataset_fingerprint;
  j["cost_unit"] = "tree-metre";
  j["config"] = json::parse(scenario_config_json(doc.config));
  j["result"] = result_json(doc.result);
  return j.dump(2) + "\n";
}

ReportDocument parse_report(std::string_view text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(source + ": invalid JSON: " + e.what());
  }
  const Reader rd{source};
  ReportDocument doc;
  doc.schema_version = rd.get<int>(j, "schema_version");
  if (doc.schema_version != kReportSchemaVersion) {
    throw InputError(source + ": unsupported schema_version " + std::to_string(doc.schema_version));
  }
  doc.dataset_fingerprint = rd.get<std::string>(j, "dataset_fingerprint");
  doc.config = parse_scenario_config(rd.at(j, "config").dump(), source + ": config");
  doc.result = read_result(rd, rd.at(j, "result"));
  return doc;
}

std::string report_text(const ReportDocument& doc) {
  const ScenarioResult& r = doc.result;
  std::ostringstream out;
  out << "dataset         " << doc.dataset_fingerprint.substr(0, 16) << "\n";
  out << "solver          " << r.stats.solver << (r.stats.certified ? " (no negative cycle left)" : " (NOT certified)")
      << "\n";
  out << "supply          " << r.total_supply << " trees";
  if (doc.config.supply_scale < 1) out << " (scaled to " << percent(doc.config.supply_scale) << ")";
  out << "\n";
  out << "demand          " << r.total_demand << " trees\n";
  out << "shipped         " << r.shipped << " trees\n";
  out << "actual cost     " << (r.actual_cost ? tree_km(*r.actual_cost) : std::string("unavailable")) << "\n";
  out << "optimized cost  " << tree_km(r.optimized_cost);
  if (const auto ratio = r.cost_ratio()) out << " (" << percent(1.0 - *ratio) << " lower)";
  out << "\n";
  if (r.clustering) {
    out << "unclustered     " << tree_km(r.clustering->unclustered_cost) << "\n";
    out << "classes        ";
    for (const auto& c : r.clustering->classes) out << " " << c.label << "=" << c.traders.size();
    out << "\n";
  }
  out << "edges           " << r.historical_pairs << " historical, " << r.optimized_pairs << " optimized\n";
  int plant = 0;
  for (const auto& p : r.priorities) plant += p.plant_priority;
  out << "villages        " << plant << " plant priority, " << r.priorities.size() - plant << " satisfied\n";
  int starved = 0;
  for (const auto& t : r.traders) starved += t.permit > 0 && t.received == 0;
  out << "traders         " << r.traders.size() << " (" << starved << " receive nothing)\n";
  for (const auto& w : r.warnings) out << "warning [" << w.code << "] " << w.message << "\n";
  return out.str();
}

std::map<std::string, std::string> report_tables(const ReportDocument& doc) {
  const ScenarioResult& r = doc.result;
  std::map<std::string, std::string> files;
  auto flows = [](const std::vector<FlowRow>& rows) {
    std::ostringstream o;
    o << "village_id,trader_id,trees,distance_m\n";
    for (const auto& f : rows) {
      o << f.village << "," << f.trader << "," << f.trees << ",";
      if (f.distance_m < 0) {
        o << "unreachable";
      } else {
        o << f.distance_m;
      }
      o << "\n";
    }
    return o.str();
  };
  files["flows.csv"] = flows(r.flows);
  files["historical_flows.csv"] = flows(r.historical_flows);

  std::ostringstream permits;
  permits << "trader_id,village_id,trees\n";
  for (const auto& p : r.permits) permits << p.trader << "," << p.village << "," << p.trees << "\n";
  files["permits.csv"] = permits.str();

  std::ostringstream pri;
  pri << "village_id,optimal_trees,actual_trees,delta,class\n";
  for (const auto& p : r.priorities) {
    pri << p.village << "," << p.optimal << "," << p.actual << "," << p.delta << ","
        << (p.plant_priority ? "plant-priority" : "satisfied") << "\n";
  }
  files["priorities.csv"] = pri.str();

  std::ostringstream traders;
  traders << "trader_id,demand,permit,floor,received,unmet\n";
  for (const auto& t : r.traders) {
    traders << t.trader << "," << t.demand << "," << t.permit << "," << t.floor << "," << t.received << ","
            << t.permit - t.received << "\n";
  }
  files["traders.csv"] = traders.str();

  std::ostringstream warnings;
  warnings << "code,message\n";
  for (const auto& w : r.warnings) {
    std::string quoted;
    for (char ch : w.message) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    warnings << w.code << ",\"" << quoted << "\"\n";
  }
  files["warnings.csv"] = warnings.str();

  std::ostringstream curves;
  curves << "curve,value,at_least,share\n";
  for (const auto& c : r.curves) {
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      curves << c.name << "," << c.points[i].value << "," << c.points[i].at_least << ","
             << format_fixed(c.share(i), 6) << "\n";
    }
  }
  files["curves.csv"] = curves.str();

  std::map<std::string, const SiteRow*> village_site, trader_site;
  std::ostringstream sites;
  sites << "site_id,kind,x,y,class\n";
  std::map<std::string, bool> plant;
  for (const auto& p : r.priorities) plant[p.village] = p.plant_priority;
  for (const auto& s : r.sites) {
    (s.kind == "village" ? village_site : trader_site)[s.id] = &s;
    sites << s.id << "," << s.kind << "," << format_fixed(s.x, 3) << "," << format_fixed(s.y, 3) << ",";
    if (s.kind == "village") sites << (plant[s.id] ? "plant-priority" : "satisfied");
    sites << "\n";
  }
  files["sites.csv"] = sites.str();

  std::ostringstream edges;
  edges << "network,village_id,trader_id,trees,x1,y1,x2,y2\n";
  auto edge_rows = [&](const char* network, const std::vector<FlowRow>& rows) {
    for (const auto& f : rows) {
      const SiteRow* a = village_site.count(f.village) ? village_site[f.village] : nullptr;
      const SiteRow* b = trader_site.count(f.trader) ? trader_site[f.trader] : nullptr;
      if (!a || !b) continue;
      edges << network << "," << f.village << "," << f.trader << "," << f.trees << "," << format_fixed(a->x, 3) << ","
            << format_fixed(a->y, 3) << "," << format_fixed(b->x, 3) << "," << format_fixed(b->y, 3) << "\n";
    }
  };
  edge_rows("historical", r.historical_flows);
  edge_rows("optimized", r.flows);
  files["edges.csv"] = edges.str();

  if (r.clustering) {
    std::ostringstream classes;
    classes << "trader_id,cluster_label,original_demand,permit\n";
    std::map<std::string, const TraderEntry*> by_id;
    for (const auto& t : r.traders) by_id[t.trader] = &t;
    std::map<std::string, std::string> label;
    for (const auto& c : r.clustering->classes) {
      for (const auto& t : c.traders) label[t] = c.label;
    }
    for (const auto& t : r.traders) classes << t.trader << "," << label[t.trader] << "," << t.demand << "," << t.permit << "\n";
    files["clusters.csv"] = classes.str();
    std::ostringstream merges;
    merges << "step,height\n";
    for (std::size_t i = 0; i < r.clustering->merge_heights.size(); ++i) {
      merges << i + 1 << "," << format_fixed(r.clustering->merge_heights[i], 6) << "\n";
    }
    files["merges.csv"] = merges.str();
  }
  return files;
}

void write_report(const std::filesystem::path& dir, const ReportDocument& doc) {
  try {
    write_file(dir / "report.json", report_json(doc));
    write_file(dir / "report.txt", report_text(doc));
    for (const auto& [name, content] : report_tables(doc)) write_file(dir / name, content);
  } catch (const std::filesystem::filesystem_error& e) {
    throw InputError(std::string("cannot write report: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw InputError(std::string("cannot write report: ") + e.what());
  }
}

}  // namespace timberflow
