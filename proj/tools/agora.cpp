// agora: validate assets, run the service, simulate scenarios, export,
// aggregate and replay logs.
//
// Exit codes: 0 success, 1 validation findings or divergence, 2 usage or
// runtime error.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "agora/aggregation.hpp"
#include "agora/asset.hpp"
#include "agora/error.hpp"
#include "agora/service.hpp"
#include "agora/simulator.hpp"

using agora::Error;
using agora::ErrorCode;
using Json = nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::NotFound, "cannot write " + path);
  out << text;
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string opt_text(const std::optional<double>& v) {
  if (!v) return "empty";
  std::ostringstream ss;
  ss.precision(17);
  ss << *v;
  return ss.str();
}

int cmd_validate(const std::string& file, bool json) {
  agora::asset::ValidationReport report;
  try {
    report = agora::asset::validate_asset(agora::asset::parse_asset(slurp(file)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotFound) throw;
    report.findings.push_back({agora::asset::Finding::Severity::Error, e.path(), e.what()});
  }
  if (json) {
    Json arr = Json::array();
    for (const auto& f : report.findings) {
      arr.push_back({{"severity", f.severity == agora::asset::Finding::Severity::Error ? "error" : "notice"},
                     {"path", f.path},
                     {"message", f.message}});
    }
    std::cout << Json{{"file", file}, {"ok", report.ok()}, {"findings", arr}}.dump(2) << '\n';
  } else {
    for (const auto& f : report.findings) {
      std::cout << (f.severity == agora::asset::Finding::Severity::Error ? "error  " : "notice ") << f.path << ": "
                << f.message << '\n';
    }
    std::cout << report.findings.size() << " findings\n";
  }
  return report.ok() ? 0 : 1;
}

std::vector<Json> load_log(const std::string& path) { return agora::sim::parse_log(slurp(path)); }

std::string export_from(const std::vector<Json>& log, std::string task) {
  auto rep = agora::sim::replay(log);
  if (task.empty()) {
    const auto ids = rep.service->task_ids();
    if (ids.size() != 1) throw Error(ErrorCode::BadRequest, "log holds several tasks; pass --task");
    task = ids.front();
  }
  return rep.service->export_task(task);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smart Agora crowd-sensing engine"};
  app.require_subcommand(1);
  std::string format = "text";

  std::string asset_file;
  auto* validate = app.add_subcommand("validate", "Parse and validate an asset document");
  validate->add_option("asset", asset_file, "Asset document")->required();

  std::string config_file;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", config_file, "Configuration file (JSON)");

  std::string scenario_file, out_file;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its simulation log");
  simulate->add_option("--scenario", scenario_file, "Scenario config")->required();
  simulate->add_option("--out", out_file, "Log output file (default stdout)");

  std::string log_file, data_dir, task;
  auto* exp = app.add_subcommand("export", "Write the newline-delimited export of a task");
  exp->add_option("--task", task, "Task id");
  auto* exp_src = exp->add_option_group("source");
  exp_src->add_option("--log", log_file, "Simulation log");
  exp_src->add_option("--data-dir", data_dir, "Service data directory");
  exp_src->require_option(1);
  exp->add_option("--out", out_file, "Output file (default stdout)");

  std::string fn_name = "avg";
  auto* agg = app.add_subcommand("aggregate", "Compare engine and oracle over a log's aggregation events");
  agg->add_option("--log", log_file, "Simulation log")->required();
  agg->add_option("--fn", fn_name, "sum, avg, max, min or count")->check(CLI::IsMember({"sum", "avg", "max", "min", "count"}));
  agg->add_option("--task", task, "Task id");

  auto* rep = app.add_subcommand("replay", "Refold a log and check byte-equal exports");
  rep->add_option("--log", log_file, "Simulation log")->required();

  for (auto* sub : {validate, serve, simulate, exp, agg, rep}) {
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const bool json = format == "json";

  try {
    if (*validate) return cmd_validate(asset_file, json);

    if (*serve) {
      const auto cfg = agora::service::load_config(config_file);
      auto svc = agora::service::open_persistent(cfg, [] {
        return agora::Timestamp{std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count()};
      });
      return agora::service::serve_http(*svc, cfg) == 0 ? 0 : 2;
    }

    if (*simulate) {
      const auto sc = agora::sim::load_scenario(scenario_file);
      const auto res = agora::sim::run_cohort(sc);
      spit(out_file, res.log_text());
      std::int64_t rejected = 0;
      for (const auto& [k, n] : res.rejections) rejected += n;
      if (json) {
        std::cerr << Json{{"scenario", sc.name}, {"task", res.task_id}, {"answers", res.answers_accepted},
                          {"rejections", res.rejections}, {"samples", res.samples_accepted},
                          {"log_lines", res.log.size()}}
                         .dump()
                  << '\n';
      } else {
        std::cerr << sc.name << ": task " << res.task_id << ", " << res.answers_accepted << " answers, " << rejected
                  << " rejected requests, " << res.samples_accepted << " samples, " << res.log.size()
                  << " log lines\n";
      }
      return 0;
    }

    if (*exp) {
      if (!log_file.empty()) {
        spit(out_file, export_from(load_log(log_file), task));
      } else {
        agora::service::Config cfg;
        cfg.data_dir = data_dir;
        cfg = agora::service::apply_env_overrides(cfg);
        cfg.data_dir = data_dir;
        auto svc = agora::service::open_persistent(cfg, [] { return agora::Timestamp{}; });
        if (task.empty()) throw Error(ErrorCode::BadRequest, "--task is required with --data-dir");
        spit(out_file, svc->export_task(task));
      }
      return 0;
    }

    if (*agg) {
      const auto fn = agora::aggregation::fn_from(fn_name);
      const auto events = agora::sim::export_events(export_from(load_log(log_file), task));
      const auto check = agora::sim::check_aggregate(events, *fn);
      if (json) {
        std::cout << Json{{"fn", fn_name}, {"events", check.events}, {"engine", opt_json(check.engine)},
                          {"oracle", opt_json(check.oracle)}, {"equal_at_every_prefix", check.prefix_equal}}
                         .dump(2)
                  << '\n';
      } else {
        std::cout << "fn      " << fn_name << '\n'
                  << "events  " << check.events << '\n'
                  << "engine  " << opt_text(check.engine) << '\n'
                  << "oracle  " << opt_text(check.oracle) << '\n'
                  << (check.prefix_equal ? "equal at every prefix" : "MISMATCH") << '\n';
      }
      return check.prefix_equal && check.engine == check.oracle ? 0 : 1;
    }

    if (*rep) {
      try {
        const auto res = agora::sim::replay(load_log(log_file));
        const auto events = res.service->events().size();
        if (json) {
          Json tasks = Json::object();
          for (const auto& [t, body] : res.exports) tasks[t] = body.size();
          std::cout << Json{{"ok", true}, {"events", events}, {"exports", tasks}}.dump(2) << '\n';
        } else {
          std::cout << "replayed " << events << " events; " << res.exports.size() << " exports byte-equal\n";
        }
        return 0;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DivergenceDetected) throw;
        if (json) {
          std::cout << Json{{"ok", false}, {"sequence", e.path()}, {"message", e.what()}}.dump(2) << '\n';
        } else {
          std::cout << "divergence: " << e.what() << '\n';
        }
        return 1;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << agora::to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
