// hemvip: design, serve, simulate and analyze parallel video rating studies.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hemvip/analysis.hpp"
#include "hemvip/dataset.hpp"
#include "hemvip/design.hpp"
#include "hemvip/http_server.hpp"
#include "hemvip/report.hpp"
#include "hemvip/service.hpp"
#include "hemvip/simulator.hpp"
#include "hemvip/store.hpp"

namespace fs = std::filesystem;
using namespace hemvip;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::vector<std::string> read_ids(const fs::path& path) {
  std::vector<std::string> ids;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line.front() != '#') ids.push_back(line);
  }
  return ids;
}

std::vector<ParticipantConfig> read_config_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ParticipantConfig> configs;
  for (const auto& f : files) {
    const auto text = read_file(f);
    const auto doc = Json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.contains("pages")) continue;
    configs.push_back(decode_config(text));
  }
  return configs;
}

struct DesignArgs {
  std::string study;
  std::string participants;
  std::string out;
  std::string audit;
};

int run_design(const DesignArgs& a) {
  if (!a.audit.empty()) {
    const auto configs = read_config_dir(a.audit);
    std::cout << to_json_document(audit_balance(configs)).dump(2) << '\n';
    return 0;
  }
  if (a.study.empty() || a.participants.empty() || a.out.empty()) {
    std::cerr << "design: --study, --participants and --out are required (or --audit DIR)\n";
    return 2;
  }
  const auto def = decode_study(read_file(a.study));
  const auto ids = read_ids(a.participants);
  const auto configs = generate_batch(def, ids);
  fs::create_directories(a.out);
  for (const auto& cfg : configs) write_file(fs::path(a.out) / (cfg.participant_id + ".json"), encode_config(cfg));
  const auto report = audit_balance(configs);
  write_file(fs::path(a.out) / "balance_report.json", to_json_document(report).dump(2) + "\n");
  std::cout << "wrote " << configs.size() << " configs to " << a.out << "; max_deviation " << report.max_deviation
            << ", stimulus order max abs deviation " << report.stimulus_order_max_abs_deviation << '\n';
  return 0;
}

struct ServeArgs {
  std::string config_dir;
  std::string store;
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string static_dir;
  std::string media_dir;
  int failures_before_block = 1;
  bool strict_numbers = false;
};

HttpServer* g_server = nullptr;

int run_serve(const ServeArgs& a) {
  ServiceOptions opts;
  opts.failures_before_block = a.failures_before_block;
  opts.attention.accept_ambiguous = !a.strict_numbers;
  EvalService service(std::make_shared<JsonLinesStore>(a.store), opts);
  const auto n = service.register_config_dir(a.config_dir);
  service.restore_from_store();

  HttpOptions http;
  if (!a.static_dir.empty()) http.static_dir = a.static_dir;
  if (!a.media_dir.empty()) http.media_dir = a.media_dir;
  HttpServer server(service, http);
  const int port = server.bind(a.host, a.port);
  if (port < 0) {
    std::cerr << "serve: cannot bind " << a.host << ":" << a.port << '\n';
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "serving " << n << " participant configs on " << a.host << ":" << port << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}

struct AnalyzeArgs {
  std::string ratings;
  std::string contrasts;
  bool all_pairs = false;
  double alpha = 0.05;
  std::string out;
  bool per_participant = false;
};

int run_analyze(const AnalyzeArgs& a) {
  std::ifstream in(a.ratings, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + a.ratings);
  const auto rows = without_attention_checks(read_ratings_csv(in));

  AnalysisConfig config;
  config.alpha = a.alpha;
  config.aggregation = a.per_participant ? Aggregation::kParticipantMeans : Aggregation::kPooledPages;
  if (!a.contrasts.empty()) config.contrasts = parse_contrast_list(read_file(a.contrasts));
  const auto results = analyze(rows, config);

  const auto text = render_text_report(results, config);
  std::cout << text;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_file(fs::path(a.out) / "report.txt", text);
    write_file(fs::path(a.out) / "report.csv", render_csv_report(results));
    write_file(fs::path(a.out) / "report.json", to_json_document(results, config).dump(2) + "\n");
  }
  return 0;
}

struct SimulateArgs {
  std::string study;
  std::string model;
  int participants = 46;
  std::string out;
  std::string live;
  std::string ids;
  int failures_before_block = 1;
  int concurrency = 4;
};

int run_simulate(const SimulateArgs& a) {
  const auto def = decode_study(read_file(a.study));
  const auto model = Json::parse(read_file(a.model)).get<RaterModel>();
  if (!a.live.empty()) {
    const auto ids = a.ids.empty() ? simulated_participant_ids(a.participants) : read_ids(a.ids);
    DriveOptions opts;
    opts.concurrency = a.concurrency;
    const auto s = drive_service(a.live, def, model, ids, opts);
    std::cout << Json{{"participants", s.participants},
                      {"completed", s.completed},
                      {"blocked", s.blocked},
                      {"pages_accepted", s.pages_accepted},
                      {"pages_check_failed", s.pages_check_failed},
                      {"rating_rows_accepted", s.rating_rows_accepted},
                      {"check_rows_accepted", s.check_rows_accepted},
                      {"events_sent", s.events_sent},
                      {"errors", s.errors}}
                     .dump(2)
              << '\n';
    return s.errors.empty() ? 0 : 1;
  }
  SimulationOptions opts;
  opts.failures_before_block = a.failures_before_block;
  const auto result = simulate_study(def, model, a.participants, opts);
  if (a.out.empty() || a.out == "-") {
    write_ratings_csv(std::cout, result.export_rows);
  } else {
    std::ofstream out(a.out, std::ios::binary);
    write_ratings_csv(out, result.export_rows);
    std::cerr << "wrote " << result.export_rows.size() << " rows (" << result.completed << " completed, "
              << result.blocked << " blocked) to " << a.out << '\n';
  }
  return 0;
}

int run_demo(const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "study.json", encode_study(demo_study()));
  write_file(fs::path(out_dir) / "model.json", Json(demo_rater_model()).dump(2) + "\n");
  std::string ids;
  for (const auto& id : simulated_participant_ids(46)) ids += id + "\n";
  write_file(fs::path(out_dir) / "participants.txt", ids);
  std::cout << "wrote study.json, model.json and participants.txt to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel video rating studies: design, serve, simulate, analyze"};
  app.require_subcommand(1);

  DesignArgs design;
  auto* design_cmd = app.add_subcommand("design", "Generate counterbalanced participant configs");
  design_cmd->add_option("--study", design.study, "Study definition JSON");
  design_cmd->add_option("--participants", design.participants, "Participant ids, one per line");
  design_cmd->add_option("--out", design.out, "Output directory for config documents");
  design_cmd->add_option("--audit", design.audit, "Audit the balance of an existing config directory");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the evaluation service");
  serve_cmd->add_option("--config-dir", serve.config_dir, "Directory of participant configs")->required();
  serve_cmd->add_option("--store", serve.store, "Directory for the append-only JSON-lines store")->required();
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--static", serve.static_dir, "Browser bundle served at /");
  serve_cmd->add_option("--media", serve.media_dir, "Stimulus files served at /media");
  serve_cmd->add_option("--failures-before-block", serve.failures_before_block, "Failed checks that block a participant")
      ->check(CLI::PositiveNumber);
  serve_cmd->add_flag("--strict-numbers", serve.strict_numbers, "Do not accept teen/ty confusions in attention checks");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Paired contrast analysis of exported ratings");
  analyze_cmd->add_option("--ratings", analyze_args.ratings, "Ratings CSV export")->required();
  auto* contrasts_opt = analyze_cmd->add_option("--contrasts", analyze_args.contrasts, "Contrast list file");
  auto* all_pairs_opt = analyze_cmd->add_flag("--all-pairs", analyze_args.all_pairs, "Analyze every condition pair");
  contrasts_opt->excludes(all_pairs_opt);
  analyze_cmd->add_option("--alpha", analyze_args.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  analyze_cmd->add_option("--out", analyze_args.out, "Report directory");
  analyze_cmd->add_flag("--per-participant", analyze_args.per_participant,
                        "Average differences per participant before testing");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Synthetic participants, in-process or against a live service");
  sim_cmd->add_option("--study", sim.study, "Study definition JSON")->required();
  sim_cmd->add_option("--model", sim.model, "Rater model JSON")->required();
  sim_cmd->add_option("--participants", sim.participants, "Number of participants")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", sim.out, "Export CSV path ('-' for stdout)");
  sim_cmd->add_option("--live", sim.live, "Base URL of a running service, e.g. http://localhost:8080");
  sim_cmd->add_option("--ids", sim.ids, "Participant ids file for --live");
  sim_cmd->add_option("--failures-before-block", sim.failures_before_block, "Blocking policy for in-process runs");
  sim_cmd->add_option("--concurrency", sim.concurrency, "Concurrent participants for --live");

  std::string demo_dir;
  auto* demo_cmd = app.add_subcommand("demo", "Write an example study, rater model and participant list");
  demo_cmd->add_option("--out", demo_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*design_cmd) return run_design(design);
    if (*serve_cmd) return run_serve(serve);
    if (*analyze_cmd) {
      if (analyze_args.contrasts.empty() && !analyze_args.all_pairs) {
        std::cerr << "analyze: pass --contrasts FILE or --all-pairs\n";
        return 2;
      }
      return run_analyze(analyze_args);
    }
    if (*sim_cmd) return run_simulate(sim);
    if (*demo_cmd) return run_demo(demo_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
