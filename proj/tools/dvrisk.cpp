#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dvrisk/corpus.hpp"
#include "dvrisk/error.hpp"
#include "dvrisk/markers.hpp"
#include "dvrisk/models.hpp"
#include "dvrisk/service.hpp"

namespace {

using namespace dvrisk;
using nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kDiverged = 3 };

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path);
  out << text;
  if (!out.flush()) throw Error(ErrorKind::IoFailure, "write failed for " + path);
}

markers::MarkerLexicon lexicon_from(const std::string& path) {
  return path.empty() ? markers::MarkerLexicon::default_lexicon() : markers::load_lexicon(path);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

struct GenerateArgs {
  std::string out, spec, lexicon;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  corpus::GeneratorConfig config;
  if (!a.spec.empty()) config = corpus::generator_config_from_json(read_text(a.spec));
  config.seed = a.seed;
  const auto lexicon = lexicon_from(a.lexicon);
  const auto reports = corpus::generate_synthetic_corpus(config, lexicon, a.seed);
  corpus::save_reports(a.out, reports);

  std::size_t femicide = 0;
  for (const auto& r : reports) femicide += r.is_femicide_report ? 1 : 0;
  const auto labeled = corpus::label_corpus(reports);
  const auto higher = labeled.count(corpus::RiskLabel::HigherRisk);
  const auto lower = labeled.count(corpus::RiskLabel::LowerRisk);
  std::cerr << "wrote " << reports.size() << " reports to " << a.out << ": higher_risk=" << higher
            << " lower_risk=" << lower << " femicide=" << femicide << "\n";
  ordered_json summary;
  summary["reports"] = reports.size();
  summary["higher_risk"] = higher;
  summary["lower_risk"] = lower;
  summary["femicide"] = femicide;
  std::cout << summary.dump() << "\n";
  return kOk;
}

struct ExtractArgs {
  std::string reports, lexicon, out;
};

int cmd_extract(const ExtractArgs& a) {
  const auto lexicon = lexicon_from(a.lexicon);
  const auto reports = corpus::load_reports(a.reports);
  const auto sequences = markers::build_sequences(reports, lexicon);
  write_text(a.out, markers::sequences_to_json(sequences));

  const auto freq = markers::event_frequencies(sequences);
  std::cerr << sequences.size() << " sequences written to " << a.out << "\n";
  ordered_json table = ordered_json::object();
  for (const auto& [name, count] : freq) {
    std::fprintf(stderr, "  %-26s %zu\n", name.c_str(), count);
    table[name] = count;
  }
  ordered_json summary;
  summary["sequences"] = sequences.size();
  summary["frequencies"] = std::move(table);
  std::cout << summary.dump() << "\n";
  return kOk;
}

struct TrainArgs {
  std::string task, data, config, out, lexicon;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
  const std::string run_path = models::run_report_path(a.out).string();
  const std::string checkpoint_name = std::filesystem::path(a.out).filename().string();
  ordered_json summary;
  summary["task"] = a.task;
  models::TrainRun run;

  if (a.task == "classifier") {
    auto config = a.config.empty() ? models::ClassifierConfig{} : models::classifier_config_from_json(read_text(a.config));
    config.seed = a.seed;
    const auto labeled = corpus::label_corpus(corpus::load_reports(a.data), config.threshold_days);
    auto trained = models::train_risk_classifier(labeled, config);
    run = std::move(trained.run);
    run.checkpoint = checkpoint_name;
    write_text(a.out, models::checkpoint_to_json(trained.classifier, run));
    std::fprintf(stderr, "accuracy=%.4f majority_baseline=%.4f test_items=%zu epochs=%zu final_loss=%.6f\n",
                 run.metrics.accuracy, run.majority_baseline, run.metrics.total(), run.loss_history.size(),
                 run.loss_history.back());
  } else {
    auto config = a.config.empty() ? models::PredictorConfig{} : models::predictor_config_from_json(read_text(a.config));
    config.seed = a.seed;
    const auto sequences = markers::sequences_from_json(read_text(a.data));
    const auto vocabulary = models::MarkerVocabulary::from_lexicon(lexicon_from(a.lexicon));
    auto trained = models::train_next_event(sequences, vocabulary, config);
    run = std::move(trained.run);
    run.checkpoint = checkpoint_name;
    write_text(a.out, models::checkpoint_to_json(trained.predictor, run));
    std::fprintf(stderr, "accuracy=%.4f samples=%zu epochs=%zu final_loss=%.6f\n", run.metrics.accuracy,
                 run.metrics.total(), run.loss_history.size(), run.loss_history.back());
  }
  write_text(run_path, run.to_json());
  std::cerr << "checkpoint: " << a.out << "\nrun report: " << run_path << "\n";

  summary["accuracy"] = run.metrics.accuracy;
  summary["majority_baseline"] = run.majority_baseline;
  summary["epochs_run"] = run.loss_history.size();
  summary["final_loss"] = run.loss_history.back();
  summary["checkpoint"] = a.out;
  summary["run_report"] = run_path;
  std::cout << summary.dump() << "\n";
  return kOk;
}

struct PredictArgs {
  std::string task, checkpoint;
  std::string input;
  bool has_input = false;
  std::size_t top_k = 3;
};

int cmd_predict(const PredictArgs& a) {
  std::string text;
  if (a.has_input) {
    text = a.input;
  } else {
    text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  ordered_json out;
  if (a.task == "classifier") {
    const auto clf = models::load_risk_checkpoint(a.checkpoint);
    const auto p = models::predict_risk(clf, text);
    out["probability_lower_risk"] = p.probability_lower_risk;
    out["label"] = p.label == corpus::RiskLabel::LowerRisk ? "lower" : "higher";
    out["label_code"] = static_cast<int>(p.label);
  } else {
    const auto predictor = models::load_next_event_checkpoint(a.checkpoint);
    std::vector<std::string> prefix;
    if (!trim(text).empty()) {
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');) prefix.push_back(trim(item));
    }
    const auto candidates = models::predict_next_event(predictor, prefix, a.top_k);
    out["next"] = candidates.front().marker;
    auto list = ordered_json::array();
    for (const auto& c : candidates) {
      ordered_json item;
      item["marker"] = c.marker;
      item["probability"] = c.probability;
      list.push_back(std::move(item));
    }
    out["candidates"] = std::move(list);
  }
  std::cout << out.dump() << "\n";
  return kOk;
}

struct ServeArgs {
  std::string risk, next, lexicon, bind = "127.0.0.1";
  int port = 8080;
};

int cmd_serve(const ServeArgs& a) {
  std::optional<models::RiskClassifier> risk;
  std::optional<models::NextEventPredictor> next;
  if (!a.risk.empty()) risk = models::load_risk_checkpoint(a.risk);
  if (!a.next.empty()) next = models::load_next_event_checkpoint(a.next);

  service::Service svc(lexicon_from(a.lexicon));
  service::HttpServer server(svc);
  const int port = server.bind(a.bind, a.port);
  svc.load(std::move(risk), std::move(next));

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&server] {
    while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  });
  std::cerr << "listening on http://" << a.bind << ":" << port << "\n";
  ordered_json ready;
  ready["listening"] = a.bind + ":" + std::to_string(port);
  std::cout << ready.dump() << std::endl;
  server.listen();
  g_interrupted.store(true);
  watcher.join();
  std::cerr << "shut down\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domestic-violence risk toolkit: synthetic corpora, marker extraction, LSTM training and inference"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic report corpus (JSONL)");
  generate->add_option("--out", gen.out, "Output JSONL path")->required();
  generate->add_option("--spec", gen.spec, "Generator config JSON");
  generate->add_option("--seed", gen.seed, "Random seed")->required();
  generate->add_option("--lexicon", gen.lexicon, "Marker lexicon JSON (default: shipped lexicon)");

  ExtractArgs ext;
  auto* extract = app.add_subcommand("extract", "Extract per-case marker sequences");
  extract->add_option("--reports", ext.reports, "Report corpus (JSONL)")->required();
  extract->add_option("--lexicon", ext.lexicon, "Marker lexicon JSON (default: shipped lexicon)");
  extract->add_option("--out", ext.out, "Output sequences JSON")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train the risk classifier or the next-event predictor");
  train->add_option("--task", tr.task, "classifier | predictor")
      ->required()
      ->check(CLI::IsMember({"classifier", "predictor"}));
  train->add_option("--data", tr.data, "Reports JSONL (classifier) or sequences JSON (predictor)")->required();
  train->add_option("--config", tr.config, "Config JSON");
  train->add_option("--out-checkpoint", tr.out, "Checkpoint path; the run report is written beside it")->required();
  train->add_option("--seed", tr.seed, "Random seed (overrides the config)")->required();
  train->add_option("--lexicon", tr.lexicon, "Marker lexicon JSON for the predictor vocabulary");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Score a narrative or predict the next marker");
  predict->add_option("--task", pr.task, "classifier | predictor")
      ->required()
      ->check(CLI::IsMember({"classifier", "predictor"}));
  predict->add_option("--checkpoint", pr.checkpoint, "Checkpoint JSON")->required();
  auto* input_opt = predict->add_option("--input", pr.input, "Narrative, or comma-separated markers (default: read stdin)");
  predict->add_option("--top-k", pr.top_k, "Candidates to report (predictor)")->check(CLI::PositiveNumber);

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP inference service");
  serve->add_option("--checkpoint-risk", sv.risk, "Risk classifier checkpoint");
  serve->add_option("--checkpoint-next", sv.next, "Next-event predictor checkpoint");
  serve->add_option("--port", sv.port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--bind", sv.bind, "Bind address");
  serve->add_option("--lexicon", sv.lexicon, "Marker lexicon JSON (default: shipped lexicon)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*extract) return cmd_extract(ext);
    if (*train) return cmd_train(tr);
    if (*predict) {
      pr.has_input = input_opt->count() > 0;
      return cmd_predict(pr);
    }
    if (sv.risk.empty() && sv.next.empty()) {
      std::cerr << "serve: at least one of --checkpoint-risk, --checkpoint-next is required\n";
      return kUsage;
    }
    return cmd_serve(sv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::DivergedTraining ? kDiverged : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
}
