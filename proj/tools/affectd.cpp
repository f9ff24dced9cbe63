#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "affect/app/config.hpp"
#include "affect/app/session.hpp"
#include "affect/app/synth.hpp"
#include "affect/app/train.hpp"
#include "affect/text/lexicon.hpp"

namespace {

using namespace affect;

enum Exit { kOk = 0, kComponentFailure = 1, kBadInput = 2, kNoConsent = 3 };

// Turns SIGINT/SIGTERM into a pipeline stop. The signals are blocked in
// every thread and collected here with sigtimedwait.
class InterruptWatcher {
public:
  explicit InterruptWatcher(app::Session& session) {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    thread_ = std::thread([this, &session] {
      const timespec slice{0, 100'000'000};
      while (!done_) {
        if (sigtimedwait(&set_, nullptr, &slice) > 0) {
          std::cerr << "affectd: interrupted, draining\n";
          session.request_stop();
        }
      }
    });
  }
  ~InterruptWatcher() {
    done_ = true;
    thread_.join();
  }

  static void block_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
  }

private:
  sigset_t set_{};
  std::atomic<bool> done_{false};
  std::thread thread_;
};

int run_command(const std::string& config_path, bool consent, const std::string& replay, bool print_metrics) {
  app::PipelineConfig config = app::load_config(config_path);
  app::resolve_paths(config, std::filesystem::absolute(config_path).parent_path());
  if (!replay.empty()) {
    config.replay = replay;
    config.ingest.reset();
  }
  app::apply_env_overrides(config);

  InterruptWatcher::block_signals();
  app::SessionOptions options;
  options.consent = consent;
  if (print_metrics) options.metrics_out = &std::cout;
  app::Session session(config, options);
  if (auto port = session.ingest_port()) std::cerr << "affectd: ingest listening on port " << *port << "\n";
  if (auto port = session.bus_port()) std::cerr << "affectd: bus listening on port " << *port << "\n";

  InterruptWatcher watcher(session);
  const auto result = session.run();
  std::cerr << "affectd: " << result.rows << " rows written" << (result.stopped ? " (stopped)" : "") << "\n";
  for (const auto& s : result.report.streams)
    if (s.dropped || s.queue_dropped())
      std::cerr << "affectd: " << s.name << " dropped " << s.dropped << " + " << s.queue_dropped() << " queued\n";
  return kOk;
}

int train_command(const std::string& corpus_path, const std::string& out_path, std::size_t select, std::size_t cap,
                  const std::string& stoplist, const std::vector<double>& grid, int folds, std::uint64_t seed) {
  app::TrainOptions options;
  options.select = select;
  options.cap = cap;
  if (!stoplist.empty()) options.stoplist = text::read_term_list(stoplist);
  if (!grid.empty()) options.params.lambda_grid = grid;
  options.params.folds = folds;
  options.params.fold_seed = seed;
  const auto summary = app::train_sentiment(app::load_corpus(corpus_path), options);
  std::ofstream out(out_path, std::ios::trunc);
  out << summary.result.model.to_json().dump() << "\n";
  if (!out) throw ParseError("cannot write " + out_path);
  std::cout << "documents " << summary.documents << "\n"
            << "features  " << summary.result.model.features().size() << "\n"
            << "lambda    " << summary.result.lambda << "\n"
            << "accuracy  " << summary.training_accuracy << " (training)\n"
            << "converged " << (summary.result.converged ? "yes" : "no") << "\n";
  return kOk;
}

int synth_command(const std::string& out_path, double seconds, std::uint64_t seed) {
  app::SynthOptions options;
  options.seconds = seconds;
  options.seed = seed;
  std::ofstream out(out_path, std::ios::trunc);
  app::write_synthetic_trace(out, options);
  if (!out) throw ParseError("cannot write " + out_path);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"affectd: multimodal affect-sensing daemon"};
  cli.require_subcommand(1);

  auto* run = cli.add_subcommand("run", "Run a live or replayed session");
  std::string config_path, replay;
  bool consent = false, print_metrics = false;
  run->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_flag("--consent", consent, "Acknowledge consent for live capture");
  run->add_option("--replay", replay, "Replay this trace instead of the configured source")->check(CLI::ExistingFile);
  run->add_flag("--print-metrics", print_metrics, "Print every metrics row to stdout");

  auto* train = cli.add_subcommand("train-sentiment", "Train the email sentiment model");
  std::string corpus, model_out, stoplist;
  std::size_t select = 5000, cap = 1200;
  std::vector<double> grid;
  int folds = 5;
  std::uint64_t seed = 0;
  train->add_option("--corpus", corpus, "NDJSON corpus of {text, label}")->required()->check(CLI::ExistingFile);
  train->add_option("--out", model_out, "Model JSON to write")->required();
  train->add_option("--select", select, "n-grams kept by mutual information")->capture_default_str();
  train->add_option("--cap", cap, "n-grams kept after the stoplist")->capture_default_str();
  train->add_option("--stoplist", stoplist, "File of n-grams to prune, one per line")->check(CLI::ExistingFile);
  train->add_option("--lambda", grid, "L2 strengths to cross-validate (repeatable)");
  train->add_option("--folds", folds, "Cross-validation folds")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--seed", seed, "Fold shuffle seed")->capture_default_str();

  auto* synth = cli.add_subcommand("synth-trace", "Write a synthetic session trace");
  std::string trace_out;
  double seconds = 60.0;
  std::uint64_t synth_seed = 1;
  synth->add_option("--out", trace_out, "Trace file to write")->required();
  synth->add_option("--seconds", seconds, "Session length")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Noise seed")->capture_default_str();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*run) return run_command(config_path, consent, replay, print_metrics);
    if (*train) return train_command(corpus, model_out, select, cap, stoplist, grid, folds, seed);
    return synth_command(trace_out, seconds, synth_seed);
  } catch (const ComponentFailure& e) {
    std::cerr << "affectd: " << e.what() << "\n";
    return kComponentFailure;
  } catch (const app::ConsentRequired& e) {
    std::cerr << "affectd: " << e.what() << "\n";
    return kNoConsent;
  } catch (const Error& e) {
    std::cerr << "affectd: " << e.code() << ": " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "affectd: " << e.what() << "\n";
    return kBadInput;
  }
}
