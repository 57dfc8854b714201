#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "akira/config.hpp"
#include "akira/error.hpp"
#include "akira/harness.hpp"
#include "akira/text.hpp"
#include "akira/trace.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRepairFailed = 1;
constexpr int kExitUsage = 2;

struct Args {
  std::string target;
  std::string config_path;
  std::optional<std::size_t> max_transitions;
  std::optional<double> temperature;
  std::optional<std::uint64_t> seed;
  std::string kb_path;
  bool no_rollback = false;
  std::size_t parallel = 1;
  std::string trace_dir = "akira-out";
  std::string experiment;
  akira::BackendChoice backends;
};

akira::HarnessOptions build_options(const Args& a) {
  akira::HarnessOptions o;
  if (!a.config_path.empty()) o.config = akira::load_config(a.config_path);
  auto& s = o.config.session;
  if (a.max_transitions) s.max_transitions = *a.max_transitions;
  if (a.temperature) s.temperature = *a.temperature;
  if (a.seed) s.rng_seed = *a.seed;
  if (a.no_rollback) s.rollback_enabled = false;
  if (!a.kb_path.empty()) o.config.kb_path = a.kb_path;
  s.validate();
  a.backends.validate();
  o.backends = a.backends;
  o.parallelism = a.parallel;
  o.trace_dir = a.trace_dir;
  return o;
}

int repair(const Args& a) {
  const auto options = build_options(a);
  const fs::path target = a.target;

  if (!a.experiment.empty()) {
    if (a.experiment != "pipelines") throw akira::Error(akira::ErrorKind::InvalidArgument, "unknown experiment " + a.experiment);
    const auto result = akira::run_experiment(target, options);
    std::cout << akira::format_experiment(result);
    return kExitOk;
  }

  if (fs::is_directory(target)) {
    const auto result = akira::repair_corpus(target, options);
    std::cout << akira::format_report(result);
    return kExitOk;
  }

  if (!fs::is_regular_file(target)) throw akira::Error(akira::ErrorKind::Io, "cannot read " + target.string());
  akira::KnowledgeBase kb = options.config.kb_path.empty() ? akira::KnowledgeBase{}
                                                           : akira::KnowledgeBase::load(options.config.kb_path);
  const auto result = akira::repair_file(target, options, kb);
  if (!result.error.empty()) throw akira::Error(akira::ErrorKind::Io, result.error);
  if (!options.config.kb_path.empty()) {
    for (const auto& e : result.learned) kb.record(e);
    kb.append_to(options.config.kb_path, kb.size() - result.learned.size());
  }
  const auto& o = result.outcome;
  std::cout << result.name << ": " << akira::to_string(o.terminal) << " after " << result.trace["transitions"].size()
            << " transitions (" << o.metrics.agent_invocations << " agent invocations, " << o.metrics.rollbacks
            << " rollbacks), " << o.reason << "\n";
  if (o.terminal == akira::StateId::QF) return kExitOk;
  std::cerr << "repair failed: " << o.reason << "\n";
  return kExitRepairFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"akira: FSM-guided repair of undefined behavior in Rust programs"};
  app.require_subcommand(1);
  Args a;

  auto* rep = app.add_subcommand("repair", "repair one file or every sample in a directory");
  rep->add_option("target", a.target, "Rust source file or corpus directory")->required();
  rep->add_option("--config", a.config_path, "key=value configuration file");
  rep->add_option("--provider", a.backends.provider, "mock | http")->check(CLI::IsMember({"mock", "http"}));
  rep->add_option("--detector", a.backends.detector, "mock | miri")->check(CLI::IsMember({"mock", "miri"}));
  rep->add_option("--runner", a.backends.runner, "mock | cargo")->check(CLI::IsMember({"mock", "cargo"}));
  rep->add_option("--max-transitions", a.max_transitions, "transition limit per session");
  rep->add_option("--temperature", a.temperature, "sampling temperature in [0,2]");
  rep->add_option("--seed", a.seed, "session rng seed");
  rep->add_option("--kb", a.kb_path, "knowledge base file (JSON lines)");
  rep->add_flag("--no-rollback", a.no_rollback, "disable adaptive rollback");
  rep->add_option("--parallel", a.parallel, "corpus worker count")->check(CLI::PositiveNumber);
  rep->add_option("--trace-dir", a.trace_dir, "where traces and reports go")->capture_default_str();
  rep->add_option("--experiment", a.experiment, "run a comparison experiment (pipelines)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return repair(a);
  } catch (const akira::Error& e) {
    std::cerr << "akira: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "akira: " << e.what() << "\n";
    return kExitUsage;
  }
}
