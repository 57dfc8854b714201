#include "akira/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <memory>
#include <thread>

#include "akira/detection.hpp"
#include "akira/error.hpp"
#include "akira/text.hpp"
#include "akira/trace.hpp"

namespace akira {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Resources {
  ChannelMap channels;
  KeywordRules rules;
  PromptLibrary prompts;
};

Resources load_resources(const RunConfig& c) {
  return Resources{c.channel_map.empty() ? ChannelMap::builtin() : ChannelMap::load(c.channel_map.string()),
                   c.keyword_rules.empty() ? KeywordRules::builtin() : KeywordRules::load(c.keyword_rules),
                   c.prompt_dir.empty() ? PromptLibrary::builtin() : PromptLibrary::with_overrides(c.prompt_dir)};
}

fs::path sidecar_for(const fs::path& file) {
  return file.parent_path() / (file.stem().string() + std::string(kMockSuffix));
}

json load_script(const fs::path& file) {
  const auto path = sidecar_for(file);
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "missing mock script " + path.string());
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

std::unique_ptr<GenerationProvider> make_provider(const BackendChoice& b, const json& script) {
  if (b.provider == "http") {
    auto cfg = HttpProviderConfig::from_env();
    if (!cfg) throw Error(ErrorKind::InvalidArgument, "AKIRA_PROVIDER_URL is not set");
    return std::make_unique<HttpProvider>(*cfg);
  }
  return std::make_unique<ScriptedProvider>(ScriptedProvider::from_json(script.value("provider", json::object())));
}

std::unique_ptr<Detector> make_detector(const BackendChoice& b, const json& script, const RunConfig& c,
                                        const KeywordRules& rules) {
  if (b.detector == "miri") {
    MiriOptions opts;
    opts.timeout = c.detector_timeout;
    return std::make_unique<MiriDetector>(opts, rules);
  }
  if (!script.contains("detector")) throw Error(ErrorKind::InvalidArgument, "mock script has no detector section");
  return std::make_unique<ScriptedDetector>(ScriptedDetector::from_json(script.at("detector"), rules));
}

std::unique_ptr<TestRunner> make_runner(const BackendChoice& b, const json& script, const RunConfig& c) {
  if (b.runner == "cargo") {
    CargoRunnerOptions opts;
    opts.timeout = c.runner_timeout;
    return std::make_unique<CargoTestRunner>(opts);
  }
  if (!script.contains("runner")) return std::make_unique<ScriptedRunner>(ScriptedRunner::always(true));
  return std::make_unique<ScriptedRunner>(ScriptedRunner::from_json(script.at("runner")));
}

std::vector<SampleResult> run_samples(const std::vector<fs::path>& files, const HarnessOptions& options,
                                      const KnowledgeBase& base) {
  std::vector<SampleResult> results(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) results[i] = repair_file(files[i], options, base);
  };
  const std::size_t width = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(files.size(), 1));
  if (width == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < width; ++i) pool.emplace_back(worker);
  }
  return results;
}

void write_reports(const CorpusResult& result, const fs::path& dir) {
  if (dir.empty()) return;
  write_file(dir / "report.json", dump_json(report_json(result)));
  write_file(dir / "timing.json", dump_json(timing_json(result)));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string slug(const std::string& name) {
  std::string s = name;
  std::ranges::replace(s, '/', '-');
  return s;
}

}  // namespace

void BackendChoice::validate() const {
  if (provider != "mock" && provider != "http") throw Error(ErrorKind::InvalidArgument, "unknown provider " + provider);
  if (detector != "mock" && detector != "miri") throw Error(ErrorKind::InvalidArgument, "unknown detector " + detector);
  if (runner != "mock" && runner != "cargo") throw Error(ErrorKind::InvalidArgument, "unknown runner " + runner);
  if (provider == "http" && !HttpProviderConfig::from_env())
    throw Error(ErrorKind::InvalidArgument, "--provider http needs AKIRA_PROVIDER_URL");
}

std::vector<fs::path> list_samples(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with(".rs") && !name.ends_with(kRepairedSuffix))
      out.push_back(entry.path());
  }
  std::ranges::sort(out);
  return out;
}

SampleResult repair_file(const fs::path& file, const HarnessOptions& options, const KnowledgeBase& kb) {
  const auto start = std::chrono::steady_clock::now();
  SampleResult r;
  r.name = file.filename().string();
  try {
    std::string code = read_file(file);
    const Resources res = load_resources(options.config);
    const json script = options.backends.needs_script() ? load_script(file) : json::object();

    auto provider = make_provider(options.backends, script);
    auto detector = make_detector(options.backends, script, options.config, res.rules);
    auto runner = make_runner(options.backends, script, options.config);
    std::vector<ProviderCallRecord> log;
    provider->set_observer([&log](const ProviderCallRecord& rec) { log.push_back(rec); });

    TestGenOptions tg;
    tg.variant_count = options.config.variant_count;
    tg.parallelism = options.config.test_parallelism;
    tg.temperature = options.config.session.temperature;
    tg.seed = options.config.session.rng_seed;
    TestGenAgent validator(provider.get(), *runner, tg, res.prompts);

    auto session_kb = std::make_shared<KnowledgeBase>(kb);
    const std::size_t known = session_kb->size();
    auto session = init_session(std::move(code), options.config.session, session_kb);
    const Backends backends{*detector, *provider, validator, res.prompts, res.channels};
    r.outcome = run(session, backends);

    r.trace = trace_document(session, log);
    const auto all = session_kb->entries();
    r.learned.assign(all.begin() + static_cast<std::ptrdiff_t>(known), all.end());
    if (r.outcome.terminal == StateId::QF) r.repaired_code = session.snapshots.get(r.outcome.final_snapshot).code;
  } catch (const Error& e) {
    r.error = e.what();
    r.outcome = Outcome{};
    r.outcome.reason = e.what();
    r.trace = nullptr;
  }
  r.outcome.metrics.wall_time =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

  try {
    if (!options.trace_dir.empty() && !r.trace.is_null())
      write_file(options.trace_dir / (file.stem().string() + ".trace.json"), dump_json(r.trace));
    if (options.write_repaired && r.repaired_code)
      write_file(file.parent_path() / (file.stem().string() + std::string(kRepairedSuffix)), *r.repaired_code);
  } catch (const Error& e) {
    if (r.error.empty()) r.error = e.what();
  }
  return r;
}

CorpusResult aggregate(std::vector<SampleResult> samples) {
  std::ranges::sort(samples, {}, &SampleResult::name);
  CorpusResult c;
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) return c;
  std::size_t pass = 0, exec = 0, ok = 0, invocations = 0;
  double hallucination = 0.0;
  std::chrono::milliseconds wall{0};
  for (const auto& s : samples) {
    pass += s.passed();
    exec += s.exec();
    ok += s.succeeded();
    invocations += s.outcome.metrics.agent_invocations;
    hallucination += s.outcome.metrics.hallucination_score;
    c.rollbacks += s.outcome.metrics.rollbacks;
    wall += s.outcome.metrics.wall_time;
  }
  c.pass_rate = pass / n;
  c.exec_rate = exec / n;
  c.success_rate = ok / n;
  c.mean_agent_invocations = invocations / n;
  c.mean_hallucination_score = hallucination / n;
  c.mean_wall_time = wall / static_cast<long long>(samples.size());
  c.samples = std::move(samples);
  return c;
}

CorpusResult repair_corpus(const fs::path& dir, const HarnessOptions& options) {
  const auto files = list_samples(dir);
  if (files.empty()) throw Error(ErrorKind::InvalidArgument, "no samples in " + dir.string());
  const auto& kb_path = options.config.kb_path;
  KnowledgeBase base = kb_path.empty() ? KnowledgeBase{} : KnowledgeBase::load(kb_path);
  const std::size_t known = base.size();

  auto result = aggregate(run_samples(files, options, base));
  for (const auto& s : result.samples)
    for (const auto& e : s.learned) base.record(e);
  if (!kb_path.empty()) base.append_to(kb_path, known);
  write_reports(result, options.trace_dir);
  return result;
}

json report_json(const CorpusResult& r) {
  json samples = json::array();
  for (const auto& s : r.samples) samples.push_back({{"name", s.name}, {"error", s.error}, {"outcome", to_json(s.outcome)}});
  return json{{"schema", kReportSchema},
              {"summary",
               {{"samples", r.samples.size()},
                {"pass_rate", r.pass_rate},
                {"exec_rate", r.exec_rate},
                {"success_rate", r.success_rate},
                {"mean_agent_invocations", r.mean_agent_invocations},
                {"mean_hallucination_score", r.mean_hallucination_score},
                {"rollbacks", r.rollbacks}}},
              {"samples", std::move(samples)}};
}

CorpusResult corpus_from_report(const json& j) {
  try {
    if (j.at("schema") != kReportSchema) throw Error(ErrorKind::ParseError, "not an akira report");
    std::vector<SampleResult> samples;
    for (const auto& js : j.at("samples")) {
      SampleResult s;
      s.name = js.at("name").get<std::string>();
      s.error = js.at("error").get<std::string>();
      s.outcome = outcome_from_json(js.at("outcome"));
      s.trace = nullptr;
      samples.push_back(std::move(s));
    }
    return aggregate(std::move(samples));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("report: ") + e.what());
  }
}

json timing_json(const CorpusResult& r) {
  json samples = json::object();
  for (const auto& s : r.samples) samples[s.name] = s.outcome.metrics.wall_time.count();
  return json{{"unit", "ms"}, {"mean", r.mean_wall_time.count()}, {"samples", std::move(samples)}};
}

std::string format_report(const CorpusResult& r) {
  std::string out = pad("sample", 28) + pad("state", 7) + pad("ub", 5) + pad("exec", 6) + pad("agents", 8) +
                    pad("rollbk", 8) + pad("halluc", 8) + pad("ms", 8) + "reason\n";
  for (const auto& s : r.samples) {
    const auto& o = s.outcome;
    out += pad(s.name, 28) + pad(std::string(to_string(o.terminal)), 7) + pad(std::to_string(o.final_ub_count), 5) +
           pad(o.exec_accepted ? "yes" : "no", 6) + pad(std::to_string(o.metrics.agent_invocations), 8) +
           pad(std::to_string(o.metrics.rollbacks), 8) + pad(fmt("%.3f", o.metrics.hallucination_score), 8) +
           pad(std::to_string(o.metrics.wall_time.count()), 8) + (s.error.empty() ? o.reason : "error: " + s.error) +
           "\n";
  }
  out += "pass rate " + fmt("%.1f%%", 100 * r.pass_rate) + ", exec rate " + fmt("%.1f%%", 100 * r.exec_rate) +
         ", mean agent invocations " + fmt("%.2f", r.mean_agent_invocations) + ", mean hallucination " +
         fmt("%.3f", r.mean_hallucination_score) + ", mean time " + std::to_string(r.mean_wall_time.count()) + " ms\n";
  return out;
}

std::vector<PipelineSpec> default_pipelines() {
  return {{"low-temp/no-rollback", kLowTemperature, false},
          {"high-temp/no-rollback", kHighTemperature, false},
          {"high-temp/rollback", kHighTemperature, true}};
}

ExperimentResult run_experiment(const fs::path& dir, const HarnessOptions& options,
                                const std::vector<PipelineSpec>& pipelines) {
  const auto files = list_samples(dir);
  if (files.empty()) throw Error(ErrorKind::InvalidArgument, "no samples in " + dir.string());
  const auto& kb_path = options.config.kb_path;
  const KnowledgeBase base = kb_path.empty() ? KnowledgeBase{} : KnowledgeBase::load(kb_path);

  ExperimentResult out;
  for (const auto& spec : pipelines) {
    HarnessOptions opts = options;
    opts.config.session.temperature = spec.temperature;
    opts.config.session.rollback_enabled = spec.rollback;
    opts.write_repaired = false;
    if (!options.trace_dir.empty()) opts.trace_dir = options.trace_dir / slug(spec.name);
    auto corpus = aggregate(run_samples(files, opts, base));
    write_reports(corpus, opts.trace_dir);
    out.pipelines.push_back({spec, std::move(corpus)});
  }
  if (!options.trace_dir.empty()) write_file(options.trace_dir / "experiment.json", dump_json(experiment_json(out)));
  return out;
}

json experiment_json(const ExperimentResult& r) {
  json pipelines = json::array();
  for (const auto& p : r.pipelines) {
    pipelines.push_back({{"name", p.spec.name},
                         {"temperature", p.spec.temperature},
                         {"rollback", p.spec.rollback},
                         {"samples", p.corpus.samples.size()},
                         {"success_rate", p.corpus.success_rate},
                         {"pass_rate", p.corpus.pass_rate},
                         {"exec_rate", p.corpus.exec_rate},
                         {"mean_hallucination_score", p.corpus.mean_hallucination_score},
                         {"mean_agent_invocations", p.corpus.mean_agent_invocations},
                         {"rollbacks", p.corpus.rollbacks}});
  }
  return json{{"schema", "akira-experiment/1"}, {"pipelines", std::move(pipelines)}};
}

std::string format_experiment(const ExperimentResult& r) {
  std::string out = pad("pipeline", 24) + pad("temp", 6) + pad("success", 9) + pad("halluc", 8) + pad("agents", 8) +
                    "rollbacks\n";
  for (const auto& p : r.pipelines) {
    out += pad(p.spec.name, 24) + pad(fmt("%.1f", p.spec.temperature), 6) +
           pad(fmt("%.1f%%", 100 * p.corpus.success_rate), 9) + pad(fmt("%.3f", p.corpus.mean_hallucination_score), 8) +
           pad(fmt("%.2f", p.corpus.mean_agent_invocations), 8) + std::to_string(p.corpus.rollbacks) + "\n";
  }
  return out;
}

}  // namespace akira
