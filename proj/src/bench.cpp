#include "nstp/bench.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "nstp/error.hpp"
#include "nstp/pipeline.hpp"

namespace nstp {

namespace fs = std::filesystem;
using Json = nlohmann::json;

const std::vector<std::string>& bench_methods() {
  static const std::vector<std::string> methods = {"symbolic-llm", "symbolic", "mcts", "mcts-none",
                                                   "auto",         "llm-symbolic", "llm"};
  return methods;
}

bool method_samples(const std::string& method) {
  return method == "mcts" || method == "mcts-none" || method == "auto" || method == "llm";
}

namespace {

std::vector<int> read_n(const Json& j) {
  std::vector<int> out;
  if (j.is_number_integer()) {
    out.push_back(j.get<int>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<int>());
  } else if (j.is_object()) {
    const int lo = j.at("min").get<int>();
    const int hi = j.at("max").get<int>();
    for (int n = lo; n <= hi; ++n) out.push_back(n);
  } else {
    throw ConfigError("\"n\" must be an integer, a list or {\"min\", \"max\"}");
  }
  if (out.empty()) throw ConfigError("\"n\" selects no sizes");
  for (int n : out) {
    if (n < 1) throw ConfigError("\"n\" values must be >= 1");
  }
  return out;
}

BenchBudgets read_budgets(const Json& j) {
  BenchBudgets b;
  if (!j.is_object()) throw ConfigError("\"budgets\" must be an object");
  static const std::vector<std::string> known = {"symbolic_expansions", "symbolic_ms",
                                                 "oracle_expansions",   "oracle_ms",
                                                 "max_iterations",      "retry",
                                                 "probe_ms"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown budget \"" + key + "\"");
    }
    const std::int64_t floor = key == "retry" ? 0 : 1;
    if (!value.is_number_integer() || value.get<std::int64_t>() < floor) {
      throw ConfigError("budget \"" + key + "\" must be an integer >= " + std::to_string(floor));
    }
  }
  auto ms = [&](const char* key, std::chrono::milliseconds fallback) {
    return j.contains(key) ? std::chrono::milliseconds(j[key].get<std::int64_t>()) : fallback;
  };
  b.symbolic_expansions = j.value("symbolic_expansions", b.symbolic_expansions);
  b.symbolic_wall_clock = ms("symbolic_ms", b.symbolic_wall_clock);
  b.oracle_expansions = j.value("oracle_expansions", b.oracle_expansions);
  b.oracle_wall_clock = ms("oracle_ms", b.oracle_wall_clock);
  b.max_iterations = j.value("max_iterations", b.max_iterations);
  b.retry_budget = j.value("retry", b.retry_budget);
  b.auto_probe = ms("probe_ms", b.auto_probe);
  return b;
}

BenchRun read_run(const Json& j) {
  if (!j.is_object()) throw ConfigError("each run must be an object");
  static const std::vector<std::string> known = {"domain", "n",     "instances", "seed",
                                                 "methods", "n_s",  "noise",     "budgets"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown run key \"" + key + "\"");
    }
  }
  BenchRun r;
  r.domain = parse_domain_kind(j.at("domain").get<std::string>());
  r.n_values = read_n(j.at("n"));
  r.instances = j.value("instances", 1);
  if (r.instances < 0) throw ConfigError("\"instances\" must be >= 0");
  r.seed = j.value("seed", std::uint64_t{0});
  r.methods = j.at("methods").get<std::vector<std::string>>();
  if (r.methods.empty()) throw ConfigError("\"methods\" must not be empty");
  for (const auto& m : r.methods) {
    const auto& all = bench_methods();
    if (std::find(all.begin(), all.end(), m) == all.end()) {
      throw ConfigError("unknown method \"" + m + "\"");
    }
  }
  if (j.contains("n_s")) {
    const Json& ns = j["n_s"];
    r.n_s_values = ns.is_array() ? ns.get<std::vector<std::size_t>>()
                                 : std::vector<std::size_t>{ns.get<std::size_t>()};
  }
  if (r.n_s_values.empty()) throw ConfigError("\"n_s\" must not be empty");
  for (auto k : r.n_s_values) {
    if (k < 1) throw ConfigError("\"n_s\" values must be >= 1");
  }
  r.noise = j.value("noise", r.noise);
  if (!(r.noise >= 0.0 && r.noise <= 1.0)) throw ConfigError("\"noise\" must lie in [0, 1]");
  if (j.contains("budgets")) r.budgets = read_budgets(j["budgets"]);
  return r;
}

}  // namespace

BenchSuite parse_suite(const Json& j) {
  try {
    if (!j.is_object()) throw ConfigError("suite must be a JSON object");
    BenchSuite s;
    for (const auto& [key, value] : j.items()) {
      if (key != "runs" && key != "workers" && key != "schema") {
        throw ConfigError("unknown suite key \"" + key + "\"");
      }
    }
    if (j.contains("schema") && j["schema"] != 1) throw ConfigError("unsupported suite schema");
    s.workers = j.value("workers", 1u);
    if (s.workers < 1) throw ConfigError("\"workers\" must be >= 1");
    for (const auto& run : j.at("runs")) s.runs.push_back(read_run(run));
    return s;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("suite: ") + e.what());
  } catch (const UnknownDomainKind& e) {
    throw ConfigError(std::string("suite: ") + e.what());
  }
}

BenchSuite load_suite(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_suite(j);
}

std::vector<BenchJob> expand_suite(const BenchSuite& suite) {
  std::vector<BenchJob> jobs;
  for (std::size_t r = 0; r < suite.runs.size(); ++r) {
    const BenchRun& run = suite.runs[r];
    for (int n : run.n_values) {
      for (int i = 0; i < run.instances; ++i) {
        for (const auto& method : run.methods) {
          const std::vector<std::size_t> ns =
              method_samples(method) ? run.n_s_values : std::vector<std::size_t>{0};
          for (std::size_t k : ns) {
            jobs.push_back(BenchJob{r, run.domain, n, run.seed + static_cast<std::uint64_t>(i),
                                    method, k});
          }
        }
      }
    }
  }
  return jobs;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' || c == '\r' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::string csv_line(const BenchRow& row, bool mask_timing) {
  std::string line = row.domain + "," + std::to_string(row.n) + "," + std::to_string(row.seed) +
                     "," + row.method + ",";
  if (row.n_s > 0) line += std::to_string(row.n_s);
  line += ",";
  line += row.success ? "1" : "0";
  line += ",";
  if (!mask_timing) line += std::to_string(row.planning_ms);
  line += "," + std::to_string(row.plan_length) + "," + std::to_string(row.subgoals) + "," +
          csv_field(row.notes);
  return line;
}

BenchRow run_job(const BenchSuite& suite, const BenchJob& job, const BenchOptions& options) {
  const BenchRun& run = suite.runs.at(job.run);
  BenchRow row;
  row.domain = to_string(job.domain);
  row.n = job.n;
  row.seed = job.seed;
  row.method = job.method;
  row.n_s = job.n_s;

  const Instance inst = generate(GenSpec{job.domain, job.n, job.seed, false});
  const std::string kind = to_string(job.domain);

  PipelineConfig config;
  config.seed = job.seed;
  config.n_s = std::max<std::size_t>(job.n_s, 1);
  config.mcts.max_iterations = run.budgets.max_iterations;
  config.symbolic = SearchConfig{SearchMode::kGbfsHadd, run.budgets.symbolic_expansions,
                                 run.budgets.symbolic_wall_clock};
  config.retry_budget = run.budgets.retry_budget;
  config.auto_probe_budget = run.budgets.auto_probe;

  std::unique_ptr<Decomposer> decomposer;
  std::unique_ptr<PlanSampler> sampler;
  const bool uses_llm = job.method == "llm" || job.method == "llm-symbolic";
  std::shared_ptr<LlmGateway> gateway;
  if (uses_llm) {
    if (!options.llm_transport) throw ConfigError("method " + job.method + " needs --cassette or an endpoint");
    gateway = std::make_shared<LlmGateway>(options.llm, options.llm_transport);
    decomposer = llm_decomposer(gateway, load_prompt_bundle(options.prompts_dir / "decompose.prompt"));
  } else if (job.method == "symbolic" || job.method == "mcts-none") {
    decomposer = scripted_decomposer("none");
  } else {
    decomposer = scripted_decomposer(kind);
  }

  if (job.method == "symbolic-llm" || job.method == "symbolic" || job.method == "llm-symbolic") {
    config.strategy = Strategy::kSymbolic;
  } else if (job.method == "auto") {
    config.strategy = Strategy::kAuto;
  } else {
    config.strategy = Strategy::kMcts;
  }

  if (job.method == "llm") {
    sampler = llm_plan_sampler(gateway, load_prompt_bundle(options.prompts_dir / "plan.prompt"));
  } else if (method_samples(job.method)) {
    OracleOptions oracle;
    oracle.search.max_expansions = run.budgets.oracle_expansions;
    oracle.search.wall_clock_budget = run.budgets.oracle_wall_clock;
    sampler = perturbed_oracle_sampler(NoiseModel{run.noise, run.noise, run.noise}, oracle);
  }

  const auto start = std::chrono::steady_clock::now();
  auto stamp = [&] {
    row.planning_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  };
  try {
    const PipelineReport report =
        plan_task(inst.domain, inst.problem, config, *decomposer, sampler.get());
    stamp();
    row.success = report.success;
    row.plan_length = report.plan ? report.plan->size() : 0;
    row.subgoals = report.subgoal_count;
  } catch (const PipelineError& e) {
    stamp();
    row.subgoals = e.report().subgoal_count;
    row.notes = e.kind() + ": " + e.what();
  } catch (const Error& e) {
    stamp();
    row.notes = e.kind() + ": " + e.what();
  }
  return row;
}

namespace {

struct PoolState {
  BenchSuite suite;
  BenchOptions options;
  std::vector<BenchJob> jobs;
  std::mutex mutex;
  std::condition_variable cv;
  std::size_t next = 0;
  std::vector<std::optional<BenchRow>> rows;
  std::size_t running = 0;
  bool cancelled = false;
};

void worker(std::shared_ptr<PoolState> st) {
  for (;;) {
    std::size_t index;
    {
      std::lock_guard<std::mutex> lock(st->mutex);
      if (st->cancelled || st->next >= st->jobs.size()) {
        --st->running;
        st->cv.notify_all();
        return;
      }
      index = st->next++;
    }
    BenchRow row;
    try {
      row = run_job(st->suite, st->jobs[index], st->options);
    } catch (const std::exception& e) {
      const BenchJob& job = st->jobs[index];
      row.domain = to_string(job.domain);
      row.n = job.n;
      row.seed = job.seed;
      row.method = job.method;
      row.n_s = job.n_s;
      const auto* err = dynamic_cast<const Error*>(&e);
      row.notes = (err ? err->kind() : std::string("error")) + ": " + e.what();
    }
    std::lock_guard<std::mutex> lock(st->mutex);
    st->rows[index] = std::move(row);
    st->cv.notify_all();
  }
}

}  // namespace

BenchSummary run_bench(const BenchSuite& suite, std::ostream& out, const BenchOptions& options,
                       const std::atomic<bool>* stop) {
  auto st = std::make_shared<PoolState>();
  st->suite = suite;
  st->options = options;
  st->jobs = expand_suite(suite);
  st->rows.resize(st->jobs.size());

  BenchSummary summary;
  summary.jobs = st->jobs.size();
  out << kCsvSchemaLine << "\n" << kCsvHeader << "\n";
  out.flush();

  const unsigned width = std::max(1u, options.workers ? options.workers : suite.workers);
  const std::size_t threads = std::min<std::size_t>(width, st->jobs.size());
  st->running = threads;
  for (std::size_t t = 0; t < threads; ++t) std::thread(worker, st).detach();

  auto emit = [&](const BenchRow& row) {
    out << csv_line(row, options.mask_timing) << "\n";
    out.flush();
    ++summary.written;
    if (row.success) ++summary.solved;
  };

  std::unique_lock<std::mutex> lock(st->mutex);
  std::size_t written = 0;
  for (;;) {
    while (written < st->rows.size() && st->rows[written]) emit(*st->rows[written++]);
    if (written == st->rows.size()) break;
    if (stop && stop->load()) {
      st->cancelled = true;
      summary.interrupted = true;
      for (std::size_t i = written; i < st->rows.size(); ++i) {
        if (st->rows[i]) emit(*st->rows[i]);
      }
      return summary;
    }
    st->cv.wait_for(lock, std::chrono::milliseconds(100));
  }
  // Every row is in; let the workers leave before the state goes away.
  st->cv.wait(lock, [&] { return st->running == 0; });
  return summary;
}

}  // namespace nstp
