#include "nstp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "nstp/error.hpp"
#include "nstp/random.hpp"

namespace nstp {

namespace fs = std::filesystem;

SubProblem make_subproblem(std::shared_ptr<const DomainDef> domain, ProblemDef problem) {
  SubProblem sub;
  sub.grounding = std::make_shared<const Grounding>(std::move(domain), problem);
  sub.problem = std::move(problem);
  return sub;
}

Plan WeightedPlan::plan() const {
  Plan p;
  for (const auto& s : steps) p.steps.push_back(s.action);
  return p;
}

void NoiseModel::check() const {
  for (double p : {drop_step, swap_adjacent, substitute_action}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise probabilities must lie in [0, 1]");
  }
}

namespace {

void check_request(const SampleRequest& req) {
  if (req.sub == nullptr || !req.sub->grounding) throw ConfigError("sample request without sub-problem");
  if (req.n_s < 1) throw ConfigError("n_s must be >= 1");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<double> read_weights(const fs::path& path) {
  std::vector<double> weights;
  std::istringstream in(slurp(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    std::size_t used = 0;
    double w = 0.0;
    try {
      w = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(w)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a finite number");
    }
    weights.push_back(w);
  }
  return weights;
}

class ReplaySampler final : public PlanSampler {
 public:
  explicit ReplaySampler(fs::path dir) : dir_(std::move(dir)) {}

  std::string name() const override { return "replay"; }

  std::vector<WeightedPlan> sample(const SampleRequest& req) override {
    check_request(req);
    fs::path dir = dir_;
    const fs::path nested = dir_ / std::to_string(req.sub->index);
    std::error_code ec;
    if (fs::is_directory(nested, ec)) dir = nested;
    if (!fs::is_directory(dir, ec)) {
      throw InsufficientPlans("plan directory " + dir.string() + " does not exist");
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() == ".weights") continue;
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
      return a.filename().string() < b.filename().string();
    });
    if (files.size() < req.n_s) {
      throw InsufficientPlans("need " + std::to_string(req.n_s) + " plan files in " +
                              dir.string() + ", found " + std::to_string(files.size()));
    }

    std::vector<WeightedPlan> out;
    for (std::size_t i = 0; i < req.n_s; ++i) {
      Plan plan;
      try {
        plan = parse_plan_file(slurp(files[i]));
      } catch (const SyntaxError& e) {
        throw FormatError(files[i].string() + ": " + e.what());
      }
      fs::path sidecar = files[i];
      sidecar.replace_extension(".weights");
      std::vector<double> weights(plan.size(), 0.0);
      if (fs::exists(sidecar, ec)) {
        weights = read_weights(sidecar);
        if (weights.size() != plan.size()) {
          throw FormatError(sidecar.string() + ": " + std::to_string(weights.size()) +
                            " weights for " + std::to_string(plan.size()) + " steps");
        }
      }
      WeightedPlan wp;
      wp.sample_id = i;
      for (std::size_t k = 0; k < plan.size(); ++k) {
        wp.steps.push_back(WeightedStep{plan.steps[k], weights[k]});
      }
      out.push_back(std::move(wp));
    }
    return out;
  }

 private:
  fs::path dir_;
};

class PerturbedOracleSampler final : public PlanSampler {
 public:
  PerturbedOracleSampler(NoiseModel noise, OracleOptions options)
      : noise_(noise), options_(options) {
    noise_.check();
    options_.search.check();
  }

  std::string name() const override { return "oracle"; }

  std::vector<WeightedPlan> sample(const SampleRequest& req) override {
    check_request(req);
    const Plan reference = solve_cached(*req.sub);
    const auto& actions = req.sub->grounding->actions();

    std::vector<WeightedPlan> out;
    for (std::size_t k = 0; k < req.n_s; ++k) {
      Rng rng(derive_seed(req.seed, k));
      std::vector<std::string> steps = reference.steps;
      std::vector<bool> mutated(steps.size(), false);

      if (rng.chance(noise_.drop_step) && !steps.empty()) {
        const std::size_t i = rng.below(steps.size());
        steps.erase(steps.begin() + static_cast<std::ptrdiff_t>(i));
        mutated.erase(mutated.begin() + static_cast<std::ptrdiff_t>(i));
        if (i < mutated.size()) mutated[i] = true;
      }
      if (rng.chance(noise_.swap_adjacent) && steps.size() >= 2) {
        const std::size_t i = rng.below(steps.size() - 1);
        std::swap(steps[i], steps[i + 1]);
        mutated[i] = mutated[i + 1] = true;
      }
      if (rng.chance(noise_.substitute_action) && !steps.empty() && actions.size() >= 2) {
        const std::size_t i = rng.below(steps.size());
        std::string replacement = steps[i];
        while (replacement == steps[i]) replacement = actions[rng.below(actions.size())].display_form();
        steps[i] = std::move(replacement);
        mutated[i] = true;
      }

      WeightedPlan wp;
      wp.sample_id = k;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        wp.steps.push_back(
            WeightedStep{steps[i], -options_.epsilon * (1.0 + (mutated[i] ? 1.0 : 0.0))});
      }
      out.push_back(std::move(wp));
    }
    return out;
  }

 private:
  Plan solve_cached(const SubProblem& sub) {
    const std::string key = state_key(sub.problem.init).str() + "|" + serialize_goal(sub.problem.goal);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const SearchResult r = solve(*sub.grounding, sub.problem.init, sub.problem.goal, options_.search);
    if (!r.plan) {
      throw OracleUnsolvable("oracle search ended " + to_string(r.outcome) + " after " +
                             std::to_string(r.expansions) + " expansions");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(key, *r.plan).first->second;
  }

  NoiseModel noise_;
  OracleOptions options_;
  std::mutex mutex_;
  std::map<std::string, Plan> cache_;
};

}  // namespace

std::unique_ptr<PlanSampler> replay_sampler(fs::path dir) {
  return std::make_unique<ReplaySampler>(std::move(dir));
}

std::unique_ptr<PlanSampler> perturbed_oracle_sampler(NoiseModel noise, OracleOptions options) {
  return std::make_unique<PerturbedOracleSampler>(noise, options);
}

}  // namespace nstp
