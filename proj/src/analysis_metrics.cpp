#include <algorithm>
#include <numeric>

#include "revgen/error.hpp"
#include "revgen/metrics.hpp"
#include "revgen/rng.hpp"

namespace revgen {

std::vector<std::vector<std::size_t>> all_derangements(std::size_t m) {
  if (m > 9) throw InvalidInput("derangement enumeration is limited to m <= 9");
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    bool fixed = false;
    for (std::size_t i = 0; i < m && !fixed; ++i) fixed = perm[i] == i;
    if (!fixed && m > 0) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<std::size_t> random_derangement(std::size_t m, std::uint64_t seed) {
  if (m < 2) throw TooFewPapers("a derangement needs at least two items");
  Rng rng(seed);
  std::vector<std::size_t> perm(m);
  for (;;) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    bool fixed = false;
    for (std::size_t i = 0; i < m && !fixed; ++i) fixed = perm[i] == i;
    if (!fixed) return perm;
  }
}

SpecificityResult specificity(const std::map<std::string, std::string>& generated,
                              const ReferenceSets& references, const Similarity& sim,
                              const SpecificityConfig& config) {
  std::vector<const std::string*> outputs;
  std::vector<const std::vector<std::string>*> refs;
  for (const auto& [id, text] : generated) {
    auto it = references.find(id);
    if (it == references.end() || it->second.empty()) continue;
    outputs.push_back(&text);
    refs.push_back(&it->second);
  }
  const auto m = outputs.size();
  if (m < 2) throw TooFewPapers("specificity needs at least two papers with output and references");

  // cross[i][j] = max_n sim(y^_i, y_j^n), filled on demand.
  std::vector<std::vector<double>> cross(m, std::vector<double>(m, -2.0));
  auto at = [&](std::size_t i, std::size_t j) {
    if (cross[i][j] < -1.5) cross[i][j] = sim_max(*outputs[i], *refs[j], sim);
    return cross[i][j];
  };

  SpecificityResult out;
  for (std::size_t i = 0; i < m; ++i) out.own += at(i, i);
  out.own /= static_cast<double>(m);

  std::vector<std::vector<std::size_t>> pairings;
  switch (config.mode) {
    case SpecificityMode::Exhaustive: {
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j)
          if (j != i) row += at(i, j);
        total += row / static_cast<double>(m - 1);
      }
      out.mismatched = total / static_cast<double>(m);
      out.value = out.own - out.mismatched;
      return out;
    }
    case SpecificityMode::AllDerangements:
      pairings = all_derangements(m);
      break;
    case SpecificityMode::Sampled:
      if (config.shuffles < 1) throw InvalidInput("shuffles must be at least 1");
      for (int s = 0; s < config.shuffles; ++s)
        pairings.push_back(random_derangement(m, derive_seed(config.rng_seed, "shuffle#" + std::to_string(s))));
      break;
  }

  std::vector<double> values;
  for (const auto& perm : pairings) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += at(i, perm[i]);
    mean /= static_cast<double>(m);
    out.mismatched += mean;
    values.push_back(out.own - mean);
  }
  const auto k = static_cast<double>(values.size());
  out.mismatched /= k;
  out.value = out.own - out.mismatched;
  for (double v : values) out.variance += (v - out.value) * (v - out.value);
  out.variance /= k;
  out.shuffles = static_cast<int>(values.size());
  return out;
}

namespace {

double mean_pairwise(const std::vector<const std::string*>& texts, const Similarity& sim) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < texts.size(); ++a) {
    for (std::size_t b = 0; b < texts.size(); ++b) {
      if (a == b) continue;
      total += sim(*texts[a], *texts[b]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

std::map<std::string, std::vector<const std::string*>> by_paper(const PromptedOutputs& outputs) {
  std::map<std::string, std::vector<const std::string*>> out;
  for (const auto& [key, text] : outputs) out[key.paper_id].push_back(&text);
  return out;
}

}  // namespace

CoverabilityResult coverability(const PromptedOutputs& generated, const ReferenceSets& references,
                                const Similarity& sim) {
  CoverabilityResult out;
  double total = 0.0;
  for (const auto& [paper, outputs] : by_paper(generated)) {
    auto it = references.find(paper);
    if (it == references.end() || it->second.size() < 2 || outputs.size() < 2) continue;
    std::vector<const std::string*> refs;
    for (const auto& r : it->second) refs.push_back(&r);
    total += mean_pairwise(outputs, sim) - mean_pairwise(refs, sim);
    ++out.papers;
  }
  if (out.papers == 0) throw NoEligiblePapers("no paper has two references and two outputs");
  out.value = total / static_cast<double>(out.papers);
  return out;
}

ControlResult control_metrics(const std::map<std::string, std::string>& single,
                              const PromptedOutputs& prompted, const ReferenceSets& references,
                              const Similarity& sim) {
  const auto grouped = by_paper(prompted);
  ControlResult out;
  std::size_t papers = 0;
  for (const auto& [paper, refs] : references) {
    if (refs.empty()) continue;
    auto s = single.find(paper);
    if (s == single.end()) throw MissingOutputs("no single-stage output for " + paper);
    auto p = grouped.find(paper);
    const auto count = p == grouped.end() ? 0 : p->second.size();
    if (count != refs.size()) {
      throw MissingOutputs(paper + " has " + std::to_string(count) + " prompted outputs for " +
                           std::to_string(refs.size()) + " references");
    }
    const auto n = static_cast<double>(refs.size());
    double avg_single = 0.0, max_single = -1.0;
    for (const auto& y : refs) {
      const double v = sim(s->second, y);
      avg_single += v;
      max_single = std::max(max_single, v);
    }
    double sum_prompted = 0.0, max_prompted = 0.0;
    for (const auto* output : p->second) {
      double best = -1.0;
      for (const auto& y : refs) {
        const double v = sim(*output, y);
        sum_prompted += v;
        best = std::max(best, v);
      }
      max_prompted += best;
    }
    out.avg_single += avg_single / n;
    out.max_single += max_single;
    out.avg_prompted += sum_prompted / (n * n);
    out.max_prompted += max_prompted / n;
    ++papers;
  }
  if (papers == 0) throw NoEligiblePapers("no paper has references");
  const auto m = static_cast<double>(papers);
  out.avg_single /= m;
  out.max_single /= m;
  out.avg_prompted /= m;
  out.max_prompted /= m;
  return out;
}

}  // namespace revgen
