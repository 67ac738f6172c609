#include "revgen/report.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "revgen/error.hpp"

namespace revgen {

using nlohmann::json;

namespace {

void accumulate(QualityMeans& m, const PaperMetrics& p) {
  ++m.papers;
  m.bleu_max += p.bleu_max;
  m.rouge1_max += p.rouge1_max;
  m.rouge2_max += p.rouge2_max;
  m.rougeL_max += p.rougeL_max;
  m.sim_max += p.sim_max;
}

void finalize(QualityMeans& m) {
  if (m.papers == 0) return;
  const auto n = static_cast<double>(m.papers);
  m.bleu_max /= n;
  m.rouge1_max /= n;
  m.rouge2_max /= n;
  m.rougeL_max /= n;
  m.sim_max /= n;
}

PromptedOutputs prompted_outputs(const std::vector<GeneratedReview>& generated,
                                 const std::set<std::string>* papers = nullptr) {
  PromptedOutputs out;
  for (const auto& g : generated) {
    if (papers && !papers->count(g.paper_id)) continue;
    out[{g.paper_id, g.prompt_index()}] = g.text;
  }
  return out;
}

json means_json(const QualityMeans& m) {
  return {{"papers", m.papers},         {"bleu_max", m.bleu_max},
          {"rouge1_max", m.rouge1_max}, {"rouge2_max", m.rouge2_max},
          {"rougeL_max", m.rougeL_max}, {"sim_max", m.sim_max}};
}

QualityMeans means_from(const json& j) {
  return {j.at("papers").get<std::size_t>(), j.at("bleu_max").get<double>(),
          j.at("rouge1_max").get<double>(),  j.at("rouge2_max").get<double>(),
          j.at("rougeL_max").get<double>(),  j.at("sim_max").get<double>()};
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

}  // namespace

MetricReport evaluate(const Corpus& corpus, const std::vector<GeneratedReview>& generated,
                      const Similarity& sim, const EvalConfig& config,
                      const std::vector<GeneratedReview>* baseline) {
  if (generated.empty()) throw MissingOutputs("no generated outputs to evaluate");
  const auto variant = generated.front().variant;
  for (const auto& g : generated)
    if (g.variant != variant) throw InvalidInput("generated outputs mix several variants");

  MetricReport report;
  report.variant = to_string(variant);
  report.similarity = sim.name();
  const auto refs = reference_sets(corpus, config.include_meta_reviews);

  std::map<std::string, std::vector<const GeneratedReview*>> by_paper;
  for (const auto& g : generated) by_paper[g.paper_id].push_back(&g);

  std::map<std::string, std::string> first_output;
  std::map<std::string, std::set<std::string>> venue_papers;
  for (const auto& [id, outputs] : by_paper) {
    auto paper = corpus.papers.find(id);
    auto r = refs.find(id);
    if (paper == corpus.papers.end() || r == refs.end() || r->second.empty()) continue;
    PaperMetrics row;
    row.paper_id = id;
    row.venue = paper->second.venue.name();
    row.outputs = outputs.size();
    const GeneratedReview* first = nullptr;
    for (const auto* g : outputs) {
      row.bleu_max += bleu_max(g->text, r->second);
      row.rouge1_max += rouge_max(g->text, r->second, RougeVariant::R1);
      row.rouge2_max += rouge_max(g->text, r->second, RougeVariant::R2);
      row.rougeL_max += rouge_max(g->text, r->second, RougeVariant::RL);
      row.sim_max += sim_max(g->text, r->second, sim);
      if (!first || g->prompt_index() < first->prompt_index()) first = g;
    }
    const auto n = static_cast<double>(outputs.size());
    row.bleu_max /= n;
    row.rouge1_max /= n;
    row.rouge2_max /= n;
    row.rougeL_max /= n;
    row.sim_max /= n;
    accumulate(report.venue_means[row.venue], row);
    accumulate(report.overall, row);
    first_output[id] = first->text;
    venue_papers[row.venue].insert(id);
    report.papers.push_back(std::move(row));
  }
  if (report.papers.empty()) throw MissingOutputs("no generated output matches a corpus paper with references");
  for (auto& [venue, m] : report.venue_means) finalize(m);
  finalize(report.overall);

  try {
    report.spe = specificity(first_output, refs, sim, config.specificity);
  } catch (const TooFewPapers& e) {
    report.spe_note = e.what();
  }

  if (is_two_stage(variant)) {
    for (const auto& [venue, papers] : venue_papers) {
      try {
        report.cov[venue] = coverability(prompted_outputs(generated, &papers), refs, sim);
      } catch (const NoEligiblePapers&) {
      }
    }
    try {
      report.cov_overall = coverability(prompted_outputs(generated), refs, sim);
    } catch (const NoEligiblePapers& e) {
      report.cov_note = e.what();
    }
  } else {
    report.cov_note = "coverability needs a two-stage variant";
  }

  if (baseline) {
    if (!is_two_stage(variant)) {
      report.control_note = "control compares a two-stage variant against a single-stage baseline";
    } else {
      std::map<std::string, std::string> single;
      for (const auto& b : *baseline) {
        if (is_two_stage(b.variant)) throw InvalidInput("the control baseline must be single-stage");
        single[b.paper_id] = b.text;
        report.control_baseline = to_string(b.variant);
      }
      ReferenceSets covered;
      for (const auto& [id, outputs] : by_paper)
        if (auto r = refs.find(id); r != refs.end() && !r->second.empty()) covered[id] = r->second;
      try {
        report.control = control_metrics(single, prompted_outputs(generated), covered, sim);
      } catch (const MissingOutputs& e) {
        report.control_note = e.what();
      }
    }
  }
  return report;
}

json to_json(const MetricReport& r) {
  json papers = json::array();
  for (const auto& p : r.papers) {
    papers.push_back({{"paper_id", p.paper_id},     {"venue", p.venue},
                      {"outputs", p.outputs},       {"bleu_max", p.bleu_max},
                      {"rouge1_max", p.rouge1_max}, {"rouge2_max", p.rouge2_max},
                      {"rougeL_max", p.rougeL_max}, {"sim_max", p.sim_max}});
  }
  json venues = json::object();
  for (const auto& [v, m] : r.venue_means) venues[v] = means_json(m);
  json j{{"variant", r.variant},
         {"similarity", r.similarity},
         {"papers", std::move(papers)},
         {"venue_means", std::move(venues)},
         {"overall", means_json(r.overall)}};
  j["spe"] = r.spe ? json{{"value", r.spe->value},
                          {"variance", r.spe->variance},
                          {"shuffles", r.spe->shuffles},
                          {"own", r.spe->own},
                          {"mismatched", r.spe->mismatched}}
                   : json(nullptr);
  j["spe_note"] = r.spe_note;
  json cov = json::object();
  for (const auto& [v, c] : r.cov) cov[v] = {{"value", c.value}, {"papers", c.papers}};
  j["cov"] = std::move(cov);
  j["cov_overall"] = r.cov_overall
                         ? json{{"value", r.cov_overall->value}, {"papers", r.cov_overall->papers}}
                         : json(nullptr);
  j["cov_note"] = r.cov_note;
  j["control"] = r.control ? json{{"avg_single", r.control->avg_single},
                                  {"avg_prompted", r.control->avg_prompted},
                                  {"max_single", r.control->max_single},
                                  {"max_prompted", r.control->max_prompted}}
                           : json(nullptr);
  j["control_baseline"] = r.control_baseline;
  j["control_note"] = r.control_note;
  return j;
}

MetricReport report_from_json(const json& j) {
  try {
    MetricReport r;
    r.variant = j.at("variant").get<std::string>();
    r.similarity = j.at("similarity").get<std::string>();
    for (const auto& p : j.at("papers")) {
      r.papers.push_back({p.at("paper_id").get<std::string>(), p.at("venue").get<std::string>(),
                          p.at("outputs").get<std::size_t>(), p.at("bleu_max").get<double>(),
                          p.at("rouge1_max").get<double>(), p.at("rouge2_max").get<double>(),
                          p.at("rougeL_max").get<double>(), p.at("sim_max").get<double>()});
    }
    for (const auto& [v, m] : j.at("venue_means").items()) r.venue_means[v] = means_from(m);
    r.overall = means_from(j.at("overall"));
    if (const auto& s = j.at("spe"); !s.is_null()) {
      r.spe = SpecificityResult{s.at("value").get<double>(), s.at("variance").get<double>(),
                                s.at("shuffles").get<int>(), s.at("own").get<double>(),
                                s.at("mismatched").get<double>()};
    }
    r.spe_note = j.value("spe_note", std::string{});
    for (const auto& [v, c] : j.at("cov").items())
      r.cov[v] = {c.at("value").get<double>(), c.at("papers").get<std::size_t>()};
    if (const auto& c = j.at("cov_overall"); !c.is_null())
      r.cov_overall = CoverabilityResult{c.at("value").get<double>(), c.at("papers").get<std::size_t>()};
    r.cov_note = j.value("cov_note", std::string{});
    if (const auto& c = j.at("control"); !c.is_null()) {
      r.control = ControlResult{c.at("avg_single").get<double>(), c.at("avg_prompted").get<double>(),
                                c.at("max_single").get<double>(), c.at("max_prompted").get<double>()};
    }
    r.control_baseline = j.value("control_baseline", std::string{});
    r.control_note = j.value("control_note", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("report: ") + e.what());
  }
}

std::string render_report(const MetricReport& r) {
  std::ostringstream out;
  char line[256];
  out << "Variant " << r.variant << ", similarity " << r.similarity << "\n\n";
  std::snprintf(line, sizeof line, "%-12s %6s %8s %8s %8s %8s %8s\n", "venue", "papers", "BLEU",
                "R-1", "R-2", "R-L", "Sim");
  out << line;
  auto row = [&](const std::string& name, const QualityMeans& m) {
    std::snprintf(line, sizeof line, "%-12s %6zu %8s %8s %8s %8s %8s\n", name.c_str(), m.papers,
                  pct(m.bleu_max).c_str(), pct(m.rouge1_max).c_str(), pct(m.rouge2_max).c_str(),
                  pct(m.rougeL_max).c_str(), pct(m.sim_max).c_str());
    out << line;
  };
  for (const auto& [v, m] : r.venue_means) row(v, m);
  row("overall", r.overall);

  out << "\nSpecificity: ";
  if (r.spe) {
    std::snprintf(line, sizeof line, "%s (variance %.3g over %d shuffles)\n", pct(r.spe->value).c_str(),
                  r.spe->variance * 1e4, r.spe->shuffles);
    out << line;
  } else {
    out << "n/a (" << r.spe_note << ")\n";
  }

  out << "\nCoverability:";
  if (r.cov.empty() && !r.cov_overall) out << " n/a (" << r.cov_note << ")";
  out << "\n";
  for (const auto& [v, c] : r.cov) out << "  " << v << ": " << pct(c.value) << " (" << c.papers << " papers)\n";
  if (r.cov_overall) out << "  overall: " << pct(r.cov_overall->value) << " (" << r.cov_overall->papers << " papers)\n";

  if (r.control) {
    out << "\nControl (" << r.control_baseline << " vs " << r.variant << ")\n";
    std::snprintf(line, sizeof line, "%-10s %10s %10s\n", "", "single", "prompted");
    out << line;
    std::snprintf(line, sizeof line, "%-10s %10s %10s\n", "average", pct(r.control->avg_single).c_str(),
                  pct(r.control->avg_prompted).c_str());
    out << line;
    std::snprintf(line, sizeof line, "%-10s %10s %10s\n", "max", pct(r.control->max_single).c_str(),
                  pct(r.control->max_prompted).c_str());
    out << line;
  } else if (!r.control_note.empty()) {
    out << "\nControl: n/a (" << r.control_note << ")\n";
  }
  return out.str();
}

}  // namespace revgen
