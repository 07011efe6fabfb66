#include "chainrec/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "chainrec/error.hpp"
#include "chainrec/providers.hpp"
#include "chainrec/text.hpp"
#include "json.hpp"

namespace chainrec {

std::string_view to_string(PerceptionMethod method) {
  return method == PerceptionMethod::kExternalSummarizer ? "external-summarizer"
                                                         : "extractive-fallback";
}

PerceptionMethod parse_perception_method(std::string_view text) {
  if (text == "external-summarizer") return PerceptionMethod::kExternalSummarizer;
  if (text == "extractive-fallback") return PerceptionMethod::kExtractiveFallback;
  throw DataError("unknown perception method '" + std::string(text) + "'");
}

std::vector<CitationContext> extract_citation_contexts(const CorpusStore& store,
                                                       const PaperRecord& paper,
                                                       const ResourceEntity& entity,
                                                       int radius) {
  if (radius < 0) throw UsageError("context radius must be >= 0");
  std::vector<CitationContext> out;
  std::set<std::pair<int, int>> seen;
  for (const auto& m : store.mentions_in(paper.id)) {
    if (m.entity_id != entity.id) continue;
    const auto& section = paper.sections[static_cast<std::size_t>(m.section_index)];
    if (section.kind != SectionKind::kExperimentCentric) continue;
    if (!seen.emplace(m.section_index, m.sentence_index).second) continue;

    const int last_index = static_cast<int>(section.sentences.size()) - 1;
    CitationContext ctx;
    ctx.entity_id = entity.id;
    ctx.paper_id = paper.id;
    ctx.section_index = m.section_index;
    ctx.center_sentence_index = m.sentence_index;
    ctx.first_sentence = std::max(0, m.sentence_index - radius);
    ctx.last_sentence = std::min(last_index, m.sentence_index + radius);
    std::vector<std::string> parts;
    for (int i = ctx.first_sentence; i <= ctx.last_sentence; ++i) {
      parts.emplace_back(trim(section.sentences[static_cast<std::size_t>(i)]));
    }
    ctx.window_text = join(parts, " ");
    out.push_back(std::move(ctx));
  }
  return out;
}

ContextPool pool_contexts(const CorpusStore& store, std::string_view entity_id, int radius,
                          const std::set<std::string>& excluded) {
  const auto& entity = store.entity(entity_id);
  ContextPool pool{entity.id, {}};
  for (const auto& paper_id : store.papers_mentioning(entity_id)) {
    if (excluded.contains(paper_id)) continue;
    auto contexts = extract_citation_contexts(store, store.paper(paper_id), entity, radius);
    pool.contexts.insert(pool.contexts.end(), std::make_move_iterator(contexts.begin()),
                         std::make_move_iterator(contexts.end()));
  }
  // mentions_in is ordered by (section, sentence), papers_mentioning by id.
  return pool;
}

namespace {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace

std::string extractive_summary(const std::vector<std::string>& windows,
                               const ExtractiveOptions& options) {
  std::vector<std::size_t> kept;
  std::vector<std::set<std::string>> kept_terms;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    auto toks = tokenize(windows[i]);
    std::set<std::string> terms(toks.begin(), toks.end());
    const bool near_duplicate = std::any_of(kept_terms.begin(), kept_terms.end(), [&](const auto& k) {
      return jaccard(terms, k) >= options.jaccard_threshold;
    });
    if (near_duplicate) continue;
    kept.push_back(i);
    kept_terms.push_back(std::move(terms));
  }
  if (kept.empty()) return {};

  std::map<std::string, int> df;
  for (const auto& terms : kept_terms) {
    for (const auto& t : terms) ++df[t];
  }
  const double n = static_cast<double>(kept.size());
  std::vector<double> score(kept.size(), 0.0);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept_terms[i].empty()) continue;
    double sum = 0.0;
    for (const auto& t : kept_terms[i]) sum += std::log((n + 1.0) / (df[t] + 1.0)) + 1.0;
    score[i] = sum / static_cast<double>(kept_terms[i].size());
  }

  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  if (order.size() > options.top_n) order.resize(options.top_n);

  std::vector<std::string> parts;
  for (auto i : order) parts.emplace_back(trim(windows[kept[i]]));
  return truncate_utf8(join(parts, options.separator), options.byte_budget);
}

CollectivePerception synthesize_perception(const ContextPool& pool, Provider* summarizer,
                                           const ExtractiveOptions& options) {
  CollectivePerception cp;
  cp.entity_id = pool.entity_id;
  cp.evidence_count = static_cast<int>(pool.contexts.size());
  cp.method = PerceptionMethod::kExtractiveFallback;
  if (pool.contexts.empty()) return cp;

  std::vector<std::string> windows;
  windows.reserve(pool.contexts.size());
  for (const auto& c : pool.contexts) windows.push_back(c.window_text);

  if (summarizer != nullptr) {
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (const auto& w : windows) {
      if (seen.insert(w).second) unique.push_back(w);
    }
    try {
      cp.summary_text = truncate_utf8(summarizer->summarize(unique), options.byte_budget);
      cp.method = PerceptionMethod::kExternalSummarizer;
      if (!cp.summary_text.empty()) return cp;
    } catch (const ProviderError&) {
      // fall through to the extractive path
    }
    cp.method = PerceptionMethod::kExtractiveFallback;
  }
  cp.summary_text = extractive_summary(windows, options);
  return cp;
}

TargetRepresentation build_target_representation(const ResourceEntity& entity,
                                                 const CollectivePerception& cp,
                                                 RepresentationToggles toggles) {
  if (cp.entity_id != entity.id) {
    throw DataError("perception for " + cp.entity_id + " cannot describe " + entity.id);
  }
  std::string text;
  text.append(kDescMarker);
  if (toggles.use_description) text.append(entity.description);
  text.append(kCpMarker);
  if (toggles.use_perception) text.append(cp.summary_text);
  return {entity.id, std::move(text)};
}

std::pair<std::string, std::string> split_target_representation(std::string_view text) {
  if (!text.starts_with(kDescMarker)) throw DataError("representation lacks the [DESC] marker");
  text.remove_prefix(kDescMarker.size());
  const auto pos = text.find(kCpMarker);
  if (pos == std::string_view::npos) throw DataError("representation lacks the [CP] marker");
  return {std::string(text.substr(0, pos)), std::string(text.substr(pos + kCpMarker.size()))};
}

void write_perception_cache(const PerceptionMap& perceptions, std::ostream& out) {
  for (const auto& [id, cp] : perceptions) {
    nlohmann::json j{{"entityId", cp.entity_id},
                     {"method", std::string(to_string(cp.method))},
                     {"evidenceCount", cp.evidence_count},
                     {"summaryText", cp.summary_text}};
    out << j.dump() << '\n';
  }
}

PerceptionMap read_perception_cache(std::istream& in) {
  PerceptionMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CollectivePerception cp;
      cp.entity_id = j.at("entityId").get<std::string>();
      cp.method = parse_perception_method(j.at("method").get<std::string>());
      cp.evidence_count = j.at("evidenceCount").get<int>();
      cp.summary_text = j.at("summaryText").get<std::string>();
      out[cp.entity_id] = std::move(cp);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("perception cache line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace chainrec
