#include <gtest/gtest.h>

#include <sstream>

#include "chainrec/corpus.hpp"
#include "chainrec/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace chainrec {
namespace {

using testing::make_entity;
using testing::make_paper;

TEST(ClassifySection, Examples) {
  EXPECT_EQ(classify_section("5. Experiments"), SectionKind::kExperimentCentric);
  EXPECT_EQ(classify_section("Related Work"), SectionKind::kOther);
  EXPECT_EQ(classify_section("Ablation Study"), SectionKind::kExperimentCentric);
  EXPECT_EQ(classify_section("RESULTS AND DISCUSSION"), SectionKind::kExperimentCentric);
  EXPECT_EQ(classify_section("Experimental Setup"), SectionKind::kExperimentCentric);
}

TEST(ClassifySection, ConfigurableKeywords) {
  SectionClassifier c{{"probe"}};
  EXPECT_EQ(c.classify("Linear Probes"), SectionKind::kExperimentCentric);
  EXPECT_EQ(c.classify("Experiments"), SectionKind::kOther);
}

TEST(NormalizeName, Examples) {
  EXPECT_EQ(normalize_name("ResNet-50"), "resnet 50");
  EXPECT_EQ(normalize_name("BERT."), "bert");
  EXPECT_EQ(normalize_name("  Graph_Net / v2 !? "), "graph net v2");
  EXPECT_EQ(normalize_name("Café-Net"), "café net");
}

TEST(NormalizeName, EmptyCanonicalFormIsAnError) {
  EXPECT_THROW(normalize_name("...!"), DataError);
  EXPECT_THROW(normalize_name("-_/"), DataError);
  try {
    normalize_name("?!");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("empty canonical form"), std::string::npos);
  }
}

TEST(NormalizeName, IdempotentOnRandomStrings) {
  testing::Random rng(11);
  const std::string alphabet = "aBcDeZ019 -_/.,;:!?()'\"\t";
  int checked = 0;
  for (int n = 0; n < 5000; ++n) {
    std::string s;
    const std::size_t len = 1 + rng.below(16);
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
    std::string once;
    try {
      once = normalize_name(s);
    } catch (const DataError&) {
      continue;
    }
    EXPECT_EQ(normalize_name(once), once) << '"' << s << '"';
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(MergeAliases, SharedAliasMerges) {
  auto a = make_entity("A", EntityKind::kBaseline, "resnet 50");
  auto b = make_entity("B", EntityKind::kBaseline, "resnet 50");
  b.aliases.insert("rn50");
  const auto out = merge_aliases({a, b});
  ASSERT_EQ(out.entities.size(), 1u);
  EXPECT_EQ(out.entities[0].id, "A");
  EXPECT_EQ(out.entities[0].aliases, (std::set<std::string>{"resnet 50", "rn50"}));
  ASSERT_EQ(out.log.size(), 1u);
  EXPECT_EQ(out.log[0].kept, "A");
  EXPECT_EQ(out.log[0].absorbed, "B");
}

TEST(MergeAliases, Transitive) {
  auto a = make_entity("A", EntityKind::kBaseline, "x");
  auto b = make_entity("B", EntityKind::kBaseline, "x");
  b.aliases.insert("y");
  auto c = make_entity("C", EntityKind::kBaseline, "y");
  const auto out = merge_aliases({c, b, a});
  ASSERT_EQ(out.entities.size(), 1u);
  EXPECT_EQ(out.entities[0].id, "A");
  EXPECT_EQ(out.log.size(), 2u);
}

TEST(MergeAliases, DisjointIsIdentity) {
  auto a = make_entity("A", EntityKind::kBaseline, "alpha", "first");
  auto b = make_entity("B", EntityKind::kDataset, "beta", "second");
  const auto out = merge_aliases({a, b});
  ASSERT_EQ(out.entities.size(), 2u);
  EXPECT_TRUE(out.log.empty());
  EXPECT_EQ(out.entities[0].description, "first");
  EXPECT_EQ(out.entities[1].description, "second");
}

TEST(MergeAliases, SurvivorFields) {
  auto a = make_entity("e2", EntityKind::kBaseline, "net", "short");
  a.year = 2019;
  auto b = make_entity("e1", EntityKind::kBaseline, "NET", "a much longer description");
  b.year = 2021;
  const auto out = merge_aliases({a, b});
  ASSERT_EQ(out.entities.size(), 1u);
  EXPECT_EQ(out.entities[0].id, "e1");
  EXPECT_EQ(out.entities[0].year, 2019);
  EXPECT_EQ(out.entities[0].description, "a much longer description");
}

TEST(MergeAliases, KindMismatchNamesBothIds) {
  auto a = make_entity("b9", EntityKind::kBaseline, "imagenet");
  auto b = make_entity("d9", EntityKind::kDataset, "ImageNet");
  try {
    merge_aliases({a, b});
    FAIL();
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("b9"), std::string::npos);
    EXPECT_NE(what.find("d9"), std::string::npos);
  }
}

TEST(MergeAliases, MatchesUnionFindOracle) {
  testing::Random rng(5);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 2 + rng.below(12);
    std::vector<ResourceEntity> entities;
    std::vector<std::vector<std::string>> aliases;
    for (std::size_t i = 0; i < n; ++i) {
      auto e = make_entity("e" + std::to_string(100 + i), EntityKind::kBaseline,
                           "alias " + std::to_string(rng.below(20)));
      const std::size_t extra = rng.below(3);
      for (std::size_t k = 0; k < extra; ++k) e.aliases.insert("Alias-" + std::to_string(rng.below(20)));
      std::vector<std::string> normalized;
      for (const auto& a : e.aliases) normalized.push_back(normalize_name(a));
      aliases.push_back(normalized);
      entities.push_back(e);
    }
    const auto out = merge_aliases(entities);
    const std::size_t components = testing::alias_components(aliases);
    EXPECT_EQ(out.entities.size(), components);
    EXPECT_EQ(out.log.size(), n - components);
    // Pairwise-disjoint alias sets.
    std::set<std::string> all;
    std::size_t total = 0;
    for (const auto& e : out.entities) {
      total += e.aliases.size();
      all.insert(e.aliases.begin(), e.aliases.end());
    }
    EXPECT_EQ(all.size(), total);
  }
}

// ---- ingest ----

TEST(Ingest, TwoPaperFixtureCounts) {
  std::istringstream in(testing::two_paper_fixture_text());
  const auto store = parse_corpus(in);
  EXPECT_EQ(store.papers().size(), 2u);
  EXPECT_EQ(store.entities().size(), 3u);
  EXPECT_EQ(store.gold("P2").baselines, (std::set<std::string>{"b1", "b2"}));
  EXPECT_EQ(store.gold("P2").datasets, (std::set<std::string>{"d1"}));
  EXPECT_EQ(store.entity("b1").canonical_name, "graphnet");
  EXPECT_EQ(store.paper("P1").sections[0].kind, SectionKind::kExperimentCentric);
}

TEST(Ingest, ShippedFixtureFile) {
  const auto store = ingest_corpus(testing::fixture_path("corpus.jsonl"));
  EXPECT_GE(store.papers().size(), 4u);
  EXPECT_NO_THROW(store.check_integrity());
}

TEST(Ingest, DanglingReference) {
  std::istringstream in(
      R"({"type":"paper","id":"P1","title":"t","abstract":"a","venue":"v","year":2020,"sections":[],"baselines":["bX"],"datasets":[]})");
  try {
    parse_corpus(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("dangling reference P1→bX"), std::string::npos) << e.what();
  }
}

TEST(Ingest, DuplicatePaperIdNamed) {
  std::string text = testing::two_paper_fixture_text();
  text += R"({"type":"paper","id":"P1","title":"t","abstract":"a","venue":"v","year":2020})";
  std::istringstream in(text);
  try {
    parse_corpus(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate paper id P1"), std::string::npos);
  }
}

TEST(Ingest, MalformedRecordReportsLine) {
  std::string text = testing::two_paper_fixture_text();
  text += "{not json\n";
  std::istringstream in(text);
  try {
    parse_corpus(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos) << e.what();
  }
}

TEST(Ingest, MissingFieldAndBadKind) {
  std::istringstream no_year(R"({"type":"paper","id":"P1"})");
  EXPECT_THROW(parse_corpus(no_year), DataError);
  std::istringstream bad_kind(R"({"type":"entity","id":"x","kind":"model","name":"x"})");
  EXPECT_THROW(parse_corpus(bad_kind), DataError);
  std::istringstream bad_type(R"({"type":"venue","id":"x"})");
  EXPECT_THROW(parse_corpus(bad_type), DataError);
}

TEST(Ingest, YearOutOfRange) {
  auto p = make_paper("P1", {}, {}, 1850);
  EXPECT_THROW(CorpusStore::build({p}, {}), DataError);
}

TEST(Ingest, KindMismatchInUsage) {
  auto p = make_paper("P1", {"d1"}, {});
  EXPECT_THROW(CorpusStore::build({p}, {make_entity("d1")}), DataError);
}

TEST(Ingest, InvalidIds) {
  EXPECT_TRUE(is_valid_id("P-1.x_2"));
  EXPECT_FALSE(is_valid_id("P 1"));
  EXPECT_FALSE(is_valid_id(""));
  auto p = make_paper("bad id", {}, {});
  EXPECT_THROW(CorpusStore::build({p}, {}), DataError);
}

TEST(Ingest, RoundTripThroughExport) {
  std::istringstream in(testing::two_paper_fixture_text());
  const auto first = parse_corpus(in);
  std::ostringstream once;
  export_corpus(first, once);
  std::istringstream again(once.str());
  const auto second = parse_corpus(again);
  std::ostringstream twice;
  export_corpus(second, twice);
  EXPECT_EQ(once.str(), twice.str());
  EXPECT_EQ(first.mentions(), second.mentions());
}

TEST(Ingest, DuplicatesMergedAndReferencesRemapped) {
  auto a = make_entity("b1", EntityKind::kBaseline, "ResNet-50");
  auto b = make_entity("b2", EntityKind::kBaseline, "resnet 50");
  auto p = make_paper("P1", {"b2"}, {});
  const auto store = CorpusStore::build({p}, {a, b});
  EXPECT_EQ(store.entities().size(), 1u);
  EXPECT_EQ(store.gold("P1").baselines, (std::set<std::string>{"b1"}));
  IngestOptions keep_apart;
  keep_apart.merge_duplicates = false;
  EXPECT_EQ(CorpusStore::build({p}, {a, b}, keep_apart).entities().size(), 2u);
}

TEST(Ingest, ResolvesMentionsByAlias) {
  const auto store = CorpusStore::build(testing::perception_papers(), testing::perception_entities());
  const auto in_p2 = store.mentions_in("P2");
  std::set<std::string> entities;
  for (const auto& m : in_p2) entities.insert(m.entity_id);
  EXPECT_EQ(entities, (std::set<std::string>{"b1", "d1", "d2"}));
  EXPECT_EQ(store.papers_mentioning("b3"), (std::vector<std::string>{"P3"}));
  EXPECT_TRUE(store.mentions_in("P9").empty());
}

TEST(Ingest, GoldSetsMirrorUsage) {
  const auto store = CorpusStore::build(testing::perception_papers(), testing::perception_entities());
  for (const auto& [id, p] : store.papers()) {
    EXPECT_EQ(store.gold(id).baselines, p.used_baselines);
    EXPECT_EQ(store.gold(id).datasets, p.used_datasets);
  }
  EXPECT_THROW(store.gold("nope"), DataError);
}

TEST(Mentions, FileRoundTrip) {
  const auto store = CorpusStore::build(testing::perception_papers(), testing::perception_entities());
  std::stringstream buf;
  write_mentions(store.mentions(), buf);
  const auto back = read_mentions(buf);
  EXPECT_EQ(back, store.mentions());
  EXPECT_EQ(store.with_mentions(back).mentions(), store.mentions());
}

TEST(Mentions, WithMentionsRejectsBadIndices) {
  const auto store = CorpusStore::build(testing::perception_papers(), testing::perception_entities());
  EXPECT_THROW(store.with_mentions({{"P1", "b1", 7, 0, "graphnet"}}), DataError);
  EXPECT_THROW(store.with_mentions({{"P1", "zz", 0, 0, "graphnet"}}), DataError);
}

// ---- rule filter ----

TEST(RuleFilter, Examples) {
  MentionStats stats;
  stats["e5"] = {5, 3, true};
  stats["rw"] = {4, 0, true};
  stats["once"] = {1, 1, true};
  const Mention m{"P", "", 0, 0, ""};
  auto decide = [&](const std::string& id) {
    Mention x = m;
    x.entity_id = id;
    return rule_filter(x, stats);
  };
  EXPECT_EQ(decide("e5"), FilterDecision::kKeep);
  EXPECT_EQ(decide("rw"), FilterDecision::kDrop);
  EXPECT_EQ(decide("once"), FilterDecision::kBorderline);
  EXPECT_THROW(decide("unknown"), DataError);
}

TEST(RuleFilter, ExhaustiveRuleTable) {
  // Every (total, experiment, consistent) combination up to 4 mentions.
  for (int total = 0; total <= 4; ++total) {
    for (int exp = 0; exp <= total; ++exp) {
      for (bool consistent : {false, true}) {
        MentionStats stats;
        stats["e"] = {total, exp, consistent};
        const auto got = rule_filter({"P", "e", 0, 0, ""}, stats);
        FilterDecision expected;
        if (exp == 0) {
          expected = FilterDecision::kDrop;
        } else if (total >= 2 && consistent) {
          expected = FilterDecision::kKeep;
        } else {
          expected = FilterDecision::kBorderline;
        }
        EXPECT_EQ(got, expected) << total << ' ' << exp << ' ' << consistent;
      }
    }
  }
}

TEST(RuleFilter, StatsAndVerifierRouting) {
  const auto store = CorpusStore::build(testing::perception_papers(), testing::perception_entities());
  const auto stats = compute_mention_stats(store);
  EXPECT_EQ(stats.at("b3").experiment, 0);
  EXPECT_EQ(stats.at("b3").total, 1);
  EXPECT_EQ(stats.at("b1").total, 5);
  EXPECT_EQ(stats.at("b1").experiment, 4);

  // d2 has two experiment mentions: keep. b3: drop. Without a verifier the
  // borderline mentions stay.
  const auto open = filter_mentions(store, {});
  EXPECT_EQ(open.drop, 1);
  EXPECT_EQ(open.borderline_rejected, 0);

  RuleFilterConfig strict{10, 1};
  int calls = 0;
  const auto vetted = filter_mentions(store, strict, [&](const Mention& m, const ResourceEntity& e,
                                                         std::string_view sentence) {
    ++calls;
    EXPECT_EQ(m.entity_id, e.id);
    EXPECT_FALSE(sentence.empty());
    return e.id == "b1";
  });
  EXPECT_GT(calls, 0);
  EXPECT_EQ(vetted.borderline_approved + vetted.borderline_rejected, calls);
  for (const auto& m : vetted.kept) EXPECT_EQ(m.entity_id, "b1");
}

}  // namespace
}  // namespace chainrec
