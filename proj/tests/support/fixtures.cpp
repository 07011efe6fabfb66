#include "fixtures.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace chainrec::testing {

PaperRecord make_paper(std::string id, std::vector<std::string> baselines,
                       std::vector<std::string> datasets, int year, std::string venue) {
  PaperRecord p;
  p.id = std::move(id);
  p.title = "Paper " + p.id;
  p.abstract = "Abstract of " + p.id;
  p.venue = std::move(venue);
  p.year = year;
  p.used_baselines = {baselines.begin(), baselines.end()};
  p.used_datasets = {datasets.begin(), datasets.end()};
  return p;
}

ResourceEntity make_entity(std::string id, EntityKind kind, std::string name,
                           std::string description) {
  ResourceEntity e;
  e.id = std::move(id);
  e.kind = kind;
  e.canonical_name = name;
  e.aliases = {name};
  e.description = std::move(description);
  return e;
}

ResourceEntity make_entity(std::string id) {
  const EntityKind kind = id.front() == 'b' ? EntityKind::kBaseline : EntityKind::kDataset;
  const std::string name = "entity " + id;
  return make_entity(std::move(id), kind, name, "about " + name);
}

CorpusStore usage_store(const std::vector<PaperRecord>& papers) {
  std::set<std::string> ids;
  for (const auto& p : papers) {
    ids.insert(p.used_baselines.begin(), p.used_baselines.end());
    ids.insert(p.used_datasets.begin(), p.used_datasets.end());
  }
  std::vector<ResourceEntity> entities;
  for (const auto& id : ids) entities.push_back(make_entity(id));
  return CorpusStore::build(papers, std::move(entities));
}

std::string two_paper_fixture_text() {
  return R"({"type":"entity","id":"b1","kind":"baseline","name":"GraphNet","aliases":["GraphNet"],"description":"A graph network."}
{"type":"entity","id":"b2","kind":"baseline","name":"TreeLSTM","aliases":["TreeLSTM"],"description":"A tree model."}
{"type":"entity","id":"d1","kind":"dataset","name":"CoraSet","aliases":["CoraSet"],"description":"Citation graphs."}
{"type":"paper","id":"P1","title":"One","abstract":"First idea.","venue":"ACL","year":2020,"sections":[{"heading":"Experiments","sentences":["We compare against GraphNet on CoraSet."]}],"baselines":["b1"],"datasets":["d1"]}
{"type":"paper","id":"P2","title":"Two","abstract":"Second idea.","venue":"KDD","year":2021,"sections":[{"heading":"Results","sentences":["TreeLSTM and GraphNet are evaluated on CoraSet."]}],"baselines":["b1","b2"],"datasets":["d1"]}
)";
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("chainrec_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string fixture_path(const std::string& name) {
  return std::string(CHAINREC_FIXTURE_DIR) + "/" + name;
}

std::vector<PaperRecord> perception_papers() {
  auto p1 = make_paper("P1", {"b1", "b2"}, {"d1"}, 2021, "ACL");
  p1.abstract = "We study graph learning for citation data.";
  p1.sections = {
      {"Introduction", SectionKind::kOther, {"Graph learning is popular.", "GraphNet was proposed earlier."}},
      {"4 Experiments",
       SectionKind::kOther,
       {"We describe the setup.", "We compare against GraphNet on CoraSet.",
        "GraphNet is strong on small graphs.", "Results favor our method.",
        "TreeLSTM is also included."}},
  };
  auto p2 = make_paper("P2", {"b1"}, {"d1", "d2"}, 2022, "ACL");
  p2.abstract = "Scaling graph models to large corpora.";
  p2.sections = {
      {"Experimental Setup",
       SectionKind::kOther,
       {"We evaluate on CoraSet and WikiBench.", "Graph-Net serves as the main baseline.",
        "Training uses Adam."}},
  };
  auto p3 = make_paper("P3", {"b2"}, {"d2"}, 2019, "KDD");
  p3.abstract = "Tree structured encoders for text.";
  p3.sections = {
      {"Related Work", SectionKind::kOther, {"OldModel was an early approach."}},
      {"Results", SectionKind::kOther, {"TreeLSTM underperforms on WikiBench."}},
  };
  auto p4 = make_paper("P4", {"b1", "b2"}, {"d1"}, 2023, "KDD");
  p4.abstract = "Comparing graph and tree encoders.";
  p4.sections = {
      {"Evaluation", SectionKind::kOther, {"GraphNet and TreeLSTM both run on CoraSet."}},
  };
  return {p1, p2, p3, p4};
}

std::vector<ResourceEntity> perception_entities() {
  auto b1 = make_entity("b1", EntityKind::kBaseline, "GraphNet", "A message passing network.");
  b1.aliases.insert("Graph-Net");
  auto b2 = make_entity("b2", EntityKind::kBaseline, "TreeLSTM", "A recursive tree encoder.");
  auto b3 = make_entity("b3", EntityKind::kBaseline, "OldModel", "An early model.");
  auto d1 = make_entity("d1", EntityKind::kDataset, "CoraSet", "Citation graph benchmark.");
  auto d2 = make_entity("d2", EntityKind::kDataset, "WikiBench", "Encyclopedia text benchmark.");
  return {b1, b2, b3, d1, d2};
}

Matrix random_matrix(Random& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

TrainBatch random_batch(Random& rng, std::size_t batch, std::size_t dim) {
  TrainBatch b;
  b.queries = random_matrix(rng, batch, dim, -1.0, 1.0);
  b.targets = random_matrix(rng, batch, dim, -1.0, 1.0);
  for (std::size_t i = 0; i < batch; ++i) b.labels.push_back(rng.coin() ? 1 : 0);
  return b;
}

RankedList random_ranking(Random& rng, std::size_t universe, std::size_t length) {
  std::vector<std::size_t> ids(universe);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng.engine());
  RankedList list;
  list.query_id = "q";
  for (std::size_t i = 0; i < std::min(length, universe); ++i) {
    list.entries.push_back({"e" + std::to_string(ids[i]), static_cast<double>(length - i),
                            static_cast<int>(i + 1)});
  }
  return list;
}

std::set<std::string> random_gold(Random& rng, std::size_t universe, std::size_t max_size) {
  std::set<std::string> gold;
  const std::size_t size = 1 + rng.below(std::min(max_size, universe));
  while (gold.size() < size) gold.insert("e" + std::to_string(rng.below(universe)));
  return gold;
}

}  // namespace chainrec::testing
