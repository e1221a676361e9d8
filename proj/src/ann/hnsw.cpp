#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "millstone/ann.hpp"
#include "millstone/kernels.hpp"

namespace millstone::ann {

namespace {

constexpr double kNormTolerance = 1e-9;

// Per-thread visited marks tagged with an epoch, so concurrent searches do not
// share state and no clearing pass is needed between searches.
class VisitedSet {
 public:
  void reset(std::size_t capacity) {
    if (marks_.size() < capacity) marks_.resize(capacity, 0);
    if (++epoch_ == 0) {
      std::fill(marks_.begin(), marks_.end(), 0);
      epoch_ = 1;
    }
  }
  // True if the slot was not yet visited in this epoch.
  bool visit(std::uint32_t slot) noexcept {
    if (marks_[slot] == epoch_) return false;
    marks_[slot] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> marks_;
  std::uint32_t epoch_ = 0;
};

thread_local VisitedSet t_visited;

}  // namespace

HnswParams HnswParams::for_m(std::size_t m) {
  HnswParams p;
  p.m = m;
  p.m0 = 2 * m;
  p.ml = 1.0 / std::log(static_cast<double>(m));
  return p;
}

void HnswParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "hnsw params: " + what); };
  if (m < 2) fail("m must be >= 2");
  if (m0 < m) fail("m0 must be >= m");
  if (ef_construction < m) fail("ef_construction must be >= m");
  if (ef_search < 1) fail("ef_search must be >= 1");
  if (!(ml > 0.0) || !std::isfinite(ml)) fail("ml must be > 0");
}

bool hit_before(const SearchHit& a, const SearchHit& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

std::size_t level_for(double u, double ml) noexcept {
  const double level = std::floor(-std::log(u) * ml);
  return level <= 0.0 ? 0 : static_cast<std::size_t>(level);
}

double LevelGenerator::next_uniform() noexcept {
  // ((x >> 11) + 1) / 2^53 lies in (0, 1].
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

std::string LevelGenerator::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void LevelGenerator::set_state(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (is.fail()) throw Error(ErrorCode::CorruptSnapshot, "bad generator state");
}

HnswIndex::HnswIndex(std::size_t dim, HnswParams params, CorpusId corpus)
    : dim_(dim), params_(params), corpus_(std::move(corpus)), levels_(params.rng_seed, params.ml) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "hnsw dimension must be >= 1");
  params_.validate();
}

double HnswIndex::sim(const double* q, Slot s) const noexcept { return kernels::dot(q, vec(s), dim_); }

void HnswIndex::check_query(const Embedding& e) const {
  if (e.dim() != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected dimension " + std::to_string(dim_) + ", got " + std::to_string(e.dim()));
  }
  if (std::abs(e.norm() - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::NotNormalized, "vector is not unit-normalized");
  }
}

HnswIndex::Slot HnswIndex::greedy_descend(const double* q, Slot from, std::size_t top,
                                          std::size_t bottom) const {
  Slot current = from;
  double best = sim(q, current);
  for (std::size_t layer = top; layer > bottom; --layer) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (Slot n : nodes_[current].links[layer]) {
        const double s = sim(q, n);
        if (s > best) {
          best = s;
          current = n;
          improved = true;
        }
      }
    }
  }
  return current;
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer(const double* q, const std::vector<Slot>& entries,
                                                          std::size_t ef, std::size_t layer) const {
  auto closer = [](const Candidate& a, const Candidate& b) { return a.sim < b.sim; };   // max-heap
  auto farther = [](const Candidate& a, const Candidate& b) { return a.sim > b.sim; };  // min-heap
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(closer)> frontier(closer);
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(farther)> found(farther);

  t_visited.reset(nodes_.size());
  for (Slot e : entries) {
    if (!t_visited.visit(e)) continue;
    const Candidate c{sim(q, e), e};
    frontier.push(c);
    found.push(c);
    if (found.size() > ef) found.pop();
  }

  while (!frontier.empty()) {
    const Candidate c = frontier.top();
    if (found.size() >= ef && c.sim < found.top().sim) break;
    frontier.pop();
    for (Slot n : nodes_[c.slot].links[layer]) {
      if (!t_visited.visit(n)) continue;
      const double s = sim(q, n);
      if (found.size() < ef || s > found.top().sim) {
        frontier.push({s, n});
        found.push({s, n});
        if (found.size() > ef) found.pop();
      }
    }
  }

  std::vector<Candidate> out;
  out.reserve(found.size());
  while (!found.empty()) {
    out.push_back(found.top());
    found.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void HnswIndex::shrink(Slot owner, std::size_t layer) {
  auto& links = nodes_[owner].links[layer];
  if (links.size() <= cap(layer)) return;
  std::vector<Candidate> scored;
  scored.reserve(links.size());
  const double* o = vec(owner);
  for (Slot n : links) scored.push_back({sim(o, n), n});
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Candidate& a, const Candidate& b) { return a.sim > b.sim; });
  scored.resize(cap(layer));
  links.clear();
  for (const auto& c : scored) links.push_back(c.slot);
}

void HnswIndex::insert(const std::string& id, const Embedding& e) {
  if (slot_of_.contains(id)) throw Error(ErrorCode::DuplicateId, "id '" + id + "' already indexed");
  check_query(e);

  Slot slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
  } else {
    slot = static_cast<Slot>(nodes_.size());
    nodes_.emplace_back();
    vectors_.resize(vectors_.size() + dim_);
  }
  std::copy(e.values().begin(), e.values().end(), vectors_.begin() + static_cast<std::ptrdiff_t>(slot) * dim_);
  const std::size_t level = levels_.next();
  Node& node = nodes_[slot];
  node.id = id;
  node.level = level;
  node.links.assign(level + 1, {});
  node.alive = true;

  if (entry_ < 0) {
    entry_ = slot;
    max_layer_ = static_cast<int>(level);
    slot_of_.emplace(id, slot);
    return;
  }

  const double* q = vec(slot);
  const auto top = static_cast<std::size_t>(max_layer_);
  Slot ep = static_cast<Slot>(entry_);
  if (level < top) ep = greedy_descend(q, ep, top, level);

  std::vector<Slot> entries{ep};
  for (std::size_t layer = std::min(level, top) + 1; layer-- > 0;) {
    auto found = search_layer(q, entries, params_.ef_construction, layer);
    const std::size_t keep = std::min(params_.m, found.size());
    auto& links = nodes_[slot].links[layer];
    for (std::size_t i = 0; i < keep; ++i) links.push_back(found[i].slot);
    for (Slot n : links) {
      nodes_[n].links[layer].push_back(slot);
      shrink(n, layer);
    }
    entries.clear();
    for (const auto& c : found) entries.push_back(c.slot);
  }

  slot_of_.emplace(id, slot);
  if (static_cast<int>(level) > max_layer_) {
    entry_ = slot;
    max_layer_ = static_cast<int>(level);
  }
}

void HnswIndex::remove(const std::string& id) {
  auto it = slot_of_.find(id);
  if (it == slot_of_.end()) throw Error(ErrorCode::UnknownId, "id '" + id + "' is not indexed");
  const Slot gone = it->second;
  Node& victim = nodes_[gone];

  for (std::size_t layer = 0; layer <= victim.level; ++layer) {
    const auto& bridge = victim.links[layer];
    for (Slot s = 0; s < nodes_.size(); ++s) {
      Node& u = nodes_[s];
      if (!u.alive || s == gone || u.level < layer) continue;
      auto& links = u.links[layer];
      auto pos = std::find(links.begin(), links.end(), gone);
      if (pos == links.end()) continue;
      links.erase(pos);
      // Re-link through the removed node's neighborhood, keeping the best
      // cap(layer) candidates by similarity to u.
      for (Slot b : bridge) {
        if (b != s && std::find(links.begin(), links.end(), b) == links.end()) links.push_back(b);
      }
      shrink(s, layer);
    }
  }

  victim.alive = false;
  victim.links.clear();
  victim.id.clear();
  victim.level = 0;
  slot_of_.erase(it);
  free_slots_.push_back(gone);

  if (entry_ == static_cast<std::int64_t>(gone)) {
    entry_ = -1;
    max_layer_ = -1;
    for (Slot s = 0; s < nodes_.size(); ++s) {
      if (nodes_[s].alive && static_cast<int>(nodes_[s].level) > max_layer_) {
        entry_ = s;
        max_layer_ = static_cast<int>(nodes_[s].level);
      }
    }
  }
}

std::vector<SearchHit> HnswIndex::search(const Embedding& query, std::size_t k,
                                         std::optional<std::size_t> ef) const {
  if (empty()) throw Error(ErrorCode::EmptyIndex, "index is empty");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  check_query(query);
  const double* q = query.values().data();
  const std::size_t beam = std::max(ef.value_or(params_.ef_search), k);

  const Slot ep = greedy_descend(q, static_cast<Slot>(entry_), static_cast<std::size_t>(max_layer_), 0);
  const auto found = search_layer(q, {ep}, beam, 0);

  std::vector<SearchHit> hits;
  hits.reserve(found.size());
  for (const auto& c : found) hits.push_back({nodes_[c.slot].id, c.sim, corpus_});
  std::sort(hits.begin(), hits.end(), hit_before);
  if (hits.size() > k) hits.resize(k);
  return hits;
}

std::optional<std::string> HnswIndex::entry_point() const {
  if (entry_ < 0) return std::nullopt;
  return nodes_[static_cast<Slot>(entry_)].id;
}

std::vector<std::string> HnswIndex::ids() const {
  std::vector<std::string> out;
  out.reserve(slot_of_.size());
  for (const auto& [id, slot] : slot_of_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t HnswIndex::level_of(const std::string& id) const {
  auto it = slot_of_.find(id);
  if (it == slot_of_.end()) throw Error(ErrorCode::UnknownId, "id '" + id + "' is not indexed");
  return nodes_[it->second].level;
}

std::vector<std::string> HnswIndex::neighbors(const std::string& id, std::size_t layer) const {
  auto it = slot_of_.find(id);
  if (it == slot_of_.end()) throw Error(ErrorCode::UnknownId, "id '" + id + "' is not indexed");
  const Node& n = nodes_[it->second];
  std::vector<std::string> out;
  if (layer > n.level) return out;
  for (Slot s : n.links[layer]) out.push_back(nodes_[s].alive ? nodes_[s].id : std::string());
  return out;
}

std::span<const double> HnswIndex::vector_of(const std::string& id) const {
  auto it = slot_of_.find(id);
  if (it == slot_of_.end()) throw Error(ErrorCode::UnknownId, "id '" + id + "' is not indexed");
  return {vec(it->second), dim_};
}

bool HnswIndex::graph_equal(const HnswIndex& other) const {
  if (dim_ != other.dim_ || !(params_ == other.params_) || corpus_ != other.corpus_ ||
      entry_ != other.entry_ || max_layer_ != other.max_layer_ || free_slots_ != other.free_slots_ ||
      nodes_.size() != other.nodes_.size() || levels_.state() != other.levels_.state()) {
    return false;
  }
  for (std::size_t s = 0; s < nodes_.size(); ++s) {
    const Node& a = nodes_[s];
    const Node& b = other.nodes_[s];
    if (a.alive != b.alive) return false;
    if (!a.alive) continue;
    if (a.id != b.id || a.level != b.level || a.links != b.links) return false;
    if (!std::equal(vec(static_cast<Slot>(s)), vec(static_cast<Slot>(s)) + dim_, other.vec(static_cast<Slot>(s)))) {
      return false;
    }
  }
  return true;
}

}  // namespace millstone::ann
