// Acceptance run: one PASS/FAIL line per release criterion. Exit status is
// non-zero when any criterion fails.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "millstone/ann.hpp"
#include "millstone/encoder.hpp"
#include "millstone/engine.hpp"
#include "millstone/etl.hpp"
#include "millstone/metrics.hpp"
#include "millstone/queryapi/ast.hpp"
#include "millstone/queryapi/auth.hpp"
#include "millstone/queryapi/executor.hpp"
#include "millstone/queryapi/server.hpp"
#include "millstone/store.hpp"

using namespace millstone;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures{MILLSTONE_FIXTURES};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << "failed: " << what;
      pass = false;
    }
  }
};

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("millstone-accept-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Plain summation oracles, written without reference to the library.
double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
double naive_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return naive_dot(a, b) / (std::sqrt(naive_dot(a, a)) * std::sqrt(naive_dot(b, b)));
}
double naive_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}
double naive_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

bool close_rel(double got, double want, double tol) {
  return std::fabs(got - want) <= tol * std::max(std::fabs(want), 1e-300) || got == want;
}

// --- 1. metrics --------------------------------------------------------------

Verdict metric_oracle() {
  Verdict v;
  const auto start = Clock::now();
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t dims[] = {2, 3, 768};
  std::size_t checked = 0, bad_value = 0, bad_symmetry = 0, bad_scale = 0;
  double worst = 0;
  for (int pair = 0; pair < 1000; ++pair) {
    const std::size_t dim = dims[pair % 3];
    std::vector<double> a(dim), b(dim);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const double c = metrics::cosine(a, b), d1 = metrics::l1(a, b), d2 = metrics::l2(a, b);
    const double oc = naive_cosine(a, b), o1 = naive_l1(a, b), o2 = naive_l2(a, b);
    for (auto [got, want] : {std::pair{c, oc}, {d1, o1}, {d2, o2}}) {
      worst = std::max(worst, std::fabs(got - want) / std::max(std::fabs(want), 1e-300));
      if (!close_rel(got, want, 1e-9)) ++bad_value;
    }
    if (std::fabs(metrics::cosine(b, a) - c) > 1e-12 || std::fabs(metrics::l1(b, a) - d1) > 1e-12 * d1 ||
        std::fabs(metrics::l2(b, a) - d2) > 1e-12 * d2) {
      ++bad_symmetry;
    }
    const double scale = 0.5 + 9.5 * (u(rng) + 1.0) / 2.0;
    std::vector<double> sa = a;
    for (auto& x : sa) x *= scale;
    if (std::fabs(metrics::cosine(sa, b) - c) > 1e-12) ++bad_scale;
    ++checked;
  }
  const double elapsed = seconds_since(start);
  v.require(bad_value == 0, std::to_string(bad_value) + " values outside 1e-9");
  v.require(bad_symmetry == 0, std::to_string(bad_symmetry) + " asymmetric pairs");
  v.require(bad_scale == 0, std::to_string(bad_scale) + " scale-variant cosines");
  v.require(elapsed < 10.0, "runtime over 10 s");
  if (v.pass) {
    v.detail << checked << " pairs, worst relative error " << worst << ", " << elapsed << " s";
  }
  return v;
}

// --- 2/3. ANN recall and latency ------------------------------------------

struct AnnRun {
  std::vector<std::pair<std::size_t, double>> recall;  // (ef, recall@10)
  double p95_ms_default = 0;
  double build_s = 0;
  double total_s = 0;
};

// Exact top-k by brute force over dot products (inputs are unit vectors).
std::vector<std::string> brute_top_k(const std::vector<Embedding>& data, const Embedding& q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    scored.emplace_back(naive_dot(data[i].components(), q.components()), i);
  }
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    [](const auto& x, const auto& y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back("v" + std::to_string(scored[i].second));
  return out;
}

AnnRun ann_run(const std::vector<Embedding>& data, const std::vector<Embedding>& queries) {
  AnnRun r;
  const auto start = Clock::now();
  ann::HnswIndex index(data.front().dim());
  for (std::size_t i = 0; i < data.size(); ++i) index.insert("v" + std::to_string(i), data[i]);
  r.build_s = seconds_since(start);

  std::vector<std::vector<std::string>> truth;
  for (const auto& q : queries) truth.push_back(brute_top_k(data, q, 10));

  for (std::size_t ef : {10, 50, 100, 200}) {
    std::size_t found = 0;
    std::vector<double> ms;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const auto t0 = Clock::now();
      const auto hits = index.search(queries[qi], 10, ef);
      ms.push_back(seconds_since(t0) * 1e3);
      const std::set<std::string> expected(truth[qi].begin(), truth[qi].end());
      for (const auto& h : hits) found += expected.count(h.id);
    }
    r.recall.emplace_back(ef, static_cast<double>(found) / (10.0 * static_cast<double>(queries.size())));
    if (ef == index.params().ef_search) {
      std::sort(ms.begin(), ms.end());
      r.p95_ms_default = ms[static_cast<std::size_t>(std::ceil(0.95 * ms.size())) - 1];
    }
  }
  r.total_s = seconds_since(start);
  return r;
}

std::string recall_list(const AnnRun& r) {
  std::ostringstream s;
  for (std::size_t i = 0; i < r.recall.size(); ++i) {
    if (i) s << " ";
    s << "ef=" << r.recall[i].first << ":" << r.recall[i].second;
  }
  return s.str();
}

Verdict ann_recall(const AnnRun& r) {
  Verdict v;
  double at100 = 0;
  bool monotone = true;
  for (std::size_t i = 0; i < r.recall.size(); ++i) {
    if (r.recall[i].first == 100) at100 = r.recall[i].second;
    if (i > 0 && r.recall[i].second < r.recall[i - 1].second) monotone = false;
  }
  v.require(at100 >= 0.95, "recall@10 at ef=100 is " + std::to_string(at100));
  v.require(monotone, "recall decreases with ef");
  v.require(r.total_s < 300.0, "runtime over 5 min");
  v.detail << (v.pass ? "" : "; ") << recall_list(r) << ", build " << r.build_s << " s, total " << r.total_s << " s";
  return v;
}

Verdict ann_latency(const AnnRun& r) {
  Verdict v;
  v.require(r.p95_ms_default < 10.0, "p95 is " + std::to_string(r.p95_ms_default) + " ms");
  v.detail << (v.pass ? "" : "; ") << "p95 " << r.p95_ms_default << " ms at ef=100 over 100 queries";
  return v;
}

// --- 4. encoder ----------------------------------------------------------------

Verdict encoder_contract() {
  Verdict v;
  const encoder::EncoderConfig cfg;
  const encoder::Encoder enc(cfg);
  std::string long_abstract;
  for (int i = 0; i < 1000; ++i) long_abstract += "word" + std::to_string(i) + " ";
  const encoder::EncodeRequest req{"x", {{PartKey::Title, "Airbag"}, {PartKey::Abstract, long_abstract}}};

  const auto e = enc.encode(req);
  v.require(e.dim() == 768, "dimension is " + std::to_string(e.dim()));

  const auto words = encoder::encoding_words(req, cfg);
  // 1.2 tokens per word, rounded up, computed here independently.
  auto tokens = [](std::size_t w) { return static_cast<std::size_t>(std::ceil(1.2 * static_cast<double>(w) - 1e-9)); };
  v.require(tokens(words.size()) <= 512, "kept " + std::to_string(words.size()) + " words, over 512 tokens");
  v.require(tokens(words.size() + 1) > 512, "truncation dropped more than needed");
  v.require(!words.empty() && words.front() == "airbag", "title words are not first");

  bool identical = true;
  for (int i = 0; i < 5; ++i) identical = identical && enc.encode(req).components() == e.components();
  auto again = req;
  again.id = "y";
  const std::vector<encoder::EncodeRequest> batch{req, again};
  for (const auto& o : enc.encode_batch(batch)) identical = identical && o.ok() && o.embedding->components() == e.components();
  v.require(identical, "repeat encodings differ");
  if (v.pass) v.detail << "dim 768, kept " << words.size() << " of 1001 words (" << tokens(words.size()) << " tokens), repeats bit-identical";
  return v;
}

// --- 5. end to end ---------------------------------------------------------------

void ingest_fixture(Engine& engine) {
  using etl::SourceFormat;
  etl::run_pipeline({CorpusId("semanticscholar"), SourceFormat::PublicationJsonl, kFixtures / "mixed" / "publications"}, engine);
  etl::run_pipeline({CorpusId("epo"), SourceFormat::PatentXml, kFixtures / "mixed" / "epo"}, engine);
  etl::run_pipeline({CorpusId("uspto"), SourceFormat::PatentXml, kFixtures / "mixed" / "uspto"}, engine);
}

const char* kAppendixDocument = R"({
  Document(index: "epo_cos", id: "EP19164094B1") {
    documentParts {
      title
    }
    vector
  }
})";

const char* kAppendixDocuments = R"(
query Documents($index: String!, $keyword: String!) {
  Documents(index: $index, keyword: $keyword) {
    id
    documentParts {
      title
    }
    vector
  }
}
)";

json part_list(const Document& d) {
  json parts = json::array();
  for (PartKey k : {PartKey::Title, PartKey::Abstract}) {
    if (const auto* p = d.part(k)) parts.push_back({{"key", std::string(to_string(k))}, {"value", *p}});
  }
  return parts;
}

Verdict end_to_end() {
  Verdict v;
  const auto start = Clock::now();
  ScratchDir dir("e2e");
  EngineConfig cfg;
  cfg.store_root = dir.path();
  Engine engine(cfg);
  ingest_fixture(engine);
  v.require(engine.store().size() == 100, "fixture holds " + std::to_string(engine.store().size()) + " documents");

  queryapi::ServerConfig scfg;
  scfg.port = 0;
  scfg.signing_key = "acceptance-key";
  queryapi::ApiServer server(engine, scfg);
  server.start();
  httplib::Client client("127.0.0.1", server.port());
  client.set_read_timeout(30, 0);
  const auto token = queryapi::mint_token(scfg.signing_key, "acceptance", std::chrono::seconds(600));
  const httplib::Headers auth{{"Authorization", "Bearer " + token}};

  auto post = [&](const std::string& query, const json& variables, const httplib::Headers& headers) {
    json body = {{"query", query}};
    if (!variables.is_null()) body["variables"] = variables;
    return client.Post("/api", headers, body.dump(), "application/json");
  };

  // (a) appendix-shaped projection.
  {
    const auto res = post(kAppendixDocument, nullptr, auth);
    const auto airbag = engine.document(CorpusId("epo"), "EP19164094B1");
    bool ok = res && res->status == 200 && airbag && airbag->embedding;
    if (ok) {
      const json expected = {{"data",
                              {{"Document",
                                {{"documentParts", {{"title", "Airbag"}}},
                                 {"vector", airbag->embedding->components()}}}}}};
      ok = json::parse(res->body) == expected && airbag->embedding->dim() == 768;
    }
    v.require(ok, "(a) Document projection");
    const auto batch = post(kAppendixDocuments,
                            json::array({{{"keyword", "EP19164094B1"}, {"index", "epo_cos"}},
                                         {{"keyword", "20130226771"}, {"index", "uspto_cos"}}}),
                            auth);
    bool batch_ok = batch && batch->status == 200;
    if (batch_ok) {
      const auto body = json::parse(batch->body);
      batch_ok = body.is_array() && body.size() == 2 &&
                 body[0]["data"]["Documents"][0]["id"] == "EP19164094B1" &&
                 body[1]["data"]["Documents"][0]["id"] == "20130226771" &&
                 body[1]["data"]["Documents"][0]["vector"].size() == 768;
    }
    v.require(batch_ok, "(a) Documents with a variables list");
  }

  // (b) a stored document's own text finds itself first.
  {
    std::size_t probes = 0, good = 0;
    double worst = 0;
    for (const auto& [corpus, id] : std::vector<std::pair<std::string, std::string>>{
             {"epo", "EP19164094B1"}, {"epo", "EP18007919B1"}, {"uspto", "20130226771"},
             {"semanticscholar", "S2-100000"}, {"semanticscholar", "S2-100031"}}) {
      const auto doc = engine.document(CorpusId(corpus), id);
      if (!doc) continue;
      ++probes;
      const auto res = post("query q($d: EncodeObject!, $i: String!) { embedDocumentAndSimilaritySearch(data: $d, index: $i, k: 5) { id score } }",
                            {{"d", {{"parts", part_list(*doc)}}}, {"i", CorpusId(corpus).index_name()}}, auth);
      if (!res || res->status != 200) continue;
      const auto hits = json::parse(res->body)["data"]["embedDocumentAndSimilaritySearch"];
      if (hits.empty()) continue;
      const double score = hits[0]["score"].get<double>();
      worst = std::max(worst, std::fabs(score - 1.0));
      if (hits[0]["id"] == id && std::fabs(score - 1.0) <= 1e-6) ++good;
    }
    v.require(probes == 5 && good == probes, "(b) self-search " + std::to_string(good) + "/" + std::to_string(probes));
  }

  // (c) 2x2 similarity matrix against the oracle.
  {
    const std::vector<std::pair<std::string, std::string>> src{{"epo", "EP19164094B1"}, {"uspto", "20130226771"}};
    const std::vector<std::pair<std::string, std::string>> dst{{"semanticscholar", "S2-100000"}, {"epo", "EP18015838B1"}};
    auto keys = [](const auto& list) {
      json out = json::array();
      for (const auto& [c, id] : list) out.push_back({{"index", c + "_cos"}, {"id", id}});
      return out;
    };
    bool ok = true;
    for (const char* metric : {"cosine", "l1", "l2"}) {
      const auto res = post("query q($s: [DocumentKey!]!, $t: [DocumentKey!]!, $m: Metric) { similarityCalculation(sources: $s, targets: $t, metric: $m) { metric values } }",
                            {{"s", keys(src)}, {"t", keys(dst)}, {"m", metric}}, auth);
      if (!res || res->status != 200) {
        ok = false;
        continue;
      }
      const auto values = json::parse(res->body)["data"]["similarityCalculation"]["values"];
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
          const auto a = engine.document(CorpusId(src[i].first), src[i].second)->embedding->components();
          const auto b = engine.document(CorpusId(dst[j].first), dst[j].second)->embedding->components();
          const double want = std::string(metric) == "cosine" ? naive_cosine(a, b)
                              : std::string(metric) == "l1"   ? naive_l1(a, b)
                                                              : naive_l2(a, b);
          ok = ok && values.size() == 2 && close_rel(values[i][j].get<double>(), want, 1e-9);
        }
      }
    }
    v.require(ok, "(c) similarity matrix");
  }

  // (d) + (e): every operation answers when authenticated and refuses otherwise.
  const json data = {{"id", "probe"}, {"parts", {{{"key", "title"}, {"value", "Airbag"}}}}};
  const json other = {{"id", "probe2"}, {"parts", {{{"key", "title"}, {"value", "Seat belt"}}}}};
  const std::vector<std::pair<std::string, json>> ops = {
      {R"({ Document(index: "epo_cos", id: "EP19164094B1") { id } })", nullptr},
      {R"({ Documents(index: "uspto_cos", ids: ["20130226771"]) { id } })", nullptr},
      {R"({ searchDocuments(keyword: "airbag", k: 3) { id score } })", nullptr},
      {"query q($d: EncodeObject!) { encodeDocument(data: $d) }", {{"d", data}}},
      {"query q($d: [EncodeObject!]!) { encodeDocuments(data: $d) { id vector } }", {{"d", {data}}}},
      {R"({ similarityCalculation(sources: [{index: "epo_cos", id: "EP19164094B1"}], targets: [{index: "uspto_cos", id: "20130226771"}]) { values } })",
       nullptr},
      {"query q($d: [EncodeObject!]!) { encodeDocumentAndSimilarityCalculation(data: $d) { values } }", {{"d", {data, other}}}},
      {R"({ SimilaritySearch(index: "epo_cos", id: "EP19164094B1", k: 3) { id } })", nullptr},
      {"query q($d: EncodeObject!) { embedDocumentAndSimilaritySearch(data: $d, index: \"semanticscholar_cos\", k: 3) { id } }",
       {{"d", data}}},
  };
  std::size_t answered = 0, refused = 0, attempts = 0;
  std::string unanswered;
  const auto expired = queryapi::mint_token(scfg.signing_key, "late", std::chrono::seconds(0));
  const auto forged = queryapi::mint_token("some-other-key", "eve", std::chrono::seconds(600));
  const std::vector<httplib::Headers> unauthenticated = {
      {}, {{"Authorization", "Bearer " + expired}}, {{"Authorization", "Bearer " + forged}},
      {{"Authorization", "Basic dXNlcjpwdw=="}}, {{"Authorization", "Bearer not.a.token"}}};
  for (const auto& [query, vars] : ops) {
    const auto res = post(query, vars, auth);
    if (res && res->status == 200) {
      const auto body = json::parse(res->body);
      if (!body.contains("errors") && body.contains("data")) {
        const auto& value = body["data"].begin().value();
        if (!value.is_null() && !(value.is_array() && value.empty())) ++answered;
        else unanswered += " " + body["data"].begin().key();
      } else {
        unanswered += " " + (res ? res->body : std::string("no response"));
      }
    } else {
      unanswered += " " + (res ? std::to_string(res->status) + ":" + res->body : std::string("no response"));
    }
    for (const auto& headers : unauthenticated) {
      ++attempts;
      const auto denied = post(query, vars, headers);
      if (denied && denied->status == 401) ++refused;
    }
  }
  v.require(answered == 9, "(d) " + std::to_string(answered) + "/9 operations answered" +
                                  (unanswered.empty() ? "" : ", not:" + unanswered));
  v.require(refused == attempts, "(e) " + std::to_string(refused) + "/" + std::to_string(attempts) + " unauthenticated requests refused");
  server.stop();

  const double elapsed = seconds_since(start);
  v.require(elapsed < 60.0, "runtime over 60 s");
  if (v.pass) {
    v.detail << "(a)-(c) ok, " << answered << "/9 operations, " << refused << "/" << attempts << " refusals, " << elapsed
             << " s";
  }
  return v;
}

// --- 6. parser -------------------------------------------------------------------

Verdict parser_round_trip() {
  Verdict v;
  for (const char* text : {kAppendixDocument, kAppendixDocuments}) {
    try {
      const auto ast = queryapi::parse_query(text);
      const auto printed = queryapi::print_query(ast);
      v.require(queryapi::print_query(queryapi::parse_query(printed)) == printed, "print is not a fixpoint");
      const json vars = ast.variables.empty() ? json(nullptr) : json{{"index", "epo_cos"}, {"keyword", "EP19164094B1"}};
      const auto bound = queryapi::bind_variables(ast, vars);
      v.require(bound.args.contains("index"), "variables not bound");
    } catch (const Error& e) {
      v.require(false, std::string("appendix query rejected: ") + e.what());
    }
  }

  const std::string base = kAppendixDocuments;
  auto replace = [&](const std::string& from, const std::string& to) {
    auto s = base;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  const std::vector<std::string> negatives = {
      base.substr(0, base.rfind('}')),                              // unbalanced braces
      replace("Documents(index", "Documnets(index"),                // misspelled operation
      replace("index: $index", "index $index"),                     // missing colon
      replace("$keyword: String!)", "$keyword: String!"),           // unclosed variable list
      replace("id\n", "...DocFields\n"),                            // fragment spread
      replace("query Documents", "mutation Documents"),             // unsupported operation type
      replace("keyword: $keyword", "keyword: \"EP1"),               // unterminated string
      replace("documentParts {", "documentParts {{"),               // stray brace
      replace("id\n", "alias: id\n"),                               // alias
      replace("vector\n  }\n}", "vector\n  }\n  Document(index: \"a\", id: \"b\") { id }\n}"),  // two operations
  };
  std::size_t positioned = 0;
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    try {
      queryapi::parse_query(negatives[i]);
      v.require(false, "mutation " + std::to_string(i) + " accepted");
    } catch (const queryapi::QueryError& e) {
      const bool code_ok = e.code() == ErrorCode::SyntaxError || e.code() == ErrorCode::UnknownOperation;
      const auto p = e.position();
      std::size_t lines = std::count(negatives[i].begin(), negatives[i].end(), '\n') + 1;
      const bool pos_ok = p.line >= 1 && p.column >= 1 && static_cast<std::size_t>(p.line) <= lines;
      v.require(code_ok && pos_ok, "mutation " + std::to_string(i) + " gave " + std::string(to_string(e.code())));
      if (code_ok && pos_ok) ++positioned;
    } catch (const Error& e) {
      v.require(false, "mutation " + std::to_string(i) + " unpositioned " + std::string(to_string(e.code())));
    }
  }
  if (v.pass) v.detail << "2 appendix queries at fixpoint, " << positioned << "/10 mutations rejected with positions";
  return v;
}

// --- 7. durability ---------------------------------------------------------------

Document numbered_doc(int i) {
  Document d;
  d.corpus = CorpusId("epo");
  d.id = "EPK" + std::to_string(100000 + i);
  d.parts = {{PartKey::Title, "Crash test document " + std::to_string(i)}};
  std::vector<double> vec(8, 0.0);
  vec[static_cast<std::size_t>(i) % 8] = 1.0;
  d.embedding = Embedding(std::move(vec));
  return d;
}

Verdict durability() {
  Verdict v;

  // Idempotent re-ingest.
  {
    ScratchDir dir("ingest");
    EngineConfig cfg;
    cfg.store_root = dir.path();
    cfg.store.sync = false;
    Engine engine(cfg);
    ingest_fixture(engine);
    auto counts = [&] {
      std::vector<std::size_t> c;
      for (const auto& corpus : engine.corpora()) {
        c.push_back(engine.store().size(corpus));
        c.push_back(engine.indexed_count(corpus));
        c.push_back(engine.keyword_index().document_count(corpus));
      }
      return c;
    };
    const auto before = counts();
    std::vector<std::vector<Document>> docs_before;
    for (const auto& corpus : engine.corpora()) docs_before.push_back(engine.store().scan(corpus));
    ingest_fixture(engine);
    std::vector<std::vector<Document>> docs_after;
    for (const auto& corpus : engine.corpora()) docs_after.push_back(engine.store().scan(corpus));
    v.require(counts() == before && docs_before == docs_after, "re-ingest changed the store or indexes");
  }

  // SIGKILL after acknowledged puts.
  std::size_t acked = 0;
  {
    ScratchDir dir("kill");
    int fds[2];
    if (::pipe(fds) != 0) {
      v.require(false, "pipe");
      return v;
    }
    const pid_t child = ::fork();
    if (child == 0) {
      ::close(fds[0]);
      try {
        store::StoreOptions opts;
        opts.dim = 8;
        store::Store s(dir.path(), opts);
        for (int i = 0;; ++i) {
          s.put(numbered_doc(i));
          const std::int32_t n = i;
          if (::write(fds[1], &n, sizeof n) != sizeof n) ::_exit(3);
        }
      } catch (...) {
        ::_exit(4);
      }
    }
    ::close(fds[1]);
    std::int32_t last = -1, n = 0;
    while (last < 299 && ::read(fds[0], &n, sizeof n) == sizeof n) last = n;
    ::kill(child, SIGKILL);
    int status = 0;
    ::waitpid(child, &status, 0);
    // Acks still in the pipe were also committed before being written.
    while (::read(fds[0], &n, sizeof n) == sizeof n) last = n;
    ::close(fds[0]);
    acked = static_cast<std::size_t>(last + 1);

    try {
      store::StoreOptions opts;
      opts.dim = 8;
      store::Store s(dir.path(), opts);
      std::size_t lost = 0;
      for (int i = 0; i <= last; ++i) {
        const auto d = s.get(CorpusId("epo"), numbered_doc(i).id);
        if (!d || *d != numbered_doc(i)) ++lost;
      }
      v.require(WIFSIGNALED(status), "writer was not killed");
      v.require(acked >= 300, "only " + std::to_string(acked) + " acknowledged puts");
      v.require(lost == 0, std::to_string(lost) + " acknowledged documents lost");
      s.put(numbered_doc(100000));
    } catch (const Error& e) {
      v.require(false, std::string("reopen after kill: ") + e.what());
    }
  }

  // Snapshot / restore over 50 probe queries.
  std::size_t identical = 0;
  {
    ScratchDir dir("snap");
    EngineConfig cfg;
    cfg.store_root = dir.path();
    cfg.store.sync = false;
    std::vector<Embedding> probes = ann::random_unit_vectors(40, 768, 99);
    std::vector<std::vector<std::vector<ann::SearchHit>>> before;
    const std::vector<CorpusId> corpora{CorpusId("epo"), CorpusId("semanticscholar"), CorpusId("uspto")};
    {
      Engine engine(cfg);
      ingest_fixture(engine);
      for (const auto& id : {"EP19164094B1", "EP18007919B1", "EP18015838B1", "EP18023757B1", "EP18031676B1"}) {
        probes.push_back(*engine.document(CorpusId("epo"), id)->embedding);
      }
      for (int i = 0; i < 5; ++i) {
        probes.push_back(*engine.document(CorpusId("semanticscholar"), "S2-1000" + std::to_string(10 + i))->embedding);
      }
      for (const auto& c : corpora) {
        std::vector<std::vector<ann::SearchHit>> per;
        for (const auto& p : probes) per.push_back(engine.ann_index(c)->search(p, 10));
        before.push_back(std::move(per));
      }
      engine.save_snapshots();
    }
    bool restored_ok = true;
    for (std::size_t ci = 0; ci < corpora.size(); ++ci) {
      std::ifstream in(Engine::snapshot_path(dir.path(), corpora[ci]), std::ios::binary);
      const std::string bytes{std::istreambuf_iterator<char>(in), {}};
      try {
        const auto index = ann::HnswIndex::restore(bytes);
        for (std::size_t pi = 0; pi < probes.size(); ++pi) {
          if (index.search(probes[pi], 10) == before[ci][pi]) ++identical;
        }
      } catch (const Error& e) {
        restored_ok = false;
      }
    }
    Engine reopened(cfg);
    std::size_t engine_identical = 0;
    for (std::size_t ci = 0; ci < corpora.size(); ++ci) {
      for (std::size_t pi = 0; pi < probes.size(); ++pi) {
        if (reopened.ann_index(corpora[ci])->search(probes[pi], 10) == before[ci][pi]) ++engine_identical;
      }
    }
    const std::size_t expected = corpora.size() * probes.size();
    v.require(restored_ok && probes.size() == 50 && identical == expected,
              "restored index matched " + std::to_string(identical) + "/" + std::to_string(expected));
    v.require(engine_identical == expected, "reopened engine matched " + std::to_string(engine_identical));
  }
  if (v.pass) {
    v.detail << "re-ingest unchanged, " << acked << " acked puts survived SIGKILL, " << identical
             << " probe results identical after restore";
  }
  return v;
}

int report(int number, const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  std::cout << (v.pass ? "PASS" : "FAIL") << " [" << number << "] " << name << ": " << v.detail.str() << std::endl;
  return v.pass ? 0 : 1;
}

}  // namespace

// With no arguments every criterion runs; otherwise only the numbered ones.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return only.empty() || only.contains(n); };

  int failures = 0;
  if (wanted(1)) failures += report(1, "metric oracle", metric_oracle);

  if (wanted(2) || wanted(3)) {
    const ann::LatentCorpusModel model(768);
    const auto latent = ann_run(model.sample(20000, 1), model.sample(100, 2));
    if (wanted(2)) failures += report(2, "ANN recall@10 on 20k x 768", [&] { return ann_recall(latent); });
    if (wanted(3)) failures += report(3, "ANN p95 latency", [&] { return ann_latency(latent); });
  }

  if (wanted(4)) failures += report(4, "encoder contract", encoder_contract);
  if (wanted(5)) failures += report(5, "end to end over HTTP", end_to_end);
  if (wanted(6)) failures += report(6, "query parser", parser_round_trip);
  if (wanted(7)) failures += report(7, "durability and idempotence", durability);

  if (only.empty()) {
    // Not a criterion: the same sweep on isotropic random vectors, which have
    // no meaningful neighbourhood structure in 768 dimensions.
    const auto uniform = ann_run(ann::random_unit_vectors(20000, 768, 1), ann::random_unit_vectors(100, 768, 2));
    std::cout << "INFO uniform random 20k x 768: " << recall_list(uniform) << ", p95 " << uniform.p95_ms_default
              << " ms" << std::endl;
  }

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
