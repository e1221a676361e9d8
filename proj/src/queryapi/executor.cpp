#include <algorithm>

#include "millstone/metrics.hpp"
#include "millstone/queryapi/executor.hpp"

namespace millstone::queryapi {

using nlohmann::json;
using metrics::SimilarityMatrix;
using metrics::pairwise;

namespace {

constexpr std::int64_t kMaxK = 1000;

json part_object(const Document& doc) {
  json parts = json::object();
  for (PartKey key : {PartKey::Title, PartKey::Abstract, PartKey::Claims, PartKey::Description}) {
    const auto* p = doc.part(key);
    parts[std::string(to_string(key))] = p ? json(*p) : json(nullptr);
  }
  return parts;
}

json vector_json(const Embedding& e) { return json(e.components()); }

json document_value(const Document& doc, std::optional<double> score = std::nullopt) {
  return {
      {"id", doc.id},
      {"index", doc.corpus.index_name()},
      {"score", score ? json(*score) : json(nullptr)},
      {"documentParts", part_object(doc)},
      {"metadata", doc.metadata},
      {"vector", doc.embedding ? vector_json(*doc.embedding) : json(nullptr)},
  };
}

std::size_t k_arg(const json& args) {
  const auto& k = args.contains("k") && !args["k"].is_null() ? args["k"] : json(10);
  const auto v = k.get<std::int64_t>();
  if (v < 1 || v > kMaxK) {
    throw Error(ErrorCode::InvalidArgument, "k must be between 1 and " + std::to_string(kMaxK));
  }
  return static_cast<std::size_t>(v);
}

std::optional<std::string> opt_string(const json& args, const char* name) {
  auto it = args.find(name);
  if (it == args.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

encoder::EncodeRequest encode_request(const json& obj, std::string fallback_id) {
  encoder::EncodeRequest req;
  req.id = obj.contains("id") && !obj["id"].is_null() ? obj["id"].get<std::string>() : std::move(fallback_id);
  for (const auto& p : obj.at("parts")) {
    const auto key_text = p.at("key").get<std::string>();
    const auto key = parse_part_key(key_text);
    if (!key) {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown part key '" + key_text + "' (expected title, abstract, claims or description)");
    }
    req.parts.push_back({*key, p.at("value").get<std::string>()});
  }
  return req;
}

SimilarityMetric metric_arg(const json& args) {
  const auto m = opt_string(args, "metric");
  return parse_metric(m.value_or("cosine"));
}

json matrix_json(const SimilarityMatrix& m, const json& sources, const json& targets) {
  json values = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m.at(r, c));
    values.push_back(std::move(row));
  }
  return {{"metric", std::string(to_string(m.metric))}, {"sources", sources}, {"targets", targets},
          {"values", std::move(values)}};
}

class Runner {
 public:
  Runner(const BoundRequest& req, const Engine& engine, ExecutionResult& result)
      : req_(req), args_(req.args), engine_(engine), result_(result), op_(req.op->name) {}

  json run() {
    if (op_ == "Document") return document();
    if (op_ == "Documents") return documents();
    if (op_ == "searchDocuments") return search_documents();
    if (op_ == "encodeDocument") return encode_document();
    if (op_ == "encodeDocuments") return encode_documents();
    if (op_ == "similarityCalculation") return similarity_calculation();
    if (op_ == "encodeDocumentAndSimilarityCalculation") return encode_and_calculate();
    if (op_ == "SimilaritySearch") return similarity_search();
    if (op_ == "embedDocumentAndSimilaritySearch") return embed_and_search();
    throw Error(ErrorCode::UnknownOperation, "unknown operation '" + op_ + "'");
  }

 private:
  json document() {
    const auto corpus = engine_.resolve_index(args_.at("index").get<std::string>());
    const auto id = args_.at("id").get<std::string>();
    auto doc = engine_.document(corpus, id);
    if (!doc) throw Error(ErrorCode::NotFound, "no document '" + id + "' in index " + corpus.index_name());
    return document_value(*doc);
  }

  json documents() {
    std::vector<DocumentKey> keys;
    if (auto it = args_.find("keys"); it != args_.end() && !it->is_null()) {
      for (const auto& k : *it) {
        keys.push_back({engine_.resolve_index(k.at("index").get<std::string>()), k.at("id").get<std::string>()});
      }
    } else {
      const auto index = opt_string(args_, "index");
      if (!index) throw Error(ErrorCode::MissingArgument, "Documents requires 'keys' or 'index'");
      const auto corpus = engine_.resolve_index(*index);
      bool any = false;
      if (auto kw = opt_string(args_, "keyword")) {
        keys.push_back({corpus, *kw});
        any = true;
      }
      if (auto ids = args_.find("ids"); ids != args_.end() && !ids->is_null()) {
        for (const auto& id : *ids) keys.push_back({corpus, id.get<std::string>()});
        any = true;
      }
      if (!any) throw Error(ErrorCode::MissingArgument, "Documents requires 'keyword' or 'ids' with 'index'");
    }
    json out = json::array();
    for (const auto& [key, doc] : engine_.store().get_many(keys)) {
      out.push_back(doc ? document_value(*doc) : json(nullptr));
    }
    return out;
  }

  json search_documents() {
    std::optional<CorpusId> corpus;
    if (auto index = opt_string(args_, "index")) corpus = engine_.resolve_index(*index);
    const auto hits = engine_.keyword_index().search(args_.at("keyword").get<std::string>(), corpus, k_arg(args_));
    json out = json::array();
    for (const auto& h : hits) {
      if (auto doc = engine_.document(h.key.corpus, h.key.id)) out.push_back(document_value(*doc, h.score));
    }
    return out;
  }

  json encode_document() {
    const auto req = encode_request(args_.at("data"), "");
    return vector_json(engine_.encoder().encode(req));
  }

  json encode_documents() {
    std::vector<encoder::EncodeRequest> reqs;
    const auto& data = args_.at("data");
    for (std::size_t i = 0; i < data.size(); ++i) reqs.push_back(encode_request(data[i], std::to_string(i)));
    const auto outcomes = engine_.encoder().encode_batch(reqs);
    json out = json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& o = outcomes[i];
      if (o.ok()) {
        out.push_back({{"id", o.id}, {"vector", vector_json(*o.embedding)}});
      } else {
        out.push_back(nullptr);
        result_.errors.push_back(ApiError::from(*o.error, json::array({op_, i})));
      }
    }
    return out;
  }

  struct Resolved {
    std::vector<Embedding> embeddings;
    std::vector<std::string> labels;
    json refs = json::array();
  };

  Resolved resolve_stored(const char* which) {
    Resolved r;
    const auto& list = args_.at(which);
    if (list.empty()) throw Error(ErrorCode::EmptyInput, std::string(which) + " must not be empty");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto index = list[i].at("index").get<std::string>();
      const auto id = list[i].at("id").get<std::string>();
      const auto path = json::array({op_, which, i});
      try {
        const auto corpus = engine_.resolve_index(index);
        auto doc = engine_.document(corpus, id);
        if (!doc) throw Error(ErrorCode::NotFound, "no document '" + id + "' in index " + index);
        if (!doc->embedding) {
          throw Error(ErrorCode::MissingEmbedding, "document '" + id + "' in index " + index + " has no embedding");
        }
        r.embeddings.push_back(*doc->embedding);
      } catch (const Error& e) {
        error_path_ = path;
        throw;
      }
      r.labels.push_back(index + "/" + id);
      r.refs.push_back({{"index", index}, {"id", id}});
    }
    return r;
  }

  json similarity_calculation() {
    const auto metric = metric_arg(args_);
    const auto sources = resolve_stored("sources");
    const auto targets = resolve_stored("targets");
    const auto m = pairwise(sources.embeddings, targets.embeddings, metric, sources.labels, targets.labels);
    return matrix_json(m, sources.refs, targets.refs);
  }

  json encode_and_calculate() {
    const auto metric = metric_arg(args_);
    const auto& data = args_.at("data");
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "data must not be empty");
    std::vector<encoder::EncodeRequest> reqs;
    for (std::size_t i = 0; i < data.size(); ++i) reqs.push_back(encode_request(data[i], std::to_string(i)));
    const auto outcomes = engine_.encoder().encode_batch(reqs);
    std::vector<Embedding> embeddings;
    std::vector<std::string> labels;
    json refs = json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (!outcomes[i].ok()) {
        error_path_ = json::array({op_, "data", i});
        throw *outcomes[i].error;
      }
      embeddings.push_back(*outcomes[i].embedding);
      labels.push_back(outcomes[i].id);
      refs.push_back({{"index", nullptr}, {"id", outcomes[i].id}});
    }
    return matrix_json(pairwise(embeddings, embeddings, metric, labels, labels), refs, refs);
  }

  json hits_json(const std::vector<ann::SearchHit>& hits) {
    json out = json::array();
    for (const auto& h : hits) {
      if (auto doc = engine_.document(h.index, h.id)) out.push_back(document_value(*doc, h.score));
    }
    return out;
  }

  std::vector<ann::SearchHit> nearest(const CorpusId& target, const Embedding& query, std::size_t k,
                                      const std::optional<std::string>& exclude) {
    const auto* index = engine_.ann_index(target);
    if (!index || index->size() == 0) return {};
    const std::size_t want = k + (exclude ? 1 : 0);
    const std::size_t ef = std::max(engine_.config().hnsw.ef_search, want);
    auto hits = index->search(query.normalized(), want, ef);
    if (exclude) std::erase_if(hits, [&](const ann::SearchHit& h) { return h.id == *exclude; });
    if (hits.size() > k) hits.resize(k);
    return hits;
  }

  json similarity_search() {
    const auto corpus = engine_.resolve_index(args_.at("index").get<std::string>());
    const auto id = args_.at("id").get<std::string>();
    const auto target_name = opt_string(args_, "targetIndex");
    const auto target = target_name ? engine_.resolve_index(*target_name) : corpus;
    const std::size_t k = k_arg(args_);
    auto doc = engine_.document(corpus, id);
    if (!doc) throw Error(ErrorCode::NotFound, "no document '" + id + "' in index " + corpus.index_name());
    if (!doc->embedding) {
      throw Error(ErrorCode::MissingEmbedding, "document '" + id + "' in index " + corpus.index_name() +
                                                   " has no embedding");
    }
    const auto exclude = target == corpus ? std::optional<std::string>(id) : std::nullopt;
    return hits_json(nearest(target, *doc->embedding, k, exclude));
  }

  json embed_and_search() {
    const auto target = engine_.resolve_index(args_.at("index").get<std::string>());
    const std::size_t k = k_arg(args_);
    const auto query = engine_.encoder().encode(encode_request(args_.at("data"), ""));
    return hits_json(nearest(target, query, k, std::nullopt));
  }

 public:
  json error_path_ = nullptr;

 private:
  const BoundRequest& req_;
  const json& args_;
  const Engine& engine_;
  ExecutionResult& result_;
  std::string op_;
};

json project_object(const json& value, const Field& field, const ObjectType& type) {
  json out = json::object();
  for (const auto& sub : field.selection) {
    auto it = value.find(sub.name);
    const json v = it == value.end() ? json(nullptr) : *it;
    const OutputField* f = type.field(sub.name);
    if (!sub.has_selection || v.is_null() || !f) {
      out[sub.name] = v;
    } else if (f->open) {
      json picked = json::object();
      for (const auto& key : sub.selection) {
        auto k = v.find(key.name);
        picked[key.name] = k == v.end() ? json(nullptr) : *k;
      }
      out[sub.name] = std::move(picked);
    } else {
      out[sub.name] = project(v, sub, f->object);
    }
  }
  return out;
}

}  // namespace

json project(const json& value, const Field& field, const ObjectType* type) {
  if (!type || !field.has_selection || value.is_null()) return value;
  if (value.is_array()) {
    json out = json::array();
    for (const auto& item : value) out.push_back(project(item, field, type));
    return out;
  }
  return project_object(value, field, *type);
}

json ApiError::to_json() const {
  json j = {{"code", std::string(to_string(code))}, {"message", message}, {"path", path}};
  if (location) j["locations"] = json::array({{{"line", location->line}, {"column", location->column}}});
  return j;
}

ApiError ApiError::from(const Error& e, json path) {
  ApiError a{e.code(), e.what(), std::move(path), std::nullopt};
  if (const auto* q = dynamic_cast<const QueryError*>(&e)) a.location = q->position();
  return a;
}

json ExecutionResult::envelope(const std::string& operation) const {
  json env = json::object();
  const bool failed = data.is_null() && !errors.empty();
  if (!failed) env["data"] = {{operation, data}};
  if (!errors.empty()) {
    json list = json::array();
    for (const auto& e : errors) list.push_back(e.to_json());
    env["errors"] = std::move(list);
  }
  if (!warnings.empty()) env["extensions"] = {{"warnings", warnings}};
  return env;
}

ExecutionResult execute(const BoundRequest& request, const Engine& engine) {
  ExecutionResult result;
  result.warnings = request.warnings;
  Runner runner(request, engine, result);
  try {
    const json full = runner.run();
    result.data = project(full, request.root, request.op->result);
  } catch (const Error& e) {
    result.data = nullptr;
    json path = runner.error_path_.is_null() ? json::array({request.op->name}) : runner.error_path_;
    result.errors.push_back(ApiError::from(e, std::move(path)));
  } catch (const std::exception& e) {
    result.data = nullptr;
    result.errors.push_back({ErrorCode::Internal, e.what(), json::array({request.op->name}), std::nullopt});
  }
  return result;
}

namespace {

json error_envelope(const Error& e) { return {{"errors", json::array({ApiError::from(e).to_json()})}}; }

bool is_request_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::SyntaxError:
    case ErrorCode::UnknownOperation:
    case ErrorCode::UnknownField:
    case ErrorCode::UnknownArgument:
    case ErrorCode::MissingArgument:
    case ErrorCode::MissingVariable:
    case ErrorCode::TypeMismatch:
      return true;
    default:
      return false;
  }
}

}  // namespace

ApiResponse handle_api_request(std::string_view body, const Engine& engine) {
  const json request = json::parse(body, nullptr, false);
  if (request.is_discarded() || !request.is_object()) {
    return {400, error_envelope(Error(ErrorCode::SyntaxError, "request body must be a JSON object"))};
  }
  auto q = request.find("query");
  if (q == request.end() || !q->is_string()) {
    return {400, error_envelope(Error(ErrorCode::SyntaxError, "request needs a string 'query'"))};
  }
  QueryAst ast;
  try {
    ast = parse_query(q->get<std::string>());
  } catch (const Error& e) {
    return {400, error_envelope(e)};
  }
  const json variables = request.value("variables", json(nullptr));

  auto run_one = [&](const json& vars) -> ApiResponse {
    try {
      const auto bound = bind_variables(ast, vars);
      return {200, execute(bound, engine).envelope(ast.operation())};
    } catch (const Error& e) {
      return {is_request_error(e.code()) ? 400 : 200, error_envelope(e)};
    }
  };

  if (!variables.is_array()) return run_one(variables);
  ApiResponse batch{200, json::array()};
  for (const auto& vars : variables) batch.body.push_back(run_one(vars).body);
  return batch;
}

}  // namespace millstone::queryapi
