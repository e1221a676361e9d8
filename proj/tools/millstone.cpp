// millstone: ingest corpora, serve the query API, run the ANN benchmark,
// mint API tokens and write index snapshots.
//
// Exit codes: 0 success, 1 partial failure (data errors), 2 fatal
// configuration or I/O error.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "millstone/cli_config.hpp"
#include "millstone/engine.hpp"
#include "millstone/etl.hpp"
#include "millstone/queryapi/auth.hpp"
#include "millstone/queryapi/server.hpp"

namespace {

using namespace millstone;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kFatal = 2;

struct Common {
  std::string config_path;
  std::string store_root;
  std::string addr;
  std::string signing_key;
  std::string encoder_url;
  int workers = -1;
  bool quiet = false;
};

cli::CliConfig load_config(const Common& common) {
  cli::Settings file;
  if (!common.config_path.empty()) file = cli::read_config_file(common.config_path);
  const auto env = cli::env_settings([](const char* name) { return std::getenv(name); });
  cli::Settings flags;
  if (!common.store_root.empty()) flags["store_root"] = common.store_root;
  if (!common.addr.empty()) flags["addr"] = common.addr;
  if (!common.signing_key.empty()) flags["signing_key"] = common.signing_key;
  if (!common.encoder_url.empty()) flags["encoder_url"] = common.encoder_url;
  if (common.workers >= 0) flags["workers"] = std::to_string(common.workers);
  auto config = cli::resolve_config(file, env, flags);
  if (!common.quiet) std::cerr << "effective configuration:\n" << cli::describe(config);
  return config;
}

EngineConfig engine_config(const cli::CliConfig& c) {
  EngineConfig e;
  e.store_root = c.store_root;
  e.encoder = c.encoder;
  e.hnsw = c.hnsw;
  e.store.dim = c.encoder.dim;
  return e;
}

int fail(const Error& e) {
  std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
  return kFatal;
}

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string corpus;
  std::string format;
  std::string source;
  bool incremental = false;
};

int cmd_ingest(const Common& common, const IngestArgs& args) {
  try {
    const auto config = load_config(common);
    etl::SourceSpec spec{CorpusId(args.corpus), etl::parse_format(args.format), args.source, std::nullopt};
    spec.validate();
    Engine engine(engine_config(config));
    etl::PipelineOptions options;
    options.workers = config.workers;

    etl::PipelineReport report;
    etl::Watermark mark;
    if (args.incremental) {
      std::tie(report, mark) =
          etl::incremental_update(spec, engine, etl::read_watermark(config.store_root, spec.corpus), options);
    } else {
      // Taken before the run so files arriving meanwhile are picked up by the
      // next --incremental run.
      mark = etl::latest_watermark(spec);
      report = etl::run_pipeline(spec, engine, options);
    }
    engine.save_snapshots();
    if (!mark.empty()) etl::write_watermark(config.store_root, spec.corpus, mark);
    std::cout << report.to_json().dump(2) << std::endl;
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::StorageFull ? kPartial : kFatal;
  }
}

// --- serve ------------------------------------------------------------------

int cmd_serve(const Common& common) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  // Blocked before any thread starts so only sigwait below sees them.
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  try {
    const auto config = load_config(common);
    if (config.signing_key.empty()) {
      std::cerr << "error: no signing key configured (MILLSTONE_SIGNING_KEY or --signing-key)\n";
      return kFatal;
    }
    Engine engine(engine_config(config));
    queryapi::ApiServer server(engine, {config.host, config.port, config.signing_key, config.threads});
    const int port = server.bind();
    server.start();
    std::cout << "listening on " << config.host << ":" << port << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "signal " << sig << ": shutting down\n";
    server.stop();
    return kOk;
  } catch (const Error& e) {
    return fail(e);
  }
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
  std::size_t n = 20000;
  std::size_t queries = 100;
  std::size_t k = 10;
  std::vector<std::size_t> ef = {10, 50, 100, 200};
  std::uint64_t seed = 1;
  std::size_t dim = kDefaultDim;
  std::string distribution = "latent";
  std::size_t m = 16;
  std::size_t ef_construction = 200;
};

int cmd_bench(const BenchArgs& args) {
  try {
    ann::RecallBenchConfig cfg;
    cfg.n = args.n;
    cfg.queries = args.queries;
    cfg.k = args.k;
    cfg.ef_values = args.ef;
    cfg.seed = args.seed;
    cfg.dim = args.dim;
    cfg.distribution =
        args.distribution == "uniform" ? ann::BenchDistribution::Uniform : ann::BenchDistribution::Latent;
    cfg.hnsw = ann::HnswParams::for_m(args.m);
    cfg.hnsw.ef_construction = args.ef_construction;
    cfg.hnsw.validate();
    const auto result = ann::run_recall_bench(cfg);
    std::cerr << "built " << cfg.n << " vectors in " << result.build_seconds << " s\n";
    std::cout << ann::recall_csv(result.rows) << std::flush;
    return kOk;
  } catch (const Error& e) {
    return fail(e);
  }
}

// --- token ------------------------------------------------------------------

struct TokenArgs {
  std::string subject;
  long long ttl = 3600;
  std::vector<std::string> scopes = {"query"};
};

int cmd_token(Common common, const TokenArgs& args) {
  try {
    common.quiet = true;
    const auto config = load_config(common);
    if (config.signing_key.empty()) {
      std::cerr << "error: no signing key configured (MILLSTONE_SIGNING_KEY or --signing-key)\n";
      return kFatal;
    }
    std::cout << queryapi::mint_token(config.signing_key, args.subject, std::chrono::seconds(args.ttl), args.scopes)
              << std::endl;
    return kOk;
  } catch (const Error& e) {
    return fail(e);
  }
}

// --- snapshot ---------------------------------------------------------------

int cmd_snapshot(const Common& common) {
  try {
    const auto config = load_config(common);
    Engine engine(engine_config(config));
    engine.save_snapshots();
    json summary = json::array();
    for (const auto& corpus : engine.corpora()) {
      summary.push_back({{"index", corpus.index_name()},
                         {"documents", engine.store().size(corpus)},
                         {"indexed", engine.indexed_count(corpus)},
                         {"snapshot", Engine::snapshot_path(config.store_root, corpus).string()}});
    }
    std::cout << summary.dump(2) << std::endl;
    return kOk;
  } catch (const Error& e) {
    return fail(e);
  }
}

void add_common(CLI::App& app, Common& common) {
  app.add_option("--config", common.config_path, "key=value configuration file");
  app.add_option("--store-root", common.store_root, "store directory (env MILLSTONE_STORE_ROOT)");
  app.add_option("--encoder-url", common.encoder_url, "remote encoder endpoint (env MILLSTONE_ENCODER_URL)");
  app.add_option("--workers", common.workers, "ETL worker threads, 0 = all cores");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"millstone: document similarity search over patents and publications"};
  app.require_subcommand(1);

  Common common;

  auto* ingest = app.add_subcommand("ingest", "load a source into the store and indexes");
  IngestArgs ingest_args;
  add_common(*ingest, common);
  ingest->add_option("--corpus", ingest_args.corpus, "corpus name, e.g. epo or semanticscholar")->required();
  ingest->add_option("--format", ingest_args.format, "publication_jsonl or patent_xml")->required();
  ingest->add_option("--source", ingest_args.source, "file or directory to read")->required();
  ingest->add_flag("--incremental", ingest_args.incremental, "only files newer than the stored watermark");

  auto* serve = app.add_subcommand("serve", "serve the query API until SIGINT/SIGTERM");
  add_common(*serve, common);
  serve->add_option("--addr", common.addr, "host:port to listen on (env MILLSTONE_ADDR)");
  serve->add_option("--signing-key", common.signing_key, "token signing key (env MILLSTONE_SIGNING_KEY)");

  auto* bench = app.add_subcommand("bench", "ANN recall/latency sweep on a seeded synthetic corpus (CSV)");
  BenchArgs bench_args;
  bench->add_option("--n", bench_args.n, "corpus size")->capture_default_str();
  bench->add_option("--queries", bench_args.queries, "query count")->capture_default_str();
  bench->add_option("--k", bench_args.k, "neighbors per query")->capture_default_str();
  bench->add_option("--ef", bench_args.ef, "ef_search values")->delimiter(',')->capture_default_str();
  bench->add_option("--seed", bench_args.seed, "corpus seed; queries use seed+1")->capture_default_str();
  bench->add_option("--dim", bench_args.dim, "vector dimension")->capture_default_str();
  bench->add_option("--distribution", bench_args.distribution, "latent or uniform")
      ->check(CLI::IsMember({"latent", "uniform"}))
      ->capture_default_str();
  bench->add_option("--m", bench_args.m, "HNSW m")->capture_default_str();
  bench->add_option("--ef-construction", bench_args.ef_construction, "HNSW ef_construction")->capture_default_str();

  auto* token = app.add_subcommand("token", "mint a signed API token");
  TokenArgs token_args;
  token->add_option("--config", common.config_path, "key=value configuration file");
  token->add_option("--signing-key", common.signing_key, "token signing key (env MILLSTONE_SIGNING_KEY)");
  token->add_option("--subject", token_args.subject, "token subject")->required();
  token->add_option("--ttl", token_args.ttl, "lifetime in seconds")->check(CLI::NonNegativeNumber)->capture_default_str();
  token->add_option("--scope", token_args.scopes, "scopes")->capture_default_str();

  auto* snapshot = app.add_subcommand("snapshot", "write ANN snapshots for every corpus and print a summary");
  add_common(*snapshot, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kFatal;
  }

  if (*ingest) return cmd_ingest(common, ingest_args);
  if (*serve) return cmd_serve(common);
  if (*bench) return cmd_bench(bench_args);
  if (*token) return cmd_token(common, token_args);
  if (*snapshot) return cmd_snapshot(common);
  return kFatal;
}
