// sshala: serve the annotation API, train and evaluate models, export sessions.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sanskritshala/embeddings.hpp"
#include "sanskritshala/service.hpp"

namespace fs = std::filesystem;
using namespace sshala;

namespace {

httplib::Server* g_server = nullptr;

Resources load_resources(const fs::path& data) {
  return Resources::load(data / "translit.tsv", data / "sandhi_rules.tsv", data / "lexicon.tsv", data / "labels.txt");
}

ServiceConfig load_config(const std::string& file) {
  ServiceConfig c = file.empty() ? ServiceConfig{} : ServiceConfig::load(file);
  c.apply_env();
  return c;
}

void write_report(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + out);
  f << j.dump(2) << "\n";
}

int serve(const std::string& config) {
  Service svc = Service::from_config(load_config(config));
  const ServiceConfig c = load_config(config);
  httplib::Server srv;
  svc.install(srv);
  g_server = &srv;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "listening on " << c.host << ":" << c.port << "\n";
  if (!srv.listen(c.host, c.port)) {
    std::cerr << "cannot listen on " << c.host << ":" << c.port << "\n";
    return 1;
  }
  return 0;
}

void train(const std::string& task, const fs::path& data, const fs::path& out, std::uint64_t seed) {
  const Resources r = load_resources(data);
  const DemoCorpora c = DemoCorpora::in(data);
  auto target = [&](const char* name) { return fs::is_directory(out) || task == "all" ? out / name : out; };
  if (task == "all") fs::create_directories(out);
  if (task == "segment" || task == "all") train_demo_segmenter(r, c, seed).save(target("segmenter.bin"));
  if (task == "morph" || task == "all") train_demo_tagger(r, c, seed).save(target("tagger.bin"));
  if (task == "parse" || task == "all") train_demo_parser(r, c, seed).save(target("parser.bin"));
  if (task == "compound" || task == "all") train_demo_compound(r, c, seed).save(target("compound.bin"));
  if (task == "embeddings") {
    SkipGramConfig sc;
    sc.seed = seed;
    save_vectors(out, train_skipgram(load_text_corpus(data / "embeddings" / "corpus.txt"), sc));
  }
}

json evaluate_task(const std::string& task, const fs::path& data, const fs::path& model, const fs::path& corpus) {
  const Resources r = load_resources(data);
  const DemoCorpora c = DemoCorpora::in(data);
  if (task == "segment") {
    const auto m = SegModel::load(model, r.rules);
    std::vector<SegExample> ex;
    for (const auto& s : load_seg_corpus(corpus.empty() ? c.segmentation : corpus, r.tr)) {
      ex.push_back(SegExample::make(s, r.lexicon, r.rules, m.config().max_word_len));
    }
    return evaluate_segmenter(m, ex).report;
  }
  if (task == "morph") {
    return evaluate_tagger(TagModel::load(model), load_treebank(corpus.empty() ? c.treebank : corpus, r.tr), r.lexicon)
        .to_json();
  }
  if (task == "parse") {
    return evaluate_parser(ParserModel::load(model), load_treebank(corpus.empty() ? c.treebank : corpus, r.tr)).to_json();
  }
  if (task == "compound") {
    return evaluate_compound(CompoundModel::load(model),
                             load_compound_corpus(corpus.empty() ? c.compounds : corpus, r.tr, r.rules), r.rules)
        .to_json();
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown task '" + task + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SanskritShala analysis toolkit"};
  app.require_subcommand(1);
  const std::string default_data = SSHALA_DATA_DIR;

  std::string config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/JSON annotation service");
  serve_cmd->add_option("-c,--config", config, "Service config file (JSON)")->check(CLI::ExistingFile);

  std::string task, data = default_data, out, model, corpus;
  std::uint64_t seed = 1;
  auto* train_cmd = app.add_subcommand("train", "Train a model on the bundled corpora");
  train_cmd->add_option("task", task, "segment | morph | parse | compound | embeddings | all")
      ->required()
      ->check(CLI::IsMember({"segment", "morph", "parse", "compound", "embeddings", "all"}));
  train_cmd->add_option("-d,--data", data, "Data directory");
  train_cmd->add_option("-o,--out", out, "Output model file (directory for 'all')")->required();
  train_cmd->add_option("--seed", seed, "Random seed");

  std::vector<std::string> inventories;
  std::string vectors;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model and print a JSON report");
  eval_cmd->add_option("task", task, "segment | morph | parse | compound | embeddings")
      ->required()
      ->check(CLI::IsMember({"segment", "morph", "parse", "compound", "embeddings"}));
  eval_cmd->add_option("-d,--data", data, "Data directory");
  eval_cmd->add_option("-m,--model", model, "Model file")->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", corpus, "Evaluation corpus (defaults to the bundled one)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--vectors", vectors, "Vector file for 'embeddings'")->check(CLI::ExistingFile);
  eval_cmd->add_option("--inventory", inventories, "Query inventories for 'embeddings'")->check(CLI::ExistingFile);
  eval_cmd->add_option("-o,--out", out, "Write the report here instead of stdout");

  std::string session_id, format = "conllu";
  auto* export_cmd = app.add_subcommand("export-session", "Export an annotation session");
  export_cmd->add_option("id", session_id, "Session id")->required();
  export_cmd->add_option("-c,--config", config, "Service config file (JSON)")->check(CLI::ExistingFile);
  export_cmd->add_option("-f,--format", format, "conllu | json");
  export_cmd->add_option("-o,--out", out, "Output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(config);
    if (*train_cmd) {
      train(task, data, out, seed);
      std::cerr << "wrote " << out << "\n";
      return 0;
    }
    if (*eval_cmd) {
      if (task == "embeddings") {
        if (vectors.empty() || inventories.empty()) throw Error(ErrorCode::kInvalidArgument, "--vectors and --inventory are required");
        const auto table = load_vectors(vectors);
        json reports = json::array();
        for (const auto& inv : inventories) reports.push_back(evaluate(table, load_inventory(inv)).to_json());
        write_report(reports, out);
        return 0;
      }
      if (model.empty()) throw Error(ErrorCode::kInvalidArgument, "--model is required");
      write_report(evaluate_task(task, data, model, corpus), out);
      return 0;
    }
    if (*export_cmd) {
      const ServiceConfig c = load_config(config);
      SessionStore store(c.session_dir);
      if (format != "conllu" && format != "json") throw Error(ErrorCode::kFormatUnsupported, "'" + format + "'");
      const Session s = store.get(session_id);
      const std::string doc = format == "conllu" ? to_conllu_string({export_conllu(s)}) : export_json(s).dump(2) + "\n";
      if (out.empty()) {
        std::cout << doc;
      } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw Error(ErrorCode::kIoError, "cannot write " + out);
        f << doc;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
