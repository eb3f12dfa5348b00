// keysig: command-line driver for labeling, keyphrase extraction, oracle
// construction, LLM summarization runs, and evaluation.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "keysig/http_client.hpp"
#include "keysig/keysig.hpp"

namespace fs = std::filesystem;
using namespace keysig;

namespace {

struct DatasetOptions {
  std::string dataset;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  std::size_t max_tokens = 4000;
  std::string stopwords;
  std::size_t jobs = 1;
};

void add_dataset_options(CLI::App* cmd, DatasetOptions& o, bool with_jobs = true) {
  cmd->add_option("--dataset", o.dataset, "Dataset JSONL ({id, source, summary, meta})")
      ->required();
  cmd->add_option("--sample", o.sample, "Use a seeded random subset of N records (0 = all)")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for --sample and the random scorer")
      ->capture_default_str();
  cmd->add_option("--max-tokens", o.max_tokens,
                  "Truncate sources to this many whitespace-delimited tokens")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--stopwords", o.stopwords,
                  "Stopword file, one token per line (default: built-in English list)");
  if (with_jobs)
    cmd->add_option("--jobs", o.jobs, "Worker threads for per-document work")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

StopwordSet stopwords_for(const DatasetOptions& o) {
  return o.stopwords.empty() ? StopwordSet::english() : StopwordSet::from_file(o.stopwords);
}

Dataset load_input(const DatasetOptions& o, bool truncate = true) {
  Dataset ds = load_dataset(o.dataset);
  if (o.sample > 0) ds = sample_subset(ds, o.sample, o.seed);
  return truncate ? truncate_dataset(std::move(ds), o.max_tokens) : ds;
}

// The resolved options of the active subcommand, readable back via --config.
void write_resolved_config(const CLI::App& cmd, const fs::path& out) {
  fs::path sidecar = out;
  sidecar += ".config.ini";
  write_file(sidecar, "[" + cmd.get_name() + "]\n" + cmd.config_to_str(true, false));
}

const std::map<std::string, Granularity> kGranularities{
    {"word", Granularity::word}, {"phrase", Granularity::phrase}, {"sentence", Granularity::sentence}};
const std::map<std::string, PhraseOrder> kOrders{{"score", PhraseOrder::score},
                                                 {"position", PhraseOrder::position}};

// An enumerated option that keeps the spelled name in its results, so the
// resolved config records "textrank" rather than the enum's ordinal.
template <typename Var, typename T>
CLI::Option* choice(CLI::App* cmd, const std::string& name, Var& var,
                    const std::map<std::string, T>& values, const std::string& desc) {
  std::vector<std::string> names;
  for (const auto& entry : values) names.push_back(entry.first);
  std::string type;
  for (const auto& n : names) type += (type.empty() ? "" : ",") + n;
  auto* opt = cmd->add_option_function<std::string>(
      name, [&var, values](const std::string& v) { var = values.at(v); }, desc);
  opt->check(CLI::IsMember(names).description(""))->type_name("{" + type + "}");
  for (const auto& [n, value] : values) {
    if constexpr (std::is_same_v<Var, T>) {
      if (value == var) opt->default_str(n);
    }
  }
  return opt;
}

// ---------------------------------------------------------------------------

struct LabelCmd {
  DatasetOptions data;
  Granularity granularity = Granularity::phrase;
  double epsilon = kDefaultEpsilon;
  std::string out;
};

int run_label(const CLI::App& app, const LabelCmd& c) {
  const MatchConfig cfg{c.epsilon};
  cfg.validate();
  const Dataset ds = load_input(c.data);
  const auto report =
      emit_training_records(ds, c.granularity, cfg, stopwords_for(c.data), c.out, c.data.jobs);
  write_resolved_config(app, c.out);
  std::cerr << "wrote " << report.written << " training records to " << c.out;
  if (report.skipped_empty_summary)
    std::cerr << " (warning: skipped " << report.skipped_empty_summary
              << " records with empty summary)";
  std::cerr << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

enum class ScorerKind { external, textrank, rake, random };
const std::map<std::string, ScorerKind> kScorers{{"external", ScorerKind::external},
                                                 {"textrank", ScorerKind::textrank},
                                                 {"rake", ScorerKind::rake},
                                                 {"random", ScorerKind::random}};

struct ScorerOptions {
  std::optional<ScorerKind> scorer;
  std::string scores;
  TextRankParams textrank;
  bool rake_native = false;
};

void add_scorer_options(CLI::App* cmd, ScorerOptions& o, bool required) {
  auto* opt = choice(cmd, "--scorer", o.scorer, kScorers, "Token scorer");
  if (required) opt->required();
  cmd->add_option("--scores", o.scores, "Logits JSONL for --scorer external");
  cmd->add_option("--window", o.textrank.window, "TextRank co-occurrence window")
      ->capture_default_str();
  cmd->add_option("--damping", o.textrank.damping, "TextRank damping factor")
      ->capture_default_str();
  cmd->add_option("--iters", o.textrank.iters, "TextRank maximum iterations")
      ->capture_default_str();
  cmd->add_option("--tol", o.textrank.tol, "TextRank convergence tolerance")
      ->capture_default_str();
  cmd->add_flag("--rake-native", o.rake_native,
                "Rank phrases by the sum of token scores instead of the mean");
}

void validate_scorer(const ScorerOptions& o) {
  if (o.scorer == ScorerKind::external && o.scores.empty())
    throw UsageError("--scorer external requires --scores");
  if (o.scorer != ScorerKind::external && !o.scores.empty())
    throw UsageError("--scores is only valid with --scorer external");
  o.textrank.validate();
}

std::unique_ptr<ScoreSource> make_scorer(const ScorerOptions& o, const StopwordSet& sw,
                                         std::uint64_t seed) {
  switch (*o.scorer) {
    case ScorerKind::external:
      return std::make_unique<ExternalScoreSource>(load_external_scores(o.scores), sw);
    case ScorerKind::textrank: return std::make_unique<TextRankSource>(o.textrank, sw);
    case ScorerKind::rake: return std::make_unique<RakeSource>(sw);
    case ScorerKind::random: return std::make_unique<RandomSource>(seed, sw);
  }
  throw UsageError("unknown scorer");
}

struct ExtractCmd {
  DatasetOptions data;
  ScorerOptions scorer;
  std::size_t k = kDefaultK;
  double epsilon = kDefaultEpsilon;
  Granularity granularity = Granularity::phrase;
  PhraseOrder order = PhraseOrder::score;
  std::string out;
};

int run_extract(const CLI::App& app, const ExtractCmd& c) {
  validate_scorer(c.scorer);
  MatchConfig{c.epsilon}.validate();
  const Dataset ds = load_input(c.data);
  const StopwordSet sw = stopwords_for(c.data);
  const auto source = make_scorer(c.scorer, sw, c.data.seed);
  const SelectionOptions sel{c.k, MatchConfig{c.epsilon}, c.granularity,
                             c.scorer.rake_native ? Aggregation::sum : Aggregation::mean,
                             c.order};
  struct Result {
    KeyphraseRecord record;
    std::size_t missing = 0;
  };
  const auto results = parallel_map(ds.size(), c.data.jobs, [&](std::size_t i) {
    Result r;
    const auto set = extract_keyphrases(ds[i], *source, sel, sw, &r.missing);
    r.record = to_record(ds[i].id, set, c.order);
    return r;
  });
  std::vector<KeyphraseRecord> records;
  std::size_t missing = 0;
  for (const auto& r : results) {
    records.push_back(r.record);
    missing += r.missing;
  }
  write_keyphrases(records, c.out);
  write_resolved_config(app, c.out);
  std::cerr << "wrote keyphrases for " << records.size() << " documents to " << c.out << "\n";
  if (missing) std::cerr << "warning: " << missing << " token scores missing, defaulted to 0\n";
  return 0;
}

// ---------------------------------------------------------------------------

enum class OracleMode { source, external };

struct OracleCmd {
  DatasetOptions data;
  OracleMode mode = OracleMode::source;
  Granularity granularity = Granularity::phrase;
  double epsilon = kDefaultEpsilon;
  std::string out;
};

int run_oracle(const CLI::App& app, const OracleCmd& c) {
  const MatchConfig cfg{c.epsilon};
  cfg.validate();
  const Dataset ds = load_input(c.data);
  const StopwordSet sw = stopwords_for(c.data);
  const auto records = parallel_map(ds.size(), c.data.jobs, [&](std::size_t i) {
    const DocumentPair& doc = ds[i];
    const auto source = segment(doc.source, c.granularity, sw);
    const auto summary = segment(doc.summary, c.granularity, sw);
    KeyphraseRecord rec{doc.id, {}, {}};
    if (c.mode == OracleMode::source) {
      for (const auto& m : oracle_matches(source, summary)) {
        rec.keyphrases.push_back(source[m.source_index].surface);
        rec.scores.push_back(m.score);
      }
    } else {
      for (const auto& m : external_oracle_matches(source, summary, cfg)) {
        rec.keyphrases.push_back(summary[m.summary_index].surface);
        rec.scores.push_back(m.score);
      }
    }
    return rec;
  });
  write_keyphrases(records, c.out);
  write_resolved_config(app, c.out);
  std::cerr << "wrote oracle keyphrases for " << records.size() << " documents to " << c.out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EndpointOptions {
  std::string config;
  std::string url;
  double failure_cap = 0.1;
  std::size_t max_new_tokens = 512;
  double temperature = 0.0;
};

void add_endpoint_options(CLI::App* cmd, EndpointOptions& o) {
  cmd->add_option("--endpoint", o.config,
                  "Endpoint config JSON {base_url, model_id, auth_env_var, timeout_s, retries, "
                  "max_in_flight}");
  cmd->add_option("--endpoint-url", o.url,
                  "Endpoint base URL; overrides the config file (mock://... runs offline)");
  cmd->add_option("--failure-cap", o.failure_cap,
                  "Fail the run when more than this fraction of documents fail")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--max-new-tokens", o.max_new_tokens, "Completion length limit")
      ->capture_default_str();
  cmd->add_option("--temperature", o.temperature, "Sampling temperature")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

LLMEndpointConfig resolve_endpoint(const EndpointOptions& o) {
  if (o.config.empty() && o.url.empty())
    throw UsageError("one of --endpoint or --endpoint-url is required");
  LLMEndpointConfig cfg;
  if (!o.config.empty()) cfg = load_endpoint_config(o.config);
  if (!o.url.empty()) cfg.base_url = o.url;
  cfg.validate();
  return cfg;
}

RunOptions run_options(const DatasetOptions& d, const EndpointOptions& e,
                       const LLMEndpointConfig& cfg) {
  RunOptions r;
  r.max_tokens = d.max_tokens;
  r.failure_cap = e.failure_cap;
  r.jobs = std::max(d.jobs, cfg.max_in_flight);
  r.request_defaults.max_tokens = e.max_new_tokens;
  r.request_defaults.temperature = e.temperature;
  return r;
}

void print_report(const RunReport& r, const std::string& out) {
  std::cerr << "wrote " << r.written << " of " << r.documents << " summaries to " << out << " ("
            << r.completion_calls << " completion calls, mean length " << r.mean_summary_words
            << " words)\n";
  for (const auto& f : r.failures) std::cerr << "failed: " << f.id << ": " << f.message << "\n";
}

struct RunCmd {
  DatasetOptions data;
  EndpointOptions endpoint;
  ScorerOptions scorer;
  std::string templ;
  std::string keyphrases;
  std::size_t k = kDefaultK;
  double epsilon = kDefaultEpsilon;
  Granularity granularity = Granularity::phrase;
  PhraseOrder order = PhraseOrder::score;
  std::string out;
};

int run_run(const CLI::App& app, const RunCmd& c) {
  const LLMEndpointConfig endpoint = resolve_endpoint(c.endpoint);
  if (c.scorer.scorer && !c.keyphrases.empty())
    throw UsageError("--scorer and --keyphrases are mutually exclusive");
  if (c.scorer.scorer) validate_scorer(c.scorer);
  MatchConfig{c.epsilon}.validate();
  const PromptTemplate tpl = load_template(c.templ);
  const bool have_source = c.scorer.scorer.has_value() || !c.keyphrases.empty();
  if (tpl.expects_keyphrases() && !have_source)
    throw UsageError("template " + c.templ + " expects keyphrases; give --scorer or --keyphrases");
  if (!tpl.expects_keyphrases() && have_source)
    throw UsageError("template " + c.templ + " has no keyphrase placeholder");

  const Dataset ds = load_input(c.data, false);
  const StopwordSet sw = stopwords_for(c.data);
  std::unique_ptr<ScoreSource> source;
  std::optional<KeyphraseProvider> provider;
  std::vector<KeyphraseRecord> records;
  if (c.scorer.scorer) {
    source = make_scorer(c.scorer, sw, c.data.seed);
    provider = scorer_provider(
        *source,
        SelectionOptions{c.k, MatchConfig{c.epsilon}, c.granularity,
                         c.scorer.rake_native ? Aggregation::sum : Aggregation::mean, c.order},
        sw);
  } else if (!c.keyphrases.empty()) {
    records = load_keyphrases(c.keyphrases);
    provider = file_provider(records, c.k);
  }
  auto client = make_client(endpoint);
  const RunOptions opts = run_options(c.data, c.endpoint, endpoint);
  write_resolved_config(app, c.out);
  const RunReport report = run_summarization(ds, tpl, provider, *client, opts, c.out);
  print_report(report, c.out);
  return 0;
}

struct TwoStageCmd {
  DatasetOptions data;
  EndpointOptions endpoint;
  std::string extract_tpl;
  std::string abstract_tpl;
  std::string out;
};

int run_two_stage(const CLI::App& app, const TwoStageCmd& c) {
  const LLMEndpointConfig endpoint = resolve_endpoint(c.endpoint);
  const PromptTemplate extract = load_template(c.extract_tpl);
  const PromptTemplate abstract = load_template(c.abstract_tpl);
  const Dataset ds = load_input(c.data, false);
  auto client = make_client(endpoint);
  write_resolved_config(app, c.out);
  const RunReport report =
      two_stage_summarize(ds, extract, abstract, *client, run_options(c.data, c.endpoint, endpoint),
                          c.out);
  print_report(report, c.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalCmd {
  std::string run;
  std::string dataset;
  std::string keyphrases;
  std::string oracle;
  std::vector<std::size_t> ks{kDefaultK};
  double epsilon = kDefaultEpsilon;
  std::string out;
};

int run_eval(const EvalCmd& c) {
  if (c.run.empty() && c.keyphrases.empty())
    throw UsageError("nothing to evaluate: give --run and/or --keyphrases with --oracle");
  if (c.keyphrases.empty() != c.oracle.empty())
    throw UsageError("--keyphrases and --oracle must be given together");
  EvalOptions opts;
  if (!c.keyphrases.empty()) {
    opts.keyphrases = c.keyphrases;
    opts.oracle = c.oracle;
  }
  opts.ks = c.ks;
  opts.match.epsilon = c.epsilon;
  opts.match.validate();
  const Dataset ds = load_dataset(c.dataset);
  std::vector<RunOutputRecord> outputs;
  if (!c.run.empty()) outputs = load_run_output(c.run);
  const EvalReport report = evaluate_run(std::span<const RunOutputRecord>(outputs), ds, opts);
  std::cout << format_table(report);
  if (!report.flags.empty())
    std::cerr << "flagged documents: " << report.flags.size() << " (see report flags)\n";
  if (!c.out.empty()) write_file(c.out, to_json(report).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyphrase signals for prompt-based summarization", "keysig"};
  app.set_config("--config", "", "Read options from an INI/TOML file; command-line flags win");
  app.require_subcommand(1);

  LabelCmd label;
  auto* label_cmd = app.add_subcommand("label", "Build salience-labeled training records");
  add_dataset_options(label_cmd, label.data);
  choice(label_cmd, "--granularity", label.granularity, kGranularities,
         "Segmentation unit for phrases");
  label_cmd->add_option("--epsilon", label.epsilon, "Fuzzy match threshold in (0, 1]")
      ->capture_default_str();
  label_cmd->add_option("--out", label.out, "Training-record JSONL to write")->required();

  ExtractCmd extract;
  auto* extract_cmd = app.add_subcommand("extract", "Select top-K keyphrases per document");
  add_dataset_options(extract_cmd, extract.data);
  add_scorer_options(extract_cmd, extract.scorer, true);
  extract_cmd->add_option("--k", extract.k, "Keyphrases per document (35 suits long documents)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  extract_cmd->add_option("--epsilon", extract.epsilon, "Fuzzy de-duplication threshold")
      ->capture_default_str();
  choice(extract_cmd, "--granularity", extract.granularity, kGranularities,
         "Segmentation unit for phrases");
  choice(extract_cmd, "--order", extract.order, kOrders, "Output order");
  extract_cmd->add_option("--out", extract.out, "Keyphrase JSONL to write")->required();

  OracleCmd oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Build oracle keyphrases from references");
  add_dataset_options(oracle_cmd, oracle.data);
  const std::map<std::string, OracleMode> modes{{"source", OracleMode::source},
                                                 {"external", OracleMode::external}};
  choice(oracle_cmd, "--mode", oracle.mode, modes,
         "source: best-matching source phrases; external: summary phrases "
         "absent from the source");
  choice(oracle_cmd, "--granularity", oracle.granularity, kGranularities,
         "Segmentation unit for phrases");
  oracle_cmd->add_option("--epsilon", oracle.epsilon, "Match threshold for --mode external")
      ->capture_default_str();
  oracle_cmd->add_option("--out", oracle.out, "Keyphrase JSONL to write")->required();

  RunCmd run;
  auto* run_cmd = app.add_subcommand("run", "Summarize a dataset with an LLM");
  add_dataset_options(run_cmd, run.data);
  add_endpoint_options(run_cmd, run.endpoint);
  add_scorer_options(run_cmd, run.scorer, false);
  run_cmd->add_option("--template", run.templ, "Prompt template file")->required();
  run_cmd->add_option("--keyphrases", run.keyphrases,
                      "Precomputed keyphrase JSONL (e.g. from extract or oracle)");
  run_cmd->add_option("--k", run.k, "Keyphrases per prompt")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--epsilon", run.epsilon, "Fuzzy de-duplication threshold")
      ->capture_default_str();
  choice(run_cmd, "--granularity", run.granularity, kGranularities,
         "Segmentation unit for phrases");
  choice(run_cmd, "--order", run.order, kOrders, "Keyphrase order in the prompt");
  run_cmd->add_option("--out", run.out, "Run-output JSONL to write")->required();

  TwoStageCmd two;
  auto* two_cmd =
      app.add_subcommand("run-two-stage", "Extract-then-abstract baseline (two LLM passes)");
  add_dataset_options(two_cmd, two.data);
  add_endpoint_options(two_cmd, two.endpoint);
  two_cmd->add_option("--extract-template", two.extract_tpl, "Pass-1 template")->required();
  two_cmd->add_option("--abstract-template", two.abstract_tpl, "Pass-2 template")->required();
  two_cmd->add_option("--out", two.out, "Run-output JSONL to write")->required();

  EvalCmd eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score summaries (ROUGE) and keyphrases (recall@K)");
  eval_cmd->add_option("--run", eval.run, "Run-output JSONL");
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset JSONL with reference summaries")
      ->required();
  eval_cmd->add_option("--keyphrases", eval.keyphrases, "Predicted keyphrase JSONL");
  eval_cmd->add_option("--oracle", eval.oracle, "Oracle keyphrase JSONL");
  eval_cmd->add_option("--k", eval.ks, "Cutoffs for recall@K (comma separated)")
      ->delimiter(',')
      ->default_str(std::to_string(kDefaultK));
  eval_cmd->add_option("--epsilon", eval.epsilon, "Fuzzy match threshold for recall@K")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Report JSON to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (*label_cmd) return run_label(*label_cmd, label);
    if (*extract_cmd) return run_extract(*extract_cmd, extract);
    if (*oracle_cmd) return run_oracle(*oracle_cmd, oracle);
    if (*run_cmd) return run_run(*run_cmd, run);
    if (*two_cmd) return run_two_stage(*two_cmd, two);
    if (*eval_cmd) return run_eval(eval);
  } catch (const keysig::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::data);
  }
  return static_cast<int>(ExitCode::usage);
}
