// fragflow command-line entry point.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "fragflow/corpus.hpp"
#include "fragflow/external_oracle.hpp"
#include "fragflow/metrics.hpp"
#include "fragflow/optimizer.hpp"
#include "fragflow/run_config.hpp"
#include "fragflow/smiles.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace fragflow;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kChemistry = 4, kDivergence = 5, kOracle = 6 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
};

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  cfg.apply_overrides(c.overrides);
  return cfg;
}

fs::path prepare_out(const Common& c) {
  fs::path out(c.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void finish(RunConfig& cfg, const fs::path& out, const std::string& command) {
  cfg.set("command", command);
  cfg.save((out / "resolved_config.txt").string());
}

std::vector<std::string> read_required(const std::string& path) {
  try {
    return read_lines(path);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse list item '" + item + "' in '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

// Everything `train` writes and later subcommands read back.
struct Model {
  Vocab vocab;
  DenoiserParams<double> params;
  std::vector<std::string> fragments;
  LengthDist lengths;
  FrequencyTable table;
};

Model load_model(RunConfig& cfg) {
  const fs::path dir = cfg.get("model", "model");
  for (const char* f : {"vocab.txt", "params.bin", "fragments.txt", "frequency.txt"})
    if (!fs::exists(dir / f)) throw IoError("model directory " + dir.string() + " lacks " + f);
  try {
    Vocab vocab = Vocab::load((dir / "vocab.txt").string());
    auto params = load_params((dir / "params.bin").string());
    auto fragments = read_lines((dir / "fragments.txt").string());
    LengthDist lengths = length_distribution(fragments, vocab);
    return {std::move(vocab), std::move(params), std::move(fragments), lengths,
            FrequencyTable::load((dir / "frequency.txt").string())};
  } catch (const ParamsIoError& e) {
    throw IoError(e.what());
  }
}

SampleConfig sample_config(RunConfig& cfg, const Model& m) {
  SampleConfig sc;
  sc.mode = parse_sample_mode(cfg.get("mode", "velocity"));
  sc.h = cfg.get_double("h", 0.01);
  sc.T0 = cfg.get_double("T0", 1.0);
  sc.r = cfg.get_double("r", 0.0);
  sc.length = static_cast<int>(cfg.get_int("length", 0));
  if (sc.length == 0) sc.length_dist = m.lengths;
  return sc;
}

std::unique_ptr<PropertyScorer> property_scorer(RunConfig& cfg, const FrequencyTable* table) {
  const std::string qed_cmd = cfg.get("qed_command", "");
  const std::string sa_cmd = cfg.get("sa_command", "");
  if (qed_cmd.empty() != sa_cmd.empty()) throw ConfigError("qed_command and sa_command must be given together");
  if (!qed_cmd.empty()) return std::make_unique<ExternalProperties>(qed_cmd, sa_cmd, cfg.get_double("oracle_timeout", 60.0));
  return std::make_unique<SurrogateProperties>(table);
}

// ---- subcommands ----------------------------------------------------------

int cmd_corpus_gen(const Common& c) {
  RunConfig cfg = resolve(c);
  const fs::path out = prepare_out(c);
  CorpusOptions o;
  o.count = static_cast<int>(cfg.get_int("count", 5000));
  o.min_tokens = static_cast<int>(cfg.get_int("min_tokens", 8));
  o.max_tokens = static_cast<int>(cfg.get_int("max_tokens", 40));
  o.seed = cfg.get_u64("seed", 0);
  const auto corpus = generate_corpus(o);
  write_lines((out / "corpus.smi").string(), corpus);
  finish(cfg, out, "corpus-gen");
  std::cout << "wrote " << corpus.size() << " molecules to " << (out / "corpus.smi").string() << '\n';
  return kOk;
}

int cmd_train(const Common& c) {
  RunConfig cfg = resolve(c);
  const fs::path out = prepare_out(c);
  const auto smiles = read_required(cfg.get("corpus", "corpus.smi"));
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const auto fragments = fragment_corpus(smiles, FragRuleSet::defaults(), seed);
  const Vocab vocab = build_vocab(fragments);
  std::vector<TokenSeq> seqs;
  for (const auto& f : fragments) seqs.push_back(encode(f, vocab));

  Rng rng(seed);
  auto params = init_params<double>(vocab.size(), static_cast<int>(cfg.get_int("dim", 64)), static_cast<int>(cfg.get_int("blocks", 2)),
                                    rng);
  TrainConfig tc;
  tc.epochs = static_cast<int>(cfg.get_int("epochs", 5));
  tc.batch_size = static_cast<int>(cfg.get_int("batch_size", 16));
  tc.samples_per_sequence = static_cast<int>(cfg.get_int("samples_per_sequence", 1));
  tc.lr = cfg.get_double("lr", 1e-3);
  tc.weight_decay = cfg.get_double("weight_decay", 0.01);
  tc.holdout_fraction = cfg.get_double("holdout_fraction", 0.05);
  const TrainReport report = train(params, seqs, tc, rng);

  FrequencyTable table;
  for (const auto& s : smiles) table.add(parse_smiles(s));
  vocab.save((out / "vocab.txt").string());
  save_params(params, (out / "params.bin").string());
  write_lines((out / "fragments.txt").string(), fragments);
  table.save((out / "frequency.txt").string());
  std::ofstream log(out / "train_log.csv");
  log << "step,loss\n";
  for (std::size_t i = 0; i < report.batch_losses.size(); ++i) log << i << ',' << report.batch_losses[i] << '\n';
  finish(cfg, out, "train");
  std::cout << "trained " << report.steps << " steps; holdout loss " << report.initial_holdout_loss << " -> "
            << report.final_holdout_loss << '\n';
  return kOk;
}

void write_samples(const fs::path& out, std::span<const std::string> texts) {
  write_lines((out / "samples_raw.txt").string(), texts);
  std::vector<std::string> valid;
  for (const auto& t : texts)
    if (auto g = decode_molecule(t)) valid.push_back(write_smiles(*g));
  write_lines((out / "samples.smi").string(), valid);
  std::cout << valid.size() << "/" << texts.size() << " valid samples\n";
}

int cmd_sample(const Common& c) {
  RunConfig cfg = resolve(c);
  const fs::path out = prepare_out(c);
  Model m = load_model(cfg);
  SampleConfig sc = sample_config(cfg, m);
  const std::string prompt = cfg.get("prompt", "");
  if (!prompt.empty()) {
    sc.mask = mask_from_prompt(prompt, m.vocab);
    sc.length = sc.mask->length();
    sc.length_dist.reset();
  }
  const NeuralDenoiser model(m.params);
  const auto texts = sample_texts(model, m.vocab, sc, static_cast<int>(cfg.get_int("n", 100)), cfg.get_u64("seed", 0));
  write_samples(out, texts);
  finish(cfg, out, "sample");
  return kOk;
}

int cmd_eval_denovo(const Common& c) {
  RunConfig cfg = resolve(c);
  const fs::path out = prepare_out(c);
  Model m = load_model(cfg);
  SampleConfig base = sample_config(cfg, m);
  const auto T0s = parse_list(cfg.get("T0_grid", "0.5,1.0,1.5"));
  const auto rs = parse_list(cfg.get("r_grid", "0,1"));
  const auto hs = parse_list(cfg.get("h_grid", "0.1,0.01"));
  std::vector<std::pair<double, double>> grid;
  for (double T0 : T0s)
    for (double r : rs) grid.emplace_back(T0, r);
  auto scorer = property_scorer(cfg, &m.table);
  const NeuralDenoiser model(m.params);
  const auto rows = quality_diversity_scan(model, m.vocab, grid, hs, base, static_cast<int>(cfg.get_int("n", 200)),
                                           cfg.get_u64("seed", 0), *scorer);
  std::ofstream csv(out / "scan.csv");
  write_scan_csv(csv, rows);
  finish(cfg, out, "eval-denovo");
  std::cout << "wrote " << rows.size() << " scan rows to " << (out / "scan.csv").string() << '\n';
  return kOk;
}

// Linker design and scaffold morphing share one prompt: the given fragments
// followed by free positions. Decoration and motif extension differ only in
// how many fragments the line carries.
std::string build_prompt(const std::string& task, const std::string& line, int free_tokens) {
  if (task == "prompt") return line;
  if (task != "linker" && task != "morphing" && task != "decoration" && task != "motif" && task != "superstructure")
    throw ConfigError("unknown constrain task '" + task + "'");
  std::string prompt = line + " ";
  for (int i = 0; i < free_tokens; ++i) prompt += '?';
  return prompt;
}

int cmd_constrain(const Common& c) {
  RunConfig cfg = resolve(c);
  const fs::path out = prepare_out(c);
  Model m = load_model(cfg);
  SampleConfig sc = sample_config(cfg, m);
  if (!cfg.has("mode")) sc.mode = SampleMode::Refine;
  cfg.set("mode", to_string(sc.mode));
  const std::string task = cfg.get("task", "linker");
  const int free_tokens = static_cast<int>(cfg.get_int("free_tokens", 10));
  const int n = static_cast<int>(cfg.get_int("n", 100));
  const Rng root(cfg.get_u64("seed", 0));
  const NeuralDenoiser model(m.params);
  std::vector<std::string> texts;
  long violations = 0;
  const auto lines = read_required(cfg.get("fragments", "fragments.txt"));
  for (std::size_t li = 0; li < lines.size(); ++li) {
    SampleConfig local = sc;
    local.mask = mask_from_prompt(build_prompt(task, lines[li], free_tokens), m.vocab);
    local.length = local.mask->length();
    local.length_dist.reset();
    for (int k = 0; k < n; ++k) {
      Rng rng = root.fork(li * 1000003ULL + k);
      const auto& mask = *local.mask;
      const auto res = generate(model, local, rng, nullptr, [&](int, double, const TokenSeq& s) { violations += !mask.satisfied_by(s); });
      texts.push_back(decode(res.seq, m.vocab));
    }
  }
  write_samples(out, texts);
  finish(cfg, out, "constrain");
  std::cout << "mask violations across all trajectory steps: " << violations << '\n';
  return kOk;
}

int cmd_optimize(const Common& c) {
  RunConfig cfg = resolve(c);
  const fs::path out = prepare_out(c);
  Model m = load_model(cfg);
  OptimizeConfig oc;
  oc.budget = cfg.get_int("budget", 10000);
  oc.seed = cfg.get_u64("seed", 0);
  oc.population_size = static_cast<int>(cfg.get_int("population_size", 100));
  oc.kappa = cfg.get_double("kappa", 0.001);
  oc.offspring_per_round = static_cast<int>(cfg.get_int("offspring_per_round", 60));
  oc.mutations_per_round = static_cast<int>(cfg.get_int("mutations_per_round", 20));
  oc.population_every = static_cast<int>(cfg.get_int("population_every", 50));
  oc.replay_capacity = static_cast<int>(cfg.get_int("replay_capacity", 300));
  oc.ppo.clip = cfg.get_double("ppo_clip", 0.2);
  oc.ppo.epochs = static_cast<int>(cfg.get_int("ppo_epochs", 10));
  oc.ppo.lr = cfg.get_double("ppo_lr", 1e-4);
  oc.ppo.timesteps = static_cast<int>(cfg.get_int("ppo_timesteps", 50));
  oc.ppo.cadence = static_cast<int>(cfg.get_int("ppo_every", 100));
  oc.ppo.c_neg = cfg.get_double("ppo_c_neg", 1.0);
  oc.ppo.beta = cfg.get_double("ppo_beta", 0.0);
  oc.use_ppo = cfg.get_bool("use_ppo", true);
  oc.use_bandit = cfg.get_bool("use_bandit", true);
  oc.use_mutation = cfg.get_bool("use_mutation", true);
  oc.use_ga = cfg.get_bool("use_ga", true);
  oc.use_replay = cfg.get_bool("use_replay", true);
  oc.max_stalled_rounds = static_cast<int>(cfg.get_int("max_stalled_rounds", 50));
  oc.sampling.mode = parse_sample_mode(cfg.get("mode", "velocity"));
  oc.sampling.h = cfg.get_double("h", 0.01);
  const std::string prescreen = cfg.get("prescreen", "");
  if (!prescreen.empty()) oc.prescreen = read_required(prescreen);

  std::unique_ptr<Oracle> oracle = make_oracle(cfg.get("oracle", "carbon_fraction"), &m.table);
  const OptimizeResult res = optimize(m.params, m.vocab, m.lengths, *oracle, oc);

  std::ofstream hist(out / "history.jsonl");
  write_history_jsonl(hist, res.history);
  std::vector<std::string> ranked;
  for (const auto& s : res.ranked) ranked.push_back(s.smiles + " " + std::to_string(s.score));
  write_lines((out / "ranked.txt").string(), ranked);
  if (cfg.get_bool("save_params", false)) save_params(m.params, (out / "params.bin").string());
  nlohmann::json report{{"calls", res.history.size()}, {"auc_top10", res.auc_top10}, {"rounds", res.rounds},
                        {"ppo_updates", res.ppo_updates}, {"invalid_offspring", res.invalid_offspring}, {"stalled", res.stalled},
                        {"oracle", oracle->name()}};
  std::ofstream(out / "report.json") << report.dump(2) << '\n';
  finish(cfg, out, "optimize");
  std::cout << report.dump() << '\n';
  return kOk;
}

int cmd_bandit_demo(const Common& c) {
  RunConfig cfg = resolve(c);
  const fs::path out = prepare_out(c);
  const int lo = static_cast<int>(cfg.get_int("min_length", 1)), hi = static_cast<int>(cfg.get_int("max_length", 40));
  const double peak = cfg.get_double("peak", 20.0), width = cfg.get_double("width", 2.0);
  const int updates = static_cast<int>(cfg.get_int("updates", 500));
  if (hi < lo) throw ConfigError("max_length below min_length");
  std::vector<int> arms;
  for (int n = lo; n <= hi; ++n) arms.push_back(n);
  Bandit bandit(arms);
  Rng rng(cfg.get_u64("seed", 0));
  std::ofstream csv(out / "bandit.csv");
  csv << "update,length,reward,modal_length\n";
  for (int u = 1; u <= updates; ++u) {
    const int L = bandit.sample(rng);
    const double r = std::exp(-(L - peak) * (L - peak) / (2.0 * width * width));
    bandit.update(L, r);
    csv << u << ',' << L << ',' << r << ',' << bandit.modal_length() << '\n';
  }
  finish(cfg, out, "bandit-demo");
  std::cout << "modal length after " << updates << " updates: " << bandit.modal_length() << '\n';
  return kOk;
}

int cmd_diagnostics(const Common& c) {
  RunConfig cfg = resolve(c);
  const fs::path out = prepare_out(c);
  Model m = load_model(cfg);
  SampleConfig base = sample_config(cfg, m);
  const auto hs = parse_list(cfg.get("h_grid", "0.1,0.01"));
  const int runs = static_cast<int>(cfg.get_int("runs", 20));
  const Rng root(cfg.get_u64("seed", 0));
  const NeuralDenoiser model(m.params);
  std::ofstream csv(out / "diagnostics.csv");
  std::ofstream summary(out / "cumulative_changes.csv");
  csv << "h,run,step,t,changes,mean_confidence\n";
  summary << "h,run,total_changes\n";
  for (double h : hs) {
    SampleConfig sc = base;
    sc.h = h;
    for (int k = 0; k < runs; ++k) {
      Rng rng = root.fork(k);  // paired across h
      const auto res = generate(model, sc, rng);
      for (const auto& s : res.stats.steps)
        csv << h << ',' << k << ',' << s.step << ',' << s.t << ',' << s.changes << ',' << s.mean_confidence << '\n';
      summary << h << ',' << k << ',' << res.stats.total_changes() << '\n';
    }
  }
  finish(cfg, out, "diagnostics");
  std::cout << "wrote " << (out / "diagnostics.csv").string() << '\n';
  return kOk;
}

int run_guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const OptimizerError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const SamplerError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const SmilesError& e) {
    std::cerr << "chemistry error: " << e.what() << " (offset " << e.offset() << ")\n";
    return kChemistry;
  } catch (const FragmentError& e) {
    std::cerr << "chemistry error: " << e.what() << '\n';
    return kChemistry;
  } catch (const TokenizerError& e) {
    std::cerr << "chemistry error: " << e.what() << '\n';
    return kChemistry;
  } catch (const DenoiserError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return e.kind() == DenoiserErrorKind::DivergenceDetected ? kDivergence : kConfig;
  } catch (const OracleFailure& e) {
    std::cerr << "oracle error at call " << e.call() << ": " << e.what() << '\n';
    return kOracle;
  } catch (const OracleError& e) {
    std::cerr << "oracle error: " << e.what() << '\n';
    return e.kind() == OracleError::Kind::BadSpec ? kConfig : kOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fragflow: discrete flow generation and optimization of fragmented SMILES"};
  app.require_subcommand(1);
  Common common;
  int code = kOk;

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const Common&);
  };
  const Entry entries[] = {
      {"corpus-gen", "Write a procedural toy corpus (corpus.smi)", cmd_corpus_gen},
      {"train", "Fragment a SMILES corpus and train the denoiser", cmd_train},
      {"sample", "Sample molecules from a trained model", cmd_sample},
      {"eval-denovo", "Quality/diversity scan over (T0, r, h) as CSV", cmd_eval_denovo},
      {"constrain", "Fragment-constrained generation from a fragment file", cmd_constrain},
      {"optimize", "GA + PPO + bandit optimization against an oracle", cmd_optimize},
      {"bandit-demo", "Length bandit on a synthetic Gaussian reward", cmd_bandit_demo},
      {"diagnostics", "Per-step token change statistics of sampling trajectories", cmd_diagnostics},
  };
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("-c,--config", common.config_path, "key=value config file");
    sub->add_option("-s,--set", common.overrides, "key=value override, repeatable");
    sub->add_option("-o,--out", common.out_dir, "output directory")->capture_default_str();
    sub->callback([&common, &code, fn = e.fn] { code = run_guarded([&] { return fn(common); }); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  return code;
}
