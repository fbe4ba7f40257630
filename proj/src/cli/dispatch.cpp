#include "psjnet/cli/dispatch.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "psjnet/cli/config_file.hpp"
#include "psjnet/cli/manifest.hpp"
#include "psjnet/data/preprocess.hpp"
#include "psjnet/data/raw_log.hpp"
#include "psjnet/data/sequence_io.hpp"
#include "psjnet/data/simulate.hpp"
#include "psjnet/data/split.hpp"
#include "psjnet/data/stats.hpp"
#include "psjnet/data/synthetic.hpp"
#include "psjnet/error.hpp"
#include "psjnet/eval/evaluate.hpp"
#include "psjnet/eval/significance.hpp"
#include "psjnet/model/checkpoint.hpp"
#include "psjnet/model/network.hpp"
#include "psjnet/parallel.hpp"
#include "psjnet/trainer/train.hpp"

namespace psjnet::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Training and model flags shared by `train` and `sweep-k`.
struct ModelFlags {
  std::string variant = "psjnet2";
  std::size_t k = 4;
  std::size_t hidden = 90;
  double keep_prob = 0.8;
  double lr = 0.001;
  std::vector<double> clip{-5.0, 5.0};
  std::size_t batch = 64;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  std::string ablate = "none";
  bool share_role_transfer = false;
  bool none_gate_shares_weights = false;
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
  sub->add_option("--variant", f.variant, "Model variant")
      ->check(CLI::IsMember({"psjnet1", "psjnet2"}))
      ->capture_default_str();
  sub->add_option("--k", f.k, "Number of latent user roles K")->check(CLI::Range(1, 64))->capture_default_str();
  sub->add_option("--hidden", f.hidden, "Embedding and hidden size d")
      ->check(CLI::Range(1, 4096))
      ->capture_default_str();
  sub->add_option("--keep-prob", f.keep_prob, "Dropout keep probability (inverted dropout)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  sub->add_option("--clip", f.clip, "Element-wise gradient clip range LO HI")
      ->expected(2)
      ->capture_default_str();
  sub->add_option("--batch", f.batch, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--epochs", f.epochs, "Maximum epochs")->capture_default_str();
  sub->add_option("--patience", f.patience, "Epochs without validation gain before stopping (0: never)")
      ->capture_default_str();
  sub->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  sub->add_option("--ablate", f.ablate, "Ablation: none, psj, sj (psjnet1), s or j (psjnet2)")
      ->check(CLI::IsMember({"none", "psj", "sj", "s", "j"}))
      ->capture_default_str();
  sub->add_flag("--share-role-transfer", f.share_role_transfer,
                "psjnet2: one transfer GRU shared by all roles");
  sub->add_flag("--none-gate-shares-weights", f.none_gate_shares_weights,
                "psjnet2: the none gate reuses the role gate weights");
}

TrainConfig to_train_config(const ModelFlags& f) {
  if (f.clip.size() != 2) throw ConfigError("--clip takes LO HI");
  TrainConfig c;
  c.model.variant = parse_variant(f.variant);
  c.model.ablation = parse_ablation(f.ablate);
  c.model.roles = f.k;
  c.model.hidden = f.hidden;
  c.model.share_role_transfer = f.share_role_transfer;
  c.model.none_gate_shares_weights = f.none_gate_shares_weights;
  c.keep_prob = f.keep_prob;
  c.adam.lr = f.lr;
  c.clip_lo = f.clip[0];
  c.clip_hi = f.clip[1];
  c.batch = f.batch;
  c.epochs = f.epochs;
  c.patience = f.patience;
  c.seed = f.seed;
  c.threads = worker_count();
  c.validate();
  return c;
}

nlohmann::json resolved_options(const CLI::App* sub) {
  nlohmann::json j = nlohmann::json::object();
  for (const CLI::Option* o : sub->get_options()) {
    const std::string name = o->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "manifest") continue;
    std::string value;
    if (o->count() > 0) {
      // Repeated options resolve to their last occurrence; a multi-value
      // option such as --clip keeps all of its values.
      const auto& res = o->results();
      const std::size_t width = static_cast<std::size_t>(std::max(1, o->get_items_expected_max()));
      const std::size_t first = res.size() > width ? res.size() - width : 0;
      for (std::size_t i = first; i < res.size(); ++i) value += (value.empty() ? "" : " ") + res[i];
    } else {
      value = o->get_default_str();
    }
    j[name] = value;
  }
  return j;
}

void write_splits(const fs::path& dir, const DatasetSplits& s, RunManifest& m) {
  fs::create_directories(dir);
  const std::pair<const char*, const std::vector<MixedSequence>*> parts[] = {
      {"train.txt", &s.train}, {"valid.txt", &s.valid}, {"test.txt", &s.test}};
  for (const auto& [name, seqs] : parts) {
    write_sequence_file(dir / name, *seqs);
    m.add_output(dir / name);
  }
}

void write_stats(const fs::path& dir, const DatasetStats& stats, std::ostream& out, RunManifest& m) {
  const std::string text = format_stats(stats);
  write_file_atomic(dir / "stats.txt", text);
  m.add_output(dir / "stats.txt");
  out << text;
}

std::string with_suffix(const std::string& path, const std::string& suffix) { return path + suffix; }

}  // namespace

int dispatch(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  CLI::App app{"Shared-account cross-domain sequential recommendation (split-by-join and "
               "split-and-join networks)",
               "psjnet"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  RunManifest manifest;
  std::string manifest_path;
  std::string config_path;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value file; explicit flags take precedence");
    sub->add_option("--manifest", manifest_path, "Run manifest path (JSON)");
  };

  // simulate
  std::string sim_input, out_dir;
  SimConfig sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Build shared-account sequences from a two-domain "
                                                      "rating log and split them 75/15/10");
  simulate->add_option("--input", sim_input, "CSV log: user,domain,item,timestamp[,duration]")->required();
  simulate->add_option("--out-dir", out_dir, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--min-users", sim.min_users, "Fewest users merged per account")->capture_default_str();
  simulate->add_option("--max-users", sim.max_users, "Most users merged per account")->capture_default_str();
  common(simulate);

  // preprocess
  std::string pre_input;
  std::uint64_t pre_seed = 1;
  PreprocessConfig pre;
  CLI::App* preprocess = app.add_subcommand("preprocess", "Turn watch logs with durations into "
                                                          "30-event sequences and split them");
  preprocess->add_option("--input", pre_input, "CSV log: user,domain,item,timestamp,duration")->required();
  preprocess->add_option("--out-dir", out_dir, "Output directory")->required();
  preprocess->add_option("--seed", pre_seed, "Split seed")->capture_default_str();
  preprocess->add_option("--chunk", pre.chunk, "Events per sequence")->capture_default_str();
  common(preprocess);

  // synth
  SynthConfig syn;
  CLI::App* synth = app.add_subcommand("synth", "Generate the planted-role synthetic benchmark");
  synth->add_option("--out-dir", out_dir, "Output directory")->required();
  synth->add_option("--accounts", syn.accounts, "Shared accounts")->capture_default_str();
  synth->add_option("--sequences-per-account", syn.sequences_per_account, "Sequences per account")
      ->capture_default_str();
  synth->add_option("--role-types", syn.role_types, "Distinct planted roles")->capture_default_str();
  synth->add_option("--role-items", syn.role_items, "A items in each role's cycle")->capture_default_str();
  synth->add_option("--signal", syn.signal, "Probability that a B item is linked to the preceding A item")
      ->capture_default_str();
  synth->add_option("--b-rate", syn.b_rate, "Probability of a B item after each A item")->capture_default_str();
  synth->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  common(synth);

  // train
  ModelFlags mf;
  std::string train_path, valid_path, test_path, ckpt_path, history_path;
  std::string keep = "best";
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint and history");
  add_model_flags(train_cmd, mf);
  train_cmd->add_option("--train", train_path, "Training sequence file")->required();
  train_cmd->add_option("--valid", valid_path, "Validation sequence file");
  train_cmd->add_option("--checkpoint", ckpt_path, "Output checkpoint")->required();
  train_cmd->add_option("--history", history_path, "History CSV (default: <checkpoint>.history.csv)");
  train_cmd->add_option("--keep", keep, "Checkpoint to write: best (validation) or last")
      ->check(CLI::IsMember({"best", "last"}))
      ->capture_default_str();
  common(train_cmd);

  // evaluate
  std::string cutoffs_text = "5,10,20";
  std::string compare_path, report_path;
  bool with_pop = false;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Recall@k and MRR@k on held-out final items");
  evaluate->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required();
  evaluate->add_option("--test", test_path, "Test sequence file")->required();
  evaluate->add_option("--cutoffs", cutoffs_text, "Comma-separated cutoffs")->capture_default_str();
  evaluate->add_option("--compare", compare_path, "Second checkpoint for a paired t-test");
  evaluate->add_flag("--pop", with_pop, "Also report the POP baseline (needs --train)");
  evaluate->add_option("--train", train_path, "Training sequence file for POP counts");
  evaluate->add_option("--report", report_path, "Also write the report to this file");
  common(evaluate);

  // recommend
  std::string sequence_text, input_path;
  std::size_t top = 10;
  CLI::App* recommend = app.add_subcommand("recommend", "Top-k next items per domain for one sequence");
  recommend->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required();
  CLI::Option* sequence_opt =
      recommend->add_option("--sequence", sequence_text, "Sequence line, e.g. 'A:12<TAB>B:4'");
  recommend->add_option("--input", input_path, "File whose first line is the sequence (default: stdin)");
  recommend->add_option("--top", top, "Items to list per domain")->check(CLI::PositiveNumber)->capture_default_str();
  common(recommend);

  // sweep-k
  std::string ks_text = "1,2,3,4,5";
  CLI::App* sweep = app.add_subcommand("sweep-k", "Train and evaluate for each role count K");
  add_model_flags(sweep, mf);
  sweep->add_option("--train", train_path, "Training sequence file")->required();
  sweep->add_option("--valid", valid_path, "Validation sequence file");
  sweep->add_option("--test", test_path, "Test sequence file")->required();
  sweep->add_option("--out-dir", out_dir, "Directory for per-K checkpoints")->required();
  sweep->add_option("--ks", ks_text, "Role counts to sweep")->capture_default_str();
  sweep->add_option("--cutoffs", cutoffs_text, "Comma-separated cutoffs")->capture_default_str();
  common(sweep);

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  std::vector<const char*> cargv;
  for (const std::string& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  manifest.command = sub->get_name();
  manifest.argv.assign(raw_args.begin(), raw_args.end());
  manifest.config = resolved_options(sub);

  try {
    if (sub == simulate) {
      manifest.add_input(sim_input);
      const auto events = read_raw_log(sim_input);
      const SimResult r = simulate_shared_accounts(events, sim);
      std::vector<MixedSequence> seqs;
      for (const SimSequence& s : r.sequences) seqs.push_back(s.seq);
      const DatasetSplits splits = split_dataset(seqs, sim.fractions, sim.seed);
      write_splits(out_dir, splits, manifest);
      write_stats(out_dir, compute_stats(splits.train, splits.valid, splits.test, r.users), out, manifest);
      out << "#Accounts                 " << r.accounts.size() << "\n";
      manifest.seed = sim.seed;
      if (manifest_path.empty()) manifest_path = (fs::path(out_dir) / "manifest.json").string();
    } else if (sub == preprocess) {
      manifest.add_input(pre_input);
      const auto events = read_raw_log(pre_input);
      const PreprocessResult r = preprocess_logs(events, pre);
      const DatasetSplits splits = split_dataset(r.sequences, SplitFractions{}, pre_seed);
      write_splits(out_dir, splits, manifest);
      write_stats(out_dir, compute_stats(splits.train, splits.valid, splits.test, r.accounts), out, manifest);
      manifest.seed = pre_seed;
      if (manifest_path.empty()) manifest_path = (fs::path(out_dir) / "manifest.json").string();
    } else if (sub == synth) {
      const SynthDataset ds = make_synthetic_benchmark(syn);
      write_splits(out_dir, ds.splits, manifest);
      write_stats(out_dir, compute_stats(ds.splits.train, ds.splits.valid, ds.splits.test, syn.accounts),
                  out, manifest);
      manifest.seed = syn.seed;
      if (manifest_path.empty()) manifest_path = (fs::path(out_dir) / "manifest.json").string();
    } else if (sub == train_cmd) {
      const TrainConfig tc = to_train_config(mf);
      manifest.add_input(train_path);
      const auto train_seqs = read_sequence_file(train_path);
      std::vector<MixedSequence> valid_seqs;
      if (!valid_path.empty()) {
        manifest.add_input(valid_path);
        valid_seqs = read_sequence_file(valid_path);
      }
      const TrainResult r = train(train_seqs, valid_seqs, tc, [&](const EpochRecord& rec) {
        err << "epoch " << rec.epoch << " loss " << rec.train_loss << " val_mrr20 A " << rec.val_mrr20_a
            << " B " << rec.val_mrr20_b << "\n";
      });
      if (history_path.empty()) history_path = with_suffix(ckpt_path, ".history.csv");
      save_checkpoint(ckpt_path, keep == "best" ? r.best : r.final);
      write_file_atomic(history_path, history_csv(r.history));
      manifest.add_output(ckpt_path);
      manifest.add_output(history_path);
      manifest.seed = tc.seed;
      out << "epochs run " << r.history.size() << ", best epoch " << r.best_epoch << ", checkpoint "
          << ckpt_path << "\n";
      if (r.skipped_sequences > 0) {
        err << "warning: " << r.skipped_sequences << " training sequences had no target and were skipped\n";
      }
      if (manifest_path.empty()) manifest_path = with_suffix(ckpt_path, ".manifest.json");
    } else if (sub == evaluate) {
      const auto cutoffs = parse_cutoffs(cutoffs_text);
      manifest.add_input(ckpt_path);
      manifest.add_input(test_path);
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const auto test_seqs = read_sequence_file(test_path);
      EvalReport report = evaluate_checkpoint(ckpt, test_seqs, cutoffs, worker_count());
      report.label = to_string(ckpt.params.config.variant);
      if (ckpt.params.config.ablation != Ablation::kNone) {
        report.label += "(-" + to_string(ckpt.params.config.ablation) + ")";
      }
      std::ostringstream text;
      text << EvalReport::table_header(cutoffs);
      std::optional<EvalReport> pop_report;
      if (with_pop) {
        if (train_path.empty()) throw ConfigError("--pop needs --train");
        manifest.add_input(train_path);
        std::vector<MixedSequence> encoded;
        EncodeStats stats;
        for (const MixedSequence& s : read_sequence_file(train_path)) {
          encoded.push_back(encode(s, ckpt.vocab_a, ckpt.vocab_b, &stats));
        }
        const PopBaseline pop = pop_baseline(encoded, ckpt.vocab_a.size(), ckpt.vocab_b.size());
        pop_report = evaluate_raw(pop_scorer(pop), ckpt.vocab_a, ckpt.vocab_b, test_seqs, cutoffs, 1);
        pop_report->label = "POP";
        text << pop_report->table_row();
      }
      std::optional<EvalReport> other;
      if (!compare_path.empty()) {
        manifest.add_input(compare_path);
        const Checkpoint ckpt2 = load_checkpoint(compare_path);
        if (!(ckpt2.vocab_a == ckpt.vocab_a) || !(ckpt2.vocab_b == ckpt.vocab_b)) {
          throw ConfigError("--compare needs a checkpoint trained on the same vocabularies");
        }
        other = evaluate_checkpoint(ckpt2, test_seqs, cutoffs, worker_count());
        other->label = to_string(ckpt2.params.config.variant);
        if (ckpt2.params.config.ablation != Ablation::kNone) {
          other->label += "(-" + to_string(ckpt2.params.config.ablation) + ")";
        }
        text << other->table_row();
      }
      text << report.table_row() << "\n" << report.key_values();
      if (other) {
        text << "\npaired t-test (" << report.label << " vs " << other->label << ")\n";
        for (Domain d : kDomains) {
          for (std::size_t k : cutoffs) {
            for (const char* metric : {"recall", "mrr"}) {
              const bool rec = metric[0] == 'r';
              const auto x = rec ? report.at(d).hits(k) : report.at(d).reciprocal_ranks(k);
              const auto y = rec ? other->at(d).hits(k) : other->at(d).reciprocal_ranks(k);
              text << domain_char(d) << "." << metric << "@" << k << ": ";
              try {
                const TTestResult t = paired_t_test(x, y);
                text << "t=" << t.t << " p=" << t.p << (t.significant ? " significant" : "") << "\n";
              } catch (const DegenerateTestError&) {
                text << "identical per-case values, test undefined\n";
              }
            }
          }
        }
      }
      out << text.str();
      if (!report_path.empty()) {
        write_file_atomic(report_path, text.str());
        manifest.add_output(report_path);
      }
      if (manifest_path.empty()) manifest_path = with_suffix(ckpt_path, ".evaluate.manifest.json");
    } else if (sub == recommend) {
      manifest.add_input(ckpt_path);
      std::string line = sequence_text;
      if (sequence_opt->count() == 0) {
        if (!input_path.empty()) {
          manifest.add_input(input_path);
          line = read_file(input_path);
        } else {
          std::ostringstream ss;
          ss << std::cin.rdbuf();
          line = ss.str();
        }
        line = line.substr(0, line.find('\n'));
      }
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) throw ConfigError("recommend: the sequence is empty; give at least one event");
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      EncodeStats stats;
      const MixedSequence seq = encode(parse_sequence_line(line), ckpt.vocab_a, ckpt.vocab_b, &stats);
      if (stats.dropped_events > 0) {
        err << "warning: " << stats.dropped_events << " events with unknown items were ignored\n";
      }
      for (Domain d : kDomains) {
        const nk::Tensor p = next_item_distribution(ckpt.params, seq, d, seq.size());
        out << domain_char(d) << ":";
        for (const auto& [idx, score] : top_k(p.data(), top)) {
          out << " " << ckpt.vocab(d).id(idx) << "(" << score << ")";
        }
        out << "\n";
      }
      if (manifest_path.empty()) manifest_path = with_suffix(ckpt_path, ".recommend.manifest.json");
    } else if (sub == sweep) {
      const auto cutoffs = parse_cutoffs(cutoffs_text);
      const auto ks = parse_cutoffs(ks_text);
      manifest.add_input(train_path);
      manifest.add_input(test_path);
      const auto train_seqs = read_sequence_file(train_path);
      const auto test_seqs = read_sequence_file(test_path);
      std::vector<MixedSequence> valid_seqs;
      if (!valid_path.empty()) {
        manifest.add_input(valid_path);
        valid_seqs = read_sequence_file(valid_path);
      }
      fs::create_directories(out_dir);
      std::ostringstream grid;
      grid << EvalReport::table_header(cutoffs);
      for (std::size_t k : ks) {
        ModelFlags f = mf;
        f.k = k;
        const TrainResult r = train(train_seqs, valid_seqs, to_train_config(f));
        const fs::path p = fs::path(out_dir) / ("k" + std::to_string(k) + ".ckpt");
        save_checkpoint(p, r.best);
        manifest.add_output(p);
        EvalReport rep = evaluate_checkpoint(r.best, test_seqs, cutoffs, worker_count());
        rep.label = "K=" + std::to_string(k);
        grid << rep.table_row();
        err << "K=" << k << " done (" << r.history.size() << " epochs)\n";
      }
      write_file_atomic(fs::path(out_dir) / "sweep.txt", grid.str());
      manifest.add_output(fs::path(out_dir) / "sweep.txt");
      out << grid.str();
      manifest.seed = mf.seed;
      if (manifest_path.empty()) manifest_path = (fs::path(out_dir) / "manifest.json").string();
    }
    manifest.timings["total"] = seconds_since(t0);
    manifest.write(manifest_path);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return dispatch(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace psjnet::cli
