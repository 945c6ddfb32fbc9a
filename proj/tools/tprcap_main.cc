// Copyright 2026 The tprcap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// tprcap command-line tool.
//
// Every subcommand accepts --config FILE with key=value lines naming its long
// options. Precedence: built-in defaults < TPR_SEED (for --seed) < config
// file < command-line flags.
//
// Exit status: 0 success, 1 usage or validation error, 2 runtime error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tprcap/tprcap.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

constexpr const char* kPrecedence =
    "Settings come from built-in defaults, then TPR_SEED (seed only), then "
    "--config (key=value lines), then command-line flags; later sources win.";

int ExitFor(tprcap_status s) {
  switch (s) {
    case TPRCAP_OK:
      return kExitOk;
    case TPRCAP_ERR_VALIDATION:
    case TPRCAP_ERR_DIMENSION:
    case TPRCAP_ERR_RANGE:
    case TPRCAP_ERR_CAPACITY:
    case TPRCAP_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

// Prints the error for a failed call and returns the exit status.
int Report(tprcap_status s, const char* what) {
  std::cerr << "tprcap: " << what << ": " << tprcap_status_string(s) << ": "
            << tprcap_last_error() << "\n";
  return ExitFor(s);
}

struct DatasetDeleter {
  void operator()(tprcap_dataset* d) const { tprcap_dataset_free(d); }
};
struct VocabDeleter {
  void operator()(tprcap_vocab* v) const { tprcap_vocab_free(v); }
};
struct ModelDeleter {
  void operator()(tprcap_model* m) const { tprcap_model_free(m); }
};
using DatasetPtr = std::unique_ptr<tprcap_dataset, DatasetDeleter>;
using VocabPtr = std::unique_ptr<tprcap_vocab, VocabDeleter>;
using ModelPtr = std::unique_ptr<tprcap_model, ModelDeleter>;

struct JsonString {
  char* s = nullptr;
  ~JsonString() { tprcap_string_free(s); }
};

// Thrown out of subcommand handlers to set the exit status.
struct Exit {
  int code;
};

void Check(tprcap_status s, const char* what) {
  if (s != TPRCAP_OK) throw Exit{Report(s, what)};
}

CLI::App* Subcommand(CLI::App& app, const std::string& name,
                     const std::string& about) {
  CLI::App* sub = app.add_subcommand(name, about);
  // Read by ExpandConfig before parsing; registered here for --help.
  sub->add_option("--config", "Read key=value settings from this file")
      ->type_name("FILE");
  sub->footer(kPrecedence);
  return sub;
}

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// CLI11 only reads config files for the top-level app, so a subcommand's
// --config file is expanded here into --key=value arguments placed right
// after the subcommand name. Flags given later override them.
std::vector<std::string> ExpandConfig(const CLI::App& app, int argc,
                                      char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || app.get_subcommand_no_throw(args[0]) == nullptr) {
    return args;
  }
  std::string path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) {
    std::cerr << "tprcap: cannot read config file " << path << "\n";
    throw Exit{kExitUsage};
  }
  std::vector<std::string> settings;
  std::string line;
  for (size_t n = 1; std::getline(in, line); ++n) {
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    const std::string key =
        eq == std::string::npos ? "" : Trim(line.substr(0, eq));
    if (key.empty()) {
      std::cerr << "tprcap: " << path << ":" << n << ": expected key=value\n";
      throw Exit{kExitUsage};
    }
    settings.push_back((key.starts_with("--") ? "" : "--") + key + "=" +
                       Trim(line.substr(eq + 1)));
  }
  args.insert(args.begin() + 1, settings.begin(), settings.end());
  return args;
}

void AddSeed(CLI::App* sub, uint64_t& seed) {
  sub->add_option("--seed", seed, "Random seed")
      ->envname("TPR_SEED")
      ->capture_default_str();
}

struct DecodeArgs {
  std::string model;
  std::string vocab;
  std::string data;
  size_t beam = 1;
  size_t max_len = 0;
};

void AddDecodeArgs(CLI::App* sub, DecodeArgs& a) {
  sub->add_option("--model", a.model, "Checkpoint file")->required();
  sub->add_option("--vocab", a.vocab,
                  "Vocabulary file (default: <model>.vocab)");
  sub->add_option("--data", a.data, "Dataset JSONL")->required();
  sub->add_option("--beam", a.beam, "Beam width (1 = greedy)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--max-len", a.max_len,
                  "Longest caption, markers included (0 = min(d, 20))")
      ->capture_default_str();
}

struct Loaded {
  ModelPtr model;
  VocabPtr vocab;
  DatasetPtr data;
};

Loaded LoadForDecode(const DecodeArgs& a) {
  Loaded l;
  tprcap_model* m = nullptr;
  Check(tprcap_model_load(a.model.c_str(), nullptr, &m), "loading model");
  l.model.reset(m);
  tprcap_vocab* v = nullptr;
  const std::string vpath = a.vocab.empty() ? a.model + ".vocab" : a.vocab;
  Check(tprcap_vocab_load(vpath.c_str(), &v), "loading vocabulary");
  l.vocab.reset(v);
  tprcap_dataset* d = nullptr;
  Check(tprcap_dataset_load(a.data.c_str(), static_cast<size_t>(-1), &d),
        "loading dataset");
  l.data.reset(d);
  return l;
}

void EpochToStream(const char* record, void* user) {
  std::ostream& out = *static_cast<std::ostream*>(user);
  out << record << "\n";
  out.flush();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tprcap: tensor-product-representation image captioning"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.footer(kPrecedence);
  app.set_version_flag("--version", tprcap_version());
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  int status = kExitOk;

  // gen-data
  uint64_t gen_seed = 1;
  tprcap_synth_options synth;
  tprcap_synth_options_default(&synth);
  std::string gen_out, gen_vocab_out;
  CLI::App* gen =
      Subcommand(app, "gen-data", "Write a synthetic caption corpus");
  gen->add_option("--out", gen_out, "Output JSONL path")->required();
  gen->add_option("--n", synth.num_samples, "Number of samples")
      ->capture_default_str();
  AddSeed(gen, gen_seed);
  gen->add_option("--feature-dim", synth.feature_dim, "Image feature size k_v")
      ->capture_default_str();
  gen->add_option("--feature-noise", synth.feature_noise,
                  "Gaussian noise sigma on features")
      ->capture_default_str();
  gen->add_option("--tag-noise", synth.tag_noise,
                  "Uniform tag noise upper bound")
      ->capture_default_str();
  gen->add_option("--min-captions", synth.min_captions,
                  "Fewest captions per sample")
      ->capture_default_str();
  gen->add_option("--max-captions", synth.max_captions,
                  "Most captions per sample")
      ->capture_default_str();
  gen->add_option("--basis-seed", synth.basis_seed,
                  "Feature basis seed shared across splits (0 = --seed)")
      ->capture_default_str();
  gen->add_option("--vocab-out", gen_vocab_out,
                  "Also write the corpus vocabulary here");
  gen->callback([&] {
    synth.seed = gen_seed;
    tprcap_dataset* d = nullptr;
    Check(tprcap_synth_generate(&synth, &d), "generating corpus");
    DatasetPtr data(d);
    Check(tprcap_dataset_save(data.get(), gen_out.c_str()), "saving corpus");
    if (!gen_vocab_out.empty()) {
      tprcap_vocab* v = nullptr;
      Check(tprcap_vocab_from_dataset(data.get(), &v), "building vocabulary");
      VocabPtr vocab(v);
      Check(tprcap_vocab_save(vocab.get(), gen_vocab_out.c_str()),
            "saving vocabulary");
    }
    std::cout << "wrote " << tprcap_dataset_size(data.get()) << " samples to "
              << gen_out << "\n";
  });

  // train
  uint64_t train_seed = 1;
  tprcap_train_options topt;
  tprcap_train_options_default(&topt);
  tprcap_model_config mcfg;
  tprcap_model_config_default(&mcfg);
  std::string variant = mcfg.variant;
  std::string tr_data, tr_val, tr_out, tr_vocab, tr_vocab_out, tr_glove,
      tr_history, optimizer = "adam";
  double val_fraction = 0.0;
  bool g_tanh = false, freeze = false, glove_raw = false;
  CLI::App* train = Subcommand(app, "train", "Train a captioning model");
  train->add_option("--data", tr_data, "Training JSONL")->required();
  train->add_option("--val", tr_val, "Validation JSONL");
  train
      ->add_option("--val-fraction", val_fraction,
                   "Hold out this tail fraction of --data when --val is "
                   "absent (0 = monitor the training set)")
      ->check(CLI::Range(0.0, 0.9))
      ->capture_default_str();
  train->add_option("--out", tr_out, "Checkpoint path")->required();
  train->add_option("--vocab", tr_vocab,
                    "Vocabulary file (default: built from --data)");
  train->add_option("--vocab-out", tr_vocab_out,
                    "Where to write the vocabulary (default: <out>.vocab)");
  train
      ->add_option("--variant", variant,
                   "e+tpr, h+tpr, h+e+tpr, e+dtpr, h+dtpr or h+e+dtpr")
      ->capture_default_str();
  train->add_option("--d", mcfg.role_dim, "Role/embedding size (power of two)")
      ->capture_default_str();
  train->add_option("--m", mcfg.hidden_dim, "Hidden size")
      ->capture_default_str();
  train->add_flag("--g-tanh", g_tanh, "Use tanh for the candidate gate");
  train->add_option("--epochs", topt.epochs, "Cross-entropy epochs")
      ->capture_default_str();
  train
      ->add_option("--scst-epochs", topt.scst_epochs,
                   "Self-critical epochs after cross-entropy")
      ->capture_default_str();
  train->add_option("--lr", topt.learning_rate, "Cross-entropy learning rate")
      ->capture_default_str();
  train
      ->add_option("--scst-lr", topt.scst_learning_rate,
                   "Self-critical learning rate")
      ->capture_default_str();
  train
      ->add_option("--scst-weight", topt.scst_weight,
                   "Policy weight; cross-entropy gets 1 minus this")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  train->add_option("--batch", topt.batch_size, "Batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train
      ->add_option("--patience", topt.patience,
                   "Epochs without validation improvement before stopping")
      ->capture_default_str();
  train->add_option("--clip", topt.clip_norm, "Global gradient-norm clip")
      ->capture_default_str();
  train->add_option("--optimizer", optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  train->add_flag("--freeze-embedding", freeze, "Keep the embedding fixed");
  train->add_option("--glove", tr_glove,
                    "Initialize embeddings from GloVe text");
  train->add_flag("--glove-raw", glove_raw, "Do not center GloVe vectors");
  train->add_option("--history", tr_history,
                    "Write per-epoch JSONL here (default: stdout)");
  AddSeed(train, train_seed);
  train->callback([&] {
    tprcap_dataset* d = nullptr;
    Check(tprcap_dataset_load(tr_data.c_str(), mcfg.role_dim, &d),
          "loading training data");
    DatasetPtr all(d);
    DatasetPtr train_ds, val_ds;
    if (!tr_val.empty()) {
      train_ds = std::move(all);
      Check(tprcap_dataset_load(tr_val.c_str(), mcfg.role_dim, &d),
            "loading validation data");
      val_ds.reset(d);
    } else if (val_fraction > 0.0) {
      const size_t n = tprcap_dataset_size(all.get());
      const size_t held = static_cast<size_t>(val_fraction * n);
      Check(tprcap_dataset_slice(all.get(), 0, n - held, &d), "splitting");
      train_ds.reset(d);
      Check(tprcap_dataset_slice(all.get(), n - held, n, &d), "splitting");
      val_ds.reset(d);
    } else {
      train_ds = std::move(all);
    }
    if (tprcap_dataset_size(train_ds.get()) == 0) {
      std::cerr << "tprcap: training split is empty\n";
      throw Exit{kExitUsage};
    }

    tprcap_vocab* v = nullptr;
    if (tr_vocab.empty()) {
      Check(tprcap_vocab_from_dataset(train_ds.get(), &v),
            "building vocabulary");
    } else {
      Check(tprcap_vocab_load(tr_vocab.c_str(), &v), "loading vocabulary");
    }
    VocabPtr vocab(v);

    mcfg.variant = variant.c_str();
    mcfg.g_tanh = g_tanh ? 1 : 0;
    mcfg.feature_dim = tprcap_dataset_feature_dim(train_ds.get());
    mcfg.tag_dim = tprcap_dataset_tag_dim(train_ds.get());
    mcfg.vocab_size = tprcap_vocab_size(vocab.get());
    tprcap_model* m = nullptr;
    Check(tprcap_model_create(&mcfg, train_seed, &m), "creating model");
    ModelPtr model(m);
    if (!tr_glove.empty()) {
      Check(tprcap_model_load_glove(model.get(), vocab.get(), tr_glove.c_str(),
                                    glove_raw ? 0 : 1),
            "loading GloVe vectors");
    }

    topt.seed = train_seed;
    topt.xe_weight = 1.0 - topt.scst_weight;
    topt.use_sgd = optimizer == "sgd";
    topt.freeze_embedding = freeze ? 1 : 0;
    std::ofstream history_file;
    std::ostream* history = &std::cout;
    if (!tr_history.empty()) {
      history_file.open(tr_history);
      if (!history_file) {
        std::cerr << "tprcap: cannot write " << tr_history << "\n";
        throw Exit{kExitRuntime};
      }
      history = &history_file;
    }
    JsonString summary;
    Check(tprcap_train(model.get(), vocab.get(), train_ds.get(), val_ds.get(),
                       &topt, EpochToStream, history, &summary.s),
          "training");
    Check(tprcap_model_save(model.get(), tr_out.c_str()), "saving model");
    const std::string vocab_out =
        tr_vocab_out.empty() ? tr_out + ".vocab" : tr_vocab_out;
    Check(tprcap_vocab_save(vocab.get(), vocab_out.c_str()),
          "saving vocabulary");
    std::cerr << summary.s << "\n";
  });

  // eval
  DecodeArgs eval_args;
  CLI::App* eval = Subcommand(app, "eval",
                              "Caption a dataset and score it against its "
                              "references (JSON on stdout)");
  AddDecodeArgs(eval, eval_args);
  eval->callback([&] {
    Loaded l = LoadForDecode(eval_args);
    const tprcap_decode_options opts{eval_args.beam, eval_args.max_len};
    JsonString report;
    Check(tprcap_evaluate(l.model.get(), l.vocab.get(), l.data.get(), &opts,
                          &report.s),
          "evaluating");
    std::cout << report.s << "\n";
  });

  // caption
  DecodeArgs cap_args;
  std::string cap_out;
  CLI::App* cap = Subcommand(app, "caption",
                             "Write one generated caption per sample as JSONL "
                             "{id, tokens, logprob}");
  AddDecodeArgs(cap, cap_args);
  cap->add_option("--out", cap_out, "Output JSONL path")->required();
  cap->callback([&] {
    Loaded l = LoadForDecode(cap_args);
    const tprcap_decode_options opts{cap_args.beam, cap_args.max_len};
    Check(tprcap_caption_dataset(l.model.get(), l.vocab.get(), l.data.get(),
                                 &opts, cap_out.c_str()),
          "captioning");
  });

  // metrics
  std::string met_cand, met_ref;
  CLI::App* met = Subcommand(app, "metrics",
                             "Score candidate captions against reference "
                             "captions (JSON on stdout)");
  met->add_option("--candidates", met_cand, "JSONL of {id, tokens}")
      ->required();
  met->add_option("--references", met_ref, "Dataset JSONL with captions")
      ->required();
  met->callback([&] {
    JsonString report;
    Check(tprcap_metrics_files(met_cand.c_str(), met_ref.c_str(), &report.s),
          "scoring");
    std::cout << report.s << "\n";
  });

  // gradcheck
  tprcap_gradcheck_options gopt;
  tprcap_gradcheck_options_default(&gopt);
  std::string gc_variant = gopt.variant;
  uint64_t gc_seed = gopt.seed;
  double threshold = 1e-4;
  bool gc_freeze = false, gc_tanh = false;
  CLI::App* gc = Subcommand(app, "gradcheck",
                            "Compare backpropagated and finite-difference "
                            "gradients; exit 0 iff the worst relative error "
                            "is below --threshold");
  gc->add_option("--variant", gc_variant, "Model variant")
      ->capture_default_str();
  gc->add_option("--eps", gopt.eps, "Central-difference step")
      ->capture_default_str();
  gc->add_option("--coords", gopt.coords_per_tensor,
                 "Coordinates sampled per tensor")
      ->capture_default_str();
  gc->add_option("--d", gopt.role_dim, "Role/embedding size")
      ->capture_default_str();
  gc->add_option("--m", gopt.hidden_dim, "Hidden size")->capture_default_str();
  gc->add_option("--kv", gopt.feature_dim, "Image feature size")
      ->capture_default_str();
  gc->add_option("--ks", gopt.tag_dim, "Tag vector size")
      ->capture_default_str();
  gc->add_option("--vocab-size", gopt.vocab_size, "Vocabulary size")
      ->capture_default_str();
  gc->add_option("--caption-len", gopt.caption_len,
                 "Caption length, markers included")
      ->capture_default_str();
  gc->add_option("--threshold", threshold,
                 "Largest accepted relative error (exclusive)")
      ->capture_default_str();
  gc->add_flag("--freeze-embedding", gc_freeze,
               "Leave the embedding out of the check");
  gc->add_flag("--g-tanh", gc_tanh, "Use tanh for the candidate gate");
  AddSeed(gc, gc_seed);
  gc->callback([&] {
    gopt.variant = gc_variant.c_str();
    gopt.seed = gc_seed;
    gopt.freeze_embedding = gc_freeze ? 1 : 0;
    gopt.g_tanh = gc_tanh ? 1 : 0;
    double worst = 0.0;
    JsonString report;
    Check(tprcap_gradcheck(&gopt, &worst, &report.s), "gradient check");
    std::cout << report.s << "\n";
    if (!(worst < threshold)) {
      std::cerr << "tprcap: worst relative error " << worst << " is not below "
                << threshold << "\n";
      throw Exit{kExitRuntime};
    }
  });

  // tpr-demo
  size_t demo_d = 32, demo_trials = 1000, demo_vocab = 1000, demo_len = 0;
  uint64_t demo_seed = 1;
  CLI::App* demo = Subcommand(app, "tpr-demo",
                              "Bind and unbind random sequences; print the "
                              "retrieval accuracy");
  demo->add_option("--d", demo_d, "Role dimension (power of two)")
      ->capture_default_str();
  demo->add_option("--trials", demo_trials, "Number of random sequences")
      ->capture_default_str();
  demo->add_option("--vocab-size", demo_vocab,
                   "Number of random filler vectors")
      ->capture_default_str();
  demo->add_option("--length", demo_len, "Sequence length (0 = d)")
      ->capture_default_str();
  AddSeed(demo, demo_seed);
  demo->callback([&] {
    double acc = 0.0;
    Check(tprcap_tpr_demo(demo_d, demo_vocab, demo_len == 0 ? demo_d : demo_len,
                          demo_trials, demo_seed, &acc),
          "tpr demo");
    std::printf("retrieval accuracy %.3f\n", acc);
  });

  try {
    app.name("tprcap");
    std::vector<std::string> args = ExpandConfig(app, argc, argv);
    if (!args.empty() && !args[0].starts_with("-") &&
        app.get_subcommand_no_throw(args[0]) == nullptr) {
      throw CLI::ExtrasError({args[0]});
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Exit& e) {
    status = e.code;
  }
  return status;
}
