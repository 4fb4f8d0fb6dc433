// Copyright 2026 The fdkd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Talks to the library only through the C API.

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "fdkd/fdkd.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

// Domain failure: the library reported a non-zero status.
struct DomainError {
  fdkd_status status;
};

void Check(fdkd_status st) {
  if (st != FDKD_OK) throw DomainError{st};
}

class OwnedString {
 public:
  ~OwnedString() { fdkd_string_free(s_); }
  char** out() { return &s_; }
  std::string str() const { return s_ ? s_ : ""; }

 private:
  char* s_ = nullptr;
};

class Config {
 public:
  ~Config() { fdkd_config_free(c_); }
  fdkd_config** out() { return &c_; }
  const fdkd_config* get() const { return c_; }

 private:
  fdkd_config* c_ = nullptr;
};

class Model {
 public:
  explicit Model(const std::string& path) { Check(fdkd_model_load(path.c_str(), &m_)); }
  ~Model() { fdkd_model_free(m_); }
  const fdkd_model* get() const { return m_; }

 private:
  fdkd_model* m_ = nullptr;
};

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    throw DomainError{FDKD_IO};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) {
    std::cerr << "error: cannot write " << path << "\n";
    throw DomainError{FDKD_IO};
  }
}

// Options shared by every config-driven subcommand.
struct ConfigOptions {
  std::string path;
  std::vector<std::string> overrides;

  void Add(CLI::App* sub) {
    sub->add_option("-c,--config", path, "JSON run configuration (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "Override as dotted.key=value; repeatable");
  }

  void Load(Config* cfg, const std::vector<std::string>& extra = {}) const {
    const std::string json = path.empty() ? "{}" : ReadText(path);
    std::vector<const char*> ov;
    for (const auto& o : overrides) ov.push_back(o.c_str());
    for (const auto& o : extra) ov.push_back(o.c_str());
    Check(fdkd_config_create(json.c_str(), ov.data(), ov.size(), cfg->out()));
  }
};

void Snapshot(const Config& cfg, const std::string& path) {
  OwnedString json;
  Check(fdkd_config_to_json(cfg.get(), json.out()));
  WriteText(path, json.str() + "\n");
}

std::string DefaultConfigSchema() {
  fdkd_config* c = nullptr;
  if (fdkd_config_create("{\"synth\": {}}", nullptr, 0, &c) != FDKD_OK) return "";
  char* json = nullptr;
  std::string out;
  if (fdkd_config_to_json(c, &json) == FDKD_OK) out = json;
  fdkd_string_free(json);
  fdkd_config_free(c);
  return out;
}

int Serve(const std::string& config_json) {
  // Route SIGINT/SIGTERM to this thread so the server can be stopped cleanly.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  fdkd_annot_server* server = nullptr;
  Check(fdkd_annot_server_create(config_json.c_str(), &server));
  int port = 0;
  const fdkd_status bound = fdkd_annot_server_bind(server, &port);
  if (bound != FDKD_OK) {
    fdkd_annot_server_free(server);
    throw DomainError{bound};
  }
  std::cerr << "serving on port " << port << "\n";
  fdkd_status served = FDKD_OK;
  std::thread t([&] { served = fdkd_annot_server_serve(server); });
  int sig = 0;
  sigwait(&set, &sig);
  fdkd_annot_server_stop(server);
  t.join();
  fdkd_annot_server_free(server);
  Check(served);
  return kExitOk;
}

std::string JsonString(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else if (static_cast<unsigned char>(ch) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
      out += buf;
    } else {
      out += ch;
    }
  }
  return out + "\"";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback-driven distillation of a small student model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fdkd_version()));

  ConfigOptions copts;
  std::string out, inputs, model_path, decode, judgments, pairs, human, gen_a, gen_b, log;
  std::string aspect = "humor", denominator = "all", host = "127.0.0.1", static_dir;
  int port = 8080;
  uint64_t seed = 1;

  auto* synth = app.add_subcommand("synth-corpus", "Write the synthetic train/val/test inputs");
  copts.Add(synth);
  synth->add_option("-o,--out", out, "Output directory")->required();

  auto* distill = app.add_subcommand("distill-data", "Query the teacher and write imitation data");
  copts.Add(distill);
  distill->add_option("-i,--inputs", inputs, "Inputs (.txt lines or .jsonl)")
      ->required()
      ->check(CLI::ExistingFile);
  distill->add_option("-o,--out", out, "Imitation JSONL")->required();

  auto* train = app.add_subcommand("train", "Run the training schedule for the configured objective");
  copts.Add(train);
  train->add_option("-o,--out", out, "Output directory (overrides output_dir)");

  auto* generate = app.add_subcommand("generate", "Decode every input with a checkpoint");
  generate->add_option("-m,--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  generate->add_option("-i,--inputs", inputs, "Inputs (.txt lines or .jsonl)")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("-o,--out", out, "Generation JSONL")->required();
  generate->add_option("--decode", decode, "Decode settings as JSON, e.g. {\"beams\": 5}");

  auto* collect = app.add_subcommand("collect-prefs", "Sample, pair and judge student outputs");
  copts.Add(collect);
  collect->add_option("-m,--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  collect->add_option("-i,--inputs", inputs, "Inputs (.txt lines or .jsonl)")
      ->required()
      ->check(CLI::ExistingFile);
  collect->add_option("-o,--out", out, "Preference JSONL")->required();
  collect->add_option("--judgments", judgments, "Also write the raw judgments here");

  auto* eval = app.add_subcommand("eval-wtr", "Win+tie rate of generations A against B");
  copts.Add(eval);
  eval->add_option("-a,--system-a", gen_a, "Generation JSONL for A")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("-b,--system-b", gen_b, "Generation JSONL for B")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("-o,--out", out, "Report JSON")->required();
  eval->add_option("--judgments", judgments, "Also write the raw judgments here");
  eval->add_option("--pairs", pairs, "Also write annotation pairs here");

  auto* agree = app.add_subcommand("judge-agreement", "Critic agreement with human verdicts");
  agree->add_option("--human", human, "Exported human judgments")
      ->required()
      ->check(CLI::ExistingFile);
  agree->add_option("--judgments", judgments, "Critic judgments")
      ->required()
      ->check(CLI::ExistingFile);
  agree->add_option("-o,--out", out, "Result JSON (stdout when omitted)");

  auto* audit = app.add_subcommand("bias-audit", "Position bias, and length bias given human data");
  audit->add_option("--judgments", judgments, "Critic judgments in both orders")
      ->required()
      ->check(CLI::ExistingFile);
  audit->add_option("--pairs", pairs, "Annotation pairs (for candidate lengths)")
      ->check(CLI::ExistingFile);
  audit->add_option("--human", human, "Exported human judgments")->check(CLI::ExistingFile);
  audit->add_option("--aspect", aspect, "Human aspect for length bias")
      ->check(CLI::IsMember({"humor", "consistency"}));
  audit->add_option("--denominator", denominator, "Length-bias denominator")
      ->check(CLI::IsMember({"all", "human_shorter"}));
  audit->add_option("-o,--out", out, "Result JSON (stdout when omitted)");

  auto* serve = app.add_subcommand("serve-annotation", "Serve the blind pairwise annotation API");
  std::string serve_config;
  serve->add_option("-c,--config", serve_config, "JSON server config")->check(CLI::ExistingFile);
  serve->add_option("--pairs", pairs, "Pairs JSONL {id, input, a, b}")->check(CLI::ExistingFile);
  serve->add_option("--log", log, "Judgment log (append-only JSONL)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--seed", seed, "Slot randomization seed");
  serve->add_option("--static", static_dir, "Directory of UI files served at /");

  auto* exportj = app.add_subcommand("export-judgments", "Resolve an annotation log to candidates");
  exportj->add_option("--pairs", pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  exportj->add_option("--log", log, "Judgment log");
  exportj->add_option("--seed", seed, "Slot randomization seed used by the server");
  exportj->add_option("-o,--out", out, "Export JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\nConfiguration schema (defaults):\n" << DefaultConfigSchema() << "\n";
    return kExitUsage;
  }

  try {
    Config cfg;
    if (*synth) {
      copts.Load(&cfg);
      Check(fdkd_synth_corpus(cfg.get(), out.c_str()));
      Snapshot(cfg, out + "/resolved_config.json");
    } else if (*distill) {
      copts.Load(&cfg);
      size_t examples = 0, refused = 0;
      Check(fdkd_distill_data(cfg.get(), inputs.c_str(), out.c_str(), &examples, &refused));
      Snapshot(cfg, out + ".config.json");
      std::cerr << examples << " examples, " << refused << " inputs dropped as refusals\n";
    } else if (*train) {
      std::vector<std::string> extra;
      if (!out.empty()) extra.push_back("output_dir=" + out);
      copts.Load(&cfg, extra);
      OwnedString report;
      Check(fdkd_train(cfg.get(), report.out()));
      std::cout << report.str() << "\n";
    } else if (*generate) {
      Model m(model_path);
      Check(fdkd_generate_file(m.get(), inputs.c_str(), decode.empty() ? nullptr : decode.c_str(),
                               out.c_str()));
    } else if (*collect) {
      copts.Load(&cfg);
      Model m(model_path);
      OwnedString stats;
      Check(fdkd_collect_prefs(cfg.get(), m.get(), inputs.c_str(), out.c_str(),
                               judgments.empty() ? nullptr : judgments.c_str(), stats.out()));
      Snapshot(cfg, out + ".config.json");
      std::cout << stats.str() << "\n";
    } else if (*eval) {
      copts.Load(&cfg);
      OwnedString report;
      Check(fdkd_eval_wtr(cfg.get(), gen_a.c_str(), gen_b.c_str(), out.c_str(),
                          judgments.empty() ? nullptr : judgments.c_str(),
                          pairs.empty() ? nullptr : pairs.c_str(), report.out()));
      Snapshot(cfg, out + ".config.json");
      std::cout << report.str() << "\n";
    } else if (*agree) {
      OwnedString result;
      Check(fdkd_judge_agreement(human.c_str(), judgments.c_str(), result.out()));
      if (out.empty()) {
        std::cout << result.str() << "\n";
      } else {
        WriteText(out, result.str() + "\n");
      }
    } else if (*audit) {
      OwnedString result;
      Check(fdkd_bias_audit(judgments.c_str(), pairs.empty() ? nullptr : pairs.c_str(),
                            human.empty() ? nullptr : human.c_str(), aspect.c_str(),
                            denominator.c_str(), result.out()));
      if (out.empty()) {
        std::cout << result.str() << "\n";
      } else {
        WriteText(out, result.str() + "\n");
      }
    } else if (*serve) {
      std::string json;
      if (!serve_config.empty()) {
        json = ReadText(serve_config);
      } else {
        if (pairs.empty()) {
          std::cerr << "error: serve-annotation needs --config or --pairs\n";
          return kExitUsage;
        }
        json = "{\"pairs\": " + JsonString(pairs) + ", \"log\": " + JsonString(log) +
               ", \"host\": " + JsonString(host) + ", \"port\": " + std::to_string(port) +
               ", \"seed\": " + std::to_string(seed) + ", \"static_dir\": " +
               JsonString(static_dir) + "}";
      }
      return Serve(json);
    } else if (*exportj) {
      size_t rows = 0;
      Check(fdkd_export_judgments(pairs.c_str(), log.empty() ? nullptr : log.c_str(), seed,
                                  out.c_str(), &rows));
      std::cerr << rows << " judgments exported\n";
    }
  } catch (const DomainError& e) {
    const std::string msg = fdkd_last_error();
    if (!msg.empty()) {
      std::cerr << "error: " << msg << "\n";
    } else if (e.status != FDKD_IO) {
      std::cerr << "error: " << fdkd_status_name(e.status) << "\n";
    }
    return kExitDomain;
  }
  return kExitOk;
}
