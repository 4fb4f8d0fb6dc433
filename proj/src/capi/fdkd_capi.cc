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

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "annotserve/server.h"
#include "annotserve/store.h"
#include "common/error.h"
#include "fdkd/fdkd.h"
#include "pipeline/commands.h"
#include "pipeline/run.h"
#include "textmodel/checkpoint.h"
#include "textmodel/decode.h"

struct fdkd_config {
  fdkd::RunConfig cfg;
};

struct fdkd_model {
  fdkd::StudentModel model;
};

struct fdkd_annot_server {
  fdkd::AnnotServeConfig config;
  std::unique_ptr<fdkd::AnnotationStore> store;
  std::unique_ptr<fdkd::AnnotationServer> server;
};

namespace {

thread_local std::string g_last_error;

fdkd_status SetError(fdkd_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating exceptions to status codes.
template <typename Fn>
fdkd_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FDKD_OK;
  } catch (const fdkd::Error& e) {
    return SetError(static_cast<fdkd_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return SetError(FDKD_CONFIG, std::string("Config: ") + e.what());
  } catch (const std::bad_alloc&) {
    return SetError(FDKD_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return SetError(FDKD_INTERNAL, e.what());
  }
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Require(const void* p, const char* what) {
  if (!p) fdkd::Fail(fdkd::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

std::string Opt(const char* s) { return s ? s : ""; }

fdkd::DecodeConfig ParseDecode(const char* decode_json) {
  if (!decode_json || !*decode_json) return fdkd::DecodeConfig{};
  fdkd::DecodeConfig d = fdkd::DecodeConfig::FromJson(fdkd::Json::parse(decode_json));
  d.Validate();
  return d;
}

}  // namespace

extern "C" {

const char* fdkd_version(void) { return "0.1.0"; }

const char* fdkd_status_name(fdkd_status status) {
  if (status == FDKD_INTERNAL) return "Internal";
  // Names are string literals, so the view is NUL terminated.
  return fdkd::ErrorCodeName(static_cast<fdkd::ErrorCode>(status)).data();
}

const char* fdkd_last_error(void) { return g_last_error.c_str(); }

void fdkd_string_free(char* s) { std::free(s); }

fdkd_status fdkd_config_create(const char* json, const char* const* overrides, size_t n_overrides,
                               fdkd_config** out) {
  return Guard([&] {
    Require(json, "json");
    Require(out, "out");
    *out = nullptr;
    fdkd::Json doc;
    try {
      doc = fdkd::Json::parse(json);
    } catch (const fdkd::Json::parse_error& e) {
      fdkd::Fail(fdkd::ErrorCode::kConfig, e.what());
    }
    std::vector<std::string> assignments;
    for (size_t i = 0; i < n_overrides; ++i) {
      Require(overrides[i], "override");
      assignments.emplace_back(overrides[i]);
    }
    auto c = std::make_unique<fdkd_config>();
    c->cfg = fdkd::RunConfig::FromJson(fdkd::ApplyOverrides(std::move(doc), assignments));
    c->cfg.Validate();
    *out = c.release();
  });
}

void fdkd_config_free(fdkd_config* config) { delete config; }

fdkd_status fdkd_config_to_json(const fdkd_config* config, char** out) {
  return Guard([&] {
    Require(config, "config");
    Require(out, "out");
    *out = CopyString(config->cfg.ToJson().dump(2));
  });
}

fdkd_status fdkd_config_output_dir(const fdkd_config* config, char** out) {
  return Guard([&] {
    Require(config, "config");
    Require(out, "out");
    *out = CopyString(config->cfg.output_dir);
  });
}

fdkd_status fdkd_model_load(const char* path, fdkd_model** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<fdkd_model>();
    m->model = fdkd::LoadCheckpoint(path);
    *out = m.release();
  });
}

void fdkd_model_free(fdkd_model* model) { delete model; }

fdkd_status fdkd_model_hash(const fdkd_model* model, char** out) {
  return Guard([&] {
    Require(model, "model");
    Require(out, "out");
    *out = CopyString(fdkd::CheckpointHash(model->model));
  });
}

fdkd_status fdkd_model_generate(const fdkd_model* model, const char* input,
                                const char* decode_json, char** out) {
  return Guard([&] {
    Require(model, "model");
    Require(input, "input");
    Require(out, "out");
    const fdkd::DecodeConfig d = ParseDecode(decode_json);
    const auto& m = model->model;
    *out = CopyString(m.vocab.Decode(fdkd::Generate(m.params, m.vocab.Encode(input), d).front().tokens));
  });
}

fdkd_status fdkd_model_logprob(const fdkd_model* model, const char* input, const char* output,
                               double* out) {
  return Guard([&] {
    Require(model, "model");
    Require(input, "input");
    Require(output, "output");
    Require(out, "out");
    const auto& m = model->model;
    *out = fdkd::SequenceLogprob(m.params, m.vocab.Encode(input), m.vocab.Encode(output));
  });
}

fdkd_status fdkd_synth_corpus(const fdkd_config* config, const char* out_dir) {
  return Guard([&] {
    Require(config, "config");
    Require(out_dir, "out_dir");
    if (!config->cfg.synth) fdkd::Fail(fdkd::ErrorCode::kConfig, "config has no synth section");
    fdkd::WriteSynthCorpus(*config->cfg.synth, out_dir);
  });
}

fdkd_status fdkd_distill_data(const fdkd_config* config, const char* inputs_path,
                              const char* out_path, size_t* examples, size_t* refused) {
  return Guard([&] {
    Require(config, "config");
    Require(inputs_path, "inputs_path");
    Require(out_path, "out_path");
    const auto r = fdkd::DistillData(config->cfg, inputs_path, out_path);
    if (examples) *examples = r.examples.size();
    if (refused) *refused = r.refused_inputs;
  });
}

fdkd_status fdkd_train(const fdkd_config* config, char** report_json) {
  return Guard([&] {
    Require(config, "config");
    const fdkd::RunConfig& cfg = config->cfg;
    auto judge = fdkd::MakeJudge(cfg);
    const fdkd::RunInputs inputs = fdkd::PrepareInputs(cfg, *judge);
    const fdkd::RunResult r = fdkd::RunSchedule(cfg, inputs, *judge);
    if (report_json) {
      fdkd::OrderedJson j;
      j["objective"] = std::string(fdkd::ObjectiveName(cfg.objective));
      j["warm_start_hash"] = r.warm_start_hash;
      j["final_hash"] = fdkd::CheckpointHash(r.model);
      j["collections"] = r.collections;
      j["report"] = fdkd::ReportToJson(r.report);
      *report_json = CopyString(j.dump(2));
    }
  });
}

fdkd_status fdkd_generate_file(const fdkd_model* model, const char* inputs_path,
                               const char* decode_json, const char* out_path) {
  return Guard([&] {
    Require(model, "model");
    Require(inputs_path, "inputs_path");
    Require(out_path, "out_path");
    fdkd::GenerateFile(model->model, inputs_path, ParseDecode(decode_json), out_path);
  });
}

fdkd_status fdkd_collect_prefs(const fdkd_config* config, const fdkd_model* model,
                               const char* inputs_path, const char* out_path,
                               const char* judgments_path, char** stats_json) {
  return Guard([&] {
    Require(config, "config");
    Require(model, "model");
    Require(inputs_path, "inputs_path");
    Require(out_path, "out_path");
    const auto r = fdkd::CollectPreferencesFile(config->cfg, model->model, inputs_path, out_path,
                                                Opt(judgments_path));
    if (stats_json) {
      fdkd::OrderedJson j;
      j["pairs"] = r.pairs.size();
      j["skipped_ties"] = r.skipped_ties;
      j["skipped_no_pair"] = r.skipped_no_pair;
      j["skipped_low_diversity"] = r.skipped_low_diversity;
      *stats_json = CopyString(j.dump());
    }
  });
}

fdkd_status fdkd_eval_wtr(const fdkd_config* config, const char* gen_a, const char* gen_b,
                          const char* report_path, const char* judgments_path,
                          const char* pairs_path, char** report_json) {
  return Guard([&] {
    Require(config, "config");
    Require(gen_a, "gen_a");
    Require(gen_b, "gen_b");
    Require(report_path, "report_path");
    auto judge = fdkd::MakeJudge(config->cfg);
    const fdkd::WtrReport r =
        fdkd::EvalWtr(*judge, gen_a, gen_b, config->cfg.workers,
                      {report_path, Opt(judgments_path), Opt(pairs_path)});
    if (report_json) *report_json = CopyString(fdkd::ReportToJson(r).dump(2));
  });
}

fdkd_status fdkd_judge_agreement(const char* human_export, const char* judgments,
                                 char** result_json) {
  return Guard([&] {
    Require(human_export, "human_export");
    Require(judgments, "judgments");
    Require(result_json, "result_json");
    *result_json = CopyString(fdkd::JudgeAgreement(human_export, judgments).dump());
  });
}

fdkd_status fdkd_bias_audit(const char* judgments, const char* pairs, const char* human_export,
                            const char* aspect, const char* denominator, char** result_json) {
  return Guard([&] {
    Require(judgments, "judgments");
    Require(result_json, "result_json");
    const fdkd::Aspect a = fdkd::ParseAspect(aspect ? aspect : "humor");
    const std::string d = denominator ? denominator : "all";
    fdkd::LbDenominator den;
    if (d == "all") {
      den = fdkd::LbDenominator::kAllPairs;
    } else if (d == "human_shorter") {
      den = fdkd::LbDenominator::kHumanPrefersShorter;
    } else {
      fdkd::Fail(fdkd::ErrorCode::kInvalidArgument, "unknown LB denominator " + d);
    }
    *result_json =
        CopyString(fdkd::BiasAudit(judgments, Opt(pairs), Opt(human_export), a, den).dump());
  });
}

fdkd_status fdkd_annot_server_create(const char* config_json, fdkd_annot_server** out) {
  return Guard([&] {
    Require(config_json, "config_json");
    Require(out, "out");
    *out = nullptr;
    fdkd::Json doc;
    try {
      doc = fdkd::Json::parse(config_json);
    } catch (const fdkd::Json::parse_error& e) {
      fdkd::Fail(fdkd::ErrorCode::kConfig, e.what());
    }
    auto s = std::make_unique<fdkd_annot_server>();
    s->config = fdkd::AnnotServeConfig::FromJson(doc);
    fdkd::AnnotationStoreOptions opts;
    opts.seed = s->config.seed;
    opts.log_path = s->config.log;
    s->store = std::make_unique<fdkd::AnnotationStore>(
        fdkd::ReadAnnotationPairs(s->config.pairs), opts);
    s->server = std::make_unique<fdkd::AnnotationServer>(s->store.get(), s->config.static_dir);
    *out = s.release();
  });
}

void fdkd_annot_server_free(fdkd_annot_server* server) { delete server; }

fdkd_status fdkd_annot_server_bind(fdkd_annot_server* server, int* port) {
  return Guard([&] {
    Require(server, "server");
    const int p = server->server->Bind(server->config.host, server->config.port);
    if (port) *port = p;
  });
}

fdkd_status fdkd_annot_server_serve(fdkd_annot_server* server) {
  return Guard([&] {
    Require(server, "server");
    server->server->Serve();
  });
}

fdkd_status fdkd_annot_server_stop(fdkd_annot_server* server) {
  return Guard([&] {
    Require(server, "server");
    server->server->Stop();
  });
}

fdkd_status fdkd_export_judgments(const char* pairs, const char* log, uint64_t seed,
                                  const char* out_path, size_t* rows) {
  return Guard([&] {
    Require(pairs, "pairs");
    Require(out_path, "out_path");
    const auto r = fdkd::ExportJudgmentsFile(pairs, Opt(log), seed, out_path);
    if (rows) *rows = r.size();
  });
}

}  // extern "C"
