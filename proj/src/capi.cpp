// SPDX-License-Identifier: Apache-2.0
#include "lmimo/lmimo.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "lmimo/config.hpp"
#include "lmimo/errors.hpp"
#include "lmimo/experiment.hpp"
#include "lmimo/modulo.hpp"
#include "lmimo/recovery.hpp"

using nlohmann::json;

struct lmimo_config {
    json doc;
};

struct lmimo_run_result {
    lmimo::RunResult res;
};

namespace {

thread_local std::string g_last_error;

lmimo_status fail(lmimo_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

void deep_merge(json& base, const json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
            deep_merge(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

template <class Fn>
lmimo_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const lmimo::ValidationError& e) {
        std::string msg;
        for (const auto& d : e.diagnostics()) msg += (msg.empty() ? "" : "\n") + d;
        return fail(LMIMO_ERR_VALIDATION, msg);
    } catch (const lmimo::InputError& e) {
        return fail(LMIMO_ERR_ARGUMENT, e.what());
    } catch (const lmimo::ConditionError& e) {
        return fail(LMIMO_ERR_CONDITION, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(LMIMO_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(LMIMO_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(LMIMO_ERR_RUNTIME, "unknown error");
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

lmimo_status set_field(lmimo_config* cfg, const char* key, json value) {
    if (!cfg) return fail(LMIMO_ERR_ARGUMENT, "null config handle");
    cfg->doc[key] = std::move(value);
    return LMIMO_OK;
}

json resolved_of(const lmimo_config* cfg) { return lmimo::resolve_document(cfg->doc); }

} // namespace

extern "C" {

const char* lmimo_version(void) { return LMIMO_VERSION; }

const char* lmimo_last_error(void) { return g_last_error.c_str(); }

void lmimo_string_free(char* s) { std::free(s); }

size_t lmimo_recipe_count(void) { return lmimo::recipe_names().size(); }

const char* lmimo_recipe_name(size_t index) {
    static const std::vector<std::string> names = lmimo::recipe_names();
    return index < names.size() ? names[index].c_str() : nullptr;
}

lmimo_status lmimo_config_from_recipe(const char* name, lmimo_config** out) {
    if (!name || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        json doc;
        try {
            doc = lmimo::recipe_document(name);
        } catch (const lmimo::InputError& e) {
            return fail(LMIMO_ERR_VALIDATION, e.what());
        }
        *out = new lmimo_config{std::move(doc)};
        return LMIMO_OK;
    });
}

lmimo_status lmimo_config_load(const char* recipe_or_path, lmimo_config** out) {
    if (!recipe_or_path || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        json doc;
        try {
            doc = lmimo::load_document(recipe_or_path);
        } catch (const lmimo::InputError& e) {
            return fail(LMIMO_ERR_IO, e.what());
        }
        *out = new lmimo_config{std::move(doc)};
        return LMIMO_OK;
    });
}

lmimo_status lmimo_config_from_json(const char* json_text, lmimo_config** out) {
    if (!json_text || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        json doc;
        try {
            doc = json::parse(json_text);
        } catch (const json::parse_error& e) {
            return fail(LMIMO_ERR_VALIDATION, std::string("<json>: parse error: ") + e.what());
        }
        *out = new lmimo_config{std::move(doc)};
        return LMIMO_OK;
    });
}

void lmimo_config_free(lmimo_config* cfg) { delete cfg; }

lmimo_status lmimo_config_set_seed(lmimo_config* cfg, uint64_t seed) { return set_field(cfg, "seed", seed); }

lmimo_status lmimo_config_set_trials(lmimo_config* cfg, int trials) {
    if (trials < 1) return fail(LMIMO_ERR_ARGUMENT, "trials must be >= 1");
    return set_field(cfg, "trials", trials);
}

lmimo_status lmimo_config_set_jobs(lmimo_config* cfg, int jobs) {
    if (jobs < 0) return fail(LMIMO_ERR_ARGUMENT, "jobs must be >= 0");
    return set_field(cfg, "jobs", jobs);
}

lmimo_status lmimo_config_set_output(lmimo_config* cfg, const char* dir) {
    if (!dir) return fail(LMIMO_ERR_ARGUMENT, "null output directory");
    return set_field(cfg, "output", std::string(dir));
}

lmimo_status lmimo_config_set_raw_rows(lmimo_config* cfg, int enabled) {
    return set_field(cfg, "raw_rows", enabled != 0);
}

lmimo_status lmimo_config_merge_json(lmimo_config* cfg, const char* json_patch) {
    if (!cfg || !json_patch) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        json patch;
        try {
            patch = json::parse(json_patch);
        } catch (const json::parse_error& e) {
            return fail(LMIMO_ERR_VALIDATION, std::string("<json>: parse error: ") + e.what());
        }
        if (!patch.is_object()) return fail(LMIMO_ERR_ARGUMENT, "patch must be a JSON object");
        deep_merge(cfg->doc, patch);
        return LMIMO_OK;
    });
}

lmimo_status lmimo_config_validate(const lmimo_config* cfg) {
    if (!cfg) return fail(LMIMO_ERR_ARGUMENT, "null config handle");
    return guarded([&] {
        lmimo::parse_config(resolved_of(cfg));
        return LMIMO_OK;
    });
}

lmimo_status lmimo_config_resolved_json(const lmimo_config* cfg, char** out) {
    if (!cfg || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        *out = dup(resolved_of(cfg).dump(2));
        return LMIMO_OK;
    });
}

lmimo_status lmimo_config_hash(const lmimo_config* cfg, char out[17]) {
    if (!cfg || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const std::string h = lmimo::config_hash(resolved_of(cfg));
        std::memcpy(out, h.c_str(), 17);
        return LMIMO_OK;
    });
}

lmimo_status lmimo_config_output(const lmimo_config* cfg, char** out) {
    if (!cfg || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        *out = dup(lmimo::parse_config(resolved_of(cfg)).output);
        return LMIMO_OK;
    });
}

lmimo_status lmimo_run(const lmimo_config* cfg, lmimo_run_result** out) {
    if (!cfg || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        auto res = lmimo::run_experiment(resolved_of(cfg));
        *out = new lmimo_run_result{std::move(res)};
        return LMIMO_OK;
    });
}

void lmimo_run_free(lmimo_run_result* res) { delete res; }

lmimo_status lmimo_run_write(const lmimo_run_result* res, const char* dir) {
    if (!res || !dir) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        try {
            lmimo::write_outputs(res->res, dir);
        } catch (const std::runtime_error& e) {
            return fail(LMIMO_ERR_IO, e.what());
        }
        return LMIMO_OK;
    });
}

size_t lmimo_run_row_count(const lmimo_run_result* res) { return res ? res->res.rows.size() : 0; }

size_t lmimo_run_warning_count(const lmimo_run_result* res) { return res ? res->res.warnings.size() : 0; }

lmimo_status lmimo_run_metrics_csv(const lmimo_run_result* res, char** out) {
    if (!res || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        std::ostringstream os;
        lmimo::write_metrics_csv(os, res->res.rows);
        *out = dup(os.str());
        return LMIMO_OK;
    });
}

lmimo_status lmimo_run_manifest(const lmimo_run_result* res, char** out) {
    if (!res || !out) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        *out = dup(res->res.manifest.dump(2));
        return LMIMO_OK;
    });
}

lmimo_status lmimo_replay(const char* csv_path, const char* sidecar_path, const char* out_dir) {
    if (!csv_path || !sidecar_path || !out_dir) return fail(LMIMO_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const auto rr = lmimo::replay_files(csv_path, sidecar_path);
        try {
            lmimo::write_replay_outputs(rr, out_dir);
        } catch (const std::runtime_error& e) {
            return fail(LMIMO_ERR_IO, e.what());
        }
        return LMIMO_OK;
    });
}

lmimo_status lmimo_fold(const double* x, size_t n, double lambda, int bits, double* out) {
    if ((!x || !out) && n > 0) return fail(LMIMO_ERR_ARGUMENT, "null sample buffer");
    return guarded([&] {
        const lmimo::ModuloConfig mc{lambda, bits};
        mc.validate();
        for (size_t k = 0; k < n; ++k) {
            const double f = lmimo::modulo_fold(x[k], lambda);
            out[k] = bits > 0 ? lmimo::quantize_sample(f, mc) : f;
        }
        return LMIMO_OK;
    });
}

lmimo_status lmimo_recover_branch(const double* folded, size_t n, double lambda, double beta, double sample_interval,
                                  double bandwidth, int order, int bits, double* out, int* order_out) {
    if (!folded || !out) return fail(LMIMO_ERR_ARGUMENT, "null sample buffer");
    return guarded([&] {
        lmimo::FoldedFrame f;
        f.cfg = lmimo::ModuloConfig{lambda, bits};
        f.quantized = bits > 0;
        f.sample_interval = sample_interval;
        f.i.assign(folded, folded + n);
        f.q.assign(n, bits > 0 ? f.cfg.step() / 2.0 : 0.0);
        lmimo::RecoveryConfig rc;
        rc.lambda = lambda;
        rc.beta = beta;
        rc.sample_interval = sample_interval;
        rc.bandwidth = bandwidth;
        if (order > 0) rc.order = order;
        rc.anchor.mode = lmimo::AnchorMode::None;
        const auto res = lmimo::recover(f, rc);
        std::copy(res.i.begin(), res.i.end(), out);
        if (order_out) *order_out = res.order;
        return LMIMO_OK;
    });
}

} // extern "C"
