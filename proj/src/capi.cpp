#include "fermic.h"

#include <exception>
#include <string>

#include "fermi/errors.hpp"
#include "fermi/session.hpp"

struct fermi_model {
    fermi::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

fermi_status classify(const std::exception& e) {
    using namespace fermi;
    if (dynamic_cast<const ConfigError*>(&e)) return FERMI_ERR_CONFIG;
    if (dynamic_cast<const SmallnessViolated*>(&e)) return FERMI_ERR_SMALLNESS;
    if (dynamic_cast<const OracleMismatch*>(&e)) return FERMI_ERR_ORACLE;
    if (dynamic_cast<const HypothesisFail*>(&e) ||
        dynamic_cast<const NormalFormStall*>(&e))
        return FERMI_ERR_HYPOTHESIS;
    if (dynamic_cast<const CertificateFail*>(&e) ||
        dynamic_cast<const NotContracting*>(&e))
        return FERMI_ERR_CERTIFICATE;
    if (dynamic_cast<const RegionViolation*>(&e) ||
        dynamic_cast<const RegionExit*>(&e) ||
        dynamic_cast<const TripleTube*>(&e) ||
        dynamic_cast<const MultipleExceptional*>(&e) ||
        dynamic_cast<const RelationViolated*>(&e))
        return FERMI_ERR_REGION;
    if (dynamic_cast<const SingularDenominator*>(&e) ||
        dynamic_cast<const NumericallySingular*>(&e) ||
        dynamic_cast<const NewtonDiverged*>(&e) ||
        dynamic_cast<const StepTooLarge*>(&e) ||
        dynamic_cast<const DegenerateLattice*>(&e))
        return FERMI_ERR_NUMERIC;
    if (dynamic_cast<const std::ios_base::failure*>(&e)) return FERMI_ERR_IO;
    return FERMI_ERR_INTERNAL;
}

template <typename Fn>
fermi_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return classify(e);
    } catch (...) {
        g_last_error = "unknown error";
        return FERMI_ERR_INTERNAL;
    }
}

fermi_status run_command(fermi_model* model, const char* out_dir,
                         bool (*cmd)(const fermi::RunConfig&, const std::string&)) {
    if (!model || !out_dir) {
        g_last_error = "null argument";
        return FERMI_ERR_CONFIG;
    }
    return guarded([&]() -> fermi_status {
        if (cmd(model->cfg, out_dir)) return FERMI_OK;
        g_last_error = "verification failed; see emitted report files";
        return FERMI_ERR_VERIFY_FAILED;
    });
}

} // namespace

extern "C" {

fermi_status fermi_model_create(const char* config_path, fermi_model** out_model) {
    if (!config_path || !out_model) {
        g_last_error = "null argument";
        return FERMI_ERR_CONFIG;
    }
    *out_model = nullptr;
    return guarded([&]() -> fermi_status {
        auto* m = new fermi_model{fermi::load_config(config_path)};
        *out_model = m;
        return FERMI_OK;
    });
}

void fermi_model_destroy(fermi_model* model) { delete model; }

const char* fermi_last_error(void) { return g_last_error.c_str(); }

fermi_status fermi_set_threads(fermi_model* model, int threads) {
    if (!model || threads < 1) {
        g_last_error = "invalid thread count";
        return FERMI_ERR_CONFIG;
    }
    model->cfg.threads = threads;
    return FERMI_OK;
}

fermi_status fermi_set_seed(fermi_model* model, unsigned long long seed) {
    if (!model) {
        g_last_error = "null argument";
        return FERMI_ERR_CONFIG;
    }
    model->cfg.seed = seed;
    return FERMI_OK;
}

fermi_status fermi_run_freecurve(fermi_model* model, const char* out_dir) {
    return run_command(model, out_dir, fermi::run_freecurve);
}
fermi_status fermi_run_trace(fermi_model* model, const char* out_dir) {
    return run_command(model, out_dir, fermi::run_trace);
}
fermi_status fermi_run_handles(fermi_model* model, const char* out_dir) {
    return run_command(model, out_dir, fermi::run_handles);
}
fermi_status fermi_run_verify(fermi_model* model, const char* out_dir) {
    return run_command(model, out_dir, fermi::run_verify);
}
fermi_status fermi_run_spectrum(fermi_model* model, const char* out_dir) {
    return run_command(model, out_dir, fermi::run_spectrum);
}

} // extern "C"
