#ifndef FERMI_SESSION_HPP
#define FERMI_SESSION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fermi/curve.hpp"

namespace fermi {

// Fully parsed run configuration. Parsing validates the analysis invariants
// (epsilon < lambda/6, rho >= R, no duplicate support points) and rejects a
// bad file with a ConfigError naming the violated constraint.
struct RunConfig {
    Lattice lattice;
    FourierField A = FourierField::vector_field();
    FourierField V = FourierField::scalar_field();
    FourierField q = FourierField::scalar_field();
    ModelParams params;    // fully resolved
    double tolerance = 1e-12;
    std::uint64_t seed = 1;
    int threads = 1;

    // trace command
    int trace_nu = 1;
    std::vector<cplx> trace_y;

    // handles command
    int handle_nu = 1;
    std::vector<DualPoint> handle_d;
    int curve_samples = 12;

    // freecurve command
    double k2_min = -3.0, k2_max = 3.0;
    int k2_count = 61;
    double b_radius = 3.0;

    // spectrum command
    KPoint spectrum_k;

    // verify command
    std::vector<double> verify_heights;
    int verify_samples = 20;

    std::string config_hash; // FNV-1a of the raw config bytes, hex
};

// Loads and validates a configuration file (JSON).
RunConfig load_config(const std::string& path);

// Commands. Each writes CSV (and per-handle structured-text documents) into
// out_dir; the boolean result reports whether every checked invariant held,
// so callers can turn it into an exit code.
bool run_freecurve(const RunConfig& cfg, const std::string& out_dir);
bool run_trace(const RunConfig& cfg, const std::string& out_dir);
bool run_handles(const RunConfig& cfg, const std::string& out_dir);
bool run_verify(const RunConfig& cfg, const std::string& out_dir);
bool run_spectrum(const RunConfig& cfg, const std::string& out_dir);

} // namespace fermi

#endif // FERMI_SESSION_HPP
