#ifndef FERMI_ERRORS_HPP
#define FERMI_ERRORS_HPP

#include <stdexcept> // std::runtime_error base
#include <string>

namespace fermi {

// Every library error derives from Error so callers (and the C shim) can
// catch one type and map it to a status code.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define FERMI_DEFINE_ERROR(Name)                                            \
    struct Name : Error {                                                    \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {}  \
    }

FERMI_DEFINE_ERROR(DegenerateLattice);    // collinear lattice generators
FERMI_DEFINE_ERROR(TripleTube);           // three tubes meeting: misconfigured eps/window
FERMI_DEFINE_ERROR(MultipleExceptional);  // more than one exceptional index found
FERMI_DEFINE_ERROR(RelationViolated);     // order-relation precondition not met
FERMI_DEFINE_ERROR(SingularDenominator);  // some N_c(k) vanishes under a division
FERMI_DEFINE_ERROR(CertificateFail);      // norm certificate outside the proven region
FERMI_DEFINE_ERROR(NumericallySingular);  // dense solve failed
FERMI_DEFINE_ERROR(NotContracting);       // series preconditions (norms >= 1) fail
FERMI_DEFINE_ERROR(RegionViolation);      // k outside the region an equation is valid in
FERMI_DEFINE_ERROR(NewtonDiverged);       // root solve did not converge
FERMI_DEFINE_ERROR(RegionExit);           // iterates left the tube being traced
FERMI_DEFINE_ERROR(HypothesisFail);       // quantitative-lemma hypotheses out of range
FERMI_DEFINE_ERROR(NormalFormStall);      // normal-form residual plateaued
FERMI_DEFINE_ERROR(StepTooLarge);         // finite-difference step dominated by error
FERMI_DEFINE_ERROR(SmallnessViolated);    // magnetic-potential smallness check failed
FERMI_DEFINE_ERROR(OracleMismatch);       // two independent computations disagree
FERMI_DEFINE_ERROR(ConfigError);          // malformed configuration input

#undef FERMI_DEFINE_ERROR

} // namespace fermi

#endif // FERMI_ERRORS_HPP
