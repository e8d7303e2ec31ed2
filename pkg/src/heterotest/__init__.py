"""heterotest: model and test stream X-machines, communicating machine
systems and cell-like P systems, including integration-test generation for
two-layer (Base/Control) heterotic designs."""

from .csxms import (
    Csxm,
    CsxmCase,
    CsxmCaseFunction,
    CsxmSystem,
    build_product_sxm,
    check_csxm_dft,
    extend_for_testing,
    generate_csxms_test_suite,
    initial_system_configuration,
    system_step,
    validate_csxm,
    validate_system,
)
from .dft import DftReport, check_dft
from .heterotic import (
    HeteroticSystem,
    HeteroticTrace,
    OracleBinding,
    build_heterotic_system,
    generate_integration_tests,
    run_heterotic,
    simulator_oracle,
    subprocess_oracle,
    wrap_psystem_as_csxm,
)
from .multiset import Multiset
from .mutation import (
    Mutant,
    MutantBatch,
    ScoreReport,
    enumerate_mutants,
    mutate_model,
    mutation_score,
)
from .psystem import (
    ComputationTrace,
    CoverageReport,
    PRule,
    PSystem,
    generate_coverage_test_set,
    maximal_rule_multisets,
    psystem_run,
    rule_coverage,
    validate_psystem,
)
from .sxm import (
    Automaton,
    Case,
    CaseFunction,
    MemoryDomain,
    Sxm,
    SxmConfiguration,
    associated_automaton,
    sxm_run,
    sxm_step,
    validate_sxm,
)
from .testgen import (
    TestCase,
    TestSuite,
    characterization_set,
    fundamental_test_inputs,
    generate_sxm_test_suite,
    minimize_automaton,
    state_cover,
    w_method_phi_sequences,
)

__version__ = "0.1.0"
