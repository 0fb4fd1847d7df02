"""Symmetric private retrieval from replicated databases, with the user
holding one entry of the servers' shared randomness pool.

The package builds the query scheme, simulates full retrievals, audits the
privacy and reliability guarantees by exact exhaustive enumeration, computes
the achievable rate region, and ships a small binary protocol plus TCP
transport so the same retrieval runs against live database servers.
"""
from .audit import (
    AuditReport,
    Distribution,
    InstanceTooLarge,
    JointTable,
    MIResult,
    cr_difference_audit,
    database_privacy_audit,
    mutual_information,
    query_distribution,
    reliability_audit,
    run_all_audits,
    statistical_user_privacy,
    user_privacy_audit,
)
from .fields import (
    FieldElement,
    PrimeModulus,
    Seed,
    SeededStream,
    TapeStream,
    is_prime,
    sample_permutation,
)
from .net import (
    DatabaseServer,
    NetError,
    load_database_state,
    load_user_file,
    provision,
    run_client_retrieval,
    serve_database,
)
from .plan import (
    PirPlan,
    SchemeParams,
    SymbolRequest,
    build_pir_plan,
    validate_pir_plan,
)
from .region import (
    Baselines,
    RegionVerdict,
    TimeSharePlan,
    baselines,
    check_region,
    classical_point,
    corner_point,
    time_share_plan,
)
from .scheme import (
    MUTATIONS,
    QueryCell,
    RateTriple,
    SpirRequest,
    canonical_family,
    measured_rates,
    select_query,
    validate_query_cell,
)
from .sim import (
    DecodeError,
    RetrievalSeeds,
    Transcript,
    run_retrieval,
)
from .wire import Frame, FrameType, WireError, decode_frame, encode_frame

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "Baselines",
    "DatabaseServer",
    "DecodeError",
    "Distribution",
    "FieldElement",
    "Frame",
    "FrameType",
    "InstanceTooLarge",
    "JointTable",
    "MIResult",
    "MUTATIONS",
    "NetError",
    "PirPlan",
    "PrimeModulus",
    "QueryCell",
    "RateTriple",
    "RegionVerdict",
    "RetrievalSeeds",
    "SchemeParams",
    "Seed",
    "SeededStream",
    "SpirRequest",
    "SymbolRequest",
    "TapeStream",
    "TimeSharePlan",
    "Transcript",
    "WireError",
    "baselines",
    "build_pir_plan",
    "canonical_family",
    "check_region",
    "classical_point",
    "corner_point",
    "cr_difference_audit",
    "database_privacy_audit",
    "decode_frame",
    "encode_frame",
    "is_prime",
    "load_database_state",
    "load_user_file",
    "measured_rates",
    "mutual_information",
    "provision",
    "query_distribution",
    "reliability_audit",
    "run_all_audits",
    "run_client_retrieval",
    "run_retrieval",
    "sample_permutation",
    "select_query",
    "serve_database",
    "statistical_user_privacy",
    "time_share_plan",
    "user_privacy_audit",
    "validate_pir_plan",
    "validate_query_cell",
]
