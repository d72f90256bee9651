"""rieszlab: difference calculus, weighted averaging, equidistribution checks,
and recurrence experiments on exactly computable dynamical systems."""

from .differences import (
    DeltaPolynomial,
    IntegerSequence,
    RealSequence,
    ShiftCombination,
    apply_delta_polynomial,
    delta,
    delta_floor_identity,
    delta_integer,
    floor_sequence,
    newton_shift,
    reverse_difference,
)
from .catalog import (
    NAMED_CONSTANTS,
    CatalogFunction,
    CharacteristicVector,
    MembershipReport,
    SFamilyElement,
    characteristic_vector,
    make_catalog_function,
    parse_function_spec,
    sfamily_degree,
    vdc_transform,
    verify_class_membership,
)
from .averaging import (
    SubsetOfNaturals,
    WeightScheme,
    WindowSchedule,
    banach_w_density,
    riesz_mean,
    thick_from_folner,
    thickness_check,
    upper_w_density,
    uw_lim_estimate,
    w_syndetic_check,
)
from .equidist import (
    JointCharacter,
    KroneckerGroup,
    NamedIrrational,
    SlopedSubgroup,
    TorusCharacter,
    TorusSequence,
    haar_integral,
    joint_floor_fraction_report,
    vdc_certificate,
    wd_report,
    weyl_sum,
)
from .blocks import (
    BlockWitness,
    block_delta,
    d_set,
    find_block,
    image_upper_density,
    verify_block,
)
from .systems import (
    ArcSet,
    BoxSet,
    CyclicSystem,
    HeisenbergSystem,
    RotationSystem,
    SkewProductSystem,
    arc_intersection_measure,
    measure_estimate,
    parse_set_spec,
    parse_system_spec,
)
from .recurrence import (
    KhintchineReport,
    ReturnSetReport,
    khintchine_tail,
    multiple_return_set,
    poly_delta_return_set,
    single_return_set,
)
from .errors import (
    BoundaryAmbiguityError,
    DegenerateWindowError,
    DomainError,
    LemmaViolationError,
    NumericalConsistencyError,
    SpecStringError,
)

__version__ = "0.1.0"
