"""Contact Lax pairs: derive, reduce and check (3+1)-dimensional dispersionless systems."""

from .contact import (
    ContactField,
    apply_field,
    commutator,
    contact_bracket,
    contact_field,
    jacobi_defect,
)
from .jetalg import (
    P,
    DiffPolynomial,
    Jet,
    PPoly,
    Substitution,
    eval_numeric,
    partial_p,
    substitute,
    total_derivative,
    var,
)
from .systemgen import (
    EXAMPLE1_VARIABLES,
    QuasiLinearSystem,
    compatibility,
    example1,
    example2,
    extract_system,
    gndkp_closed_form,
    split_in_p,
)

__version__ = "0.1.0"

__all__ = [
    "ContactField", "apply_field", "commutator", "contact_bracket", "contact_field", "jacobi_defect",
    "P", "DiffPolynomial", "Jet", "PPoly", "Substitution", "eval_numeric", "partial_p", "substitute",
    "total_derivative", "var",
    "EXAMPLE1_VARIABLES", "QuasiLinearSystem", "compatibility", "example1", "example2", "extract_system",
    "gndkp_closed_form", "split_in_p",
]
